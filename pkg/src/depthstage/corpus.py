"""Bundled extraction-program corpus: sixteen scene/program pairs used as
in-context examples when prompting the program-generation model, and as the
parser/typechecker reference suite.

Program texts are shipped verbatim apart from two normalizations, applied
once at ingestion: LaTeX escape backslashes are stripped, and in four
programs (6, 10, 12, 13) identifier spellings were made self-consistent so
every use matches its definition exactly.  Scene labels are our own short
summaries.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CorpusExample:
    label: str
    program: str


CORPUS: tuple[CorpusExample, ...] = (
    CorpusExample(
        "draped standing figure wrapped by a ring of circular text",
        'MASK_0=Text2Mask(prompt = "the human figure")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'CYLINDER_0=Pointcloud2Cylinder(Pointcloud = POINTCLOUD_0, direction = NULL)\n'
        'CYLINDRICAL_0=Cylindrical(cylinder = CYLINDER_0)'),
    CorpusExample(
        "side-facing portrait framed by panels parallel to the face",
        'MASK_0=Text2Mask(prompt = "the human figure")\n'
        'FACE_0=FaceExtraction(mask = MASK_0)\n'
        'PLANAR=Planar(plane = FACE_0.frontal)'),
    CorpusExample(
        "sports court with large letters standing upright on the floor",
        'MASK_0=Text2Mask(prompt = "basketball playground")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'PLANE_0=Pointcloud2PLANE(Pointcloud = POINTCLOUD_0)\n'
        'PLANAR=Planar(plane = PLANE_0.extruded)'),
    CorpusExample(
        "close-up bullet with a title wrapping around the casing",
        'MASK_0=Text2Mask(prompt="the bullet")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask=MASK_0)\n'
        'CYLINDER_0=Pointcloud2Cylinder(Pointcloud=POINTCLOUD_0, direction=NULL)\n'
        'CYLINDRICAL_0=Cylindrical(cylinder=CYLINDER_0)'),
    CorpusExample(
        "draped figure enclosed in a spherical text shell",
        'MASK_0=Text2Mask(prompt = "the human figure")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'SPHERE_0=Pointcloud2Sphere(Pointcloud = POINTCLOUD_0)\n'
        'SPHERICAL_0=Spherical(sphere = SPHERE_0)'),
    CorpusExample(
        "aerial street receding into the distance with staggered title text",
        'MASK_0=Text2Mask(prompt = "highrise bridge in the input image")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'PLANE_0=Pointcloud2Plane(Pointcloud = POINTCLOUD_0)\n'
        'PLANAR=Planar(plane = PLANE_0)'),
    CorpusExample(
        "runner with block text aligned to the running direction",
        'MASK_0=Text2Mask(prompt = "runner")\n'
        'SKELETON_0=SkeletonExtraction(mask=MASK_0)\n'
        'PLANAR_0=Planar(plane = SKELETON_0.median)'),
    CorpusExample(
        "night cityscape with a slogan cutting across the front building",
        'MASK_0=Text2Mask(prompt = "the front building in the input image")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'PLANE_0=Pointcloud2PLANE(Pointcloud = POINTCLOUD_0)\n'
        'PLANAR_0=Planar(PLANE = PLANE_0)'),
    CorpusExample(
        "relay race with a slogan upright on the track, along the run",
        'MASK0=Text2Mask(prompt = "ground")\n'
        'Pointcloud0=Mask2Pointcloud(mask = MASK0)\n'
        'MASK1=Text2Mask(prompt = "the runner in the middle")\n'
        'SKELETON_0=SkeletonExtraction(mask = MASK1)\n'
        'PLANE_0=Pointcloud2PLANE(Pointcloud = Pointcloud0)\n'
        'PLANAR_0=Planar(plane = SKELETON_0.median)'),
    CorpusExample(
        "travelers walking toward a terminal, text parallel to the facade",
        'MASK_0=Text2Mask(prompt = "building in the image")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'PLANE_0=Pointcloud2Plane(Pointcloud = POINTCLOUD_0)\n'
        'PLANAR_0=Planar(plane = PLANE_0)'),
    CorpusExample(
        "anonymized portrait with tags orbiting the obscured face",
        'MASK_0=Text2Mask(prompt = "the human face")\n'
        'FACE_0=FaceExtraction(mask = MASK_0)\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'SPHERE_0=Pointcloud2Sphere(Pointcloud = POINTCLOUD_0)\n'
        'SPHERICAL_0=Spherical(sphere = SPHERE_0)'),
    CorpusExample(
        "baseball player with a stretched name lying on the ground",
        'MASK0=Text2Mask(prompt ="floor")\n'
        'Pointcloud0=Mask2Pointcloud(mask = MASK0)\n'
        'MASK1=Text2Mask(prompt = "the player")\n'
        'SKELETON_0=SkeletonExtraction(mask = MASK1)\n'
        'PLANE_0=Pointcloud2PLANE(Pointcloud = Pointcloud0)\n'
        'PLANAR_0=Planar(plane = PLANE_0)'),
    CorpusExample(
        "street scene with a tagline standing upright along the road edge",
        'MASK0=Text2Mask(prompt = "driveway")\n'
        'Pointcloud0=Mask2Pointcloud(mask = MASK0)\n'
        'PLANE_0=Pointcloud2PLANE(Pointcloud = Pointcloud0)\n'
        'PLANAR_0=Planar(plane = PLANE_0.extruded)'),
    CorpusExample(
        "classical bust with typography circling the head upright",
        'MASK_0=Text2Mask(prompt = "the human head")\n'
        'FACE_0=FaceExtraction(mask = MASK_0)\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'CYLINDER_0=Pointcloud2Cylinder(Pointcloud = POINTCLOUD_0, direction = FACE_0.cranial)\n'
        'CYLINDRICAL_0=Cylindrical(cylinder = CYLINDER_0)'),
    CorpusExample(
        "screaming portrait with radiating text along the gaze direction",
        'MASK_0=Text2Mask(prompt = "the human figure")\n'
        'FACE_0=FaceExtraction(mask = MASK_0)\n'
        'PLANAR=Planar(plane = FACE_0.median)'),
    CorpusExample(
        "runner surrounded by block text shaped to the figure",
        'MASK_0=Text2Mask(prompt = "runner")\n'
        'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
        'CYLINDER_0=Pointcloud2Cylinder(Pointcloud = POINTCLOUD_0, direction = NULL)\n'
        'CYLINDRICAL_0=Cylindrical(cylinder = CYLINDER_0)'),
)
