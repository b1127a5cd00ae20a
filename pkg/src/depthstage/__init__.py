"""depthstage: an offline 2.5D design engine.

Reconstructs a depth space from an image plus depth field, extracts
plane/cylinder/sphere anchors via an interpreted extraction-program DSL,
and composites raster content back into the image with correct occlusion
and perspective.
"""

from .anchors import (ContentLayer, ParametricAnchor, apply_constrained_edit,
                      build_surface_mesh, compose_layer_texture, make_anchor)
from .document import SceneDocument, decode_document, encode_document
from .geomfit import (Cylinder, Plane, Sphere, clean_pointcloud,
                      derive_body_frames, derive_extruded_plane, fit_cylinder,
                      fit_plane_ransac, fit_sphere)
from .render import RenderSettings, export_png, project_point, render_document
from .scene import DepthScene, PinholeCamera, load_scene, save_scene, validate_scene
from .unproject import (Landmark2D, Landmark3D, Mask, PointCloud,
                        cast_landmarks, mask_to_pointcloud, unproject_pixel)
from .vpdsl import (VisualProgram, check_program, interpret_program,
                    parse_program, typecheck_program)

__version__ = "0.1.0"
