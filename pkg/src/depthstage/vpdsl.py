"""The extraction-program DSL: lexer, parser, typechecker, interpreter.

Grammar (whitespace and newlines between tokens are ignored)::

    program   = statement+
    statement = IDENT "=" CELL "(" [arg ("," arg)*] ")"
    arg       = NAME "=" value
    value     = STRING | IDENT ["." ATTR] | NULL

Cell and argument names are matched case-insensitively; identifiers and
attribute names are exact tokens.  ``NULL`` is a case-insensitive keyword.
The final statement must construct an anchor (Planar/Cylindrical/Spherical).
The cell registry is closed: unknown cells are diagnostics, never ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anchors import ParametricAnchor, make_anchor
from .errors import EngineError, MissingLandmarks
from .geomfit import (clean_pointcloud, derive_body_frames,
                      derive_extruded_plane, fit_cylinder, fit_plane_ransac,
                      fit_sphere)
from .scene import DepthScene
from .unproject import cast_landmarks, mask_to_pointcloud

# ---------------------------------------------------------------- data model


@dataclass(frozen=True)
class StringLit:
    text: str


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class Ref:
    ident: str
    attr: str | None = None


@dataclass(frozen=True)
class Argument:
    name: str
    value: StringLit | NullLit | Ref
    span: tuple[int, int]


@dataclass(frozen=True)
class Assignment:
    target: str
    cell: str
    args: tuple[Argument, ...]
    span: tuple[int, int]
    target_span: tuple[int, int]
    cell_span: tuple[int, int]


@dataclass(frozen=True)
class VisualProgram:
    statements: tuple[Assignment, ...]
    source_text: str


@dataclass(frozen=True)
class ProgramDiagnostic:
    kind: str  # ParseError|UnknownCell|TypeMismatch|UndefinedIdentifier|NotAnchorTerminal|RuntimeFailure
    statement: int
    span: tuple[int, int]
    message: str
    cell: str | None = None
    cause: str | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "statement": self.statement,
               "span": list(self.span), "message": self.message}
        if self.cell is not None:
            out["cell"] = self.cell
        if self.cause is not None:
            out["cause"] = self.cause
        return out


# ------------------------------------------------------------- cell registry


@dataclass(frozen=True)
class ParamSpec:
    vtype: str
    required: bool = True
    nullable: bool = False


@dataclass(frozen=True)
class CellSpec:
    name: str
    params: dict[str, ParamSpec] = field(default_factory=dict)
    returns: str = "anchor"
    anchor_kind: str | None = None


_SKELETON_SPEC = CellSpec("SkeletonExtraction", {"mask": ParamSpec("mask")},
                          "skeleton")
_FACE_SPEC = CellSpec("FaceExtraction", {"mask": ParamSpec("mask")}, "face")

CELLS: dict[str, CellSpec] = {
    "text2mask": CellSpec("Text2Mask", {"prompt": ParamSpec("string")}, "mask"),
    "mask2pointcloud": CellSpec("Mask2Pointcloud",
                                {"mask": ParamSpec("mask")}, "pointcloud"),
    "pointcloud2plane": CellSpec("Pointcloud2Plane",
                                 {"pointcloud": ParamSpec("pointcloud")},
                                 "plane"),
    "pointcloud2cylinder": CellSpec(
        "Pointcloud2Cylinder",
        {"pointcloud": ParamSpec("pointcloud"),
         "direction": ParamSpec("direction", required=False, nullable=True)},
        "cylinder"),
    "pointcloud2sphere": CellSpec("Pointcloud2Sphere",
                                  {"pointcloud": ParamSpec("pointcloud")},
                                  "sphere"),
    "skeletonextraction": _SKELETON_SPEC,
    "pointcloud2skeleton": _SKELETON_SPEC,  # registered alias
    "faceextraction": _FACE_SPEC,
    "pointcloud2face": _FACE_SPEC,          # registered alias
    "planar": CellSpec("Planar", {"plane": ParamSpec("plane")},
                       "anchor", anchor_kind="Planar"),
    "cylindrical": CellSpec("Cylindrical", {"cylinder": ParamSpec("cylinder")},
                            "anchor", anchor_kind="Cylindrical"),
    "spherical": CellSpec("Spherical", {"sphere": ParamSpec("sphere")},
                          "anchor", anchor_kind="Spherical"),
}

ATTRIBUTES: dict[str, dict[str, str]] = {
    "plane": {"extruded": "plane", "primary": "direction"},
    "skeleton": {"frontal": "plane", "median": "plane",
                 "cranial": "direction", "anterior": "direction"},
    "face": {"frontal": "plane", "median": "plane",
             "cranial": "direction", "anterior": "direction"},
}


def _is_anchor_cell(cell: str) -> bool:
    spec = CELLS.get(cell.lower())
    return spec is not None and spec.returns == "anchor"


# -------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT STRING = ( ) , .
    text: str
    start: int
    end: int


class _SyntaxError(Exception):
    def __init__(self, pos: int, end: int, message: str):
        super().__init__(message)
        self.pos = pos
        self.end = end


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], i, j))
            i = j
        elif ch == '"':
            j = text.find('"', i + 1)
            if j < 0 or "\n" in text[i + 1:j]:
                raise _SyntaxError(i, min(i + 1, n), "unterminated string")
            tokens.append(_Token("STRING", text[i + 1:j], i, j + 1))
            i = j + 1
        elif ch in "=(),.":
            tokens.append(_Token(ch, ch, i, i + 1))
            i += 1
        else:
            raise _SyntaxError(i, i + 1, f"unexpected character {ch!r}")
    return tokens


# ------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: list[_Token], length: int):
        self.tokens = tokens
        self.i = 0
        self.length = length

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise _SyntaxError(self.length, self.length,
                               f"expected {what}, found end of input")
        if tok.kind != kind:
            raise _SyntaxError(tok.start, tok.end,
                               f"expected {what}, found {tok.text!r}")
        self.i += 1
        return tok

    def parse_value(self) -> StringLit | NullLit | Ref:
        tok = self.peek()
        if tok is None:
            raise _SyntaxError(self.length, self.length,
                               "expected a value, found end of input")
        if tok.kind == "STRING":
            self.i += 1
            return StringLit(tok.text)
        if tok.kind == "IDENT":
            self.i += 1
            if tok.text.upper() == "NULL":
                return NullLit()
            attr = None
            nxt = self.peek()
            if nxt is not None and nxt.kind == ".":
                self.i += 1
                attr = self.expect("IDENT", "an attribute name").text
            return Ref(tok.text, attr)
        raise _SyntaxError(tok.start, tok.end,
                           f"expected a value, found {tok.text!r}")

    def parse_statement(self) -> Assignment:
        target = self.expect("IDENT", "an identifier")
        self.expect("=", "'='")
        cell = self.expect("IDENT", "a cell name")
        self.expect("(", "'('")
        args: list[Argument] = []
        nxt = self.peek()
        if nxt is not None and nxt.kind != ")":
            while True:
                name = self.expect("IDENT", "an argument name")
                self.expect("=", "'='")
                value = self.parse_value()
                end = self.tokens[self.i - 1].end
                args.append(Argument(name.text, value, (name.start, end)))
                nxt = self.peek()
                if nxt is not None and nxt.kind == ",":
                    self.i += 1
                    continue
                break
        rparen = self.expect(")", "')' or ','")
        return Assignment(target=target.text, cell=cell.text, args=tuple(args),
                          span=(target.start, rparen.end),
                          target_span=(target.start, target.end),
                          cell_span=(cell.start, cell.end))


def parse_program(text: str) -> VisualProgram | list[ProgramDiagnostic]:
    """Parse program text.  Returns the program, or located diagnostics for
    syntax errors and for a final cell that is a known non-anchor."""
    statements: list[Assignment] = []
    try:
        parser = _Parser(_tokenize(text), len(text))
        while parser.peek() is not None:
            statements.append(parser.parse_statement())
    except _SyntaxError as e:
        return [ProgramDiagnostic("ParseError", len(statements),
                                  (e.pos, e.end), str(e))]
    if not statements:
        return [ProgramDiagnostic("ParseError", 0, (0, 0), "no statements")]
    last = statements[-1]
    if last.cell.lower() in CELLS and not _is_anchor_cell(last.cell):
        return [ProgramDiagnostic(
            "NotAnchorTerminal", len(statements) - 1, last.cell_span,
            f"program ends with {last.cell}, not an anchor constructor")]
    return VisualProgram(statements=tuple(statements), source_text=text)


# --------------------------------------------------------------- typechecker


def _value_type(value, env: dict[str, str], stmt: int, span,
                diags: list[ProgramDiagnostic]) -> str | None:
    """Type of an argument value, or None when a diagnostic was emitted."""
    if isinstance(value, StringLit):
        return "string"
    if isinstance(value, NullLit):
        return "null"
    base = env.get(value.ident)
    if base is None:
        diags.append(ProgramDiagnostic(
            "UndefinedIdentifier", stmt, span,
            f"identifier {value.ident!r} is not defined by an earlier statement"))
        return None
    if value.attr is None:
        return base
    if base == "unknown":
        return None  # don't cascade after an UnknownCell
    attr_type = ATTRIBUTES.get(base, {}).get(value.attr)
    if attr_type is None:
        diags.append(ProgramDiagnostic(
            "TypeMismatch", stmt, span,
            f"value of type {base} has no attribute {value.attr!r}"))
        return None
    return attr_type


def typecheck_program(prog: VisualProgram) -> list[ProgramDiagnostic]:
    """Verify cell names, argument names/arity/types, attribute validity,
    definition-before-use, and the anchor-terminal rule."""
    diags: list[ProgramDiagnostic] = []
    env: dict[str, str] = {}
    for i, st in enumerate(prog.statements):
        spec = CELLS.get(st.cell.lower())
        if spec is None:
            diags.append(ProgramDiagnostic(
                "UnknownCell", i, st.cell_span,
                f"unknown cell {st.cell!r}", cell=st.cell))
            for arg in st.args:  # still check references for definedness
                _value_type(arg.value, env, i, arg.span, diags)
            if st.target not in env:
                env[st.target] = "unknown"
            continue
        seen: set[str] = set()
        for arg in st.args:
            pname = arg.name.lower()
            ps = spec.params.get(pname)
            if ps is None:
                diags.append(ProgramDiagnostic(
                    "TypeMismatch", i, arg.span,
                    f"{spec.name} has no argument {arg.name!r}", cell=st.cell))
                continue
            if pname in seen:
                diags.append(ProgramDiagnostic(
                    "TypeMismatch", i, arg.span,
                    f"duplicate argument {arg.name!r}", cell=st.cell))
                continue
            seen.add(pname)
            vt = _value_type(arg.value, env, i, arg.span, diags)
            if vt is None:
                continue
            if vt == "null":
                if not ps.nullable:
                    diags.append(ProgramDiagnostic(
                        "TypeMismatch", i, arg.span,
                        f"{spec.name} argument {arg.name!r} cannot be NULL",
                        cell=st.cell))
            elif vt != ps.vtype:
                diags.append(ProgramDiagnostic(
                    "TypeMismatch", i, arg.span,
                    f"{spec.name} argument {arg.name!r} expects {ps.vtype}, "
                    f"got {vt}", cell=st.cell))
        for pname, ps in spec.params.items():
            if ps.required and pname not in seen:
                diags.append(ProgramDiagnostic(
                    "TypeMismatch", i, st.span,
                    f"{spec.name} missing required argument {pname!r}",
                    cell=st.cell))
        if st.target in env:
            diags.append(ProgramDiagnostic(
                "TypeMismatch", i, st.target_span,
                f"duplicate target {st.target!r} (shadowing is forbidden)"))
        else:
            env[st.target] = spec.returns

    last = prog.statements[-1]
    last_spec = CELLS.get(last.cell.lower())
    if last_spec is not None and last_spec.returns != "anchor":
        diags.append(ProgramDiagnostic(
            "NotAnchorTerminal", len(prog.statements) - 1, last.cell_span,
            f"program ends with {last.cell}, not an anchor constructor"))
    return diags


def check_program(text: str) -> tuple[VisualProgram | None,
                                      list[ProgramDiagnostic]]:
    """Parse then typecheck; the program is returned only when clean."""
    parsed = parse_program(text)
    if isinstance(parsed, list):
        return None, parsed
    diags = typecheck_program(parsed)
    return (parsed if not diags else None), diags


# -------------------------------------------------------------- interpreter


def _resolve(value, env):
    if isinstance(value, StringLit):
        return value.text
    if isinstance(value, NullLit):
        return None
    vtype, payload = env[value.ident]
    if value.attr is None:
        return payload
    if vtype == "plane":
        return derive_extruded_plane(payload) if value.attr == "extruded" \
            else payload.primary_dir
    return getattr(payload, value.attr)  # skeleton/face frames and directions


def interpret_program(prog: VisualProgram, scene: DepthScene, services,
                      seed: int = 0) -> ParametricAnchor | ProgramDiagnostic:
    """Execute statements in order against an environment.

    Cell semantics delegate to the unprojection/fitting modules; Text2Mask
    and the skeleton/face cells call the service bundle.  Failures surface
    as a single RuntimeFailure diagnostic naming the cell and cause.
    """
    env: dict[str, tuple[str, object]] = {}
    result: object = None
    for i, st in enumerate(prog.statements):
        spec = CELLS[st.cell.lower()]
        args = {a.name.lower(): _resolve(a.value, env) for a in st.args}
        cell_seed = (seed * 1024 + i) % (2 ** 63)
        try:
            result = _execute_cell(spec, st, args, scene, services, cell_seed)
        except EngineError as e:
            return ProgramDiagnostic(
                "RuntimeFailure", i, st.span, f"{st.cell}: {e}",
                cell=st.cell, cause=type(e).__name__)
        env[st.target] = (spec.returns, result)
    assert isinstance(result, ParametricAnchor)
    return result


def _execute_cell(spec: CellSpec, st: Assignment, args: dict, scene, services,
                  cell_seed: int):
    name = spec.name
    if name == "Text2Mask":
        return services.segment_client.get_mask(scene, args["prompt"])
    if name == "Mask2Pointcloud":
        return clean_pointcloud(mask_to_pointcloud(scene, args["mask"]))
    if name == "Pointcloud2Plane":
        return fit_plane_ransac(args["pointcloud"], seed=cell_seed)
    if name == "Pointcloud2Cylinder":
        return fit_cylinder(args["pointcloud"], direction=args.get("direction"))
    if name == "Pointcloud2Sphere":
        return fit_sphere(args["pointcloud"], seed=cell_seed)
    if name in ("SkeletonExtraction", "FaceExtraction"):
        kind = "skeleton" if name == "SkeletonExtraction" else "face"
        lms2d = services.landmark_client.get_landmarks(scene, args["mask"], kind)
        if not lms2d:
            raise MissingLandmarks(f"no {kind} landmarks detected")
        return derive_body_frames(cast_landmarks(scene, lms2d), kind)
    # anchor constructors
    geometry = args[next(iter(spec.params))]
    return make_anchor(st.target, geometry)
