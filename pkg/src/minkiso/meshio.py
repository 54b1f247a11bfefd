"""Plain-text ``minkmesh`` files.

::

    minkmesh <space_dim> <time_dim>
    v x1 ... xD          (spatial coordinates first)
    c i j k              (0-based vertex indices)
    b i j                (optional boundary faces; derived when absent)

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import InvalidMesh
from .mink import Signature
from .surface import SurfaceMesh


def read_minkmesh(source) -> SurfaceMesh:
    """Parse a path or an open text stream."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return _parse(fh)
    return _parse(source)


def loads(text: str) -> SurfaceMesh:
    return _parse(io.StringIO(text))


def _parse(fh) -> SurfaceMesh:
    sig = None
    verts, cells, bnd = [], [], []
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if sig is None:
            if tok[0] != "minkmesh" or len(tok) != 3:
                raise InvalidMesh(f"line {lineno}: expected 'minkmesh <space_dim> <time_dim>'")
            try:
                sig = Signature(int(tok[1]), int(tok[2]))
            except ValueError as exc:
                raise InvalidMesh(f"line {lineno}: bad signature") from exc
            continue
        try:
            if tok[0] == "v":
                row = [float(x) for x in tok[1:]]
                if len(row) != sig.dim:
                    raise InvalidMesh(f"line {lineno}: vertex needs {sig.dim} coordinates")
                verts.append(row)
            elif tok[0] == "c":
                cells.append([int(x) for x in tok[1:]])
            elif tok[0] == "b":
                bnd.append([int(x) for x in tok[1:]])
            else:
                raise InvalidMesh(f"line {lineno}: unknown record {tok[0]!r}")
        except ValueError as exc:
            raise InvalidMesh(f"line {lineno}: {exc}") from exc
    if sig is None:
        raise InvalidMesh("missing minkmesh header")
    if not verts or not cells:
        raise InvalidMesh("mesh needs vertices and cells")
    if len({len(c) for c in cells}) != 1:
        raise InvalidMesh("cells must all have the same number of vertices")
    V = np.array(verts, dtype=float)
    Cm = np.array(cells, dtype=np.int64)
    if Cm.min() < 0 or Cm.max() >= len(V):
        raise InvalidMesh("cell index out of range")
    B = np.array(bnd, dtype=np.int64) if bnd else None
    return SurfaceMesh(V, Cm, sig, boundary=B)


def write_minkmesh(mesh: SurfaceMesh, target, boundary: bool = True) -> None:
    """Write ``mesh`` to a path or text stream; coordinates use ``repr`` precision."""
    lines = [f"minkmesh {mesh.sig.space_dim} {mesh.sig.time_dim}"]
    lines += ["v " + " ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += ["c " + " ".join(str(int(i)) for i in c) for c in mesh.cells]
    if boundary:
        lines += ["b " + " ".join(str(int(i)) for i in b) for b in mesh.boundary]
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


def dumps(mesh: SurfaceMesh, boundary: bool = True) -> str:
    buf = io.StringIO()
    write_minkmesh(mesh, buf, boundary)
    return buf.getvalue()
