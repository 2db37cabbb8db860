"""Reading and writing every file format fifkit uses.

Reals are written with ``repr``, the shortest decimal string that reads
back to the same double, so closed-form and oracle values survive a round
trip bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attractor import PointSet, Raster
from .errors import CompletenessError, DuplicateError, FifError, ParseError
from .fif1d import GridFunction1D
from .fis2d import GridData2D, GridFunction2D, Ifs2D, QCoeffs
from .ifs1d import AffineMap1D, DataSet1D, Ifs1D, VerticalMap1D

KINDS = ("dataset1d", "grid2d", "ifs1d", "ifs2d", "report")


def _decode(text) -> str:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from exc
    return text.replace("\r\n", "\n").replace("\r", "\n")


def _float(field: str, line: int, column: int) -> float:
    try:
        v = float(field.strip())
    except ValueError:
        raise ParseError(f"malformed number {field.strip()!r}", line, column) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite number {field.strip()!r}", line, column)
    return v


def _csv_rows(text: str, header: tuple):
    """Yield ``(line_number, values)`` for each data row after checking the header."""
    lines = text.split("\n")
    rows = [(i, ln) for i, ln in enumerate(lines, start=1) if ln.strip()]
    if not rows:
        raise ParseError("empty file", 1)
    lineno, first = rows[0]
    got = tuple(h.strip() for h in first.split(","))
    if got != header:
        raise ParseError(f"expected header {','.join(header)!r}, got {first.strip()!r}", lineno, 1)
    for lineno, ln in rows[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        yield lineno, tuple(_float(f, lineno, c) for c, f in enumerate(fields, start=1))


def parse_dataset1d(text) -> DataSet1D:
    """Parse a ``t,x`` CSV file."""
    rows = list(_csv_rows(_decode(text), ("t", "x")))
    if len(rows) < 3:
        raise ParseError(f"need at least 3 data rows (N >= 2), got {len(rows)}")
    for (_, prev), (lineno, cur) in zip(rows, rows[1:]):
        if not cur[0] > prev[0]:
            raise ParseError(f"knots not strictly increasing: {cur[0]!r} after {prev[0]!r}", lineno, 1)
    return DataSet1D(tuple(r[0] for _, r in rows), tuple(r[1] for _, r in rows))


def serialize_dataset1d(data: DataSet1D) -> bytes:
    lines = ["t,x"] + [f"{t!r},{x!r}" for t, x in zip(data.knots, data.values)]
    return ("\n".join(lines) + "\n").encode()


def parse_alphas(text) -> tuple:
    """A scaling vector written as a JSON array or a single CSV row."""
    s = _decode(text).strip()
    if s.startswith("["):
        try:
            vals = json.loads(s)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON array: {exc.msg}", exc.lineno, exc.colno) from None
        if not isinstance(vals, list) or not all(isinstance(v, (int, float)) for v in vals):
            raise ParseError("scaling vector must be a flat JSON array of numbers")
        return tuple(float(v) for v in vals)
    lines = [ln for ln in s.split("\n") if ln.strip()]
    if len(lines) != 1:
        raise ParseError(f"scaling vector CSV must be one row, got {len(lines)}")
    return tuple(_float(f, 1, c) for c, f in enumerate(lines[0].split(","), start=1))


def parse_alpha_matrix(text) -> np.ndarray:
    """An alpha matrix as a nested JSON array or CSV rows (one row per x-cell)."""
    s = _decode(text).strip()
    if s.startswith("["):
        try:
            A = np.asarray(json.loads(s), dtype=float)
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise ParseError(f"bad alpha matrix: {exc}") from None
        return A
    rows = [ln for ln in s.split("\n") if ln.strip()]
    out = [[_float(f, i, c) for c, f in enumerate(r.split(","), start=1)] for i, r in enumerate(rows, start=1)]
    if len({len(r) for r in out}) != 1:
        raise ParseError("alpha matrix rows differ in length")
    return np.array(out)


def _json(text):
    try:
        return json.loads(_decode(text))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", exc.lineno, exc.colno) from None


def _key(obj: dict, name: str, kind: str):
    if not isinstance(obj, dict) or name not in obj:
        raise ParseError(f"{kind} document lacks key {name!r}")
    return obj[name]


def parse_grid2d(text) -> GridData2D:
    """Parse ``{xs, ys, zs}`` JSON or ``x,y,z`` CSV triples forming a complete grid."""
    s = _decode(text)
    if s.lstrip().startswith("{"):
        obj = _json(s)
        try:
            return GridData2D(_key(obj, "xs", "grid"), _key(obj, "ys", "grid"), _key(obj, "zs", "grid"))
        except FifError as exc:
            raise ParseError(str(exc)) from exc
    cells = {}
    for lineno, (x, y, z) in _csv_rows(s, ("x", "y", "z")):
        if (x, y) in cells:
            raise DuplicateError(f"duplicate triple for (x={x:.17g},y={y:.17g})", lineno)
        cells[(x, y)] = z
    if not cells:
        raise ParseError("no grid triples")
    xs = sorted({x for x, _ in cells})
    ys = sorted({y for _, y in cells})
    for x in xs:
        for y in ys:
            if (x, y) not in cells:
                raise CompletenessError(f"grid is incomplete: missing (x={x:.17g},y={y:.17g})")
    zs = [[cells[(x, y)] for y in ys] for x in xs]
    try:
        return GridData2D(tuple(xs), tuple(ys), zs)
    except FifError as exc:
        raise ParseError(str(exc)) from exc


def grid2d_to_obj(grid: GridData2D) -> dict:
    return {"xs": list(grid.xs), "ys": list(grid.ys), "zs": [list(r) for r in grid.zs]}


def serialize_grid2d(grid: GridData2D) -> bytes:
    return dumps(grid2d_to_obj(grid))


def ifs1d_to_obj(ifs: Ifs1D) -> dict:
    return {
        "knots": list(ifs.data.knots),
        "values": list(ifs.data.values),
        "alphas": [v.alpha for v in ifs.vmaps],
        "lmaps": [{"a": m.a, "b": m.b} for m in ifs.lmaps],
        "vmaps": [{"alpha": v.alpha, "q1": v.q1, "q0": v.q0} for v in ifs.vmaps],
    }


def serialize_ifs1d(ifs: Ifs1D) -> bytes:
    return dumps(ifs1d_to_obj(ifs))


def parse_ifs1d(text) -> Ifs1D:
    obj = _json(text)
    try:
        data = DataSet1D(_key(obj, "knots", "ifs1d"), _key(obj, "values", "ifs1d"))
        lmaps = tuple(AffineMap1D(float(m["a"]), float(m["b"])) for m in _key(obj, "lmaps", "ifs1d"))
        vmaps = tuple(
            VerticalMap1D(float(v["alpha"]), float(v["q1"]), float(v["q0"])) for v in _key(obj, "vmaps", "ifs1d")
        )
        alphas = [float(a) for a in _key(obj, "alphas", "ifs1d")]
        ifs = Ifs1D(data, lmaps, vmaps)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed ifs1d document: {exc}") from exc
    if alphas != [v.alpha for v in vmaps]:
        raise ParseError("alphas disagree with vmaps[].alpha")
    return ifs


def ifs2d_to_obj(ifs: Ifs2D) -> dict:
    obj = grid2d_to_obj(ifs.grid)
    obj.update({
        "alphas": [list(r) for r in ifs.alphas],
        "phis": [{"a": p.a, "b": p.b} for p in ifs.phis],
        "psis": [{"a": p.a, "b": p.b} for p in ifs.psis],
        "qcoeffs": [[{"e": c.e, "f": c.f, "g": c.g, "k": c.k} for c in row] for row in ifs.qcoeffs],
    })
    return obj


def serialize_ifs2d(ifs: Ifs2D) -> bytes:
    return dumps(ifs2d_to_obj(ifs))


def parse_ifs2d(text) -> Ifs2D:
    obj = _json(text)
    try:
        grid = GridData2D(_key(obj, "xs", "ifs2d"), _key(obj, "ys", "ifs2d"), _key(obj, "zs", "ifs2d"))
        phis = tuple(AffineMap1D(float(p["a"]), float(p["b"])) for p in _key(obj, "phis", "ifs2d"))
        psis = tuple(AffineMap1D(float(p["a"]), float(p["b"])) for p in _key(obj, "psis", "ifs2d"))
        qc = tuple(
            tuple(QCoeffs(float(c["e"]), float(c["f"]), float(c["g"]), float(c["k"])) for c in row)
            for row in _key(obj, "qcoeffs", "ifs2d")
        )
        return Ifs2D(grid, phis, psis, _key(obj, "alphas", "ifs2d"), qc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed ifs2d document: {exc}") from exc


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite value {v!r}")
        return v
    if hasattr(obj, "as_dict"):
        return _plain(obj.as_dict())
    return obj


def dumps(obj) -> bytes:
    """Canonical JSON: sorted keys, round-trip float text, trailing newline."""
    return (json.dumps(_plain(obj), sort_keys=True, allow_nan=False) + "\n").encode()


def serialize_report(report) -> bytes:
    return dumps(report if report is not None else {})


@dataclass(frozen=True)
class Document:
    kind: str
    payload: object

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown document kind {self.kind!r}")


_PARSERS = {
    "dataset1d": parse_dataset1d,
    "grid2d": parse_grid2d,
    "ifs1d": parse_ifs1d,
    "ifs2d": parse_ifs2d,
    "report": _json,
}
_WRITERS = {
    "dataset1d": serialize_dataset1d,
    "grid2d": serialize_grid2d,
    "ifs1d": serialize_ifs1d,
    "ifs2d": serialize_ifs2d,
    "report": serialize_report,
}


def dump_document(doc: Document) -> bytes:
    return _WRITERS[doc.kind](doc.payload)


def load_document(text, kind: str) -> Document:
    return Document(kind, _PARSERS[kind](text))


def serialize_grid_function(f: GridFunction1D) -> bytes:
    lines = ["t,f"] + [f"{t!r},{v!r}" for t, v in zip(f.grid.tolist(), f.samples.tolist())]
    return ("\n".join(lines) + "\n").encode()


def serialize_points(points: PointSet) -> bytes:
    lines = ["t,x"] + [f"{t!r},{x!r}" for t, x in points.points.tolist()]
    return ("\n".join(lines) + "\n").encode()


def parse_points(text) -> PointSet:
    rows = [r for _, r in _csv_rows(_decode(text), ("t", "x"))]
    return PointSet(np.array(rows, dtype=float).reshape(-1, 2))


def serialize_surface(f: GridFunction2D) -> bytes:
    lines = ["x,y,f"]
    ys = f.ys.tolist()
    for i, x in enumerate(f.xs.tolist()):
        row = f.samples[i].tolist()
        lines.extend(f"{x!r},{y!r},{v!r}" for y, v in zip(ys, row))
    return ("\n".join(lines) + "\n").encode()


def _pgm(gray: np.ndarray, bounds: tuple, binary: bool) -> bytes:
    h, w = gray.shape
    t0, t1, x0, x1 = bounds
    head = f"{'P5' if binary else 'P2'}\n# bbox {t0!r} {t1!r} {x0!r} {x1!r}\n{w} {h}\n255\n".encode()
    if binary:
        return head + gray.astype(np.uint8).tobytes()
    body = "\n".join(" ".join(str(v) for v in row) for row in gray.tolist())
    return head + body.encode() + b"\n"


def raster_to_pgm(raster: Raster, binary: bool = True) -> bytes:
    """PGM (P5 binary or P2 ASCII) with visit counts scaled to 0..255."""
    return _pgm(raster.gray(255), raster.bounds, binary)


def surface_to_pgm(f: GridFunction2D, binary: bool = True) -> bytes:
    """Min-max normalized heightmap; image rows run from ``y_M`` (top) down to ``y_0``.

    The bbox comment holds ``x0 xN zmin zmax``.
    """
    S = f.samples
    lo, hi = float(S.min()), float(S.max())
    norm = np.zeros_like(S) if hi == lo else (S - lo) / (hi - lo)
    gray = np.rint(norm * 255).astype(np.int64).T[::-1]
    return _pgm(gray, (float(f.xs[0]), float(f.xs[-1]), lo, hi), binary)


def parse_pgm(blob: bytes) -> tuple:
    """Read back a PGM written here: ``(gray matrix, bbox or None)``."""
    magic = blob[:2]
    if magic not in (b"P2", b"P5"):
        raise ParseError("not a P2/P5 PGM file")
    tokens, bbox, pos = [], None, 2
    while len(tokens) < 3:
        end = blob.index(b"\n", pos)
        line = blob[pos:end].decode("ascii").strip()
        pos = end + 1
        if line.startswith("# bbox"):
            bbox = tuple(float(v) for v in line.split()[2:])
        elif line and not line.startswith("#"):
            tokens.extend(int(v) for v in line.split())
    w, h, _ = tokens
    if magic == b"P5":
        gray = np.frombuffer(blob[pos:pos + w * h], dtype=np.uint8).reshape(h, w).astype(np.int64)
    else:
        gray = np.array(blob[pos:].split(), dtype=np.int64).reshape(h, w)
    return gray, bbox


def atomic_write(path, blob: bytes) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        # mkstemp creates 0600; give the file the mode a plain open() would
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
