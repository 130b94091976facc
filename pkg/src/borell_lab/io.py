"""JSON and CSV formats, plus the text specs for maps and combiners.

Grid file::

    {"dim": n, "box_min": [...], "box_max": [...], "shape": [...], "values": [...]}

``values`` is the row-major flattening (or the nested array).  Body file::

    {"type": "polygon", "vertices": [[x, y], ...], "m": 720}
    {"type": "support", "dim": n, "m": m, "seed": s, "values": [...]}

Map specs: ``affine:lambda=0.5`` or ``powermean:p=0.5,lambda=0.5``.
Combiner specs: ``mean:s=0,lambda=0.5`` or ``minkowski:n=2``.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np

from .bodies import DEFAULT_PLANAR_M, DirectionGrid, SupportBody, support_of_polytope
from .errors import BorellLabError, InputError
from .funcgrid import GridFunction
from .means import parse_ext
from .report import REPORT_COLUMNS, CheckReport
from .transport import Combiner, CoordinateMap, MeanCombiner, MinkowskiCombiner, TransportMap


def load_json(path: str | Path) -> Any:
    """Parse a JSON file; syntax errors are reported with line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _require(data: dict, key: str, where: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise InputError(f"{where}: missing field '{key}'")
    return data[key]


def grid_from_dict(data: dict, where: str = "grid") -> GridFunction:
    box_min = _require(data, "box_min", where)
    box_max = _require(data, "box_max", where)
    shape = tuple(int(k) for k in _require(data, "shape", where))
    values = np.asarray(_require(data, "values", where), dtype=float)
    dim = int(data.get("dim", len(shape)))
    if dim != len(shape) or len(box_min) != dim or len(box_max) != dim:
        raise InputError(f"{where}: dim, box and shape disagree")
    if values.size != int(np.prod(shape)):
        raise InputError(f"{where}: {values.size} values for shape {list(shape)}")
    try:
        return GridFunction(box_min, box_max, values.reshape(shape))
    except BorellLabError as exc:
        raise InputError(f"{where}: {exc}") from exc


def grid_to_dict(f: GridFunction) -> dict:
    return {
        "dim": f.dim,
        "box_min": f.box_min.tolist(),
        "box_max": f.box_max.tolist(),
        "shape": list(f.shape),
        "values": f.values.ravel().tolist(),
    }


def body_from_dict(data: dict, where: str = "body") -> SupportBody:
    kind = _require(data, "type", where)
    try:
        if kind == "polygon":
            vertices = np.asarray(_require(data, "vertices", where), dtype=float)
            grid = DirectionGrid.planar(int(data.get("m", DEFAULT_PLANAR_M)))
            return support_of_polytope(vertices, grid)
        if kind == "support":
            dim = int(_require(data, "dim", where))
            grid = DirectionGrid.for_dim(dim, int(_require(data, "m", where)), int(data.get("seed", 0)))
            return SupportBody(grid, _require(data, "values", where))
    except BorellLabError as exc:
        raise InputError(f"{where}: {exc}") from exc
    raise InputError(f"{where}: unknown body type {kind!r}")


def body_to_dict(B: SupportBody) -> dict:
    return {
        "type": "support",
        "dim": B.dim,
        "m": B.grid.m,
        "seed": B.grid.seed if B.grid.seed is not None else 0,
        "values": B.values.tolist(),
    }


def load_grid(path: str | Path) -> GridFunction:
    return grid_from_dict(load_json(path), str(path))


def load_body(path: str | Path) -> SupportBody:
    return body_from_dict(load_json(path), str(path))


def save_json(path: str | Path, data: Any, indent: int | None = None) -> None:
    Path(path).write_text(json.dumps(data, indent=indent) + "\n")


def _spec_fields(spec: str, kinds: dict[str, tuple[str, ...]]) -> tuple[str, dict[str, str]]:
    kind, _, rest = spec.partition(":")
    if kind not in kinds:
        raise InputError(f"unknown spec kind {kind!r} in {spec!r} (expected one of {sorted(kinds)})")
    fields = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise InputError(f"malformed field {item!r} in {spec!r}")
        fields[key.strip()] = value.strip()
    missing = [k for k in kinds[kind] if k not in fields]
    extra = [k for k in fields if k not in kinds[kind]]
    if missing or extra:
        raise InputError(f"{spec!r}: missing {missing} / unexpected {extra}")
    return kind, fields


def _num(text: str, spec: str) -> float:
    try:
        return parse_ext(text)
    except ValueError as exc:
        raise InputError(f"{spec!r}: {exc}") from exc


def parse_map_spec(spec: str, dim: int) -> CoordinateMap:
    kind, fields = _spec_fields(spec, {"affine": ("lambda",), "powermean": ("p", "lambda")})
    try:
        if kind == "affine":
            return CoordinateMap.affine(_num(fields["lambda"], spec), dim)
        return CoordinateMap.power_mean(_num(fields["p"], spec), _num(fields["lambda"], spec), dim)
    except BorellLabError as exc:
        raise InputError(f"{spec!r}: {exc}") from exc


def parse_combiner_spec(spec: str) -> Combiner:
    kind, fields = _spec_fields(spec, {"mean": ("s", "lambda"), "minkowski": ("n",)})
    try:
        if kind == "mean":
            return MeanCombiner(_num(fields["s"], spec), _num(fields["lambda"], spec))
        return MinkowskiCombiner(int(fields["n"]))
    except (BorellLabError, ValueError) as exc:
        raise InputError(f"{spec!r}: {exc}") from exc


def reports_csv(reports: Iterable[CheckReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row())
    return buf.getvalue()


def write_reports(path: str | Path, reports: Iterable[CheckReport]) -> None:
    Path(path).write_text(reports_csv(reports))


def write_rows(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def write_transport(path: str | Path, T: TransportMap) -> None:
    write_rows(path, ("x", "T", "Tprime"), ((repr(float(x)), repr(float(t)), repr(float(d))) for x, t, d in zip(T.xs, T.ts, T.dts)))

