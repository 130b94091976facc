"""Scenario files: one named check with its inputs and parameters.

Schema::

    {
      "name": "logbm-dilate",
      "check": "lpbm",
      "inputs": {"K": "K.json", "L": "L.json"},
      "parameters": {"lambda": 0.5, "p": 0},
      "tolerance": 0.001,
      "seed": 0
    }

Input paths are relative to the scenario file.  Extended reals may be given
as the strings ``"inf"`` and ``"-inf"``.  Every referenced file is loaded
and every required parameter is checked before any computation starts.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import bodies, inequalities, io, means, measures, transport
from .errors import BorellLabError, InputError
from .report import CheckReport

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2


@dataclass
class Scenario:
    name: str
    check: str
    inputs: dict[str, Any]
    parameters: dict[str, Any]
    tolerance: float | None
    seed: int
    path: Path | None = None
    text: str = ""

    def param(self, key: str, default: Any = ...) -> Any:
        if key in self.parameters:
            return self.parameters[key]
        if default is ...:
            raise InputError(self.locate(f"missing parameter '{key}'", "parameters"))
        return default

    def ext(self, key: str, default: Any = ...) -> float:
        value = self.param(key, default)
        try:
            return means.parse_ext(value)
        except (TypeError, ValueError) as exc:
            raise InputError(self.locate(f"parameter '{key}': {exc}", key)) from exc

    def locate(self, message: str, key: str | None = None) -> str:
        """Prefix ``message`` with ``file:line`` of the first mention of ``key``."""
        line = 1
        if key is not None:
            for i, text in enumerate(self.text.splitlines(), start=1):
                if f'"{key}"' in text:
                    line = i
                    break
        return f"{self.path or '<scenario>'}:{line}: {message}"


@dataclass(frozen=True)
class _CheckSpec:
    inputs: tuple[str, ...]
    params: tuple[str, ...]
    run: Callable[[Scenario, dict[str, Any]], list[CheckReport]]
    optional_inputs: tuple[str, ...] = field(default=())


def _tol(sc: Scenario, default: float) -> float:
    return default if sc.tolerance is None else float(sc.tolerance)


def _run_means(sc: Scenario, data: dict) -> list[CheckReport]:
    value = means.mean(sc.ext("s"), sc.ext("lambda"), sc.ext("a"), sc.ext("b"))
    expected = sc.ext("expected", value)
    tol = _tol(sc, 1e-12)
    err = 0.0 if value == expected else abs(value - expected) / max(1.0, abs(expected))
    return [CheckReport("means", value, expected, -err if err else 0.0, tol, witness=f"s={means.format_ext(sc.ext('s'))}")]


def _run_holder(sc: Scenario, data: dict) -> list[CheckReport]:
    return [
        means.holder_check(
            sc.ext("alpha"), sc.ext("beta"), sc.ext("gamma"), sc.ext("lambda"),
            sc.ext("a"), sc.ext("b"), sc.ext("c"), sc.ext("d"), tol=_tol(sc, 1e-10),
        )
    ]


def _sampler(sc: Scenario) -> inequalities.HypothesisSampler:
    return inequalities.HypothesisSampler(
        n_xy=int(sc.param("pairs", 10_000)), n_scale=int(sc.param("n_scale", 16)), seed=sc.seed
    )


def _run_borell(sc: Scenario, data: dict) -> list[CheckReport]:
    f, g, h = data["f"], data["g"], data["h"]
    phi = io.parse_map_spec(sc.param("phi"), f.dim)
    Phi = io.parse_combiner_spec(sc.param("Phi"))
    tol = _tol(sc, inequalities.QUADRATURE_TOL)
    return [
        inequalities.borell_hypothesis_check(f, g, h, phi, Phi, _sampler(sc), tol),
        inequalities.borell_conclusion_check(f, g, h, Phi, tol),
    ]


def _run_bbl(sc: Scenario, data: dict) -> list[CheckReport]:
    tol = _tol(sc, inequalities.QUADRATURE_TOL)
    return [inequalities.bbl_check(data["f"], data["g"], sc.ext("gamma"), sc.ext("lambda"), tol)]


def _run_nonlinear(sc: Scenario, data: dict) -> list[CheckReport]:
    p = sc.param("p")
    p = [means.parse_ext(v) for v in (p if isinstance(p, list) else [p] * data["f"].dim)]
    tol = _tol(sc, inequalities.QUADRATURE_TOL)
    return [inequalities.nonlinear_check(data["f"], data["g"], p, sc.ext("gamma"), sc.ext("lambda"), tol)]


def _run_transport(sc: Scenario, data: dict) -> list[CheckReport]:
    f, g = data["f"], data["g"]
    tol = _tol(sc, 1e-3)
    if "Phi" in sc.parameters:
        phi = io.parse_map_spec(sc.param("phi"), 1)
        Phi = io.parse_combiner_spec(sc.param("Phi"))
        return [transport.transport_certificate(f, g, phi, Phi, data.get("h"), tol)]
    T = transport.monotone_transport(f, g)
    res = transport.pushforward_residual(f, g, T)
    return [CheckReport("transport_residual", res, 0.0, -res, tol, samples_checked=len(T.xs))]


def _measure(sc: Scenario, data: dict) -> measures.DensityMeasure:
    if "density" in data:
        return measures.DensityMeasure(data["density"], sc.ext("alpha"), seed=sc.seed)
    reach = max(float(np.max(data["K"].half_widths)), float(np.max(data["L"].half_widths)))
    half = math.ceil(reach * 1.05 * 4) / 4
    n = int(sc.param("grid_per_unit", 128) * 2 * half) + 1
    return measures.DensityMeasure.lebesgue(half, n, data["K"].dim, sc.ext("alpha", math.inf))


def _run_lpbm(sc: Scenario, data: dict, p: float | None = None) -> list[CheckReport]:
    mu = _measure(sc, data)
    p = sc.ext("p") if p is None else p
    return [measures.lp_bm_check(mu, data["K"], data["L"], sc.ext("lambda"), p, _tol(sc, inequalities.QUADRATURE_TOL))]


def _run_pipeline(sc: Scenario, data: dict) -> list[CheckReport]:
    mu = _measure(sc, data)
    tol = _tol(sc, inequalities.QUADRATURE_TOL)
    args = (mu, data["K"], data["L"], sc.ext("lambda"), sc.ext("p"))
    return [
        measures.lp_bm_check(*args, tol=tol),
        measures.equiv_pipeline_check(*args, n_thresholds=int(sc.param("thresholds", 64)), tol=tol),
    ]


def _run_inclusion(sc: Scenario, data: dict) -> list[CheckReport]:
    return [
        measures.inclusion_chain_check(
            data["K"], data["L"], sc.ext("lambda"), sc.ext("p"), int(sc.param("points", 10_000)), sc.seed
        )
    ]


def run_sweep(
    trials: int, seed: int, p: float, lams=(0.3, 0.5), m: int = bodies.DEFAULT_PLANAR_M, aligned: bool = False
) -> list[CheckReport]:
    """Planar Lebesgue ``L_p`` trials; each report's tolerance is its measured grid bias."""
    return [measures.planar_lp_bm_trial(seed, i, lams[i % len(lams)], p, m, aligned) for i in range(trials)]


def _run_sweep(sc: Scenario, data: dict) -> list[CheckReport]:
    if int(sc.param("dim", 2)) != 2:
        raise InputError(sc.locate("the sweep is planar (dim = 2)", "dim"))
    lams = sc.param("lambdas", [0.3, 0.5])
    m = int(sc.param("m", bodies.DEFAULT_PLANAR_M))
    return run_sweep(int(sc.param("trials")), sc.seed, sc.ext("p"), tuple(float(v) for v in lams), m, bool(sc.param("aligned", False)))


CHECKS: dict[str, _CheckSpec] = {
    "means": _CheckSpec((), ("s", "lambda", "a", "b"), _run_means),
    "holder": _CheckSpec((), ("alpha", "beta", "gamma", "lambda", "a", "b", "c", "d"), _run_holder),
    "borell": _CheckSpec(("f", "g", "h"), ("phi", "Phi"), _run_borell),
    "bbl": _CheckSpec(("f", "g"), ("gamma", "lambda"), _run_bbl),
    "nonlinear": _CheckSpec(("f", "g"), ("p", "gamma", "lambda"), _run_nonlinear),
    "transport": _CheckSpec(("f", "g"), (), _run_transport, ("h",)),
    "logbm": _CheckSpec(("K", "L"), ("lambda",), lambda sc, d: _run_lpbm(sc, d, 0.0), ("density",)),
    "lpbm": _CheckSpec(("K", "L"), ("lambda", "p"), _run_lpbm, ("density",)),
    "pipeline": _CheckSpec(("K", "L"), ("lambda", "p"), _run_pipeline, ("density",)),
    "inclusion": _CheckSpec(("K", "L"), ("lambda", "p"), _run_inclusion),
    "sweep": _CheckSpec((), ("trials", "p"), _run_sweep),
}

_GRID_INPUTS = {"f", "g", "h", "density"}


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    raw = io.load_json(path)
    text = path.read_text()
    sc = Scenario("", "", {}, {}, None, 0, path, text)
    if not isinstance(raw, dict):
        raise InputError(sc.locate("a scenario must be a JSON object"))
    for key in ("name", "check"):
        if key not in raw:
            raise InputError(sc.locate(f"missing field '{key}'"))
    sc.name = str(raw["name"])
    sc.check = str(raw["check"])
    sc.inputs = dict(raw.get("inputs", {}))
    sc.parameters = dict(raw.get("parameters", {}))
    sc.tolerance = raw.get("tolerance")
    sc.seed = int(raw.get("seed", 0))
    if sc.check not in CHECKS:
        raise InputError(sc.locate(f"unknown check {sc.check!r} (expected one of {sorted(CHECKS)})", "check"))
    spec = CHECKS[sc.check]
    for key in spec.inputs:
        if key not in sc.inputs:
            raise InputError(sc.locate(f"missing input '{key}'", "inputs"))
    for key in spec.params:
        sc.param(key)
    return sc


def load_inputs(sc: Scenario) -> dict[str, Any]:
    spec = CHECKS[sc.check]
    base = sc.path.parent if sc.path else Path(".")
    data = {}
    for key in spec.inputs + spec.optional_inputs:
        if key not in sc.inputs:
            continue
        target = base / sc.inputs[key]
        if not target.is_file():
            raise InputError(sc.locate(f"input '{key}': no such file {target}", key))
        data[key] = io.load_grid(target) if key in _GRID_INPUTS else io.load_body(target)
    return data


def execute(sc: Scenario) -> list[CheckReport]:
    data = load_inputs(sc)
    try:
        return CHECKS[sc.check].run(sc, data)
    except InputError:
        raise
    except BorellLabError as exc:
        raise InputError(sc.locate(f"{type(exc).__name__}: {exc}", sc.check)) from exc


def status_of(reports: list[CheckReport]) -> int:
    return EXIT_OK if all(r.satisfied for r in reports) else EXIT_VIOLATION


def run_scenario(path: str | Path, report: str | Path | None = None) -> tuple[int, list[CheckReport]]:
    """Run one scenario; returns ``(exit_status, reports)`` and writes the CSV if asked."""
    sc = load_scenario(path)
    reports = execute(sc)
    if report is not None:
        io.write_reports(report, reports)
    return status_of(reports), reports


@dataclass(frozen=True)
class SuiteEntry:
    scenario: str
    status: int
    margin: float
    runtime: float
    reports: tuple[CheckReport, ...]
    error: str = ""

    @property
    def satisfied(self) -> bool:
        return self.status == EXIT_OK


def run_suite(directory: str | Path, report: str | Path | None = None, summary: str | Path | None = None) -> tuple[int, list[SuiteEntry]]:
    """Run every ``*.json`` scenario in ``directory`` (sorted by file name).

    ``report`` collects all check rows, with the check name prefixed by the
    scenario name; it is byte-identical across runs.  ``summary`` has one row
    per scenario including the wall-clock runtime, so it is not.
    Input errors are recorded and the remaining scenarios still run.
    """
    entries = []
    for path in sorted(Path(directory).glob("*.json")):
        start = time.perf_counter()
        try:
            status, reps = run_scenario(path)
            error = ""
        except InputError as exc:
            status, reps, error = EXIT_INPUT, [], str(exc)
        margin = min((r.margin for r in reps), default=math.nan)
        entries.append(SuiteEntry(path.stem, status, margin, time.perf_counter() - start, tuple(reps), error))
    if report is not None:
        rows = []
        for e in entries:
            for r in e.reports:
                rows.append(CheckReport(f"{e.scenario}/{r.check}", r.lhs, r.rhs, r.margin, r.tolerance, r.witness, r.samples_checked, r.seed))
        io.write_reports(report, rows)
    if summary is not None:
        io.write_rows(
            summary,
            ("scenario", "satisfied", "margin", "runtime"),
            ((e.scenario, str(e.satisfied).lower(), repr(e.margin), f"{e.runtime:.3f}") for e in entries),
        )
    if any(e.status == EXIT_INPUT for e in entries):
        return EXIT_INPUT, entries
    if any(e.status == EXIT_VIOLATION for e in entries):
        return EXIT_VIOLATION, entries
    return EXIT_OK, entries
