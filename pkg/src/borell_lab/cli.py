"""``borell-lab`` command line.

Exit status: 0 when every check holds, 1 on usage or input errors, 2 when a
check finds a violation.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

from . import bodies, funcgrid, inequalities, io, means, measures, scenarios, transport
from .errors import BorellLabError, InputError
from .report import CheckReport


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors share the input-error status
        self.print_usage(sys.stderr)
        self.exit(scenarios.EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _ext(text: str) -> float:
    try:
        return means.parse_ext(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(args: argparse.Namespace, reports: list[CheckReport]) -> int:
    for r in reports:
        print(r.summary())
    if args.report:
        io.write_reports(args.report, reports)
    return scenarios.status_of(reports)


def _tol(args: argparse.Namespace, default: float) -> float:
    return default if args.tolerance is None else args.tolerance


# handlers ------------------------------------------------------------------


def _cmd_means(args) -> int:
    value = means.mean(args.s, args.weight, args.a, args.b)
    print(means.format_ext(value))
    if args.report:
        io.write_reports(args.report, [CheckReport("means", value, value, 0.0, 0.0, witness=f"s={means.format_ext(args.s)}")])
    return scenarios.EXIT_OK


def _cmd_body(args) -> int:
    if args.action == "volume":
        if len(args.inputs) != 1:
            raise InputError("body volume takes exactly one --in file")
        B = io.load_body(args.inputs[0])
        if args.mc_samples:
            est, err = bodies.mc_volume(B, args.mc_samples, args.seed)
            print(f"{est!r} +- {err!r}")
        else:
            print(repr(B.volume(seed=args.seed)))
        return scenarios.EXIT_OK
    if len(args.inputs) != 2 or not args.out:
        raise InputError("body combine needs --in K.json L.json and --out M.json")
    if args.p is None or args.weight is None:
        raise InputError("body combine needs --p and --lambda")
    K, L = (io.load_body(p) for p in args.inputs)
    io.save_json(args.out, io.body_to_dict(bodies.p_combination(args.weight, args.p, K, L)))
    return scenarios.EXIT_OK


def _cmd_func(args) -> int:
    f = io.load_grid(args.input)
    if args.action == "integrate":
        print(repr(f.integrate()))
        return scenarios.EXIT_OK
    if args.alpha is None:
        raise InputError("func concavity needs --alpha")
    rep = funcgrid.alpha_concavity_check(f, args.alpha, n_pairs=args.pairs, seed=args.seed, tol=args.tolerance)
    return _emit(args, [rep])


def _cmd_transport(args) -> int:
    f, g = io.load_grid(args.f), io.load_grid(args.g)
    if args.action == "certify":
        if not args.phi or not args.Phi:
            raise InputError("transport certify needs --phi and --Phi")
        h = io.load_grid(args.h) if args.h else None
        rep = transport.transport_certificate(f, g, io.parse_map_spec(args.phi, 1), io.parse_combiner_spec(args.Phi), h, _tol(args, 1e-3))
        return _emit(args, [rep])
    T = transport.monotone_transport(f, g)
    if args.out:
        io.write_transport(args.out, T)
    res = transport.pushforward_residual(f, g, T)
    return _emit(args, [CheckReport("transport_residual", res, 0.0, -res, _tol(args, 1e-3), samples_checked=len(T.xs))])


def _cmd_check(args) -> int:
    f, g = io.load_grid(args.f), io.load_grid(args.g)
    tol = _tol(args, inequalities.QUADRATURE_TOL)
    if args.kind == "bbl":
        if args.gamma is None or args.weight is None:
            raise InputError("check bbl needs --gamma and --lambda")
        return _emit(args, [inequalities.bbl_check(f, g, args.gamma, args.weight, tol)])
    if not (args.h and args.phi and args.Phi):
        raise InputError("check borell needs --h, --phi and --Phi")
    h = io.load_grid(args.h)
    phi, Phi = io.parse_map_spec(args.phi, f.dim), io.parse_combiner_spec(args.Phi)
    sampler = inequalities.HypothesisSampler(n_xy=args.pairs, n_scale=args.n_scale, seed=args.seed)
    return _emit(
        args,
        [
            inequalities.borell_hypothesis_check(f, g, h, phi, Phi, sampler, tol),
            inequalities.borell_conclusion_check(f, g, h, Phi, tol),
        ],
    )


def _cmd_conjecture(args) -> int:
    tol = _tol(args, inequalities.QUADRATURE_TOL)
    if args.kind == "sweep":
        if args.dim != 2:
            raise InputError("the sweep is planar: --dim 2")
        return _emit(args, scenarios.run_sweep(args.trials, args.seed, args.p, aligned=args.aligned))
    if not (args.density and args.K and args.L) or args.alpha is None or args.weight is None:
        raise InputError("conjecture lp-bm needs --density, --alpha, --K, --L and --lambda")
    mu = measures.DensityMeasure(io.load_grid(args.density), args.alpha, seed=args.seed)
    K, L = io.load_body(args.K), io.load_body(args.L)
    reports = [measures.lp_bm_check(mu, K, L, args.weight, args.p, tol)]
    if args.pipeline:
        reports.append(measures.equiv_pipeline_check(mu, K, L, args.weight, args.p, tol=tol))
    return _emit(args, reports)


def _cmd_scenario(args) -> int:
    status, reports = scenarios.run_scenario(args.file, args.report)
    for r in reports:
        print(r.summary())
    return status


def _cmd_suite(args) -> int:
    status, entries = scenarios.run_suite(args.dir, args.report, args.summary)
    for e in entries:
        label = {0: "PASS", 1: "ERROR", 2: "FAIL"}[e.status]
        line = f"{label} {e.scenario} margin={e.margin!r} runtime={e.runtime:.3f}s"
        print(line + (f" {e.error}" if e.error else ""))
    return status


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None, help="override the check's tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--report", help="write the report CSV here")

    parser = _Parser(prog="borell-lab", description="Numerical checks for Brunn-Minkowski type inequalities.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("means", parents=[common], help="evaluate M_s^lambda(a, b)")
    p.add_argument("--s", type=_ext, required=True)
    p.add_argument("--lambda", dest="weight", type=float, required=True)
    p.add_argument("--a", type=_ext, required=True)
    p.add_argument("--b", type=_ext, required=True)
    p.set_defaults(handler=_cmd_means)

    p = sub.add_parser("body", parents=[common], help="volumes and p-combinations of bodies")
    p.add_argument("action", choices=["volume", "combine"])
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out")
    p.add_argument("--p", type=_ext)
    p.add_argument("--lambda", dest="weight", type=float)
    p.add_argument("--mc-samples", type=int, default=0)
    p.set_defaults(handler=_cmd_body)

    p = sub.add_parser("func", parents=[common], help="integrals and concavity of grid functions")
    p.add_argument("action", choices=["integrate", "concavity"])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--alpha", type=_ext)
    p.add_argument("--pairs", type=int, default=10_000)
    p.set_defaults(handler=_cmd_func)

    p = sub.add_parser("transport", parents=[common], help="monotone transport and certificates")
    p.add_argument("action", nargs="?", choices=["map", "certify"], default="map")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--h")
    p.add_argument("--out")
    p.add_argument("--phi")
    p.add_argument("--Phi")
    p.set_defaults(handler=_cmd_transport)

    p = sub.add_parser("check", parents=[common], help="Borell hypothesis/conclusion and BBL checks")
    p.add_argument("kind", choices=["borell", "bbl"])
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--h")
    p.add_argument("--phi")
    p.add_argument("--Phi")
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--n-scale", type=int, default=16)
    p.add_argument("--gamma", type=_ext)
    p.add_argument("--lambda", dest="weight", type=float)
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("conjecture", parents=[common], help="L_p Brunn-Minkowski for measures")
    p.add_argument("kind", choices=["lp-bm", "sweep"])
    p.add_argument("--density")
    p.add_argument("--alpha", type=_ext)
    p.add_argument("--K")
    p.add_argument("--L")
    p.add_argument("--lambda", dest="weight", type=float)
    p.add_argument("--p", type=_ext, default=0.0)
    p.add_argument("--pipeline", action="store_true")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--aligned", action="store_true", help="sweep polygons whose facet normals lie on the direction grid")
    p.set_defaults(handler=_cmd_conjecture)

    p = sub.add_parser("scenario", parents=[common], help="run one scenario file")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_scenario)

    p = sub.add_parser("suite", parents=[common], help="run every scenario in a directory")
    p.add_argument("dir")
    p.add_argument("--summary", help="per-scenario summary CSV (includes runtimes)")
    p.set_defaults(handler=_cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except BorellLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return scenarios.EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
