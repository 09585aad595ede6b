"""Command-line front end.

Exit codes: 0 on success (and all checks green), 1 when a mathematical
check fails (circle check negative, scenario or verify checks red,
non-hyperbolic spectrum), 2 on usage or input errors (bad flags,
missing or invalid files).  Results go to standard output or ``--out``;
diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .errors import (
    HyperbolicityError,
    QuadratureError,
    RankAmbiguityError,
    SingularOperatorError,
    SpecificationError,
    UnknownScenarioError,
    WindowError,
)
from .jsonio import (
    circle_payload,
    dumps,
    laurent_payload,
    load_model,
    load_noise,
    sanitize,
    simulation_csv,
    simulation_payload,
    split_payload,
)

#: errors meaning the input was bad (exit 2)
_USAGE_ERRORS = (SpecificationError, WindowError, UnknownScenarioError)

#: errors meaning the mathematics said no (exit 1)
_CHECK_ERRORS = (
    SingularOperatorError,
    HyperbolicityError,
    RankAmbiguityError,
    QuadratureError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oparma",
        description="Operator-coefficient ARMA models: spectral splitting, "
        "Laurent coefficients, stationary-solution simulation, moment "
        "verdicts, and the scenario gallery.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("split", help="unit-circle spectral splitting of the AR operator")
    sp.add_argument("--model", required=True, help="model JSON file")
    sp.add_argument("--n-quad", type=int, help="initial contour node count")
    sp.add_argument("--out", help="write the JSON result here instead of stdout")

    sp = sub.add_parser("laurent", help="Laurent coefficients of the transfer function")
    sp.add_argument("--model", required=True)
    sp.add_argument("--k-min", type=int, help="lowest coefficient index (with --k-max)")
    sp.add_argument("--k-max", type=int, help="highest coefficient index (with --k-min)")
    sp.add_argument("--n-quad", type=int, help="initial circle grid size")
    sp.add_argument("--out")

    sp = sub.add_parser("check-circle", help="denominator invertibility on the unit circle")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n-grid", type=int, help="number of circle scan points")
    sp.add_argument("--out")

    sp = sub.add_parser("simulate", help="simulate the strictly stationary solution")
    sp.add_argument("--model", required=True)
    sp.add_argument("--noise", required=True, help="noise JSON file")
    sp.add_argument("--t0", type=int, default=0, help="first time index (default 0)")
    sp.add_argument("--t1", type=int, default=199, help="last time index (default 199)")
    sp.add_argument(
        "--method",
        choices=("split", "ma"),
        default="split",
        help="split series (default) or two-sided moving average",
    )
    sp.add_argument("--K", type=int, dest="k_trunc", help="force the truncation depth")
    sp.add_argument("--seed", type=int, help="override the noise file's seed")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out")

    sp = sub.add_parser("moments", help="Monte Carlo moment-condition verdict")
    sp.add_argument("--noise", required=True)
    sp.add_argument(
        "--kind",
        choices=("log_plus", "log_plus_log_plus", "gamma_inverse"),
        default="log_plus",
    )
    sp.add_argument("--n-samples", type=int, default=100_000)
    sp.add_argument("--transform", help="JSON file with one operator spec applied to Z")
    sp.add_argument("--seed", type=int, help="override the noise file's seed")
    sp.add_argument("--out")

    sp = sub.add_parser("scenario", help="run one gallery scenario")
    sp.add_argument("name", nargs="?", help="scenario name (omit with --list)")
    sp.add_argument("--list", action="store_true", help="list the catalog and exit")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a scenario parameter (repeatable)",
    )
    sp.add_argument("--out")

    sp = sub.add_parser("verify", help="end-to-end health check of one model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--noise", help="noise JSON file (default: unit gaussian)")
    sp.add_argument("--window", type=int, default=200, help="simulation window length")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    return parser


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _ar_operator(model):
    from .operators import companion_lift

    return companion_lift(model).operator


def _cmd_split(args) -> int:
    from .spectral import hyperbolic_split

    model = load_model(args.model)
    kwargs = {}
    if args.n_quad is not None:
        kwargs["n_quad"] = args.n_quad
    split = hyperbolic_split(_ar_operator(model), **kwargs)
    _emit(dumps(split_payload(split)), args.out)
    return 0


def _cmd_laurent(args) -> int:
    from .laurent import laurent_coeffs

    if (args.k_min is None) != (args.k_max is None):
        raise SpecificationError("--k-min and --k-max must be given together")
    model = load_model(args.model)
    kwargs = {}
    if args.k_min is not None:
        kwargs["k_range"] = (args.k_min, args.k_max)
    if args.n_quad is not None:
        kwargs["n_quad"] = args.n_quad
    lc = laurent_coeffs(model, **kwargs)
    _emit(dumps(laurent_payload(lc)), args.out)
    return 0


def _cmd_check_circle(args) -> int:
    from .laurent import unit_circle_check

    model = load_model(args.model)
    kwargs = {}
    if args.n_grid is not None:
        kwargs["n_grid"] = args.n_grid
    cc = unit_circle_check(model, **kwargs)
    _emit(dumps(circle_payload(cc)), args.out)
    return 0 if cc.passed else 1


def _cmd_simulate(args) -> int:
    from .engine.noise import sample_path
    from .engine.simulate import build_split_kernel, simulate_ma, simulate_theorem1
    from .laurent import laurent_coeffs

    model = load_model(args.model)
    spec = load_noise(args.noise)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.t1 < args.t0:
        raise SpecificationError(f"--t1 must be >= --t0, got ({args.t0}, {args.t1})")
    t_range = (args.t0, args.t1)
    # one shared path wide enough for either method, so switching --method
    # (or comparing the two) reads the same innovations at the same times
    kernel, split = build_split_kernel(model, k_trunc=args.k_trunc)
    coeffs = laurent_coeffs(model)
    reach = max(kernel.l_max, -kernel.l_min, abs(coeffs.k_min), abs(coeffs.k_max))
    path = sample_path(
        spec, args.t1 - args.t0 + 2 * reach + 1, t_start=args.t0 - reach
    )
    if args.method == "split":
        res = simulate_theorem1(model, path, t_range, split=split, k_trunc=args.k_trunc)
    else:
        res = simulate_ma(model, coeffs, path, t_range)
    if args.format == "csv":
        print(
            f"method={res.method} K={res.truncation_K} "
            f"max_residual={res.max_residual:.3e}",
            file=sys.stderr,
        )
        _emit(simulation_csv(res), args.out)
    else:
        _emit(dumps(simulation_payload(res)), args.out)
    return 0


def _cmd_moments(args) -> int:
    from .engine.moments import moment_estimate
    from .jsonio import _load_json, _decode_operator_params
    from .operators import OperatorSpec, build_operator

    spec = load_noise(args.noise)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    transform = None
    if args.transform:
        data = _load_json(args.transform)
        if not isinstance(data, dict) or "kind" not in data or "dim" not in data:
            raise SpecificationError(
                f"{args.transform}: expected one operator object with kind and dim"
            )
        params = _decode_operator_params(
            data["kind"], data["dim"], data.get("params", {}), "transform"
        )
        transform = build_operator(
            OperatorSpec(kind=data["kind"], dim=data["dim"], params=params)
        )
    rep = moment_estimate(spec, transform, args.kind, args.n_samples)
    _emit(dumps(sanitize(dataclasses.asdict(rep))), args.out)
    return 0


def _parse_override(raw: str, defaults: dict, name: str):
    if "=" not in raw:
        raise SpecificationError(f"--set expects KEY=VALUE, got {raw!r}")
    key, text = raw.split("=", 1)
    key = key.strip()
    if key not in defaults:
        raise SpecificationError(
            f"unknown parameter {key!r} for scenario {name!r}; "
            f"known: {sorted(defaults)}"
        )
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    default = defaults[key]
    if isinstance(default, bool):
        pass
    elif isinstance(default, int) and isinstance(value, (int, float)):
        value = int(value)
    elif isinstance(default, float) and isinstance(value, (int, float)):
        value = float(value)
    return key, value


def _cmd_scenario(args) -> int:
    from .scenarios import list_scenarios, run_scenario

    if args.list:
        _emit(dumps(sanitize(list(list_scenarios()))), args.out)
        return 0
    if not args.name:
        raise SpecificationError("scenario name required (or use --list)")
    catalog = {e["name"]: e["defaults"] for e in list_scenarios()}
    if args.name not in catalog:
        raise UnknownScenarioError(
            f"unknown scenario {args.name!r}; catalog: {', '.join(sorted(catalog))}"
        )
    overrides = {}
    for raw in args.set:
        key, value = _parse_override(raw, catalog[args.name], args.name)
        overrides[key] = value
    rep = run_scenario(args.name, overrides or None, seed=args.seed)
    _emit(dumps(sanitize(dataclasses.asdict(rep))), args.out)
    return 0 if rep.passed else 1


def _cmd_verify(args) -> int:
    from .engine.noise import NoiseSpec, sample_path
    from .engine.simulate import build_split_kernel, simulate_ma, simulate_theorem1
    from .laurent import laurent_coeffs, unit_circle_check
    from .spectral import check_split, hyperbolic_split

    model = load_model(args.model)
    if args.window < model.p + 2:
        raise SpecificationError(f"--window must be at least p + 2 = {model.p + 2}")
    if args.noise:
        spec = load_noise(args.noise)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = NoiseSpec(
            kind="gaussian", dim=model.dim, params={"sigma": 1.0}, seed=args.seed
        )
    checks = []

    def record(description, expected, observed, passed):
        checks.append(
            {
                "description": description,
                "expected": expected,
                "observed": sanitize(observed),
                "pass": bool(passed),
            }
        )

    cc = unit_circle_check(model)
    record(
        "denominator invertible on the unit circle",
        f"min singular value > {cc.tol:.1e}",
        cc.min_singular_value,
        cc.passed,
    )

    split = hyperbolic_split(_ar_operator(model))
    flags = check_split(split, _ar_operator(model))
    record(
        "spectral split certifies its invariants",
        "all split identities at tolerance",
        {k: bool(v) for k, v in flags.items()},
        all(flags.values()),
    )
    record(
        "both spectral radii strictly inside the disc",
        "< 1",
        [split.diagnostics["radius_inner"], split.diagnostics["radius_outer_inv"]],
        split.diagnostics["radius_inner"] < 1.0
        and split.diagnostics["radius_outer_inv"] < 1.0,
    )

    coeffs = laurent_coeffs(model)
    record(
        "two-sided expansion reconstructs the transfer function",
        "residual <= 1e-6",
        coeffs.reconstruction_residual,
        coeffs.reconstruction_residual <= 1e-6,
    )

    t1 = args.window - 1
    kernel, _ = build_split_kernel(model, split=split)
    reach = max(kernel.l_max, -kernel.l_min, abs(coeffs.k_min), abs(coeffs.k_max))
    path = sample_path(spec, t1 + 2 * reach + 1, t_start=-reach)
    res_split = simulate_theorem1(model, path, (0, t1), split=split)
    record(
        "simulated path satisfies the defining recursion",
        "relative residual <= 1e-8",
        res_split.max_residual,
        res_split.max_residual <= 1e-8,
    )
    res_ma = simulate_ma(model, coeffs, path, (0, t1))
    gap = float(abs(res_split.values - res_ma.values).max())
    record(
        "split series and moving average agree on one noise path",
        "sup gap <= 1e-6",
        gap,
        gap <= 1e-6,
    )

    passed = all(c["pass"] for c in checks)
    payload = {"model": str(args.model), "checks": checks, "passed": passed}
    _emit(dumps(payload), args.out)
    return 0 if passed else 1


_HANDLERS = {
    "split": _cmd_split,
    "laurent": _cmd_laurent,
    "check-circle": _cmd_check_circle,
    "simulate": _cmd_simulate,
    "moments": _cmd_moments,
    "scenario": _cmd_scenario,
    "verify": _cmd_verify,
}


def parse_and_dispatch(argv=None) -> int:
    """Parse arguments, run the subcommand, and return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse handles --help/--version (code 0) and usage errors (2)
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.subcommand](args)
    except _CHECK_ERRORS as exc:
        print(f"oparma {args.subcommand}: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"oparma {args.subcommand}: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
