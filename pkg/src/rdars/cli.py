"""``rdars-sim`` command line: figure tables, closed-form calculators, scenario validation.

Exit codes: 0 success, 1 invalid input, 2 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from rdars import __version__
from rdars.analytic.siso import (
    QuadratureError,
    SisoMomentInputs,
    ergodic_rate_gamma,
    ergodic_rate_gamma_laguerre,
    gamma_match,
    mean_snrs_by_system,
    rate_upper_bound_siso,
    ris_crossover_n,
    snr_moments_composed,
    snr_moments_expanded,
)
from rdars.channel import db_to_linear
from rdars.figures import FIGURE_IDS, SIMO_DEFAULTS, SISO_DEFAULTS, parse_figure_override, run_figure
from rdars.montecarlo import SimoModel
from rdars.analytic.simo import e_noise, e_signal, ergodic_rate_simo_approx
from rdars.scenario import Scenario, ScenarioError, apply_overrides, parse_override, validate_scenario

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class NumericFailure(RuntimeError):
    pass


def _load_scenario(path, overrides, defaults) -> Scenario:
    if path:
        sc = validate_scenario(Path(path).read_text(encoding="utf-8"))
    else:
        sc = Scenario().replace(**defaults)
    if overrides:
        sc = apply_overrides(sc, dict(parse_override(o) for o in overrides))
    return sc


def _siso_inputs(args) -> SisoMomentInputs:
    """Scenario-derived inputs, with any explicit dB gains taking precedence."""
    sc = _load_scenario(args.scenario, args.override, SISO_DEFAULTS)
    g = sc.link_gains()
    n = args.n if args.n is not None else sc.n_elements
    a = args.a if args.a is not None else sc.connected
    if not 0 <= a <= n:
        raise ScenarioError([f"connected a={a} must lie in [0, N={n}]"])
    ue_rdars = db_to_linear(args.alpha_db) if args.alpha_db is not None else g.ue_rdars
    rdars_bs = db_to_linear(args.beta_db) if args.beta_db is not None else g.rdars_bs
    ue_bs = db_to_linear(args.gamma_db) if args.gamma_db is not None else g.ue_bs
    snr = db_to_linear(args.snr_db) if args.snr_db is not None else sc.transmit_snr
    return SisoMomentInputs.from_gains(n, a, float(ue_rdars), float(rdars_bs), float(ue_bs), float(snr))


def _inputs_dict(inputs: SisoMomentInputs) -> dict:
    return {
        "N": inputs.n_total,
        "a": inputs.a,
        "alpha_amplitude": inputs.alpha,
        "beta_amplitude": inputs.beta,
        "gamma_amplitude": inputs.gamma,
        "transmit_snr_db": 10.0 * math.log10(inputs.transmit_snr),
    }


def calc_snr_moments(args) -> dict:
    inputs = _siso_inputs(args)
    m1, m2 = snr_moments_composed(inputs)
    p1, p2 = snr_moments_expanded(inputs, uncorrected=args.uncorrected)
    rdars_, ris, das = mean_snrs_by_system(inputs)
    return {
        "inputs": _inputs_dict(inputs),
        "mean_snr": m1,
        "second_moment_snr": m2,
        "mean_snr_expanded_form": p1,
        "second_moment_snr_expanded_form": p2,
        "mean_snr_rdars_ris_das": [rdars_, ris, das],
    }


def calc_gamma_fit(args) -> dict:
    if args.mean is not None:
        mean, second = args.mean, args.second_moment
        if second is None:
            raise ScenarioError(["--second-moment is required with --mean"])
        inputs_out = {"mean": mean, "second_moment": second}
    else:
        inputs = _siso_inputs(args)
        mean, second = snr_moments_composed(inputs)
        inputs_out = _inputs_dict(inputs)
    fit = gamma_match(mean, second)
    return {"inputs": inputs_out, "shape_k": fit.k, "scale_theta": fit.p,
            "ergodic_rate_bps_hz": ergodic_rate_gamma(fit)}


def calc_rate_siso(args) -> dict:
    inputs = _siso_inputs(args)
    fit = gamma_match(*snr_moments_composed(inputs))
    return {
        "inputs": _inputs_dict(inputs),
        "shape_k": fit.k,
        "scale_theta": fit.p,
        "ergodic_rate_bps_hz": ergodic_rate_gamma(fit),
        "ergodic_rate_laguerre_bps_hz": ergodic_rate_gamma_laguerre(fit),
        "rate_upper_bound_bps_hz": rate_upper_bound_siso(inputs),
    }


def calc_bound(args) -> dict:
    inputs = _siso_inputs(args)
    return {"inputs": _inputs_dict(inputs),
            "rate_upper_bound_bps_hz": rate_upper_bound_siso(inputs, uncorrected=args.uncorrected)}


def calc_rate_simo(args) -> dict:
    sc = _load_scenario(args.scenario, args.override, SIMO_DEFAULTS)
    model = SimoModel.from_scenario(sc, args.system)
    inp = model.inputs()
    return {
        "scenario_hash": sc.digest,
        "system": args.system,
        "L": inp.l_antennas,
        "N": inp.n_total,
        "a": inp.a,
        "f_abs": inp.f_abs,
        "expected_signal_fourth_moment": e_signal(inp),
        "expected_noise_power": e_noise(inp),
        "ergodic_rate_approx_bps_hz": ergodic_rate_simo_approx(inp),
    }


def calc_threshold(args) -> dict:
    alpha = math.sqrt(db_to_linear(args.alpha_db))
    beta = math.sqrt(db_to_linear(args.beta_db))
    gamma = math.sqrt(db_to_linear(args.gamma_db))
    return {"alpha_db": args.alpha_db, "beta_db": args.beta_db, "gamma_db": args.gamma_db, "a": args.a,
            "rdars_beats_ris_up_to_n": ris_crossover_n(alpha, beta, gamma, args.a)}


CALCS = {
    "snr-moments": calc_snr_moments,
    "gamma-fit": calc_gamma_fit,
    "rate-siso": calc_rate_siso,
    "bound": calc_bound,
    "rate-simo": calc_rate_simo,
    "threshold": calc_threshold,
}


def _add_scenario_flags(p, siso=True):
    p.add_argument("--scenario", help="TOML scenario file (defaults to the built-in scenario)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    if siso:
        p.add_argument("--n", type=int, help="total elements N")
        p.add_argument("--a", type=int, help="connected elements a")
        p.add_argument("--alpha-db", type=float, help="UE-RDARS power gain (dB)")
        p.add_argument("--beta-db", type=float, help="RDARS-BS power gain (dB)")
        p.add_argument("--gamma-db", type=float, help="UE-BS power gain (dB)")
        p.add_argument("--snr-db", type=float, help="transmit SNR P/sigma^2 (dB)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdars-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fig = sub.add_parser("figure", help="reproduce a figure table as CSV")
    fig.add_argument("figure_id", choices=FIGURE_IDS)
    fig.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    fig.add_argument("--out", help="output CSV path (default <id>.csv)")
    fig.add_argument("--seed", type=int)
    fig.add_argument("--scenario", help="TOML scenario file used as the base")
    fig.add_argument("--parallelism", type=int, default=1)

    calc = sub.add_parser("calc", help="closed-form calculators (JSON on stdout)")
    csub = calc.add_subparsers(dest="calc", required=True)
    p = csub.add_parser("snr-moments")
    _add_scenario_flags(p)
    p.add_argument("--uncorrected", action="store_true", help="use the uncorrected second-moment term")
    p = csub.add_parser("gamma-fit")
    _add_scenario_flags(p)
    p.add_argument("--mean", type=float)
    p.add_argument("--second-moment", type=float)
    p = csub.add_parser("rate-siso")
    _add_scenario_flags(p)
    p = csub.add_parser("bound")
    _add_scenario_flags(p)
    p.add_argument("--uncorrected", action="store_true", help="use the uncorrected bound polynomial")
    p = csub.add_parser("rate-simo")
    _add_scenario_flags(p, siso=False)
    p.add_argument("--system", choices=("rdars", "ris", "das", "none"), default="rdars")
    p = csub.add_parser("threshold")
    p.add_argument("--alpha-db", type=float, default=-70.0)
    p.add_argument("--beta-db", type=float, default=-70.0)
    p.add_argument("--gamma-db", type=float, default=-70.0)
    p.add_argument("--a", type=int, default=1)

    val = sub.add_parser("validate", help="check a TOML scenario file")
    val.add_argument("file")
    return parser


def _finite(obj) -> bool:
    if isinstance(obj, float):
        return math.isfinite(obj)
    if isinstance(obj, dict):
        return all(_finite(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(_finite(v) for v in obj)
    return True


def _run(args) -> int:
    if args.command == "figure":
        overrides = dict(parse_figure_override(o, args.figure_id) for o in args.override)
        base = validate_scenario(Path(args.scenario).read_text(encoding="utf-8")) if args.scenario else None
        out = run_figure(args.figure_id, overrides, args.out, args.seed, base, args.parallelism)
        print(out)
        return EXIT_OK
    if args.command == "calc":
        result = CALCS[args.calc](args)
        if not _finite(result):
            raise NumericFailure("non-finite result")
        print(json.dumps(result, indent=2))
        return EXIT_OK
    sc = validate_scenario(Path(args.file).read_text(encoding="utf-8"))
    print(f"ok {args.file} (scenario {sc.digest})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return _run(args)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (QuadratureError, NumericFailure, FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
