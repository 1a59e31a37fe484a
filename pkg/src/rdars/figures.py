"""Figure sweeps reproduced as CSV tables plus a JSON sidecar."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import subprocess
import time
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np
import tomli

import rdars
from rdars.analytic.siso import SisoMomentInputs, mean_snr_direct_only, mean_snrs_by_system
from rdars.channel import db_to_linear
from rdars.montecarlo import (
    Campaign,
    RateEstimate,
    SystemSpec,
    closed_form_rate,
    estimate_rate,
    scenario_at,
    upper_bound_siso,
)
from rdars.scenario import Scenario, ScenarioError, apply_overrides, parse_override

SISO_DEFAULTS = dict(bs_antennas=1, rician_rdars_bs=0.0, rician_ue_rdars=0.0,
                     phase_policy="optimal-instantaneous", rdars_elements=1024, connected=2)
SIMO_DEFAULTS = dict(bs_antennas=4, rician_rdars_bs=10.0, rician_ue_rdars=10.0,
                     phase_policy="statistical-aligned", rdars_elements=512, connected=2)

ALIGNED = "statistical-aligned"
COPHASED = "optimal-instantaneous"

_SISO_SYSTEMS = (
    SystemSpec("RDARS a=1", "rdars", 1, COPHASED),
    SystemSpec("RDARS a=2", "rdars", 2, COPHASED),
    SystemSpec("DAS a=1", "das", 1, COPHASED),
    SystemSpec("DAS a=2", "das", 2, COPHASED),
    SystemSpec("RIS", "ris", 0, COPHASED),
    SystemSpec("W.O. RDARS", "none", 0, COPHASED),
)
_SIMO_SYSTEMS = (
    SystemSpec("RDARS a=1 aligned", "rdars", 1, ALIGNED),
    SystemSpec("RDARS a=2 aligned", "rdars", 2, ALIGNED),
    SystemSpec("RDARS a=1 identity", "rdars", 1, "identity"),
    SystemSpec("RDARS a=2 identity", "rdars", 2, "identity"),
    SystemSpec("RIS aligned", "ris", 0, ALIGNED),
    SystemSpec("DAS a=1", "das", 1, ALIGNED),
    SystemSpec("DAS a=2", "das", 2, ALIGNED),
    SystemSpec("W.O. RDARS", "none", 0, ALIGNED),
)


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    axis: str
    values: tuple
    base: dict
    systems: tuple
    bound: bool = False
    description: str = ""


FIGURES = {
    "fig4a": FigureSpec("fig4a", "N", (64, 128, 256, 512, 1024, 2048), SISO_DEFAULTS,
                        _SISO_SYSTEMS[:5], bound=True,
                        description="single-antenna BS, rate vs N, co-phased reflection"),
    "fig4b": FigureSpec("fig4b", "P", tuple(range(-10, 21, 2)), SISO_DEFAULTS, _SISO_SYSTEMS,
                        bound=True, description="single-antenna BS, rate vs transmit power, N=1024"),
    "fig5a": FigureSpec("fig5a", "N", (64, 128, 256, 512, 1024), SIMO_DEFAULTS, _SIMO_SYSTEMS[:7],
                        description="L=4, rate vs N, aligned and identity phases"),
    "fig5b": FigureSpec("fig5b", "P", tuple(range(-10, 21, 2)), SIMO_DEFAULTS, _SIMO_SYSTEMS,
                        description="L=4, N=512, rate vs transmit power"),
    "fig6": FigureSpec("fig6", "L", tuple(range(1, 13)), SIMO_DEFAULTS,
                       tuple(s for s in _SIMO_SYSTEMS if "identity" not in s.label and s.system != "none"),
                       description="N=512, rate vs BS antennas"),
    "fig7": FigureSpec("fig7", "delta", (0, 1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20), SIMO_DEFAULTS,
                       tuple(s for s in _SIMO_SYSTEMS if "identity" not in s.label and s.system != "none"),
                       description="N=512, rate vs RDARS-BS Rician factor"),
}
FIGURE_IDS = ("fig3",) + tuple(FIGURES)

# mean-SNR comparison: transmit SNR 90 dB, all three link gains -70 dB, one connected element
FIG3_PARAMS = dict(transmit_snr_db=90.0, gain_db=-70.0, connected=1, n_points=50, n_min=1e2, n_max=1e7)


@dataclass(frozen=True)
class ResultRow:
    figure: str
    axis: str
    axis_value: float
    system: str
    metric: str
    provenance: str
    mean: float
    ci_halfwidth_95: float
    n_trials: int
    scenario_hash: str


RESULT_COLUMNS = tuple(f.name for f in fields(ResultRow))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in RESULT_COLUMNS])
    return buf.getvalue()


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def fig3_rows(params: dict) -> list[ResultRow]:
    """Average received SNR (dB) of RDARS, RIS, DAS and the direct link over a log N grid."""
    snr = float(db_to_linear(params["transmit_snr_db"]))
    amp = math.sqrt(float(db_to_linear(params["gain_db"])))
    a = int(params["connected"])
    grid = np.logspace(math.log10(params["n_min"]), math.log10(params["n_max"]), int(params["n_points"]))
    tag = "fig3:" + json.dumps(params, sort_keys=True)
    digest = hashlib.sha256(tag.encode()).hexdigest()[:16]
    rows = []
    for n in grid:
        n_int = max(int(round(float(n))), a)
        inputs = SisoMomentInputs(n_int, a, amp, amp, amp, snr)
        rdars_, ris, das = mean_snrs_by_system(inputs)
        for label, value in (("RDARS", rdars_), ("RIS", ris), ("DAS", das),
                             ("W.O. RDARS", mean_snr_direct_only(inputs))):
            rows.append(ResultRow("fig3", "N", float(n_int), label, "mean_snr_db", "closed-form",
                                  float(10.0 * math.log10(value)), 0.0, 0, digest))
    return rows


def _estimate_rows(fig: FigureSpec, sc: Scenario, value, spec: SystemSpec, n_trials: int,
                   seed: int, parallelism: int) -> list[ResultRow]:
    camp = Campaign(sc, sc.phase_policy, n_trials, seed, parallelism, spec.system)
    out: list[tuple[RateEstimate, str]] = [(estimate_rate(camp), "rate_bps_hz")]
    out.append((closed_form_rate(sc, spec.system), "rate_bps_hz"))
    if fig.bound:
        out.append((upper_bound_siso(sc, spec.system), "rate_bps_hz"))
    return [ResultRow(fig.figure_id, fig.axis, float(value), spec.label, metric, est.provenance,
                      float(est.mean), float(est.ci_halfwidth_95), int(est.n_trials), sc.digest)
            for est, metric in out]


def resolve_scenario(figure_id: str, base: Optional[Scenario] = None,
                     overrides: Optional[dict] = None, seed: Optional[int] = None) -> Scenario:
    """Figure defaults applied on top of ``base`` (or the built-in defaults), then overrides."""
    sc = base or Scenario()
    if figure_id in FIGURES:
        sc = sc.replace(**FIGURES[figure_id].base)
    scen_over = {k: v for k, v in (overrides or {}).items() if k not in _FIGURE_PARAM_KEYS}
    if scen_over:
        sc = apply_overrides(sc, scen_over)
    if seed is not None:
        sc = sc.replace(seed=int(seed))
    return sc


_FIGURE_PARAM_KEYS = frozenset({"values", "parallelism"})


def figure_param_keys(figure_id: str) -> frozenset:
    return frozenset(FIG3_PARAMS) if figure_id == "fig3" else _FIGURE_PARAM_KEYS


def parse_figure_override(item: str, figure_id: str = "") -> tuple[str, Any]:
    """Like ``parse_override`` but also accepts the figure-level keys of ``figure_id``."""
    key = item.split("=", 1)[0].strip()
    if "=" in item and key in figure_param_keys(figure_id):
        raw = item.split("=", 1)[1].strip()
        try:
            return key, tomli.loads(f"v = {raw}")["v"]
        except tomli.TOMLDecodeError as exc:
            raise ScenarioError([f"override {key!r}: {exc}"]) from exc
    return parse_override(item)


def figure_rows(figure_id: str, overrides: Optional[dict] = None, seed: Optional[int] = None,
                base: Optional[Scenario] = None, parallelism: int = 1) -> tuple[list[ResultRow], Scenario, dict]:
    """Compute the table for one figure. Returns (rows, resolved scenario, figure params)."""
    overrides = dict(overrides or {})
    if figure_id == "fig3":
        params = dict(FIG3_PARAMS)
        params.update({k: v for k, v in overrides.items() if k in FIG3_PARAMS})
        unknown = set(overrides) - set(FIG3_PARAMS)
        if unknown:
            raise ScenarioError([f"override {k!r}: not a fig3 parameter" for k in sorted(unknown)])
        return fig3_rows(params), resolve_scenario("fig3", base, {}, seed), params
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    fig = FIGURES[figure_id]
    sc = resolve_scenario(figure_id, base, overrides, seed)
    values = tuple(overrides.get("values", fig.values))
    parallelism = int(overrides.get("parallelism", parallelism))
    rows: list[ResultRow] = []
    for value in values:
        for spec in fig.systems:
            sc_v = scenario_at(sc, fig.axis, value, spec)
            rows.extend(_estimate_rows(fig, sc_v, value, spec, sc.n_trials, sc.seed, parallelism))
    params = {"axis": fig.axis, "values": list(values), "systems": [asdict(s) for s in fig.systems]}
    return rows, sc, params


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=10)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def run_figure(figure_id: str, overrides: Optional[dict] = None, out_path=None,
               seed: Optional[int] = None, base: Optional[Scenario] = None,
               parallelism: int = 1) -> Path:
    """Write ``<out_path>`` (CSV) and ``<out_path>.json`` (sidecar) for one figure."""
    t0 = time.perf_counter()
    rows, sc, params = figure_rows(figure_id, overrides, seed, base, parallelism)
    out = Path(out_path or f"{figure_id}.csv")
    text = rows_to_csv(rows)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    sidecar = {
        "figure": figure_id,
        "scenario": sc.to_dict(),
        "scenario_hash": sc.digest,
        "seed": sc.seed,
        "figure_params": params,
        "overrides": {k: v for k, v in (overrides or {}).items()},
        "tool_version": rdars.__version__,
        "git_describe": git_describe(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": time.perf_counter() - t0,
        "columns": list(RESULT_COLUMNS),
    }
    with open(str(out) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=str)
    return out
