import json

import pytest

from rdars.cli import main
from rdars.figures import RESULT_COLUMNS, read_csv

# estimate_rate, 10^6 trials, N=1024, a=2, single-antenna Rayleigh defaults, seed 20240601
GOLDEN_RATE_SISO_MC = 2.90924245205071


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_calc_gamma_fit_trivial(capsys):
    assert main(["calc", "gamma-fit", "--mean", "2", "--second-moment", "6"]) == 0
    out = _json(capsys)
    assert out["shape_k"] == pytest.approx(2.0) and out["scale_theta"] == pytest.approx(1.0)


def test_calc_threshold_defaults(capsys):
    assert main(["calc", "threshold"]) == 0
    assert _json(capsys)["rdars_beats_ris_up_to_n"] == pytest.approx(8.1e6, rel=0.02)


def test_calc_rate_siso_against_golden(capsys):
    assert main(["calc", "rate-siso", "--n", "1024", "--a", "2"]) == 0
    out = _json(capsys)
    assert out["ergodic_rate_bps_hz"] == pytest.approx(GOLDEN_RATE_SISO_MC, abs=0.1)
    assert out["ergodic_rate_laguerre_bps_hz"] == pytest.approx(out["ergodic_rate_bps_hz"], abs=1e-6)
    assert out["rate_upper_bound_bps_hz"] >= out["ergodic_rate_bps_hz"]


def test_calc_snr_moments_and_bound(capsys):
    assert main(["calc", "snr-moments", "--n", "100", "--a", "1", "--alpha-db", "-70", "--beta-db", "-70",
                 "--gamma-db", "-70", "--snr-db", "90"]) == 0
    out = _json(capsys)
    assert out["mean_snr"] == pytest.approx(out["mean_snr_expanded_form"], rel=1e-9)
    assert out["inputs"]["N"] == 100
    assert main(["calc", "bound", "--uncorrected"]) == 0
    assert _json(capsys)["rate_upper_bound_bps_hz"] > 0


def test_calc_rate_simo(capsys):
    assert main(["calc", "rate-simo", "--override", "rdars_elements=64"]) == 0
    out = _json(capsys)
    assert out["N"] == 64 and out["f_abs"] == pytest.approx(62.0)


def test_invalid_inputs_exit_1(tmp_path, capsys):
    assert main(["calc", "gamma-fit", "--mean", "1", "--second-moment", "0.5"]) == 1
    assert main(["calc", "rate-siso", "--n", "4", "--a", "9"]) == 1
    assert main(["calc", "nonsense"]) == 1
    assert main(["figure", "fig99"]) == 1
    assert main(["figure", "fig4a", "--override", "bogus=1"]) == 1


def test_numeric_failure_exit_2(monkeypatch, capsys):
    import rdars.cli as cli
    from rdars.analytic import QuadratureError

    def boom(*_a, **_k):
        raise QuadratureError("did not converge")

    monkeypatch.setattr(cli, "ergodic_rate_gamma", boom)
    assert main(["calc", "gamma-fit", "--mean", "2", "--second-moment", "6"]) == 2
    assert "numeric failure" in capsys.readouterr().err


def test_validate(tmp_path, capsys):
    good = tmp_path / "good.toml"
    good.write_text("[geometry]\nrdars_elements = 64\n")
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text("[geometry]\nrdars_elements = 4\n[rdars]\nconnected = 9\n")
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "rdars.connected" in err and "geometry.rdars_elements" in err
    assert main(["validate", str(tmp_path / "missing.toml")]) == 1


def test_figure_writes_csv_and_sidecar(tmp_path, capsys):
    out = tmp_path / "f.csv"
    rc = main(["figure", "fig7", "--override", "n_trials=200", "--override", "values=[0, 5]",
               "--out", str(out), "--seed", "11"])
    assert rc == 0
    raw = out.read_bytes()
    assert raw.decode("utf-8").splitlines()[0] == ",".join(RESULT_COLUMNS)
    rows = read_csv(out)
    assert {r["provenance"] for r in rows} == {"monte-carlo", "closed-form"}
    assert {float(r["axis_value"]) for r in rows} == {0.0, 5.0}
    side = json.loads((tmp_path / "f.csv.json").read_text())
    for key in ("scenario", "seed", "tool_version", "timestamp", "git_describe", "wall_time_s"):
        assert key in side
    assert side["seed"] == 11


def test_fig3_table(tmp_path, capsys):
    out = tmp_path / "f3.csv"
    assert main(["figure", "fig3", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 50 * 4
    assert {r["system"] for r in rows} == {"RDARS", "RIS", "DAS", "W.O. RDARS"}
