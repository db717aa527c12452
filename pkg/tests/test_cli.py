import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qbm_coherence import cli
from qbm_coherence.cli import (EXIT_CONFIG, EXIT_NO_CROSSING, EXIT_NUMERIC, EXIT_OK, RunConfig, Table, main,
                               read_table, write_table)
from qbm_coherence.errors import QuadratureError

GOLDEN = Path(__file__).parent / "golden" / "sudden_death_criterion.csv"
RELAX = ["--model", "srt", "--tau", repr(1 / 6)]


def run(tmp_path, *args, fmt="csv"):
    out = tmp_path / f"out.{fmt}"
    rc = main([*args, "--out", str(out), "--format", fmt])
    return rc, (read_table(out) if out.exists() else None)


def column(table, name):
    return np.array([row[table.columns.index(name)] for row in table.rows])


# -- kinetics -----------------------------------------------------------------

def test_kinetics_defaults_first_row(tmp_path):
    rc, table = run(tmp_path, "kinetics", "--samples", "8")
    assert rc == EXIT_OK
    assert table.columns == ["t", "G", "Gdot", "s", "sdot", "v2", "lambda_bar"]
    t, G, s = table.rows[0][0], table.rows[0][1], table.rows[0][3]
    assert (t, G, s) == (0.0, 0.0, 0.0)
    # strict Ohmic friction: v2 is undefined and flagged
    assert math.isnan(table.rows[0][5]) and "cutoff" in table.meta["note"]


def test_kinetics_diffusive_slope(tmp_path):
    rc, table = run(tmp_path, "kinetics", "--temp", "1.5", "--tmax", "400", "--samples", "20")
    assert rc == EXIT_OK
    t, s = column(table, "t"), column(table, "s")
    slope = (s[-1] - s[-2]) / (t[-1] - t[-2])
    assert slope == pytest.approx(2 * 1.5, rel=0.01)


def test_kinetics_memoryless_limit(tmp_path):
    _, ohm = run(tmp_path, "kinetics", "--temp", "0.4", "--samples", "16")
    _, srt = run(tmp_path, "kinetics", "--model", "srt", "--tau", "1e-7", "--temp", "0.4", "--samples", "16")
    for name in ("G", "Gdot", "s", "sdot"):
        assert np.allclose(column(srt, name), column(ohm, name), rtol=1e-4, atol=1e-12)
    assert np.all(np.isfinite(column(srt, "v2")))


def test_kinetics_parallel_matches_serial(tmp_path):
    _, a = run(tmp_path, "kinetics", *RELAX, "--samples", "12")
    _, b = run(tmp_path, "kinetics", *RELAX, "--samples", "12", "--workers", "2")
    assert a.rows == b.rows
    assert a.meta["config_sha256"] == b.meta["config_sha256"]


# -- coherence ------------------------------------------------------------------

def test_coherence_curve(tmp_path):
    rc, table = run(tmp_path, "coherence", "--temp", "1", "--sigma", "1", "--dist", "3",
                    "--tmax", "1e6", "--samples", "40")
    assert rc == EXIT_OK
    a = column(table, "a")
    assert a[0] == 1.0
    assert np.all(np.diff(a) < 0)
    assert a[-1] == pytest.approx(math.exp(-9 / 4), abs=1e-6)
    assert table.meta["asymptote"] == pytest.approx(math.exp(-9 / 4))


def test_coherence_rejects_oscillator(tmp_path, capsys):
    rc, _ = run(tmp_path, "coherence", "--model", "oscillator", "--omega0", "1")
    assert rc == EXIT_CONFIG
    assert "free-particle" in capsys.readouterr().err


# -- criterion ------------------------------------------------------------------

def test_criterion_first_sample_is_closed_form(tmp_path):
    rc, table = run(tmp_path, "criterion", *RELAX, "--sigma", "0.8", "--tmax", "50")
    assert rc in (EXIT_OK, EXIT_NO_CROSSING)
    assert table.rows[0][1] == pytest.approx(table.meta["C0_closed_form"], rel=1e-8)


def test_criterion_crossing_independent_of_separation(tmp_path):
    _, a = run(tmp_path, "criterion", *RELAX, "--sigma", "2.7", "--dist", "1")
    _, b = run(tmp_path, "criterion", *RELAX, "--sigma", "2.7", "--dist", "9")
    assert a.meta["crossing"]["t_star"] == b.meta["crossing"]["t_star"]


def test_criterion_without_crossing_exit_code(tmp_path):
    rc, table = run(tmp_path, "criterion", *RELAX, "--sigma", "30", "--tmax", "5")
    assert rc == EXIT_NO_CROSSING
    assert table.meta["crossing"] is None


def test_criterion_divergent_bath_is_numeric_failure(tmp_path):
    rc, _ = run(tmp_path, "criterion", "--model", "ohmic")
    assert rc == EXIT_NUMERIC


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise QuadratureError("forced", achieved=1.0, panels=3)
    monkeypatch.setitem(cli.COMMANDS, "kinetics", boom)
    assert main(["kinetics"]) == EXIT_NUMERIC


def test_sudden_death_golden_regression(tmp_path):
    golden = read_table(GOLDEN)
    rc, table = run(tmp_path, "criterion", *RELAX, "--calibrate")
    assert rc == EXIT_OK
    assert table.meta["config_sha256"] == golden.meta["config_sha256"]
    assert table.meta["sigma"] == pytest.approx(golden.meta["sigma"], rel=1e-9)
    assert table.meta["crossing"]["t_star"] == pytest.approx(golden.meta["crossing"]["t_star"], rel=1e-9)
    assert np.allclose(np.array(table.rows), np.array(golden.rows), rtol=1e-9, atol=1e-12)
    assert abs(table.meta["crossing"]["t_star"] - 6.0) <= 0.5


# -- distributions -----------------------------------------------------------------

def test_wigner_dump_integral_and_axes(tmp_path):
    rc, table = run(tmp_path, "wigner", *RELAX, "--time", "1", "--grid", "24x7")
    assert rc == EXIT_OK
    assert table.meta["integral"] == pytest.approx(1.0, abs=1e-3)
    assert set(table.meta["axes"]) == {"q1", "p1", "q2", "p2"}
    assert len(table.rows) == 24 ** 4


def test_wigner_dump_exchange_symmetric(tmp_path):
    _, table = run(tmp_path, "wigner", *RELAX, "--time", "0.7", "--grid", "12")
    W = column(table, "W").reshape(12, 12, 12, 12)
    assert np.allclose(W, W.transpose(2, 3, 0, 1), rtol=1e-12, atol=0)


def test_wigner_slice_peaks_at_packet_centres(tmp_path):
    rc, table = run(tmp_path, "wigner", *RELAX, "--time", "0", "--grid", "64x6", "--sigma", "0.5",
                    "--dist", "4", "--slice", "p1=0,p2=0", fmt="json")
    assert rc == EXIT_OK
    assert table.columns == ["q1", "q2", "W"]
    # the 4-d grid is above the cap, only the slice is evaluated
    assert table.meta["integral"] is None and table.meta["slice"] == {"p1": 0.0, "p2": 0.0}
    q1, q2, W = (column(table, c) for c in ("q1", "q2", "W"))
    spacing = np.diff(np.unique(q1))[0]
    top = np.argsort(W)[-2:]
    assert sorted(zip(q1[top], q2[top])) == [pytest.approx((-2, 2), abs=spacing), pytest.approx((2, -2), abs=spacing)]


def test_wigner_grid_cap(tmp_path, capsys):
    rc, _ = run(tmp_path, "wigner", *RELAX, "--grid", "64")
    assert rc == EXIT_CONFIG
    assert "max_points" in capsys.readouterr().err


def test_probability_normalised(tmp_path):
    rc, table = run(tmp_path, "probability", *RELAX, "--time", "2", "--grid", "96x8")
    assert rc == EXIT_OK
    assert table.meta["integral"] == pytest.approx(1.0, abs=1e-6)


def test_probability_is_marginal_of_wigner_dump(tmp_path):
    n = 24
    _, W = run(tmp_path, "wigner", *RELAX, "--time", "1", "--grid", f"{n}x8")
    _, P = run(tmp_path, "probability", *RELAX, "--time", "1", "--grid", f"{n}x8")
    p1 = np.unique(column(W, "p1"))
    grid = column(W, "W").reshape(n, n, n, n)
    marginal = np.trapezoid(np.trapezoid(grid, p1, axis=3), p1, axis=1)
    dens = column(P, "P").reshape(n, n)
    assert np.allclose(np.unique(column(W, "q1")), np.unique(column(P, "q1")))
    assert np.max(np.abs(marginal - dens)) <= 1e-4 * dens.max()


def test_probability_fringe_period(tmp_path):
    from qbm_coherence.bath import BathModel, BathSpec, kinetic_coefficients
    from qbm_coherence.state import SuperpositionSpec, covariance_coefficients
    from qbm_coherence.wigner import fringe_wavelength
    kin = kinetic_coefficients(BathSpec(BathModel.SINGLE_RELAXATION_FREE, tau=1 / 6), 1.0)
    state = SuperpositionSpec(1.0, 4.0)
    cov = covariance_coefficients(kin, state)
    expected = 2 * math.pi * 4 * cov.a11 * state.sigma ** 2 / (kin.hbar * kin.G * state.d)
    assert fringe_wavelength(cov, kin, state) == pytest.approx(expected, rel=1e-14)


# -- configuration and serialization ----------------------------------------------

def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": "srt", "tau": 0.5, "samples": 5, "temp": 0.2}))
    _, table = run(tmp_path, "kinetics", "--config", str(cfg), "--temp", "0.9")
    assert table.meta["config"]["tau"] == 0.5
    assert table.meta["config"]["temp"] == 0.9
    assert len(table.rows) == 5


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{"model": "srt", "tua": 0.5}')
    assert main(["kinetics", "--config", str(cfg)]) == EXIT_CONFIG
    assert "'tua'" in capsys.readouterr().err


def test_config_syntax_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text('{\n  "model": "srt",\n  "tau": ,\n}')
    assert main(["kinetics", "--config", str(cfg)]) == EXIT_CONFIG
    assert f"{cfg}:3:" in capsys.readouterr().err


@pytest.mark.parametrize("doc", ['{"samples": 2.5}', '{"calibrate": "yes"}', '{"tau": {"a": 1}}', '[1, 2]',
                                 '{"model": "quartic"}', '{"zeta": 1, "gamma": 2}', '{"zeta": -1}',
                                 '{"sigma": 0}', '{"spacing": "cubic"}', '{"grid": "ax3"}'])
def test_config_invalid_values(tmp_path, doc):
    cfg = tmp_path / "run.json"
    cfg.write_text(doc)
    assert main(["coherence", "--config", str(cfg), "--samples", "4"]) == EXIT_CONFIG


def test_gamma_sets_friction():
    cfg = RunConfig.from_mapping({"gamma": 2.0, "mass": 3.0})
    assert cfg.bath().zeta == 6.0


def test_digest_ignores_output_settings():
    a = RunConfig.from_mapping({"tau": 0.3, "out": "x.csv", "format": "json", "workers": 4})
    b = RunConfig.from_mapping({"tau": 0.3})
    c = RunConfig.from_mapping({"tau": 0.31})
    assert a.digest() == b.digest() != c.digest()


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_table_round_trip(fmt, tmp_path):
    table = Table(["t", "v2"], [[0.0, math.nan], [1.5, 2.25e-300], [1e300, -3.0]], {"tool": "x", "n": 3})
    path = tmp_path / f"t.{fmt}"
    with open(path, "w") as fh:
        write_table(table, fmt, fh)
    back = read_table(path)
    assert back.columns == table.columns
    assert math.isnan(back.rows[0][1])
    assert back.rows[1:] == table.rows[1:]
    assert back.meta["n"] == 3 and back.meta["columns"]["v2"]


def test_every_command_emits_parseable_provenance(tmp_path):
    commands = [["kinetics", "--samples", "4"], ["coherence", "--samples", "4"],
                ["criterion", *RELAX, "--samples", "16", "--sigma", "2.7"],
                ["wigner", *RELAX, "--grid", "8"], ["probability", *RELAX, "--grid", "8"]]
    for args in commands:
        for fmt in ("csv", "json"):
            _, table = run(tmp_path, *args, fmt=fmt)
            assert table.meta["tool"].startswith("qbm-coherence ")
            assert len(table.meta["config_sha256"]) == 64
            assert "hbar=1" in table.meta["units"]
            assert list(table.meta["columns"]) == table.columns


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "qbm_coherence", "kinetics", "--samples", "3", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert set(doc) == {"meta", "data"} and len(doc["data"]) == 3
