"""
Tests for the command-line interface.
"""

import os
import tempfile

import numpy as np
import pytest

from cavity_qubit_analyzer.cli.main import dispatch
from cavity_qubit_analyzer.data.input import CsvInput, ingest_csv, write_series
from cavity_qubit_analyzer.data.report import ReportGenerator
from cavity_qubit_analyzer.data.units import parse_range, parse_time
from cavity_qubit_analyzer.emitter.kinetics import ThreeLevelRates, g2_analytic
from cavity_qubit_analyzer.emitter.photon_stream import read_timestamps, write_timestamps
from cavity_qubit_analyzer.fitting.models import get_model
from cavity_qubit_analyzer.spin.pulses import DecayEnvelope, cpmg_signal
from cavity_qubit_analyzer.utils.config import RunConfig


@pytest.fixture
def workdir():
    """Temporary directory for CLI inputs and outputs."""
    with tempfile.TemporaryDirectory() as directory:
        yield directory


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, ReportGenerator.parse(out.out), out.err


def test_purcell_lifetimes(capsys):
    code, report, _ = run(
        capsys, "purcell", "lifetimes", "--tau-on", "5.3", "--tau-off", "15.7",
        "--tau-dark", "75", "--alpha", "0.053",
    )
    assert code == 0
    assert 47.5 <= float(report["F"]) <= 48.1
    assert float(report["emission_gain"]) == pytest.approx(15.7 / 5.3)


def test_purcell_lifetimes_units_and_default_alpha(capsys):
    code, report, _ = run(
        capsys, "purcell", "lifetimes", "--tau-on", "0.0053us", "--tau-off", "15.7ns",
        "--tau-dark", "75",
    )
    assert code == 0
    assert 47.5 <= float(report["F"]) <= 48.1


def test_purcell_other_routes(capsys):
    code, report, _ = run(capsys, "purcell", "intensity", "--i-on", "53", "--i-off", "1")
    assert code == 0 and float(report["F"]) == 53.0

    code, report, _ = run(capsys, "purcell", "dw", "--beta", "0.75")
    assert code == 0 and float(report["F"]) == pytest.approx(0.75 * 0.947 / (0.053 * 0.25))

    code, report, _ = run(
        capsys, "purcell", "cavity", "--q", "5100", "--volume", "1", "--wavelength", "1.078",
        "--index", "2.6", "--volume-units", "cubic-wavelengths",
    )
    assert code == 0 and float(report["F"]) == pytest.approx(3 * 5100 / (4 * np.pi**2) + 1)


def test_purcell_consistency(capsys):
    code, report, _ = run(
        capsys, "purcell", "consistency", "--i-on", "53", "--i-off", "1", "--beta", "0.2",
    )
    assert code == 0
    assert set(report) >= {"F_intensity", "F_dw", "spread", "threshold", "flagged"}
    assert report["flagged"] == "true"


def test_domain_error_exit_code(capsys):
    code, _, err = run(
        capsys, "purcell", "lifetimes", "--tau-on", "20", "--tau-off", "15.7", "--tau-dark", "75",
    )
    assert code == 1
    assert "Error:" in err


def test_dw_invert_and_gain(capsys):
    code, report, _ = run(capsys, "dw-invert", "--f", "53", "--alpha", "0.053")
    assert code == 0 and 0.74 <= float(report["beta"]) <= 0.755

    code, report, _ = run(capsys, "entanglement-gain", "--beta", "0.75", "--alpha", "0.053")
    assert code == 0 and 199 <= float(report["gain"]) <= 201.5

    code, report, _ = run(capsys, "lifetime-limit", "--tau", "15.7")
    assert code == 0 and float(report["linewidth_mhz"]) == pytest.approx(10.137, abs=1e-3)


def test_odmr_fan(capsys, workdir):
    out = os.path.join(workdir, "fan.csv")
    code, report, _ = run(
        capsys, "odmr", "--preset", "nanobeam-hh", "--bz", "0", "--b-sweep", "0,200,10",
        "--out", out,
    )
    assert code == 0
    assert float(report["slope_plus_mhz_per_g"]) == pytest.approx(2.8, abs=1e-6)
    assert float(report["slope_minus_mhz_per_g"]) == pytest.approx(-2.8, abs=1e-6)
    table = CsvInput(out).read()
    assert table.names == ["bz_G", "f_minus_MHz", "f_plus_MHz"]
    assert table.n_rows == 21


def test_odmr_spectrum(capsys, workdir):
    out = os.path.join(workdir, "odmr.csv")
    code, report, _ = run(
        capsys, "odmr", "--preset", "bulk-hh", "--bz", "50G", "--linewidth", "5MHz",
        "--sign", "-1", "--out", out,
    )
    assert code == 0
    assert float(report["f_plus_mhz"]) == pytest.approx(1336 + 140)
    table = CsvInput(out).read()
    assert table.column("contrast").min() == pytest.approx(-1.0, abs=0.01)


def test_g2_analytic(capsys, workdir):
    out = os.path.join(workdir, "g2.csv")
    code, report, _ = run(capsys, "g2", "analytic", "--tau-max", "300", "--out", out)
    assert code == 0
    assert float(report["amp_anti"]) == pytest.approx(1 + float(report["amp_bunch"]))
    table = CsvInput(out).read()
    assert table.names == ["tau_ns", "g2"]
    assert table.column("g2")[0] == pytest.approx(0.0, abs=1e-12)


def test_g2_montecarlo_round_trip(capsys, workdir):
    """Simulated timestamps correlate to the same histogram after export."""
    stamps = os.path.join(workdir, "stamps.csv")
    first = os.path.join(workdir, "first.csv")
    second = os.path.join(workdir, "second.csv")
    code, report, _ = run(
        capsys, "g2", "montecarlo", "--duration", "2e5", "--seed", "3", "--bin-width", "2",
        "--max-tau", "100", "--out", first, "--timestamps-out", stamps,
    )
    assert code == 0
    assert report["seed"] == "3"
    code, _, _ = run(
        capsys, "g2", "correlate", "--input", stamps, "--bin-width", "2", "--max-tau", "100",
        "--out", second,
    )
    assert code == 0
    assert np.array_equal(CsvInput(first).read().column("g2"), CsvInput(second).read().column("g2"))


def test_g2_montecarlo_seed_determinism(capsys):
    argv = ("g2", "montecarlo", "--duration", "1e5", "--seed", "8", "--trajectories", "2")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv, "--workers", "2")
    assert first == second


def test_fit_command(capsys, workdir):
    rng = np.random.default_rng(0)
    model = get_model("exp_decay")
    x = np.linspace(0.0, 60.0, 200)
    y = model.evaluate({"amplitude": 1.0, "tau": 15.7, "offset": 0.0}, x)
    data = os.path.join(workdir, "decay.csv")
    write_series(data, x, y + rng.normal(0.0, 0.02, x.size), names=("time_ns", "counts"))
    curve = os.path.join(workdir, "curve.csv")

    code, report, _ = run(
        capsys, "fit", "--model", "exp_decay", "--input", data, "--fix", "offset=0",
        "--out", curve,
    )
    assert code == 0
    assert report["model"] == "exp_decay"
    assert report["converged"] == "true"
    assert float(report["param.tau"]) == pytest.approx(15.7, abs=0.6)
    assert "ci95.tau" in report
    assert CsvInput(curve).read().names == ["x", "y", "fit"]


def test_fit_command_no_signal_exit_code(capsys, workdir):
    data = os.path.join(workdir, "flat.csv")
    write_series(data, np.arange(10.0), np.full(10, 5.0))
    code, _, err = run(capsys, "fit", "--model", "lorentzian", "--input", data)
    assert code == 2
    assert "No signal" in err


def test_fit_command_non_convergence_exit_code(capsys, workdir):
    model = get_model("lorentzian")
    x = np.linspace(0.0, 100.0, 201)
    y = model.evaluate({"amplitude": 1.0, "center": 50.0, "fwhm": 4.0, "offset": 0.0}, x)
    data = os.path.join(workdir, "peak.csv")
    write_series(data, x, y + 0.01 * np.sin(x))
    code, report, _ = run(
        capsys, "fit", "--model", "lorentzian", "--input", data, "--max-iterations", "1",
        "--init", "center=45", "--init", "fwhm=10", "--init", "amplitude=0.5",
        "--init", "offset=0.1",
    )
    assert code == 2
    assert report["converged"] == "false"


def test_missing_input_exit_code(capsys):
    code, _, err = run(capsys, "fit", "--model", "lorentzian", "--input", "nonexistent.csv")
    assert code == 1
    assert "Error:" in err


def test_pulse_closed_form(capsys, workdir):
    out = os.path.join(workdir, "cpmg.csv")
    code, report, _ = run(
        capsys, "pulse", "cpmg", "--n-pi", "4", "--sweep", "0,30us,0.5us", "--T", "11us",
        "--n", "2", "--out", out,
    )
    assert code == 0
    assert report["kind"] == "cpmg"
    assert report["points"] == "61"
    table = CsvInput(out).read()
    assert table.names == ["t_us", "signal"]
    assert table.column("t_us")[-1] == pytest.approx(30.0)
    assert table.column("signal")[0] == 1.0


def test_pulse_monte_carlo(capsys, workdir):
    out = os.path.join(workdir, "ramsey.csv")
    argv = (
        "pulse", "ramsey", "--mc", "--detuning", "3MHz", "--noise-sigma", "0.38",
        "--sweep", "0,1000,50", "--samples", "200", "--seed", "4", "--out", out,
    )
    code, report, _ = run(capsys, *argv)
    assert code == 0
    assert float(report["max_bloch_norm"]) <= 1.0 + 1e-9
    table = CsvInput(out).read()
    assert table.names == ["t_ns", "signal", "stderr"]
    assert table.column("signal")[0] == pytest.approx(1.0)

    _, again, _ = run(capsys, *argv)
    assert again == report


def test_pulse_rabi(capsys):
    code, report, _ = run(
        capsys, "pulse", "rabi", "--rabi-frequency", "2.5", "--sweep", "0,1,0.05",
    )
    assert code == 0
    assert float(report["signal_max"]) == pytest.approx(1.0, abs=1e-3)


def test_usage_errors(capsys):
    code, _, err = run(capsys, "purcell", "lifetimes", "--tau-on", "5.3")
    assert code == 1
    assert "usage error" in err

    code, _, _ = run(capsys, "fit", "--model", "voigt", "--input", "x.csv")
    assert code == 1

    code, _, _ = run(capsys, "pulse", "ramsey", "--sweep", "0,10")
    assert code == 1

    code, _, _ = run(capsys, "fit", "--model", "lorentzian", "--input", "x.csv", "--init", "center")
    assert code == 1


def test_config_file_applies(capsys, workdir):
    config = os.path.join(workdir, "analyzer.cfg")
    with open(config, "w") as f:
        f.write("[purcell]\nalpha = 0.1\n")
    code, report, _ = run(capsys, "--config", config, "dw-invert", "--f", "10")
    assert code == 0
    assert float(report["beta"]) == pytest.approx(10 * 0.1 / (1 + 0.1 * 9))

    with open(config, "w") as f:
        f.write("[purcell]\nalfa = 0.1\n")
    code, _, err = run(capsys, "--config", config, "dw-invert", "--f", "10")
    assert code == 1
    assert "alpha" in err


def test_usage_errors_print_usage(capsys):
    code, _, err = run(capsys, "purcell", "lifetimes", "--tau-on", "5.3")
    assert code == 1
    assert err.startswith("usage: cavity-qubit-analyzer purcell lifetimes")

    code, _, err = run(capsys, "frobnicate")
    assert code == 1
    assert err.startswith("usage: cavity-qubit-analyzer")

    code, _, err = run(capsys, "dw-invert", "--f", "53", "--bogus")
    assert code == 1
    assert "usage:" in err
    assert "unrecognized arguments" in err


def test_negative_seed_is_rejected(capsys):
    code, _, err = run(capsys, "g2", "montecarlo", "--duration", "1e4", "--seed", "-1")
    assert code == 1
    assert "usage:" in err

    code, _, err = run(
        capsys, "pulse", "ramsey", "--mc", "--sweep", "0,100,10", "--samples", "10", "--seed=-3",
    )
    assert code == 1
    assert "usage:" in err


def test_odmr_rejects_non_positive_linewidth(capsys):
    code, _, err = run(capsys, "odmr", "--linewidth", "0")
    assert code == 1
    assert "Linewidth must be > 0" in err

    code, _, err = run(capsys, "odmr", "--linewidth=-5MHz", "--grid", "1300,1350,1")
    assert code == 1
    assert "Linewidth must be > 0" in err


def test_fit_command_student_t_interval(capsys, workdir):
    model = get_model("exp_decay")
    x = np.linspace(0.0, 40.0, 12)
    data = os.path.join(workdir, "short.csv")
    y = model.evaluate({"amplitude": 1.0, "tau": 10.0, "offset": 0.0}, x)
    write_series(data, x, y + 0.01 * np.cos(3 * x))
    _, normal, _ = run(capsys, "fit", "--model", "exp_decay", "--input", data)
    code, report, _ = run(
        capsys, "fit", "--model", "exp_decay", "--input", data, "--interval", "t95",
    )
    assert code == 0
    assert report["dof"] == "9"
    assert "dof" not in normal
    ratio = float(report["ci95.tau"]) / float(normal["ci95.tau"])
    assert ratio == pytest.approx(2.2621571628 / 1.96, rel=1e-6)


def assert_reingests(path):
    """The first two columns survive ingest and re-export as identical text."""
    table = CsvInput(path).read()
    x_name, y_name = table.names[:2]
    series = ingest_csv(path)
    assert np.array_equal(series.x, table.column(x_name))
    assert np.array_equal(series.y, table.column(y_name))

    copy = path + ".copy"
    write_series(copy, series.x, series.y, names=(x_name, y_name))
    with open(path) as f:
        original = [
            line.split(",")[:2] for line in f.read().splitlines() if not line.startswith("#")
        ]
    with open(copy) as f:
        again = [line.split(",") for line in f.read().splitlines()]
    assert again == original


def test_exported_csv_round_trips(capsys, workdir):
    """Every exporting command writes CSV that re-ingests bit for bit."""
    def path(name):
        return os.path.join(workdir, name)

    model = get_model("lorentzian")
    x = np.linspace(1077.0, 1079.0, 101)
    y = model.evaluate({"amplitude": 1.0, "center": 1078.0, "fwhm": 0.2, "offset": 0.1}, x)
    write_series(path("mode.csv"), x, y + 0.01 * np.sin(40 * x), names=("wavelength_nm", "counts"))

    commands = [
        ("fit.csv", ("fit", "--model", "lorentzian", "--input", path("mode.csv"))),
        ("fan.csv", ("odmr", "--b-sweep=-1.447,1.447,0.289")),
        ("odmr.csv", ("odmr", "--bz", "50G", "--linewidth", "5MHz")),
        ("g2.csv", ("g2", "analytic", "--tau-max", "200")),
        ("g2_mc.csv", ("g2", "montecarlo", "--duration", "2e5", "--seed", "5",
                       "--max-tau", "100", "--timestamps-out", path("stamps.csv"))),
        ("g2_data.csv", ("g2", "correlate", "--input", path("stamps.csv"), "--max-tau", "100")),
        ("cpmg.csv", ("pulse", "cpmg", "--n-pi", "4", "--sweep", "0,30us,0.5us", "--T", "11us",
                      "--n", "2")),
        ("rabi.csv", ("pulse", "rabi", "--rabi-frequency", "2.5", "--sweep", "0,1,0.05")),
        ("ramsey.csv", ("pulse", "ramsey", "--mc", "--detuning", "3MHz", "--noise-sigma",
                        "0.38", "--sweep", "0,1000,50", "--samples", "100", "--seed", "2")),
    ]
    for name, argv in commands:
        code, _, _ = run(capsys, *argv, "--out", path(name))
        assert code == 0, argv
        assert_reingests(path(name))

    fan = CsvInput(path("fan.csv")).read().column("bz_G")
    assert fan[0] == -1.447 and fan[-1] == 1.447

    defaults = RunConfig().emitter
    rates = ThreeLevelRates(defaults.pump, defaults.radiative, defaults.shelve, defaults.deshelve)
    g2 = CsvInput(path("g2.csv")).read()
    assert np.array_equal(g2.column("g2"), g2_analytic(rates, g2.column("tau_ns")))

    sweep = parse_range("0,30us,0.5us", parse_time)
    expected = cpmg_signal(4, sweep, DecayEnvelope(11000.0, 2.0, 1.0, 0.0))
    assert np.array_equal(CsvInput(path("cpmg.csv")).read().column("signal"), expected)

    record = read_timestamps(path("stamps.csv"))
    write_timestamps(record, path("stamps_again.csv"))
    with open(path("stamps.csv")) as f, open(path("stamps_again.csv")) as g:
        assert f.read() == g.read()
