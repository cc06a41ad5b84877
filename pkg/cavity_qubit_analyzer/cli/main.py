"""
Command-line interface for cavity qubit analyzer.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Dict, List, NoReturn, Optional, Sequence, Tuple

import numpy as np

from cavity_qubit_analyzer import __version__
from cavity_qubit_analyzer.cavity.consistency import consistency_report
from cavity_qubit_analyzer.cavity.purcell import (
    CavityParams,
    EmissionBudget,
    dw_on_resonance,
    emission_events_gain,
    entanglement_rate_gain,
    lifetime_limited_linewidth,
    purcell_from_cavity,
    purcell_from_dw,
    purcell_from_intensity,
    purcell_from_lifetimes,
)
from cavity_qubit_analyzer.data.input import ingest_csv, write_series
from cavity_qubit_analyzer.data.report import ReportGenerator
from cavity_qubit_analyzer.data.units import parse_field, parse_frequency, parse_range, parse_time
from cavity_qubit_analyzer.emitter.kinetics import (
    ThreeLevelRates,
    g2_analytic,
    g2_fit_parameters,
    steady_state,
)
from cavity_qubit_analyzer.emitter.photon_stream import (
    CorrelationHistogram,
    PhotonRecord,
    correlate_many,
    read_timestamps,
    simulate_ensemble,
    write_timestamps,
)
from cavity_qubit_analyzer.errors import (
    AnalyzerError,
    DomainError,
    FitError,
    InvalidParameterError,
    UsageError,
)
from cavity_qubit_analyzer.fitting.engine import FitOptions, FitResult, fit
from cavity_qubit_analyzer.fitting.models import MODEL_IDS, get_model
from cavity_qubit_analyzer.spin.hamiltonian import (
    PRESETS,
    SpinSystem,
    odmr_spectrum,
    transition_frequencies,
    zeeman_fan,
)
from cavity_qubit_analyzer.spin.pulses import (
    DecayEnvelope,
    SequenceSpec,
    cpmg_signal,
    rabi_signal,
    ramsey_signal,
    simulate_sequence_mc,
)
from cavity_qubit_analyzer.utils.config import RunConfig, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FIT = 2


class ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}", usage=self.format_usage())


def _time(text: str) -> float:
    """Time in ns; accepts unit suffixes and 'inf'."""
    if text.strip().lower() in ("inf", "infinity"):
        return float("inf")
    return parse_time(text)


def _time_range(text: str) -> np.ndarray:
    return parse_range(text, parse_time)


def _frequency_range(text: str) -> np.ndarray:
    return parse_range(text, parse_frequency)


def _field_range(text: str) -> np.ndarray:
    return parse_range(text, parse_field)


def _float_range(text: str) -> np.ndarray:
    return parse_range(text, float)


def _seed(text: str) -> int:
    seed = int(text)
    if seed < 0:
        raise UsageError(f"Seed must be non-negative, got {seed}")
    return seed


def _assignment(text: str) -> Tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"Expected name=value, got {text!r}")
    return name.strip(), float(value)


def _emit(report: ReportGenerator) -> None:
    print(report.get_report(include_headers=False), end="")


def _add_rate_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pump", type=float, help="ground->excited rate (1/ns)")
    parser.add_argument("--radiative", type=float, help="excited->ground rate (1/ns)")
    parser.add_argument("--shelve", type=float, help="excited->dark rate (1/ns)")
    parser.add_argument("--deshelve", type=float, help="dark->ground rate (1/ns)")


def _rates(args: argparse.Namespace, config: RunConfig) -> ThreeLevelRates:
    return ThreeLevelRates(
        pump=config.resolve("emitter", "pump", args.pump),
        radiative=config.resolve("emitter", "radiative", args.radiative),
        shelve=config.resolve("emitter", "shelve", args.shelve),
        deshelve=config.resolve("emitter", "deshelve", args.deshelve),
    )


def _add_fit_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", "-i", required=True, help="CSV file with x, y[, sigma]")
    parser.add_argument("--x-col", help="x column name (default: first)")
    parser.add_argument("--y-col", help="y column name (default: second)")
    parser.add_argument("--sigma-col", help="uncertainty column name")
    parser.add_argument(
        "--init", type=_assignment, action="append", default=[], metavar="NAME=VALUE",
        help="starting value (repeatable)",
    )
    parser.add_argument(
        "--fix", type=_assignment, action="append", default=[], metavar="NAME=VALUE",
        help="hold a parameter fixed (repeatable)",
    )
    parser.add_argument(
        "--interval", choices=("ci95", "t95", "sd"), help="reported interval convention"
    )
    parser.add_argument("--max-iterations", type=int, help="iteration limit")
    parser.add_argument("--out", "-o", help="write x, y and the fitted curve to this CSV")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = ArgumentParser(
        prog="cavity-qubit-analyzer",
        description="Cavity-coupled color-center qubit analyzer",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="config file (default: $CAVITY_QUBIT_CONFIG)")
    parser.add_argument(
        "--verbose", "-v", action="count", default=0, help="log progress (-vv for debug)"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    # fit
    fit_parser = commands.add_parser("fit", help="fit a model to CSV data")
    fit_parser.add_argument("--model", "-m", required=True, choices=MODEL_IDS)
    fit_parser.add_argument("--n-peaks", type=int, default=1, help="peaks for lorentzian/gaussian")
    _add_fit_arguments(fit_parser)

    # purcell
    purcell = commands.add_parser("purcell", help="Purcell factor from one route")
    routes = purcell.add_subparsers(dest="route", metavar="ROUTE")
    routes.required = True

    lifetimes = routes.add_parser("lifetimes", help="lifetime route with dark-state correction")
    lifetimes.add_argument("--tau-on", type=_time, required=True)
    lifetimes.add_argument("--tau-off", type=_time, required=True)
    lifetimes.add_argument("--tau-dark", type=_time, default=float("inf"))
    lifetimes.add_argument("--alpha", type=float)

    intensity = routes.add_parser("intensity", help="ZPL intensity ratio route")
    intensity.add_argument("--i-on", type=float, required=True)
    intensity.add_argument("--i-off", type=float, required=True)

    cavity = routes.add_parser("cavity", help="cavity parameter route")
    cavity.add_argument("--q", type=float, required=True, help="quality factor")
    cavity.add_argument("--volume", type=float, required=True, help="mode volume")
    cavity.add_argument("--wavelength", type=float, required=True, help="wavelength (um)")
    cavity.add_argument("--index", type=float, required=True, help="refractive index")
    cavity.add_argument("--overlap", type=float, default=1.0, help="spatial overlap F1")
    cavity.add_argument("--spectral-match", type=float, default=1.0, help="spectral match F2")
    cavity.add_argument(
        "--volume-units", choices=("um3", "cubic-wavelengths"), default="um3",
        help="unit of --volume",
    )

    dw = routes.add_parser("dw", help="Debye-Waller route")
    dw.add_argument("--alpha", type=float)
    dw.add_argument("--beta", type=float, required=True)

    consistency = routes.add_parser("consistency", help="compare all available routes")
    consistency.add_argument("--alpha", type=float)
    consistency.add_argument("--beta", type=float)
    consistency.add_argument("--i-on", type=float)
    consistency.add_argument("--i-off", type=float)
    consistency.add_argument("--tau-on", type=_time)
    consistency.add_argument("--tau-off", type=_time)
    consistency.add_argument("--tau-dark", type=_time)
    consistency.add_argument("--f-external", type=float, help="F from another measurement")
    consistency.add_argument("--threshold", type=float, help="relative spread that is flagged")

    invert = commands.add_parser("dw-invert", help="on-resonance Debye-Waller factor from F")
    invert.add_argument("--f", type=float, required=True, dest="purcell")
    invert.add_argument("--alpha", type=float)

    gain = commands.add_parser("entanglement-gain", help="two-photon entanglement rate gain")
    gain.add_argument("--beta", type=float, required=True)
    gain.add_argument("--alpha", type=float)

    limit = commands.add_parser("lifetime-limit", help="transform-limited linewidth")
    limit.add_argument("--tau", type=_time, required=True, help="excited-state lifetime")

    # odmr
    odmr = commands.add_parser("odmr", help="ODMR spectrum or Zeeman fan")
    odmr.add_argument("--preset", choices=sorted(PRESETS), default="nanobeam-hh")
    odmr.add_argument("--d", type=parse_frequency, help="override D")
    odmr.add_argument("--e", type=parse_frequency, help="transverse splitting E")
    odmr.add_argument("--gamma", type=float, help="gyromagnetic ratio (MHz/G)")
    odmr.add_argument("--bx", type=parse_field, default=0.0)
    odmr.add_argument("--by", type=parse_field, default=0.0)
    odmr.add_argument("--bz", type=parse_field, default=0.0)
    odmr.add_argument("--b-sweep", type=_field_range, help="Bz sweep 'min,max,step' in G")
    odmr.add_argument("--linewidth", type=parse_frequency, help="Lorentzian FWHM")
    odmr.add_argument("--grid", type=_frequency_range, help="frequency grid 'min,max,step'")
    odmr.add_argument("--contrast", type=float, default=1.0, help="contrast per line")
    odmr.add_argument("--sign", type=int, choices=(1, -1), default=1, help="contrast sign")
    odmr.add_argument("--out", "-o", help="spectrum (or fan table with --b-sweep) CSV")

    # g2
    g2 = commands.add_parser("g2", help="second-order correlation")
    g2_modes = g2.add_subparsers(dest="mode", metavar="MODE")
    g2_modes.required = True

    analytic = g2_modes.add_parser("analytic", help="rate-equation g2 curve")
    _add_rate_arguments(analytic)
    analytic.add_argument("--tau-max", type=_time, default=500.0)
    analytic.add_argument("--step", type=_time, default=1.0)
    analytic.add_argument("--out", "-o", help="curve CSV (tau_ns, g2)")

    montecarlo = g2_modes.add_parser("montecarlo", help="simulate photons and correlate")
    _add_rate_arguments(montecarlo)
    montecarlo.add_argument("--duration", type=_time, default=1e7, help="per trajectory")
    montecarlo.add_argument("--efficiency", type=float, default=1.0)
    montecarlo.add_argument("--trajectories", type=int, default=1)
    montecarlo.add_argument("--workers", type=int)
    montecarlo.add_argument("--seed", type=_seed)
    montecarlo.add_argument("--bin-width", type=_time, default=1.0)
    montecarlo.add_argument("--max-tau", type=_time, default=500.0)
    montecarlo.add_argument("--out", "-o", help="histogram CSV (tau_ns, g2, stderr)")
    montecarlo.add_argument(
        "--timestamps-out", help="timestamp CSV; several trajectories get _<index> suffixes"
    )

    correlate_parser = g2_modes.add_parser("correlate", help="correlate timestamp files")
    correlate_parser.add_argument("--input", "-i", nargs="+", required=True)
    correlate_parser.add_argument("--bin-width", type=_time, default=1.0)
    correlate_parser.add_argument("--max-tau", type=_time, default=500.0)
    correlate_parser.add_argument("--out", "-o", help="histogram CSV (tau_ns, g2, stderr)")

    g2_fit = g2_modes.add_parser("fit", help="fit the two-exponential g2 model")
    _add_fit_arguments(g2_fit)

    # pulse
    pulse = commands.add_parser("pulse", help="pulse-sequence signals")
    kinds = pulse.add_subparsers(dest="kind", metavar="KIND")
    kinds.required = True
    for kind in ("rabi", "ramsey", "hahn", "cpmg"):
        sub = kinds.add_parser(kind, help=f"{kind} signal")
        if kind == "rabi":
            sub.add_argument("--rabi-frequency", type=parse_frequency, required=True,
                             help="Rabi frequency at unit amplitude")
            sub.add_argument("--sweep", type=_float_range, required=True,
                             help="amplitude (or power) 'min,max,step'")
            sub.add_argument("--pulse-length", type=_time, default=400.0)
            sub.add_argument("--sweep-mode", choices=("amplitude", "power"), default="amplitude")
        else:
            sub.add_argument("--sweep", type=_time_range, required=True,
                             help="free-evolution time 'min,max,step'")
        if kind == "ramsey":
            sub.add_argument("--detuning", type=parse_frequency, default=0.0)
            sub.add_argument("--phase", type=float, default=0.0, help="rad")
        if kind == "cpmg":
            sub.add_argument("--n-pi", type=int, required=True)
        if kind in ("hahn", "cpmg"):
            sub.add_argument("--phases", choices=("cpmg", "cp"), default="cpmg")
        if kind == "hahn":
            sub.add_argument("--mod-frequency", type=parse_frequency,
                             help="sin^2 modulation frequency")
            sub.add_argument("--mod-phase", type=float, default=0.0)
        sub.add_argument("--T", type=_time, default=float("inf"), dest="T",
                         help="decay time (T2*, T2)")
        sub.add_argument("--n", type=float, default=1.0, dest="stretch", help="stretch exponent")
        sub.add_argument("--amplitude", type=float, default=1.0)
        sub.add_argument("--offset", type=float, default=0.0)
        sub.add_argument("--mc", action="store_true", help="Monte Carlo Bloch simulation")
        sub.add_argument("--noise-sigma", type=parse_frequency, default=0.0,
                         help="quasi-static detuning noise (MC)")
        sub.add_argument("--samples", type=int, default=1000, help="MC samples")
        sub.add_argument("--t2-white", type=_time, help="white-noise coherence time (MC)")
        sub.add_argument("--t1", type=_time, default=float("inf"), help="relaxation time (MC)")
        sub.add_argument("--seed", type=_seed)
        sub.add_argument("--time-unit", choices=("ns", "us"),
                         help="unit of the time column in --out")
        sub.add_argument("--out", "-o", help="signal CSV")

    return parser.parse_args(argv)


def run_fit(args: argparse.Namespace, config: RunConfig, model_id: str, n_peaks: int = 1) -> int:
    """Fit a registered model to a CSV file."""
    data = ingest_csv(args.input, args.x_col, args.y_col, args.sigma_col)
    model = get_model(model_id, n_peaks)
    options = FitOptions(
        max_iterations=config.resolve("fit", "max_iterations", args.max_iterations),
        interval=config.resolve("fit", "interval", args.interval),
        fixed=dict(args.fix),
    )
    result = fit(model, data, dict(args.init) or None, options)
    report = result.to_report()
    report.set_header("input", str(args.input))
    _emit(report)
    if args.out:
        curve = model.evaluate(result.params, data.x)
        write_series(
            args.out, data.x, np.stack([data.y, curve]), names=("x", "y", "fit"),
            comments=[f"model={model_id}"],
        )
    return _fit_exit(result)


def _fit_exit(result: FitResult) -> int:
    if not result.converged:
        print(f"Error: {result.model_id} fit did not converge", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def run_purcell(args: argparse.Namespace, config: RunConfig) -> int:
    """Evaluate one Purcell route or the consistency report."""
    report = ReportGenerator()
    alpha = config.resolve("purcell", "alpha", getattr(args, "alpha", None))
    if args.route == "lifetimes":
        report.add("F", purcell_from_lifetimes(args.tau_on, args.tau_off, args.tau_dark, alpha))
        report.add("emission_gain", emission_events_gain(args.tau_off, args.tau_on))
    elif args.route == "intensity":
        report.add("F", purcell_from_intensity(args.i_on, args.i_off))
    elif args.route == "cavity":
        cavity = CavityParams(
            quality_factor=args.q,
            mode_volume=args.volume,
            wavelength=args.wavelength,
            index=args.index,
            overlap=args.overlap,
            spectral_match=args.spectral_match,
            volume_in_cubic_wavelengths=args.volume_units == "cubic-wavelengths",
        )
        report.add("F", purcell_from_cavity(cavity))
    elif args.route == "dw":
        report.add("F", purcell_from_dw(alpha, args.beta))
    else:
        budget = EmissionBudget(
            alpha=alpha,
            beta=args.beta,
            intensity_off=args.i_off,
            intensity_on=args.i_on,
            tau_off=args.tau_off,
            tau_on=args.tau_on,
            tau_dark=args.tau_dark if args.tau_dark is not None else float("inf"),
            f_external=args.f_external,
        )
        threshold = config.resolve("purcell", "consistency_threshold", args.threshold)
        report = consistency_report(budget, threshold).to_report()
    _emit(report)
    return EXIT_OK


def run_dw_invert(args: argparse.Namespace, config: RunConfig) -> int:
    alpha = config.resolve("purcell", "alpha", args.alpha)
    report = ReportGenerator()
    report.add("beta", dw_on_resonance(args.purcell, alpha))
    _emit(report)
    return EXIT_OK


def run_entanglement_gain(args: argparse.Namespace, config: RunConfig) -> int:
    alpha = config.resolve("purcell", "alpha", args.alpha)
    report = ReportGenerator()
    report.add("gain", entanglement_rate_gain(args.beta, alpha))
    _emit(report)
    return EXIT_OK


def run_lifetime_limit(args: argparse.Namespace, config: RunConfig) -> int:
    report = ReportGenerator()
    report.add("linewidth_mhz", lifetime_limited_linewidth(args.tau))
    _emit(report)
    return EXIT_OK


def run_odmr(args: argparse.Namespace, config: RunConfig) -> int:
    """ODMR transitions, spectrum and optional Zeeman fan."""
    spin = config.spin
    system = SpinSystem(
        d=args.d if args.d is not None else spin.preset_d(args.preset),
        e=config.resolve("spin", "e", args.e),
        gamma=config.resolve("spin", "gamma", args.gamma),
        b_field=(args.bx, args.by, args.bz),
    )
    linewidth = config.resolve("spin", "linewidth", args.linewidth)
    if not linewidth > 0:
        raise InvalidParameterError(f"Linewidth must be > 0, got {linewidth}")
    transitions = transition_frequencies(system)

    report = ReportGenerator()
    report.add("d_mhz", system.d)
    report.add("gamma_mhz_per_g", system.gamma)
    report.add("f_minus_mhz", transitions.minus)
    report.add("f_plus_mhz", transitions.plus)
    report.add("ambiguous", transitions.ambiguous)

    if args.b_sweep is not None:
        fan = zeeman_fan(system, args.b_sweep)
        report.add("slope_minus_mhz_per_g", fan.slope_minus)
        report.add("slope_plus_mhz_per_g", fan.slope_plus)
        if args.out:
            write_series(
                args.out, fan.bz, np.stack([fan.minus, fan.plus]),
                names=("bz_G", "f_minus_MHz", "f_plus_MHz"),
            )
    else:
        grid = args.grid
        if grid is None:
            span = system.gamma * float(np.linalg.norm(system.b_field)) + 10.0 * linewidth
            step = linewidth / 20.0
            grid = system.d - span + step * np.arange(int(round(2 * span / step)) + 1)
        spectrum = odmr_spectrum(system, grid, linewidth, args.contrast, args.sign)
        if args.out:
            write_series(
                args.out, spectrum.frequencies, spectrum.contrast,
                names=("frequency_MHz", "contrast"),
            )
    _emit(report)
    return EXIT_OK


def _histogram_report(
    histogram: CorrelationHistogram, records: Sequence[PhotonRecord]
) -> ReportGenerator:
    report = ReportGenerator()
    report.add("trajectories", len(records))
    report.add("photons", sum(r.count for r in records))
    report.add("rate_per_ns", float(np.mean([r.rate for r in records])))
    report.add("normalization", histogram.normalization)
    g2 = histogram.g2
    if g2.size and np.all(np.isfinite(g2)):
        report.add("g2_first_bin", float(g2[0]))
        report.add("g2_max", float(g2.max()))
    return report


def _write_histogram(path: str, histogram: CorrelationHistogram) -> None:
    write_series(
        path, histogram.bin_centers, np.stack([histogram.g2, histogram.standard_errors]),
        names=("tau_ns", "g2", "stderr"),
    )


def run_g2(args: argparse.Namespace, config: RunConfig) -> int:
    """g2 analytic curve, Monte Carlo, correlation of files, or fit."""
    if args.mode == "fit":
        return run_fit(args, config, "g2_three_level")

    if args.mode == "correlate":
        records = [read_timestamps(path) for path in args.input]
        histogram = correlate_many(records, args.bin_width, args.max_tau)
        _emit(_histogram_report(histogram, records))
        if args.out:
            _write_histogram(args.out, histogram)
        return EXIT_OK

    rates = _rates(args, config)
    if args.mode == "analytic":
        tau = args.step * np.arange(int(math.floor(args.tau_max / args.step + 1e-9)) + 1)
        curve = g2_analytic(rates, tau)
        report = ReportGenerator()
        report.add("p_excited_steady", steady_state(rates).p_excited)
        try:
            report.add_mapping(g2_fit_parameters(rates))
        except DomainError as e:
            logger.warning("No two-exponential mapping: %s", e)
        _emit(report)
        if args.out:
            write_series(args.out, tau, curve, names=("tau_ns", "g2"))
        return EXIT_OK

    seed = config.resolve("simulation", "seed", args.seed)
    workers = config.resolve("simulation", "workers", args.workers)
    records = simulate_ensemble(
        rates, args.duration, args.efficiency, seed, args.trajectories, workers
    )
    histogram = correlate_many(records, args.bin_width, args.max_tau)
    report = _histogram_report(histogram, records)
    report.add("seed", seed)
    _emit(report)
    if args.out:
        _write_histogram(args.out, histogram)
    if args.timestamps_out:
        target = Path(args.timestamps_out)
        for index, record in enumerate(records):
            path = target if len(records) == 1 else target.with_name(
                f"{target.stem}_{index}{target.suffix}"
            )
            write_timestamps(record, path)
    return EXIT_OK


def run_pulse(args: argparse.Namespace, config: RunConfig) -> int:
    """Closed-form or Monte Carlo pulse-sequence signals."""
    envelope = DecayEnvelope(args.T, args.stretch, args.amplitude, args.offset)
    sweep = args.sweep
    report = ReportGenerator()
    report.add("kind", args.kind)
    report.add("points", int(sweep.size))
    columns: Dict[str, np.ndarray] = {}

    if args.mc:
        spec = SequenceSpec(
            kind=args.kind,
            sweep=sweep,
            n_pi=getattr(args, "n_pi", 1),
            detuning=getattr(args, "detuning", 0.0),
            rabi_frequency=getattr(args, "rabi_frequency", 0.0),
            pulse_length=getattr(args, "pulse_length", 400.0),
            phases=getattr(args, "phases", "cpmg"),
            sweep_mode=getattr(args, "sweep_mode", "amplitude"),
        )
        seed = config.resolve("simulation", "seed", args.seed)
        result = simulate_sequence_mc(
            spec, args.noise_sigma, args.samples, args.t2_white, seed, args.t1
        )
        signal = result.signal
        columns["stderr"] = result.standard_error
        report.add("seed", seed)
        report.add("samples", args.samples)
        report.add("max_bloch_norm", result.max_norm)
    elif args.kind == "rabi":
        signal = rabi_signal(
            args.rabi_frequency, sweep, args.pulse_length, envelope, args.sweep_mode
        )
    elif args.kind == "ramsey":
        signal = ramsey_signal(args.detuning, sweep, envelope, args.phase)
    elif args.kind == "hahn":
        modulation = None
        if args.mod_frequency is not None:
            modulation = (args.mod_frequency, args.mod_phase)
        signal = cpmg_signal(1, sweep, envelope, modulation)
    else:
        signal = cpmg_signal(args.n_pi, sweep, envelope)

    report.add("signal_min", float(np.min(signal)))
    report.add("signal_max", float(np.max(signal)))
    _emit(report)

    if args.out:
        if args.kind == "rabi":
            x, x_name = sweep, args.sweep_mode
        else:
            unit = args.time_unit or ("ns" if args.kind == "ramsey" else "us")
            x = sweep / 1e3 if unit == "us" else sweep
            x_name = f"t_{unit}"
        names: List[str] = [x_name, "signal"] + list(columns)
        write_series(args.out, x, np.stack([signal] + list(columns.values())), names=names)
    return EXIT_OK


HANDLERS = {
    "fit": lambda args, config: run_fit(args, config, args.model, args.n_peaks),
    "purcell": run_purcell,
    "dw-invert": run_dw_invert,
    "entanglement-gain": run_entanglement_gain,
    "lifetime-limit": run_lifetime_limit,
    "odmr": run_odmr,
    "g2": run_g2,
    "pulse": run_pulse,
}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True
    )


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        int: 0 on success, 1 on usage or input errors, 2 on fit failures
    """
    try:
        args = parse_args(argv)
    except UsageError as e:
        if e.usage:
            print(e.usage, end="", file=sys.stderr)
        print(f"usage error: {e}", file=sys.stderr)
        print("Run 'cavity-qubit-analyzer --help' for usage.", file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(args.verbose)
    try:
        config = load_config(args.config)
        return HANDLERS[args.command](args, config)
    except FitError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except (AnalyzerError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    """Main entry point."""
    try:
        sys.exit(dispatch())
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
