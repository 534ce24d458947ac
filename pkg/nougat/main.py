# nougat/main.py
"""
NOUGAT change-point toolkit - command-line entry point

Subcommands:
    detect   run the selected detectors over a CSV stream (file or stdin)
    theory   analytical mean/variance traces for the null or a single change
    mc       Monte Carlo campaign over synthetic streams
    bench    runtime benchmark per dictionary size

Exit codes: 0 success, 1 invalid configuration, 2 data error, 3 numerical error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from .config import settings
from .core import csv_io
from .core.errors import ConfigurationError, EmptyInputError, NougatError
from .core.event_handlers import AlarmCounter, register_event_handlers
from .core.events import EventBus
from .core.domain_events import EventTypes
from .core.gaussian_moments import moment_set, monte_carlo_moments
from .core.host_info import collect_host_info, host_summary
from .core.kernel_dict import Dictionary
from .core.metrics import (
    bench_runtime,
    default_thresholds,
    null_histogram,
    operating_table,
    write_bench,
    write_histograms,
    write_operating_table,
)
from .core.pipeline import DetectionPipeline, initial_theta
from .core.simgen import McTask, derive_seed, gen_gaussian_stream, monte_carlo, sample_dictionary
from .core.theory_models import (
    AlgoConfig,
    ChangeScenario,
    gaussian_threshold,
    step_bound,
    steady_state_null,
    theory_change_step,
    variance_change,
    variance_null,
    variance_vs_step,
)
from .schemas.base import ErrorReport
from .schemas.detectors import DetectorName
from .schemas.gaussian import GaussianSpec
from .schemas.run import RunConfig
from .schemas.simulation import GmmChangeSpec

logger = logging.getLogger("nougat")

# Dedicated run index for the frozen dictionary draw
DICTIONARY_DRAW = -1


# =============================================================================
# Arguments
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument(
        "--detector",
        action="append",
        choices=[d.value for d in DetectorName],
        help="Detector to run (repeatable); replaces the configured selection",
    )
    common.add_argument("--nref", type=int, help="Reference window length")
    common.add_argument("--ntest", type=int, help="Test window length")
    common.add_argument("--sigma", type=float, help="Kernel bandwidth")
    common.add_argument("--mu", type=float, help="NOUGAT step size")
    common.add_argument("--nu", type=float, help="Ridge regularization (NOUGAT and dRuLSIF)")
    common.add_argument("--xi", type=float, help="Threshold for every selected detector")
    common.add_argument("--eta0", type=float, help="Coherence threshold")
    common.add_argument("--embed-k", type=int, help="Time-delay embedding dimension")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--input", help="Input CSV ('-' for stdin)")
    common.add_argument("--output", help="Output CSV ('-' for stdout)")
    common.add_argument("--dict", dest="dict_path", help="Load a fixed dictionary from this CSV")
    common.add_argument("--save-dict", help="Write the final dictionary to this CSV")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Override LOG_LEVEL")

    parser = argparse.ArgumentParser(prog="nougat", description=settings.APP_NAME)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("detect", parents=[common], help="Run detectors over a CSV stream")

    theory = sub.add_parser("theory", parents=[common], help="Analytical mean/variance traces")
    theory.add_argument("--horizon", type=int, help="Number of theory steps")
    theory.add_argument("--neglect-mean", action="store_true", default=None, help="Null recursion without the weight mean")

    mc = sub.add_parser("mc", parents=[common], help="Monte Carlo campaign")
    mc.add_argument("--n-runs", type=int, help="Number of runs")
    mc.add_argument("--workers", type=int, help="Worker processes")
    mc.add_argument("--table", dest="table_path", help="Operating-characteristic CSV")
    mc.add_argument("--histogram", dest="histogram_path", help="Histogram CSV of the pre-change statistics")

    bench = sub.add_parser("bench", parents=[common], help="Runtime benchmark")
    bench.add_argument("--repetitions", type=int, help="Passes per dictionary size")
    bench.add_argument("--sizes", type=int, nargs="+", help="Dictionary sizes")

    return parser


def _set(data: Dict[str, Any], dotted: str, value: Any) -> None:
    """Assign a nested key, creating intermediate dicts"""
    *parents, leaf = dotted.split(".")
    node = data
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    JSON file (if any) with flag overrides on top, validated as a whole

    Raises pydantic.ValidationError for any out-of-domain parameter.
    """
    data: Dict[str, Any] = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{args.config} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"{args.config} must contain a JSON object")
    data["command"] = args.command

    overrides = {
        "windows.n_ref": args.nref,
        "windows.n_test": args.ntest,
        "kernel.sigma": args.sigma,
        "detectors.nougat.mu": args.mu,
        "detectors.nougat.nu": args.nu,
        "detectors.drulsif.nu": args.nu,
        "dictionary.eta0": args.eta0,
        "dictionary.path": args.dict_path,
        "dictionary.save_path": args.save_dict,
        "embed_k": args.embed_k,
        "seed": args.seed,
        "input": args.input,
        "output": args.output,
        "theory.horizon": getattr(args, "horizon", None),
        "theory.neglect_mean": getattr(args, "neglect_mean", None),
        "mc.n_runs": getattr(args, "n_runs", None),
        "mc.workers": getattr(args, "workers", None),
        "mc.table_path": getattr(args, "table_path", None),
        "mc.histogram_path": getattr(args, "histogram_path", None),
        "bench.repetitions": getattr(args, "repetitions", None),
        "bench.dictionary_sizes": getattr(args, "sizes", None),
    }
    # window lengths are validated as a pair, so a single flag starts from the defaults
    if args.nref is not None or args.ntest is not None:
        data.setdefault("windows", RunConfig().windows.model_dump())

    for dotted, value in overrides.items():
        if value is not None:
            _set(data, dotted, value)

    if args.detector:
        selected = set(args.detector)
        for name in DetectorName:
            _set(data, f"detectors.{name.value}.enabled", name.value in selected)
    if args.xi is not None:
        names = args.detector or [name.value for name in DetectorName]
        for name in names:
            _set(data, f"detectors.{name}.xi", args.xi)

    return RunConfig.model_validate(data)


# =============================================================================
# Shared helpers
# =============================================================================

def _pretuned_dictionary(cfg: RunConfig, spec: GaussianSpec) -> Dictionary:
    """Fixed dictionary from a file, or drawn from spec under a dedicated seed"""
    if cfg.dictionary.path:
        return csv_io.load_dictionary(cfg.dictionary.path, cfg.kernel, cfg.dictionary.eta0)
    seed = cfg.dictionary.seed
    if seed is None:
        seed = derive_seed(cfg.seed if cfg.seed is not None else settings.DEFAULT_SEED, DICTIONARY_DRAW)
    return sample_dictionary(spec, cfg.dictionary.size, cfg.kernel, seed)


def _save_dictionary(cfg: RunConfig, dictionary: Optional[Dictionary]) -> None:
    if cfg.dictionary.save_path and dictionary is not None:
        csv_io.save_dictionary(dictionary, cfg.dictionary.save_path)


# =============================================================================
# Commands
# =============================================================================

def run_detect(cfg: RunConfig, bus: EventBus) -> int:
    """Stream rows in, one output row per warm step"""
    dictionary = None
    if cfg.dictionary.path:
        dictionary = csv_io.load_dictionary(
            cfg.dictionary.path, cfg.kernel, cfg.dictionary.eta0, cfg.dictionary.max_size
        )
        logger.info(f"Loaded dictionary with L={dictionary.size} from {cfg.dictionary.path}")

    pipeline = DetectionPipeline(
        kernel=cfg.kernel,
        windows=cfg.windows,
        detectors=cfg.detectors,
        dictionary=dictionary,
        eta0=cfg.dictionary.eta0,
        max_size=cfg.dictionary.max_size,
        bus=bus,
    )
    counter = AlarmCounter()
    bus.subscribe(EventTypes.CHANGE_POINT_FLAGGED, counter)

    names = [name.value for name in cfg.enabled_detectors]
    header = ["t"] + [col for name in names for col in (name, f"{name}_alarm")]
    embedder = csv_io.DelayEmbedder(cfg.embed_k)
    streaming = cfg.output in (None, csv_io.STDIO)

    rows_in = 0
    with csv_io.open_text(cfg.input) as source, csv_io.open_text(cfg.output, "w") as sink:
        writer = csv_io.CsvWriter(sink, header, flush_rows=streaming)
        for _, values in csv_io.iter_rows(source):
            rows_in += 1
            y = embedder.push(values)
            if y is None:
                continue
            record = pipeline.push(y)
            if record is None:
                continue
            writer.write(
                [record.t] + [v for name in names for v in (record.statistics[name], record.alarms[name])]
            )

    if rows_in == 0:
        raise EmptyInputError(f"No data rows in {cfg.input or 'stdin'}")
    logger.info(
        f"Processed {rows_in} rows, wrote {writer.rows} records; alarms per detector: {dict(counter.counts)}"
    )
    _save_dictionary(cfg, pipeline.dictionary)
    return 0


def run_theory(cfg: RunConfig, bus: EventBus) -> int:
    """Null or single-change mean/variance traces"""
    theory = cfg.theory
    nougat = cfg.detectors.nougat
    dictionary = _pretuned_dictionary(cfg, theory.pre)
    L = dictionary.size

    if theory.moments == "closed_form":
        moments0 = moment_set(dictionary, theory.pre)
        moments1 = moment_set(dictionary, theory.post) if theory.post is not None else None
    else:
        rng = np.random.default_rng(cfg.seed)
        moments0 = monte_carlo_moments(dictionary, gen_gaussian_stream(theory.pre, theory.mc_samples, rng))
        moments1 = (
            monte_carlo_moments(dictionary, gen_gaussian_stream(theory.post, theory.mc_samples, rng))
            if theory.post is not None
            else None
        )

    algo = AlgoConfig(
        mu=nougat.mu,
        nu=nougat.nu,
        n_ref=cfg.windows.n_ref,
        n_test=cfg.windows.n_test,
        theta0=initial_theta(nougat.theta0, L),
        dictionary=dictionary,
    )
    logger.info(f"Theory with L={L}: mean-stability bound mu < {step_bound(moments0.H, algo.nu):.6g}")

    if moments1 is None:
        trace = variance_null(algo, moments0, theory.horizon, neglect_mean=theory.neglect_mean)
    else:
        t0 = theory_change_step(theory.t0, algo.n_ref, algo.n_test)
        if t0 < 0:
            raise ConfigurationError(
                f"Change at sample {theory.t0} precedes the first full window "
                f"(needs t0 >= {algo.n_ref + algo.n_test - 2})"
            )
        trace = variance_change(algo, ChangeScenario(t0, moments0, moments1), theory.horizon)

    # Transient trace first; a mean-square instability is reported after it
    trace.to_csv(cfg.output, algo.n_ref, algo.n_test)
    if moments1 is None:
        _, var_inf = steady_state_null(algo, moments0)
        logger.info(f"Null steady-state variance of g: {var_inf:.9g}")

    if theory.target_pfa is not None:
        xi = gaussian_threshold(float(trace.var_g[-1]), theory.target_pfa, nougat.rule, float(trace.mean_g[-1]))
        logger.info(f"Gaussian threshold for per-step PFA {theory.target_pfa}: xi = {xi:.9g}")

    if theory.step_sizes:
        rows = variance_vs_step(algo, moments0, theory.step_sizes)
        if theory.sweep_path:
            csv_io.write_table(
                theory.sweep_path,
                ["mu", "rho", "steady_state", "small_mu"],
                [[r.mu for r in rows], [r.rho for r in rows], [r.steady_state for r in rows], [r.small_mu for r in rows]],
            )
        for r in rows:
            logger.info(f"mu={r.mu:.3g}: steady state {r.steady_state:.6e}, small-mu {r.small_mu:.6e}")

    _save_dictionary(cfg, dictionary)
    return 0


def run_mc(cfg: RunConfig, bus: EventBus) -> int:
    """Monte Carlo statistics, optionally with an operating-characteristic table"""
    mc = cfg.mc
    stream = mc.stream
    frozen = None
    if cfg.dictionary.path or (not mc.online_dictionary and not isinstance(stream, GmmChangeSpec)):
        pre = getattr(stream, "pre", None) or getattr(stream, "spec", None)
        frozen = _pretuned_dictionary(cfg, pre)

    task = McTask(
        stream=stream,
        kernel=cfg.kernel,
        windows=cfg.windows,
        detectors=cfg.detectors,
        dictionary=frozen,
        dictionary_size=cfg.dictionary.size,
        online_dictionary=mc.online_dictionary,
        eta0=cfg.dictionary.eta0,
        max_size=cfg.dictionary.max_size,
    )
    want_table = mc.table_path is not None and stream.change_point is not None
    report = monte_carlo(
        task,
        n_runs=mc.n_runs,
        base_seed=cfg.seed,
        workers=mc.workers,
        keep_traces=mc.keep_traces or want_table or mc.histogram_path is not None,
        bus=bus,
    )
    report.to_csv(cfg.output)

    if mc.table_path is not None and not want_table:
        logger.warning("Operating table skipped: the stream has no change point")
    if want_table:
        tables = {}
        for name in report.detectors:
            rule = getattr(cfg.detectors, name).rule
            traces = report.traces[name]
            thresholds = default_thresholds(traces, report.t, report.t0, mc.n_thresholds, rule)
            tables[name] = operating_table(traces, report.t, report.t0, thresholds, rule, stream.n_t)
        write_operating_table(tables, mc.table_path)
    if mc.histogram_path is not None:
        histograms = [
            null_histogram(name, report.traces[name], report.t, report.t0, mc.histogram_bins)
            for name in report.detectors
        ]
        for h in histograms:
            logger.info(f"Null {h.detector}: mean {h.mean:.6g}, variance {h.variance:.6g} over {h.n_samples} samples")
        write_histograms(histograms, mc.histogram_path)
    _save_dictionary(cfg, frozen)
    return 0


def run_bench(cfg: RunConfig, bus: EventBus) -> int:
    """Median pass time per detector and dictionary size"""
    bench = cfg.bench
    rows = bench_runtime(
        cfg.kernel,
        cfg.windows,
        cfg.detectors,
        bench.stream,
        bench.dictionary_sizes,
        bench.repetitions,
        cfg.seed,
    )
    host = collect_host_info()
    logger.info(f"Host: {host_summary(host)}")
    write_bench(rows, cfg.output, comments=[host_summary(host)])
    return 0


HANDLERS = {
    "detect": run_detect,
    "theory": run_theory,
    "mc": run_mc,
    "bench": run_bench,
}


# =============================================================================
# Entry point
# =============================================================================

def _report(error: str, error_code: str, exit_code: int, details: Optional[dict] = None) -> int:
    report = ErrorReport(error=error, error_code=error_code, exit_code=exit_code, details=details)
    print(report.model_dump_json(), file=sys.stderr)
    return exit_code


def run(argv: Optional[List[str]] = None) -> int:
    """Parse, validate and dispatch; returns the exit code"""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level or settings.LOG_LEVEL),
        format=settings.LOG_FORMAT,
        stream=sys.stderr,
    )

    try:
        cfg = load_config(args)
        bus = EventBus()
        bus.clear()
        register_event_handlers(bus)
        logger.debug(f"Running {cfg.command} with {cfg.model_dump_json()}")
        return HANDLERS[cfg.command](cfg, bus)
    except ValidationError as e:
        errors = [
            {"field": ".".join(str(loc) for loc in err["loc"]), "message": err["msg"], "type": err["type"]}
            for err in e.errors()
        ]
        return _report("Validation error", "VALIDATION_ERROR", 1, {"errors": errors})
    except NougatError as e:
        logger.debug("Command failed", exc_info=True)
        return _report(e.message, e.error_code, e.exit_code, e.details)
    except OSError as e:
        return _report(str(e), "IO_ERROR", 2, {"filename": getattr(e, "filename", None)})


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
