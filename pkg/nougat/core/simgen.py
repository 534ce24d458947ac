# nougat/core/simgen.py
"""
Synthetic Streams and Monte Carlo Harness

- Gaussian streams (stationary or with one change)
- Gaussian mixture streams whose parameters are all redrawn at t0
- Median-distance bandwidth and pre-tuned dictionaries
- Monte Carlo campaigns: per-run seeds hashed from (base_seed, run index),
  per-t mean and unbiased variance of each detector statistic

Every random draw goes through a numpy Generator; the same seed gives
bit-identical streams and reports.
"""

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import wishart

from ..config import settings
from ..schemas.detectors import DetectorSuite
from ..schemas.gaussian import GaussianSpec
from ..schemas.kernel import KernelParams, WindowConfig
from ..schemas.simulation import GaussianChangeSpec, GaussianStreamSpec, GmmChangeSpec, StreamSpec
from . import domain_events
from .errors import DataError, NougatError
from .events import EventBus
from .kernel_dict import Dictionary
from .pipeline import DetectionPipeline, Traces

logger = logging.getLogger(__name__)

SOURCE = "simgen"
SEED_MASK = (1 << 63) - 1

# Sub-stream tag for the per-run dictionary draw
DICTIONARY_STREAM = 1

Sampler = Callable[[int, np.random.Generator], np.ndarray]


# =============================================================================
# Seeds
# =============================================================================

def derive_seed(base_seed: int, run_index: int) -> int:
    """63-bit seed hashed from (base_seed, run_index)"""
    digest = hashlib.blake2b(f"{base_seed}:{run_index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & SEED_MASK


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)


def _as_rng(seed_or_rng: Union[int, np.random.Generator, None]) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(seed_or_rng)


# =============================================================================
# Gaussian streams
# =============================================================================

def gen_gaussian_stream(spec: GaussianSpec, n: int, seed: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    """n i.i.d. draws from N(mean, cov), shape (n, k)"""
    if n < 1:
        raise DataError(f"Stream length must be >= 1, got {n}")
    rng = _as_rng(seed)
    return rng.multivariate_normal(spec.mu, spec.R, size=n, method="eigh")


def gen_gaussian_change(
    pre: GaussianSpec,
    post: GaussianSpec,
    t0: int,
    n: int,
    seed: Union[int, np.random.Generator, None] = None,
) -> np.ndarray:
    """Samples 0..t0-1 from pre, t0..n-1 from post"""
    if not 0 <= t0 <= n:
        raise DataError(f"Change point {t0} outside [0, {n}]")
    if pre.dim != post.dim:
        raise DataError(f"pre and post dimensions differ: {pre.dim} vs {post.dim}")
    rng = _as_rng(seed)
    parts = []
    if t0 > 0:
        parts.append(rng.multivariate_normal(pre.mu, pre.R, size=t0, method="eigh"))
    if n > t0:
        parts.append(rng.multivariate_normal(post.mu, post.R, size=n - t0, method="eigh"))
    return np.vstack(parts)


def gaussian_sampler(spec: GaussianSpec) -> Sampler:
    def sample(n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.multivariate_normal(spec.mu, spec.R, size=n, method="eigh")
    return sample


# =============================================================================
# Gaussian mixtures
# =============================================================================

@dataclass
class GmmParams:
    """Weights (n,), means (n, k) and covariances (n, k, k) of a mixture"""
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def draw_gmm_params(k: int, n_components: int, alpha: float, rng: np.random.Generator) -> GmmParams:
    """
    Means ~ N(0, I), C_q ~ Wishart(I, k + 2) scaled by 1/q after the draw,
    weights ~ Dirichlet(alpha)
    """
    means = rng.standard_normal((n_components, k))
    covs = wishart(df=k + 2, scale=np.eye(k)).rvs(size=n_components, random_state=rng)
    covs = np.asarray(covs, dtype=float).reshape(n_components, k, k)
    covs = covs / np.arange(1, n_components + 1)[:, None, None]
    if n_components == 1:
        weights = np.ones(1)
    else:
        weights = rng.dirichlet(np.full(n_components, alpha))
    return GmmParams(weights=weights, means=means, covs=covs)


def sample_gmm(params: GmmParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. mixture draws; component labels first, then per-component blocks"""
    labels = rng.choice(params.n_components, size=n, p=params.weights)
    out = np.empty((n, params.dim))
    for q in range(params.n_components):
        rows = np.flatnonzero(labels == q)
        if rows.size:
            out[rows] = rng.multivariate_normal(params.means[q], params.covs[q], size=rows.size, method="eigh")
    return out


def gmm_sampler(params: GmmParams) -> Sampler:
    def sample(n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_gmm(params, n, rng)
    return sample


def gen_gmm_change(spec: GmmChangeSpec, seed: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    """n_t mixture samples with every parameter redrawn at t0"""
    if seed is None:
        seed = spec.seed
    return draw_stream(spec, _as_rng(seed)).samples


# =============================================================================
# Stream dispatch
# =============================================================================

@dataclass
class SyntheticStream:
    """Drawn samples plus a sampler of the pre-change distribution"""
    samples: np.ndarray
    t0: Optional[int]
    pre_sampler: Sampler
    params: Tuple = ()

    def __len__(self) -> int:
        return int(self.samples.shape[0])


def draw_stream(spec: StreamSpec, rng: np.random.Generator) -> SyntheticStream:
    """Draw one stream of the configured kind"""
    if isinstance(spec, GaussianStreamSpec):
        return SyntheticStream(
            samples=gen_gaussian_stream(spec.spec, spec.n_t, rng),
            t0=None,
            pre_sampler=gaussian_sampler(spec.spec),
        )
    if isinstance(spec, GaussianChangeSpec):
        return SyntheticStream(
            samples=gen_gaussian_change(spec.pre, spec.post, spec.t0, spec.n_t, rng),
            t0=spec.t0,
            pre_sampler=gaussian_sampler(spec.pre),
        )
    if isinstance(spec, GmmChangeSpec):
        params0 = draw_gmm_params(spec.k, spec.n_components, spec.alpha, rng)
        params1 = draw_gmm_params(spec.k, spec.n_components, spec.alpha, rng)
        parts = []
        if spec.t0 > 0:
            parts.append(sample_gmm(params0, spec.t0, rng))
        if spec.n_t > spec.t0:
            parts.append(sample_gmm(params1, spec.n_t - spec.t0, rng))
        return SyntheticStream(
            samples=np.vstack(parts),
            t0=spec.t0,
            pre_sampler=gmm_sampler(params0),
            params=(params0, params1),
        )
    raise DataError(f"Unknown stream kind: {getattr(spec, 'kind', spec)!r}")


# =============================================================================
# Bandwidth and dictionaries
# =============================================================================

def median_bandwidth(samples) -> float:
    """Median pairwise Euclidean distance"""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DataError(f"Median bandwidth needs at least 2 samples, got {X.shape[0]}")
    sigma = float(np.median(pdist(X)))
    if sigma == 0.0:
        logger.warning("Median pairwise distance is 0 (identical samples); set the bandwidth explicitly")
    return sigma


def sample_dictionary(
    source: Union[GaussianSpec, Sampler],
    size: int,
    params: KernelParams,
    seed: Union[int, np.random.Generator, None] = None,
) -> Dictionary:
    """Pre-tuned dictionary: size atoms drawn from the data distribution"""
    if size < 1:
        raise DataError(f"Dictionary size must be >= 1, got {size}")
    sampler = gaussian_sampler(source) if isinstance(source, GaussianSpec) else source
    atoms = sampler(size, _as_rng(seed))
    return Dictionary(atoms, params, eta0=1.0)


# =============================================================================
# Running statistics
# =============================================================================

class RunningMoments:
    """Per-t Welford accumulator over runs"""

    def __init__(self, length: int):
        self.count = 0
        self.mean = np.zeros(length)
        self._m2 = np.zeros(length)

    def update(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != self.mean.shape:
            raise DataError(f"Trace length {values.shape} does not match {self.mean.shape}")
        self.count += 1
        delta = values - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (values - self.mean)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased per-t variance"""
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return np.maximum(self._m2 / (self.count - 1), 0.0)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.variance / max(self.count, 1))


# =============================================================================
# Monte Carlo
# =============================================================================

@dataclass
class McTask:
    """
    Everything one Monte Carlo run needs

    With no frozen dictionary each run draws a pre-tuned one of
    ``dictionary_size`` atoms from its own pre-change distribution, or grows
    one online when ``online_dictionary`` is set.
    """
    stream: StreamSpec
    kernel: KernelParams
    windows: WindowConfig
    detectors: DetectorSuite
    dictionary: Optional[Dictionary] = None
    dictionary_size: int = 16
    online_dictionary: bool = False
    eta0: float = 0.7
    max_size: Optional[int] = None


@dataclass
class McRunResult:
    index: int
    seed: int
    traces: Optional[Traces] = None
    error: Optional[str] = None
    error_code: Optional[str] = None


@dataclass
class McReport:
    """Per-t mean and variance of every detector statistic over successful runs"""
    t: np.ndarray
    mean: Dict[str, np.ndarray]
    variance: Dict[str, np.ndarray]
    n_runs: int
    seeds: List[int]
    failed: List[Tuple[int, str]] = field(default_factory=list)
    t0: Optional[int] = None
    traces: Optional[Dict[str, np.ndarray]] = None

    @property
    def detectors(self) -> List[str]:
        return list(self.mean)

    def stderr(self, name: str) -> np.ndarray:
        return np.sqrt(self.variance[name] / self.n_runs)

    def to_csv(self, path: Union[str, Path, None]) -> None:
        """Columns t, <detector>_mean, <detector>_var ..., n_runs"""
        from .csv_io import write_table

        header = ["t"]
        columns = [self.t]
        for name in self.detectors:
            header += [f"{name}_mean", f"{name}_var"]
            columns += [self.mean[name], self.variance[name]]
        header.append("n_runs")
        columns.append(np.full(self.t.shape[0], self.n_runs))
        write_table(path, header, columns, integer_columns={"t", "n_runs"})


def run_once(task: McTask, seed: int) -> Traces:
    """One stream, one pipeline pass"""
    rng = np.random.default_rng(seed)
    stream = draw_stream(task.stream, rng)

    if task.dictionary is not None:
        pipeline = DetectionPipeline(
            task.kernel, task.windows, task.detectors, dictionary=task.dictionary.copy(), adaptive=False
        )
    elif task.online_dictionary:
        pipeline = DetectionPipeline(
            task.kernel, task.windows, task.detectors, eta0=task.eta0, max_size=task.max_size
        )
    else:
        dictionary = sample_dictionary(
            stream.pre_sampler,
            task.dictionary_size,
            task.kernel,
            derive_seed(seed, DICTIONARY_STREAM),
        )
        pipeline = DetectionPipeline(task.kernel, task.windows, task.detectors, dictionary=dictionary, adaptive=False)

    return pipeline.run_traces(stream.samples)


def _guarded_run(args: Tuple[McTask, int, int]) -> McRunResult:
    task, index, seed = args
    try:
        return McRunResult(index=index, seed=seed, traces=run_once(task, seed))
    except (NougatError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        return McRunResult(
            index=index,
            seed=seed,
            error=str(e),
            error_code=getattr(e, "error_code", type(e).__name__),
        )


def monte_carlo(
    task: McTask,
    n_runs: int,
    base_seed: Optional[int] = None,
    workers: Optional[int] = None,
    keep_traces: bool = False,
    bus: Optional[EventBus] = None,
) -> McReport:
    """
    Independent runs with derived seeds, reduced in run-index order

    Failed runs are logged and reported; aggregation continues with the
    rest as long as at least two runs succeed.
    """
    if n_runs < 2:
        raise DataError(f"Monte Carlo needs at least 2 runs, got {n_runs}")
    base_seed = settings.DEFAULT_SEED if base_seed is None else base_seed
    workers = workers or settings.MC_WORKERS
    seeds = [derive_seed(base_seed, i) for i in range(n_runs)]
    jobs = [(task, i, seeds[i]) for i in range(n_runs)]

    logger.info(f"Monte Carlo: {n_runs} runs, base seed {base_seed}, {workers} worker(s)")

    def publish(event_type: str, payload: dict) -> None:
        if bus is not None:
            bus.emit(event_type, payload, SOURCE)

    if workers > 1:
        executor = ProcessPoolExecutor(max_workers=workers)
        results = executor.map(_guarded_run, jobs, chunksize=max(1, n_runs // (4 * workers)))
    else:
        executor = None
        results = map(_guarded_run, jobs)

    moments: Dict[str, RunningMoments] = {}
    kept: Dict[str, List[np.ndarray]] = {}
    t_axis: Optional[np.ndarray] = None
    failed: List[Tuple[int, str]] = []
    ok_seeds: List[int] = []

    try:
        for done, result in enumerate(results, start=1):
            if result.traces is None:
                logger.warning(f"Monte Carlo run {result.index} (seed {result.seed}) failed: {result.error}")
                failed.append((result.index, result.error))
                publish(
                    domain_events.EventTypes.MONTE_CARLO_RUN_FAILED,
                    domain_events.monte_carlo_run_failed_payload(
                        result.index, result.seed, result.error, result.error_code
                    ),
                )
            else:
                traces = result.traces
                if t_axis is None:
                    t_axis = traces.t
                    for name in traces.statistics:
                        moments[name] = RunningMoments(len(traces))
                        kept[name] = []
                for name, values in traces.statistics.items():
                    moments[name].update(values)
                    if keep_traces:
                        kept[name].append(values)
                ok_seeds.append(result.seed)

            if done % settings.MC_LOG_EVERY == 0 or done == n_runs:
                logger.info(f"Monte Carlo progress: {done}/{n_runs} runs, {len(failed)} failed")
                publish(
                    domain_events.EventTypes.MONTE_CARLO_PROGRESS,
                    domain_events.monte_carlo_progress_payload(done, n_runs, len(failed)),
                )
    finally:
        if executor is not None:
            executor.shutdown()

    if len(ok_seeds) < 2:
        raise DataError(
            f"Only {len(ok_seeds)} of {n_runs} Monte Carlo runs succeeded",
            {"failed": [index for index, _ in failed]},
        )

    return McReport(
        t=t_axis,
        mean={name: m.mean.copy() for name, m in moments.items()},
        variance={name: m.variance for name, m in moments.items()},
        n_runs=len(ok_seeds),
        seeds=ok_seeds,
        failed=failed,
        t0=task.stream.change_point,
        traces={name: np.vstack(v) for name, v in kept.items()} if keep_traces else None,
    )
