# nougat/core/theory_models.py
"""
Analytical Mean and Variance Models

Models E{theta_t} = m_t, E{theta_t theta_t^T} = C_t and the first two
moments of the statistic g_t for a pre-tuned (fixed) dictionary, under the
independence of H_ref and theta.

Weight recursion:
    theta_{s} = [I - mu (H_ref + nu I)] theta_{s-1} - mu e_opt
Mean:
    m_s = [I - mu (Href_s + nu I)] m_{s-1} + mu (htest_s - href_s)
Correlation:
    C_s = (1 - mu nu)^2 C - mu (1 - mu nu)(Href C + C Href)
          + mu^2 (T + Q + Z + Z^T) - mu (1 - mu nu)(N + N^T)
    T = E{H_ref theta theta^T H_ref}, Q = E{e e^T},
    Z = E{e theta^T H_ref},           N = E{e theta^T} = (href - htest) m^T

Steps are counted from the first warm update (s = 1); the window whose
expectations drive step s is the window ending at step s. A stream record
at sample t corresponds to step s = t - (N_ref + N_test) + 2.

vec() stacks columns (Fortran order).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm

from ..schemas.detectors import AlarmRule
from .errors import ConfigurationError, DataError, MeanSquareInstabilityError, NumericalError
from .gaussian_moments import MomentSet
from .kernel_dict import Dictionary

logger = logging.getLogger(__name__)


# =============================================================================
# Helpers
# =============================================================================

def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization"""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, L: Optional[int] = None) -> np.ndarray:
    """Inverse of vec for square matrices"""
    x = np.asarray(x)
    if L is None:
        L = int(round(np.sqrt(x.shape[0])))
    if L * L != x.shape[0]:
        raise DataError(f"Cannot unvec a vector of length {x.shape[0]} into a square matrix")
    return x.reshape((L, L), order="F")


def step_bound(H: np.ndarray, nu: float) -> float:
    """Mean-stability bound 2 / lambda_max(H + nu I)"""
    lam = float(np.max(np.linalg.eigvalsh(H + nu * np.eye(H.shape[0]))))
    return 2.0 / lam if lam > 0 else float("inf")


def stream_time(step: Union[int, np.ndarray], n_ref: int, n_test: int):
    """Stream sample index matching a theory step"""
    return step + n_ref + n_test - 2


def theory_change_step(t0_stream: int, n_ref: int, n_test: int) -> int:
    """Theory step of the first window whose newest sample is post-change"""
    return t0_stream - n_ref - n_test + 2


# =============================================================================
# Domain types
# =============================================================================

@dataclass
class AlgoConfig:
    """Step size, regularization, window lengths and initial weights"""
    mu: float
    nu: float
    n_ref: int
    n_test: int
    theta0: np.ndarray
    dictionary: Optional[Dictionary] = None

    def __post_init__(self):
        self.theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        if self.mu <= 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if self.nu < 0:
            raise ConfigurationError(f"nu must be non-negative, got {self.nu}")
        if self.n_ref < 1 or self.n_test < 1:
            raise ConfigurationError("Window lengths must be >= 1")

    @property
    def size(self) -> int:
        return self.theta0.shape[0]

    def with_mu(self, mu: float) -> "AlgoConfig":
        return AlgoConfig(mu, self.nu, self.n_ref, self.n_test, self.theta0, self.dictionary)


@dataclass
class ChangeScenario:
    """Single change at theory step t0 from moments0 (p0) to moments1 (p1)"""
    t0: int
    moments0: MomentSet
    moments1: MomentSet

    def __post_init__(self):
        if self.t0 < 0:
            raise ConfigurationError(f"Change step must be >= 0, got {self.t0}")
        if self.moments0.size != self.moments1.size:
            raise DataError("Pre- and post-change moments have different dictionary sizes")


class Regime(str, Enum):
    PRE = "pre"
    TEST_MIXED = "test-mixed"
    REF_MIXED = "ref-mixed"
    POST = "post"


@dataclass(frozen=True)
class RegimeSchedule:
    """
    Window composition at one step

    n0/n1 count p0/p1 samples in the test window, n0p/n1p in the
    reference window.
    """
    regime: Regime
    n0: int
    n1: int
    n0p: int
    n1p: int


def regime_schedule(t: int, t0: int, n_ref: int, n_test: int) -> RegimeSchedule:
    """Which window holds post-change samples at step t, and how many"""
    if t < t0:
        return RegimeSchedule(Regime.PRE, n_test, 0, n_ref, 0)
    if t <= t0 + n_test - 1:
        n1 = t - t0 + 1
        return RegimeSchedule(Regime.TEST_MIXED, n_test - n1, n1, n_ref, 0)
    if t <= t0 + n_test + n_ref - 1:
        n1p = t - (t0 + n_test) + 1
        return RegimeSchedule(Regime.REF_MIXED, 0, n_test, n_ref - n1p, n1p)
    return RegimeSchedule(Regime.POST, 0, n_test, 0, n_ref)


NULL_T0 = np.iinfo(np.int64).max


@dataclass
class TheoryTrace:
    """
    Model output for steps 1..T

    C_theta is only kept when requested; C_final is always the last one.
    """
    step: np.ndarray
    m_theta: np.ndarray
    mean_g: np.ndarray
    var_g: Optional[np.ndarray] = None
    C_theta: Optional[np.ndarray] = None
    C_final: Optional[np.ndarray] = None
    regimes: List[Regime] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.step.shape[0])

    def stream_t(self, n_ref: int, n_test: int) -> np.ndarray:
        return stream_time(self.step, n_ref, n_test)

    def to_csv(self, path: Union[str, Path, None], n_ref: int, n_test: int, include_m: bool = False) -> None:
        """Columns t, step, mean_g, var_g (and m_0..m_{L-1}); None writes to stdout"""
        from .csv_io import write_table

        header = ["t", "step", "mean_g", "var_g"]
        columns = [
            self.stream_t(n_ref, n_test),
            self.step,
            self.mean_g,
            self.var_g if self.var_g is not None else np.full(len(self), np.nan),
        ]
        if include_m:
            header += [f"m_{i}" for i in range(self.m_theta.shape[1])]
            columns += [self.m_theta[:, i] for i in range(self.m_theta.shape[1])]
        write_table(path, header, columns, integer_columns={"t", "step"})


# =============================================================================
# Window expectations
# =============================================================================

@dataclass
class _Expectations:
    href: np.ndarray
    htest: np.ndarray
    Href: np.ndarray
    Htest: np.ndarray


def _mix(a0: int, a1: int, x0: np.ndarray, x1: np.ndarray, n: int) -> np.ndarray:
    return (a0 * x0 + a1 * x1) / n


def _expectations(sched: RegimeSchedule, M0: MomentSet, M1: MomentSet, n_ref: int, n_test: int) -> _Expectations:
    return _Expectations(
        href=_mix(sched.n0p, sched.n1p, M0.h, M1.h, n_ref),
        htest=_mix(sched.n0, sched.n1, M0.h, M1.h, n_test),
        Href=_mix(sched.n0p, sched.n1p, M0.H, M1.H, n_ref),
        Htest=_mix(sched.n0, sched.n1, M0.H, M1.H, n_test),
    )


def _second_moment_of_mean(c0: int, c1: int, M0: MomentSet, M1: MomentSet, n: int) -> np.ndarray:
    """E{h h^T} for the mean of c0 p0-samples and c1 p1-samples (n = c0 + c1)"""
    h0, h1 = M0.h, M1.h
    out = c0 * M0.H + c1 * M1.H
    out = out + c0 * (c0 - 1) * np.outer(h0, h0) + c1 * (c1 - 1) * np.outer(h1, h1)
    cross = np.outer(h0, h1)
    out = out + c0 * c1 * (cross + cross.T)
    return out / (n * n)


def _q_matrix(sched: RegimeSchedule, M0: MomentSet, M1: MomentSet, ex: _Expectations, n_ref: int, n_test: int):
    Q1 = _second_moment_of_mean(sched.n0, sched.n1, M0, M1, n_test)
    Q2 = _second_moment_of_mean(sched.n0p, sched.n1p, M0, M1, n_ref)
    Q3 = np.outer(ex.htest, ex.href)
    return Q1 + Q2 - Q3 - Q3.T


def null_q(moments: MomentSet, n_ref: int, n_test: int) -> np.ndarray:
    """Q = (N_ref + N_test)/(N_ref N_test) (H - h h^T)"""
    return (n_ref + n_test) / (n_ref * n_test) * (moments.H - np.outer(moments.h, moments.h))


def _require_fourth_order(*moment_sets: MomentSet) -> None:
    for M in moment_sets:
        if not M.has_fourth_order:
            raise DataError("Variance models need Gamma and Delta; compute the moment set with fourth_order=True")


# =============================================================================
# Recursions
# =============================================================================

def _run(
    cfg: AlgoConfig,
    M0: MomentSet,
    M1: MomentSet,
    t0: int,
    horizon: int,
    with_variance: bool,
    keep_covariance: bool = False,
) -> TheoryTrace:
    L = M0.size
    if cfg.size != L:
        raise DataError(f"theta0 has {cfg.size} entries but the moments describe L={L}")
    if with_variance:
        _require_fourth_order(M0, M1)

    mu, nu = cfg.mu, cfg.nu
    Nr, Nt = cfg.n_ref, cfg.n_test
    I = np.eye(L)
    a = 1.0 - mu * nu

    m = cfg.theta0.copy()
    C = np.outer(m, m)

    steps = np.arange(1, horizon + 1)
    m_out = np.empty((horizon, L))
    mean_g = np.empty(horizon)
    var_g = np.empty(horizon) if with_variance else None
    C_out = np.empty((horizon, L, L)) if keep_covariance else None
    regimes: List[Regime] = []

    for i, s in enumerate(steps):
        sched = regime_schedule(int(s), t0, Nr, Nt)
        ex = _expectations(sched, M0, M1, Nr, Nt)

        if with_variance:
            c = vec(C)
            a0, a1 = sched.n0p, sched.n1p
            T = a0 * unvec(M0.Gamma @ c, L) + a1 * unvec(M1.Gamma @ c, L)
            T += a0 * (a0 - 1) * M0.H @ C @ M0.H + a1 * (a1 - 1) * M1.H @ C @ M1.H
            if a0 and a1:
                T += a0 * a1 * (M0.H @ C @ M1.H + M1.H @ C @ M0.H)
            T /= Nr * Nr

            Q = _q_matrix(sched, M0, M1, ex, Nr, Nt)

            Z = a0 * unvec(M0.Delta @ m, L) + a1 * unvec(M1.Delta @ m, L)
            Z += a0 * (a0 - 1) * np.outer(M0.h, m) @ M0.H + a1 * (a1 - 1) * np.outer(M1.h, m) @ M1.H
            if a0 and a1:
                Z += a0 * a1 * (np.outer(M0.h, m) @ M1.H + np.outer(M1.h, m) @ M0.H)
            Z = Z / (Nr * Nr) - np.outer(ex.htest, m) @ ex.Href

            N = np.outer(ex.href - ex.htest, m)

            HC = ex.Href @ C
            C = (
                a * a * C
                - mu * a * (HC + HC.T)
                + mu * mu * (T + Q + Z + Z.T)
                - mu * a * (N + N.T)
            )
            C = (C + C.T) / 2.0

        m = (I - mu * (ex.Href + nu * I)) @ m + mu * (ex.htest - ex.href)

        m_out[i] = m
        mean_g[i] = ex.htest @ m
        if with_variance:
            var_g[i] = (np.trace(ex.Htest @ C) - mean_g[i] ** 2) / Nt
            if keep_covariance:
                C_out[i] = C
        regimes.append(sched.regime)

    return TheoryTrace(
        step=steps,
        m_theta=m_out,
        mean_g=mean_g,
        var_g=var_g,
        C_theta=C_out,
        C_final=C if with_variance else None,
        regimes=regimes,
    )


def mean_null(cfg: AlgoConfig, moments: MomentSet, horizon: int) -> TheoryTrace:
    """m_s = [I - mu (H + nu I)] m_{s-1} from theta0; mean_g = h^T m"""
    return _run(cfg, moments, moments, NULL_T0, horizon, with_variance=False)


def null_recursion_matrix(cfg: AlgoConfig, moments: MomentSet) -> np.ndarray:
    """
    S = (1 - mu nu)^2 I + mu^2/N_ref (Gamma + (N_ref - 1) H (x) H)
        - mu (1 - mu nu)(H (x) I + I (x) H)
    """
    _require_fourth_order(moments)
    H = moments.H
    L = H.shape[0]
    I = np.eye(L)
    mu, nu, Nr = cfg.mu, cfg.nu, cfg.n_ref
    a = 1.0 - mu * nu
    return (
        a * a * np.eye(L * L)
        + (mu * mu / Nr) * (moments.Gamma + (Nr - 1) * np.kron(H, H))
        - mu * a * (np.kron(H, I) + np.kron(I, H))
    )


def variance_null(
    cfg: AlgoConfig,
    moments: MomentSet,
    horizon: int,
    neglect_mean: bool = True,
    keep_covariance: bool = False,
) -> TheoryTrace:
    """
    Variance of g under the null

    With ``neglect_mean`` the vectorized recursion c_s = S c_{s-1} + mu^2 vec(Q)
    is iterated and Var{g} = tr(H C)/N_test. Otherwise the weight mean is
    carried through Z and the general variance formula is used.
    """
    if not neglect_mean:
        return _run(cfg, moments, moments, NULL_T0, horizon, with_variance=True, keep_covariance=keep_covariance)

    trace = mean_null(cfg, moments, horizon)
    S = null_recursion_matrix(cfg, moments)
    L = moments.size
    q = cfg.mu ** 2 * vec(null_q(moments, cfg.n_ref, cfg.n_test))
    h_vec = vec(moments.H)

    c = vec(np.outer(cfg.theta0, cfg.theta0))
    var_g = np.empty(horizon)
    C_out = np.empty((horizon, L, L)) if keep_covariance else None
    for i in range(horizon):
        c = S @ c + q
        C = unvec(c, L)
        C = (C + C.T) / 2.0
        c = vec(C)
        # tr(H C) = vec(H)^T vec(C) for symmetric H
        var_g[i] = h_vec @ c / cfg.n_test
        if keep_covariance:
            C_out[i] = C

    trace.var_g = var_g
    trace.C_theta = C_out
    trace.C_final = unvec(c, L).copy()
    return trace


def spectral_radius(S: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(S))))


def steady_state_null(cfg: AlgoConfig, moments: MomentSet) -> Tuple[np.ndarray, float]:
    """
    Fixed point c_inf = mu^2 (I - S)^(-1) vec(Q) and Var{g_inf} = tr(H C_inf)/N_test

    Raises MeanSquareInstabilityError when rho(S) >= 1.
    """
    S = null_recursion_matrix(cfg, moments)
    rho = spectral_radius(S)
    if rho >= 1.0:
        raise MeanSquareInstabilityError(rho, cfg.mu)
    L = moments.size
    q = cfg.mu ** 2 * vec(null_q(moments, cfg.n_ref, cfg.n_test))
    c_inf = linalg.solve(np.eye(L * L) - S, q)
    var_inf = float(np.trace(moments.H @ unvec(c_inf, L)) / cfg.n_test)
    logger.debug(f"Steady state for mu={cfg.mu}: rho(S)={rho:.9f}, var={var_inf:.6e}")
    return c_inf, var_inf


def smallmu_variance(cfg: AlgoConfig, moments: MomentSet) -> float:
    """
    First-order (small mu) steady-state variance

    (mu / N_test) tr(H X) with (nu I + H) X + X (nu I + H) = Q.
    """
    H = moments.H
    A = cfg.nu * np.eye(H.shape[0]) + H
    min_eig = float(np.min(np.linalg.eigvalsh(A)))
    if min_eig <= 0:
        raise NumericalError(
            f"nu I + H is not positive definite (min eigenvalue {min_eig:.3e})",
            {"min_eigenvalue": min_eig},
        )
    Q = null_q(moments, cfg.n_ref, cfg.n_test)
    X = linalg.solve_continuous_lyapunov(A, Q)
    return float(cfg.mu / cfg.n_test * np.trace(H @ X))


def smallmu_variance_kron(cfg: AlgoConfig, moments: MomentSet) -> float:
    """(mu / N_test) vec(H)^T (2 nu I + H (+) H)^(-1) vec(Q)"""
    H = moments.H
    L = H.shape[0]
    I = np.eye(L)
    K = 2.0 * cfg.nu * np.eye(L * L) + np.kron(H, I) + np.kron(I, H)
    Q = null_q(moments, cfg.n_ref, cfg.n_test)
    return float(cfg.mu / cfg.n_test * vec(H) @ linalg.solve(K, vec(Q)))


def mean_change(cfg: AlgoConfig, scenario: ChangeScenario, horizon: int) -> TheoryTrace:
    """Mean of theta and g across the four regimes of a single change"""
    return _run(cfg, scenario.moments0, scenario.moments1, scenario.t0, horizon, with_variance=False)


def variance_change(
    cfg: AlgoConfig,
    scenario: ChangeScenario,
    horizon: int,
    keep_covariance: bool = False,
) -> TheoryTrace:
    """Mean and variance of g across the four regimes of a single change"""
    return _run(
        cfg,
        scenario.moments0,
        scenario.moments1,
        scenario.t0,
        horizon,
        with_variance=True,
        keep_covariance=keep_covariance,
    )


# =============================================================================
# Thresholds and sweeps
# =============================================================================

def gaussian_threshold(var_g: float, pfa: float, rule: AlarmRule = AlarmRule.ABS_SHIFT, mean_g: float = 0.0) -> float:
    """
    Threshold giving a per-step false-alarm probability pfa when
    g ~ N(mean_g, var_g)
    """
    if not 0.0 < pfa < 1.0:
        raise ConfigurationError(f"pfa must be in (0, 1), got {pfa}")
    if var_g <= 0:
        raise ConfigurationError(f"var_g must be positive, got {var_g}")
    sd = float(np.sqrt(var_g))

    if rule == AlarmRule.UPPER:
        return float(mean_g + sd * norm.isf(pfa))
    if rule == AlarmRule.LOWER:
        return float(-mean_g + sd * norm.isf(pfa))

    shift = 1.0 if rule == AlarmRule.ABS_SHIFT else 0.0
    center = mean_g + shift

    def exceed(xi: float) -> float:
        # P(|g + shift| > xi) - pfa
        return norm.sf((xi - center) / sd) + norm.cdf((-xi - center) / sd) - pfa

    upper = abs(center) + 40.0 * sd
    if exceed(0.0) <= 0.0:
        return 0.0
    return float(optimize.brentq(exceed, 0.0, upper, xtol=1e-14 * max(1.0, upper)))


@dataclass
class StepSizeRow:
    mu: float
    rho: float
    steady_state: float
    small_mu: float


def variance_vs_step(cfg: AlgoConfig, moments: MomentSet, mus: List[float]) -> List[StepSizeRow]:
    """Steady-state and first-order variance for each step size"""
    rows = []
    for mu in mus:
        run_cfg = cfg.with_mu(mu)
        small = smallmu_variance(run_cfg, moments)
        try:
            _, steady = steady_state_null(run_cfg, moments)
            rho = spectral_radius(null_recursion_matrix(run_cfg, moments))
        except MeanSquareInstabilityError as e:
            logger.warning(f"Step size {mu} is mean-square unstable (rho={e.rho:.6f})")
            steady, rho = float("nan"), e.rho
        rows.append(StepSizeRow(mu=mu, rho=rho, steady_state=steady, small_mu=small))
    return rows
