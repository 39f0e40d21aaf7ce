"""Controller assessment statistics.

Exponential settling fit, steady-state summary, and the F-test / Welch
T-test / confidence interval comparing a controller's steady-state errors
against the random-sampling benchmark.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc, erf

from ._opt import golden_section


class InsufficientDataError(ValueError):
    pass


class DegenerateTestError(ValueError):
    pass


class FitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ExpFit:
    alpha: float
    beta: float
    tau: float
    ssr: float
    at_edge: bool = False

    @property
    def t_s(self) -> float:
        return 4.0 * self.tau

    def __call__(self, t):
        return self.alpha + self.beta * np.exp(-np.asarray(t, dtype=float) / self.tau)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "tau": self.tau, "t_s": self.t_s,
                "ssr": self.ssr, "at_edge": self.at_edge}


@dataclass(frozen=True)
class SteadyStateSummary:
    t_s: float
    q3: float
    mean: float
    sd: float
    n: int

    def to_dict(self) -> dict:
        return {"t_s": self.t_s, "q3": self.q3, "mean": self.mean, "sd": self.sd, "n": self.n}


@dataclass(frozen=True)
class TestReport:
    f_stat: float
    f_p: float
    f_pass: bool
    t_stat: float
    t_dof: float
    t_p: float
    t_pass: bool
    ci_95: Tuple[float, float]
    level: float = 0.05

    def to_dict(self) -> dict:
        return {"f_stat": self.f_stat, "f_p": self.f_p, "f_pass": self.f_pass,
                "t_stat": self.t_stat, "t_dof": self.t_dof, "t_p": self.t_p,
                "t_pass": self.t_pass, "ci_95": list(self.ci_95), "significance": self.level}


# --------------------------------------------------------------------------
# distribution functions via the regularized incomplete beta
# --------------------------------------------------------------------------

def normal_cdf(z, mu=0.0, sigma=1.0):
    return 0.5 * (1.0 + erf((np.asarray(z, dtype=float) - mu) / (sigma * math.sqrt(2.0))))


def f_cdf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 0.0
    return float(betainc(d1 / 2, d2 / 2, d1 * x / (d1 * x + d2)))


def f_pdf(x, d1, d2):
    x = np.asarray(x, dtype=float)
    lb = math.lgamma(d1 / 2) + math.lgamma(d2 / 2) - math.lgamma((d1 + d2) / 2)
    with np.errstate(divide="ignore"):
        logp = ((d1 / 2) * math.log(d1 / d2) + (d1 / 2 - 1) * np.log(x)
                - ((d1 + d2) / 2) * np.log1p(d1 * x / d2) - lb)
    return np.where(x > 0, np.exp(logp), 0.0)


def t_cdf(t: float, nu: float) -> float:
    tail = 0.5 * float(betainc(nu / 2, 0.5, nu / (nu + t * t)))
    return 1.0 - tail if t >= 0 else tail


def t_pdf(t, nu):
    t = np.asarray(t, dtype=float)
    c = math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2) - 0.5 * math.log(nu * math.pi)
    return np.exp(c - (nu + 1) / 2 * np.log1p(t * t / nu))


def t_quantile(p: float, nu: float) -> float:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if p == 0.5:
        return 0.0
    hi = 1.0
    while t_cdf(hi, nu) < max(p, 1 - p):
        hi *= 2
    q = brentq(lambda t: t_cdf(t, nu) - max(p, 1 - p), 0.0, hi, xtol=1e-14, rtol=1e-14)
    return q if p > 0.5 else -q


# --------------------------------------------------------------------------
# settling fit and steady state
# --------------------------------------------------------------------------

def _linear_part(t, e, tau):
    A = np.stack([np.ones_like(t), np.exp(-t / tau)], axis=1)
    coef, *_ = np.linalg.lstsq(A, e, rcond=None)
    r = e - A @ coef
    return float(r @ r), float(coef[0]), float(coef[1])


def fit_exponential(t, e, tau_bracket=None, n_scan: int = 200) -> ExpFit:
    """Fit ``alpha + beta * exp(-t / tau)`` by variable projection.

    For fixed tau the amplitudes are a linear least-squares problem; tau is
    located by a log-spaced scan over the bracket followed by golden-section
    refinement around the best scan point. A best tau on the bracket edge is
    flagged (``at_edge``) and warned about: the data show no resolvable decay.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if t.size < 4 or t.size != e.size:
        raise InsufficientDataError("need at least 4 (t, e) points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    lo, hi = tau_bracket or (float(np.min(np.diff(t))), 10.0 * float(t[-1] - t[0]))
    grid = np.geomspace(lo, hi, n_scan)
    ssr = np.array([_linear_part(t, e, tau)[0] for tau in grid])
    scale = float(np.sum((e - e.mean()) ** 2))
    noise_floor = e.size * (1e-12 * max(1.0, float(np.max(np.abs(e))))) ** 2
    if ssr.max() - ssr.min() <= max(1e-12 * max(scale, float(ssr.max())), noise_floor):
        # flat profile: no time constant is preferred, so report the slowest
        _, alpha, beta = _linear_part(t, e, hi)
        warnings.warn(f"error series shows no resolvable decay over [{lo:.4g}, {hi:.4g}]", FitWarning)
        return ExpFit(alpha, beta, hi, float(ssr[-1]), True)
    i = int(np.argmin(ssr))
    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, n_scan - 1)])
    u, _ = golden_section(lambda s: _linear_part(t, e, math.exp(s))[0], a, b, tol=1e-10, max_iter=200)
    tau = math.exp(u)
    val, alpha, beta = _linear_part(t, e, tau)
    if ssr[i] < val:
        tau = float(grid[i])
        val, alpha, beta = _linear_part(t, e, tau)
    edge = i == 0 or i == n_scan - 1
    if edge:
        warnings.warn(f"best time constant {tau:.4g} sits on the bracket edge "
                      f"[{lo:.4g}, {hi:.4g}]; data may not be decaying", FitWarning)
    return ExpFit(alpha, beta, tau, val, edge)


def quantile(values, q: float) -> float:
    """Linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(values, dtype=float), q, method="linear"))


def steady_state_stats(t, e, fit: ExpFit) -> SteadyStateSummary:
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    ts = fit.t_s
    ss = e[t > ts]
    if ss.size == 0:
        raise InsufficientDataError(f"no samples after the settling time t_s = 4*tau = {ts:.4g} "
                                    f"(last sample at t = {t.max():.4g})")
    sd = float(np.std(ss, ddof=1)) if ss.size > 1 else 0.0
    return SteadyStateSummary(ts, quantile(ss, 0.75), float(ss.mean()), sd, int(ss.size))


# --------------------------------------------------------------------------
# two-sample tests from summary statistics
# --------------------------------------------------------------------------

def f_test(sd1: float, n1: int, sd2: float, n2: int) -> Tuple[float, float]:
    """Variance-ratio test; the statistic is the larger variance over the smaller.

    Returns ``(F, p)`` with a two-sided p-value.
    """
    if not (sd1 > 0 and sd2 > 0):
        raise DegenerateTestError("F-test needs positive standard deviations")
    if n1 < 2 or n2 < 2:
        raise DegenerateTestError("F-test needs n >= 2 in each sample")
    v1, v2 = sd1 * sd1, sd2 * sd2
    if v1 >= v2:
        f, d1, d2 = v1 / v2, n1 - 1, n2 - 1
    else:
        f, d1, d2 = v2 / v1, n2 - 1, n1 - 1
    p = min(1.0, 2.0 * (1.0 - f_cdf(f, d1, d2)))
    return f, p


def _welch(mean1, sd1, n1, mean2, sd2, n2):
    if n1 < 2 or n2 < 2:
        raise DegenerateTestError("T-test needs n >= 2 in each sample")
    a, b = sd1 * sd1 / n1, sd2 * sd2 / n2
    se = math.sqrt(a + b)
    if se == 0:
        if mean1 == mean2:
            raise DegenerateTestError("zero variances and equal means")
        raise DegenerateTestError("zero variances; means differ deterministically")
    dof = (a + b) ** 2 / ((a * a / (n1 - 1) if a else 0.0) + (b * b / (n2 - 1) if b else 0.0))
    return se, dof


def t_test(mean1, sd1, n1, mean2, sd2, n2) -> Tuple[float, float, float]:
    """Welch two-sample t-test. Returns ``(t, dof, two-sided p)``; t is positive when mean2 > mean1."""
    se, dof = _welch(mean1, sd1, n1, mean2, sd2, n2)
    t = (mean2 - mean1) / se
    p = min(1.0, 2.0 * (1.0 - t_cdf(abs(t), dof)))
    return t, dof, p


def mean_diff_ci(mean1, sd1, n1, mean2, sd2, n2, level: float = 0.95) -> Tuple[float, float]:
    """Welch confidence interval for ``mean2 - mean1``."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    se, dof = _welch(mean1, sd1, n1, mean2, sd2, n2)
    q = t_quantile(0.5 + level / 2, dof)
    d = mean2 - mean1
    return d - q * se, d + q * se


def compare(benchmark: Tuple[float, float, int], observed: Tuple[float, float, int],
            significance: float = 0.05) -> TestReport:
    """F and T tests of observed (mean, sd, n) against benchmark (mean, sd, n)."""
    m1, s1, n1 = benchmark
    m2, s2, n2 = observed
    f, fp = f_test(s1, n1, s2, n2)
    t, dof, tp = t_test(m1, s1, n1, m2, s2, n2)
    ci = mean_diff_ci(m1, s1, n1, m2, s2, n2, 0.95)
    return TestReport(f, fp, fp >= significance, t, dof, tp, tp >= significance, ci, significance)
