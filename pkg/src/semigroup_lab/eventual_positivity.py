"""Sampled certificates for (eventual) positivity of exp(tA).

Everything is evaluated on the rescaled semigroup R(t) = exp(t (A - lambda0)),
which has the same sign pattern as exp(tA) but neither blows up nor
underflows at long times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import Generator

DEFAULT_EPS = 1e-10
DEFAULT_POINTS = 48


@dataclass(frozen=True)
class PositivityHypotheses:
    self_adjoint: bool
    u_ref: np.ndarray
    t0: float
    domination_ratio: float  # max_i || |S(t0) e_i| / u ||_inf, finite in finite dimensions
    eigenvector: np.ndarray  # dominant eigenvector w, sign normalized, unit weighted norm
    eigenvector_bound_c: float  # largest c >= 0 with w >= c u
    lambda0: float
    lambda0_simple: bool

    @property
    def domination_hypothesis(self) -> bool:
        return bool(np.isfinite(self.domination_ratio))

    @property
    def eigenvector_hypothesis(self) -> bool:
        return self.eigenvector_bound_c > 1e-8 and self.lambda0_simple

    @property
    def holds(self) -> bool:
        return self.domination_hypothesis and self.eigenvector_hypothesis


@dataclass(frozen=True)
class PositivityCertificate:
    verdict: str  # positive | eventually_positive | not_eventually_positive | inconclusive
    min_entry_series: list[tuple[float, float]]
    t1: float | None = None
    domination_constant: float | None = None
    eps: float = DEFAULT_EPS
    thresholds: list[float] = field(default_factory=list)  # eps * ||R(t)||_inf per sample
    diagnostic: str = ""

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.min_entry_series]


def _check_u(gen: Generator, u) -> np.ndarray:
    u = np.ones(gen.n) if u is None else np.asarray(u, dtype=float)
    if u.shape != (gen.n,) or not np.all(u > 0):
        raise ValueError("reference vector u must be entrywise strictly positive")
    return u


def check_positivity_hypotheses(gen: Generator, u=None, t0: float | None = None) -> PositivityHypotheses:
    """Evaluate both hypotheses of the eventual-positivity criterion for self-adjoint semigroups.

    Hypothesis (1) always holds in finite dimensions; the report records the
    domination ratio C at the probe time t0 (default 1/gap) instead.
    """
    if not gen.symmetric:
        raise ValueError("the eventual positivity criterion requires self-adjointness")
    u = _check_u(gen, u)
    spec = engine.spectrum(gen)
    if t0 is None:
        t0 = 1.0 / spec.gap if np.isfinite(spec.gap) and spec.gap > 0 else 1.0
    s = engine.semigroup(gen, t0, shift=spec.lambda0)
    ratio = float(np.max(np.abs(s) / u[:, None]))
    d = np.sqrt(gen.mass_weights)
    w = gen.eig.eigenvectors[:, -1] / d
    if w[np.argmax(np.abs(w))] < 0:
        w = -w
    c = max(0.0, float(np.min(w / u)))
    return PositivityHypotheses(True, u, float(t0), ratio, w, c, spec.lambda0, spec.simple)


def default_times(gap: float, count: int = DEFAULT_POINTS, t_max: float | None = None) -> np.ndarray:
    """Geometric grid from 1e-3/gap to 50/gap (optionally capped at t_max)."""
    hi = 50.0 / gap if t_max is None else min(50.0 / gap, t_max)
    return np.geomspace(1e-3 / gap, hi, count)


def _check_grid(times: np.ndarray) -> None:
    if times.size < 10:
        raise ValueError(f"time grid needs at least 10 points, got {times.size}")
    if times[0] <= 0:
        raise ValueError("time grid must be positive")
    ratios = times[1:] / times[:-1]
    if np.any(ratios <= 1) or np.ptp(ratios) > 1e-8 * ratios.mean():
        raise ValueError("time grid must be geometric with ratio > 1")
    if times[-1] / times[0] < 1e3 * (1 - 1e-12):
        raise ValueError("time grid must span at least 3 decades")


def minimal_positivity_time(gen: Generator, times=None, eps: float = DEFAULT_EPS) -> PositivityCertificate:
    """Scan the sign of R(t) over a geometric time grid.

    t1 is the first grid time from which on every sampled minimum entry is
    >= -eps * ||R(t)||_inf.  Nothing is claimed between grid points.  For
    Metzler generators positivity is exact and the scan is only recorded.
    """
    spec = engine.spectrum(gen)
    if times is None:
        if not (spec.simple and np.isfinite(spec.gap)):
            return PositivityCertificate("inconclusive", [], eps=eps,
                                         diagnostic="no spectral gap to scale the default grid")
        times = default_times(spec.gap)
    times = np.asarray(times, dtype=float)
    _check_grid(times)

    prop = engine.Propagator(gen, shift=spec.lambda0)
    series, thresholds, negative = [], [], []
    r = None
    for t in times:
        r = prop(float(t))
        lo = float(r.min())
        thr = eps * float(np.max(np.sum(np.abs(r), axis=1)))
        series.append((float(t), lo))
        thresholds.append(thr)
        negative.append(lo < -thr)
    negative = np.array(negative)

    exact_positive = engine.is_metzler(gen, tol=0.0)[0]
    if exact_positive or not negative.any():
        verdict, t1 = "positive", float(times[0])
    elif negative[-1]:
        verdict, t1 = "not_eventually_positive", None
    else:
        last_bad = int(np.flatnonzero(negative)[-1])
        verdict, t1 = "eventually_positive", float(times[last_bad + 1])

    diagnostic = ""
    if not spec.simple:
        verdict = "inconclusive"
        diagnostic = (f"dominant eigenvalue not simple: {spec.eigenvalues[0]:.10g}, "
                      f"{spec.eigenvalues[1]:.10g}")
    domination = None
    if verdict in ("positive", "eventually_positive"):
        domination = float(r.min())
    return PositivityCertificate(verdict, series, t1, domination, eps, thresholds, diagnostic)


def strong_positivity_certificate(gen: Generator, u, f, t: float) -> float:
    """Largest c with exp(-lambda0 t) S(t) f >= c u (negative if there is none)."""
    u = _check_u(gen, u)
    f = np.asarray(f, dtype=float)
    if f.shape != (gen.n,) or np.any(f < 0) or not np.any(f > 0):
        raise ValueError("f must be nonnegative and nonzero")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    lam0 = engine.spectral_bound(gen)
    g = engine.semigroup(gen, t, shift=lam0) @ f
    return float(np.min(g / u))


# interface aliases
Theorem81Report = PositivityHypotheses
check_theorem_8_1_hypotheses = check_positivity_hypotheses
