"""P1 finite elements for symmetric forms on an interval.

The form is

    a(u, v) = int u' v' + int m u v + (u(l), u(r)) B (v(l), v(r))^T

on H^1 (or H^1_0 with ``dirichlet=True``), discretized on a uniform mesh
with a lumped mass matrix.  The associated generator is A = -M^{-1} K.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import engine
from .engine import Generator

ALPHA_TOL = 1e-10
OMEGA_CANDIDATES = (0.0,) + tuple(2.0**k for k in range(17))


class FormError(ValueError):
    pass


@dataclass(frozen=True)
class FormSpec:
    interval: tuple[float, float] = (0.0, 1.0)
    n_cells: int = 100
    potential: Callable | None = None
    boundary_matrix: Sequence[Sequence[float]] | None = None
    label: str = ""
    dirichlet: bool = False

    def __post_init__(self):
        left, right = self.interval
        if not left < right:
            raise FormError(f"empty interval {self.interval}")
        if self.n_cells < 2:
            raise FormError(f"need at least 2 cells, got {self.n_cells}")
        if self.dirichlet and self.boundary_matrix is not None:
            raise FormError("a boundary coupling has no effect on H^1_0")


@dataclass(frozen=True)
class AssembledForm:
    stiffness: np.ndarray
    mass: np.ndarray  # lumped diagonal
    vnorm: np.ndarray  # gradient stiffness + diag(mass)
    nodes: np.ndarray
    h: float
    label: str = ""

    @property
    def symmetric(self) -> bool:
        k = self.stiffness
        return bool(np.max(np.abs(k - k.T)) <= 1e-12 * max(1.0, np.max(np.abs(k))))

    def energy(self, u, v=None) -> float:
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ self.stiffness @ v)


def _sample_potential(potential, x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        try:
            vals = np.asarray(potential(x), dtype=float)
        except (TypeError, ValueError):
            vals = np.array([float(potential(xi)) for xi in x])
    vals = np.broadcast_to(vals, x.shape).astype(float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise FormError(f"potential is not finite at node {i} (x = {x[i]:.6g})")
    return vals


def assemble(spec: FormSpec) -> AssembledForm:
    left, right = spec.interval
    n = spec.n_cells
    x = np.linspace(left, right, n + 1)
    h = (right - left) / n

    kgrad = np.zeros((n + 1, n + 1))
    idx = np.arange(n)
    kgrad[idx, idx] += 1.0 / h
    kgrad[idx + 1, idx + 1] += 1.0 / h
    kgrad[idx, idx + 1] -= 1.0 / h
    kgrad[idx + 1, idx] -= 1.0 / h

    mass = np.full(n + 1, h)
    mass[[0, -1]] = h / 2

    k = kgrad.copy()
    if spec.potential is not None:
        k[np.diag_indices(n + 1)] += mass * _sample_potential(spec.potential, x)
    if spec.boundary_matrix is not None:
        b = np.asarray(spec.boundary_matrix, dtype=float)
        if b.shape != (2, 2) or not np.all(np.isfinite(b)):
            raise FormError("boundary matrix must be a finite 2x2 array")
        ends = [0, n]
        k[np.ix_(ends, ends)] += b
    vnorm = kgrad + np.diag(mass)

    if spec.dirichlet:
        keep = slice(1, n)
        k, vnorm, mass, x = k[keep, keep], vnorm[keep, keep], mass[keep], x[keep]
    return AssembledForm(k, mass, vnorm, x, h, spec.label)


def generator_from_form(form: AssembledForm) -> Generator:
    a = -form.stiffness / form.mass[:, None]
    return Generator(a, symmetric=form.symmetric, mass_weights=form.mass,
                     label=form.label, nodes=form.nodes)


def _min_generalized(a: np.ndarray, b: np.ndarray) -> float:
    return float(scipy.linalg.eigh(a, b, eigvals_only=True, subset_by_index=[0, 0])[0])


@dataclass(frozen=True)
class Ellipticity:
    alpha: float
    omega: float
    positive_coercive: bool


def ellipticity_constants(form: AssembledForm) -> Ellipticity:
    """First omega on the dyadic grid with a(u,u) + omega |u|_H^2 >= alpha |u|_V^2, alpha > 0."""
    if not form.symmetric:
        raise FormError("ellipticity constants are computed for symmetric forms only")
    m = np.diag(form.mass)
    for omega in OMEGA_CANDIDATES:
        alpha = _min_generalized(form.stiffness + omega * m, form.vnorm)
        if alpha > ALPHA_TOL:
            return Ellipticity(alpha, omega, omega == 0.0)
    raise FormError("form not elliptic at this discretization")


def embedding_constant(form: AssembledForm) -> float:
    """Smallest c_H with |u|_H^2 <= c_H |u|_V^2."""
    vals = scipy.linalg.eigh(np.diag(form.mass), form.vnorm, eigvals_only=True)
    return float(vals[-1])


def accretivity_margin(form: AssembledForm) -> float:
    """min over u of a(u,u) / |u|_H^2; the form is accretive iff this is >= 0."""
    return _min_generalized(form.stiffness, np.diag(form.mass))


def coercive_decay_bound(alpha: float, form: AssembledForm) -> float:
    """Decay rate delta = alpha / c_H with |S(t)| <= exp(-delta t) in the H norm."""
    ell = ellipticity_constants(form)
    if not ell.positive_coercive:
        raise FormError("form is not positive-coercive; only |S(t)| <= 1 holds for accretive forms")
    if not 0 < alpha <= ell.alpha * (1 + 1e-12):
        raise FormError(f"alpha={alpha} is not a valid coercivity constant (largest is {ell.alpha})")
    return alpha / embedding_constant(form)


@dataclass(frozen=True)
class BeurlingDenyReport:
    min_q: float  # min over samples of -a(u+, u-)
    tolerance: float
    samples: int

    @property
    def satisfied(self) -> bool:
        return self.min_q >= -self.tolerance


def beurling_deny_check(form: AssembledForm, sample_count: int = 100, seed: int = 0,
                        vectors=None) -> BeurlingDenyReport:
    """Sampled lattice test: a(u+, u-) <= 0 for every u gives a positive semigroup.

    ``q = -a(u+, u-)`` is reported so that a violation shows up as q < 0.
    Explicit test ``vectors`` (rows) replace the random draws.
    """
    k = form.stiffness
    if vectors is None:
        if sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        rng = np.random.default_rng(seed)
        vectors = rng.standard_normal((sample_count, k.shape[0]))
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    pos = np.maximum(vectors, 0.0)
    neg = np.maximum(-vectors, 0.0)
    q = -np.einsum("si,ij,sj->s", pos, k, neg)
    tol = 1e-10 * float(np.max(np.abs(k)))
    return BeurlingDenyReport(float(q.min()), tol, int(vectors.shape[0]))


@dataclass(frozen=True)
class SweepRow:
    size: float
    spb: float
    gap: float
    delta_fit: float | None


@dataclass(frozen=True)
class SweepTable:
    rows: list[SweepRow]
    trend: str | None  # stable | collapsing | drifting; None for a single row


def gap_trend(gaps: Sequence[float], stable_rtol: float = 0.1, collapse_factor: float = 2.0) -> str | None:
    if len(gaps) < 2:
        return None
    prev, last = gaps[-2], gaps[-1]
    if abs(last - prev) < stable_rtol * abs(prev):
        return "stable"
    if last * collapse_factor <= prev:
        return "collapsing"
    return "drifting"


def sweep_domain(builder: Callable[[float], Generator], sizes: Sequence[float]) -> SweepTable:
    """Rebuild a generator at each size and track its spectral gap.

    A gap that settles as the domain grows is the finite-dimensional stand-in
    for asymptotic compactness; a gap that collapses is its failure.
    """
    if len(sizes) < 1:
        raise ValueError("need at least one size")
    rows = []
    for size in sizes:
        gen = builder(size)
        spec = engine.spectrum(gen)
        delta = None
        if spec.simple and np.isfinite(spec.gap):
            proj = engine.equilibrium_projection(gen, spec)
            profile = engine.convergence_profile(gen, proj, engine.rate_fit_times(spec.gap))
            delta = engine.fit_exponential_rate(profile, floor=engine.FIT_FLOOR)[1]
        rows.append(SweepRow(float(size), spec.lambda0, spec.gap, delta))
    return SweepTable(rows, gap_trend([r.gap for r in rows]))
