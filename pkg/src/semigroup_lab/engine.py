"""Positivity, irreducibility and long-time behaviour of matrix semigroups.

A :class:`Generator` carries a matrix ``A`` together with positive mass
weights ``w`` defining the inner product ``<f, g> = sum_i w_i f_i g_i``.
Generators flagged ``symmetric`` are self-adjoint for that inner product,
i.e. ``diag(w) A`` is a symmetric matrix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matrix_core as mc

WEIGHTED_SYMMETRY_RTOL = 1e-10
IRREDUCIBILITY_THRESHOLD = 1e-12
KERNEL_TOL = 1e-7
# distances below this are dominated by rounding in the explicit matrix path
FIT_FLOOR = 1e-11


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class Generator:
    matrix: np.ndarray
    symmetric: bool = False
    mass_weights: np.ndarray | None = None
    label: str = ""
    nodes: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        a = mc.as_matrix(self.matrix, "generator matrix").copy()
        n = a.shape[0]
        if a.shape[1] != n:
            raise mc.LinalgError(f"generator must be square, got {a.shape}")
        w = np.ones(n) if self.mass_weights is None else np.array(self.mass_weights, dtype=float)
        if w.shape != (n,) or not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise mc.LinalgError("mass weights must be a finite, strictly positive vector of length n")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "mass_weights", w)
        if self.symmetric:
            asym = mc.asymmetry(w[:, None] * a)
            if asym > WEIGHTED_SYMMETRY_RTOL:
                raise mc.LinalgError(
                    f"generator flagged symmetric but weighted asymmetry is {asym:.3e}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def symmetrized(self) -> np.ndarray:
        """D A D^{-1} with D = diag(sqrt(w)); symmetric for symmetric generators."""
        d = np.sqrt(self.mass_weights)
        b = d[:, None] * self.matrix / d[None, :]
        return 0.5 * (b + b.T) if self.symmetric else b

    @cached_property
    def eig(self) -> mc.EigenDecomposition:
        """Eigendecomposition of :meth:`symmetrized` (symmetric generators only)."""
        if not self.symmetric:
            raise mc.LinalgError("eigendecomposition path needs a symmetric generator")
        return mc.sym_eig(self.symmetrized())

    def adjoint(self) -> np.ndarray:
        """Adjoint of A for the weighted inner product: W^{-1} A^T W."""
        w = self.mass_weights
        return self.matrix.T * w[None, :] / w[:, None]


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # sorted by real part, descending
    lambda0: float
    gap: float  # lambda0 - max{Re mu : mu != lambda0}; inf when n == 1
    simple: bool


@dataclass(frozen=True)
class EquilibriumProjection:
    lambda0: float
    u: np.ndarray
    phi: np.ndarray
    rank1: np.ndarray
    weights: np.ndarray
    perron: bool | None = None  # u, phi > 0; None unless G is Metzler and irreducible

    def apply(self, f) -> np.ndarray:
        return self.u * float(np.sum(self.weights * self.phi * np.asarray(f, dtype=float)))


class Propagator:
    """Evaluates t -> exp(t (A - shift)) repeatedly, reusing one factorization.

    Symmetric generators use the eigendecomposition of the symmetrized
    matrix; the rest go through Pade scaling and squaring per call.
    """

    def __init__(self, gen: Generator, shift: float = 0.0):
        self.gen = gen
        self.shift = shift
        self._d = np.sqrt(gen.mass_weights)
        self._eig = gen.eig if gen.symmetric else None

    def __call__(self, t: float) -> np.ndarray:
        if t < 0:
            raise mc.LinalgError(f"negative time t={t}")
        if self._eig is not None:
            q = self._eig.eigenvectors
            e = (q * np.exp(t * (self._eig.eigenvalues - self.shift))) @ q.T
            return e * (self._d[None, :] / self._d[:, None])
        a = self.gen.matrix - self.shift * np.eye(self.gen.n)
        return mc.expm(a, t, method="pade")


def semigroup(gen: Generator, t: float, shift: float = 0.0) -> np.ndarray:
    return Propagator(gen, shift)(t)


def spectrum(gen: Generator) -> Spectrum:
    if gen.symmetric:
        ev = gen.eig.eigenvalues[::-1].astype(complex)
    else:
        try:
            ev = np.linalg.eigvals(gen.matrix)
        except np.linalg.LinAlgError as exc:
            raise SpectralError(f"eigensolve failed: {exc}") from exc
        ev = ev[np.lexsort((-ev.imag, -ev.real))]
    lam0 = float(ev[0].real)
    rest = ev.real[1:]
    gap = lam0 - float(rest[0]) if rest.size else float("inf")
    simple = gap >= 1e-8 * max(1.0, abs(lam0)) and abs(ev[0].imag) <= 1e-8 * max(1.0, abs(lam0))
    return Spectrum(ev, lam0, gap, bool(simple))


def spectral_bound(gen: Generator) -> float:
    return spectrum(gen).lambda0


def is_metzler(gen: Generator, tol: float = 1e-12) -> tuple[bool, float]:
    """True iff every off-diagonal entry is >= -tol; also returns the smallest one."""
    a = gen.matrix
    if gen.n == 1:
        return True, 0.0
    off = a[~np.eye(gen.n, dtype=bool)]
    worst = float(off.min())
    return worst >= -tol, worst


def _reaches_all(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            queue.append(j)
    return bool(seen.all())


def is_irreducible(gen: Generator, threshold: float = IRREDUCIBILITY_THRESHOLD) -> bool:
    """Strong connectivity of the digraph with an edge i -> j whenever A[j, i] > threshold."""
    ok, worst = is_metzler(gen)
    if not ok:
        raise ValueError(
            f"irreducibility requires a positive semigroup (off-diagonal entry {worst:.3e} < 0)")
    adj = gen.matrix.T > threshold
    np.fill_diagonal(adj, False)
    # strongly connected <=> node 0 reaches everything forwards and backwards
    return _reaches_all(adj) and _reaches_all(adj.T)


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def _dominant_vector(a: np.ndarray, lam0: float) -> np.ndarray:
    vals, vecs = np.linalg.eig(a)
    k = int(np.argmin(np.abs(vals - lam0)))
    return np.real(vecs[:, k])


def equilibrium_projection(gen: Generator, spec: Spectrum | None = None) -> EquilibriumProjection:
    """Rank-one spectral projection P f = <phi, f> u at the dominant eigenvalue.

    ``u`` has unit weighted norm and ``<phi, u> = 1``; both are sign
    normalized so that their largest-magnitude entry is positive.
    """
    spec = spec or spectrum(gen)
    if not spec.simple:
        ev = spec.eigenvalues
        raise SpectralError(
            f"dominant eigenvalue is not simple: closest pair {ev[0]:.10g}, {ev[1]:.10g}")
    w = gen.mass_weights
    lam0 = spec.lambda0
    if gen.symmetric:
        d = np.sqrt(w)
        v = gen.eig.eigenvectors[:, -1]
        u = v / d
        phi = u.copy()
    else:
        u = _dominant_vector(gen.matrix, lam0)
        phi = _dominant_vector(gen.adjoint(), lam0)
    u = _sign_normalize(u)
    u = u / np.sqrt(np.sum(w * u * u))
    phi = _sign_normalize(phi)
    pairing = float(np.sum(w * phi * u))
    if abs(pairing) < 1e-14:
        raise SpectralError("left and right dominant eigenvectors are orthogonal")
    phi = phi / pairing
    rank1 = np.outer(u, w * phi)
    perron = None
    if is_metzler(gen)[0] and is_irreducible(gen):
        perron = bool(np.all(u > 0) and np.all(phi > 0))
    return EquilibriumProjection(lam0, u, phi, rank1, w.copy(), perron)


def convergence_profile(gen: Generator, proj: EquilibriumProjection, times,
                        explicit: bool = False) -> list[tuple[float, float]]:
    """d(t) = || exp(-lambda0 t) S(t) - P || in the mass-weighted operator norm.

    Symmetric generators read d(t) off the spectrum unless ``explicit`` asks
    for the matrix difference to be formed and measured.
    """
    times = [float(t) for t in times]
    if not times or min(times) <= 0:
        raise ValueError("times must be a non-empty list of positive numbers")
    if gen.symmetric and not explicit:
        # same eigenbasis diagonalizes S(t) and P: the norm is the largest
        # surviving exponential
        ev = gen.eig.eigenvalues[:-1]
        return [(t, float(np.exp(t * (ev[-1] - proj.lambda0))) if ev.size else 0.0) for t in times]
    prop = Propagator(gen, shift=proj.lambda0)
    return [(t, mc.weighted_norm(prop(t) - proj.rank1, gen.mass_weights)) for t in times]


def rate_fit_times(gap: float, count: int = 41, start: float = 4.0, stop: float = 24.0) -> np.ndarray:
    """Evenly spaced times covering [start, stop] gap time-constants."""
    if not gap > 0:
        raise ValueError(f"need a positive spectral gap, got {gap}")
    return np.linspace(start, stop, count) / gap


def fit_exponential_rate(profile, floor: float = 1e-14) -> tuple[float, float]:
    """Least-squares fit d(t) ~ M exp(-delta t); returns (M, delta)."""
    pts = np.array([(t, d) for t, d in profile if d > floor], dtype=float)
    if pts.shape[0] < 4:
        raise ValueError("profile too short or fully converged")
    slope, intercept = np.polyfit(pts[:, 0], np.log(pts[:, 1]), 1)
    return float(np.exp(intercept)), float(-slope)


@dataclass(frozen=True)
class Asymptotics:
    case: str  # decay_to_zero | converges_rank1 | not_convergent_fixed_functional | not_convergent_multi
    kernel_dim: int  # dim ker(A - lambda0)
    dual_kernel_dim: int  # dim ker(A^T - lambda0)
    shift: float
    peripheral: tuple[complex, ...] = ()


def _null_dim(a: np.ndarray, tol: float) -> int:
    return int(np.sum(np.linalg.svd(a, compute_uv=False) <= tol))


def classify_asymptotics(gen: Generator, shift: bool = True, tol: float = KERNEL_TOL) -> Asymptotics:
    """Four-way classification of exp(tA) by the kernels of A and its transpose.

    With ``shift`` the generator is first moved to spectral bound 0; without
    it the generator is analysed as given, which requires spb(A) <= tol.
    """
    ok, worst = is_metzler(gen)
    if not ok:
        raise ValueError(
            f"classification assumes a positive semigroup (off-diagonal entry {worst:.3e} < 0)")
    spec = spectrum(gen)
    s = spec.lambda0 if shift else 0.0
    if not shift and spec.lambda0 > tol:
        raise ValueError(f"semigroup is unbounded: spectral bound {spec.lambda0:.6g} > 0")
    a = gen.matrix - s * np.eye(gen.n)
    m = _null_dim(a, tol)
    k = _null_dim(a.T, tol)
    ev = spec.eigenvalues
    peripheral = tuple(complex(z) for z in ev
                       if abs(z.real - s) <= tol and abs(z.imag) > tol)
    if k == 0:
        case = "decay_to_zero"
    elif k == 1 and m == 1:
        case = "converges_rank1"
    elif k == 1:
        case = "not_convergent_fixed_functional"
    else:
        case = "not_convergent_multi"
    return Asymptotics(case, m, k, s, peripheral)
