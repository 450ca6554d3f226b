"""Dense real linear algebra used by every other module.

Symmetric problems go through ``sym_eig``; everything else goes through a
Pade scaling-and-squaring exponential written out here so that the two
routes can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_RTOL = 1e-12
MAX_CONDITION = 1e14


class LinalgError(ValueError):
    """Raised when an input violates a linear-algebra precondition."""


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise LinalgError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name} contains non-finite entries")
    return a


def _square(a, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {a.shape}")
    return a


def asymmetry(a: np.ndarray) -> float:
    """Relative asymmetry max|a - a^T| / max(1, max|a|)."""
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - a.T))) / scale


def sym_eig(a, rtol: float = SYMMETRY_RTOL) -> EigenDecomposition:
    a = _square(a)
    asym = asymmetry(a)
    if asym > rtol:
        raise LinalgError(f"matrix is not symmetric: relative asymmetry {asym:.3e} > {rtol:.1e}")
    w, q = np.linalg.eigh(0.5 * (a + a.T))
    return EigenDecomposition(w, q)


# Pade coefficients and 1-norm thresholds, Higham (2005).
_PADE = {
    3: (1.495585217958292e-2, (120.0, 60.0, 12.0, 1.0)),
    5: (2.539398330063230e-1, (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0)),
    7: (9.504178996162932e-1,
        (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0)),
    9: (2.097847961257068e0,
        (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
         2162160.0, 110880.0, 3960.0, 90.0, 1.0)),
}
_THETA13 = 5.371920351148152
_B13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
        33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0)


def _pade_uv(a: np.ndarray, m: int):
    n = a.shape[0]
    ident = np.eye(n)
    a2 = a @ a
    if m in _PADE:
        b = _PADE[m][1]
        powers = [ident, a2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ a2)
        u = sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
        v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
        return a @ u, v
    b = _B13
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return u, v


def expm_pade(a) -> np.ndarray:
    """exp(a) by scaling and squaring with a [m/m] Pade approximant."""
    a = _square(a)
    norm1 = float(np.max(np.sum(np.abs(a), axis=0)))
    for m in (3, 5, 7, 9):
        if norm1 <= _PADE[m][0]:
            u, v = _pade_uv(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA13)))) if norm1 > 0 else 0
    u, v = _pade_uv(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm_sym(decomp: EigenDecomposition, t: float) -> np.ndarray:
    q = decomp.eigenvectors
    return (q * np.exp(t * decomp.eigenvalues)) @ q.T


def expm(a, t: float = 1.0, method: str = "auto") -> np.ndarray:
    """Matrix exponential exp(t a) for t >= 0.

    ``method`` is ``"eig"`` (symmetric input only), ``"pade"``, or ``"auto"``,
    which picks ``"eig"`` whenever ``a`` is symmetric to within rounding.
    """
    a = _square(a)
    if not t >= 0.0:
        raise LinalgError(f"negative time t={t}; semigroups are only defined forward in time")
    n = a.shape[0]
    if t == 0.0:
        return np.eye(n)
    if method == "auto":
        method = "eig" if asymmetry(a) <= SYMMETRY_RTOL else "pade"
    if method == "eig":
        return expm_sym(sym_eig(a), t)
    if method == "pade":
        return expm_pade(t * a)
    raise ValueError(f"unknown expm method {method!r}")


def spectral_norm(a) -> float:
    """Largest singular value."""
    a = as_matrix(a)
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def weighted_norm(a, weights) -> float:
    """Operator norm of ``a`` on R^n with inner product sum_i w_i x_i y_i."""
    d = np.sqrt(np.asarray(weights, dtype=float))
    return spectral_norm((d[:, None] * np.asarray(a)) / d[None, :])


def condition_number(a) -> float:
    a = _square(a)
    with np.errstate(all="ignore"):
        c = np.linalg.cond(a)
    return float(c) if np.isfinite(c) else float("inf")


def solve(a, b, max_condition: float = MAX_CONDITION) -> np.ndarray:
    a = _square(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise LinalgError(f"right-hand side has length {b.shape[0]}, matrix has {a.shape[0]} rows")
    cond = condition_number(a)
    if cond > max_condition:
        raise LinalgError(f"matrix is singular or ill-conditioned (condition estimate {cond:.3e})")
    return np.linalg.solve(a, b)
