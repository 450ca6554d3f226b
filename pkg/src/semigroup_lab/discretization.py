"""Generators for the model problems: Schroedinger operators on a truncated
line, diffusions with nonlocal boundary conditions and Schroedinger systems
with a matrix potential.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import forms
from .engine import Generator


class DiscretizationError(ValueError):
    pass


@dataclass(frozen=True)
class GridDescriptor:
    x_left: float
    x_right: float
    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 3:
            raise DiscretizationError(f"grid needs at least 3 nodes, got {self.n_nodes}")
        if not self.x_left < self.x_right:
            raise DiscretizationError(f"empty grid interval [{self.x_left}, {self.x_right}]")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_left, self.x_right, self.n_nodes)


def _sample(fn, x: np.ndarray, what: str = "potential") -> np.ndarray:
    if fn is None:
        return np.zeros_like(x)
    if np.isscalar(fn):
        vals = np.full_like(x, float(fn))
    else:
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).astype(float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise DiscretizationError(f"{what} is not finite at node {bad[0]} (x = {x[bad[0]]:.6g})")
    return vals


def rational_kernel_potential(x):
    """(6x^2 - 2) / (1 + x^2)^2; the Laplacian of 1/(1+x^2) divided by 1/(1+x^2)."""
    x = np.asarray(x, dtype=float)
    return (6.0 * x**2 - 2.0) / (1.0 + x**2) ** 2


def confined_potential(x, inner: float = 1.0, level: float = 1.0):
    """0 on [-inner, inner], ``level`` outside."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= inner, 0.0, level)


def schrodinger_1d(potential, L: float, n: int, label: str = "") -> Generator:
    """Delta - m on [-L, L] with Dirichlet walls, n interior nodes, central differences."""
    if not L > 0:
        raise DiscretizationError(f"half-width must be positive, got {L}")
    if n < 10:
        raise DiscretizationError(f"need at least 10 interior nodes, got {n}")
    h = 2.0 * L / (n + 1)
    x = -L + h * np.arange(1, n + 1)
    m = _sample(potential, x)
    a = np.zeros((n, n))
    i = np.arange(n)
    a[i, i] = -2.0 / h**2 - m
    a[i[:-1], i[:-1] + 1] = 1.0 / h**2
    a[i[1:], i[1:] - 1] = 1.0 / h**2
    return Generator(a, symmetric=True, mass_weights=np.full(n, h), label=label, nodes=x)


def absorption_1d(m, L: float, n: int, label: str = "") -> Generator:
    """Delta - m with a nonnegative absorption rate m that is not identically zero."""
    h = 2.0 * L / (n + 1)
    x = -L + h * np.arange(1, n + 1)
    vals = _sample(m, x, "absorption")
    if np.any(vals < 0):
        raise DiscretizationError("absorption rate must be nonnegative")
    if not np.any(vals > 0):
        raise DiscretizationError("absorption rate vanishes on the whole grid")
    return schrodinger_1d(m, L, n, label=label)


COUPLED_ENDS_BOUNDARY = ((1.0, 1.0), (1.0, 1.0))


def nonlocal_laplace_interval(n: int, label: str = "ex9_1") -> Generator:
    """Laplacian on (0, 1) with u'(0) = -u'(1) = u(0) + u(1), via its form."""
    if n < 4:
        raise DiscretizationError(f"need at least 4 cells, got {n}")
    spec = forms.FormSpec((0.0, 1.0), n, None, COUPLED_ENDS_BOUNDARY, label)
    return forms.generator_from_form(forms.assemble(spec))


def heat_interval(n: int, length: float = 1.0, dirichlet: bool = False, label: str = "") -> Generator:
    spec = forms.FormSpec((0.0, length), n, label=label, dirichlet=dirichlet)
    return forms.generator_from_form(forms.assemble(spec))


def point_mass(n: int, node: int) -> np.ndarray:
    p = np.zeros(n)
    p[node] = 1.0
    return p


def uniform_jump(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def nonlocal_dirichlet_diffusion(n: int, jump_weights, label: str = "ex4_1") -> Generator:
    """Finite-difference Laplacian on (0, 1) where each boundary value is
    replaced by an average of interior values.

    ``jump_weights`` is a pair of probability vectors over the n interior
    nodes, for the left and the right endpoint.
    """
    if n < 3:
        raise DiscretizationError(f"need at least 3 interior nodes, got {n}")
    left, right = (np.asarray(p, dtype=float) for p in jump_weights)
    for name, p in (("left", left), ("right", right)):
        if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DiscretizationError(f"{name} jump weights are not a probability vector over {n} nodes")
    h = 1.0 / (n + 1)
    a = np.zeros((n, n))
    i = np.arange(n)
    a[i, i] = -2.0
    a[i[:-1], i[:-1] + 1] = 1.0
    a[i[1:], i[1:] - 1] = 1.0
    a[0] += left
    a[-1] += right
    a /= h**2
    return Generator(a, symmetric=False, mass_weights=np.full(n, h), label=label,
                     nodes=h * np.arange(1, n + 1))


@dataclass(frozen=True)
class MatrixPotentialSpec:
    block_size: int
    sampler: Callable[[float], np.ndarray]
    kernel_vector: np.ndarray

    def check(self, x: np.ndarray) -> None:
        """Raise if some V(x_i) is not symmetric, negative semidefinite with kernel span{c}."""
        c = np.asarray(self.kernel_vector, dtype=float)
        big_n = self.block_size
        if c.shape != (big_n,) or not np.all(c > 0):
            raise DiscretizationError("kernel vector must be strictly positive with length N")
        c = c / np.linalg.norm(c)
        for i, xi in enumerate(x):
            v = np.asarray(self.sampler(xi), dtype=float)
            where = f"node {i} (x = {xi:.6g})"
            if v.shape != (big_n, big_n) or not np.all(np.isfinite(v)):
                raise DiscretizationError(f"V is not a finite {big_n}x{big_n} matrix at {where}")
            if np.max(np.abs(v - v.T)) > 1e-12 * max(1.0, np.max(np.abs(v))):
                raise DiscretizationError(f"V is not symmetric at {where}")
            vals, vecs = np.linalg.eigh(v)
            if vals[-1] > 1e-10:
                raise DiscretizationError(f"V is not negative semidefinite at {where}")
            order = np.argsort(np.abs(vals))
            if abs(vals[order[0]]) > 1e-10:
                raise DiscretizationError(f"V has trivial kernel at {where}")
            if big_n > 1 and abs(vals[order[1]]) < 1e-6:
                raise DiscretizationError(f"kernel of V is more than one-dimensional at {where}")
            cosine = min(1.0, abs(float(vecs[:, order[0]] @ c)))
            if np.arccos(cosine) > 1e-6:
                raise DiscretizationError(f"kernel of V is not spanned by c at {where}")


def constant_potential(v, c) -> MatrixPotentialSpec:
    v = np.asarray(v, dtype=float)
    return MatrixPotentialSpec(v.shape[0], lambda _x: v, np.asarray(c, dtype=float))


def projected_system_potential(block_size: int = 3) -> MatrixPotentialSpec:
    """x-independent potential with kernel span{(1, ..., 1)}.

    For N = 3 this is -(4 v1 v1^T + v2 v2^T) with v1 = (1, 1, -2) and
    v2 = (2, -1, -1), whose (1, 2) entry is -2.  Other N use
    -P diag(1..N) P with P the projection onto the complement of the ones.
    """
    c = np.ones(block_size)
    if block_size == 1:
        return constant_potential(np.zeros((1, 1)), c)
    if block_size == 3:
        v1 = np.array([1.0, 1.0, -2.0])
        v2 = np.array([2.0, -1.0, -1.0])
        return constant_potential(-(4.0 * np.outer(v1, v1) + np.outer(v2, v2)), c)
    p = np.eye(block_size) - np.full((block_size, block_size), 1.0 / block_size)
    v = -p @ np.diag(np.arange(1.0, block_size + 1)) @ p
    return constant_potential(0.5 * (v + v.T), c)


def schrodinger_system(grid: GridDescriptor, pot: MatrixPotentialSpec, boundary: str = "neumann",
                       label: str = "ex9_2") -> Generator:
    """Delta (x) I_N + V(x) on a 1-D grid; unknowns ordered node-major.

    Neumann ends use the lumped-mass stencil, so the constant field c (x) 1
    stays an exact kernel vector for x-independent V.
    """
    big_n = pot.block_size
    if big_n * grid.n_nodes > 5000:
        raise DiscretizationError(f"system too large: N * n = {big_n * grid.n_nodes} > 5000")
    x = grid.nodes
    pot.check(x)
    if boundary == "neumann":
        lap = heat_interval(grid.n_nodes - 1, grid.x_right - grid.x_left)
    elif boundary == "dirichlet":
        lap = heat_interval(grid.n_nodes - 1, grid.x_right - grid.x_left, dirichlet=True)
        x = x[1:-1]
    else:
        raise DiscretizationError(f"unknown boundary condition {boundary!r}")
    n = x.size
    a = np.kron(lap.matrix, np.eye(big_n))
    for i, xi in enumerate(x):
        blk = slice(i * big_n, (i + 1) * big_n)
        a[blk, blk] += np.asarray(pot.sampler(xi), dtype=float)
    w = np.kron(lap.mass_weights, np.ones(big_n))
    return Generator(a, symmetric=True, mass_weights=w, label=label, nodes=np.repeat(x, big_n))


# interface aliases
potential_example_7_2 = rational_kernel_potential
example_9_2_potential = projected_system_potential
