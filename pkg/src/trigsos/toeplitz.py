"""Gram matrices over the frequency grid {-s..s}^d and the Toeplitz subspace.

Conventions: the feature map is ``phi_w(x) = n^{-1/2} exp(2 i pi w.x)`` with
``n = (2s+1)^d``, so that ``phi(x)^* A phi(x) = n^{-1} sum_{a,b} A[a,b]
exp(2 i pi (b - a).x)``. The shift of entry ``(a, b)`` is ``b - a``; a matrix is
(multilevel) Toeplitz when its entries only depend on the shift.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .fourier import TrigPoly

MAX_GRID_SIZE = 4096


class DegreeError(ValueError):
    """Polynomial degree exceeds what the relaxation level can represent."""


class NonToeplitzWarning(UserWarning):
    pass


class FreqGrid:
    """Lexicographically ordered grid ``{-s..s}^d`` with cached shift classes."""

    def __init__(self, dim: int, halfwidth: int):
        if dim < 1 or halfwidth < 0:
            raise ValueError("need dim >= 1 and halfwidth >= 0")
        self.dim = int(dim)
        self.halfwidth = int(halfwidth)
        self.side = 2 * self.halfwidth + 1
        self.size = self.side ** self.dim
        if self.size > MAX_GRID_SIZE:
            raise ValueError(f"grid of size {self.size} exceeds the dense limit {MAX_GRID_SIZE}")

    def __repr__(self):
        return f"FreqGrid(dim={self.dim}, halfwidth={self.halfwidth})"

    def __eq__(self, other):
        return isinstance(other, FreqGrid) and (self.dim, self.halfwidth) == (other.dim, other.halfwidth)

    def __hash__(self):
        return hash((self.dim, self.halfwidth))

    @cached_property
    def points(self) -> np.ndarray:
        s, d = self.halfwidth, self.dim
        axes = [np.arange(-s, s + 1)] * d
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        pts.setflags(write=False)
        return pts

    def index(self, freq) -> np.ndarray:
        """Position(s) of frequency vector(s) in the grid ordering."""
        w = np.asarray(freq, dtype=np.int64)
        if np.any(np.abs(w) > self.halfwidth):
            raise IndexError("frequency outside the grid")
        radix = self.side ** np.arange(self.dim - 1, -1, -1)
        return (w + self.halfwidth) @ radix

    # -- shift classes ---------------------------------------------------
    @property
    def shift_side(self) -> int:
        return 4 * self.halfwidth + 1

    @property
    def n_shifts(self) -> int:
        return self.shift_side ** self.dim

    @cached_property
    def shifts(self) -> np.ndarray:
        """All shifts ``b - a`` in ``{-2s..2s}^d``, lexicographic."""
        t = 2 * self.halfwidth
        axes = [np.arange(-t, t + 1)] * self.dim
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        pts.setflags(write=False)
        return pts

    def shift_index(self, shift) -> np.ndarray:
        shift = np.asarray(shift, dtype=np.int64)
        t = 2 * self.halfwidth
        if np.any(np.abs(shift) > t):
            raise IndexError("shift outside {-2s..2s}^d")
        radix = self.shift_side ** np.arange(self.dim - 1, -1, -1)
        return (shift + t) @ radix

    @cached_property
    def class_of(self) -> np.ndarray:
        """``class_of[a, b]`` is the flat shift index of ``b - a``."""
        t = 2 * self.halfwidth
        out = np.zeros((self.size, self.size), dtype=np.int64)
        for i in range(self.dim):
            p = self.points[:, i]
            out *= self.shift_side
            out += p[None, :] - p[:, None] + t
        out.setflags(write=False)
        return out

    @cached_property
    def class_sizes(self) -> np.ndarray:
        """Number of grid pairs in each shift class."""
        sizes = np.prod(self.side - np.abs(self.shifts), axis=1)
        sizes.setflags(write=False)
        return sizes

    @property
    def negated(self) -> np.ndarray:
        """Index of ``-shift`` for each shift index."""
        return np.arange(self.n_shifts)[::-1]

    def feature_map(self, x) -> np.ndarray:
        """``phi(x)`` for one point or a batch (trailing axis ``d``)."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        phase = 2 * np.pi * (x @ self.points.T.astype(float))
        return np.exp(1j * phase) / np.sqrt(self.size)


@lru_cache(maxsize=32)
def freq_grid(dim: int, halfwidth: int) -> FreqGrid:
    return FreqGrid(dim, halfwidth)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Hermitian matrix indexed by a :class:`FreqGrid`."""

    grid: FreqGrid
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        n = self.grid.size
        if a.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got {a.shape}")
        scale = max(float(np.max(np.abs(a), initial=0.0)), 1e-300)
        if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-12 * scale:
            raise ValueError("Gram matrix is not Hermitian")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return self.grid.size

    def quadratic_form(self, x) -> np.ndarray:
        """``phi(x)^* A phi(x)`` at one or many points."""
        phi = self.grid.feature_map(x)
        val = np.einsum("...i,ij,...j->...", phi.conj(), self.entries, phi)
        return val.real

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def min_eigenvalue(self) -> float:
        return float(self.eigvalsh()[0])

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def toeplitz_deviation(self) -> float:
        """Largest entrywise distance to the Toeplitz projection."""
        return float(np.max(np.abs(self.entries - project_toeplitz(self).entries), initial=0.0))

    def to_dict(self) -> dict:
        flat = self.entries.reshape(-1)
        return {
            "dim": self.grid.dim,
            "halfwidth": self.grid.halfwidth,
            "size": self.size,
            "order": "lexicographic",
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GramMatrix":
        grid = freq_grid(int(doc["dim"]), int(doc["halfwidth"]))
        pairs = np.asarray(doc["entries"], dtype=float).reshape(-1, 2)
        return cls(grid, (pairs[:, 0] + 1j * pairs[:, 1]).reshape(grid.size, grid.size))


def class_sums(grid: FreqGrid, a: np.ndarray) -> np.ndarray:
    """Sum of entries over each shift class (complex vector of length ``n_shifts``)."""
    idx = grid.class_of.reshape(-1)
    a = np.asarray(a).reshape(-1)
    re = np.bincount(idx, weights=a.real, minlength=grid.n_shifts)
    im = np.bincount(idx, weights=a.imag, minlength=grid.n_shifts)
    return re + 1j * im


def toeplitz_from_values(grid: FreqGrid, values: np.ndarray) -> np.ndarray:
    """Dense matrix with entry ``values[shift(a, b)]``."""
    return np.asarray(values)[grid.class_of]


def toeplitz_representation(f: TrigPoly, s: int) -> GramMatrix:
    """The unique Toeplitz Gram matrix ``F`` with ``phi(x)^* F phi(x) = f(x)``.

    Entry ``(a, b)`` equals ``c(b - a) / prod_i (1 - |b_i - a_i| / (2s + 1))``.
    """
    if f.degree > 2 * s:
        raise DegreeError(f"degree {f.degree} exceeds 2s = {2 * s}")
    grid = freq_grid(f.dim, s)
    t = np.zeros(grid.n_shifts, dtype=complex)
    if len(f):
        t[grid.shift_index(f.freqs)] = f.values
    weights = grid.class_sizes / grid.size
    return GramMatrix(grid, toeplitz_from_values(grid, t / weights))


def gram_to_poly(a: GramMatrix) -> TrigPoly:
    """Trigonometric polynomial ``x -> phi(x)^* A phi(x)``."""
    grid = a.grid
    coeffs = class_sums(grid, a.entries) / grid.size
    return TrigPoly.from_arrays(grid.shifts, coeffs, symmetrize=True)


def project_toeplitz(a: GramMatrix) -> GramMatrix:
    """Orthogonal projection onto Toeplitz matrices: average over each shift class."""
    grid = a.grid
    t = class_sums(grid, a.entries) / grid.class_sizes
    return GramMatrix(grid, toeplitz_from_values(grid, t))


def project_toeplitz_complement(a: GramMatrix) -> GramMatrix:
    return GramMatrix(a.grid, a.entries - project_toeplitz(a).entries)


def moment_projector(sigma: GramMatrix, r: int) -> GramMatrix:
    """Restrict a level-``s`` Toeplitz matrix to the level-``r`` subgrid.

    Entries with both indices in ``{-r..r}^d`` are kept and multiplied by
    ``(2s+1)^d / (2r+1)^d``. Non-Toeplitz input is projected first, with a
    :class:`NonToeplitzWarning`.
    """
    grid = sigma.grid
    if r > grid.halfwidth or r < 0:
        raise ValueError(f"need 0 <= r <= s = {grid.halfwidth}, got r = {r}")
    scale = max(float(np.max(np.abs(sigma.entries), initial=0.0)), 1e-300)
    if sigma.toeplitz_deviation() > 1e-8 * scale:
        warnings.warn("moment_projector received a non-Toeplitz matrix; projecting first",
                      NonToeplitzWarning, stacklevel=2)
        sigma = project_toeplitz(sigma)
    small = freq_grid(grid.dim, r)
    keep = grid.index(small.points)
    block = sigma.entries[np.ix_(keep, keep)] * (grid.size / small.size)
    return GramMatrix(small, block)


def moment_matrix(grid: FreqGrid, x) -> GramMatrix:
    """Rank-one moment matrix ``phi(x) phi(x)^*``."""
    phi = grid.feature_map(x)
    return GramMatrix(grid, np.outer(phi, phi.conj()))
