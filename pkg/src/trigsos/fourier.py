"""Sparse Fourier representation of real trigonometric polynomials on [0, 1]^d.

A :class:`TrigPoly` stores the coefficient map ``omega -> c(omega)`` of

    f(x) = sum_omega c(omega) exp(2 i pi omega . x)

with Hermitian symmetry ``c(-omega) = conj(c(omega))`` so that ``f`` is real.
Both ``omega`` and ``-omega`` are stored.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from typing import Any

import numpy as np
import scipy.fft as sfft

PRUNE_RTOL = 1e-15
HERMITIAN_RTOL = 1e-12


class PolyFormatError(ValueError):
    """Raised for malformed polynomial documents or inconsistent inputs."""


def _lexsort_rows(freqs: np.ndarray) -> np.ndarray:
    if freqs.shape[0] == 0:
        return np.arange(0)
    return np.lexsort(freqs.T[::-1])


def _combine(freqs: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum values sharing the same frequency row."""
    if freqs.shape[0] == 0:
        return freqs, values
    uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    re = np.bincount(inv, weights=values.real, minlength=len(uniq))
    im = np.bincount(inv, weights=values.imag, minlength=len(uniq))
    return uniq, re + 1j * im


class TrigPoly:
    """Real trigonometric polynomial with sparse Hermitian-symmetric coefficients.

    Parameters
    ----------
    dim : int
        Ambient dimension ``d``.
    coeffs : mapping or iterable of (freq, value)
        Fourier coefficients keyed by integer frequency vectors.
    symmetrize : bool
        Replace the coefficients by their Hermitian-symmetric average instead of
        rejecting asymmetric input.
    prune : float
        Drop coefficients with magnitude ``<= prune * max|c|``. Exact zeros are
        always dropped.

    Instances are immutable.
    """

    __slots__ = ("_dim", "_freqs", "_values", "_index")

    def __init__(self, dim: int, coeffs: Mapping | Iterable = (), *,
                 symmetrize: bool = False, prune: float = 0.0):
        dim = int(dim)
        if dim < 1:
            raise PolyFormatError(f"dimension must be positive, got {dim}")
        items = list(coeffs.items()) if isinstance(coeffs, Mapping) else list(coeffs)
        freqs = np.zeros((len(items), dim), dtype=np.int64)
        values = np.zeros(len(items), dtype=complex)
        for k, (w, c) in enumerate(items):
            w = tuple(int(v) for v in np.atleast_1d(w))
            if len(w) != dim:
                raise PolyFormatError(f"frequency {w} does not have dimension {dim}")
            freqs[k] = w
            values[k] = complex(c)
        self._init_arrays(dim, freqs, values, symmetrize=symmetrize, prune=prune)

    @classmethod
    def from_arrays(cls, freqs, values, *, symmetrize=False, prune=0.0) -> "TrigPoly":
        freqs = np.asarray(freqs, dtype=np.int64)
        if freqs.ndim != 2:
            raise PolyFormatError("freqs must be a 2-d integer array")
        obj = cls.__new__(cls)
        obj._init_arrays(freqs.shape[1], freqs, np.asarray(values, dtype=complex).reshape(-1),
                         symmetrize=symmetrize, prune=prune)
        return obj

    @classmethod
    def constant(cls, value: float, dim: int) -> "TrigPoly":
        return cls(dim, {(0,) * dim: float(value)})

    def _init_arrays(self, dim, freqs, values, *, symmetrize, prune):
        if freqs.shape[0] != values.shape[0]:
            raise PolyFormatError("freqs and values differ in length")
        if freqs.shape[0] and freqs.shape[1] != dim:
            raise PolyFormatError("frequency dimension mismatch")
        freqs, values = _combine(freqs.reshape(-1, dim), values)
        if not np.all(np.isfinite(values)):
            raise PolyFormatError("coefficients must be finite")

        # c(w) + conj c(-w) and c(w) - conj c(-w) on the symmetric support
        both = np.concatenate([freqs, -freqs])
        f2, plus = _combine(both, np.concatenate([values, np.conj(values)]))
        _, minus = _combine(both, np.concatenate([values, -np.conj(values)]))
        size = float(np.max(np.abs(values))) if len(values) else 0.0
        mismatch = float(np.max(np.abs(minus))) if len(minus) else 0.0
        if mismatch > HERMITIAN_RTOL * size and not symmetrize:
            raise PolyFormatError(
                f"coefficients are not Hermitian symmetric (max mismatch {mismatch:.3e}); "
                "pass symmetrize=True to average them")
        values = 0.5 * plus
        freqs = f2

        mags = np.abs(values)
        keep = mags > 0
        if prune > 0 and mags.size:
            keep &= mags > prune * mags.max()
        freqs, values = freqs[keep], values[keep]
        order = _lexsort_rows(freqs)
        freqs = np.ascontiguousarray(freqs[order])
        values = values[order]
        freqs.setflags(write=False)
        values.setflags(write=False)
        self._dim = int(dim)
        self._freqs = freqs
        self._values = values
        self._index = None

    # -- basic accessors -------------------------------------------------
    @property
    def dim(self) -> int:
        return self._dim

    @property
    def freqs(self) -> np.ndarray:
        """Stored frequencies, shape ``(k, d)``, lexicographically sorted."""
        return self._freqs

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def coeffs(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in w): complex(c) for w, c in zip(self._freqs, self._values)}

    def __len__(self) -> int:
        return len(self._values)

    def coefficient(self, freq) -> complex:
        if self._index is None:
            self._index = {tuple(int(v) for v in w): k for k, w in enumerate(self._freqs)}
        k = self._index.get(tuple(int(v) for v in np.atleast_1d(freq)))
        return 0j if k is None else complex(self._values[k])

    @property
    def degree(self) -> int:
        """Largest sup-norm of a stored frequency (0 for the zero polynomial)."""
        if len(self._values) == 0:
            return 0
        return int(np.max(np.abs(self._freqs)))

    @property
    def mean(self) -> float:
        return self.coefficient((0,) * self._dim).real

    def is_constant(self) -> bool:
        return self.degree == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return (self._dim == other._dim and self._freqs.shape == other._freqs.shape
                and np.array_equal(self._freqs, other._freqs)
                and np.array_equal(self._values, other._values))

    def __hash__(self):
        return hash((self._dim, self._freqs.tobytes(), self._values.tobytes()))

    def __repr__(self) -> str:
        return f"TrigPoly(dim={self._dim}, degree={self.degree}, nterms={len(self)})"

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        return f_norm(subtract(self, other)) <= atol

    # -- operators -------------------------------------------------------
    def __call__(self, x):
        return evaluate(self, x)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return add(scale(self, -1.0), other)

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return multiply(self, other)
        return scale(self, other)

    __rmul__ = __mul__


def _as_poly(g, dim: int) -> TrigPoly:
    if isinstance(g, TrigPoly):
        return g
    return TrigPoly.constant(float(g), dim)


def _check_dims(f: TrigPoly, g: TrigPoly) -> None:
    if f.dim != g.dim:
        raise PolyFormatError(f"dimension mismatch: {f.dim} vs {g.dim}")


def add(f: TrigPoly, g) -> TrigPoly:
    g = _as_poly(g, f.dim)
    _check_dims(f, g)
    return TrigPoly.from_arrays(np.concatenate([f.freqs, g.freqs]).reshape(-1, f.dim),
                                np.concatenate([f.values, g.values]),
                                symmetrize=True, prune=PRUNE_RTOL)


def subtract(f: TrigPoly, g) -> TrigPoly:
    return add(f, scale(_as_poly(g, f.dim), -1.0))


def scale(f: TrigPoly, a: float) -> TrigPoly:
    a = float(a)
    return TrigPoly.from_arrays(f.freqs, a * f.values)


def multiply(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """Product, computed as the discrete convolution of coefficient maps."""
    _check_dims(f, g)
    if len(f) == 0 or len(g) == 0:
        return TrigPoly(f.dim)
    freqs = (f.freqs[:, None, :] + g.freqs[None, :, :]).reshape(-1, f.dim)
    values = np.outer(f.values, g.values).reshape(-1)
    return TrigPoly.from_arrays(freqs, values, symmetrize=True, prune=PRUNE_RTOL)


def conj_square(g, dim: int | None = None) -> TrigPoly:
    """Return ``|g|^2`` for a possibly complex-valued trigonometric polynomial.

    ``g`` may be a :class:`TrigPoly` or a mapping ``freq -> complex`` without
    Hermitian symmetry.
    """
    if isinstance(g, TrigPoly):
        return multiply(g, g)
    items = list(g.items())
    if dim is None:
        dim = len(np.atleast_1d(items[0][0])) if items else 1
    w = np.array([np.atleast_1d(k) for k, _ in items], dtype=np.int64).reshape(-1, dim)
    c = np.array([complex(v) for _, v in items])
    # |g|^2 = sum_{a,b} c_a conj(c_b) e^{2 i pi (a - b) x}
    freqs = (w[:, None, :] - w[None, :, :]).reshape(-1, dim)
    values = np.outer(c, np.conj(c)).reshape(-1)
    return TrigPoly.from_arrays(freqs, values, symmetrize=True, prune=PRUNE_RTOL)


def truncate(f: TrigPoly, s: int) -> TrigPoly:
    """Keep only frequencies with ``max|omega_i| <= s``."""
    if s < 0:
        raise ValueError("truncation degree must be non-negative")
    keep = np.max(np.abs(f.freqs), axis=1) <= s if len(f) else np.zeros(0, bool)
    return TrigPoly.from_arrays(f.freqs[keep], f.values[keep])


def f_norm(f: TrigPoly) -> float:
    """Sum of absolute values of the Fourier coefficients."""
    return float(np.sum(np.abs(f.values)))


def f_norm_tail(f: TrigPoly, s: int) -> float:
    """F-norm restricted to frequencies with ``max|omega_i| > s``."""
    if len(f) == 0:
        return 0.0
    mask = np.max(np.abs(f.freqs), axis=1) > s
    return float(np.sum(np.abs(f.values[mask])))


def centered(f: TrigPoly) -> TrigPoly:
    """``f - mean(f)``."""
    keep = np.any(f.freqs != 0, axis=1)
    return TrigPoly.from_arrays(f.freqs[keep], f.values[keep])


def _points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation points must be finite")
    return x


def evaluate(f: TrigPoly, x):
    """Evaluate ``f`` at one point or an array of points with trailing axis ``d``.

    For ``d = 1`` a plain array of scalars is accepted.
    """
    pts = _points(x, f.dim)
    if len(f) == 0:
        out = np.zeros(pts.shape[:-1])
        return float(out) if out.ndim == 0 else out
    phase = 2 * np.pi * (pts @ f.freqs.T.astype(float))
    cos, sin = np.cos(phase), np.sin(phase)
    re = cos @ f.values.real - sin @ f.values.imag
    im = sin @ f.values.real + cos @ f.values.imag
    bound = 1e-12 * max(f_norm(f), 1.0)
    if np.max(np.abs(im), initial=0.0) > bound:
        raise ArithmeticError("imaginary residue exceeds tolerance; polynomial is not real")
    return float(re) if np.ndim(re) == 0 else re


def derivative_tensor(f: TrigPoly, order: int, x):
    """Tensor of ``order``-th partial derivatives at ``x``.

    Returns an array of shape ``x.shape[:-1] + (d,) * order``. Each coefficient
    is multiplied by ``prod_k (2 i pi omega_{j_k})``.
    """
    order = int(order)
    if order < 0:
        raise ValueError(f"unsupported derivative order {order}")
    if order == 0:
        return evaluate(f, x)
    pts = _points(x, f.dim)
    d = f.dim
    if len(f) == 0:
        return np.zeros(pts.shape[:-1] + (d,) * order)
    w = f.freqs.astype(float)
    phase = 2 * np.pi * (pts @ w.T)
    factor = (2j * np.pi) ** order
    wave = factor * np.exp(1j * phase) * f.values  # (..., k)
    # Outer product of frequency vectors, one factor per derivative index.
    mono = w
    for _ in range(order - 1):
        mono = (mono[..., None] * w.reshape((w.shape[0],) + (1,) * (mono.ndim - 1) + (d,)))
    out = np.tensordot(wave, mono, axes=([-1], [0]))
    return out.real


def gradient(f: TrigPoly, x):
    return derivative_tensor(f, 1, x)


def hessian(f: TrigPoly, x):
    return derivative_tensor(f, 2, x)


def grid_values(f: TrigPoly, n: int, *, workers: int | None = None) -> np.ndarray:
    """Values of ``f`` on the uniform grid ``{0, 1/n, ..., (n-1)/n}^d``.

    Uses an inverse FFT; ``n`` must exceed ``2 * degree(f)`` to avoid aliasing.
    """
    n = int(n)
    if n <= 2 * f.degree:
        raise ValueError(f"grid size {n} aliases degree {f.degree}")
    buf = np.zeros((n,) * f.dim, dtype=complex)
    if len(f):
        idx = tuple((f.freqs % n).T)
        buf[idx] = f.values
    vals = sfft.ifftn(buf, workers=workers) * n ** f.dim
    return vals.real


def random_trig_poly(dim: int, degree: int, rng=None, *, fnorm: float | None = None,
                     mean: float = 0.0) -> TrigPoly:
    """Random real trigonometric polynomial with full support ``max|omega_i| <= degree``.

    Coefficients are complex Gaussian on one half-space and mirrored. When
    ``fnorm`` is given the non-constant part is rescaled to that F-norm.
    """
    rng = np.random.default_rng(rng)
    axes = [np.arange(-degree, degree + 1)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    # strictly lex-positive half: first nonzero entry positive
    nz = grid != 0
    first = np.argmax(nz, axis=1)
    pos = nz.any(axis=1) & (grid[np.arange(len(grid)), first] > 0)
    half = grid[pos]
    vals = rng.standard_normal(len(half)) + 1j * rng.standard_normal(len(half))
    freqs = np.concatenate([half, -half, np.zeros((1, dim), np.int64)])
    values = np.concatenate([vals, np.conj(vals), [0.0]])
    f = TrigPoly.from_arrays(freqs, values)
    if fnorm is not None:
        cur = f_norm(f)
        f = scale(f, fnorm / cur) if cur > 0 else f
    if mean:
        f = add(f, mean)
    return f


# -- JSON ------------------------------------------------------------------

def poly_to_dict(f: TrigPoly) -> dict[str, Any]:
    return {
        "dim": f.dim,
        "coeffs": [{"freq": [int(v) for v in w], "re": float(c.real), "im": float(c.imag)}
                   for w, c in zip(f.freqs, f.values)],
    }


def parse_poly(document, *, symmetrize: bool | None = None) -> TrigPoly:
    """Build a :class:`TrigPoly` from a JSON string or an already-decoded dict.

    The document may carry its own ``"symmetrize": true`` flag; the keyword
    argument overrides it.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PolyFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise PolyFormatError("polynomial document must be a JSON object")
    try:
        dim = int(document["dim"])
        entries = document["coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise PolyFormatError(f"missing or invalid field: {exc}") from exc
    if symmetrize is None:
        symmetrize = bool(document.get("symmetrize", False))
    items = []
    for e in entries:
        if isinstance(e, Mapping):
            freq, re, im = e.get("freq"), e.get("re", 0.0), e.get("im", 0.0)
        else:
            freq, re, im = (list(e) + [0.0, 0.0])[:3]
        if freq is None:
            raise PolyFormatError("coefficient entry without 'freq'")
        freq = list(np.atleast_1d(freq))
        if len(freq) != dim:
            raise PolyFormatError(f"frequency {freq} does not match dim={dim}")
        items.append((freq, complex(float(re), float(im))))
    return TrigPoly(dim, items, symmetrize=symmetrize)


def dumps_poly(f: TrigPoly, indent: int | None = None) -> str:
    return json.dumps(poly_to_dict(f), indent=indent)


def load_poly(path, *, symmetrize: bool | None = None) -> TrigPoly:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_poly(text, symmetrize=symmetrize)


def save_poly(f: TrigPoly, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_poly(f, indent=1))
        fh.write("\n")
