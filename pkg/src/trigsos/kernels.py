"""Explicit kernel certificates giving the O(1/s^2) bound.

For a kernel ``q`` of degree ``s`` the integral operator
``Th(x) = int |q(x - y)|^2 h(y) dy`` maps nonnegative ``h`` to sums of squares.
Choosing ``h`` by Fourier deconvolution so that ``Th = f - f_* + b`` yields the
certified bound ``f_* - b <= c*(f, s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import TrigPoly, centered, f_norm, grid_values
from .toeplitz import GramMatrix, freq_grid, gram_to_poly, toeplitz_from_values

KINDS = ("box", "triangular")


class CertificateError(RuntimeError):
    """The constructed certificate failed a numerical soundness check."""


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    s: int
    dim: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kernel kind must be one of {KINDS}, got {self.kind!r}")
        if self.s < 1:
            raise ValueError("kernel degree s must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


def half_degree(f: TrigPoly) -> int:
    """Smallest integer ``r`` with ``degree(f) <= 2r``."""
    return (f.degree + 1) // 2


def triangle_autocorrelation_raw(s: int, w) -> np.ndarray:
    """Closed form of ``sum_i b(i) b(w - i)`` with ``b(i) = (s - |i|)_+``, valid for ``|w| <= s``."""
    w = np.abs(np.asarray(w, dtype=float))
    if np.any(w > s):
        raise ValueError("closed form only holds for |w| <= s")
    return s * (2 * s * s + 1) / 3 - w / 2 - s * w ** 2 + w ** 3 / 2


def brute_autocorrelation(seq: np.ndarray) -> np.ndarray:
    """Full discrete autocorrelation of a symmetric sequence centred at its middle."""
    seq = np.asarray(seq, dtype=float)
    return np.convolve(seq, seq[::-1])


def _triangle_profile(s: int) -> np.ndarray:
    i = np.arange(-s, s + 1)
    return np.maximum(s - np.abs(i), 0).astype(float)


def _per_axis_autocorrelation(kind: str, s: int, w: np.ndarray) -> np.ndarray:
    w = np.abs(np.asarray(w, dtype=np.int64))
    if kind == "box":
        return np.clip(1 - w / (2 * s + 1), 0, None)
    out = np.empty(w.shape, dtype=float)
    inner = w <= s
    out[inner] = triangle_autocorrelation_raw(s, w[inner])
    if np.any(~inner):
        full = brute_autocorrelation(_triangle_profile(s))  # index j <-> lag j - 2s
        out[~inner] = full[w[~inner] + 2 * s]
    return out / triangle_autocorrelation_raw(s, 0)


def kernel_autocorrelation(k: KernelSpec, tau) -> np.ndarray | float:
    """Normalized ``(q^ * q^)(tau)``, equal to 1 at ``tau = 0``.

    Accepts one shift or an array of shifts with trailing axis ``d``.
    """
    tau = np.asarray(tau, dtype=np.int64)
    if k.dim == 1 and (tau.ndim == 0 or tau.shape[-1] != 1):
        tau = tau[..., None]
    if tau.shape[-1] != k.dim:
        raise ValueError("shift dimension does not match the kernel")
    if np.any(np.abs(tau) > 2 * k.s):
        raise ValueError(f"shift outside {{-2s..2s}}^d for s = {k.s}")
    vals = np.prod(_per_axis_autocorrelation(k.kind, k.s, tau), axis=-1)
    return float(vals) if vals.ndim == 0 else vals


def kernel_coefficients(k: KernelSpec) -> np.ndarray:
    """Fourier coefficients ``q^(w)`` on the level-``s`` grid, normalized to unit autocorrelation at 0."""
    grid = freq_grid(k.dim, k.s)
    if k.kind == "box":
        return np.full(grid.size, (2 * k.s + 1) ** (-k.dim / 2))
    tri = np.prod(np.clip(1 - np.abs(grid.points) / k.s, 0, None), axis=1)
    a2 = (2 * k.s / 3 + 1 / (3 * k.s)) ** (-k.dim)
    return math.sqrt(a2) * tri


def check_level(f: TrigPoly, k: KernelSpec) -> int:
    r = half_degree(f)
    if f.dim != k.dim:
        raise ValueError(f"dimension mismatch: polynomial {f.dim}, kernel {k.dim}")
    if k.kind == "triangular" and k.s < 3 * r:
        raise ValueError(f"triangular kernel needs s >= 3r (s = {k.s}, r = {r})")
    if k.kind == "box" and not 2 * r < 2 * k.s + 1:
        raise ValueError(f"box kernel needs 2r < 2s + 1 (s = {k.s}, r = {r})")
    return r


def theorem1_bound(f: TrigPoly, k: KernelSpec) -> float:
    """Gap ``b`` certified by the kernel ``k`` for ``f``.

    Triangular: ``||f - mean||_F [(1 - 6 r^2 / s^2)^{-d} - 1]``.
    Box: ``||f - mean||_F [(1 - 2r / (2s + 1))^{-d} - 1]``.
    """
    r = check_level(f, k)
    spread = f_norm(centered(f))
    if spread == 0.0:
        return 0.0
    d = k.dim
    if k.kind == "triangular":
        factor = (1 - 6 * r * r / (k.s * k.s)) ** (-d) - 1
    else:
        factor = (1 - 2 * r / (2 * k.s + 1)) ** (-d) - 1
    return spread * factor


@dataclass
class KernelCertificate:
    kernel: KernelSpec
    f_star: float
    b: float
    h: TrigPoly
    gram: GramMatrix
    residual_fourier: float
    h_min_on_grid: float
    gram_min_eigenvalue: float

    @property
    def lower_bound(self) -> float:
        return self.f_star - self.b

    def to_dict(self, include_gram: bool = False) -> dict:
        from .fourier import poly_to_dict

        out = {
            "kernel": {"kind": self.kernel.kind, "s": self.kernel.s, "dim": self.kernel.dim},
            "f_star": self.f_star,
            "b": self.b,
            "lower_bound": self.lower_bound,
            "residual_fourier": self.residual_fourier,
            "h_min_on_grid": self.h_min_on_grid,
            "gram_min_eigenvalue": self.gram_min_eigenvalue,
            "h": poly_to_dict(self.h),
        }
        if include_gram:
            out["gram"] = self.gram.to_dict()
        return out


def build_certificate(f: TrigPoly, f_star: float, k: KernelSpec, *,
                      h_grid: int | None = None) -> KernelCertificate:
    """Construct the kernel SOS certificate of ``f - f_star + b``.

    ``h(w) = (f(w) + (b - f_star) [w = 0]) / (q^ * q^)(w)`` on the support of
    ``f``; the Gram matrix is ``A[a, b] = n q(a) h(b - a) q(b)``.
    """
    check_level(f, k)
    b = theorem1_bound(f, k)
    grid = freq_grid(k.dim, k.s)
    n = grid.size

    zero = np.zeros((1, k.dim), dtype=np.int64)
    freqs = np.concatenate([f.freqs, zero]) if len(f) else zero
    values = np.concatenate([f.values, [b - f_star]]) if len(f) else np.array([b - f_star], complex)
    h_num = TrigPoly.from_arrays(freqs, values, symmetrize=True)
    qq = np.atleast_1d(kernel_autocorrelation(k, h_num.freqs))
    if np.any(np.abs(qq) < 1e-12):
        raise CertificateError("kernel autocorrelation vanishes on the support of f")
    h = TrigPoly.from_arrays(h_num.freqs, h_num.values / qq)

    q = kernel_coefficients(k)
    t = np.zeros(grid.n_shifts, dtype=complex)
    if len(h):
        t[grid.shift_index(h.freqs)] = h.values
    toep = toeplitz_from_values(grid, t)
    gram_entries = n * (q[:, None] * toep * q[None, :])
    gram = GramMatrix(grid, gram_entries)

    target = f - f_star + b
    residual = f_norm(gram_to_poly(gram) - target)
    lam_min = gram.min_eigenvalue()
    size = float(np.linalg.norm(gram.entries, 2))
    if lam_min < -1e-9 * max(size, 1.0):
        raise CertificateError(f"Gram matrix is not PSD (lambda_min = {lam_min:.3e})")

    if h_grid is None:
        h_grid = 128 if k.dim <= 2 else 64
    h_grid = max(h_grid, 2 * h.degree + 1)
    h_min = float(np.min(grid_values(h, h_grid)))
    return KernelCertificate(kernel=k, f_star=float(f_star), b=b, h=h, gram=gram,
                             residual_fourier=residual, h_min_on_grid=h_min,
                             gram_min_eigenvalue=lam_min)
