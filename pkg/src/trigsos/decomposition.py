"""Explicit (d+1)-term sum-of-squares decomposition of ``f - f_*`` and its Fourier truncation.

Near the minimizer ``f - f_* = dx^T R(x) dx`` with the integral-remainder
matrix ``R(x) = int_0^1 (1 - t) f''(x_* + t dx) dt``. A smooth partition of
unity ``u^2 + v^2 = 1`` glues this to ``sqrt(f - f_*)`` away from ``x_*``:

    g_i     = u * (dx^T R^{1/2})_i,   i = 1..d
    g_{d+1} = v * sqrt(f - f_*)

Truncating each ``g_i`` to degree ``s`` gives an SOS whose distance to
``f - f_*`` bounds the relaxation gap.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .fourier import TrigPoly, evaluate, f_norm, hessian
from .local import ConditioningError, OracleResult, periodic_offset

STEP_PANELS = 8
STEP_NODES = 24
EIG_FLOOR = 1e-14


def bump_function(eta: float, t):
    """``a(t) = exp(-(1 - t^2)^(-1/eta))`` on ``(-1, 1)``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-((1 - t[inside] ** 2) ** (-1.0 / eta)))
    return float(out) if out.ndim == 0 else out


_GL = np.polynomial.legendre.leggauss(STEP_NODES)


def _left_integral(eta: float, t: np.ndarray) -> np.ndarray:
    # int_{-1}^{t} a, composite Gauss-Legendre on equal panels, t in [-1, 0]
    nodes, weights = _GL
    edges = np.linspace(0.0, 1.0, STEP_PANELS + 1)
    length = (t + 1)[..., None]
    total = np.zeros_like(t)
    for lo, hi in zip(edges[:-1], edges[1:]):
        u = lo + (hi - lo) * (nodes + 1) / 2  # panel nodes in [0, 1]
        pts = -1 + length * u
        total += (hi - lo) / 2 * np.sum(weights * bump_function(eta, pts), axis=-1)
    return total * length[..., 0]


@lru_cache(maxsize=16)
def bump_integral(eta: float) -> float:
    """``int_{-1}^{1} a``, twice the left half by evenness of ``a``."""
    return 2.0 * float(_left_integral(eta, np.array(0.0)))


def normalized_step(eta: float, t):
    """``b(t) = int_{-inf}^t a / int a``: 0 for ``t <= -1``, 1 for ``t >= 1``.

    Evaluated directly by quadrature so that ``b`` keeps the smoothness of
    ``a``; the right half uses ``b(t) = 1 - b(-t)``.
    """
    t = np.asarray(t, dtype=float)
    total = bump_integral(eta)
    left = np.clip(-np.abs(t), -1.0, 0.0)
    half = _left_integral(eta, left) / total
    out = np.where(t <= 0, half, 1.0 - half)
    out = np.where(t <= -1, 0.0, np.where(t >= 1, 1.0, out))
    return float(out) if out.ndim == 0 else out


@dataclass
class PartitionOfUnity:
    """``u = sin(pi/2 * prod(1 - w_i))``, ``v = cos(...)`` with ``w_i`` the smoothed step of ``|x_i - x*_i|``."""

    eta: float
    alpha: float
    x_star: np.ndarray

    def _inner(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if len(self.x_star) == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        off = np.abs(periodic_offset(x, self.x_star))
        w = normalized_step(self.eta, (4 / self.alpha) * (off - 0.75 * self.alpha))
        return np.prod(1 - w, axis=-1)

    def u(self, x) -> np.ndarray:
        return np.sin(0.5 * np.pi * self._inner(x))

    def v(self, x) -> np.ndarray:
        p = self._inner(x)
        return np.where(p == 1.0, 0.0, np.cos(0.5 * np.pi * p))

    def uv(self, x) -> tuple[np.ndarray, np.ndarray]:
        p = self._inner(x)
        return np.sin(0.5 * np.pi * p), np.where(p == 1.0, 0.0, np.cos(0.5 * np.pi * p))


def build_partition(alpha: float, x_star, eta: float = 1.0) -> PartitionOfUnity:
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    return PartitionOfUnity(eta=float(eta), alpha=float(alpha),
                            x_star=np.atleast_1d(np.asarray(x_star, dtype=float)))


@dataclass
class SOSTerms:
    """The ``d + 1`` functions ``g_i``, evaluated on demand."""

    f: TrigPoly
    f_star: float
    pou: PartitionOfUnity
    quad_nodes: int = 32

    @property
    def count(self) -> int:
        return self.f.dim + 1

    def remainder_matrix(self, offsets: np.ndarray) -> np.ndarray:
        """``R = int_0^1 (1 - t) f''(x_* + t dx) dt`` for each row of ``offsets``."""
        nodes, weights = np.polynomial.legendre.leggauss(self.quad_nodes)
        t = (nodes + 1) / 2
        wt = weights / 2 * (1 - t)
        d = self.f.dim
        out = np.zeros((len(offsets), d, d))
        for tk, wk in zip(t, wt):
            out += wk * hessian(self.f, self.pou.x_star + tk * offsets)
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    def __call__(self, x) -> np.ndarray:
        """Values with shape ``x.shape[:-1] + (d + 1,)``."""
        d = self.f.dim
        x = np.asarray(x, dtype=float)
        if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        lead = x.shape[:-1]
        pts = x.reshape(-1, d)
        u, v = self.pou.uv(pts)
        out = np.zeros((len(pts), d + 1))

        near = u > 0
        if np.any(near):
            off = periodic_offset(pts[near], self.pou.x_star)
            for lo in range(0, len(off), 4096):
                chunk = off[lo:lo + 4096]
                lam, vec = np.linalg.eigh(self.remainder_matrix(chunk))
                if np.any(lam[:, 0] <= 0):
                    raise ConditioningError("remainder matrix is not positive definite on the support of u")
                lam = np.maximum(lam, EIG_FLOOR)
                root = np.einsum("kij,kj,klj->kil", vec, np.sqrt(lam), vec)
                idx = np.flatnonzero(near)[lo:lo + 4096]
                out[idx, :d] = u[idx, None] * np.einsum("ki,kij->kj", chunk, root)

        far = v != 0
        if np.any(far):
            gap = np.maximum(evaluate(self.f, pts[far]) - self.f_star, 0.0)
            out[far, d] = v[far] * np.sqrt(gap)
        return out.reshape(lead + (d + 1,))


def build_sos_terms(f: TrigPoly, oracle: OracleResult, pou: PartitionOfUnity, *,
                    quad_nodes: int = 32) -> SOSTerms:
    if len(pou.x_star) != f.dim:
        raise ValueError("partition and polynomial dimensions differ")
    return SOSTerms(f=f, f_star=float(oracle.f_star), pou=pou, quad_nodes=quad_nodes)


def sample_grid(dim: int, n: int) -> np.ndarray:
    axis = np.arange(n) / n
    return np.stack(np.meshgrid(*[axis] * dim, indexing="ij"), axis=-1)


@dataclass
class DecompositionReport:
    s: int
    fft_n: int
    term_norms: list[float]
    term_tails: list[float]
    residual: float
    estimate: float
    gap_bound: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"s": self.s, "fft_n": self.fft_n, "term_norms": self.term_norms,
                "term_tails": self.term_tails, "residual": self.residual,
                "estimate": self.estimate, "gap_bound": self.gap_bound, **self.extras}


def _band_mask(n: int, dim: int, s: int) -> np.ndarray:
    k = np.abs(sfft.fftfreq(n, 1.0 / n)).astype(np.int64)
    grids = np.meshgrid(*[k] * dim, indexing="ij")
    return np.max(np.stack(grids), axis=0) <= s


def term_coefficients(terms: SOSTerms, fft_n: int) -> np.ndarray:
    """DFT estimates of the Fourier coefficients of every ``g_i``, shape ``(d + 1,) + (fft_n,) * d``."""
    d = terms.f.dim
    vals = terms(sample_grid(d, fft_n))
    axes = tuple(range(1, d + 1))
    return sfft.fftn(np.moveaxis(vals, -1, 0), axes=axes) / fft_n ** d


def truncate_and_report(f: TrigPoly, terms: SOSTerms, s: int, fft_n: int, *,
                        coeffs: np.ndarray | None = None) -> DecompositionReport:
    """Truncate each ``g_i`` to degree ``s`` and measure ``||f - f_* - sum g_i^2||_F``.

    Norms are discrete-transform estimates over the frequencies resolved by
    the ``fft_n^d`` grid. ``estimate`` is ``2 sum ||g_i||_F ||g_i||_{F,s}``
    and ``gap_bound`` is ``(2s + 1)^d * residual``.
    """
    d = f.dim
    s = int(s)
    if fft_n < 8 * s:
        raise ValueError(f"fft_n = {fft_n} is below 8 s = {8 * s}")
    if fft_n <= 2 * max(f.degree, 2 * s):
        raise ValueError("fft_n too small to resolve the residual band")
    if coeffs is None:
        coeffs = term_coefficients(terms, fft_n)
    axes = tuple(range(1, d + 1))
    inside = _band_mask(fft_n, d, s)
    mags = np.abs(coeffs)
    norms = mags.reshape(d + 1, -1).sum(axis=1)
    tails = (mags * ~inside).reshape(d + 1, -1).sum(axis=1)

    trunc = coeffs * inside
    vals = sfft.ifftn(trunc, axes=axes).real * fft_n ** d
    sq = sfft.fftn(np.sum(vals ** 2, axis=0)) / fft_n ** d

    target = np.zeros((fft_n,) * d, dtype=complex)
    target[tuple((f.freqs % fft_n).T)] = f.values
    target[(0,) * d] -= terms.f_star
    band = _band_mask(fft_n, d, max(2 * s, f.degree))
    residual = float(np.sum(np.abs(target - sq)[band]))
    estimate = float(2 * np.sum(norms * tails))
    return DecompositionReport(s=s, fft_n=int(fft_n), term_norms=norms.tolist(),
                               term_tails=tails.tolist(), residual=residual, estimate=estimate,
                               gap_bound=(2 * s + 1) ** d * residual)


def decompose(f: TrigPoly, oracle: OracleResult, alpha: float, s_values, *, eta: float = 1.0,
              fft_n: int | None = None) -> list[DecompositionReport]:
    s_values = [int(s) for s in s_values]
    if fft_n is None:
        fft_n = max(512 if f.dim == 1 else 256, 8 * max(s_values))
    pou = build_partition(alpha, oracle.x_star, eta)
    terms = build_sos_terms(f, oracle, pou)
    coeffs = term_coefficients(terms, fft_n)
    return [truncate_and_report(f, terms, s, fft_n, coeffs=coeffs) for s in s_values]


def fitted_decay_exponent(s_values, residuals) -> float:
    """Slope ``k`` of the least-squares fit ``log residual = c - k log s``."""
    x = np.log(np.asarray(s_values, dtype=float))
    y = np.log(np.asarray(residuals, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])


def reports_to_csv(reports) -> str:
    """CSV with header ``s,residual,bound``; ``bound`` is the truncation estimate."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "residual", "bound"])
    for r in reports:
        w.writerow([r.s, repr(r.residual), repr(r.estimate)])
    return buf.getvalue()


def pointwise_error(terms: SOSTerms, x) -> float:
    """``max |sum g_i^2 - (f - f_*)| / (1 + |f|)`` over the given points."""
    g = terms(x)
    fx = evaluate(terms.f, np.asarray(x, float))
    return float(np.max(np.abs(np.sum(g ** 2, axis=-1) - (fx - terms.f_star)) / (1 + np.abs(fx))))

