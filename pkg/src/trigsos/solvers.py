"""Spectral and sum-of-squares lower bounds for trigonometric polynomials.

The SOS bound at level ``s`` is

    c*(f, s) = max_{Y in V_s^perp} lambda_min(F + Y),

with ``F`` the Toeplitz Gram representation of ``f`` and ``V_s^perp`` the
complement of the Hermitian Toeplitz matrices. Its dual is

    min tr(Sigma F)  s.t.  Sigma >= 0, tr(Sigma) = 1, Sigma Toeplitz.

Two solvers share the :class:`SolveReport` contract:

* ``"ipm"`` (default): primal-dual interior point method on the pair above,
  HKM direction with Mehrotra correction. The Schur complement is assembled
  with FFTs, which is what keeps it cheap.
* ``"smooth"``: projected gradient ascent on the soft-min
  ``-mu log tr exp(-(F+Y)/mu)`` with a halving schedule for ``mu``.

Whatever happens inside, the returned ``lower_bound`` is recomputed as
``lambda_min(F + Y)`` for a ``Y`` lying exactly in ``V_s^perp``, so it is a
valid bound even when the solver stops early.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import linalg as sla

from .fourier import TrigPoly, centered, f_norm
from .toeplitz import (
    DegreeError,
    FreqGrid,
    GramMatrix,
    class_sums,
    freq_grid,
    project_toeplitz,
    toeplitz_from_values,
    toeplitz_representation,
)

logger = logging.getLogger(__name__)

METHODS = ("ipm", "smooth")
STALL_WINDOW = 8


@dataclass
class SolverOptions:
    """Options for :func:`sos_bound`.

    ``tol`` is an absolute tolerance on the certified duality gap. ``mu0`` only
    affects the ``"smooth"`` method. ``max_iters=None`` picks a method default
    (100 for ``"ipm"``, ``10 (2s+1)^d`` for ``"smooth"``).
    """

    tol: float = 1e-6
    max_iters: int | None = None
    mu0: float | None = None
    method: str = "ipm"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class SolveReport:
    lower_bound: float
    Y: GramMatrix | None
    Sigma: GramMatrix
    gap: float
    iterations: int
    converged: bool
    method: str
    level: int
    tol: float
    dual_value: float
    history: list[float] = field(default_factory=list)

    def to_dict(self, certificates: bool = False) -> dict:
        out = {
            "method": self.method,
            "level": self.level,
            "lower_bound": self.lower_bound,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "tol": self.tol,
        }
        if certificates:
            out["Y"] = None if self.Y is None else self.Y.to_dict()
            out["Sigma"] = self.Sigma.to_dict()
        return out


# -- Schur complement machinery ----------------------------------------------

class _ToeplitzConstraints:
    """Real parametrization of the Toeplitz space without its identity direction.

    Coordinate ``j`` of ``y`` is the real or imaginary part of the Toeplitz
    value at a lexicographically positive shift. ``adjoint(y)`` builds the
    corresponding Hermitian Toeplitz matrix and ``apply(X) = (tr(B_j X))_j``.
    """

    def __init__(self, grid: FreqGrid):
        self.grid = grid
        m = grid.n_shifts
        self.center = (m - 1) // 2
        self.pos = np.arange(self.center + 1, m)
        self.neg = (m - 1) - self.pos
        self.h = len(self.pos)
        # any length >= 4s + 1 avoids wrap-around; pick an FFT-friendly one
        self.nfft = sfft.next_fast_len(grid.shift_side)
        d = grid.dim
        wrapped = grid.shifts % self.nfft
        self.fft_index = np.ravel_multi_index(tuple(wrapped.T), (self.nfft,) * d)
        freqs = np.arange(-grid.halfwidth, grid.halfwidth + 1)
        self.dft = np.exp(2j * np.pi * np.outer(np.arange(self.nfft), freqs) / self.nfft)
        self.dft_conj = self.dft.conj()

    @property
    def size(self) -> int:
        return 2 * self.h

    def apply(self, x: np.ndarray) -> np.ndarray:
        s = class_sums(self.grid, x)[self.pos]
        return np.concatenate([2 * s.real, 2 * s.imag])

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        t = np.zeros(self.grid.n_shifts, dtype=complex)
        vals = y[: self.h] + 1j * y[self.h:]
        t[self.pos] = vals
        t[self.neg] = np.conj(vals)
        return toeplitz_from_values(self.grid, t)

    def _hat(self, a: np.ndarray) -> np.ndarray:
        # hat[k, l] = sum_{a, b} e^{2i pi k.a/N} A[a, b] e^{-2i pi l.b/N}, one axis at a time
        nf, d = self.nfft, self.grid.dim
        side = self.grid.side
        out = a.reshape((side,) * (2 * d))
        for axis in range(2 * d):
            mat = self.dft if axis < d else self.dft_conj
            out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
        return out.reshape(nf ** d, nf ** d)

    def shift_correlation(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """``K[p, q] = tr(T_p X T_q W)`` for all shift indices ``p, q``.

        ``T_p`` is the 0/1 matrix of shift ``p``. Computed through the identity
        ``T_p = N^{-d} sum_k e^{-2i pi k.p/N} u_k^* u_k`` with ``N >= 4s + 1``.
        """
        nf, d = self.nfft, self.grid.dim
        big = nf ** d
        prod = self._hat(x) * self._hat(w).T
        k = sfft.fftn(prod.reshape((nf,) * (2 * d)), overwrite_x=True).reshape(big, big) / big ** 2
        return k[np.ix_(self.fft_index, self.fft_index)]

    def schur(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """``M[i, j] = Re tr(B_i X B_j W)`` for the real basis ``B``."""
        k = self.shift_correlation(x, w)
        p, q = self.pos, self.neg
        rows = np.concatenate([k[p] + k[q], 1j * (k[p] - k[q])])
        full = np.concatenate([rows[:, p] + rows[:, q], 1j * (rows[:, p] - rows[:, q])], axis=1)
        m = full.real
        return 0.5 * (m + m.T)


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _max_step(x_chol: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``t`` keeping ``X + t dX`` positive semidefinite."""
    linv = sla.solve_triangular(x_chol, np.eye(len(dx)), lower=True)
    lam = np.linalg.eigvalsh(_herm(linv @ dx @ linv.conj().T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _certificate(fmat: np.ndarray, xmat: np.ndarray, grid: FreqGrid):
    """``Y = P_perp(X)`` and the bound ``lambda_min(F + Y)``."""
    y = xmat - project_toeplitz(GramMatrix(grid, _herm(xmat))).entries
    bound = float(np.linalg.eigvalsh(_herm(fmat + y))[0])
    return _herm(y), bound


def _ipm_step(cons, cmat, b, x, y, z):
    """One HKM predictor-corrector step; returns the updated ``(x, y, z)``."""
    n = len(x)
    zchol = np.linalg.cholesky(z)
    zinv_half = sla.solve_triangular(zchol, np.eye(n), lower=True)
    w = zinv_half.conj().T @ zinv_half
    rp = b - cons.apply(x)
    rd = cmat - cons.adjoint(y) - z
    mu = float(np.real(np.vdot(x, z))) / n

    schur = cons.schur(x, w)
    try:
        factor = sla.cho_factor(schur)
    except np.linalg.LinAlgError:
        schur += 1e-14 * np.trace(schur) / len(schur) * np.eye(len(schur))
        factor = sla.cho_factor(schur)

    xrdw = _herm(x @ rd @ w)

    def direction(rhs_mat):
        dy = sla.cho_solve(factor, rp - cons.apply(_herm(rhs_mat)))
        dz = rd - cons.adjoint(dy)
        dx = _herm(rhs_mat + x @ cons.adjoint(dy) @ w)
        return dx, dy, dz

    dx_p, dy_p, dz_p = direction(-x - xrdw)
    xchol = np.linalg.cholesky(x)
    ap = min(1.0, _max_step(xchol, dx_p))
    bp = min(1.0, _max_step(zchol, dz_p))
    mu_p = float(np.real(np.vdot(x + ap * dx_p, z + bp * dz_p))) / n
    sigma = min(1.0, max(0.0, mu_p / mu) ** 3) if mu > 0 else 0.0

    dx, dy, dz = direction(sigma * mu * w - x - xrdw - _herm(dx_p @ dz_p @ w))
    gamma = 0.98
    ap = min(1.0, gamma * _max_step(xchol, dx))
    bp = min(1.0, gamma * _max_step(zchol, dz))
    x = _herm(x + ap * dx)
    y = y + bp * dy
    z = _herm(z + bp * dz)
    return x, y, z


def _ipm(fmat: np.ndarray, grid: FreqGrid, target: float, max_iters: int):
    """Primal-dual interior point on the normalized problem.

    Primal: min tr(X)/n s.t. A(X) = A(F), X >= 0 (X is the SOS Gram matrix).
    Dual:   max b.y s.t. Z = I/n - A^*(y) >= 0 (Z is the pseudo-moment matrix).
    """
    cons = _ToeplitzConstraints(grid)
    n = grid.size
    cmat = np.eye(n) / n
    b = cons.apply(fmat)
    x = np.eye(n, dtype=complex)
    y = np.zeros(cons.size)
    z = cmat.astype(complex)

    best_bound, best_y = -np.inf, None
    best_dual, best_sigma = np.inf, z
    history: list[float] = []
    gaps: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        ycert, bound = _certificate(fmat, x, grid)
        dual_val = float(np.real(np.vdot(z, fmat)))
        if bound > best_bound:
            best_bound, best_y = bound, ycert
        if dual_val < best_dual:
            best_dual, best_sigma = dual_val, z.copy()
        history.append(best_bound)
        gaps.append(best_dual - best_bound)
        if gaps[-1] <= target:
            break
        if len(gaps) > STALL_WINDOW and gaps[-1] > 0.5 * gaps[-1 - STALL_WINDOW]:
            logger.info("interior point stalled at iteration %d (gap %.3e)", it, gaps[-1])
            break

        try:
            x, y, z = _ipm_step(cons, cmat, b, x, y, z)
        except np.linalg.LinAlgError:
            # iterates lost numerical definiteness; the best pair so far stands
            logger.info("interior point stopped at iteration %d: factorization failed", it)
            break
    else:
        ycert, bound = _certificate(fmat, x, grid)
        dual_val = float(np.real(np.vdot(z, fmat)))
        if bound > best_bound:
            best_bound, best_y = bound, ycert
        if dual_val < best_dual:
            best_sigma = z.copy()
        history.append(best_bound)
    return best_bound, best_y, best_sigma, it, history


def _gibbs(mat: np.ndarray, mu: float):
    lam, vec = np.linalg.eigh(mat)
    e = np.exp(-(lam - lam[0]) / mu)
    p = e / e.sum()
    soft = lam[0] - mu * np.log(e.sum())
    return soft, (vec * p) @ vec.conj().T, lam[0]


def _smooth(fmat: np.ndarray, grid: FreqGrid, target: float, max_iters: int, mu0: float | None):
    """Projected gradient ascent on the soft-min eigenvalue with mu continuation."""
    n = grid.size
    ymat = np.zeros_like(fmat, dtype=complex)
    mu = mu0 if mu0 is not None else max(np.linalg.norm(fmat, 2) / 10, 1e-3)
    mu_min = target / (10 * max(1.0, np.log(n)))  # entropy gap of the Gibbs state is <= mu log n
    best_bound, best_y = -np.inf, ymat.copy()
    best_sigma, best_dual = np.eye(n, dtype=complex) / n, np.inf
    history: list[float] = []
    step = 1.0
    it = 0
    soft, gibbs, lam_min = _gibbs(fmat + ymat, mu)
    while it < max_iters:
        it += 1
        if lam_min > best_bound:
            best_bound, best_y = lam_min, ymat.copy()
        sig = _repair(project_toeplitz(GramMatrix(grid, _herm(gibbs))).entries)
        dual_val = float(np.real(np.vdot(sig, fmat)))
        if dual_val < best_dual:
            best_sigma, best_dual = sig, dual_val
        history.append(best_bound)
        if best_dual - best_bound <= target:
            break
        direction = gibbs - project_toeplitz(GramMatrix(grid, _herm(gibbs))).entries
        gnorm2 = float(np.real(np.vdot(direction, direction)))
        if gnorm2 <= (0.1 * mu) ** 2 / n:
            if mu <= mu_min:
                break
            mu /= 2
            soft, gibbs, lam_min = _gibbs(fmat + ymat, mu)
            continue
        # backtracking (Armijo) on the smoothed objective
        t = step
        while True:
            trial = ymat + t * direction
            s_new, g_new, l_new = _gibbs(fmat + trial, mu)
            if s_new >= soft + 0.5 * t * gnorm2 or t < 1e-12:
                break
            t /= 2
        ymat, soft, gibbs, lam_min = trial, s_new, g_new, l_new
        step = min(4 * t, 1e6)
    ycert = _herm(best_y - project_toeplitz(GramMatrix(grid, _herm(best_y))).entries)
    bound = float(np.linalg.eigvalsh(_herm(fmat + ycert))[0])
    return bound, ycert, best_sigma, it, history


def _repair(sigma: np.ndarray) -> np.ndarray:
    """Shift a trace-one Hermitian matrix into the PSD cone, keeping trace one."""
    n = len(sigma)
    lam = float(np.linalg.eigvalsh(sigma)[0])
    eps = max(0.0, -lam) + 1e-12
    return _herm((sigma + eps * np.eye(n)) / (1 + eps * n))


# -- public API ----------------------------------------------------------------

def _check_level(f: TrigPoly, s: int) -> None:
    if s < 0:
        raise DegreeError("relaxation level must be non-negative")
    if f.degree > 2 * s:
        raise DegreeError(f"degree {f.degree} exceeds 2s = {2 * s}")


def spectral_bound(f: TrigPoly, s: int) -> SolveReport:
    """``lambda_min`` of the Toeplitz representation of ``f`` at level ``s``.

    The dual candidate is the Toeplitz projection of the bottom eigenprojector,
    repaired into the PSD cone.
    """
    _check_level(f, s)
    fgram = toeplitz_representation(f, s)
    lam, vec = np.linalg.eigh(fgram.entries)
    u = vec[:, 0]
    sig = _repair(project_toeplitz(GramMatrix(fgram.grid, np.outer(u, u.conj()))).entries)
    sigma = GramMatrix(fgram.grid, sig)
    dual = float(np.real(np.vdot(sig, fgram.entries)))
    return SolveReport(
        lower_bound=float(lam[0]), Y=GramMatrix(fgram.grid, np.zeros_like(fgram.entries)),
        Sigma=sigma, gap=dual - float(lam[0]), iterations=1, converged=True,
        method="spectral", level=s, tol=0.0, dual_value=dual, history=[float(lam[0])])


def sos_bound(f: TrigPoly, s: int, opts: SolverOptions | None = None, **kwargs) -> SolveReport:
    """Certified SOS lower bound ``c*(f, s)``.

    The problem is solved for ``(f - mean) / ||f - mean||_F`` and mapped back,
    so shifting or positively scaling ``f`` moves the bound accordingly. The
    inner target gap is ``tol / ||f - mean||_F`` in normalized units, capped
    at ``1e-12`` for the interior-point method so that equivariance holds to
    float precision.
    """
    opts = opts or SolverOptions(**kwargs)
    _check_level(f, s)
    grid = freq_grid(f.dim, s)
    n = grid.size
    mean = f.mean
    fc = centered(f)
    scale = f_norm(fc)
    if scale == 0.0:
        return SolveReport(
            lower_bound=mean, Y=GramMatrix(grid, np.zeros((n, n))),
            Sigma=GramMatrix(grid, np.eye(n) / n), gap=0.0, iterations=0, converged=True,
            method=opts.method, level=s, tol=opts.tol, dual_value=mean, history=[mean])

    fnorm_mat = toeplitz_representation(fc * (1.0 / scale), s).entries
    target = opts.tol / scale
    if opts.method == "ipm":
        target = min(1e-12, target)
        max_iters = opts.max_iters or 100
        bound, ycert, sig, iters, hist = _ipm(fnorm_mat, grid, target, max_iters)
    else:
        max_iters = opts.max_iters or 10 * n
        mu0 = None if opts.mu0 is None else opts.mu0 / scale
        bound, ycert, sig, iters, hist = _smooth(fnorm_mat, grid, target, max_iters, mu0)

    sigma = GramMatrix(grid, sig)
    dual_norm = float(np.real(np.vdot(sig, fnorm_mat)))
    y_gram = GramMatrix(grid, scale * ycert)
    lower = mean + scale * bound
    dual = mean + scale * dual_norm
    gap = dual - lower
    return SolveReport(
        lower_bound=lower, Y=y_gram, Sigma=sigma, gap=gap, iterations=iters,
        converged=bool(gap <= opts.tol), method=opts.method, level=s, tol=opts.tol,
        dual_value=dual, history=[mean + scale * h for h in hist])


def extract_sos_gram(f: TrigPoly, report: SolveReport) -> GramMatrix:
    """PSD Gram matrix ``A = F + Y - c I`` with ``phi^* A phi = f - c``."""
    fgram = toeplitz_representation(f, report.level)
    y = report.Y.entries if report.Y is not None else 0.0
    a = fgram.entries + y - report.lower_bound * np.eye(fgram.size)
    return GramMatrix(fgram.grid, _herm(a))
