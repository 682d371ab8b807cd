"""Global minimization oracle and the local conditioning constants around the minimizer."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .fourier import TrigPoly, evaluate, f_norm, gradient, grid_values, hessian
from .kernels import half_degree

ALPHA_CANDIDATES_TOP = tuple(round(0.45 - 0.05 * k, 2) for k in range(9))  # 0.45 ... 0.05
ALPHA_FLOOR = 1e-4
DEGENERACY_RTOL = 1e-6


class ConditioningError(ValueError):
    """The minimizer is degenerate or not unique."""


@dataclass
class OracleResult:
    f_star: float
    x_star: np.ndarray
    grid_resolution: int
    newton_converged: bool
    gradient_norm: float

    def to_dict(self) -> dict:
        return {"f_star": self.f_star, "x_star": self.x_star.tolist(),
                "grid_resolution": self.grid_resolution,
                "newton_converged": self.newton_converged,
                "gradient_norm": self.gradient_norm}


def default_grid(f: TrigPoly) -> int:
    base = 64 if f.dim <= 2 else 32
    return max(base, 4 * f.degree)


def _grid_points(idx: np.ndarray, n: int, dim: int) -> np.ndarray:
    return np.stack(np.unravel_index(idx, (n,) * dim), axis=-1) / n


def _newton(f: TrigPoly, x: np.ndarray, gtol: float, max_iters: int = 60):
    # gtol is the target; stalls are still accepted below the looser 1000 * gtol
    fx = float(evaluate(f, x))
    for _ in range(max_iters):
        g = gradient(f, x)
        gn = float(np.linalg.norm(g))
        if gn <= gtol:
            return x, fx, gn, True
        h = hessian(f, x)
        lam = np.linalg.eigvalsh(h)
        convex = lam[0] > 1e-12 * max(1.0, abs(lam[-1]))
        if convex:
            step = -np.linalg.solve(h, g)
        else:
            step = -g / max(abs(lam[-1]), 1.0)
        if convex and np.max(np.abs(step)) < 1e-6:
            # inside the quadratic basin f no longer resolves progress; trust the step
            x = x + step
            fx = float(evaluate(f, x))
            continue
        t = 1.0
        while t > 1e-12:
            xn = x + t * step
            fn = float(evaluate(f, xn))
            if fn <= fx:
                break
            t *= 0.5
        else:
            return x, fx, gn, gn <= 1e3 * gtol
        if np.max(np.abs(xn - x)) == 0.0:
            return x, fx, gn, gn <= 1e3 * gtol
        x, fx = xn, fn
    gn = float(np.linalg.norm(gradient(f, x)))
    return x, fx, gn, gn <= 1e3 * gtol


def global_minimize(f: TrigPoly, grid_n: int | None = None, *, n_starts: int = 8,
                    workers: int | None = None) -> OracleResult:
    """Grid scan on ``grid_n^d`` points, then Newton refinement of the best samples.

    The returned value never exceeds the grid minimum; if no Newton run
    converges the best grid point is returned with ``newton_converged=False``.
    """
    if grid_n is None:
        grid_n = default_grid(f)
    grid_n = int(grid_n)
    if grid_n < max(4 * f.degree, 1) or grid_n <= 2 * f.degree:
        raise ValueError(f"grid_n = {grid_n} is below 4 * degree = {4 * f.degree}")
    vals = grid_values(f, grid_n, workers=workers).reshape(-1)
    order = np.argsort(vals, kind="stable")[:n_starts]
    starts = _grid_points(order, grid_n, f.dim)
    gtol = 1e-12 * max(1.0, f_norm(f))

    best_x, best_v, best_g, conv = starts[0], float(vals[order[0]]), math.inf, False
    for x0 in starts:
        x, v, gn, ok = _newton(f, x0.copy(), gtol)
        if (ok and not conv) or (ok == conv and v < best_v) or (ok and v < best_v):
            best_x, best_v, best_g, conv = x, v, gn, ok
    if best_v > vals[order[0]]:
        best_x, best_v, conv = starts[0], float(vals[order[0]]), False
        best_g = float(np.linalg.norm(gradient(f, best_x)))
    return OracleResult(f_star=float(best_v), x_star=np.mod(best_x, 1.0),
                        grid_resolution=grid_n, newton_converged=bool(conv),
                        gradient_norm=float(best_g))


# -- conditioning constants -------------------------------------------------

@dataclass
class ConditioningConstants:
    alpha: float
    beta: float
    lam: float
    xi: float
    validated: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out


def eta_from_xi(xi: float) -> float:
    return 1.0 / (1.0 - xi) - 1.0


def xi_from_eta(eta: float) -> float:
    return 1.0 - 1.0 / (1.0 + eta)


def periodic_offset(x, center) -> np.ndarray:
    """Representative of ``x - center`` in ``[-1/2, 1/2)^d``."""
    return np.mod(np.asarray(x, float) - center + 0.5, 1.0) - 0.5


def alpha_candidates():
    yield from ALPHA_CANDIDATES_TOP
    a = ALPHA_CANDIDATES_TOP[-1]
    while a / 2 >= ALPHA_FLOOR:
        a /= 2
        yield a


def _batched(fn, pts: np.ndarray, chunk: int = 8192) -> np.ndarray:
    return np.concatenate([fn(pts[i:i + chunk]) for i in range(0, len(pts), chunk)])


def _min_hessian_eig(f: TrigPoly, pts: np.ndarray) -> float:
    return float(np.min(_batched(lambda p: np.linalg.eigvalsh(hessian(f, p))[:, 0], pts)))


def _ball_points(center: np.ndarray, radius: float, per_axis: int) -> np.ndarray:
    # uniform grid of the closed cube, boundary included
    m = max(int(per_axis), 3)
    axis = np.linspace(-radius, radius, m)
    mesh = np.stack(np.meshgrid(*[axis] * len(center), indexing="ij"), axis=-1)
    return mesh.reshape(-1, len(center)) + center


def _hessian_holds(f, x_star, lam, radius, spacing) -> bool:
    per_axis = int(math.ceil(2 * radius / spacing)) + 1
    pts = _ball_points(x_star, radius, max(per_axis, 9))
    return _min_hessian_eig(f, pts) >= lam * (1 - 1e-12)


def _shell_points(center: np.ndarray, radius: float, per_axis: int) -> np.ndarray:
    # samples of the faces of the cube ||x - center||_inf = radius
    d = len(center)
    axis = np.linspace(-radius, radius, max(int(per_axis), 3))
    out = []
    for i in range(d):
        for sign in (-1.0, 1.0):
            mesh = np.meshgrid(*[axis] * (d - 1), indexing="ij") if d > 1 else []
            cols = [m.reshape(-1) for m in mesh]
            npts = cols[0].size if cols else 1
            face = np.empty((npts, d))
            k = 0
            for j in range(d):
                if j == i:
                    face[:, j] = sign * radius
                else:
                    face[:, j] = cols[k]
                    k += 1
            out.append(face)
    return np.concatenate(out) + center


def _polish_far(f, x0, x_star, radius):
    x, v, _, _ = _newton(f, x0.copy(), 1e-12 * max(1.0, f_norm(f)))
    if np.max(np.abs(periodic_offset(x, x_star))) >= radius:
        return v
    return math.inf


def _polish_face(f, x0, x_star, radius, axis):
    free = [j for j in range(f.dim) if j != axis]
    if not free:
        return float(evaluate(f, x0))
    base = x0.copy()

    def fun(z):
        p = base.copy()
        p[free] = z
        return float(evaluate(f, p)), gradient(f, p)[free]

    bounds = [(x_star[j] - radius, x_star[j] + radius) for j in free]
    res = minimize(fun, base[free], jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-15, "gtol": 1e-13})
    return min(float(res.fun), float(evaluate(f, x0)))


def _outer_minimum(f: TrigPoly, x_star, radius, n, workers=None, n_polish: int = 4) -> float:
    """Minimum of ``f`` over ``||x - x_star||_inf >= radius``: grid and face samples, then local polish."""
    vals = grid_values(f, n, workers=workers).reshape(-1)
    pts = _grid_points(np.arange(vals.size), n, f.dim)
    far = np.max(np.abs(periodic_offset(pts, x_star)), axis=1) >= radius
    best = math.inf
    if np.any(far):
        far_idx = np.flatnonzero(far)
        order = far_idx[np.argsort(vals[far_idx])[:n_polish]]
        best = float(vals[order[0]])
        for i in order:
            best = min(best, _polish_far(f, pts[i], x_star, radius))
    face_n = min(4 * n, 4096) if f.dim == 1 else n
    face = _shell_points(x_star, radius, face_n)
    face_vals = _batched(lambda p: evaluate(f, p), face)
    off = np.abs(face - x_star)
    for i in np.argsort(face_vals)[:n_polish]:
        axis = int(np.argmax(off[i]))
        best = min(best, _polish_face(f, face[i], x_star, radius, axis))
    return best


def estimate_conditioning(f: TrigPoly, oracle: OracleResult, xi: float = 0.5, *,
                          est_grid: int | None = None, val_grid: int | None = None,
                          workers: int | None = None) -> ConditioningConstants:
    """Estimate ``(alpha, beta, lambda)`` around the oracle minimizer.

    ``lambda`` is half the smallest Hessian eigenvalue at ``x_*``. ``alpha``
    is the first radius from the candidate list on which the Hessian floor
    holds, refined by bisection against the previous (failing) candidate
    using the validation spacing.
    ``beta`` is the minimum of ``f - f_*`` outside the ``alpha / 2`` cube,
    taken over grid points and the cube faces.
    """
    if not 0 < xi <= 0.5:
        raise ValueError("xi must lie in (0, 1/2]")
    if est_grid is None:
        est_grid = 64 if f.dim <= 2 else 32
    if val_grid is None:
        val_grid = 4 * est_grid if f.dim <= 2 else 2 * est_grid
    x_star = np.asarray(oracle.x_star, float)
    h_star = np.linalg.eigvalsh(hessian(f, x_star))
    scale = max(1.0, f_norm(f))
    # |f''| <= ||f||_F (2 pi deg)^2, so curvature far below that is a flat minimum
    curvature = f_norm(f) * (2 * math.pi * max(f.degree, 1)) ** 2
    if h_star[0] <= DEGENERACY_RTOL * curvature:
        raise ConditioningError(f"degenerate Hessian at the minimizer (lambda_min = {h_star[0]:.3e})")
    lam = 0.5 * float(h_star[0])

    spacing = 1.0 / est_grid
    fine = 1.0 / val_grid
    passed, failed = None, None
    for a in alpha_candidates():
        if _hessian_holds(f, x_star, lam, a, spacing):
            passed = a
            break
        failed = a
    if passed is None:
        raise ConditioningError("no candidate radius satisfies the Hessian condition")
    if failed is not None:
        lo, hi = passed, failed
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if _hessian_holds(f, x_star, lam, mid, fine):
                lo = mid
            else:
                hi = mid
        passed = lo
    alpha = passed

    beta = _outer_minimum(f, x_star, alpha / 2, est_grid, workers) - oracle.f_star
    if beta <= 1e-12 * scale:
        raise ConditioningError("f - f_* vanishes away from x_*: the minimizer is not unique")

    # re-check both conditions on the finer grid
    hess_ok = _hessian_holds(f, x_star, lam, alpha, fine / 2)
    beta_fine = _outer_minimum(f, x_star, alpha / 2, val_grid, workers) - oracle.f_star
    validated = hess_ok and beta_fine >= beta - 1e-9 * scale
    beta = min(beta, beta_fine)
    if beta <= 1e-12 * scale:
        raise ConditioningError("f - f_* vanishes away from x_*: the minimizer is not unique")
    return ConditioningConstants(alpha=float(alpha), beta=float(beta), lam=lam, xi=float(xi),
                                 validated=bool(validated))


@dataclass
class Theorem2Constants:
    B: float
    delta1: float
    delta2: float
    xi: float
    terms: tuple[float, float, float]

    def log_epsilon_bar(self, s) -> np.ndarray | float:
        s = np.asarray(s, dtype=float)
        out = np.log(self.delta1) - (s / self.delta2) ** (1 + self.xi)
        return float(out) if out.ndim == 0 else out

    def epsilon_bar(self, s) -> np.ndarray | float:
        """``delta1 * exp(-(s / delta2)^(1 + xi))``."""
        out = np.exp(self.log_epsilon_bar(s))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        return {"B": self.B, "delta1": self.delta1, "delta2": self.delta2, "xi": self.xi,
                "terms": list(self.terms)}


def theorem2_constants(f: TrigPoly, cc: ConditioningConstants,
                       oracle: OracleResult) -> Theorem2Constants:
    d = f.dim
    r = max(half_degree(f), 1)
    spread = f_norm(f - oracle.f_star)
    terms = (
        275.0 / (cc.alpha * cc.xi),
        8 * math.pi * r * spread / cc.beta,
        6.0 / cc.lam * spread * (4 * math.pi * r) ** 3,
    )
    big = max(terms)
    delta1 = (cc.beta + cc.lam * d ** 3) * (32 * big ** 3 * d ** 6) ** (d + 1)
    return Theorem2Constants(B=big, delta1=delta1, delta2=d * big, xi=cc.xi, terms=terms)
