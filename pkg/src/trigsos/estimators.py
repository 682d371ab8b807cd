"""Estimator-style wrappers around the functional API.

``fit`` takes a polynomial (object, dict or JSON string) instead of a data
matrix; fitted quantities end with an underscore. Parameters are plain
constructor arguments so ``get_params`` / ``set_params`` / ``clone`` work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as V
from .chebyshev import lift, to_chebyshev_basis, torus_point
from .fourier import evaluate
from .kernels import KernelSpec, build_certificate, half_degree
from .local import global_minimize
from .solvers import SolverOptions, extract_sos_gram, sos_bound, spectral_bound


class _BoundEstimator(BaseEstimator):
    def _level(self, f):
        return half_degree(f) if self.degree is None else V.check_level(self.degree, "degree")

    def _store(self, f, report):
        self.poly_ = f
        self.report_ = report
        self.lower_bound_ = report.lower_bound
        self.dual_gap_ = report.gap
        self.moment_matrix_ = report.Sigma
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.level_ = report.level
        return self

    def transform(self, X):
        """``f(x) - lower_bound_`` at each point; nonnegative when the bound is valid."""
        check_is_fitted(self, "lower_bound_")
        x = V.check_points(X, self.poly_.dim)
        return np.atleast_1d(evaluate(self.poly_, x)) - self.lower_bound_

    def score(self, f_star: float) -> float:
        """Relaxation gap ``f_star - lower_bound_``."""
        check_is_fitted(self, "lower_bound_")
        return float(f_star) - self.lower_bound_


class SOSRelaxation(_BoundEstimator):
    """Level-``degree`` SOS lower bound; ``degree=None`` uses the smallest feasible level."""

    def __init__(self, degree=None, method="ipm", tol=1e-6, max_iters=None, mu0=None):
        self.degree = degree
        self.method = method
        self.tol = tol
        self.max_iters = max_iters
        self.mu0 = mu0

    def fit(self, X, y=None):
        f = V.check_poly(X)
        opts = SolverOptions(tol=V.check_positive(self.tol, "tol"), max_iters=self.max_iters,
                             mu0=self.mu0, method=self.method)
        report = sos_bound(f, self._level(f), opts)
        self._store(f, report)
        self.certificate_ = report.Y
        return self

    def gram_matrix(self):
        """PSD Gram matrix of ``f - lower_bound_``."""
        check_is_fitted(self, "lower_bound_")
        return extract_sos_gram(self.poly_, self.report_)


class SpectralRelaxation(_BoundEstimator):
    """Smallest eigenvalue of the Toeplitz representation at level ``degree``."""

    def __init__(self, degree=None):
        self.degree = degree

    def fit(self, X, y=None):
        f = V.check_poly(X)
        return self._store(f, spectral_bound(f, self._level(f)))


class MinimizerOracle(BaseEstimator):
    """Grid scan plus Newton polish; ``predict`` returns ``f`` at the points."""

    def __init__(self, grid_n=None, n_starts=8):
        self.grid_n = grid_n
        self.n_starts = n_starts

    def fit(self, X, y=None):
        f = V.check_poly(X)
        res = global_minimize(f, self.grid_n, n_starts=self.n_starts)
        self.poly_ = f
        self.result_ = res
        self.f_star_ = res.f_star
        self.x_star_ = res.x_star
        return self

    def predict(self, X):
        check_is_fitted(self, "f_star_")
        return np.atleast_1d(evaluate(self.poly_, V.check_points(X, self.poly_.dim)))


class KernelCertifier(BaseEstimator):
    """Explicit kernel certificate of ``f - f_star + b``; ``f_star=None`` runs the oracle."""

    def __init__(self, kind="triangular", s=None, f_star=None):
        self.kind = kind
        self.s = s
        self.f_star = f_star

    def fit(self, X, y=None):
        f = V.check_poly(X)
        r = max(half_degree(f), 1)
        s = (3 * r if self.kind == "triangular" else r) if self.s is None else V.check_level(self.s)
        f_star = global_minimize(f).f_star if self.f_star is None else float(self.f_star)
        cert = build_certificate(f, f_star, KernelSpec(self.kind, s, f.dim))
        self.certificate_ = cert
        self.b_ = cert.b
        self.lower_bound_ = cert.lower_bound
        return self


class ChebyshevLifter(BaseEstimator):
    """Lift a polynomial on ``[-1, 1]^d`` to the torus; ``transform`` maps ``x`` to ``y`` with ``cos(2 pi y) = x``."""

    def fit(self, X, y=None):
        p = V.check_hypercube_poly(X)
        self.poly_ = p
        self.chebyshev_ = to_chebyshev_basis(p)
        self.lifted_ = lift(p)
        return self

    def transform(self, X):
        check_is_fitted(self, "lifted_")
        x = V.check_points(X, self.poly_.dim)
        if np.any(np.abs(x) > 1):
            raise ValueError("points must lie in [-1, 1]^d")
        return torus_point(x)
