"""Polynomials on [-1, 1]^d and their lift to the torus via x_i = cos(2 pi y_i)."""

from __future__ import annotations

import itertools
import json
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P

from .fourier import PolyFormatError, TrigPoly

BASES = ("monomial", "chebyshev")
BOUNDARY_TOL = 1e-9


class HypercubePoly:
    """Real polynomial on ``[-1, 1]^d`` in the monomial or Chebyshev basis.

    ``coeffs`` maps exponent tuples to real coefficients. Internally the
    polynomial is held as a dense tensor of shape ``(deg + 1,) * d``.
    """

    def __init__(self, dim: int, coeffs: Mapping, basis: str = "monomial"):
        if basis not in BASES:
            raise PolyFormatError(f"basis must be one of {BASES}, got {basis!r}")
        dim = int(dim)
        if dim < 1:
            raise PolyFormatError("dimension must be positive")
        exps = [tuple(int(e) for e in np.atleast_1d(k)) for k in coeffs]
        for e in exps:
            if len(e) != dim or min(e, default=0) < 0:
                raise PolyFormatError(f"bad exponent {e} for dim={dim}")
        deg = max((max(e) for e in exps), default=0)
        tensor = np.zeros((deg + 1,) * dim)
        for e, v in zip(exps, coeffs.values()):
            tensor[e] += float(v)
        self._init(dim, tensor, basis)

    @classmethod
    def from_tensor(cls, tensor, basis: str = "monomial") -> "HypercubePoly":
        tensor = np.asarray(tensor, dtype=float)
        obj = cls.__new__(cls)
        obj._init(tensor.ndim, tensor, basis)
        return obj

    def _init(self, dim, tensor, basis):
        # trim trailing all-zero slices so the degree is honest
        deg = tensor.shape[0] - 1 if tensor.size else 0
        while deg > 0:
            sl = np.zeros(tensor.shape, bool)
            for ax in range(dim):
                idx = [slice(None)] * dim
                idx[ax] = deg
                sl[tuple(idx)] = True
            if np.any(tensor[sl] != 0):
                break
            deg -= 1
        tensor = np.array(tensor[(slice(0, deg + 1),) * dim], dtype=float)
        tensor.setflags(write=False)
        self.dim = dim
        self.basis = basis
        self.tensor = tensor

    @property
    def degree(self) -> int:
        """Largest per-coordinate exponent."""
        return self.tensor.shape[0] - 1

    @property
    def coeffs(self) -> dict[tuple[int, ...], float]:
        nz = np.argwhere(self.tensor != 0)
        return {tuple(int(v) for v in e): float(self.tensor[tuple(e)]) for e in nz}

    def __repr__(self):
        return f"HypercubePoly(dim={self.dim}, degree={self.degree}, basis={self.basis!r})"

    def __call__(self, x):
        return evaluate_hypercube(self, x)


def _axis_apply(tensor: np.ndarray, mat: np.ndarray) -> np.ndarray:
    out = tensor
    for ax in range(tensor.ndim):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [ax])), 0, ax)
    return out


def _basis_matrix(deg: int, to: str) -> np.ndarray:
    conv = C.poly2cheb if to == "chebyshev" else C.cheb2poly
    mat = np.zeros((deg + 1, deg + 1))
    for j in range(deg + 1):
        e = np.zeros(deg + 1)
        e[j] = 1.0
        col = conv(e)
        mat[: len(col), j] = col
    return mat


def to_chebyshev_basis(p: HypercubePoly) -> HypercubePoly:
    """Exact change of basis monomial -> Chebyshev, axis by axis."""
    if p.basis == "chebyshev":
        return p
    mat = _basis_matrix(p.degree, "chebyshev")
    return HypercubePoly.from_tensor(_axis_apply(p.tensor, mat), "chebyshev")


def to_monomial_basis(p: HypercubePoly) -> HypercubePoly:
    if p.basis == "monomial":
        return p
    mat = _basis_matrix(p.degree, "monomial")
    return HypercubePoly.from_tensor(_axis_apply(p.tensor, mat), "monomial")


def _vander(p: HypercubePoly, t: np.ndarray) -> np.ndarray:
    fn = C.chebvander if p.basis == "chebyshev" else P.polyvander
    return fn(t, p.degree)


def _contract(tensor: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    # result[k] = sum_j tensor[j_1..j_d] prod_i mats[i][k, j_i]
    out = np.tensordot(mats[0], tensor, axes=([1], [0]))
    for m in mats[1:]:
        out = np.einsum("kj...,kj->k...", out, m)
    return out


def _hc_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    return x


def evaluate_hypercube(p: HypercubePoly, x):
    pts = _hc_points(x, p.dim)
    flat = pts.reshape(-1, p.dim)
    mats = [_vander(p, flat[:, i]) for i in range(p.dim)]
    vals = _contract(p.tensor, mats).reshape(pts.shape[:-1])
    return float(vals) if vals.ndim == 0 else vals


def partial_derivative(p: HypercubePoly, axis: int, order: int = 1) -> HypercubePoly:
    der = C.chebder if p.basis == "chebyshev" else P.polyder
    if p.degree == 0:
        return HypercubePoly.from_tensor(np.zeros((1,) * p.dim), p.basis)
    t = der(p.tensor, m=order, axis=axis)
    pad = [(0, 0)] * p.dim
    pad[axis] = (0, p.tensor.shape[axis] - t.shape[axis])
    return HypercubePoly.from_tensor(np.pad(t, pad), p.basis)


def gradient_hypercube(p: HypercubePoly, x) -> np.ndarray:
    return np.array([evaluate_hypercube(partial_derivative(p, i), x) for i in range(p.dim)])


def hessian_hypercube(p: HypercubePoly, x) -> np.ndarray:
    h = np.zeros((p.dim, p.dim))
    for i in range(p.dim):
        pi = partial_derivative(p, i)
        for j in range(i, p.dim):
            h[i, j] = h[j, i] = evaluate_hypercube(partial_derivative(pi, j), x)
    return h


def lift(p: HypercubePoly) -> TrigPoly:
    """Trigonometric polynomial ``f(y) = P(cos 2 pi y_1, ..., cos 2 pi y_d)``.

    Each Chebyshev term ``prod T_{n_i}`` becomes
    ``prod (e^{2 i pi n_i y_i} + e^{-2 i pi n_i y_i}) / 2``.
    """
    cheb = to_chebyshev_basis(p)
    freqs, values = [], []
    for e in np.argwhere(cheb.tensor != 0):
        c = cheb.tensor[tuple(e)]
        nonzero = [i for i in range(p.dim) if e[i] != 0]
        weight = c / 2 ** len(nonzero)
        for signs in itertools.product((1, -1), repeat=len(nonzero)):
            w = np.array(e, dtype=np.int64)
            for i, sg in zip(nonzero, signs):
                w[i] *= sg
            freqs.append(w)
            values.append(weight)
    if not freqs:
        return TrigPoly(p.dim)
    return TrigPoly.from_arrays(np.array(freqs), np.array(values, dtype=complex))


def chebyshev_l1_norm(p: HypercubePoly, *, centered: bool = True) -> float:
    """Sum of |Chebyshev coefficients|, excluding the constant term when ``centered``."""
    t = np.abs(to_chebyshev_basis(p).tensor).copy()
    if centered:
        t[(0,) * p.dim] = 0.0
    return float(t.sum())


def torus_point(x) -> np.ndarray:
    """Representative ``y in [0, 1/2]^d`` with ``cos(2 pi y) = x``."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    return np.arccos(x) / (2 * np.pi)


@dataclass
class TransferReport:
    y_star: np.ndarray
    gradient: np.ndarray
    gradient_norm: float
    hessian: np.ndarray
    positive_definite: bool
    boundary: list[int]
    conditions_hold: bool

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star.tolist(),
            "gradient": self.gradient.tolist(),
            "gradient_norm": self.gradient_norm,
            "hessian": self.hessian.tolist(),
            "positive_definite": self.positive_definite,
            "boundary": self.boundary,
            "conditions_hold": self.conditions_hold,
        }


def transfer_optimality(p: HypercubePoly, x_star) -> TransferReport:
    """Gradient and Hessian of the lifted polynomial at the image of ``x_star``.

    With ``y = arccos(x) / 2 pi``:

        df/dy_i       = -2 pi sin(2 pi y_i) dP/dx_i
        d2f/dy_i dy_j = (2 pi)^2 sin(2 pi y_i) sin(2 pi y_j) d2P/dx_i dx_j
                        - [i = j] (2 pi)^2 cos(2 pi y_i) dP/dx_i

    Only one of the ``2^d`` preimages is returned; the others differ by sign
    flips of ``sin`` and share the Hessian spectrum.
    """
    x = np.atleast_1d(np.asarray(x_star, dtype=float))
    if x.shape != (p.dim,):
        raise ValueError(f"x_star must have {p.dim} coordinates")
    if np.any(np.abs(x) > 1 + 1e-12):
        raise ValueError("x_star lies outside [-1, 1]^d")
    x = np.clip(x, -1.0, 1.0)
    y = torus_point(x)
    grad_p = gradient_hypercube(p, x)
    hess_p = hessian_hypercube(p, x)
    two_pi = 2 * np.pi
    sin = np.sin(two_pi * y)
    cos = np.cos(two_pi * y)
    boundary = [i for i in range(p.dim) if abs(x[i]) > 1 - BOUNDARY_TOL]
    sin[boundary] = 0.0
    cos[boundary] = np.sign(x[boundary])
    grad_f = -two_pi * sin * grad_p
    hess_f = two_pi ** 2 * np.outer(sin, sin) * hess_p - np.diag(two_pi ** 2 * cos * grad_p)
    hess_f = 0.5 * (hess_f + hess_f.T)
    lam = np.linalg.eigvalsh(hess_f)
    pd = bool(lam[0] > 0)

    interior = [i for i in range(p.dim) if i not in boundary]
    scale = max(1.0, float(np.max(np.abs(grad_p), initial=0.0)))
    ok = all(abs(grad_p[i]) <= 1e-8 * scale for i in interior)
    # x_i = 1 needs dP/dx_i < 0, x_i = -1 the mirrored dP/dx_i > 0
    ok &= all(grad_p[i] * np.sign(x[i]) < 0 for i in boundary)
    if interior:
        block = hess_p[np.ix_(interior, interior)]
        ok &= bool(np.linalg.eigvalsh(block)[0] > 0)
    return TransferReport(y_star=y, gradient=grad_f, gradient_norm=float(np.linalg.norm(grad_f)),
                          hessian=hess_f, positive_definite=pd, boundary=boundary,
                          conditions_hold=bool(ok))


# -- JSON ------------------------------------------------------------------

def hypercube_to_dict(p: HypercubePoly) -> dict:
    return {"dim": p.dim, "basis": p.basis,
            "coeffs": [{"exp": list(e), "value": v} for e, v in p.coeffs.items()]}


def parse_hypercube(document) -> HypercubePoly:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PolyFormatError(f"invalid JSON: {exc}") from exc
    try:
        dim = int(document["dim"])
        basis = document.get("basis", "monomial")
        entries = document["coeffs"]
        coeffs: dict = {}
        for e in entries:
            exp = tuple(int(v) for v in np.atleast_1d(e["exp"]))
            coeffs[exp] = coeffs.get(exp, 0.0) + float(e["value"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PolyFormatError(f"malformed hypercube polynomial: {exc}") from exc
    return HypercubePoly(dim, coeffs, basis)


def random_hypercube_poly(dim: int, degree: int, rng=None) -> HypercubePoly:
    """Random monomial-basis polynomial with per-coordinate degree ``<= degree``."""
    rng = np.random.default_rng(rng)
    return HypercubePoly.from_tensor(rng.standard_normal((degree + 1,) * dim), "monomial")
