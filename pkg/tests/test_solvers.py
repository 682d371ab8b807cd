import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trigsos.fourier import TrigPoly, evaluate, f_norm, random_trig_poly
from trigsos.kernels import KernelSpec, theorem1_bound
from trigsos.local import global_minimize
from trigsos.solvers import SolverOptions, extract_sos_gram, sos_bound, spectral_bound
from trigsos.toeplitz import (DegreeError, freq_grid, project_toeplitz, toeplitz_from_values,
                              toeplitz_representation)

seeds = st.integers(0, 2**31 - 1)


def moment_sdp_value(f, s):
    """min tr(Sigma F) over PSD, unit-trace Toeplitz Sigma, solved by a generic conic solver."""
    cp = pytest.importorskip("cvxpy")
    fmat = toeplitz_representation(f, s).entries
    g = freq_grid(f.dim, s)
    sigma = cp.Variable((g.size, g.size), hermitian=True)
    cons = [sigma >> 0, cp.real(cp.trace(sigma)) == 1]
    cls = g.class_of
    first = {}
    for a in range(g.size):
        for b in range(g.size):
            k = cls[a, b]
            if k in first:
                cons.append(sigma[a, b] == sigma[first[k]])
            else:
                first[k] = (a, b)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(sigma @ fmat))), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def test_spectral_cosine(cos1):
    rep = spectral_bound(cos1, 1)
    assert rep.lower_bound == pytest.approx(-3 * math.sqrt(2) / 4, abs=1e-10)


def test_constant_bounds():
    c = TrigPoly.constant(-2.25, 2)
    assert spectral_bound(c, 2).lower_bound == pytest.approx(-2.25, abs=1e-14)
    rep = sos_bound(c, 2)
    assert rep.lower_bound == -2.25 and np.all(rep.Y.entries == 0)
    assert np.allclose(extract_sos_gram(c, rep).entries, 0)


def reweighted(f, s):
    # g with coefficients f(w) / prod(1 - |w_i| / (2s + 1))
    w = f.freqs
    weights = np.prod(1 - np.abs(w) / (2 * s + 1), axis=1)
    return TrigPoly.from_arrays(w, f.values / weights)


@pytest.mark.parametrize("seed", range(5))
def test_spectral_above_reweighted_minimum(seed):
    f = random_trig_poly(1, 4, seed)
    s = 4
    g_min = global_minimize(reweighted(f, s), 256).f_star
    assert spectral_bound(f, s).lower_bound >= g_min - 1e-9


def test_sos_onemincos_tight(onemincos):
    rep = sos_bound(onemincos, 1)
    assert abs(rep.lower_bound) <= 1e-6 and rep.gap <= 1e-6 and rep.converged


def test_sos_cosine_d1(cos1):
    assert sos_bound(cos1, 1).lower_bound == pytest.approx(-1.0, abs=1e-8)


def test_sos_random_within_theorem1_bracket():
    f = random_trig_poly(2, 2, 11)
    f_star = global_minimize(f).f_star
    lower = sos_bound(f, 3).lower_bound
    b = theorem1_bound(f, KernelSpec("triangular", 3, 2))
    assert b == pytest.approx(8 * f_norm(f - f.mean))
    assert -1e-9 <= f_star - lower <= b + 1e-6


def test_degree_guard():
    with pytest.raises(DegreeError):
        sos_bound(random_trig_poly(1, 3, 0), 1)


@pytest.mark.parametrize("seed", range(3))
def test_gram_extraction(seed):
    f = random_trig_poly(2, 1, seed)
    rep = sos_bound(f, 2)
    a = extract_sos_gram(f, rep)
    scale = np.linalg.norm(a.entries, 2)
    assert a.min_eigenvalue() >= -1e-8 * max(scale, 1)
    x = np.random.default_rng(seed).random((100, 2))
    assert np.allclose(a.quadratic_form(x), evaluate(f, x) - rep.lower_bound, atol=1e-7)


def test_gram_extraction_onemincos(onemincos):
    rep = sos_bound(onemincos, 1)
    a = extract_sos_gram(onemincos, rep)
    assert a.min_eigenvalue() >= -1e-8
    x = np.linspace(0, 1, 17)
    assert np.allclose(a.quadratic_form(x), evaluate(onemincos, x) - rep.lower_bound, atol=1e-9)


@pytest.mark.parametrize("method", ["ipm", "smooth"])
def test_dual_certificate_is_feasible(method):
    f = random_trig_poly(1, 2, 4)
    rep = sos_bound(f, 2, method=method)
    sig = rep.Sigma
    assert np.linalg.eigvalsh(sig.entries)[0] >= -1e-12
    assert sig.trace() == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(project_toeplitz(sig).entries, sig.entries, atol=1e-12)
    # weak duality between the reported pair
    assert rep.dual_value >= rep.lower_bound - 1e-9
    assert np.all(np.diff(rep.history) >= -1e-15)


def test_lower_bound_is_certified_by_y():
    f = random_trig_poly(2, 1, 8)
    rep = sos_bound(f, 2)
    fmat = toeplitz_representation(f, 2).entries
    assert np.linalg.eigvalsh(fmat + rep.Y.entries)[0] == pytest.approx(rep.lower_bound, abs=1e-12)
    # Y is orthogonal to every Toeplitz matrix
    assert np.allclose(project_toeplitz(rep.Y).entries, 0, atol=1e-12)


def test_smooth_method_agrees_with_ipm():
    f = random_trig_poly(1, 2, 9)
    a = sos_bound(f, 2, method="ipm")
    b = sos_bound(f, 2, method="smooth", tol=1e-6, max_iters=500)
    assert b.converged
    assert b.lower_bound == pytest.approx(a.lower_bound, abs=2e-6)


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
@pytest.mark.parametrize("dim,degree,s,seed", [(1, 2, 1, 0), (1, 3, 3, 1), (2, 1, 1, 2), (2, 2, 2, 3)])
def test_matches_generic_conic_solver(dim, degree, s, seed):
    f = random_trig_poly(dim, degree, seed)
    ref = moment_sdp_value(f, s)
    assert sos_bound(f, s).lower_bound == pytest.approx(ref, abs=1e-6 * max(1, abs(ref)))


@settings(max_examples=8)
@given(seeds)
def test_bound_below_every_value(seed):
    f = random_trig_poly(2, 1, seed)
    rep = sos_bound(f, 2)
    x = np.random.default_rng(seed).random((500, 2))
    assert rep.lower_bound <= np.min(evaluate(f, x)) + 1e-9


@settings(max_examples=8)
@given(seeds, st.floats(-10, 10), st.floats(0.05, 20))
def test_shift_and_scale_equivariance(seed, c, a):
    f = random_trig_poly(1, 2, seed)
    base = sos_bound(f, 2).lower_bound
    assert sos_bound(f + c, 2).lower_bound == pytest.approx(base + c, abs=1e-8)
    assert sos_bound(a * f, 2).lower_bound == pytest.approx(a * base, abs=1e-8 * a)


def test_monotone_in_level():
    f = random_trig_poly(2, 2, 21)
    bounds = [sos_bound(f, s).lower_bound for s in (1, 2, 3, 4)]
    assert np.all(np.diff(bounds) >= -1e-9)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(method="newton")
    with pytest.raises(ValueError):
        SolverOptions(tol=0)


def test_report_serialization():
    f = random_trig_poly(1, 1, 2)
    d = sos_bound(f, 1).to_dict(certificates=True)
    assert {"lower_bound", "gap", "converged", "Y", "Sigma"} <= set(d)
    assert len(d["Sigma"]["entries"]) == 9
