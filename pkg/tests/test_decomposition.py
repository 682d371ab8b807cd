import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trigsos.decomposition import (build_partition, build_sos_terms, bump_function, bump_integral,
                                   decompose, fitted_decay_exponent, normalized_step,
                                   pointwise_error, reports_to_csv, sample_grid, truncate_and_report)
from trigsos.fourier import evaluate, random_trig_poly
from trigsos.local import estimate_conditioning, global_minimize
from trigsos.solvers import sos_bound


@pytest.fixture(scope="module")
def onemincos_setup():
    from trigsos.fourier import TrigPoly
    f = 1.0 - TrigPoly(1, {(1,): 0.5, (-1,): 0.5})
    res = global_minimize(f)
    cc = estimate_conditioning(f, res)
    return f, res, cc


@pytest.fixture(scope="module")
def planar_setup():
    f = random_trig_poly(2, 1, 7)
    res = global_minimize(f)
    cc = estimate_conditioning(f, res)
    return f, res, cc


def test_bump_values():
    assert bump_function(1.0, 0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert bump_function(1.0, 1.0) == 0 and bump_function(0.5, -2.0) == 0
    t = np.linspace(-1.5, 1.5, 301)
    assert np.all((bump_function(0.7, t) >= 0) & (bump_function(0.7, t) <= math.exp(-1)))


@pytest.mark.parametrize("eta", [0.25, 0.5, 1.0])
def test_bump_integral_lower_bound(eta):
    from scipy.integrate import quad
    ref = quad(lambda t: bump_function(eta, t), -1, 1, epsabs=1e-14)[0]
    assert bump_integral(eta) == pytest.approx(ref, abs=1e-14)
    assert bump_integral(eta) >= math.sqrt(eta) / 8


@given(st.floats(0.05, 1.0), st.floats(-3, 3), st.floats(-3, 3))
def test_step_monotone(eta, a, b):
    lo, hi = min(a, b), max(a, b)
    assert normalized_step(eta, lo) <= normalized_step(eta, hi) + 1e-15


def test_step_endpoints():
    assert normalized_step(1.0, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert normalized_step(1.0, -1.0) == 0 and normalized_step(1.0, -7.0) == 0
    assert normalized_step(1.0, 1.0) == 1 and normalized_step(1.0, 4.0) == 1


def test_step_matches_quadrature():
    from scipy.integrate import quad
    total = bump_integral(0.5)
    for t in (-0.8, -0.2, 0.3, 0.9):
        ref = quad(lambda z: bump_function(0.5, z), -1, t, epsabs=1e-15)[0] / total
        assert normalized_step(0.5, t) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("dim", [1, 2])
def test_partition_identity_and_support(dim):
    x_star = np.full(dim, 0.3)
    pou = build_partition(0.2, x_star, 1.0)
    x = np.random.default_rng(dim).random((10_000, dim))
    u, v = pou.uv(x)
    assert np.max(np.abs(u ** 2 + v ** 2 - 1)) <= 1e-12
    assert pou.u(x_star) == 1.0
    off = np.max(np.abs((x - x_star + 0.5) % 1 - 0.5), axis=1)
    assert np.all(u[off <= 0.1] == 1.0) and np.all(v[off <= 0.1] == 0.0)
    assert np.all(u[off >= 0.2] == 0.0) and np.all(v[off >= 0.2] == 1.0)


def test_partition_on_dense_grid():
    pou = build_partition(1 / 6, [0.0], 1.0)
    x = sample_grid(1, 512)
    u, v = pou.uv(x)
    assert np.max(np.abs(u ** 2 + v ** 2 - 1)) <= 1e-12


def test_partition_rejects_bad_alpha():
    with pytest.raises(ValueError):
        build_partition(0.5, [0.0])


def test_terms_onemincos(onemincos_setup):
    f, res, cc = onemincos_setup
    terms = build_sos_terms(f, res, build_partition(cc.alpha, res.x_star))
    assert pointwise_error(terms, sample_grid(1, 512)) <= 1e-9
    assert np.allclose(terms(res.x_star), 0.0, atol=1e-14)
    far = np.array([[0.5], [0.4]])
    g = terms(far)
    assert np.all(g[:, 0] == 0)
    assert np.allclose(g[:, 1] ** 2, evaluate(f, far), rtol=1e-14)


def test_terms_planar(planar_setup):
    f, res, cc = planar_setup
    terms = build_sos_terms(f, res, build_partition(cc.alpha, res.x_star))
    x = np.random.default_rng(0).random((4000, 2))
    near = res.x_star + np.random.default_rng(1).uniform(-cc.alpha, cc.alpha, (2000, 2))
    assert pointwise_error(terms, np.concatenate([x, near])) <= 1e-9
    u = terms.pou.u(x)
    assert np.all(terms(x)[u == 0, :2] == 0)


def test_truncation_pipeline_onemincos(onemincos_setup):
    f, res, cc = onemincos_setup
    reports = decompose(f, res, cc.alpha, [4, 8, 16, 32], fft_n=512)
    residuals = [r.residual for r in reports]
    assert np.all(np.diff(residuals) < 0)
    for r in reports:
        assert 0 <= r.residual <= r.estimate
        assert r.gap_bound == pytest.approx(r.residual * (2 * r.s + 1))


def test_untruncated_residual_is_quadrature_noise(onemincos_setup):
    f, res, cc = onemincos_setup
    terms = build_sos_terms(f, res, build_partition(0.45, res.x_star))
    # with a wide partition and a large band nothing of note is cut off
    assert truncate_and_report(f, terms, 256, 2048).residual <= 1e-8


def test_aliasing_guard(onemincos_setup):
    f, res, cc = onemincos_setup
    terms = build_sos_terms(f, res, build_partition(cc.alpha, res.x_star))
    with pytest.raises(ValueError):
        truncate_and_report(f, terms, 32, 128)


def test_truncation_residual_bounds_gap(planar_setup):
    f, res, cc = planar_setup
    for rep in decompose(f, res, cc.alpha, [2, 4], fft_n=64):
        eps = res.f_star - sos_bound(f, rep.s).lower_bound
        assert eps <= rep.gap_bound + 1e-5


def test_decay_fit_helper():
    s = np.array([4, 8, 16, 32])
    assert fitted_decay_exponent(s, 3.0 * s ** -2.5) == pytest.approx(2.5)


def test_csv_header(onemincos_setup):
    f, res, cc = onemincos_setup
    text = reports_to_csv(decompose(f, res, cc.alpha, [4, 8], fft_n=128))
    lines = text.strip().splitlines()
    assert lines[0] == "s,residual,bound" and len(lines) == 3
