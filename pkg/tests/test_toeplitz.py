
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trigsos.fourier import TrigPoly, evaluate, random_trig_poly
from trigsos.toeplitz import (DegreeError, FreqGrid, GramMatrix, NonToeplitzWarning, freq_grid,
                              gram_to_poly, moment_matrix, moment_projector, project_toeplitz,
                              project_toeplitz_complement, toeplitz_representation)

seeds = st.integers(0, 2**31 - 1)


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


def test_cosine_representation(cos1):
    f = toeplitz_representation(cos1, 1)
    expected = np.array([[0, 0.75, 0], [0.75, 0, 0.75], [0, 0.75, 0]])
    assert np.allclose(f.entries, expected, atol=1e-15)
    assert gram_to_poly(f).allclose(cos1)


def test_constant_representation():
    f = toeplitz_representation(TrigPoly.constant(2.5, 2), 2)
    assert np.allclose(f.entries, 2.5 * np.eye(25))


def test_identity_is_constant_one():
    g = freq_grid(2, 1)
    assert gram_to_poly(GramMatrix(g, np.eye(g.size))).allclose(TrigPoly.constant(1.0, 2))


def test_degree_guard():
    with pytest.raises(DegreeError):
        toeplitz_representation(random_trig_poly(1, 3, 0), 1)


@given(seeds)
def test_round_trip_2d(seed):
    f = random_trig_poly(2, 3, seed)
    assert gram_to_poly(toeplitz_representation(f, 3)).allclose(f, atol=1e-13)


@given(seeds)
def test_quadratic_form_matches_poly(seed):
    rng = np.random.default_rng(seed)
    g = freq_grid(2, 1)
    a = GramMatrix(g, random_hermitian(g.size, rng))
    x = rng.random((100, 2))
    assert np.allclose(a.quadratic_form(x), evaluate(gram_to_poly(a), x), atol=1e-12)


def test_projection_fixes_toeplitz(rng):
    f = toeplitz_representation(random_trig_poly(2, 2, 3), 2)
    assert np.allclose(project_toeplitz(f).entries, f.entries, atol=1e-14)


def test_projection_single_entry_average():
    g = freq_grid(1, 2)
    a = np.zeros((5, 5), complex)
    a[0, 1] = a[1, 0] = 1.0  # shift +-1 class has 4 members
    p = project_toeplitz(GramMatrix(g, a)).entries
    assert np.allclose(np.diag(p, 1), 0.25) and np.allclose(np.diag(p, -1), 0.25)


@given(seeds)
def test_projection_orthogonal(seed):
    g = freq_grid(2, 1)
    a = GramMatrix(g, random_hermitian(g.size, np.random.default_rng(seed)))
    p = project_toeplitz(a).entries
    q = project_toeplitz_complement(a).entries
    assert abs(np.vdot(p, q)) <= 1e-12 * np.linalg.norm(a.entries) ** 2


@pytest.mark.parametrize("dim,s", [(d, s) for d in (1, 2, 3) for s in range(5) if (2 * s + 1) ** d <= 729])
def test_class_sizes_match_enumeration(dim, s):
    g = FreqGrid(dim, s)
    counts = np.bincount(g.class_of.reshape(-1), minlength=g.n_shifts)
    assert np.array_equal(counts, g.class_sizes)


def test_moment_matrices_are_toeplitz(rng):
    g = freq_grid(2, 2)
    for x in rng.random((5, 2)):
        m = moment_matrix(g, x)
        assert np.allclose(project_toeplitz(m).entries, m.entries, atol=1e-14)
        assert m.trace() == pytest.approx(1.0)


def test_moment_projector_identity():
    g = freq_grid(2, 3)
    small = moment_projector(GramMatrix(g, np.eye(g.size) / g.size), 1)
    assert np.allclose(small.entries, np.eye(9) / 9)


def test_moment_projector_point_mass(rng):
    x = rng.random(2)
    big = moment_matrix(freq_grid(2, 3), x)
    assert np.allclose(moment_projector(big, 1).entries, moment_matrix(freq_grid(2, 1), x).entries)


@given(seeds)
def test_moment_projector_linear(seed):
    rng = np.random.default_rng(seed)
    g = freq_grid(1, 3)
    s1 = project_toeplitz(GramMatrix(g, random_hermitian(g.size, rng)))
    s2 = project_toeplitz(GramMatrix(g, random_hermitian(g.size, rng)))
    a, b = rng.standard_normal(2)
    lhs = moment_projector(GramMatrix(g, a * s1.entries + b * s2.entries), 2).entries
    rhs = a * moment_projector(s1, 2).entries + b * moment_projector(s2, 2).entries
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_moment_projector_warns_on_non_toeplitz(rng):
    g = freq_grid(1, 2)
    with pytest.warns(NonToeplitzWarning):
        moment_projector(GramMatrix(g, random_hermitian(g.size, rng)), 1)


def test_gram_matrix_rejects_non_hermitian():
    g = freq_grid(1, 1)
    with pytest.raises(ValueError):
        GramMatrix(g, np.triu(np.ones((3, 3))))


def test_gram_dict_round_trip(rng):
    g = freq_grid(2, 1)
    a = GramMatrix(g, random_hermitian(g.size, rng))
    assert np.array_equal(GramMatrix.from_dict(a.to_dict()).entries, a.entries)
