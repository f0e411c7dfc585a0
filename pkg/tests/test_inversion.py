import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netcomp.convolution import delta, direct_convolve
from netcomp.degree import excess, from_table
from netcomp.inversion import DiagonalProblem, complete_homogeneous, component_size_at, component_sizes

from oracles import fixed_point_sizes, series_fixed_point


def brute_diagonal(F, R, pmax):
    """S(p) = sum_{|q| = p} [t^(q+1)] F prod R_i^(q_i) by direct convolution."""
    N = len(R)
    shape = (pmax + 2,) * N
    pw = []
    for r in R:
        seq = [delta(shape)]
        for _ in range(pmax):
            seq.append(direct_convolve(seq[-1], r, shape))
        pw.append(seq)
    out = np.zeros(pmax + 1)
    for q in itertools.product(range(pmax + 1), repeat=N):
        p = sum(q)
        if p > pmax:
            continue
        term = direct_convolve(F, delta(shape), shape)
        for i in range(N):
            term = direct_convolve(term, pw[i][q[i]], shape)
        out[p] += term[tuple(x + 1 for x in q)]
    return out


def random_factor(rng, N, K):
    r = rng.random((K,) * N)
    r /= r.sum()
    return r


@pytest.mark.parametrize("N", [1, 2, 3])
def test_diagonal_sums_match_brute_force(N):
    rng = np.random.default_rng(N)
    R = [random_factor(rng, N, 3) for _ in range(N)]
    F = rng.standard_normal((3,) * N)
    pmax = 7 if N < 3 else 5
    m, lg = DiagonalProblem(F, R).sums(pmax)
    np.testing.assert_allclose(m * np.exp(lg), brute_diagonal(F, R, pmax), rtol=1e-9, atol=1e-13)


def test_segments_and_single_values_agree():
    rng = np.random.default_rng(7)
    R = [random_factor(rng, 2, 4) for _ in range(2)]
    F = rng.random((4, 4))
    prob = DiagonalProblem(F, R)
    ref_m, ref_l = prob.sums(300, segments=1)
    for seg in (2, 5):
        m, lg = prob.sums(300, segments=seg)
        np.testing.assert_allclose(m * np.exp(lg - ref_l), ref_m, rtol=1e-10, atol=1e-300)
    for p in (0, 17, 300):
        v, l = prob.sum_at(p)
        assert v * math.exp(l - ref_l[p]) == pytest.approx(ref_m[p], rel=1e-10)
    m, lg = prob.sums(300, kmin=250)
    np.testing.assert_allclose(m * np.exp(lg - ref_l[250:]), ref_m[250:], rtol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False),
       st.integers(0, 40))
def test_complete_homogeneous_closed_form(a, b, p):
    got = complete_homogeneous(np.array([[a], [b]]), p)[0]
    ref = sum(a ** i * b ** (p - i) for i in range(p + 1))
    assert abs(got - ref) <= 1e-9 * max(1.0, sum(abs(a) ** i * abs(b) ** (p - i) for i in range(p + 1)))


def test_complete_homogeneous_equal_arguments():
    a = np.array([[0.3 + 0.4j], [0.3 + 0.4j]])
    assert complete_homogeneous(a, 12)[0] == pytest.approx(13 * (0.3 + 0.4j) ** 12, rel=1e-12)


def test_component_sizes_two_axes_vs_fixed_point():
    rng = np.random.default_rng(11)
    u = rng.random((4, 4))
    u /= u.sum()
    d = from_table(u, "multiplex")
    R = [excess(d, 0).mass, excess(d, 1).mass]
    m, lg = component_sizes(u, R, 40)
    np.testing.assert_allclose(m * np.exp(lg), fixed_point_sizes(u, R[0], R[1], 40)[1:],
                               rtol=1e-9, atol=1e-15)


def test_component_sizes_three_axes_both_methods():
    rng = np.random.default_rng(12)
    u = rng.random((3, 3, 3))
    u /= u.sum()
    d = from_table(u, "multiplex")
    R = [excess(d, i).mass for i in range(3)]
    ref = series_fixed_point(u, R, 12)[1:]
    for method in ("explicit", "fourier"):
        m, lg = component_sizes(u, R, 12, method)
        np.testing.assert_allclose(m * np.exp(lg), ref, rtol=1e-9, atol=1e-14)
    v, l = component_size_at(u, R, 12)
    assert v * math.exp(l) == pytest.approx(ref[-1], rel=1e-9)
