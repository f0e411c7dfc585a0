import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netcomp.convolution import convolution_power
from netcomp.degree import DegreeDistribution, excess, from_table
from netcomp.errors import ComponentError, DistributionError
from netcomp.multiplex import (degenerate_two_layer_reduce, multiplex_components, single_layer_components,
                               two_layer_components, two_layer_lattice)

from oracles import coefficient_table, fixed_point_sizes, series_fixed_point


def random_multiplex(rng, dims, K):
    m = rng.random((K + 1,) * dims) * (rng.random((K + 1,) * dims) < 0.7)
    m[(0,) * dims] += 0.3
    for i in range(dims):
        e = [0] * dims
        e[i] = 1
        m[tuple(e)] += 0.05
    return from_table(m, "multiplex")


def test_w1_is_isolated_mass(oscillating):
    assert two_layer_components(oscillating, 1)[1] == oscillating.mass[0, 0]
    assert multiplex_components(oscillating, 3)[1] == oscillating.mass[0, 0]


def test_single_active_layer_reduces_to_one_layer_formula():
    p = np.array([0.3, 0.4, 0.2, 0.1])
    u = from_table(np.stack([p, np.zeros(4)], axis=1), "multiplex")
    w = multiplex_components(u, 30).values
    d = from_table(p, "multiplex")
    np.testing.assert_allclose(single_layer_components(d, 30).values, w, rtol=1e-10, atol=1e-16)
    mu, e = d.mean(0), excess(d, 0).mass
    for n in (2, 5, 30):
        assert w[n - 1] == pytest.approx(mu / (n - 1) * convolution_power(e, n, [(n - 2, n - 1)])[0],
                                         rel=1e-10)


def test_oscillating_against_fixed_point(oscillating):
    R = [excess(oscillating, 0).mass, excess(oscillating, 1).mass]
    ref = fixed_point_sizes(oscillating.mass, R[0], R[1], 300)[1:]
    w = two_layer_components(oscillating, 300).values
    # relative to the local envelope: deep oscillation dips sit near the round-off floor
    env = np.maximum.accumulate(ref[::-1])[::-1]
    assert np.max(np.abs(w - ref) / env) < 1e-10


def test_oscillations_present(oscillating_curve):
    w = oscillating_curve.values[:60]
    d = np.sign(np.diff(w))
    extrema = np.sum(d[1:] != d[:-1])
    assert extrema >= 3


def test_symmetric_law_gives_symmetric_table():
    k = np.arange(6)
    m = np.exp(-np.add.outer(k, k) * 0.9)
    m[1, 2] += 0.3
    m[2, 1] += 0.3
    u = from_table(m, "multiplex")
    a = two_layer_lattice(u, 12).a
    np.testing.assert_allclose(a, a.T, rtol=1e-9, atol=1e-16)


def test_unit_cell_against_series_oracle():
    u = from_table([[0.5, 0.2], [0.2, 0.1]], "multiplex")
    R = [excess(u, 0).mass, excess(u, 1).mass]
    table = coefficient_table(u.mass, R, 9)
    a = two_layer_lattice(u, 10).a
    q = np.add.outer(np.arange(10), np.arange(10))
    np.testing.assert_allclose(np.where(q <= 9, a, 0), table, rtol=1e-9, atol=1e-15)


def test_point_mass_at_unit_cell():
    u = from_table([[0, 0], [0, 1.0]], "multiplex")
    ref = series_fixed_point(u.mass, [excess(u, 0).mass, excess(u, 1).mass], 10)[1:]
    np.testing.assert_allclose(two_layer_components(u, 10).values, ref, atol=1e-14)


def test_fast_path_equals_general_path(oscillating):
    a = two_layer_components(oscillating, 12).values
    b = multiplex_components(oscillating, 12).values
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


def test_three_layers_against_series():
    u = random_multiplex(np.random.default_rng(4), 3, 2)
    R = [excess(u, i).mass for i in range(3)]
    ref = series_fixed_point(u.mass, R, 14)[1:]
    np.testing.assert_allclose(multiplex_components(u, 14).values, ref, rtol=1e-9, atol=1e-15)


def test_degenerate_reduction_examples():
    u = from_table([[0.2, 0.3, 0.1], [0.1, 0.2, 0.1]], "multiplex")
    d = degenerate_two_layer_reduce(u)
    ref = u.mass[0] + 0.5 * u.mass[1]
    np.testing.assert_allclose(d.mass, ref / ref.sum())
    assert degenerate_two_layer_reduce(from_table([[1.0]], "multiplex")).mass.tolist() == [1.0]
    d = degenerate_two_layer_reduce(from_table([[0, 0], [0, 1.0]], "multiplex"))
    np.testing.assert_allclose(d.mass, [0, 1.0])
    with pytest.raises(DistributionError):
        degenerate_two_layer_reduce(from_table(np.ones((3, 3)), "multiplex"))


def test_errors(two_bump):
    with pytest.raises(ComponentError):
        multiplex_components(two_bump, 5)
    with pytest.raises(ComponentError):
        two_layer_components(from_table(np.ones((2, 2, 2)), "multiplex"), 5)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations([0, 1, 2]))
def test_layer_permutation_invariance(seed, perm):
    u = random_multiplex(np.random.default_rng(seed), 3, 2)
    a = multiplex_components(u, 10).values
    b = multiplex_components(u.transpose(perm), 10).values
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_two_layer_paths_agree_and_sum_below_one(seed):
    u = random_multiplex(np.random.default_rng(seed), 2, 4)
    a = two_layer_components(u, 40)
    b = multiplex_components(u, 40)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(a.values, two_layer_components(u.transpose(), 40).values,
                               rtol=1e-10, atol=1e-10)
    assert a.cumulative[-1] <= 1 + 1e-9
