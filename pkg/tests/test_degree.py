import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netcomp.degree import (DegreeDistribution, build_distribution, excess, from_table,
                            marginal_excess, moments)
from netcomp.errors import DistributionError

from conftest import random_balanced


def test_point_mass_table():
    u = build_distribution({"kind": "directed", "table": [[1.0]]})
    assert u.mass.shape == (1, 1) and u.mass[0, 0] == 1.0
    m = moments(u)
    assert m[(0, 0)] == 1.0
    assert all(v == 0.0 for k, v in m.mu.items() if k != (0, 0))


def test_moments_unit_cell():
    m = moments(from_table([[0, 0], [0, 1.0]]))
    for key in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]:
        assert m[key] == 1.0


def test_two_bump_moments_direct_sum(two_bump):
    m = moments(two_bump)
    u = two_bump.mass
    total = {}
    for k in range(u.shape[0]):
        for l in range(u.shape[1]):
            for key in m.mu:
                total[key] = total.get(key, 0.0) + u[k, l] * k ** key[0] * l ** key[1]
    for key, v in total.items():
        assert m[key] == pytest.approx(v, rel=1e-12, abs=1e-15)


def test_two_bump_renormalized(two_bump):
    assert two_bump.mass.sum() == pytest.approx(1.0, abs=1e-14)
    assert two_bump.mean(0) == pytest.approx(two_bump.mean(1), abs=1e-12)


def test_mixture_matches_closed_form(two_bump, oscillating):
    k, l = np.meshgrid(np.arange(21), np.arange(21), indexing="ij")
    raw = 0.5167 * np.exp(-k**2 - l**2) + 0.0052 * np.exp(-2.5 * ((k - 4)**2 + (l - 4)**2))
    np.testing.assert_allclose(two_bump.mass, raw / raw.sum(), rtol=1e-13)
    raw = 0.9782 * np.exp(-5 * ((k - 1)**2 + l**2)) + 0.002 * np.exp(-10 * ((k - 9)**2 + (l - 3)**2))
    np.testing.assert_allclose(oscillating.mass, raw / raw.sum(), rtol=1e-13)
    assert oscillating.kind == "multiplex"


def test_matching_excess_is_delta(matching):
    e = excess(matching, "in").mass
    assert e[0, 0] == pytest.approx(1.0) and e.sum() == pytest.approx(1.0)


def test_poisson_self_excess():
    lam = 1.3
    u = build_distribution({"kind": "directed", "cutoffs": 13,
                            "mixture": [{"shape": "poisson", "rate": [lam, lam]}]})
    for side in ("in", "out"):
        e = excess(u, side).mass
        tail = u.tail_mass + u.mass[-1, :].sum() + u.mass[:, -1].sum()
        assert np.abs(e - u.mass).max() < 10 * tail + 1e-12


def test_excess_without_edges_errors():
    u = from_table([[0.5, 0.5], [0.0, 0.0]], renormalize=False, kind="multiplex")
    with pytest.raises(DistributionError):
        excess(u, 0)
    assert excess(u, 1).mass.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("bad, code", [
    ([[0.5, 0.6]], None),
    ([[-0.1, 1.1]], None),
    ([[0.5, 0.5], [0.0, 0.0]], "unbalanced"),
])
def test_validation_errors(bad, code):
    with pytest.raises(DistributionError) as ei:
        DegreeDistribution(np.array(bad), "directed")
    if code:
        assert ei.value.code == code


def test_spec_not_found(tmp_path):
    with pytest.raises(DistributionError) as ei:
        build_distribution(tmp_path / "missing.toml")
    assert ei.value.code == "spec_not_found"


def test_json_and_sparse_table(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"kind": "directed", "table": [
        {"index": [0, 1], "p": 0.5}, {"index": [1, 0], "p": 0.5}]}))
    u = build_distribution(p)
    np.testing.assert_array_equal(u.mass, [[0, 0.5], [0.5, 0]])


def test_renorm_factor_within_tail():
    u = build_distribution({"kind": "directed", "cutoffs": 6,
                            "mixture": [{"shape": "poisson", "rate": [1.0, 1.0]}]})
    t = u.tail_mass
    assert u.renorm_factor == pytest.approx(1 / (1 - t), rel=1e-13)
    assert 1 - t <= u.renorm_factor <= 1 + t + 2 * t * t


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_size_bias_identity(seed):
    u = random_balanced(np.random.default_rng(seed))
    m = moments(u)
    e = excess(u, "in")
    first = moments(e.mass)[(1, 0)]
    assert first == pytest.approx((m[(2, 0)] - m[(1, 0)]) / m[(1, 0)], rel=1e-12, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_transpose_swaps_moments_and_excess(seed):
    u = random_balanced(np.random.default_rng(seed))
    v = u.transpose()
    mu, mv = moments(u), moments(v)
    for (i, j), val in mu.mu.items():
        assert mv[(j, i)] == pytest.approx(val, rel=1e-12, abs=1e-15)
    np.testing.assert_allclose(excess(v, "in").mass, excess(u, "out").mass.T, atol=1e-15)
    np.testing.assert_allclose(marginal_excess(v, "out"), marginal_excess(u, "in"), atol=1e-15)
