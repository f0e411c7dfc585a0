"""Exact multilayer component sizes in N-layer multiplex configuration networks.

The general path clears denominators with a determinant over the convolution
ring, evaluated pointwise in the Fourier domain. The two-layer path builds the
same cleared numerator from its explicit 2x2 expansion by direct convolution.
"""
from __future__ import annotations

import numpy as np

from .convolution import direct_convolve
from .degree import DegreeDistribution, excess, from_table
from .directed import LatticeTable, SizeDistribution, _lattice, finalize
from .errors import ComponentError, DistributionError
from .inversion import DiagonalProblem, component_sizes

MAX_LAYERS = 8


def _require_multiplex(u: DegreeDistribution):
    if u.kind != "multiplex":
        raise ComponentError("a multiplex distribution is required", code="wrong_kind")
    if u.dims > MAX_LAYERS:
        raise ComponentError(f"at most {MAX_LAYERS} layers are supported", code="too_many_layers")


def _active(u: DegreeDistribution):
    """Drop layers without edges; they never contribute to any power."""
    m = u.mass
    keep = [i for i in range(u.dims) if u.mean(i) > 0]
    sl = tuple(slice(None) if i in keep else 0 for i in range(u.dims))
    return m[sl], keep


def multiplex_components(u: DegreeDistribution, n_max: int, method: str = "fourier") -> SizeDistribution:
    _require_multiplex(u)
    if n_max < 1:
        raise ComponentError("n_max must be at least 1")
    U, keep = _active(u)
    if not keep:
        mant = np.zeros(n_max)
        mant[0] = 1.0
        return finalize("multilayer", mant, np.zeros(n_max))
    sub = DegreeDistribution(U, "multiplex")
    R = [excess(sub, i).mass for i in range(sub.dims)]
    mant, logs = component_sizes(U, R, n_max, method)
    return finalize("multilayer", mant, logs)


def two_layer_components(u: DegreeDistribution, n_max: int) -> SizeDistribution:
    """Two-layer fast path: explicit d(k, l) numerator."""
    _require_multiplex(u)
    if u.dims != 2:
        raise ComponentError("two-layer path needs exactly two layers")
    if u.mean(0) <= 0 or u.mean(1) <= 0:
        return multiplex_components(u, n_max)
    R = [excess(u, 0).mass, excess(u, 1).mass]
    mant, logs = component_sizes(u.mass, R, n_max, "explicit")
    return finalize("multilayer", mant, logs)


def two_layer_lattice(u: DegreeDistribution, n_max: int) -> LatticeTable:
    _require_multiplex(u)
    if u.dims != 2:
        raise ComponentError("two-layer table needs exactly two layers")
    return _lattice(u.mass, [excess(u, 0).mass, excess(u, 1).mass], n_max)


def degenerate_two_layer_reduce(u: DegreeDistribution) -> DegreeDistribution:
    """Univariate law d(l) = u(0, l) + u(1, l)/2, renormalized."""
    if u.dims != 2:
        raise DistributionError("two-layer distribution required")
    if np.any(u.mass[2:, :] > 0):
        raise DistributionError("reduction requires u(k, l) = 0 for k > 1", code="precondition")
    d = u.mass[0].copy()
    if u.mass.shape[0] > 1:
        d += 0.5 * u.mass[1]
    return from_table(d, "multiplex")


def single_layer_components(d: DegreeDistribution, n_max: int) -> SizeDistribution:
    """Undirected single-layer sizes w(n) = mu/(n-1) * e^{*n}(n-2), w(1) = d(0)."""
    if d.dims != 1:
        raise ComponentError("univariate distribution required")
    mant = np.zeros(n_max)
    logs = np.zeros(n_max)
    mant[0] = d.mass[0]
    mu = d.mean(0)
    if n_max > 1 and mu > 0:
        e = excess(d, 0).mass
        mant[1] = mu * e[0] ** 2
        if n_max > 2:
            F = direct_convolve(direct_convolve(e, e), e)
            m, lg = DiagonalProblem(F, [e]).sums(n_max - 3)
            n = np.arange(3, n_max + 1)
            mant[2:] = m * mu / (n - 1)
            logs[2:] = lg
    return finalize("multilayer", mant, logs)
