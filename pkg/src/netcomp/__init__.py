"""Exact and asymptotic component-size distributions for directed and
multiplex configuration networks."""

__version__ = "0.1.0"

from .degree import DegreeDistribution, MomentSet, build_distribution, excess, from_table, moments
from .directed import (SizeDistribution, WeakEvaluator, in_out_components, weak_component_at,
                       weak_components, weak_lattice)
from .multiplex import multiplex_components, two_layer_components
from .errors import NetcompError

__all__ = [
    "DegreeDistribution", "MomentSet", "build_distribution", "excess", "from_table", "moments",
    "SizeDistribution", "WeakEvaluator", "in_out_components", "weak_component_at",
    "weak_components", "weak_lattice", "multiplex_components", "two_layer_components",
    "NetcompError",
]
