"""Catalog of concrete base operators."""

from .evaluation import eigenfunction_eval
from .interval import build_interval
from .rank_one import build_rank_one
from .render import boundary_conditions_render
from .seba import build_seba, rationality_family, seba_common_spectrum_exact
from .star import build_star_graph

__all__ = [
    "boundary_conditions_render",
    "build_interval",
    "build_rank_one",
    "build_seba",
    "build_star_graph",
    "eigenfunction_eval",
    "rationality_family",
    "seba_common_spectrum_exact",
]
