"""Branching processes with pairwise interactions: analytic classification, simulation and checks."""

from .mechanisms import Mechanism, OffspringLaw, kingman_mechanism, lb_mechanism, named_mechanism, sibuya_mechanism

__version__ = "0.1.0"

__all__ = ["Mechanism", "OffspringLaw", "kingman_mechanism", "lb_mechanism", "named_mechanism",
           "sibuya_mechanism", "__version__"]
