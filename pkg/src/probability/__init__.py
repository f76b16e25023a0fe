from src.probability.distributions import Alphabet, Dist, Profile, kl, mixture
from src.probability.types import (
    CompositeType,
    enumerate_types,
    type_class_bounds,
    type_class_log_prob,
    type_count,
    type_count_bound,
    type_list,
)

__all__ = [
    "Alphabet",
    "CompositeType",
    "Dist",
    "Profile",
    "enumerate_types",
    "kl",
    "mixture",
    "type_class_bounds",
    "type_class_log_prob",
    "type_count",
    "type_count_bound",
    "type_list",
]
