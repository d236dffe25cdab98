"""Learned in-memory joins (C++ core)."""

from ._core import (
    Bandit,
    GappedIndex,
    LearnedJoinError,
    SplineHashIndex,
    algorithms,
    estimate_lsj_cost,
    featurize,
    gen_dataset,
    inject_duplicates,
    join,
    nlj_oracle,
    request_buffer_total,
)

__all__ = [
    "Bandit",
    "GappedIndex",
    "LearnedJoinError",
    "SplineHashIndex",
    "algorithms",
    "estimate_lsj_cost",
    "featurize",
    "gen_dataset",
    "inject_duplicates",
    "join",
    "nlj_oracle",
    "request_buffer_total",
]
