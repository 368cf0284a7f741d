"""Bandwidth prediction, allocation solvers and quality guardrails."""

from mcastsim.allocator.adapt import adapt_quality, fec_fraction, traditional_allocate
from mcastsim.allocator.ga import ga_allocate
from mcastsim.allocator.greedy import greedy_allocate
from mcastsim.allocator.params import GAParams, SAParams
from mcastsim.allocator.predict import ewma, predict_capacity, predict_client_goodput
from mcastsim.allocator.problem import (
    AllocationPlan,
    AllocationProblem,
    GroupDemand,
    evaluate,
    exhaustive_allocate,
    lowest_plan,
    repair,
)
from mcastsim.allocator.sa import sa_allocate

__all__ = [
    "AllocationPlan",
    "AllocationProblem",
    "GAParams",
    "GroupDemand",
    "SAParams",
    "adapt_quality",
    "evaluate",
    "ewma",
    "exhaustive_allocate",
    "fec_fraction",
    "ga_allocate",
    "greedy_allocate",
    "lowest_plan",
    "predict_capacity",
    "predict_client_goodput",
    "repair",
    "sa_allocate",
    "traditional_allocate",
]
