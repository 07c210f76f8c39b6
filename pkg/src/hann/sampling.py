"""Collocation and initial-value generators.

All generators are pure functions of their arguments: the RNG is numpy's
PCG64 (``numpy.random.default_rng``), so a given seed reproduces the same
points on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence, Tuple

import numpy as np

__all__ = ["SamplePlan", "latin_hypercube", "midpoint_grid", "random_in_cell"]


@dataclass(frozen=True)
class SamplePlan:
    count: int
    dims: int
    bounds: Tuple[Tuple[float, float], ...]  # per-dim (lo, hi)
    seed: int
    scheme: str = "lhs"  # lhs | midpoint-grid | random-in-cell

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        if len(self.bounds) != self.dims:
            raise ValueError("bounds length must equal dims")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid interval [{lo}, {hi}]")


def latin_hypercube(plan: SamplePlan) -> np.ndarray:
    """Stratified samples, one per stratum per dimension, shape (count, dims).

    Strata are permuted uniformly at random and each point is placed
    uniformly within its stratum.
    """
    if plan.scheme != "lhs":
        raise ValueError(f"plan scheme is {plan.scheme!r}, expected 'lhs'")
    rng = np.random.default_rng(plan.seed)
    n = plan.count
    pts = np.empty((n, plan.dims))
    for d in range(plan.dims):
        perm = rng.permutation(n)
        u = rng.random(n)
        lo, hi = plan.bounds[d]
        pts[:, d] = lo + (hi - lo) * (perm + u) / n
    return pts


def _cell_edges(domain, subdivisions):
    domain = list(domain)
    subs = list(subdivisions)
    if len(subs) != len(domain):
        raise ValueError("subdivisions length must match domain dims")
    for m in subs:
        if m < 1:
            raise ValueError("subdivisions must be >= 1 per dimension")
    for lo, hi in domain:
        if not lo < hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
    return domain, subs


def midpoint_grid(domain, subdivisions) -> np.ndarray:
    """Cartesian product of per-dimension sub-interval midpoints.

    Output shape is (prod(subdivisions), dims), ordered with the last
    dimension varying fastest.
    """
    domain, subs = _cell_edges(domain, subdivisions)
    axes = []
    for (lo, hi), m in zip(domain, subs):
        j = np.arange(m)
        axes.append(lo + (j + 0.5) * (hi - lo) / m)
    return np.array(list(product(*axes)), dtype=float)


def random_in_cell(domain, subdivisions, seed) -> np.ndarray:
    """One uniform point strictly inside each grid cell, shape (cells, dims)."""
    domain, subs = _cell_edges(domain, subdivisions)
    rng = np.random.default_rng(seed)
    cells = list(product(*(range(m) for m in subs)))
    u = rng.random((len(cells), len(domain)))
    u[u == 0.0] = 0.5  # keep points strictly inside their cell
    pts = np.empty((len(cells), len(domain)))
    for c, idx in enumerate(cells):
        for d, (lo, hi) in enumerate(domain):
            width = (hi - lo) / subs[d]
            pts[c, d] = lo + (idx[d] + u[c, d]) * width
    return pts
