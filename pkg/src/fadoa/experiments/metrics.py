"""Per-trial error matching, RMSE and probability of successful resolution."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..array_model import AnglePair


@dataclass(frozen=True)
class TrialRecord:
    method: str
    sweep_value: float
    trial: int
    estimates: tuple[AnglePair, ...]
    #: per-source error ``sqrt((dtheta^2 + dphi^2) / 2)`` in degrees, in the
    #: order of the true sources
    errors: tuple[float, ...]
    success: bool
    runtime_ms: float = math.nan


def _pair_matrices(estimates: Sequence[AnglePair], truths: Sequence[AnglePair]):
    if len(estimates) != len(truths):
        raise ValueError(f"{len(estimates)} estimates for {len(truths)} sources")
    dist = np.array([[e.distance_to(t) for t in truths] for e in estimates])
    return dist / math.sqrt(2.0), dist


def match_estimates(
    estimates: Sequence[AnglePair],
    truths: Sequence[AnglePair],
    threshold_deg: float = math.inf,
) -> tuple[np.ndarray, bool]:
    """Assign estimates one-to-one to truths.

    A pair resolves its source when the Euclidean (theta, phi) distance is at
    most ``threshold_deg``; at 2.5 degrees a single estimate midway between
    two sources 5 degrees apart cannot count for both.  The assignment
    minimises the total squared error among those resolving every source if
    any exist, otherwise among those with the fewest unresolved pairs.
    Returns the per-truth errors and whether every source was resolved.
    """
    err, dist = _pair_matrices(estimates, truths)
    over = dist > threshold_deg
    cost = err**2 + over * (1.0 + float(np.sum(err**2))) * len(truths)
    rows, cols = linear_sum_assignment(cost)
    errors = np.empty(len(truths))
    errors[cols] = err[rows, cols]
    return errors, bool(not over[rows, cols].any())


def rmse(estimates: Sequence[AnglePair], truths: Sequence[AnglePair]) -> float:
    """Single-trial RMSE: mean over sources of the matched pairwise error."""
    errors, _ = match_estimates(estimates, truths)
    return float(np.mean(errors))


def aggregate_rmse(errors: np.ndarray) -> float:
    """RMSE over trials from a ``trials x L`` array of per-source errors.

    The mean over trials is taken inside the square root for each source and
    the result is then averaged over sources.
    """
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    return float(np.mean(np.sqrt(np.mean(errors**2, axis=0))))


def posr(records: Sequence[TrialRecord]) -> float:
    if not records:
        raise ValueError("no trial records")
    return sum(r.success for r in records) / len(records)
