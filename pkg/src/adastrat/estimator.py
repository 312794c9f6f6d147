"""Rare-event probability, variances, confidence interval, and cost parity.

The stratum weights are treated as known constants (the pool behind them is
huge); all reported variance comes from the per-stratum conditional
probabilities. Their separate Monte Carlo error is surfaced as
``p1_standard_error`` so the assumption stays inspectable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError
from .strata import StratumSet, StratumWeights

_SUM_TOL = 1e-9


def estimate(p1: np.ndarray, p2: np.ndarray) -> float:
    """Total exceedance probability sum(p1_i * p2_i)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError(f"p1 and p2 must have equal length, got {p1.shape} and {p2.shape}")
    if ((p1 < 0) | (p1 > 1) | (p2 < 0) | (p2 > 1)).any():
        raise ValueError("p1 and p2 entries must lie in [0, 1]")
    total = float(p1.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise ContractError(f"stratum weights sum to {total!r}, not 1")
    return float(p1 @ p2)


def biased_variance(p1: np.ndarray, p2: np.ndarray, counts: np.ndarray) -> float:
    """sum over strata of p1_i^2 * p2_i * (1 - p2_i) / N_i.

    Strata with p2 at exactly 0 or 1 contribute nothing regardless of their
    counts (hard-extrapolated strata are legal zero-variance contributors);
    a stratum with spread but no samples is a contract violation.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    counts = np.asarray(counts)
    active = (p2 > 0.0) & (p2 < 1.0)
    starved = active & (counts < 1)
    if starved.any():
        raise ContractError(
            f"stratum {int(np.flatnonzero(starved)[0])} has conditional probability "
            f"strictly between 0 and 1 but no samples"
        )
    if not active.any():
        return 0.0
    return float(np.sum(p1[active] ** 2 * p2[active] * (1.0 - p2[active]) / counts[active]))


def unbiased_variance(p1: np.ndarray, p2: np.ndarray, counts: np.ndarray) -> float:
    """Like the biased variance but with divisor N_i - 1; single-sample strata are skipped."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    counts = np.asarray(counts)
    ok = (p2 > 0.0) & (p2 < 1.0) & (counts >= 2)
    if not ok.any():
        return 0.0
    return float(np.sum(p1[ok] ** 2 * p2[ok] * (1.0 - p2[ok]) / (counts[ok] - 1)))


def confidence_interval(probability: float, unbiased_var: float) -> tuple[float, float]:
    """95% interval mu +- 2s with s the unbiased standard deviation."""
    if unbiased_var < 0.0:
        raise ValueError(f"variance must be >= 0, got {unbiased_var!r}")
    s = math.sqrt(unbiased_var)
    return probability - 2.0 * s, probability + 2.0 * s


def naive_mc_equivalent(probability: float, target_variance: float) -> int:
    """Direct Monte Carlo sample count matching ``target_variance``: ceil(P(1-P)/Var)."""
    if not (0.0 < probability < 1.0):
        raise ValueError(f"probability must be strictly inside (0, 1), got {probability!r}")
    if target_variance <= 0.0:
        raise ValueError(f"target variance must be positive, got {target_variance!r}")
    return math.ceil(probability * (1.0 - probability) / target_variance)


def hard_tail_p2(strata: StratumSet, counts: np.ndarray, exceed: np.ndarray) -> np.ndarray:
    """Observed exceedance rates with hard 0/1 extrapolation for empty strata.

    An unsampled stratum inherits 0 when its midpoint sits below the critical
    value and 1 otherwise — the limit behavior of a perfectly trusted
    surrogate, and the convention the final single-shot estimate rests on.
    """
    counts = np.asarray(counts)
    exceed = np.asarray(exceed)
    mids = strata.midpoints()
    p2 = np.where(mids < strata.critical_value, 0.0, 1.0)
    seen = counts > 0
    p2[seen] = exceed[seen] / counts[seen]
    return p2


@dataclass(frozen=True)
class RareEventEstimate:
    """Estimate with its uncertainty and the cost of matching it naively."""

    probability: float
    biased_variance: float
    unbiased_variance: float
    ci95: tuple[float, float]
    mc_equivalent: Optional[int]
    p1_standard_error: float
    p1: np.ndarray
    p2: np.ndarray
    counts: np.ndarray
    contribution: np.ndarray


def build_estimate(
    weights: StratumWeights,
    strata: StratumSet,
    counts: np.ndarray,
    exceed: np.ndarray,
) -> RareEventEstimate:
    """Assemble the full estimate from stratum weights and observations."""
    p2 = hard_tail_p2(strata, counts, exceed)
    p1 = weights.p1
    prob = estimate(p1, p2)
    bvar = biased_variance(p1, p2, counts)
    uvar = unbiased_variance(p1, p2, counts)
    ci = confidence_interval(prob, uvar)
    mc = naive_mc_equivalent(prob, bvar) if 0.0 < prob < 1.0 and bvar > 0.0 else None
    p1_se = float(np.sqrt(np.sum(p2**2 * weights.variance)))
    return RareEventEstimate(
        probability=prob,
        biased_variance=bvar,
        unbiased_variance=uvar,
        ci95=ci,
        mc_equivalent=mc,
        p1_standard_error=p1_se,
        p1=p1.copy(),
        p2=p2,
        counts=np.asarray(counts, dtype=np.int64).copy(),
        contribution=p1 * p2,
    )
