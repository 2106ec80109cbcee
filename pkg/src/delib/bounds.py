"""Closed-form distortion bounds and sample-size calculators.

The deliberation analysis funnels into a single scalar: the largest mean
bias theta (or zeta, for the random-choice relaxation) achievable under
the win constraint. These helpers turn that scalar into distortion bounds,
and size the group samples needed to estimate pairwise win probabilities.

Sample sizes use explicit two-sided Hoeffding constants, ceil(ln(pairs /
delta) / (2 eps^2)), with the union bound taken over ordered pairs (the
safer of the two readings when each direction is estimated separately).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

HOEFFDING_RATE = 2.0   # exponent factor in P(|error| > eps) <= 2 exp(-rate N eps^2)


class ThetaOutOfRange(ValueError):
    pass


def _check_theta(theta: float) -> float:
    if not (0.0 <= theta < 1.0):
        raise ThetaOutOfRange(f"theta must be in [0,1), got {theta!r}")
    return float(theta)


def copeland_distortion_from_theta(theta: float) -> float:
    """Distortion guarantee ((1+theta)/(1-theta))^2 of the two-hop argument."""
    t = _check_theta(theta)
    r = (1.0 + t) / (1.0 - t)
    return r * r


def lower_bounds_from_theta(theta: float) -> tuple[float, float]:
    """(deterministic, randomized) floors implied by a mean bias of theta.

    min(3, (1+theta)/(1-theta)) for deterministic rules and
    min(2, 1/(1-theta)) for randomized ones.
    """
    t = _check_theta(theta)
    return (
        min(3.0, (1.0 + t) / (1.0 - t)),
        min(2.0, 1.0 / (1.0 - t)),
    )


def _check_sampling_args(m: int, epsilon: float, delta: float) -> None:
    if m < 2:
        raise ValueError(f"need at least 2 alternatives, got {m}")
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must be in (0,1), got {epsilon!r}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta!r}")


def sample_size_averaging(m: int, epsilon: float, delta: float) -> int:
    """Groups needed so every pairwise estimate is within epsilon, w.p. 1-delta.

    Each ranking group observes all m(m-1) ordered pairs at once, so one
    Hoeffding bound per pair union-bounded over ordered pairs suffices.
    """
    _check_sampling_args(m, epsilon, delta)
    return math.ceil(math.log(m * (m - 1) / delta) / (HOEFFDING_RATE * epsilon**2))


def sample_size_random_choice(
    m: int, epsilon: float, delta: float,
) -> tuple[int, int, int]:
    """(groups_per_matching, matchings, total) for matching-based sampling.

    A group deliberates only the pairs of one matching, so each matching
    gets its own group budget with per-pair failure budget delta / m;
    a round-robin schedule needs m-1 matchings for even m, m for odd m.
    """
    _check_sampling_args(m, epsilon, delta)
    per_matching = math.ceil(
        math.log(2 * m / delta) / (HOEFFDING_RATE * epsilon**2)
    )
    matchings = m - 1 if m % 2 == 0 else m
    return per_matching, matchings, per_matching * matchings


@dataclass
class BoundReport:
    """Everything the closed forms say about one parameter setting."""

    theta: float | None = None
    zeta: float | None = None
    k: int | None = None
    m: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    copeland_upper: float | None = None
    det_lb: float | None = None
    rand_lb: float | None = None
    samples_averaging: int | None = None
    samples_per_matching: int | None = None
    matchings: int | None = None
    samples_random_choice: int | None = None

    def __post_init__(self):
        if self.copeland_upper is not None and self.det_lb is not None:
            if self.copeland_upper < self.det_lb:
                raise ValueError("upper bound below deterministic lower bound")

    def to_json(self) -> str:
        return json.dumps(
            {k: v for k, v in self.__dict__.items() if v is not None},
            indent=2,
        )


def bound_report(
    theta: float | None = None,
    zeta: float | None = None,
    k: int | None = None,
    m: int | None = None,
    epsilon: float | None = None,
    delta: float | None = None,
) -> BoundReport:
    """Fill a BoundReport from whichever inputs are given.

    theta and zeta feed the same formulas; passing both is ambiguous and
    rejected. Sample sizes require m, epsilon, and delta together.
    """
    if theta is not None and zeta is not None:
        raise ValueError("pass theta or zeta, not both")
    rep = BoundReport(theta=theta, zeta=zeta, k=k, m=m, epsilon=epsilon, delta=delta)
    x = theta if theta is not None else zeta
    if x is not None:
        rep.copeland_upper = copeland_distortion_from_theta(x)
        rep.det_lb, rep.rand_lb = lower_bounds_from_theta(x)
    if m is not None:
        if epsilon is None or delta is None:
            raise ValueError("sample sizes need m, epsilon, and delta")
        rep.samples_averaging = sample_size_averaging(m, epsilon, delta)
        per, match, total = sample_size_random_choice(m, epsilon, delta)
        rep.samples_per_matching = per
        rep.matchings = match
        rep.samples_random_choice = total
    if x is None and m is None:
        raise ValueError("nothing to compute: pass theta/zeta or m,epsilon,delta")
    return rep
