"""Deliberation models for a single pair of alternatives.

A group of k voters is sampled i.i.d. from the instance's mass distribution.
Averaging: the group outputs the first alternative iff the sum of normalized
biases is <= 0 (tie convention configurable). Random choice: the group outputs
the first alternative with probability A/(A+B), where A (resp. B) sums a
concave transform g of |bias| over members favoring the first (resp. second)
alternative; an opinion-change weight beta mixes this with random dictatorship.

exact_pk enumerates location multisets with multinomial weights; Averaging
group decisions are made on summed distance differences d(i,c1)-d(i,c2)
(the positive divisor d(c1,c2) cannot change the sign), so instances with
exactly representable distances are decided exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .metric import MetricInstance, ZeroCandidateDistance, signed_diffs

ENUMERATION_BUDGET = 2_000_000
_MC_BLOCK = 1 << 16


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BiasTransform:
    """Concave transform g on [0,1] with g(0)=0, g(1)=1.

    kind one of "linear", "sqrt", "pow"; "pow" uses exponent e in (0, 1].
    """

    kind: str = "linear"
    exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "sqrt", "pow"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "pow" and not (0.0 < self.exponent <= 1.0):
            raise ValueError(f"pow exponent must be in (0,1]: {self.exponent!r}")

    def apply(self, x):
        if self.kind == "linear":
            return x
        if self.kind == "sqrt":
            return np.sqrt(x)
        return np.power(x, self.exponent)

    def __call__(self, x):
        return self.apply(x)

    def spec(self) -> str:
        if self.kind == "pow":
            return f"pow:{self.exponent!r}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "BiasTransform":
        if text == "linear":
            return cls("linear")
        if text == "sqrt":
            return cls("sqrt")
        if text.startswith("pow:"):
            return cls("pow", float(text[4:]))
        raise ValueError(f"cannot parse transform {text!r}")


LINEAR = BiasTransform("linear")
SQRT = BiasTransform("sqrt")


@dataclass(frozen=True)
class ModelConfig:
    """Deliberation model: variant, group size, and tie conventions.

    tie_to_first: an Averaging bias sum of exactly 0 counts for the first
    alternative. all_zero_to_first: a random-choice group whose members are
    all exactly indifferent outputs the first alternative (else a fair coin).
    """

    variant: str                      # "averaging" | "random-choice"
    k: int
    g: BiasTransform = LINEAR
    beta: float = 1.0
    tie_to_first: bool = True
    all_zero_to_first: bool = True

    def __post_init__(self):
        if self.variant not in ("averaging", "random-choice"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.k < 1:
            raise ValueError(f"group size must be >= 1, got {self.k}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must be in [0,1], got {self.beta}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "variant": self.variant,
                "k": self.k,
                "g": self.g.spec(),
                "beta": self.beta,
                "tie_to_first": self.tie_to_first,
                "all_zero_to_first": self.all_zero_to_first,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        doc = json.loads(text)
        return cls(
            variant=doc["variant"],
            k=int(doc["k"]),
            g=BiasTransform.parse(doc.get("g", "linear")),
            beta=float(doc.get("beta", 1.0)),
            tie_to_first=bool(doc.get("tie_to_first", True)),
            all_zero_to_first=bool(doc.get("all_zero_to_first", True)),
        )


def averaging_outcome(biases, tie_to_first: bool = True) -> int:
    """Winner index (1 or 2) under the Averaging rule for one group."""
    s = math.fsum(biases)
    if s < 0:
        return 1
    if s > 0:
        return 2
    return 1 if tie_to_first else 2


def random_choice_win_prob(
    biases, g: BiasTransform = LINEAR, beta: float = 1.0,
    all_zero_to_first: bool = True,
) -> float:
    """Probability the random-choice rule outputs the first alternative."""
    biases = list(biases)
    a = math.fsum(float(g.apply(-b)) for b in biases if b < 0)
    b_ = math.fsum(float(g.apply(b)) for b in biases if b > 0)
    if a + b_ > 0:
        core = a / (a + b_)
    else:
        core = 1.0 if all_zero_to_first else 0.5
    n_neg = sum(1 for b in biases if b < 0)
    return beta * core + (1.0 - beta) * (n_neg / len(biases))


@dataclass(frozen=True)
class PkResult:
    value: float
    stderr: float
    method: str                 # "Exact" | "MonteCarlo"
    trials: int | None = None
    seed: int | None = None


def _atoms(inst: MetricInstance, c1: str, c2: str):
    """Locations merged by exact distance difference d(i,c1)-d(i,c2)."""
    d12 = float(inst.dist[inst.candidate_index(c1), inst.candidate_index(c2)])
    if d12 == 0.0:
        raise ZeroCandidateDistance(f"d({c1},{c2}) = 0")
    merged: dict[float, list[float]] = {}
    for d, p in zip(signed_diffs(inst, c1, c2), inst.masses):
        merged.setdefault(float(d), []).append(float(p))
    diffs = sorted(merged)
    probs = [math.fsum(merged[d]) for d in diffs]
    return np.array(diffs), np.array(probs), d12


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _group_win_prob(counts, diffs, gvals, model: ModelConfig) -> float:
    """Chance the group described by atom counts outputs the first alternative."""
    k = model.k
    if model.variant == "averaging":
        s = math.fsum(c * d for c, d in zip(counts, diffs) if c)
        if s < 0:
            return 1.0
        if s > 0:
            return 0.0
        return 1.0 if model.tie_to_first else 0.0
    a = math.fsum(c * g for c, d, g in zip(counts, diffs, gvals) if c and d < 0)
    b = math.fsum(c * g for c, d, g in zip(counts, diffs, gvals) if c and d > 0)
    if a + b > 0:
        core = a / (a + b)
    else:
        core = 1.0 if model.all_zero_to_first else 0.5
    n_neg = sum(c for c, d in zip(counts, diffs) if d < 0)
    return model.beta * core + (1.0 - model.beta) * (n_neg / k)


def exact_pk(
    inst: MetricInstance, model: ModelConfig, c1: str, c2: str,
    budget: int = ENUMERATION_BUDGET,
) -> PkResult:
    """Exact probability that a deliberating group outputs c1 over c2.

    Enumerates multisets of bias atoms with multinomial weights. Raises
    EnumerationBudgetExceeded when C(n+k-1, k) exceeds the budget.
    """
    diffs, probs, d12 = _atoms(inst, c1, c2)
    n, k = len(diffs), model.k
    if math.comb(n + k - 1, k) > budget:
        raise EnumerationBudgetExceeded(
            f"{math.comb(n + k - 1, k)} multisets exceed budget {budget}"
        )
    gvals = model.g.apply(np.abs(diffs / d12))
    terms = []
    for counts in _compositions(k, n):
        w = 1.0
        rem = k
        for c, p in zip(counts, probs):
            if c:
                w *= math.comb(rem, c) * p**c
                rem -= c
        if w == 0.0:
            continue
        win = _group_win_prob(counts, diffs, gvals, model)
        if win:
            terms.append(w * win)
    p = math.fsum(terms)
    return PkResult(value=min(1.0, max(0.0, p)), stderr=0.0, method="Exact")


def _block_rng(seed: int, block: int) -> Generator:
    """Counter-style stream: randomness is a pure function of (seed, block),
    so chunked or parallel execution reproduces identical per-trial draws.
    """
    return Generator(Philox(SeedSequence(entropy=[seed, block])))


def monte_carlo_pk(
    inst: MetricInstance, model: ModelConfig, c1: str, c2: str,
    trials: int, seed: int,
) -> PkResult:
    """Unbiased Monte Carlo estimate of exact_pk with Bernoulli outcomes.

    Trial t draws from the fixed stream (seed, t // block, t % block), making
    the estimate independent of chunking. stderr = sqrt(p(1-p)/trials).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    diffs, probs, d12 = _atoms(inst, c1, c2)
    k = model.k
    cum = np.cumsum(probs)
    cum[-1] = max(cum[-1], 1.0)  # guard against rounding at the top
    averaging = model.variant == "averaging"
    gvals = model.g.apply(np.abs(diffs / d12))
    g_neg = np.where(diffs < 0, gvals, 0.0)
    g_pos = np.where(diffs > 0, gvals, 0.0)
    neg = (diffs < 0).astype(float)

    width = k if averaging else k + 1
    successes = 0
    done = 0
    block = 0
    while done < trials:
        rows = min(_MC_BLOCK, trials - done)
        rng = _block_rng(seed, block)
        u = rng.random((rows, width))
        idx = np.searchsorted(cum, u[:, :k], side="right")
        if averaging:
            s = diffs[idx].sum(axis=1)
            wins = (s < 0) | ((s == 0) & model.tie_to_first)
        else:
            a = g_neg[idx].sum(axis=1)
            b = g_pos[idx].sum(axis=1)
            tot = a + b
            azf = 1.0 if model.all_zero_to_first else 0.5
            core = np.where(tot > 0, a / np.where(tot > 0, tot, 1.0), azf)
            n_neg = neg[idx].sum(axis=1)
            pwin = model.beta * core + (1.0 - model.beta) * (n_neg / k)
            wins = u[:, k] < pwin
        successes += int(wins.sum())
        done += rows
        block += 1
    phat = successes / trials
    return PkResult(
        value=phat,
        stderr=math.sqrt(phat * (1.0 - phat) / trials),
        method="MonteCarlo",
        trials=trials,
        seed=seed,
    )
