"""
How many sampled groups does the pipeline need?
===============================================

Exact pairwise win probabilities require enumerating every possible
group. In practice one samples N groups and feeds the empirical
frequencies to Copeland. The Hoeffding-style sample bound promises all
pairwise estimates within epsilon with probability 1 - delta; this
script checks that promise empirically on a small instance.
"""

import numpy as np

from delib import (
    MetricInstance,
    ModelConfig,
    SampleRunConfig,
    empirical_distortion_trials,
    sample_size_averaging,
)

# five candidates and eight weighted voter locations on the plane
rng = np.random.default_rng(42)
pts = rng.standard_normal((13, 2))
names = [f"c{i}" for i in range(5)] + [f"v{i}" for i in range(8)]
w = rng.random(8)
w /= w.sum()
inst = MetricInstance.build(
    names[:5],
    [(names[5 + i], w[i]) for i in range(8)],
    {(names[a], names[b]): float(np.linalg.norm(pts[a] - pts[b]))
     for a in range(13) for b in range(a + 1, 13)},
)

eps, delta = 0.05, 0.1
N = sample_size_averaging(5, eps, delta)
print(f"sample bound: {N} groups for all pairs within {eps} "
      f"w.p. >= {1 - delta}")

report = empirical_distortion_trials(SampleRunConfig(
    instance=inst,
    model=ModelConfig("averaging", k=3),
    groups=N,
    trials=200,
    seed=20,
    epsilon=eps,
))
print(f"trials within eps : {report.frac_within_epsilon:.1%}")
print(f"worst pair error  : {max(report.max_errors):.4f}")
print(f"mean distortion   : {report.mean_distortion:.4f}")
print(f"max distortion    : {report.max_distortion:.4f}")
