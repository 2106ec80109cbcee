"""
Walking the tight example through the whole pipeline
====================================================

The pair-deliberation worst case places two candidate clusters so that
every pairwise deliberation is as misleading as the bias bound allows.
Running the full pipeline (exact pairwise probabilities, tournament,
Copeland) on it shows how close an aggregate of honest group decisions
can get to the theoretical distortion ceiling, and where the construction
quietly hands the win to a low-cost candidate instead.
"""

import math

from delib import (
    ModelConfig,
    copeland_k2_worst_case,
    distortion_of,
    pipeline_distortion,
    social_optimum,
)

inst = copeland_k2_worst_case(1e-3)
model = ModelConfig("averaging", k=2)

print("candidates:", inst.candidates)
print("social optimum:", social_optimum(inst))
for c in inst.candidates:
    print(f"  distortion if {c} elected: {distortion_of(inst, c):.6f}")

winner, dist = pipeline_distortion(inst, model)
print(f"Copeland winner: {winner}  distortion: {dist:.6f}")

# the intended bad candidate sits at distortion close to 3 + sqrt(2),
# but ties in the deliberation outcomes give Copeland a benign winner
print(f"ceiling 3 + sqrt(2) = {3 + math.sqrt(2):.6f}")
