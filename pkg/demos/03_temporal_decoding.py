"""Decode a noisy syndrome stream over time with three decoders.

A single stabilizer whose true value flips once is observed through a
noisy readout.  Majority vote, Viterbi and the Bayes filter each report a
decoded bit and a confidence per round.

    python3 demos/03_temporal_decoding.py
"""
import numpy as np

from hft.temporal import HmmParams, SyndromeStream, accept, decode

truth = np.array([0] * 6 + [1] * 6, dtype=np.uint8)
observed = truth.copy()
observed[[2, 9]] ^= 1  # two readout errors
stream = SyndromeStream(observed[:, None], hidden_truth=truth[:, None])
params = HmmParams(q_flip=0.05, r_obs=0.15)

print(f"{'truth':>10}: {''.join(map(str, truth))}")
print(f"{'observed':>10}: {''.join(map(str, observed))}")
for method in ("majority", "viterbi", "bayes"):
    dec = decode(stream, method, params)
    bits = "".join(map(str, dec.corrected_bits[:, 0]))
    conf = " ".join(f"{c:.2f}" for c in dec.confidence[:, 0])
    print(f"{method:>10}: {bits}   confidences {conf}")

final = decode(stream, "bayes", params)
print(f"\naccept the final Bayes decision? {accept(final)}")
