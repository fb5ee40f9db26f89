"""Matching: collision scores, pairwise-order agreement, and the analytic
collision probability.

Two codes match by counting positions with equal indices. For the p=1
transform the expected collision rate of a single hash function has a closed
form, checked here against a Monte Carlo run.
"""

import numpy as np

import rankhash as rh

params = rh.HashParams(n=60, m=400, k=8, p=1, master_seed=7)
rng = np.random.default_rng(1)

enrolled_vec = rng.normal(size=60)
query_vec = enrolled_vec + 0.4 * rng.normal(size=60)   # same "subject", noisy
stranger_vec = rng.normal(size=60)                     # unrelated

enrolled = rh.hash_template(enrolled_vec, params)
query = rh.hash_template(query_vec, params)
stranger = rh.hash_template(stranger_vec, params)

print("genuine score:  ", rh.collision_score(enrolled, query).score)
print("imposter score: ", rh.collision_score(enrolled, stranger).score)
print("chance level:   ", 1 / params.k)

# pairwise order counts the index pairs two vectors rank the same way
agreement = rh.pairwise_order(enrolled_vec, query_vec)
total_pairs = 60 * 59 // 2
print(f"\nconcordant pairs (genuine): {agreement.po_total}/{total_pairs}")
print(f"concordant pairs (imposter): "
      f"{rh.pairwise_order(enrolled_vec, stranger_vec).po_total}/{total_pairs}")

# analytic collision probability vs the observed collision rate
for name, a, b in [("genuine", enrolled_vec, query_vec),
                   ("imposter", enrolled_vec, stranger_vec)]:
    exact = rh.collision_probability(a, b, params.k)
    codes = rh.hash_indices(np.stack([a, b]), params)
    observed = float(np.mean(codes[0] == codes[1]))
    sigma = np.sqrt(exact * (1 - exact) / params.m)
    print(f"\n{name}: analytic {exact:.4f}, observed {observed:.4f} "
          f"over m={params.m} (binomial sigma {sigma:.4f})")
