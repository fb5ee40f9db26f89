"""Hashing basics: from a feature vector to a protected index code.

Walks through the transform one stage at a time on a tiny example, then at
realistic scale: derive seeded permutations, form the degree-p product code,
take the windowed argmax, and reissue under a fresh seed.
"""

import numpy as np

import rankhash as rh

# --- tiny example, visible by eye ------------------------------------------
x = np.array([-0.2, 0.5, -0.1])

# two fixed permutations: copies (x[2], x[0], x[1]) and (x[1], x[2], x[0])
perms = np.array([[2, 0, 1], [1, 2, 0]])
code = rh.product_code(x, perms, k=3)
print("input vector:       ", x)
print("degree-2 product:   ", code)
print("windowed argmax:    ", rh.windowed_argmax(code), "(1-based, ties -> earliest)")

# --- the full transform ------------------------------------------------------
params = rh.HashParams(n=299, m=600, k=128, p=2, master_seed=12345)
rng = np.random.default_rng(0)
feature = rng.normal(size=299)

protected = rh.hash_template(feature, params)
print("\nprotected code: m =", len(protected), "indices, window k =", params.k)
print("first 20 indices:   ", protected.indices[:20].tolist())
print("params fingerprint: ", protected.params_fingerprint)

# hashing is a pure function: same inputs, same code, bit for bit
again = rh.hash_template(feature, params)
print("re-hash identical:  ", protected == again)

# positive scaling never changes the code (argmax of c^p-scaled products)
scaled = rh.hash_template(feature * 37.0, params)
print("scale invariant:    ", scaled == protected)

# any single permutation regenerates in O(1) from (seed, counter)
theta = rh.single_permutation(params.master_seed, params.n, index=42)
print("permutation #42 head:", theta[:10].tolist())

# --- cancellation ------------------------------------------------------------
reissued = rh.reissue(feature, params, new_master_seed=99999)
overlap = float(np.mean(reissued.indices == protected.indices))
print("\nreissued under new seed; index agreement with old code:",
      f"{overlap:.4f} (chance level is 1/k = {1 / params.k:.4f})")
