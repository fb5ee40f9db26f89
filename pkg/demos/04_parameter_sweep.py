"""Parameter sweeps: how window size k, code length m, and kernel degree p
drive verification accuracy.

Desk-scale version of the accuracy experiments: each grid cell averages the
EER over repeated hash seeds. Expected shape of the results: EER falls as k
grows, falls as m grows, and rises with p (products of more permuted copies
amplify noise -- the usual accuracy/irreversibility trade-off).
"""

import rankhash as rh

spec = rh.SyntheticSpec(
    num_subjects=40, samples_per_subject=5, n=299, sigma=0.015,
    base="decay-normal", base_scale=0.09, base_tau=15.0, seed=5,
)
dataset = rh.synthesize_dataset(spec)
base = rh.HashParams(n=299, m=600, k=128, p=2, master_seed=0)


def show(title, rows, axis):
    print(f"\n{title}")
    for row in rows:
        print(f"  {axis}={row[axis]:>4}: EER {row['mean_eer'] * 100:5.2f}% "
              f"(std {row['std_eer'] * 100:.2f}pp over {len(row['eers'])} seeds)")


rows = rh.sweep(dataset, base, k_values=[50, 100, 250], repeats=3, base_seed=1)
show("window size (m=600, p=2):", rows, "k")

rows = rh.sweep(dataset, base, m_values=[10, 100, 600], k_values=[250], repeats=3, base_seed=2)
show("code length (k=250, p=2):", rows, "m")

rows = rh.sweep(dataset, base, p_values=[2, 3, 5], k_values=[250], repeats=3, base_seed=3)
show("kernel degree (k=250, m=600):", rows, "p")
