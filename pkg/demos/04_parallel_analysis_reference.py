"""
How often does parallel analysis find factors in pure noise?
============================================================

With the mean of the random eigenvalues as the reference, roughly half of
all noise datasets shaped 200 x 31 still retain one factor: the first
observed eigenvalue beats the random mean about half the time by chance.
Using the 95th percentile as the reference brings the false-positive rate
near 5%. Real structure is found either way.
"""

import time

import numpy as np

from likertkit import SimSpec, parallel_analysis, simulate

SEEDS = range(40)

for reference in ("mean", 0.95):
    t0 = time.perf_counter()
    noise = [parallel_analysis(simulate(SimSpec(np.zeros(31), 200, seed=s)), 100, seed=s,
                               reference=reference).n_factors for s in SEEDS]
    strong = [parallel_analysis(simulate(SimSpec(np.full(6, 0.8), 500, seed=s)), 100, seed=s,
                                reference=reference).n_factors for s in SEEDS]
    print(f"{str(reference):>8}: noise -> 0 factors in {noise.count(0)}/{len(SEEDS)}, "
          f"strong -> 1 factor in {strong.count(1)}/{len(SEEDS)} "
          f"({time.perf_counter() - t0:.1f} s)")
