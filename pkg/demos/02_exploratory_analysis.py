"""
Exploratory factor analysis of a rating scale
=============================================

First we check that the correlation matrix is worth factoring and count
its factors. The last step picks the short item subset with the highest
internal consistency across stimuli.
"""

from likertkit import (ItemCatalog, assess, build_matrix, parallel_analysis, pearson_matrix,
                       principal_axis_factoring, rotate, simulate_survey, subset_search)
from likertkit.cli import simulation_specs

specs, seed, reversed_items = simulation_specs({"seed": 11})
raw = simulate_survey(specs, seed=seed, reversed_items=reversed_items)
catalog = ItemCatalog.bundled("exploratory")
matrices = {sid: build_matrix(raw, sid, catalog) for sid in raw.stimuli}
m = matrices["s01"]
R = pearson_matrix(m)

# suitability: low-correlation items, Bartlett's sphericity test and KMO
suit = assess(R, m.n)
print(f"Bartlett chi2={suit.bartlett.chi2:.1f} df={suit.bartlett.df} "
      f"p={suit.bartlett.p_value:.3g}, KMO={suit.kmo_overall:.3f}")
print(f"items with no |r| >= 0.3: {suit.low_correlation_items}")

# parallel analysis compares reduced-matrix eigenvalues with those of random data
pa = parallel_analysis(m, replicates=100, seed=0)
print(f"parallel analysis keeps {pa.n_factors} factor(s)")
for j in range(4):
    print(f"  eigenvalue {j + 1}: observed {pa.observed[j]:6.3f}  "
          f"random {pa.simulated_reference[j]:6.3f}")

# one factor: the loading table with communality, uniqueness and complexity
one = principal_axis_factoring(R, 1)
print(one.to_csv().splitlines()[0])
for line in one.to_csv().splitlines()[1:6]:
    print(line)

# two factors, rotated orthogonally and obliquely
two = principal_axis_factoring(R, 2)
for method in ("varimax", "promax"):
    rot = rotate(two, method)
    print(f"{method}: mean complexity {rot.com.mean():.2f}")

# the catalog's pool of items loading >= 0.7 everywhere feeds the subset search
pool = catalog.scale("high_loading")
low = [i for i in pool if min(principal_axis_factoring(pearson_matrix(x), 1).loading(i)
                              for x in matrices.values()) < 0.7]
print(f"pool of {len(pool)} items, {len(low)} below 0.7 somewhere in this sample")
best = subset_search(matrices, pool, sizes=(3, 4, 5))
for size, res in best.items():
    print(f"best {size}-item subset {res.best.items}: mean alpha {res.best.mean_alpha:.3f}")
