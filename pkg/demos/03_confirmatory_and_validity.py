"""
Confirming a short scale and checking its validity
==================================================

A five-item scale is fitted as a one-factor model by maximum likelihood.
Its validity is then judged by correlations with other measures and by
whether it ranks stimuli in their known order.
"""

import numpy as np

from likertkit import (SimSpec, convergent_validity, cronbach_alpha, discriminant_validity,
                       fit_one_factor, interpret_fit, known_group_comparison,
                       map_unit_to_likert, simulate)

# ten items on two correlated factors; items 1-5 are the scale under test
lam = np.zeros((10, 2))
lam[:5, 0] = [0.88, 0.90, 0.87, 0.84, 0.86]
lam[5:, 1] = 0.75
phi = [[1.0, 0.85], [0.85, 1.0]]
shifts = {"bright": 0.5, "plain": 0.0, "busy": -0.5}
matrices = {sid: simulate(SimSpec(lam, 250, seed=3, stream=(j,), stimulus_id=sid,
                                  latent_mean=mu, factor_correlation=phi))
            for j, (sid, mu) in enumerate(shifts.items())}
scale = [f"item{i}" for i in range(1, 6)]
related = [f"item{i}" for i in range(6, 11)]

for sid, m in matrices.items():
    sol = fit_one_factor(m.select(scale))
    verdict = interpret_fit(sol)
    p = "n/a" if sol.p_value is None else f"{sol.p_value:.3f}"
    print(f"{sid}: chi2={sol.chi2:.2f} df={sol.df} p={p} TLI={sol.tli:.3f} CFI={sol.cfi:.3f} "
          f"SRMR={sol.srmr:.3f} RMSEA={sol.rmsea:.3f} -> {verdict['overall']}")
    print(f"    standardized loadings {np.round(sol.standardized_lambda, 3)}")
    print(f"    alpha {cronbach_alpha(m, scale).alpha:.3f}")

# convergent: correlation with the related scale should be high
# discriminant: correlation with an unrelated covariate should be low
rng = np.random.default_rng(0)
for sid, m in matrices.items():
    age = rng.integers(18, 66, m.n).astype(float)
    print(f"{sid}: r(related)={convergent_validity(m, scale, related):.2f} "
          f"r(age)={discriminant_validity(m, scale, age):.2f}")

# known groups: composite means with 95% intervals, ranked
groups = known_group_comparison(matrices, scale)
for g in groups.ranked:
    print(f"{g.stimulus_id}: {g.ci.mean:.2f} [{g.ci.lower:.2f}, {g.ci.upper:.2f}]")
print(f"ordering {' > '.join(groups.ordering)}, separated={groups.separated}")

# scores published on a 0..1 scale, placed on the 1..7 rating range
for x in (0.58, 0.49, 0.36):
    print(f"{x} -> {map_unit_to_likert(x)}")
