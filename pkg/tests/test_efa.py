import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import exact_one_factor
from likertkit import (CorrelationMatrix, DataError, SimSpec, parallel_analysis, pearson_matrix,
                       principal_axis_factoring, promax, reduced_eigenvalues, rotate, simulate,
                       varimax)
from likertkit.efa import efa, hofmann_complexity, smc, varimax_criterion

LAM4 = np.array([0.9, 0.8, 0.7, 0.6])


def test_reduced_eigenvalues_identity_unity():
    ev = reduced_eigenvalues(CorrelationMatrix.from_array(np.eye(5)), "unity").eigenvalues
    assert np.allclose(ev, 1.0, atol=1e-15)


def test_reduced_eigenvalues_compound_symmetry():
    ev = reduced_eigenvalues(exact_one_factor([0.8] * 6), "unity").eigenvalues
    assert ev[0] == pytest.approx(1 + 5 * 0.64, abs=1e-12)
    assert np.allclose(ev[1:], 0.36, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 10))
def test_reduced_eigenvalue_sum_is_trace(seed, p):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3 * p, p)) + rng.standard_normal((3 * p, 1))
    R = pearson_matrix(x)
    ev = reduced_eigenvalues(R).eigenvalues
    assert sum(ev) == pytest.approx(smc(R).sum(), abs=1e-8)


def test_smc_on_exact_model():
    # SMC is bounded above by the true communality
    h = smc(exact_one_factor(LAM4))
    assert np.all(h <= LAM4 ** 2 + 1e-12)
    assert np.all(h > 0)


def test_paf_exact_model_recovery(four_item_r):
    sol = principal_axis_factoring(four_item_r, 1)
    assert sol.converged
    assert np.max(np.abs(sol.loadings[:, 0] - LAM4)) < 1e-3
    assert np.max(np.abs(sol.h2 - LAM4 ** 2)) < 1e-3
    assert np.all(sol.com == 1.0)
    assert np.allclose(sol.u2, 1 - sol.h2)


def test_paf_tight_tolerance_reproduces_offdiagonal(four_item_r):
    sol = principal_axis_factoring(four_item_r, 1, tol=1e-13, max_iter=100_000)
    fitted = np.outer(sol.loadings[:, 0], sol.loadings[:, 0])
    off = ~np.eye(4, dtype=bool)
    assert np.max(np.abs(fitted[off] - four_item_r.r[off])) < 1e-6


def test_paf_jacobi_backend_agrees(four_item_r):
    a = principal_axis_factoring(four_item_r, 1)
    b = principal_axis_factoring(four_item_r, 1, method="jacobi")
    assert np.allclose(a.loadings, b.loadings, atol=1e-10)


def test_paf_identity():
    sol = principal_axis_factoring(CorrelationMatrix.from_array(np.eye(4)), 1)
    assert np.allclose(sol.loadings, 0)
    assert np.allclose(sol.h2, 0)
    assert np.all(sol.com == 1)


def test_paf_sign_convention():
    sol = principal_axis_factoring(exact_one_factor(-LAM4), 1)
    col = sol.loadings[:, 0]
    assert col[np.argmax(np.abs(col))] > 0


def test_paf_heywood_is_clamped_and_flagged():
    R = CorrelationMatrix.from_array([[1, .85, .85], [.85, 1, .6], [.85, .6, 1]])
    sol = principal_axis_factoring(R, 1)
    assert sol.heywood == ("item1",)
    assert sol.h2[0] == 1.0 and sol.u2[0] == 0.0


def test_paf_rejects_bad_k(four_item_r):
    with pytest.raises(DataError):
        principal_axis_factoring(four_item_r, 4)
    with pytest.raises(DataError):
        principal_axis_factoring(np.eye(3), 1)


def test_hofmann_complexity():
    a = 0.6
    assert hofmann_complexity([[a, a]])[0] == pytest.approx(2.0, abs=1e-15)
    assert hofmann_complexity([[0.7, 0.0]])[0] == 1.0
    assert hofmann_complexity([[0.5, 0.5, 0.5]])[0] == pytest.approx(3.0, abs=1e-14)


def test_efa_csv_layout(four_item_r):
    text = principal_axis_factoring(four_item_r, 1).to_csv()
    lines = text.splitlines()
    assert lines[0] == "item,PA1,h2,u2,com"
    assert lines[1] == "item1,0.90,0.81,0.19,1.00"


# rotation

BLOCK = np.array([[.8, 0], [.8, 0], [0, .8], [0, .8]])


def test_varimax_simple_structure_unchanged():
    out = varimax(BLOCK).rotated_loadings
    assert np.allclose(np.abs(out), BLOCK, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (6, 2), elements=st.floats(-0.9, 0.9)), st.booleans())
def test_varimax_preserves_communalities_and_is_monotone(lam, normalize):
    if np.any(np.sum(lam ** 2, axis=1) < 1e-6):
        return
    res = varimax(lam, kaiser_normalize=normalize)
    assert np.allclose(np.sum(res.rotated_loadings ** 2, axis=1), np.sum(lam ** 2, axis=1),
                       atol=1e-10)
    assert np.allclose(res.rotation.T @ res.rotation, np.eye(2), atol=1e-12)
    assert all(b >= a - 1e-15 for a, b in zip(res.criterion_history,
                                               res.criterion_history[1:]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_varimax_matches_angle_sweep(seed):
    lam = np.random.default_rng(seed).uniform(-0.9, 0.9, (6, 2))
    got = varimax_criterion(varimax(lam, kaiser_normalize=False).rotated_loadings)
    assert got == pytest.approx(oracles.varimax_angle_sweep(lam), abs=1e-4)
    assert got >= oracles.varimax_angle_sweep(lam) - 1e-12


def test_varimax_three_factors_beats_random_rotations():
    rng = np.random.default_rng(9)
    lam = rng.uniform(-0.8, 0.8, (9, 3))
    best = varimax_criterion(varimax(lam, kaiser_normalize=False).rotated_loadings)
    for _ in range(200):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert varimax_criterion(lam @ q) <= best + 1e-12


def test_promax_on_orthogonal_structure():
    res = promax(BLOCK + np.array([[0, .05], [.05, 0], [0, 0], [0, 0]]))
    off = res.factor_correlation[0, 1]
    assert abs(off) < 0.05
    assert np.allclose(np.diag(res.factor_correlation), 1)


def test_promax_recovers_factor_correlation():
    lam = np.zeros((8, 2))
    lam[:4, 0] = 0.75
    lam[4:, 1] = 0.75
    m = simulate(SimSpec(lam, 3000, seed=11, factor_correlation=[[1, .5], [.5, 1]]))
    sol = rotate(principal_axis_factoring(pearson_matrix(m), 2), "promax")
    assert sol.factor_correlation[0, 1] == pytest.approx(0.5, abs=0.1)
    assert sol.rotation == "promax"


def test_rotate_orders_and_signs_factors():
    lam = np.zeros((6, 2))
    lam[:3, 0] = 0.5
    lam[3:, 1] = 0.8
    m = simulate(SimSpec(lam, 2000, seed=2))
    sol = efa(m, 2, "varimax")
    ss = np.sum(sol.loadings ** 2, axis=0)
    assert ss[0] >= ss[1]
    assert np.all(sol.loadings.sum(axis=0) > 0)
    assert sol.to_csv().splitlines()[0] == "item,PA1,PA2,h2,u2,com"
    with pytest.raises(DataError):
        rotate(principal_axis_factoring(pearson_matrix(m), 1))
    with pytest.raises(DataError):
        rotate(sol, "quartimax")


# parallel analysis

def test_parallel_analysis_reproducible_and_batch_independent():
    m = simulate(SimSpec(np.full(6, 0.6), 150, seed=4))
    a = parallel_analysis(m, 40, seed=7, batch=40)
    b = parallel_analysis(m, 40, seed=7, batch=7)
    assert a.simulated_reference == b.simulated_reference
    assert a.observed == b.observed
    c = parallel_analysis(m, 40, seed=8)
    assert c.simulated_reference != a.simulated_reference


def test_parallel_analysis_quantile_reference_is_higher():
    m = simulate(SimSpec(np.zeros(10), 200, seed=1))
    mean = parallel_analysis(m, 50, seed=0)
    q95 = parallel_analysis(m, 50, seed=0, reference=0.95)
    assert q95.reference == "quantile 0.95"
    assert all(q >= mu for q, mu in zip(q95.simulated_reference[:3],
                                        mean.simulated_reference[:3]))
    assert q95.n_factors <= mean.n_factors


def test_parallel_analysis_validation():
    m = simulate(SimSpec(np.full(4, 0.5), 50, seed=1))
    with pytest.raises(DataError):
        parallel_analysis(m, 10)
    with pytest.raises(DataError):
        parallel_analysis(m, 30, reference=1.5)
