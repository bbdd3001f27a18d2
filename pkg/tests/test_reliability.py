import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from likertkit import DataError, RatingMatrix, SimSpec, cronbach_alpha, simulate, subset_search
from likertkit.reliability import alpha_from_values


def test_identical_items_alpha_is_one():
    col = np.array([1, 4, 2, 7, 5, 3])
    assert alpha_from_values(np.column_stack([col] * 4)).alpha == 1.0


def test_hand_computed_three_item_alpha():
    x = np.array([[1, 2, 1], [2, 3, 3], [3, 4, 2], [4, 5, 4]])
    rep = alpha_from_values(x)
    assert sum(rep.item_variances) == pytest.approx(5.0, abs=1e-14)
    assert rep.total_variance == pytest.approx(41 / 3, abs=1e-13)
    assert rep.alpha == pytest.approx(1.5 * (1 - 15 / 41), abs=1e-14)
    assert round(rep.alpha, 3) == 0.951


@settings(max_examples=40, deadline=None)
@given(arrays(np.int64, (15, 4), elements=st.integers(1, 7)))
def test_alpha_matches_oracle(x):
    if np.var(x.sum(axis=1)) == 0:
        return
    assert alpha_from_values(x).alpha == pytest.approx(oracles.alpha(x), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.int64, (12, 3), elements=st.integers(1, 7)), st.integers(-5, 5), st.integers(0, 2))
def test_alpha_shift_invariance(x, shift, col):
    if np.var(x.sum(axis=1)) == 0:
        return
    y = x.copy()
    y[:, col] += shift
    assert alpha_from_values(y).alpha == pytest.approx(alpha_from_values(x).alpha, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_two_standardized_items(seed):
    from likertkit import pearson_r

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((100, 2))
    x[:, 1] += x[:, 0]
    z = (x - x.mean(0)) / x.std(0, ddof=1)
    r = pearson_r(x[:, 0], x[:, 1])
    assert alpha_from_values(z).alpha == pytest.approx(2 * r / (1 + r), abs=1e-10)
    assert alpha_from_values(x, standardized=True).alpha == pytest.approx(2 * r / (1 + r),
                                                                          abs=1e-10)


def test_adding_parallel_item_never_lowers_alpha():
    m = simulate(SimSpec(np.full(6, 0.7), 2000, seed=3))
    alphas = [cronbach_alpha(m, m.items[:k]).alpha for k in range(2, 7)]
    assert all(b >= a for a, b in zip(alphas, alphas[1:]))


def test_alpha_errors(small_matrix):
    with pytest.raises(DataError):
        cronbach_alpha(small_matrix, ["a"])
    with pytest.raises(DataError):
        cronbach_alpha(small_matrix, ["a", "a"])
    with pytest.raises(DataError):
        alpha_from_values(np.ones((5, 3)))


def test_negative_alpha_is_reported():
    x = np.array([[1, 7], [2, 6], [3, 5], [4, 3], [5, 2]])
    rep = alpha_from_values(x)
    assert rep.alpha < 0 and rep.negative


# subset search

def random_matrices(seed, p=5, n=60, stimuli=3):
    rng = np.random.default_rng(seed)
    out = {}
    for s in range(stimuli):
        f = rng.standard_normal((n, 1))
        lam = rng.uniform(0.3, 0.9, p)
        x = np.clip(np.round(4 + 1.3 * (f * lam + rng.standard_normal((n, p)) * 0.7)), 1, 7)
        out[f"s{s}"] = RatingMatrix.from_array(x.astype(int), items=tuple("abcdefghijkl"[:p]),
                                               stimulus_id=f"s{s}")
    return out


def test_pool_of_twelve_evaluates_220_subsets():
    mats = random_matrices(0, p=12, stimuli=2)
    res = subset_search(mats, tuple("abcdefghijkl"), sizes=(3,))
    assert len(res[3].ranked) == math.comb(12, 3) == 220


@pytest.mark.parametrize("seed", range(4))
def test_subset_search_matches_brute_force(seed):
    mats = random_matrices(seed)
    pool = tuple("abcde")
    res = subset_search(mats, pool, sizes=(3, 4))
    rows = {sid: [dict(zip(m.items, map(int, r))) for r in m.values] for sid, m in mats.items()}
    for size in (3, 4):
        expected = oracles.subset_ranking(rows, pool, size)
        assert [s.items for s in res[size].ranked] == expected
        best = res[size].best
        assert best.mean_alpha == pytest.approx(
            np.mean([oracles.alpha([[r[i] for i in best.items] for r in rs])
                     for rs in rows.values()]), abs=1e-12)


def test_subset_search_min_ranking_and_csv():
    mats = random_matrices(1)
    res = subset_search(mats, "abcde", sizes=(3,), rank_by="min")[3]
    mins = [s.min_alpha for s in res.ranked]
    assert mins == sorted(mins, reverse=True)
    lines = res.to_csv().splitlines()
    assert lines[0] == "rank,size,items,s0,s1,s2,mean,min,max,errors"
    assert lines[1].startswith("1,3,")
    assert len(lines) == 11


def test_subset_search_reproducible_across_input_orders():
    mats = random_matrices(2)
    a = subset_search(mats, "abcde", sizes=(3,))[3]
    b = subset_search(dict(reversed(list(mats.items()))), "edcba", sizes=(3,))[3]
    assert [s.items for s in a.ranked] == [s.items for s in b.ranked]
    assert a.to_csv() == b.to_csv()


def test_failing_subsets_rank_last():
    x = np.array([[1, 2, 3, 4], [2, 3, 3, 4], [3, 3, 3, 4], [4, 5, 3, 4], [5, 5, 3, 4]])
    m = {"s": RatingMatrix.from_array(x, items=("a", "b", "c", "d"), stimulus_id="s")}
    ranked = subset_search(m, "abcd", sizes=(2,))[2].ranked
    assert ranked[0].items == ("a", "b")
    assert ranked[-1].items == ("c", "d") and not ranked[-1].ok
    assert "zero variance" in ranked[-1].errors["s"]


def test_subset_search_validation():
    mats = random_matrices(0)
    with pytest.raises(DataError):
        subset_search(mats, "abc", sizes=(4,))
    with pytest.raises(DataError):
        subset_search(mats, "abz", sizes=(2,))
    with pytest.raises(DataError):
        subset_search(mats, "abc", rank_by="median")
