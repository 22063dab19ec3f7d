import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treeembed.errors import ConstructionFailure
from treeembed.hamilton import (
    dfs_hamilton_cycle, hamilton_cycle, is_hamilton_cycle, lexicographic_hamilton_cycle,
    patched_hamilton_cycle,
)


def first_cycle_by_permutations(A):
    n = A.shape[0]
    for rest in itertools.permutations(range(1, n)):
        cyc = [0, *rest]
        if is_hamilton_cycle(A, cyc):
            return cyc
    return None


def dense(n, p, seed):
    A = np.random.default_rng(seed).random((n, n)) < p
    np.fill_diagonal(A, False)
    return A


@given(st.integers(3, 7), st.floats(0.3, 0.9), st.integers(0, 2**31))
def test_lexicographic_matches_permutation_search(n, p, seed):
    A = dense(n, p, seed)
    assert lexicographic_hamilton_cycle(A) == first_cycle_by_permutations(A)


def test_two_and_one_vertex():
    assert lexicographic_hamilton_cycle(np.zeros((1, 1), dtype=bool)) == [0]
    assert lexicographic_hamilton_cycle(~np.eye(2, dtype=bool)) == [0, 1]
    assert lexicographic_hamilton_cycle(np.array([[0, 1], [0, 0]], dtype=bool)) is None


def test_rejects_non_cycles():
    A = ~np.eye(4, dtype=bool)
    assert not is_hamilton_cycle(A, [0, 1, 2])
    assert not is_hamilton_cycle(np.eye(3, k=1, dtype=bool), [0, 1, 2])


@pytest.mark.parametrize("n", [30, 80, 200])
def test_patching_on_dense_digraphs(n):
    rng = np.random.default_rng(n)
    A = dense(n, 0.7, n)
    cyc = patched_hamilton_cycle(A, rng)
    assert cyc is not None and is_hamilton_cycle(A, cyc)


def test_dfs_backup():
    A = dense(40, 0.6, 1)
    cyc = dfs_hamilton_cycle(A, np.random.default_rng(0))
    assert cyc is not None and is_hamilton_cycle(A, cyc)


def test_no_cycle_raises():
    A = np.zeros((5, 5), dtype=bool)
    A[0, 1] = A[1, 2] = A[2, 3] = A[3, 4] = True
    with pytest.raises(ConstructionFailure):
        hamilton_cycle(A)


def test_large_sparse_oriented_cycle():
    n = 50
    perm = np.random.default_rng(3).permutation(n)
    A = np.zeros((n, n), dtype=bool)
    A[perm, np.roll(perm, -1)] = True
    cyc = hamilton_cycle(A, np.random.default_rng(0))
    assert is_hamilton_cycle(A, cyc)
