import random
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from probemin.generate import random_linear_matroid, random_matroid
from probemin.matroid import ExplicitSpec, Matroid, MatroidError, check_axioms, to_mask


def subsets(ground):
    ground = sorted(ground)
    for r in range(len(ground) + 1):
        yield from combinations(ground, r)


def brute_rank(M, S):
    return max(len(T) for T in subsets(S) if M.is_independent(T))


def test_uniform_independence():
    M = Matroid.uniform(range(5), 2)
    assert M.is_independent({0, 4})
    assert not M.is_independent({0, 1, 2})


def test_explicit_listed_family():
    M = Matroid.explicit([0, 1], [[], [0], [1]])
    assert not M.is_independent({0, 1})


def test_partition_one_per_block():
    M = Matroid.partition([([0, 1], 1), ([2], 1)])
    assert M.is_independent({0, 2})
    assert not M.is_independent({0, 1})
    assert M.rank({0, 1, 2}) == 2
    assert brute_rank(M, {0, 1, 2}) == 2


def test_outside_ground():
    with pytest.raises(MatroidError):
        Matroid.uniform(range(3), 1).is_independent({5})


def test_contract_uniform():
    M = Matroid.uniform(range(5), 3)
    C = M.contract({0})
    ref = Matroid.uniform(range(1, 5), 2)
    assert C.ground == ref.ground
    for S in subsets(C.ground):
        assert C.is_independent(S) == ref.is_independent(S)


def test_contract_empty_is_identity():
    M = random_linear_matroid(random.Random(2), list(range(6)), 3)
    C = M.contract(set())
    assert all(C.is_independent(S) == M.is_independent(S) for S in subsets(M.ground))


def test_contract_explicit():
    M = Matroid.explicit(range(3), [S for S in subsets(range(3)) if len(S) <= 2])
    C = M.contract({0})
    assert not C.is_independent({1, 2})
    assert C.is_independent({1})


def test_contract_dependent_raises():
    with pytest.raises(MatroidError):
        Matroid.uniform(range(3), 1).contract({0, 1})


def test_rank_basics():
    M = Matroid.uniform(range(6), 4)
    assert M.rank() == 4
    assert M.rank(set()) == 0


def test_min_weight_basis_example():
    M = Matroid.uniform([3, 7, 9], 2)
    assert M.min_weight_basis({3: 1, 7: 0, 9: 5}, {3, 7, 9}) == [7, 3]
    assert M.min_weight_basis({}, set()) == []


def test_check_axioms_examples():
    assert check_axioms(ExplicitSpec((0, 1), (frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1}))))
    assert not check_axioms(ExplicitSpec((0, 1), (frozenset(), frozenset({0, 1}))))
    fam = (frozenset(), frozenset({0}), frozenset({1}), frozenset({2}), frozenset({0, 1}))
    assert not check_axioms(ExplicitSpec((0, 1, 2), fam))


def test_explicit_rejects_non_matroid():
    with pytest.raises(MatroidError):
        Matroid.explicit([0, 1, 2], [[0, 1], [2]])


def test_explicit_cap():
    with pytest.raises(MatroidError):
        Matroid.explicit(range(17), [[0]])


def test_json_round_trip():
    for M in (Matroid.uniform([0, 1, 2], 2), Matroid.partition([([0, 1], 1), ([2], 1)]),
              Matroid.explicit([0, 1], [[0], [1]])):
        back = Matroid.from_json(M.to_json())
        assert all(back.is_independent(S) == M.is_independent(S) for S in subsets(M.ground))


def brute_exchange(family, ground):
    fam = set(family)
    for A in fam:
        for B in fam:
            if len(A) < len(B) and not any(A | {b} in fam for b in B - A):
                return False
    return True


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 7))
def test_random_matroids_satisfy_axioms(seed, n):
    M = random_matroid(random.Random(seed), n)
    fam = M.family()
    assert frozenset() in fam
    famset = set(fam)
    assert all(S - {e} in famset for S in fam for e in S)
    assert brute_exchange(fam, M.ground)
    for S in subsets(M.ground):
        assert M.rank(S) == brute_rank(M, S)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_min_weight_basis_is_optimal(seed, n):
    rng = random.Random(seed)
    M = random_linear_matroid(rng, list(range(n)), rng.randint(1, n))
    w = {e: rng.randint(0, 5) for e in range(n)}
    S = set(rng.sample(range(n), rng.randint(0, n)))
    basis = M.min_weight_basis(w, S)
    r = M.rank(S)
    assert len(basis) == r
    best = min(sum(w[e] for e in T) for T in subsets(S) if len(T) == r and M.is_independent(T))
    assert sum(w[e] for e in basis) == best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_basis_weight_ignores_tie_break(seed):
    rng = random.Random(seed)
    n = 6
    M = random_linear_matroid(rng, list(range(n)), 3)
    w = {e: rng.randint(0, 2) for e in range(n)}
    perm = list(range(n))
    rng.shuffle(perm)
    # relabel elements and compare basis weights
    inv = {perm[e]: e for e in range(n)}
    Mp = Matroid(range(n), lambda mask: M.independent_mask(to_mask(inv[e] for e in range(n) if mask >> e & 1)))
    wp = {perm[e]: w[e] for e in range(n)}
    a = sum(w[e] for e in M.min_weight_basis(w, range(n)))
    b = sum(wp[e] for e in Mp.min_weight_basis(wp, range(n)))
    assert a == b


def test_contraction_composes():
    rng = random.Random(5)
    for _ in range(5):
        M = random_linear_matroid(rng, list(range(10)), 4)
        indep = [S for S in subsets(M.ground) if len(S) == 2 and M.is_independent(S)]
        a, b = indep[0]
        lhs, rhs = M.contract({a}).contract({b}), M.contract({a, b})
        assert lhs.ground == rhs.ground
        assert all(lhs.is_independent(S) == rhs.is_independent(S) for S in subsets(lhs.ground))


def test_parallel_contractions_agree():
    rng = random.Random(9)
    hits = 0
    for _ in range(40):
        M = random_linear_matroid(rng, list(range(6)), 3)
        for e, f in combinations(range(6), 2):
            if M.is_independent({e}) and M.is_independent({f}) and not M.is_independent({e, f}):
                hits += 1
                A, B = M.contract({e}), M.contract({f})
                rest = M.ground - {e, f}
                assert all(A.is_independent(S) == B.is_independent(S) for S in subsets(rest))
    assert hits > 0
