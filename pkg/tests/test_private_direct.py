import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privcache.core import FileSet, Permutation, make_rng
from privcache.private_direct import SchemeB, SchemeC, slot_assignment
from privcache.tradeoff import scheme_b_point, scheme_c_point
from privcache.verify import (
    verify_decode_basis,
    verify_privacy_exact,
    verify_privacy_estimate,
    verify_view_class,
)


@given(st.integers(1, 5), st.data())
def test_slot_assignment_groups_equal_demands(k, data):
    demands = data.draw(st.lists(st.integers(0, 4), min_size=k, max_size=k))
    order = Permutation(data.draw(st.permutations(range(k))))
    slots = slot_assignment(demands, order)
    for i, j in itertools.combinations(range(k), 2):
        assert (slots[i] == slots[j]) == (demands[i] == demands[j])


def _random_decode(scheme, seed, rounds=3):
    rng = make_rng(seed)
    for _ in range(rounds):
        files = FileSet.random(rng, scheme.n_files, scheme.file_bits)
        tape = scheme.tape_space().sample(rng)
        d = tuple(int(x) for x in rng.integers(0, scheme.n_files, size=scheme.n_users))
        caches = scheme.setup(files, tape)
        bc = scheme.deliver(files, tape, d)
        for u in range(scheme.n_users):
            assert (scheme.decode(u, d[u], caches[u], bc) == files.file(d[u])).all()


# ---------------------------------------------------------------------------
# uncoded shuffled scheme

@pytest.mark.parametrize("n,k,m", [(3, 2, 0), (3, 2, 1), (3, 2, 3), (2, 4, Fraction(2, 3)),
                                   (4, 2, Fraction(1, 2)), (2, 2, 1)])
def test_scheme_b_rate_formula(n, k, m):
    F = 6 * (Fraction(m) / n).denominator
    scheme = SchemeB(n, k, m, F)
    assert scheme.rate == min(n, k) * (1 - Fraction(m) / n)
    assert (scheme.memory, scheme.rate) == tuple(scheme_b_point(n, k, m))
    files = FileSet.random(make_rng(0), n, F)
    tape = scheme.tape_space().sample(make_rng(1))
    caches = scheme.setup(files, tape)
    for d in scheme.demand_space():
        bc = scheme.deliver(files, tape, d)
        assert Fraction(bc.payload_bits, F) == scheme.rate
    assert Fraction(caches[0].main_bits, F) == scheme.memory


@settings(max_examples=20)
@given(st.sampled_from([(3, 2), (4, 3), (2, 3), (5, 2)]), st.integers(0, 2**31))
def test_scheme_b_random_decode(nk, seed):
    n, k = nk
    _random_decode(SchemeB(n, k, Fraction(n, 3), 3), seed)


def test_scheme_b_decode_basis():
    assert verify_decode_basis(SchemeB(3, 2, 1, 3), tapes=40).passed


def test_scheme_b_exact_privacy_small():
    scheme = SchemeB(3, 2, 0, 1)
    enum = verify_privacy_exact(scheme, files="enumerate")
    integ = verify_privacy_exact(scheme, files="integrate")
    assert enum.passed and integ.passed
    assert enum.value["mi_bits"] == {0: 0.0, 1: 0.0}


def test_scheme_b_view_class_fast_path():
    rep = verify_view_class(SchemeB(3, 2, 1, 3), samples=30)
    assert rep.passed


def test_scheme_b_checks_memory():
    with pytest.raises(ValueError):
        SchemeB(3, 2, 4, 3)
    with pytest.raises(ValueError):
        SchemeB(3, 2, 1, 2)


# ---------------------------------------------------------------------------
# segmented scheme

@pytest.mark.parametrize("n,k,t,r", [(2, 2, 1, 1), (2, 2, 2, 1), (3, 2, 3, 2), (3, 2, 1, 1),
                                     (3, 2, 4, Fraction(3, 2)), (4, 2, 5, 3), (2, 3, 3, 1)])
def test_scheme_c_sizes_match_closed_form(n, k, t, r):
    unit = Fraction(r).denominator ** (n * k - t - 1)
    scheme = SchemeC(n, k, t, r, unit)
    assert (scheme.memory, scheme.rate) == tuple(scheme_c_point(n, k, t, r))


def test_scheme_c_worked_point():
    scheme = SchemeC(3, 2, 3, 2)
    assert (scheme.memory, scheme.rate) == (Fraction(195, 116), Fraction(69, 116))
    assert scheme.file_bits == 116


@settings(max_examples=10)
@given(st.sampled_from([(2, 2, 1, 1), (3, 2, 3, 2), (3, 2, 2, 1), (2, 3, 4, 1)]),
       st.integers(0, 2**31))
def test_scheme_c_random_decode(params, seed):
    _random_decode(SchemeC(*params), seed, rounds=2)


def test_scheme_c_decode_basis_small():
    assert verify_decode_basis(SchemeC(2, 2, 2, 1), tapes=20).passed


def test_scheme_c_view_class_and_estimate():
    scheme = SchemeC(2, 2, 2, 1)
    vc = verify_view_class(scheme, samples=30)
    assert vc.passed and vc.value["full_rank"]
    est = verify_privacy_estimate(scheme, 3000, seed=2, bootstrap=20)
    assert est.passed


def test_scheme_c_rational_r_requires_unit():
    with pytest.raises(ValueError):
        SchemeC(3, 2, 4, Fraction(3, 2), 1)
    SchemeC(3, 2, 4, Fraction(3, 2), 2)


@pytest.mark.parametrize("args", [(1, 2, 1, 1), (3, 2, 0, 1), (3, 2, 6, 1), (3, 2, 3, 3),
                                  (3, 2, 3, Fraction(1, 2))])
def test_scheme_c_parameter_checks(args):
    with pytest.raises(ValueError):
        SchemeC(*args)
