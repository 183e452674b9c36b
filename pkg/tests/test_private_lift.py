import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import (
    RESTRICTED_DEMANDS_N2,
    example_cache,
    example_transmission,
    library_from_bits,
)

from privcache.core import Broadcast, FileSet, Record, make_rng
from privcache.private_lift import example1_scheme, expanded_demand, scheme_a
from privcache.tradeoff import scheme_a_points
from privcache.verify import verify_decode_basis, verify_privacy_exact


def test_expanded_demand_matches_restricted_table():
    # keys S and demands D give shift S - D per stack
    for keys in itertools.product(range(2), repeat=2):
        for d in itertools.product(range(2), repeat=2):
            shifts = tuple((s - x) % 2 for s, x in zip(keys, d))
            assert tuple(expanded_demand(keys, d, 2)) == RESTRICTED_DEMANDS_N2[shifts]


@given(st.integers(1, 5), st.integers(1, 4), st.data())
def test_expanded_demand_puts_real_demand_at_key_position(n, k, data):
    keys = data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k))
    d = data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k))
    out = expanded_demand(keys, d, n)
    for user in range(k):
        stack = out[user * n:(user + 1) * n]
        assert sorted(stack) == list(range(n))
        assert stack[keys[user]] == d[user]


def test_example1_matches_printed_tables_on_every_library():
    scheme = example1_scheme(1)
    files = FileSet.every(2, 3)
    space = scheme.tape_space()
    for tape in space.enumerate():
        caches = scheme.setup(files, tape)
        keys = (tape["key0"], tape["key1"])
        for row, bits in enumerate(files.bits):
            lib = library_from_bits(bits.ravel())
            for user in range(2):
                assert list(caches[user].main[row]) == example_cache((user, keys[user]), lib)
        for d in itertools.product(range(2), repeat=2):
            bc = scheme.deliver(files, tape, d)
            shifts = tuple((s - x) % 2 for s, x in zip(keys, d))
            assert bc.aux["shift"] == shifts
            for row, bits in enumerate(files.bits):
                lib = library_from_bits(bits.ravel())
                assert list(bc.payload[row]) == example_transmission(shifts, lib)


@pytest.mark.parametrize("l", [1, 3])
def test_example1_rates(l):
    scheme = example1_scheme(l)
    assert scheme.file_bits == 3 * l
    files = FileSet.random(make_rng(0), 2, 3 * l)
    tape = scheme.tape_space().sample(make_rng(1))
    caches = scheme.setup(files, tape)
    bc = scheme.deliver(files, tape, (0, 1))
    assert Fraction(caches[0].main_bits, scheme.file_bits) == Fraction(1, 3)
    assert Fraction(bc.payload_bits, scheme.file_bits) == Fraction(4, 3)


def test_example1_decodes_every_library():
    scheme = example1_scheme(1)
    files = FileSet.every(2, 3)
    for tape in scheme.tape_space().enumerate():
        caches = scheme.setup(files, tape)
        for d in itertools.product(range(2), repeat=2):
            bc = scheme.deliver(files, tape, d)
            for k in range(2):
                assert (scheme.decode(k, d[k], caches[k], bc) == files.file(d[k])).all()


def test_decode_rejects_inconsistent_aux():
    scheme = example1_scheme(1)
    files = FileSet.random(make_rng(0), 2, 3)
    tape = scheme.tape_space().sample(make_rng(0))
    caches = scheme.setup(files, tape)
    bc = scheme.deliver(files, tape, (0, 0))
    with pytest.raises(ValueError):
        scheme.decode(0, 1, caches[0], bc)
    with pytest.raises(ValueError):
        scheme.decode(0, 0, caches[0], Broadcast(bc.payload, Record()))
    with pytest.raises(ValueError):
        scheme.decode(0, 0, caches[0], Broadcast(bc.payload, Record.of(("shift", 2, [0]))))


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (2, 3)])
def test_scheme_a_declared_points(n, k):
    expected = {(p.M, p.R) for p in scheme_a_points(n, k)}
    kt = n * k - k + 1
    got = {(s.memory, s.rate) for s in (scheme_a(n, k, r) for r in range(kt + 1))}
    assert got == expected


@settings(max_examples=15)
@given(st.sampled_from([(2, 2), (3, 2), (2, 3)]), st.integers(0, 5), st.integers(0, 2**31))
def test_scheme_a_random_decode(nk, r, seed):
    n, k = nk
    r = min(r, n * k - k + 1)
    scheme = scheme_a(n, k, r)
    rng = make_rng(seed)
    files = FileSet.random(rng, n, scheme.file_bits)
    tape = scheme.tape_space().sample(rng)
    d = tuple(int(x) for x in rng.integers(0, n, size=k))
    caches = scheme.setup(files, tape)
    bc = scheme.deliver(files, tape, d)
    for u in range(k):
        assert (scheme.decode(u, d[u], caches[u], bc) == files.file(d[u])).all()


def test_scheme_a_decode_basis_and_privacy_3_2():
    scheme = scheme_a(3, 2, 1)
    assert verify_decode_basis(scheme).passed
    rep = verify_privacy_exact(scheme, files="integrate")
    assert rep.passed and rep.value["tight"]


def test_lifted_reduced_view_is_a_relabelling_of_raw():
    # both views carry the same information: equal MI partitions
    scheme = example1_scheme(1)
    raw = verify_privacy_exact(scheme, view="raw")
    red = verify_privacy_exact(scheme, view="reduced")
    assert raw.value["mi_bits"] == red.value["mi_bits"]
    assert raw.passed and red.passed


def test_scheme_a_validates_r():
    with pytest.raises(ValueError):
        scheme_a(2, 2, 4)
    with pytest.raises(ValueError):
        example1_scheme(0)


def test_wrong_file_shape_rejected():
    scheme = example1_scheme(1)
    tape = scheme.tape_space().sample(make_rng(0))
    with pytest.raises(ValueError):
        scheme.setup(FileSet(np.zeros((2, 4), dtype=np.uint8)), tape)
