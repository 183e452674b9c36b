import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import gf256_mul, gf2_rank, gf2_span

from privcache.gf2 import SpanSolver, pack_vector, rank, reduce_packed, rref_packed, subspace_key
from privcache.gf256 import MUL, ReedSolomon, gf_inv, gf_mul, lagrange_matrix

byte = st.integers(0, 255)
nonzero = st.integers(1, 255)


# ---------------------------------------------------------------------------
# GF(256)

def test_mul_table_matches_shift_and_add():
    for a in range(256):
        for b in range(256):
            assert MUL[a, b] == gf256_mul(a, b)


@given(byte, byte, byte)
def test_field_axioms(a, b, c):
    assert gf_mul(a, b) == gf_mul(b, a)
    assert gf_mul(a, gf_mul(b, c)) == gf_mul(gf_mul(a, b), c)
    assert gf_mul(a, b ^ c) == gf_mul(a, b) ^ gf_mul(a, c)
    assert gf_mul(a, 1) == a and gf_mul(a, 0) == 0


@given(nonzero)
def test_inverse(a):
    assert gf_mul(a, gf_inv(a)) == 1


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        gf_inv(0)


def test_lagrange_matrix_identity_on_same_points():
    pts = [0, 3, 7, 9]
    assert (lagrange_matrix(pts, pts) == np.eye(4, dtype=np.uint8)).all()
    with pytest.raises(ValueError):
        lagrange_matrix([1, 1], [0])


def _poly_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = gf256_mul(acc, x) ^ c
    return acc


@given(st.lists(byte, min_size=1, max_size=6))
def test_rs_systematic_and_any_k_positions_decode(message):
    k = len(message)
    rs = ReedSolomon(k + 4, k)
    code = rs.encode(np.array(message, dtype=np.uint8).reshape(k, 1))[:, 0]
    assert list(code[:k]) == message
    for subset in itertools.combinations(range(k + 4), k):
        got = rs.decode(code[list(subset)].reshape(k, 1), subset)[:, 0]
        assert list(got) == message


def test_rs_matches_independent_polynomial_evaluation():
    # the message at points 0..k-1 fixes a polynomial; solve for its
    # coefficients by elimination and evaluate it at every code position
    rng = np.random.default_rng(0)
    k, n = 5, 7
    rs = ReedSolomon(n, k)
    msg = rng.integers(0, 256, size=k).tolist()
    rows = [[_pow(x, j) for j in range(k)] + [msg[x]] for x in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if rows[r][col])
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = gf_inv(rows[col][col])
        rows[col] = [gf256_mul(inv, v) for v in rows[col]]
        for r in range(k):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a ^ gf256_mul(f, b) for a, b in zip(rows[r], rows[col])]
    coeffs = [rows[j][k] for j in range(k)]
    code = rs.encode(np.array(msg, dtype=np.uint8).reshape(k, 1))[:, 0]
    assert [_poly_eval(coeffs, x) for x in range(n)] == list(code)


def _pow(x, j):
    out = 1
    for _ in range(j):
        out = gf256_mul(out, x)
    return out


def test_rs_7_5_every_subset_reconstructs_wide_symbols():
    rng = np.random.default_rng(1)
    rs = ReedSolomon(7, 5)
    msg = rng.integers(0, 256, size=(3, 5, 16), dtype=np.uint8)
    code = rs.encode(msg)
    for subset in itertools.combinations(range(7), 5):
        assert (rs.decode(code[:, list(subset)], subset) == msg).all()


def test_rs_input_checks():
    rs = ReedSolomon(7, 5)
    with pytest.raises(ValueError):
        rs.encode(np.zeros((4, 1), dtype=np.uint8))
    with pytest.raises(ValueError):
        rs.decode(np.zeros((4, 1), dtype=np.uint8), [0, 1, 2, 3])
    with pytest.raises(ValueError):
        rs.decode(np.zeros((5, 1), dtype=np.uint8), [0, 1, 2, 3, 3])
    with pytest.raises(ValueError):
        ReedSolomon(300, 2)


# ---------------------------------------------------------------------------
# GF(2)

rows_st = st.lists(st.integers(0, (1 << 10) - 1), max_size=8)


@given(rows_st)
def test_rank_matches_span_size(rows):
    assert rank(rows) == gf2_rank(rows)


@given(rows_st, st.integers(0, (1 << 10) - 1))
def test_express(rows, target):
    combo = SpanSolver(rows).express(target)
    if target in gf2_span(rows):
        acc = 0
        for i, r in enumerate(rows):
            if combo >> i & 1:
                acc ^= r
        assert acc == target
    else:
        assert combo is None


def _matrix(rows, width):
    return np.array([[(r >> (width - 1 - j)) & 1 for j in range(width)] for r in rows],
                    dtype=np.uint8).reshape(len(rows), width)


@given(st.integers(1, 80).flatmap(
    lambda w: st.tuples(st.just(w), st.lists(st.integers(0, (1 << w) - 1), min_size=1, max_size=6))))
def test_rref_rank_and_canonical(arg):
    width, rows = arg
    mat = _matrix(rows, width)
    red = rref_packed(mat)
    assert red.shape[0] == gf2_rank(rows)
    # same row space written differently gives the same key
    combo = [rows[0] ^ r for r in rows] + [rows[0]]
    assert subspace_key(_matrix(combo, width)) == subspace_key(mat)


@given(st.integers(1, 70).flatmap(
    lambda w: st.tuples(st.just(w), st.lists(st.integers(0, (1 << w) - 1), min_size=1, max_size=5),
                        st.integers(0, (1 << w) - 1), st.integers(0, (1 << w) - 1))))
def test_reduce_packed_coset_canonical(arg):
    width, rows, a, b = arg
    red = rref_packed(_matrix(rows, width))
    ra = reduce_packed(red, pack_vector(_matrix([a], width)[0])).tobytes()
    rb = reduce_packed(red, pack_vector(_matrix([b], width)[0])).tobytes()
    assert (ra == rb) == ((a ^ b) in gf2_span(rows))


def test_rref_rejects_vectors():
    with pytest.raises(ValueError):
        rref_packed(np.zeros(3, dtype=np.uint8))
