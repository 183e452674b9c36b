"""GF(2) linear algebra on Python-int bitsets and packed numpy rows."""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = ["SpanSolver", "rank", "rref_packed", "subspace_key", "pack_vector", "reduce_packed"]


class SpanSolver:
    """Express vectors as XOR combinations of a fixed list of generators.

    Generators and targets are Python ints used as bitsets.  ``express``
    returns a bitset over generator indices, or ``None`` when the target is
    outside the span.
    """

    def __init__(self, generators: Sequence[int]):
        self._pivots: dict[int, tuple[int, int]] = {}
        for i, g in enumerate(generators):
            vec, combo = g, 1 << i
            while vec:
                top = vec.bit_length() - 1
                hit = self._pivots.get(top)
                if hit is None:
                    self._pivots[top] = (vec, combo)
                    break
                vec ^= hit[0]
                combo ^= hit[1]
        self.rank = len(self._pivots)

    def express(self, target: int) -> int | None:
        vec, combo = target, 0
        while vec:
            top = vec.bit_length() - 1
            hit = self._pivots.get(top)
            if hit is None:
                return None
            vec ^= hit[0]
            combo ^= hit[1]
        return combo


def rank(rows: Sequence[int]) -> int:
    return SpanSolver(rows).rank


def _pack_rows(matrix: np.ndarray) -> tuple[np.ndarray, int]:
    m, n = matrix.shape
    packed = np.packbits(matrix.astype(np.uint8), axis=1)
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.hstack([packed, np.zeros((m, pad), dtype=np.uint8)])
    words = packed.view(">u8").astype(np.uint64)
    return words, n


def rref_packed(matrix: np.ndarray) -> np.ndarray:
    """Reduced row echelon form of a 0/1 matrix, rows packed into uint64 words.

    The result has one row per pivot and is unique for the row space, so
    its bytes identify the subspace.
    """
    if matrix.ndim != 2:
        raise ValueError("expected a 2-D 0/1 matrix")
    words, n = _pack_rows(matrix)
    m = words.shape[0]
    r = 0
    one = np.uint64(1)
    for c in range(n):
        if r == m:
            break
        w, b = divmod(c, 64)
        shift = np.uint64(63 - b)
        col = (words[r:, w] >> shift) & one
        nz = np.flatnonzero(col)
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
        hit = ((words[:, w] >> shift) & one).astype(bool)
        hit[r] = False
        if hit.any():
            words[hit] ^= words[r]
        r += 1
    return words[:r].copy()


def subspace_key(matrix: np.ndarray) -> bytes:
    """Canonical bytes for the row space of a 0/1 matrix."""
    red = rref_packed(matrix)
    return int(matrix.shape[1]).to_bytes(4, "big") + red.astype(">u8").tobytes()


def pack_vector(bits: np.ndarray) -> np.ndarray:
    """One 0/1 vector as big-endian uint64 words, zero padded."""
    words, _ = _pack_rows(np.asarray(bits, dtype=np.uint8).reshape(1, -1))
    return words[0]


def reduce_packed(rref: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Canonical representative of ``vector`` modulo the row space of ``rref``.

    ``rref`` must come from :func:`rref_packed` and ``vector`` from
    :func:`pack_vector` on the same width.  Pivot bits are cleared, so two
    vectors get the same result exactly when they lie in the same coset.
    """
    out = vector.copy()
    one = np.uint64(1)
    for row in rref:
        w = int(np.flatnonzero(row)[0])
        top = int(row[w]).bit_length() - 1
        if (out[w] >> np.uint64(top)) & one:
            out ^= row
    return out
