"""GF(2^8) arithmetic and a systematic Reed-Solomon erasure code.

Field elements are bytes; the field is built from the primitive polynomial
x^8 + x^4 + x^3 + x^2 + 1 (0x11D).  Code symbols are byte arrays, so one
code "symbol" of ``b`` bytes is ``b`` parallel codewords.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = ["EXP", "LOG", "MUL", "gf_mul", "gf_inv", "lagrange_matrix", "ReedSolomon"]

PRIMITIVE = 0x11D


def _tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE
    exp[255:510] = exp[:255]
    return exp, log


EXP, LOG = _tables()


def _mul_table() -> np.ndarray:
    a = np.arange(256)
    table = EXP[(LOG[a][:, None] + LOG[a][None, :]) % 255].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    return table


MUL = _mul_table()


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(EXP[(255 - LOG[a]) % 255])


def lagrange_matrix(src: Sequence[int], dst: Sequence[int]) -> np.ndarray:
    """Matrix sending values at points ``src`` to values at points ``dst``.

    Entry (a, b) is the Lagrange basis polynomial of ``src[b]`` evaluated at
    ``dst[a]``, for the unique polynomial of degree < len(src).
    """
    if len(set(src)) != len(src):
        raise ValueError("interpolation points must be distinct")
    out = np.zeros((len(dst), len(src)), dtype=np.uint8)
    for a, x in enumerate(dst):
        for b, xb in enumerate(src):
            num, den = 1, 1
            for c, xc in enumerate(src):
                if c == b:
                    continue
                num = gf_mul(num, x ^ xc)
                den = gf_mul(den, xb ^ xc)
            out[a, b] = gf_mul(num, gf_inv(den))
    return out


def _apply(matrix: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    """GF(256) product over the second-to-last axis of ``symbols``."""
    rows = []
    for row in matrix:
        acc = np.zeros(symbols.shape[:-2] + symbols.shape[-1:], dtype=np.uint8)
        for c, s in zip(row, np.moveaxis(symbols, -2, 0)):
            if c:
                acc ^= MUL[c][s]
        rows.append(acc)
    return np.stack(rows, axis=-2)


class ReedSolomon:
    """Systematic (n, k) evaluation code at the points 0, 1, ..., n-1.

    Code position ``i`` holds the message polynomial evaluated at ``i``; the
    first ``k`` positions are the message itself.
    """

    def __init__(self, n: int, k: int):
        if not 1 <= k <= n <= 256:
            raise ValueError(f"need 1 <= k <= n <= 256, got n={n}, k={k}")
        self.n = n
        self.k = k
        self.parity = lagrange_matrix(range(k), range(k, n))

    def encode(self, message: np.ndarray) -> np.ndarray:
        """``message`` has shape (..., k, b); returns (..., n, b)."""
        message = np.asarray(message, dtype=np.uint8)
        if message.shape[-2] != self.k:
            raise ValueError(f"expected {self.k} message symbols, got {message.shape[-2]}")
        if self.n == self.k:
            return message.copy()
        return np.concatenate([message, _apply(self.parity, message)], axis=-2)

    @lru_cache(maxsize=None)
    def _decoder(self, positions: tuple[int, ...]) -> np.ndarray:
        return lagrange_matrix(positions, range(self.k))

    def decode(self, symbols: np.ndarray, positions: Sequence[int]) -> np.ndarray:
        """Recover the message from ``k`` code symbols at distinct positions."""
        positions = tuple(int(p) for p in positions)
        if len(positions) < self.k:
            raise ValueError(f"need {self.k} symbols, got {len(positions)}")
        if len(set(positions)) != len(positions) or not all(0 <= p < self.n for p in positions):
            raise ValueError("positions must be distinct code positions")
        positions = positions[:self.k]
        symbols = np.asarray(symbols, dtype=np.uint8)[..., :self.k, :]
        return _apply(self._decoder(positions), symbols)
