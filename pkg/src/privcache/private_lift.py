"""Turning a restricted-demand non-private scheme into a demand-private one.

Real user ``k`` draws a key ``S_k`` uniform on ``[0:N-1]`` and takes the
cache of virtual user ``(stack k, position S_k)``.  The server broadcasts
the inner payload for the shift vector ``S - D (mod N)`` together with that
vector.  Each shift is one-time padded by the key, and position ``S_k`` of
stack ``k`` requests ``S_k - (S_k - D_k) = D_k``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    Broadcast,
    CacheContent,
    FileSet,
    IntRange,
    Record,
    Scheme,
    Tape,
    TapeSpace,
    View,
    check_demands,
    subset_members,
    xor_all,
)
from .gf2 import SpanSolver
from .nonprivate import DrsScheme, DrsYma, StackLayout

__all__ = [
    "LiftedScheme",
    "Example1Inner",
    "example1_scheme",
    "scheme_a",
    "expanded_demand",
]


def expanded_demand(keys: Sequence[int], demands: Sequence[int], n_files: int) -> list[int]:
    """The ``N K`` virtual demand vector served for keys ``S`` and demands ``D``."""
    out = []
    for s, d in zip(keys, demands):
        c = (s - d) % n_files
        out.extend((p - c) % n_files for p in range(n_files))
    return out


class LiftedScheme(Scheme):
    """Private (N, K) scheme wrapping any restricted-demand inner scheme."""

    def __init__(self, inner: DrsScheme, name: str = "lifted"):
        self.inner = inner
        self.name = name
        self.n_files = inner.n_files
        self.n_users = inner.n_users
        self.file_bits = inner.file_bits
        self.memory = Fraction(inner.memory)
        self.rate = Fraction(inner.rate)
        self._space = TapeSpace(tuple((f"key{k}", IntRange(self.n_files))
                                      for k in range(self.n_users)))

    def params(self) -> dict:
        out = super().params()
        for attr in ("r",):
            if hasattr(self.inner, attr):
                out[attr] = getattr(self.inner, attr)
        return out

    def file_layout(self) -> list[tuple[str, int, int]]:
        return self.inner.file_layout()

    def tape_space(self) -> TapeSpace:
        return self._space

    def keys(self, tape: Tape) -> list[int]:
        return [tape[f"key{k}"] for k in range(self.n_users)]

    def shifts(self, tape: Tape, demands: Sequence[int]) -> list[int]:
        return [(s - d) % self.n_files for s, d in zip(self.keys(tape), demands)]

    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]:
        self.check_files(files)
        out = []
        for k, s in enumerate(self.keys(tape)):
            main = self.inner.virtual_cache(files, k, s)
            out.append(CacheContent(main, Record.of(("key", self.n_files, [s]))))
        return out

    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast:
        self.check_files(files)
        demands = check_demands(demands, self.n_files, self.n_users)
        shifts = self.shifts(tape, demands)
        payload = self.inner.encode(files, shifts)
        return Broadcast(payload, Record.of(("shift", self.n_files, shifts)))

    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray:
        try:
            key = cache.shared["key"][0]
            shifts = broadcast.aux["shift"]
        except KeyError as exc:
            raise ValueError(f"malformed cache or aux record: missing {exc}") from None
        if len(shifts) != self.n_users:
            raise ValueError("aux shift vector has the wrong length")
        if (key - shifts[user]) % self.n_files != demand:
            raise ValueError("aux shift does not match the user's key and demand")
        return self.inner.decode(user, key, shifts, cache.main, broadcast.payload)

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        # same content as the raw view, with the records packed compactly
        key = cache.shared["key"][0]
        disc = bytes([key, demand]) + bytes(broadcast.aux["shift"])
        return View(disc, np.concatenate([cache.main, broadcast.payload], axis=-1))

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]):
        # The view is (key, inner cache, shifts, inner payload, demand); given
        # (key, shifts) the linear map from files is fixed.
        key = tape[f"key{user}"]
        shifts = tuple(self.shifts(tape, demands))
        disc = bytes([key, demands[user]]) + bytes(shifts)
        return disc, (user, key, shifts)


# ---------------------------------------------------------------------------
# fixed N = 2, K = 2 inner scheme of the worked example

# symbols over the six segments (A1, A2, A3, B1, B2, B3) -> bits 0..5
_A = (1 << 0, 1 << 1, 1 << 2)
_B = (1 << 3, 1 << 4, 1 << 5)

_EX1_CACHE = {
    (0, 0): (_A[0] | _B[0],),
    (0, 1): (_A[2] | _B[2],),
    (1, 0): (_A[1] | _B[1],),
    (1, 1): (0b111111,),
}

_EX1_TX = {
    (0, 0): (_B[0], _B[1], _A[2], 0b000111),
    (0, 1): (_A[1], _A[2], _B[0], 0b111000),
    (1, 0): (_B[1], _B[2], _A[0], 0b000111),
    (1, 1): (_A[0], _A[1], _B[2], 0b111000),
}


class Example1Inner:
    """Restricted-demand scheme for 2 files and 4 virtual users at M = 1/3.

    Files are cut into three segments of ``l`` bits.  Cache and payload
    symbols are fixed XOR combinations of the six segments; decoding solves
    for the wanted segments inside the span of the user's symbols.
    """

    n_files = 2
    n_users = 2

    def __init__(self, seg_bits: int = 1):
        if seg_bits < 1:
            raise ValueError("segment length must be positive")
        self.seg_bits = seg_bits
        self.file_bits = 3 * seg_bits
        self.memory = Fraction(1, 3)
        self.rate = Fraction(4, 3)
        self.layout = StackLayout(2, 2)

    def file_layout(self) -> list[tuple[str, int, int]]:
        return [(f"seg{j + 1}", j * self.seg_bits, self.seg_bits) for j in range(3)]

    def _segments(self, files: FileSet) -> list[np.ndarray]:
        l = self.seg_bits
        return [files.bits[..., i, j * l:(j + 1) * l] for i in range(2) for j in range(3)]

    def _render(self, files: FileSet, symbols: Sequence[int]) -> np.ndarray:
        segs = self._segments(files)
        parts = [xor_all((segs[b] for b in subset_members(s)), like=segs[0]) for s in symbols]
        return np.concatenate(parts, axis=-1)

    def virtual_cache(self, files: FileSet, stack: int, pos: int) -> np.ndarray:
        return self._render(files, _EX1_CACHE[(stack, pos)])

    def encode(self, files: FileSet, shifts: Sequence[int]) -> np.ndarray:
        return self._render(files, _EX1_TX[tuple(shifts)])

    @staticmethod
    @lru_cache(maxsize=None)
    def _plan(stack: int, pos: int, shifts: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
        gens = _EX1_CACHE[(stack, pos)] + _EX1_TX[shifts]
        solver = SpanSolver(gens)
        want = (pos - shifts[stack]) % 2
        seg = _A if want == 0 else _B
        plan = []
        for target in seg:
            combo = solver.express(target)
            if combo is None:
                raise ValueError("segment not decodable from cache and payload")
            plan.append(subset_members(combo))
        return tuple(plan)

    def decode(self, stack: int, pos: int, shifts: Sequence[int], cache: np.ndarray,
               payload: np.ndarray) -> np.ndarray:
        l = self.seg_bits
        symbols = [cache[..., :l]] + [payload[..., j * l:(j + 1) * l] for j in range(4)]
        parts = [xor_all((symbols[g] for g in combo), like=symbols[0])
                 for combo in self._plan(stack, pos, tuple(shifts))]
        return np.concatenate(parts, axis=-1)


def example1_scheme(seg_bits: int = 1) -> LiftedScheme:
    """The private N = K = 2 scheme at (M, R) = (1/3, 4/3)."""
    return LiftedScheme(Example1Inner(seg_bits), name="example1")


def scheme_a(n_files: int, n_users: int, r: int, seg_bits: int = 1) -> LiftedScheme:
    """Lifted YMA-based scheme; files have ``C(NK-K+1, r) * seg_bits`` bits."""
    group_two = n_files * n_users - n_users + 1
    if not 0 <= r <= group_two:
        raise ValueError(f"r={r} outside [0:{group_two}]")
    inner = DrsYma(n_files, n_users, r, math.comb(group_two, r) * seg_bits)
    return LiftedScheme(inner, name="a")
