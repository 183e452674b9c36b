"""Non-private building blocks: the leader-based YMA scheme and the
restricted-demand-subset scheme for ``N K`` virtual users built on it.

A restricted-demand (RS) scheme serves ``N K`` virtual users arranged in
``K`` stacks of ``N``.  Its admissible demand vectors are described by one
cyclic shift per stack: position ``p`` of stack ``i`` asks for file
``(p - c_i) mod N``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

from .core import FileSet, subset_mask, subset_members, subsets_of_size, xor_all
from .gf2 import SpanSolver

__all__ = [
    "Yma",
    "StackLayout",
    "DrsScheme",
    "DrsYma",
    "shifted_demands",
    "yma_rate",
]


def yma_rate(n_files: int, n_users: int, r: int, distinct: int | None = None) -> Fraction:
    """Normalised YMA delivery load with ``distinct`` requested files."""
    d = min(n_files, n_users) if distinct is None else distinct
    return Fraction(math.comb(n_users, r + 1) - math.comb(n_users - d, r + 1),
                    math.comb(n_users, r))


class Yma:
    """YMA placement/delivery for ``n_files`` files and ``n_users`` users.

    Each file is split into ``C(n_users, r)`` subfiles ``W_{i,R}`` with
    ``|R| = r``, laid out in colex order of ``R``.
    """

    def __init__(self, n_files: int, n_users: int, r: int, file_bits: int):
        if not 0 <= r <= n_users:
            raise ValueError(f"r={r} outside [0:{n_users}]")
        count = math.comb(n_users, r)
        if file_bits % count:
            raise ValueError(f"file size {file_bits} not divisible by C({n_users},{r})={count}")
        self.n_files = n_files
        self.n_users = n_users
        self.r = r
        self.file_bits = file_bits
        self.sub_len = file_bits // count
        self.subsets = subsets_of_size(n_users, r)
        self.index = {mask: i for i, mask in enumerate(self.subsets)}

    # layout -------------------------------------------------------------

    def subfile(self, files: FileSet, i: int, mask: int) -> np.ndarray:
        k = self.index[mask]
        return files.bits[..., i, k * self.sub_len:(k + 1) * self.sub_len]

    def file_layout(self) -> list[tuple[str, int, int]]:
        return [(f"W[{','.join(map(str, subset_members(m)))}]", k * self.sub_len, self.sub_len)
                for k, m in enumerate(self.subsets)]

    def cached_subsets(self, user: int) -> list[int]:
        return [m for m in self.subsets if m >> user & 1]

    # placement ----------------------------------------------------------

    def cache_slots(self, user: int) -> dict[tuple[int, int], int]:
        """(file, subset) -> slot index in the user's cache."""
        out = {}
        for j in range(self.n_files):
            for m in self.cached_subsets(user):
                out[(j, m)] = len(out)
        return out

    def setup(self, files: FileSet) -> list[np.ndarray]:
        caches = []
        for u in range(self.n_users):
            parts = [self.subfile(files, j, m)
                     for j in range(self.n_files) for m in self.cached_subsets(u)]
            caches.append(np.concatenate(parts, axis=-1) if parts
                          else np.zeros(files.batch + (0,), dtype=files.bits.dtype))
        return caches

    # delivery -----------------------------------------------------------

    def _check_leaders(self, demands: Sequence[int], leaders: int) -> None:
        members = subset_members(leaders)
        wanted = {demands[u] for u in members}
        if len(wanted) != len(members) or wanted != set(demands):
            raise ValueError("leaders must hold exactly one user per distinct demanded file")

    def transmitted(self, leaders: int) -> list[int]:
        return [m for m in subsets_of_size(self.n_users, self.r + 1) if m & leaders]

    def symbol(self, files: FileSet, demands: Sequence[int], mask: int) -> np.ndarray:
        """Y_R = XOR over u in R of W_{d_u, R minus u}."""
        return xor_all(self.subfile(files, demands[u], mask & ~(1 << u))
                       for u in subset_members(mask))

    def deliver(self, files: FileSet, demands: Sequence[int], leaders: int) -> np.ndarray:
        self._check_leaders(demands, leaders)
        parts = [self.symbol(files, demands, m) for m in self.transmitted(leaders)]
        if not parts:
            return np.zeros(files.batch + (0,), dtype=files.bits.dtype)
        return np.concatenate(parts, axis=-1)

    def payload_symbol(self, payload: np.ndarray, leaders: int, mask: int) -> np.ndarray:
        k = self._tx_index(leaders)[mask]
        return payload[..., k * self.sub_len:(k + 1) * self.sub_len]

    @lru_cache(maxsize=None)
    def _tx_index(self, leaders: int) -> dict[int, int]:
        return {m: k for k, m in enumerate(self.transmitted(leaders))}

    def _definition(self, demands: tuple[int, ...], mask: int) -> int:
        size = len(self.subsets)
        vec = 0
        for u in subset_members(mask):
            vec |= 1 << (demands[u] * size + self.index[mask & ~(1 << u)])
        return vec

    @lru_cache(maxsize=4096)
    def _solver(self, demands: tuple[int, ...], leaders: int) -> SpanSolver:
        return SpanSolver([self._definition(demands, m) for m in self.transmitted(leaders)])

    def recover_missing(self, payload: np.ndarray, demands: Sequence[int], leaders: int,
                        target: int) -> np.ndarray:
        """Y_target from the transmitted symbols (GF(2) elimination on definitions)."""
        demands = tuple(demands)
        if bin(target).count("1") != self.r + 1:
            raise ValueError("target size must be r+1")
        if target & leaders:
            return self.payload_symbol(payload, leaders, target)
        combo = self._solver(demands, leaders).express(self._definition(demands, target))
        if combo is None:
            raise ValueError("target symbol is outside the transmitted span")
        tx = self.transmitted(leaders)
        return xor_all((self.payload_symbol(payload, leaders, tx[k]) for k in subset_members(combo)),
                       like=payload[..., :self.sub_len])

    def any_symbol(self, payload: np.ndarray, demands: Sequence[int], leaders: int,
                   mask: int) -> np.ndarray:
        if mask & leaders:
            return self.payload_symbol(payload, leaders, mask)
        return self.recover_missing(payload, demands, leaders, mask)

    def decode(self, user: int, cache: np.ndarray, payload: np.ndarray,
               demands: Sequence[int], leaders: int) -> np.ndarray:
        demands = tuple(demands)
        slots = self.cache_slots(user)
        L = self.sub_len

        def cached(j: int, m: int) -> np.ndarray:
            k = slots[(j, m)]
            return cache[..., k * L:(k + 1) * L]

        want = demands[user]
        parts = []
        for mask in self.subsets:
            if mask >> user & 1:
                parts.append(cached(want, mask))
                continue
            up = mask | (1 << user)
            y = self.any_symbol(payload, demands, leaders, up)
            others = [cached(demands[u], up & ~(1 << u)) for u in subset_members(mask)]
            parts.append(xor_all([y] + others))
        return np.concatenate(parts, axis=-1)


def shifted_demands(n_files: int, shifts: Sequence[int]) -> list[list[int]]:
    """Per-stack demands: position p of stack i requests (p - c_i) mod N."""
    return [[(p - c) % n_files for p in range(n_files)] for c in shifts]


class StackLayout:
    """Users of the RS construction for (N, K) split into two groups.

    Group two has ``N K - K + 1`` members ``u_0..``; group one has ``K - 1``
    members ``u'_1..u'_{K-1}``.  Stack 0 is ``u_0..u_{N-1}``; stack ``i >= 1``
    holds ``u_j`` for ``i(N-1)+1 <= j <= (i+1)(N-1)`` at positions
    ``0..N-2`` followed by ``u'_i`` at position ``N-1``.
    """

    def __init__(self, n_files: int, n_users: int):
        if n_files < 1 or n_users < 1:
            raise ValueError("need N >= 1 and K >= 1")
        self.N = n_files
        self.K = n_users
        self.group_two = n_files * n_users - n_users + 1

    def member(self, stack: int, pos: int) -> tuple[str, int]:
        N = self.N
        if not 0 <= stack < self.K or not 0 <= pos < N:
            raise ValueError(f"no virtual user at stack {stack}, position {pos}")
        if stack == 0:
            return ("two", pos)
        if pos == N - 1:
            return ("one", stack)
        return ("two", stack * (N - 1) + 1 + pos)

    def stack(self, i: int) -> list[tuple[str, int]]:
        return [self.member(i, p) for p in range(self.N)]

    def index_set(self, i: int) -> int:
        """Bitmask of group-two members of stack i."""
        return subset_mask(j for kind, j in self.stack(i) if kind == "two")

    def v_set(self, i: int) -> int:
        return self.index_set(0) | self.index_set(i)

    def group_two_demands(self, shifts: Sequence[int]) -> tuple[int, ...]:
        d = [0] * self.group_two
        per_stack = shifted_demands(self.N, shifts)
        for i in range(self.K):
            for p, (kind, j) in enumerate(self.stack(i)):
                if kind == "two":
                    d[j] = per_stack[i][p]
        return tuple(d)

    def demand_of(self, stack: int, pos: int, shifts: Sequence[int]) -> int:
        return (pos - shifts[stack]) % self.N


class DrsScheme(Protocol):
    """Interface of an RS non-private scheme, consumed by the private lift."""

    n_files: int
    n_users: int
    file_bits: int
    memory: Fraction
    rate: Fraction

    def virtual_cache(self, files: FileSet, stack: int, pos: int) -> np.ndarray: ...

    def encode(self, files: FileSet, shifts: Sequence[int]) -> np.ndarray: ...

    def decode(self, stack: int, pos: int, shifts: Sequence[int], cache: np.ndarray,
               payload: np.ndarray) -> np.ndarray: ...

    def file_layout(self) -> list[tuple[str, int, int]]: ...


class DrsYma:
    """RS scheme for (N, N K) virtual users from YMA on the group-two users.

    Group-two users keep their YMA caches.  Group-one user ``u'_i`` caches
    the coded symbols ``Z^j_{i,S}`` for every ``(r-1)``-subset ``S`` of
    group two that avoids ``u_0``; the delivery is the YMA delivery for group
    two with stack 0 as leaders.
    """

    def __init__(self, n_files: int, n_users: int, r: int, file_bits: int):
        self.layout = StackLayout(n_files, n_users)
        self.n_files = n_files
        self.n_users = n_users
        self.r = r
        self.file_bits = file_bits
        self.yma = Yma(n_files, self.layout.group_two, r, file_bits)
        self.leaders = self.layout.index_set(0)
        kt = self.layout.group_two
        self.memory = Fraction(n_files * r, kt)
        self.rate = yma_rate(n_files, kt, r, distinct=n_files)
        self.coded_subsets = [m for m in subsets_of_size(kt, r - 1) if not m & 1] if r >= 1 else []
        self._coded_index = {m: k for k, m in enumerate(self.coded_subsets)}

    @property
    def sub_len(self) -> int:
        return self.yma.sub_len

    def file_layout(self) -> list[tuple[str, int, int]]:
        return self.yma.file_layout()

    # coded symbols ------------------------------------------------------

    def coded_symbol(self, files: FileSet, i: int, j: int, mask: int) -> np.ndarray:
        """Z^j_{i,S} = XOR over u in V_i minus S of W_{j, S + u}."""
        v = self.layout.v_set(i)
        return xor_all((self.yma.subfile(files, j, mask | (1 << u))
                        for u in subset_members(v & ~mask)),
                       like=files.bits[..., 0, :self.sub_len])

    def group_one_cache(self, files: FileSet, i: int) -> np.ndarray:
        parts = [self.coded_symbol(files, i, j, m)
                 for j in range(self.n_files) for m in self.coded_subsets]
        if not parts:
            return np.zeros(files.batch + (0,), dtype=files.bits.dtype)
        return np.concatenate(parts, axis=-1)

    def setup(self, files: FileSet) -> list[np.ndarray]:
        """Caches of all N K virtual users, indexed by ``stack * N + pos``."""
        two = self.yma.setup(files)
        out = []
        for s in range(self.n_users):
            for p in range(self.n_files):
                kind, j = self.layout.member(s, p)
                out.append(two[j] if kind == "two" else self.group_one_cache(files, j))
        return out

    def virtual_cache(self, files: FileSet, stack: int, pos: int) -> np.ndarray:
        kind, j = self.layout.member(stack, pos)
        if kind == "two":
            return self.yma.setup(files)[j]
        return self.group_one_cache(files, j)

    def cached_coded(self, cache: np.ndarray, j: int, mask: int) -> np.ndarray:
        k = j * len(self.coded_subsets) + self._coded_index[mask]
        return cache[..., k * self.sub_len:(k + 1) * self.sub_len]

    def recover_cached(self, cache: np.ndarray, i: int, mask: int, j: int) -> np.ndarray:
        """Z^j_{i,S} for S containing u_0, rebuilt from cached symbols only."""
        if not mask & 1:
            raise ValueError("subset without u_0 is stored directly")
        if bin(mask).count("1") != self.r - 1:
            raise ValueError("subset must have r-1 members")
        rest = mask & ~1
        v = self.layout.v_set(i)
        return xor_all((self.cached_coded(cache, j, rest | (1 << t))
                        for t in subset_members(v & ~mask)),
                       like=cache[..., :self.sub_len])

    def coded(self, cache: np.ndarray, i: int, j: int, mask: int) -> np.ndarray:
        if mask & 1:
            return self.recover_cached(cache, i, mask, j)
        return self.cached_coded(cache, j, mask)

    # delivery / decoding ---------------------------------------------------

    def encode(self, files: FileSet, shifts: Sequence[int]) -> np.ndarray:
        demands = self.layout.group_two_demands(shifts)
        return self.yma.deliver(files, demands, self.leaders)

    def decode(self, stack: int, pos: int, shifts: Sequence[int], cache: np.ndarray,
               payload: np.ndarray) -> np.ndarray:
        kind, j = self.layout.member(stack, pos)
        demands = self.layout.group_two_demands(shifts)
        if kind == "two":
            return self.yma.decode(j, cache, payload, demands, self.leaders)
        i = j
        v = self.layout.v_set(i)
        parts = []
        for mask in self.yma.subsets:
            terms = [self.coded(cache, i, demands[u], mask & ~(1 << u))
                     for u in subset_members(mask)]
            terms += [self.yma.any_symbol(payload, demands, self.leaders, mask | (1 << u))
                      for u in subset_members(v & ~mask)]
            parts.append(xor_all(terms, like=payload[..., :self.sub_len]))
        return np.concatenate(parts, axis=-1)
