"""Two-user private schemes at the corners of the exact trade-off.

``SchemeD`` reaches (N/3, 1): each user holds one third of every file in a
secret order, and the three payload symbols are shuffled.  ``SchemeE``
reaches (N^2/(2N-1), (N-1)/(2N-1)) with a (3N-2, 2N-1) Reed-Solomon code:
each user holds N shuffled code symbols of every file and fetches N-1 more
from the payload.

The ``*_tuple_*`` functions enumerate the small position statistics that
the privacy arguments rest on.
"""

from __future__ import annotations

import itertools
import math
import struct
from collections import Counter
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    BIT,
    Broadcast,
    CacheContent,
    Choice,
    FileSet,
    IntRange,
    IntVector,
    Permutation,
    Permutations,
    Record,
    Scheme,
    Tape,
    TapeSpace,
    View,
    check_demands,
)
from .gf256 import ReedSolomon

__all__ = [
    "ReedSolomon",
    "SchemeD",
    "SchemeE",
    "scheme_d_tuple_counts",
    "scheme_d_slot_counts",
    "scheme_e_position_counts",
    "scheme_e_helper_counts",
    "expected_position_probability",
]


def _check_two_users(n_files: int, n_users: int) -> None:
    if n_users != 2:
        raise ValueError("this construction is for exactly two users")
    if n_files < 2:
        raise ValueError("needs at least two files")


# ---------------------------------------------------------------------------
# Scheme D


def _d_slots(demands: Sequence[int], order: Permutation) -> tuple[int, int, int, int]:
    """(coded slot, plain slot) for user 0 then user 1."""
    if demands[0] != demands[1]:
        return order(0), order(1), order(0), order(2)
    return order(0), order(1), order(2), order(1)


def _d_partner(demands: Sequence[int], user: int, n_files: int) -> int:
    """File whose cached third cancels the coded payload symbol for ``user``."""
    if demands[0] != demands[1]:
        return demands[1 - user]
    return (demands[0] + 1) % n_files


class SchemeD(Scheme):
    """Rate 1 at memory N/3 for two users; files have ``3 * seg_bits`` bits."""

    def __init__(self, n_files: int, seg_bits: int = 1):
        _check_two_users(n_files, 2)
        if seg_bits < 1:
            raise ValueError("segment length must be positive")
        self.name = "d"
        self.n_files = n_files
        self.n_users = 2
        self.seg_bits = seg_bits
        self.file_bits = 3 * seg_bits
        self.memory = Fraction(n_files, 3)
        self.rate = Fraction(1)
        N = n_files
        self._space = TapeSpace((
            ("perm0", Permutations(N)),
            ("perm1", Permutations(N)),
            ("perm2", Permutations(3)),
            ("spad0", IntVector(N, 2)),
            ("spad1", IntVector(N, 2)),
            ("ppad0", IntVector(3, 2)),
            ("ppad1", IntVector(3, 2)),
        ))

    def tape_space(self) -> TapeSpace:
        return self._space

    def file_layout(self) -> list[tuple[str, int, int]]:
        l = self.seg_bits
        return [(f"part{j}", j * l, l) for j in range(3)]

    def part(self, files: FileSet, i: int, j: int) -> np.ndarray:
        l = self.seg_bits
        return files.bits[..., i, j * l:(j + 1) * l]

    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]:
        self.check_files(files)
        out = []
        for k in range(2):
            perm: Permutation = tape[f"perm{k}"]
            parts = perm.apply([self.part(files, i, k) for i in range(self.n_files)])
            shared = Record.of(("spad", self.n_files, tape[f"spad{k}"]),
                               ("ppad", 3, tape[f"ppad{k}"]))
            out.append(CacheContent(np.concatenate(parts, axis=-1), shared))
        return out

    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast:
        self.check_files(files)
        d0, d1 = check_demands(demands, self.n_files, 2)
        W = lambda i, j: self.part(files, i, j)  # noqa: E731
        if d0 != d1:
            plain = [W(d0, 1) ^ W(d1, 0), W(d0, 2), W(d1, 2)]
        else:
            m = (d0 + 1) % self.n_files
            plain = [W(d0, 1) ^ W(m, 0), W(d0, 2), W(d0, 0) ^ W(m, 1)]
        order: Permutation = tape["perm2"]
        payload = np.concatenate(order.apply(plain), axis=-1)
        slots = _d_slots((d0, d1), order)
        N = self.n_files
        j1, j2, j3 = [], [], []
        for k in range(2):
            perm: Permutation = tape[f"perm{k}"]
            spad, ppad = tape[f"spad{k}"], tape[f"ppad{k}"]
            j1.append((spad[0] + perm((d0, d1)[k])) % N)
            j2.extend([(ppad[0] + slots[2 * k]) % 3, (ppad[1] + slots[2 * k + 1]) % 3])
            j3.append((spad[1] + perm(_d_partner((d0, d1), k, N))) % N)
        aux = Record.of(("j1", N, j1), ("j2", 3, j2), ("j3", N, j3))
        return Broadcast(payload, aux)

    def _positions(self, user: int, cache: CacheContent, broadcast: Broadcast):
        try:
            spad, ppad = cache.shared["spad"], cache.shared["ppad"]
            j1, j2, j3 = broadcast.aux["j1"], broadcast.aux["j2"], broadcast.aux["j3"]
        except KeyError as exc:
            raise ValueError(f"malformed cache or aux record: missing {exc}") from None
        N = self.n_files
        own = (j1[user] - spad[0]) % N
        partner = (j3[user] - spad[1]) % N
        coded = (j2[2 * user] - ppad[0]) % 3
        plain = (j2[2 * user + 1] - ppad[1]) % 3
        return own, partner, coded, plain

    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray:
        l = self.seg_bits
        own, partner, coded, plain = self._positions(user, cache, broadcast)
        Z = lambda p: cache.main[..., p * l:(p + 1) * l]  # noqa: E731
        X = lambda p: broadcast.payload[..., p * l:(p + 1) * l]  # noqa: E731
        parts = [None, None, X(plain)]
        parts[user] = Z(own)
        parts[1 - user] = X(coded) ^ Z(partner)
        return np.concatenate(parts, axis=-1)

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        # Known cache slots and payload slots first; the four positions
        # are uniform and independent of the rearranged contents.
        l = self.seg_bits
        own, partner, coded, plain = self._positions(user, cache, broadcast)
        cache_order = [own, partner] + [p for p in range(self.n_files) if p not in (own, partner)]
        pay_order = [coded, plain] + [p for p in range(3) if p not in (coded, plain)]
        parts = [cache.main[..., p * l:(p + 1) * l] for p in cache_order]
        parts += [broadcast.payload[..., p * l:(p + 1) * l] for p in pay_order]
        return View(struct.pack(">I", demand), np.concatenate(parts, axis=-1))

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]):
        perm: Permutation = tape[f"perm{user}"]
        partner = _d_partner(demands, user, self.n_files)
        rest = sorted((perm(i), i) for i in range(self.n_files) if i not in (demands[user], partner))
        key = (user, tuple(demands), tuple(i for _, i in rest))
        return struct.pack(">I", demands[user]), key


def scheme_d_tuple_counts(n_files: int, user: int, demands: Sequence[int]) -> Counter:
    """Counts of (own cache slot, coded slot, plain slot, partner cache slot)
    over every pair of permutations (perm_user, perm2)."""
    out: Counter = Counter()
    partner = _d_partner(demands, user, n_files)
    for p in itertools.permutations(range(n_files)):
        for q in itertools.permutations(range(3)):
            slots = _d_slots(demands, Permutation(q))
            out[(p[demands[user]], slots[2 * user], slots[2 * user + 1], p[partner])] += 1
    return out


def scheme_d_slot_counts(user: int, demands: Sequence[int]) -> Counter:
    """Counts of (coded slot, plain slot) over the payload permutation."""
    out: Counter = Counter()
    for q in itertools.permutations(range(3)):
        slots = _d_slots(demands, Permutation(q))
        out[(slots[2 * user], slots[2 * user + 1])] += 1
    return out


# ---------------------------------------------------------------------------
# Scheme E


def _e_helper(demands: Sequence[int], user: int, n_files: int, j: int) -> int:
    """Cache entry index (N i + j') whose symbol cancels payload symbol j-1."""
    if demands[0] != demands[1]:
        return n_files * demands[1 - user] + j
    return n_files * ((demands[0] + j) % n_files)


def _e_third(demands: Sequence[int], user: int, pair: tuple[int, int]) -> int:
    """Symbol class the user fetches from the payload."""
    if demands[0] != demands[1]:
        return pair[1 - user]
    return 3 - pair[0] - pair[1]


class SchemeE(Scheme):
    """Two users at (N^2/(2N-1), (N-1)/(2N-1)) via a (3N-2, 2N-1) RS code.

    Files have ``8 * sym_bytes * (2N-1)`` bits.
    """

    def __init__(self, n_files: int, sym_bytes: int = 1):
        _check_two_users(n_files, 2)
        if 3 * n_files - 2 > 256:
            raise ValueError("code length 3N-2 exceeds the field size")
        if sym_bytes < 1:
            raise ValueError("symbol size must be positive")
        N = n_files
        self.name = "e"
        self.class_key_ordered = False
        self.n_files = N
        self.n_users = 2
        self.sym_bytes = sym_bytes
        self.k = 2 * N - 1
        self.code = ReedSolomon(3 * N - 2, self.k)
        self.sym_bits = 8 * sym_bytes
        self.file_bits = self.sym_bits * self.k
        self.memory = Fraction(N * N, 2 * N - 1)
        self.rate = Fraction(N - 1, 2 * N - 1)
        pairs = tuple((a, b) for a in range(3) for b in range(3) if a != b)
        self._space = TapeSpace((
            ("classes", Choice(pairs)),
            ("perm0", Permutations(N * N)),
            ("perm1", Permutations(N * N)),
            ("spad0", IntVector(N * N, 2 * N - 1)),
            ("spad1", IntVector(N * N, 2 * N - 1)),
            ("ppad0", IntRange(3)),
            ("ppad1", IntRange(3)),
        ))

    def tape_space(self) -> TapeSpace:
        return self._space

    def file_layout(self) -> list[tuple[str, int, int]]:
        b = self.sym_bits
        return [(f"msg{j}", j * b, b) for j in range(self.k)]

    def position(self, cls: int, t: int) -> int:
        """Code position of symbol ``t`` in class ``cls`` (t in [1:N-1])."""
        return 1 + cls * (self.n_files - 1) + (t - 1)

    def entry_position(self, cls: int, entry: int) -> int:
        """Code position of entry ``j'`` of a file's block in the tuple for ``cls``."""
        return 0 if entry == 0 else self.position(cls, entry)

    def codewords(self, files: FileSet) -> np.ndarray:
        """(..., N, 3N-2, 8b) code bits of every file."""
        packed = np.packbits(files.bits, axis=-1)
        msg = packed.reshape(packed.shape[:-1] + (self.k, self.sym_bytes))
        code = self.code.encode(msg)
        return np.unpackbits(code, axis=-1)

    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]:
        self.check_files(files)
        code = self.codewords(files)
        N = self.n_files
        pair = tape["classes"]
        out = []
        for k in range(2):
            cls = pair[k]
            entries = [code[..., i, self.entry_position(cls, j), :] for i in range(N) for j in range(N)]
            perm: Permutation = tape[f"perm{k}"]
            shared = Record.of(("class", 3, [cls]), ("spad", N * N, tape[f"spad{k}"]),
                               ("ppad", 3, [tape[f"ppad{k}"]]))
            out.append(CacheContent(np.concatenate(perm.apply(entries), axis=-1), shared))
        return out

    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast:
        self.check_files(files)
        d0, d1 = check_demands(demands, self.n_files, 2)
        code = self.codewords(files)
        N = self.n_files
        u0, u1 = pair = tape["classes"]
        C = lambda i, p: code[..., i, p, :]  # noqa: E731
        if d0 != d1:
            parts = [C(d0, self.position(u1, t)) ^ C(d1, self.position(u0, t)) for t in range(1, N)]
        else:
            v = 3 - u0 - u1
            parts = [C(d0, self.position(v, t)) ^ C((d0 + t) % N, 0) for t in range(1, N)]
        if parts:
            payload = np.concatenate(parts, axis=-1)
        else:
            payload = np.zeros(files.batch + (0,), dtype=BIT)
        j1, j2, j3 = [], [], []
        for k in range(2):
            perm: Permutation = tape[f"perm{k}"]
            spad = tape[f"spad{k}"]
            dk = (d0, d1)[k]
            j1.extend((spad[j] + perm(N * dk + j)) % (N * N) for j in range(N))
            j2.extend((spad[N + j - 1] + perm(_e_helper((d0, d1), k, N, j))) % (N * N)
                      for j in range(1, N))
            j3.append((tape[f"ppad{k}"] + _e_third((d0, d1), k, pair)) % 3)
        aux = Record.of(("j1", N * N, j1), ("j2", N * N, j2), ("j3", 3, j3))
        return Broadcast(payload, aux)

    def _positions(self, user: int, cache: CacheContent, broadcast: Broadcast):
        N = self.n_files
        try:
            spad, ppad = cache.shared["spad"], cache.shared["ppad"][0]
            cls = cache.shared["class"][0]
            j1, j2, j3 = broadcast.aux["j1"], broadcast.aux["j2"], broadcast.aux["j3"]
        except KeyError as exc:
            raise ValueError(f"malformed cache or aux record: missing {exc}") from None
        n2 = N * N
        own = [(j1[user * N + j] - spad[j]) % n2 for j in range(N)]
        helper = [(j2[user * (N - 1) + j - 1] - spad[N + j - 1]) % n2 for j in range(1, N)]
        third = (j3[user] - ppad) % 3
        return cls, own, helper, third

    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray:
        N, b = self.n_files, self.sym_bits
        cls, own, helper, third = self._positions(user, cache, broadcast)
        if third == cls:
            raise ValueError("payload class coincides with the cached class")
        Z = lambda p: cache.main[..., p * b:(p + 1) * b]  # noqa: E731
        X = lambda p: broadcast.payload[..., p * b:(p + 1) * b]  # noqa: E731
        symbols = [Z(p) for p in own]
        where = [self.entry_position(cls, j) for j in range(N)]
        for t in range(1, N):
            symbols.append(X(t - 1) ^ Z(helper[t - 1]))
            where.append(self.position(third, t))
        stacked = np.packbits(np.stack(symbols, axis=-2), axis=-1)
        msg = self.code.decode(stacked, where)
        bits = np.unpackbits(msg, axis=-1)
        return bits.reshape(bits.shape[:-2] + (self.file_bits,))

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        # Known cache slots first; the 2N-1 positions are uniform over
        # distinct tuples and independent of the rearranged contents.
        b = self.sym_bits
        cls, own, helper, third = self._positions(user, cache, broadcast)
        known = own + helper
        taken = set(known)
        order = known + [p for p in range(self.n_files ** 2) if p not in taken]
        parts = [cache.main[..., p * b:(p + 1) * b] for p in order] + [broadcast.payload]
        disc = struct.pack(">III", demand, cls, third)
        return View(disc, np.concatenate(parts, axis=-1))

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]):
        # unordered key: the leftover cache entries are fixed by the demands,
        # only their order depends on the user's permutation
        pair = tape["classes"]
        third = _e_third(demands, user, pair)
        disc = struct.pack(">III", demands[user], pair[user], third)
        return disc, (user, tuple(demands), pair)


def scheme_e_position_counts(n_files: int, user: int, demands: Sequence[int]) -> Counter:
    """Counts of the 2N-1 cache positions the user learns, over every perm_user."""
    N = n_files
    idx = [N * demands[user] + j for j in range(N)]
    idx += [_e_helper(demands, user, N, j) for j in range(1, N)]
    perms = np.array(list(itertools.permutations(range(N * N))), dtype=np.uint8)
    chosen = perms[:, idx]
    keys, counts = np.unique(chosen, axis=0, return_counts=True)
    return Counter({tuple(int(x) for x in k): int(c) for k, c in zip(keys, counts)})


def scheme_e_helper_counts(n_files: int, user: int, demands: Sequence[int]) -> Counter:
    """Counts of (own class, fetched class) over the six ordered class pairs."""
    out: Counter = Counter()
    for a, b in itertools.permutations(range(3), 2):
        out[((a, b)[user], _e_third(demands, user, (a, b)))] += 1
    return out


def expected_position_probability(n_files: int) -> Fraction:
    """(N^2-2N+1)! / (N^2)!: probability of one distinct-position tuple."""
    n2 = n_files * n_files
    return Fraction(math.factorial(n2 - 2 * n_files + 1), math.factorial(n2))
