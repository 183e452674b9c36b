"""Direct private constructions that hide demands by shuffling payload slots.

``SchemeB`` caches the same prefix of every file.  With fewer users than
files it sends one slot per user, where the slot of each demanded file is
drawn at random, unused slots carry filler, and each user learns only its
own slot through a padded hint.

``SchemeC`` splits files into segments labelled by subsets of the ``N K``
virtual users.  Coded symbols are masked by differences of neighbouring
files, then shuffled within blocks of equal size.  Padded slot hints let
each user find only the symbols it needs.
"""

from __future__ import annotations

import math
import struct
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    BIT,
    BitString,
    Broadcast,
    CacheContent,
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
    subset_members,
    subsets_of_size,
    xor_all,
)

__all__ = ["SchemeB", "SchemeC", "slot_assignment"]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    return Fraction(value)


def slot_assignment(demands: Sequence[int], order: Permutation) -> list[int]:
    """Slot of each user's file: the g-th distinct file goes to slot order(g)."""
    groups: dict[int, int] = {}
    out = []
    for d in demands:
        if d not in groups:
            groups[d] = len(groups)
        out.append(order(groups[d]))
    return out


class SchemeB(Scheme):
    """Uncoded scheme at rate min(N, K)(1 - M/N)."""

    def __init__(self, n_files: int, n_users: int, memory, file_bits: int):
        memory = _as_fraction(memory)
        if not 0 <= memory <= n_files:
            raise ValueError(f"memory {memory} outside [0, {n_files}]")
        cached = memory * file_bits / n_files
        if cached.denominator != 1:
            raise ValueError(f"F*M/N = {cached} is not an integer; pick F divisible by "
                             f"{(memory / n_files).denominator}")
        self.name = "b"
        self.n_files = n_files
        self.n_users = n_users
        self.file_bits = file_bits
        self.memory = memory
        self.cached_bits = int(cached)
        self.open_bits = file_bits - self.cached_bits
        self.shuffled = n_users < n_files
        self.rate = min(n_files, n_users) * (1 - memory / n_files)
        comps: list = []
        if self.shuffled:
            comps += [(f"key{k}", IntRange(n_users)) for k in range(n_users)]
            comps.append(("order", Permutations(n_users)))
            comps.append(("filler", BitString(n_users * self.open_bits)))
        self._space = TapeSpace(tuple(comps))

    def params(self) -> dict:
        out = super().params()
        out["M"] = str(self.memory)
        return out

    def file_layout(self) -> list[tuple[str, int, int]]:
        return [("cached", 0, self.cached_bits), ("open", self.cached_bits, self.open_bits)]

    def tape_space(self) -> TapeSpace:
        return self._space

    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]:
        self.check_files(files)
        main = files.bits[..., :self.cached_bits].reshape(files.batch + (-1,))
        if not self.shuffled:
            return [CacheContent(main) for _ in range(self.n_users)]
        return [CacheContent(main, Record.of(("key", self.n_users, [tape[f"key{k}"]])))
                for k in range(self.n_users)]

    def slots(self, tape: Tape, demands: Sequence[int]) -> list[int]:
        return slot_assignment(demands, tape["order"])

    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast:
        self.check_files(files)
        demands = check_demands(demands, self.n_files, self.n_users)
        open_part = files.bits[..., self.cached_bits:]
        if not self.shuffled:
            return Broadcast(open_part.reshape(files.batch + (-1,)))
        K, L = self.n_users, self.open_bits
        slots = self.slots(tape, demands)
        filler = np.asarray(tape["filler"], dtype=BIT).reshape(K, L)
        content: list[np.ndarray | None] = [None] * K
        for d, p in zip(demands, slots):
            content[p] = open_part[..., d, :]
        parts = [c if c is not None else np.broadcast_to(filler[j], files.batch + (L,))
                 for j, c in enumerate(content)]
        payload = np.concatenate(parts, axis=-1) if parts else np.zeros(files.batch + (0,), BIT)
        hints = [(p + tape[f"key{k}"]) % K for k, p in enumerate(slots)]
        return Broadcast(payload, Record.of(("slot", K, hints)))

    def own_slot(self, user: int, cache: CacheContent, broadcast: Broadcast) -> int:
        try:
            return (broadcast.aux["slot"][user] - cache.shared["key"][0]) % self.n_users
        except (KeyError, IndexError):
            raise ValueError("malformed cache or aux record") from None

    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray:
        c, L = self.cached_bits, self.open_bits
        head = cache.main[..., demand * c:(demand + 1) * c]
        if not self.shuffled:
            tail = broadcast.payload[..., demand * L:(demand + 1) * L]
        else:
            p = self.own_slot(user, cache, broadcast)
            tail = broadcast.payload[..., p * L:(p + 1) * L]
        return np.concatenate([head, tail], axis=-1)

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        disc = struct.pack(">I", demand)
        if not self.shuffled:
            return View(disc, np.concatenate([cache.main, broadcast.payload], axis=-1))
        # own slot first, the others in slot order; slot index, key and the
        # other users' hints are uniform and independent of the rest
        p, L = self.own_slot(user, cache, broadcast), self.open_bits
        order = [p] + [j for j in range(self.n_users) if j != p]
        parts = [cache.main] + [broadcast.payload[..., j * L:(j + 1) * L] for j in order]
        return View(disc, np.concatenate(parts, axis=-1))

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]):
        disc = struct.pack(">I", demands[user])
        if not self.shuffled:
            return disc, (demands[user],)
        slots = self.slots(tape, demands)
        holder = {p: d for d, p in zip(demands, slots)}
        p = slots[user]
        rest = tuple(("f", holder[j]) if j in holder else ("x", j)
                     for j in range(self.n_users) if j != p)
        return disc, (demands[user], rest)


class SchemeC(Scheme):
    """Segmented scheme with masked, shuffled coded symbols.

    ``t`` in ``[1:NK-1]`` is the smallest segment label size and ``r`` in
    ``[1, N-1]`` (rational allowed) sets the geometric ratio of segment
    sizes.  A segment labelled by ``R`` has ``r^(NK-|R|-1) * seg_bits`` bits.
    """

    def __init__(self, n_files: int, n_users: int, t: int, r, seg_bits: int = 1):
        if n_files < 2:
            raise ValueError("needs at least two files")
        n = n_files * n_users
        if not 1 <= t <= n - 1:
            raise ValueError(f"t={t} outside [1:{n - 1}]")
        r = _as_fraction(r)
        if not 1 <= r <= n_files - 1:
            raise ValueError(f"r={r} outside [1, {n_files - 1}]")
        unit = r.denominator ** (n - t - 1)
        if seg_bits < 1 or seg_bits % unit:
            raise ValueError(f"segment unit l={seg_bits} must be a positive multiple of {unit}")
        self.name = "c"
        self.class_key_ordered = False
        self.n_files = n_files
        self.n_users = n_users
        self.t = t
        self.r = r
        self.seg_bits = seg_bits
        self.n_virtual = n
        self.full = (1 << n) - 1
        self.sizes = list(range(t, n))
        self.block_sizes = list(range(t + 1, n))
        self.by_size = {s: subsets_of_size(n, s) for s in range(t, n + 1)}
        self.rank = {m: i for s in self.by_size for i, m in enumerate(self.by_size[s])}
        self.kappa = {s: math.comb(n, s) - math.comb(n - n_users, s) for s in self.block_sizes}

        self.seg_offset: dict[int, int] = {}
        pos = 0
        for s in self.sizes:
            for m in self.by_size[s]:
                self.seg_offset[m] = pos
                pos += self.seg_len(s)
        self.file_bits = pos

        self.block_offset: dict[int, int] = {}
        pos = 0
        for s in self.block_sizes:
            self.block_offset[s] = pos
            pos += self.kappa[s] * self.sym_len(s)
        self.full_offset = pos
        self.payload_bits = pos + self.sym_len(n)

        self.cache_bits = n_files * sum(math.comb(n - 1, s - 1) * self.seg_len(s) for s in self.sizes)
        self.memory = Fraction(self.cache_bits, self.file_bits)
        self.rate = Fraction(self.payload_bits, self.file_bits)

        comps: list = [(f"key{k}", IntRange(n_files)) for k in range(n_users)]
        for s in self.block_sizes:
            comps.append((f"pad{s}", IntVector(self.kappa[s], len(self.by_size[s]))))
        for s in self.block_sizes:
            comps.append((f"perm{s}", Permutations(self.kappa[s])))
        self._space = TapeSpace(tuple(comps))

    # sizes ------------------------------------------------------------------

    def seg_len(self, s: int) -> int:
        """Bits of a segment labelled by an s-subset."""
        v = self.r ** (self.n_virtual - s - 1) * self.seg_bits
        assert v.denominator == 1
        return int(v)

    def sym_len(self, s: int) -> int:
        """Bits of a coded symbol labelled by an s-subset."""
        return self.seg_len(s - 1)

    def params(self) -> dict:
        out = super().params()
        out.update(t=self.t, r=str(self.r), l=self.seg_bits)
        return out

    def file_layout(self) -> list[tuple[str, int, int]]:
        return [(f"W[{','.join(map(str, subset_members(m)))}]", self.seg_offset[m],
                 self.seg_len(bin(m).count("1")))
                for s in self.sizes for m in self.by_size[s]]

    def tape_space(self) -> TapeSpace:
        return self._space

    # helpers ----------------------------------------------------------------

    def segment(self, files: FileSet, i: int, mask: int) -> np.ndarray:
        o = self.seg_offset[mask]
        return files.bits[..., i, o:o + self.seg_len(bin(mask).count("1"))]

    def virtual_user(self, user: int, key: int) -> int:
        return user * self.n_files + key

    def virtual_demands(self, shifts: Sequence[int]) -> list[int]:
        N = self.n_files
        return [(p - c) % N for c in shifts for p in range(N)]

    def shifts(self, tape: Tape, demands: Sequence[int]) -> list[int]:
        return [(tape[f"key{k}"] - d) % self.n_files for k, d in enumerate(demands)]

    def leaders(self, tape: Tape) -> int:
        return sum(1 << self.virtual_user(k, tape[f"key{k}"]) for k in range(self.n_users))

    def block(self, s: int, leaders: int) -> list[int]:
        """Labels of the coded symbols sent in block s, in colex order."""
        return [m for m in self.by_size[s] if m & leaders]

    @lru_cache(maxsize=None)
    def cached_labels(self, v: int) -> tuple[tuple[int, int], ...]:
        return tuple((i, m) for s in self.sizes for i in range(self.n_files)
                     for m in self.by_size[s] if m >> v & 1)

    @lru_cache(maxsize=None)
    def cache_offsets(self, v: int) -> dict[tuple[int, int], int]:
        out, pos = {}, 0
        for i, m in self.cached_labels(v):
            out[(i, m)] = pos
            pos += self.seg_len(bin(m).count("1"))
        return out

    @lru_cache(maxsize=None)
    def own_labels(self, v: int, s: int) -> tuple[int, ...]:
        return tuple(m for m in self.by_size[s] if m >> v & 1)

    def coded(self, seg, demands: Sequence[int], mask: int) -> np.ndarray:
        """Y_R from a segment accessor ``seg(i, mask)``."""
        return xor_all(seg(demands[u], mask & ~(1 << u)) for u in subset_members(mask))

    def mask_bits(self, seg, mask: int) -> np.ndarray:
        """First r*len bits of the neighbouring-file differences of label R."""
        diffs = [np.bitwise_xor(seg(i, mask), seg(i + 1, mask)) for i in range(self.n_files - 1)]
        return np.concatenate(diffs, axis=-1)[..., :self.sym_len(bin(mask).count("1"))]

    # scheme -----------------------------------------------------------------

    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]:
        self.check_files(files)
        out = []
        for k in range(self.n_users):
            key = tape[f"key{k}"]
            v = self.virtual_user(k, key)
            parts = [self.segment(files, i, m) for i, m in self.cached_labels(v)]
            fields = [("key", self.n_files, [key])]
            for s in self.block_sizes:
                pads = tape[f"pad{s}"]
                fields.append((f"pad{s}", self.kappa[s],
                               [pads[self.rank[m]] for m in self.own_labels(v, s)]))
            out.append(CacheContent(np.concatenate(parts, axis=-1), Record.of(*fields)))
        return out

    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast:
        self.check_files(files)
        demands = check_demands(demands, self.n_files, self.n_users)
        shifts = self.shifts(tape, demands)
        d = self.virtual_demands(shifts)
        lead = self.leaders(tape)

        def seg(i, m):
            return self.segment(files, i, m)

        parts = []
        hints = []
        for s in self.block_sizes:
            labels = self.block(s, lead)
            perm: Permutation = tape[f"perm{s}"]
            symbols = [np.bitwise_xor(self.coded(seg, d, m), self.mask_bits(seg, m)) for m in labels]
            parts.extend(perm.apply(symbols))
            slot = {m: perm(j) for j, m in enumerate(labels)}
            pads = tape[f"pad{s}"]
            kappa = self.kappa[s]
            hints.append((f"hint{s}", kappa,
                          [(pads[i] + slot[m]) % kappa if m in slot else pads[i]
                           for i, m in enumerate(self.by_size[s])]))
        parts.append(self.coded(seg, d, self.full))
        aux = Record.of(("shift", self.n_files, shifts), *hints)
        return Broadcast(np.concatenate(parts, axis=-1), aux)

    def _unpack(self, user: int, cache: CacheContent, broadcast: Broadcast):
        try:
            key = cache.shared["key"][0]
            shifts = broadcast.aux["shift"]
            own = {s: cache.shared[f"pad{s}"] for s in self.block_sizes}
            hints = {s: broadcast.aux[f"hint{s}"] for s in self.block_sizes}
        except KeyError as exc:
            raise ValueError(f"malformed cache or aux record: missing {exc}") from None
        if len(shifts) != self.n_users:
            raise ValueError("aux shift vector has the wrong length")
        return key, list(shifts), own, hints

    def known_slots(self, v: int, own: dict, hints: dict) -> dict[int, int]:
        """Slot of every coded symbol whose label contains v."""
        out = {}
        for s in self.block_sizes:
            kappa = self.kappa[s]
            for pad, m in zip(own[s], self.own_labels(v, s)):
                out[m] = (hints[s][self.rank[m]] - pad) % kappa
        return out

    def payload_symbol(self, payload: np.ndarray, s: int, slot: int) -> np.ndarray:
        L = self.sym_len(s)
        o = self.block_offset[s] + slot * L
        return payload[..., o:o + L]

    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray:
        key, shifts, own, hints = self._unpack(user, cache, broadcast)
        v = self.virtual_user(user, key)
        d = self.virtual_demands(shifts)
        if d[v] != demand:
            raise ValueError("aux shift does not match the user's key and demand")
        offs = self.cache_offsets(v)
        main, payload = cache.main, broadcast.payload
        bit = 1 << v

        def cached(i, m):
            o = offs[(i, m)]
            return main[..., o:o + self.seg_len(bin(m).count("1"))]

        slots = self.known_slots(v, own, hints)
        n = self.n_virtual
        out = []
        for s in self.sizes:
            for m in self.by_size[s]:
                if m & bit:
                    out.append(cached(demand, m))
                    continue
                up = m | bit
                if s == n - 1:
                    top = payload[..., self.full_offset:self.full_offset + self.sym_len(n)]
                    rest = [cached(d[u], self.full & ~(1 << u)) for u in range(n) if u != v]
                    out.append(xor_all([top] + rest))
                    continue
                sym = self.payload_symbol(payload, s + 1, slots[up])
                terms = [sym, self.mask_bits(cached, up)]
                terms += [cached(d[u], up & ~(1 << u)) for u in subset_members(m)]
                out.append(xor_all(terms))
        return np.concatenate(out, axis=-1)

    # views ------------------------------------------------------------------

    def _disc(self, key: int, shifts: Sequence[int], demand: int) -> bytes:
        return struct.pack(f">I{len(shifts)}II", key, *shifts, demand)

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        # Known symbols are moved to canonical order, the rest keep their
        # relative slot order.  Own pads, slot positions and the hints of
        # labels without v are uniform and independent of everything else.
        key, shifts, own, hints = self._unpack(user, cache, broadcast)
        v = self.virtual_user(user, key)
        slots = self.known_slots(v, own, hints)
        payload = broadcast.payload
        n = self.n_virtual
        parts = [cache.main, payload[..., self.full_offset:self.full_offset + self.sym_len(n)]]
        for s in self.block_sizes:
            known = [slots[m] for m in self.own_labels(v, s)]
            taken = set(known)
            order = known + [j for j in range(self.kappa[s]) if j not in taken]
            parts.extend(self.payload_symbol(payload, s, j) for j in order)
        return View(self._disc(key, shifts, demand), np.concatenate(parts, axis=-1))

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]):
        # The unknown symbols of each block are fixed by (v, leaders); only
        # their slot order depends on the permutations, so it is left out.
        key = tape[f"key{user}"]
        shifts = self.shifts(tape, demands)
        struct_key = (user, key, tuple(shifts), self.leaders(tape))
        return self._disc(key, shifts, demands[user]), struct_key

    def presence(self, user: int, files: FileSet, cache: CacheContent,
                 broadcast: Broadcast) -> tuple[bool, ...]:
        """For each label R without v: is Y_R + mask_R among block |R|'s symbols?

        Needs the full library; this is what an all-knowing user can test.
        """
        key, shifts, _, _ = self._unpack(user, cache, broadcast)
        v = self.virtual_user(user, key)
        d = self.virtual_demands(shifts)

        def seg(i, m):
            return self.segment(files, i, m)

        out = []
        for s in self.block_sizes:
            sent = {self.payload_symbol(broadcast.payload, s, j).tobytes()
                    for j in range(self.kappa[s])}
            for m in self.by_size[s]:
                if m >> v & 1:
                    continue
                cand = np.bitwise_xor(self.coded(seg, d, m), self.mask_bits(seg, m))
                out.append(cand.tobytes() in sent)
        return tuple(out)
