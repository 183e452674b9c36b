"""Shared types for every caching scheme in the package.

Bit strings are numpy ``uint8`` arrays holding one bit (0 or 1) per entry
along the last axis.  Any leading axes are batch axes: a scheme run on a
``(B, N, F)`` file array produces ``(B, L)`` caches and payloads, which is
how the verifiers push many file sets through a single run.

Subsets of a ground set ``[0:n-1]`` are encoded as integer bitmasks.  For a
fixed size, increasing bitmask order is colexicographic order, which is the
canonical order used for every subset-indexed layout.
"""

from __future__ import annotations

import itertools
import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "BIT",
    "xor",
    "xor_all",
    "zeros",
    "FileSet",
    "check_demands",
    "subset_mask",
    "subset_members",
    "subsets_of_size",
    "colex_rank",
    "Permutation",
    "Field",
    "Record",
    "CacheContent",
    "Broadcast",
    "View",
    "Domain",
    "IntRange",
    "Permutations",
    "BitString",
    "Choice",
    "IntVector",
    "Tape",
    "TapeSpace",
    "Scheme",
    "make_rng",
    "field_bits",
]

BIT = np.uint8


def zeros(batch: tuple[int, ...], length: int) -> np.ndarray:
    return np.zeros(batch + (length,), dtype=BIT)


def xor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_xor(a, b)


def xor_all(parts: Iterable[np.ndarray], like: np.ndarray | None = None) -> np.ndarray:
    """XOR a sequence of equal-shape bit arrays; empty input needs ``like``."""
    out = None
    for p in parts:
        out = p.copy() if out is None else np.bitwise_xor(out, p, out=out)
    if out is None:
        if like is None:
            raise ValueError("empty XOR needs a template array")
        return np.zeros_like(like)
    return out


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a single 64-bit seed.

    ``stream`` selects an independent substream, used to split sampling
    into chunks whose results do not depend on how chunks are scheduled.
    """
    seed = int(seed) & ((1 << 64) - 1)
    if stream is None:
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, int(stream)])))


def field_bits(domain: int) -> int:
    """Bits needed for one symbol from a domain of the given size."""
    return max(0, math.ceil(math.log2(domain))) if domain > 1 else 0


# ---------------------------------------------------------------------------
# files and demands


@dataclass(frozen=True)
class FileSet:
    """The server library: ``bits`` has shape ``(*batch, N, F)``."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits)
        if b.ndim < 2:
            raise ValueError("file array needs shape (..., N, F)")
        if b.dtype != BIT:
            b = b.astype(BIT)
        if b.size and b.max(initial=0) > 1:
            raise ValueError("file bits must be 0/1")
        object.__setattr__(self, "bits", b)

    @property
    def n_files(self) -> int:
        return self.bits.shape[-2]

    @property
    def file_bits(self) -> int:
        return self.bits.shape[-1]

    @property
    def batch(self) -> tuple[int, ...]:
        return self.bits.shape[:-2]

    def file(self, i: int) -> np.ndarray:
        return self.bits[..., i, :]

    def segment(self, i: int, start: int, length: int) -> np.ndarray:
        return self.bits[..., i, start:start + length]

    @classmethod
    def random(cls, rng: np.random.Generator, n_files: int, file_bits: int,
               batch: tuple[int, ...] = ()) -> "FileSet":
        return cls(rng.integers(0, 2, size=batch + (n_files, file_bits), dtype=BIT))

    @classmethod
    def zero(cls, n_files: int, file_bits: int, batch: tuple[int, ...] = ()) -> "FileSet":
        return cls(np.zeros(batch + (n_files, file_bits), dtype=BIT))

    @classmethod
    def basis(cls, n_files: int, file_bits: int) -> "FileSet":
        """Zero file set followed by every unit-bit file set."""
        total = n_files * file_bits
        eye = np.vstack([np.zeros((1, total), dtype=BIT), np.eye(total, dtype=BIT)])
        return cls(eye.reshape(total + 1, n_files, file_bits))

    @classmethod
    def every(cls, n_files: int, file_bits: int) -> "FileSet":
        """All 2^(N F) file sets, in binary counting order."""
        total = n_files * file_bits
        if total > 24:
            raise ValueError(f"refusing to materialise 2^{total} file sets")
        idx = np.arange(1 << total, dtype=np.uint64)
        shifts = np.arange(total - 1, -1, -1, dtype=np.uint64)
        bits = ((idx[:, None] >> shifts) & np.uint64(1)).astype(BIT)
        return cls(bits.reshape(-1, n_files, file_bits))


def check_demands(demands: Sequence[int], n_files: int, n_users: int) -> tuple[int, ...]:
    d = tuple(int(x) for x in demands)
    if len(d) != n_users:
        raise ValueError(f"expected {n_users} demands, got {len(d)}")
    for x in d:
        if not 0 <= x < n_files:
            raise ValueError(f"demand {x} outside [0:{n_files - 1}]")
    return d


# ---------------------------------------------------------------------------
# subsets


def subset_mask(members: Iterable[int]) -> int:
    mask = 0
    for m in members:
        if m < 0:
            raise ValueError("subset members must be non-negative")
        mask |= 1 << m
    return mask


def subset_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def subsets_of_size(n: int, k: int) -> list[int]:
    """All k-subsets of [0:n-1] as bitmasks, in colex order."""
    if k < 0 or k > n:
        return []
    return sorted(subset_mask(c) for c in itertools.combinations(range(n), k))


def colex_rank(mask: int) -> int:
    """Position of a subset among the subsets of its size in colex order."""
    return sum(math.comb(m, i + 1) for i, m in enumerate(subset_members(mask)))


# ---------------------------------------------------------------------------
# permutations


@dataclass(frozen=True)
class Permutation:
    """Bijection on [0:m-1]; ``mapping[i]`` is the image of ``i``.

    Applying it to a sequence ``Y`` puts ``Y[i]`` at position ``mapping[i]``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        m = tuple(int(x) for x in self.mapping)
        if sorted(m) != list(range(len(m))):
            raise ValueError(f"not a permutation: {m}")
        object.__setattr__(self, "mapping", m)

    def __len__(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def apply(self, items: Sequence[Any]) -> list[Any]:
        out: list[Any] = [None] * len(items)
        for i, x in enumerate(items):
            out[self.mapping[i]] = x
        return out

    def apply_axis(self, arr: np.ndarray, axis: int = -2) -> np.ndarray:
        out = np.empty_like(arr)
        idx = [slice(None)] * arr.ndim
        idx[axis] = list(self.mapping)
        out[tuple(idx)] = arr
        return out

    @classmethod
    def identity(cls, m: int) -> "Permutation":
        return cls(tuple(range(m)))


# ---------------------------------------------------------------------------
# structured side information


@dataclass(frozen=True)
class Field:
    name: str
    domain: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        for v in vals:
            if not 0 <= v < max(self.domain, 1):
                raise ValueError(f"field {self.name}: {v} outside [0:{self.domain - 1}]")
        object.__setattr__(self, "values", vals)

    @property
    def bit_size(self) -> int:
        return len(self.values) * field_bits(self.domain)


@dataclass(frozen=True)
class Record:
    """Tagged fields of small integers (keys, positions, shifts)."""

    fields: tuple[Field, ...] = ()

    def __getitem__(self, name: str) -> tuple[int, ...]:
        for f in self.fields:
            if f.name == name:
                return f.values
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(f.name == name for f in self.fields)

    @classmethod
    def of(cls, *items: tuple[str, int, Sequence[int]]) -> "Record":
        return cls(tuple(Field(n, d, tuple(v)) for n, d, v in items))

    @property
    def bit_size(self) -> int:
        return sum(f.bit_size for f in self.fields)

    def serialize(self) -> bytes:
        """Self-describing bytes: per field name, domain, count, values."""
        out = bytearray()
        out += struct.pack(">H", len(self.fields))
        for f in self.fields:
            name = f.name.encode()
            out += struct.pack(">B", len(name)) + name
            out += struct.pack(">QI", f.domain, len(f.values))
            width = max(1, (field_bits(f.domain) + 7) // 8)
            for v in f.values:
                out += v.to_bytes(width, "big")
        return bytes(out)

    @classmethod
    def deserialize(cls, data: bytes) -> "Record":
        pos = 0
        (count,) = struct.unpack_from(">H", data, pos)
        pos += 2
        fields = []
        for _ in range(count):
            (nlen,) = struct.unpack_from(">B", data, pos)
            pos += 1
            name = data[pos:pos + nlen].decode()
            pos += nlen
            domain, n = struct.unpack_from(">QI", data, pos)
            pos += 12
            width = max(1, (field_bits(domain) + 7) // 8)
            vals = []
            for _ in range(n):
                vals.append(int.from_bytes(data[pos:pos + width], "big"))
                pos += width
            fields.append(Field(name, domain, tuple(vals)))
        if pos != len(data):
            raise ValueError("trailing bytes in record")
        return cls(tuple(fields))


@dataclass(frozen=True)
class CacheContent:
    """``main`` is counted against M F; ``shared`` holds keys (excluded from M)."""

    main: np.ndarray
    shared: Record = Record()

    @property
    def main_bits(self) -> int:
        return self.main.shape[-1]


@dataclass(frozen=True)
class Broadcast:
    """``payload`` is counted against R F; ``aux`` is the small record J."""

    payload: np.ndarray
    aux: Record = Record()

    @property
    def payload_bits(self) -> int:
        return self.payload.shape[-1]


@dataclass(frozen=True)
class View:
    """What one user observes, split into a discrete part and file-linear bits."""

    disc: bytes
    bits: np.ndarray

    def keys(self) -> list[bytes]:
        """One canonical byte string per batch row."""
        flat = self.bits.reshape(-1, self.bits.shape[-1])
        header = struct.pack(">I", len(self.disc)) + self.disc + struct.pack(">I", flat.shape[-1])
        packed = np.packbits(flat, axis=-1)
        return [header + row.tobytes() for row in packed]


# ---------------------------------------------------------------------------
# randomness


class Domain(ABC):
    """Finite domain of one tape component, drawn uniformly."""

    linear = False

    @property
    @abstractmethod
    def size(self) -> int: ...

    @abstractmethod
    def values(self) -> Iterator[Any]: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> Any: ...

    @abstractmethod
    def encode(self, value: Any) -> bytes: ...


@dataclass(frozen=True)
class IntRange(Domain):
    n: int

    @property
    def size(self) -> int:
        return self.n

    def values(self) -> Iterator[int]:
        return iter(range(self.n))

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(0, self.n))

    def encode(self, value: int) -> bytes:
        return int(value).to_bytes(8, "big")


@dataclass(frozen=True)
class Permutations(Domain):
    m: int

    @property
    def size(self) -> int:
        return math.factorial(self.m)

    def values(self) -> Iterator[Permutation]:
        return (Permutation(p) for p in itertools.permutations(range(self.m)))

    def sample(self, rng: np.random.Generator) -> Permutation:
        return Permutation(tuple(int(x) for x in rng.permutation(self.m)))

    def encode(self, value: Permutation) -> bytes:
        return b"".join(struct.pack(">H", v) for v in value.mapping)


@dataclass(frozen=True)
class BitString(Domain):
    """Uniform bits that enter a scheme linearly (e.g. filler)."""

    n: int
    linear = True

    @property
    def size(self) -> int:
        return 1 << self.n

    def values(self) -> Iterator[tuple[int, ...]]:
        return (tuple(v) for v in itertools.product((0, 1), repeat=self.n))

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        return tuple(int(x) for x in rng.integers(0, 2, size=self.n))

    def encode(self, value: tuple[int, ...]) -> bytes:
        return struct.pack(">I", len(value)) + np.packbits(np.array(value, dtype=BIT)).tobytes()


@dataclass(frozen=True)
class Choice(Domain):
    options: tuple[Any, ...]

    @property
    def size(self) -> int:
        return len(self.options)

    def values(self) -> Iterator[Any]:
        return iter(self.options)

    def sample(self, rng: np.random.Generator) -> Any:
        return self.options[int(rng.integers(0, len(self.options)))]

    def encode(self, value: Any) -> bytes:
        return self.options.index(value).to_bytes(8, "big")


@dataclass(frozen=True)
class IntVector(Domain):
    """``count`` independent uniform integers in ``[0:base-1]``."""

    base: int
    count: int

    @property
    def size(self) -> int:
        return self.base ** self.count

    def values(self) -> Iterator[tuple[int, ...]]:
        return iter(itertools.product(range(self.base), repeat=self.count))

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        return tuple(int(x) for x in rng.integers(0, self.base, size=self.count))

    def encode(self, value: tuple[int, ...]) -> bytes:
        return b"".join(int(v).to_bytes(8, "big") for v in value)


@dataclass(frozen=True)
class Tape:
    """One draw of every tape component, keyed by component name."""

    values: Mapping[str, Any] = field(default_factory=dict)
    space: "TapeSpace | None" = field(default=None, compare=False, repr=False)

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.values.items(), key=lambda kv: kv[0])))

    def replace(self, **changes: Any) -> "Tape":
        vals = dict(self.values)
        for k, v in changes.items():
            if k not in vals:
                raise KeyError(k)
            vals[k] = v
        return Tape(vals, self.space)

    def serialize(self) -> bytes:
        if self.space is None:
            raise ValueError("tape has no declared space")
        out = bytearray()
        for name, dom in self.space.components:
            out += name.encode() + b"=" + dom.encode(self.values[name]) + b";"
        return bytes(out)


@dataclass(frozen=True)
class TapeSpace:
    """Product of independent uniform components, in declaration order."""

    components: tuple[tuple[str, Domain], ...] = ()

    def __post_init__(self) -> None:
        names = [n for n, _ in self.components]
        if len(set(names)) != len(names):
            raise ValueError("duplicate tape component names")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.components]

    def domain(self, name: str) -> Domain:
        for n, d in self.components:
            if n == name:
                return d
        raise KeyError(name)

    @property
    def size(self) -> int:
        return math.prod(d.size for _, d in self.components)

    def enumerate(self, fix: Mapping[str, Any] | None = None) -> Iterator[Tape]:
        """Every tape once; components named in ``fix`` are pinned."""
        fix = dict(fix or {})
        for k in fix:
            self.domain(k)
        pools = [[fix[n]] if n in fix else list(d.values()) for n, d in self.components]
        for combo in itertools.product(*pools):
            yield Tape(dict(zip(self.names, combo)), self)

    def count(self, fix: Mapping[str, Any] | None = None) -> int:
        fix = fix or {}
        return math.prod(1 if n in fix else d.size for n, d in self.components)

    def sample(self, rng: np.random.Generator) -> Tape:
        return Tape({n: d.sample(rng) for n, d in self.components}, self)

    def linear_components(self) -> list[str]:
        return [n for n, d in self.components if d.linear]

    def zero_linear(self, tape: Tape) -> Tape:
        vals = dict(tape.values)
        for n, d in self.components:
            if d.linear:
                vals[n] = (0,) * d.n
        return Tape(vals, self)


# ---------------------------------------------------------------------------
# scheme interface


class Scheme(ABC):
    """A complete (N, K, M, R) caching scheme with declared randomness.

    Subclasses set ``n_files``, ``n_users``, ``file_bits``, ``memory`` and
    ``rate`` in their constructor.  ``setup``, ``deliver`` and ``decode`` must
    be deterministic functions of their arguments.
    """

    name: str = "scheme"
    n_files: int
    n_users: int
    file_bits: int
    memory: Fraction
    rate: Fraction

    @abstractmethod
    def tape_space(self) -> TapeSpace: ...

    @abstractmethod
    def setup(self, files: FileSet, tape: Tape) -> list[CacheContent]: ...

    @abstractmethod
    def deliver(self, files: FileSet, tape: Tape, demands: Sequence[int]) -> Broadcast: ...

    @abstractmethod
    def decode(self, user: int, demand: int, cache: CacheContent,
               broadcast: Broadcast) -> np.ndarray: ...

    def params(self) -> dict[str, Any]:
        return {"N": self.n_files, "K": self.n_users, "F": self.file_bits}

    def file_layout(self) -> list[tuple[str, int, int]]:
        """(label, start, length) segments of one file; default one segment."""
        return [("whole", 0, self.file_bits)]

    def locate(self, bit: int) -> str:
        for label, start, length in self.file_layout():
            if start <= bit < start + length:
                return label
        return "?"

    def check_files(self, files: FileSet) -> None:
        if files.n_files != self.n_files or files.file_bits != self.file_bits:
            raise ValueError(
                f"{self.name} expects {self.n_files} files of {self.file_bits} bits, "
                f"got {files.n_files} of {files.file_bits}")

    def demand_space(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.n_files), repeat=self.n_users))

    def raw_view(self, user: int, demand: int, cache: CacheContent,
                 broadcast: Broadcast) -> View:
        disc = (cache.shared.serialize() + broadcast.aux.serialize()
                + struct.pack(">I", demand))
        bits = np.concatenate([cache.main, broadcast.payload], axis=-1)
        return View(disc, bits)

    def reduce_view(self, user: int, demand: int, cache: CacheContent,
                    broadcast: Broadcast) -> View:
        """User-side canonical form of the view; default is the raw view.

        Overrides may only apply bijections computable by the user and drop
        components that are independent of everything else the view holds.
        """
        return self.raw_view(user, demand, cache, broadcast)

    def view_class(self, user: int, tape: Tape, demands: Sequence[int]) -> tuple[bytes, Any] | None:
        """Fast path: (discrete part of the reduced view, structural key).

        The structural key must determine the affine map from files (and
        linear tape components) to the reduced view bits, up to a
        permutation of those bits.  Verifiers only rely on an unordered key
        after checking that the map has full row rank, where the order of
        the bits cannot matter.  ``None`` means no fast path.
        """
        return None
