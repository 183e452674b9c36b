"""Closed-form memory-rate pairs, convex envelopes and rate regions.

Everything here is exact: memories and rates are ``Fraction`` values and
floats appear only when a curve is written out as CSV.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "MemoryRatePoint",
    "Envelope",
    "HalfPlane",
    "RateRegion",
    "lce",
    "yma_pair",
    "yma_points",
    "scheme_a_points",
    "scheme_b_point",
    "scheme_b_points",
    "scheme_c_point",
    "scheme_c_points",
    "scheme_c_r_values",
    "scheme_bc_points",
    "example1_point",
    "scheme_d_point",
    "scheme_e_point",
    "k2_points",
    "man_rate",
    "man_points",
    "cutset_bound",
    "exact_region",
    "surrogate_lower_bound",
    "ratio_bound",
    "ratio_grid",
    "exact_tail_threshold",
    "RatioRow",
    "OrderReport",
    "order_ratio_check",
    "format_csv",
    "parse_csv",
]

Number = int | Fraction


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("use exact rationals, not floats")
    return Fraction(x)


@dataclass(frozen=True, order=True)
class MemoryRatePoint:
    M: Fraction
    R: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "M", _frac(self.M))
        object.__setattr__(self, "R", _frac(self.R))
        if self.M < 0 or self.R < 0:
            raise ValueError(f"negative memory or rate: ({self.M}, {self.R})")

    def __iter__(self):
        yield self.M
        yield self.R

    def __str__(self) -> str:
        return f"({self.M}, {self.R})"


def _points(pairs: Iterable) -> list[MemoryRatePoint]:
    return [p if isinstance(p, MemoryRatePoint) else MemoryRatePoint(*p) for p in pairs]


def _cross(o: MemoryRatePoint, a: MemoryRatePoint, b: MemoryRatePoint) -> Fraction:
    return (a.M - o.M) * (b.R - o.R) - (a.R - o.R) * (b.M - o.M)


@dataclass(frozen=True)
class Envelope:
    """Lower convex, non-increasing boundary through ``corners``.

    Past the last corner the envelope stays flat: a user never has to use
    all of its memory.  Below the first corner it is undefined.
    """

    corners: tuple[MemoryRatePoint, ...]

    def __post_init__(self) -> None:
        if not self.corners:
            raise ValueError("an envelope needs at least one point")

    def __call__(self, memory: Number) -> Fraction:
        return self.evaluate(memory)

    def evaluate(self, memory: Number) -> Fraction:
        m = _frac(memory)
        first, last = self.corners[0], self.corners[-1]
        if m < first.M:
            raise ValueError(f"memory {m} below the envelope's first point {first.M}")
        if m >= last.M:
            return last.R
        for a, b in zip(self.corners, self.corners[1:]):
            if a.M <= m <= b.M:
                return a.R + (b.R - a.R) * (m - a.M) / (b.M - a.M)
        raise AssertionError("unreachable")

    def contains(self, point) -> bool:
        """True when ``point`` lies on or above the envelope."""
        p = point if isinstance(point, MemoryRatePoint) else MemoryRatePoint(*point)
        return p.M >= self.corners[0].M and p.R >= self.evaluate(p.M)


def lce(points: Iterable) -> Envelope:
    """Lower convex envelope of a finite point set, made non-increasing."""
    best: dict[Fraction, Fraction] = {}
    for p in _points(points):
        if p.M not in best or p.R < best[p.M]:
            best[p.M] = p.R
    pts = [MemoryRatePoint(m, best[m]) for m in sorted(best)]
    if not pts:
        raise ValueError("no points")
    hull: list[MemoryRatePoint] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    # cut at the first point of minimum rate; the flat tail covers the rest
    lowest = min(p.R for p in hull)
    end = next(i for i, p in enumerate(hull) if p.R == lowest)
    return Envelope(tuple(hull[:end + 1]))


# ---------------------------------------------------------------------------
# achievable points

def yma_pair(n_files: int, n_users: int, r: int) -> MemoryRatePoint:
    """Non-private leader-based scheme with ``r`` users per cached subset."""
    if not 0 <= r <= n_users:
        raise ValueError(f"r={r} outside [0:{n_users}]")
    rate = Fraction(math.comb(n_users, r + 1) - math.comb(n_users - min(n_files, n_users), r + 1),
                    math.comb(n_users, r))
    return MemoryRatePoint(Fraction(n_files * r, n_users), rate)


def yma_points(n_files: int, n_users: int) -> list[MemoryRatePoint]:
    return [yma_pair(n_files, n_users, r) for r in range(n_users + 1)]


def scheme_a_points(n_files: int, n_users: int) -> list[MemoryRatePoint]:
    """The lifted scheme: the non-private points for ``NK - K + 1`` users."""
    return yma_points(n_files, n_files * n_users - n_users + 1)


def scheme_b_point(n_files: int, n_users: int, memory: Number) -> MemoryRatePoint:
    m = _frac(memory)
    if not 0 <= m <= n_files:
        raise ValueError(f"memory {m} outside [0, {n_files}]")
    return MemoryRatePoint(m, min(n_files, n_users) * (1 - m / n_files))


def scheme_b_points(n_files: int, n_users: int) -> list[MemoryRatePoint]:
    return [scheme_b_point(n_files, n_users, 0), scheme_b_point(n_files, n_users, n_files)]


def scheme_c_point(n_files: int, n_users: int, t: int, r: Number) -> MemoryRatePoint:
    """Privacy-key scheme point for threshold ``t`` and weight ratio ``r``."""
    total = n_files * n_users
    r = _frac(r)
    if not 1 <= t <= total - 1:
        raise ValueError(f"t={t} outside [1:{total - 1}]")
    if r <= 0:
        raise ValueError("r must be positive")
    denom = sum(math.comb(total, s) * r ** (total - s - 1) for s in range(t, total))
    memory = n_files * sum(math.comb(total - 1, s - 1) * r ** (total - s - 1)
                           for s in range(t, total)) / denom
    rate = sum((math.comb(total, s) - math.comb(total - n_users, s)) * r ** (total - s)
               for s in range(t + 1, total)) + 1
    return MemoryRatePoint(memory, rate / denom)


def scheme_c_points(n_files: int, n_users: int, r: Number) -> list[MemoryRatePoint]:
    """All points for one ``r``, ``t = 1..NK-1``, using running suffix sums."""
    total = n_files * n_users
    r = _frac(r)
    if r <= 0:
        raise ValueError("r must be positive")
    power = [Fraction(1)]
    for _ in range(total):
        power.append(power[-1] * r)
    denom = memory = Fraction(0)
    rate = Fraction(1)
    out = []
    for t in range(total - 1, 0, -1):
        denom += math.comb(total, t) * power[total - t - 1]
        memory += math.comb(total - 1, t - 1) * power[total - t - 1]
        if t + 1 < total:
            rate += (math.comb(total, t + 1) - math.comb(total - n_users, t + 1)) * power[total - t - 1]
        out.append(MemoryRatePoint(n_files * memory / denom, rate / denom))
    return out[::-1]


def scheme_c_r_values(n_files: int, n_users: int) -> list[Fraction]:
    """Integer ratios ``1..N-1`` plus the ratios ``K/s - 1`` below ``N``."""
    out = {Fraction(r) for r in range(1, n_files)}
    for s in range(1, n_users // 2 + 1):
        r = Fraction(n_users, s) - 1
        if 1 <= r <= n_files - 1:
            out.add(r)
    return sorted(out)


def scheme_bc_points(n_files: int, n_users: int) -> list[MemoryRatePoint]:
    out = scheme_b_points(n_files, n_users)
    for r in scheme_c_r_values(n_files, n_users):
        out.extend(scheme_c_points(n_files, n_users, r))
    return out


def example1_point() -> MemoryRatePoint:
    return MemoryRatePoint(Fraction(1, 3), Fraction(4, 3))


def scheme_d_point(n_files: int) -> MemoryRatePoint:
    return MemoryRatePoint(Fraction(n_files, 3), 1)


def scheme_e_point(n_files: int) -> MemoryRatePoint:
    n = n_files
    return MemoryRatePoint(Fraction(n * n, 2 * n - 1), Fraction(n - 1, 2 * n - 1))


def k2_points(n_files: int) -> list[MemoryRatePoint]:
    """Every point the package achieves for two users and ``n_files`` files."""
    out = scheme_a_points(n_files, 2) + scheme_bc_points(n_files, 2)
    out += [scheme_d_point(n_files), scheme_e_point(n_files)]
    if n_files == 2:
        out.append(example1_point())
    return out


# ---------------------------------------------------------------------------
# baselines

def man_rate(n_files: int, n_users: int, memory: Number) -> Fraction:
    m = _frac(memory)
    return n_users * (1 - m / n_files) * min(1 / (1 + n_users * m / n_files),
                                             Fraction(n_files, n_users))


def man_points(n_files: int, n_users: int) -> list[MemoryRatePoint]:
    out = []
    for j in range(n_users + 1):
        m = Fraction(n_files * j, n_users)
        out.append(MemoryRatePoint(m, man_rate(n_files, n_users, m)))
    return out


def cutset_bound(n_files: int, memory: Number) -> Fraction:
    return max(Fraction(0), 1 - _frac(memory) / n_files)


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class HalfPlane:
    """``a M + b R >= c``."""

    a: Fraction
    b: Fraction
    c: Fraction

    def holds(self, m: Fraction, r: Fraction) -> bool:
        return self.a * m + self.b * r >= self.c

    def __str__(self) -> str:
        return f"{self.a}M + {self.b}R >= {self.c}"


@dataclass(frozen=True)
class RateRegion:
    n_files: int
    constraints: tuple[HalfPlane, ...]
    bounds: tuple[HalfPlane, ...] = field(init=False)

    def __post_init__(self) -> None:
        one, zero = Fraction(1), Fraction(0)
        object.__setattr__(self, "bounds", (HalfPlane(one, zero, zero), HalfPlane(zero, one, zero)))

    def contains(self, point) -> bool:
        m, r = (_frac(x) for x in point)
        return all(h.holds(m, r) for h in self.constraints + self.bounds)

    def boundary(self, memory: Number) -> Fraction:
        """Least rate in the region at the given memory."""
        m = _frac(memory)
        if m < 0:
            raise ValueError("negative memory")
        need = [(h.c - h.a * m) / h.b for h in self.constraints if h.b > 0]
        return max([Fraction(0)] + need)

    def corners(self) -> list[MemoryRatePoint]:
        """Vertices of the region inside the quadrant ``M, R >= 0``."""
        planes = self.constraints + self.bounds
        found = set()
        for i, p in enumerate(planes):
            for q in planes[i + 1:]:
                det = p.a * q.b - p.b * q.a
                if det == 0:
                    continue
                m = (p.c * q.b - p.b * q.c) / det
                r = (p.a * q.c - p.c * q.a) / det
                if self.contains((m, r)):
                    found.add(MemoryRatePoint(m, r))
        return sorted(found)


def exact_region(n_files: int, n_users: int = 2) -> RateRegion:
    """Exact private memory-rate region for two users."""
    if n_users != 2:
        raise ValueError("the exact region is known only for two users")
    if n_files < 2:
        raise ValueError("need at least two files")
    n = n_files
    F = Fraction
    if n == 2:
        rows = [(2, 1, 2), (3, 3, 5), (1, 2, 2)]
    else:
        rows = [(3, n, 2 * n), (3, n + 1, 2 * n + 1), (1, n, n)]
    return RateRegion(n, tuple(HalfPlane(F(a), F(b), F(c)) for a, b, c in rows))


# ---------------------------------------------------------------------------
# order optimality against lower-bound surrogates

def surrogate_lower_bound(n_files: int, n_users: int, memory: Number) -> Fraction:
    """Best of the known lower bounds on the non-private optimum.

    This is a surrogate for the optimal rate, which is not computable in
    general.  It combines the cut-set bound, the leader-based envelope
    divided by its factor-2 gap, and for ``N <= K`` the bounds ``N/4`` on
    ``M <= 1`` and ``(N/M - 1/2)/4`` on ``1 <= M <= N/2``.
    """
    n, k, m = n_files, n_users, _frac(memory)
    bounds = [cutset_bound(n, m), lce(yma_points(n, k)).evaluate(m) / 2]
    if n <= k:
        if m <= 1:
            bounds.append(Fraction(n, 4))
        if 1 <= m <= Fraction(n, 2):
            bounds.append((n / m - Fraction(1, 2)) / 4)
    return max(bounds)


def ratio_bound(n_files: int, n_users: int, memory: Number) -> int:
    """The claimed ratio constant at ``memory`` (smallest applicable one)."""
    n, k, m = n_files, n_users, _frac(memory)
    half = Fraction(n, 2)
    if n <= k:
        if m >= half:
            return 2
        return 4 if m <= 1 - Fraction(n, k) else 8
    return 2 if m >= half else 3


def exact_tail_threshold(n_files: int, n_users: int) -> Fraction:
    """Memory beyond which the private optimum meets the cut-set line."""
    g = n_files * n_users - n_users
    return Fraction(n_files * g, g + 1)


def ratio_grid(n_files: int, steps: int = 20) -> list[Fraction]:
    """``steps`` points on ``(0, N/2]`` and ``steps`` more on ``(N/2, N]``."""
    half = Fraction(n_files, 2)
    low = [half * j / steps for j in range(1, steps + 1)]
    high = [half + half * j / steps for j in range(1, steps + 1)]
    return low + high


@dataclass(frozen=True)
class RatioRow:
    M: Fraction
    achievable: Fraction
    surrogate: Fraction
    ratio: Fraction | None
    bound: int

    @property
    def ok(self) -> bool:
        return self.ratio is None or self.ratio <= self.bound


@dataclass
class OrderReport:
    n_files: int
    n_users: int
    scheme: str
    rows: list[RatioRow]
    tail_threshold: Fraction
    tail_ok: bool
    tail_checked: list[Fraction]
    note: str = "lower bounds are surrogates for the optimal rate, which is not computable"

    @property
    def ratios_ok(self) -> bool:
        return all(row.ok for row in self.rows)

    @property
    def ok(self) -> bool:
        return self.ratios_ok and self.tail_ok

    def worst(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for row in self.rows:
            if row.ratio is not None:
                out[row.bound] = max(out.get(row.bound, Fraction(0)), row.ratio)
        return out


def order_ratio_check(n_files: int, n_users: int,
                      grid: Sequence[Number] | None = None) -> OrderReport:
    """Compare the relevant private envelope with the surrogate lower bound.

    For ``N <= K`` the lifted scheme's envelope is used, otherwise the joint
    envelope of the uncoded and privacy-key schemes.  Points where both
    sides vanish are skipped.  Separately, the best private envelope is
    checked to sit on the cut-set line from the tail threshold onwards.
    """
    n, k = n_files, n_users
    if n <= k:
        name, env = "a", lce(scheme_a_points(n, k))
    else:
        name, env = "bc", lce(scheme_bc_points(n, k))
    grid = ratio_grid(n) if grid is None else [_frac(m) for m in grid]
    rows = []
    for m in grid:
        ach, low = env(m), surrogate_lower_bound(n, k, m)
        ratio = None if low == 0 else ach / low
        if low == 0 and ach != 0:
            raise AssertionError(f"positive rate {ach} where the cut-set bound is zero")
        rows.append(RatioRow(m, ach, low, ratio, ratio_bound(n, k, m)))
    threshold = exact_tail_threshold(n, k)
    best = lce(scheme_a_points(n, k) + scheme_bc_points(n, k))
    tail = sorted({threshold, Fraction(n)} | {m for m in grid if m >= threshold})
    tail_ok = all(best(m) == cutset_bound(n, m) for m in tail)
    return OrderReport(n, k, name, rows, threshold, tail_ok, tail)


# ---------------------------------------------------------------------------
# CSV

def format_csv(points: Iterable) -> str:
    out = io.StringIO()
    out.write("M,R\n")
    for p in _points(points):
        out.write(f"{float(p.M):.12g},{float(p.R):.12g}\n")
    return out.getvalue()


def parse_csv(text: str) -> list[tuple[float, float]]:
    lines = text.strip().splitlines()
    if not lines or lines[0].strip() != "M,R":
        raise ValueError("missing M,R header")
    out = []
    for line in lines[1:]:
        m, r = line.split(",")
        out.append((float(m), float(r)))
    return out
