"""Scheme-agnostic checks: decoding, privacy, strong privacy and rates.

Every scheme in the package is affine over GF(2) in the files (and in any
linear tape components) once the rest of the tape and the demands are
fixed.  Two consequences are used throughout:

* decoding that is right on the zero library and on every unit-bit library
  is right on every library;
* for fixed tape and demands a user's view is uniform on a coset of a
  subspace, so views can be integrated over the files exactly by linear
  algebra instead of enumerating ``2^(N F)`` libraries.

Integrated privacy works on *classes*: (discrete part, image subspace,
coset).  The view is generated from its class and the files alone, so the
class-level mutual information is an upper bound on the view-level one
and a zero certifies privacy.  When every discrete value comes with a
single subspace the class is a function of the view and the bound is tight.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import struct
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Broadcast,
    Field,
    FileSet,
    Record,
    Scheme,
    Tape,
    View,
    check_demands,
    make_rng,
)
from .gf2 import pack_vector, reduce_packed, rref_packed

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "Report",
    "worker_count",
    "mutual_information",
    "miller_madow",
    "Classifier",
    "verify_decode_basis",
    "verify_decode_all_files",
    "verify_privacy_exact",
    "verify_privacy_estimate",
    "verify_weak_privacy",
    "verify_strong_privacy",
    "verify_lemma3",
    "verify_view_class",
    "measure_rates",
    "presence_statistic",
    "LeakyScheme",
    "FlippedPayload",
]

DEFAULT_BUDGET = 1 << 34
CHUNK = 1 << 15


class BudgetExceeded(RuntimeError):
    """An exact check would enumerate more states than allowed."""

    def __init__(self, states: int, budget: int):
        super().__init__(f"{states} states exceed the budget of {budget}")
        self.states = states
        self.budget = budget


@dataclass
class Report:
    scheme: str
    params: dict
    check: str
    result: str
    value: Any
    budget: int | None = None
    runtime_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return self.result == "pass"

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "params": _jsonable(self.params), "check": self.check,
                "result": self.result, "value": _jsonable(self.value),
                "budget": self.budget, "runtime_ms": round(self.runtime_ms, 3)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, bytes):
        return x.hex()
    return x


def _report(scheme: Scheme, check: str, ok: bool, value, start: float,
            budget: int | None = None) -> Report:
    return Report(scheme.name, scheme.params(), check, "pass" if ok else "fail", value,
                  budget, (time.perf_counter() - start) * 1000)


def worker_count() -> int:
    """Worker cap from ``PCC_THREADS`` (default 1)."""
    raw = os.environ.get("PCC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PCC_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


# ---------------------------------------------------------------------------
# information measures on count tables

def _target(demands: tuple[int, ...], user: int, which: int | None) -> tuple[int, ...]:
    if which is None:
        return demands[:user] + demands[user + 1:]
    return (demands[which],)


def _marginal(joint: Mapping[tuple[bytes, tuple], int], user: int,
              which: int | None = None) -> Counter:
    out: Counter = Counter()
    for (v, d), c in joint.items():
        out[(v, _target(d, user, which))] += c
    return out


def mutual_information(joint: Mapping[tuple[Any, Any], int]) -> tuple[float, bool]:
    """I(X; Y) in bits from integer counts, plus an exact independence flag.

    The flag compares counts in integers: ``c(x, y) n == c(x) c(y)`` for
    every pair, including pairs that never occur.
    """
    n = sum(joint.values())
    if n == 0:
        raise ValueError("empty count table")
    cx: Counter = Counter()
    cy: Counter = Counter()
    for (x, y), c in joint.items():
        cx[x] += c
        cy[y] += c
    mi = 0.0
    for (x, y), c in joint.items():
        if c and c * n != cx[x] * cy[y]:
            mi += c / n * math.log2(c * n / (cx[x] * cy[y]))
    nonzero = sum(1 for c in joint.values() if c)
    zero = nonzero == len(cx) * len(cy) and all(
        c * n == cx[x] * cy[y] for (x, y), c in joint.items())
    return max(mi, 0.0), zero


def miller_madow(joint: Mapping[tuple[Any, Any], int]) -> tuple[float, float]:
    """(plug-in, Miller-Madow corrected) mutual information in bits."""
    plug, _ = mutual_information(joint)
    n = sum(joint.values())
    xs = {x for (x, _), c in joint.items() if c}
    ys = {y for (_, y), c in joint.items() if c}
    cells = sum(1 for c in joint.values() if c)
    bias = ((len(xs) - 1) + (len(ys) - 1) - (cells - 1)) / (2 * n * math.log(2))
    return plug, plug + bias


def _bootstrap(joint: Mapping, reps: int, seed: int, level: float = 0.95) -> tuple[float, float]:
    cells = list(joint.items())
    counts = np.array([c for _, c in cells], dtype=np.int64)
    n = int(counts.sum())
    rng = make_rng(seed, stream=0xB007)
    est = []
    for _ in range(reps):
        draw = rng.multinomial(n, counts / n)
        table = {k: int(c) for (k, _), c in zip(cells, draw) if c}
        est.append(miller_madow(table)[1])
    lo, hi = np.quantile(est, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# views and classes

ViewFn = Callable[[Scheme, FileSet, Tape, tuple, int, list, Broadcast], View]


def _reduced(scheme, files, tape, demands, user, caches, broadcast) -> View:
    return scheme.reduce_view(user, demands[user], caches[user], broadcast)


def _raw(scheme, files, tape, demands, user, caches, broadcast) -> View:
    return scheme.raw_view(user, demands[user], caches[user], broadcast)


def _with_demanded_file(base: ViewFn) -> ViewFn:
    def fn(scheme, files, tape, demands, user, caches, broadcast):
        v = base(scheme, files, tape, demands, user, caches, broadcast)
        return View(v.disc, np.concatenate([v.bits, files.file(demands[user])], axis=-1))
    return fn


_VIEWS = {"reduced": _reduced, "raw": _raw}


def _view_fn(view: str) -> ViewFn:
    try:
        return _VIEWS[view]
    except KeyError:
        raise ValueError(f"view must be one of {sorted(_VIEWS)}, got {view!r}") from None


def _run(scheme: Scheme, files: FileSet, tape: Tape, demands: tuple):
    return scheme.setup(files, tape), scheme.deliver(files, tape, demands)


class Classifier:
    """Maps (tape, demands, user) to the class of that user's view.

    A class token is (discrete part, view length, image subspace, coset of
    the zero-input view).  With ``use_fast`` the scheme's ``view_class`` key
    memoises the linear algebra; the first computation for each key checks
    the claimed discrete part against the real one.
    """

    def __init__(self, scheme: Scheme, view_fn: ViewFn = _reduced, use_fast: bool = True):
        self.scheme = scheme
        self.view_fn = view_fn
        # view_class describes the reduced view only
        self.use_fast = use_fast and view_fn is _reduced
        space = scheme.tape_space()
        self.linear = [(n, space.domain(n)) for n in space.linear_components()]
        self.files = FileSet.basis(scheme.n_files, scheme.file_bits)
        self.memo: dict[Any, tuple] = {}
        self.slow_runs = 0
        self.signatures: dict[bytes, set] = defaultdict(set)

    def _rows(self, tape: Tape, demands: tuple, user: int) -> tuple[bytes, np.ndarray, np.ndarray]:
        scheme = self.scheme
        tape = scheme.tape_space().zero_linear(tape)
        caches, bc = _run(scheme, self.files, tape, demands)
        v = self.view_fn(scheme, self.files, tape, demands, user, caches, bc)
        base = v.bits[0]
        rows = [v.bits[1:] ^ base]
        if self.linear:
            zero = FileSet.zero(scheme.n_files, scheme.file_bits)
            for name, dom in self.linear:
                for j in range(dom.n):
                    unit = tuple(int(i == j) for i in range(dom.n))
                    t = tape.replace(**{name: unit})
                    caches, bc = _run(scheme, zero, t, demands)
                    u = self.view_fn(scheme, zero, t, demands, user, caches, bc)
                    rows.append((u.bits ^ base)[None, :])
        return v.disc, base, np.concatenate(rows, axis=0)

    def _exact(self, tape: Tape, demands: tuple, user: int) -> tuple:
        self.slow_runs += 1
        disc, base, rows = self._rows(tape, demands, user)
        red = rref_packed(rows)
        length = rows.shape[1]
        if red.shape[0] == length:
            return disc, length, b"full", b""
        coset = reduce_packed(red, pack_vector(base))
        return disc, length, red.astype(">u8").tobytes(), coset.astype(">u8").tobytes()

    def token(self, tape: Tape, demands: tuple, user: int) -> tuple:
        fast = self.scheme.view_class(user, tape, demands) if self.use_fast else None
        if fast is None:
            tok = self._exact(tape, demands, user)
        else:
            disc, key = fast
            if key in self.memo:
                hit = self.memo[key]
                tok = hit if hit is not None else self._exact(tape, demands, user)
            else:
                tok = self._exact(tape, demands, user)
                if tok[0] != disc:
                    raise AssertionError(
                        f"{self.scheme.name}: view_class disc disagrees with the view for key {key}")
                # an unordered key pins the map only up to a bit permutation,
                # which is harmless only when the image is everything
                ordered = getattr(self.scheme, "class_key_ordered", True)
                self.memo[key] = tok if (tok[2] == b"full" or ordered) else None
        self.signatures[tok[0]].add(tok[1:3])
        return tok

    @property
    def tight(self) -> bool:
        """True when each discrete value came with a single subspace."""
        return all(len(s) == 1 for s in self.signatures.values())


def _token_bytes(tok: tuple) -> bytes:
    disc, length, sub, coset = tok
    return (struct.pack(">I", len(disc)) + disc + struct.pack(">II", length, len(sub))
            + sub + coset)


# ---------------------------------------------------------------------------
# decoding

def _demand_list(scheme: Scheme, demands) -> list[tuple[int, ...]]:
    if demands is None:
        return [tuple(d) for d in scheme.demand_space()]
    return [check_demands(d, scheme.n_files, scheme.n_users) for d in demands]


def _tape_list(scheme: Scheme, tapes, seed: int) -> list[Tape]:
    space = scheme.tape_space()
    if tapes is None:
        return list(space.enumerate())
    if isinstance(tapes, int):
        rng = make_rng(seed)
        return [space.sample(rng) for _ in range(tapes)]
    return list(tapes)


def _decode_failures(scheme: Scheme, files: FileSet, tapes: Iterable[Tape],
                     demand_list: Sequence[tuple], limit: int = 5):
    runs, failures = 0, []
    F = scheme.file_bits
    for tape in tapes:
        caches = scheme.setup(files, tape)
        for d in demand_list:
            bc = scheme.deliver(files, tape, d)
            for k in range(scheme.n_users):
                runs += 1
                try:
                    got = scheme.decode(k, d[k], caches[k], bc)
                    bad = np.argwhere(got != files.file(d[k]))
                    error = None
                except Exception as exc:  # decoder refused: count as failure
                    bad, error = None, f"{type(exc).__name__}: {exc}"
                if error is None and not bad.size:
                    continue
                entry = {"user": k, "demands": list(d), "tape": repr(tape.values)[:200]}
                if error is not None:
                    entry["error"] = error
                else:
                    first = [int(x) for x in bad[0]]
                    row, bit = (first[0], first[-1]) if len(first) > 1 else (0, first[0])
                    entry["bit"] = bit
                    entry["segment"] = scheme.locate(bit)
                    entry["wrong_bits"] = int(bad.shape[0])
                    if files.batch and row > 0:
                        entry["library_bit"] = {"file": (row - 1) // F, "bit": (row - 1) % F}
                if len(failures) < limit:
                    failures.append(entry)
                else:
                    failures.append(None)
    return runs, failures


def verify_decode_basis(scheme: Scheme, tapes=None, seed: int = 0, demands=None) -> Report:
    """Decode check on the zero library and every unit-bit library.

    ``tapes`` is ``None`` (every tape), a count of sampled tapes, or an
    explicit list.  Failures name the user, demand vector, wrong output bit
    and the file segment it belongs to.
    """
    start = time.perf_counter()
    files = FileSet.basis(scheme.n_files, scheme.file_bits)
    tape_list = _tape_list(scheme, tapes, seed)
    demand_list = _demand_list(scheme, demands)
    runs, failures = _decode_failures(scheme, files, tape_list, demand_list)
    value = {"tapes": len(tape_list), "demands": len(demand_list), "decodes": runs,
             "libraries": files.batch[0], "failures": len(failures),
             "first_failures": [f for f in failures if f is not None]}
    return _report(scheme, "decode", not failures, value, start)


def verify_decode_all_files(scheme: Scheme, tapes=None, seed: int = 0, demands=None) -> Report:
    """Brute-force decode over every library; only for tiny schemes."""
    start = time.perf_counter()
    files = FileSet.every(scheme.n_files, scheme.file_bits)
    tape_list = _tape_list(scheme, tapes, seed)
    runs, failures = _decode_failures(scheme, files, tape_list, _demand_list(scheme, demands))
    value = {"tapes": len(tape_list), "decodes": runs, "libraries": files.batch[0],
             "failures": len(failures), "first_failures": [f for f in failures if f is not None]}
    return _report(scheme, "decode-all", not failures, value, start)


# ---------------------------------------------------------------------------
# exact privacy

def _zero_fix(scheme: Scheme, fix: Mapping | None) -> dict:
    space = scheme.tape_space()
    out = dict(fix or {})
    for name in space.linear_components():
        out.setdefault(name, (0,) * space.domain(name).n)
    return out


def _collect_enumerate(scheme: Scheme, view_fn: ViewFn, fix, budget: int, users):
    space = scheme.tape_space()
    demand_list = [tuple(d) for d in scheme.demand_space()]
    total_bits = scheme.n_files * scheme.file_bits
    states = (1 << total_bits) * space.count(fix) * len(demand_list)
    if states > budget:
        raise BudgetExceeded(states, budget)
    files = FileSet.every(scheme.n_files, scheme.file_bits)
    joint = {k: Counter() for k in users}
    for tape in space.enumerate(fix):
        caches = scheme.setup(files, tape)
        for d in demand_list:
            bc = scheme.deliver(files, tape, d)
            for k in users:
                for key in view_fn(scheme, files, tape, d, k, caches, bc).keys():
                    joint[k][(key, d)] += 1
    return joint, states, True


def _collect_integrate(scheme: Scheme, view_fn: ViewFn, fix, budget: int, users, use_fast: bool):
    space = scheme.tape_space()
    fix = _zero_fix(scheme, fix)
    demand_list = [tuple(d) for d in scheme.demand_space()]
    states = space.count(fix) * len(demand_list)
    if states > budget:
        raise BudgetExceeded(states, budget)
    cls = Classifier(scheme, view_fn, use_fast)
    joint = {k: Counter() for k in users}
    for tape in space.enumerate(fix):
        for d in demand_list:
            for k in users:
                joint[k][(_token_bytes(cls.token(tape, d, k)), d)] += 1
    return joint, states, cls.tight


def _collect(scheme, view_fn, files, fix, budget, users, use_fast=True):
    if files == "enumerate":
        return _collect_enumerate(scheme, view_fn, fix, budget, users)
    if files == "integrate":
        return _collect_integrate(scheme, view_fn, fix, budget, users, use_fast)
    raise ValueError(f"files must be 'enumerate' or 'integrate', got {files!r}")


def _users(scheme: Scheme, users) -> list[int]:
    return list(range(scheme.n_users)) if users is None else [int(u) for u in users]


def verify_privacy_exact(scheme: Scheme, files: str = "enumerate", view: str = "reduced",
                         fix: Mapping | None = None, budget: int = DEFAULT_BUDGET,
                         users=None) -> Report:
    """Exact I(D_{-k}; view_k) for each user from a full enumeration.

    ``files="enumerate"`` runs every library; ``"integrate"`` integrates the
    files (and linear tape components) out by linear algebra.  Components
    in ``fix`` are pinned, which is exact only when the view does not
    depend on them.  Raises :class:`BudgetExceeded` past ``budget`` states.
    """
    start = time.perf_counter()
    users = _users(scheme, users)
    joint, states, tight = _collect(scheme, _view_fn(view), files, fix, budget, users)
    mi, zero = {}, {}
    for k in users:
        mi[k], zero[k] = mutual_information(_marginal(joint[k], k))
    value = {"mi_bits": mi, "zero": zero, "states": states, "files": files, "view": view,
             "tight": tight, "fixed": sorted((fix or {}).keys())}
    if files == "integrate" and not tight:
        value["note"] = "class-level value; an upper bound on the view-level value"
    return _report(scheme, "privacy-exact", all(zero.values()), value, start, budget)


def verify_weak_privacy(scheme: Scheme, files: str = "enumerate", view: str = "reduced",
                        fix: Mapping | None = None, budget: int = DEFAULT_BUDGET) -> Report:
    """Pairwise I(D_i; view_k) for every i != k."""
    start = time.perf_counter()
    users = _users(scheme, None)
    joint, states, tight = _collect(scheme, _view_fn(view), files, fix, budget, users)
    pairs = {}
    ok = True
    for k in users:
        for i in users:
            if i == k:
                continue
            mi, zero = mutual_information(_marginal(joint[k], k, i))
            pairs[f"{i}->{k}"] = {"mi_bits": mi, "zero": zero}
            ok &= zero
    value = {"pairs": pairs, "states": states, "tight": tight}
    return _report(scheme, "weak-privacy", ok, value, start, budget)


def verify_lemma3(scheme: Scheme, files: str = "enumerate", view: str = "reduced",
                  fix: Mapping | None = None, budget: int = DEFAULT_BUDGET) -> Report:
    """(view_k, W_{D_k}) given D_k = j has one law for every D_{-k}."""
    start = time.perf_counter()
    users = _users(scheme, None)
    fn = _with_demanded_file(_view_fn(view))
    joint, states, tight = _collect(scheme, fn, files, fix, budget, users, use_fast=False)
    same: dict[str, bool] = {}
    for k in users:
        laws: dict[int, dict[tuple, Counter]] = defaultdict(lambda: defaultdict(Counter))
        for (v, d), c in joint[k].items():
            laws[d[k]][d[:k] + d[k + 1:]][v] += c
        for j, by_rest in sorted(laws.items()):
            dists = list(by_rest.values())
            same[f"user{k}:demand{j}"] = all(x == dists[0] for x in dists[1:])
    ok = all(same.values())
    value = {"identical": same, "states": states, "tight": tight}
    if files == "integrate" and not ok and not tight:
        value["note"] = "class laws differ; view laws may still agree"
    return _report(scheme, "lemma3", ok, value, start, budget)


# ---------------------------------------------------------------------------
# sampled privacy

def _sample_chunk(args) -> dict[int, Counter]:
    scheme, method, view, seed, chunk, count = args
    rng = make_rng(seed, stream=chunk)
    space = scheme.tape_space()
    users = list(range(scheme.n_users))
    joint = {k: Counter() for k in users}
    cls = Classifier(scheme, _view_fn(view)) if method == "class" else None
    fn = _view_fn(view)
    for _ in range(count):
        tape = space.sample(rng)
        d = tuple(int(x) for x in rng.integers(0, scheme.n_files, size=scheme.n_users))
        if cls is not None:
            for k in users:
                joint[k][(_token_bytes(cls.token(tape, d, k)), d[:k] + d[k + 1:])] += 1
            continue
        files = FileSet.random(rng, scheme.n_files, scheme.file_bits)
        caches, bc = _run(scheme, files, tape, d)
        for k in users:
            key = fn(scheme, files, tape, d, k, caches, bc).keys()[0]
            joint[k][(key, d[:k] + d[k + 1:])] += 1
    return joint


def verify_privacy_estimate(scheme: Scheme, samples: int, seed: int = 0, method: str = "class",
                            view: str = "reduced", threshold: float = 0.01,
                            bootstrap: int = 200, workers: int | None = None) -> Report:
    """Monte Carlo estimate of I(D_{-k}; view_k) with a bootstrap interval.

    ``method="view"`` samples libraries and keys on the full view bytes;
    ``"class"`` keys on view classes, which estimates the class-level upper
    bound and needs far fewer samples.  The Miller-Madow corrected value
    is compared against ``threshold``.  This is an estimate, not a proof.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    if method not in ("class", "view"):
        raise ValueError(f"method must be 'class' or 'view', got {method!r}")
    _view_fn(view)
    start = time.perf_counter()
    workers = worker_count() if workers is None else max(1, workers)
    jobs = []
    for chunk, lo in enumerate(range(0, samples, CHUNK)):
        jobs.append((scheme, method, view, seed, chunk, min(CHUNK, samples - lo)))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_chunk, jobs))
    else:
        parts = [_sample_chunk(job) for job in jobs]
    users = list(range(scheme.n_users))
    per_user = {}
    ok = True
    for k in users:
        joint: Counter = Counter()
        for part in parts:
            joint.update(part[k])
        plug, mm = miller_madow(joint)
        lo, hi = _bootstrap(joint, bootstrap, seed) if bootstrap else (mm, mm)
        est = max(mm, 0.0)
        per_user[k] = {"estimate_bits": est, "plugin_bits": plug, "miller_madow_bits": mm,
                       "ci95": [lo, hi], "distinct_views": len({v for v, _ in joint})}
        ok &= est < threshold
    value = {"samples": samples, "method": method, "threshold": threshold,
             "users": per_user, "estimated": True}
    return _report(scheme, "privacy-estimate", ok, value, start)


def verify_view_class(scheme: Scheme, samples: int = 50, seed: int = 0) -> Report:
    """Cross-check the ``view_class`` fast path against direct computation."""
    start = time.perf_counter()
    fast = Classifier(scheme, use_fast=True)
    slow = Classifier(scheme, use_fast=False)
    rng = make_rng(seed)
    space = scheme.tape_space()
    mismatches = []
    for _ in range(samples):
        tape = space.sample(rng)
        d = tuple(int(x) for x in rng.integers(0, scheme.n_files, size=scheme.n_users))
        for k in range(scheme.n_users):
            if fast.token(tape, d, k) != slow.token(tape, d, k):
                mismatches.append({"user": k, "demands": list(d)})
    value = {"samples": samples, "mismatches": mismatches[:5], "count": len(mismatches),
             "full_rank": all(s[1] == b"full" for sig in slow.signatures.values() for s in sig)}
    return _report(scheme, "view-class", not mismatches, value, start)


# ---------------------------------------------------------------------------
# strong privacy

StatisticFn = Callable[[Scheme, Sequence[int], FileSet, tuple, list, Broadcast], bytes]


def _joint_raw_view(scheme, subset, files, demands, caches, bc) -> bytes:
    parts = []
    for k in subset:
        v = scheme.raw_view(k, demands[k], caches[k], bc)
        parts.append(v.keys()[0])
    return b"|".join(parts)


def presence_statistic(scheme, subset, files, demands, caches, bc) -> bytes:
    """Which masked symbols a library-knowing user finds in the broadcast.

    Uses the scheme's ``presence`` test; it is a function of the joint view
    and the library, so any information it carries is carried by the view.
    """
    return repr([scheme.presence(k, files, caches[k], bc) for k in subset]).encode()


def verify_strong_privacy(scheme: Scheme, files: FileSet | None = None, seed: int = 0,
                          subsets: Iterable[Sequence[int]] | None = None,
                          statistic: StatisticFn | None = None, fix: Mapping | None = None,
                          budget: int = DEFAULT_BUDGET) -> Report:
    """I(D_{-S}; views of S | library) for user subsets S at a fixed library.

    Tapes and demands are enumerated exactly.  ``statistic`` replaces the
    joint view by a function of it (and of the library), which can only
    lower the information, so a positive value is still a witness.  The
    check passes when every subset gives zero.
    """
    start = time.perf_counter()
    K = scheme.n_users
    if files is None:
        files = FileSet.random(make_rng(seed), scheme.n_files, scheme.file_bits)
    if subsets is None:
        subsets = [c for size in range(1, K + 1) for c in itertools.combinations(range(K), size)]
    subsets = [tuple(sorted(s)) for s in subsets]
    space = scheme.tape_space()
    demand_list = [tuple(d) for d in scheme.demand_space()]
    states = space.count(fix) * len(demand_list)
    if states > budget:
        raise BudgetExceeded(states, budget)
    stat = statistic or _joint_raw_view
    joint = {s: Counter() for s in subsets}
    for tape in space.enumerate(fix):
        caches = scheme.setup(files, tape)
        for d in demand_list:
            bc = scheme.deliver(files, tape, d)
            for s in subsets:
                rest = tuple(d[i] for i in range(K) if i not in s)
                joint[s][(stat(scheme, s, files, d, caches, bc), rest)] += 1
    results = {}
    for s in subsets:
        mi, zero = mutual_information(joint[s])
        results[",".join(map(str, s))] = {"mi_bits": mi, "zero": zero}
    ok = all(r["zero"] for r in results.values())
    value = {"subsets": results, "states": states, "witness": not ok}
    return _report(scheme, "strong-privacy", ok, value, start, budget)


# ---------------------------------------------------------------------------
# rates

def measure_rates(factory: Callable[[int], Scheme], ls: Sequence[int] = (1, 2), seed: int = 0,
                  tapes: int = 3, max_demands: int = 64) -> Report:
    """Measured (M, R) and auxiliary bits, checked across two segment sizes.

    M is the largest cache size over users and R the payload size, both
    per file bit; R and the aux size must not depend on the demands, and
    all three must not depend on the segment size.
    """
    start = time.perf_counter()
    rng = make_rng(seed)
    per_l = {}
    problems = []
    first = None
    for l in ls:
        scheme = factory(l)
        first = first or scheme
        F = scheme.file_bits
        demand_list = [tuple(d) for d in scheme.demand_space()]
        if len(demand_list) > max_demands:
            idx = rng.choice(len(demand_list), size=max_demands, replace=False)
            demand_list = [demand_list[i] for i in sorted(idx)]
        space = scheme.tape_space()
        cache_bits, payload_bits, aux_bits = set(), set(), set()
        for _ in range(tapes):
            tape = space.sample(rng)
            files = FileSet.random(rng, scheme.n_files, F)
            caches = scheme.setup(files, tape)
            cache_bits.add(max(c.main_bits for c in caches))
            for d in demand_list:
                bc = scheme.deliver(files, tape, d)
                payload_bits.add(bc.payload_bits)
                aux_bits.add(bc.aux.bit_size)
        if len(payload_bits) != 1:
            problems.append(f"l={l}: payload size depends on the demands: {sorted(payload_bits)}")
        if len(aux_bits) != 1:
            problems.append(f"l={l}: aux size depends on the demands: {sorted(aux_bits)}")
        M = Fraction(max(cache_bits), F)
        R = Fraction(max(payload_bits), F)
        if M != scheme.memory or R != scheme.rate:
            problems.append(f"l={l}: measured ({M}, {R}) but declared ({scheme.memory}, {scheme.rate})")
        per_l[l] = {"F": F, "M": M, "R": R, "aux_bits": max(aux_bits)}
    rows = list(per_l.values())
    for key in ("M", "R", "aux_bits"):
        if len({r[key] for r in rows}) != 1:
            problems.append(f"{key} changes with the segment size")
    value = {"M": rows[0]["M"], "R": rows[0]["R"], "aux_bits": rows[0]["aux_bits"],
             "per_l": per_l, "problems": problems}
    return _report(first, "rates", not problems, value, start)


# ---------------------------------------------------------------------------
# negative controls

class _Wrapper(Scheme):
    def __init__(self, inner: Scheme, name: str):
        self.inner = inner
        self.name = name
        for attr in ("n_files", "n_users", "file_bits", "memory", "rate"):
            setattr(self, attr, getattr(inner, attr))

    def params(self) -> dict:
        return self.inner.params()

    def file_layout(self):
        return self.inner.file_layout()

    def tape_space(self):
        return self.inner.tape_space()

    def setup(self, files, tape):
        return self.inner.setup(files, tape)

    def decode(self, user, demand, cache, broadcast):
        return self.inner.decode(user, demand, cache, broadcast)


class LeakyScheme(_Wrapper):
    """Correct scheme whose aux record also carries the demand vector."""

    def __init__(self, inner: Scheme):
        super().__init__(inner, f"leaky-{inner.name}")

    def deliver(self, files, tape, demands) -> Broadcast:
        bc = self.inner.deliver(files, tape, demands)
        leak = Field("leak", self.n_files, tuple(demands))
        return Broadcast(bc.payload, Record(bc.aux.fields + (leak,)))


class FlippedPayload(_Wrapper):
    """Flips one payload bit, to check that decode failures are caught."""

    def __init__(self, inner: Scheme, bit: int = 0):
        super().__init__(inner, f"flipped-{inner.name}")
        self.bit = bit

    def deliver(self, files, tape, demands) -> Broadcast:
        bc = self.inner.deliver(files, tape, demands)
        payload = bc.payload.copy()
        payload[..., self.bit] ^= 1
        return Broadcast(payload, bc.aux)

    def reduce_view(self, user, demand, cache, broadcast):
        return self.raw_view(user, demand, cache, broadcast)
