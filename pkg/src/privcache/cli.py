"""Command line: run a scheme, verify it, or print a memory-rate curve.

Exit codes: 0 pass, 1 a check failed, 2 bad input, 3 refused over budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from . import tradeoff
from .core import FileSet, Scheme, check_demands, make_rng
from .exact_k2 import SchemeD, SchemeE
from .private_direct import SchemeB, SchemeC
from .private_lift import example1_scheme, scheme_a
from .verify import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Report,
    measure_rates,
    presence_statistic,
    verify_decode_basis,
    verify_lemma3,
    verify_privacy_estimate,
    verify_privacy_exact,
    verify_strong_privacy,
    verify_weak_privacy,
)

SCHEMES = ("example1", "a", "b", "c", "d", "e")
CURVES = ("schemeA", "schemeB", "schemeC", "exactRegion", "man", "cutset")
MODES = ("decode", "privacy", "weak", "strong", "lemma3", "rates")
EXHAUSTIVE_TAPES = 4096
ENUMERATE_FILE_BITS = 20


class InputError(ValueError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _demands(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"demands must be comma-separated integers: {text!r}") from None


def parse_sweep(text: str | None) -> list[int] | None:
    """``"a:b"`` is the inclusive range, ``"x,y,z"`` a list; ``None`` means default."""
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"bad sweep {text!r}; use a:b or a,b,c") from None


def build_scheme(name: str, n: int | None, k: int | None, t: int | None, r: Fraction | None,
                 m: Fraction | None, l: int | None) -> Scheme:
    def need(value, flag):
        if value is None:
            raise InputError(f"scheme {name} needs {flag}")
        return value

    try:
        if name == "example1":
            return example1_scheme(l or 1)
        if name == "a":
            return scheme_a(need(n, "--n"), need(k, "--k"), int(r if r is not None else 1), l or 1)
        if name == "b":
            n, k = need(n, "--n"), need(k, "--k")
            memory = m if m is not None else Fraction(0)
            return SchemeB(n, k, memory, (l or 1) * (memory / n).denominator)
        if name == "c":
            n, k = need(n, "--n"), need(k, "--k")
            t = need(t, "--t")
            r = r if r is not None else Fraction(1)
            unit = r.denominator ** max(n * k - t - 1, 0)
            return SchemeC(n, k, t, r, (l or 1) * unit)
        if name == "d":
            _two_users(k)
            return SchemeD(need(n, "--n"), l or 1)
        if name == "e":
            _two_users(k)
            return SchemeE(need(n, "--n"), l or 1)
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    raise InputError(f"unknown scheme {name!r}")


def _two_users(k: int | None) -> None:
    if k not in (None, 2):
        raise InputError("schemes d and e are for two users")


# ---------------------------------------------------------------------------
# commands

def cmd_run(args) -> tuple[int, str]:
    scheme = build_scheme(args.scheme, args.n, args.k, args.t, args.r, args.m, args.l)
    rng = make_rng(args.seed)
    if args.demands is None:
        demands = tuple(int(x) for x in rng.integers(0, scheme.n_files, size=scheme.n_users))
    else:
        try:
            demands = check_demands(args.demands, scheme.n_files, scheme.n_users)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    files = FileSet.random(rng, scheme.n_files, scheme.file_bits)
    tape = scheme.tape_space().sample(rng)
    caches = scheme.setup(files, tape)
    bc = scheme.deliver(files, tape, demands)
    decoded = []
    for user, d in enumerate(demands):
        got = scheme.decode(user, d, caches[user], bc)
        decoded.append(bool((got == files.file(d)).all()))
    F = scheme.file_bits
    measured_m = Fraction(max(c.main_bits for c in caches), F)
    measured_r = Fraction(bc.payload_bits, F)
    transcript = {
        "scheme": scheme.name,
        "params": {k: str(v) for k, v in scheme.params().items()},
        "seed": args.seed,
        "demands": list(demands),
        "file_bits": F,
        "cache_bits": [c.main_bits for c in caches],
        "cache_key_bits": [c.shared.bit_size for c in caches],
        "payload_bits": bc.payload_bits,
        "aux_bits": bc.aux.bit_size,
        "tape": tape.serialize().hex(),
        "decoded": decoded,
        "M": str(measured_m),
        "R": str(measured_r),
        "declared": {"M": str(scheme.memory), "R": str(scheme.rate)},
    }
    ok = all(decoded) and measured_m == scheme.memory and measured_r == scheme.rate
    return (0 if ok else 1), json.dumps(transcript, sort_keys=True)


def _tapes_for_decode(scheme: Scheme, samples: int | None):
    if samples is not None:
        return samples
    return None if scheme.tape_space().size <= EXHAUSTIVE_TAPES else 1000


def _strong(scheme: Scheme, args) -> Report:
    if hasattr(scheme, "presence"):
        # enumerate keys and demands; slot shuffles and pads are pinned, the
        # presence pattern does not depend on them
        space = scheme.tape_space()
        pinned = space.sample(make_rng(args.seed))
        fix = {n: pinned[n] for n in space.names if not n.startswith("key")}
        return verify_strong_privacy(scheme, seed=args.seed, statistic=presence_statistic,
                                     fix=fix, budget=args.budget)
    return verify_strong_privacy(scheme, seed=args.seed, budget=args.budget)


def cmd_verify(args) -> tuple[int, str]:
    scheme = build_scheme(args.scheme, args.n, args.k, args.t, args.r, args.m, args.l)
    mode = args.mode
    if mode == "decode":
        report = verify_decode_basis(scheme, tapes=_tapes_for_decode(scheme, args.samples),
                                     seed=args.seed)
    elif mode == "privacy":
        if args.samples is not None:
            report = verify_privacy_estimate(scheme, args.samples, seed=args.seed)
        else:
            files = ("enumerate" if scheme.n_files * scheme.file_bits <= ENUMERATE_FILE_BITS
                     else "integrate")
            report = verify_privacy_exact(scheme, files=files, budget=args.budget)
    elif mode == "weak":
        files = "enumerate" if scheme.n_files * scheme.file_bits <= ENUMERATE_FILE_BITS else "integrate"
        report = verify_weak_privacy(scheme, files=files, budget=args.budget)
    elif mode == "strong":
        report = _strong(scheme, args)
    elif mode == "lemma3":
        files = "enumerate" if scheme.n_files * scheme.file_bits <= ENUMERATE_FILE_BITS else "integrate"
        report = verify_lemma3(scheme, files=files, budget=args.budget)
    elif mode == "rates":
        def factory(l):
            return build_scheme(args.scheme, args.n, args.k, args.t, args.r, args.m, l)
        base = args.l or 1
        report = measure_rates(factory, ls=(base, 2 * base), seed=args.seed)
    else:
        raise InputError(f"unknown mode {mode!r}")
    report.budget = args.budget
    return (0 if report.passed else 1), report.to_json()


def _dense(n: int, samples: int = 64) -> list[Fraction]:
    return [Fraction(n * j, samples) for j in range(samples + 1)]


def curve_points(source: str, n: int, k: int | None, t_sweep: list[int] | None,
                 r: Fraction | None, m: Fraction | None) -> list[tradeoff.MemoryRatePoint]:
    if n is None or n < 1:
        raise InputError("curves need --n >= 1")
    try:
        if source == "exactRegion":
            region = tradeoff.exact_region(n, 2 if k is None else k)
            pts = set(region.corners())
            pts |= {tradeoff.MemoryRatePoint(x, region.boundary(x)) for x in _dense(n)}
            return sorted(pts)
        if source == "cutset":
            return [tradeoff.MemoryRatePoint(x, tradeoff.cutset_bound(n, x)) for x in _dense(n)]
        if k is None or k < 1:
            raise InputError(f"curve {source} needs --k >= 1")
        if source == "schemeA":
            return tradeoff.scheme_a_points(n, k)
        if source == "man":
            return tradeoff.man_points(n, k)
        if source == "schemeB":
            if m is not None:
                return [tradeoff.scheme_b_point(n, k, m)]
            return tradeoff.scheme_b_points(n, k)
        if source == "schemeC":
            ratios = [r] if r is not None else tradeoff.scheme_c_r_values(n, k)
            ts = list(range(1, n * k)) if t_sweep is None else t_sweep
            return [tradeoff.scheme_c_point(n, k, t, x) for x in ratios for t in ts]
    except InputError:
        raise
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    raise InputError(f"unknown curve source {source!r}")


def cmd_curve(args) -> tuple[int, str]:
    pts = curve_points(args.scheme, args.n, args.k, parse_sweep(args.t_sweep), args.r, args.m)
    return 0, tradeoff.format_csv(pts).rstrip("\n")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privcache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, schemes, t_sweep=False):
        p.add_argument("--scheme", required=True, choices=schemes)
        p.add_argument("--n", type=int, help="number of files")
        p.add_argument("--k", type=int, help="number of users")
        if t_sweep:
            p.add_argument("--t", dest="t_sweep", help="t values, a:b or a,b,c")
        else:
            p.add_argument("--t", type=int, help="smallest segment label size (scheme c)")
        p.add_argument("--r", type=_fraction, help="r parameter (rational for scheme c)")
        p.add_argument("--m", type=_fraction, help="memory (scheme b)")
        p.add_argument("--out", help="also write the output to this file")

    run = sub.add_parser("run", help="run one scheme end to end")
    common(run, SCHEMES)
    run.add_argument("--l", type=int, help="segment size multiplier")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--demands", type=_demands)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="decode, privacy and rate checks")
    common(ver, SCHEMES)
    ver.add_argument("--l", type=int, help="segment size multiplier")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--mode", choices=MODES, default="decode")
    ver.add_argument("--samples", type=int, help="sample tapes instead of enumerating")
    ver.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    ver.set_defaults(func=cmd_verify)

    cur = sub.add_parser("curve", help="memory-rate points as M,R CSV")
    common(cur, CURVES, t_sweep=True)
    cur.set_defaults(func=cmd_curve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(json.dumps({"result": "refused", "states": exc.states, "budget": exc.budget}))
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
