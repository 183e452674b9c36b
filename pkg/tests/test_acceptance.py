"""One test per acceptance criterion; each prints a PASS/FAIL summary line."""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from privcache.core import make_rng
from privcache.exact_k2 import (
    SchemeD,
    SchemeE,
    scheme_d_slot_counts,
    scheme_d_tuple_counts,
    scheme_e_helper_counts,
    scheme_e_position_counts,
)
from privcache.gf256 import ReedSolomon
from privcache.private_direct import SchemeB, SchemeC
from privcache.private_lift import example1_scheme, scheme_a
from privcache.tradeoff import (
    exact_region,
    k2_points,
    lce,
    order_ratio_check,
    scheme_c_r_values,
)
from privcache.verify import (
    LeakyScheme,
    measure_rates,
    presence_statistic,
    verify_decode_all_files,
    verify_decode_basis,
    verify_privacy_estimate,
    verify_privacy_exact,
    verify_strong_privacy,
)

ESTIMATE_SAMPLES = 10**6


def _finish(record, number, checks, start, limit, detail=""):
    elapsed = time.perf_counter() - start
    checks["runtime"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    text = f"{elapsed:.2f}s (limit {limit:g}s)" + (f"; {detail}" if detail else "")
    if failed:
        text += f"; failed: {', '.join(failed)}"
    record(number, ok, text)
    assert ok, failed


def test_criterion_1_worked_example(record_acceptance):
    start = time.perf_counter()
    scheme = example1_scheme(1)
    rates = measure_rates(example1_scheme, ls=(1, 2))
    decode = verify_decode_all_files(scheme)
    mi = verify_privacy_exact(scheme, files="enumerate")
    checks = {
        "rates": rates.passed and (rates.value["M"], rates.value["R"]) == (Fraction(1, 3), Fraction(4, 3)),
        "decode": decode.passed and decode.value["decodes"] == 4 * 4 * 2 and decode.value["libraries"] == 64,
        "mi_zero": mi.passed and mi.value["mi_bits"] == {0: 0.0, 1: 0.0},
    }
    _finish(record_acceptance, 1, checks, start, 1.0, "(M,R)=(1/3,4/3), I=0 for both users")


def test_criterion_2_lifted_points(record_acceptance):
    start = time.perf_counter()
    expected = {(Fraction(0), Fraction(2)), (Fraction(2, 3), Fraction(1)),
                (Fraction(4, 3), Fraction(1, 3)), (Fraction(2), Fraction(0))}
    measured, private = set(), True
    for r in range(4):
        rep = measure_rates(lambda l, r=r: scheme_a(2, 2, r, l))
        assert rep.passed, rep.value["problems"]
        measured.add((rep.value["M"], rep.value["R"]))
        mi = verify_privacy_exact(scheme_a(2, 2, r, 1), files="enumerate")
        private &= mi.passed
    checks = {"points": measured == expected, "mi_zero": private}
    _finish(record_acceptance, 2, checks, start, 60.0,
            "measured " + ", ".join(f"({m},{r})" for m, r in sorted(measured)))


@pytest.mark.slow
def test_criterion_3_segmented_scheme(record_acceptance):
    start = time.perf_counter()
    rates = measure_rates(lambda l: SchemeC(3, 2, 3, 2, l), ls=(1, 2))
    scheme = SchemeC(3, 2, 3, 2)
    decode = verify_decode_basis(scheme, tapes=1000, seed=3)
    est = verify_privacy_estimate(scheme, ESTIMATE_SAMPLES, seed=3, bootstrap=100)
    worst = max(u["estimate_bits"] for u in est.value["users"].values())
    checks = {
        "rates": rates.passed and (rates.value["M"], rates.value["R"]) == (Fraction(195, 116), Fraction(69, 116)),
        "decode": decode.passed and decode.value["tapes"] >= 1000 and decode.value["demands"] == 9,
        "estimate": est.passed and worst < 0.01,
    }
    _finish(record_acceptance, 3, checks, start, 600.0,
            f"(M,R)=(195/116,69/116); MI estimate {worst:.2e} bits at {ESTIMATE_SAMPLES} samples")


def test_criterion_4_uncoded_scheme(record_acceptance):
    start = time.perf_counter()
    rates_ok = True
    for n, k in [(3, 2), (2, 4)]:
        for m in (Fraction(0), Fraction(n, 3), Fraction(n)):
            unit = (m / n).denominator
            rep = measure_rates(lambda l, n=n, k=k, m=m: SchemeB(n, k, m, l * unit), ls=(1, 2))
            rates_ok &= rep.passed and rep.value["R"] == min(n, k) * (1 - m / n)
    private = True
    for m in (Fraction(0), Fraction(1), Fraction(3, 2), Fraction(3)):
        scheme = SchemeB(3, 2, m, (m / 3).denominator)
        rep = verify_privacy_exact(scheme, files="enumerate")
        private &= rep.passed
    checks = {"rates": rates_ok, "mi_zero": private}
    _finish(record_acceptance, 4, checks, start, 300.0, "R = min(N,K)(1-M/N); exhaustive I=0 at N=3,K=2")


@pytest.mark.slow
def test_criterion_5_two_user_corners(record_acceptance):
    start = time.perf_counter()
    N = 3
    d_rates = measure_rates(lambda l: SchemeD(N, l), ls=(1, 2))
    e_rates = measure_rates(lambda l: SchemeE(N, l), ls=(1, 2))

    # erasure code: every 5 of the 7 positions
    rs = SchemeE(N).code
    assert (rs.n, rs.k) == (7, 5) and isinstance(rs, ReedSolomon)
    msg = make_rng(5).integers(0, 256, size=(4, 5, 8), dtype=np.uint8)
    code = rs.encode(msg)
    rs_ok = all((rs.decode(code[:, list(s)], s) == msg).all()
                for s in itertools.combinations(range(7), 5))

    # reduced statistics
    demands = list(itertools.product(range(N), repeat=2))
    slot_ok = all(set(scheme_d_slot_counts(u, d).items())
                  == {((a, b), 1) for a in range(3) for b in range(3) if a != b}
                  for u in range(2) for d in demands)
    d_tuple_ok = True
    for u in range(2):
        for own in range(N):
            laws = [scheme_d_tuple_counts(N, u, d) for d in demands if d[u] == own]
            d_tuple_ok &= all(law == laws[0] for law in laws)
    e_pos_ok = True
    target = Fraction(math.factorial(N * N - 2 * N + 1), math.factorial(N * N))
    n_tuples = math.perm(N * N, 2 * N - 1)
    reference = None
    for u in range(2):
        for d in demands:
            counts = scheme_e_position_counts(N, u, d)
            total = sum(counts.values())
            e_pos_ok &= len(counts) == n_tuples
            e_pos_ok &= all(Fraction(c, total) == target for c in counts.values())
            support = set(counts)
            reference = support if reference is None else reference
            e_pos_ok &= support == reference
    helper_ok = True
    for u in range(2):
        for d in demands:
            counts = scheme_e_helper_counts(N, u, d)
            for own in range(3):
                row = {t: c for (x, t), c in counts.items() if x == own}
                total = sum(row.values())
                helper_ok &= {t: Fraction(c, total) for t, c in row.items()} == \
                    {t: Fraction(1, 2) for t in range(3) if t != own}

    # full-view estimates: class level for both, view level for D
    d_est = verify_privacy_estimate(SchemeD(N), ESTIMATE_SAMPLES, seed=5, bootstrap=100)
    e_est = verify_privacy_estimate(SchemeE(N), ESTIMATE_SAMPLES, seed=5, bootstrap=100)
    d_view = verify_privacy_estimate(SchemeD(N), 10**5, seed=6, method="view", bootstrap=50)

    def worst(rep):
        return max(u["estimate_bits"] for u in rep.value["users"].values())

    checks = {
        "d_point": d_rates.passed and (d_rates.value["M"], d_rates.value["R"]) == (1, 1),
        "e_point": e_rates.passed and (e_rates.value["M"], e_rates.value["R"]) == (Fraction(9, 5), Fraction(2, 5)),
        "rs_5_of_7": rs_ok,
        "d_slots_one_sixth": slot_ok,
        "d_tuple_law": d_tuple_ok,
        "e_positions": e_pos_ok,
        "e_helper_half": helper_ok,
        "d_estimate": d_est.passed and d_view.passed,
        "e_estimate": e_est.passed,
    }
    _finish(record_acceptance, 5, checks, start, 600.0,
            f"D (1,1), E (9/5,2/5); estimates D {worst(d_est):.1e}/{worst(d_view):.1e} (view), "
            f"E {worst(e_est):.1e} bits")


def test_criterion_6_exact_region(record_acceptance):
    start = time.perf_counter()
    checks = {}
    for n in (2, 3, 4):
        region = exact_region(n)
        points = list(k2_points(n))
        # the constructed schemes themselves, not just the formulas
        built = [SchemeD(n), SchemeE(n)] + [scheme_a(n, 2, r) for r in range(2 * n)]
        built += [SchemeB(n, 2, m, 6) for m in (0, Fraction(n, 3), n)]
        for r in scheme_c_r_values(n, 2):
            built += [SchemeC(n, 2, t, r, r.denominator ** (2 * n - t - 1)) for t in range(1, 2 * n)]
        if n == 2:
            built.append(example1_scheme(1))
        points += [(s.memory, s.rate) for s in built]
        checks[f"inside_N{n}"] = all(region.contains(p) for p in points)
        checks[f"corners_N{n}"] = lce(points).corners == tuple(region.corners())
    _finish(record_acceptance, 6, checks, start, 60.0, "N=2,3,4, K=2")


def test_criterion_7_order_optimality(record_acceptance):
    start = time.perf_counter()
    checks, details = {}, []
    for n, k in [(2, 4), (3, 6), (3, 2), (5, 3)]:
        rep = order_ratio_check(n, k)
        bounds = {row.bound for row in rep.rows}
        expected = {4, 8, 2} if n <= k else {3, 2}
        checks[f"ratios_{n}_{k}"] = rep.ratios_ok and bounds <= expected
        checks[f"tail_{n}_{k}"] = rep.tail_ok
        worst = ", ".join(f"{b}:{float(v):.2f}" for b, v in sorted(rep.worst().items()))
        details.append(f"({n},{k}) {worst}")
    _finish(record_acceptance, 7, checks, start, 60.0,
            "surrogate lower bounds; worst ratios " + "; ".join(details))


def test_criterion_8_negative_controls(record_acceptance):
    start = time.perf_counter()
    leak = verify_privacy_exact(LeakyScheme(example1_scheme(1)), files="enumerate")
    b_strong = verify_strong_privacy(SchemeB(3, 2, 1, 3), seed=8)

    c_scheme = SchemeC(3, 2, 1, 1, 8)
    space = c_scheme.tape_space()
    pinned = space.sample(make_rng(8))
    fix = {n: pinned[n] for n in space.names if not n.startswith("key")}
    c_strong = verify_strong_privacy(c_scheme, seed=8, statistic=presence_statistic, fix=fix)

    a_strong = all(verify_strong_privacy(scheme_a(2, 2, r), seed=8).passed for r in range(4))
    c_bits = max(v["mi_bits"] for v in c_strong.value["subsets"].values())
    b_bits = max(v["mi_bits"] for v in b_strong.value["subsets"].values())
    checks = {
        "leak_one_bit": not leak.passed and leak.value["mi_bits"] == {0: 1.0, 1: 1.0},
        "b_witness": not b_strong.passed and b_strong.value["witness"],
        "c_witness": not c_strong.passed and c_strong.value["witness"],
        "a_strong_private": a_strong,
    }
    _finish(record_acceptance, 8, checks, start, 120.0,
            f"leak 1 bit; witnesses B {b_bits:.3f}, C {c_bits:.3f} bits; A passes")
