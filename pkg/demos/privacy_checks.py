"""Exact, sampled and strong privacy checks side by side.

    python3 demos/privacy_checks.py
"""

from fractions import Fraction

from privcache.exact_k2 import SchemeD
from privcache.private_direct import SchemeB
from privcache.private_lift import example1_scheme, scheme_a
from privcache.verify import (
    LeakyScheme,
    verify_privacy_estimate,
    verify_privacy_exact,
    verify_strong_privacy,
)


def show(label, rep):
    print(f"{label:38s} {rep.result:7s} {rep.to_json()[:110]}")


def main() -> None:
    show("lifted N=K=2 r=1, exact", verify_privacy_exact(scheme_a(2, 2, 1), files="enumerate"))
    show("uncoded N=3 K=2 M=3/2, exact",
         verify_privacy_exact(SchemeB(3, 2, Fraction(3, 2), 2), files="enumerate"))
    show("leaky worked example, exact",
         verify_privacy_exact(LeakyScheme(example1_scheme(1)), files="enumerate"))
    show("N=3 two-user corner (1,1), sampled",
         verify_privacy_estimate(SchemeD(3), 20000, seed=1, bootstrap=20))
    show("uncoded N=3 K=2 M=1, strong", verify_strong_privacy(SchemeB(3, 2, 1, 3), seed=1))
    show("lifted N=K=2 r=1, strong", verify_strong_privacy(scheme_a(2, 2, 1), seed=1))


if __name__ == "__main__":
    main()
