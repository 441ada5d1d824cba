"""Smoke test for the subexp_py extension module.

Build it first, either with `maturin develop -m crates/py/Cargo.toml` or with
`cargo build --release -p subexp-py --features extension-module` and copying
target/release/libsubexp_py.so next to this script as subexp_py.so.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import subexp_py as s


def main():
    law = s.Law("pareto:alpha=3")
    assert abs(law.tail(1.0) - 0.125) < 1e-15
    assert law.mean() is not None

    xs = s.log_grid(10.0, 1000.0, 24)
    (report,) = s.diagnose(law, "s2loc", xs)
    print(report, "last residual", report.observed[-1])
    assert report.verdict == "converged"

    (lloc,) = s.diagnose(s.Law("exp:rate=1"), "lloc", [10.0, 20.0, 40.0, 80.0, 160.0, 320.0])
    assert lloc.verdict == "failed"
    assert all(abs(r - math.exp(-1.0)) < 1e-10 for r in lloc.observed)

    p = s.predict_power(law, 2.0)
    print(p, "relative correction at 1e3", p.relative_correction(1e3))

    regime, nu, _ = s.predict_rv(0.25)
    assert regime == "fractional-index"
    assert abs(nu.coefficient + s.k_alpha(0.25)) < 1e-15
    assert abs(s.c_alpha(0.25) - 0.75 * s.k_alpha(0.25)) < 1e-14

    cp = s.CompoundPoisson("point:at=2", delta=0.5, x_max=60.0)
    want = 1.0 - 1.5 * math.exp(-0.5)
    assert abs(cp.tail(3.0) - want) < 1e-12

    out = s.invert("pareto:alpha=2", 0.5)
    gap = max(abs(a - b) for a, b in zip(out["recovered"], out["jump_grid"]))
    print("inversion: terms", out["terms"], "max Laplace gap", gap)
    assert gap < 1e-6

    try:
        s.invert("point:at=2", 0.7)
    except ValueError as e:
        print("rejected as expected:", e)
    else:
        raise AssertionError("delta above ln 2 was accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
