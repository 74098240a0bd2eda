#!/usr/bin/env python3
"""Smoke test for the conclab Python extension.

Builds the cdylib with cargo (unless CONCLAB_SKIP_BUILD is set), stages it
under a temporary directory as an importable module, and exercises the main
surfaces against known values.
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_and_stage() -> str:
    if not os.environ.get("CONCLAB_SKIP_BUILD"):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "conc-lab-py"],
            cwd=ROOT,
            check=True,
        )
    src = os.path.join(ROOT, "target", "release", "libconclab.so")
    if not os.path.exists(src):  # macOS naming
        src = os.path.join(ROOT, "target", "release", "libconclab.dylib")
    stage = tempfile.mkdtemp(prefix="conclab_")
    shutil.copy(src, os.path.join(stage, "conclab.so"))
    return stage


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    sys.path.insert(0, build_and_stage())
    import conclab

    # envelope algebra
    assert conclab.nu_superscript([2.0, 3.0, 5.0], 2) == 15.0
    profile = conclab.product_profile(2.0, 1.0, [2.5, 2.5])
    assert profile.regimes() == [(2.0, 2.5), (1.0, 1.0)]
    approx(profile.tail_bound(0.0), 1.0, 0.0)
    single = conclab.hanson_wright_profile(1.0, 1.0)
    # C = 2, c = sqrt2, single effective scale 1: alpha(2) = 2 e^-2 for the
    # gaussian regime; the max with the exponential regime is larger
    assert single.tail_bound(2.0) >= 2.0 * math.exp(-2.0) - 1e-12

    bps = conclab.breakpoints(2.0, 1.0, [1.0, 2.0, 4.0])
    approx(bps[1], 16.0, 1e-12)
    approx(bps[2], 64.0, 1e-12)
    assert math.isinf(bps[3])

    assert conclab.norm_degree("spectral", 50, 200) == 250.0
    approx(conclab.norm_degree("sup", 1024), math.log(1024.0), 1e-12)

    # round-trip through JSON preserves the regimes exactly
    clone = conclab.Profile.from_json(profile.to_json())
    assert clone.regimes() == profile.regimes()

    # samplers: determinism and support
    a = conclab.sample("sphere", 16, 50, 99)
    b = conclab.sample("sphere", 16, 50, 99)
    assert a == b
    for row in a:
        approx(math.sqrt(sum(x * x for x in row)), 4.0, 1e-10)

    # tail fit on a laplace coordinate: exponent near 1
    values = conclab.observe_coordinate("laplace", 8, 100_000, 7)
    fit = conclab.fit_tail(values)
    assert 0.8 <= fit["q_hat"] <= 1.2, fit
    approx(conclab.dkw_band(100_000, 0.05), math.sqrt(math.log(40.0) / 2e5), 1e-12)

    # gaussian diameter is dimension-free
    d = conclab.observable_diameter("gaussian", 256, 20_000, 8, 7)
    assert 0.85 <= d <= 1.15, d

    # resolvent fixed point matches the quadratic closed form
    delta, iterations, converged = conclab.solve_isotropic_delta(100, 400, 0.3)
    assert converged and iterations < 100
    approx(delta, conclab.isotropic_delta(0.25, 0.3), 1e-8)
    approx(delta, 0.3778453250224456, 1e-8)

    # rank-one identities hold to near machine precision
    full_err, action_err = conclab.leave_one_out_errors(30, 120, 0.3, 5)
    assert full_err < 1e-10 and action_err < 1e-10, (full_err, action_err)

    # robust regression with an offset nonlinearity has a nonzero fixed point
    summary = conclab.robust_beta_summary(20, 80, 0.2, 1.0, 31337)
    assert summary["beta_norm"] > 1e-3
    assert summary["max_coupling_norm"] > 0.0

    approx(conclab.gaussian_norm_mean(256), 15.98438, 1e-4)

    print("conclab smoke test: all assertions passed")


if __name__ == "__main__":
    main()
