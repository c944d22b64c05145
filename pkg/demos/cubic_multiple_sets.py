"""Cubic field v(x) = log(a) x (1 - x^2) from several short trajectories.

The map has fixed points at -1, 0 and 1. Trajectories are sampled on both
sides of the repelling points, pooled into one pair set, fitted with a
greedy barycentric rational, and the field is assembled piece by piece and
glued across x = +-1.

Run: python demos/cubic_multiple_sets.py
"""

from __future__ import annotations

import math

import numpy as np

from conjfield import Series, TimeSeriesSet, build_pairs_uniform, fit_rational_barycentric, recover_field
from conjfield.truth import cubic


def main() -> None:
    ex = cubic()
    series = []
    for k, end in enumerate([2.039, 2.03, 2.02, 2.01, 2.0]):
        t = np.arange(41.0)
        x = ex.flow(end, t - 40)  # orbits that arrive near the edge of the domain
        series += [Series(f"up{k}", t, x), Series(f"down{k}", t, -x)]
    t, x = ex.trajectory(0.999, 200)
    series += [Series("inner", t, x), Series("inner-", t, -x)]
    pairs = build_pairs_uniform(TimeSeriesSet(tuple(series)), 1.0)
    print(f"{len(pairs)} pairs on {pairs.hull}")

    D = fit_rational_barycentric(pairs)
    print(f"support size {D.info['support']}, multiplier {D.lam:.12f} at x = {D.base_fixed_point:.1e}")
    print("fixed points:", ", ".join(f"{f.location:+.9f} (D'={f.multiplier:.6f})" for f in D.fixed_points))

    grid = np.linspace(-2.04, 2.04, 401)
    est = recover_field(D, "fixed-point", grid=grid)
    xe = np.linspace(-2.04, 2.04, 2001)
    print(f"max |v - v_true| = {np.max(np.abs(est.v(xe) - ex.v(xe))):.2e}")
    print(f"max |g(x) + g(-x)| = {np.max(np.abs(est.g(xe) + est.g(-xe))):.2e}")
    c3 = np.polyfit(xe, est.v(xe), 3)
    print(f"cubic fit: {c3[0]:.6f} x^3 + {c3[1]:.1e} x^2 + {c3[2]:.6f} x + {c3[3]:.1e}"
          f"  (exact {-math.log(0.9):.6f})")


if __name__ == "__main__":
    main()
