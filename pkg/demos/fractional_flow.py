"""Fractional iterates of the quadratic map via its Koenigs function.

h(x) = lim a^-n D^n(x) linearises D, so D^t = h^-1(a^t h). For this map
h(x) = x / (1 - x) and every iterate is known in closed form.

Run: python demos/fractional_flow.py
"""

from __future__ import annotations

import numpy as np

from conjfield import exact_map, flow, koenigs_h, solve_schroeder, subdivide
from conjfield.schroeder import h_prime_product
from conjfield.errors import OutOfRange
from conjfield.truth import quadratic


def main() -> None:
    ex = quadratic()
    D = exact_map(ex.D, ex.dD, (0.0, 0.95), base_hint=0.0)
    (piece,) = subdivide(D, (0.0, 0.95))
    conj = solve_schroeder(D, piece)
    print(f"h(0.5) = {koenigs_h(D, piece, 0.5):.12f}, h'(0.5) = {h_prime_product(D, piece, 0.5):.12f}")
    print(f"{'t':>6} {'D^t(0.5)':>20} {'closed form':>20}")
    for t in (0.0, 0.25, 0.5, 1.0, 2.0, 10.0, -0.5):
        print(f"{t:6.2f} {flow(D, conj, 0.5, t):20.16f} {float(ex.flow(0.5, t)):20.16f}")
    try:
        flow(D, conj, 0.5, -10.0)
    except OutOfRange as exc:
        print(f"t = -10 leaves the table at t = {exc.boundary_time:.4f}")
    s = flow(D, conj, flow(D, conj, 0.3, np.pi / 4), np.e)
    print(f"semigroup gap: {abs(s - flow(D, conj, 0.3, np.pi / 4 + np.e)):.1e}")


if __name__ == "__main__":
    main()
