"""Barycentric rational functions.

A rational function is stored as

    r(x) = sum_j a_j / (x - z_j)  /  sum_j b_j / (x - z_j)

with nodes ``z``, numerator coefficients ``a`` and denominator weights ``b``.
When ``a = b * f`` the function interpolates ``f`` at the nodes. Three
builders are provided: Floater-Hormann interpolation on a fixed grid, a
greedy AAA-style fit, and a least-squares fit with free numerator and
denominator coefficients for noisy data.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import PreconditionError, SpuriousPole


class BarycentricRational:
    def __init__(self, nodes, num, den):
        self.nodes = np.asarray(nodes, dtype=float)
        self.num = np.asarray(num, dtype=float)
        self.den = np.asarray(den, dtype=float)
        if not (self.nodes.shape == self.num.shape == self.den.shape) or self.nodes.ndim != 1:
            raise PreconditionError("nodes, num and den must be 1-D arrays of equal length")

    @classmethod
    def interpolating(cls, nodes, values, weights) -> "BarycentricRational":
        w = np.asarray(weights, dtype=float)
        return cls(nodes, w * np.asarray(values, dtype=float), w)

    def __len__(self) -> int:
        return self.nodes.size

    def _parts(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[:, None] - self.nodes[None, :]
        hit_r, hit_c = np.nonzero(diff == 0)
        diff[hit_r, hit_c] = 1.0
        C = 1.0 / diff
        return x, C, hit_r, hit_c

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x, C, hit_r, hit_c = self._parts(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (C @ self.num) / (C @ self.den)
            r[hit_r] = self.num[hit_c] / self.den[hit_c]
        return float(r[0]) if scalar else r

    def derivative(self, x):
        # Factor out the nearest node j: with d = x - z_j,
        #   r = (a_j + d*A) / (b_j + d*B),  A = sum_{k!=j} a_k/(x-z_k), same for B,
        # which stays well conditioned as d -> 0.
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[:, None] - self.nodes[None, :]
        j = np.argmin(np.abs(diff), axis=1)
        rows = np.arange(x.size)
        d = diff[rows, j]
        diff[rows, j] = np.inf
        C = 1.0 / diff
        A, B = C @ self.num, C @ self.den
        dA, dB = -(C**2) @ self.num, -(C**2) @ self.den
        aj, bj = self.num[j], self.den[j]
        top, bot = aj + d * A, bj + d * B
        dtop, dbot = A + d * dA, B + d * dB
        with np.errstate(divide="ignore", invalid="ignore"):
            dr = (dtop * bot - top * dbot) / bot**2
        return float(dr[0]) if scalar else dr

    def poles(self) -> np.ndarray:
        """Zeros of the denominator, via the usual arrowhead eigenproblem."""
        m = len(self)
        if m < 2:
            return np.empty(0, dtype=complex)
        E = np.zeros((m + 1, m + 1))
        E[0, 1:] = self.den
        E[1:, 0] = 1.0
        E[1:, 1:] = np.diag(self.nodes)
        B = np.eye(m + 1)
        B[0, 0] = 0.0
        ev = scipy.linalg.eigvals(E, B)
        return ev[np.isfinite(ev)]

    def pole_clearance(self, lo: float, hi: float) -> float:
        """Distance in the complex plane from ``[lo, hi]`` to the nearest pole."""
        p = self.poles()
        if p.size == 0:
            return np.inf
        dx = np.maximum(0.0, np.maximum(lo - p.real, p.real - hi))
        return float(np.min(np.hypot(dx, p.imag)))

    def real_poles_in(self, lo: float, hi: float, imag_tol: float = 1e-8) -> np.ndarray:
        p = self.poles()
        scale = max(hi - lo, 1e-300)
        mask = (np.abs(p.imag) <= imag_tol * scale) & (p.real >= lo) & (p.real <= hi)
        return p[mask].real


def floater_hormann_weights(nodes, d: int) -> np.ndarray:
    """Floater-Hormann blending weights of order ``d`` (no real poles)."""
    x = np.asarray(nodes, dtype=float)
    n = x.size - 1
    d = min(d, n)
    w = np.zeros(n + 1)
    for k in range(n + 1):
        total = 0.0
        for i in range(max(0, k - d), min(k, n - d) + 1):
            prod = 1.0
            for j in range(i, i + d + 1):
                if j != k:
                    prod /= abs(x[k] - x[j])
            total += prod
        w[k] = (-1.0) ** (k - d) * total
    return w


def floater_hormann(nodes, values, d: int = 6) -> BarycentricRational:
    return BarycentricRational.interpolating(nodes, values, floater_hormann_weights(nodes, d))


def barycentric_matrix(rational: BarycentricRational, x) -> np.ndarray:
    """Matrix ``L`` with ``r(x) = L @ values`` for an interpolating rational.

    Lets an iteration that only changes nodal values reuse the weights.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = rational.den
    diff = x[:, None] - rational.nodes[None, :]
    hit_r, hit_c = np.nonzero(diff == 0)
    diff[hit_r, hit_c] = 1.0
    C = w[None, :] / diff
    L = C / C.sum(axis=1, keepdims=True)
    L[hit_r, :] = 0.0
    L[hit_r, hit_c] = 1.0
    return L


def aaa_fit(x, y, tol: float = 1e-13, max_support: int = 100) -> tuple[BarycentricRational, list]:
    """Greedy barycentric rational fit.

    Each step adds the sample with the largest current error to the support
    set and recomputes the weights as the smallest right singular vector of
    the Loewner matrix built on the remaining samples. Stops when the max
    error on the samples is below ``tol`` or the support reaches
    ``max_support``.

    Returns the final rational and the full history ``[(rational, err), ...]``.
    """
    Z = np.asarray(x, dtype=float)
    F = np.asarray(y, dtype=float)
    M = Z.size
    max_support = min(max_support, M - 1)
    support = np.zeros(M, dtype=bool)
    R = np.full(M, F.mean())
    history = []
    scale = max(np.max(np.abs(F)), 1e-300)
    for _ in range(max_support):
        j = int(np.argmax(np.where(support, -np.inf, np.abs(F - R))))
        support[j] = True
        z, f = Z[support], F[support]
        rest = ~support
        C = 1.0 / (Z[rest, None] - z[None, :])
        A = F[rest, None] * C - C * f[None, :]
        _, _, vh = np.linalg.svd(A, full_matrices=False) if A.shape[0] >= A.shape[1] else np.linalg.svd(A)
        w = vh[-1].conj()
        r = BarycentricRational.interpolating(z, f, w)
        R = r(Z)
        err = float(np.max(np.abs(F - R)))
        history.append((r, err))
        if err <= tol * max(1.0, scale) or not rest.any():
            break
    return history[-1][0], history


def lsq_fit(x, y, n_support: int, sk_iterations: int = 20, sample_weights=None,
            refine: bool = True, clearance_margin: float = 0.02) -> BarycentricRational:
    """Least-squares barycentric rational with ``n_support`` nodes taken from ``x``.

    Numerator and denominator coefficients are both free, so the result is a
    type ``(m-1, m-1)`` rational that does not pass through the noisy node
    values. The linearised problem is reweighted Sanathanan-Koerner style so
    that the final weights approximate the true least-squares residual.
    ``sample_weights`` scales each residual.

    The linearised problem is biased when ``y`` is noisy, because the noise
    multiplies the denominator coefficients. With ``refine=True`` the result
    is polished by Gauss-Newton on the true residual ``r(x_i) - y_i``.
    Starts whose poles come within ``clearance_margin`` times the data span
    of the data hull are used only when no other start is available.
    """
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    if n_support < 1 or X.size < 2 * n_support - 1:
        raise PreconditionError("not enough samples for the requested number of support nodes")
    order = np.argsort(X)
    picks = np.round(np.linspace(0, X.size - 1, n_support)).astype(int)
    z = X[order][picks]
    # node-polynomial basis l_j(x) = prod_{k != j} (x - z_k), scaled per column
    diff = X[:, None] - z[None, :]
    L = np.ones((X.size, n_support))
    for j in range(n_support):
        for k in range(n_support):
            if k != j:
                L[:, j] *= diff[:, k]
    colscale = np.max(np.abs(L), axis=0)
    colscale[colscale == 0] = 1.0
    L /= colscale
    sw = np.ones(X.size) if sample_weights is None else np.asarray(sample_weights, dtype=float)
    if sw.shape != X.shape or np.any(~np.isfinite(sw)) or np.any(sw < 0):
        raise PreconditionError("sample_weights must be finite, non-negative and match x")
    weights = np.ones(X.size)
    a = b = None
    for _ in range(max(1, sk_iterations)):
        A = np.hstack([L, -Y[:, None] * L]) * (sw * weights)[:, None]
        _, _, vh = np.linalg.svd(A, full_matrices=False)
        v = vh[-1]
        a, b = v[:n_support], v[n_support:]
        q = L @ b
        new = 1.0 / np.maximum(np.abs(q), 1e-14 * np.max(np.abs(q)))
        if np.allclose(new / new.max(), weights / weights.max(), rtol=1e-10, atol=0):
            break
        weights = new / new.max()
    # convert basis coefficients to barycentric ones: sum a_j l_j / sum b_j l_j
    # equals sum (a_j/s_j)/(x - z_j) over sum (b_j/s_j)/(x - z_j)
    if not refine:
        return BarycentricRational(z, a / colscale, b / colscale)
    # Noise can trap the linearised solution in a local minimum that spends
    # degrees on pole/zero pairs, so a second start from the least-squares
    # polynomial (denominator identically 1) is refined as well.
    b_poly = colscale / _lagrange_denominators(z)
    a_poly = np.linalg.lstsq(L * sw[:, None], Y * sw, rcond=None)[0]
    lo, hi = float(X.min()), float(X.max())
    best = None
    for start in ((a, b), (a_poly, b_poly)):
        ra, rb = _refine_lsq(L, Y, sw, *start)
        q = L @ rb
        res = sw * ((L @ ra) / q - Y)
        clearance = BarycentricRational(z, ra / colscale, rb / colscale).pole_clearance(lo, hi)
        key = (clearance < clearance_margin * (hi - lo), float(res @ res))
        if best is None or key < best[0]:
            best = (key, ra, rb)
    _, a, b = best
    return BarycentricRational(z, a / colscale, b / colscale)


def _refine_lsq(L, Y, sw, a, b):
    m = a.size
    pin = int(np.argmax(np.abs(b)))
    free = np.delete(np.arange(m), pin)

    def unpack(p):
        bb = np.empty(m)
        bb[pin] = b[pin]
        bb[free] = p[m:]
        return p[:m], bb

    def residual(p):
        aa, bb = unpack(p)
        return sw * ((L @ aa) / (L @ bb) - Y)

    def jac(p):
        aa, bb = unpack(p)
        q = L @ bb
        r = (L @ aa) / q
        Ja = L / q[:, None]
        Jb = -(r / q)[:, None] * L[:, free]
        return sw[:, None] * np.hstack([Ja, Jb])

    p0 = np.concatenate([a, b[free]])
    with np.errstate(all="ignore"):
        sol = scipy.optimize.least_squares(residual, p0, jac=jac, method="lm", xtol=1e-14, ftol=1e-14)
    if not np.all(np.isfinite(sol.x)) or sol.cost > 0.5 * float(residual(p0) @ residual(p0)):
        return a, b
    return unpack(sol.x)


def _lagrange_denominators(z) -> np.ndarray:
    d = z[:, None] - z[None, :]
    np.fill_diagonal(d, 1.0)
    return np.prod(d, axis=1)


def remove_doublets(r: BarycentricRational, lo: float, hi: float, tol: float = 1e-3) -> BarycentricRational:
    """Cancel real pole/zero pairs inside ``[lo, hi]`` that nearly coincide.

    Such pairs (Froissart doublets) come from fitting noise and leave the
    function unchanged except in a tiny neighbourhood. A pole is dropped
    together with its nearest zero when they are within ``tol * (hi - lo)``.
    The remaining factors are re-expressed in barycentric form on a subset of
    the original nodes.
    """
    poles = r.poles()
    zeros = BarycentricRational(r.nodes, r.num, r.num).poles()
    span = hi - lo
    keep_p = np.ones(poles.size, dtype=bool)
    keep_z = np.ones(zeros.size, dtype=bool)
    for i, p in enumerate(poles):
        if abs(p.imag) > 1e-8 * span or not lo <= p.real <= hi:
            continue
        free = np.flatnonzero(keep_z)
        if free.size == 0:
            break
        k = free[np.argmin(np.abs(zeros[free] - p))]
        if abs(zeros[k] - p) <= tol * span:
            keep_p[i] = keep_z[k] = False
    if keep_p.all():
        return r
    P, Z = poles[keep_p], zeros[keep_z]
    # leading constant from a reference node away from the removed factors
    x0 = float(r.nodes[np.argmax(np.min(np.abs(r.nodes[:, None] - poles[~keep_p][None, :]), axis=1))])
    c = r(x0) * np.prod(x0 - P).real / np.prod(x0 - Z).real
    m = max(P.size, Z.size) + 1
    picks = np.round(np.linspace(0, r.nodes.size - 1, m)).astype(int)
    z = np.sort(r.nodes)[picks]
    ell = _lagrange_denominators(z)
    num = c * np.prod(z[:, None] - Z[None, :], axis=1).real / ell
    den = np.prod(z[:, None] - P[None, :], axis=1).real / ell
    return BarycentricRational(z, num, den)


def check_poles(r: BarycentricRational, lo: float, hi: float) -> None:
    bad = r.real_poles_in(lo, hi)
    if bad.size:
        raise SpuriousPole(f"rational has pole(s) inside the data hull at {np.sort(bad)}")
