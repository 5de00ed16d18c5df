"""Independent oracles shared by the test modules.

These deliberately avoid the library's own evaluation paths: the H4 oracle
maximizes the inner function by golden-section search, and the A2 oracle
compares characteristics in exact big-integer arithmetic over the float leaf
values.
"""

from math import gcd

import numpy as np


def brute_force_h4(a, b, r, s, k, iters=220):
    """sup over lam > 0 of a^2/(r + lam k) + b^2/(s + k/lam), vectorized;
    golden-section on log lam checked against both boundary limits."""
    a, b, r, s, k = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                          for v in (a, b, r, s, k)))

    def beta(loglam):
        lam = np.exp(loglam)
        return a * a / (r + lam * k) + b * b / (s + k / lam)

    lo = np.full(a.shape, -26.0)
    hi = np.full(a.shape, 26.0)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = beta(c), beta(d)
    for _ in range(iters):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
        fc, fd = beta(c), beta(d)
    interior = beta(0.5 * (lo + hi))
    return np.maximum(interior, np.maximum(a * a / r, b * b / s))


def exact_q2_scaled(leaves):
    """Every node's <w>_I <u>_I as exact big-integer rationals.

    Returns (max over nodes of S_w S_u 4^level, denominator scale); the
    characteristic is the first entry over the second times a tree-wide
    constant, so cross-tree comparisons reduce to integer products.
    """

    def to_scaled_ints(vals):
        ratios = [float(v).as_integer_ratio() for v in vals]
        den = 1
        for _, d in ratios:
            den = den * d // gcd(den, d)
        return [n * (den // d) for n, d in ratios], den

    w_int, w_den = to_scaled_ints(leaves)
    u_int, u_den = to_scaled_ints([1.0 / float(v) for v in leaves])
    n = len(leaves).bit_length() - 1
    best = 0
    w_lev, u_lev = w_int, u_int
    for level in range(n, -1, -1):
        scale = 4 ** level
        for sw, su in zip(w_lev, u_lev):
            cand = sw * su * scale
            if cand > best:
                best = cand
        if level:
            w_lev = [w_lev[2 * i] + w_lev[2 * i + 1] for i in range(len(w_lev) // 2)]
            u_lev = [u_lev[2 * i] + u_lev[2 * i + 1] for i in range(len(u_lev) // 2)]
    return best, w_den * u_den


def q2_not_increased_exact(before, after):
    """Exact verdict on Q2[after] <= Q2[before] for float leaf vectors."""
    nb, db = exact_q2_scaled(before)
    na, da = exact_q2_scaled(after)
    return na * db <= nb * da


def q2_not_increased(before_leaves, after_leaves, before_q2, after_q2):
    """Fast float screen with exact big-integer adjudication inside the
    roundoff band; a genuine increase of any size is always detected."""
    if after_q2 <= before_q2 * (1.0 - 1e-9):
        return True
    if after_q2 > before_q2 * (1.0 + 1e-9):
        return False
    return q2_not_increased_exact(before_leaves, after_leaves)
