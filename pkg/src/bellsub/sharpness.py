"""Lower estimates for the growth of predictable-multiplier norms in the
A2 characteristic, on power weights.

For a weight w and test function f on the leaves, independent random signs
average to the weighted square-function form,

    E_sigma ||T_sigma f||_{2,w}^2 = <f>^2 <w> + sum_A (df_A)^2 2^-|A| <w>_A,

so the best test function for that average is a generalized eigenvector of a
PSD quadratic form; an explicit sign choice at least as good as the average
is then found by coordinate ascent over the +-1 multipliers, optionally
alternating with exact re-optimization of f for the current signs (for fixed
sigma, T_sigma is linear and self-adjoint in the unweighted inner product).
The reported ratios are realized by explicit (sigma, f) pairs, so they are
honest lower bounds for the supremum; the search cannot certify the exact
supremum.
"""

from __future__ import annotations

import io

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import DomainError, InvalidInputError
from .martingales import DyadicMartingale, transform
from .weights import WeightTree, a2_characteristic, power_weight_family


def _averages(leaves):
    levels = [leaves]
    cur = leaves
    while len(cur) > 1:
        cur = 0.5 * (cur[0::2] + cur[1::2])
        levels.append(cur)
    return levels[::-1]


def _apply_tsigma(f, sig0, sigs):
    """Leaf values of T_sigma f; sigs[k] has 2^k entries acting on level k+1."""
    lev = _averages(f)
    n = len(lev) - 1
    y = np.full(len(f), sig0 * lev[0][0])
    for k in range(1, n + 1):
        df = lev[k] - np.repeat(lev[k - 1], 2)
        y += np.repeat(np.repeat(sigs[k - 1], 2) * df, 2 ** (n - k))
    return y


def _wnorm2(vals, w):
    return float(np.mean(vals * vals * w))


def _sqfun_eigen_f(w_leaves):
    """Maximizer of the Rademacher-averaged quotient (weighted square function)."""
    n = int(np.log2(len(w_leaves)))
    wavg = _averages(w_leaves)
    D = w_leaves / 2.0 ** n
    sqD = np.sqrt(D)

    def n_apply(f):
        lev = _averages(f)
        grad = np.full(len(f), lev[0][0] * wavg[0][0] / 2.0 ** n)
        for k in range(1, n + 1):
            df = lev[k] - np.repeat(lev[k - 1], 2)
            t = 2.0 ** (-k) * wavg[k] * df
            grad += np.repeat(t, 2 ** (n - k)) * 2.0 ** (-(n - k))
            tp = t.reshape(-1, 2).sum(axis=1)
            grad -= np.repeat(tp, 2 ** (n - k + 1)) * 2.0 ** (-(n - k + 1))
        return grad

    op = LinearOperator((len(w_leaves),) * 2,
                        matvec=lambda g: n_apply(g / sqD) / sqD, dtype=float)
    vals, vecs = eigsh(op, k=1, which="LA", maxiter=5000, tol=1e-10,
                       v0=np.ones(len(w_leaves)))
    return vecs[:, 0] / sqD


def _best_f_given_sigma(w_leaves, sig0, sigs):
    """Exact top test function for fixed signs: generalized eigenvector of
    T_sigma^T W T_sigma against W (T_sigma self-adjoint unweighted)."""
    n = len(w_leaves)
    D = w_leaves / float(n)
    sqD = np.sqrt(D)

    def mv(g):
        f = g / sqD
        y = _apply_tsigma(f, sig0, sigs)
        return _apply_tsigma(D * y, sig0, sigs) / sqD

    op = LinearOperator((n, n), matvec=mv, dtype=float)
    vals, vecs = eigsh(op, k=1, which="LA", maxiter=5000, tol=1e-10,
                       v0=np.ones(n))
    return vecs[:, 0] / sqD


def _ascend_sigma(f, w, sig0, sigs, sweeps=8):
    """Coordinate ascent over the +-1 multipliers; each node takes the sign of
    its increment's weighted correlation with the rest of the transform."""
    n = int(np.log2(len(f)))
    lev = _averages(f)
    dfs = [lev[k] - np.repeat(lev[k - 1], 2) for k in range(1, n + 1)]
    y = _apply_tsigma(f, sig0, sigs)
    for _ in range(sweeps):
        changed = False
        rest = y - sig0 * lev[0][0]
        new0 = 1.0 if float(np.mean(w * rest)) * lev[0][0] >= 0.0 else -1.0
        if new0 != sig0:
            y = y + (new0 - sig0) * lev[0][0]
            sig0 = new0
            changed = True
        for k in range(n):
            dfk = dfs[k]
            span = 2 ** (n - k - 1)
            dfk_leaf = np.repeat(dfk, span)
            cur_leaf = np.repeat(np.repeat(sigs[k], 2) * dfk, span)
            corr = (w * (y - cur_leaf) * dfk_leaf).reshape(2 ** k, -1).sum(axis=1)
            new = np.where(corr >= 0.0, 1.0, -1.0)
            if not np.array_equal(new, sigs[k]):
                y = y - cur_leaf + np.repeat(np.repeat(new, 2) * dfk, span)
                sigs[k] = new
                changed = True
        if not changed:
            break
    return sig0, sigs


def worst_ratio(w: WeightTree, restarts=4, rounds=6, seed=0):
    """Best realized ||T_sigma f||_{2,w} / ||f||_{2,w} found by the search.

    Returns (ratio, details) with the achieved (sigma, f) ratio; the search
    starts from the square-function eigenfunction, alternates exact f-steps
    with sign ascent, and adds random sign restarts.
    """
    wl = w.leaf_values
    n = w.depth
    if n == 0:
        return 1.0, {"rounds_used": 0}
    rng = np.random.default_rng(seed)
    best = 0.0

    f = _sqfun_eigen_f(wl)
    denom = _wnorm2(f, wl)
    starts = [(1.0, [np.ones(2 ** k) for k in range(n)])]
    for _ in range(max(0, restarts - 1)):
        starts.append((rng.choice([-1.0, 1.0]),
                       [np.where(rng.standard_normal(2 ** k) >= 0, 1.0, -1.0)
                        for k in range(n)]))
    best_state = None
    for sig0, sigs in starts:
        sig0, sigs = _ascend_sigma(f, wl, sig0, [s.copy() for s in sigs])
        val = _wnorm2(_apply_tsigma(f, sig0, sigs), wl) / denom
        if val > best:
            best, best_state = val, (sig0, sigs, f)

    sig0, sigs, fcur = best_state
    used = 0
    for used in range(1, rounds + 1):
        fnew = _best_f_given_sigma(wl, sig0, sigs)
        sig0, sigs = _ascend_sigma(fnew, wl, sig0, sigs)
        val = _wnorm2(_apply_tsigma(fnew, sig0, sigs), wl) / _wnorm2(fnew, wl)
        if val <= best * (1.0 + 1e-10):
            break
        best, fcur = val, fnew
    return float(np.sqrt(best)), {"rounds_used": used, "f": fcur,
                                  "sigma0": sig0, "sigma": sigs}


def sharpness_experiment(delta_grid, depth, seed=0, restarts=4, rounds=6):
    """Table of (delta, depth, Q2, worst_ratio) over the power-weight family,
    plus the least-squares slope of log worst_ratio against log Q2."""
    deltas = np.asarray(delta_grid, dtype=float)
    if (deltas <= -1.0).any() or (deltas > 0.0).any():
        raise DomainError("sharpness deltas must lie in (-1, 0]")
    if depth > 14:
        raise InvalidInputError("sharpness experiment capped at depth 14")
    rows = []
    for i, d in enumerate(deltas):
        w = power_weight_family(float(d), depth)
        q2 = a2_characteristic(w)
        ratio, _ = worst_ratio(w, restarts=restarts, rounds=rounds, seed=seed + i)
        rows.append({"delta": float(d), "depth": depth, "Q2": q2,
                     "worst_ratio": ratio})
    slope = fitted_slope(rows)
    return rows, slope


def fitted_slope(rows):
    pts = [(r["Q2"], r["worst_ratio"]) for r in rows if r["Q2"] > 1.0 + 1e-12]
    if len(pts) < 2:
        return float("nan")
    lq = np.log([p[0] for p in pts])
    lr = np.log([p[1] for p in pts])
    return float(np.polyfit(lq, lr, 1)[0])


def rows_to_csv(rows, slope) -> str:
    out = io.StringIO()
    out.write("delta,depth,Q2,worst_ratio\n")
    for r in rows:
        out.write(f"{r['delta']!r},{r['depth']},{r['Q2']!r},{r['worst_ratio']!r}\n")
    out.write(f"# slope {slope!r}\n")
    return out.getvalue()


def realized_transform(w: WeightTree, seed=0):
    """The explicit (f, T_sigma f) pair behind worst_ratio, as martingales."""
    ratio, det = worst_ratio(w, seed=seed)
    X = DyadicMartingale.from_leaves(det["f"])
    Y = transform(X, det["sigma"], det["sigma0"])
    return ratio, X, Y
