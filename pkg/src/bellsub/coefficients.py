"""Certified component coefficients for the combined Bellman function.

The four blocks carry the following Hessian lower bounds (all divided by Q):

    d2 B1 >= 4 |dx||dy| + (4|x||y|/rs) |dr||ds| - (4|y|/s) |dx||ds| - (4|x|/r) |dy||dr|
    d2 B2 >= (sqrt(3)|x|/2r) |dy||dr| - (sqrt(3)|x||y|/2rs) |dr||ds|
    d2 B3 >= (sqrt(3)|y|/2s) |dx||ds| - (sqrt(3)|x||y|/2rs) |dr||ds|
    d2 B7 >= (|x||y|/256rs) |dr||ds|

Substituting P = |dx|/|x|, T = |dy|/|y|, R = |dr|/r, S = |ds|/s and dividing
by |x||y| turns "the weighted sum dominates 2|dx||dy|" into a four-variable
nonnegativity problem over the nonnegative orthant:

    g(P,T,R,S) = 4 c1 (P-R)(T-S) + (sqrt(3)/2) c2 R(T-S)
                 + (sqrt(3)/2) c3 S(P-R) + (c7/256) R S - 2 P T  >=  0.

Feasibility is equivalent to  4c1 >= 2,  (sqrt(3)/2)c2 >= 4c1 - 2 + 2,
(sqrt(3)/2)c3 likewise, and c7/256 - 2 >= (sum of the two slack terms); the
defaults below sit strictly inside that region and `validate_coefficients`
certifies them on a direction grid plus random directions.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

SQ3H = np.sqrt(3.0) / 2.0

#: defaults embedded in BellmanConfig; validated by the module test suite
#: against 10^6 random directions with margin >= 0.
DEFAULT_COEFFICIENTS = (0.5, 2.4, 2.4, 600.0)


def minimal_coefficients():
    """Boundary point of the feasible region (zero margin along flat directions)."""
    return (0.5, 4.0 / np.sqrt(3.0), 4.0 / np.sqrt(3.0), 512.0)


def reduced_margin(coeffs, P, T, R, S):
    """g(P,T,R,S) above, vectorized over direction arrays."""
    c1, c2, c3, c7 = coeffs
    return (4.0 * c1 * (P - R) * (T - S) + SQ3H * c2 * R * (T - S)
            + SQ3H * c3 * S * (P - R) + (c7 / 256.0) * R * S - 2.0 * P * T)


def _direction_bank(grid_size, n_random, rng):
    axes = np.linspace(0.0, 1.0, grid_size)
    P, T, R, S = np.meshgrid(axes, axes, axes, axes, indexing="ij")
    grid = np.stack([P.ravel(), T.ravel(), R.ravel(), S.ravel()], axis=1)
    grid = grid[np.linalg.norm(grid, axis=1) > 0.0]
    rand = np.abs(rng.standard_normal((n_random, 4)))
    dirs = np.vstack([grid, rand])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def validate_coefficients(coeffs, grid_size=16, n_random=200_000, seed=2024,
                          tol=0.0):
    """Certify the reduced inequality on grid + random unit directions.

    Returns (min_margin, worst_direction); raises ConfigError when the draft
    is infeasible, naming the violated direction.  tol admits margins down to
    -tol, for drafts sitting exactly on the feasibility boundary where float
    rounding of sqrt(3) leaves margins a few ulps under zero.
    """
    c1, c2, c3, c7 = coeffs
    if min(c1, c2, c3) <= 0.0 or c7 < 0.0:
        raise ConfigError("coefficients must be positive (c7 may only vanish in drafts)")
    rng = np.random.default_rng(seed)
    d = _direction_bank(grid_size, n_random, rng)
    margins = reduced_margin(coeffs, d[:, 0], d[:, 1], d[:, 2], d[:, 3])
    i = int(np.argmin(margins))
    worst = d[i]
    if margins[i] < -tol:
        raise ConfigError(
            "coefficient draft infeasible: margin "
            f"{margins[i]:.3e} at direction (|dx|/|x|,|dy|/|y|,|dr|/r,|ds|/s)="
            f"({worst[0]:.6f},{worst[1]:.6f},{worst[2]:.6f},{worst[3]:.6f})")
    return float(margins[i]), worst


def determine_coefficients(cfg_draft=None, grid_size=16, n_random=200_000, seed=2024):
    """Return certified coefficients (c1, c2, c3, c7).

    A draft carrying coefficients (object with c1..c7 attributes, or a
    4-tuple) is validated as-is; with no draft the library defaults are
    validated and returned.  Infeasible drafts raise ConfigError with the
    violated direction.
    """
    if cfg_draft is None:
        coeffs = DEFAULT_COEFFICIENTS
    elif isinstance(cfg_draft, (tuple, list)):
        coeffs = tuple(float(c) for c in cfg_draft)
    else:
        coeffs = (float(cfg_draft.c1), float(cfg_draft.c2),
                  float(cfg_draft.c3), float(cfg_draft.c7))
    validate_coefficients(coeffs, grid_size=grid_size, n_random=n_random, seed=seed)
    return coeffs
