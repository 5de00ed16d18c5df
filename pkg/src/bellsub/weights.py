"""A2 weights on finite dyadic filtrations.

A weight is a positive function on the 2^n leaves of a depth-n dyadic tree,
identified with the closure w_infty of the martingale of its conditional
averages.  The inverse weight u is averaged from the leaf reciprocals 1/w,
never as the reciprocal of an average: the A2 product needs true conditional
expectations of w^-1.

On a purely atomic finite filtration every bounded stopping time's
conditional expectation is a node average, so the essential supremum over
adapted stopping times in the A2 characteristic equals the maximum of
<w>_I <u>_I over tree nodes I; that is how `a2_characteristic` computes it.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import DomainError, InvalidInputError


class WeightTree:
    """Positive weight on a depth-n dyadic tree with its conditional averages."""

    def __init__(self, leaf_values):
        leaves = np.asarray(leaf_values, dtype=float).copy()
        if leaves.ndim != 1 or len(leaves) == 0 or (len(leaves) & (len(leaves) - 1)) != 0:
            raise InvalidInputError("leaf count must be a positive power of two")
        if not np.isfinite(leaves).all():
            raise InvalidInputError("non-finite leaf values")
        if (leaves <= 0.0).any():
            raise InvalidInputError("weight leaves must be positive")
        self.depth = int(np.log2(len(leaves)))
        self.leaf_values = leaves
        self.node_avg_w = _upward_averages(leaves)
        self.node_avg_u = _upward_averages(1.0 / leaves)

    def __len__(self):
        return len(self.leaf_values)

    def level(self, k):
        """Conditional averages <w>_I over the 2^k nodes at level k."""
        return self.node_avg_w[k]

    def inverse(self) -> "WeightTree":
        return WeightTree(1.0 / self.leaf_values)


def _upward_averages(leaves):
    levels = [leaves]
    cur = leaves
    while len(cur) > 1:
        cur = 0.5 * (cur[0::2] + cur[1::2])
        levels.append(cur)
    return levels[::-1]   # levels[k] has 2^k entries


def a2_characteristic(w: WeightTree) -> float:
    """Q2[w] = max over nodes of <w>_I <u>_I (>= 1 by Jensen).

    The maximum is clamped from below at 1.0: any dip under 1 is pure float
    roundoff of the reciprocal leaves, never a property of the weight.
    """
    best = max(float((wk * uk).max()) for wk, uk in zip(w.node_avg_w, w.node_avg_u))
    return max(best, 1.0)


def truncate_above(w: WeightTree, a: float) -> WeightTree:
    """Cut the weight from above at level a: leaf-wise min(w, a).

    Never increases the A2 characteristic.
    """
    if not (np.isfinite(a) and a > 0.0):
        raise DomainError(f"truncation level must be positive, got {a}")
    return WeightTree(np.minimum(w.leaf_values, a))


def truncate_two_sided(w: WeightTree, a: float) -> WeightTree:
    """Clamp the weight into [1/a, a] for a >= 1.

    This is the composition: truncate above at a, invert, truncate above at
    a, invert.  The min/max identity 1/min(1/v, a) = max(v, 1/a) collapses
    the composition to a single clamp, which is how it is evaluated (the only
    rounding is the constant 1/a; leaves away from the cut are exact copies).
    Never increases the A2 characteristic.
    """
    if not (np.isfinite(a) and a >= 1.0):
        raise DomainError(f"two-sided truncation needs a >= 1, got {a}")
    return WeightTree(np.clip(w.leaf_values, 1.0 / a, a))


def power_weight_family(delta: float, depth: int) -> WeightTree:
    """Dyadic discretization of t^delta on [0, 1): leaf k holds the exact
    average 2^n * integral of t^delta over [k 2^-n, (k+1) 2^-n).

    Requires delta > -1 for integrability.  The characteristic equals
    1/(1 - delta^2) up to discretization at the leftmost leaf, so it blows up
    as delta -> -1 and is nondecreasing in depth for fixed delta < 0.
    """
    if not (np.isfinite(delta) and delta > -1.0):
        raise DomainError(f"power weight needs delta > -1, got {delta}")
    if depth < 0:
        raise InvalidInputError("depth must be nonnegative")
    n = 2 ** depth
    k = np.arange(n, dtype=float)
    e = delta + 1.0
    leaves = 2.0 ** depth * (np.power(k + 1.0, e) - np.power(k, e)) * 2.0 ** (-depth * e) / e
    return WeightTree(leaves)


def delta_for_characteristic(q2_target: float) -> float:
    """delta < 0 with 1/(1 - delta^2) = q2_target, the power-family inverse map."""
    if q2_target < 1.0:
        raise DomainError("characteristic target must be >= 1")
    return -float(np.sqrt(1.0 - 1.0 / q2_target))


# ---------------------------------------------------------------------------
# serialization: header line "depth n", then 2^n leaves, one repr per line
# ---------------------------------------------------------------------------

def dumps(w: WeightTree) -> str:
    out = io.StringIO()
    out.write(f"depth {w.depth}\n")
    for v in w.leaf_values:
        out.write(repr(float(v)) + "\n")
    return out.getvalue()


def loads(text: str) -> WeightTree:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("depth "):
        raise InvalidInputError("weight file must start with a 'depth n' header")
    try:
        depth = int(lines[0].split()[1])
        vals = np.array([float(ln) for ln in lines[1:]])
    except (IndexError, ValueError) as exc:
        raise InvalidInputError(f"malformed weight file: {exc}") from None
    if len(vals) != 2 ** depth:
        raise InvalidInputError(
            f"weight file declares depth {depth} but carries {len(vals)} leaves")
    return WeightTree(vals)


def save(w: WeightTree, path):
    with open(path, "w") as fh:
        fh.write(dumps(w))


def load(path) -> WeightTree:
    with open(path) as fh:
        return loads(fh.read())
