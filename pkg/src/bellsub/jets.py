"""Second-order forward-mode derivatives in the four radial variables (a, b, r, s).

Every Bellman component in this package depends on the vector arguments x, y
only through a = |x| and b = |y|, so values, gradients and Hessians of all
components reduce to partial derivatives of scalar profiles phi(a, b, r, s).
A Jet carries the value, the 4 first partials and the symmetric 4x4 matrix of
second partials of such a profile, propagated exactly through arithmetic.
All slots are numpy arrays broadcasting over an arbitrary batch shape, so one
expression evaluates a whole sample batch at once.
"""

from __future__ import annotations

import numpy as np

NVARS = 4  # order of variables: a, b, r, s


class Jet:
    __slots__ = ("val", "g", "h")

    def __init__(self, val, g, h):
        self.val = val
        self.g = g      # shape (4,) + batch
        self.h = h      # shape (4, 4) + batch

    # -- construction -------------------------------------------------

    @staticmethod
    def variable(value, index, batch_shape):
        g = np.zeros((NVARS,) + batch_shape)
        g[index] = 1.0
        h = np.zeros((NVARS, NVARS) + batch_shape)
        return Jet(np.broadcast_to(np.asarray(value, dtype=float), batch_shape).copy(), g, h)

    @staticmethod
    def variables(a, b, r, s):
        a, b, r, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, r, s)))
        shape = a.shape
        return (Jet.variable(a, 0, shape), Jet.variable(b, 1, shape),
                Jet.variable(r, 2, shape), Jet.variable(s, 3, shape))

    @staticmethod
    def constant(value, batch_shape):
        return Jet(np.broadcast_to(np.asarray(value, dtype=float), batch_shape).copy(),
                   np.zeros((NVARS,) + batch_shape),
                   np.zeros((NVARS, NVARS) + batch_shape))

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.g + other.g, self.h + other.h)
        return Jet(self.val + other, self.g.copy(), self.h.copy())

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.g, -self.h)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.g - other.g, self.h - other.h)
        return Jet(self.val - other, self.g.copy(), self.h.copy())

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            cross = self.g[:, None] * other.g[None, :]
            return Jet(self.val * other.val,
                       self.g * other.val + other.g * self.val,
                       self.h * other.val + other.h * self.val + cross + _tr(cross))
        return Jet(self.val * other, self.g * other, self.h * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.val / other, self.g / other, self.h / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        inv = 1.0 / self.val
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def sqrt(self):
        root = np.sqrt(self.val)
        return self._chain(root, 0.5 / root, -0.25 / (root * self.val))

    def square(self):
        return self * self

    def _chain(self, f, fp, fpp):
        """Compose with a scalar map given its value and first two derivatives."""
        outer = self.g[:, None] * self.g[None, :]
        return Jet(f, fp * self.g, fp * self.h + fpp * outer)

    # -- selection ------------------------------------------------------

    @staticmethod
    def where(mask, jtrue, jfalse):
        return Jet(np.where(mask, jtrue.val, jfalse.val),
                   np.where(mask, jtrue.g, jfalse.g),
                   np.where(mask, jtrue.h, jfalse.h))


def _tr(m):
    """Transpose the two leading (variable) axes."""
    return np.swapaxes(m, 0, 1)
