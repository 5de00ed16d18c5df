"""Mollification of the one-leg block H4 in five real variables.

H4(x, y, r, s, K) is merely C^1 across its two branch cuts, so the smooth
surrogate is produced by convolving it, as a function of the five real
variables (x, y, r, s, K) with x, y > 0, against the standard compactly
supported bump

    phi(u) ~ exp(-1 / (1 - |u/ell|^2))   on |u| < ell,

discretized on the same grid (spacing <= ell/4) and normalized to unit mass.
Smoothing happens before composing with K = K(r, s); convexity of H4 in the
five variables and the monotonicity -d/dK H4 >= 0 survive averaging exactly,
which is what preserves the one-leg convexity of the composite (at the
weakened constant 1/Q instead of 2/Q).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve

from .bellman import BellmanConfig, b4_batch, evaluate_batch
from .errors import ConfigError, DomainError

VAR_NAMES = ("x", "y", "r", "s", "K")


def h4_raw(x, y, r, s, K):
    """H4 of five real variables (x, y scalars > 0), vectorized."""
    x, y, r, s, K = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                          for v in (x, y, r, s, K)))
    if (r * s - K * K <= 0.0).any():
        raise DomainError("H4 needs K^2 < rs throughout")
    q1 = y * r - x * K
    q2 = x * s - y * K
    r1 = (x * x * s - 2.0 * x * y * K + y * y * r) / (r * s - K * K)
    return np.where((q1 > 0.0) & (q2 > 0.0), r1,
                    np.where(q2 <= 0.0, y * y / s, x * x / r))


@dataclass(frozen=True)
class GridSpec:
    """Uniform 5-D box for the mollification grid, axis order (x, y, r, s, K)."""

    lo: tuple
    hi: tuple
    spacing: float

    def __post_init__(self):
        if len(self.lo) != 5 or len(self.hi) != 5:
            raise ConfigError("grid bounds must have five entries (x, y, r, s, K)")
        if self.spacing <= 0.0:
            raise ConfigError("grid spacing must be positive")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ConfigError("grid box must have positive extent on every axis")

    def axes(self, pad_cells=0):
        return [np.arange(l - pad_cells * self.spacing,
                          h + (pad_cells + 0.5) * self.spacing, self.spacing)
                for l, h in zip(self.lo, self.hi)]


def bump_kernel(ell: float, spacing: float):
    """Discretized normalized bump with support radius ell; weights sum to 1."""
    m = int(np.floor(ell / spacing))
    ax = np.arange(-m, m + 1) * spacing
    grids = np.meshgrid(*([ax] * 5), indexing="ij")
    r2 = sum(g * g for g in grids) / (ell * ell)
    w = np.zeros_like(r2)
    inside = r2 < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return w / w.sum(), m


class MollifiedH4:
    """H4 * phi_ell sampled on a uniform 5-D grid, with interpolation access."""

    def __init__(self, ell, spec, axes, values, kernel, pad_cells):
        self.ell = ell
        self.spec = spec
        self.axes = axes
        self.values = values
        self.kernel = kernel
        self.pad_cells = pad_cells
        self._itp = RegularGridInterpolator(axes, values, method="linear",
                                            bounds_error=True)
        self._grad_itps = None

    def kernel_integral(self):
        """Mass of the discrete kernel (unit by normalization)."""
        return float(self.kernel.sum())

    def raw_values(self):
        grids = np.meshgrid(*self.axes, indexing="ij")
        return h4_raw(*grids)

    def __call__(self, pts):
        return self._itp(np.asarray(pts, dtype=float))

    def gradient(self, pts):
        """Interpolated gradient in the five variables (from grid central differences)."""
        if self._grad_itps is None:
            grads = np.gradient(self.values, *[ax for ax in self.axes], edge_order=2)
            self._grad_itps = [RegularGridInterpolator(self.axes, g, method="linear",
                                                       bounds_error=True)
                               for g in grads]
        pts = np.asarray(pts, dtype=float)
        return np.stack([g(pts) for g in self._grad_itps], axis=-1)

    def cut_distance(self):
        """Per grid node, the normalized distance to the nearer H4 branch cut."""
        x, y, r, s, K = np.meshgrid(*self.axes, indexing="ij")
        q1 = np.abs(y * r - x * K) / np.sqrt(K * K + r * r + x * x + y * y)
        q2 = np.abs(x * s - y * K) / np.sqrt(K * K + s * s + x * x + y * y)
        return np.minimum(q1, q2)

    def deviation_from_raw(self):
        """(max |moll - raw| overall, max over nodes farther than ell from cuts)."""
        dev = np.abs(self.values - self.raw_values())
        far = self.cut_distance() > self.ell
        far_max = float(dev[far].max()) if far.any() else float("nan")
        return float(dev.max()), far_max

    def second_difference_min(self, n_directions=64, seed=0):
        """Min over random integer directions of the centered second difference.

        H4 is jointly convex in its five variables, so both the raw and the
        mollified grids must return nonnegative values up to roundoff.
        """
        rng = np.random.default_rng(seed)
        v = self.values
        worst = np.inf
        for _ in range(n_directions):
            e = rng.integers(-1, 2, size=5)
            if not e.any():
                continue
            sl_p, sl_0, sl_m = [], [], []
            for d in e:
                if d == 1:
                    sl_p.append(slice(2, None)); sl_0.append(slice(1, -1)); sl_m.append(slice(0, -2))
                elif d == -1:
                    sl_p.append(slice(0, -2)); sl_0.append(slice(1, -1)); sl_m.append(slice(2, None))
                else:
                    sl_p.append(slice(None)); sl_0.append(slice(None)); sl_m.append(slice(None))
            dd = v[tuple(sl_p)] - 2.0 * v[tuple(sl_0)] + v[tuple(sl_m)]
            worst = min(worst, float(dd.min()))
        return worst


def mollify_h4(ell: float, spec: GridSpec) -> MollifiedH4:
    """H4 * phi_ell on the grid described by spec.

    The grid must be finer than ell/4 and the box, enlarged by the kernel
    radius, must stay inside {x, y > 0, rs > K^2, K >= 0} so every sample the
    kernel touches is a valid H4 evaluation.
    """
    if ell <= 0.0:
        raise ConfigError("mollification radius must be positive")
    if spec.spacing > ell / 4.0 + 1e-15:
        raise ConfigError(
            f"grid spacing {spec.spacing} too coarse for ell = {ell}; need <= ell/4")
    kernel, m = bump_kernel(ell, spec.spacing)

    padded_axes = spec.axes(pad_cells=m)
    x_lo, y_lo = padded_axes[0][0], padded_axes[1][0]
    r_lo, s_lo = padded_axes[2][0], padded_axes[3][0]
    k_lo, k_hi = padded_axes[4][0], padded_axes[4][-1]
    if x_lo <= 0.0 or y_lo <= 0.0:
        raise ConfigError("padded grid must keep x, y positive")
    if r_lo <= 0.0 or s_lo <= 0.0:
        raise ConfigError("padded grid must keep r, s positive")
    if k_lo < 0.0:
        raise ConfigError("padded grid must keep K nonnegative")
    if k_hi * k_hi >= r_lo * s_lo:
        raise ConfigError("padded grid violates K^2 < rs; shrink the K axis or "
                          "move the (r, s) box away from rs = K^2")

    grids = np.meshgrid(*padded_axes, indexing="ij")
    padded_values = h4_raw(*grids)
    values = fftconvolve(padded_values, kernel, mode="valid")
    axes = spec.axes(pad_cells=0)
    expect = tuple(len(a) for a in axes)
    if values.shape != expect:
        raise ConfigError(f"convolution shape {values.shape} != grid shape {expect}")
    return MollifiedH4(ell=ell, spec=spec, axes=axes, values=values,
                       kernel=kernel, pad_cells=m)


def default_grid_spec(cfg: BellmanConfig, ell=None, cells=8,
                      center_rs=(1.15, 1.15), center_xy=(0.45, 0.45)):
    """A compact box around (x0, y0, r0, s0) with the K axis matched to the
    range of K(rs) over the (r, s) box (plus kernel clearance)."""
    ell = cfg.ell if ell is None else ell
    h = ell / 4.0
    half = cells // 2 * h
    x0, y0 = center_xy
    r0, s0 = center_rs
    lo = [x0 - half, y0 - half, r0 - half, s0 - half]
    hi = [x0 + half, y0 + half, r0 + half, s0 + half]
    # K(rs) over the padded (r, s) box, with clearance for the kernel radius
    pad = (int(np.floor(ell / h)) + 1) * h
    ts = np.array([(lo[2] - pad) * (lo[3] - pad), (hi[2] + pad) * (hi[3] + pad)])
    ks = np.sqrt(ts / cfg.Q) * (1.0 - np.sqrt(ts) / (8.0 * np.sqrt(cfg.Q)))
    k_lo = max(h * np.floor((ks.min() - pad) / h), 0.0)
    k_hi = h * np.ceil((ks.max() + pad) / h)
    return GridSpec(lo=tuple(lo + [k_lo]), hi=tuple(hi + [k_hi]), spacing=h)


def kprime(t, Q):
    """d/dt of K(t) = sqrt(t/Q)(1 - sqrt(t)/(8 sqrt(Q)))."""
    return 1.0 / (2.0 * np.sqrt(Q * t)) - 1.0 / (8.0 * Q)


def composite_one_leg_margins(moll: MollifiedH4, cfg: BellmanConfig,
                              n_pairs=200, seed=0):
    """One-leg margins of B with the H4 block replaced by its mollification,
    at the weakened constant 1/Q.

    Pairs are drawn on grid nodes of the (x, y, r, s) box (only the K
    coordinate is interpolated), with scalar positive x, y as in the real-
    variable mollification setting.  Returns the array of margins
    B(V) - B(V0) - dB(V0)(V - V0) - (1/Q)|x - x0||y - y0|.
    """
    rng = np.random.default_rng(seed)
    axx, axy, axr, axs, axk = moll.axes
    # keep (r, s) pairs admissible for the Bellman domain: 1 <= rs <= Q
    idx = rng.integers(0, [len(axx), len(axy), len(axr), len(axs)],
                       size=(2 * n_pairs, 4))
    x, y = axx[idx[:, 0]], axy[idx[:, 1]]
    r, s = axr[idx[:, 2]], axs[idx[:, 3]]
    keep = (r * s >= 1.0) & (r * s <= cfg.Q)
    x, y, r, s = x[keep], y[keep], r[keep], s[keep]
    t = r * s
    k = np.sqrt(t / cfg.Q) * (1.0 - np.sqrt(t) / (8.0 * np.sqrt(cfg.Q)))
    if (k < axk[0]).any() or (k > axk[-1]).any():
        raise ConfigError("K(rs) leaves the grid's K axis; widen it")

    full = evaluate_batch(x, y, r, s, cfg)
    raw4 = b4_batch(x, y, r, s, cfg)
    pts5 = np.stack([x, y, r, s, k], axis=1)
    m_val = moll(pts5)
    m_grad = moll.gradient(pts5)
    kp = kprime(t, cfg.Q)
    value = full.value + cfg.c7 * (m_val - raw4.value)
    grad = np.empty((len(x), 4))
    grad[:, 0] = full.g[0] - cfg.c7 * raw4.g[0] + cfg.c7 * m_grad[:, 0]
    grad[:, 1] = full.g[1] - cfg.c7 * raw4.g[1] + cfg.c7 * m_grad[:, 1]
    grad[:, 2] = full.g[2] - cfg.c7 * raw4.g[2] + cfg.c7 * (m_grad[:, 2] + m_grad[:, 4] * kp * s)
    grad[:, 3] = full.g[3] - cfg.c7 * raw4.g[3] + cfg.c7 * (m_grad[:, 3] + m_grad[:, 4] * kp * r)

    half = len(x) // 2
    i0, i1 = np.arange(half), np.arange(half, 2 * half)
    dv = np.stack([x[i1] - x[i0], y[i1] - y[i0], r[i1] - r[i0], s[i1] - s[i0]], axis=1)
    lin = np.sum(grad[i0] * dv, axis=1)
    jump = np.abs(dv[:, 0]) * np.abs(dv[:, 1])
    return value[i1] - value[i0] - lin - (1.0 / cfg.Q) * jump
