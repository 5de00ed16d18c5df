"""The explicit four-variable Bellman function for weighted differential subordination.

The function lives on the non-convex domain 1 <= r*s <= Q and is assembled
from seven building blocks:

    B1 = <x,x>/r + <y,y>/s
    B2 = <x,x>/(2r - 1/(s(N+1))) + <y,y>/s        N = sqrt(rs/Q)(1 - (rs)^2/(128 Q^2))
    B3 = <x,x>/r + <y,y>/(2s - 1/(r(N+1)))
    B4 = H4(x, y, r, s, K(r,s))                   K = sqrt(rs/Q)(1 - sqrt(rs)/(8 sqrt(Q)))
    B5 = <x,x>/(2r - 1/(s(K+1))) + <y,y>/s
    B6 = <x,x>/r + <y,y>/(2s - 1/(r(K+1)))
    B  = c1 B1 + c2 B2 + c3 B3 + c7 (B4 + B5 + B6)

H4 is the supremum over lam > 0 of <x,x>/(r + lam K) + <y,y>/(s + K/lam); it is
piecewise C^2 with three branches separated by the cuts |y|r - |x|K = 0 and
|x|s - |y|K = 0.  Everything depends on x, y only through |x|, |y|, which is
what lets gradients and Hessian quadratic forms be assembled exactly from the
radial profiles (see `jets`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import Jet
from .coefficients import DEFAULT_COEFFICIENTS
from .errors import ConfigError, DomainError, InvalidInputError

# Relative slack accepted on the 1 <= rs <= Q check; float products of
# admissible (r, s) can land an ulp outside the exact interval.
_RS_SLACK = 1e-9

CUT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class BellmanConfig:
    """Parameters of the Bellman function and its certification domain."""

    Q: float = 16.0
    eps: float = 0.1
    ell: float = 0.05
    dim: int = 2
    c1: float = DEFAULT_COEFFICIENTS[0]
    c2: float = DEFAULT_COEFFICIENTS[1]
    c3: float = DEFAULT_COEFFICIENTS[2]
    c7: float = DEFAULT_COEFFICIENTS[3]

    def __post_init__(self):
        if not np.isfinite([self.Q, self.eps, self.ell]).all():
            raise InvalidInputError("non-finite configuration values")
        if self.Q < 1.0:
            raise ConfigError(f"Q must be >= 1, got {self.Q}")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0.0 < self.ell <= self.eps / 2.0:
            raise ConfigError(f"ell must lie in (0, eps/2], got {self.ell}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if min(self.c1, self.c2, self.c3, self.c7) <= 0.0:
            raise ConfigError("all component coefficients must be positive")

    @property
    def coefficients(self):
        return (self.c1, self.c2, self.c3, self.c7)

    @property
    def size_constant(self):
        """C with B <= C (|x|^2/r + |y|^2/s): each block is bounded by B1."""
        return self.c1 + self.c2 + self.c3 + 3.0 * self.c7

    @property
    def dxx_constant(self):
        """C with (d2_x B dx, dx) <= C eps^-1 |dx|^2 (same constant for d2_y).

        B1, B2, B3, B5, B6 contribute at most 2/r each to the second x
        derivative; H4's interior branch contributes 2s/(rs - K^2), and
        K <= (1 - 1/(8 sqrt(Q))) sqrt(rs/Q) keeps that below (2/r) qfac with
        qfac finite for every Q >= 1.
        """
        qfac = 1.0 / (1.0 - (1.0 - 1.0 / (8.0 * np.sqrt(self.Q))) ** 2 / self.Q)
        return 2.0 * (self.c1 + self.c2 + self.c3) + 2.0 * self.c7 * (qfac + 2.0)


@dataclass(frozen=True)
class StatePoint:
    """The quadruplet V = (x, y, r, s); x, y vectors, r, s positive scalars."""

    x: np.ndarray
    y: np.ndarray
    r: float
    s: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()
                and np.isfinite(self.r) and np.isfinite(self.s)):
            raise InvalidInputError("non-finite state point")
        if self.r <= 0.0 or self.s <= 0.0:
            raise DomainError(f"r, s must be positive, got r={self.r}, s={self.s}")

    @property
    def xnorm(self):
        return float(np.linalg.norm(self.x))

    @property
    def ynorm(self):
        return float(np.linalg.norm(self.y))


@dataclass(frozen=True)
class Perturbation:
    """A direction dV = (dx, dy, dr, ds) for quadratic-form evaluation."""

    dx: np.ndarray
    dy: np.ndarray
    dr: float
    ds: float

    def __post_init__(self):
        object.__setattr__(self, "dx", np.atleast_1d(np.asarray(self.dx, dtype=float)))
        object.__setattr__(self, "dy", np.atleast_1d(np.asarray(self.dy, dtype=float)))
        if not (np.isfinite(self.dx).all() and np.isfinite(self.dy).all()
                and np.isfinite(self.dr) and np.isfinite(self.ds)):
            raise InvalidInputError("non-finite perturbation")


@dataclass(frozen=True)
class DomainFlags:
    in_DQ: bool
    in_DQ_eps: bool
    in_DQ_eps_ell: bool


@dataclass(frozen=True)
class Region:
    """Branch tag of H4 at a point: R1 interior, R2/R3 boundary branches, CUT near a cut."""

    tag: str  # one of R1, R2, R3, CUT


@dataclass
class EvalResult:
    value: float
    gradient: np.ndarray                       # (2*dim + 2,): d/dx, d/dy, d/dr, d/ds
    hessian_form: Callable[[Perturbation], float]
    region: Region = field(default=Region("R1"))
    degraded: bool = False                     # finite-difference fallback was used


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------

def _check_rs(r, s, Q):
    if r <= 0.0 or s <= 0.0:
        raise DomainError(f"r, s must be positive, got r={r}, s={s}")
    t = r * s
    if t < 1.0 - _RS_SLACK or t > Q * (1.0 + _RS_SLACK):
        raise DomainError(f"rs={t} outside [1, Q] with Q={Q}")
    return min(max(t, 1.0), Q)


def eval_K(r, s, Q):
    """K(r,s) = sqrt(rs/Q) (1 - sqrt(rs)/(8 sqrt(Q)));  0 <= K < sqrt(rs/Q) <= 1."""
    t = _check_rs(r, s, Q)
    return np.sqrt(t / Q) * (1.0 - np.sqrt(t) / (8.0 * np.sqrt(Q)))


def eval_N(r, s, Q):
    """N(r,s) = sqrt(rs/Q) (1 - (rs)^2/(128 Q^2));  0 <= N < sqrt(rs/Q) <= 1."""
    t = _check_rs(r, s, Q)
    return np.sqrt(t / Q) * (1.0 - t * t / (128.0 * Q * Q))


def eval_M(r, s, Q):
    """M(r,s) = r - 1/(s(N(r,s)+1)), which satisfies 0 <= M <= r on the domain."""
    return r - 1.0 / (s * (eval_N(r, s, Q) + 1.0))


def domain_check(V: StatePoint, cfg: BellmanConfig) -> DomainFlags:
    """Strict membership flags for D_Q, D_Q^eps and D_Q^{eps,ell}."""
    t = V.r * V.s
    in_dq = 1.0 <= t <= cfg.Q
    in_eps = in_dq and (cfg.eps <= V.r <= 1.0 / cfg.eps) and (cfg.eps <= V.s <= 1.0 / cfg.eps)
    in_ell = in_eps and V.xnorm >= cfg.ell and V.ynorm >= cfg.ell
    return DomainFlags(in_dq, in_eps, in_ell)


def eval_B1(V: StatePoint) -> float:
    """<x,x>/r + <y,y>/s."""
    return float(V.x @ V.x / V.r + V.y @ V.y / V.s)


def _require_in_dq(V, cfg):
    if not domain_check(V, cfg).in_DQ:
        raise DomainError(f"point with rs={V.r * V.s} not in D_Q for Q={cfg.Q}")


def eval_B2(V: StatePoint, cfg: BellmanConfig) -> float:
    _require_in_dq(V, cfg)
    n = eval_N(V.r, V.s, cfg.Q)
    return float(V.x @ V.x / (2.0 * V.r - 1.0 / (V.s * (n + 1.0))) + V.y @ V.y / V.s)


def eval_B3(V: StatePoint, cfg: BellmanConfig) -> float:
    _require_in_dq(V, cfg)
    n = eval_N(V.r, V.s, cfg.Q)
    return float(V.x @ V.x / V.r + V.y @ V.y / (2.0 * V.s - 1.0 / (V.r * (n + 1.0))))


def classify_region(x, y, r, s, K, cut_tolerance=CUT_TOLERANCE) -> Region:
    """Branch of H4 at (x, y, r, s, K):

    R1 when |y|r - |x|K > 0 and |x|s - |y|K > 0 (interior critical point),
    R2 when |x|s - |y|K <= 0 (supremum at the |y| boundary),
    R3 when |y|r - |x|K <= 0 (supremum at the |x| boundary),
    CUT within cut_tolerance * max(|x|,|y|,1) of either boundary.

    Both quantities strictly negative is impossible unless x = y = 0.
    """
    a = float(np.linalg.norm(np.atleast_1d(x)))
    b = float(np.linalg.norm(np.atleast_1d(y)))
    q1 = b * r - a * K
    q2 = a * s - b * K
    scale = max(a, b, 1.0)
    if q1 < 0.0 and q2 < 0.0:
        # the positivity identity a*q2 + b*q1 >= 2ab(sqrt(rs)-K)/sqrt(rs) rules this out
        raise DomainError("both H4 sign quantities negative with x, y nonzero")
    if min(abs(q1), abs(q2)) < cut_tolerance * scale:
        return Region("CUT")
    if q1 > 0.0 and q2 > 0.0:
        return Region("R1")
    return Region("R2") if q2 <= 0.0 else Region("R3")


def eval_H4(x, y, r, s, K) -> float:
    """sup over lam > 0 of <x,x>/(r + lam K) + <y,y>/(s + K/lam).

    Branch values: (<x,x>s - 2|x||y|K + <y,y>r)/(rs - K^2) in R1,
    <y,y>/s in R2, <x,x>/r in R3; the branches agree in the limit at the cuts.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if K < 0.0 or K * K >= r * s:
        raise DomainError(f"need 0 <= K < sqrt(rs), got K={K}, rs={r * s}")
    a = float(np.linalg.norm(x))
    b = float(np.linalg.norm(y))
    reg = classify_region(x, y, r, s, K)
    if reg.tag in ("R1", "CUT"):
        return ((x @ x) * s - 2.0 * a * b * K + (y @ y) * r) / (r * s - K * K)
    if reg.tag == "R2":
        return float(y @ y / s)
    return float(x @ x / r)


def eval_B4(V: StatePoint, cfg: BellmanConfig) -> float:
    _require_in_dq(V, cfg)
    return eval_H4(V.x, V.y, V.r, V.s, eval_K(V.r, V.s, cfg.Q))


def eval_B5(V: StatePoint, cfg: BellmanConfig) -> float:
    _require_in_dq(V, cfg)
    k = eval_K(V.r, V.s, cfg.Q)
    return float(V.x @ V.x / (2.0 * V.r - 1.0 / (V.s * (k + 1.0))) + V.y @ V.y / V.s)


def eval_B6(V: StatePoint, cfg: BellmanConfig) -> float:
    _require_in_dq(V, cfg)
    k = eval_K(V.r, V.s, cfg.Q)
    return float(V.x @ V.x / V.r + V.y @ V.y / (2.0 * V.s - 1.0 / (V.r * (k + 1.0))))


def eval_B7(V: StatePoint, cfg: BellmanConfig) -> float:
    return eval_B4(V, cfg) + eval_B5(V, cfg) + eval_B6(V, cfg)


def bellman_value(x, y, r, s, cfg: BellmanConfig) -> float:
    """Plain value of B at vector arguments, without derivative bookkeeping."""
    a = float(np.linalg.norm(np.atleast_1d(x)))
    b = float(np.linalg.norm(np.atleast_1d(y)))
    return float(profile_value(np.array([a]), np.array([b]),
                                np.array([r]), np.array([s]), cfg)[0])


# ---------------------------------------------------------------------------
# batch evaluation on the radial profile
# ---------------------------------------------------------------------------

@dataclass
class BatchEval:
    """Value and radial partials of B on a batch of points.

    g has shape (4, n) ordered (a, b, r, s); h has shape (4, 4, n).
    region is 1/2/3 per point, cut marks points within cut tolerance of an
    H4 branch boundary (their h entries are the one-sided branch values).
    """

    a: np.ndarray
    b: np.ndarray
    r: np.ndarray
    s: np.ndarray
    value: np.ndarray
    g: np.ndarray
    h: np.ndarray
    region: np.ndarray
    cut: np.ndarray


def _component_jets(a, b, r, s, Q):
    """Jets of the seven blocks; returns (phi1..phi6 jets, region, cut masks)."""
    ja, jb, jr, js = Jet.variables(a, b, r, s)
    t = jr * js
    st = t.sqrt()
    isq = 1.0 / np.sqrt(Q)
    k = st * isq * (1.0 - st * (isq / 8.0))
    n = st * isq * (1.0 - t * t * (1.0 / (128.0 * Q * Q)))

    phi1 = ja * ja / jr + jb * jb / js
    gn2 = (js * (n + 1.0)).reciprocal()
    gn3 = (jr * (n + 1.0)).reciprocal()
    phi2 = ja * ja / (2.0 * jr - gn2) + jb * jb / js
    phi3 = ja * ja / jr + jb * jb / (2.0 * js - gn3)
    gk2 = (js * (k + 1.0)).reciprocal()
    gk3 = (jr * (k + 1.0)).reciprocal()
    phi5 = ja * ja / (2.0 * jr - gk2) + jb * jb / js
    phi6 = ja * ja / jr + jb * jb / (2.0 * js - gk3)

    q1 = jb.val * jr.val - ja.val * k.val
    q2 = ja.val * js.val - jb.val * k.val
    scale = np.maximum(np.maximum(ja.val, jb.val), 1.0)
    cut = np.minimum(np.abs(q1), np.abs(q2)) < CUT_TOLERANCE * scale
    in_r1 = (q1 > 0.0) & (q2 > 0.0)
    region = np.where(in_r1, 1, np.where(q2 <= 0.0, 2, 3))

    h4_r1 = (ja * ja * js - 2.0 * (ja * jb * k) + jb * jb * jr) / (t - k * k)
    h4_r2 = jb * jb / js
    h4_r3 = ja * ja / jr
    phi4 = Jet.where(in_r1, h4_r1, Jet.where(q2 <= 0.0, h4_r2, h4_r3))
    return phi1, phi2, phi3, phi4, phi5, phi6, region, cut


def profile_value(a, b, r, s, cfg):
    """Value-only fast path (no jets)."""
    Q = cfg.Q
    t = r * s
    st = np.sqrt(t)
    k = st / np.sqrt(Q) * (1.0 - st / (8.0 * np.sqrt(Q)))
    n = st / np.sqrt(Q) * (1.0 - t * t / (128.0 * Q * Q))
    b1 = a * a / r + b * b / s
    b2 = a * a / (2.0 * r - 1.0 / (s * (n + 1.0))) + b * b / s
    b3 = a * a / r + b * b / (2.0 * s - 1.0 / (r * (n + 1.0)))
    b5 = a * a / (2.0 * r - 1.0 / (s * (k + 1.0))) + b * b / s
    b6 = a * a / r + b * b / (2.0 * s - 1.0 / (r * (k + 1.0)))
    q1 = b * r - a * k
    q2 = a * s - b * k
    b4 = np.where((q1 > 0.0) & (q2 > 0.0),
                  (a * a * s - 2.0 * a * b * k + b * b * r) / (t - k * k),
                  np.where(q2 <= 0.0, b * b / s, a * a / r))
    c1, c2, c3, c7 = cfg.coefficients
    return c1 * b1 + c2 * b2 + c3 * b3 + c7 * (b4 + b5 + b6)


def evaluate_batch(a, b, r, s, cfg: BellmanConfig) -> BatchEval:
    """B with radial first/second partials on arrays of (|x|, |y|, r, s)."""
    a, b, r, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, r, s)))
    p1, p2, p3, p4, p5, p6, region, cut = _component_jets(a, b, r, s, cfg.Q)
    c1, c2, c3, c7 = cfg.coefficients
    tot = c1 * p1 + c2 * p2 + c3 * p3 + c7 * (p4 + p5 + p6)
    return BatchEval(a=a, b=b, r=r, s=s, value=tot.val, g=tot.g, h=tot.h,
                     region=region, cut=cut)


def b4_batch(a, b, r, s, cfg: BellmanConfig) -> BatchEval:
    """H4 composed with K(r,s) (the B4 block alone), with radial partials."""
    a, b, r, s = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, r, s)))
    _, _, _, p4, _, _, region, cut = _component_jets(a, b, r, s, cfg.Q)
    return BatchEval(a=a, b=b, r=r, s=s, value=p4.val, g=p4.g, h=p4.h,
                     region=region, cut=cut)


def gradient_vectors(batch: BatchEval, xhat, yhat):
    """Full-space gradient rows [phi_a xhat, phi_b yhat, phi_r, phi_s]; (n, 2d+2)."""
    ga = batch.g[0][..., None] * xhat
    gb = batch.g[1][..., None] * yhat
    return np.concatenate([ga, gb, batch.g[2][..., None], batch.g[3][..., None]], axis=-1)


def _tangential_coeff(g, h_diag, radius):
    """phi_a / a with its a -> 0 limit: the profile is an even function of the
    radius there, so the tangential curvature tends to the radial one."""
    return np.where(radius > 0.0, g / np.where(radius > 0.0, radius, 1.0), h_diag)


def hessian_quadratic_form(batch: BatchEval, xhat, yhat, dx, dy, dr, ds):
    """(d^2 B dV, dV) for per-point batches of directions.

    Shapes: xhat, yhat (n, d); dx, dy (n, m, d); dr, ds (n, m); result (n, m).
    The radial/tangential split is exact for profiles of |x|, |y|:
    d^2 = phi_aa p^2 + (phi_a/a) |dx_perp|^2 + ... with p = <xhat, dx>.
    """
    p = np.einsum("nd,nmd->nm", xhat, dx)
    q = np.einsum("nd,nmd->nm", yhat, dy)
    pperp2 = np.maximum(np.sum(dx * dx, axis=-1) - p * p, 0.0)
    qperp2 = np.maximum(np.sum(dy * dy, axis=-1) - q * q, 0.0)
    h = batch.h[..., None]       # (4, 4, n, 1) against (n, m)
    form = (h[0, 0] * p * p + h[1, 1] * q * q + h[2, 2] * dr * dr + h[3, 3] * ds * ds
            + 2.0 * (h[0, 1] * p * q + h[0, 2] * p * dr + h[0, 3] * p * ds
                     + h[1, 2] * q * dr + h[1, 3] * q * ds + h[2, 3] * dr * ds))
    tx = _tangential_coeff(batch.g[0], batch.h[0, 0], batch.a)[:, None]
    ty = _tangential_coeff(batch.g[1], batch.h[1, 1], batch.b)[:, None]
    return form + tx * pperp2 + ty * qperp2


def partial_xx_form(batch: BatchEval, xhat, dx):
    """(d^2_x B dx, dx) alone; xhat (n, d), dx (n, m, d) -> (n, m)."""
    p = np.einsum("nd,nmd->nm", xhat, dx)
    pperp2 = np.maximum(np.sum(dx * dx, axis=-1) - p * p, 0.0)
    tx = _tangential_coeff(batch.g[0], batch.h[0, 0], batch.a)[:, None]
    return batch.h[0, 0][:, None] * p * p + tx * pperp2


def partial_yy_form(batch: BatchEval, yhat, dy):
    """(d^2_y B dy, dy) alone; yhat (n, d), dy (n, m, d) -> (n, m)."""
    q = np.einsum("nd,nmd->nm", yhat, dy)
    qperp2 = np.maximum(np.sum(dy * dy, axis=-1) - q * q, 0.0)
    ty = _tangential_coeff(batch.g[1], batch.h[1, 1], batch.b)[:, None]
    return batch.h[1, 1][:, None] * q * q + ty * qperp2


# ---------------------------------------------------------------------------
# full evaluation of a single state point
# ---------------------------------------------------------------------------

def eval_B(V: StatePoint, cfg: BellmanConfig) -> EvalResult:
    """Value, gradient and Hessian quadratic form of B at V.

    The gradient and the form are assembled analytically from the radial
    profile; at points within cut tolerance of an H4 branch boundary the
    quadratic form falls back to a central second difference of the value
    and the result is flagged degraded.
    """
    if not domain_check(V, cfg).in_DQ_eps:
        raise DomainError("eval_B requires V in D_Q^eps")
    a, b = V.xnorm, V.ynorm
    batch = evaluate_batch(np.array([a]), np.array([b]),
                           np.array([V.r]), np.array([V.s]), cfg)
    xhat = V.x / a if a > 0.0 else np.zeros_like(V.x)
    yhat = V.y / b if b > 0.0 else np.zeros_like(V.y)
    grad = gradient_vectors(batch, xhat[None, :], yhat[None, :])[0]
    is_cut = bool(batch.cut[0])
    region = Region("CUT") if is_cut else Region(f"R{int(batch.region[0])}")

    def analytic_form(dV: Perturbation) -> float:
        return float(hessian_quadratic_form(
            batch, xhat[None, :], yhat[None, :],
            np.asarray(dV.dx, dtype=float)[None, None, :],
            np.asarray(dV.dy, dtype=float)[None, None, :],
            np.array([[dV.dr]]), np.array([[dV.ds]]))[0, 0])

    def fd_form(dV: Perturbation) -> float:
        # scale-aware central second difference through the possible cut
        norm = float(np.sqrt(np.sum(np.square(dV.dx)) + np.sum(np.square(dV.dy))
                             + dV.dr ** 2 + dV.ds ** 2))
        if norm == 0.0:
            return 0.0
        h = 1e-5 * max(a, b, V.r, V.s, 1.0)
        fp = bellman_value(V.x + h * dV.dx, V.y + h * dV.dy, V.r + h * dV.dr, V.s + h * dV.ds, cfg)
        fm = bellman_value(V.x - h * dV.dx, V.y - h * dV.dy, V.r - h * dV.dr, V.s - h * dV.ds, cfg)
        f0 = float(batch.value[0])
        return (fp - 2.0 * f0 + fm) / (h * h)

    return EvalResult(value=float(batch.value[0]), gradient=grad,
                      hessian_form=fd_form if is_cut else analytic_form,
                      region=region, degraded=is_cut)
