"""Univariate Gaussian belief manifold.

Points are ``N(mu, 1/tau)``. With ``sigma = tau**-0.5`` the Fisher metric is

    ds^2 = tau dmu^2 + dtau^2 / (2 tau^2) = (dmu^2 + 2 dsigma^2) / sigma^2,

so ``(mu / sqrt(2), sigma)`` is a point of the upper half-plane and the
Fisher-Rao distance is ``sqrt(2)`` times the hyperbolic distance there.
Curvature is the constant -1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .geometry import BeliefPath, Coords, MetricTensor2, gaussian_curvature
from .numerics import ToleranceConfig, integrate_ode

TAU_MIN = 1e-12
TAU_MAX = 1e12
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GaussianBelief:
    mu: float
    tau: float

    manifold = "gaussian"

    def __post_init__(self) -> None:
        mu, tau = float(self.mu), float(self.tau)
        if not math.isfinite(mu):
            raise DomainError(f"mean must be finite, got {mu}")
        if not (TAU_MIN <= tau <= TAU_MAX):
            raise DomainError(f"precision must lie in [{TAU_MIN:g}, {TAU_MAX:g}], got {tau}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau", tau)

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.tau)

    @property
    def variance(self) -> float:
        return 1.0 / self.tau

    @classmethod
    def from_sigma(cls, mu: float, sigma: float) -> "GaussianBelief":
        sigma = float(sigma)
        if not (sigma > 0.0) or not math.isfinite(sigma):
            raise DomainError(f"standard deviation must be positive, got {sigma}")
        return cls(mu, 1.0 / (sigma * sigma))

    @classmethod
    def from_coords(cls, values: Sequence[float], coords: Coords | str = Coords.MU_TAU) -> "GaussianBelief":
        coords = Coords.parse(coords)
        a, b = float(values[0]), float(values[1])
        if coords is Coords.MU_TAU:
            return cls(a, b)
        if coords is Coords.MU_SIGMA:
            return cls.from_sigma(a, b)
        raise DomainError(f"chart {coords.value} does not apply to Gaussian beliefs")

    def coords(self, chart: Coords | str = Coords.MU_TAU) -> tuple[float, float]:
        chart = Coords.parse(chart)
        if chart is Coords.MU_TAU:
            return (self.mu, self.tau)
        if chart is Coords.MU_SIGMA:
            return (self.mu, self.sigma)
        raise DomainError(f"chart {chart.value} does not apply to Gaussian beliefs")


def _half_plane(p: GaussianBelief) -> tuple[float, float]:
    return p.mu / SQRT2, p.sigma


def fisher_info(p: GaussianBelief, coords: Coords | str = Coords.MU_TAU) -> MetricTensor2:
    """Fisher information matrix at ``p``; ``diag(tau, 1/(2 tau^2))`` in (mu, tau)."""
    coords = Coords.parse(coords)
    if coords is Coords.MU_TAU:
        return MetricTensor2(p.tau, 0.0, 0.5 / (p.tau * p.tau), coords)
    if coords is Coords.MU_SIGMA:
        return MetricTensor2(p.tau, 0.0, 2.0 * p.tau, coords)
    raise DomainError(f"chart {coords.value} does not apply to Gaussian beliefs")


def metric_array(x: np.ndarray, coords: Coords | str = Coords.MU_TAU) -> np.ndarray:
    """Raw metric matrix at chart coordinates ``x``; no domain checks (used by stencils)."""
    coords = Coords.parse(coords)
    if coords is Coords.MU_TAU:
        tau = x[1]
        return np.array([[tau, 0.0], [0.0, 0.5 / (tau * tau)]])
    sigma = x[1]
    return np.array([[1.0, 0.0], [0.0, 2.0]]) / (sigma * sigma)


def line_element_sq(p: GaussianBelief, dmu: float, dtau: float) -> float:
    return p.tau * dmu * dmu + dtau * dtau / (2.0 * p.tau * p.tau)


def _hyperbolic_distance(p: GaussianBelief, q: GaussianBelief) -> float:
    (u1, s1), (u2, s2) = _half_plane(p), _half_plane(q)
    # arccosh(1 + 2 t^2) = 2 asinh(t), stable for nearby points
    t = math.hypot(u1 - u2, s1 - s2) / (2.0 * math.sqrt(s1 * s2))
    return 2.0 * math.asinh(t)


def fisher_rao_distance(p: GaussianBelief, q: GaussianBelief) -> float:
    return SQRT2 * _hyperbolic_distance(p, q)


def fisher_rao_distance_sq(p: GaussianBelief, q: GaussianBelief) -> float:
    d = _hyperbolic_distance(p, q)
    return 2.0 * d * d


def fisher_rao_distance_sq_grad(q: GaussianBelief, ref: GaussianBelief) -> tuple[float, float]:
    """Gradient of ``d_F^2(q, ref)`` with respect to q's (mu, sigma)."""
    dh = _hyperbolic_distance(q, ref)
    s1, s2 = q.sigma, ref.sigma
    dmu = q.mu - ref.mu
    dsig = s1 - s2
    zm1 = (0.5 * dmu * dmu + dsig * dsig) / (2.0 * s1 * s2)
    # d(d_F^2) = 4 * d_H / sinh(d_H) * dz, with z = cosh(d_H)
    ratio = 1.0 if dh < 1e-8 else dh / math.sinh(dh)
    dz_dmu = dmu / (2.0 * s1 * s2)
    dz_dsigma = dsig / (s1 * s2) - zm1 / s1
    return 4.0 * ratio * dz_dmu, 4.0 * ratio * dz_dsigma


def kl_divergence(p: GaussianBelief, q: GaussianBelief) -> float:
    """KL(p || q) in nats."""
    x = (q.tau - p.tau) / p.tau  # sigma_p^2 / sigma_q^2 - 1
    dmu = p.mu - q.mu
    val = 0.5 * (x - math.log1p(x)) + 0.5 * q.tau * dmu * dmu
    return max(val, 0.0)


def fixed_sigma_distance(mu1: float, mu2: float, sigma: float) -> float:
    """Distance induced on the fixed-variance slice (a Euclidean line scaled by 1/sigma)."""
    if not (sigma > 0.0):
        raise DomainError(f"sigma must be positive, got {sigma}")
    return abs(float(mu1) - float(mu2)) / float(sigma)


def ambient_fixed_sigma_gap(mu1: float, mu2: float, sigma: float) -> float:
    """Slice distance minus ambient geodesic distance between two equal-variance beliefs.

    Always >= 0: the geodesic leaves the slice by bulging toward larger variance.
    """
    p = GaussianBelief.from_sigma(mu1, sigma)
    q = GaussianBelief.from_sigma(mu2, sigma)
    return fixed_sigma_distance(mu1, mu2, sigma) - fisher_rao_distance(p, q)


class _GeodesicCurve:
    """Constant-speed half-plane geodesic, evaluated through hyperboloid coordinates.

    On the hyperboloid the geodesic is ``(sinh((1-t)d) P + sinh(td) Q) / sinh(d)``;
    the combinations ``1/sigma`` and ``u/sigma`` are linear in the embedding, so
    they interpolate with the same weights and no cancellation in ``1/sigma``.
    """

    def __init__(self, p: GaussianBelief, q: GaussianBelief) -> None:
        (self.u1, self.s1), (self.u2, self.s2) = _half_plane(p), _half_plane(q)
        self.d = _hyperbolic_distance(p, q)

    def _weights(self, t: np.ndarray):
        d = self.d
        if d < 1e-9:
            return 1.0 - t, t, -np.ones_like(t), np.ones_like(t)
        sd = math.sinh(d)
        w1 = np.sinh((1.0 - t) * d) / sd
        w2 = np.sinh(t * d) / sd
        dw1 = -d * np.cosh((1.0 - t) * d) / sd
        dw2 = d * np.cosh(t * d) / sd
        return w1, w2, dw1, dw2

    def __call__(self, t):
        """Return (u, sigma, du/dt, dsigma/dt) at parameters ``t`` in [0, 1]."""
        t = np.asarray(t, dtype=float)
        w1, w2, dw1, dw2 = self._weights(t)
        a1, a2 = 1.0 / self.s1, 1.0 / self.s2
        b1, b2 = self.u1 / self.s1, self.u2 / self.s2
        a = w1 * a1 + w2 * a2
        b = w1 * b1 + w2 * b2
        da = dw1 * a1 + dw2 * a2
        db = dw1 * b1 + dw2 * b2
        sigma = 1.0 / a
        u = b / a
        return u, sigma, (db * a - b * da) / (a * a), -da / (a * a)


def geodesic(p: GaussianBelief, q: GaussianBelief, n_points: int = 64) -> BeliefPath:
    """``n_points`` equally spaced (in arc length) samples of the p -> q geodesic."""
    if n_points < 2:
        raise DomainError("a geodesic needs at least 2 sample points")
    if p == q:
        return BeliefPath((p,) * n_points)
    curve = _GeodesicCurve(p, q)
    t = np.linspace(0.0, 1.0, n_points)
    u, sigma, _, _ = curve(t)
    pts = [p]
    for ui, si in zip(u[1:-1], sigma[1:-1]):
        pts.append(GaussianBelief.from_sigma(SQRT2 * ui, si))
    pts.append(q)
    return BeliefPath(tuple(pts))


def geodesic_length_in_chart(
    p: GaussianBelief, q: GaussianBelief, coords: Coords | str, n_nodes: int = 32
) -> float:
    """Riemannian length of the p -> q geodesic, integrated with the metric of ``coords``.

    The curve is fixed; only the chart used for the velocity and metric changes,
    so results from different charts must agree if the metrics are pullbacks of
    one another.
    """
    coords = Coords.parse(coords)
    curve = _GeodesicCurve(p, q)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    t = 0.5 * (nodes + 1.0)
    u, sigma, du, dsigma = curve(t)
    dmu = SQRT2 * du
    if coords is Coords.MU_SIGMA:
        g11, g22 = 1.0 / sigma**2, 2.0 / sigma**2
        v2 = dsigma
    elif coords is Coords.MU_TAU:
        tau = sigma**-2
        g11, g22 = tau, 0.5 / tau**2
        v2 = -2.0 * sigma**-3 * dsigma
    else:
        raise DomainError(f"chart {coords.value} does not apply to Gaussian beliefs")
    speed = np.sqrt(g11 * dmu * dmu + g22 * v2 * v2)
    return float(0.5 * np.dot(weights, speed))


def sectional_curvature(p: GaussianBelief, h: float = 1e-4) -> float:
    """Numerical Gaussian curvature of the (mu, tau) Fisher metric at ``p``."""
    if not (h > 0.0) or p.tau - 2.0 * h <= 0.0:
        raise DomainError(f"stencil of half-width {2 * h:g} leaves tau > 0 at tau={p.tau}")
    return gaussian_curvature(lambda x: metric_array(x, Coords.MU_TAU), [p.mu, p.tau], h)


def _geodesic_rhs(_t, y):
    # State (mu, l, dmu, dl) with l = log(tau): the metric reads e^l dmu^2 + dl^2 / 2,
    # with Christoffel symbols G^mu_{mu l} = 1/2 and G^l_{mu mu} = -e^l.
    mu_dot, ell, ell_dot = y[..., 2], y[..., 1], y[..., 3]
    out = np.empty_like(y)
    out[..., 0] = mu_dot
    out[..., 1] = ell_dot
    out[..., 2] = -mu_dot * ell_dot
    out[..., 3] = np.exp(ell) * mu_dot * mu_dot
    return out


def shooting_distance(
    pairs: Sequence[tuple[GaussianBelief, GaussianBelief]],
    cfg: ToleranceConfig | None = None,
    newton_iters: int = 60,
) -> np.ndarray:
    """Fisher-Rao distances by solving the geodesic boundary-value problem.

    Integrates the geodesic equations of the (mu, log tau) form of the Fisher
    metric with RK4 and Newton-shoots the initial velocity until the endpoint
    hits the target; the distance is the conserved speed. This never touches
    the half-plane formula and exists to cross-check it. All pairs are solved
    as one batch.
    """
    cfg = cfg or ToleranceConfig()
    n = len(pairs)
    x0 = np.array([[p.mu, math.log(p.tau)] for p, _ in pairs], dtype=float).reshape(n, 2)
    x1 = np.array([[q.mu, math.log(q.tau)] for _, q in pairs], dtype=float).reshape(n, 2)
    v = x1 - x0
    eps = 1e-7

    def shoot(vel: np.ndarray) -> np.ndarray:
        y0 = np.concatenate([np.broadcast_to(x0[:, None, :], vel.shape), vel], axis=-1)
        return integrate_ode(_geodesic_rhs, y0, (0.0, 1.0), cfg)[-1][1][..., :2]

    def speed(vel: np.ndarray) -> np.ndarray:
        return np.sqrt(np.exp(x0[:, 1]) * vel[:, 0] ** 2 + 0.5 * vel[:, 1] ** 2)

    for _ in range(newton_iters):
        probes = np.stack([v, v + [eps, 0.0], v + [0.0, eps]], axis=1)
        ends = shoot(probes)
        resid = ends[:, 0, :] - x1
        if np.all(np.abs(resid) < 1e-12 * (1.0 + np.abs(x1))):
            break
        jac = np.empty((n, 2, 2))
        jac[:, :, 0] = (ends[:, 1, :] - ends[:, 0, :]) / eps
        jac[:, :, 1] = (ends[:, 2, :] - ends[:, 0, :]) / eps
        step = np.linalg.solve(jac, resid[..., None])[..., 0]
        # damp steps that would change the geodesic speed by more than half
        step_speed = np.sqrt(np.exp(x0[:, 1]) * step[:, 0] ** 2 + 0.5 * step[:, 1] ** 2)
        limit = 0.5 * np.maximum(speed(v), 1e-3)
        damp = np.minimum(1.0, limit / np.maximum(step_speed, 1e-300))
        v = v - damp[:, None] * step
    else:
        raise ConvergenceError("geodesic shooting did not converge")
    return speed(v)
