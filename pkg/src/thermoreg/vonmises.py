"""Circular (von Mises) belief manifold.

The density is ``exp(kappa cos(x - mu)) / (2 pi I0(kappa))``. Its Fisher
metric is diagonal in (mu, kappa):

    g_mumu = kappa A(kappa),    g_kk = A'(kappa) = 1 - A^2 - A / kappa,

with ``A = I1 / I0``. No closed-form geodesic distance is used; distances
come from minimizing a discrete path energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, DomainError
from .geometry import BeliefPath, Coords, MetricTensor2
from .numerics import ToleranceConfig, log_bessel_i0, mean_resultant

KAPPA_MIN = 1e-6
KAPPA_MAX = 1e6
PATH_INTERIOR_POINTS = 64

_SMALL_KAPPA = 1e-2
_LARGE_KAPPA = 500.0


def wrap_angle(x: float) -> float:
    """Map an angle into [-pi, pi)."""
    y = math.fmod(float(x) + math.pi, 2.0 * math.pi)
    if y < 0.0:
        y += 2.0 * math.pi
    y -= math.pi
    return -math.pi if y >= math.pi else y


def angle_diff(a: float, b: float) -> float:
    """Signed shorter-arc difference ``a - b``; an exact half turn resolves to +pi."""
    d = wrap_angle(float(a) - float(b))
    return math.pi if d == -math.pi else d


@dataclass(frozen=True)
class VonMisesBelief:
    mu_dir: float
    kappa: float

    manifold = "vonmises"

    def __post_init__(self) -> None:
        mu, kappa = float(self.mu_dir), float(self.kappa)
        if not math.isfinite(mu):
            raise DomainError(f"mean direction must be finite, got {mu}")
        if not (KAPPA_MIN <= kappa <= KAPPA_MAX):
            raise DomainError(
                f"concentration must lie in [{KAPPA_MIN:g}, {KAPPA_MAX:g}], got {kappa}"
            )
        object.__setattr__(self, "mu_dir", wrap_angle(mu))
        object.__setattr__(self, "kappa", kappa)

    @classmethod
    def from_coords(cls, values: Sequence[float], coords: Coords | str = Coords.DIR_KAPPA) -> "VonMisesBelief":
        if Coords.parse(coords) is not Coords.DIR_KAPPA:
            raise DomainError("von Mises beliefs use the dir-kappa chart")
        return cls(float(values[0]), float(values[1]))

    def coords(self, chart: Coords | str = Coords.DIR_KAPPA) -> tuple[float, float]:
        if Coords.parse(chart) is not Coords.DIR_KAPPA:
            raise DomainError("von Mises beliefs use the dir-kappa chart")
        return (self.mu_dir, self.kappa)


def resultant_derivatives(kappa):
    """Return ``(A, A', A'')`` at ``kappa`` (scalar or array).

    The closed expressions cancel badly at both ends of the range, so small
    and large concentrations switch to their series.
    """
    k = np.asarray(kappa, dtype=float)
    a = np.asarray(mean_resultant(k), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = 1.0 - a * a - a / k
        d2 = -2.0 * a * d1 - d1 / k + a / (k * k)
    k2 = k * k
    d1_small = 0.5 - 3.0 * k2 / 16.0 + 5.0 * k2 * k2 / 96.0 - 77.0 * k2**3 / 6144.0
    d2_small = -3.0 * k / 8.0 + 5.0 * k * k2 / 24.0 - 77.0 * k * k2 * k2 / 1024.0
    x = 1.0 / k
    d1_large = x * x * (0.5 + x * (0.25 + x * (0.375 + x * (25.0 / 32.0 + x * (65.0 / 32.0 + x * 3219.0 / 512.0)))))
    d2_large = -(x**3) * (1.0 + x * (0.75 + x * (1.5 + x * (125.0 / 32.0 + x * 195.0 / 16.0))))
    small = k < _SMALL_KAPPA
    large = k > _LARGE_KAPPA
    d1 = np.where(small, d1_small, np.where(large, d1_large, d1))
    d2 = np.where(small, d2_small, np.where(large, d2_large, d2))
    if np.ndim(kappa) == 0:
        return float(a), float(d1), float(d2)
    return a, d1, d2


def vm_log_density(p: VonMisesBelief, x) -> float:
    return p.kappa * np.cos(np.asarray(x, dtype=float) - p.mu_dir) - (math.log(2.0 * math.pi) + log_bessel_i0(p.kappa))


def vm_fisher_info(p: VonMisesBelief) -> MetricTensor2:
    a, d1, _ = resultant_derivatives(p.kappa)
    return MetricTensor2(p.kappa * a, 0.0, d1, Coords.DIR_KAPPA)


def vm_kl_divergence(p: VonMisesBelief, q: VonMisesBelief) -> float:
    """KL(p || q) in nats."""
    a_p = mean_resultant(p.kappa)
    dmu = angle_diff(p.mu_dir, q.mu_dir)
    val = (
        log_bessel_i0(q.kappa)
        - log_bessel_i0(p.kappa)
        + a_p * (p.kappa - q.kappa * math.cos(dmu))
    )
    return max(val, 0.0)


# --- Fisher-Rao distance by discrete path-energy minimization -------------------
#
# The path is optimized in (delta_mu, log kappa) relative to p's direction so the
# result is exactly rotation invariant and the concentration axis is well scaled.
# In that chart g_mumu = kappa A and g_ll = kappa^2 A'.


def _metric_log_chart(ell: np.ndarray):
    k = np.exp(ell)
    a, d1, d2 = resultant_derivatives(k)
    g_mu = k * a
    g_l = k * k * d1
    dg_mu = k * a + k * k * d1
    dg_l = 2.0 * k * k * d1 + k**3 * d2
    return g_mu, g_l, dg_mu, dg_l


def _segment_terms(nodes: np.ndarray):
    delta = np.diff(nodes, axis=0)
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    g_mu, g_l, dg_mu, dg_l = _metric_log_chart(mid[:, 1])
    sq = g_mu * delta[:, 0] ** 2 + g_l * delta[:, 1] ** 2
    return delta, sq, (g_mu, g_l, dg_mu, dg_l)


def _energy(nodes: np.ndarray) -> float:
    _, sq, _ = _segment_terms(nodes)
    return float((len(nodes) - 1) * np.sum(sq))


def _path_length(nodes: np.ndarray) -> float:
    # Simpson's rule for the metric along each straight chart segment
    delta = np.diff(nodes, axis=0)
    ends_mu, ends_l, _, _ = _metric_log_chart(nodes[:, 1])
    mid_mu, mid_l, _, _ = _metric_log_chart(0.5 * (nodes[1:, 1] + nodes[:-1, 1]))
    d0, d1 = delta[:, 0] ** 2, delta[:, 1] ** 2
    s_left = np.sqrt(ends_mu[:-1] * d0 + ends_l[:-1] * d1)
    s_mid = np.sqrt(mid_mu * d0 + mid_l * d1)
    s_right = np.sqrt(ends_mu[1:] * d0 + ends_l[1:] * d1)
    return float(np.sum((s_left + 4.0 * s_mid + s_right) / 6.0))


def _gradient_and_preconditioner(nodes: np.ndarray):
    n_seg = len(nodes) - 1
    delta, _, (g_mu, g_l, dg_mu, dg_l) = _segment_terms(nodes)
    gd = np.stack([g_mu * delta[:, 0], g_l * delta[:, 1]], axis=1)
    curv = dg_mu * delta[:, 0] ** 2 + dg_l * delta[:, 1] ** 2
    grad = 2.0 * (gd[:-1] - gd[1:])
    grad[:, 1] += 0.5 * (curv[:-1] + curv[1:])
    grad *= n_seg
    bands = []
    for g in (g_mu, g_l):
        ab = np.zeros((3, n_seg - 1))
        ab[1] = 2.0 * n_seg * (g[:-1] + g[1:])
        ab[0, 1:] = -2.0 * n_seg * g[1:-1]
        ab[2, :-1] = -2.0 * n_seg * g[1:-1]
        bands.append(ab)
    return grad, bands


def optimize_path(
    p: VonMisesBelief,
    q: VonMisesBelief,
    cfg: ToleranceConfig | None = None,
    n_interior: int = PATH_INTERIOR_POINTS,
) -> tuple[np.ndarray, float]:
    """Minimize the discrete path energy between p and q.

    Returns the optimized nodes in (delta_mu, log kappa) relative to p's
    direction and the path's Fisher-Rao length. Descent directions are the
    energy gradient preconditioned by the metric-weighted second-difference
    operator, with Armijo backtracking.
    """
    cfg = cfg or ToleranceConfig()
    start = np.array([0.0, math.log(p.kappa)])
    end = np.array([angle_diff(q.mu_dir, p.mu_dir), math.log(q.kappa)])
    t = np.linspace(0.0, 1.0, n_interior + 2)[:, None]
    nodes = start + t * (end - start)
    if np.all(end == start):
        return nodes, 0.0
    lo, hi = math.log(KAPPA_MIN), math.log(KAPPA_MAX)
    energy = _energy(nodes)
    for _ in range(int(cfg.max_iters)):
        grad, bands = _gradient_and_preconditioner(nodes)
        direction = np.stack(
            [-solve_banded((1, 1), bands[c], grad[:, c]) for c in range(2)], axis=1
        )
        decrement = -float(np.sum(grad * direction))
        if decrement <= cfg.rel_tol * energy or decrement <= cfg.abs_tol:
            return nodes, _path_length(nodes)
        step = 1.0
        while True:
            trial = nodes.copy()
            trial[1:-1] += step * direction
            if np.all((trial[:, 1] >= lo) & (trial[:, 1] <= hi)):
                trial_energy = _energy(trial)
                if trial_energy <= energy - 1e-4 * step * decrement:
                    break
            step *= 0.5
            if step < 1e-12:
                # no further decrease representable at this precision
                return nodes, _path_length(nodes)
        nodes, energy = trial, trial_energy
    raise ConvergenceError(
        f"path optimization did not reach rel_tol={cfg.rel_tol:g} in {cfg.max_iters} iterations"
    )


def vm_fisher_rao_distance(
    p: VonMisesBelief, q: VonMisesBelief, cfg: ToleranceConfig | None = None
) -> float:
    return optimize_path(p, q, cfg)[1]


def vm_fisher_rao_distance_sq(
    p: VonMisesBelief, q: VonMisesBelief, cfg: ToleranceConfig | None = None
) -> float:
    d = vm_fisher_rao_distance(p, q, cfg)
    return d * d


def vm_geodesic(p: VonMisesBelief, q: VonMisesBelief, cfg: ToleranceConfig | None = None) -> BeliefPath:
    """The optimized discrete path from p to q as belief points."""
    nodes, _ = optimize_path(p, q, cfg)
    pts = [p]
    pts.extend(VonMisesBelief(p.mu_dir + dm, math.exp(ell)) for dm, ell in nodes[1:-1])
    pts.append(q)
    return BeliefPath(tuple(pts))
