"""Euclidean and Fisher-Rao penalties, their gradients, and natural-gradient steps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import gaussian as gm
from . import vonmises as vm
from .errors import DomainError, ManifoldMismatchError, SingularMetricError
from .geometry import Coords, MetricTensor2
from .numerics import ToleranceConfig, finite_diff_gradient

Belief = Union[gm.GaussianBelief, vm.VonMisesBelief]


class PenaltyKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    FISHER_RAO = "fisher-rao"

    @classmethod
    def parse(cls, value: "PenaltyKind | str") -> "PenaltyKind":
        if isinstance(value, PenaltyKind):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"fisherrao": "fisher-rao", "fr": "fisher-rao", "ridge": "euclidean"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown penalty kind {value!r}") from None


def learner_chart(point: Belief) -> Coords:
    """The chart learners update in: (mu, tau) for Gaussians, (mu_dir, kappa) for von Mises."""
    if isinstance(point, gm.GaussianBelief):
        return Coords.MU_TAU
    if isinstance(point, vm.VonMisesBelief):
        return Coords.DIR_KAPPA
    raise ManifoldMismatchError(f"{type(point).__name__} is not a belief point")


@dataclass(frozen=True)
class PenaltySpec:
    """A squared-distance penalty ``weight * d^2(q, reference)``.

    Euclidean penalties must name their chart: their value depends on it.
    """

    kind: PenaltyKind
    reference: Belief
    weight: float = 1.0
    coords: Optional[Coords] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PenaltyKind.parse(self.kind))
        if not (self.weight >= 0.0) or not math.isfinite(self.weight):
            raise DomainError(f"penalty weight must be finite and >= 0, got {self.weight}")
        chart = learner_chart(self.reference)
        if self.kind is PenaltyKind.EUCLIDEAN:
            if self.coords is None:
                raise DomainError("a Euclidean penalty needs an explicit coordinate chart")
            coords = Coords.parse(self.coords)
            # validates that the chart fits the manifold
            self.reference.coords(coords)
            object.__setattr__(self, "coords", coords)
        elif self.coords is not None:
            object.__setattr__(self, "coords", Coords.parse(self.coords))
        else:
            object.__setattr__(self, "coords", chart)


def _check_same_manifold(spec: PenaltySpec, q: Belief) -> None:
    if type(q) is not type(spec.reference):
        raise ManifoldMismatchError(
            f"penalty reference is {type(spec.reference).__name__}, got {type(q).__name__}"
        )


def _coord_delta(q: Belief, ref: Belief, chart: Coords) -> np.ndarray:
    a = q.coords(chart)
    b = ref.coords(chart)
    d = np.array([a[0] - b[0], a[1] - b[1]], dtype=float)
    if chart is Coords.DIR_KAPPA:
        d[0] = vm.angle_diff(a[0], b[0])
    return d


def penalty_value(spec: PenaltySpec, q: Belief, cfg: ToleranceConfig | None = None) -> float:
    _check_same_manifold(spec, q)
    if spec.weight == 0.0:
        return 0.0
    if spec.kind is PenaltyKind.EUCLIDEAN:
        d = _coord_delta(q, spec.reference, spec.coords)
        return spec.weight * float(d @ d)
    if isinstance(q, gm.GaussianBelief):
        return spec.weight * gm.fisher_rao_distance_sq(q, spec.reference)
    return spec.weight * vm.vm_fisher_rao_distance_sq(q, spec.reference, cfg)


def convert_covector(point: Belief, grad: Sequence[float], src: Coords, dst: Coords) -> np.ndarray:
    """Re-express a gradient (covector) given in chart ``src`` in chart ``dst``."""
    g = np.array(grad, dtype=float)
    src, dst = Coords.parse(src), Coords.parse(dst)
    if src is dst:
        return g
    if isinstance(point, gm.GaussianBelief):
        sigma = point.sigma
        if src is Coords.MU_SIGMA and dst is Coords.MU_TAU:
            return np.array([g[0], g[1] * (-0.5 * sigma**3)])
        if src is Coords.MU_TAU and dst is Coords.MU_SIGMA:
            return np.array([g[0], g[1] * (-2.0 / sigma**3)])
    raise DomainError(f"no chart change {src.value} -> {dst.value} for {type(point).__name__}")


def penalty_gradient(
    spec: PenaltySpec,
    q: Belief,
    coords: Coords | str | None = None,
    cfg: ToleranceConfig | None = None,
) -> np.ndarray:
    """Gradient of ``penalty_value`` at q as a covector in ``coords``.

    ``coords`` defaults to the penalty's own chart (Euclidean) or the learner
    chart (Fisher-Rao). Gaussian Fisher-Rao gradients are analytic; von Mises
    ones use central differences because the distance is itself the output
    of an optimization.
    """
    _check_same_manifold(spec, q)
    out_chart = Coords.parse(coords) if coords is not None else spec.coords
    if spec.weight == 0.0:
        return np.zeros(2)
    if spec.kind is PenaltyKind.EUCLIDEAN:
        grad = 2.0 * spec.weight * _coord_delta(q, spec.reference, spec.coords)
        return convert_covector(q, grad, spec.coords, out_chart)
    if isinstance(q, gm.GaussianBelief):
        g_mu, g_sigma = gm.fisher_rao_distance_sq_grad(q, spec.reference)
        grad = spec.weight * np.array([g_mu, g_sigma])
        return convert_covector(q, grad, Coords.MU_SIGMA, out_chart)
    x = np.array(q.coords(Coords.DIR_KAPPA))
    h = 1e-5 * np.maximum(1.0, np.abs(x))
    # at the chart boundary the stencil is centred just inside it
    x[1] = max(x[1], vm.KAPPA_MIN + 2.0 * h[1])
    ref = spec.reference

    def f(c: np.ndarray) -> float:
        return vm.vm_fisher_rao_distance_sq(vm.VonMisesBelief(c[0], c[1]), ref, cfg)

    grad = spec.weight * finite_diff_gradient(f, x, h)
    return convert_covector(q, grad, Coords.DIR_KAPPA, out_chart)


def fisher_metric(q: Belief, coords: Coords | str | None = None) -> MetricTensor2:
    chart = Coords.parse(coords) if coords is not None else learner_chart(q)
    try:
        if isinstance(q, gm.GaussianBelief):
            return gm.fisher_info(q, chart)
        if chart is not Coords.DIR_KAPPA:
            raise DomainError("von Mises beliefs use the dir-kappa chart")
        return vm.vm_fisher_info(q)
    except DomainError as exc:
        if "positive-definite" in str(exc):
            raise SingularMetricError(str(exc)) from exc
        raise


def natural_step_coords(
    q: Belief, grad: Sequence[float], lr: float, coords: Coords | str | None = None
) -> tuple[np.ndarray, Coords]:
    """Unprojected chart coordinates after one natural-gradient step."""
    chart = Coords.parse(coords) if coords is not None else learner_chart(q)
    metric = fisher_metric(q, chart)
    x = np.array(q.coords(chart), dtype=float)
    return x - lr * (metric.inverse() @ np.asarray(grad, dtype=float)), chart


def project(values: np.ndarray, chart: Coords, like: Belief) -> tuple[Belief, bool]:
    """Clamp chart coordinates into the admissible domain; report whether clamping fired."""
    a, b = float(values[0]), float(values[1])
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("natural-gradient step produced non-finite coordinates")
    if isinstance(like, gm.GaussianBelief):
        if chart is Coords.MU_SIGMA:
            lo, hi = gm.TAU_MAX**-0.5, gm.TAU_MIN**-0.5
        else:
            lo, hi = gm.TAU_MIN, gm.TAU_MAX
        clamped = min(max(b, lo), hi)
        return gm.GaussianBelief.from_coords((a, clamped), chart), clamped != b
    clamped = min(max(b, vm.KAPPA_MIN), vm.KAPPA_MAX)
    return vm.VonMisesBelief(a, clamped), clamped != b


def natural_gradient_step(
    q: Belief, euclidean_grad: Sequence[float], lr: float, coords: Coords | str | None = None
) -> Belief:
    """``coords(q) - lr * I(q)^-1 grad``, projected back into the chart.

    ``euclidean_grad`` must be expressed in ``coords`` (default: the learner chart).
    """
    if not (lr > 0.0):
        raise DomainError(f"learning rate must be positive, got {lr}")
    values, chart = natural_step_coords(q, euclidean_grad, lr, coords)
    return project(values, chart, q)[0]


def suboptimality_ratio(mu1: float, mu2: float, sigma: float) -> float:
    """Squared Euclidean over squared Fisher-Rao distance on a fixed-variance slice."""
    if mu1 == mu2:
        raise DomainError("suboptimality ratio is undefined for coincident means")
    d_f = gm.fixed_sigma_distance(mu1, mu2, sigma)
    d_e = float(mu1) - float(mu2)
    return (d_e * d_e) / (d_f * d_f)
