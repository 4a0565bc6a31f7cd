"""Landauer accounting, learning efficiency and the crystallization index.

All library-internal information is in nats. The Landauer price is quoted
per bit, so ``min_regularization_energy`` converts KL to bits before
multiplying by ``k_B T ln 2``; the two factors of ``ln 2`` cancel and one
bit costs exactly one Landauer quantum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError, SecondLawError

BOLTZMANN = 1.380649e-23  # J/K, exact since the 2019 SI redefinition
LN2 = math.log(2.0)

DEFAULT_THRESHOLDS = (0.1, 10.0)


@dataclass(frozen=True)
class Environment:
    temperature_kelvin: float = 300.0
    boltzmann_constant: float = BOLTZMANN

    def __post_init__(self) -> None:
        if not (self.temperature_kelvin > 0 and math.isfinite(self.temperature_kelvin)):
            raise DomainError(f"temperature must be positive, got {self.temperature_kelvin}")
        if not (self.boltzmann_constant > 0):
            raise DomainError("Boltzmann constant must be positive")

    @property
    def kT(self) -> float:
        return self.boltzmann_constant * self.temperature_kelvin


@dataclass(frozen=True)
class EfficiencyReport:
    landauer_joules: float
    actual_joules: float
    eta: float
    hardware_factor: float = 1.0
    algorithm_factor: float = 1.0
    dissipation_factor: float = 1.0

    @property
    def inefficiency(self) -> float:
        return self.hardware_factor * self.algorithm_factor * self.dissipation_factor


class Regime(str, enum.Enum):
    EXPLORATION = "exploration"
    CRITICAL = "critical"
    OVER_CONSTRAINED = "over-constrained"


@dataclass(frozen=True)
class CrystallizationIndex:
    value: float
    regime: Regime


def nats_to_bits(nats: float) -> float:
    return nats / LN2


def landauer_bound_per_bit(env: Environment | None = None) -> float:
    """Minimum heat (J) for erasing one bit: ``k_B T ln 2``."""
    env = env or Environment()
    return env.kT * LN2


def min_regularization_energy(kl_nats: float, env: Environment | None = None) -> float:
    """Minimal dissipation (J) for regularizing away ``kl_nats`` of divergence."""
    if not (kl_nats >= 0.0):
        raise DomainError(f"KL divergence must be nonnegative, got {kl_nats}")
    return landauer_bound_per_bit(env) * nats_to_bits(kl_nats)


def efficiency(info_erased_bits: float, actual_joules: float, env: Environment | None = None) -> EfficiencyReport:
    """Landauer efficiency ``eta = E_Landauer / E_actual``.

    Raises:
        SecondLawError: ``actual_joules`` is below the Landauer bound for the
            information erased, which would mean ``eta > 1``.
    """
    if not (info_erased_bits > 0.0):
        raise DomainError("information erased must be positive")
    if not (actual_joules > 0.0):
        raise DomainError("actual energy must be positive")
    bound = landauer_bound_per_bit(env) * info_erased_bits
    if actual_joules < bound:
        raise SecondLawError(
            f"actual energy {actual_joules:.6g} J is below the Landauer bound {bound:.6g} J"
        )
    eta = bound / actual_joules
    # factors are unknown here; attribute the whole overhead to dissipation
    return EfficiencyReport(bound, actual_joules, eta, 1.0, 1.0, 1.0 / eta)


def decompose_inefficiency(
    hardware_factor: float,
    algorithm_factor: float,
    dissipation_factor: float,
    landauer_joules: float = 1.0,
) -> EfficiencyReport:
    """Build a report from the three overhead ratios (each >= 1).

    ``landauer_joules`` only scales the absolute energies; eta is unaffected.
    """
    factors = (hardware_factor, algorithm_factor, dissipation_factor)
    for name, f in zip(("hardware", "algorithm", "dissipation"), factors):
        if not (f >= 1.0) or not math.isfinite(f):
            raise DomainError(f"{name} factor must be a finite ratio >= 1, got {f}")
    product = hardware_factor * algorithm_factor * dissipation_factor
    return EfficiencyReport(
        landauer_joules,
        landauer_joules * product,
        1.0 / product,
        float(hardware_factor),
        float(algorithm_factor),
        float(dissipation_factor),
    )


def crystallization_index(
    tau: float, kappa: float, thresholds: tuple[float, float] = DEFAULT_THRESHOLDS
) -> CrystallizationIndex:
    """``C = tau * kappa`` with its regime label.

    The default thresholds (0.1, 10) are arbitrary placeholders; pass your own.
    """
    low, high = thresholds
    if not (tau > 0 and kappa > 0):
        raise DomainError("tau and kappa must be positive")
    if not (low < high):
        raise DomainError(f"thresholds must satisfy low < high, got {thresholds}")
    c = tau * kappa
    if c < low:
        regime = Regime.EXPLORATION
    elif c <= high:
        regime = Regime.CRITICAL
    else:
        regime = Regime.OVER_CONSTRAINED
    return CrystallizationIndex(c, regime)


def local_kl_quadratic_check(
    point,
    perturbation: tuple[float, float],
    d_F_sq: float | None = None,
    kl_nats: float | None = None,
) -> float:
    """Return ``2 KL(p || p + dp) / d_F^2(p, p + dp)``, which tends to 1 as dp -> 0.

    ``perturbation`` is added to the point's native chart coordinates
    ((mu, tau) or (mu_dir, kappa)). Either quantity can be supplied by the
    caller; missing ones are computed with the library's own formulas.
    """
    from . import gaussian, vonmises

    if isinstance(point, gaussian.GaussianBelief):
        other = gaussian.GaussianBelief(point.mu + perturbation[0], point.tau + perturbation[1])
        if d_F_sq is None:
            d_F_sq = gaussian.fisher_rao_distance_sq(point, other)
        if kl_nats is None:
            kl_nats = gaussian.kl_divergence(point, other)
    elif isinstance(point, vonmises.VonMisesBelief):
        other = vonmises.VonMisesBelief(point.mu_dir + perturbation[0], point.kappa + perturbation[1])
        if d_F_sq is None:
            d_F_sq = vonmises.vm_fisher_rao_distance_sq(point, other)
        if kl_nats is None:
            kl_nats = vonmises.vm_kl_divergence(point, other)
    elif d_F_sq is None or kl_nats is None:
        raise DomainError(f"cannot compute distances for {type(point).__name__}")
    if not (d_F_sq > 0.0):
        raise DomainError("zero Fisher-Rao distance: perturbation vanished")
    return 2.0 * kl_nats / d_F_sq
