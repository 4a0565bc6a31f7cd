"""Special functions and small numerical routines shared by the manifolds.

Bessel functions are evaluated with the power series below ``SERIES_CUTOFF``
and the large-argument asymptotic expansion above it. Exponentially scaled
variants (``bessel_i0e``, ``bessel_i1e``) never overflow and are what the
von Mises code uses internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NonFiniteError

SERIES_CUTOFF = 15.0
_SERIES_MAX_TERMS = 500
_ASYMPTOTIC_MAX_TERMS = 60


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances shared by iterative routines.

    ``ode_step`` is a fraction of the integration interval, so ``1e-3``
    means 1000 fixed RK4 steps regardless of the interval length.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iters: int = 10_000
    ode_step: float = 1e-3

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.ode_step > 0):
            raise DomainError("abs_tol, rel_tol and ode_step must be positive")
        if int(self.max_iters) < 1:
            raise DomainError("max_iters must be >= 1")


def _check_arg(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"Bessel argument must be finite, got {x}")
    if x < 0.0:
        raise DomainError(f"Bessel argument must be nonnegative, got {x}")
    return x


def _series(order: int, x: float) -> float:
    # I_n(x) = (x/2)^n sum_k (x^2/4)^k / (k! (k+n)!)
    q = 0.25 * x * x
    term = (0.5 * x) ** order / math.factorial(order)
    total = term
    for k in range(1, _SERIES_MAX_TERMS):
        term *= q / (k * (k + order))
        total += term
        if term <= 1e-17 * total:
            break
    return total


def _asymptotic_scaled(order: int, x: float) -> float:
    """exp(-x) * I_n(x) from the Hankel expansion, optimally truncated."""
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, _ASYMPTOTIC_MAX_TERMS):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if prev <= 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def _scaled(order: int, x: float) -> float:
    x = _check_arg(x)
    if x <= SERIES_CUTOFF:
        return _series(order, x) * math.exp(-x)
    return _asymptotic_scaled(order, x)


def _scaled_array(order: int, x: np.ndarray) -> np.ndarray:
    """Vectorized ``exp(-x) I_n(x)``; same branches and truncation rule as the scalar path."""
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("Bessel arguments must be finite and nonnegative")
    out = np.empty_like(x)
    small = x <= SERIES_CUTOFF
    if np.any(small):
        xs = x[small]
        q = 0.25 * xs * xs
        term = (0.5 * xs) ** order / math.factorial(order)
        total = term.copy()
        for k in range(1, _SERIES_MAX_TERMS):
            term = term * q / (k * (k + order))
            total += term
            if np.all(term <= 1e-17 * total):
                break
        out[small] = total * np.exp(-xs)
    if np.any(~small):
        xl = x[~small]
        mu = 4.0 * order * order
        term = np.ones_like(xl)
        total = np.ones_like(xl)
        prev = np.full_like(xl, np.inf)
        live = np.ones(xl.shape, dtype=bool)
        for k in range(1, _ASYMPTOTIC_MAX_TERMS):
            term = term * (-(mu - (2 * k - 1) ** 2) / (k * 8.0 * xl))
            live &= np.abs(term) < prev
            if not np.any(live):
                break
            total = np.where(live, total + term, total)
            prev = np.where(live, np.abs(term), prev)
            live &= prev > 1e-17 * np.abs(total)
        out[~small] = total / np.sqrt(2.0 * np.pi * xl)
    return out


def _unscaled(order: int, x: float) -> float:
    x = _check_arg(x)
    if x <= SERIES_CUTOFF:
        return _series(order, x)
    # split the exponential so values just below DBL_MAX stay reachable
    half = math.exp(0.5 * x)
    val = _asymptotic_scaled(order, x) * half * half
    if not math.isfinite(val):
        raise OverflowError(f"I_{order}({x}) exceeds the float64 range")
    return val


def _dispatch(order: int, x, scaled: bool):
    if np.ndim(x) == 0:
        return _scaled(order, x) if scaled else _unscaled(order, x)
    arr = np.asarray(x, dtype=float)
    vals = _scaled_array(order, arr)
    if scaled:
        return vals
    with np.errstate(over="ignore"):
        half = np.exp(0.5 * arr)
        vals = vals * half * half
    if not np.all(np.isfinite(vals)):
        raise OverflowError(f"I_{order} exceeds the float64 range")
    return vals


def bessel_i0(x):
    """Modified Bessel function of the first kind, order 0 (scalar or array)."""
    return _dispatch(0, x, scaled=False)


def bessel_i1(x):
    """Modified Bessel function of the first kind, order 1 (scalar or array)."""
    return _dispatch(1, x, scaled=False)


def bessel_i0e(x):
    """``exp(-x) * I0(x)``; finite for every finite x >= 0."""
    return _dispatch(0, x, scaled=True)


def bessel_i1e(x):
    """``exp(-x) * I1(x)``; finite for every finite x >= 0."""
    return _dispatch(1, x, scaled=True)


def log_bessel_i0(x: float) -> float:
    return math.log(bessel_i0e(x)) + float(x)


def mean_resultant(kappa):
    """A(kappa) = I1(kappa) / I0(kappa), the mean resultant length.

    Uses the scaled Bessel functions so very large concentrations are fine;
    below 1e-4 the leading series terms avoid a 0/0 in the ratio. Accepts
    scalars or arrays.
    """
    k = np.asarray(kappa, dtype=float)
    if not np.all(np.isfinite(k)) or np.any(k <= 0.0):
        raise DomainError(f"kappa must be positive and finite, got {kappa}")
    if k.ndim == 0:
        kf = float(k)
        if kf < 1e-4:
            k2 = kf * kf
            return 0.5 * kf * (1.0 - k2 / 8.0 + k2 * k2 / 96.0)
        return _scaled(1, kf) / _scaled(0, kf)
    k2 = k * k
    tiny = 0.5 * k * (1.0 - k2 / 8.0 + k2 * k2 / 96.0)
    safe = np.maximum(k, 1e-4)
    ratio = _scaled_array(1, safe) / _scaled_array(0, safe)
    return np.where(k < 1e-4, tiny, ratio)


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float] | np.ndarray,
    t_span: tuple[float, float],
    cfg: ToleranceConfig | None = None,
) -> list[tuple[float, np.ndarray]]:
    """Classical fixed-step RK4.

    Args:
        rhs: vector field ``f(t, y)``; must accept and return arrays shaped
            like ``y0`` (batched states are fine).
        y0: initial state.
        t_span: ``(t0, t1)``; ``t1 < t0`` integrates backwards.
        cfg: ``cfg.ode_step`` is the step as a fraction of ``|t1 - t0|``.

    Returns:
        ``[(t, y), ...]`` including both endpoints.

    Raises:
        NonFiniteError: if the state stops being finite.
    """
    cfg = cfg or ToleranceConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    n_steps = int(round(1.0 / cfg.ode_step))
    if n_steps < 2:
        raise DomainError("ode_step must split the interval into at least 2 steps")
    h = (t1 - t0) / n_steps
    y = np.array(y0, dtype=float)
    out = [(t0, y.copy())]
    for i in range(n_steps):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteError(f"non-finite state at t={t + h:.6g}")
        out.append((t0 + (i + 1) * h, y.copy()))
    return out


def finite_diff_gradient(
    f: Callable[[np.ndarray], float],
    x: Sequence[float] | np.ndarray,
    h: float | Sequence[float] = 1e-5,
) -> np.ndarray:
    """Central-difference gradient; ``h`` may be a scalar or per-component."""
    x = np.array(x, dtype=float)
    steps = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    if np.any(steps <= 0):
        raise DomainError("finite-difference step must be positive")
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        fp = f(x + e)
        fm = f(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteError(f"non-finite evaluation around component {i}")
        grad[i] = (fp - fm) / (2.0 * steps[i])
    return grad


__all__ = [
    "ToleranceConfig",
    "bessel_i0",
    "bessel_i0e",
    "bessel_i1",
    "bessel_i1e",
    "finite_diff_gradient",
    "integrate_ode",
    "log_bessel_i0",
    "mean_resultant",
]
