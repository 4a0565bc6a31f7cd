"""Chart labels, 2x2 metric tensors, belief paths and numerical curvature."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ManifoldMismatchError


class Coords(str, enum.Enum):
    MU_TAU = "mu-tau"
    MU_SIGMA = "mu-sigma"
    DIR_KAPPA = "dir-kappa"

    @classmethod
    def parse(cls, value: "Coords | str") -> "Coords":
        if isinstance(value, Coords):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise DomainError(f"unknown coordinate chart {value!r}") from None


@dataclass(frozen=True)
class MetricTensor2:
    """Symmetric positive-definite 2x2 metric ``[[g11, g12], [g12, g22]]``."""

    g11: float
    g12: float
    g22: float
    coords: Coords

    def __post_init__(self) -> None:
        if not (self.g11 > 0 and self.g11 * self.g22 - self.g12 * self.g12 > 0):
            raise DomainError(
                f"metric is not positive-definite: g11={self.g11}, g12={self.g12}, g22={self.g22}"
            )

    @property
    def det(self) -> float:
        return self.g11 * self.g22 - self.g12 * self.g12

    def as_array(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def inverse(self) -> np.ndarray:
        d = self.det
        return np.array([[self.g22, -self.g12], [-self.g12, self.g11]]) / d

    def quadratic_form(self, v: Sequence[float]) -> float:
        a, b = float(v[0]), float(v[1])
        return self.g11 * a * a + 2.0 * self.g12 * a * b + self.g22 * b * b


def manifold_of(point: object) -> str:
    name = getattr(point, "manifold", None)
    if name is None:
        raise ManifoldMismatchError(f"{type(point).__name__} is not a belief point")
    return name


@dataclass(frozen=True)
class BeliefPath:
    """An ordered, immutable sequence of belief points on one manifold."""

    points: tuple
    timestamps: Optional[tuple] = None

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise DomainError("a belief path needs at least one point")
        kinds = {manifold_of(p) for p in pts}
        if len(kinds) > 1:
            raise ManifoldMismatchError(f"path mixes manifolds: {sorted(kinds)}")
        if self.timestamps is not None:
            ts = tuple(float(t) for t in self.timestamps)
            if len(ts) != len(pts):
                raise DomainError("timestamps must match points one-to-one")
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise DomainError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    @property
    def manifold(self) -> str:
        return manifold_of(self.points[0])

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def concat(self, other: "BeliefPath") -> "BeliefPath":
        """Join two paths sharing an endpoint (the shared point is kept once)."""
        if other.points[0] != self.points[-1]:
            raise DomainError("paths do not share an endpoint")
        return BeliefPath(self.points + other.points[1:])


MetricFn = Callable[[np.ndarray], np.ndarray]


def _metric_derivs(metric: MetricFn, x: np.ndarray, h: float) -> np.ndarray:
    # dg[k, i, j] = d g_ij / d x_k
    dg = np.empty((2, 2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        dg[k] = (metric(x + e) - metric(x - e)) / (2.0 * h)
    return dg


def christoffel(metric: MetricFn, x: np.ndarray, h: float) -> np.ndarray:
    """Second-kind symbols ``gamma[i, j, k] = Gamma^i_{jk}`` by central differences."""
    x = np.asarray(x, dtype=float)
    ginv = np.linalg.inv(metric(x))
    dg = _metric_derivs(metric, x, h)
    # lowered[l, j, k] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    lowered = 0.5 * (
        np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg
    )
    return np.einsum("il,ljk->ijk", ginv, lowered)


def gaussian_curvature(metric: MetricFn, x: Sequence[float], h: float) -> float:
    """Gaussian curvature of a 2-D metric from finite-difference Christoffel symbols.

    The stencil reaches ``x +- 2h`` in each coordinate.
    """
    x = np.asarray(x, dtype=float)
    gam = christoffel(metric, x, h)
    dgam = np.empty((2, 2, 2, 2))  # dgam[m, i, j, k] = d_m Gamma^i_jk
    for m in range(2):
        e = np.zeros(2)
        e[m] = h
        dgam[m] = (christoffel(metric, x + e, h) - christoffel(metric, x - e, h)) / (2.0 * h)
    # R^r_{s m n} = d_m G^r_{n s} - d_n G^r_{m s} + G^r_{m l} G^l_{n s} - G^r_{n l} G^l_{m s}
    s, m, n = 1, 0, 1
    riem_up = (
        dgam[m, :, n, s]
        - dgam[n, :, m, s]
        + gam[:, m, :] @ gam[:, n, s]
        - gam[:, n, :] @ gam[:, m, s]
    )
    g = metric(x)
    r_0101 = float(g[0] @ riem_up)
    return r_0101 / float(np.linalg.det(g))
