"""Self-checks run by ``thermoreg check``.

Each property reports its worst-case measured error next to the tolerance
it must meet, so a failing build shows how far off it is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import gaussian as gm
from . import thermo
from . import vonmises as vm
from .errors import DomainError, SecondLawError
from .geometry import Coords
from .regularization import PenaltySpec, penalty_value

SUITES = ("metric-axioms", "invariance", "curvature", "kl-quadratic", "thermo")

DEFAULT_TOLERANCES = {
    "symmetry": 1e-10,
    "triangle": 1e-9,
    "invariance": 1e-10,
    "euclidean_gap": 0.10,
    "curvature": 1e-3,
    "kl_1e-2": 0.1,
    "kl_1e-3": 0.02,
    "landauer": 1e-24,
    "decomposition": 1e-10,
}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


def _rng(seed: int = 20240611) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _random_gaussians(rng: np.random.Generator, n: int) -> list[gm.GaussianBelief]:
    mu = rng.uniform(-3.0, 3.0, n)
    tau = np.exp(rng.uniform(math.log(0.01), math.log(100.0), n))
    return [gm.GaussianBelief(m, t) for m, t in zip(mu, tau)]


def _axioms(dist: Callable, pts: list, label: str, tol: Mapping[str, float]) -> list[CheckResult]:
    sym = 0.0
    tri = 0.0
    ident = 0.0
    nonneg = math.inf
    for a, b, c in zip(pts[0::3], pts[1::3], pts[2::3]):
        ab, ba, bc, ac = dist(a, b), dist(b, a), dist(b, c), dist(a, c)
        sym = max(sym, abs(ab - ba) / max(ab, 1e-300))
        tri = max(tri, ac - (ab + bc))
        ident = max(ident, dist(a, a))
        nonneg = min(nonneg, ab, bc, ac)
    return [
        CheckResult("metric-axioms", f"{label} identity d(p,p)=0", ident == 0.0, ident, 0.0),
        CheckResult("metric-axioms", f"{label} nonnegativity", nonneg >= 0.0, nonneg, 0.0, "min distance"),
        CheckResult("metric-axioms", f"{label} symmetry", sym <= tol["symmetry"], sym, tol["symmetry"], "max rel error"),
        CheckResult("metric-axioms", f"{label} triangle inequality", tri <= tol["triangle"], max(tri, 0.0), tol["triangle"], "max violation"),
    ]


def check_metric_axioms(tol: Mapping[str, float]) -> list[CheckResult]:
    rng = _rng()
    out = _axioms(gm.fisher_rao_distance, _random_gaussians(rng, 300), "gaussian", tol)
    vms = [vm.VonMisesBelief(m, k) for m, k in zip(rng.uniform(-math.pi, math.pi, 12), np.exp(rng.uniform(-2.0, 3.0, 12)))]
    out += _axioms(vm.vm_fisher_rao_distance, vms, "vonmises", tol)
    return out


def check_invariance(tol: Mapping[str, float]) -> list[CheckResult]:
    rng = _rng(7)
    pts = _random_gaussians(rng, 2000)
    worst = 0.0
    for p, q in zip(pts[0::2], pts[1::2]):
        a = gm.geodesic_length_in_chart(p, q, Coords.MU_TAU)
        b = gm.geodesic_length_in_chart(p, q, Coords.MU_SIGMA)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    ref, q = gm.GaussianBelief(0.0, 1.0), gm.GaussianBelief(0.0, 4.0)
    e_tau = penalty_value(PenaltySpec("euclidean", ref, 1.0, Coords.MU_TAU), q)
    e_sigma = penalty_value(PenaltySpec("euclidean", ref, 1.0, Coords.MU_SIGMA), q)
    gap = abs(e_tau - e_sigma) / min(e_tau, e_sigma)
    return [
        CheckResult("invariance", "Fisher-Rao length (mu,tau) vs (mu,sigma)", worst <= tol["invariance"], worst, tol["invariance"], "max rel discrepancy over 1000 pairs"),
        CheckResult("invariance", "Euclidean penalty is chart dependent", gap > tol["euclidean_gap"], gap, tol["euclidean_gap"], "rel disagreement must exceed tolerance"),
    ]


def curvature_grid(n: int = 10) -> np.ndarray:
    mus = np.linspace(-2.0, 2.0, n)
    taus = np.geomspace(0.1, 10.0, n)
    return np.array([[gm.sectional_curvature(gm.GaussianBelief(m, t), h=1e-3 * t) for t in taus] for m in mus])


def check_curvature(tol: Mapping[str, float]) -> list[CheckResult]:
    k = curvature_grid()
    err = float(np.max(np.abs(k + 0.5)))
    return [
        CheckResult(
            "curvature",
            "Gaussian curvature = -0.5 on 10x10 grid",
            err <= tol["curvature"],
            err,
            tol["curvature"],
            f"estimated curvature {float(np.mean(k)):.6f} (range {k.min():.6f}..{k.max():.6f})",
        )
    ]


def kl_quadratic_errors(point, directions: int = 4) -> dict[float, float]:
    """Worst |2 KL / d^2 - 1| over a few perturbation directions at sizes 1e-1, 1e-2, 1e-3."""
    out = {}
    angles = np.linspace(0.0, math.pi, directions, endpoint=False) + 0.3
    for eps in (1e-1, 1e-2, 1e-3):
        worst = 0.0
        for a in angles:
            r = thermo.local_kl_quadratic_check(point, (eps * math.cos(a), eps * math.sin(a)))
            worst = max(worst, abs(r - 1.0))
        out[eps] = worst
    return out


def check_kl_quadratic(tol: Mapping[str, float]) -> list[CheckResult]:
    out = []
    for label, point in (("gaussian", gm.GaussianBelief(0.3, 1.5)), ("vonmises", vm.VonMisesBelief(0.4, 2.0))):
        errs = kl_quadratic_errors(point)
        monotone = errs[1e-1] >= errs[1e-2] >= errs[1e-3]
        out += [
            CheckResult("kl-quadratic", f"{label} at 1e-2", errs[1e-2] <= tol["kl_1e-2"], errs[1e-2], tol["kl_1e-2"], "|2KL/d^2 - 1|"),
            CheckResult("kl-quadratic", f"{label} at 1e-3", errs[1e-3] <= tol["kl_1e-3"], errs[1e-3], tol["kl_1e-3"], "|2KL/d^2 - 1|"),
            CheckResult("kl-quadratic", f"{label} monotone in size", monotone, errs[1e-3], 0.0, "errors at 1e-1, 1e-2, 1e-3 decrease"),
        ]
    return out


def check_thermo(tol: Mapping[str, float]) -> list[CheckResult]:
    env = thermo.Environment(300.0)
    bound = thermo.landauer_bound_per_bit(env)
    err = abs(bound - 2.8711e-21)
    raises_below = False
    try:
        thermo.efficiency(1.0, bound * (1.0 - 1e-9), env)
    except SecondLawError:
        raises_below = True
    try:
        ok_at = thermo.efficiency(1.0, bound, env).eta == 1.0
    except SecondLawError:
        ok_at = False
    worst = 0.0
    for factors in ((1.0, 1.0, 1.0), (3.0, 7.5, 1.25), (1e3, 2.0, 40.0)):
        rep = thermo.decompose_inefficiency(*factors)
        worst = max(worst, abs(rep.eta * rep.inefficiency - 1.0))
    return [
        CheckResult("thermo", "Landauer bound at 300 K = 2.8711e-21 J", err <= tol["landauer"], err, tol["landauer"], f"{bound:.6e} J"),
        CheckResult("thermo", "efficiency raises below the bound", raises_below and ok_at, 0.0, 0.0),
        CheckResult("thermo", "decomposition product identity", worst <= tol["decomposition"], worst, tol["decomposition"], "max |eta * H*A*D - 1|"),
    ]


_RUNNERS = {
    "metric-axioms": check_metric_axioms,
    "invariance": check_invariance,
    "curvature": check_curvature,
    "kl-quadratic": check_kl_quadratic,
    "thermo": check_thermo,
}


def run_suite(name: str, overrides: Mapping[str, float] | None = None) -> list[CheckResult]:
    """Run one suite (or ``all``). Unknown names or tolerance keys raise DomainError."""
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (overrides or {}).items():
        if key not in tol:
            raise DomainError(f"unknown tolerance {key!r}; known: {', '.join(sorted(tol))}")
        tol[key] = float(value)
    if name == "all":
        names = SUITES
    elif name in _RUNNERS:
        names = (name,)
    else:
        raise DomainError(f"unknown suite {name!r}")
    results: list[CheckResult] = []
    for n in names:
        results.extend(_RUNNERS[n](tol))
    return results
