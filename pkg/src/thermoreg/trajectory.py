"""Belief trajectories, their Fisher-Rao bookkeeping, and toy learners.

A toy learner's model *is* a belief (a Gaussian or von Mises distribution).
Each step draws a minibatch, adds the penalty gradient to the mean NLL
gradient and takes a natural-gradient step in the learner chart. Random
streams come from Philox keyed by the task seed, so a task replays
bit-for-bit on any platform.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from . import gaussian as gm
from . import vonmises as vm
from .errors import DivergenceError, DomainError, ManifoldMismatchError
from .geometry import BeliefPath
from .numerics import ToleranceConfig, log_bessel_i0, mean_resultant
from .regularization import (
    Belief,
    PenaltySpec,
    learner_chart,
    natural_step_coords,
    penalty_gradient,
    penalty_value,
    project,
)

BATCH_SIZE = 16
HELDOUT_SIZE = 1024
MAX_CLAMP_EVENTS = 10**6
HASHED_BATCHES = 3

_TRAIN_STREAM = 0
_HELDOUT_STREAM = 1
_DATASET_STREAM = 2


def fr_distance(p: Belief, q: Belief, cfg: ToleranceConfig | None = None) -> float:
    if isinstance(p, gm.GaussianBelief) and isinstance(q, gm.GaussianBelief):
        return gm.fisher_rao_distance(p, q)
    if isinstance(p, vm.VonMisesBelief) and isinstance(q, vm.VonMisesBelief):
        return vm.vm_fisher_rao_distance(p, q, cfg)
    raise ManifoldMismatchError(f"cannot measure {type(p).__name__} against {type(q).__name__}")


def kl_divergence(p: Belief, q: Belief) -> float:
    if isinstance(p, gm.GaussianBelief) and isinstance(q, gm.GaussianBelief):
        return gm.kl_divergence(p, q)
    if isinstance(p, vm.VonMisesBelief) and isinstance(q, vm.VonMisesBelief):
        return vm.vm_kl_divergence(p, q)
    raise ManifoldMismatchError(f"cannot compare {type(p).__name__} with {type(q).__name__}")


@dataclass(frozen=True)
class DissipationLedger:
    """Two information-erased estimators side by side, plus quasi-staticity.

    ``quasi_static_ratio`` (net geodesic over path length) doubles as the
    efficiency proxy eta-hat used by the experiments. It is 0 for a closed
    loop, whose endpoints coincide.
    """

    path_length_fr: float = 0.0
    net_geodesic_fr: float = 0.0
    net_kl_nats: float = 0.0
    step_kl_sum_nats: float = 0.0
    quasi_static_ratio: float = 1.0


def _segment_distances(path: BeliefPath, cfg: ToleranceConfig | None) -> list[float]:
    if len(path) < 2:
        raise DomainError("path length needs at least 2 points")
    return [fr_distance(a, b, cfg) for a, b in zip(path.points, path.points[1:])]


def path_length(path: BeliefPath, cfg: ToleranceConfig | None = None) -> float:
    """Sum of Fisher-Rao distances between consecutive points."""
    return math.fsum(_segment_distances(path, cfg))


def dissipation_ledger(path: BeliefPath, cfg: ToleranceConfig | None = None) -> DissipationLedger:
    segments = _segment_distances(path, cfg)
    first, last = path.points[0], path.points[-1]
    length = math.fsum(segments)
    net = segments[0] if len(segments) == 1 else fr_distance(first, last, cfg)
    step_kl = math.fsum(kl_divergence(a, b) for a, b in zip(path.points, path.points[1:]))
    ratio = min(1.0, net / length) if length > 0.0 else 1.0
    return DissipationLedger(length, net, kl_divergence(first, last), step_kl, ratio)


# --- toy learners --------------------------------------------------------------


@dataclass(frozen=True)
class DataGenerator:
    """Where a toy task's observations come from.

    ``sample_count=None`` streams fresh observations every step; otherwise a
    fixed dataset of that size is drawn once and minibatches are resampled
    from it with replacement.
    """

    params: Belief
    sample_count: Optional[int] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_count is not None and int(self.sample_count) < 1:
            raise DomainError("sample_count must be positive or None")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), stream])))


def _draw(rng: np.random.Generator, params: Belief, n: int) -> np.ndarray:
    if isinstance(params, gm.GaussianBelief):
        return params.mu + params.sigma * rng.standard_normal(n)
    return rng.vonmises(params.mu_dir, params.kappa, n)


def _nll_and_grad(point: Belief, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient in the learner chart."""
    if isinstance(point, gm.GaussianBelief):
        r = x - point.mu
        m1 = float(np.mean(r))
        m2 = float(np.mean(r * r))
        nll = 0.5 * math.log(2.0 * math.pi) - 0.5 * math.log(point.tau) + 0.5 * point.tau * m2
        return nll, np.array([-point.tau * m1, 0.5 * m2 - 0.5 / point.tau])
    r = x - point.mu_dir
    c = float(np.mean(np.cos(r)))
    s = float(np.mean(np.sin(r)))
    nll = -point.kappa * c + math.log(2.0 * math.pi) + log_bessel_i0(point.kappa)
    return nll, np.array([-point.kappa * s, mean_resultant(point.kappa) - c])


def mean_nll(point: Belief, x: np.ndarray) -> float:
    return _nll_and_grad(point, np.asarray(x, dtype=float))[0]


@dataclass(frozen=True)
class ToyTask:
    initial_belief: Belief
    penalty: PenaltySpec
    data: DataGenerator
    lr: float = 1e-2
    steps: int = 1000

    def __post_init__(self) -> None:
        kinds = {type(self.initial_belief), type(self.penalty.reference), type(self.data.params)}
        if len(kinds) != 1:
            raise ManifoldMismatchError("initial belief, reference and data must share a manifold")
        if not (self.lr > 0.0):
            raise DomainError(f"lr must be positive, got {self.lr}")
        if int(self.steps) < 0:
            raise DomainError("steps must be >= 0")

    @property
    def manifold(self) -> str:
        return self.initial_belief.manifold

    @property
    def reference_belief(self) -> Belief:
        return self.penalty.reference


@dataclass
class LearnerResult:
    path: BeliefPath
    ledger: DissipationLedger
    final_kl_to_target: float
    heldout_nll: float
    clamp_events: int = 0
    batch_hashes: list[str] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (path, ledger, final_kl_to_target)
        return iter((self.path, self.ledger, self.final_kl_to_target))

    @property
    def coord_names(self) -> tuple[str, str]:
        return ("mu", "tau") if self.path.manifold == "gaussian" else ("mu_dir", "kappa")

    def write_csv(self, fh: TextIO) -> None:
        """Trajectory dump: ``step,<coord1>,<coord2>,penalty,nll,step_kl_nats``."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", *self.coord_names, "penalty", "nll", "step_kl_nats"])
        for row in self.rows:
            writer.writerow([row[0], *(repr(float(v)) for v in row[1:])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def batch_hash(batch: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(batch, dtype="<f8").tobytes()).hexdigest()[:16]


def run_toy_learner(task: ToyTask, cfg: ToleranceConfig | None = None) -> LearnerResult:
    """Run a seeded natural-gradient learner and account for its trajectory.

    Each CSV row records the belief after the step, the penalty there, the
    minibatch NLL that drove the step (evaluated before it) and the KL from
    the previous belief to the new one.

    Raises:
        DivergenceError: more than ``MAX_CLAMP_EVENTS`` chart clamps.
    """
    gen = task.data
    train = _rng(gen.seed, _TRAIN_STREAM)
    dataset = None
    if gen.sample_count is not None:
        dataset = _draw(_rng(gen.seed, _DATASET_STREAM), gen.params, int(gen.sample_count))
    chart = learner_chart(task.initial_belief)

    point = task.initial_belief
    points = [point]
    rows: list[tuple] = []
    hashes: list[str] = []
    clamps = 0
    for step in range(1, int(task.steps) + 1):
        if dataset is None:
            batch = _draw(train, gen.params, BATCH_SIZE)
        else:
            batch = dataset[train.integers(0, dataset.size, BATCH_SIZE)]
        if len(hashes) < HASHED_BATCHES:
            hashes.append(batch_hash(batch))
        nll, grad = _nll_and_grad(point, batch)
        grad = grad + penalty_gradient(task.penalty, point, chart, cfg)
        values, _ = natural_step_coords(point, grad, task.lr, chart)
        new_point, clamped = project(values, chart, point)
        if clamped:
            clamps += 1
            if clamps > MAX_CLAMP_EVENTS:
                raise DivergenceError(f"learner clamped {clamps} times by step {step}")
        rows.append(
            (
                step,
                *new_point.coords(chart),
                penalty_value(task.penalty, new_point, cfg),
                nll,
                kl_divergence(point, new_point),
            )
        )
        point = new_point
        points.append(point)

    path = BeliefPath(tuple(points))
    ledger = dissipation_ledger(path, cfg) if len(path) > 1 else DissipationLedger()
    heldout = _draw(_rng(gen.seed, _HELDOUT_STREAM), gen.params, HELDOUT_SIZE)
    return LearnerResult(
        path=path,
        ledger=ledger,
        final_kl_to_target=kl_divergence(gen.params, point),
        heldout_nll=mean_nll(point, heldout),
        clamp_events=clamps,
        batch_hashes=hashes,
        rows=rows,
    )
