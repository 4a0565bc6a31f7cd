"""Matched Euclidean vs Fisher-Rao regularization runs and their reports.

Every run is a seeded toy learner. The two penalty arms of a replicate share
a seed, so they consume identical minibatch streams and differ only in the
penalty. The efficiency figure reported throughout is the proxy
eta-hat = net geodesic / path length, never a joule measurement.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from . import gaussian as gm
from . import vonmises as vm
from .errors import DivergenceError, DomainError
from .geometry import Coords
from .regularization import Belief, PenaltyKind, PenaltySpec
from .trajectory import DataGenerator, ToyTask, run_toy_learner

log = logging.getLogger(__name__)

SEED_ENV = "THERMOREG_SEED"
ARMS = (PenaltyKind.EUCLIDEAN, PenaltyKind.FISHER_RAO)
ETA_LABEL = "eta_hat (proxy: net geodesic / path length, not a joule measurement)"


def _version() -> str:
    from . import __version__

    return __version__


@dataclass(frozen=True)
class TaskTemplate:
    """Toy-task settings shared by every run of an experiment.

    Points are native chart coordinates: (mu, tau) for ``gaussian`` and
    (mu_dir, kappa) for ``vonmises``. ``generator`` defaults to the reference.
    """

    manifold: str = "gaussian"
    initial: tuple[float, float] = (0.0, 0.25)
    reference: tuple[float, float] = (1.0, 4.0)
    generator: Optional[tuple[float, float]] = None
    sample_count: Optional[int] = None
    lr: float = 1e-2
    steps: int = 5000
    euclidean_coords: str = "mu-tau"

    def __post_init__(self) -> None:
        if self.manifold not in ("gaussian", "vonmises"):
            raise DomainError(f"unknown manifold {self.manifold!r}")
        for name in ("initial", "reference", "generator"):
            value = getattr(self, name)
            if value is not None:
                if len(value) != 2:
                    raise DomainError(f"{name} must have two coordinates")
                object.__setattr__(self, name, (float(value[0]), float(value[1])))
        if not (self.lr > 0.0):
            raise DomainError("lr must be positive")
        if int(self.steps) < 1:
            raise DomainError("steps must be positive")
        Coords.parse(self.euclidean_coords)
        # fail at load time on out-of-domain points
        self.belief(self.initial)
        self.belief(self.reference)

    def belief(self, values: Sequence[float]) -> Belief:
        if self.manifold == "gaussian":
            return gm.GaussianBelief(values[0], values[1])
        return vm.VonMisesBelief(values[0], values[1])


@dataclass(frozen=True)
class ExperimentConfig:
    task_family: TaskTemplate = field(default_factory=TaskTemplate)
    penalty_weights: tuple[float, ...] = (1.0,)
    tau_spread: tuple[float, ...] = (1.0, 4.0, 16.0, 64.0)
    replicates: int = 10
    seed_base: int = 0
    output_dir: str = "thermoreg-out"
    prediction: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "penalty_weights", tuple(float(w) for w in self.penalty_weights))
        object.__setattr__(self, "tau_spread", tuple(float(s) for s in self.tau_spread))
        if not self.penalty_weights or not self.tau_spread:
            raise DomainError("penalty_weights and tau_spread must be non-empty")
        if any(not (w >= 0.0) or not math.isfinite(w) for w in self.penalty_weights):
            raise DomainError("penalty weights must be finite and >= 0")
        if any(not (s > 0.0) or not math.isfinite(s) for s in self.tau_spread):
            raise DomainError("tau_spread entries must be positive")
        if int(self.replicates) < 1:
            raise DomainError("replicates must be >= 1")
        if int(self.replicates) < 3:
            log.warning("fewer than 3 replicates: spread statistics are not meaningful")
        if self.prediction not in (1, 2):
            raise DomainError(f"prediction must be 1 or 2, got {self.prediction!r}")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], env: Mapping[str, str] | None = None) -> "ExperimentConfig":
        """Build a config from parsed JSON; ``THERMOREG_SEED`` in ``env`` overrides seed_base."""
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        task = data.pop("task_family", {}) or {}
        task_known = set(TaskTemplate.__dataclass_fields__)
        if set(task) - task_known:
            raise DomainError(f"unknown task_family fields: {sorted(set(task) - task_known)}")
        if env is not None and env.get(SEED_ENV):
            try:
                data["seed_base"] = int(env[SEED_ENV])
            except ValueError:
                raise DomainError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
        try:
            return cls(task_family=TaskTemplate(**task), **data)
        except TypeError as exc:
            raise DomainError(f"malformed config: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["penalty_weights"] = list(self.penalty_weights)
        out["tau_spread"] = list(self.tau_spread)
        return out


def load_config(path: str | os.PathLike, env: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Read a JSON config. ``env`` defaults to the process environment."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise DomainError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data, os.environ if env is None else env)


@dataclass(frozen=True)
class RunSpec:
    run_id: int
    replicate: int
    seed: int
    penalty_kind: PenaltyKind
    weight: float
    tau_spread: float
    task: ToyTask


@dataclass(frozen=True)
class RunRecord:
    run_id: int
    replicate: int
    seed: int
    penalty_kind: str
    weight: float
    tau_spread: float
    eta_hat: float
    final_kl: float
    heldout_nll: float
    path_length: float
    net_geodesic: float
    net_kl_nats: float
    step_kl_sum_nats: float
    clamp_events: int
    batch_hash_1: str
    batch_hash_2: str
    batch_hash_3: str


RECORD_FIELDS = tuple(RunRecord.__dataclass_fields__)
# the CSV header marks eta-hat as a proxy
_CSV_NAMES = {"eta_hat": "eta_hat_proxy"}


@dataclass
class ComparisonReport:
    records: list[RunRecord]
    aggregates: dict[str, Any]
    prediction1_pass: Optional[bool]
    prediction2_trend: Optional[float]
    config: dict[str, Any] = field(default_factory=dict)
    trajectories: dict[int, str] = field(default_factory=dict)


def _build_task(cfg: ExperimentConfig, kind: PenaltyKind, weight: float, spread: float, seed: int) -> ToyTask:
    tpl = cfg.task_family
    ref = tpl.belief(tpl.reference)
    init_coords = (tpl.initial[0], tpl.reference[1] / spread) if cfg.prediction == 2 else tpl.initial
    coords = Coords.parse(tpl.euclidean_coords) if kind is PenaltyKind.EUCLIDEAN else None
    gen = tpl.belief(tpl.generator if tpl.generator is not None else tpl.reference)
    return ToyTask(
        initial_belief=tpl.belief(init_coords),
        penalty=PenaltySpec(kind, ref, weight, coords),
        data=DataGenerator(gen, tpl.sample_count, seed),
        lr=tpl.lr,
        steps=int(tpl.steps),
    )


def plan_runs(cfg: ExperimentConfig) -> list[RunSpec]:
    """Enumerate runs in a fixed order: spread, replicate, weight, arm."""
    spreads = cfg.tau_spread if cfg.prediction == 2 else (1.0,)
    runs = []
    for spread in spreads:
        for rep in range(int(cfg.replicates)):
            seed = int(cfg.seed_base) + rep
            for weight in cfg.penalty_weights:
                for kind in ARMS:
                    task = _build_task(cfg, kind, weight, spread, seed)
                    runs.append(RunSpec(len(runs), rep, seed, kind, weight, spread, task))
    return runs


def execute_run(spec: RunSpec) -> tuple[RunRecord, str]:
    try:
        res = run_toy_learner(spec.task)
    except DivergenceError as exc:
        raise DivergenceError(f"run {spec.run_id} (seed {spec.seed}, {spec.penalty_kind.value}): {exc}") from None
    hashes = list(res.batch_hashes) + [""] * (3 - len(res.batch_hashes))
    led = res.ledger
    rec = RunRecord(
        spec.run_id,
        spec.replicate,
        spec.seed,
        spec.penalty_kind.value,
        spec.weight,
        spec.tau_spread,
        led.quasi_static_ratio,
        res.final_kl_to_target,
        res.heldout_nll,
        led.path_length_fr,
        led.net_geodesic_fr,
        led.net_kl_nats,
        led.step_kl_sum_nats,
        res.clamp_events,
        *hashes[:3],
    )
    return rec, res.to_csv()


def _execute(runs: list[RunSpec], workers: int) -> list[tuple[RunRecord, str]]:
    if workers <= 1 or len(runs) <= 1:
        return [execute_run(r) for r in runs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, so results do not depend on scheduling
        return list(pool.map(execute_run, runs, chunksize=1))


def _mean_std(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {"n": int(arr.size), "mean": float(np.mean(arr)), "std": std}


def pooled_std(a: Sequence[float], b: Sequence[float]) -> float:
    n1, n2 = len(a), len(b)
    if n1 + n2 <= 2:
        return 0.0
    v1 = float(np.var(a, ddof=1)) if n1 > 1 else 0.0
    v2 = float(np.var(b, ddof=1)) if n2 > 1 else 0.0
    return math.sqrt(((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2))


def seed_matched_gaps(records: Sequence[RunRecord]) -> list[tuple[float, float]]:
    """(tau_spread, eta_FR - eta_Euclid) for every seed-matched pair of arms."""
    by_key: dict[tuple, dict[str, float]] = {}
    for r in records:
        by_key.setdefault((r.tau_spread, r.replicate, r.weight), {})[r.penalty_kind] = r.eta_hat
    gaps = []
    for key in sorted(by_key):
        arms = by_key[key]
        if len(arms) == 2:
            gaps.append((key[0], arms[PenaltyKind.FISHER_RAO.value] - arms[PenaltyKind.EUCLIDEAN.value]))
    return gaps


def rank_trend(spreads: Sequence[float], gaps: Sequence[float]) -> float:
    """Spearman correlation; 0 when either input has no variation."""
    if len(spreads) < 2 or len(set(spreads)) < 2 or len(set(gaps)) < 2:
        return 0.0
    rho = spearmanr(spreads, gaps).statistic
    return float(rho) if math.isfinite(rho) else 0.0


def compute_statistics(records: Sequence[RunRecord]) -> tuple[dict[str, Any], Optional[bool], float]:
    """Aggregates, the Prediction 1 pass flag and the Prediction 2 trend.

    A pure function of the records, so reports can be re-derived from
    ``records.csv``. The pass flag is None when an arm has no records.
    """
    if not records:
        return {}, None, 0.0
    arms = {k.value: [r.eta_hat for r in records if r.penalty_kind == k.value] for k in ARMS}
    agg: dict[str, Any] = {"metric": ETA_LABEL, "eta_hat": {}, "by_spread": {}}
    for name, vals in arms.items():
        if vals:
            agg["eta_hat"][name] = _mean_std(vals)
            sub = [r for r in records if r.penalty_kind == name]
            agg.setdefault("final_kl", {})[name] = _mean_std([r.final_kl for r in sub])
            agg.setdefault("heldout_nll", {})[name] = _mean_std([r.heldout_nll for r in sub])
            agg.setdefault("clamp_events", {})[name] = int(sum(r.clamp_events for r in sub))
    passed: Optional[bool] = None
    fr, eu = arms[PenaltyKind.FISHER_RAO.value], arms[PenaltyKind.EUCLIDEAN.value]
    if fr and eu:
        ps = pooled_std(fr, eu)
        agg["pooled_std"] = ps
        passed = bool(float(np.mean(fr)) >= float(np.mean(eu)) - 2.0 * ps)
    gaps = seed_matched_gaps(records)
    for spread in sorted({s for s, _ in gaps}):
        agg["by_spread"][repr(spread)] = _mean_std([g for s, g in gaps if s == spread])
    trend = rank_trend([s for s, _ in gaps], [g for _, g in gaps])
    return agg, passed, trend


def _run(cfg: ExperimentConfig, workers: Optional[int]) -> ComparisonReport:
    runs = plan_runs(cfg)
    results = _execute(runs, int(workers if workers is not None else cfg.workers))
    records = [r for r, _ in results]
    agg, passed, trend = compute_statistics(records)
    return ComparisonReport(
        records=records,
        aggregates=agg,
        prediction1_pass=passed if cfg.prediction == 1 else None,
        prediction2_trend=trend if cfg.prediction == 2 else None,
        config=cfg.to_dict(),
        trajectories={r.run_id: text for r, text in results},
    )


def run_prediction1(cfg: ExperimentConfig, workers: Optional[int] = None) -> ComparisonReport:
    """Seed-matched Euclidean vs Fisher-Rao runs for every replicate and weight.

    Passes iff mean eta-hat of the Fisher-Rao arm is at least the Euclidean
    mean minus two pooled standard deviations.
    """
    if cfg.prediction != 1:
        cfg = ExperimentConfig(**{**cfg.__dict__, "prediction": 1})
    return _run(cfg, workers)


def run_prediction2(cfg: ExperimentConfig, workers: Optional[int] = None) -> ComparisonReport:
    """Sweep the initial precision as reference / spread and rank-correlate spread with the gap."""
    if cfg.prediction != 2:
        cfg = ExperimentConfig(**{**cfg.__dict__, "prediction": 2})
    return _run(cfg, workers)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ComparisonReport:
    return run_prediction1(cfg, workers) if cfg.prediction == 1 else run_prediction2(cfg, workers)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([_CSV_NAMES.get(name, name) for name in RECORD_FIELDS])
    for r in records:
        writer.writerow([_fmt(getattr(r, name)) for name in RECORD_FIELDS])
    return buf.getvalue()


def parse_records_csv(text: str) -> list[RunRecord]:
    types = {name: f.type for name, f in RunRecord.__dataclass_fields__.items()}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        vals = {}
        for name in RECORD_FIELDS:
            t, raw = types[name], row[_CSV_NAMES.get(name, name)]
            vals[name] = int(raw) if t in (int, "int") else float(raw) if t in (float, "float") else raw
        out.append(RunRecord(**vals))
    return out


def summary_dict(report: ComparisonReport) -> dict[str, Any]:
    return {
        "library_version": _version(),
        "efficiency_metric": ETA_LABEL,
        "n_records": len(report.records),
        "aggregates": report.aggregates,
        "prediction1_pass": report.prediction1_pass,
        "prediction2_trend": report.prediction2_trend,
        "config": report.config,
    }


def emit_report(report: ComparisonReport, directory: str | os.PathLike) -> list[Path]:
    """Write ``records.csv``, ``summary.json`` and ``trajectories/run_<id>.csv``.

    Raises:
        OSError: with the offending path in the message.
    """
    root = Path(directory)
    written: list[Path] = []

    def write(path: Path, text: str) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)

    write(root / "records.csv", records_csv(report.records))
    write(root / "summary.json", json.dumps(summary_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n")
    for run_id in sorted(report.trajectories):
        write(root / "trajectories" / f"run_{run_id}.csv", report.trajectories[run_id])
    return written
