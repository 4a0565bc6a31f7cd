import json

import pytest

from thermoreg.errors import DomainError
from thermoreg.experiments import (
    ExperimentConfig,
    TaskTemplate,
    compute_statistics,
    emit_report,
    load_config,
    parse_records_csv,
    plan_runs,
    rank_trend,
    records_csv,
    run_prediction1,
    run_prediction2,
)


def small(prediction=1, **kw):
    task = TaskTemplate(steps=kw.pop("steps", 60))
    return ExperimentConfig(task_family=task, prediction=prediction, **{"replicates": 3, **kw})


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.task_family.initial == (0.0, 0.25) and cfg.task_family.reference == (1.0, 4.0)
        assert cfg.replicates == 10 and cfg.task_family.steps == 5000

    @pytest.mark.parametrize(
        "kw",
        [{"penalty_weights": ()}, {"tau_spread": ()}, {"replicates": 0}, {"prediction": 3}, {"tau_spread": (0.0,)}, {"penalty_weights": (-1.0,)}],
    )
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            ExperimentConfig(**kw)

    def test_unknown_field(self):
        with pytest.raises(DomainError):
            ExperimentConfig.from_dict({"replicate": 3})

    def test_seed_override(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed_base": 1, "task_family": {"steps": 10}}))
        assert load_config(path, env={}).seed_base == 1
        assert load_config(path, env={"THERMOREG_SEED": "42"}).seed_base == 42
        with pytest.raises(DomainError):
            load_config(path, env={"THERMOREG_SEED": "x"})

    def test_round_trip(self):
        cfg = small(prediction=2, penalty_weights=(0.5, 2.0))
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(DomainError):
            load_config(path, env={})


class TestPrediction1:
    def test_zero_weight_arms_identical(self):
        rep = run_prediction1(small(penalty_weights=(0.0,)))
        by_rep = {}
        for r in rep.records:
            by_rep.setdefault(r.replicate, []).append(r)
        for a, b in by_rep.values():
            assert a.eta_hat == b.eta_hat
            assert rep.trajectories[a.run_id] == rep.trajectories[b.run_id]

    def test_smoke_single_replicate(self):
        rep = run_prediction1(small(replicates=1, steps=50))
        assert [r.penalty_kind for r in rep.records] == ["euclidean", "fisher-rao"]
        assert rep.prediction2_trend is None and isinstance(rep.prediction1_pass, bool)

    def test_record_count(self):
        rep = run_prediction1(small(penalty_weights=(0.5, 1.0)))
        assert len(rep.records) == 3 * 2 * 2

    def test_arms_seed_matched(self):
        rep = run_prediction1(small())
        for r in rep.records:
            twin = [o for o in rep.records if o.replicate == r.replicate and o.weight == r.weight and o is not r]
            assert len(twin) == 1
            assert (r.batch_hash_1, r.batch_hash_2, r.batch_hash_3) == (twin[0].batch_hash_1, twin[0].batch_hash_2, twin[0].batch_hash_3)

    def test_statistics_recomputable(self):
        rep = run_prediction1(small())
        agg, passed, _ = compute_statistics(parse_records_csv(records_csv(rep.records)))
        assert agg == rep.aggregates and passed == rep.prediction1_pass

    def test_workers_do_not_change_records(self):
        cfg = small(steps=30)
        assert records_csv(run_prediction1(cfg, workers=1).records) == records_csv(run_prediction1(cfg, workers=2).records)


class TestPrediction2:
    def test_constant_spread_trend_zero(self):
        rep = run_prediction2(small(tau_spread=(4.0, 4.0, 4.0)))
        assert rep.prediction2_trend == 0.0

    def test_rank_trend_edge_cases(self):
        assert rank_trend([1, 1, 1], [0.1, 0.2, 0.3]) == 0.0
        assert rank_trend([1, 2, 3], [0.5, 0.5, 0.5]) == 0.0
        assert rank_trend([1, 2, 3], [0.1, 0.2, 0.3]) == pytest.approx(1.0)

    def test_unit_spread_gap_within_noise(self):
        # at sigma = 1 the fixed-variance ratio is 1 and the two penalties nearly coincide
        cfg = ExperimentConfig(
            task_family=TaskTemplate(initial=(0.0, 1.0), reference=(1.0, 1.0), steps=5000),
            prediction=2,
            tau_spread=(1.0,),
            replicates=5,
        )
        rep = run_prediction2(cfg)
        gap = rep.aggregates["by_spread"]["1.0"]["mean"]
        assert abs(gap) <= 2 * rep.aggregates["pooled_std"]

    def test_initial_precision_follows_spread(self):
        runs = plan_runs(small(prediction=2, tau_spread=(1.0, 4.0, 16.0)))
        assert sorted({r.task.initial_belief.tau for r in runs}) == [0.25, 1.0, 4.0]


class TestReport:
    def test_empty(self, tmp_path):
        from thermoreg.experiments import ComparisonReport

        agg, passed, trend = compute_statistics([])
        emit_report(ComparisonReport([], agg, passed, None), tmp_path)
        assert (tmp_path / "records.csv").read_text().count("\n") == 1
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["aggregates"] == {} and summary["n_records"] == 0

    def test_files_and_round_trip(self, tmp_path):
        rep = run_prediction1(small())
        emit_report(rep, tmp_path / "new" / "dir")
        root = tmp_path / "new" / "dir"
        summary = json.loads((root / "summary.json").read_text())
        assert summary["aggregates"] == rep.aggregates
        assert summary["prediction1_pass"] == rep.prediction1_pass
        assert "proxy" in summary["efficiency_metric"]
        assert len(list((root / "trajectories").glob("run_*.csv"))) == len(rep.records)
        assert (root / "records.csv").read_text().count("\n") == len(rep.records) + 1

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            emit_report(run_prediction1(small(replicates=1, steps=5)), blocker / "out")
