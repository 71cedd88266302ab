import json
import math

import numpy as np
import pytest

import bellsim.protocol as protocol
from bellsim.directions import max_violation_triple, tsirelson_quadruple
from bellsim.errors import InsufficientDataError, ValidationError
from bellsim.hidden_variables import ContextualFiniteModel, FiniteHVModel, random_finite_model


def skewed_contextual_model():
    return ContextualFiniteModel({
        "AB": random_finite_model(101, 4),
        "AC": random_finite_model(102, 2),
        "BC": random_finite_model(103, 7),
    })
from bellsim.protocol import (
    CorrelatorEstimate,
    ExperimentConfig,
    RecordBatch,
    TrialRecord,
    _run_reference,
    analyze_records,
    bell_quantity,
    chsh_quantity,
    estimate_correlators,
    load_config,
    load_report,
    report_from_jsonable,
    report_to_jsonable,
    round12,
    run_experiment,
    write_report,
)
from bellsim.quantum import QubitState

TRIPLE = max_violation_triple()
QUAD = tsirelson_quadruple()


def temporal_config(**overrides):
    base = dict(mode="qm_sequential", directions=TRIPLE, n_trials=1000,
                selector_seed=1, outcome_seed=2)
    base.update(overrides)
    return ExperimentConfig(**base)


def config_doc(**overrides):
    doc = {
        "mode": "qm_sequential",
        "directions": [[d.x, d.y, d.z] for d in TRIPLE],
        "n_trials": 100,
        "selector_seed": 1,
        "outcome_seed": 2,
    }
    doc.update(overrides)
    return doc


class TestConfigValidation:
    @pytest.mark.parametrize("key", ["mode", "directions", "n_trials", "selector_seed", "outcome_seed"])
    def test_missing_key_is_named(self, key):
        doc = config_doc()
        del doc[key]
        with pytest.raises(ValidationError, match=key):
            ExperimentConfig.from_dict(doc)

    def test_unknown_key_is_named(self):
        with pytest.raises(ValidationError, match="n_trails"):
            ExperimentConfig.from_dict(config_doc(n_trails=10))

    def test_zero_trials_rejected(self):
        with pytest.raises(ValidationError, match="n_trials"):
            ExperimentConfig.from_dict(config_doc(n_trials=0))

    def test_non_integer_trials_rejected(self):
        with pytest.raises(ValidationError, match="n_trials"):
            ExperimentConfig.from_dict(config_doc(n_trials=True))

    def test_non_unit_direction_rejected(self):
        doc = config_doc()
        doc["directions"][0] = [1.0, 1.0, 0.0]
        with pytest.raises(ValidationError, match=r"directions"):
            ExperimentConfig.from_dict(doc)

    def test_wrong_arity_for_mode(self):
        with pytest.raises(ValidationError, match="directions"):
            ExperimentConfig.from_dict(config_doc(mode="qm_singlet"))
        quad = [[d.x, d.y, d.z] for d in QUAD]
        with pytest.raises(ValidationError, match="directions"):
            ExperimentConfig.from_dict(config_doc(mode="conspiracy:qm-mimic", directions=quad))

    def test_bad_mode_string(self):
        with pytest.raises(ValidationError, match="mode"):
            ExperimentConfig.from_dict(config_doc(mode="quantum"))
        with pytest.raises(ValidationError, match="mode"):
            ExperimentConfig.from_dict(config_doc(mode="hv:"))

    def test_hex_seed_strings(self):
        cfg = ExperimentConfig.from_dict(config_doc(selector_seed="0xAB", outcome_seed="17"))
        assert cfg.selector_seed == 0xAB and cfg.outcome_seed == 17

    def test_sigma_threshold_must_be_positive(self):
        with pytest.raises(ValidationError, match="sigma_threshold"):
            ExperimentConfig.from_dict(config_doc(sigma_threshold=0.0))

    def test_selector_algorithm_choice_point(self):
        cfg = ExperimentConfig.from_dict(config_doc(selector_algorithm="splitmix64"))
        assert cfg.selector_algorithm == "splitmix64"
        with pytest.raises(ValidationError, match="selector_algorithm"):
            ExperimentConfig.from_dict(config_doc(selector_algorithm="xoshiro"))

    def test_geometry_resolution(self):
        assert temporal_config().geometry == "temporal"
        assert temporal_config(mode="qm_singlet", directions=QUAD).geometry == "chsh"
        assert temporal_config(mode="hv:sign-model", directions=QUAD).geometry == "chsh"
        assert temporal_config(mode="hv:sign-model").geometry == "temporal"

    def test_load_config_rejects_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("not json")
        with pytest.raises(ValidationError):
            load_config(path)


class TestRunExperiment:
    def test_constant_model_records(self):
        cfg = temporal_config(mode="hv:constant.json", n_trials=200)
        model = FiniteHVModel([1.0], [[1, 1, 1]])
        records = run_experiment(cfg, model=model)
        assert len(records) == 200
        assert np.all(records.s1 == 1) and np.all(records.s2 == 1)

    def test_records_are_sequenced_trial_records(self):
        records = run_experiment(temporal_config(n_trials=5))
        assert len(records) == 5
        first = records[0]
        assert isinstance(first, TrialRecord)
        assert first.index == 0
        assert [r.index for r in records] == [0, 1, 2, 3, 4]
        assert all(r.s1 in (-1, 1) and r.s2 in (-1, 1) for r in records)
        assert all(r.context in ("AB", "AC", "BC") for r in records)

    @pytest.mark.parametrize(
        "cfg_kwargs,model",
        [
            (dict(mode="qm_sequential"), None),
            (dict(mode="qm_singlet", directions=QUAD), None),
            (dict(mode="hv:sign-model"), None),
            (dict(mode="conspiracy:qm-mimic"), None),
            (dict(mode="hv:mem.json"), random_finite_model(17, 5)),
            (dict(mode="hv:mem4.json", directions=QUAD), random_finite_model(19, 4, n_slots=4)),
            (dict(mode="conspiracy:mem.json"), skewed_contextual_model()),
        ],
    )
    def test_vectorized_run_matches_per_trial_reference(self, cfg_kwargs, model):
        cfg = temporal_config(n_trials=2000, selector_seed=31, outcome_seed=77, **cfg_kwargs)
        assert run_experiment(cfg, model=model) == _run_reference(cfg, model=model)

    def test_chunking_and_threads_do_not_change_records(self, monkeypatch):
        cfg = temporal_config(n_trials=3000, selector_seed=5, outcome_seed=6)
        whole = run_experiment(cfg)
        monkeypatch.setattr(protocol, "_CHUNK", 257)
        chunked = run_experiment(cfg)
        threaded = run_experiment(cfg, threads=4)
        assert chunked == whole
        assert threaded == whole
        assert threaded.sha256() == whole.sha256()

    def test_thread_env_override(self, monkeypatch):
        cfg = temporal_config(n_trials=500)
        base = run_experiment(cfg)
        monkeypatch.setenv("BELLSIM_THREADS", "3")
        assert run_experiment(cfg, threads=1) == base
        monkeypatch.setenv("BELLSIM_THREADS", "zero")
        with pytest.raises(ValidationError):
            run_experiment(cfg)

    def test_context_sequence_independent_of_backend_and_outcome_seed(self):
        cfg_a = temporal_config(mode="qm_sequential", n_trials=400, outcome_seed=1)
        cfg_b = temporal_config(mode="conspiracy:qm-mimic", n_trials=400, outcome_seed=999)
        cfg_c = temporal_config(mode="hv:sign-model", n_trials=400, outcome_seed=5)
        codes = [run_experiment(c).codes for c in (cfg_a, cfg_b, cfg_c)]
        assert np.array_equal(codes[0], codes[1])
        assert np.array_equal(codes[0], codes[2])

    def test_selector_seed_changes_contexts_not_targets(self):
        cfg1 = temporal_config(selector_seed=1, n_trials=300)
        cfg2 = temporal_config(selector_seed=2, n_trials=300)
        r1, r2 = run_experiment(cfg1), run_experiment(cfg2)
        assert not np.array_equal(r1.codes, r2.codes)
        # analytic per-context targets depend only on the geometry
        from bellsim.protocol import make_sampler

        s1 = make_sampler(cfg1)
        s2 = make_sampler(cfg2)
        assert [s1.analytic_correlator(c) for c in range(3)] == [s2.analytic_correlator(c) for c in range(3)]

    def test_initial_state_override_keeps_correlators(self):
        cfg = temporal_config(n_trials=60_000, selector_seed=8, outcome_seed=9)
        default_run = estimate_correlators(run_experiment(cfg))
        skewed_run = estimate_correlators(run_experiment(cfg, state0=QubitState.up()))
        for tag in ("AB", "AC", "BC"):
            assert abs(default_run[tag].mean - skewed_run[tag].mean) <= 5 * (
                default_run[tag].stderr + skewed_run[tag].stderr
            )

    def test_state0_rejected_outside_sequential_mode(self):
        cfg = temporal_config(mode="qm_singlet", directions=QUAD)
        with pytest.raises(ValidationError):
            run_experiment(cfg, state0=QubitState.up())

    def test_saturation_when_doubling_trials(self):
        cfg_n = temporal_config(n_trials=20_000, selector_seed=3, outcome_seed=4)
        cfg_2n = temporal_config(n_trials=40_000, selector_seed=3, outcome_seed=4)
        est_n = estimate_correlators(run_experiment(cfg_n))
        est_2n = estimate_correlators(run_experiment(cfg_2n))
        for tag in ("AB", "AC", "BC"):
            assert abs(est_n[tag].mean - est_2n[tag].mean) < 3 * est_n[tag].stderr


class TestEstimators:
    def test_single_context_constant_records(self):
        records = [TrialRecord(i, "AB", 1, 2, 1, 1) for i in range(4)]
        est = estimate_correlators(records, contexts=["AB"])
        assert est["AB"].mean == 1.0 and est["AB"].stderr == 0.0 and est["AB"].n == 4

    def test_two_record_formula(self):
        records = [TrialRecord(0, "AB", 1, 2, 1, 1), TrialRecord(1, "AB", 1, 2, 1, -1)]
        est = estimate_correlators(records, contexts=["AB"])
        assert est["AB"].mean == 0.0
        assert abs(est["AB"].stderr - math.sqrt(0.5)) < 1e-15

    def test_missing_context_is_named(self):
        records = [TrialRecord(i, "AB", 1, 2, 1, 1) for i in range(4)]
        with pytest.raises(InsufficientDataError, match="BC"):
            estimate_correlators(records, contexts=["AB", "BC"])

    def test_undersized_context_is_named(self):
        records = [
            TrialRecord(0, "AB", 1, 2, 1, 1),
            TrialRecord(1, "AB", 1, 2, 1, 1),
            TrialRecord(2, "AC", 1, 3, 1, 1),
        ]
        with pytest.raises(InsufficientDataError, match="AC"):
            estimate_correlators(records, contexts=["AB", "AC"])

    def test_default_contexts_cover_geometry(self):
        records = run_experiment(temporal_config(n_trials=2))
        # two trials cannot populate all three contexts
        with pytest.raises(InsufficientDataError):
            estimate_correlators(records)

    def test_estimator_consistency_across_seeds(self):
        # every backend with an analytic target: mean within 5 stderr in at
        # least 99 of 100 independent-seed runs
        from bellsim.protocol import make_sampler
        from bellsim.selector import trial_uniforms

        n = 100_000
        setups = [
            temporal_config(mode="qm_sequential", n_trials=n),
            temporal_config(mode="qm_singlet", directions=QUAD, n_trials=n),
            temporal_config(mode="hv:sign-model", n_trials=n),
            temporal_config(mode="conspiracy:qm-mimic", n_trials=n),
        ]
        for cfg in setups:
            sampler = make_sampler(cfg)
            ncodes = len(cfg.context_set())
            passes = 0
            for seed in range(100):
                u = trial_uniforms(seed, 0, n // 10, n_draws=2)
                codes = np.arange(n // 10, dtype=np.uint8) % ncodes
                s1, s2 = sampler.run(codes, u[0], u[1])
                ok = True
                prod = s1.astype(np.int32) * s2
                for code in range(ncodes):
                    mask = codes == code
                    mean = float(prod[mask].mean())
                    stderr = math.sqrt(max(0.0, 1 - mean * mean) / mask.sum())
                    if abs(mean - sampler.analytic_correlator(code)) > 5 * max(stderr, 1e-12):
                        ok = False
                passes += ok
            assert passes >= 99, cfg.mode


class TestQuantities:
    def exact(self, tag, mean):
        return CorrelatorEstimate(tag, 1000, mean, 0.0)

    def noisy(self, tag, mean, stderr):
        return CorrelatorEstimate(tag, 1000, mean, stderr)

    def test_all_ones_is_consistent(self):
        report = bell_quantity([self.exact("AB", 1.0), self.exact("AC", 1.0), self.exact("BC", 1.0)])
        assert report.value == 1.0 and report.verdict == "consistent"

    def test_quantum_values_violate(self):
        r = 1 / math.sqrt(2)
        report = bell_quantity([self.exact("AB", r), self.exact("AC", -r), self.exact("BC", 0.0)])
        assert abs(report.value - math.sqrt(2)) < 1e-12
        assert report.verdict == "violation"
        assert math.isinf(report.sigma_excess)

    def test_sign_model_values_saturate(self):
        report = bell_quantity([self.exact("AB", 0.5), self.exact("AC", -0.5), self.exact("BC", 0.0)])
        assert report.value == 1.0 and report.verdict == "consistent"

    def test_missing_context(self):
        with pytest.raises(InsufficientDataError, match="BC"):
            bell_quantity([self.exact("AB", 0.5), self.exact("AC", -0.5)])

    def test_stderr_propagates_in_quadrature(self):
        report = bell_quantity([
            self.noisy("AB", 0.5, 0.01), self.noisy("AC", -0.5, 0.02), self.noisy("BC", 0.0, 0.02),
        ])
        assert abs(report.stderr - 0.03) < 1e-15

    def test_verdict_trichotomy(self):
        cases = [
            (0.9, 0.01, "consistent"),
            (1.02, 0.01, "inconclusive"),  # 2 sigma above: neither side
            (1.2, 0.01, "violation"),
        ]
        for value, stderr, expected in cases:
            report = bell_quantity([
                self.noisy("AB", value, stderr), self.noisy("AC", 0.0, 0.0), self.noisy("BC", 0.0, 0.0),
            ])
            assert report.verdict == expected, (value, report.sigma_excess)

    def test_chsh_all_ones_hits_bound(self):
        est = [self.exact(t, 1.0) for t in ("AB", "ABp", "ApB", "ApBp")]
        report = chsh_quantity(est)
        assert report.value == 2.0 and report.verdict == "consistent"

    def test_chsh_tsirelson_values(self):
        r = 1 / math.sqrt(2)
        est = [
            self.exact("AB", -r), self.exact("ABp", r),
            self.exact("ApB", -r), self.exact("ApBp", -r),
        ]
        report = chsh_quantity(est)
        assert abs(report.value - 2 * math.sqrt(2)) < 1e-12
        assert report.verdict == "violation"

    def test_chsh_missing_context(self):
        with pytest.raises(InsufficientDataError, match="ApBp"):
            chsh_quantity([self.exact("AB", 0.0), self.exact("ABp", 0.0), self.exact("ApB", 0.0)])


class TestGoldenRun:
    # regression pin: first execution of this exact configuration
    GOLDEN = {
        "AB": (33762, 0.7055269237604407),
        "AC": (32957, -0.7056164092605516),
        "BC": (33281, -0.0008713680478351011),
    }
    GOLDEN_B = 1.410271964973157
    GOLDEN_SHA = "14d7cf7d020ec35037602dc4c5c9707d904d5b2c665c5b92484c1c01f04c8d23"

    def test_golden_means_and_hash(self):
        cfg = ExperimentConfig(
            mode="qm_sequential", directions=TRIPLE, n_trials=100_000,
            selector_seed=0x5EED, outcome_seed=0x0DDF00D,
        )
        records = run_experiment(cfg)
        est = estimate_correlators(records)
        for tag, (n, mean) in self.GOLDEN.items():
            assert est[tag].n == n
            assert est[tag].mean == mean
        assert bell_quantity(est).value == self.GOLDEN_B
        assert records.sha256() == self.GOLDEN_SHA


class TestRecordsCsv:
    def test_exact_csv_layout(self):
        records = RecordBatch(
            "temporal",
            np.array([0, 1, 2]),
            np.array([0, 2, 1]),
            np.array([1, -1, 1]),
            np.array([-1, -1, 1]),
        )
        expected = (
            "trial,context,slot_x,slot_y,s1,s2\n"
            "0,AB,1,2,1,-1\n"
            "1,BC,2,3,-1,-1\n"
            "2,AC,1,3,1,1\n"
        )
        assert records.to_csv_bytes().decode() == expected

    def test_round_trip(self, tmp_path):
        records = run_experiment(temporal_config(n_trials=500))
        path = tmp_path / "records.csv"
        records.write_csv(path)
        loaded = RecordBatch.from_csv(path)
        assert loaded == records
        assert loaded.sha256() == records.sha256()

    def test_chsh_round_trip(self, tmp_path):
        records = run_experiment(temporal_config(mode="qm_singlet", directions=QUAD, n_trials=500))
        path = tmp_path / "records.csv"
        records.write_csv(path)
        assert RecordBatch.from_csv(path) == records

    def test_bad_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("foo,bar\n")
        with pytest.raises(ValidationError, match="line 1"):
            RecordBatch.from_csv(path)

    @pytest.mark.parametrize(
        "row,lineno",
        [
            ("0,AB,1,2,1", 3),
            ("0,AB,1,2,1,2", 3),
            ("0,AB,1,2,one,-1", 3),
            ("0,XY,1,2,1,-1", 3),
            ("0,AB,9,9,1,-1", 3),
        ],
    )
    def test_malformed_row_cites_line(self, tmp_path, row, lineno):
        path = tmp_path / "r.csv"
        path.write_text("trial,context,slot_x,slot_y,s1,s2\n0,AB,1,2,1,-1\n" + row + "\n")
        with pytest.raises(ValidationError, match=f"line {lineno}"):
            RecordBatch.from_csv(path)

    def test_from_records_list(self):
        records = [TrialRecord(0, "AB", 1, 2, 1, -1), TrialRecord(1, "BC", 2, 3, -1, -1)]
        batch = RecordBatch.from_records(records)
        assert batch.kind == "temporal"
        assert list(batch) == records

    def test_from_records_rejects_unknown_context(self):
        with pytest.raises(ValidationError):
            RecordBatch.from_records([TrialRecord(0, "ZZ", 1, 2, 1, 1)])


class TestAnalysisReport:
    def test_round_trip(self, tmp_path):
        records = run_experiment(temporal_config(n_trials=5000))
        report = analyze_records(records, mode="qm_sequential")
        path = tmp_path / "report.json"
        write_report(report, path)
        loaded = load_report(path)
        assert loaded.mode == "qm_sequential"
        assert loaded.records_sha256 == records.sha256()
        assert loaded.bell.verdict == report.bell.verdict
        assert loaded.bell.value == round12(report.bell.value)

    def test_mode_mismatch_rejected(self):
        records = run_experiment(temporal_config(n_trials=500))
        with pytest.raises(ValidationError):
            analyze_records(records, mode="qm_singlet")

    def test_floats_rounded_to_12_digits(self):
        records = run_experiment(temporal_config(n_trials=5000))
        doc = report_to_jsonable(analyze_records(records))
        for entry in doc["estimates"].values():
            assert entry["mean"] == round12(entry["mean"])
        text = json.dumps(doc)
        assert report_from_jsonable(json.loads(text)).n_trials == 5000

    def test_infinite_sigma_excess_survives_round_trip(self):
        records = [TrialRecord(i, tag, sx, sy, 1, 1)
                   for i in range(6) for tag, sx, sy in [("AB", 1, 2), ("AC", 1, 3), ("BC", 2, 3)]]
        batch = RecordBatch.from_records(records)
        report = analyze_records(batch)
        assert report.bell.value == 1.0 and report.bell.verdict == "consistent"
        doc = report_to_jsonable(report)
        assert doc["bell"]["sigma_excess"] is None
        assert report_from_jsonable(doc).bell.verdict == "consistent"
