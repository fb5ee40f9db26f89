import json

import numpy as np
import pytest
from click.testing import CliRunner

import rankhash as rh
from rankhash.cli import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_INCOMPATIBLE, ExperimentConfig, main
from rankhash.errors import DataError, ParameterError


@pytest.fixture
def runner():
    return CliRunner()


def write_features(path, n=12, rows=20, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["subject_id,sample_id," + ",".join(f"f{i}" for i in range(n))]
    for r in range(rows):
        values = rng.normal(size=n)
        lines.append(f"u{r // 2},{r % 2}," + ",".join(repr(float(v)) for v in values))
    path.write_text("\n".join(lines) + "\n")
    return path


class TestStore:
    def _records(self, params, count=4):
        rng = np.random.default_rng(1)
        fp = params.fingerprint
        return [
            rh.TemplateRecord(
                subject_id=f"u{i}", sample_id="0",
                code=rh.HashedCode(
                    indices=rng.integers(1, params.k + 1, size=params.m).astype(np.int32),
                    params_fingerprint=fp,
                ),
            )
            for i in range(count)
        ]

    @pytest.mark.parametrize("binary", [False, True])
    def test_round_trip(self, tmp_path, binary):
        params = rh.HashParams(n=20, m=30, k=7, p=2, master_seed=5)
        records = self._records(params)
        path = tmp_path / "store.jsonl"
        rh.write_store(path, params, records, binary=binary)
        loaded_params, loaded = rh.read_store(path)
        assert loaded_params == params
        assert len(loaded) == len(records)
        for a, b in zip(records, loaded):
            assert a.subject_id == b.subject_id
            assert a.sample_id == b.sample_id
            assert a.code == b.code
            assert a.created == b.created

    def test_fingerprint_mismatch_detected(self, tmp_path):
        params = rh.HashParams(n=20, m=30, k=7, p=2, master_seed=5)
        bad = [rh.TemplateRecord(
            subject_id="u0", sample_id="0",
            code=rh.HashedCode(indices=np.ones(30, dtype=np.int32),
                               params_fingerprint="deadbeefdeadbeef"),
        )]
        path = tmp_path / "store.jsonl"
        rh.write_store(path, params, bad)
        with pytest.raises(DataError, match="fingerprint"):
            rh.read_store(path)

    def test_empty_store_rejected(self, tmp_path):
        path = tmp_path / "store.jsonl"
        path.write_text("")
        with pytest.raises(DataError):
            rh.read_store(path)


class TestExperimentConfig:
    def test_missing_file(self):
        with pytest.raises(ParameterError):
            ExperimentConfig.load("/nonexistent/config.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ParameterError):
            ExperimentConfig.load(path)

    def test_missing_dataset_csv(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "dataset": {"csv": str(tmp_path / "absent.csv")},
            "params": {"n": 10, "m": 4, "k": 3, "p": 1, "master_seed": "0"},
        }))
        with pytest.raises(ParameterError, match="not found"):
            ExperimentConfig.load(path)

    def test_grid_validated_against_n(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "dataset": {"synthetic": {"num_subjects": 2, "samples_per_subject": 2, "n": 10}},
            "params": {"n": 10, "m": 4, "k": 3, "p": 1, "master_seed": "0"},
            "grid": {"k": [3, 50]},
        }))
        with pytest.raises(ParameterError, match="grid k"):
            ExperimentConfig.load(path)


class TestCmdHash:
    def test_writes_one_record_per_row(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        out = tmp_path / "store.jsonl"
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,25,5,2", "--seed", "9",
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        params, records = rh.read_store(out)
        assert len(records) == 20
        assert params == rh.HashParams(n=12, m=25, k=5, p=2, master_seed=9)
        assert all(len(rec.code) == 25 for rec in records)

    def test_rerun_is_byte_identical(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (out1, out2):
            result = runner.invoke(main, ["hash", "--features", str(features),
                                          "--params", "12,25,5,2", "--seed", "9",
                                          "--out", str(out)])
            assert result.exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_corrupt_row_names_row_number(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        lines = features.read_text().splitlines()
        lines[17] = lines[17].replace(lines[17].split(",")[2], "garbage", 1)
        features.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,25,5,2", "--out", str(tmp_path / "s.jsonl")])
        assert result.exit_code == EXIT_DATA_ERROR
        assert "row 18" in result.output  # line 18 of the file (header + 17 rows)

    def test_bad_params_exit_code(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,25,5", "--out", str(tmp_path / "s.jsonl")])
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_dimension_mismatch_exit_code(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv", n=8)
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,25,5,2", "--out", str(tmp_path / "s.jsonl")])
        assert result.exit_code == EXIT_DATA_ERROR

    def test_500_row_enrolment_cardinality(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv", n=12, rows=500)
        out = tmp_path / "store.jsonl"
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,600,5,2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        _, records = rh.read_store(out)
        assert len(records) == 500
        assert all(len(rec.code) == 600 for rec in records)

    def test_binary_store_round_trips(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        plain, packed = tmp_path / "plain.jsonl", tmp_path / "packed.jsonl"
        for out, flag in ((plain, []), (packed, ["--binary"])):
            result = runner.invoke(main, ["hash", "--features", str(features),
                                          "--params", "12,25,5,2", "--out", str(out)] + flag)
            assert result.exit_code == 0
        _, a = rh.read_store(plain)
        _, b = rh.read_store(packed)
        assert all(x.code == y.code for x, y in zip(a, b))


class TestCmdMatch:
    def _store(self, tmp_path, runner, seed, name, features=None):
        features = features or write_features(tmp_path / f"f{seed}_{name}.csv")
        out = tmp_path / name
        result = runner.invoke(main, ["hash", "--features", str(features),
                                      "--params", "12,25,5,2", "--seed", str(seed),
                                      "--out", str(out)])
        assert result.exit_code == 0
        return out

    def test_store_vs_probe(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        store = self._store(tmp_path, runner, 9, "store.jsonl", features)
        out = tmp_path / "scores.csv"
        result = runner.invoke(main, ["match", "--store", str(store),
                                      "--probe", str(features), "--out", str(out)])
        assert result.exit_code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 20 * 20
        # self-comparisons must score 1.0
        for line in lines[1:]:
            parts = line.split(",")
            if parts[0] == parts[2] and parts[1] == parts[3]:
                assert float(parts[5]) == 1.0

    def test_cross_seed_stores_need_flag(self, tmp_path, runner):
        store_a = self._store(tmp_path, runner, 9, "a.jsonl")
        store_b = self._store(tmp_path, runner, 10, "b.jsonl")
        out = tmp_path / "scores.csv"
        result = runner.invoke(main, ["match", "--store", str(store_a),
                                      "--store2", str(store_b), "--out", str(out)])
        assert result.exit_code == EXIT_INCOMPATIBLE
        result = runner.invoke(main, ["match", "--store", str(store_a),
                                      "--store2", str(store_b), "--out", str(out),
                                      "--allow-cross-params"])
        assert result.exit_code == 0

    def test_requires_exactly_one_source(self, tmp_path, runner):
        store = self._store(tmp_path, runner, 9, "a.jsonl")
        result = runner.invoke(main, ["match", "--store", str(store),
                                      "--out", str(tmp_path / "x.csv")])
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_json_format(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv", rows=4)
        store = self._store(tmp_path, runner, 9, "a.jsonl", features)
        out = tmp_path / "scores.json"
        result = runner.invoke(main, ["match", "--store", str(store),
                                      "--probe", str(features), "--out", str(out),
                                      "--format", "json"])
        assert result.exit_code == 0
        assert len(json.loads(out.read_text())) == 16


def eval_config(tmp_path, **overrides):
    cfg = {
        "dataset": {"synthetic": {"num_subjects": 8, "samples_per_subject": 3,
                                  "n": 16, "sigma": 0.02, "seed": 4}},
        "params": {"n": 16, "m": 20, "k": 6, "p": 2, "master_seed": "11"},
        "out_dir": str(tmp_path / "results"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestCmdEval:
    def test_writes_reports(self, tmp_path, runner):
        config = eval_config(tmp_path)
        result = runner.invoke(main, ["eval", "--config", str(config)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "results"
        report = json.loads((out / "eer.json").read_text())
        assert report["num_genuine"] == 8 * 3
        assert report["num_imposter"] == 28
        assert 0.0 <= report["eer"] <= 0.5
        hist = json.loads((out / "histogram.json").read_text())
        assert sum(hist["genuine_counts"]) == 24
        scores = (out / "scores.csv").read_text().splitlines()
        assert len(scores) == 1 + 24 + 28

    def test_seed_override_changes_scores(self, tmp_path, runner):
        config = eval_config(tmp_path)
        r1 = runner.invoke(main, ["eval", "--config", str(config), "--seed", "1",
                                  "--out", str(tmp_path / "r1")])
        r2 = runner.invoke(main, ["eval", "--config", str(config), "--seed", "2",
                                  "--out", str(tmp_path / "r2")])
        assert r1.exit_code == 0 and r2.exit_code == 0
        a = json.loads((tmp_path / "r1" / "eer.json").read_text())
        b = json.loads((tmp_path / "r2" / "eer.json").read_text())
        assert a["params"]["master_seed"] == "1"
        assert b["params"]["master_seed"] == "2"

    def test_full_protocol_arithmetic_through_cli(self, tmp_path, runner):
        config = eval_config(
            tmp_path,
            dataset={"synthetic": {"num_subjects": 100, "samples_per_subject": 5,
                                   "n": 30, "sigma": 0.02, "seed": 1}},
            params={"n": 30, "m": 20, "k": 8, "p": 2, "master_seed": "5"},
        )
        result = runner.invoke(main, ["eval", "--config", str(config)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "results" / "eer.json").read_text())
        assert report["num_genuine"] == 1000
        assert report["num_imposter"] == 4950

    def test_csv_dataset_source(self, tmp_path, runner):
        ds = rh.synthesize_dataset(rh.SyntheticSpec(num_subjects=4, samples_per_subject=2,
                                                    n=10, sigma=0.02, seed=2))
        csv_path = tmp_path / "ds.csv"
        ds.to_csv(csv_path)
        config = eval_config(
            tmp_path,
            dataset={"csv": str(csv_path)},
            params={"n": 10, "m": 12, "k": 4, "p": 1, "master_seed": "3"},
        )
        result = runner.invoke(main, ["eval", "--config", str(config)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "results" / "eer.json").read_text())
        assert report["num_genuine"] == 4
        assert report["num_imposter"] == 6


class TestCmdSweep:
    def test_sweep_table(self, tmp_path, runner):
        config = eval_config(tmp_path, grid={"k": [4, 8], "p": [1, 2]}, repeats=2)
        result = runner.invoke(main, ["sweep", "--config", str(config)])
        assert result.exit_code == 0, result.output
        rows = json.loads((tmp_path / "results" / "sweep.json").read_text())
        assert len(rows) == 4
        csv_lines = (tmp_path / "results" / "sweep.csv").read_text().splitlines()
        assert csv_lines[0] == "k,p,m,mean_eer,std_eer"
        assert len(csv_lines) == 5

    def test_missing_grid(self, tmp_path, runner):
        config = eval_config(tmp_path)
        result = runner.invoke(main, ["sweep", "--config", str(config)])
        assert result.exit_code == EXIT_CONFIG_ERROR


class TestCmdCancelTest:
    def test_report(self, tmp_path, runner):
        config = eval_config(tmp_path, num_reissues=3)
        result = runner.invoke(main, ["cancel-test", "--config", str(config)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "results" / "cancellability.json").read_text())
        assert report["num_pseudo_imposter"] == 8 * 3 * 2
        assert 0.0 <= report["ks_statistic"] <= 1.0
        hist = json.loads((tmp_path / "results" / "histogram.json").read_text())
        assert "pseudo_imposter_counts" in hist


class TestCmdSecurity:
    def test_complexity_reference_row(self, tmp_path, runner):
        out = tmp_path / "report.json"
        result = runner.invoke(main, ["security", "complexity",
                                      "--min", "-0.2504", "--max", "0.2132",
                                      "--n", "299", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert report["possibilities_single"] == 4636
        assert report["exponent_single"] == 12
        assert report["exponent_total"] == 3588

    def test_complexity_from_features(self, tmp_path, runner):
        features = write_features(tmp_path / "features.csv")
        result = runner.invoke(main, ["security", "complexity",
                                      "--features", str(features)])
        assert result.exit_code == 0
        assert "possibilities_single" in result.output

    def test_complexity_needs_bounds(self, runner):
        result = runner.invoke(main, ["security", "complexity"])
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_arm_single_run(self, tmp_path, runner):
        out = tmp_path / "arm.json"
        result = runner.invoke(main, ["security", "arm", "--params", "6,80,3,2",
                                      "--observations", "8", "--seed", "3",
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert report["consistent"] is True
        assert report["recovered_fraction"] == 1.0
        assert report["recovered_order"] == report["true_order"]

    def test_arm_trials_mode(self, runner):
        result = runner.invoke(main, ["security", "arm", "--params", "6,80,3,2",
                                      "--observations", "6", "--trials", "5",
                                      "--sign-mode", "mixed", "--seed", "1"])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["trials"] == 5
        assert 0.0 <= report["contradiction_rate"] <= 1.0

    def test_arm_from_compromised_stores(self, tmp_path, runner):
        # enrol the same all-positive vectors under several seeds, then attack
        rng = np.random.default_rng(8)
        n = 6
        lines = ["subject_id,sample_id," + ",".join(f"f{i}" for i in range(n))]
        for r in range(2):
            values = rng.uniform(0.1, 1.0, size=n)
            lines.append(f"u{r},0," + ",".join(repr(float(v)) for v in values))
        features = tmp_path / "features.csv"
        features.write_text("\n".join(lines) + "\n")
        stores = []
        for seed in (1, 2, 3, 4, 5, 6, 7, 8):
            store = tmp_path / f"store{seed}.jsonl"
            result = runner.invoke(main, ["hash", "--features", str(features),
                                          "--params", "6,120,3,2", "--seed", str(seed),
                                          "--out", str(store)])
            assert result.exit_code == 0
            stores.append(str(store))
        out = tmp_path / "arm.json"
        args = ["security", "arm", "--subject", "u0", "--sample", "0", "--out", str(out)]
        for store in stores:
            args += ["--store", store]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        assert report["subject"] == "u0"
        assert report["consistent"] is True
        assert report["recovered_fraction"] > 0.9

    def test_arm_store_mode_needs_subject(self, tmp_path, runner):
        features = write_features(tmp_path / "f.csv", n=6, rows=2)
        store = tmp_path / "s.jsonl"
        runner.invoke(main, ["hash", "--features", str(features),
                             "--params", "6,20,3,2", "--out", str(store)])
        result = runner.invoke(main, ["security", "arm", "--store", str(store)])
        assert result.exit_code == EXIT_CONFIG_ERROR
