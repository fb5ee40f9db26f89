"""Command-line surface tying the library into reproducible experiments.

Commands: hash, match, eval, sweep, cancel-test, security (complexity, arm).
Experiments are driven by a declarative JSON config plus flag overrides; all
randomness flows from declared seeds, so every command is deterministic for
a fixed invocation.

Exit codes: 0 success, 2 configuration/parameter error, 3 data error,
4 incompatible templates.
"""

from __future__ import annotations

import csv
import functools
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from .errors import (
    DataError,
    DimensionError,
    IncompatibleTemplateError,
    ParameterError,
    RankHashError,
)
from .evaluation import (
    Dataset,
    ScoreSet,
    SyntheticSpec,
    cancellability_experiment,
    compute_eer,
    ks_statistic,
    run_protocol,
    sweep,
    synthesize_dataset,
)
from .hashing import HashParams, HashedCode, derive_permutations, hash_indices, mix_seed
from .matching import collision_score
from .security import FeatureStats, arm_order_attack, attack_success_rate, brute_force_complexity, observe
from .store import TemplateRecord, read_store, write_store

EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_INCOMPATIBLE = 4


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except IncompatibleTemplateError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INCOMPATIBLE)
        except (DataError, DimensionError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA_ERROR)
        except (ParameterError, RankHashError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG_ERROR)
    return wrapper


def _parse_params(text: str, seed: int) -> HashParams:
    parts = text.split(",")
    if len(parts) != 4:
        raise ParameterError(f"--params expects 'n,m,k,p', got {text!r}")
    try:
        n, m, k, p = (int(v) for v in parts)
    except ValueError:
        raise ParameterError(f"--params values must be integers, got {text!r}") from None
    return HashParams(n=n, m=m, k=k, p=p, master_seed=seed)


@dataclass
class ExperimentConfig:
    """Declarative experiment description loaded from a JSON file."""

    dataset: dict
    params: HashParams
    protocol: str = "fvc"
    imposter_sample_index: int = 0
    repeats: int = 5
    grid: dict | None = None
    num_reissues: int = 101
    seed: int = 0
    out_dir: str | None = None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except FileNotFoundError:
            raise ParameterError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON: {exc}") from None
        if "dataset" not in obj or "params" not in obj:
            raise ParameterError(f"{path}: config needs 'dataset' and 'params' sections")
        dataset = obj["dataset"]
        if "csv" in dataset:
            if not Path(dataset["csv"]).exists():
                raise ParameterError(f"{path}: dataset csv not found: {dataset['csv']}")
        elif "synthetic" in dataset:
            SyntheticSpec.from_dict(dataset["synthetic"])  # validate early
        else:
            raise ParameterError(f"{path}: dataset must provide 'csv' or 'synthetic'")
        params = HashParams.from_dict(obj["params"])
        grid = obj.get("grid")
        if grid is not None:
            for axis in grid:
                if axis not in ("k", "p", "m"):
                    raise ParameterError(f"{path}: unknown grid axis {axis!r}")
                values = grid[axis]
                if not isinstance(values, list) or not values:
                    raise ParameterError(f"{path}: grid axis {axis!r} must be a non-empty list")
                if axis == "k" and any(not 1 < v <= params.n for v in values):
                    raise ParameterError(f"{path}: grid k values must satisfy 1 < k <= n={params.n}")
                if axis in ("p", "m") and any(v < 1 for v in values):
                    raise ParameterError(f"{path}: grid {axis} values must be >= 1")
        return cls(
            dataset=dataset,
            params=params,
            protocol=obj.get("protocol", "fvc"),
            imposter_sample_index=int(obj.get("imposter_sample_index", 0)),
            repeats=int(obj.get("repeats", 5)),
            grid=grid,
            num_reissues=int(obj.get("num_reissues", 101)),
            seed=int(obj.get("seed", 0)),
            out_dir=obj.get("out_dir"),
        )

    def load_dataset(self) -> Dataset:
        if "csv" in self.dataset:
            return Dataset.from_csv(self.dataset["csv"])
        return synthesize_dataset(SyntheticSpec.from_dict(self.dataset["synthetic"]))


def _read_feature_rows(path):
    """Feature CSV in enrolment order: (subject_id, sample_id) labels + matrix."""
    labels, rows = [], []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        if len(header) < 3 or header[0] != "subject_id" or header[1] != "sample_id":
            raise DataError(f"{path}: header must be subject_id,sample_id,<features...>")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
            labels.append((row[0], row[1]))
    if not rows:
        raise DataError(f"{path}: no feature rows")
    return labels, np.asarray(rows, dtype=np.float64)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(config: ExperimentConfig, override: str | None) -> Path:
    out = Path(override or config.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
@click.version_option()
def main():
    """Rank hashing of feature templates: hashing, matching, evaluation and
    security analysis."""


@main.command("hash")
@click.option("--features", required=True, type=click.Path(), help="Input feature CSV (subject_id,sample_id,f0..).")
@click.option("--params", "params_text", required=True, help="Hash parameters as 'n,m,k,p'.")
@click.option("--seed", default=0, show_default=True, type=int, help="Master seed.")
@click.option("--out", required=True, type=click.Path(), help="Output template store (JSON lines).")
@click.option("--binary", is_flag=True, help="Store codes in the compact bit-packed form.")
@_handle_errors
def cmd_hash(features, params_text, seed, out, binary):
    """Hash a CSV of feature vectors into a protected template store."""
    params = _parse_params(params_text, seed)
    labels, X = _read_feature_rows(features)
    if X.shape[1] != params.n:
        raise DimensionError(f"{features}: rows have {X.shape[1]} features, params declare n={params.n}")
    codes = hash_indices(X, params)
    fp = params.fingerprint
    records = [
        TemplateRecord(subject_id=sid, sample_id=sample,
                       code=HashedCode(indices=row, params_fingerprint=fp))
        for (sid, sample), row in zip(labels, codes)
    ]
    write_store(out, params, records, binary=binary)
    click.echo(f"hashed {len(records)} templates -> {out}")


@main.command("match")
@click.option("--store", "store_path", required=True, type=click.Path(), help="Enrolled template store.")
@click.option("--store2", "store2_path", type=click.Path(), help="Second store to match against.")
@click.option("--probe", "probe_path", type=click.Path(), help="Probe feature CSV to hash and match.")
@click.option("--out", required=True, type=click.Path(), help="Output scores file.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--allow-cross-params", is_flag=True, help="Permit scoring across different seeds/params.")
@_handle_errors
def cmd_match(store_path, store2_path, probe_path, out, fmt, allow_cross_params):
    """Score templates against a second store or freshly hashed probes."""
    if (store2_path is None) == (probe_path is None):
        raise ParameterError("provide exactly one of --store2 or --probe")
    params, enrolled = read_store(store_path)
    if store2_path is not None:
        _, queries = read_store(store2_path)
    else:
        labels, X = _read_feature_rows(probe_path)
        if X.shape[1] != params.n:
            raise DimensionError(
                f"{probe_path}: rows have {X.shape[1]} features, store params declare n={params.n}"
            )
        fp = params.fingerprint
        queries = [
            TemplateRecord(subject_id=sid, sample_id=sample,
                           code=HashedCode(indices=row, params_fingerprint=fp))
            for (sid, sample), row in zip(labels, hash_indices(X, params))
        ]
    rows = []
    for enr, qry in itertools.product(enrolled, queries):
        ms = collision_score(enr.code, qry.code, allow_cross_params=allow_cross_params)
        rows.append({
            "enrolled_subject": enr.subject_id, "enrolled_sample": enr.sample_id,
            "query_subject": qry.subject_id, "query_sample": qry.sample_id,
            "collisions": ms.collisions, "score": ms.score,
        })
    if fmt == "json":
        _write_json(out, rows)
    else:
        with open(out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    click.echo(f"wrote {len(rows)} scores -> {out}")


@main.command("eval")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Experiment config JSON.")
@click.option("--out", type=click.Path(), help="Output directory (overrides config out_dir).")
@click.option("--seed", type=int, help="Master seed override.")
@_handle_errors
def cmd_eval(config_path, out, seed):
    """Run the verification protocol and report EER plus score distributions."""
    config = ExperimentConfig.load(config_path)
    params = config.params if seed is None else config.params.with_seed(seed)
    ds = config.load_dataset()
    scores = run_protocol(ds, params, protocol=config.protocol,
                          imposter_sample_index=config.imposter_sample_index)
    result = compute_eer(scores)
    out_path = _out_dir(config, out)
    _write_json(out_path / "eer.json", {
        "params": params.to_dict(),
        "protocol": config.protocol,
        "num_genuine": int(scores.genuine.size),
        "num_imposter": int(scores.imposter.size),
        "eer": result.eer,
        "threshold": result.threshold,
        "far": result.far.tolist(),
        "frr": result.frr.tolist(),
        "thresholds": result.thresholds.tolist(),
    })
    _write_json(out_path / "histogram.json", scores.histogram())
    with open(out_path / "scores.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "subject_a", "sample_a", "subject_b", "sample_b", "score"])
        writer.writerows(scores.iter_rows())
    click.echo(f"EER {result.eer * 100:.3f}% at threshold {result.threshold:.4f} "
               f"({scores.genuine.size} genuine / {scores.imposter.size} imposter) -> {out_path}")


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Experiment config JSON with a grid.")
@click.option("--out", type=click.Path(), help="Output directory (overrides config out_dir).")
@click.option("--seed", type=int, help="Base seed override.")
@_handle_errors
def cmd_sweep(config_path, out, seed):
    """Average EER over a (k, p, m) grid with repeated hash seeds."""
    config = ExperimentConfig.load(config_path)
    if not config.grid:
        raise ParameterError("sweep needs a 'grid' section in the config")
    ds = config.load_dataset()
    rows = sweep(
        ds,
        config.params,
        k_values=config.grid.get("k"),
        p_values=config.grid.get("p"),
        m_values=config.grid.get("m"),
        repeats=config.repeats,
        base_seed=config.seed if seed is None else seed,
        protocol=config.protocol,
    )
    out_path = _out_dir(config, out)
    _write_json(out_path / "sweep.json", rows)
    with open(out_path / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "p", "m", "mean_eer", "std_eer"])
        for row in rows:
            writer.writerow([row["k"], row["p"], row["m"], row["mean_eer"], row["std_eer"]])
    click.echo(f"swept {len(rows)} grid cells x {config.repeats} repeats -> {out_path}")


@main.command("cancel-test")
@click.option("--config", "config_path", required=True, type=click.Path(), help="Experiment config JSON.")
@click.option("--out", type=click.Path(), help="Output directory (overrides config out_dir).")
@click.option("--seed", type=int, help="Master seed override (drives the reissue seeds).")
@_handle_errors
def cmd_cancel_test(config_path, out, seed):
    """Reissue experiment: pseudo-imposter vs imposter score distributions."""
    config = ExperimentConfig.load(config_path)
    if seed is not None:
        config.params = config.params.with_seed(seed)
    ds = config.load_dataset()
    scores = cancellability_experiment(ds, config.params, num_reissues=config.num_reissues,
                                       protocol=config.protocol)
    pseudo, imposter = scores.pseudo_imposter, scores.imposter
    ks = ks_statistic(pseudo, imposter)
    gen_vs_pseudo = compute_eer(ScoreSet(genuine=scores.genuine, imposter=pseudo)).eer
    out_path = _out_dir(config, out)
    report = {
        "params": config.params.to_dict(),
        "num_reissues": config.num_reissues,
        "num_genuine": int(scores.genuine.size),
        "num_imposter": int(imposter.size),
        "num_pseudo_imposter": int(pseudo.size),
        "imposter_mean": float(imposter.mean()),
        "imposter_std": float(imposter.std(ddof=1)),
        "pseudo_imposter_mean": float(pseudo.mean()),
        "pseudo_imposter_std": float(pseudo.std(ddof=1)),
        "ks_statistic": ks,
        "genuine_vs_pseudo_imposter_eer": gen_vs_pseudo,
    }
    _write_json(out_path / "cancellability.json", report)
    _write_json(out_path / "histogram.json", scores.histogram())
    click.echo(f"pseudo-imposter mean {report['pseudo_imposter_mean']:.5f} vs imposter "
               f"{report['imposter_mean']:.5f}, KS {ks:.4f} -> {out_path}")


@main.group("security")
def cmd_security():
    """Non-invertibility and record-multiplicity attack analyses."""


@cmd_security.command("complexity")
@click.option("--min", "min_value", type=float, help="Minimum feature value.")
@click.option("--max", "max_value", type=float, help="Maximum feature value.")
@click.option("--step", default=1e-4, show_default=True, type=float, help="Precision step.")
@click.option("--n", default=299, show_default=True, type=int, help="Feature dimension.")
@click.option("--features", type=click.Path(), help="Feature CSV to derive min/max/n from.")
@click.option("--out", type=click.Path(), help="Write the report as JSON instead of stdout.")
@_handle_errors
def cmd_complexity(min_value, max_value, step, n, features, out):
    """Brute-force inversion complexity of the raw feature components."""
    if features is not None:
        _, X = _read_feature_rows(features)
        stats = FeatureStats.from_data(X, step=step)
    else:
        if min_value is None or max_value is None:
            raise ParameterError("provide --min and --max, or --features")
        stats = FeatureStats(min_value=min_value, max_value=max_value, step=step, n=n)
    report = brute_force_complexity(stats).to_dict()
    report["min_value"] = stats.min_value
    report["max_value"] = stats.max_value
    report["step"] = stats.step
    if out:
        _write_json(out, report)
        click.echo(f"wrote complexity report -> {out}")
    else:
        click.echo(json.dumps(report, indent=2, sort_keys=True))


@cmd_security.command("arm")
@click.option("--params", "params_text", default="8,200,4,2", show_default=True, help="Attack target parameters 'n,m,k,p'.")
@click.option("--sign-mode", type=click.Choice(["all-positive", "mixed"]), default="all-positive", show_default=True)
@click.option("--observations", default=5, show_default=True, type=int, help="Leaked codes per vector.")
@click.option("--trials", default=1, show_default=True, type=int, help="Monte Carlo trials (1 = single attack report).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--store", "store_paths", type=click.Path(), multiple=True,
              help="Compromised template stores (reissues of one enrolment); repeatable.")
@click.option("--subject", help="Subject id to attack when using --store.")
@click.option("--sample", default="0", show_default=True, help="Sample id to attack when using --store.")
@click.option("--out", type=click.Path(), help="Write the result as JSON instead of stdout.")
@_handle_errors
def cmd_arm(params_text, sign_mode, observations, trials, seed, store_paths, subject, sample, out):
    """Order-recovery attack from multiple compromised codes.

    With --store options the observations come from real template stores
    (each a reissue of the same enrolment under a different seed); otherwise
    random vectors are drawn and leaked synthetically.
    """
    params = _parse_params(params_text, seed)
    if store_paths:
        if subject is None:
            raise ParameterError("--store mode needs --subject (and optionally --sample)")
        observations_list = []
        for path in store_paths:
            store_params, records = read_store(path)
            matches = [r for r in records
                       if r.subject_id == subject and r.sample_id == str(sample)]
            if not matches:
                raise DataError(f"{path}: no record for subject {subject!r} sample {sample!r}")
            observations_list.append(
                (matches[0].code, derive_permutations(store_params), store_params))
        graph = arm_order_attack(observations_list)
        result = graph.to_dict()
        result["subject"] = subject
        result["sample"] = str(sample)
        result["stores"] = list(store_paths)
    elif trials == 1:
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.1, 1.0, size=params.n)
        if sign_mode == "mixed":
            x *= np.where(rng.random(params.n) < 0.5, -1.0, 1.0)
        seeds = [mix_seed(seed, 0, o) for o in range(observations)]
        graph = arm_order_attack(observe(x, params, seeds))
        result = graph.to_dict()
        result["sign_mode"] = sign_mode
        result["true_order"] = list(int(i) for i in np.argsort(-x))
    else:
        result = attack_success_rate(trials, params.n, sign_mode, params,
                                     observations_per_trial=observations, seed=seed)
    if out:
        _write_json(out, result)
        click.echo(f"wrote attack report -> {out}")
    else:
        click.echo(json.dumps(result, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
