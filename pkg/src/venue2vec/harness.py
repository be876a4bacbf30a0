"""Experiment orchestration: end-to-end runs, parameter sweeps, plot data.

A run executes corpus construction, model building (embedding training,
matrix factorization, or nothing for CF/Random), per-user recommendation and
evaluation, with the modeling and recommendation phases timed separately.
Only training records ever reach vocabulary, sentence or matrix construction;
test records are consumed exclusively by ground-truth building.
"""

from __future__ import annotations

import dataclasses
import time
import traceback
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from . import baselines, recommend
from .corpus import (
    Dataset,
    FieldLayout,
    build_interactions,
    build_sentences,
    build_vocabulary,
    read_checkins,
)
from .embedding import (
    MAX_WINDOW,
    SKIP_GRAM,
    TrainingConfig,
    init_model,
    resolve_window,
    train,
    write_loss_trace,
)
from .errors import ConfigError, EmitError
from .fixtures import FEB_2011, FixtureSpec, generate_fixture
from .metrics import (
    MetricsReport,
    PhaseTimings,
    UserResult,
    aggregate,
    build_ground_truth,
    score_user,
    write_per_user_csv,
    write_report_csv,
    write_report_json,
)

EMBEDDING_METHODS = (recommend.KNI, recommend.NN, recommend.KIU)
BASELINE_METHODS = (baselines.CF, baselines.RANDOM, baselines.SVD, baselines.CCDPP)
ALL_METHODS = EMBEDDING_METHODS + BASELINE_METHODS

# Sweep grids used throughout the experiments: feature count 10..100 step 10,
# window 5..20 step 5, epochs 5..25 step 5.
SWEEP_GRIDS = {
    "F": list(range(10, 101, 10)),
    "C": [5, 10, 15, 20],
    "E": [5, 10, 15, 20, 25],
}

_AXIS_FIELDS = {"F": "feature_count", "C": "context_count", "E": "epoch_count"}

METRIC_COLUMNS = ["precision", "ndcg", "hitrate", "coverage"]

ERROR_MARKER = "ERROR"


def default_context_count(architecture: str) -> int | str:
    """Per-architecture window default: 20 for skip-gram, whole-sentence for CBOW."""
    return 20 if architecture == SKIP_GRAM else MAX_WINDOW


def _user_seed(seed: int, user: str) -> int:
    """Process-independent per-user sub-seed (hash() is salted, crc32 is not)."""
    return (seed * 0x9E3779B1 + zlib.crc32(user.encode("utf-8"))) & 0x7FFFFFFF


@dataclass
class ExperimentConfig:
    """Everything one run needs; flat on purpose so key=value files map 1:1."""

    input_path: str | None = None
    fixture: FixtureSpec | None = None
    boundary: int = FEB_2011
    method: str = recommend.KNI
    architecture: str = SKIP_GRAM
    feature_count: int = 100
    context_count: int | str = 20
    epoch_count: int = 25
    negative_samples: int = 5
    min_word_count: int = 1
    neighbors: int = 30
    k: int = 10
    filter_seen: bool = False
    binary_votes: bool = False
    seed: int = 1
    workers: int = 1
    rank: int | None = None
    regularization: float = 0.1
    mf_iterations: int = 15
    random_runs: int = 10
    out_dir: str | None = None
    layout: FieldLayout = field(default_factory=FieldLayout)

    def validate(self) -> None:
        if self.method not in ALL_METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}; expected one of {ALL_METHODS}"
            )
        if self.input_path is None and self.fixture is None:
            raise ConfigError("either an input file or a fixture spec is required")
        if self.input_path is not None and self.fixture is not None:
            raise ConfigError("input file and fixture spec are mutually exclusive")
        if self.k < 1 or self.neighbors < 1:
            raise ConfigError("k and neighbors must be >= 1")
        if self.min_word_count < 1:
            raise ConfigError("min_word_count must be >= 1")
        if self.random_runs < 1:
            raise ConfigError("random_runs must be >= 1")
        if self.method in EMBEDDING_METHODS:
            self.training_config()  # raises ConfigError on bad values

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(
            architecture=self.architecture,
            feature_count=self.feature_count,
            context_count=self.context_count,
            epoch_count=self.epoch_count,
            negative_samples=self.negative_samples,
            seed=self.seed,
            workers=self.workers,
        )

    def latent_rank(self) -> int:
        # default keeps factorization and embedding dimensions comparable
        return self.rank if self.rank is not None else self.feature_count


def load_records(config: ExperimentConfig):
    if config.fixture is not None:
        records, _ = generate_fixture(config.fixture)
        return records
    records, _ = read_checkins(config.input_path, config.layout)
    return records


def _recommender_for(config: ExperimentConfig, dataset: Dataset):
    """Build the per-user recommend callable; returns (fn, train_seconds, extras)."""
    started = time.perf_counter()
    extras: dict = {}

    if config.method in EMBEDDING_METHODS:
        vocab = build_vocabulary(dataset.train, config.min_word_count)
        corpus = build_sentences(dataset.train, vocab)
        model = init_model(vocab, config.training_config())
        model, trace = train(model, corpus)
        interactions = build_interactions(dataset.train)
        extras["loss_trace"] = trace
        extras["model"] = model
        extras["context_resolved"] = resolve_window(
            config.context_count, corpus.max_length
        )

        def recommend_one(user: str) -> recommend.RecommendationList:
            request = recommend.RecommendationRequest(
                user=user,
                k=config.k,
                neighbors=config.neighbors,
                filter_seen=config.filter_seen,
            )
            if config.method == recommend.KNI:
                return recommend.recommend_kni(model, request, interactions)
            if config.method == recommend.NN:
                return recommend.recommend_nn(
                    model, interactions, request, binary_votes=config.binary_votes
                )
            return recommend.recommend_kiu(model, interactions, request)

    elif config.method == baselines.CF:
        im = baselines.build_interaction_matrix(dataset.train, config.binary_votes)

        def recommend_one(user: str) -> recommend.RecommendationList:
            return baselines.recommend_cf(im, user, config.neighbors, config.k)

    elif config.method == baselines.RANDOM:
        im = baselines.build_interaction_matrix(dataset.train)
        catalog = im.venues

        def recommend_one(user: str) -> recommend.RecommendationList:
            # per-user sub-seed so one run's draws are independent across users
            return baselines.recommend_random(
                catalog, user, config.k, seed=_user_seed(config.seed, user)
            )

    else:  # svd / ccdpp
        im = baselines.build_interaction_matrix(dataset.train, config.binary_votes)
        rank = min(config.latent_rank(), min(im.shape))
        if config.method == baselines.SVD:
            factors = baselines.svd_factorize(im, rank, seed=config.seed)
        else:
            factors, objective = baselines.ccdpp_factorize(
                im,
                rank,
                config.regularization,
                config.mf_iterations,
                seed=config.seed,
            )
            extras["objective_trace"] = objective
        extras["factors"] = factors

        def recommend_one(user: str) -> recommend.RecommendationList:
            return baselines.recommend_latent_neighbors(
                factors,
                im,
                user,
                config.neighbors,
                config.k,
                method=config.method,
                exclude_seen=config.filter_seen,
            )

    return recommend_one, time.perf_counter() - started, extras


def _evaluate_users(
    recommend_one,
    ground_truth: dict[str, set[str]],
    k: int,
    rows: list[UserResult] | None = None,
) -> tuple[list[UserResult], list[recommend.RecommendationList], float]:
    """Recommend and score every eligible user, in sorted user order.

    rows may be passed in so the caller still holds the partial results if a
    recommender raises mid-run.
    """
    rows = [] if rows is None else rows
    results: list[recommend.RecommendationList] = []
    started = time.perf_counter()
    for user in sorted(ground_truth):
        result = recommend_one(user)
        results.append(result)
        rows.append(score_user(user, result.venues(), ground_truth[user], k))
    return rows, results, time.perf_counter() - started


def run_experiment(config: ExperimentConfig) -> MetricsReport:
    """Execute one full run and write artifacts into config.out_dir if set.

    On a mid-run failure the partial per-user CSV plus an ERROR marker file
    are left in the output directory before the exception propagates.
    """
    config.validate()
    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return _run_experiment(config, out_dir)
    except Exception as exc:
        if out_dir is not None:
            (out_dir / ERROR_MARKER).write_text(
                f"{exc}\n\n{traceback.format_exc()}", encoding="utf-8"
            )
        raise


def _run_experiment(config: ExperimentConfig, out_dir: Path | None) -> MetricsReport:
    from .corpus import split_train_test

    records = load_records(config)
    dataset = split_train_test(records, config.boundary)
    ground_truth = build_ground_truth(dataset)
    if not ground_truth:
        raise ConfigError("no user has both train and test records")

    if config.method == baselines.RANDOM and config.random_runs > 1:
        return _run_random_averaged(config, dataset, ground_truth, out_dir)

    recommend_one, train_seconds, extras = _recommender_for(config, dataset)
    rows: list[UserResult] = []
    try:
        rows, results, rec_seconds = _evaluate_users(
            recommend_one, ground_truth, config.k, rows
        )
    except Exception:
        # keep the partial per-user rows for post-mortem; the caller adds
        # the ERROR marker next to them
        if out_dir is not None and rows:
            write_per_user_csv(rows, out_dir / "per_user.csv")
        raise
    if out_dir is not None:
        write_per_user_csv(rows, out_dir / "per_user.csv")
    report = aggregate(
        rows,
        PhaseTimings(train_seconds, rec_seconds),
        method=config.method,
        arch=config.architecture if config.method in EMBEDDING_METHODS else "",
        feature_count=(
            config.feature_count
            if config.method in EMBEDDING_METHODS
            else (config.latent_rank() if config.method in (baselines.SVD, baselines.CCDPP) else 0)
        ),
        context_count=int(extras.get("context_resolved", 0)),
        epoch_count=config.epoch_count if config.method in EMBEDDING_METHODS else 0,
        neighbors=config.neighbors if config.method != baselines.RANDOM else 0,
        k=config.k,
    )
    if out_dir is not None:
        _write_artifacts(report, results, extras, out_dir)
    return report


def _run_random_averaged(
    config: ExperimentConfig,
    dataset: Dataset,
    ground_truth: dict[str, set[str]],
    out_dir: Path | None,
) -> MetricsReport:
    """Random baseline averaged over random_runs seeded runs."""
    started = time.perf_counter()
    im = baselines.build_interaction_matrix(dataset.train)
    catalog = im.venues
    build_seconds = time.perf_counter() - started
    reports: list[MetricsReport] = []
    rec_seconds = 0.0
    for run in range(config.random_runs):
        def recommend_one(user: str, _run=run) -> recommend.RecommendationList:
            return baselines.recommend_random(
                catalog, user, config.k, seed=_user_seed(config.seed + _run, user)
            )

        rows, _, seconds = _evaluate_users(recommend_one, ground_truth, config.k)
        rec_seconds += seconds
        if out_dir is not None:
            write_per_user_csv(rows, out_dir / f"per_user_run{run}.csv")
        reports.append(
            aggregate(
                rows,
                PhaseTimings(0.0, seconds),
                method=baselines.RANDOM,
                k=config.k,
            )
        )
    if out_dir is not None:
        write_per_user_csv(reports[0].per_user, out_dir / "per_user.csv")
    count = len(reports)
    mean = replace(
        reports[0],
        precision=sum(r.precision for r in reports) / count,
        ndcg=sum(r.ndcg for r in reports) / count,
        hitrate=sum(r.hitrate for r in reports) / count,
        coverage=sum(r.coverage for r in reports) / count,
        train_s=build_seconds,
        rec_s_total=rec_seconds,
        rec_s_per_user=rec_seconds / max(len(ground_truth) * count, 1),
    )
    if out_dir is not None:
        _write_artifacts(mean, [], {}, out_dir)
    return mean


def _write_artifacts(report, results, extras, out_dir: Path) -> None:
    write_report_csv([report.to_row()], out_dir / "report.csv")
    write_report_json(report.to_row(), out_dir / "report.json")
    if results:
        recommend.write_batch_recommendations(results, out_dir / "recommendations.tsv")
    if "loss_trace" in extras:
        write_loss_trace(extras["loss_trace"], out_dir / "loss_trace.csv")
    if "objective_trace" in extras:
        with open(out_dir / "objective_trace.csv", "w", encoding="utf-8") as handle:
            handle.write("iteration,objective\n")
            for iteration, value in enumerate(extras["objective_trace"]):
                handle.write(f"{iteration},{value!r}\n")


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis; the other parameters stay fixed at the base config."""

    axis: str
    values: Sequence[int | str] = ()

    def resolved_values(self) -> list:
        if self.axis not in _AXIS_FIELDS:
            raise ConfigError(f"sweep axis must be one of {sorted(_AXIS_FIELDS)}")
        return list(self.values) if self.values else list(SWEEP_GRIDS[self.axis])


def run_sweep(
    spec: SweepSpec, base: ExperimentConfig
) -> tuple[list[MetricsReport | None], list[dict]]:
    """One run per axis value; failures are recorded and the sweep continues.

    Returns the reports (None where a run failed) and the combined rows, and
    writes sweep_<axis>.csv under base.out_dir when set.
    """
    values = spec.resolved_values()
    if not values:
        raise ConfigError("sweep needs at least one value")
    field_name = _AXIS_FIELDS[spec.axis]
    out_dir = Path(base.out_dir) if base.out_dir else None
    reports: list[MetricsReport | None] = []
    rows: list[dict] = []
    for value in values:
        run_config = dataclasses.replace(
            base,
            **{field_name: value},
            out_dir=str(out_dir / f"{spec.axis}={value}") if out_dir else None,
        )
        try:
            report = run_experiment(run_config)
        except Exception:
            if out_dir is not None:
                failed_dir = out_dir / f"{spec.axis}={value}"
                failed_dir.mkdir(parents=True, exist_ok=True)
            reports.append(None)
            continue
        reports.append(report)
        rows.append(report.to_row())
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_report_csv(rows, out_dir / f"sweep_{spec.axis}.csv")
    return reports, rows


def infer_axis(rows: Sequence[dict]) -> str:
    """The single F/C/E column that varies across rows."""
    varying = [
        axis
        for axis, column in _AXIS_FIELDS.items()
        if len({row[axis] for row in rows}) > 1
    ]
    if len(varying) > 1:
        raise EmitError(f"reports vary along multiple axes: {varying}")
    if not varying:
        raise EmitError("reports do not vary along any of F, C, E")
    return varying[0]


def emit_plot_data(
    rows: Sequence[dict], out_dir: str | Path, axis: str | None = None
) -> dict[tuple[str, str], Path]:
    """Tidy (axis_value, metric, value) CSVs, one file per (method, axis)."""
    if not rows:
        raise EmitError("no reports to emit")
    if axis is None:
        axis = infer_axis(rows)
    if axis not in _AXIS_FIELDS:
        raise EmitError(f"unknown axis {axis!r}")
    for other in _AXIS_FIELDS:
        if other != axis and len({row[other] for row in rows}) > 1:
            raise EmitError(f"reports mix axes {axis} and {other}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[tuple[str, str], Path] = {}
    methods = sorted({row["method"] for row in rows})
    for method in methods:
        path = out_dir / f"{method}_{axis}.csv"
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("axis_value,metric,value\n")
            for row in sorted(
                (r for r in rows if r["method"] == method), key=lambda r: r[axis]
            ):
                for metric in METRIC_COLUMNS:
                    handle.write(f"{row[axis]},{metric},{row[metric]!r}\n")
        written[(method, axis)] = path
    return written


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat key=value config file; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values
