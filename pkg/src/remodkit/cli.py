"""Command-line entry point: ``remodkit <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .core import csv_text, parse_config_name, read_decomposition, write_decomposition, write_mdg
from .errors import RemodError
from .features import aggregate_metrics, parse_metrics_csv, read_feature_csv, write_feature_csv
from .groundtruth import build_reference, common_paths, flatten
from .pipeline import (
    Gap,
    PipelineConfig,
    evaluate,
    ResultStore,
    gaps_csv,
    load_config,
    load_dependencies,
    load_features,
    load_tree,
    read_gaps_csv,
    run_cell,
    run_matrix,
    stability_csv,
)
from .selection.featuresel import FeatureGAParams
from .selection.footprint import (
    FootprintModel,
    PerformanceTable,
    label_runs,
    recommend,
    train_footprints,
)

log = logging.getLogger("remodkit")

EXIT_OK, EXIT_GAPS, EXIT_ERROR = 0, 3, 2


class Workspace:
    """Resolved config plus the output directory layout."""

    def __init__(self, cfg: PipelineConfig, out: Path, jobs: int = 1):
        self.cfg = cfg
        self.out = Path(out)
        self.jobs = jobs

    results = property(lambda self: self.out / "results")
    mdg_dir = property(lambda self: self.out / "mdg")
    gt_dir = property(lambda self: self.out / "groundtruth")
    features = property(lambda self: self.out / "features.csv")
    model_dir = property(lambda self: self.out / "model")
    plots = property(lambda self: self.out / "plots")
    report_dir = property(lambda self: self.out / "report")
    gaps_file = property(lambda self: self.out / "report" / "gaps.csv")
    timings = property(lambda self: self.out / "timings.csv")

    def update_gaps(self, stages: set, gaps: list):
        self.report_dir.mkdir(parents=True, exist_ok=True)
        old = read_gaps_csv(self.gaps_file.read_text(encoding="utf-8")) if self.gaps_file.exists() else []
        keep = [g for g in old if g.stage not in stages]
        self.gaps_file.write_text(gaps_csv(keep + list(gaps)), encoding="utf-8")

    def current_gaps(self) -> list[Gap]:
        if not self.gaps_file.exists():
            return []
        return read_gaps_csv(self.gaps_file.read_text(encoding="utf-8"))


def _workspace(args) -> Workspace:
    if not args.config:
        raise RemodError("this command needs --config (or the standalone file options)")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.threshold is not None:
        cfg = replace(cfg, threshold=args.threshold)
    out = Path(args.out) if args.out else (cfg.out or Path(args.config).parent / "out")
    out.mkdir(parents=True, exist_ok=True)
    return Workspace(cfg, out, args.jobs)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _emit(text: str, out):
    if out:
        _write(Path(out), text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_ingest(ws: Workspace) -> list[Gap]:
    gaps = []
    for spec in ws.cfg.releases():
        try:
            m = load_dependencies(spec.depends, load_tree(spec.tree, spec.version, ws.cfg.suffixes))
        except (OSError, RemodError, ValueError) as exc:
            gaps.append(Gap(spec.project, spec.version, "ingest", "", f"{type(exc).__name__}: {exc}"))
            continue
        _write(ws.mdg_dir / spec.project / f"{spec.version}.mdg", write_mdg(m))
    ws.update_gaps({"ingest"}, gaps)
    return gaps


def stage_ground_truth(ws: Workspace) -> list[Gap]:
    gaps = []
    cfg = ws.cfg
    for project, idx in cfg.evaluated():
        spec = project.releases[idx]
        window = project.releases[idx - cfg.ground_truth_window: idx]
        try:
            trees = [load_tree(w.tree, w.version, cfg.suffixes) for w in window]
            ref = flatten(build_reference(common_paths(trees)))
        except (OSError, RemodError, ValueError) as exc:
            gaps.append(Gap(spec.project, spec.version, "ground-truth", "", f"{type(exc).__name__}: {exc}"))
            continue
        _write(ws.gt_dir / spec.project / f"{spec.version}.tsv", write_decomposition(ref))
    ws.update_gaps({"ground-truth"}, gaps)
    return gaps


def stage_matrix(ws: Workspace) -> list[Gap]:
    store = ResultStore(ws.results)
    t0 = time.perf_counter()
    rep = run_matrix(ws.cfg, store, jobs=ws.jobs, timings_path=ws.timings)
    log.info("matrix: %d computed, %d reused, %d gaps in %.1fs", rep.computed, rep.skipped, len(rep.gaps),
             time.perf_counter() - t0)
    ws.update_gaps({"input", "cluster"}, rep.gaps)
    return rep.gaps


def stage_featurize(ws: Workspace) -> list[Gap]:
    vectors, gaps = [], []
    for spec in ws.cfg.releases():
        try:
            vectors.append(load_features(spec))
        except (OSError, RemodError, ValueError) as exc:
            gaps.append(Gap(spec.project, spec.version, "featurize", "", f"{type(exc).__name__}: {exc}"))
    if vectors:
        _write(ws.features, write_feature_csv(vectors))
    ws.update_gaps({"featurize"}, gaps)
    return gaps


def _ga_params(cfg: PipelineConfig) -> FeatureGAParams:
    return FeatureGAParams(
        population=cfg.selection_population,
        generations=cfg.selection_generations,
        min_size=cfg.selection_min_size,
        max_size=cfg.selection_max_size,
        size_penalty=cfg.selection_penalty,
        splits=cfg.selection_splits,
    )


def stage_train(ws: Workspace, drop_incomplete: bool = False) -> FootprintModel:
    cfg = ws.cfg
    if not ws.features.exists():
        stage_featurize(ws)
    vectors = read_feature_csv(ws.features.read_text(encoding="utf-8"))
    results = [r for r in ResultStore(ws.results).load_all() if r.seed == cfg.seed]
    rows = [(p.name, p.releases[i].version) for p, i in cfg.evaluated()]
    have = {(v.project, v.release) for v in vectors}
    configs = [c.name for c in cfg.matrix()]
    if drop_incomplete:
        done = {(r.project, r.release, r.config.name) for r in results}
        rows = [row for row in rows if row in have and any((*row, c) in done for c in configs)]
        dropped = [c for c in configs if not all((*row, c) in done for row in rows)]
        if dropped:
            log.warning("training without %d incomplete configurations: %s", len(dropped), ", ".join(dropped[:5]))
        configs = [c for c in configs if c not in dropped]
    results = [r for r in results if r.config.name in set(configs)]
    table = PerformanceTable.from_results(results, configs=configs, rows=rows)
    rep = train_footprints(table, vectors, threshold=cfg.threshold, seed=cfg.seed,
                           ga_params=_ga_params(cfg), folds=cfg.cv_folds, allow_fewer_folds=True)
    model = rep.model
    d = ws.model_dir
    _write(d / "model.json", model.dumps())
    _write(d / "metrics.csv", model.metrics_csv())
    _write(d / "table.csv", table.to_csv())
    counts = table.prioritisation()
    _write(d / "prioritisation.csv",
           csv_text([[c, n] for c, n in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))],
                    ["config", "times_prioritised"]))
    log.info("trained on %d rows x %d configs; features %s", len(table.rows), len(table.configs),
             ", ".join(model.space.selected_features))
    return model


def _recommend_rows(model: FootprintModel, vectors) -> str:
    rows = []
    for fv in vectors:
        rec = recommend(model, fv)
        top = [f"{c}:{v:.4f}" for c, v in rec.ranking[:3]]
        rows.append([fv.project, fv.release, rec.best, f"{rec.point[0]:.6f}", f"{rec.point[1]:.6f}", " ".join(top)])
    return csv_text(rows, ["project", "release", "recommended", "z1", "z2", "top3"])


def stage_recommend(ws: Workspace) -> Path:
    model = FootprintModel.loads((ws.model_dir / "model.json").read_text(encoding="utf-8"))
    vectors = read_feature_csv(ws.features.read_text(encoding="utf-8"))
    return _write(ws.report_dir / "recommendations.csv", _recommend_rows(model, vectors))


def render_plots(model: FootprintModel, table: PerformanceTable, out_dir: Path) -> list[Path]:
    from .plotting import plot_config_footprint, plot_selection_map

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {tuple(r): i for i, r in enumerate(table.rows)}
    rows = [tuple(r) for r in model.meta.get("rows", table.rows)]
    order = [index[r] for r in rows]
    points = model.space.points
    labels = label_runs(table, model.threshold)
    best = [labels.best[i] for i in order]
    paths = [plot_selection_map(model, points, best, out_dir / "selection_map.svg")]
    for c in model.configs:
        good = labels.good[c][order] if c in labels.good else [False] * len(rows)
        paths.append(plot_config_footprint(model, c, points, good, out_dir / f"footprint_{c}.svg"))
    return paths


def stage_plot(ws: Workspace) -> list[Path]:
    model = FootprintModel.loads((ws.model_dir / "model.json").read_text(encoding="utf-8"))
    table = PerformanceTable.from_csv((ws.model_dir / "table.csv").read_text(encoding="utf-8"))
    return render_plots(model, table, ws.plots)


def stage_report(ws: Workspace) -> list[Gap]:
    results = [r for r in ResultStore(ws.results).load_all() if r.seed == ws.cfg.seed]
    _write(ws.report_dir / "stability.csv", stability_csv(results))
    gaps = ws.current_gaps()
    expected = len(ws.cfg.evaluated()) * len(ws.cfg.matrix())
    summary = {
        "results": len(results),
        "expected_results": expected,
        "gaps": len(gaps),
        "complete": not gaps and len(results) == expected,
    }
    _write(ws.report_dir / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    if gaps:
        log.error("%d gaps; see %s", len(gaps), ws.gaps_file)
    return gaps if gaps or len(results) == expected else [Gap("", "", "report", "", "results missing")]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    from .synthetic import generate_corpus

    out = Path(args.out or "synthetic-corpus")
    cfg = generate_corpus(out, seed=args.seed or 0, releases=args.releases, window=args.window)
    print(cfg)
    return EXIT_OK


def cmd_ingest(args) -> int:
    if args.depends:
        tree = load_tree(Path(args.tree), "release", tuple(args.suffix)) if args.tree else None
        _emit(write_mdg(load_dependencies(Path(args.depends), tree)), args.out)
        return EXIT_OK
    return EXIT_GAPS if stage_ingest(_workspace(args)) else EXIT_OK


def cmd_ground_truth(args) -> int:
    if args.tree:
        trees = [load_tree(Path(t), str(i), tuple(args.suffix)) for i, t in enumerate(args.tree)]
        _emit(write_decomposition(flatten(build_reference(common_paths(trees)))), args.out)
        return EXIT_OK
    return EXIT_GAPS if stage_ground_truth(_workspace(args)) else EXIT_OK


def cmd_cluster(args) -> int:
    if args.mdg:
        if not args.algorithm:
            raise RemodError("--mdg needs --algorithm")
        m = load_dependencies(Path(args.mdg))
        config = parse_config_name(args.algorithm)
        from .bunch import SearchParams

        decomp, _ = run_cell(m, config, SearchParams(seed=args.seed or 0))
        _emit(write_decomposition(decomp), args.out)
        return EXIT_OK
    return EXIT_GAPS if stage_matrix(_workspace(args)) else EXIT_OK


def cmd_evaluate(args) -> int:
    if args.result:
        if not args.reference:
            raise RemodError("--result needs --reference")
        a = read_decomposition(Path(args.result).read_text(encoding="utf-8"))
        b = read_decomposition(Path(args.reference).read_text(encoding="utf-8"))
        score, shared = evaluate(a, b)
        dropped = len(a.entities | b.entities) - shared
        if dropped:
            log.warning("scoring %d shared entities; %d appear in only one decomposition", shared, dropped)
        doc = score.to_json(result=args.result, reference=args.reference)
        doc["shared"] = shared
        print(json.dumps(doc, sort_keys=True))
        return EXIT_OK
    return EXIT_GAPS if stage_matrix(_workspace(args)) else EXIT_OK


def cmd_featurize(args) -> int:
    if args.metrics:
        vectors = []
        for path in args.metrics:
            p = Path(path)
            vectors.append(aggregate_metrics(parse_metrics_csv(p.read_text(encoding="utf-8")),
                                             args.project or p.parent.parent.name, p.parent.name))
        _emit(write_feature_csv(vectors), args.out)
        return EXIT_OK
    return EXIT_GAPS if stage_featurize(_workspace(args)) else EXIT_OK


def cmd_train(args) -> int:
    stage_train(_workspace(args), drop_incomplete=args.drop_incomplete)
    return EXIT_OK


def cmd_recommend(args) -> int:
    if args.model:
        model = FootprintModel.loads(Path(args.model).read_text(encoding="utf-8"))
        vectors = read_feature_csv(Path(args.features).read_text(encoding="utf-8"))
        if args.project:
            vectors = [v for v in vectors if v.project == args.project and (not args.release or v.release == args.release)]
        if args.json:
            docs = [{"project": v.project, "release": v.release, **recommend(model, v).to_json()} for v in vectors]
            _emit(json.dumps(docs, indent=1) + "\n", args.out)
        else:
            _emit(_recommend_rows(model, vectors), args.out)
        return EXIT_OK
    print(stage_recommend(_workspace(args)))
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.model:
        model = FootprintModel.loads(Path(args.model).read_text(encoding="utf-8"))
        table_path = Path(args.table) if args.table else Path(args.model).with_name("table.csv")
        table = PerformanceTable.from_csv(table_path.read_text(encoding="utf-8"))
        paths = render_plots(model, table, Path(args.out or "plots"))
    else:
        paths = stage_plot(_workspace(args))
    print(f"wrote {len(paths)} figures to {paths[0].parent}")
    return EXIT_OK


def cmd_report(args) -> int:
    return EXIT_GAPS if stage_report(_workspace(args)) else EXIT_OK


def cmd_run(args) -> int:
    ws = _workspace(args)
    t0 = time.perf_counter()
    gaps = stage_ingest(ws) + stage_ground_truth(ws) + stage_matrix(ws) + stage_featurize(ws)
    stage_train(ws, drop_incomplete=True)
    stage_recommend(ws)
    stage_plot(ws)
    gaps += stage_report(ws)
    log.info("pipeline finished in %.1fs with %d gaps", time.perf_counter() - t0, len(gaps))
    return EXIT_GAPS if gaps else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for the run matrix")
    common.add_argument("--threshold", type=float, help="MoJoFM threshold for a good run (default 70)")
    common.add_argument("--out", help="output directory, or output file for standalone commands")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="remodkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"remodkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("synth", cmd_synth, "write the bundled synthetic corpus and its config")
    p.add_argument("--releases", type=int, default=12)
    p.add_argument("--window", type=int, default=3)

    p = add("ingest", cmd_ingest, "aggregate dependency exports into MDG files")
    p.add_argument("--depends", help="single Depends JSON or MDG file")
    p.add_argument("--tree", help="file list or directory used to align entity names")
    p.add_argument("--suffix", action="append", default=[".java"])

    p = add("ground-truth", cmd_ground_truth, "build reference decompositions from release windows")
    p.add_argument("--tree", nargs="+", help="trees of the window releases (standalone)")
    p.add_argument("--suffix", action="append", default=[".java"])

    p = add("cluster", cmd_cluster, "cluster one MDG, or run the whole matrix with --config")
    p.add_argument("--mdg", help="dependency file to cluster (standalone)")
    p.add_argument("--algorithm", help="configuration name such as cosine_average_10 or hillclimbing_turbomq")

    p = add("evaluate", cmd_evaluate, "MoJoFM of a decomposition, or run the whole matrix with --config")
    p.add_argument("--result", help="decomposition TSV to score (standalone)")
    p.add_argument("--reference", help="reference decomposition TSV")

    p = add("featurize", cmd_featurize, "aggregate class metrics into project feature vectors")
    p.add_argument("--metrics", nargs="+", help="CK class metric CSVs (standalone)")
    p.add_argument("--project", help="project name for standalone vectors")

    p = add("train", cmd_train, "fit the footprint model from stored results")
    p.add_argument("--drop-incomplete", action="store_true",
                   help="train on configurations with complete results only")

    p = add("recommend", cmd_recommend, "rank configurations for feature vectors")
    p.add_argument("--model", help="model.json (standalone)")
    p.add_argument("--features", help="feature CSV (standalone)")
    p.add_argument("--project")
    p.add_argument("--release")
    p.add_argument("--json", action="store_true", help="emit the full ranking as JSON")

    p = add("plot", cmd_plot, "render footprint SVGs")
    p.add_argument("--model", help="model.json (standalone)")
    p.add_argument("--table", help="performance table CSV (defaults to table.csv next to the model)")

    add("report", cmd_report, "stability and completeness report; non-zero exit on gaps")
    add("run", cmd_run, "every stage from ingest to report")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("remodkit: error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.fn(args)
    except (RemodError, OSError) as exc:
        print(f"remodkit: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
