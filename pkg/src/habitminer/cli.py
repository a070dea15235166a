"""Command-line front end: ``habitminer run`` mines one subscriber's habits,
``habitminer synth`` writes the planted-pattern benchmark as raw records."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import analyze, stability_report
from .engine import ConductanceError, DatasetTooSmallError, EngineConfig, resolve_tau, run_engine
from .graph import GraphTooSmallError
from .ingest import Dataset, EmptyDatasetError, PreconditionError, augment, parse_raw
from .proclus import ProclusConfig, ProclusTooSmallError, proclus_runs
from .report import (
    dumps,
    render_metacluster_charts,
    render_pc_table,
    sha256_file,
    sha256_text,
    summarize_user,
    write_json,
    write_outliers_svg,
    write_pies_svg,
    write_projection_csv,
    write_projection_svg,
    write_summary_svg,
    write_sweep_svg,
)
from .synthgen import write_benchmark

log = logging.getLogger("habitminer")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_ENGINE = 4
FORMATS = ("json", "csv", "svg")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    inputs: list[str]
    user: str | None
    engine: str
    ldabcd: EngineConfig
    proclus: ProclusConfig
    out: Path
    formats: tuple[str, ...]
    runs: int
    seed: int

    def to_json(self) -> dict:
        """Everything that shapes the results; the output directory is left out."""
        return {
            "inputs": list(self.inputs),
            "user": self.user,
            "engine": self.engine,
            "ldabcd": {k: v for k, v in dataclasses.asdict(self.ldabcd).items() if k != "threads"},
            "proclus": dataclasses.asdict(self.proclus),
            "formats": list(self.formats),
            "runs": self.runs,
            "seed": self.seed,
        }


def _tau_exp(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a number or 'auto'") from None


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(dict.fromkeys(p.strip().lower() for p in text.split(",") if p.strip()))
    bad = [p for p in parts if p not in FORMATS]
    if bad or not parts:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {','.join(FORMATS)}")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="habitminer", description="Mine recurrent calling habits from call records.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cluster the records of one user and write the report")
    run.add_argument("--input", action="append", required=True, help="raw record file (repeatable)")
    run.add_argument("--user", help="user id to keep when the input holds several users")
    run.add_argument("--engine", choices=("ldabcd", "proclus", "both"), default="ldabcd")
    run.add_argument("--tau-cq", type=float, default=0.8)
    run.add_argument("--theta", type=float, default=0.2)
    run.add_argument("--tau-exp", type=_tau_exp, default="auto")
    run.add_argument("--agents", type=int, default=8)
    run.add_argument("--walks", type=int, default=20, help="walks per configuration and agent")
    run.add_argument("--k", type=int, default=4)
    run.add_argument("--l", type=int, default=5)
    run.add_argument("--min-dev", type=float, default=0.1)
    run.add_argument("--runs", type=int, default=1, help="independent runs per engine; 2 or more adds a stability report")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--format", type=_formats, default=FORMATS, help="comma list of json,csv,svg")

    synth = sub.add_parser("synth", help="write the planted-pattern benchmark as raw records")
    synth.add_argument("--out", required=True, type=Path)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--size", type=int, default=100, help="records per pattern")
    synth.add_argument("--noise", type=int, default=100)
    synth.add_argument("--user", default="4")
    return parser


def config_from_args(args) -> RunConfig:
    if args.runs < 1:
        raise ConfigError("--runs must be at least 1")
    try:
        ldabcd = EngineConfig(
            tau_cq=args.tau_cq, theta=args.theta, tau_exp=args.tau_exp,
            n_agents=args.agents, walks_per_pc=args.walks, seed=args.seed,
        )
        proclus = ProclusConfig(k=args.k, l=args.l, min_dev=args.min_dev, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(list(args.input), args.user, args.engine, ldabcd, proclus, args.out,
                     tuple(args.format), args.runs, args.seed)


def load_inputs(paths, user) -> Dataset:
    lines = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            lines.extend(fh.read().splitlines())
    parsed = parse_raw(lines, user)
    if parsed.malformed:
        log.warning("skipped %d malformed line(s)", parsed.malformed)
    return Dataset(augment(parsed.records))


class _Artifacts:
    def __init__(self, out: Path, formats):
        self.out = out
        self.formats = formats
        self.paths: list[Path] = []

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def json(self, name, doc):
        if self.wants("json"):
            self.paths.append(write_json(self.out / name, doc))

    def add(self, path):
        self.paths.append(Path(path))


def _run_ldabcd(cfg: RunConfig, dataset: Dataset, art: _Artifacts):
    tau, curve = resolve_tau(dataset, cfg.ldabcd)
    if curve is not None and len(curve):
        if art.wants("csv"):
            curve.to_csv(art.out / "sweep.csv")
            art.add(art.out / "sweep.csv")
        if art.wants("svg"):
            art.add(write_sweep_svg(curve, art.out / "sweep.svg", tau))
    runs = []
    for r in range(cfg.runs):
        engine_cfg = dataclasses.replace(cfg.ldabcd, tau_exp=tau, seed=cfg.seed + r)
        result = run_engine(dataset, engine_cfg)
        runs.append(analyze(result, len(dataset)))
        log.info("ldabcd run %d: %d meta-clusters, %d regions", r, len(result.metaclusters), len(runs[-1].regions))

    first = runs[0]
    result = first.result
    art.json("metaclusters.json", {"tau_exp": tau, **result.to_json()})
    regions_doc, pie_rows, titles = [], [], []
    for i, reg in enumerate(first.regions):
        mc = result.metaclusters[reg.representative]
        charts = render_metacluster_charts(mc.members, dataset.records)
        table = render_pc_table(mc.pc_list)
        pie_rows.append(charts)
        titles.append(f"region {i}")
        regions_doc.append({
            "region": i,
            "metaclusters": list(reg.members),
            "centroid": [float(v) for v in reg.centroid],
            "representative": {"index": reg.representative, **mc.to_json()},
            "pies": [c.to_json() for c in charts],
            "pc_table": table.to_json(),
        })
        if art.wants("csv"):
            table.to_csv(art.out / f"region{i}_pcs.csv")
            art.add(art.out / f"region{i}_pcs.csv")
    art.json("regions.json", {"tau_exp": tau, "regions": regions_doc})
    if art.wants("csv"):
        art.add(write_projection_csv(first.projection, art.out / "projection.csv"))
    if art.wants("svg"):
        art.add(write_projection_svg(first.projection, art.out / "projection.svg", first.regions))
        if pie_rows:
            art.add(write_pies_svg(pie_rows, art.out / "regions_pies.svg", titles))
    if cfg.runs >= 2:
        art.json("stability_ldabcd.json", stability_report(runs, "ldabcd").to_json())


def _run_proclus(cfg: RunConfig, dataset: Dataset, art: _Artifacts):
    results = proclus_runs(dataset, cfg.proclus, cfg.runs)
    art.json("proclus.json", results[0].to_json())
    if cfg.runs >= 2:
        art.json("proclus_runs.json", {
            "runs": [{"seed": r.seed, "outlier_fraction": r.outlier_fraction, **r.to_json()} for r in results]
        })
        art.json("stability_proclus.json", stability_report(results, "proclus").to_json())
        if art.wants("svg"):
            art.add(write_outliers_svg([r.outlier_fraction for r in results], art.out / "outliers.svg"))


def run(cfg: RunConfig) -> int:
    try:
        dataset = load_inputs(cfg.inputs, cfg.user)
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_INPUT
    except (EmptyDatasetError, PreconditionError) as exc:
        log.error("bad input: %s", exc)
        return EXIT_INPUT
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory: %s", exc)
        return EXIT_CONFIG
    art = _Artifacts(cfg.out, cfg.formats)

    summary = summarize_user(dataset.records)
    art.json("summary.json", summary.to_json())
    if art.wants("svg"):
        art.add(write_summary_svg(summary, cfg.out / "summary.svg"))
    try:
        if cfg.engine in ("ldabcd", "both"):
            _run_ldabcd(cfg, dataset, art)
        if cfg.engine in ("proclus", "both"):
            _run_proclus(cfg, dataset, art)
    except (DatasetTooSmallError, ProclusTooSmallError, GraphTooSmallError, ConductanceError) as exc:
        log.error("engine failure: %s", exc)
        return EXIT_ENGINE

    config_doc = cfg.to_json()
    manifest = {
        "version": __version__,
        "config": config_doc,
        "config_sha256": sha256_text(dumps(config_doc)),
        "inputs": [{"path": p, "sha256": sha256_file(p)} for p in cfg.inputs],
        "artifacts": sorted(
            ({"path": p.name, "sha256": sha256_file(p)} for p in art.paths), key=lambda a: a["path"]
        ),
    }
    write_json(cfg.out / "manifest.json", manifest)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "synth":
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            write_benchmark(args.out / "benchmark.tsv", args.out / "truth.json",
                            args.seed, args.size, args.noise, args.user)
        except OSError as exc:
            log.error("cannot write benchmark: %s", exc)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
