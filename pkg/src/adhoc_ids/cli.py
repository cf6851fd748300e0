"""Command-line front end and the on-disk formats.

Scenario files are ``key = value`` lines; ``#`` starts a comment. Only
``node_count`` is required. ``event`` and ``join`` may repeat::

    node_count = 50
    mode = spaid
    energy_init = uniform:500:1000
    event = 12 7 11010010 1        # tick source pattern label
    join = 300 150.0 75.5 900      # tick x y energy

Run outputs (``--out``):

``scenario.txt``
    the fully resolved scenario (defaults filled in); re-parses to the same config.
``trace.csv``
    one row per tick: ``tick,live,monitors,monitor_energy,drained_energy,coverage,
    events,detections,energies,roles``. ``events`` and ``detections`` are
    ``;``-separated; ``energies`` lists every node by id; ``roles`` is one
    character per node (``M`` monitor, ``m`` member, ``D`` dead).
``summary.txt``
    ``key = value`` lines, see :data:`SUMMARY_KEYS`.
``series_<mode>.csv``
    ``tick,monitor_energy`` (cumulative monitoring energy) for plotting.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .ca_engine import CaError, CaRule, enumerate_basins, unpack
from .classifier import ClassifierError, build_tree, training_accuracy
from .ga_evolve import Encoding, GaConfig, GaError
from .patterns import PatternError, PatternVector
from .simulator import (
    CompareReport,
    ConfigError,
    Event,
    Join,
    Mode,
    RunSummary,
    ScenarioConfig,
    TickRecord,
    compare,
    run,
)
from .topology import EnergySpec, TopologyError


class ScenarioError(ValueError):
    pass


class OutputError(OSError):
    pass


TRACE_COLUMNS = (
    "tick", "live", "monitors", "monitor_energy", "drained_energy", "coverage",
    "events", "detections", "energies", "roles",
)

SUMMARY_KEYS = (
    "mode", "seed", "ticks_completed", "terminated", "total_monitoring_energy",
    "total_drained_energy", "full_reruns", "intra_cluster_reelections",
    "stranded_reassignments", "reelection_role_excess", "mean_coverage",
    "events_delivered", "events_dropped",
    "true_positives", "false_positives", "true_negatives", "false_negatives", "misses",
    "detection_accuracy", "final_live_nodes", "initial_monitors",
)

_REPEATED = {"event", "join"}
_SCALAR_KEYS = [f.name for f in fields(ScenarioConfig) if f.name not in ("events", "joins")]
_FRACTION_KEYS = {"member_drain", "monitor_drain", "threshold"}
_INT_KEYS = {
    "node_count", "initial_hop_radius", "ticks", "seed", "generated_events", "train_size",
    "pattern_cells", "basin_target", "depth_limit", "ga_population", "ga_generations",
}


def fmt_number(value) -> str:
    """Exact, stable text for a number: terminating decimals as decimals, other rationals as a/b."""
    if isinstance(value, Fraction):
        d = value.denominator
        for p in (2, 5):
            while d % p == 0:
                d //= p
        if d != 1:
            return f"{value.numerator}/{value.denominator}"
        if value.denominator == 1:
            return str(value.numerator)
        scale = 0
        while (value * 10 ** scale).denominator != 1:
            scale += 1
        sign = "-" if value < 0 else ""
        digits = str(int(abs(value) * 10 ** scale)).rjust(scale + 1, "0")
        return f"{sign}{digits[:-scale]}.{digits[-scale:]}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _convert(key: str, raw: str):
    if key in _FRACTION_KEYS:
        return Fraction(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key == "mode":
        return Mode(raw)
    if key == "energy_init":
        return EnergySpec.parse(raw)
    return float(raw)


def parse_scenario(text: str) -> ScenarioConfig:
    values: dict = {}
    events: list[Event] = []
    joins: list[Join] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCALAR_KEYS and key not in _REPEATED:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "event":
                tick, source, bits, label = raw.split()
                events.append(Event(int(tick), int(source), PatternVector.from_bits(bits, int(label))))
            elif key == "join":
                tick, x, y, energy = raw.split()
                joins.append(Join(int(tick), float(x), float(y), Fraction(energy)))
            else:
                if key in values:
                    raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
                values[key] = _convert(key, raw)
        except ScenarioError:
            raise
        except (ValueError, TopologyError, PatternError) as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    if "node_count" not in values:
        raise ScenarioError("missing required key: node_count")
    return ScenarioConfig(events=tuple(events), joins=tuple(joins), **values)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    lines = []
    for key in _SCALAR_KEYS:
        value = getattr(cfg, key)
        if isinstance(value, Mode):
            text = value.value
        elif isinstance(value, EnergySpec):
            text = str(value)
        else:
            text = fmt_number(value)
        lines.append(f"{key} = {text}")
    for ev in cfg.events:
        lines.append(f"event = {ev.tick} {ev.source} {ev.pattern.bits} {ev.label}")
    for j in cfg.joins:
        lines.append(f"join = {j.tick} {j.x!r} {j.y!r} {fmt_number(j.energy)}")
    return "\n".join(lines) + "\n"


def trace_rows(records: Sequence[TickRecord]) -> list[list[str]]:
    return [
        [
            str(r.tick),
            str(r.live),
            str(r.monitors),
            fmt_number(r.monitor_energy),
            fmt_number(r.drained_energy),
            f"{r.coverage:.6f}",
            ";".join(r.events),
            ";".join(r.detections),
            ";".join(fmt_number(e) for e in r.energies),
            "".join(role.code for role in r.roles),
        ]
        for r in records
    ]


def trace_text(records: Sequence[TickRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(trace_rows(records))
    return buf.getvalue()


def summary_text(s: RunSummary) -> str:
    values = {
        "mode": s.mode.value,
        "detection_accuracy": "n/a" if s.detection_accuracy is None else f"{s.detection_accuracy:.6f}",
        "mean_coverage": f"{s.mean_coverage:.6f}",
        "initial_monitors": " ".join(map(str, s.initial_monitors)),
    }
    lines = []
    for key in SUMMARY_KEYS:
        v = values[key] if key in values else fmt_number(getattr(s, key))
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def series_text(points) -> str:
    lines = ["tick,monitor_energy"]
    lines += [f"{tick},{fmt_number(e)}" for tick, e in points]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def emit_trace(records: Sequence[TickRecord], summary: RunSummary, out_dir, prefix: str = "") -> list[Path]:
    out = Path(out_dir)
    return [
        _write(out / f"{prefix}trace.csv", trace_text(records)),
        _write(out / f"{prefix}summary.txt", summary_text(summary)),
        _write(out / f"{prefix}series_{summary.mode.value}.csv",
               series_text((r.tick, r.monitor_energy) for r in records)),
    ]


def mean_series(report: CompareReport, mode: Mode, ticks: int) -> list[tuple[int, Fraction]]:
    """Per-tick mean over seeds; a run that ended early holds its last value."""
    seeds = [r.seed for r in report.rows]
    out = []
    for tick in range(1, ticks + 1):
        total = Fraction(0)
        for seed in seeds:
            pts = report.series[(mode, seed)]
            if pts:
                total += pts[min(tick, len(pts)) - 1][1]
        out.append((tick, total / len(seeds)))
    return out


def compare_text(report: CompareReport) -> str:
    p, b = report.primary_mode.value, report.baseline_mode.value
    lines = [
        f"primary = {p}",
        f"baseline = {b}",
        f"seeds = {' '.join(str(r.seed) for r in report.rows)}",
        "# per seed: seed reruns_primary reruns_baseline energy_primary energy_baseline "
        "coverage_primary coverage_baseline",
    ]
    for r in report.rows:
        lines.append(
            f"seed {r.seed} {r.primary.full_reruns} {r.baseline.full_reruns} "
            f"{fmt_number(r.primary.total_monitoring_energy)} "
            f"{fmt_number(r.baseline.total_monitoring_energy)} "
            f"{r.primary.mean_coverage:.6f} {r.baseline.mean_coverage:.6f}"
        )
    lines += [
        f"mean_full_reruns_primary = {report.mean_reruns('primary'):.6f}",
        f"mean_full_reruns_baseline = {report.mean_reruns('baseline'):.6f}",
        f"mean_rerun_delta = {report.mean_rerun_delta:.6f}",
        f"mean_energy_delta = {report.mean_energy_delta:.6f}",
        f"mean_coverage_delta = {report.mean_coverage_delta:.6f}",
        f"rerun_win_fraction = {report.rerun_win_fraction:.6f}",
    ]
    return "\n".join(lines) + "\n"


def emit_compare(report: CompareReport, cfg: ScenarioConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [_write(out / "compare.txt", compare_text(report))]
    for r in report.rows:
        for summary in (r.primary, r.baseline):
            prefix = f"{summary.mode.value}_seed{r.seed}_"
            paths += emit_trace(report.traces[(summary.mode, r.seed)], summary, out, prefix)
    for mode in (report.primary_mode, report.baseline_mode):
        text = series_text(mean_series(report, mode, cfg.ticks))
        paths.append(_write(out / f"series_{mode.value}.csv", text))
    return paths


def read_patterns(text: str) -> list[PatternVector]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) != 2:
                raise ValueError("expected '<bits> <label>'")
            out.append(PatternVector.from_bits(parts[0], int(parts[1])))
        except ValueError as exc:
            raise PatternError(f"line {lineno}: {exc}") from None
    if not out:
        raise PatternError("pattern file is empty")
    return out


def _load_scenario(args) -> ScenarioConfig:
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {args.scenario}: {exc.strerror or exc}") from None
    cfg = parse_scenario(text)
    overrides = {}
    if getattr(args, "mode", None):
        overrides["mode"] = Mode(args.mode)
    if args.ticks is not None:
        overrides["ticks"] = args.ticks
    if args.seed and args.command == "run":
        overrides["seed"] = args.seed[-1]
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _header(text: str) -> str:
    return "".join(f"# {line}\n" for line in text.splitlines())


def cmd_run(args, out) -> None:
    cfg = _load_scenario(args)
    resolved = serialize_scenario(cfg)
    out.write(_header(resolved))
    summary, records = run(cfg)
    dest = Path(args.out)
    _write(dest / "scenario.txt", resolved)
    emit_trace(records, summary, dest)
    out.write(summary_text(summary))


def cmd_compare(args, out) -> None:
    cfg = _load_scenario(args)
    seeds = args.seed or [cfg.seed]
    resolved = serialize_scenario(cfg)
    out.write(_header(resolved))
    out.write(f"# compare seeds: {' '.join(map(str, seeds))}\n")
    report = compare(cfg, seeds)
    dest = Path(args.out)
    _write(dest / "scenario.txt", resolved)
    emit_compare(report, cfg, dest)
    out.write(compare_text(report))


def cmd_train(args, out) -> None:
    try:
        text = Path(args.patterns).read_text(encoding="utf-8")
    except OSError as exc:
        raise PatternError(f"cannot read {args.patterns}: {exc.strerror or exc}") from None
    patterns = read_patterns(text)
    ga = GaConfig(args.population, args.generations, args.mutation_rate, seed=args.seed)
    encoding = Encoding(args.encoding, len(patterns[0].cells)) if args.encoding == "matrix" else None
    out.write(
        f"# k = {args.k}\n# depth_limit = {args.depth_limit}\n# purity_stop = {args.purity_stop}\n"
        f"# encoding = {args.encoding}\n# seed = {args.seed}\n"
        f"# population = {args.population}\n# generations = {args.generations}\n"
        f"# mutation_rate = {args.mutation_rate}\n"
    )
    tree = build_tree(patterns, args.k, args.depth_limit, args.purity_stop, ga, encoding)
    acc = training_accuracy(tree, patterns)
    _write(Path(args.out), tree.to_text())
    out.write(f"patterns = {len(patterns)}\ndepth = {tree.depth}\ntraining_accuracy = {acc:.6f}\n")


def cmd_basins(args, out) -> None:
    out.write(f"# rule = {args.rule}\n# cells = {args.cells}\n")
    part = enumerate_basins(CaRule(args.rule), args.cells)
    basins = part.basins
    out.write(f"basins = {len(basins)}\n")
    n = args.cells
    for att, states in basins.items():
        bits = lambda v: "".join(map(str, unpack(v, n)))  # noqa: E731
        out.write(f"{bits(att)}: {' '.join(bits(s) for s in states)}\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adhoc-ids", description="Simulate power-aware IDS monitor election in ad hoc networks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("run", "compare"):
        s = sub.add_parser(name)
        s.add_argument("scenario")
        if name == "run":
            s.add_argument("--mode", choices=[m.value for m in Mode])
        s.add_argument("--ticks", type=int)
        s.add_argument("--seed", type=int, action="append", help="repeatable for compare")
        s.add_argument("--out", default="out")

    s = sub.add_parser("train")
    s.add_argument("patterns", help="lines of '<bits> <label>'")
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--depth-limit", type=int, default=4)
    s.add_argument("--purity-stop", type=float, default=0.95)
    s.add_argument("--encoding", choices=["rule", "matrix"], default="rule")
    s.add_argument("--population", type=int, default=40)
    s.add_argument("--generations", type=int, default=50)
    s.add_argument("--mutation-rate", type=float, default=0.02)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="tree.txt")

    s = sub.add_parser("basins")
    s.add_argument("--rule", type=int, required=True)
    s.add_argument("--cells", type=int, required=True)
    return p


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "train": cmd_train, "basins": cmd_basins}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args, out)
    except (ScenarioError, ConfigError, PatternError, ClassifierError, GaError, CaError,
            TopologyError, OutputError) as exc:
        err.write(f"error: {type(exc).__name__}: {str(exc).splitlines()[0]}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
