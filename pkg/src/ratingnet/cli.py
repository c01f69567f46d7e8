"""Batch command-line front end.

Settings come from, in increasing priority: built-in defaults, an INI config
file (``--config``, sections ``[profile]``, ``[io]``, ``[eval]``), environment
variables ``RATINGNET_<SECTION>_<KEY>`` and command-line flags.

Exit codes: 0 success, 2 input/config error, 3 motif budget exceeded,
4 strict-mode data error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as dt
import io
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import ingest
from .ego import extract_ego_network, ego_stats
from .graph import UnknownNodeError
from .ingest import PROFILES, DatasetProfile, FormatError, ParseError, SnapshotError, parse_duration
from .motif import MotifBudgetExceeded, count_motifs, icc_from_counts, opsahl_cstar
from .pipeline import (
    ModelParams,
    critical_period_average,
    decay_profile,
    diagnostic_correlations,
    evaluate,
    outcome_as_prediction,
    predict_item,
    select_items,
)
from .synth import SynthConfig, format_movielens, generate

log = logging.getLogger("ratingnet")

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_STRICT = 0, 2, 3, 4
ENV_PREFIX = "RATINGNET_"


class ConfigError(ValueError):
    pass


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _timestamp(text: str | int) -> int:
    """Epoch seconds or an ISO date / datetime (UTC)."""
    if isinstance(text, int):
        return text
    text = text.strip()
    if text.lstrip("-").isdigit():
        return int(text)
    when = dt.datetime.fromisoformat(text)
    if when.tzinfo is None:
        when = when.replace(tzinfo=dt.timezone.utc)
    return int(when.timestamp())


# (section, key) -> (parser, default)
SETTINGS: dict[tuple[str, str], tuple[Callable[[Any], Any], Any]] = {
    ("profile", "name"): (str, "movielens"),
    ("profile", "rating_min"): (float, None),
    ("profile", "rating_max"): (float, None),
    ("profile", "implicit_rating"): (float, None),
    ("profile", "critical_window"): (parse_duration, None),
    ("profile", "lookback_window"): (parse_duration, None),
    ("profile", "popular_min_ratings"): (int, None),
    ("profile", "popular_min_avg"): (float, None),
    ("profile", "baseline_score"): (float, None),
    ("profile", "n_star_from_data"): (_bool, False),
    ("io", "input"): (Path, None),
    ("io", "format"): (str, "movielens"),
    ("io", "columns"): (str, "user=user,item=item,rating=rating,timestamp=timestamp"),
    ("io", "lenient"): (_bool, False),
    ("io", "snapshot"): (Path, None),
    ("io", "out_dir"): (Path, None),
    ("io", "out"): (Path, None),
    ("eval", "rho_tol"): (float, 0.05),
    ("eval", "n_band_abs"): (int, 5),
    ("eval", "n_band_rel"): (float, 0.5),
    ("eval", "workers"): (int, 1),
    ("eval", "budget"): (int, None),
    ("eval", "first_from"): (_timestamp, None),
    ("eval", "first_to"): (_timestamp, None),
    ("eval", "items"): (str, None),
    ("eval", "strict"): (_bool, False),
    ("eval", "self_check"): (_bool, False),
}
KEY_SECTION = {key: section for section, key in SETTINGS}

# which settings each command exposes as flags
COMMAND_KEYS = {
    "ingest": ["input", "format", "columns", "lenient", "snapshot"],
    "motifs": ["snapshot", "out", "budget"],
    "predict": ["snapshot", "items", "strict", "out", "budget"],
    "evaluate": ["snapshot", "out_dir", "rho_tol", "n_band_abs", "n_band_rel", "workers", "budget",
                 "first_from", "first_to", "self_check"],
    "plotdata": ["snapshot", "out_dir", "rho_tol", "n_band_abs", "n_band_rel", "workers", "budget",
                 "first_from", "first_to"],
}
PROFILE_KEYS = [key for section, key in SETTINGS if section == "profile"]


@dataclass
class RunConfig:
    command: str
    values: dict[str, Any]
    argv: argparse.Namespace

    def __getattr__(self, name: str) -> Any:
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def profile(self) -> DatasetProfile:
        name = self.values["name"]
        if name not in PROFILES:
            raise ConfigError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        base = PROFILES[name]
        changes: dict[str, Any] = {}
        lo, hi = self.values["rating_min"], self.values["rating_max"]
        if lo is not None or hi is not None:
            changes["rating_scale"] = (lo if lo is not None else base.rating_scale[0],
                                       hi if hi is not None else base.rating_scale[1])
        for key in ("implicit_rating", "critical_window", "lookback_window", "popular_min_ratings",
                    "popular_min_avg", "baseline_score"):
            if self.values[key] is not None:
                changes[key] = self.values[key]
        try:
            return base.with_overrides(**changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _read_config_file(path: Path) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    out: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if (section, key) not in SETTINGS:
                raise ConfigError(f"unknown config key [{section}] {key}")
            out[key] = value
    return out


def _read_env(environ: dict[str, str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if (section, key) not in SETTINGS:
            raise ConfigError(f"unknown environment setting {name}")
        out[key] = value
    return out


def resolve_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> RunConfig:
    environ = dict(os.environ) if environ is None else environ
    layered: dict[str, Any] = {}
    if getattr(args, "config", None):
        layered.update(_read_config_file(args.config))
    layered.update(_read_env(environ))
    values: dict[str, Any] = {}
    for (section, key), (conv, default) in SETTINGS.items():
        cli = getattr(args, key, None)
        if cli is not None:
            values[key] = cli
            continue
        if key in layered:
            try:
                values[key] = conv(layered[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
            continue
        values[key] = default
    return RunConfig(args.command, values, args)


def _add_setting(p: argparse.ArgumentParser, key: str) -> None:
    conv, default = SETTINGS[(KEY_SECTION[key], key)]
    flag = "--" + key.replace("_", "-")
    if conv is _bool:
        p.add_argument(flag, dest=key, action="store_const", const=True, default=None,
                       help=f"(default {default})")
    else:
        p.add_argument(flag, dest=key, type=conv, default=None, help=f"(default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratingnet", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="INI file with [profile], [io], [eval] sections")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    helps = {
        "ingest": "parse a rating file and write a graph snapshot",
        "motifs": "global (and per-user) motif counts and clustering coefficients",
        "predict": "predict the popularity of given items",
        "evaluate": "predict and score items against their realised outcomes",
        "plotdata": "write two-column x,y CSVs for the standard figures",
    }
    for name, keys in COMMAND_KEYS.items():
        p = sub.add_parser(name, help=helps[name])
        for key in keys:
            _add_setting(p, key)
        for key in PROFILE_KEYS:
            _add_setting(p, key)
        if name == "motifs":
            p.add_argument("--per-user", type=Path, help="also write per-user counts to this CSV")

    p = sub.add_parser("synth", help="write a deterministic synthetic MovieLens-format file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--users", type=int, default=SynthConfig.users)
    p.add_argument("--items", type=int, default=SynthConfig.items)
    p.add_argument("--start", type=int, default=SynthConfig.start)
    p.add_argument("--span", type=parse_duration, default=SynthConfig.span)
    p.add_argument("--gap-scale", type=parse_duration, default=int(SynthConfig.gap_scale))
    p.add_argument("--item-lifetime", type=parse_duration, default=SynthConfig.item_lifetime)
    p.add_argument("--rating-sd", type=float, default=SynthConfig.rating_sd)
    p.add_argument("--whole-stars", action="store_true")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    return parser


# -- commands --------------------------------------------------------------------


def _open_snapshot(cfg: RunConfig):
    if cfg.snapshot is None:
        raise ConfigError("--snapshot is required")
    if not cfg.snapshot.is_file():
        raise ConfigError(f"snapshot {cfg.snapshot} not found")
    return ingest.load_snapshot(cfg.snapshot)


def _profile_for(cfg: RunConfig, graph) -> DatasetProfile:
    profile = cfg.profile()
    if cfg.n_star_from_data and graph.edge_count:
        n_star = max(1, int(round(critical_period_average(graph, profile.critical_window))))
        profile = profile.with_overrides(popular_min_ratings=n_star)
    return profile


def _write(text: str, path: Path | None, out) -> None:
    if path is None:
        out.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_ingest(cfg: RunConfig, out) -> int:
    if cfg.input is None:
        raise ConfigError("--input is required")
    if not cfg.input.is_file():
        raise ConfigError(f"input {cfg.input} is not a readable file")
    if cfg.snapshot is None:
        raise ConfigError("--snapshot is required")
    profile = cfg.profile()
    strict = not cfg.lenient
    fmt = cfg.format
    if fmt == "movielens":
        result = ingest.parse_movielens(cfg.input, strict=strict, scale=profile.rating_scale)
    elif fmt == "konect":
        result = ingest.parse_konect(cfg.input, profile, strict=strict)
    elif fmt == "csv":
        try:
            columns = dict(pair.split("=", 1) for pair in cfg.columns.split(","))
        except ValueError:
            raise ConfigError(f"bad --columns {cfg.columns!r}; expected role=name,...") from None
        result = ingest.parse_generic_csv(cfg.input, columns, strict=strict, scale=profile.rating_scale,
                                          implicit_rating=profile.implicit_rating)
    else:
        raise ConfigError(f"unknown format {fmt!r}; choose movielens, konect or csv")
    for err in result.errors[:20]:
        log.warning("skipped %s", err)
    graph = ingest.build_graph(result.events)
    ingest.save_snapshot(graph, cfg.snapshot)
    lines = [
        f"primary={graph.primary_count}",
        f"secondary={graph.secondary_count}",
        f"edges={graph.edge_count}",
        f"duplicates={graph.duplicates}",
        f"skipped={result.skipped}",
    ]
    if graph.edge_count:
        lines += [
            f"t_min={int(graph.edge_time.min())}",
            f"t_max={int(graph.edge_time.max())}",
            f"critical_period_average={_fmt(critical_period_average(graph, profile.critical_window))}",
        ]
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


MOTIF_COLUMNS = ["sigma0", "sigma1", "sigma2", "sigma3", "kappa0", "kappa1", "kappa2",
                 "icc0", "icc1", "icc2", "icc3"]


def cmd_motifs(cfg: RunConfig, out) -> int:
    graph = _open_snapshot(cfg)
    total, per_user = count_motifs(graph, max_candidates=cfg.budget)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MOTIF_COLUMNS + ["cstar"])
    w.writerow([*total.as_vector(), *map(_fmt, icc_from_counts(total).icc), _fmt(opsahl_cstar(graph))])
    _write(buf.getvalue(), cfg.out, out)
    if cfg.argv.per_user is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["user_id"] + MOTIF_COLUMNS)
        for v, counts in per_user.items():
            w.writerow([graph.label(v), *counts.as_vector(), *map(_fmt, icc_from_counts(counts).icc)])
        _write(buf.getvalue(), cfg.argv.per_user, out)
    return EXIT_OK


def cmd_predict(cfg: RunConfig, out) -> int:
    graph = _open_snapshot(cfg)
    profile = _profile_for(cfg, graph)
    params = ModelParams.for_profile(profile)
    if not cfg.items:
        raise ConfigError("--items is required (comma-separated item ids)")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item_id", "ego_id", "r", "t0", "n_hat", "mu_hat", "rho_hat", "error"])
    failed = False
    for item_id in [s.strip() for s in cfg.items.split(",") if s.strip()]:
        try:
            node = graph.item(item_id)
        except UnknownNodeError:
            failed = True
            w.writerow([item_id, "", "", "", "", "", "", "unknown item"])
            continue
        if graph.degree(node) == 0:
            failed = True
            w.writerow([item_id, "", "", "", "", "", "", "unrated item"])
            continue
        p = predict_item(graph, node, profile, params, cfg.budget)
        w.writerow([p.item, p.ego, _fmt(p.first_rating), p.t0, _fmt(p.n_hat), _fmt(p.mu_hat),
                    _fmt(p.rho_hat), ""])
    _write(buf.getvalue(), cfg.out, out)
    if failed and cfg.strict:
        log.error("some items could not be predicted (strict mode)")
        return EXIT_STRICT
    return EXIT_OK


def _run_evaluation(cfg: RunConfig, graph, profile, predictor=predict_item):
    items = select_items(graph, cfg.first_from, cfg.first_to)
    return items, evaluate(
        graph, items, profile,
        rho_tol=cfg.rho_tol,
        n_band=(cfg.n_band_abs, cfg.n_band_rel),
        workers=cfg.workers,
        max_candidates=cfg.budget,
        predictor=predictor,
    )


def cmd_evaluate(cfg: RunConfig, out) -> int:
    graph = _open_snapshot(cfg)
    profile = _profile_for(cfg, graph)
    predictor = outcome_as_prediction if cfg.self_check else predict_item
    _, report = _run_evaluation(cfg, graph, profile, predictor)
    summary = "\n".join(report.summary_lines()) + "\n"
    if cfg.out_dir is not None:
        _write(report.to_csv(), cfg.out_dir / "eval.csv", out)
        _write(summary, cfg.out_dir / "summary.txt", out)
    else:
        out.write(report.to_csv())
    out.write(summary)
    return EXIT_OK


def _xy(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in rows:
        w.writerow([_fmt(x), _fmt(y)])
    return buf.getvalue()


def cmd_plotdata(cfg: RunConfig, out) -> int:
    if cfg.out_dir is None:
        raise ConfigError("--out-dir is required")
    graph = _open_snapshot(cfg)
    profile = _profile_for(cfg, graph)
    items, report = _run_evaluation(cfg, graph, profile)
    d = cfg.out_dir
    outcomes = [r.outcome for r in report.rows]
    _write(_xy((o.n_actual, o.mu_actual) for o in outcomes), d / "fig2_mu_vs_n.csv", out)
    _write(_xy((r.prediction.rho_hat, r.outcome.rho_actual) for r in report.rows),
           d / "fig4_rho_vs_rho_hat.csv", out)
    _write(_xy((r.prediction.n_hat, r.outcome.n_actual) for r in report.rows),
           d / "figS6_n_vs_n_hat.csv", out)
    decay_mean, decay_gap = [], []
    for v in items:
        for point in decay_profile(graph, v):
            decay_mean.append((point.offset / 86_400, point.running_mean))
            if point.gap is not None:
                decay_gap.append((point.offset / 3_600, point.gap / 3_600))
    _write(_xy(decay_mean), d / "figS1_running_mean_vs_days.csv", out)
    _write(_xy(decay_gap), d / "figS2_gap_hours_vs_hours.csv", out)
    sizes = []
    if len(items) >= 2:
        diag = diagnostic_correlations(graph, items, profile)
        deg = diag.columns.index("ego_degree_1L")
        second = diag.columns.index("second_neighbours")
        _write(_xy((r[deg], r[1]) for r in diag.rows), d / "figS4_ego_degree_vs_n.csv", out)
        _write(_xy((r[second], r[1]) for r in diag.rows), d / "figS5_second_neighbours_vs_n.csv", out)
        _write(diag.rows_csv(), d / "diagnostics.csv", out)
        _write(diag.correlations_csv(), d / "correlations.csv", out)
    for v in items:
        sizes.append(ego_stats(extract_ego_network(graph, v, profile.lookback_window)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item_id", "size", "mean_degree", "density"])
    for v, (size, mean_degree, density) in zip(items, sizes):
        w.writerow([graph.label(v), size, _fmt(mean_degree), _fmt(density)])
    _write(buf.getvalue(), d / "ego_stats.csv", out)
    out.write("\n".join(report.summary_lines()) + "\n")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, out) -> int:
    try:
        config = SynthConfig(
            users=args.users, items=args.items, seed=args.seed, start=args.start, span=args.span,
            gap_scale=args.gap_scale, item_lifetime=args.item_lifetime, rating_sd=args.rating_sd,
            half_stars=not args.whole_stars,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _write(format_movielens(generate(config)), args.out, out)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "motifs": cmd_motifs,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "plotdata": cmd_plotdata,
}


def main(argv: Sequence[str] | None = None, out=None, environ: dict[str, str] | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args, out)
        cfg = resolve_config(args, environ)
        return COMMANDS[args.command](cfg, out)
    except MotifBudgetExceeded as exc:
        print(f"ratingnet: {exc}; raise --budget to continue", file=sys.stderr)
        return EXIT_BUDGET
    except ParseError as exc:
        print(f"ratingnet: parse error: {exc}", file=sys.stderr)
        return EXIT_STRICT
    except (ConfigError, FormatError, SnapshotError, OSError) as exc:
        print(f"ratingnet: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
