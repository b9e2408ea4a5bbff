"""Command-line front end: scenario presets, flags, and result files.

Resolution order for every parameter: scenario preset defaults, then values
from an optional JSON config file, then command-line flags. The fully
resolved configuration is echoed next to the results so any run can be
reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import _fmt, aggregate, export_csv, split_groups
from .distributions import AgingCurve, CountDistribution, CountKind
from .engine import SimulationConfig, run_experiment
from .errors import ConfigurationError, DataError

_BASELINE: dict = {
    "runs": 50,
    "agents": 200,
    "periods": 20,
    "coauthors": 3,
    "papers_dist": "poisson",
    "papers_mean": 10.0,
    "papers_dispersion": None,
    "citations_dist": "poisson",
    "citations_mean": 5.0,
    "citations_peak": 3.0,
    "citations_speed": 2.0,
    "citations_dispersion": None,
    "alpha_share": 0.33,
    "boost_size": 0.0,
    "diligence_corr": 0.0,
    "diligence_share": 1.0,
    "strategic": False,
    "self_citations": False,
    "update_alpha": False,
}

# Scenario presets: the baseline population plus exactly one mechanism each.
PRESETS: dict[str, dict] = {
    "baseline": {},
    "boost": {"boost_size": 0.5},
    "diligence": {"diligence_corr": 0.8, "diligence_share": 0.6},
    "strategic": {"strategic": True},
}


def preset_values(name: str) -> dict:
    """Full parameter dict for a scenario preset."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}")
    return {**_BASELINE, **PRESETS[name]}


def _opt_float(value) -> float | None:
    return None if value is None else float(value)


def config_from_values(values: dict, master_seed: int) -> SimulationConfig:
    """Build an engine config from a resolved flat parameter dict."""
    try:
        paper_dist = CountDistribution(
            CountKind(values["papers_dist"]),
            float(values["papers_mean"]),
            _opt_float(values["papers_dispersion"]),
        )
        aging = AgingCurve(
            peak_period=float(values["citations_peak"]),
            max_mean=float(values["citations_mean"]),
            speed=float(values["citations_speed"]),
        )
        return SimulationConfig(
            runs=int(values["runs"]),
            n_agents=int(values["agents"]),
            periods=int(values["periods"]),
            coauthors_mean=int(values["coauthors"]),
            paper_dist=paper_dist,
            citation_kind=CountKind(values["citations_dist"]),
            aging=aging,
            alpha_share=float(values["alpha_share"]),
            master_seed=int(master_seed),
            citation_dispersion=_opt_float(values["citations_dispersion"]),
            collab_share=float(values["diligence_share"]),
            diligence_correlation=float(values["diligence_corr"]),
            strategic=bool(values["strategic"]),
            self_citation=bool(values["self_citations"]),
            boost_size=float(values["boost_size"]),
            dynamic_alpha=bool(values["update_alpha"]),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def scenario_config(name: str, master_seed: int, **overrides) -> SimulationConfig:
    """Engine config for a named scenario, with optional parameter overrides."""
    values = preset_values(name)
    unknown = set(overrides) - set(values)
    if unknown:
        raise ConfigurationError(f"unknown parameters: {sorted(unknown)}")
    values.update(overrides)
    return config_from_values(values, master_seed)


@dataclass(frozen=True)
class CliOptions:
    """Resolved non-engine options of one invocation."""

    scenario: str
    values: dict
    seed: int
    seed_generated: bool
    out: Path
    per_run: bool


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halpha-sim",
        description=(
            "Simulate collaborating, publishing, cited agents and export the "
            "mean h-alpha trajectories of the low and high initial-h groups."
        ),
    )
    add = parser.add_argument
    add("--scenario", choices=sorted(PRESETS), default=None,
        help="scenario preset supplying defaults (default: baseline)")
    add("--config", type=Path, default=None, metavar="FILE",
        help="JSON file with parameter overrides (flags win over the file)")
    add("--runs", type=int, help="number of independent runs to average over")
    add("--agents", type=int, help="number of simulated agents")
    add("--periods", type=int, help="number of collaboration periods")
    add("--coauthors", type=int, help="team size (last team per period may be smaller)")
    add("--papers-dist", choices=[k.value for k in CountKind],
        help="distribution of initial paper counts")
    add("--papers-mean", type=float, help="mean of the initial paper count distribution")
    add("--papers-dispersion", type=float,
        help="dispersion of the initial paper count distribution (nbinomial only)")
    add("--citations-dist", choices=[k.value for k in CountKind],
        help="distribution of per-period citation counts")
    add("--citations-mean", type=float, help="maximum expected citations per period")
    add("--citations-peak", type=float,
        help="paper age (in periods) at which expected citations peak")
    add("--citations-speed", type=float,
        help="steepness of the citation aging curve (must exceed 1)")
    add("--citations-dispersion", type=float,
        help="dispersion of the citation count distribution (nbinomial only)")
    add("--alpha-share", type=float,
        help="share of initial papers credited to their own agent")
    add("--boost-size", type=float,
        help="one-time extra citations = round(max author h at publication * size); 0 disables")
    add("--diligence-corr", type=float,
        help="correlation between publishing propensity and initial h")
    add("--diligence-share", type=float, help="share of agents who publish each period")
    add("--strategic", action="store_true", default=None,
        help="seed every team with a single top-h agent")
    add("--self-citations", action="store_true", default=None,
        help="one extra citation when an author's h exceeds a paper's citations by 1 or 2")
    add("--update-alpha", action="store_true", default=None,
        help="re-credit every paper to its currently highest-h author each period")
    add("--seed", type=int, help="master seed (drawn from system entropy if omitted)")
    add("--out", type=Path, help="path of the aggregated CSV (required)")
    add("--per-run", action="store_true", default=None,
        help="also write per-run trajectories next to the aggregated CSV")
    return parser


def _load_config_file(parser: argparse.ArgumentParser, path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        parser.error(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        parser.error(f"config file {path} must hold a JSON object")
    unknown = set(raw) - set(_BASELINE) - {"scenario", "seed"}
    if unknown:
        parser.error(f"unknown config file keys: {sorted(unknown)}")
    return raw


def parse_config(argv=None) -> tuple[SimulationConfig, CliOptions]:
    """Resolve flags, config file, and preset into an engine config.

    Exits with status 2 (via argparse) on unknown flags, out-of-range values,
    or a missing output path.
    """
    parser = build_parser()
    ns = parser.parse_args(argv)

    file_values = _load_config_file(parser, ns.config) if ns.config is not None else {}

    scenario = ns.scenario or file_values.get("scenario") or "baseline"
    if scenario not in PRESETS:
        parser.error(f"unknown scenario {scenario!r}; choose from {sorted(PRESETS)}")

    values = preset_values(scenario)
    values.update({k: v for k, v in file_values.items() if k not in ("scenario", "seed")})
    values.update(
        {k: getattr(ns, k) for k in _BASELINE if getattr(ns, k, None) is not None}
    )

    seed = ns.seed if ns.seed is not None else file_values.get("seed")
    seed_generated = seed is None
    if seed_generated:
        seed = secrets.randbits(63)

    if ns.out is None:
        parser.error("--out is required")

    try:
        config = config_from_values(values, int(seed))
    except ConfigurationError as exc:
        parser.error(str(exc))

    options = CliOptions(
        scenario=scenario,
        values=values,
        seed=int(seed),
        seed_generated=seed_generated,
        out=ns.out,
        per_run=bool(ns.per_run),
    )
    return config, options


def per_run_path(out: Path) -> Path:
    """Path of the per-run CSV written next to the aggregated one."""
    return out.with_name(out.stem + "_runs" + out.suffix)


def config_echo_path(out: Path) -> Path:
    """Path of the resolved-config echo written next to the results."""
    return Path(str(out) + ".config")


def _render_echo(options: CliOptions) -> str:
    lines = [f"scenario = {json.dumps(options.scenario)}"]
    lines += [f"{key} = {json.dumps(options.values[key])}" for key in _BASELINE]
    lines.append(f"seed = {options.seed}")
    lines.append(f"out = {json.dumps(str(options.out))}")
    lines.append(f"per_run = {json.dumps(options.per_run)}")
    return "\n".join(lines) + "\n"


def run_and_report(config: SimulationConfig, options: CliOptions) -> int:
    """Run the experiment, write CSV and config echo, print the summary."""
    try:
        runs = run_experiment(config)
        splits = [split_groups(run.initial_h) for run in runs]
        result = aggregate(runs, splits)
    except (ConfigurationError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        options.out.write_bytes(export_csv(result))
        if options.per_run:
            per_run_path(options.out).write_bytes(export_csv(result, per_run=True))
        config_echo_path(options.out).write_text(_render_echo(options), encoding="utf-8")
    except OSError as exc:
        target = getattr(exc, "filename", None) or options.out
        print(f"error: cannot write {target}: {exc}", file=sys.stderr)
        return 1

    if options.seed_generated:
        print(f"master seed drawn from system entropy: {options.seed} "
              f"(pass --seed {options.seed} to reproduce)")
    for t, period in enumerate(result.periods):
        print(f"period={period} group=low mean_h_alpha={_fmt(result.mean_h_alpha_low[t])}")
        print(f"period={period} group=high mean_h_alpha={_fmt(result.mean_h_alpha_high[t])}")
        print(f"period={period} group=diff mean_h_alpha={_fmt(result.difference[t])}")
    print(f"wrote {options.out}")
    return 0


def main(argv=None) -> int:
    config, options = parse_config(argv)
    return run_and_report(config, options)


if __name__ == "__main__":
    sys.exit(main())
