"""Command-line front end: ``rpflab <subcommand> [flags]``.

Every experiment flag mirrors a field of
:class:`rpflab.experiments.ExperimentConfig`. Values are resolved as
subcommand defaults, then ``--config`` file, then explicit flags. Each run
writes its CSVs and a ``manifest.txt`` holding the fully resolved
configuration; passing that manifest back with ``--config`` reproduces the
CSVs byte for byte.

Exit codes: 0 success, 1 configuration error, 2 filter degeneracy,
3 failed oracle check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from pathlib import Path

from . import __version__
from .checks import run_oracle_checks
from .errors import ConfigurationError, DomainError, FilterDegeneracyError
from .experiments import (
    ExperimentConfig,
    Variant,
    exp_ess_spacing,
    exp_lnas,
    exp_logistic,
    exp_shifted_prior,
    exp_stationary,
    write_result,
)

OUTPUT_ENV = "RPFLAB_OUTPUT"
EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_CHECK = 0, 1, 2, 3

# field -> (parser kind, help)
FIELDS = {
    "model": ("str", "model for the filter subcommand: stationary, logistic or lnas"),
    "n_particles": ("int", "number of particles N"),
    "policy": ("str", "resampling policy: always, never, ess or periodic"),
    "ess_crit": ("float", "ESS/N threshold for policy ess, strictly inside (0, 1)"),
    "period": ("int", "resampling period for policy periodic"),
    "schedule": ("str", "bandwidth schedule: rule-of-thumb, silverman, harmonic, exp-decay, west, none"),
    "alpha_h": ("float?", "base bandwidth factor (default: rule of thumb for N and d)"),
    "horizon": ("int", "number of observations"),
    "replicates": ("int", "number of replicates; replicate r uses seed + r"),
    "seed": ("int", "master seed"),
    "oracle_mode": ("bool", "filter noiseless observations"),
    "normalizer": ("float?", "RMSE divisor (default: prior sd of the estimated components)"),
    "workers": ("int", "processes used for replicates (results do not depend on it)"),
    "dim": ("int", "state dimension of the stationary model"),
    "ratio": ("float", "observation noise variance over prior variance"),
    "prior_var": ("float", "prior variance per coordinate"),
    "prior_shift": ("float", "prior mean offset from the truth, in prior sds"),
    "x0": ("float", "true state of the stationary model"),
    "quench_step": ("int?", "step from which the noise ratio becomes quench-ratio"),
    "quench_ratio": ("float?", "noise ratio after the quench"),
    "a_star": ("float", "true logistic growth rate"),
    "obs_noise": ("float", "multiplicative observation noise level R"),
    "logistic_prior_mean": ("float", "prior mean of the growth rate"),
    "logistic_prior_var": ("float", "prior variance of the growth rate"),
    "weather": ("str", "'synthetic' or a day,temp_c,rad_mj CSV file"),
    "weather_seed": ("int", "seed of the synthetic weather series"),
    "theta": ("floats", "true (RUE, gamma, mu_a), comma separated"),
    "snapshot": ("int", "step reported in table.csv"),
    "benchmark_particles": ("int?", "also run a benchmark filter with this many particles"),
}
FLAG_ALIASES = {"horizon": ["--steps"], "oracle_mode": ["--oracle"]}

SUBCOMMANDS = {
    "stationary": ("RPF, SIR and SIS on the stationary model with Kalman overlays", {}),
    "shifted-prior": (
        "RPF versus SIR with the prior far from the data",
        {"prior_shift": 3.0, "policy": "ess", "horizon": 500, "replicates": 10},
    ),
    "ess-spacing": (
        "resampling times under an ESS threshold",
        {"policy": "ess", "oracle_mode": True, "replicates": 10},
    ),
    "logistic": ("growth-rate estimation in the logistic map", {"model": "logistic", "replicates": 10}),
    "lnas": ("parameter estimation in the LNAS crop model", {"model": "lnas", "horizon": 160, "replicates": 10}),
    "filter": ("a single filter configuration on simulated data", {}),
}
FIXED_MODEL = {"stationary": "stationary", "shifted-prior": "stationary", "ess-spacing": "stationary"}
FIXED_MODEL.update({"logistic": "logistic", "lnas": "lnas"})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _parse_value(kind: str, text: str, key: str):
    text = text.strip()
    optional = kind.endswith("?")
    if optional and text.lower() in ("", "none"):
        return None
    base = kind.rstrip("?")
    try:
        if base == "int":
            return int(text)
        if base == "float":
            return float(text)
        if base == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if base == "floats":
            return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {exc}") from None
    return text


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key in ("command", "version"):
            values[key] = value
            continue
        if key not in FIELDS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(FIELDS[key][0], value, f"{path}:{lineno}: {key}")
    return values


def format_manifest(command: str, config: ExperimentConfig) -> str:
    lines = ["# rpflab run manifest; rerun with: rpflab %s --config manifest.txt" % command]
    lines.append(f"command = {command}")
    lines.append(f"version = {__version__}")
    for f in dataclasses.fields(config):
        lines.append(f"{f.name} = {_format_value(getattr(config, f.name))}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rpflab", description="Regularized particle filter experiments.")
    parser.add_argument("--version", action="version", version=f"rpflab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True
    for name, (help_text, _) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/{name} or ./rpflab-output/{name})")
        for key, (kind, fhelp) in FIELDS.items():
            flags = ["--" + key.replace("_", "-")] + FLAG_ALIASES.get(key, [])
            if kind == "bool":
                p.add_argument(*flags, dest=key, action=argparse.BooleanOptionalAction, default=None, help=fhelp)
            else:
                p.add_argument(*flags, dest=key, default=None, metavar=kind.rstrip("?").upper(), help=fhelp)
    oc = sub.add_parser("oracle-check", help="run the exact linear-Gaussian invariant checks")
    oc.add_argument("--seed", type=int, default=0, help="seed of the random test instances")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    values = dict(SUBCOMMANDS[command][1])
    if args.config:
        from_file = read_config_file(args.config)
        file_command = from_file.pop("command", None)
        from_file.pop("version", None)
        if file_command is not None and file_command != command:
            raise ConfigurationError(f"{args.config} was written for '{file_command}', not '{command}'")
        values.update(from_file)
    for key, (kind, _) in FIELDS.items():
        given = getattr(args, key, None)
        if given is None:
            continue
        values[key] = given if isinstance(given, bool) else _parse_value(kind, given, "--" + key.replace("_", "-"))
    fixed = FIXED_MODEL.get(command)
    if fixed is not None:
        if values.get("model", fixed) != fixed:
            raise ConfigurationError(f"'{command}' always uses model {fixed}, got {values['model']!r}")
        values["model"] = fixed
    return ExperimentConfig(**values)


def output_dir(command: str, args) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUTPUT_ENV)
    return Path(root or "rpflab-output") / command


def _run(command: str, config: ExperimentConfig, out: Path) -> list[str]:
    """Run one experiment, write its artifacts and return summary lines."""
    lines = []
    if command == "stationary":
        result = exp_stationary(config)
        write_result(result, out)
        for label, s in result.summaries.items():
            lines.append(f"{label}: final RMSE {s.rmse_mean[-1]:.4g}, plateau {s.plateau:.4g}")
        lines.append(f"kalman: final RMSE {result.overlays['kalman_rmse'][-1]:.4g}")
    elif command == "shifted-prior":
        result = exp_shifted_prior(config)
        write_result(result, out)
        with open(out / "collapse.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variant", "seed", "sd_ratio_final", "collapsed"])
            for label in result.traces:
                rep = result.report[label]
                for seed, ratio, flag in zip(config.replicate_seeds(), rep["sd_ratio_final"], rep["collapsed"]):
                    w.writerow([label, seed, "%.17g" % ratio, int(flag)])
        for label in result.traces:
            rep = result.report[label]
            lines.append(f"{label}: {int(rep['collapsed'].sum())}/{config.replicates} collapsed")
    elif command == "ess-spacing":
        report = exp_ess_spacing(config)
        write_result(report.result, out)
        with open(out / "spacing.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed", "event", "time", "ratio"])
            for seed, times, ratios in zip(config.replicate_seeds(), report.times, report.ratios):
                for k, t in enumerate(times, start=1):
                    ratio = "%.17g" % ratios[k - 3] if 3 <= k < len(ratios) + 3 else ""
                    w.writerow([seed, k, int(t), ratio])
        lines.append(f"target ratio 1 + beta = {report.target:.4f}")
        for seed, ratios in zip(config.replicate_seeds(), report.ratios):
            lines.append(f"seed {seed}: ratios " + (" ".join(f"{r:.3f}" for r in ratios) or "insufficient events"))
    elif command == "logistic":
        result = exp_logistic(config)
        write_result(result, out)
        for label, s in result.summaries.items():
            lines.append(f"{label}: final RMSE {s.rmse_mean[-1]:.4g}, plateau {s.plateau:.4g}")
    elif command == "lnas":
        result = exp_lnas(config)
        write_result(result, out)
        for name, stat, value, std in result.table:
            lines.append(f"{name:6s} {stat:18s} {value:.4g} ({std:.2g})")
    elif command == "filter":
        variant = Variant("filter", config.policy_object(), config.schedule_object())
        if config.model == "stationary":
            result = exp_stationary(config, [variant])
        elif config.model == "logistic":
            result = exp_logistic(config, variants=[variant], include_oracle=False)
        else:
            result = exp_lnas(config, variants=[variant])
        write_result(result, out)
        s = result.summaries["filter"]
        lines.append(f"final RMSE {s.rmse_mean[-1]:.4g}, mean ESS/N {s.ess_mean.mean():.3f}")
    return lines


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "oracle-check":
            results = run_oracle_checks(args.seed)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
            return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
        config = resolve_config(args.command, args)
        out = output_dir(args.command, args)
        out.mkdir(parents=True, exist_ok=True)
        lines = _run(args.command, config, out)
        (out / "manifest.txt").write_text(format_manifest(args.command, config))
    except (ConfigurationError, DomainError) as exc:
        print(f"rpflab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FilterDegeneracyError as exc:
        print(f"rpflab: filter degenerated: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"rpflab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in lines:
        print(line)
    print(f"wrote results to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
