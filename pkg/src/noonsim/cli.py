"""Command-line front end.

Usage::

    noonsim --scenario fig3 [--set m1=18 --set m2=12] [--engine closed]
    noonsim --network setup.cfg --engine all --format json --out run.json
    noonsim --replay run.json

Scenarios: ``fig2``, ``fig3``, ``fig5``, ``hom``, ``which_path``,
``equal_probe``, ``negative_result``.  ``--set`` keys are the scenario
parameters: ``n_alpha``, ``n_beta``, ``m1``, ``m2``, ``theta``, ``xi``,
``zeta``, ``tap5``, ``tap6``, ``m5p``, ``m6p``, ``grid``, ``nodes`` (not all
apply to every scenario).  Phases are in units of pi (``theta=0.5`` is
pi/2) and may be written as decimals or ``p/q``.

Network config grammar
----------------------
One ``key = value`` per line; ``#`` starts a comment; blank lines ignored.

======== ==================================================================
key      value
======== ==================================================================
plane    ``arms_3_4`` | ``arms_5_6`` | ``detectors_7_8`` |
         ``detectors_7_8_with_probes`` | ``single_splitter``
n_alpha  particles in source alpha (integer)
n_beta   particles in source beta (integer)
theta    side-interferometer phase, units of pi (default 0.5)
xi       middle phase, units of pi (default 0)
zeta     final phase, units of pi (default 0)
tap5     fraction of arm 5 diverted to probe 5p (default 0)
tap6     fraction of arm 6 diverted to probe 6p (default 0)
scan     detector id to scan (required)
condition comma-separated ``detector:count`` pairs (e.g. ``1:15, 2:15``)
======== ==================================================================

Exit status is 0 on success, 2 on usage errors, 1 on runtime errors and 3
when ``--engine all`` finds engines disagreeing by 1e-8 or more.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .engine import Engine, ImpossiblePostSelection, Precision, closed_form_applies
from .network import SourceSpec, TerminalPlane, build_network
from .scenarios import (
    ScenarioName,
    ScenarioResult,
    ScenarioSpec,
    applicable_engines,
    parse_value,
    run_network,
    run_scenario,
)

log = logging.getLogger(__name__)

DEVIATION_LIMIT = 1e-8
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_DEVIATION = 3

_ENGINE_CHOICES = {"oracle": Engine.ORACLE, "closed": Engine.CLOSED_FORM, "quadrature": Engine.QUADRATURE}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: ScenarioSpec | None = None
    raw_network: Path | None = None
    engine_choice: str = "oracle"
    precision: Precision = Precision.AUTO
    output_format: str = "csv"
    output_path: Path | None = None
    overrides: dict[str, str] = field(default_factory=dict)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noonsim",
        description="Exact count statistics for two-source Fock-state interferometers.",
        epilog="Scenarios: " + ", ".join(n.value for n in ScenarioName),
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--scenario", metavar="NAME", help="preset experiment to run")
    source.add_argument("--network", metavar="PATH", type=Path, help="key-value network description")
    source.add_argument("--replay", metavar="PATH", type=Path, help="rerun the configuration stored in a JSON result")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides")
    parser.add_argument("--engine", choices=[*_ENGINE_CHOICES, "all"], default=None)
    parser.add_argument("--precision", choices=[p.value for p in Precision], default=None)
    parser.add_argument("--format", choices=["csv", "json"], default="csv", dest="output_format")
    parser.add_argument("--out", type=Path, default=None, dest="output_path")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _split_override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip() or not value.strip():
        raise UsageError(f"malformed override {text!r}; expected KEY=VALUE")
    return key.strip(), value.strip()


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Validate command-line arguments; raises SystemExit(2) on usage errors."""
    parser = _build_parser()
    args = parser.parse_args(list(argv))
    try:
        return _to_config(args)
    except UsageError as exc:
        parser.error(str(exc))


def _to_config(args: argparse.Namespace) -> RunConfig:
    engine = args.engine
    precision = args.precision
    overrides = dict(_split_override(o) for o in args.overrides)
    scenario_name = args.scenario
    if args.replay is not None:
        stored = _read_provenance(args.replay)
        scenario_name = stored["scenario"]
        overrides = {**{k: str(v) for k, v in stored["parameters"].items()}, **overrides}
        engine = engine or stored["engine"]
        precision = precision or stored["precision"]
        if scenario_name == "network":
            raise UsageError("replaying raw network runs is not supported; rerun with --network")
    if scenario_name is None and args.network is None:
        valid = ", ".join(n.value for n in ScenarioName)
        raise UsageError(f"one of --scenario, --network or --replay is required; scenarios: {valid}")
    config = RunConfig(
        engine_choice=engine or "oracle",
        precision=Precision(precision or "auto"),
        output_format=args.output_format,
        output_path=args.output_path,
        overrides=overrides,
    )
    if scenario_name is not None:
        try:
            name = ScenarioName(scenario_name)
        except ValueError:
            valid = ", ".join(n.value for n in ScenarioName)
            raise UsageError(f"unknown scenario {scenario_name!r}; valid names: {valid}") from None
        spec = ScenarioSpec(name, overrides)
        try:
            spec.resolve()
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad override: {exc}") from None
        config.scenario = spec
    else:
        if overrides:
            raise UsageError("--set applies to scenarios only; edit the network file instead")
        config.raw_network = args.network
    return config


def _read_provenance(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return data["provenance"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot replay {path}: {exc}") from None


# --- network files -------------------------------------------------------------


def parse_network_config(text: str) -> dict[str, Any]:
    """Parse the key-value network grammar into typed values."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        raw[key.strip()] = value.strip()
    known = {"plane", "n_alpha", "n_beta", "theta", "xi", "zeta", "tap5", "tap6", "scan", "condition"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown keys {sorted(unknown)}")
    for required in ("plane", "n_alpha", "n_beta", "scan"):
        if required not in raw:
            raise ValueError(f"missing required key {required!r}")
    config: dict[str, Any] = {
        "plane": TerminalPlane(raw["plane"]),
        "scan": raw["scan"],
        "theta": Fraction(1, 2),
        "xi": Fraction(0),
        "zeta": Fraction(0),
        "tap5": Fraction(0),
        "tap6": Fraction(0),
        "condition": {},
    }
    for key in ("n_alpha", "n_beta", "theta", "xi", "zeta", "tap5", "tap6"):
        if key in raw:
            config[key] = parse_value(key, raw[key])
    for item in filter(None, (s.strip() for s in raw.get("condition", "").split(","))):
        det, sep, count = item.partition(":")
        if not sep:
            raise ValueError(f"condition entry {item!r} should be detector:count")
        config["condition"][det.strip()] = int(count)
    return config


def format_network_config(config: dict[str, Any]) -> str:
    """Inverse of :func:`parse_network_config`."""
    lines = [f"plane = {config['plane'].value}"]
    for key in ("n_alpha", "n_beta", "theta", "xi", "zeta", "tap5", "tap6"):
        if key in config:
            lines.append(f"{key} = {_format_param(config[key])}")
    lines.append(f"scan = {config['scan']}")
    if config.get("condition"):
        lines.append("condition = " + ", ".join(f"{d}:{c}" for d, c in config["condition"].items()))
    return "\n".join(lines) + "\n"


def _run_raw_network(path: Path, engines: list[Engine] | None, precision: Precision) -> ScenarioResult:
    cfg = parse_network_config(path.read_text(encoding="utf-8"))
    network = build_network(
        cfg["plane"],
        theta=float(cfg["theta"]) * math.pi,
        xi=float(cfg["xi"]) * math.pi,
        zeta=float(cfg["zeta"]) * math.pi,
        probe_tap_5=cfg["tap5"],
        probe_tap_6=cfg["tap6"],
    )
    source = SourceSpec(cfg["n_alpha"], cfg["n_beta"])
    if engines is None:
        engines = [Engine.ORACLE, Engine.QUADRATURE]
        if closed_form_applies(network, cfg["condition"], cfg["scan"]):
            engines.insert(1, Engine.CLOSED_FORM)
    params = {k: v for k, v in cfg.items() if k not in ("plane", "condition", "scan")}
    params["plane"] = cfg["plane"].value
    params["scan"] = cfg["scan"]
    params["condition"] = dict(cfg["condition"])
    return run_network(source, network, cfg["condition"], cfg["scan"], engines, precision, params)


# --- output ---------------------------------------------------------------------


def _num(x) -> str:
    return format(float(x), ".17g")


def _format_param(value: Any) -> Any:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        # decimals when terminating, so the file reads the way users type it
        d = value.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        if d == 1:
            text = repr(value.numerator / value.denominator)
            if Fraction(text) == value:
                return text
        return f"{value.numerator}/{value.denominator}"
    return value


def _rows(result: ScenarioResult) -> list[dict[str, Any]]:
    if result.kind == "curve":
        return [{"phi": phi, "q12_value": q} for phi, q in result.curve]
    rows = []
    for engine, dist in result.distributions.items():
        for value, p in zip(dist.scan_values, dist.probabilities):
            row = {"scan_variable": value, "probability": p, "engine": engine.value, "precision": dist.precision.value}
            if result.max_cross_engine_deviation is not None:
                row["max_cross_engine_deviation"] = result.max_cross_engine_deviation
            rows.append(row)
    return rows


def _csv_text(result: ScenarioResult) -> str:
    rows = _rows(result)
    if result.kind == "curve":
        header = ["phi", "q12_value"]
    else:
        header = ["scan_variable", "probability", "engine", "precision"]
        if result.max_cross_engine_deviation is not None:
            header.append("max_cross_engine_deviation")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(row[h]) if isinstance(row[h], float) else row[h] for h in header])
    return buf.getvalue()


def _json_value(x):
    if isinstance(x, float):
        return float(_num(x)) if math.isfinite(x) else None
    return x


def _json_text(result: ScenarioResult, config: RunConfig) -> str:
    rows = [{k: _json_value(v) for k, v in row.items()} for row in _rows(result)]
    payload = {
        "scenario": result.name,
        "kind": result.kind,
        "rows": rows,
        "metrics": {k: _json_value(v) for k, v in result.metrics.items()},
        "max_cross_engine_deviation": _json_value(result.max_cross_engine_deviation),
        "notes": list(result.notes),
        "provenance": {
            "scenario": result.name,
            "parameters": {k: _format_param(v) for k, v in result.params.items()},
            "engine": config.engine_choice,
            "precision": config.precision.value,
            "version": __version__,
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def emit(result: ScenarioResult, config: RunConfig) -> str:
    """Render ``result`` and write it to ``config.output_path`` (stdout if None)."""
    text = _csv_text(result) if config.output_format == "csv" else _json_text(result, config)
    if config.output_path is None:
        sys.stdout.write(text)
    else:
        with open(config.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def _engines_for(config: RunConfig) -> list[Engine] | None:
    if config.scenario is not None and ScenarioName(config.scenario.name) is ScenarioName.FIG2_PHASE_WEIGHT:
        return None
    if config.engine_choice != "all":
        return [_ENGINE_CHOICES[config.engine_choice]]
    if config.scenario is not None:
        name = ScenarioName(config.scenario.name)
        return applicable_engines(name, config.scenario.resolve()) or None
    # raw networks decide once the file is parsed
    return None


def run(config: RunConfig) -> tuple[ScenarioResult, int]:
    engines = _engines_for(config)
    with warnings.catch_warnings():
        # fallbacks are recorded in result.notes
        warnings.simplefilter("ignore")
        if config.scenario is not None:
            result = run_scenario(config.scenario, engines, config.precision)
        else:
            result = _run_raw_network(config.raw_network, engines, config.precision)
    status = 0
    if config.engine_choice == "all" and result.max_cross_engine_deviation is not None:
        if not result.max_cross_engine_deviation < DEVIATION_LIMIT:
            status = EXIT_DEVIATION
    return result, status


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    config = parse_args(argv)
    try:
        result, status = run(config)
        emit(result, config)
    except ImpossiblePostSelection as exc:
        log.error("impossible post-selection: %s", exc)
        return EXIT_RUNTIME
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    for note in result.notes:
        log.warning("%s", note)
    if status == EXIT_DEVIATION:
        log.error("engines disagree by %.3g (limit %g)", result.max_cross_engine_deviation, DEVIATION_LIMIT)
    return status


if __name__ == "__main__":
    sys.exit(main())
