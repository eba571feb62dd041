"""Named experiment presets.

Each scenario resolves a small parameter map (defaults overlaid with user
overrides) into a network, a post-selection condition and a scanned
detector, then runs one or more engines over it.

Phases are given in units of pi and taps as fractions of the arm diverted
into the probe detector; both are held as :class:`~fractions.Fraction` so
that quarter-turn phases and simple taps stay on the exact path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .engine import (
    Engine,
    OutcomeDistribution,
    Precision,
    conditional_distribution,
    count_local_maxima,
    fringe_visibility,
    noon_fidelity,
    q12,
)
from .network import (
    InterferometerNetwork,
    SourceSpec,
    TerminalPlane,
    build_canonical_network,
    build_extended_network,
    build_splitter_network,
)

__all__ = [
    "ScenarioName",
    "ScenarioSpec",
    "ScenarioResult",
    "DEFAULTS",
    "DEFAULT_PROBE_TAP",
    "run_scenario",
    "run_which_path",
    "run_negative_result",
    "run_network",
    "applicable_engines",
    "parse_value",
]

DEFAULT_PROBE_TAP = Fraction(1, 5)


class ScenarioName(enum.Enum):
    FIG2_PHASE_WEIGHT = "fig2"
    FIG3_NOON = "fig3"
    FIG5_FRINGES = "fig5"
    HOM_PAIR = "hom"
    WHICH_PATH_PROBE = "which_path"
    EQUAL_PROBE_REVIVAL = "equal_probe"
    NEGATIVE_RESULT = "negative_result"


_FIG5 = dict(n_alpha=40, n_beta=40, m1=20, m2=20, theta=Fraction(1, 2), xi=Fraction(0), zeta=Fraction(0))

DEFAULTS: dict[ScenarioName, dict[str, Any]] = {
    ScenarioName.FIG2_PHASE_WEIGHT: dict(m1=52, m2=52, grid=720),
    ScenarioName.FIG3_NOON: dict(n_alpha=30, n_beta=30, m1=15, m2=15, theta=Fraction(1, 2), xi=Fraction(0)),
    ScenarioName.FIG5_FRINGES: dict(_FIG5),
    ScenarioName.HOM_PAIR: dict(n_alpha=1, n_beta=1),
    ScenarioName.WHICH_PATH_PROBE: dict(_FIG5, tap5=DEFAULT_PROBE_TAP, tap6=DEFAULT_PROBE_TAP, m5p=1, m6p=0),
    ScenarioName.EQUAL_PROBE_REVIVAL: dict(_FIG5, tap5=DEFAULT_PROBE_TAP, tap6=DEFAULT_PROBE_TAP, m5p=1, m6p=1),
    ScenarioName.NEGATIVE_RESULT: dict(_FIG5, tap5=Fraction(1), tap6=Fraction(0), m5p=0, m6p=0),
}

_INT_KEYS = {"n_alpha", "n_beta", "m1", "m2", "m5p", "m6p", "grid", "nodes"}
_FRACTION_KEYS = {"theta", "xi", "zeta", "tap5", "tap6"}


def parse_value(key: str, value: Any) -> Any:
    """Coerce an override to the type its key expects."""
    if key in _INT_KEYS:
        if isinstance(value, str):
            value = value.strip()
        number = Fraction(value)
        if number.denominator != 1:
            raise ValueError(f"{key} must be an integer, got {value!r}")
        return int(number)
    if key in _FRACTION_KEYS:
        if isinstance(value, float):
            return Fraction(repr(value))
        return Fraction(value.strip() if isinstance(value, str) else value)
    raise KeyError(key)


@dataclass(frozen=True)
class ScenarioSpec:
    name: ScenarioName
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def resolve(self) -> dict[str, Any]:
        """Defaults overlaid with validated overrides."""
        name = ScenarioName(self.name)
        params = dict(DEFAULTS[name])
        allowed = set(params) | {"nodes"}
        for key, value in self.overrides.items():
            if key not in allowed:
                raise KeyError(f"scenario {name.value!r} has no parameter {key!r}; valid: {sorted(allowed)}")
            params[key] = parse_value(key, value)
        _check_bounds(params)
        return params


def _check_bounds(params: Mapping[str, Any]) -> None:
    for key in _INT_KEYS & set(params):
        if params[key] < 0:
            raise ValueError(f"{key} must be nonnegative, got {params[key]}")
    for key in ("tap5", "tap6"):
        if key in params and not 0 <= params[key] <= 1:
            raise ValueError(f"{key} must lie in [0, 1], got {params[key]}")
    if params.get("grid", 1) < 1:
        raise ValueError("grid needs at least one point")


@dataclass
class ScenarioResult:
    """Outcome of a run: a Q12 curve or one distribution per engine."""

    name: str
    params: dict[str, Any]
    kind: str
    distributions: dict[Engine, OutcomeDistribution] = field(default_factory=dict)
    curve: list[tuple[float, float]] | None = None
    metrics: dict[str, float | None] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    max_cross_engine_deviation: float | None = None

    @property
    def primary(self) -> OutcomeDistribution:
        return next(iter(self.distributions.values()))


def _radians(units_of_pi: Fraction) -> float:
    return float(units_of_pi) * math.pi


def applicable_engines(name: ScenarioName, params: Mapping[str, Any]) -> list[Engine]:
    """Engines that genuinely cover a scenario (closed forms need tap-free planes)."""
    name = ScenarioName(name)
    if name is ScenarioName.FIG2_PHASE_WEIGHT:
        return []
    engines = [Engine.ORACLE]
    if name in (ScenarioName.FIG3_NOON, ScenarioName.FIG5_FRINGES):
        engines.append(Engine.CLOSED_FORM)
    engines.append(Engine.QUADRATURE)
    return engines


def _setup(name: ScenarioName, p: Mapping[str, Any]):
    source = SourceSpec(p["n_alpha"], p["n_beta"])
    if name is ScenarioName.HOM_PAIR:
        return source, build_splitter_network(), {}, "left"
    theta, xi = _radians(p["theta"]), _radians(p["xi"])
    condition = {"1": p["m1"], "2": p["m2"]}
    if name is ScenarioName.FIG3_NOON:
        return source, build_canonical_network(theta, xi, TerminalPlane.ARMS_5_6), condition, "5"
    zeta = _radians(p["zeta"])
    if name is ScenarioName.FIG5_FRINGES:
        return source, build_extended_network(theta, xi, zeta), condition, "7"
    network = build_extended_network(theta, xi, zeta, p["tap5"], p["tap6"], probes=True)
    condition.update({"5p": p["m5p"], "6p": p["m6p"]})
    return source, network, condition, "7"


def _run_engines(
    source: SourceSpec,
    network: InterferometerNetwork,
    condition: Mapping[str, int],
    scan: str,
    engines: Iterable[Engine],
    precision: Precision,
    nodes: int | None,
) -> tuple[dict[Engine, OutcomeDistribution], list[str]]:
    out: dict[Engine, OutcomeDistribution] = {}
    notes: list[str] = []
    for engine in engines:
        dist = conditional_distribution(source, network, condition, scan, engine, precision, nodes)
        notes.extend(f"{engine.value}: {n}" for n in dist.notes)
        out[engine] = dist
    return out, notes


def _max_deviation(distributions: Mapping[Engine, OutcomeDistribution]) -> float:
    dists = list(distributions.values())
    worst = 0.0
    for i, a in enumerate(dists):
        for b in dists[i + 1 :]:
            worst = max(worst, max(abs(x - y) for x, y in zip(a.probabilities, b.probabilities)))
    return worst


def _condition_probability(dists: Mapping[Engine, OutcomeDistribution], source, network, condition, scan, precision):
    for dist in dists.values():
        if dist.condition_probability is not None:
            return dist.condition_probability
    return conditional_distribution(source, network, condition, scan, Engine.ORACLE, precision).condition_probability


def _side_probability(source: SourceSpec, p: Mapping[str, Any], precision: Precision):
    # P(m1, m2) from the tap-free NOON plane
    network = build_canonical_network(_radians(p["theta"]), _radians(p["xi"]), TerminalPlane.ARMS_5_6)
    dist = conditional_distribution(source, network, {"1": p["m1"], "2": p["m2"]}, "5", Engine.ORACLE, precision)
    return dist.condition_probability


def _fig2(p: Mapping[str, Any]) -> ScenarioResult:
    m1, m2, grid = p["m1"], p["m2"], p["grid"]
    phis = [-math.pi + 2 * math.pi * k / grid for k in range(1, grid + 1)]
    curve = [(phi, q12(phi, m1, m2)) for phi in phis]
    negative = [c for c in curve if c[0] < 0]
    positive = [c for c in curve if c[0] > 0]
    metrics: dict[str, float | None] = {}
    for label, half in (("negative", negative), ("positive", positive)):
        if half:
            phi, value = max(half, key=lambda c: abs(c[1]))
            metrics[f"peak_phi_{label}"] = phi
            metrics[f"peak_value_{label}"] = value
    return ScenarioResult(name=ScenarioName.FIG2_PHASE_WEIGHT.value, params=dict(p), kind="curve", curve=curve, metrics=metrics)


def run_scenario(
    spec: ScenarioSpec,
    engines: Iterable[Engine] | None = None,
    precision: Precision = Precision.AUTO,
) -> ScenarioResult:
    """Run a preset.  ``engines`` defaults to the oracle alone."""
    name = ScenarioName(spec.name)
    p = spec.resolve()
    if name is ScenarioName.FIG2_PHASE_WEIGHT:
        result = _fig2(p)
        if engines:
            result.notes.append("fig2 is a phase-profile curve; engine choice does not apply")
        return result
    engines = list(engines) if engines else [Engine.ORACLE]
    source, network, condition, scan = _setup(name, p)
    dists, notes = _run_engines(source, network, condition, scan, engines, precision, p.get("nodes"))
    result = ScenarioResult(name=name.value, params=dict(p), kind="distribution", distributions=dists, notes=notes)
    if len(dists) > 1:
        result.max_cross_engine_deviation = _max_deviation(dists)
    primary = result.primary
    cond = _condition_probability(dists, source, network, condition, scan, precision)
    result.metrics = {
        "noon_fidelity": noon_fidelity(primary),
        "fringe_visibility": fringe_visibility(primary),
        "local_maxima": count_local_maxima(primary),
        "condition_probability": float(cond),
    }
    if name is ScenarioName.HOM_PAIR:
        coincidence = [pr for counts, pr in primary.support if counts["left"] == counts["right"] == 1]
        result.metrics["coincidence_probability"] = float(coincidence[0]) if coincidence else None
    if "m5p" in p:
        side = _side_probability(source, p, precision)
        result.metrics["probe_probability"] = float(cond / side) if side else None
    return result


def run_which_path(
    m5p: int,
    m6p: int,
    taps: tuple = (DEFAULT_PROBE_TAP, DEFAULT_PROBE_TAP),
    engines: Iterable[Engine] | None = None,
    precision: Precision = Precision.AUTO,
    **overrides,
) -> ScenarioResult:
    """Scan detector 7 after seeing ``m5p``/``m6p`` particles in the arm probes."""
    name = ScenarioName.EQUAL_PROBE_REVIVAL if m5p == m6p and m5p > 0 else ScenarioName.WHICH_PATH_PROBE
    overrides = dict(overrides, m5p=m5p, m6p=m6p, tap5=taps[0], tap6=taps[1])
    return run_scenario(ScenarioSpec(name, overrides), engines, precision)


def run_negative_result(
    engines: Iterable[Engine] | None = None,
    precision: Precision = Precision.AUTO,
    **overrides,
) -> ScenarioResult:
    """Arm 5 fully diverted into its probe, keeping only runs where it stays dark."""
    return run_scenario(ScenarioSpec(ScenarioName.NEGATIVE_RESULT, overrides), engines, precision)


def run_network(
    source: SourceSpec,
    network: InterferometerNetwork,
    condition: Mapping[str, int],
    scan: str,
    engines: Iterable[Engine] | None = None,
    precision: Precision = Precision.AUTO,
    params: Mapping[str, Any] | None = None,
) -> ScenarioResult:
    """Run an arbitrary network description through the same pipeline."""
    engines = list(engines) if engines else [Engine.ORACLE]
    dists, notes = _run_engines(source, network, condition, scan, engines, precision, None)
    result = ScenarioResult(name="network", params=dict(params or {}), kind="distribution", distributions=dists, notes=notes)
    if len(dists) > 1:
        result.max_cross_engine_deviation = _max_deviation(dists)
    cond = _condition_probability(dists, source, network, condition, scan, precision)
    result.metrics = {
        "noon_fidelity": noon_fidelity(result.primary),
        "fringe_visibility": fringe_visibility(result.primary),
        "local_maxima": count_local_maxima(result.primary),
        "condition_probability": float(cond),
    }
    return result
