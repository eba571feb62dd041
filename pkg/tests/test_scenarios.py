import math
from fractions import Fraction

import pytest

from noonsim.engine import Engine, ImpossiblePostSelection, Precision, total_variation
from noonsim.scenarios import (
    DEFAULTS,
    ScenarioName,
    ScenarioSpec,
    applicable_engines,
    parse_value,
    run_negative_result,
    run_scenario,
    run_which_path,
)


def run(name, **overrides):
    return run_scenario(ScenarioSpec(ScenarioName(name), overrides))


# --- resolution ---


def test_defaults_mirror_captions():
    assert DEFAULTS[ScenarioName.FIG2_PHASE_WEIGHT]["m1"] == 52
    fig3 = DEFAULTS[ScenarioName.FIG3_NOON]
    assert (fig3["n_alpha"], fig3["n_beta"], fig3["m1"], fig3["m2"], fig3["xi"]) == (30, 30, 15, 15, 0)
    fig5 = DEFAULTS[ScenarioName.FIG5_FRINGES]
    assert (fig5["n_alpha"], fig5["n_beta"], fig5["m1"], fig5["m2"], fig5["zeta"]) == (40, 40, 20, 20, 0)
    assert DEFAULTS[ScenarioName.WHICH_PATH_PROBE]["tap5"] == Fraction(1, 5)


def test_resolve_overrides():
    params = ScenarioSpec(ScenarioName.FIG3_NOON, {"m1": "18", "m2": 12}).resolve()
    assert params["m1"] == 18 and params["m2"] == 12 and params["n_alpha"] == 30


def test_resolve_rejects_unknown_and_out_of_bounds():
    with pytest.raises(KeyError):
        ScenarioSpec(ScenarioName.FIG3_NOON, {"zeta": "0"}).resolve()
    with pytest.raises(ValueError):
        ScenarioSpec(ScenarioName.FIG3_NOON, {"m1": "-1"}).resolve()
    with pytest.raises(ValueError):
        ScenarioSpec(ScenarioName.WHICH_PATH_PROBE, {"tap5": "1.5"}).resolve()
    with pytest.raises(ValueError):
        ScenarioSpec(ScenarioName.FIG3_NOON, {"m1": "1.5"}).resolve()


def test_parse_value_phases_in_units_of_pi():
    assert parse_value("theta", "0.5") == Fraction(1, 2)
    assert parse_value("xi", "1/3") == Fraction(1, 3)
    assert parse_value("tap5", 0.2) == Fraction(1, 5)
    assert parse_value("m1", "7") == 7


def test_applicable_engines():
    assert applicable_engines(ScenarioName.FIG2_PHASE_WEIGHT, {}) == []
    assert Engine.CLOSED_FORM in applicable_engines(ScenarioName.FIG5_FRINGES, {})
    assert Engine.CLOSED_FORM not in applicable_engines(ScenarioName.WHICH_PATH_PROBE, {})


# --- figure presets ---


def test_fig2_curve():
    result = run("fig2")
    assert result.kind == "curve"
    phis = [phi for phi, _ in result.curve]
    assert len(phis) == 720
    assert phis[-1] == pytest.approx(math.pi)
    assert phis[0] > -math.pi
    assert result.metrics["peak_phi_positive"] == pytest.approx(math.pi / 2)
    assert result.metrics["peak_phi_negative"] == pytest.approx(-math.pi / 2)
    assert result.metrics["peak_value_positive"] > 0 and result.metrics["peak_value_negative"] > 0


def test_fig3_variants_bimodal():
    for overrides in ({}, {"m1": 18, "m2": 12}):
        result = run("fig3", **overrides)
        probs = result.primary.probabilities
        assert max(probs) in (probs[0], probs[-1])
        assert probs[0] > max(probs[1:-1]) and probs[-1] > max(probs[1:-1])
        assert result.metrics["noon_fidelity"] > 0.5


def test_fig3_unequal_sources_stay_bimodal():
    result = run("fig3", n_alpha=26, n_beta=34)
    probs = result.primary.probabilities
    assert probs[0] > max(probs[1:-1]) and probs[-1] > max(probs[1:-1])


def test_fig5_fringes():
    result = run("fig5")
    assert result.metrics["fringe_visibility"] > 0.9
    assert result.metrics["local_maxima"] > 10


def test_hom_pair():
    result = run("hom")
    support = {(c["left"], c["right"]): p for c, p in result.primary.support}
    assert support == {(0, 2): Fraction(1, 2), (1, 1): 0, (2, 0): Fraction(1, 2)}
    assert result.metrics["coincidence_probability"] == 0.0


# --- probe experiments ---


@pytest.mark.parametrize("tap", [Fraction(1, 20), Fraction(1, 5), Fraction(1, 2)])
def test_which_path_destroys_fringes(tap):
    for m5p in (1, 4):
        result = run_which_path(m5p, 0, taps=(tap, tap))
        assert result.metrics["fringe_visibility"] < 0.1
        assert result.metrics["local_maxima"] == 1


@pytest.mark.parametrize("tap", [Fraction(1, 20), Fraction(1, 5), Fraction(1, 2)])
def test_equal_probe_counts_restore_fringes(tap):
    for k in (1, 2):
        result = run_which_path(k, k, taps=(tap, tap))
        assert result.name == "equal_probe"
        assert result.metrics["fringe_visibility"] > 0.9


def test_negative_result():
    result = run_negative_result()
    assert result.metrics["fringe_visibility"] < 0.1
    assert result.metrics["local_maxima"] == 1
    # leaving arm 5 dark happens in roughly half of the (m1, m2) runs
    assert 0.3 < result.metrics["probe_probability"] < 0.7


def test_negative_result_control_matches_fig5():
    control = run_negative_result(tap5=0)
    baseline = run("fig5")
    assert control.metrics["fringe_visibility"] > 0.9
    assert total_variation(control.primary, baseline.primary) < 1e-15


def test_small_tap_continuity():
    tap = Fraction(1, 1000)
    probe = run_which_path(0, 0, taps=(tap, tap))
    baseline = run("fig5")
    assert total_variation(probe.primary, baseline.primary) < 1e-2


def test_probe_counts_beyond_budget():
    with pytest.raises(ImpossiblePostSelection):
        run_which_path(30, 30)


# --- engines and determinism ---


def test_all_engines_agree_on_fig5():
    result = run_scenario(ScenarioSpec(ScenarioName.FIG5_FRINGES), applicable_engines(ScenarioName.FIG5_FRINGES, {}))
    assert set(result.distributions) == {Engine.ORACLE, Engine.CLOSED_FORM, Engine.QUADRATURE}
    assert result.max_cross_engine_deviation < 1e-12


def test_probe_scenario_oracle_vs_quadrature():
    result = run_which_path(1, 0, engines=[Engine.ORACLE, Engine.QUADRATURE])
    assert result.max_cross_engine_deviation < 1e-12


def test_deterministic_exact():
    a = run("fig3")
    b = run("fig3")
    assert a.primary.support == b.primary.support
    assert a.metrics == b.metrics


def test_deterministic_float():
    spec = ScenarioSpec(ScenarioName.WHICH_PATH_PROBE, {"m5p": 2})
    a = run_scenario(spec, [Engine.QUADRATURE])
    b = run_scenario(spec, [Engine.QUADRATURE])
    assert a.primary.probabilities == b.primary.probabilities


def test_float_precision_request():
    result = run_scenario(ScenarioSpec(ScenarioName.FIG5_FRINGES), precision=Precision.FLOAT)
    assert result.primary.precision is Precision.FLOAT
    exact = run("fig5")
    # the float convolution cancels terms ~1e7 larger than the result at N = 80
    assert result.primary.probabilities == pytest.approx(exact.primary.probabilities, abs=1e-8)
