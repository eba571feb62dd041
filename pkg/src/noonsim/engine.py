"""Detection amplitudes and post-selected count distributions.

Three independent routes compute the same numbers:

``ORACLE``
    Expand ``prod_d (v_da x + v_db y)**m_d`` and read off the coefficient of
    ``x**N_alpha y**N_beta``.  Works for any network, exactly when the
    network coefficients are exact.
``CLOSED_FORM``
    The explicit alternating sums for the NOON plane (detectors 1, 2, 5, 6)
    and for the fringe plane (detectors 1, 2, 7, 8 at zero phases).  These
    give probabilities up to a constant that depends only on the conditioned
    side counts, so they are only meaningful after normalization.
``QUADRATURE``
    Expand the double Fock state in relative-phase states and integrate the
    resulting trigonometric polynomial with the trapezoidal rule, which is
    exact once the node count exceeds the total particle number.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .network import InterferometerNetwork, SourceSpec, TerminalPlane, quarter_turns
from .numerics import (
    GaussianRational,
    LogComplex,
    choose_exact,
    log_factorial,
    relative_log_factorial_terms,
    sum_log_terms,
)

__all__ = [
    "Engine",
    "Precision",
    "NormalizationDomain",
    "ImpossiblePostSelection",
    "EngineFallbackWarning",
    "AliasingWarning",
    "AmplitudeValue",
    "OutcomeDistribution",
    "PhaseWeight",
    "amplitude_oracle",
    "closed_form_applies",
    "phase_quadrature_amplitude",
    "prob_noon_closed",
    "prob_fringe_closed",
    "q12",
    "q12_argmax",
    "q12_peak",
    "conditional_distribution",
    "joint_distribution",
    "noon_fidelity",
    "fringe_visibility",
    "count_local_maxima",
    "total_variation",
]

log = logging.getLogger(__name__)


class Engine(enum.Enum):
    ORACLE = "oracle"
    CLOSED_FORM = "closed"
    QUADRATURE = "quadrature"


class Precision(enum.Enum):
    EXACT = "exact"
    FLOAT = "float"
    AUTO = "auto"


class NormalizationDomain(enum.Enum):
    JOINT = "joint"
    CONDITIONAL = "conditional"


class ImpossiblePostSelection(ValueError):
    """Every outcome compatible with the condition has zero probability."""


class EngineFallbackWarning(UserWarning):
    pass


class AliasingWarning(UserWarning):
    pass


def _lf_array(n: int) -> np.ndarray:
    log_factorial(n)
    return np.array([log_factorial(k) for k in range(n + 1)])


def _use_exact(network: InterferometerNetwork, precision: Precision) -> bool:
    precision = Precision(precision)
    if precision is Precision.EXACT:
        if not network.is_exact:
            raise ValueError("exact precision requested but the network has inexact coefficients")
        return True
    if precision is Precision.FLOAT:
        return False
    return network.is_exact


@dataclass(frozen=True)
class AmplitudeValue:
    """A detection amplitude.

    Exact amplitudes are ``exact * sqrt(radicand)`` with ``radicand`` a
    positive rational (factorial ratios and detector radicands); float
    amplitudes live in ``log_value``.  ``zero_reason`` distinguishes a
    structurally forbidden outcome from a float sum that cancelled to zero.
    """

    exact: GaussianRational | None = None
    radicand: Fraction = Fraction(1)
    log_value: LogComplex | None = None
    zero_reason: str | None = None

    @classmethod
    def structural_zero(cls, exact: bool) -> AmplitudeValue:
        if exact:
            return cls(exact=GaussianRational(0), zero_reason="structural")
        return cls(log_value=LogComplex.zero(), zero_reason="structural")

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def is_zero(self) -> bool:
        if self.exact is not None:
            return self.exact.is_zero
        return self.log_value.is_zero

    def probability(self) -> Fraction | float:
        if self.exact is not None:
            return self.exact.norm() * self.radicand
        return math.exp(self.log_value.log_abs2())

    def log_probability(self) -> float:
        if self.exact is not None:
            p = self.probability()
            return math.log(p) if p else -math.inf
        return self.log_value.log_abs2()

    def to_complex(self) -> complex:
        if self.exact is not None:
            return self.exact.to_complex() * math.sqrt(self.radicand)
        return self.log_value.to_complex()


def _ordered_counts(network: InterferometerNetwork, outcome: Mapping[str, int]) -> list[int]:
    ids = network.detector_ids
    unknown = set(outcome) - set(ids)
    if unknown:
        raise KeyError(f"outcome names unknown detectors {sorted(unknown)}; network has {ids}")
    missing = [d for d in ids if d not in outcome]
    if missing:
        raise KeyError(f"outcome must give a count for every detector; missing {missing}")
    counts = [int(outcome[d]) for d in ids]
    if any(m < 0 for m in counts):
        raise ValueError(f"counts must be nonnegative, got {dict(outcome)}")
    return counts


# --- oracle -----------------------------------------------------------------


def _gauss_int(g: GaussianRational, den: int) -> tuple[int, int]:
    scale = den // g.denominator
    return g.numerator_real * scale, g.numerator_imag * scale


def _gmul(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def _gpowers(a: tuple[int, int], n: int) -> list[tuple[int, int]]:
    out = [(1, 0)]
    for _ in range(n):
        out.append(_gmul(out[-1], a))
    return out


def _oracle_exact(source: SourceSpec, network: InterferometerNetwork, counts: Sequence[int]) -> AmplitudeValue:
    na = source.n_alpha
    poly: list[tuple[int, int]] = [(1, 0)]
    denominator = 1
    radicand = Fraction(math.factorial(na) * math.factorial(source.n_beta))
    for det, m in zip(network.coefficient_table, counts):
        radicand /= math.factorial(m)
        if m == 0:
            continue
        ex = det.exact
        radicand *= ex.radicand**m
        den = math.lcm(ex.g_alpha.denominator, ex.g_beta.denominator)
        a_pow = _gpowers(_gauss_int(ex.g_alpha, den), min(m, na))
        b_pow = _gpowers(_gauss_int(ex.g_beta, den), m)
        # binomial row of (a x + b y)**m, truncated at x**na
        row = []
        for k in range(min(m, na) + 1):
            c = math.comb(m, k)
            re, im = _gmul(a_pow[k], b_pow[m - k])
            row.append((c * re, c * im))
        new = [(0, 0)] * min(len(poly) + len(row) - 1, na + 1)
        for i, (pr, pi) in enumerate(poly):
            if pr == 0 and pi == 0:
                continue
            for j, (rr, ri) in enumerate(row):
                if i + j > na:
                    break
                nr, ni = new[i + j]
                new[i + j] = (nr + pr * rr - pi * ri, ni + pr * ri + pi * rr)
        poly = new
        denominator *= den**m
    re, im = poly[na] if na < len(poly) else (0, 0)
    value = GaussianRational(re, im, denominator)
    return AmplitudeValue(exact=value, radicand=radicand, zero_reason="cancellation" if value.is_zero else None)


def _binomial_row_log(m: int, va: complex, vb: complex, lf: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled coefficients of ``(va x + vb y)**m`` by power of x, plus log scale."""
    k = np.arange(m + 1)
    log_c = lf[m] - lf[k] - lf[m - k]
    la = math.log(abs(va)) if va != 0 else -math.inf
    lb = math.log(abs(vb)) if vb != 0 else -math.inf
    with np.errstate(invalid="ignore"):
        log_a = np.where(k == 0, 0.0, k * la)
        log_b = np.where(k == m, 0.0, (m - k) * lb)
    log_entry = log_c + log_a + log_b
    phase = k * np.angle(va) + (m - k) * np.angle(vb)
    support = np.isfinite(log_entry)
    scale = float(log_entry[support].max())
    entries = np.where(support, np.exp(np.where(support, log_entry, 0.0) - scale), 0.0) * np.exp(1j * phase)
    return entries, support, scale


def _oracle_float(source: SourceSpec, network: InterferometerNetwork, counts: Sequence[int]) -> AmplitudeValue:
    na, n = source.n_alpha, source.total
    lf = _lf_array(n)
    poly = np.ones(1, dtype=complex)
    support = np.ones(1, dtype=bool)
    log_scale = 0.0
    for det, m in zip(network.coefficient_table, counts):
        if m == 0:
            continue
        if det.v_alpha == 0 and det.v_beta == 0:
            return AmplitudeValue.structural_zero(False)
        row, row_support, scale = _binomial_row_log(m, det.v_alpha, det.v_beta, lf)
        poly = np.convolve(poly, row)[: na + 1]
        support = np.convolve(support, row_support)[: na + 1] > 0
        log_scale += scale
        peak = np.abs(poly).max()
        if peak == 0:
            break
        poly /= peak
        log_scale += math.log(peak)
    if na >= len(poly) or not support[na]:
        return AmplitudeValue.structural_zero(False)
    coeff = complex(poly[na])
    if coeff == 0:
        log.debug("float oracle cancelled to zero at counts %s", counts)
        return AmplitudeValue(log_value=LogComplex.zero(), zero_reason="cancellation")
    prefactor = 0.5 * (lf[na] + lf[source.n_beta] - sum(lf[m] for m in counts))
    return AmplitudeValue(log_value=LogComplex.from_complex(coeff).scale(log_scale + prefactor))


def amplitude_oracle(
    source: SourceSpec,
    network: InterferometerNetwork,
    outcome: Mapping[str, int],
    precision: Precision = Precision.AUTO,
) -> AmplitudeValue:
    """Amplitude of ``outcome`` by direct polynomial coefficient extraction."""
    counts = _ordered_counts(network, outcome)
    exact = _use_exact(network, precision)
    if sum(counts) != source.total:
        return AmplitudeValue.structural_zero(exact)
    if exact:
        return _oracle_exact(source, network, counts)
    return _oracle_float(source, network, counts)


# --- phase-state quadrature ---------------------------------------------------


@dataclass(frozen=True)
class PhaseWeight:
    """Integrand weight ``e^{-i N_beta phi} (1 + e^{i phi})**m1 (1 - e^{i phi})**m2``.

    This is the relative-phase profile left after ``m1``/``m2`` side
    detections at ``theta = pi/2``; its modulus is ``2**M |q12(phi)|``.
    """

    m1: int
    m2: int
    n_beta: int

    def log_value(self, phi: float) -> LogComplex:
        z = np.exp(1j * phi)
        parts = [LogComplex(0.0, -self.n_beta * phi)]
        parts.append(LogComplex.from_complex(1 + z) ** self.m1)
        parts.append(LogComplex.from_complex(1 - z) ** self.m2)
        out = LogComplex.one()
        for p in parts:
            out = out * p
        return out

    def __call__(self, phi: float) -> complex:
        return self.log_value(phi).to_complex()


def phase_quadrature_amplitude(
    source: SourceSpec,
    network: InterferometerNetwork,
    outcome: Mapping[str, int],
    nodes: int | None = None,
) -> AmplitudeValue:
    """Amplitude of ``outcome`` from the relative-phase integral.

    Each detector acting on an N-particle phase state returns
    ``sqrt(N/2) (v_alpha + v_beta e^{i phi})`` times the (N-1)-particle state,
    so the amplitude is a Fourier coefficient of a trigonometric polynomial
    whose frequencies lie in ``[-N_beta, N_alpha]``.  ``nodes`` uniform
    trapezoidal nodes (default ``4 (N + 1)``) integrate it exactly.
    """
    counts = _ordered_counts(network, outcome)
    n = source.total
    if sum(counts) != n:
        return AmplitudeValue.structural_zero(False)
    if nodes is None:
        nodes = 4 * (n + 1)
    if nodes < n + 1:
        warnings.warn(
            f"{nodes} quadrature nodes cannot resolve a degree-{n} integrand; results alias",
            AliasingWarning,
            stacklevel=2,
        )
    phi = 2 * np.pi * np.arange(nodes) / nodes
    log_mag = np.zeros(nodes)
    phase = -source.n_beta * phi
    for det, m in zip(network.coefficient_table, counts):
        if m == 0:
            continue
        z = det.v_alpha + det.v_beta * np.exp(1j * phi)
        with np.errstate(divide="ignore"):
            log_mag = log_mag + m * np.log(np.abs(z))
        phase = phase + m * np.angle(z)
    integral = sum_log_terms(log_mag, phase)
    lf = _lf_array(n)
    ln2 = math.log(2.0)
    expansion = 0.5 * (n * ln2 + lf[source.n_alpha] + lf[source.n_beta] - lf[n])
    ladder = 0.5 * (lf[n] - n * ln2)
    normalization = -0.5 * sum(lf[m] for m in counts)
    value = integral.scale(expansion + ladder + normalization - math.log(nodes))
    return AmplitudeValue(log_value=value, zero_reason="cancellation" if value.is_zero else None)


# --- closed forms -------------------------------------------------------------


def _noon_exact(na: int, m1: int, m2: int, m5: int, m6: int, xi_turns: int) -> Fraction:
    # every term scaled by m1! m2! m5! m6!, turning reciprocal factorials into binomials
    turn = 1 - xi_turns
    re = im = 0
    for p in range(m1 + 1):
        cp = math.comb(m1, p)
        for q in range(m2 + 1):
            cpq = cp * math.comb(m2, q)
            unit = (turn * (p + q)) % 4
            for r in range(m5 + 1):
                s = na - p - q - r
                term = cpq * math.comb(m5, r) * choose_exact(m6, s)
                if term == 0:
                    continue
                if (q + r) % 2:
                    term = -term
                if unit == 0:
                    re += term
                elif unit == 1:
                    im += term
                elif unit == 2:
                    re -= term
                else:
                    im -= term
    scale = math.factorial(m1) * math.factorial(m2) * math.factorial(m5) * math.factorial(m6)
    return Fraction(math.factorial(m5) * math.factorial(m6) * (re * re + im * im), scale * scale)


def _noon_log_float(na: int, m1: int, m2: int, m5: int, m6: int, xi: float) -> float:
    lf = _lf_array(na + m1 + m2 + m5 + m6)
    p, q, r = np.meshgrid(np.arange(m1 + 1), np.arange(m2 + 1), np.arange(m5 + 1), indexing="ij")
    s = na - p - q - r
    valid = (s >= 0) & (s <= m6)
    p, q, r, s = p[valid], q[valid], r[valid], s[valid]
    rel, ref = relative_log_factorial_terms(
        np.stack([p, m1 - p, q, m2 - q, r, m5 - r, s, m6 - s], axis=1), [-1] * 8
    )
    phases = -(p + q) * (xi - math.pi / 2) + math.pi * ((q + r) % 2)
    total = sum_log_terms(rel, phases).scale(ref)
    if total.is_zero:
        return -math.inf
    return lf[m5] + lf[m6] + total.log_abs2()


def prob_noon_closed(
    source: SourceSpec,
    m1: int,
    m2: int,
    m5: int,
    xi: float = 0.0,
    precision: Precision = Precision.AUTO,
) -> Fraction | float:
    """Unnormalized NOON-plane weight ``m5! m6! |S|**2`` at ``theta = pi/2``.

    ``S`` is the triple sum over p <= m1, q <= m2, r <= m5 of
    ``e^{-i(p+q)(xi - pi/2)} (-1)**(q+r)`` over the eight factorials, with
    ``m6 = N - m1 - m2 - m5``.  Returns a ``Fraction`` on the exact path.
    """
    weight = _noon_weight(source, m1, m2, m5, xi, precision)
    return weight if isinstance(weight, Fraction) else math.exp(weight)


def _noon_weight(source, m1, m2, m5, xi, precision) -> Fraction | float:
    precision = Precision(precision)
    xi_turns = quarter_turns(xi)
    exact = precision is Precision.EXACT or (precision is Precision.AUTO and xi_turns is not None)
    if exact and xi_turns is None:
        raise ValueError("exact precision needs xi to be a multiple of pi/2")
    m6 = source.total - m1 - m2 - m5
    if min(m1, m2, m5, m6) < 0:
        return Fraction(0) if exact else -math.inf
    if exact:
        return _noon_exact(source.n_alpha, m1, m2, m5, m6, xi_turns)
    return _noon_log_float(source.n_alpha, m1, m2, m5, m6, xi)


def _fringe_exact(na: int, m1: int, m2: int, m7: int, m8: int) -> Fraction:
    total = 0
    for p in range(m1 + 1):
        term = math.comb(m1, p) * choose_exact(m2, na - p - m8)
        total += -term if p % 2 else term
    scale = math.factorial(m1) * math.factorial(m2)
    return Fraction(total * total, scale * scale * math.factorial(m7) * math.factorial(m8))


def _fringe_log_float(na: int, m1: int, m2: int, m7: int, m8: int) -> float:
    lf = _lf_array(na + m1 + m2 + m7 + m8)
    p = np.arange(m1 + 1)
    q = na - p - m8
    valid = (q >= 0) & (q <= m2)
    p, q = p[valid], q[valid]
    rel, ref = relative_log_factorial_terms(np.stack([p, m1 - p, q, m2 - q], axis=1), [-1] * 4)
    total = sum_log_terms(rel, math.pi * (p % 2)).scale(ref)
    if total.is_zero:
        return -math.inf
    return total.log_abs2() - lf[m7] - lf[m8]


def prob_fringe_closed(
    source: SourceSpec,
    m1: int,
    m2: int,
    m7: int,
    precision: Precision = Precision.AUTO,
) -> Fraction | float:
    """Unnormalized weight ``|S|**2 / (m7! m8!)`` at zero final-splitter phase.

    ``S = sum_p (-1)**p / (p! (m1-p)! (N_alpha-p-m8)! (m2+m8-N_alpha+p)!)``
    with ``m8 = N - m1 - m2 - m7``.  Valid for theta = pi/2 and xi = zeta = 0.
    """
    weight = _fringe_weight(source, m1, m2, m7, precision)
    return weight if isinstance(weight, Fraction) else math.exp(weight)


def _fringe_weight(source, m1, m2, m7, precision) -> Fraction | float:
    exact = Precision(precision) is not Precision.FLOAT
    m8 = source.total - m1 - m2 - m7
    if min(m1, m2, m7, m8) < 0:
        return Fraction(0) if exact else -math.inf
    if exact:
        return _fringe_exact(source.n_alpha, m1, m2, m7, m8)
    return _fringe_log_float(source.n_alpha, m1, m2, m7, m8)


# --- relative-phase profile ---------------------------------------------------


def q12(phi: float, m1: int, m2: int) -> float:
    """Signed ``cos(phi/2)**m1 * sin(phi/2)**m2``, evaluated through logs."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    if (m1 and c == 0) or (m2 and s == 0):
        return 0.0
    sign = 1.0
    if m1 % 2 and c < 0:
        sign = -sign
    if m2 % 2 and s < 0:
        sign = -sign
    log_mag = (m1 * math.log(abs(c)) if m1 else 0.0) + (m2 * math.log(abs(s)) if m2 else 0.0)
    return sign * math.exp(log_mag)


def q12_argmax(m1: int, m2: int) -> float:
    """Numerical location of the |q12| maximum in (0, pi).

    Stationarity gives ``tan(phi/2)**2 = m2/m1``; see :func:`q12_peak`.
    """
    if m1 < 1 or m2 < 1:
        raise ValueError("q12_argmax needs m1, m2 >= 1 (otherwise the maximum sits on the boundary)")

    def neg_log_q(phi: float) -> float:
        return -(m1 * math.log(math.cos(phi / 2)) + m2 * math.log(math.sin(phi / 2)))

    res = minimize_scalar(neg_log_q, bounds=(1e-12, math.pi - 1e-12), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def q12_peak(m1: int, m2: int) -> float:
    """Closed-form peak ``2 arctan(sqrt(m2/m1))``.

    Without the square root the formula only coincides with the true peak
    when ``m1 == m2``.
    """
    return 2.0 * math.atan(math.sqrt(m2 / m1))


# --- distributions --------------------------------------------------------------


@dataclass
class OutcomeDistribution:
    """Probabilities over a set of complete outcome tuples.

    For a CONDITIONAL scan the support is ordered by the scanned count.
    Exact runs hold ``Fraction`` probabilities; :attr:`probabilities` always
    gives floats.
    """

    conditioned_on: dict[str, int]
    support: list[tuple[dict[str, int], Fraction | float]]
    normalization_domain: NormalizationDomain
    engine: Engine
    precision: Precision
    scan_detector: str | None = None
    partner_detector: str | None = None
    condition_probability: Fraction | float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def is_exact(self) -> bool:
        return self.precision is Precision.EXACT

    @property
    def probabilities(self) -> list[float]:
        return [float(p) for _, p in self.support]

    @property
    def scan_values(self) -> list[int]:
        if self.scan_detector is None:
            raise ValueError("joint distributions have no scan variable")
        return [counts[self.scan_detector] for counts, _ in self.support]

    def total(self) -> Fraction | float:
        if self.is_exact:
            return sum((p for _, p in self.support), Fraction(0))
        return math.fsum(p for _, p in self.support)


def _closed_form_kind(network, condition, scan, partner) -> str | None:
    if network.side_tap_1 != Fraction(1, 2) or network.side_tap_2 != Fraction(1, 2):
        return None
    if quarter_turns(network.phase_theta) != 1:
        return None
    plane = network.terminal_plane
    if plane is TerminalPlane.ARMS_5_6 and {scan, partner} == {"5", "6"} and set(condition) == {"1", "2"}:
        return "noon"
    if plane in (TerminalPlane.DETECTORS_7_8, TerminalPlane.DETECTORS_7_8_WITH_PROBES) and {scan, partner} == {"7", "8"}:
        if quarter_turns(network.phase_xi) != 0 or quarter_turns(network.phase_zeta) != 0:
            return None
        if network.probe_tap_5 or network.probe_tap_6:
            return None
        if any(condition.get(d, 0) for d in ("5p", "6p")):
            return None
        return "fringe"
    return None


def closed_form_applies(network: InterferometerNetwork, condition: Mapping[str, int], scan_detector: str) -> bool:
    """Whether a closed-form sum covers this network, condition and scan."""
    free = [d for d in network.detector_ids if d not in condition and d != scan_detector]
    if len(free) != 1:
        return False
    return _closed_form_kind(network, condition, scan_detector, free[0]) is not None


def _normalize(weights: list, exact: bool) -> list:
    if exact:
        total = sum(weights, Fraction(0))
        if total == 0:
            raise ImpossiblePostSelection("every outcome compatible with the condition has zero probability")
        return [w / total for w in weights]
    finite = [w for w in weights if w > -math.inf]
    if not finite:
        raise ImpossiblePostSelection("every outcome compatible with the condition has zero probability")
    ref = max(finite)
    scaled = [math.exp(w - ref) if w > -math.inf else 0.0 for w in weights]
    total = math.fsum(scaled)
    return [s / total for s in scaled]


def _weight(amp: AmplitudeValue, exact: bool):
    return amp.probability() if exact else amp.log_probability()


def conditional_distribution(
    source: SourceSpec,
    network: InterferometerNetwork,
    condition: Mapping[str, int],
    scan_detector: str,
    engine: Engine = Engine.ORACLE,
    precision: Precision = Precision.AUTO,
    nodes: int | None = None,
) -> OutcomeDistribution:
    """Distribution of ``scan_detector`` given fixed counts elsewhere.

    The condition must fix every detector except ``scan_detector`` and one
    partner, whose count follows from particle conservation.  A closed form
    that does not cover the requested network falls back to the oracle with
    an :class:`EngineFallbackWarning`.
    """
    engine = Engine(engine)
    condition = {k: int(v) for k, v in condition.items()}
    ids = network.detector_ids
    unknown = (set(condition) | {scan_detector}) - set(ids)
    if unknown:
        raise KeyError(f"unknown detectors {sorted(unknown)}; network has {ids}")
    if scan_detector in condition:
        raise ValueError(f"scan detector {scan_detector!r} is also conditioned on")
    free = [d for d in ids if d not in condition and d != scan_detector]
    if len(free) != 1:
        raise ValueError(f"condition must leave exactly one partner detector free, left {free}")
    partner = free[0]
    rest = source.total - sum(condition.values())
    if rest < 0 or any(v < 0 for v in condition.values()):
        raise ImpossiblePostSelection(f"condition {condition} needs more than the {source.total} available particles")

    notes: list[str] = []
    kind = None
    if engine is Engine.CLOSED_FORM:
        kind = _closed_form_kind(network, condition, scan_detector, partner)
        if kind is None:
            msg = "closed form does not cover this network/condition; using the oracle"
            warnings.warn(msg, EngineFallbackWarning, stacklevel=2)
            notes.append(msg)
            engine = Engine.ORACLE

    if engine is Engine.QUADRATURE:
        exact = False
        if Precision(precision) is Precision.EXACT:
            notes.append("quadrature is evaluated in floating point")
    else:
        exact = _use_exact(network, precision)
    prec = Precision.EXACT if exact else Precision.FLOAT

    outcomes = []
    weights = []
    for k in range(rest + 1):
        counts = dict(condition)
        counts[scan_detector] = k
        counts[partner] = rest - k
        outcomes.append({d: counts[d] for d in ids})
        if kind == "noon":
            weights.append(_noon_weight(source, counts["1"], counts["2"], counts["5"], network.phase_xi, prec))
        elif kind == "fringe":
            weights.append(_fringe_weight(source, counts["1"], counts["2"], counts["7"], prec))
        elif engine is Engine.QUADRATURE:
            weights.append(_weight(phase_quadrature_amplitude(source, network, counts, nodes), False))
        else:
            weights.append(_weight(amplitude_oracle(source, network, counts, prec), exact))

    condition_probability = None
    if kind is None:
        if exact:
            condition_probability = sum(weights, Fraction(0))
        else:
            condition_probability = math.fsum(math.exp(w) for w in weights if w > -math.inf)
    probs = _normalize(weights, exact)
    return OutcomeDistribution(
        conditioned_on=condition,
        support=list(zip(outcomes, probs)),
        normalization_domain=NormalizationDomain.CONDITIONAL,
        engine=engine,
        precision=prec,
        scan_detector=scan_detector,
        partner_detector=partner,
        condition_probability=condition_probability,
        notes=notes,
    )


def _compositions(total: int, parts: int):
    # stars and bars, lexicographic
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield out


def joint_distribution(
    source: SourceSpec,
    network: InterferometerNetwork,
    engine: Engine = Engine.ORACLE,
    precision: Precision = Precision.AUTO,
    nodes: int | None = None,
) -> OutcomeDistribution:
    """Probabilities of every outcome tuple; not renormalized."""
    engine = Engine(engine)
    notes = []
    if engine is Engine.CLOSED_FORM:
        msg = "closed forms omit the side-count constant; joint distribution uses the oracle"
        warnings.warn(msg, EngineFallbackWarning, stacklevel=2)
        notes.append(msg)
        engine = Engine.ORACLE
    exact = engine is Engine.ORACLE and _use_exact(network, precision)
    ids = network.detector_ids
    support = []
    for counts in _compositions(source.total, len(ids)):
        outcome = dict(zip(ids, counts))
        if engine is Engine.QUADRATURE:
            p = phase_quadrature_amplitude(source, network, outcome, nodes).probability()
        else:
            p = amplitude_oracle(source, network, outcome, Precision.EXACT if exact else Precision.FLOAT).probability()
        support.append((outcome, p))
    return OutcomeDistribution(
        conditioned_on={},
        support=support,
        normalization_domain=NormalizationDomain.JOINT,
        engine=engine,
        precision=Precision.EXACT if exact else Precision.FLOAT,
        notes=notes,
    )


# --- metrics ------------------------------------------------------------------------


def noon_fidelity(dist: OutcomeDistribution) -> float:
    """Probability weight on the two extreme scan values (0 and the maximum)."""
    values = dist.scan_values
    top = max(values)
    weight = sum((p for (c, p) in dist.support if c[dist.scan_detector] in (0, top)), Fraction(0) if dist.is_exact else 0.0)
    return float(weight)


def fringe_visibility(dist: OutcomeDistribution) -> float:
    """Parity contrast ``|P(even) - P(odd)| / (P(even) + P(odd))`` of the scan.

    A parity-locked fringe pattern gives 1; any smooth single-peaked
    distribution gives a value near 0.
    """
    zero = Fraction(0) if dist.is_exact else 0.0
    even = sum((p for c, p in dist.support if c[dist.scan_detector] % 2 == 0), zero)
    odd = sum((p for c, p in dist.support if c[dist.scan_detector] % 2), zero)
    if even + odd == 0:
        return 0.0
    return float(abs(even - odd) / (even + odd))


def count_local_maxima(dist: OutcomeDistribution) -> int:
    """Number of peaks in the scan, a flat-topped peak counting once.

    Complements :func:`fringe_visibility`: a scan that is symmetric about a
    half-integer has zero parity contrast whether or not it oscillates.
    """
    probs = [float(p) for p in dist.probabilities]
    # collapse plateaus, then look for strict rises followed by strict falls
    levels = [p for i, p in enumerate(probs) if i == 0 or p != probs[i - 1]]
    peaks = 0
    for i, p in enumerate(levels):
        left = levels[i - 1] if i > 0 else -math.inf
        right = levels[i + 1] if i + 1 < len(levels) else -math.inf
        if p > left and p > right and p > 0:
            peaks += 1
    return peaks


def total_variation(a: OutcomeDistribution, b: OutcomeDistribution) -> float:
    """Total-variation distance between two scans over the same variable."""
    pa = dict(zip(a.scan_values, a.probabilities))
    pb = dict(zip(b.scan_values, b.probabilities))
    keys = set(pa) | set(pb)
    return 0.5 * math.fsum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys)
