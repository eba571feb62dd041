"""Interferometer topology and detector coefficient tables.

Every detector operator is a linear form in the two source-mode operators,
``a_d = v_alpha * a_alpha + v_beta * a_beta``.  The networks built here are
the double-source interferometer with side detectors 1 and 2, the middle
splitter producing arms 5 and 6, and the final splitter feeding detectors
7 and 8, optionally with probe taps on arms 5 and 6.

Conventions
-----------
The coefficient tables reproduce these operator identities (theta, xi, zeta
are the three phase shifts)::

    a1 = (i e^{i theta} a_alpha - a_beta) / 2
    a2 = (-e^{i theta} a_alpha + i a_beta) / 2
    a5 = (-i e^{i xi} a_alpha - a_beta) / 2
    a6 = (-e^{i xi} a_alpha - i a_beta) / 2
    a7 = (u e^{i xi} a_alpha + v a_beta) / (2 sqrt 2)
    a8 = (v e^{i xi} a_alpha - u a_beta) / (2 sqrt 2)

with ``u = e^{i zeta} - 1`` and ``v = -i (e^{i zeta} + 1)``.  Internally the
middle and final splitters are written as

    a5 = (a3 + a4) / sqrt 2,          a6 = (-i a3 + i a4) / sqrt 2
    a7 = (i e^{i zeta} b5 + b6) / sqrt 2,  a8 = (e^{i zeta} b5 + i b6) / sqrt 2

where ``a3 = -i e^{i xi} a_alpha / sqrt 2`` and ``a4 = -a_beta / sqrt 2`` are
the arms leaving the side taps, and ``b5, b6`` are arms 5 and 6 after the
probe taps.  A probe tap of diverted fraction ``t`` transmits
``sqrt(1 - t)`` and sends ``i sqrt(t)`` to its probe detector.  The phase of
the diverted branch never changes count statistics because probe detectors
are read out in the number basis.
"""

from __future__ import annotations

import cmath
import enum
import math
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .numerics import GaussianRational

__all__ = [
    "TerminalPlane",
    "SourceSpec",
    "ExactCoefficients",
    "DetectorCoefficients",
    "InterferometerNetwork",
    "UnitarityReport",
    "build_canonical_network",
    "build_extended_network",
    "build_splitter_network",
    "build_network",
    "verify_unitarity",
    "quarter_turns",
    "UNITARITY_TOLERANCE",
]

UNITARITY_TOLERANCE = 1e-12
# a few ulps: enough for p/q * pi round trips, too small to move a coefficient visibly
_QUARTER_ULPS = 8
_MAX_RADICAND = 10**14


class TerminalPlane(enum.Enum):
    ARMS_3_4 = "arms_3_4"
    ARMS_5_6 = "arms_5_6"
    DETECTORS_7_8 = "detectors_7_8"
    DETECTORS_7_8_WITH_PROBES = "detectors_7_8_with_probes"
    SINGLE_SPLITTER = "single_splitter"


@dataclass(frozen=True)
class SourceSpec:
    """Particle numbers of the two Fock-state sources."""

    n_alpha: int
    n_beta: int

    def __post_init__(self):
        if self.n_alpha < 0 or self.n_beta < 0:
            raise ValueError(f"source populations must be nonnegative, got {self.n_alpha}, {self.n_beta}")

    @property
    def total(self) -> int:
        return self.n_alpha + self.n_beta


@dataclass(frozen=True)
class ExactCoefficients:
    """Exact form ``v = g * sqrt(radicand)`` shared by one detector's pair."""

    g_alpha: GaussianRational
    g_beta: GaussianRational
    radicand: int = 1


@dataclass(frozen=True)
class DetectorCoefficients:
    detector_id: str
    v_alpha: complex
    v_beta: complex
    exact: ExactCoefficients | None = None

    @property
    def weight(self) -> float:
        return abs(self.v_alpha) ** 2 + abs(self.v_beta) ** 2


@dataclass(frozen=True)
class InterferometerNetwork:
    phase_theta: float
    phase_xi: float
    phase_zeta: float
    side_tap_1: Fraction
    side_tap_2: Fraction
    probe_tap_5: Fraction
    probe_tap_6: Fraction
    terminal_plane: TerminalPlane
    coefficient_table: tuple[DetectorCoefficients, ...] = field(repr=False)

    @property
    def detector_ids(self) -> tuple[str, ...]:
        return tuple(d.detector_id for d in self.coefficient_table)

    @property
    def is_exact(self) -> bool:
        """True when every coefficient has an exact algebraic form."""
        return all(d.exact is not None for d in self.coefficient_table)

    def detector(self, detector_id: str) -> DetectorCoefficients:
        for d in self.coefficient_table:
            if d.detector_id == detector_id:
                return d
        raise KeyError(f"no detector {detector_id!r} in {self.detector_ids}")

    def without(self, detector_id: str) -> InterferometerNetwork:
        """Copy of the network with one detector dropped (a lossy table)."""
        self.detector(detector_id)
        table = tuple(d for d in self.coefficient_table if d.detector_id != detector_id)
        return replace(self, coefficient_table=table)


@dataclass(frozen=True)
class UnitarityReport:
    alpha_sum: complex
    beta_sum: complex
    cross_sum: complex

    @property
    def deviation(self) -> float:
        return max(abs(self.alpha_sum - 1), abs(self.beta_sum - 1), abs(self.cross_sum))

    @property
    def ok(self) -> bool:
        return self.deviation <= UNITARITY_TOLERANCE


def verify_unitarity(network: InterferometerNetwork) -> UnitarityReport:
    """Return the three closure sums over all detectors of ``network``."""
    table = network.coefficient_table
    return UnitarityReport(
        alpha_sum=math.fsum(abs(d.v_alpha) ** 2 for d in table) + 0j,
        beta_sum=math.fsum(abs(d.v_beta) ** 2 for d in table) + 0j,
        cross_sum=complex(
            math.fsum((d.v_alpha.conjugate() * d.v_beta).real for d in table),
            math.fsum((d.v_alpha.conjugate() * d.v_beta).imag for d in table),
        ),
    )


def quarter_turns(angle: float) -> int | None:
    """Return k mod 4 if ``angle`` is k*pi/2 up to a few ulps, else None."""
    k = round(angle / (math.pi / 2))
    if abs(angle - k * math.pi / 2) <= _QUARTER_ULPS * sys.float_info.epsilon * max(1.0, abs(angle)):
        return k % 4
    return None


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # repr gives the shortest decimal, so 0.2 becomes 1/5 rather than its binary expansion
        return Fraction(repr(value))
    return Fraction(value)


def _check_tap(name: str, t: Fraction) -> Fraction:
    if not 0 <= t <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {t}")
    return t


# --- exact algebra on sums of g * sqrt(f), f squarefree ---------------------


def _squarefree_split(n: int) -> tuple[int, int] | None:
    """Write n = s**2 * f with f squarefree; None if n is too large to factor."""
    if n > _MAX_RADICAND:
        return None
    s, f, p = 1, 1, 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        if n % p == 0:
            n //= p
            f *= p
        p += 1
    return s, f * n


class _Surd:
    """Finite sum of ``g * sqrt(f)``; keys are squarefree positive ints."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, GaussianRational] | None = None):
        self.terms = {f: g for f, g in (terms or {}).items() if not g.is_zero}

    @classmethod
    def of(cls, g: GaussianRational) -> _Surd:
        return cls({1: g})

    @classmethod
    def sqrt(cls, r: Fraction) -> _Surd | None:
        if r == 0:
            return cls()
        split = _squarefree_split(r.numerator * r.denominator)
        if split is None:
            return None
        s, f = split
        return cls({f: GaussianRational.from_parts(Fraction(s, r.denominator))})

    def __add__(self, other: _Surd) -> _Surd:
        terms = dict(self.terms)
        for f, g in other.terms.items():
            terms[f] = terms[f] + g if f in terms else g
        return _Surd(terms)

    def __mul__(self, other: _Surd) -> _Surd:
        out = _Surd()
        for f1, g1 in self.terms.items():
            for f2, g2 in other.terms.items():
                common = math.gcd(f1, f2)
                f = (f1 // common) * (f2 // common)
                out = out + _Surd({f: g1 * g2 * common})
        return out


def _exact_pair(detector_id: str, alpha: _Surd, beta: _Surd) -> ExactCoefficients | None:
    radicands = set(alpha.terms) | set(beta.terms)
    if len(radicands) > 1:
        return None
    f = radicands.pop() if radicands else 1
    zero = GaussianRational(0)
    return ExactCoefficients(alpha.terms.get(f, zero), beta.terms.get(f, zero), f)


def _exact_to_complex(exact: ExactCoefficients) -> tuple[complex, complex]:
    root = math.sqrt(exact.radicand)
    return exact.g_alpha.to_complex() * root, exact.g_beta.to_complex() * root


# --- linear forms -------------------------------------------------------------
#
# Each arm is carried twice: as a float pair (alpha, beta) and, when possible,
# as an exact pair of _Surd values.  The float pair is replaced by the exact
# one at the end so exact networks have no rounding noise.


@dataclass
class _Form:
    alpha: complex
    beta: complex
    exact: tuple[_Surd, _Surd] | None

    def scaled(self, c: complex, c_exact: _Surd | None) -> _Form:
        exact = None
        if self.exact is not None and c_exact is not None:
            exact = (self.exact[0] * c_exact, self.exact[1] * c_exact)
        return _Form(self.alpha * c, self.beta * c, exact)

    def plus(self, other: _Form) -> _Form:
        exact = None
        if self.exact is not None and other.exact is not None:
            exact = (self.exact[0] + other.exact[0], self.exact[1] + other.exact[1])
        return _Form(self.alpha + other.alpha, self.beta + other.beta, exact)

    def detector(self, detector_id: str) -> DetectorCoefficients:
        pair = None if self.exact is None else _exact_pair(detector_id, *self.exact)
        if pair is None:
            return DetectorCoefficients(detector_id, complex(self.alpha), complex(self.beta))
        va, vb = _exact_to_complex(pair)
        return DetectorCoefficients(detector_id, va, vb, pair)


def _phase(angle: float) -> tuple[complex, _Surd | None]:
    k = quarter_turns(angle)
    if k is None:
        return cmath.exp(1j * angle), None
    return GaussianRational.i_power(k).to_complex(), _Surd.of(GaussianRational.i_power(k))


def _unit(k: int) -> tuple[complex, _Surd]:
    return GaussianRational.i_power(k).to_complex(), _Surd.of(GaussianRational.i_power(k))


def _root(r: Fraction) -> tuple[complex, _Surd | None]:
    return complex(math.sqrt(r)), _Surd.sqrt(r)


def _mul(*factors: tuple[complex, _Surd | None]) -> tuple[complex, _Surd | None]:
    value, exact = 1 + 0j, _Surd.of(GaussianRational(1))
    for v, e in factors:
        value *= v
        exact = None if exact is None or e is None else exact * e
    return value, exact


_SOURCE_ALPHA = _Form(1, 0, (_Surd.of(GaussianRational(1)), _Surd()))
_SOURCE_BETA = _Form(0, 1, (_Surd(), _Surd.of(GaussianRational(1))))
_HALF = (0.5 + 0j, _Surd.of(GaussianRational(1, 0, 2)))
_INV_SQRT2 = _root(Fraction(1, 2))


def _combine(*parts: tuple[_Form, tuple[complex, _Surd | None]]) -> _Form:
    out = None
    for form, (c, ce) in parts:
        term = form.scaled(c, ce)
        out = term if out is None else out.plus(term)
    return out


def _side_and_arms(theta: float, xi: float, s1: Fraction, s2: Fraction):
    e_theta = _phase(theta)
    e_xi = _phase(xi)
    r1, r2 = _root(s1), _root(s2)
    # side interferometer, 50-50 at s = 1/2
    a1 = _combine(
        (_SOURCE_ALPHA, _mul(_INV_SQRT2, _unit(1), e_theta, r1)),
        (_SOURCE_BETA, _mul(_INV_SQRT2, _unit(2), r2)),
    )
    a2 = _combine(
        (_SOURCE_ALPHA, _mul(_INV_SQRT2, _unit(2), e_theta, r1)),
        (_SOURCE_BETA, _mul(_INV_SQRT2, _unit(1), r2)),
    )
    a3 = _SOURCE_ALPHA.scaled(*_mul(_unit(3), e_xi, _root(1 - s1)))
    a4 = _SOURCE_BETA.scaled(*_mul(_unit(2), _root(1 - s2)))
    return a1, a2, a3, a4


def _middle_splitter(a3: _Form, a4: _Form) -> tuple[_Form, _Form]:
    a5 = _combine((a3, _INV_SQRT2), (a4, _INV_SQRT2))
    a6 = _combine((a3, _mul(_unit(3), _INV_SQRT2)), (a4, _mul(_unit(1), _INV_SQRT2)))
    return a5, a6


def build_canonical_network(
    theta: float,
    xi: float,
    terminal_plane: TerminalPlane = TerminalPlane.ARMS_5_6,
    side_tap_1=Fraction(1, 2),
    side_tap_2=Fraction(1, 2),
) -> InterferometerNetwork:
    """Network of side detectors 1, 2 and either arms 3/4 or arms 5/6.

    ``side_tap_1``/``side_tap_2`` are the fractions of each source diverted
    toward the side interferometer; 1/2 reproduces the standard table.
    """
    if terminal_plane not in (TerminalPlane.ARMS_3_4, TerminalPlane.ARMS_5_6):
        raise ValueError(f"{terminal_plane} needs zeta; use build_extended_network")
    s1 = _check_tap("side_tap_1", _as_fraction(side_tap_1))
    s2 = _check_tap("side_tap_2", _as_fraction(side_tap_2))
    a1, a2, a3, a4 = _side_and_arms(theta, xi, s1, s2)
    if terminal_plane is TerminalPlane.ARMS_3_4:
        arms = (a3.detector("3"), a4.detector("4"))
    else:
        a5, a6 = _middle_splitter(a3, a4)
        arms = (a5.detector("5"), a6.detector("6"))
    return InterferometerNetwork(
        phase_theta=float(theta),
        phase_xi=float(xi),
        phase_zeta=0.0,
        side_tap_1=s1,
        side_tap_2=s2,
        probe_tap_5=Fraction(0),
        probe_tap_6=Fraction(0),
        terminal_plane=terminal_plane,
        coefficient_table=(a1.detector("1"), a2.detector("2")) + arms,
    )


def build_extended_network(
    theta: float,
    xi: float,
    zeta: float,
    probe_tap_5=0,
    probe_tap_6=0,
    *,
    probes: bool | None = None,
    side_tap_1=Fraction(1, 2),
    side_tap_2=Fraction(1, 2),
) -> InterferometerNetwork:
    """Network ending at detectors 7 and 8, with optional probes 5p and 6p.

    A tap of 1 diverts the whole arm into its probe detector.  Probe
    detectors are included whenever either tap is nonzero, or when
    ``probes=True``.
    """
    t5 = _check_tap("probe_tap_5", _as_fraction(probe_tap_5))
    t6 = _check_tap("probe_tap_6", _as_fraction(probe_tap_6))
    s1 = _check_tap("side_tap_1", _as_fraction(side_tap_1))
    s2 = _check_tap("side_tap_2", _as_fraction(side_tap_2))
    if probes is None:
        probes = bool(t5 or t6)
    a1, a2, a3, a4 = _side_and_arms(theta, xi, s1, s2)
    a5, a6 = _middle_splitter(a3, a4)
    b5 = a5.scaled(*_root(1 - t5))
    b6 = a6.scaled(*_root(1 - t6))
    e_zeta = _phase(zeta)
    a7 = _combine((b5, _mul(_INV_SQRT2, _unit(1), e_zeta)), (b6, _INV_SQRT2))
    a8 = _combine((b5, _mul(_INV_SQRT2, e_zeta)), (b6, _mul(_INV_SQRT2, _unit(1))))
    table = [a1.detector("1"), a2.detector("2")]
    if probes:
        table.append(a5.scaled(*_mul(_unit(1), _root(t5))).detector("5p"))
        table.append(a6.scaled(*_mul(_unit(1), _root(t6))).detector("6p"))
    table += [a7.detector("7"), a8.detector("8")]
    return InterferometerNetwork(
        phase_theta=float(theta),
        phase_xi=float(xi),
        phase_zeta=float(zeta),
        side_tap_1=s1,
        side_tap_2=s2,
        probe_tap_5=t5,
        probe_tap_6=t6,
        terminal_plane=TerminalPlane.DETECTORS_7_8_WITH_PROBES if probes else TerminalPlane.DETECTORS_7_8,
        coefficient_table=tuple(table),
    )


def build_splitter_network() -> InterferometerNetwork:
    """The two sources meeting directly on one 50-50 splitter.

    Uses the same splitter matrix as the middle splitter, with outputs
    ``left = (a_alpha + a_beta)/sqrt 2`` and ``right = (-i a_alpha + i a_beta)/sqrt 2``.
    """
    left = _combine((_SOURCE_ALPHA, _INV_SQRT2), (_SOURCE_BETA, _INV_SQRT2))
    right = _combine((_SOURCE_ALPHA, _mul(_unit(3), _INV_SQRT2)), (_SOURCE_BETA, _mul(_unit(1), _INV_SQRT2)))
    return InterferometerNetwork(
        phase_theta=0.0,
        phase_xi=0.0,
        phase_zeta=0.0,
        side_tap_1=Fraction(0),
        side_tap_2=Fraction(0),
        probe_tap_5=Fraction(0),
        probe_tap_6=Fraction(0),
        terminal_plane=TerminalPlane.SINGLE_SPLITTER,
        coefficient_table=(left.detector("left"), right.detector("right")),
    )


def build_network(
    terminal_plane: TerminalPlane,
    theta: float = math.pi / 2,
    xi: float = 0.0,
    zeta: float = 0.0,
    probe_tap_5=0,
    probe_tap_6=0,
) -> InterferometerNetwork:
    """Dispatch to the right builder for ``terminal_plane``."""
    if terminal_plane is TerminalPlane.SINGLE_SPLITTER:
        return build_splitter_network()
    if terminal_plane in (TerminalPlane.ARMS_3_4, TerminalPlane.ARMS_5_6):
        return build_canonical_network(theta, xi, terminal_plane)
    probes = terminal_plane is TerminalPlane.DETECTORS_7_8_WITH_PROBES
    if not probes and (_as_fraction(probe_tap_5) or _as_fraction(probe_tap_6)):
        raise ValueError("probe taps need terminal plane detectors_7_8_with_probes")
    return build_extended_network(theta, xi, zeta, probe_tap_5, probe_tap_6, probes=probes)
