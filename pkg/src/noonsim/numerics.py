"""Scalar arithmetic used by every amplitude computation.

Two carriers are provided:

* :class:`LogComplex` stores a complex number as ``(log|z|, arg z)`` so that
  products of huge factorial ratios never overflow.
* :class:`GaussianRational` stores ``(a + b i) / d`` with arbitrary precision
  integers and is used whenever all interferometer phases are multiples of
  pi/2, which makes every detector coefficient exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LogComplex",
    "GaussianRational",
    "log_factorial",
    "sum_logcomplex",
    "sum_log_terms",
    "relative_log_factorial_terms",
    "choose_exact",
    "wrap_phase",
]

_TWO_PI = 2.0 * math.pi


def wrap_phase(phase: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.remainder(phase, _TWO_PI)
    if wrapped <= -math.pi:
        wrapped += _TWO_PI
    return wrapped


@dataclass(frozen=True)
class LogComplex:
    """Complex number held as natural-log magnitude and phase."""

    log_magnitude: float
    phase: float = 0.0

    @classmethod
    def zero(cls) -> LogComplex:
        return cls(-math.inf, 0.0)

    @classmethod
    def one(cls) -> LogComplex:
        return cls(0.0, 0.0)

    @classmethod
    def from_complex(cls, z: complex) -> LogComplex:
        if z == 0:
            return cls.zero()
        return cls(math.log(abs(z)), wrap_phase(math.atan2(z.imag, z.real)))

    @classmethod
    def from_polar(cls, log_magnitude: float, phase: float) -> LogComplex:
        if log_magnitude == -math.inf:
            return cls.zero()
        return cls(log_magnitude, wrap_phase(phase))

    @property
    def is_zero(self) -> bool:
        return self.log_magnitude == -math.inf

    def __mul__(self, other: LogComplex) -> LogComplex:
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(
            self.log_magnitude + other.log_magnitude,
            wrap_phase(self.phase + other.phase),
        )

    def __truediv__(self, other: LogComplex) -> LogComplex:
        if other.is_zero:
            raise ZeroDivisionError("division by LogComplex zero")
        if self.is_zero:
            return LogComplex.zero()
        return LogComplex(
            self.log_magnitude - other.log_magnitude,
            wrap_phase(self.phase - other.phase),
        )

    def __pow__(self, n: int) -> LogComplex:
        if n == 0:
            return LogComplex.one()
        if self.is_zero:
            if n < 0:
                raise ZeroDivisionError("negative power of zero")
            return LogComplex.zero()
        return LogComplex(n * self.log_magnitude, wrap_phase(n * self.phase))

    def conjugate(self) -> LogComplex:
        if self.is_zero:
            return self
        return LogComplex(self.log_magnitude, wrap_phase(-self.phase))

    def scale(self, log_factor: float) -> LogComplex:
        """Multiply by the positive real ``exp(log_factor)``."""
        if self.is_zero:
            return self
        return LogComplex(self.log_magnitude + log_factor, self.phase)

    def log_abs2(self) -> float:
        """Natural log of ``|z|**2``."""
        return 2.0 * self.log_magnitude

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_magnitude), self.phase)


@dataclass(frozen=True, init=False)
class GaussianRational:
    """Exact complex rational ``(numerator_real + i*numerator_imag) / denominator``.

    Always stored in lowest terms with a positive denominator, so structural
    equality is numeric equality.
    """

    numerator_real: int
    numerator_imag: int
    denominator: int

    def __init__(self, numerator_real: int = 0, numerator_imag: int = 0, denominator: int = 1):
        if denominator == 0:
            raise ZeroDivisionError("GaussianRational with zero denominator")
        if denominator < 0:
            numerator_real, numerator_imag, denominator = -numerator_real, -numerator_imag, -denominator
        g = math.gcd(math.gcd(numerator_real, numerator_imag), denominator)
        if g > 1:
            numerator_real //= g
            numerator_imag //= g
            denominator //= g
        object.__setattr__(self, "numerator_real", numerator_real)
        object.__setattr__(self, "numerator_imag", numerator_imag)
        object.__setattr__(self, "denominator", denominator)

    @classmethod
    def from_parts(cls, real: Fraction | int, imag: Fraction | int = 0) -> GaussianRational:
        real, imag = Fraction(real), Fraction(imag)
        den = real.denominator * imag.denominator // math.gcd(real.denominator, imag.denominator)
        return cls(real.numerator * (den // real.denominator), imag.numerator * (den // imag.denominator), den)

    @classmethod
    def i_power(cls, k: int) -> GaussianRational:
        """Return ``i**k``."""
        return _I_POWERS[k % 4]

    @property
    def real(self) -> Fraction:
        return Fraction(self.numerator_real, self.denominator)

    @property
    def imag(self) -> Fraction:
        return Fraction(self.numerator_imag, self.denominator)

    @property
    def is_zero(self) -> bool:
        return self.numerator_real == 0 and self.numerator_imag == 0

    def _coerce(self, other) -> GaussianRational:
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussianRational.from_parts(other)
        return NotImplemented

    def __add__(self, other) -> GaussianRational:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d1, d2 = self.denominator, other.denominator
        return GaussianRational(
            self.numerator_real * d2 + other.numerator_real * d1,
            self.numerator_imag * d2 + other.numerator_imag * d1,
            d1 * d2,
        )

    __radd__ = __add__

    def __neg__(self) -> GaussianRational:
        return GaussianRational(-self.numerator_real, -self.numerator_imag, self.denominator)

    def __sub__(self, other) -> GaussianRational:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> GaussianRational:
        return (-self) + other

    def __mul__(self, other) -> GaussianRational:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.numerator_real, self.numerator_imag, other.numerator_real, other.numerator_imag
        return GaussianRational(a * c - b * d, a * d + b * c, self.denominator * other.denominator)

    __rmul__ = __mul__

    def __truediv__(self, other) -> GaussianRational:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero:
            raise ZeroDivisionError("division by GaussianRational zero")
        # (a+bi)/p / ((c+di)/q) = q (a+bi)(c-di) / (p (c^2+d^2))
        c, d = other.numerator_real, other.numerator_imag
        num = self * GaussianRational(c, -d, 1)
        return GaussianRational(
            num.numerator_real * other.denominator,
            num.numerator_imag * other.denominator,
            num.denominator * (c * c + d * d),
        )

    def __pow__(self, n: int) -> GaussianRational:
        if n < 0:
            return GaussianRational(1) / self ** (-n)
        result = GaussianRational(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> GaussianRational:
        return GaussianRational(self.numerator_real, -self.numerator_imag, self.denominator)

    def norm(self) -> Fraction:
        """``|z|**2`` as an exact fraction."""
        return Fraction(
            self.numerator_real**2 + self.numerator_imag**2,
            self.denominator**2,
        )

    def to_complex(self) -> complex:
        return complex(self.real, self.imag)

    def __complex__(self) -> complex:
        return self.to_complex()

    def __repr__(self) -> str:
        return f"GaussianRational({self.real} + {self.imag}i)"


_I_POWERS = (
    GaussianRational(1, 0),
    GaussianRational(0, 1),
    GaussianRational(-1, 0),
    GaussianRational(0, -1),
)


class _LogFactorialTable:
    # prefix sums of ln(k) kept as unevaluated (hi, lo) pairs; grows on demand
    def __init__(self) -> None:
        self._hi = [0.0]
        self._lo = [0.0]

    def _extend(self, n: int) -> None:
        hi, lo = self._hi, self._lo
        while len(hi) <= n:
            term = math.log(len(hi))
            prev = hi[-1]
            total = prev + term
            # Neumaier compensation for the rounding of prev + term
            if abs(prev) >= abs(term):
                err = (prev - total) + term
            else:
                err = (term - total) + prev
            hi.append(total)
            lo.append(lo[-1] + err)

    def __call__(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"log_factorial needs n >= 0, got {n}")
        self._extend(n)
        return self._hi[n] + self._lo[n]

    def parts(self, n: int) -> tuple[float, float]:
        """``ln(n!)`` as an unevaluated sum ``hi + lo``."""
        if n < 0:
            raise ValueError(f"log_factorial needs n >= 0, got {n}")
        self._extend(n)
        return self._hi[n], self._lo[n]


log_factorial = _LogFactorialTable()
log_factorial.__doc__ = "Return ln(n!) for integer n >= 0."


def relative_log_factorial_terms(args: np.ndarray, signs: Sequence[int]) -> tuple[np.ndarray, float]:
    """Logs of factorial products, measured from the largest one.

    Row ``j`` of ``args`` describes the term ``prod_i (args[j, i]!)**signs[i]``.
    Returns ``(rel, ref)`` with ``log(term_j) = ref + rel[j]`` where the
    largest term has ``rel = 0``.  Each ``rel[j]`` is a correctly rounded
    sum of the double-double table entries, so it carries no error from the
    size of ``ref`` itself.
    """
    args = np.asarray(args, dtype=np.int64)
    if args.size == 0:
        return np.zeros(0), 0.0
    top = int(args.max())
    log_factorial.parts(top)
    hi = np.array(log_factorial._hi[: top + 1])
    lo = np.array(log_factorial._lo[: top + 1])
    signs = np.asarray(signs, dtype=float)
    approx = (hi[args] * signs).sum(axis=1)
    best = int(np.argmax(approx))
    ref_row = args[best]
    ref_parts = [-s * x for s, a in zip(signs, ref_row) for x in (hi[a], lo[a])]
    rel = np.empty(len(args))
    for j, row in enumerate(args):
        parts = [s * x for s, a in zip(signs, row) for x in (hi[a], lo[a])]
        rel[j] = math.fsum(parts + ref_parts)
    ref = math.fsum(-p for p in ref_parts)
    return rel, ref


_QUARTER = math.pi / 2
_EPS = float(np.finfo(float).eps)
_CANCELLATION_ULPS = 4.0

_QUARTER_COS = np.array([1.0, 0.0, -1.0, 0.0])
_QUARTER_SIN = np.array([0.0, 1.0, 0.0, -1.0])


def _units(phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # exact (cos, sin) at multiples of pi/2 so sign flips cancel to zero
    k = np.rint(phases / _QUARTER)
    snap = np.abs(phases - k * _QUARTER) <= 4e-16 * np.maximum(1.0, np.abs(phases))
    idx = k.astype(np.int64) % 4
    cos = np.where(snap, _QUARTER_COS[idx], np.cos(phases))
    sin = np.where(snap, _QUARTER_SIN[idx], np.sin(phases))
    return cos, sin


def sum_logcomplex(terms: Iterable[LogComplex]) -> LogComplex:
    """Sum log-domain complex numbers without overflow.

    All terms are rescaled by the largest magnitude before summing, and the
    real and imaginary parts are accumulated with :func:`math.fsum`, so the
    only rounding left is in the rescaled terms themselves.
    """
    terms = list(terms)
    if not terms:
        return LogComplex.zero()
    return sum_log_terms(
        np.array([t.log_magnitude for t in terms], dtype=float),
        np.array([t.phase for t in terms], dtype=float),
    )


def sum_log_terms(log_magnitudes: np.ndarray, phases: np.ndarray) -> LogComplex:
    """Array form of :func:`sum_logcomplex`.

    ``log_magnitudes`` may contain ``-inf`` for zero terms.
    """
    log_magnitudes = np.asarray(log_magnitudes, dtype=float).ravel()
    phases = np.asarray(phases, dtype=float).ravel()
    live = log_magnitudes > -np.inf
    if not live.any():
        return LogComplex.zero()
    log_magnitudes, phases = log_magnitudes[live], phases[live]
    ref = float(log_magnitudes.max())
    scaled = np.exp(log_magnitudes - ref)
    cos, sin = _units(phases)
    re = math.fsum((scaled * cos).tolist())
    im = math.fsum((scaled * sin).tolist())
    # below the rounding floor of the terms themselves the sum is
    # indistinguishable from an exact cancellation
    floor = _CANCELLATION_ULPS * _EPS * math.fsum(scaled.tolist())
    if math.hypot(re, im) <= floor:
        return LogComplex.zero()
    return LogComplex(ref + math.log(math.hypot(re, im)), math.atan2(im, re))


def choose_exact(n: int, k: int) -> int:
    """Binomial coefficient, zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"choose_exact needs n >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def exact_sum(terms: Sequence[GaussianRational]) -> GaussianRational:
    """Sum exact terms over a single common denominator."""
    if not terms:
        return GaussianRational(0)
    den = 1
    for t in terms:
        den = den * t.denominator // math.gcd(den, t.denominator)
    re = sum(t.numerator_real * (den // t.denominator) for t in terms)
    im = sum(t.numerator_imag * (den // t.denominator) for t in terms)
    return GaussianRational(re, im, den)
