"""Compartment models for datum survivability in unattended WSNs.

Seven model variants over the compartments S (susceptible to receive the
datum), I (holding/transmitting it) and R (compromised / dead / retired,
depending on the scenario), plus sleeping counterparts for the scheduled
variants:

    SIR_BASIC        ds = -b i s            di = b i s - c i          dr = c i
    SIS              ds = b i - a s i       di = a s i - b i          (two compartments;
                                                                       a infects, b cures)
    SIR_DEATH_SIT2   ds = -b i s - m s      di = b i s - c i          dr = c i + m s
    SIR_DEATH_SIT13  ds = -b i s - m s      di = b i s - c i - m' i   dr = c i - m r
    SIR_SLEEP        six compartments, exchange rates l_sleep / l_wake, death m on
                     the awake compartments only
    SIR_VITAL        ds = l - b i s - m s   di = b i s - (c+m) i      dr = c i - m r
    SIR_GLOBAL       SIR_VITAL plus sleeping compartments exchanged at k_sleep / k_wake

All quantities are fractions of the reference population.  Everything in
this module is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

__all__ = [
    "Variant",
    "RateParams",
    "ModelSpec",
    "CompartmentState",
    "Classification",
    "EquilibriumReport",
    "PeakResult",
    "vector_field",
    "reproduction_number",
    "spread_threshold",
    "final_size",
    "peak_infected",
    "equilibria",
    "jacobian",
]

#: Eigenvalue real parts within +-EPS_EIGENVALUE of zero count as zero.
EPS_EIGENVALUE = 1e-9

#: Lower end of the final-size bisection bracket (keeps ln() finite).
FINAL_SIZE_BRACKET_FLOOR = 1e-12

#: Bisection stops once |relation(s_inf)| falls below this residual.
FINAL_SIZE_RESIDUAL = 1e-10

COMPARTMENT_NAMES = ("s", "i", "r", "s_sleep", "i_sleep", "r_sleep")


class Variant(Enum):
    """Which compartment model the rate parameters feed."""

    SIR_BASIC = "sir-basic"
    SIS = "sis"
    SIR_DEATH_SIT2 = "sir-death-sit2"
    SIR_DEATH_SIT13 = "sir-death-sit13"
    SIR_SLEEP = "sir-sleep"
    SIR_VITAL = "sir-vital"
    SIR_GLOBAL = "sir-global"


#: Fields of RateParams each variant actually reads.
REQUIRED_RATES = {
    Variant.SIR_BASIC: ("b", "c"),
    Variant.SIS: ("a", "b"),
    Variant.SIR_DEATH_SIT2: ("b", "c", "m"),
    Variant.SIR_DEATH_SIT13: ("b", "c", "m"),
    Variant.SIR_SLEEP: ("b", "c", "m", "l_sleep", "l_wake"),
    Variant.SIR_VITAL: ("b", "c", "m", "l"),
    Variant.SIR_GLOBAL: ("b", "c", "m", "l", "k_sleep", "k_wake"),
}

#: Variants whose state uses the three sleeping compartments.
SIX_COMPARTMENT_VARIANTS = (Variant.SIR_SLEEP, Variant.SIR_GLOBAL)


@dataclass(frozen=True)
class RateParams:
    """Per-unit-time rates shared by all model variants.

    b        transmission rate (contact rate; for an n-node network forwarding
             with probability alpha/n this is alpha -- the conversion is the
             caller's concern).  In the SIS variant b is the cure rate.
    c        attack/recovery rate; if the datum survives D time units under
             attack then c = 1/D (D itself is not stored).
    m        natural death rate.
    m_prime  death rate of informed nodes (Situations 1/3); defaults to m.
    l        birth/awakening rate, as a fraction of the reference population
             per unit time.
    l_sleep  sleep-model exchange rate applied to the sleeping compartments
             (flux sleeping -> awake; the l of the sleep model).
    l_wake   sleep-model exchange rate applied to the awake compartments
             (flux awake -> sleeping; the l' of the sleep model).
    k_sleep, k_wake
             same two roles for the global model (its k and k').  The 0.1
             defaults are demo values only: the equilibria do not depend on
             them (the sleeping compartments vanish there).
    a        SIS infection rate.
    """

    b: float = 0.0
    c: float = 0.0
    m: float = 0.0
    m_prime: float | None = None
    l: float = 0.0
    l_sleep: float = 0.0
    l_wake: float = 0.0
    k_sleep: float = 0.1
    k_wake: float = 0.1
    a: float = 0.0

    @property
    def m_prime_effective(self) -> float:
        return self.m if self.m_prime is None else self.m_prime


@dataclass(frozen=True)
class ModelSpec:
    """A model variant plus the rates it needs; validated on construction."""

    variant: Variant
    params: RateParams

    def __post_init__(self) -> None:
        names = REQUIRED_RATES[self.variant]
        for name in names:
            value = getattr(self.params, name)
            if not math.isfinite(value):
                raise ValueError(f"rate {name!r} must be finite for {self.variant.value}")
            if value < 0:
                raise ValueError(f"rate {name!r} must be >= 0, got {value}")
        if self.variant is Variant.SIR_DEATH_SIT13:
            mp = self.params.m_prime_effective
            if not math.isfinite(mp) or mp < 0:
                raise ValueError(f"rate 'm_prime' must be finite and >= 0, got {mp}")

    @property
    def dim(self) -> int:
        """Number of active state components (3, or 6 with sleeping)."""
        return 6 if self.variant in SIX_COMPARTMENT_VARIANTS else 3


@dataclass(frozen=True)
class CompartmentState:
    """Fractional populations at an instant.

    s_sleep/i_sleep/r_sleep are used only by the SIR_SLEEP and SIR_GLOBAL
    variants and stay 0 elsewhere.
    """

    s: float
    i: float
    r: float = 0.0
    s_sleep: float = 0.0
    i_sleep: float = 0.0
    r_sleep: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.s, self.i, self.r, self.s_sleep, self.i_sleep, self.r_sleep],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y) -> "CompartmentState":
        s, i, r, ss, ii, rr = (float(v) for v in y)
        return cls(s, i, r, ss, ii, rr)

    def total(self) -> float:
        return self.s + self.i + self.r + self.s_sleep + self.i_sleep + self.r_sleep


def _check_state(spec: ModelSpec, state: CompartmentState) -> None:
    used = COMPARTMENT_NAMES[: spec.dim]
    for name in used:
        value = getattr(state, name)
        if not math.isfinite(value):
            raise ValueError(f"state component {name!r} must be finite, got {value}")


class Classification(Enum):
    ATTRACTIVE = "attractive"
    NON_ATTRACTIVE = "non-attractive"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class EquilibriumReport:
    """A fixed point with its Jacobian spectrum and stability verdict.

    Eigenvalues along inert directions (a conserved total, the unused r
    compartment of SIS, or the i=0 equilibrium line of the basic model) are
    excluded from the classification and explained in ``notes``.
    """

    point: CompartmentState
    eigenvalues: tuple[complex, ...]
    classification: Classification
    label: str
    notes: tuple[str, ...] = field(default=())


class PeakResult(NamedTuple):
    """Peak informed fraction; ``spreading`` is False in the monotone regime
    (transmission too slow: the maximum is the initial value, at t=0)."""

    value: float
    spreading: bool


# ---------------------------------------------------------------------------
# Vector fields and Jacobians
# ---------------------------------------------------------------------------

def vector_field(spec: ModelSpec, state: CompartmentState) -> CompartmentState:
    """Time derivative of ``state`` under the chosen variant.

    This is the readable reference implementation; the integration kernels
    mirror it operation for operation.
    """
    _check_state(spec, state)
    p = spec.params
    s, i, r = state.s, state.i, state.r
    ss, ii, rr = state.s_sleep, state.i_sleep, state.r_sleep
    v = spec.variant

    if v is Variant.SIR_BASIC:
        return CompartmentState(-(p.b * i * s), p.b * i * s - p.c * i, p.c * i)
    if v is Variant.SIS:
        # a infects, b cures; r is unused and stays constant.
        return CompartmentState(p.b * i - p.a * s * i, p.a * s * i - p.b * i, 0.0)
    if v is Variant.SIR_DEATH_SIT2:
        return CompartmentState(
            -(p.b * i * s) - p.m * s,
            p.b * i * s - p.c * i,
            p.c * i + p.m * s,
        )
    if v is Variant.SIR_DEATH_SIT13:
        mp = p.m_prime_effective
        return CompartmentState(
            -(p.b * i * s) - p.m * s,
            p.b * i * s - p.c * i - mp * i,
            p.c * i - p.m * r,
        )
    if v is Variant.SIR_SLEEP:
        lw, lv = p.l_sleep, p.l_wake  # lw: sleeping->awake, lv: awake->sleeping
        return CompartmentState(
            lw * ss - lv * s - p.b * i * s - p.m * s,
            lw * ii - lv * i + p.b * i * s - p.c * i - p.m * i,
            lw * rr - lv * r + p.c * i - p.m * r,
            -(lw * ss) + lv * s,
            -(lw * ii) + lv * i,
            -(lw * rr) + lv * r,
        )
    if v is Variant.SIR_VITAL:
        return CompartmentState(
            p.l - p.b * i * s - p.m * s,
            p.b * i * s - p.c * i - p.m * i,
            p.c * i - p.m * r,
        )
    if v is Variant.SIR_GLOBAL:
        kw, kv = p.k_sleep, p.k_wake
        return CompartmentState(
            p.l + kw * ss - kv * s - p.b * i * s - p.m * s,
            kw * ii - kv * i + p.b * i * s - p.c * i - p.m * i,
            kw * rr - kv * r + p.c * i - p.m * r,
            -(kw * ss) + kv * s,
            -(kw * ii) + kv * i,
            -(kw * rr) + kv * r,
        )
    raise AssertionError(f"unhandled variant {v}")


def jacobian(spec: ModelSpec, state: CompartmentState) -> np.ndarray:
    """Analytic Jacobian of the vector field at ``state``.

    Returns a (3,3) matrix over (s,i,r) or (6,6) over
    (s,i,r,s_sleep,i_sleep,r_sleep) for the sleeping variants.
    """
    _check_state(spec, state)
    p = spec.params
    s, i = state.s, state.i
    v = spec.variant

    if v is Variant.SIR_BASIC:
        return np.array([
            [-p.b * i, -p.b * s, 0.0],
            [p.b * i, p.b * s - p.c, 0.0],
            [0.0, p.c, 0.0],
        ])
    if v is Variant.SIS:
        return np.array([
            [-p.a * i, p.b - p.a * s, 0.0],
            [p.a * i, p.a * s - p.b, 0.0],
            [0.0, 0.0, 0.0],
        ])
    if v is Variant.SIR_DEATH_SIT2:
        return np.array([
            [-p.b * i - p.m, -p.b * s, 0.0],
            [p.b * i, p.b * s - p.c, 0.0],
            [p.m, p.c, 0.0],
        ])
    if v is Variant.SIR_DEATH_SIT13:
        mp = p.m_prime_effective
        return np.array([
            [-p.b * i - p.m, -p.b * s, 0.0],
            [p.b * i, p.b * s - p.c - mp, 0.0],
            [0.0, p.c, -p.m],
        ])
    if v is Variant.SIR_VITAL:
        return np.array([
            [-p.b * i - p.m, -p.b * s, 0.0],
            [p.b * i, p.b * s - p.c - p.m, 0.0],
            [0.0, p.c, -p.m],
        ])
    if v in SIX_COMPARTMENT_VARIANTS:
        if v is Variant.SIR_SLEEP:
            lw, lv = p.l_sleep, p.l_wake
        else:
            lw, lv = p.k_sleep, p.k_wake
        j = np.zeros((6, 6))
        j[0, 0] = -lv - p.b * i - p.m
        j[0, 1] = -p.b * s
        j[0, 3] = lw
        j[1, 0] = p.b * i
        j[1, 1] = -lv + p.b * s - p.c - p.m
        j[1, 4] = lw
        j[2, 1] = p.c
        j[2, 2] = -lv - p.m
        j[2, 5] = lw
        j[3, 0] = lv
        j[3, 3] = -lw
        j[4, 1] = lv
        j[4, 4] = -lw
        j[5, 2] = lv
        j[5, 5] = -lw
        return j
    raise AssertionError(f"unhandled variant {v}")


# ---------------------------------------------------------------------------
# Thresholds and closed forms (basic model)
# ---------------------------------------------------------------------------

def reproduction_number(spec: ModelSpec) -> float | None:
    """Basic reproduction number, or None where the variant has no meaningful
    threshold (the death/sleep variants converge to extinction regardless).

    SIR_BASIC: b/c.  SIR_VITAL and SIR_GLOBAL: b*l / (m*(c+m)).
    """
    p = spec.params
    if spec.variant is Variant.SIR_BASIC:
        if p.c == 0:
            raise ValueError("reproduction number b/c undefined: c is zero")
        return p.b / p.c
    if spec.variant in (Variant.SIR_VITAL, Variant.SIR_GLOBAL):
        if p.m == 0 or p.c + p.m == 0:
            raise ValueError("reproduction number b*l/(m*(c+m)) undefined: zero denominator")
        return p.b * p.l / (p.m * (p.c + p.m))
    return None


def spread_threshold(spec: ModelSpec, s0: float) -> bool:
    """Whether the datum spreads from an initial susceptible fraction s0.

    True iff the typical transmission time 1/b is strictly below s0/c, i.e.
    b*s0 > c (equivalently R0 > 1/s0).  Basic variant only.
    """
    if spec.variant is not Variant.SIR_BASIC:
        raise ValueError("spread threshold applies to the basic SIR variant only")
    if not 0.0 <= s0 <= 1.0:
        raise ValueError(f"s0 must be in [0, 1], got {s0}")
    return spec.params.b * s0 > spec.params.c


def _final_size_relation(x: float, s0: float, r0_init: float, ratio: float) -> float:
    return 1.0 - r0_init - x + ratio * math.log(x / s0)


def final_size(spec: ModelSpec, s0: float, r0_init: float = 0.0) -> float:
    """Limiting susceptible fraction s(inf) of the basic model.

    Root of  1 - r(0) - x + (c/b)*ln(x/s0) = 0  located by bisection on
    (1e-12, min(s0, c/b)), the interval where the root is unique.  The
    residual at the returned value is <= 1e-10.
    """
    if spec.variant is not Variant.SIR_BASIC:
        raise ValueError("final size applies to the basic SIR variant only")
    p = spec.params
    if s0 <= 0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    if not 0.0 <= r0_init < 1.0:
        raise ValueError(f"r0_init must be in [0, 1), got {r0_init}")
    if s0 + r0_init > 1.0 + 1e-12:
        raise ValueError("s0 + r0_init exceeds 1: no room for an informed fraction")
    if p.b == 0:
        return s0  # no transmission: s never moves
    ratio = p.c / p.b

    lo = FINAL_SIZE_BRACKET_FLOOR
    hi = min(s0, ratio)
    f_hi = _final_size_relation(hi, s0, r0_init, ratio)
    if abs(f_hi) <= FINAL_SIZE_RESIDUAL:
        return hi
    f_lo = _final_size_relation(lo, s0, r0_init, ratio)
    if f_lo * f_hi > 0:
        raise ArithmeticError(
            f"no sign change on ({lo}, {hi}): relation is {f_lo:.3e} .. {f_hi:.3e}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = _final_size_relation(mid, s0, r0_init, ratio)
        if abs(f_mid) <= FINAL_SIZE_RESIDUAL:
            return mid
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    raise ArithmeticError("final-size bisection did not reach the residual target")


def peak_infected(spec: ModelSpec, s0: float, r0_init: float = 0.0) -> PeakResult:
    """Maximum informed fraction along the basic-model trajectory started at
    (s0, 1-s0-r0_init, r0_init).

    In the spreading regime (b*s0 > c) this is the closed form
    1 - r(0) - (c/b)*(1 + ln(s0*b/c)); otherwise i is monotone decreasing and
    the peak is the initial value i(0), flagged via ``spreading=False``.
    """
    if spec.variant is not Variant.SIR_BASIC:
        raise ValueError("peak applies to the basic SIR variant only")
    p = spec.params
    if s0 <= 0:
        raise ValueError(f"s0 must be > 0, got {s0}")
    if not 0.0 <= r0_init < 1.0:
        raise ValueError(f"r0_init must be in [0, 1), got {r0_init}")
    i0 = 1.0 - r0_init - s0
    if i0 < -1e-12:
        raise ValueError("s0 + r0_init exceeds 1: no room for an informed fraction")
    if spread_threshold(spec, s0):
        ratio = p.c / p.b
        value = 1.0 - r0_init - ratio * (1.0 + math.log(s0 / ratio))
        return PeakResult(value, True)
    return PeakResult(max(i0, 0.0), False)


# ---------------------------------------------------------------------------
# Equilibria
# ---------------------------------------------------------------------------

def _eigenvalues(spec: ModelSpec, point: CompartmentState) -> tuple[complex, ...]:
    eig = np.linalg.eigvals(jacobian(spec, point))
    # Sort by real part, then imaginary, for stable reporting.
    order = np.lexsort((eig.imag, eig.real))
    return tuple(complex(e) for e in eig[order])


def _classify(
    eigenvalues: tuple[complex, ...], n_inert: int, inert_note: str | None
) -> tuple[Classification, tuple[str, ...]]:
    notes: list[str] = []
    zeros = [e for e in eigenvalues if abs(e.real) <= EPS_EIGENVALUE]
    transverse = [e for e in eigenvalues if abs(e.real) > EPS_EIGENVALUE]
    if n_inert and inert_note:
        notes.append(inert_note)
    if len(zeros) > n_inert:
        # A zero we cannot attribute to an inert direction: genuinely marginal.
        return Classification.MARGINAL, tuple(notes)
    if any(e.real > EPS_EIGENVALUE for e in transverse):
        return Classification.NON_ATTRACTIVE, tuple(notes)
    if all(e.real < -EPS_EIGENVALUE for e in transverse) and transverse:
        return Classification.ATTRACTIVE, tuple(notes)
    return Classification.MARGINAL, tuple(notes)


def _report(
    spec: ModelSpec,
    point: CompartmentState,
    label: str,
    n_inert: int = 0,
    inert_note: str | None = None,
    extra_notes: tuple[str, ...] = (),
) -> EquilibriumReport:
    eigs = _eigenvalues(spec, point)
    cls, notes = _classify(eigs, n_inert, inert_note)
    return EquilibriumReport(point, eigs, cls, label, notes + extra_notes)


CONSERVED_NOTE = "zero eigenvalue along the conserved total (conserved-direction)"


def equilibria(spec: ModelSpec) -> list[EquilibriumReport]:
    """Fixed points of the variant with spectra and stability verdicts.

    Raises ValueError when a rate appearing in a denominator (m for the
    vital/global variants, k_sleep for the global sleeping balance) is zero.
    """
    p = spec.params
    v = spec.variant

    if v is Variant.SIR_BASIC:
        line = "every (s, 0, 1-s) is an equilibrium; transverse eigenvalue b*s-c flips sign at s=c/b"
        return [
            _report(spec, CompartmentState(1.0, 0.0, 0.0), "information-free (s=1 end of the i=0 line)",
                    n_inert=2, inert_note=CONSERVED_NOTE + "; second zero along the equilibrium line",
                    extra_notes=(line,)),
            _report(spec, CompartmentState(0.0, 0.0, 1.0), "depleted (s=0 end of the i=0 line)",
                    n_inert=2, inert_note=CONSERVED_NOTE + "; second zero along the equilibrium line",
                    extra_notes=(line,)),
        ]

    if v is Variant.SIS:
        # Totals normalized to 1; r is unused.
        inert = CONSERVED_NOTE + "; second zero along the unused r direction"
        out = [_report(spec, CompartmentState(1.0, 0.0, 0.0), "information-free",
                       n_inert=2, inert_note=inert)]
        if p.a > p.b:
            out.append(_report(
                spec, CompartmentState(p.b / p.a, 1.0 - p.b / p.a, 0.0), "endemic",
                n_inert=2, inert_note=inert))
        return out

    if v is Variant.SIR_DEATH_SIT2:
        return [_report(spec, CompartmentState(0.0, 0.0, 1.0), "all-dead",
                        n_inert=1, inert_note=CONSERVED_NOTE)]

    if v is Variant.SIR_DEATH_SIT13:
        return [_report(spec, CompartmentState(0.0, 0.0, 0.0), "extinct")]

    if v is Variant.SIR_SLEEP:
        return [_report(spec, CompartmentState(0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                        "extinct (data loss)")]

    if v in (Variant.SIR_VITAL, Variant.SIR_GLOBAL):
        if p.m == 0:
            raise ValueError("equilibria undefined: m is zero (s* = l/m)")
        if v is Variant.SIR_GLOBAL and p.k_sleep == 0:
            raise ValueError("equilibria undefined: k_sleep is zero (sleeping balance)")
        sleep_ratio = (p.k_wake / p.k_sleep) if v is Variant.SIR_GLOBAL else 0.0

        s_free = p.l / p.m
        free_point = (
            CompartmentState(s_free, 0.0, 0.0, sleep_ratio * s_free, 0.0, 0.0)
            if v is Variant.SIR_GLOBAL
            else CompartmentState(s_free, 0.0, 0.0)
        )
        out = [_report(spec, free_point, "information-free")]

        r0 = reproduction_number(spec)
        if r0 is not None and r0 > 1.0:
            if p.b == 0 or p.c + p.m == 0:
                raise ValueError("endemic equilibrium undefined: zero denominator")
            s_star = (p.c + p.m) / p.b
            i_star = p.l / (p.c + p.m) - p.m / p.b  # = (b*l - m*(c+m)) / (b*(c+m))
            r_star = (p.c / p.m) * i_star
            endemic_point = (
                CompartmentState(s_star, i_star, r_star,
                                 sleep_ratio * s_star, sleep_ratio * i_star, sleep_ratio * r_star)
                if v is Variant.SIR_GLOBAL
                else CompartmentState(s_star, i_star, r_star)
            )
            out.append(_report(spec, endemic_point, "endemic"))
        return out

    raise AssertionError(f"unhandled variant {v}")
