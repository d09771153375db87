"""Stability certificates for the dc link of class-A converters.

All results work on the scalar dc-link dynamics with converter power as
input, so they apply to each class-A converter of a larger grid on its own
(:func:`per_converter_certificates`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from gfcstab.equilibrium import (
    EquilibriumReport,
    _f,
    max_load,
    solve_equilibria,
)
from gfcstab.errors import CertificateRefused, DomainError, ParameterError
from gfcstab.model import ConverterParams, derived_quantities


@dataclass(frozen=True)
class Condition:
    """One checked inequality ``lhs <relation> rhs``."""

    name: str
    lhs: float
    relation: str
    rhs: float
    holds: bool

    def describe(self) -> str:
        status = "ok" if self.holds else "violated"
        return f"{self.name}: {self.lhs:.9g} {self.relation} {self.rhs:.9g} ({status})"


def _cond(name, lhs, relation, rhs) -> Condition:
    ops = {
        ">": lambda a, b: a > b,
        ">=": lambda a, b: a >= b,
        "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b,
        "==": lambda a, b: a == b,
    }
    return Condition(name, float(lhs), relation, float(rhs), bool(ops[relation](lhs, rhs)))


def _require(cert: str, conditions: list[Condition]) -> tuple[Condition, ...]:
    if not all(c.holds for c in conditions):
        raise CertificateRefused(cert, conditions)
    return tuple(conditions)


@dataclass(frozen=True)
class RoaCert:
    lower: float
    upper: float
    equilibrium: float
    conditions: tuple[Condition, ...] = field(repr=False)

    def contains(self, x0: float) -> bool:
        return self.lower < x0 < self.upper


@dataclass(frozen=True)
class ExpRateCert:
    m: float
    decay_time_constant: float
    equilibrium: float
    conditions: tuple[Condition, ...] = field(repr=False)

    def envelope(self, y0: float, t, C_c: float):
        """Decay envelope ``|y0| exp(m t / C_c)`` of the deviation."""
        import numpy as np

        return abs(y0) * np.exp(self.m * np.asarray(t) / C_c)


@dataclass(frozen=True)
class LpBoundCert:
    gain: float
    beta: float
    p: float
    r: float
    r_v: float
    input_bound: float
    m: float
    conditions: tuple[Condition, ...] = field(repr=False)

    def bound(self, v_norm: float) -> float:
        """Upper bound on the truncated output norm for input norm ``v_norm``."""
        return self.gain * v_norm + self.beta


@dataclass(frozen=True)
class InstabilityCert:
    holds: bool
    r: float
    worst_margin: float
    sup_power: float
    x_at_sup: float
    equilibrium: float


def _report(u_bar: float, cp: ConverterParams) -> EquilibriumReport:
    return solve_equilibria(u_bar, cp)


def roa_certificate(u_bar: float, cp: ConverterParams) -> RoaCert:
    """Region of attraction ``(x_bar_2, x_tilde)`` of the high equilibrium.

    Raises :class:`CertificateRefused` naming the violated side condition
    when the characteristic is not the usual one or the proof's
    inequalities fail.
    """
    rep = _report(u_bar, cp)
    x_m, x_til = cp.x_m, cp.x_tilde
    conds = [
        Condition("characteristic case is (a)", 0.0, "==", 0.0, rep.characteristic_case == "a"),
        Condition("two distinct equilibria exist", u_bar, "<", rep.u_max,
                  rep.x_bar_2 is not None and not rep.merged),
    ]
    if rep.x_bar_2 is None or rep.merged:
        raise CertificateRefused("RoaCert", conds)
    x1, x2 = rep.x_bar_1, rep.x_bar_2
    f2_vertex = math.inf if cp.G_c == 0 else cp.i_dc_max / (2 * cp.G_c)
    conds += [
        _cond("x_bar_1 > x_m", x1, ">", x_m),
        _cond("x_m > x_tilde/2", x_m, ">", x_til / 2),
        # V1 decreases on the whole linear branch iff y > x_tilde - 2 x_bar_1 there
        _cond("x_m - x_bar_1 > x_tilde - 2 x_bar_1", x_m - x1, ">", x_til - 2 * x1),
        _cond("i_dc_max/(2 G_c) > x_bar_2", f2_vertex, ">", x2),
    ]
    return RoaCert(lower=x2, upper=x_til, equilibrium=x1, conditions=_require("RoaCert", conds))


def _high_equilibrium(u_bar: float, cp: ConverterParams) -> float | None:
    if u_bar == 0:
        return cp.x_tilde
    if u_bar < 0:
        raise ParameterError(f"u_bar must be non-negative, got {u_bar}")
    return _report(u_bar, cp).x_bar_1


def exp_rate(u_bar: float, cp: ConverterParams) -> ExpRateCert:
    x1 = _high_equilibrium(u_bar, cp)
    if x1 is None:
        raise CertificateRefused(
            "ExpRateCert", [Condition("equilibrium exists", u_bar, "<=", max_load(cp)[0], False)]
        )
    m = -(cp.G_c + cp.k_c) + u_bar / (x1 * cp.x_m)
    conds = _require("ExpRateCert", [_cond("m < 0", m, "<", 0.0)])
    return ExpRateCert(m=m, decay_time_constant=cp.C_c / (2 * abs(m)), equilibrium=x1, conditions=conds)


def lp_bound(u_bar: float, cp: ConverterParams, p: float, y0: float, v_sup: float,
             r: float | None = None, r_v: float | None = None) -> LpBoundCert:
    """Small-signal finite-gain L_p bound for the dc-voltage deviation.

    ``r`` defaults to the largest ball around ``x_bar_1`` inside the linear
    branch; ``r_v`` defaults to the converter headroom ``P_c_max - P_c*``.
    """
    if not p >= 1:
        raise ParameterError(f"norm order must be in [1, inf], got {p}")
    rate = exp_rate(u_bar, cp)
    x1, m, x_m = rate.equilibrium, rate.m, cp.x_m
    upper = cp.x_tilde - x1
    r_max = min(x1 - x_m, math.nextafter(upper, 0.0))
    r = r_max if r is None else float(r)
    r_v = derived_quantities(cp).P_c_max_dev if r_v is None else float(r_v)
    admissible = min(r_v, abs(m) * x_m * r)
    conds = _require("LpBoundCert", [
        _cond("r > 0", r, ">", 0.0),
        _cond("ball inside linear branch: r <= x_bar_1 - x_m", r, "<=", x1 - x_m),
        _cond("ball inside domain: r < x_tilde - x_bar_1", r, "<", upper),
        _cond("|y0| <= r", abs(y0), "<=", r),
        _cond("sup|v| <= min(r_v, |m| x_m r)", v_sup, "<=", admissible),
    ])
    if math.isinf(p):
        beta = abs(y0)
    else:
        beta = (cp.C_c / (p * abs(m))) ** (1.0 / p) * abs(y0)
    return LpBoundCert(gain=1.0 / (abs(m) * x_m), beta=beta, p=p, r=r, r_v=r_v,
                       input_bound=admissible, m=m, conditions=conds)


def _piece_points(a: float, b: float, vertex: float) -> list[float]:
    pts = [a, b]
    if a < vertex < b:
        pts.append(vertex)
    return pts


def chetaev_instability(u_bar: float, cp: ConverterParams, x_bar_1: float) -> InstabilityCert:
    """Check ``u_bar > f(x)`` for every x in ``[x_bar_1 - r, x_bar_1)``.

    ``f`` is piecewise a concave parabola, so its supremum on each piece is
    at an end point or the vertex; the check is exact, not sampled.
    """
    x_m, x_til = cp.x_m, cp.x_tilde
    if not x_m <= x_bar_1 < x_til:
        raise DomainError(f"x_bar_1 = {x_bar_1} is outside [x_m, x_tilde) = [{x_m}, {x_til})")
    r = min(x_bar_1, x_til - x_bar_1)
    lo, hi = x_bar_1 - r, x_bar_1
    f2_vertex = math.inf if cp.G_c == 0 else cp.i_dc_max / (2 * cp.G_c)
    candidates: list[float] = []
    if lo < x_m:
        candidates += _piece_points(lo, min(hi, x_m), f2_vertex)
    if hi > x_m:
        candidates += _piece_points(max(lo, x_m), hi, x_til / 2)
    values = [(_f(x, cp) if x > 0 else 0.0, x) for x in candidates]
    sup, x_sup = max(values)
    attained = any(v == sup and x < hi for v, x in values)
    holds = u_bar > sup or (not attained and u_bar >= sup)
    return InstabilityCert(holds=holds, r=r, worst_margin=u_bar - sup, sup_power=sup,
                           x_at_sup=x_sup, equilibrium=x_bar_1)


def _dc_ydot(y: float, x_eq: float, u_bar: float, cp: ConverterParams) -> float:
    x = x_eq + y
    return (-cp.G_c * x + _sat_current(x, cp) - u_bar / x) / cp.C_c


def _sat_current(x: float, cp: ConverterParams) -> float:
    return max(-cp.i_dc_max, min(cp.i_dc_max, cp.k_c * (cp.v_dc_star - x)))


def lyapunov_eval(which: str, y: float, cp: ConverterParams, u_bar: float,
                  equilibrium: float | None = None) -> tuple[float, float]:
    """Value and flow derivative of V1..V4 at deviation ``y`` (unforced).

    V1 and V4 are centred on ``x_bar_1``, V2 and V3 on ``x_bar_2``.
    """
    if which not in ("V1", "V2", "V3", "V4"):
        raise ParameterError(f"unknown Lyapunov function {which!r}")
    if equilibrium is None:
        rep = _report(u_bar, cp)
        equilibrium = rep.x_bar_1 if which in ("V1", "V4") else rep.x_bar_2
        if equilibrium is None:
            raise DomainError(f"no equilibrium for u_bar = {u_bar}")
    x_eq = equilibrium
    C = cp.C_c
    if which == "V1":
        if not (cp.x_m - x_eq <= y < cp.x_tilde - x_eq):
            raise DomainError(f"y = {y} outside [x_m - x_bar_1, x_tilde - x_bar_1)")
        return 0.5 * C * y * y, C * y * _dc_ydot(y, x_eq, u_bar, cp)
    if which in ("V2", "V3"):
        if not (-x_eq < y <= cp.x_m - x_eq):
            raise DomainError(f"y = {y} outside (-x_bar_2, x_m - x_bar_2]")
        sign = 1.0 if which == "V2" else -1.0
        x = y + x_eq
        value = sign * 0.5 * C * (x_eq * x_eq - x * x)
        return value, -sign * C * x * _dc_ydot(y, x_eq, u_bar, cp)
    if not (-x_eq < y < cp.x_tilde - x_eq):
        raise DomainError(f"y = {y} outside (-x_bar_1, x_tilde - x_bar_1)")
    x = y + x_eq
    return 0.5 * C * (x_eq * x_eq - x * x), -C * x * _dc_ydot(y, x_eq, u_bar, cp)


@dataclass(frozen=True)
class ConverterCertificates:
    index: int
    u_bar: float
    roa: RoaCert | None
    exp_rate: ExpRateCert | None
    instability: InstabilityCert
    refusals: dict


def per_converter_certificates(converters: Sequence[ConverterParams], u_bars: Sequence[float],
                               x_refs: Sequence[float | None] | None = None
                               ) -> list[ConverterCertificates]:
    """Certificates for each class-A converter of a fleet, independently.

    ``x_refs`` gives the operating point tested for instability (e.g. the
    equilibrium held before a load step). It defaults to the converter's
    own high equilibrium, or the peak of its characteristic when the load
    exceeds what the converter can carry.
    """
    if len(converters) != len(u_bars):
        raise ParameterError("one load per converter is required")
    x_refs = list(x_refs) if x_refs is not None else [None] * len(converters)
    out = []
    for i, (cp, u, x_ref) in enumerate(zip(converters, u_bars, x_refs)):
        refusals = {}
        roa = rate = None
        try:
            roa = roa_certificate(u, cp)
        except CertificateRefused as exc:
            refusals["roa"] = str(exc)
        try:
            rate = exp_rate(u, cp)
        except CertificateRefused as exc:
            refusals["exp_rate"] = str(exc)
        if x_ref is None:
            x_ref = rate.equilibrium if rate is not None else max_load(cp)[1]
            x_ref = min(max(x_ref, cp.x_m), math.nextafter(cp.x_tilde, 0.0))
        instab = chetaev_instability(u, cp, x_ref)
        out.append(ConverterCertificates(i, u, roa, rate, instab, refusals))
    return out
