"""Equilibria of the class-A dc link in the converter power / dc voltage plane.

In steady state the dc link of a class-A converter delivers

    u(x) = -G_c x^2 + x * sat(k_c (x* - x), i_dc_max)

which is the concave parabola ``f1`` on the linear branch (x >= x_m) and
the concave parabola ``f2`` on the current-limited branch (x < x_m). Both
are solved in closed form here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from gfcstab.errors import DomainError, ParameterError
from gfcstab.model import ConverterParams, sat

ROOT_TOL = 1e-9  # relative to x*, see _merge_boundary


def _f(x: float, cp: ConverterParams) -> float:
    return -cp.G_c * x * x + x * sat(cp.k_c * (cp.v_dc_star - x), cp.i_dc_max)


def f1(x: float, cp: ConverterParams) -> float:
    return -cp.G_c * x * x + cp.k_c * x * (cp.v_dc_star - x)


def f2(x: float, cp: ConverterParams) -> float:
    return -cp.G_c * x * x + x * cp.i_dc_max


def branch_of(x: float, cp: ConverterParams) -> str:
    return "f1" if abs(cp.k_c * (cp.v_dc_star - x)) <= cp.i_dc_max else "f2"


def characteristic_power(x: float, cp: ConverterParams) -> float:
    """Steady-state converter power (W) the dc link sustains at voltage ``x``."""
    if not x > 0:
        raise DomainError(f"dc voltage must be positive, got {x}")
    return _f(x, cp)


def _f2_vertex(cp: ConverterParams) -> float:
    return math.inf if cp.G_c == 0 else cp.i_dc_max / (2.0 * cp.G_c)


def _candidates(cp: ConverterParams) -> list[tuple[float, str]]:
    """Possible maximisers of the characteristic on (0, x_tilde)."""
    x_m, x_til = cp.x_m, cp.x_tilde
    if x_til <= x_m:
        xv2 = _f2_vertex(cp)
        if xv2 < x_til:
            return [(xv2, "f2_vertex")]
        return [(x_til, "boundary")]
    out = [(x_m, "x_m")]
    xv2 = _f2_vertex(cp)
    if 0 < xv2 < x_m:
        out.append((xv2, "f2_vertex"))
    xv1 = x_til / 2.0
    if x_m < xv1 < x_til:
        out.append((xv1, "f1_vertex"))
    return out


def _argmax(cp: ConverterParams) -> tuple[float, float, str]:
    best = None
    for x, where in _candidates(cp):
        val = _f(x, cp)
        if best is None or val > best[1]:
            best = (x, val, where)
    return best


_CASE = {"x_m": "a", "f2_vertex": "b", "f1_vertex": "c"}


def classify_characteristic(cp: ConverterParams) -> str:
    """Shape of the power-voltage characteristic.

    ``a`` peak at the kink x_m (the usual shape), ``b`` peak inside the
    current-limited branch, ``c`` peak inside the linear branch, ``d``
    degenerate: x_tilde <= x_m so the linear branch never appears.
    """
    if cp.x_tilde <= cp.x_m:
        return "d"
    return _CASE[_argmax(cp)[2]]


def max_load(cp: ConverterParams) -> tuple[float, float]:
    """Peak of the characteristic over (0, x_tilde) and where it occurs.

    In the degenerate case without interior peak this is the supremum at
    the open end x_tilde.
    """
    x, val, _ = _argmax(cp)
    return val, x


@dataclass(frozen=True)
class EquilibriumReport:
    u_bar: float
    characteristic_case: str
    u_max: float
    x_at_max: float
    roots: tuple[tuple[float, str], ...]
    x_bar_1: float | None = None
    branch_1: str | None = None
    x_bar_2: float | None = None
    branch_2: str | None = None
    merged: bool = False

    @property
    def exists(self) -> bool:
        return self.x_bar_1 is not None


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of a x^2 - b x + c with b > 0, cancellation-free."""
    if a == 0:
        return [c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return []
    q = 0.5 * (b + math.sqrt(disc))
    return [q / a, c / q]


def solve_equilibria(u_bar: float, cp: ConverterParams) -> EquilibriumReport:
    """Both dc-link equilibria for converter power ``u_bar`` (W)."""
    if not u_bar > 0:
        raise ParameterError(f"u_bar must be positive, got {u_bar}")
    x_m = cp.x_m
    tol = ROOT_TOL * cp.v_dc_star
    x_hi_lin = cp.v_dc_star + cp.i_dc_max / cp.k_c
    found: list[tuple[float, str]] = []
    for r in _quadratic_roots(cp.G_c + cp.k_c, cp.k_c * cp.v_dc_star, u_bar):
        if r > 0 and x_m - tol <= r <= x_hi_lin:
            found.append((r, "f1"))
    for r in _quadratic_roots(cp.G_c, cp.i_dc_max, u_bar):
        if 0 < r <= x_m + tol:
            found.append((r, "f2"))

    merged = False
    roots: list[tuple[float, str]] = []
    for r, label in sorted(found, reverse=True):
        if abs(r - x_m) <= tol:
            r, label = x_m, "x_m"
        if roots and abs(roots[-1][0] - r) <= tol:
            merged = True
            continue
        roots.append((r, label))

    u_max, x_at = max_load(cp)
    kwargs = {}
    if roots:
        kwargs.update(x_bar_1=roots[0][0], branch_1=roots[0][1])
        if len(roots) > 1:
            kwargs.update(x_bar_2=roots[1][0], branch_2=roots[1][1])
        elif merged:
            kwargs.update(x_bar_2=roots[0][0], branch_2=roots[0][1])
    return EquilibriumReport(
        u_bar=u_bar,
        characteristic_case=classify_characteristic(cp),
        u_max=u_max,
        x_at_max=x_at,
        roots=tuple(roots),
        merged=merged,
        **kwargs,
    )
