"""Parameter types, the saturation primitive and the right-hand sides of
the reduced-order grid models.

Conventions
-----------
* dc side in SI (V, A, W, F, S).
* ac side in per unit on ``S_base`` (power) and ``omega_star`` (frequency).
  Frequency states are deviations from nominal in p.u.; the angle
  difference ``phi`` is in rad, so ``phi_dot = omega_base * (w_c - w_g)``.
* The converter power crossing the dc/ac boundary is converted W <-> p.u.
  inside the right-hand sides only.

Every dynamic model is exposed twice: a plain function taking the state
dataclass (``class_a_rhs`` etc.) and a :class:`DynamicModel` bundle holding
the numba kernels used by :mod:`gfcstab.sim`. Both go through the same
kernel, so there is a single implementation of each equation.

Kernels evaluate saturations on a fixed branch (``mode``: -1 lower limit,
0 linear, +1 upper limit) so the integrator can keep the vector field
smooth within a step and localize branch switches explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from gfcstab.errors import DomainError, ParameterError

OMEGA_STAR = 314.16


def sat(value: float, limit: float) -> float:
    """Clamp ``value`` to ``[-limit, limit]``."""
    if limit < 0:
        raise ParameterError(f"saturation limit must be non-negative, got {limit}")
    if value > limit:
        return limit
    if value < -limit:
        return -limit
    return value


def to_pu(power_w, s_base: float):
    return power_w / s_base


def from_pu(power_pu, s_base: float):
    return power_pu * s_base


# --------------------------------------------------------------------------
# Parameter sets


@dataclass(frozen=True)
class ConverterParams:
    """dc-link and control constants of one grid-forming converter.

    The defaults reproduce the experimental parameter table with the
    dc-loss conductance read as 0.83 mS: only then does
    ``v* i_max - G_c v*^2`` equal the tabulated 178 kW converter limit and
    the voltage ordering ``x_m < x_tilde`` of the typical characteristic
    hold. ``k_m`` defaults to ``omega* / v*`` (the table's 128.75 is in
    mrad/s per volt).
    """

    C_c: float = 8e-3
    G_c: float = 0.83e-3
    k_c: float = 1600.0
    i_dc_max: float = 75.0
    v_dc_star: float = 2440.0
    P_c_star: float = 150e3
    droop_gain_a: float = 1e-3
    k_m: float = OMEGA_STAR / 2440.0

    def __post_init__(self):
        for name in ("C_c", "k_c", "i_dc_max", "v_dc_star", "droop_gain_a", "k_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value}")
        # G_c = 0 is the lossless limit; the formulas stay well defined.
        if not (math.isfinite(self.G_c) and self.G_c >= 0):
            raise ParameterError(f"G_c must be non-negative, got {self.G_c}")
        if not (math.isfinite(self.P_c_star) and self.P_c_star >= 0):
            raise ParameterError(f"P_c_star must be non-negative, got {self.P_c_star}")

    @property
    def x_m(self) -> float:
        return self.v_dc_star - self.i_dc_max / self.k_c

    @property
    def x_tilde(self) -> float:
        return self.k_c * self.v_dc_star / (self.k_c + self.G_c)

    @property
    def characteristic_case(self) -> str:
        from gfcstab.equilibrium import classify_characteristic

        return classify_characteristic(self)


@dataclass(frozen=True)
class MachineParams:
    H_g: float = 3.7
    tau_g: float = 5.0
    d_pg: float = 7.0
    P_g_star: float = 150e3
    omega_star: float = OMEGA_STAR

    def __post_init__(self):
        for name in ("H_g", "tau_g", "d_pg", "omega_star"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value}")
        if not (math.isfinite(self.P_g_star) and self.P_g_star >= 0):
            raise ParameterError(f"P_g_star must be non-negative, got {self.P_g_star}")


@dataclass(frozen=True)
class NetworkParams:
    b: float = 5e3
    P_Lg: float = 150e3
    P_Lc: float = 150e3
    S_base: float = 150e3

    def __post_init__(self):
        for name in ("b", "S_base"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be strictly positive, got {value}")
        for name in ("P_Lg", "P_Lc"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")


@dataclass(frozen=True)
class DerivedQuantities:
    x_m: float
    x_tilde: float
    P_c_max: float
    P_c_max_dev: float
    u_max: float
    x_at_max: float


def derived_quantities(cp: ConverterParams) -> DerivedQuantities:
    from gfcstab.equilibrium import max_load

    v = cp.v_dc_star
    p_max = v * cp.i_dc_max - cp.G_c * v * v
    u_max, x_at = max_load(cp)
    return DerivedQuantities(
        x_m=cp.x_m,
        x_tilde=cp.x_tilde,
        P_c_max=p_max,
        P_c_max_dev=p_max - cp.P_c_star,
        u_max=u_max,
        x_at_max=x_at,
    )


def matching_droop(cp: ConverterParams, mp: MachineParams, net: NetworkParams) -> float:
    """Class-B droop ``k_c / k_m^2`` expressed in p.u. power per p.u. frequency."""
    v_equiv = mp.omega_star / cp.k_m
    return cp.k_c * v_equiv * v_equiv / net.S_base


def headroom_pu(cp: ConverterParams, net: NetworkParams) -> float:
    """Converter power headroom above its reference, in p.u."""
    return derived_quantities(cp).P_c_max_dev / net.S_base


def check_matching(cp: ConverterParams, mp: MachineParams, rel_tol: float = 1e-3) -> None:
    prod = cp.k_m * cp.v_dc_star
    if abs(prod - mp.omega_star) > rel_tol * mp.omega_star:
        raise ParameterError(
            f"matching control needs k_m * v_dc_star = omega_star, got {prod:.6g} vs {mp.omega_star:.6g}"
        )


def default_parameters() -> tuple[ConverterParams, MachineParams, NetworkParams]:
    return ConverterParams(), MachineParams(), NetworkParams()


# --------------------------------------------------------------------------
# State types


@dataclass(frozen=True)
class ClassAState:
    v_dc: float
    phi: float = 0.0
    omega_g_dev: float = 0.0
    P_tau_g: float = 1.0


@dataclass(frozen=True)
class ClassBFullState:
    v_dc: float
    phi: float = 0.0
    omega_g_dev: float = 0.0
    P_tau_g: float = 1.0


@dataclass(frozen=True)
class ClassBReducedState:
    omega_g_dev: float = 0.0
    P_tau_g_dev: float = 0.0


@dataclass(frozen=True)
class CoiParams:
    H_T: float
    d_pgT: float
    tau_gT: float
    P_gT_star: float
    converters: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "converters", tuple((float(d), float(p)) for d, p in self.converters))
        for name in ("H_T", "d_pgT", "tau_gT"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be strictly positive")
        for d, p in self.converters:
            if not (d > 0 and p > 0):
                raise ParameterError("converter droop and headroom must be strictly positive")

    @property
    def n1(self) -> int:
        return len(self.converters)


# --------------------------------------------------------------------------
# numba kernels


@njit(cache=True, nogil=True)
def _branch(arg, limit, mode):
    if mode == 0:
        return arg
    if mode > 0:
        return limit
    return -limit


@njit(cache=True, nogil=True)
def mode_of(args, limits):
    out = np.zeros(args.size, dtype=np.int64)
    for i in range(args.size):
        if args[i] > limits[i]:
            out[i] = 1
        elif args[i] < -limits[i]:
            out[i] = -1
    return out


# dc-link / full-model parameter layout (shared)
C, G, KC, IMAX, XSTAR, XREF, FLOOR, XTIL, CEIL = 0, 1, 2, 3, 4, 5, 6, 7, 8
U = 9  # isolated dc link: converter power (W)
SB, WB, H, TAU, DPG, PGS, B, DA, PCS, PLC, PLG, KM, WST, WC0 = range(9, 23)
N_FULL = 23

# reduced / COI layout
R_H, R_TAU, R_DPG, R_PL, R_PLS, R_SB, R_PCS, R_CEIL, R_N = range(9)
R_HEAD = 9


@njit(cache=True, nogil=True)
def _dc_rhs(t, y, p, mode):
    x = p[XREF] + y[0]
    i_dc = _branch(p[KC] * ((p[XSTAR] - p[XREF]) - y[0]), p[IMAX], mode[0])
    out = np.empty(1)
    out[0] = (-p[G] * x + i_dc - p[U] / x) / p[C]
    return out


@njit(cache=True, nogil=True)
def _dc_satargs(y, p):
    args = np.empty(1)
    lims = np.empty(1)
    args[0] = p[KC] * ((p[XSTAR] - p[XREF]) - y[0])
    lims[0] = p[IMAX]
    return args, lims


@njit(cache=True, nogil=True)
def _dc_guards(y, p):
    g = np.empty(2)
    g[0] = (p[XREF] - p[FLOOR]) + y[0]
    g[1] = (p[XTIL] - p[XREF]) - y[0]
    return g


@njit(cache=True, nogil=True)
def _dc_hcap(p, mode):
    if mode[0] == 0:
        return 2.5 * p[C] / (p[KC] + p[G])
    return np.inf


@njit(cache=True, nogil=True)
def _ac_part(y, p, w_c, out):
    phi = y[1]
    w_g = y[2]
    p_g = (p[PLG] - p[B] * phi * p[SB]) / p[SB]
    out[1] = p[WB] * (w_c - w_g)
    out[2] = (y[3] - p_g) / (2.0 * p[H])
    out[3] = (p[PGS] - p[DPG] * w_g - y[3]) / p[TAU]


@njit(cache=True, nogil=True)
def _class_a_rhs(t, y, p, mode):
    out = np.empty(4)
    x = p[XREF] + y[0]
    p_c = p[PLC] + p[B] * y[1] * p[SB]
    i_dc = _branch(p[KC] * ((p[XSTAR] - p[XREF]) - y[0]), p[IMAX], mode[0])
    out[0] = (-p[G] * x + i_dc - p_c / x) / p[C]
    pc_dev_pu = (p[PLC] - p[PCS]) / p[SB] + p[B] * y[1]
    w_c = -p[DA] * pc_dev_pu
    _ac_part(y, p, w_c, out)
    return out


@njit(cache=True, nogil=True)
def _class_b_arg(y, p):
    x = p[XREF] + y[0]
    return p[G] * x + p[PCS] / p[XSTAR] + p[KC] * ((p[XSTAR] - p[XREF]) - y[0])


@njit(cache=True, nogil=True)
def _class_b_full_rhs(t, y, p, mode):
    out = np.empty(4)
    x = p[XREF] + y[0]
    p_c = p[PLC] + p[B] * y[1] * p[SB]
    i_dc = _branch(_class_b_arg(y, p), p[IMAX], mode[0])
    out[0] = (-p[G] * x + i_dc - p_c / x) / p[C]
    w_c = p[WC0] + p[KM] * y[0] / p[WST]
    _ac_part(y, p, w_c, out)
    return out


@njit(cache=True, nogil=True)
def _class_b_satargs(y, p):
    args = np.empty(1)
    lims = np.empty(1)
    args[0] = _class_b_arg(y, p)
    lims[0] = p[IMAX]
    return args, lims


@njit(cache=True, nogil=True)
def _full_guards(y, p):
    g = np.empty(3)
    g[0] = (p[XREF] - p[FLOOR]) + y[0]
    g[1] = (p[XTIL] - p[XREF]) - y[0]
    g[2] = p[CEIL] - max(abs(y[1]), abs(y[2]), abs(y[3]))
    return g


@njit(cache=True, nogil=True)
def _class_b_full_guards(y, p):
    g = np.empty(3)
    g[0] = (p[XREF] - p[FLOOR]) + y[0]
    g[1] = (p[CEIL] * p[XSTAR] - p[XREF]) - y[0]
    g[2] = p[CEIL] - max(abs(y[1]), abs(y[2]), abs(y[3]))
    return g


@njit(cache=True, nogil=True)
def _coi_rhs(t, y, p, mode):
    n = int(p[R_N])
    total = 0.0
    for i in range(n):
        total += _branch(p[R_HEAD + i] * y[0], p[R_HEAD + n + i], mode[i])
    w = -(p[R_PL] - p[R_PLS]) / p[R_SB]
    out = np.empty(2)
    out[0] = (y[1] - total + w) / (2.0 * p[R_H])
    out[1] = (-y[1] - p[R_DPG] * y[0]) / p[R_TAU]
    return out


@njit(cache=True, nogil=True)
def _coi_satargs(y, p):
    n = int(p[R_N])
    args = np.empty(n)
    lims = np.empty(n)
    for i in range(n):
        args[i] = p[R_HEAD + i] * y[0]
        lims[i] = p[R_HEAD + n + i]
    return args, lims


@njit(cache=True, nogil=True)
def _coi_guards(y, p):
    g = np.empty(1)
    g[0] = p[R_CEIL] - max(abs(y[0]), abs(y[1]))
    return g


@njit(cache=True, nogil=True)
def _coi_hcap(p, mode):
    n = int(p[R_N])
    stiff = 0.0
    for i in range(n):
        if mode[i] == 0:
            stiff += p[R_HEAD + i]
    if stiff > 0.0:
        return 2.5 * 2.0 * p[R_H] / stiff
    return np.inf


# --------------------------------------------------------------------------
# Model bundles consumed by the integrator


@dataclass(frozen=True, eq=False)
class DynamicModel:
    """A model instance: kernels plus the numeric parameter vector.

    ``offsets`` shift the internal integration coordinates; the dc-link
    voltage is integrated as a deviation from ``offsets[0]`` so that
    sub-millivolt deviations around 2.44 kV keep full precision.
    """

    tag: str
    state_names: tuple[str, ...]
    params: np.ndarray
    offsets: np.ndarray
    atol_scale: np.ndarray
    inputs: dict
    guard_kinds: tuple[str, ...]
    rhs: Callable
    satargs: Callable
    guards: Callable
    hcap: Callable
    power: Callable
    info: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def to_internal(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float) - self.offsets

    def to_physical(self, raw) -> np.ndarray:
        return np.asarray(raw, dtype=float) + self.offsets

    def mode(self, raw, params=None) -> np.ndarray:
        p = self.params if params is None else params
        args, lims = self.satargs(np.asarray(raw, dtype=float), p)
        return mode_of(args, lims)

    def derivative(self, state, params=None) -> np.ndarray:
        p = self.params if params is None else params
        raw = self.to_internal(state)
        return self.rhs(0.0, raw, p, self.mode(raw, p))

    def with_params(self, params: np.ndarray) -> "DynamicModel":
        return DynamicModel(
            self.tag, self.state_names, params, self.offsets, self.atol_scale, self.inputs,
            self.guard_kinds, self.rhs, self.satargs, self.guards, self.hcap, self.power, self.info,
        )


def _dc_params(cp: ConverterParams, x_ref: float, floor_frac: float, ceil: float) -> np.ndarray:
    p = np.zeros(N_FULL)
    p[C], p[G], p[KC], p[IMAX] = cp.C_c, cp.G_c, cp.k_c, cp.i_dc_max
    p[XSTAR], p[XREF] = cp.v_dc_star, x_ref
    p[FLOOR] = floor_frac * cp.v_dc_star
    p[XTIL] = cp.x_tilde
    p[CEIL] = ceil
    return p


def class_a_dc_model(cp: ConverterParams, u_bar: float, x_ref: float | None = None,
                     floor_frac: float = 0.01) -> DynamicModel:
    """Isolated class-A dc link feeding a constant power ``u_bar`` (W)."""
    x_ref = cp.v_dc_star if x_ref is None else float(x_ref)
    p = _dc_params(cp, x_ref, floor_frac, 10.0)
    p[U] = u_bar

    def power(raw, params):
        return np.full(len(raw), params[U])

    return DynamicModel(
        tag="class_a_dc",
        state_names=("v_dc",),
        params=p,
        offsets=np.array([x_ref]),
        atol_scale=np.array([1.0]),
        inputs={"c": U},
        guard_kinds=("collapsed", "diverged"),
        rhs=_dc_rhs, satargs=_dc_satargs, guards=_dc_guards, hcap=_dc_hcap,
        power=power,
        info={"cp": cp, "u_bar": u_bar},
    )


def _full_params(cp, mp, net, x_ref, floor_frac, ceil):
    p = _dc_params(cp, x_ref, floor_frac, ceil)
    p[SB], p[WB], p[H], p[TAU], p[DPG] = net.S_base, mp.omega_star, mp.H_g, mp.tau_g, mp.d_pg
    p[PGS] = mp.P_g_star / net.S_base
    p[B], p[DA], p[PCS] = net.b, cp.droop_gain_a, cp.P_c_star
    p[PLC], p[PLG] = net.P_Lc, net.P_Lg
    p[KM], p[WST] = cp.k_m, mp.omega_star
    p[WC0] = cp.k_m * x_ref / mp.omega_star - 1.0
    return p


def _full_power(raw, params):
    raw = np.atleast_2d(raw)
    return params[PLC] + params[B] * raw[:, 1] * params[SB]


def class_a_model(cp: ConverterParams, mp: MachineParams, net: NetworkParams,
                  x_ref: float | None = None, floor_frac: float = 0.01) -> DynamicModel:
    x_ref = cp.v_dc_star if x_ref is None else float(x_ref)
    return DynamicModel(
        tag="class_a",
        state_names=("v_dc", "phi", "omega_g_dev", "P_tau_g"),
        params=_full_params(cp, mp, net, x_ref, floor_frac, 10.0),
        offsets=np.array([x_ref, 0.0, 0.0, 0.0]),
        atol_scale=np.array([1.0, 1e-6, 1e-6, 1e-6]),
        inputs={"c": PLC, "g": PLG},
        guard_kinds=("collapsed", "diverged", "diverged"),
        rhs=_class_a_rhs, satargs=_dc_satargs, guards=_full_guards, hcap=_dc_hcap,
        power=_full_power,
        info={"cp": cp, "mp": mp, "net": net},
    )


def class_b_full_model(cp: ConverterParams, mp: MachineParams, net: NetworkParams,
                       x_ref: float | None = None, floor_frac: float = 0.01) -> DynamicModel:
    check_matching(cp, mp)
    x_ref = cp.v_dc_star if x_ref is None else float(x_ref)
    return DynamicModel(
        tag="class_b_full",
        state_names=("v_dc", "phi", "omega_g_dev", "P_tau_g"),
        params=_full_params(cp, mp, net, x_ref, floor_frac, 10.0),
        offsets=np.array([x_ref, 0.0, 0.0, 0.0]),
        atol_scale=np.array([1.0, 1e-6, 1e-6, 1e-6]),
        inputs={"c": PLC, "g": PLG},
        guard_kinds=("collapsed", "diverged", "diverged"),
        rhs=_class_b_full_rhs, satargs=_class_b_satargs, guards=_class_b_full_guards,
        hcap=_dc_hcap, power=_full_power,
        info={"cp": cp, "mp": mp, "net": net},
    )


def _reduced_params(H_T, tau, d_pg, pairs, s_base, p_l_star, p_c_star, ceil=10.0):
    n = len(pairs)
    p = np.zeros(R_HEAD + 2 * n)
    p[R_H], p[R_TAU], p[R_DPG] = H_T, tau, d_pg
    p[R_PL] = p[R_PLS] = p_l_star
    p[R_SB], p[R_PCS], p[R_CEIL], p[R_N] = s_base, p_c_star, ceil, n
    for i, (d, pmax) in enumerate(pairs):
        p[R_HEAD + i] = d
        p[R_HEAD + n + i] = pmax
    return p


def _reduced_power(raw, params):
    raw = np.atleast_2d(raw)
    n = int(params[R_N])
    total = np.zeros(len(raw))
    for i in range(n):
        d, pmax = params[R_HEAD + i], params[R_HEAD + n + i]
        total += np.clip(d * raw[:, 0], -pmax, pmax)
    return params[R_PCS] - total * params[R_SB]


def class_b_reduced_model(mp: MachineParams, d_pc: float, p_c_max_dev: float,
                          s_base: float = 150e3, p_l_star: float = 300e3,
                          p_c_star: float = 150e3) -> DynamicModel:
    """Two-state class-B model; the load input is the total load (W)."""
    if not p_c_max_dev > 0:
        raise ParameterError("converter headroom must be strictly positive")
    p = _reduced_params(mp.H_g, mp.tau_g, mp.d_pg, [(d_pc, p_c_max_dev)], s_base, p_l_star, p_c_star)
    return DynamicModel(
        tag="class_b_reduced",
        state_names=("omega_g_dev", "P_tau_g_dev"),
        params=p,
        offsets=np.zeros(2),
        atol_scale=np.array([1e-6, 1e-6]),
        inputs={"total": R_PL},
        guard_kinds=("diverged",),
        rhs=_coi_rhs, satargs=_coi_satargs, guards=_coi_guards, hcap=_coi_hcap,
        power=_reduced_power,
        info={"mp": mp, "d_pc": d_pc, "P_max": p_c_max_dev},
    )


def class_b_reduced_from(cp: ConverterParams, mp: MachineParams, net: NetworkParams) -> DynamicModel:
    return class_b_reduced_model(
        mp, matching_droop(cp, mp, net), headroom_pu(cp, net), net.S_base,
        mp.P_g_star + cp.P_c_star, cp.P_c_star,
    )


def coi_model(coi: CoiParams, s_base: float = 150e3, p_l_star: float | None = None,
              p_c_star: float = 0.0) -> DynamicModel:
    p_l_star = coi.P_gT_star + p_c_star if p_l_star is None else p_l_star
    p = _reduced_params(coi.H_T, coi.tau_gT, coi.d_pgT, coi.converters, s_base, p_l_star, p_c_star)
    return DynamicModel(
        tag="coi",
        state_names=("omega_coi_dev", "P_tau_gT_dev"),
        params=p,
        offsets=np.zeros(2),
        atol_scale=np.array([1e-6, 1e-6]),
        inputs={"total": R_PL},
        guard_kinds=("diverged",),
        rhs=_coi_rhs, satargs=_coi_satargs, guards=_coi_guards, hcap=_coi_hcap,
        power=_reduced_power,
        info={"coi": coi},
    )


# --------------------------------------------------------------------------
# Plain right-hand-side functions


def class_a_rhs(s: ClassAState, cp: ConverterParams, mp: MachineParams,
                net: NetworkParams) -> np.ndarray:
    """Time derivative of ``(v_dc, phi, omega_g_dev, P_tau_g)`` for class-A control."""
    if not s.v_dc > 0:
        raise DomainError(f"v_dc must be positive, got {s.v_dc}")
    m = class_a_model(cp, mp, net)
    return m.derivative([s.v_dc, s.phi, s.omega_g_dev, s.P_tau_g])


def class_b_full_rhs(s: ClassBFullState, cp: ConverterParams, mp: MachineParams,
                     net: NetworkParams) -> np.ndarray:
    """Time derivative of the class-B (matching control) model before reduction."""
    if not s.v_dc > 0:
        raise DomainError(f"v_dc must be positive, got {s.v_dc}")
    m = class_b_full_model(cp, mp, net)
    return m.derivative([s.v_dc, s.phi, s.omega_g_dev, s.P_tau_g])


def class_b_reduced_rhs(s: ClassBReducedState, d_pc: float, p_c_max_dev: float,
                        mp: MachineParams, w: float) -> np.ndarray:
    """Reduced class-B model driven by ``w = -(P_L - P_L*)`` in p.u."""
    if not p_c_max_dev > 0:
        raise ParameterError("converter headroom must be strictly positive")
    m = class_b_reduced_model(mp, d_pc, p_c_max_dev, s_base=1.0, p_l_star=0.0)
    m.params[R_PL] = -w
    return m.derivative([s.omega_g_dev, s.P_tau_g_dev])


def coi_rhs(s: ClassBReducedState, coi: CoiParams, w1: float) -> np.ndarray:
    m = coi_model(coi, s_base=1.0, p_l_star=0.0)
    m.params[R_PL] = -w1
    return m.derivative([s.omega_g_dev, s.P_tau_g_dev])


def total_converter_response(coi: CoiParams, omega: float) -> float:
    return sum(sat(d * omega, pmax) for d, pmax in coi.converters)
