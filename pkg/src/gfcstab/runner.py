"""Scenario execution and the certificate-versus-simulation report."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from gfcstab import sim, stab_a, stab_b
from gfcstab.config import ScenarioConfig
from gfcstab.equilibrium import solve_equilibria
from gfcstab.errors import CertificateRefused, ParameterError
from gfcstab.model import (
    class_a_dc_model,
    class_a_model,
    class_b_full_model,
    class_b_reduced_from,
    coi_model,
    derived_quantities,
    headroom_pu,
    matching_droop,
)
from gfcstab.svg import write_svg


@dataclass(frozen=True)
class ConsistencyRow:
    scenario: str
    model: str
    certificate: str
    prediction: str | None
    outcome: str
    agree: bool | None
    margins: dict = field(default_factory=dict)
    expected_outcome: str | None = None
    open_question: str | None = None
    note: str = ""

    @property
    def status(self) -> str:
        if self.open_question and (self.agree is False or
                                   (self.expected_outcome and self.expected_outcome != self.outcome)):
            return "open-question"
        if self.agree is None:
            return "no-certificate"
        return "agree" if self.agree else "DISAGREE"


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectory: sim.Trajectory
    outcome: sim.Outcome
    certificates: dict
    row: ConsistencyRow
    files: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)


def _reference_value(cfg: ScenarioConfig, ref: str) -> float:
    cp = cfg.converter
    if ref == "x_m":
        return cp.x_m
    if ref == "x_tilde":
        return cp.x_tilde
    rep = solve_equilibria(cfg.u_bar, cp)
    value = rep.x_bar_1 if ref == "x_bar_1" else rep.x_bar_2
    if value is None:
        raise ParameterError(f"{ref} does not exist at u_bar = {cfg.u_bar} W")
    return value


def build_events(cfg: ScenarioConfig) -> list[sim.Event]:
    out = []
    for ev in cfg.events:
        value = ev.value if ev.ref is None else ev.scale * _reference_value(cfg, ev.ref)
        out.append(sim.Event(ev.time, ev.kind, ev.target, float(value)))
    return out


def build_model(cfg: ScenarioConfig):
    """Model bundle and physical initial state for a scenario."""
    cp, mp, net = cfg.converter, cfg.machine, cfg.network
    if cfg.model == "class_a_dc":
        rep = solve_equilibria(cfg.u_bar, cp)
        ref = rep.x_bar_1 if rep.x_bar_1 is not None else cp.x_m
        model = class_a_dc_model(cp, cfg.u_bar, x_ref=ref)
        x0 = np.array([ref])
    elif cfg.model == "class_a":
        x0, net2 = sim.class_a_operating_point(cp, mp, net, cfg.u_bar)
        model = class_a_model(cp, mp, net2, x_ref=x0[0])
    elif cfg.model == "class_b_full":
        net2 = replace(net, P_Lc=cfg.u_bar)
        x0 = sim.class_b_operating_point(cp, mp, net2)
        model = class_b_full_model(cp, mp, net2, x_ref=x0[0])
    elif cfg.model == "class_b_reduced":
        model = class_b_reduced_from(cp, mp, net)
        x0 = np.zeros(2)
    elif cfg.model == "coi":
        coi = stab_b.coi_aggregate([mp] * cfg.coi_machines, [cp] * cfg.coi_converters, net)
        model = coi_model(coi, net.S_base, p_c_star=cfg.coi_converters * cp.P_c_star)
        x0 = np.zeros(2)
    else:
        raise ParameterError(f"unknown model {cfg.model!r}")
    names = model.state_names
    for key, value in cfg.initial:
        x0[names.index(key)] = value
    return model, x0


def _final_loads(model, events, params0):
    p = params0.copy()
    for ev in events:
        if ev.kind == "load_step":
            p[model.inputs[ev.target]] = ev.value
    return p


def _equilibria(cfg: ScenarioConfig, model, events) -> dict:
    """Named steady states the run may settle at, with their bands."""
    cp = cfg.converter
    p_end = _final_loads(model, events, model.params)
    nan = math.nan
    if cfg.model in ("class_a_dc", "class_a"):
        bus = model.inputs["c"]
        u_end = p_end[bus]
        rep = solve_equilibria(u_end, cp) if u_end > 0 else None
        if rep is None or rep.x_bar_1 is None:
            return {}
        band = sim._dc_band(cp, rep.x_bar_1)
        target = [rep.x_bar_1] + [nan] * (model.n_states - 1)
        return {"x_bar_1": (target, band)}
    if cfg.model == "class_b_full":
        from gfcstab.model import PLC, PLG

        net_end = replace(cfg.network, P_Lc=p_end[PLC], P_Lg=p_end[PLG])
        try:
            ss = sim.class_b_operating_point(cp, cfg.machine, net_end)
        except ValueError:
            return {}
        return {"steady_state": ([ss[0], nan, ss[2], nan], [0.5, 1.0, 1e-5, 1.0])}
    ss = reduced_steady_state(model.with_params(p_end))
    band = max(1e-3 * float(np.max(np.abs(ss))), 1e-9)
    return {"forced_steady_state": (ss, band)}


def reduced_steady_state(model) -> np.ndarray:
    """Constant-input steady state of the reduced / centre-of-inertia model."""
    from scipy.optimize import brentq

    from gfcstab.model import R_DPG, R_HEAD, R_N, R_PL, R_PLS, R_SB

    p = model.params
    n = int(p[R_N])
    w = -(p[R_PL] - p[R_PLS]) / p[R_SB]

    def balance(om):
        total = sum(np.clip(p[R_HEAD + i] * om, -p[R_HEAD + n + i], p[R_HEAD + n + i])
                    for i in range(n))
        return -p[R_DPG] * om - total + w

    if w == 0:
        return np.zeros(2)
    bound = abs(w) / p[R_DPG] * 2 + 1e-12
    om = brentq(balance, -bound, bound, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return np.array([om, -p[R_DPG] * om])


def reduced_counterpart(cfg: ScenarioConfig, events, tol: float) -> sim.Trajectory:
    """Run the reduced class-B model through the same load history as a full-model scenario.

    The reduced model starts at its own steady state for the initial loads.
    """
    model = class_b_reduced_from(cfg.converter, cfg.machine, cfg.network)
    bus = model.inputs["total"]
    loads = {"c": cfg.u_bar, "g": cfg.network.P_Lg}
    model.params[bus] = sum(loads.values())
    z0 = reduced_steady_state(model)
    red_events = []
    for e in events:
        if e.kind == "load_step":
            loads[e.target] = e.value
            red_events.append(sim.Event.load_step(e.time, "total", sum(loads.values())))
    return sim.integrate(model, z0, red_events, cfg.t_end, tol, dt_out=cfg.dt_out)


# --------------------------------------------------------------------------
# Certificates per model class


def _class_a_checks(cfg, model, events, traj, outcome):
    cp = cfg.converter
    certs, margins = {}, {}
    u0 = cfg.u_bar
    steps = [e for e in events if e.kind == "load_step" and e.target == "c"]
    resets = [e for e in events if e.kind == "state_reset" and e.target == "v_dc"]
    u_end = steps[-1].value if steps else u0
    rep0 = solve_equilibria(u0, cp)
    x_start = resets[-1].value if resets else rep0.x_bar_1

    if steps:
        inst = stab_a.chetaev_instability(u_end, cp, rep0.x_bar_1)
        certs["instability"] = inst
        margins["instability_margin_W"] = inst.worst_margin
        if inst.holds:
            return "InstabilityCert", "collapsed", certs, margins, ""
    try:
        roa = stab_a.roa_certificate(u_end, cp)
    except CertificateRefused as exc:
        return "RoaCert", None, certs, margins, str(exc)
    certs["roa"] = roa
    margins["roa_lower_V"] = roa.lower
    margins["distance_to_boundary_V"] = x_start - roa.lower
    if roa.contains(x_start):
        prediction = "converged"
    elif x_start < roa.lower:
        prediction = "collapsed"
    else:
        return "RoaCert", None, certs, margins, "initial voltage at or above x_tilde"

    label = "RoaCert"
    if steps and not resets:
        label = "RoaCert+LpBoundCert"
        y = traj.deviation("v_dc", rep0.x_bar_1)
        v_sup = float(np.max(np.abs(traj.P_c - u0)))
        try:
            lp = stab_a.lp_bound(u0, cp, math.inf, x_start - rep0.x_bar_1, v_sup)
        except CertificateRefused as exc:
            return label, prediction, certs, margins, str(exc)
        certs["lp_bound"] = lp
        bound = lp.bound(v_sup)
        margins["lp_bound_V"] = bound
        margins["lp_margin_V"] = bound - float(np.max(np.abs(y)))
        if margins["lp_margin_V"] < 0:
            return label, "bounded", certs, margins, "L_inf bound violated"
    return label, prediction, certs, margins, ""


def _class_b_checks(cfg, model, events, traj, outcome):
    cp, mp, net = cfg.converter, cfg.machine, cfg.network
    certs, margins = {}, {}
    if cfg.model == "coi":
        coi = stab_b.coi_aggregate([mp] * cfg.coi_machines, [cp] * cfg.coi_converters, net)
        d_min = min(d for d, _ in coi.converters)
        certs["gas"] = stab_b.gas_check(coi.d_pgT, d_min)
        cert = stab_b.coi_iss_gains(cfg.theta, coi)
    else:
        d_pc, p_max = matching_droop(cp, mp, net), headroom_pu(cp, net)
        certs["gas"] = stab_b.gas_check(mp.d_pg, d_pc)
        cert = stab_b.iss_gains(cfg.theta, mp, d_pc, p_max)
    certs["iss"] = cert
    if not certs["gas"]:
        return "GAS", None, certs, margins, "non-positive droop"
    label = "GAS"
    p_end = _final_loads(model, events, model.params)
    if cfg.model in ("class_b_reduced", "coi"):
        from gfcstab.model import R_PL, R_PLS, R_SB

        w_sup = abs(p_end[R_PL] - p_end[R_PLS]) / p_end[R_SB]
        if w_sup > 0:
            label = "ISS"
            if w_sup >= cert.w_limit:
                return label, None, certs, margins, "load step outside the ISS input domain"
            env = stab_b.iss_envelope_check(traj, cert, w_sup)
            certs["envelope"] = env
            margins["gamma"] = env.gamma
            margins["iss_margin"] = env.margin
            if env.status == "violated":
                return label, "bounded", certs, margins, "ultimate bound violated"
    else:
        from gfcstab.model import PLC, PLG

        margins["load_change_W"] = float(p_end[PLC] + p_end[PLG] - model.params[PLC] - model.params[PLG])
    return label, "converged", certs, margins, ""


def run_scenario(cfg: ScenarioConfig, out_dir=None, fmt: str = "csv",
                 tol: float | None = None) -> ScenarioResult:
    """Simulate a scenario, evaluate its certificates and compare them."""
    model, x0 = build_model(cfg)
    events = build_events(cfg)
    tol = cfg.tol if tol is None else tol
    traj = sim.integrate(model, x0, events, cfg.t_end, tol, dt_out=cfg.dt_out)
    outcome = sim.classify_outcome(traj, _equilibria(cfg, model, events))

    if cfg.model in ("class_a_dc", "class_a"):
        label, prediction, certs, margins, note = _class_a_checks(cfg, model, events, traj, outcome)
    else:
        label, prediction, certs, margins, note = _class_b_checks(cfg, model, events, traj, outcome)

    extras = {}
    if cfg.id == "fig4" or (cfg.model == "class_b_full" and any(e.kind == "load_step" for e in events)):
        red = reduced_counterpart(cfg, events, tol)
        cmp = sim.compare_models(traj, red)
        extras["comparison"] = cmp
        margins["max_wc_minus_wg_pu"] = cmp.max_wc_wg
        margins["full_vs_reduced_relative"] = cmp.relative_deviation

    if prediction is None:
        agree = None
    else:
        agree = prediction == outcome.kind
    row = ConsistencyRow(cfg.id, cfg.model, label, prediction, outcome.kind, agree,
                         {k: float(v) for k, v in margins.items()}, cfg.expected_outcome,
                         cfg.open_question, note)
    result = ScenarioResult(cfg, traj, outcome, certs, row, extras=extras)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fmt in ("csv", "both"):
            path = out / f"{cfg.id}.csv"
            traj.to_csv(path)
            result.files.append(str(path))
        if fmt in ("svg", "both"):
            path = out / f"{cfg.id}.svg"
            write_svg(traj, path, title=cfg.id)
            result.files.append(str(path))
    return result


# --------------------------------------------------------------------------
# Report


def report_exit_code(rows) -> int:
    return 3 if any(r.status == "DISAGREE" for r in rows) else 0


def emit_report(rows, out_dir=None) -> tuple[str, dict, int]:
    """Text table, JSON document and exit status for a batch."""
    rows = sorted(rows, key=lambda r: r.scenario)
    ids = [r.scenario for r in rows]
    if len(set(ids)) != len(ids):
        raise ParameterError("a scenario appears more than once in the batch")
    head = f"{'scenario':<20} {'certificate':<20} {'prediction':<11} {'outcome':<12} status"
    lines = [head, "-" * len(head)]
    warnings = []
    for r in rows:
        lines.append(f"{r.scenario:<20} {r.certificate:<20} {str(r.prediction):<11} "
                     f"{r.outcome:<12} {r.status}")
        if r.status == "open-question":
            warnings.append(f"warning: {r.scenario} is a known open question: {r.open_question} "
                            f"(experiment: {r.expected_outcome}, certificate: {r.prediction}, "
                            f"simulation: {r.outcome})")
    code = report_exit_code(rows)
    text = "\n".join(lines + [""] + warnings)
    doc = {"rows": [dict(asdict(r), status=r.status) for r in rows], "exit_code": code,
           "warnings": warnings}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text + "\n", encoding="utf-8")
        (out / "report.json").write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n",
                                         encoding="utf-8")
    return text, doc, code


def converter_summary(cfg: ScenarioConfig) -> dict:
    dq = derived_quantities(cfg.converter)
    return asdict(dq)
