import math

import mpmath
import numpy as np
import pytest

from gfcstab import stab_b
from gfcstab.errors import DomainError, ParameterError
from gfcstab.model import (
    CoiParams,
    ConverterParams,
    MachineParams,
    NetworkParams,
    class_b_reduced_from,
    headroom_pu,
    matching_droop,
)
from gfcstab.sim import Event, integrate


@pytest.fixture(scope="module")
def cert():
    cp, mp, net = ConverterParams(), MachineParams(), NetworkParams()
    return stab_b.iss_gains(0.9, mp, matching_droop(cp, mp, net), headroom_pu(cp, net))


def _gains_oracle(w, theta=0.9, H=3.7, tau=5.0, d_pg=7.0):
    with mpmath.workdps(40):
        P = (mpmath.mpf(2440) * 75 - mpmath.mpf("0.83e-3") * 2440**2 - 150000) / 150000
        d = mpmath.mpf(1600) * 2440**2 / 150000
        chi1 = P / d * mpmath.atanh(w / (theta * P))
        chi2 = mpmath.sqrt(w * d_pg * chi1 / theta)
        c = mpmath.sqrt(mpmath.mpf(H) / (mpmath.mpf(tau) / (2 * d_pg)))
        return float(chi1), float(chi2), float(c * max(chi1, chi2)), float(c)


def test_gas_check():
    assert stab_b.gas_check(7.0, 63505.07)
    assert not stab_b.gas_check(0.0, 63505.07)
    assert not stab_b.gas_check(7.0, 0.0)


def test_lyapunov_q(mp):
    q = stab_b.LyapunovQ(mp.H_g, mp.tau_g, mp.d_pg)
    assert q.diagonal == pytest.approx((3.7, 5 / 14))
    assert q.positive_definite
    assert q.condition == pytest.approx(3.2186953878862163, rel=1e-14)


def test_iss_gains_against_oracle(cert):
    assert cert.c == pytest.approx(3.219, abs=5e-4)
    for w in (1e-4, 0.02, 0.08, 0.15):
        chi1, chi2, gamma, c = _gains_oracle(w)
        assert cert.chi1(w) == pytest.approx(chi1, rel=1e-12)
        assert cert.chi2(w) == pytest.approx(chi2, rel=1e-12)
        assert cert.gamma(w) == pytest.approx(gamma, rel=1e-12)
    assert cert.gamma(0.08) == pytest.approx(3.1324e-3, rel=1e-4)


def test_gains_vanish_at_zero(cert):
    assert cert.chi1(0.0) == 0.0 and cert.chi2(0.0) == 0.0 and cert.gamma(0.0) == 0.0


def test_domain_edge(cert):
    edge = cert.w_limit
    assert edge == pytest.approx(0.9 * headroom_pu(ConverterParams(), NetworkParams()))
    # atanh diverges like log: each decade closer to the edge adds (P/d) ln(10)/2
    d, p = cert.pairs[0]
    vals = [cert.chi1(edge * (1 - 10.0**-k)) for k in range(2, 14)]
    steps = np.diff(vals)
    assert np.all(steps == pytest.approx(p / d * math.log(10) / 2, rel=1e-2))
    for w in (edge, -edge, 2 * edge):
        with pytest.raises(DomainError):
            cert.gamma(w)
    assert cert.gamma(-0.08) == cert.gamma(0.08)


def test_iss_gains_validation(mp):
    with pytest.raises(ParameterError):
        stab_b.iss_gains(1.0, mp, 1.0, 0.1)
    with pytest.raises(ParameterError):
        stab_b.iss_gains(0.9, mp, 1.0, 0.0)


def test_v5_derivative_negative(mp):
    rng = np.random.default_rng(7)
    for z in rng.uniform(-1, 1, size=(200, 2)):
        _, vdot = stab_b.v5_eval(z, mp, 63505.07, 0.187057)
        assert vdot < 0


def test_coi_single_converter_is_exact(cert, mp):
    d, p = cert.pairs[0]
    coi = CoiParams(mp.H_g, mp.d_pg, mp.tau_g, 1.0, ((d, p),))
    single = stab_b.coi_iss_gains(0.9, coi)
    for w in (0.0, 0.01, 0.08, 0.16):
        assert single.chi1(w) == cert.chi1(w)
        assert single.chi2(w) == cert.chi2(w)
        assert single.gamma(w) == cert.gamma(w)
    assert single.c == cert.c and single.w_limit == cert.w_limit


def test_coi_domain_widens(cert, mp):
    d, p = cert.pairs[0]
    coi = CoiParams(3 * mp.H_g, 3 * mp.d_pg, mp.tau_g, 3.0, ((d, p),) * 3)
    assert stab_b.coi_iss_gains(0.9, coi).w_limit == pytest.approx(3 * cert.w_limit)


def test_coi_heterogeneous_brackets_grid():
    coi = CoiParams(7.4, 14.0, 5.0, 2.0, ((63505.07, 0.187), (20000.0, 0.05), (90000.0, 0.3)))
    het = stab_b.coi_iss_gains(0.9, coi)
    grid = np.linspace(0.0, 2e-3, 400001)
    step = grid[1] - grid[0]
    for w in np.linspace(1e-3, 0.99 * het.w_limit, 25):
        exact = het.chi1(w)
        brute = stab_b.brute_force_chi1(het, w, grid)
        assert brute - step <= exact <= brute
        for d, p in coi.converters:
            assert exact >= (p / d) * math.atanh(w / (0.9 * 3 * p))


def test_envelope_trivial(cert, cp, mp, net):
    model = class_b_reduced_from(cp, mp, net)
    traj = integrate(model, [0.0, 0.0], (), 2.0, 1e-9)
    rep = stab_b.iss_envelope_check(traj, cert, 0.0)
    assert rep.status == "holds" and rep.steady_norm == 0.0


def test_envelope_near_domain_edge(cert, cp, mp, net):
    gammas = []
    for frac in (0.5, 0.9, 0.99):
        w = frac * cert.w_limit
        model = class_b_reduced_from(cp, mp, net)
        ev = [Event.load_step(0.2, "total", 300e3 + w * 150e3)]
        traj = integrate(model, [0.0, 0.0], ev, 40.0, 1e-10, dt_out=1e-2)
        rep = stab_b.iss_envelope_check(traj, cert, w)
        assert rep.status == "holds"
        gammas.append(rep.gamma)
    assert gammas == sorted(gammas)


def test_coi_aggregate(cp, mp, net):
    single = stab_b.coi_aggregate([mp], [cp], net)
    assert (single.H_T, single.d_pgT, single.tau_gT) == (mp.H_g, mp.d_pg, mp.tau_g)
    assert single.converters == ((matching_droop(cp, mp, net), headroom_pu(cp, net)),)
    two = stab_b.coi_aggregate([mp, mp], [cp], net)
    assert two.H_T == 2 * mp.H_g and two.d_pgT == 2 * mp.d_pg
    with pytest.raises(ParameterError):
        stab_b.coi_aggregate([mp, MachineParams(tau_g=4.0)], [cp], net)
