import math

import numpy as np
import pytest

from gfcstab import stab_a
from gfcstab.errors import CertificateRefused, DomainError, ParameterError
from gfcstab.model import ConverterParams, class_a_dc_model
from gfcstab.sim import integrate

X2_175, X1_175 = 2396.9134829766176, 2439.953907607448
X1_177 = 2439.9533952934344
M_175 = -1599.97143489990


def test_roa_certificate(cp):
    cert = stab_a.roa_certificate(175e3, cp)
    assert cert.lower == pytest.approx(X2_175, abs=1e-6)
    assert cert.upper == pytest.approx(2439.99873, abs=5e-6)
    assert cert.equilibrium == pytest.approx(X1_175, abs=1e-6)
    names = {c.name: c for c in cert.conditions}
    half = names["x_m > x_tilde/2"]
    assert half.holds and half.lhs == pytest.approx(2439.95, abs=0.01) and half.rhs == pytest.approx(1219.999, abs=1e-3)
    vertex = names["i_dc_max/(2 G_c) > x_bar_2"]
    assert vertex.lhs == pytest.approx(75 / 0.00166) and vertex.lhs > 45180
    assert cert.contains(2400.0) and not cert.contains(2390.0) and not cert.contains(2440.0)


def test_roa_refused_beyond_peak(cp):
    with pytest.raises(CertificateRefused) as info:
        stab_a.roa_certificate(179e3, cp)
    assert any(not c.holds for c in info.value.conditions)


def test_roa_refused_off_typical_case():
    with pytest.raises(CertificateRefused) as info:
        stab_a.roa_certificate(10e3, ConverterParams(G_c=0.02))
    failed = [c.name for c in info.value.conditions if not c.holds]
    assert "characteristic case is (a)" in failed


def test_exp_rate(cp):
    cert = stab_a.exp_rate(175e3, cp)
    assert cert.m == pytest.approx(M_175, rel=1e-12)
    assert cert.m == pytest.approx(-(0.83e-3 + 1600) + 175e3 / (X1_175 * 2439.953125), rel=1e-13)
    assert cert.decay_time_constant == pytest.approx(2.50004463e-6, rel=1e-8)


def test_exp_rate_zero_load(cp):
    assert stab_a.exp_rate(0.0, cp).m == -(cp.G_c + cp.k_c)
    with pytest.raises(ParameterError):
        stab_a.exp_rate(-1.0, cp)


def test_exp_rate_toy():
    cp = ConverterParams(G_c=0.0, k_c=1.0, v_dc_star=2.0, i_dc_max=1.0, C_c=1.0, k_m=1.0)
    assert cp.x_m == 1.0
    cert = stab_a.exp_rate(0.75, cp)
    assert cert.equilibrium == pytest.approx(1.5)
    assert cert.m == pytest.approx(-0.5)


def test_exp_rate_envelope_in_simulation(cp):
    cert = stab_a.exp_rate(175e3, cp)
    x1 = cert.equilibrium
    for y0 in (0.03, -5e-4):
        model = class_a_dc_model(cp, 175e3, x_ref=x1)
        traj = integrate(model, [x1 + y0], (), 2e-5, 1e-12)
        y = np.abs(traj.deviation("v_dc", x1))
        env = cert.envelope(y0, traj.t, cp.C_c)
        assert np.all(y <= 1.05 * env + 1e-15)


def test_lp_bound(cp):
    cert = stab_a.lp_bound(175e3, cp, math.inf, 0.0, 2000.0)
    assert cert.gain == pytest.approx(2.5615703516494e-7, rel=1e-12)
    assert cert.beta == 0.0
    assert cert.bound(2000.0) == pytest.approx(5.123e-4, abs=1e-7)
    assert cert.r_v == pytest.approx(178058.512 - 150e3, abs=1e-3)
    assert cert.r == pytest.approx(min(X1_175 - cp.x_m, cp.x_tilde - X1_175), abs=1e-9)


def test_lp_bound_beta(cp):
    y0 = 5e-4
    assert stab_a.lp_bound(175e3, cp, math.inf, y0, 100.0).beta == y0
    one = stab_a.lp_bound(175e3, cp, 1, y0, 100.0)
    assert one.beta == pytest.approx(cp.C_c / abs(one.m) * y0, rel=1e-14)
    two = stab_a.lp_bound(175e3, cp, 2, y0, 100.0)
    assert two.beta == pytest.approx(math.sqrt(cp.C_c / (2 * abs(two.m))) * y0, rel=1e-14)


def test_lp_bound_refuses_large_input(cp):
    with pytest.raises(CertificateRefused) as info:
        stab_a.lp_bound(175e3, cp, math.inf, 0.0, 1e5)
    assert "sup|v|" in str(info.value)
    with pytest.raises(CertificateRefused):
        stab_a.lp_bound(175e3, cp, math.inf, 1.0, 10.0)
    with pytest.raises(ParameterError):
        stab_a.lp_bound(175e3, cp, 0.5, 0.0, 10.0)


def test_chetaev_beyond_peak(cp):
    inst = stab_a.chetaev_instability(179e3, cp, X1_175)
    assert inst.holds
    assert inst.sup_power == pytest.approx(178055.186, abs=1e-3)
    assert inst.worst_margin == pytest.approx(944.81, abs=0.01)
    assert inst.r == pytest.approx(cp.x_tilde - X1_175)


def test_chetaev_at_own_equilibrium(cp):
    for u, x1 in ((175e3, X1_175), (177e3, X1_177)):
        inst = stab_a.chetaev_instability(u, cp, x1)
        assert not inst.holds
        assert inst.worst_margin < 0


def test_chetaev_domain(cp):
    with pytest.raises(DomainError):
        stab_a.chetaev_instability(179e3, cp, 2400.0)


def test_chetaev_exact_against_dense_scan(cp):
    inst = stab_a.chetaev_instability(177e3, cp, X1_177)
    ys = np.linspace(-inst.r, 0, 200001, endpoint=False)
    from gfcstab.equilibrium import characteristic_power

    scan = max(characteristic_power(X1_177 + y, cp) for y in ys)
    assert inst.sup_power >= scan
    assert inst.sup_power - scan < 1.0


def test_lyapunov_origin(cp):
    for which in ("V1", "V2", "V3", "V4"):
        v, _ = stab_a.lyapunov_eval(which, 0.0, cp, 175e3)
        assert v == 0.0


def test_lyapunov_signs(cp):
    for y in np.linspace(cp.x_m - X1_175, cp.x_tilde - X1_175, 50, endpoint=False):
        if y != 0:
            assert stab_a.lyapunov_eval("V1", y, cp, 175e3)[1] < 0
    for y in np.linspace(-X2_175 * 0.999, -1e-3, 50):
        assert stab_a.lyapunov_eval("V2", y, cp, 175e3)[1] > 0
        assert stab_a.lyapunov_eval("V2", y, cp, 175e3)[0] > 0


def test_lyapunov_matches_finite_difference(cp):
    x1 = X1_175
    model = class_a_dc_model(cp, 175e3, x_ref=x1)
    y0 = 0.02
    traj = integrate(model, [x1 + y0], (), 2e-6, 1e-13, h_fixed=1e-9)
    y = traj.deviation("v_dc", x1)
    v = 0.5 * cp.C_c * y**2
    fd = np.gradient(v, traj.t)
    analytic = np.array([stab_a.lyapunov_eval("V1", yy, cp, 175e3, x1)[1] for yy in y])
    mid = slice(5, -5)
    assert np.allclose(fd[mid], analytic[mid], rtol=1e-3)


def test_lyapunov_domain(cp):
    with pytest.raises(DomainError):
        stab_a.lyapunov_eval("V1", -1.0, cp, 175e3)
    with pytest.raises(DomainError):
        stab_a.lyapunov_eval("V2", 50.0, cp, 175e3)
    with pytest.raises(ParameterError):
        stab_a.lyapunov_eval("V9", 0.0, cp, 175e3)


def test_per_converter_identical(cp):
    certs = stab_a.per_converter_certificates([cp] * 3, [175e3] * 3)
    assert len(certs) == 3
    first = certs[0]
    for c in certs[1:]:
        assert (c.roa, c.exp_rate, c.instability) == (first.roa, first.exp_rate, first.instability)


def test_per_converter_mixed_fleet(cp):
    big = ConverterParams(i_dc_max=100.0)
    certs = stab_a.per_converter_certificates([cp, big, cp], [150e3, 179e3, 179e3])
    assert [c.instability.holds for c in certs] == [False, False, True]
    assert certs[2].roa is None and "roa" in certs[2].refusals


def test_per_converter_empty():
    assert stab_a.per_converter_certificates([], []) == []
