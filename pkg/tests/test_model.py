import math

import numpy as np
import pytest

from gfcstab.errors import DomainError, ParameterError
from gfcstab.model import (
    ClassAState,
    ClassBFullState,
    ClassBReducedState,
    CoiParams,
    ConverterParams,
    MachineParams,
    NetworkParams,
    class_a_rhs,
    class_b_full_model,
    class_b_full_rhs,
    class_b_reduced_rhs,
    coi_rhs,
    derived_quantities,
    from_pu,
    headroom_pu,
    matching_droop,
    sat,
    to_pu,
    total_converter_response,
)
from gfcstab.sim import class_a_operating_point, class_b_operating_point


def test_sat_examples():
    assert sat(80, 75) == 75
    assert sat(-80, 75) == -75
    assert sat(10, 75) == 10


def test_per_unit_round_trip():
    assert to_pu(12e3, 150e3) == pytest.approx(0.08)
    assert from_pu(0.08, 150e3) == pytest.approx(12e3)


def test_derived_quantities(cp):
    dq = derived_quantities(cp)
    assert dq.x_m == 2439.953125
    assert dq.x_tilde == pytest.approx(1600 * 2440 / (1600 + 0.83e-3), rel=1e-15)
    assert dq.x_tilde == pytest.approx(2439.99873, abs=5e-6)
    assert dq.P_c_max == pytest.approx(2440 * 75 - 0.83e-3 * 2440**2, rel=1e-15)
    assert dq.P_c_max_dev == pytest.approx(dq.P_c_max - 150e3)
    # characteristic peak sits at the kink
    assert dq.x_at_max == dq.x_m
    assert dq.u_max == pytest.approx(178055.18621, rel=1e-9)


@pytest.mark.parametrize("name", ["C_c", "k_c", "i_dc_max", "v_dc_star", "k_m"])
def test_converter_rejects_non_positive(name):
    with pytest.raises(ParameterError, match=name):
        ConverterParams(**{name: -1.0})


def test_lossless_link_allowed():
    cp = ConverterParams(G_c=0.0)
    assert cp.x_tilde == cp.v_dc_star
    with pytest.raises(ParameterError):
        ConverterParams(G_c=-1e-3)


def test_machine_and_network_validation():
    with pytest.raises(ParameterError):
        MachineParams(d_pg=0.0)
    with pytest.raises(ParameterError):
        NetworkParams(b=0.0)
    with pytest.raises(ParameterError):
        NetworkParams(P_Lc=math.nan)


def test_class_a_hand_evaluation(cp, mp, net):
    # P_c fixed at 175 kW through the bus load, phi = 0
    d = class_a_rhs(ClassAState(2420.0, 0.0, 0.0, 1.0), cp, mp, NetworkParams(P_Lc=175e3))
    expected = 125 * (-0.00083 * 2420 + 75 - 175000 / 2420)
    assert d[0] == pytest.approx(expected, rel=1e-12)
    assert d[0] == pytest.approx(84.7, abs=0.05)


def test_class_a_no_load_at_reference(cp, mp):
    net0 = NetworkParams(P_Lc=0.0)
    d = class_a_rhs(ClassAState(2440.0), cp, mp, net0)
    assert d[0] == pytest.approx(-cp.G_c * 2440.0 / cp.C_c, rel=1e-12)


def test_class_a_equilibrium(cp, mp, net):
    for u in (150e3, 175e3):
        x0, net2 = class_a_operating_point(cp, mp, net, u)
        d = class_a_rhs(ClassAState(*x0), cp, mp, net2)
        scale = np.array([x0[0] / 2.5e-6, 1.0, 1.0, 1.0])
        assert np.all(np.abs(d) <= 1e-9 * scale)


def test_class_a_rejects_non_positive_voltage(cp, mp, net):
    with pytest.raises(DomainError):
        class_a_rhs(ClassAState(0.0), cp, mp, net)


def test_class_b_feedforward_unsaturated(cp, mp, net):
    model = class_b_full_model(cp, mp, net)
    state = np.array([2440.0, 0.0, 0.0, 1.0])
    args, lims = model.satargs(model.to_internal(state), model.params)
    assert args[0] == pytest.approx(cp.G_c * 2440 + 150e3 / 2440, rel=1e-12)
    assert args[0] == pytest.approx(2.025 + 61.475, abs=1e-3)
    assert args[0] < lims[0] == 75.0


def test_class_b_equilibrium(cp, mp, net):
    for p_lc in (150e3, 175e3):
        net2 = NetworkParams(P_Lc=p_lc)
        x0 = class_b_operating_point(cp, mp, net2)
        d = class_b_full_rhs(ClassBFullState(*x0), cp, mp, net2)
        assert abs(d[0]) <= 1e-9 * x0[0] / 2.5e-6
        assert np.all(np.abs(d[1:]) <= 1e-9)


def test_reduced_origin_is_rest():
    mp = MachineParams()
    d = class_b_reduced_rhs(ClassBReducedState(), 63505.07, 0.187, mp, 0.0)
    assert np.all(d == 0)


def test_reduced_unsaturated_steady_state():
    mp, d_pc, w = MachineParams(), 50.0, 0.05
    om = w / (mp.d_pg + d_pc)
    d = class_b_reduced_rhs(ClassBReducedState(om, -mp.d_pg * om), d_pc, 1.0, mp, w)
    assert np.allclose(d, 0, atol=1e-15)


def test_reduced_saturated_steady_state():
    mp, d_pc, p_max, w = MachineParams(), 63505.07, 0.187057, 0.5
    om = (w - p_max) / mp.d_pg
    assert d_pc * om > p_max
    d = class_b_reduced_rhs(ClassBReducedState(om, -mp.d_pg * om), d_pc, p_max, mp, w)
    assert np.allclose(d, 0, atol=1e-15)


def test_matching_droop_and_headroom(cp, mp, net):
    assert matching_droop(cp, mp, net) == pytest.approx(1600 * 2440**2 / 150e3, rel=1e-12)
    assert matching_droop(cp, mp, net) == pytest.approx(63505.07, rel=1e-7)
    assert headroom_pu(cp, net) == pytest.approx(0.187057, rel=1e-5)


def test_coi_rest_and_sum():
    coi = CoiParams(3 * 3.7, 3 * 7.0, 5.0, 3.0, ((10.0, 0.1), (20.0, 0.3)))
    assert np.all(coi_rhs(ClassBReducedState(), coi, 0.0) == 0)
    for om in (-0.05, -0.004, 0.0, 0.002, 0.009, 0.2):
        direct = sat(10.0 * om, 0.1) + sat(20.0 * om, 0.3)
        assert total_converter_response(coi, om) == direct
    om, w = 0.004, 0.1
    d = coi_rhs(ClassBReducedState(om, 0.0), coi, w)
    assert d[0] == pytest.approx((0.0 - (0.04 + 0.08) + w) / (2 * coi.H_T), rel=1e-14)
    assert d[1] == pytest.approx(-coi.d_pgT * om / coi.tau_gT, rel=1e-14)


def test_coi_validation():
    with pytest.raises(ParameterError):
        CoiParams(1.0, 1.0, 5.0, 1.0, ((0.0, 0.1),))
