import pytest

import oracles
from gfcstab.equilibrium import (
    characteristic_power,
    classify_characteristic,
    f1,
    f2,
    max_load,
    solve_equilibria,
)
from gfcstab.errors import DomainError, ParameterError
from gfcstab.model import ConverterParams

# 60-digit bisection on the piecewise characteristic, see oracles.equilibria
ORACLE = {
    165e3: (2256.3412386920054, 2439.956469174289),
    170e3: (2326.5697218200894, 2439.9551883915406),
    175e3: (2396.9134829766176, 2439.953907607448),
    177e3: (2425.083392708256, 2439.9533952934344),
}


def _params(cp):
    return dict(C=cp.C_c, G=cp.G_c, k=cp.k_c, i_max=cp.i_dc_max, x_star=cp.v_dc_star)


def test_frozen_oracle_is_reproducible():
    for u, (x2, x1) in list(ORACLE.items())[2:]:
        lo, hi = oracles.equilibria(u)
        assert lo == pytest.approx(x2, abs=1e-9)
        assert hi == pytest.approx(x1, abs=1e-9)


@pytest.mark.parametrize("u", sorted(ORACLE))
def test_closed_form_matches_oracle(cp, u):
    rep = solve_equilibria(u, cp)
    x2, x1 = ORACLE[u]
    assert abs(rep.x_bar_2 - x2) <= 1e-6
    assert abs(rep.x_bar_1 - x1) <= 1e-6
    assert (rep.branch_2, rep.branch_1) == ("f2", "f1")
    assert rep.characteristic_case == "a"


def test_branch_values(cp):
    assert characteristic_power(cp.v_dc_star, cp) == pytest.approx(-cp.G_c * 2440.0**2)
    assert f1(cp.x_m, cp) == pytest.approx(f2(cp.x_m, cp), rel=1e-12)
    assert characteristic_power(cp.x_m, cp) == pytest.approx(178055.186, abs=1e-3)
    with pytest.raises(DomainError):
        characteristic_power(0.0, cp)


def test_no_equilibrium_beyond_peak(cp):
    rep = solve_equilibria(179e3, cp)
    assert not rep.exists
    assert rep.x_bar_2 is None
    assert rep.u_max == pytest.approx(178055.186, abs=1e-3)


def test_rejects_non_positive_load(cp):
    with pytest.raises(ParameterError):
        solve_equilibria(0.0, cp)


def test_max_load_against_grid(cp):
    x_grid, u_grid = oracles.grid_argmax(_params(cp), lo=2430.0, hi=cp.x_tilde)
    u_max, x_at = max_load(cp)
    assert x_at == pytest.approx(x_grid, abs=1e-4)
    # grid spacing 5e-5 V times the f1 slope (~4e6 W/V) limits the scan
    assert u_max == pytest.approx(u_grid, abs=0.2)
    assert u_max >= u_grid


def test_case_b_interior_peak():
    cp = ConverterParams(G_c=0.02)
    assert cp.i_dc_max / (2 * cp.G_c) < cp.x_m
    assert classify_characteristic(cp) == "b"
    u_max, x_at = max_load(cp)
    assert u_max == pytest.approx(cp.i_dc_max**2 / (4 * cp.G_c))
    x_grid, _ = oracles.grid_argmax(_params(cp))
    assert x_at == pytest.approx(x_grid, abs=cp.x_tilde / 2e5)


def test_case_c_linear_vertex():
    cp = ConverterParams(G_c=0.1, k_c=1.0, v_dc_star=10.0, i_dc_max=8.0, k_m=31.416)
    assert classify_characteristic(cp) == "c"
    x_grid, _ = oracles.grid_argmax(_params(cp))
    assert max_load(cp)[1] == pytest.approx(x_grid, abs=1e-4)
    assert max_load(cp)[1] == pytest.approx(cp.x_tilde / 2)


def test_degenerate_toy():
    cp = ConverterParams(G_c=1.0, k_c=2.0, v_dc_star=3.0, i_dc_max=1.0, k_m=100.0)
    assert cp.x_m == 2.5 and cp.x_tilde == 2.0
    assert classify_characteristic(cp) == "d"


def test_merge_near_peak(cp):
    u_max, x_at = max_load(cp)
    gaps = [solve_equilibria(u, cp) for u in (170e3, 177e3, 178e3, u_max - 1e-3)]
    widths = [r.x_bar_1 - r.x_bar_2 for r in gaps]
    assert widths == sorted(widths, reverse=True)
    top = solve_equilibria(u_max, cp)
    assert top.exists and top.x_bar_1 == pytest.approx(x_at, abs=1e-6)
