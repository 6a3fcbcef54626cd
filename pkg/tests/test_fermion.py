import math

import numpy as np
import pytest

from critsense import (
    ModelSpec,
    PauliOperator,
    expectation,
    fit_power_law,
    qfi_scaling_tfim,
    solve_model,
    solve_tfim_fermion,
    zz_correlator,
)
from critsense.fermion import FermionError, qfi_generator_second_moment

from conftest import sum_z


@pytest.mark.parametrize("J,h", [(1.0, 1.0), (1.0, 0.7), (0.6, 1.3)])
@pytest.mark.parametrize("L", [8, 10])
def test_energy_matches_ed(critical_states, L, J, h):
    sol_ed = critical_states(L, J, h)
    sol_f = solve_tfim_fermion(L, J=J, h=h)
    assert abs(sol_ed.energy - sol_f.energy) < 1e-8


def test_epsilon_dispersion_at_criticality():
    sol = solve_tfim_fermion(16)
    ks = np.array([(2 * m + 1) * math.pi / 16 for m in range(8)])
    assert np.max(np.abs(sol.epsilon - 4.0 * np.abs(np.sin(ks / 2)))) < 1e-12


@pytest.mark.parametrize("J,h", [(1.0, 1.0), (1.0, 0.7)])
def test_correlators_match_ed_all_r(critical_states, J, h):
    L = 10
    sol_ed = critical_states(L, J, h)
    sol_f = solve_tfim_fermion(L, J=J, h=h)
    for r in range(1, L):
        zz = PauliOperator.string(L, {0: "Z", r: "Z"})
        assert abs(expectation(sol_ed.state, zz).real - zz_correlator(sol_f, r)) < 1e-8


def test_correlator_reflection_symmetry():
    sol = solve_tfim_fermion(12)
    for r in range(1, 12):
        assert abs(zz_correlator(sol, r) - zz_correlator(sol, 12 - r)) < 1e-10


def test_open_boundary_matches_ed():
    L = 8
    sol_ed = solve_model(ModelSpec(kind="tfim", L=L, boundary="open"))
    sol_f = solve_tfim_fermion(L, boundary="open")
    assert abs(sol_ed.energy - sol_f.energy) < 1e-8
    for r in (1, 3, 5):
        start = (L - r) // 2
        zz = PauliOperator.string(L, {start: "Z", start + r: "Z"})
        assert abs(expectation(sol_ed.state, zz).real - zz_correlator(sol_f, r)) < 1e-8


def test_majorana_omega_antisymmetric():
    sol = solve_tfim_fermion(8)
    om = sol.majorana_omega
    assert np.max(np.abs(om + om.T)) < 1e-12


def test_thermo_r1_value():
    # frozen: the nearest-neighbor order correlator at criticality is 2/pi
    sol = solve_tfim_fermion(None)
    assert abs(zz_correlator(sol, 1) - 2.0 / math.pi) < 1e-9


def test_paramagnetic_limit_product_form():
    sol = solve_tfim_fermion(12, J=1.0, h=50.0)
    assert abs(sol.kernel(0) + 1.0) < 1e-3  # <X> -> +1 means g(0) -> -1
    # order correlations die off as (J/2h)^r
    assert abs(zz_correlator(sol, 1)) < 0.02
    for r in (2, 5):
        assert abs(zz_correlator(sol, r)) < 1e-3


def test_ferromagnetic_limit_long_range_order():
    sol = solve_tfim_fermion(None, J=1.0, h=0.05)
    for r in (1, 4, 12):
        assert abs(zz_correlator(sol, r) - 1.0) < 5e-3


def test_energy_extensivity_converges():
    diffs = []
    for L in (16, 32, 64):
        e1 = solve_tfim_fermion(L).energy
        e2 = solve_tfim_fermion(2 * L).energy
        diffs.append(abs(e2 / 2.0 - e1))
    assert diffs[1] < diffs[0] and diffs[2] < diffs[1]


def test_critical_decay_exponent():
    sol = solve_tfim_fermion(None)
    rs = np.unique(np.round(np.logspace(math.log10(8), math.log10(128), 14)).astype(int))
    cs = np.array([zz_correlator(sol, int(r)) for r in rs])
    fit = fit_power_law(rs, cs)
    assert abs(-fit.exponent - 0.25) < 0.02


def test_qfi_scaling_critical():
    fit, values = qfi_scaling_tfim([32, 64, 128, 256])
    assert abs(fit.exponent - 1.75) < 0.05
    assert np.all(np.diff(values) > 0)


def test_qfi_scaling_paramagnet_sql():
    fit, _ = qfi_scaling_tfim([32, 64, 128, 256], at_criticality=False, J=0.2, h=1.0)
    assert abs(fit.exponent - 1.0) < 0.05


def test_second_moment_matches_ed(critical_states):
    L = 8
    sol_ed = critical_states(L)
    from critsense import variance

    want = variance(sol_ed.state, sum_z(L))
    got = qfi_generator_second_moment(solve_tfim_fermion(L))
    assert abs(want - got) < 1e-8


def test_fit_power_law_exact_recovery():
    xs = np.array([4.0, 8.0, 16.0, 32.0])
    fit = fit_power_law(xs, xs**1.75)
    assert abs(fit.exponent - 1.75) < 1e-12
    assert fit.r_squared == 1.0


def test_fit_power_law_noisy_recovery(rng):
    xs = np.logspace(1, 3, 24)
    ys = 2.0 * xs**1.6 * (1.0 + 0.01 * rng.standard_normal(24))
    fit = fit_power_law(xs, ys)
    assert abs(fit.exponent - 1.6) < 0.02


def test_fit_power_law_errors():
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0, 3.0]), np.array([1.0, -2.0, 3.0]))
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0, 3.0, 10.0]), np.ones(4), window=(5.0, 6.0))


def test_solver_input_validation():
    with pytest.raises(FermionError):
        solve_tfim_fermion(7)  # odd periodic chains have no paired momenta
    with pytest.raises(ValueError):
        solve_tfim_fermion(8, J=-1.0)
    with pytest.raises(ValueError):
        zz_correlator(solve_tfim_fermion(8), 0)
    with pytest.raises(ValueError):
        zz_correlator(solve_tfim_fermion(8), 8)
