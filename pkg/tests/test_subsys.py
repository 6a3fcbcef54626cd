import math

import numpy as np
import pytest

from critsense import (
    ModelSpec,
    PauliOperator,
    expectation,
    ghz_state,
    parity_theta_curve,
    solve_model,
    subsystem_parity,
    to_matrix,
    window_report,
    xxz_string_parity,
    xxz_window_scaling,
)
from critsense.subsys import (
    DisorderOperator,
    default_theta_grid,
    make_ising_protocol,
    make_xxz_protocol,
    mean_occupation,
    rydberg_dual_curve,
    staggered_density_imprinter,
)
from critsense.metrology import classical_fisher, error_propagation
from critsense.qcore import evolve_phase
from critsense.models import build_hamiltonian, ground_state


def test_full_block_parity_is_global_parity():
    op = subsystem_parity(6, 6)
    assert op.terms == ((1.0, "X" * 6),)


def test_block_parity_placement():
    op = subsystem_parity(8, 4, offset=2)
    assert op.terms == ((1.0, "IIXXXXII"),)
    # central by default
    op = subsystem_parity(8, 4)
    assert op.terms == ((1.0, "IIXXXXII"),)
    with pytest.raises(ValueError):
        subsystem_parity(6, 4, offset=4)


def test_xxz_string_parity_structure():
    op = xxz_string_parity(5, 2, 1, 1, offset=0)
    assert op.terms == ((1.0, "YZXII"),)
    m = to_matrix(op)
    assert np.allclose(m, m.conj().T)
    assert np.allclose(m @ m, np.eye(32))
    with pytest.raises(ValueError):
        xxz_string_parity(5, 2, 3, 1)


def test_xxz_string_parity_vanishes_even_block():
    L = 10
    sol = solve_model(ModelSpec(kind="xxz", L=L, delta=0.5))
    for (a, b) in ((1, 2), (2, 1)):
        val = expectation(sol.state, xxz_string_parity(L, 4, a, b)).real
        assert abs(val) < 1e-10
    # odd blocks carry the signal
    val = expectation(sol.state, xxz_string_parity(L, 5, 1, 2)).real
    assert abs(val) > 1e-3


def test_protocol_anticommutation():
    proto = make_ising_protocol(10, 6)
    gm = to_matrix(proto.imprinter)
    pm = to_matrix(proto.measurement)
    assert np.max(np.abs(gm @ pm + pm @ gm)) < 1e-12
    proto_x = make_xxz_protocol(10, 5)
    gm = to_matrix(proto_x.imprinter)
    pm = to_matrix(proto_x.measurement)
    assert np.max(np.abs(gm @ pm + pm @ gm)) < 1e-12


def test_parity_theta_curve_pull_through(critical_states):
    sol = critical_states(10)
    proto = make_ising_protocol(10, 6)
    grid = np.linspace(0.01, 0.8, 25)
    curve = parity_theta_curve(sol.state, proto, grid, check_pull_through=True)
    assert np.all(curve.variance >= 0.0)
    # even in theta
    neg = parity_theta_curve(sol.state, proto, grid[::-1] * -1.0, check_pull_through=False)
    assert np.max(np.abs(curve.signal - neg.signal[::-1])) < 1e-10


def test_block_parity_expectation_in_unit_interval(critical_states):
    sol = critical_states(12)
    for L_sub in (4, 6):
        proto = make_ising_protocol(12, L_sub)
        val = expectation(sol.state, proto.measurement).real
        assert 0.0 < val < 1.0


def test_delta_theta_equals_cfi_along_grid(critical_states):
    sol = critical_states(8)
    proto = make_ising_protocol(8, 4)
    par = proto.measurement
    gen = proto.imprinter
    half = PauliOperator.identity(8, 0.5)
    povm = [half + 0.5 * par, half + (-0.5) * par]
    for theta in (0.05, 0.2, 0.6):
        dth = error_propagation(sol.state, gen, par, theta)
        cfi = classical_fisher(povm, lambda t: evolve_phase(sol.state, gen, t), theta)
        assert abs(cfi - dth**-2) < 1e-10 * cfi


def test_window_report_synthetic_curve():
    # delta(theta) = a/theta + b theta^3 has an interior optimum at
    # (a/(3b))^{1/4}
    from critsense.metrology import PrecisionCurve

    a, b = 0.02, 40.0
    theta = default_theta_grid(400)
    d = a / theta + b * theta**3
    curve = PrecisionCurve(theta=theta, signal=np.cos(theta), variance=np.ones_like(theta), delta_theta=d)
    rep = window_report(curve, 8)
    want = (a / (3 * b)) ** 0.25
    assert rep.theta_min == pytest.approx(want, rel=1e-3)
    assert rep.has_window == (rep.delta_theta_min < rep.sql_reference)


def test_window_report_needs_dense_grid():
    from critsense.metrology import PrecisionCurve

    theta = np.linspace(0.01, 1.0, 50)
    curve = PrecisionCurve(theta=theta, signal=theta, variance=theta, delta_theta=theta)
    with pytest.raises(ValueError):
        window_report(curve, 6)


def test_window_ghz_flat_curve_degenerate():
    proto = make_ising_protocol(8, 8)
    curve = parity_theta_curve(ghz_state(8), proto, default_theta_grid(256))
    rep = window_report(curve, 8)
    assert rep.degenerate and not rep.has_window
    assert rep.delta_theta_min == pytest.approx(1.0 / 8.0, rel=1e-6)


def test_theta_min_decreases_with_block(critical_states):
    sol = critical_states(12)
    grid = default_theta_grid(256)
    mins = []
    for L_sub in (4, 6, 8):
        curve = parity_theta_curve(sol.state, make_ising_protocol(12, L_sub), grid,
                                   check_pull_through=False)
        mins.append(window_report(curve, L_sub).theta_min)
    assert all(m is not None for m in mins)
    assert mins[0] > mins[1] > mins[2]


def test_xxz_window_scaling_predictions():
    # threshold Luttinger parameter: all three window angles merge
    from critsense.models import luttinger_K

    K = 1.5
    delta = math.cos(math.pi * (1.0 - 1.0 / (2.0 * K)))  # inverse of the K map
    assert luttinger_K(delta) == pytest.approx(K, rel=1e-12)
    sol = solve_model(ModelSpec(kind="xxz", L=10, delta=0.0))
    rows = xxz_window_scaling(delta, [3], sol.state, theta_grid=default_theta_grid(200))
    pred = rows[0].predicted_exponents
    assert pred["theta_l"] == pytest.approx(-5.0 / 6.0)
    assert pred["theta_min"] == pytest.approx(-5.0 / 6.0)
    assert pred["theta_r"] == pytest.approx(-5.0 / 6.0)
    # K = 1 predicts no sub-SQL window
    rows = xxz_window_scaling(0.0, [3, 5], sol.state, theta_grid=default_theta_grid(200))
    assert not rows[0].window_predicted
    for row in rows:
        assert not row.report.has_window


def test_disorder_operator_zeta_limit():
    # <n> -> 0 reduces the local map to the empty-state projector
    op = DisorderOperator(3, 1, 1e-12)
    v = np.zeros(8, dtype=complex)
    v[0b010] = 1.0  # site 1 occupied
    out = op.apply_vec(v)
    assert np.linalg.norm(out) < 1e-5
    v2 = np.zeros(8, dtype=complex)
    v2[0] = 1.0
    out2 = op.apply_vec(v2)
    assert abs(np.linalg.norm(out2) - 1.0) < 1e-5


def test_disorder_operator_unit_overlap_image():
    nbar = 0.3
    local = np.array([math.sqrt(1 - nbar), -math.sqrt(nbar)])
    full = np.array([1.0])
    for _ in range(4):
        full = np.kron(full, local)
    mu = DisorderOperator(4, 2, nbar)
    img = mu.apply_vec(full.astype(complex))
    assert abs(np.linalg.norm(img) - 1.0) < 1e-12
    # the moved site parks in |0> at the left edge
    reshaped = img.reshape(2, 8)
    assert np.linalg.norm(reshaped[1]) < 1e-12


def test_disorder_operator_validation():
    with pytest.raises(ValueError):
        DisorderOperator(4, 1, 0.0)
    with pytest.raises(ValueError):
        DisorderOperator(4, 5, 0.3)


@pytest.mark.slow
def test_rydberg_dual_curve_even_and_decaying():
    L = 12
    spec = ModelSpec(kind="rydberg", L=L, omega=1.0, detuning=0.68, v1=50.0, v2=0.0,
                     boundary="open")
    sol = ground_state(build_hamiltonian(spec))
    nbar = mean_occupation(sol.state, list(range(2, 8)))
    thetas = np.linspace(-0.6, 0.6, 13)
    curve = rydberg_dual_curve(sol.state, 7, nbar, thetas).real
    assert np.max(np.abs(curve - curve[::-1])) < 1e-10
    mid = len(thetas) // 2
    assert curve[mid] == np.max(curve)
    assert curve[0] < curve[mid]


def test_staggered_imprinter_diagonal():
    op = staggered_density_imprinter(8, 5)
    assert op.is_diagonal and op.is_hermitian


@pytest.mark.slow
def test_best_precision_non_increasing_in_block_size():
    L = 14
    sol = solve_model(ModelSpec(kind="tfim", L=L, boundary="open"))
    grid = default_theta_grid(256)
    mins = []
    for L_sub in (6, 8, 10, 12):
        curve = parity_theta_curve(sol.state, make_ising_protocol(L, L_sub, offset=0),
                                   grid, check_pull_through=False)
        mins.append(window_report(curve, L_sub).delta_theta_min)
    assert all(b <= a + 1e-12 for a, b in zip(mins, mins[1:]))
