import math

import numpy as np
import pytest

from critsense import (
    ModelSpec,
    PauliOperator,
    build_hamiltonian,
    expectation,
    ghz_state,
    ground_state,
    luttinger_K,
    oat_squeezed_state,
    solve_model,
    spin_coherent_state,
    to_matrix,
    variance,
)
from critsense.models import (
    NoCrossingError,
    ladder_site,
    locate_rydberg_critical_detuning,
    optimal_oat_twist,
    parity_x_operator,
    rydberg_order_response,
)
from critsense.metrology import qfi_pure
from critsense.symmetry import build_symmetry

from conftest import sum_z
from oracles import ground_vec, xxz_dense


def test_tfim_l2_merged_bond():
    H = build_hamiltonian(ModelSpec(kind="tfim", L=2))
    assert H.terms == ((-1.0, "IX"), (-1.0, "XI"), (-2.0, "ZZ"))


def test_xxz_open_bond_terms():
    H = build_hamiltonian(ModelSpec(kind="xxz", L=3, delta=0.0, boundary="open"))
    words = {w for _, w in H.terms}
    assert words == {"XXI", "IXX", "YYI", "IYY"}


def test_cluster_ladder_term_count():
    H = build_hamiltonian(ModelSpec(kind="cluster_ladder", L=3))
    assert len(H.terms) == 8
    for coeff, word in H.terms:
        assert coeff == -1.0
        assert sorted(c for c in word if c != "I") == ["X", "Z", "Z"]


def test_extra_terms_hook():
    n = 6
    extra = [(0.25, "XIIIII")]
    H = build_hamiltonian(ModelSpec(kind="cluster_ladder", L=3), extra_terms=extra)
    assert (0.25, "XIIIII") in H.terms


def test_invalid_specs():
    with pytest.raises(ValueError):
        ModelSpec(kind="tfim", L=4, J=0.0)
    with pytest.raises(ValueError):
        ModelSpec(kind="xxz", L=4, delta=1.5)
    with pytest.raises(ValueError):
        ModelSpec(kind="rydberg", L=4, v1=-1.0)
    with pytest.raises(ValueError):
        ModelSpec(kind="nope", L=4)


def test_ground_state_tfim2_frozen_energy():
    sol = ground_state(build_hamiltonian(ModelSpec(kind="tfim", L=2)))
    assert abs(sol.energy - (-2.0 * math.sqrt(2.0))) < 1e-10


def test_ground_state_paramagnetic_limit():
    sol = solve_model(ModelSpec(kind="tfim", L=4, J=1.0, h=100.0))
    fid = abs(np.vdot(sol.state.amplitudes, spin_coherent_state(4).amplitudes)) ** 2
    assert fid > 0.999


def test_ground_state_parity_sector_resolution():
    # deep ferromagnet: near-degenerate pair resolved into the +1 sector
    sol = solve_model(ModelSpec(kind="tfim", L=8, J=1.0, h=0.2))
    assert sol.gap < 1e-4
    par = parity_x_operator(8)
    val = expectation(sol.state, par).real
    assert abs(val - 1.0) < 1e-8
    # frozen oracle for the sector-resolved correlator
    assert abs(
        expectation(sol.state, PauliOperator.string(8, {0: "Z", 4: "Z"})).real
        - 0.989845648304
    ) < 1e-9


def test_ground_state_variational_bound():
    spec = ModelSpec(kind="tfim", L=6)
    sol = solve_model(spec)
    H = build_hamiltonian(spec)
    for basis_idx in (0, 21, 63):
        from critsense import PureState

        prod = PureState.from_basis(6, basis_idx)
        assert expectation(prod, H).real >= sol.energy - 1e-8


def test_ground_state_residual():
    spec = ModelSpec(kind="xxz", L=8, delta=0.4)
    sol = solve_model(spec)
    H = build_hamiltonian(spec)
    resid = np.linalg.norm(H.apply_vec(sol.state.amplitudes) - sol.energy * sol.state.amplitudes)
    assert resid < 1e-8 * max(1.0, abs(sol.energy))


def test_xxz_delta1_total_z_sector():
    sol = solve_model(ModelSpec(kind="xxz", L=4, delta=1.0))
    # oracle: dense ground state sits in the zero-magnetization sector
    e0, gs = ground_vec(xxz_dense(4, 1.0))
    assert abs(sol.energy - e0) < 1e-10
    sz = sum_z(4)
    assert abs(expectation(sol.state, sz)) < 1e-10
    zz = variance(sol.state, sz)
    assert abs(zz) < 1e-10  # <sumZ^2> = 0: exact sector eigenstate


def test_hamiltonian_symmetry_commutators():
    # [H_tfim, prod X] = 0 and [H_xxz, sum Z] = 0 at the matrix level
    Ht = to_matrix(build_hamiltonian(ModelSpec(kind="tfim", L=6)))
    P = to_matrix(parity_x_operator(6))
    assert np.max(np.abs(Ht @ P - P @ Ht)) < 1e-12
    Hx = to_matrix(build_hamiltonian(ModelSpec(kind="xxz", L=6, delta=0.3)))
    Sz = to_matrix(sum_z(6))
    assert np.max(np.abs(Hx @ Sz - Sz @ Hx)) < 1e-12


def test_translation_invariance_matrix_level():
    T = build_symmetry("translation", 6).to_matrix()
    H = to_matrix(build_hamiltonian(ModelSpec(kind="rydberg", L=6, detuning=1.0)))
    assert np.max(np.abs(T @ H @ T.conj().T - H)) < 1e-12


def test_ghz_and_coherent_states():
    g = ghz_state(1)
    assert np.allclose(g.amplitudes, np.array([1, 1]) / math.sqrt(2))
    assert abs(variance(ghz_state(4), sum_z(4)) - 16.0) < 1e-12
    assert abs(variance(spin_coherent_state(4), sum_z(4)) - 4.0) < 1e-12


def test_oat_zero_twist_is_coherent():
    assert np.allclose(
        oat_squeezed_state(5, 0.0).amplitudes, spin_coherent_state(5).amplitudes
    )


def test_oat_sum_z_qfi_twist_invariant():
    # the twist commutes with sum Z, so that particular QFI never moves
    for t in (0.2, 0.9):
        assert abs(qfi_pure(oat_squeezed_state(8, t), sum_z(8)) - 32.0) < 1e-9


def test_oat_optimal_twist_beats_sql():
    t_star, f_star, gen = optimal_oat_twist(8, n_grid=120)
    assert 4 * 8 < f_star < 4 * 64
    assert abs(qfi_pure(oat_squeezed_state(8, t_star), gen) - f_star) < 1e-9


def test_luttinger_parameter():
    assert abs(luttinger_K(0.0) - 1.0) < 1e-15
    assert abs(luttinger_K(1.0) - 0.5) < 1e-15
    assert luttinger_K(-1.0) == math.inf
    assert luttinger_K(-0.999) > 10.0
    with pytest.raises(ValueError):
        luttinger_K(1.2)


def test_ladder_site_layout():
    assert ladder_site(1, 1, 4) == 0
    assert ladder_site(1, 2, 4) == 1
    assert ladder_site(4, 2, 4) == 7
    with pytest.raises(ValueError):
        ladder_site(5, 1, 4)


@pytest.mark.slow
def test_rydberg_crossing_location_and_response():
    res = locate_rydberg_critical_detuning(1.0, 50.0, 0.0, [8, 10, 12])
    assert res.detuning > 0.0 and np.isfinite(res.detuning)
    assert res.bracket_width <= 1e-2
    # response of the order magnitude peaks near the crossing for the largest size
    grid = np.linspace(0.3, 1.8, 11)
    resp = [rydberg_order_response(1.0, 50.0, 0.0, 12, float(d)) for d in grid]
    peak = float(grid[int(np.argmax(resp))])
    assert abs(peak - res.detuning) < 0.35


def test_rydberg_blockade_basis_counts():
    from critsense.models import rydberg_blockade_basis

    # open chains count Fibonacci-style, periodic ones Lucas-style
    assert rydberg_blockade_basis(4, "open").size == 8
    assert rydberg_blockade_basis(5, "open").size == 13
    assert rydberg_blockade_basis(4, "periodic").size == 7
    assert rydberg_blockade_basis(6, "periodic").size == 18


def test_rydberg_blockade_matches_large_v1():
    from critsense.models import solve_rydberg_blockaded

    spec_hard = ModelSpec(kind="rydberg", L=8, omega=1.0, detuning=1.2, v1=50.0)
    blockaded = solve_rydberg_blockaded(spec_hard)
    # no adjacent double occupancy in the embedded state
    from critsense.models import rydberg_blockade_basis

    allowed = set(rydberg_blockade_basis(8).tolist())
    support = np.nonzero(np.abs(blockaded.state.amplitudes) > 1e-12)[0]
    assert set(support.tolist()) <= allowed
    # converges to the full-space solve as V1 grows
    spec_big = ModelSpec(kind="rydberg", L=8, omega=1.0, detuning=1.2, v1=4000.0)
    full = ground_state(build_hamiltonian(spec_big), sector=None)
    fid = abs(np.vdot(full.state.amplitudes, blockaded.state.amplitudes)) ** 2
    assert fid > 0.999
    with pytest.raises(ValueError):
        solve_rydberg_blockaded(ModelSpec(kind="tfim", L=4))


def test_rydberg_no_crossing_error():
    with pytest.raises(NoCrossingError):
        locate_rydberg_critical_detuning(1.0, 50.0, 0.0, [4, 6], window=(3.2, 3.5), coarse_points=4)
