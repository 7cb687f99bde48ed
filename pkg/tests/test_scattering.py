import numpy as np
import pytest

import edgescatter as es
from edgescatter.errors import GuardViolation
from conftest import field_for


def test_free_smatrix_is_identity(basis8, cs22):
    pot = es.build_potential([])
    fld = field_for(pot, basis8, half=10.0)
    s = es.smatrix(basis8, cs22, fld, half_width=10.0)
    assert np.linalg.norm(s.matrix - np.eye(5)) < 1e-10
    assert s.unitarity_defect < 1e-10


def test_free_solve_alpha_pattern(basis8, cs22):
    pot = es.build_potential([])
    fld = field_for(pot, basis8, half=10.0)
    w = es.solve_mode(basis8, cs22, fld, incident=3, half_width=10.0)
    expect = np.zeros(5)
    expect[3] = 1.0
    assert np.max(np.abs(w.alpha_minus - expect)) < 1e-10
    assert np.max(np.abs(w.alpha_plus - expect)) < 1e-10
    assert w.residual < 1e-10


def test_incident_normalization_invariant(basis8, cs22, generic_field):
    # unit incoming amplitude at the incident end, zero other incoming ones
    for incident in (0, 2):
        w = es.solve_mode(basis8, cs22, generic_field, incident=incident)
        j = [c.current for c in cs22.propagating]
        for n in range(cs22.M):
            table = w.alpha_minus[n] if j[n] > 0 else w.alpha_plus[n]
            assert abs(table - (1.0 if n == incident else 0.0)) < 1e-10


def test_single_channel_gaussian_phase(basis8, cs12):
    pot = es.build_potential([es.GaussianBump("q0", 0.5, 0.0, 0.0, 1.0, None)])
    fld = field_for(pot, basis8, half=14.0)
    s = es.smatrix(basis8, cs12, fld, half_width=14.0, nodes_per_unit=200)
    t = s.t_minus[0, 0]
    phi = 0.5 * np.sqrt(2.0 * np.pi)
    assert abs(abs(t) - 1.0) < 1e-10
    assert np.angle(t) == pytest.approx(phi, abs=1e-5)


def test_unitarity_and_trace_generic(basis8, cs22, generic_field):
    s = es.smatrix(basis8, cs22, generic_field)
    assert s.unitarity_defect < 1e-10
    assert s.trace_difference == pytest.approx(-1.0, abs=1e-10)
    assert s.t_plus.shape == (2, 2) and s.t_minus.shape == (3, 3)
    assert s.r_plus.shape == (3, 2) and s.r_minus.shape == (2, 3)


def test_born_identity_for_zero_potential(basis8, cs22):
    pot = es.build_potential([])
    fld = field_for(pot, basis8, half=10.0)
    s = es.born_smatrix(basis8, cs22, fld, half_width=10.0)
    assert np.linalg.norm(s.matrix - np.eye(5)) < 1e-12


def test_born_off_unitarity_second_order(basis8, cs12):
    pot = es.build_potential([es.GaussianBump("q0", 0.01, 0.0, 0.0, 1.0, None)])
    fld = field_for(pot, basis8, half=12.0)
    s = es.born_smatrix(basis8, cs12, fld, half_width=12.0)
    assert s.unitarity_defect < 1e-3
    # exact first order: T = 1 + i Phi, so |T|^2 - 1 = Phi^2
    assert s.unitarity_defect == pytest.approx(
        (0.01 * np.sqrt(2 * np.pi)) ** 2, rel=1e-3)


def test_born_ratio_scaling(basis8, cs22):
    disc = {}
    for eps in (0.02, 0.01):
        pot = es.build_potential([es.GaussianBump("q1", eps, 0.0, 0.0, 1.0, 1.0)])
        fld = field_for(pot, basis8, half=14.0)
        s_full = es.smatrix(basis8, cs22, fld, nodes_per_unit=100)
        s_born = es.born_smatrix(basis8, cs22, fld, nodes_per_unit=400)
        disc[eps] = np.linalg.norm(s_full.matrix - s_born.matrix)
    assert 3.5 < disc[0.02] / disc[0.01] < 4.5


def test_match_defect_decreases_with_half_width(basis8, generic_potential):
    cs = es.channels_at(basis8, 2.2, n_evanescent=1)
    xq = generic_potential.support_radius
    defects = []
    for half in (xq + 5.0, 2 * (xq + 5.0)):
        fld = field_for(generic_potential, basis8, half=half)
        w = es.solve_mode(basis8, cs, fld, incident=0, half_width=half)
        defects.append(es.extract_alpha(w, cs, n_evanescent=1).match_defect)
    assert defects[1] < defects[0] / 2.0


def test_grid_convergence_order(basis8, cs22, generic_potential):
    fld = field_for(generic_potential, basis8)
    mats = [es.smatrix(basis8, cs22, fld, nodes_per_unit=n).matrix
            for n in (20, 40, 80)]
    d1 = np.linalg.norm(mats[0] - mats[1])
    d2 = np.linalg.norm(mats[1] - mats[2])
    order = np.log2(d1 / d2)
    assert order > 1.8


def test_evanescent_amplitudes_decay(basis8, generic_potential):
    cs = es.channels_at(basis8, 2.2, n_evanescent=4)
    fld = field_for(generic_potential, basis8)
    w = es.solve_mode(basis8, cs, fld, incident=2)
    # end-node evanescent content is exponentially small in the margin
    for amp in (*w.evanescent_minus.values(), *w.evanescent_plus.values()):
        assert abs(amp) < 1e-3


def test_half_width_guard(basis8, cs22, generic_field):
    with pytest.raises(GuardViolation):
        es.solve_mode(basis8, cs22, generic_field, incident=0, half_width=2.0)


def test_incident_index_range(basis8, cs22, generic_field):
    with pytest.raises(IndexError):
        es.solve_mode(basis8, cs22, generic_field, incident=5)


def test_reextraction_matches_solve(basis8, cs22, generic_field):
    w = es.solve_mode(basis8, cs22, generic_field, incident=1)
    table = es.extract_alpha(w, cs22)
    assert np.allclose(table.alpha_minus, w.alpha_minus, atol=1e-14)
    assert np.allclose(table.alpha_plus, w.alpha_plus, atol=1e-14)


def test_match_defect_error(basis8, generic_potential):
    # no retained evanescent channels and a slim margin leaves visible
    # evanescent content at the ends
    cs = es.channels_at(basis8, 2.2, n_evanescent=0)
    half = generic_potential.support_radius + 1.0
    fld = field_for(generic_potential, basis8, half=half)
    with pytest.raises(es.MatchDefectTooLarge):
        es.solve_mode(basis8, cs, fld, incident=0, half_width=half)


def test_negative_energy_scattering(basis8, generic_potential):
    cs = es.channels_at(basis8, -2.2)
    fld = field_for(generic_potential, basis8)
    s = es.smatrix(basis8, cs, fld)
    assert s.unitarity_defect < 1e-10
    assert s.trace_difference == pytest.approx(-1.0, abs=1e-10)


def test_mismatched_basis_rejected(basis8, basis10, cs22, generic_potential):
    fld = field_for(generic_potential, basis10)
    with pytest.raises(ValueError):
        es.solve_mode(basis8, cs22, fld, incident=0)


def test_general_wall_scattering(tanh_basis, generic_potential):
    # rho_1 = 3.61, rho_2 = 5.66 for the unit tanh wall: three channels open
    cs = es.channels_at(tanh_basis, 2.2)
    assert (cs.M, cs.n_plus, cs.n_minus) == (3, 1, 2)
    fld = field_for(generic_potential, tanh_basis)
    s = es.smatrix(tanh_basis, cs, fld)
    assert s.unitarity_defect < 1e-8
    assert s.trace_difference == pytest.approx(-1.0, abs=1e-8)


def test_tabulated_potential_scattering(basis8, cs12):
    bump = es.GaussianBump("q0", 0.5, 0.0, 0.0, 1.0, None)
    x = np.linspace(-9, 9, 1441)
    y = np.linspace(-10, 10, 401)
    vals = es.build_potential([bump]).pauli_components(x, y)[0]
    pot = es.build_potential({"table": {"x": x, "y": y, "q0": vals}})
    fld = es.coupling_field(pot, basis8, np.linspace(-12, 12, 961),
                            hermiticity_tol=1e-8)
    s = es.smatrix(basis8, cs12, fld, half_width=12.0, nodes_per_unit=60)
    phi = 0.5 * np.sqrt(2.0 * np.pi)
    assert abs(abs(s.t_minus[0, 0]) - 1.0) < 1e-8
    assert np.angle(s.t_minus[0, 0]) == pytest.approx(phi, abs=1e-3)
