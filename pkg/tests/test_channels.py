import numpy as np
import pytest

import edgescatter as es
from edgescatter.errors import BasisTooSmall, TooCloseToCritical


def eigenvector_overlap_oracle(energy, rho):
    """Independent oracle: overlap of the two unit eigenvectors of the
    level block [[xi, sqrt(rho)], [sqrt(rho), -xi]] at +-xi, via eigh."""
    xi = np.sqrt(energy**2 - rho)
    vs = []
    for x in (xi, -xi):
        a = np.array([[x, np.sqrt(rho)], [np.sqrt(rho), -x]])
        w, v = np.linalg.eigh(a)
        k = int(np.argmin(np.abs(w - energy)))
        vs.append(v[:, k])
    return abs(float(vs[0] @ vs[1]))


def test_critical_set_examples(basis10):
    out = es.critical_set(basis10, 2.2)
    expect = np.array([-2.0, -np.sqrt(2), 0.0, np.sqrt(2), 2.0])
    assert np.allclose(out, expect, atol=1e-14)
    assert np.array_equal(es.critical_set(basis10, 1.0), np.array([0.0]))
    # at e_max = 2.5, rho_3 = 6 <= e_max^2 qualifies as well
    out25 = es.critical_set(basis10, 2.5)
    assert np.allclose(out25, np.array(
        [-np.sqrt(6), -2.0, -np.sqrt(2), 0.0, np.sqrt(2), 2.0, np.sqrt(6)]))


def test_critical_set_tanh(tanh_basis):
    out = es.critical_set(tanh_basis, 2.5)
    roots = np.sqrt(tanh_basis.rho[tanh_basis.rho <= 6.25])
    assert np.allclose(sorted(out), sorted(np.concatenate([-roots, roots[1:]])))


def test_channel_census_2p2(cs22):
    assert (cs22.M, cs22.n_plus, cs22.n_minus) == (5, 2, 3)
    xis = sorted(c.xi.real for c in cs22.propagating)
    expect = sorted([-2.2, 1.685229954635272, -1.685229954635272,
                     0.9165151389911680, -0.9165151389911680])
    assert np.allclose(xis, expect, atol=1e-12)


def test_channel_census_1p2(cs12):
    assert (cs12.M, cs12.n_plus, cs12.n_minus) == (1, 0, 1)
    c = cs12.propagating[0]
    assert c.level == 0 and c.xi == -1.2 and c.current == -1.0


def test_channel_ordering(cs22):
    currents = [c.current for c in cs22.propagating]
    assert all(j > 0 for j in currents[:2]) and all(j < 0 for j in currents[2:])
    assert [c.level for c in cs22.propagating] == [1, 2, 0, 1, 2]


def test_evanescent_channel(basis8):
    cs = es.channels_at(basis8, 2.2, n_evanescent=1)
    (c,) = cs.evanescent
    assert c.level == 3 and c.current == 0.0
    assert c.xi == pytest.approx(1j * np.sqrt(6.0 - 4.84), abs=1e-12)


def test_current_matches_finite_difference(basis8, cs22):
    # oracle: centered difference of the branch E(xi) = sign(E) sqrt(xi^2+rho)
    d = 1e-6
    for c in cs22.propagating:
        if c.level == 0:
            continue
        rho = basis8.rho[c.level]
        xi = c.xi.real
        branch = lambda x: np.sign(2.2) * np.sqrt(x * x + rho)
        j_fd = (branch(xi + d) - branch(xi - d)) / (2 * d)
        assert c.current == pytest.approx(j_fd, rel=1e-6)


def test_gram_structure(basis8, cs22):
    g = es.gram_matrix(cs22)
    assert np.allclose(np.diag(g), 1.0, atol=1e-12)
    assert np.max(np.abs(g - g.conj().T)) < 1e-14
    for i, a in enumerate(cs22.propagating):
        for j, b in enumerate(cs22.propagating):
            if i == j:
                continue
            if a.level != b.level:
                assert abs(g[i, j]) < 1e-12
            else:
                oracle = eigenvector_overlap_oracle(2.2, basis8.rho[a.level])
                assert abs(g[i, j]) == pytest.approx(oracle, abs=1e-10)
                assert abs(g[i, j]) < 1.0


def test_gram_conjugate_pair_value(basis8, cs22):
    # closed form sqrt(rho)/|E| for the residual-verified spinors
    g = es.gram_matrix(cs22)
    idx = [i for i, c in enumerate(cs22.propagating) if c.level == 1]
    assert g[idx[0], idx[1]].real == pytest.approx(np.sqrt(2.0) / 2.2,
                                                   abs=1e-12)


def test_gram_bound_random_energies(basis10):
    rng = np.random.default_rng(11)
    crit = es.critical_set(basis10, 3.5)
    checked = 0
    while checked < 100:
        e = float(rng.uniform(0.05, 3.0))
        if np.min(np.abs(crit - e)) < 5e-2:
            continue
        cs = es.channels_at(basis10, e)
        g = es.gram_matrix(cs)
        off = np.abs(g - np.diag(np.diag(g)))
        assert np.max(off) < 1.0
        checked += 1


def test_census_parity_and_crossing(basis10):
    rng = np.random.default_rng(3)
    crit = es.critical_set(basis10, 3.5)
    for _ in range(50):
        e = float(rng.uniform(0.05, 3.0))
        if np.min(np.abs(crit - e)) < 5e-2:
            continue
        cs = es.channels_at(basis10, e)
        assert cs.n_plus - cs.n_minus == -1
    # M increases by exactly 2 across each band edge
    assert es.channels_at(basis10, 1.2).M + 2 == es.channels_at(basis10, 1.5).M
    assert es.channels_at(basis10, 1.5).M + 2 == es.channels_at(basis10, 2.2).M


def test_guard_and_basis_errors(basis10):
    with pytest.raises(TooCloseToCritical):
        es.channels_at(basis10, np.sqrt(2.0) + 1e-4)
    with pytest.raises(TooCloseToCritical):
        es.channels_at(basis10, 1e-4)
    with pytest.raises(BasisTooSmall):
        es.channels_at(basis10, 4.6)


def test_negative_energy_census(basis10):
    cs = es.channels_at(basis10, -2.2)
    assert cs.M == 5
    assert cs.n_plus - cs.n_minus == -1
    zero = [c for c in cs.propagating if c.level == 0][0]
    assert zero.xi == 2.2 and zero.current == -1.0


def test_spinor_residual_enforced(basis8, cs22):
    # every retained channel passed the quadrature eigen-residual gate
    for c in (*cs22.propagating, *cs22.evanescent):
        phi = cs22.spinor_values(c)
        norm = np.sum(basis8.weights * (np.abs(phi[0])**2 + np.abs(phi[1])**2))
        assert norm == pytest.approx(1.0, abs=1e-12)
