import math

import numpy as np
import pytest

from gnnqs.errors import SectorTooLarge
from gnnqs.exact import (
    dense_eigenpairs,
    dense_ground_state,
    exact_energy,
    exact_overlap,
    ground_state,
    group_action,
    iterative_ground_state,
    symmetric_fraction,
)
from gnnqs.hamiltonian import HeisenbergModel, SectorBasis, sparse_matrix
from gnnqs.lattice import Cluster, preset, translations

from conftest import make_ansatz, perturbed


def _model(name, j2=0.0):
    return HeisenbergModel(preset(name), j2)


def test_two_site_singlet():
    gs = ground_state(_model("chain2"))
    assert gs.energy == -0.75
    assert np.allclose(np.abs(gs.amplitudes) ** 2, [0.5, 0.5])


@pytest.mark.parametrize("method", ["dense", "iterative"])
def test_four_site_ring(method):
    gs = ground_state(_model("chain4"), method=method)
    assert gs.energy == pytest.approx(-2.0, abs=1e-10)
    assert np.linalg.norm(gs.amplitudes) == pytest.approx(1.0, abs=1e-12)


# chain10 at J2 = 0.5 is the Majumdar-Ghosh point with a doubly degenerate
# ground state, so only the energies are compared there
@pytest.mark.parametrize("name,j2,unique", [("chain8", 0.0, True), ("chain10", 0.5, False),
                                            ("square16", 0.0, True), ("honeycomb8", 0.2, True),
                                            ("kagome12", 0.0, True), ("triangular12", 0.125, True)])
def test_dense_matches_iterative(name, j2, unique):
    model = _model(name, j2)
    dense = dense_ground_state(model)
    lanczos = iterative_ground_state(model)
    assert abs(dense.energy - lanczos.energy) < 1e-10
    if unique:
        assert abs(np.vdot(dense.amplitudes, lanczos.amplitudes)) == pytest.approx(1.0, abs=1e-8)


def test_momentum_blocks_match_plain_dense():
    model = _model("chain12", 0.3)
    blocked = dense_ground_state(model)
    plain = dense_ground_state(model, use_translations=False)
    assert blocked.energy == pytest.approx(plain.energy, abs=1e-12)


def test_sector_too_large():
    with pytest.raises(SectorTooLarge):
        ground_state(_model("chain24"))
    with pytest.raises(SectorTooLarge):
        dense_eigenpairs(_model("chain20"))


def test_unknown_method():
    with pytest.raises(ValueError):
        ground_state(_model("chain4"), method="qr")


@pytest.mark.parametrize("name,j2", [("chain8", 0.0), ("chain10", 0.4), ("honeycomb8", 0.0)])
def test_exact_energy_of_first_eigenvectors(name, j2):
    model = _model(name, j2)
    w, v = dense_eigenpairs(model, 3)
    for k in range(3):
        psi = v[:, k].astype(complex)
        log_amp = np.log(np.abs(psi) + 1e-300)
        e, residual = exact_energy(log_amp, np.angle(psi), model)
        assert e == pytest.approx(w[k], abs=1e-10)
        assert abs(residual) < 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ansatz_energy_is_variational(seed):
    model, ansatz = make_ansatz("chain8", j2=0.2)
    basis = SectorBasis(8)
    amp = ansatz.evaluate(perturbed(ansatz, seed, 0.3), basis.configs)
    e, residual = exact_energy(amp.log_amp, amp.phase, model, basis)
    assert e >= ground_state(model).energy - 1e-10
    assert abs(residual) < 1e-10


def test_overlap_with_itself_and_excited_state():
    model = _model("chain8")
    w, v = dense_eigenpairs(model, 2)
    gs = ground_state(model)
    psi0 = gs.amplitudes
    assert exact_overlap(np.log(np.abs(psi0) + 1e-300), np.angle(psi0), gs) == pytest.approx(1.0, abs=1e-12)
    excited = v[:, 1]
    assert exact_overlap(np.log(np.abs(excited) + 1e-300), np.angle(excited), gs) < 1e-10


def test_overlap_ignores_normalization():
    gs = ground_state(_model("chain6"))
    psi = gs.amplitudes
    la, ph = np.log(np.abs(psi)), np.angle(psi)
    assert exact_overlap(la + 40.0, ph + 1.3, gs) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- symmetry


def _projector(action):
    dim = action.shape[1]
    p = np.zeros((dim, dim))
    for row in action:
        p[np.arange(dim), row] += 1.0 / len(action)
    return p


def test_constant_state_is_symmetric():
    cluster = preset("chain8")
    basis = SectorBasis(8)
    zeros = np.zeros(len(basis))
    assert symmetric_fraction(zeros, zeros, basis, translations(cluster)) == pytest.approx(1.0, abs=1e-12)


def test_alternating_orbit_is_antisymmetric():
    cluster = preset("chain4")
    basis = SectorBasis(4)
    perms = translations(cluster)
    action = group_action(basis, perms)
    # the orbit of |up up down down> has four members, visited by successive shifts
    start = basis.index(np.array([[1, 1, -1, -1]], dtype=np.int8))[0]
    orbit = action[:, start]
    assert len(set(orbit.tolist())) == 4
    la = np.full(len(basis), -np.inf)
    ph = np.zeros(len(basis))
    la[orbit] = 0.0
    ph[orbit[1::2]] = np.pi
    assert symmetric_fraction(la, ph, basis, perms) < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fraction_matches_projector_matrix(seed):
    model, ansatz = make_ansatz("chain8")
    basis = SectorBasis(8)
    perms = translations(model.cluster)
    amp = ansatz.evaluate(perturbed(ansatz, seed, 0.5), basis.configs)
    # break translation invariance so the fraction is nontrivial
    rng = np.random.default_rng(seed)
    la = amp.log_amp + rng.normal(size=len(basis))
    ph = amp.phase + rng.normal(size=len(basis))
    value = symmetric_fraction(la, ph, basis, perms)
    psi = np.exp(la - la.max() + 1j * ph)
    psi /= np.linalg.norm(psi)
    proj = _projector(group_action(basis, perms))
    expected = np.linalg.norm(proj @ psi) ** 2
    assert 0.0 <= value <= 1.0
    assert value == pytest.approx(expected, abs=1e-12)
    twice = proj @ (proj @ psi)
    assert abs(np.linalg.norm(twice) ** 2 - value) < 1e-12


def _relabeled(cluster, perm):
    inverse = np.argsort(perm)
    edges = [np.sort(inverse[e], axis=1) for e in (cluster.edges_nn, cluster.edges_nnn)]
    edges = [e[np.lexsort((e[:, 1], e[:, 0]))] for e in edges]
    return Cluster(cluster.spec, cluster.positions[perm], cluster.cells[perm], cluster.basis[perm],
                   edges[0], edges[1], cluster.name)


@pytest.mark.parametrize("name,j2", [("chain10", 0.3), ("honeycomb8", 0.1)])
def test_energy_invariant_under_relabeling(name, j2):
    cluster = preset(name)
    perm = np.random.default_rng(3).permutation(cluster.n_sites)
    relabeled = HeisenbergModel(_relabeled(cluster, perm), j2)
    e0 = iterative_ground_state(HeisenbergModel(cluster, j2)).energy
    e1 = iterative_ground_state(relabeled).energy
    assert e1 == pytest.approx(e0, abs=1e-10)


def test_matrix_is_symmetric():
    h = sparse_matrix(_model("kagome12", 0.2))
    assert abs(h - h.T).max() < 1e-14
    assert h.shape == (math.comb(12, 6),) * 2
