"""Certificates, their round trips, and the commuting-family machinery."""

import numpy as np
import pytest

from gramsep import densmat, gram, sep, states
from gramsep.sep import (
    DiagonalGramCertificate, SeparableDecomposition, SingularD,
    build_ffcnm, certificate_to_decomposition, decomposition_to_certificate,
    extract_certificate, joint_diagonalize, pt_diagonal_conjugate,
    pt_frame_conjugate, verify_certificate, verify_ffcnm,
)

import fixtures


def random_separable_pair(m, n, k, seed):
    return states.random_separable(m, n, k, seed)


def test_certificate_round_trip_random():
    for seed in range(6):
        rho, sd = random_separable_pair(2, 3, 5, seed)
        cert = decomposition_to_certificate(sd)
        assert verify_certificate(cert, rho, tol=1e-10).passed
        sd2 = certificate_to_decomposition(cert, rho)
        assert sd2.residual(rho) < 1e-9


def test_certificate_pure_product():
    rho, sd = random_separable_pair(2, 4, 1, seed=3)
    cert = decomposition_to_certificate(sd)
    assert cert.k == 1
    assert verify_certificate(cert, rho, tol=1e-12).passed


def test_tabulated_werner_certificate():
    p = 0.2
    cert = fixtures.werner_certificate(p)
    rep = verify_certificate(cert, states.werner(p), tol=1e-10)
    assert rep.passed, rep.max_deviation
    sd = certificate_to_decomposition(cert, states.werner(p))
    assert sd.k == 4
    assert sd.residual(states.werner(p)) < 1e-9


def test_certificate_wrong_parameter_fails():
    cert = fixtures.werner_certificate(0.2)
    rep = verify_certificate(cert, states.werner(0.3), tol=1e-9)
    assert not rep.passed
    # the deviation is exactly the entrywise gap of the two states
    gap = np.abs(states.werner(0.2).mat - states.werner(0.3).mat).max()
    assert abs(rep.max_deviation - gap) < 1e-12


def test_zero_certificate_fails():
    cert = DiagonalGramCertificate(2, 2, np.zeros((2, 4)), np.zeros((2, 4)))
    assert not verify_certificate(cert, states.werner(0.1)).passed


def test_identity_certificate_is_separable_by_construction():
    # D_m = 1, v_n = e_n certifies a product operator
    k = 3
    cert = DiagonalGramCertificate(2, 3, np.ones((2, k), dtype=complex),
                                   np.eye(3, dtype=complex))
    sd = certificate_to_decomposition(cert)
    mat = sd.density()
    u = np.ones(2)
    expected = np.kron(np.outer(u, u), np.eye(3))
    assert np.abs(mat - expected).max() < 1e-14


def test_zero_diagonal_enforcement():
    # phi_0 orthogonal to |e_1>: the raw diagonal has an exact zero
    phis = np.array([[1.0, 0.0], [0.6, 0.8]], dtype=complex)
    psis = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], dtype=complex) / np.sqrt(2)
    sd = SeparableDecomposition(2, 3, phis, psis)
    rho = densmat.validate_density(sd.density() / np.trace(sd.density()).real, 2, 3)
    sd = SeparableDecomposition(2, 3, phis / np.sqrt(np.trace(sd.density()).real), psis)
    cert = decomposition_to_certificate(sd)
    assert cert.is_nonsingular()
    assert cert.basis_a is not None
    assert verify_certificate(cert, rho, tol=1e-10).passed
    assert certificate_to_decomposition(cert, rho).residual(rho) < 1e-10


def test_pt_conjugation_invariants():
    for seed in (0, 1):
        rho, sd = random_separable_pair(2, 3, 4, seed)
        cert = decomposition_to_certificate(sd)
        rho_tb = densmat.validate_density(densmat.partial_transpose(rho, "B"), 2, 3)
        assert verify_certificate(pt_frame_conjugate(cert), rho_tb, tol=1e-10).passed
        rho_ta = densmat.validate_density(densmat.partial_transpose(rho, "A"), 2, 3)
        assert verify_certificate(pt_diagonal_conjugate(cert), rho_ta, tol=1e-10).passed


def test_certified_states_are_ppt():
    for seed in range(8):
        rho, sd = random_separable_pair(3, 4, 9, seed)
        cert = decomposition_to_certificate(sd)
        assert verify_certificate(cert, rho, tol=1e-9).passed
        assert densmat.is_ppt(rho)[0]


def test_build_ffcnm_identity_unitary():
    _, sd = random_separable_pair(2, 3, 4, seed=2)
    cert = decomposition_to_certificate(sd)
    fam = build_ffcnm(cert)
    mat = fam.matrices[(1, 0)]
    expected = np.diag(cert.diagonals[1] / cert.diagonals[0])
    assert np.abs(mat - expected).max() < 1e-12


def test_build_ffcnm_conjugated_residuals():
    rng = np.random.default_rng(5)
    _, sd = random_separable_pair(2, 4, 6, seed=5)
    cert = decomposition_to_certificate(sd)
    fam = build_ffcnm(cert, states.random_unitary(cert.k, rng))
    assert fam.diagnostics["normality"] < 1e-10
    assert fam.diagnostics["commutation"] < 1e-10


def test_build_ffcnm_three_party_family_commutes():
    rng = np.random.default_rng(6)
    _, sd = random_separable_pair(3, 3, 7, seed=6)
    cert = decomposition_to_certificate(sd)
    fam = build_ffcnm(cert, states.random_unitary(cert.k, rng))
    assert len(fam.matrices) == 3
    assert fam.diagnostics["commutation"] < 1e-10


def test_build_ffcnm_rejects_singular_diagonals():
    cert = DiagonalGramCertificate(2, 2, np.array([[1, 0], [1, 1]], dtype=complex),
                                   np.eye(2, 2, dtype=complex))
    with pytest.raises(SingularD):
        build_ffcnm(cert)


def test_verify_ffcnm_on_own_system():
    rng = np.random.default_rng(9)
    _, sd = random_separable_pair(2, 3, 5, seed=9)
    cert = decomposition_to_certificate(sd)
    u = states.random_unitary(cert.k, rng)
    fam = build_ffcnm(cert, u)
    g = gram.embed_gram(cert.gram_system(), u)
    rep = verify_ffcnm(fam, g)
    assert rep.passed
    assert max(rep.normality, rep.commutation, rep.relation) < 1e-9


def test_verify_ffcnm_identity_matrix_relation_residual():
    g = gram.spectral_gram(states.werner(0.2))
    fam = sep.FfcnmFamily(g.k, {(1, 0): np.eye(g.k, dtype=complex)})
    rep = verify_ffcnm(fam, g)
    expected = max(np.linalg.norm(g.vector(0, n) - g.vector(1, n)) for n in range(2))
    assert abs(rep.relation - expected) < 1e-12


def test_verify_ffcnm_flags_non_normal():
    g = gram.spectral_gram(states.werner(0.2))
    tri = np.eye(g.k, dtype=complex)
    tri[0, 1] = 1.0
    rep = verify_ffcnm(sep.FfcnmFamily(g.k, {(1, 0): tri}), g)
    assert rep.normality > 0.1


def test_joint_diagonalize_commuting_family():
    rng = np.random.default_rng(12)
    k = 6
    u = states.random_unitary(k, rng)
    mats = [(u * (rng.normal(size=k) + 1j * rng.normal(size=k))) @ u.conj().T
            for _ in range(3)]
    v, diags, off = joint_diagonalize(mats)
    assert off < 1e-10
    assert np.abs(v.conj().T @ v - np.eye(k)).max() < 1e-12


def test_extract_certificate_round_trip():
    rng = np.random.default_rng(13)
    for m, n, k, seed in [(2, 3, 5, 1), (2, 4, 8, 2), (3, 3, 9, 3), (3, 4, 12, 4)]:
        rho, sd = random_separable_pair(m, n, k, seed)
        cert = decomposition_to_certificate(sd)
        u = states.random_unitary(cert.k, rng)
        fam = build_ffcnm(cert, u)
        g = gram.embed_gram(cert.gram_system(), u)
        cert2 = extract_certificate(fam, g)
        assert verify_certificate(cert2, rho, tol=1e-8).passed
        sd2 = certificate_to_decomposition(cert2, rho, tol=1e-8)
        assert sd2.residual(rho) < 1e-8


def test_extract_certificate_already_diagonal():
    _, sd = random_separable_pair(2, 2, 4, seed=7)
    cert = decomposition_to_certificate(sd)
    fam = build_ffcnm(cert)  # identity unitary: matrices already diagonal
    g = cert.gram_system()
    cert2 = extract_certificate(fam, g)
    # up to permutation/phase the frame is the original one; the certificate
    # must reproduce the same state either way
    rho = densmat.validate_density(sd.density(), 2, 2)
    assert verify_certificate(cert2, rho, tol=1e-9).passed


def test_single_pair_relation():
    _, sd = random_separable_pair(3, 3, 6, seed=11)
    cert = decomposition_to_certificate(sd)
    fam = build_ffcnm(cert)
    g = cert.gram_system()
    assert sep.single_pair_relation(fam.matrices[(1, 0)], g, 1, 0) < 1e-10
    assert sep.single_pair_relation(fam.matrices[(2, 0)], g, 2, 0) < 1e-10


def test_certificate_json_round_trip():
    _, sd = random_separable_pair(2, 3, 4, seed=15)
    cert = decomposition_to_certificate(sd)
    again = sep.certificate_from_json_dict(sep.certificate_to_json_dict(cert))
    assert np.abs(again.diagonals - cert.diagonals).max() < 1e-15
    assert np.abs(again.frame - cert.frame).max() < 1e-15
