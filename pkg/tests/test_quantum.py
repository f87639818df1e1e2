import numpy as np
import pytest

from deckprob.quantum import (
    classify_pair,
    commutator_norm,
    margenau_check,
    projectors,
    pure_state,
    random_basis,
    random_density,
    rotation_basis,
    sandwich_prob,
    theorem_fuzz,
    validate_density,
)

Z = np.eye(2, dtype=complex)
X = rotation_basis(np.pi / 4)
PLUS = np.array([1, 1]) / np.sqrt(2)


def test_same_basis():
    rho = pure_state([1, 0])
    pz = projectors(Z)
    assert sandwich_prob(rho, [pz[0], pz[0]]) == pytest.approx(1, abs=1e-12)


def test_order_dependence():
    rho = pure_state([1, 0])
    p0 = projectors(Z)[0]
    q1 = projectors(X)[1]
    assert np.allclose(X[:, 1], PLUS)
    assert sandwich_prob(rho, [p0, q1]) == pytest.approx(0.5, abs=1e-12)
    assert sandwich_prob(rho, [q1, p0]) == pytest.approx(0.25, abs=1e-12)


def test_maximally_mixed_symmetric():
    rng = np.random.default_rng(3)
    for d in (2, 3, 4):
        P, Q = random_basis(d, rng), random_basis(d, rng)
        rho = np.eye(d) / d
        for j, a in enumerate(projectors(P)):
            for k, b in enumerate(projectors(Q)):
                want = abs(np.vdot(Q[:, k], P[:, j])) ** 2 / d
                assert sandwich_prob(rho, [a, b]) == pytest.approx(want, abs=1e-12)
                assert sandwich_prob(rho, [b, a]) == pytest.approx(want, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        sandwich_prob(np.eye(3) / 3, projectors(Z))


def test_validation():
    with pytest.raises(ValueError):
        validate_density(np.diag([0.7, 0.7]))
    with pytest.raises(ValueError):
        validate_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        validate_density(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(ValueError):
        projectors(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        projectors(np.eye(9))
    validate_density(random_density(4, np.random.default_rng(0)))


def test_permuted_basis_compatible():
    rng = np.random.default_rng(5)
    P = random_basis(4, rng)
    Q = P[:, [2, 0, 3, 1]]
    assert commutator_norm(P, Q) < 1e-10
    r = classify_pair(P, Q, [random_density(4, rng) for _ in range(3)])
    assert r.classification == "compatible" and r.ok


def test_generic_pair_has_witness():
    rng = np.random.default_rng(9)
    r = classify_pair(random_basis(3, rng), random_basis(3, rng), [])
    assert r.classification == "incompatible" and r.ok and r.witness is not None


def test_fuzz_small():
    rep = theorem_fuzz((2, 3), trials=25, seed=1)
    assert not rep.failures
    assert rep.to_dict()["pairs"] == 50


def test_margenau_example():
    m = margenau_check(PLUS, Z, X, 1)
    assert m.lhs == pytest.approx(0.5, abs=1e-10)
    assert m.dephased == pytest.approx(0.5, abs=1e-10)
    assert m.direct == pytest.approx(1.0, abs=1e-10)


def test_margenau_trivial_cases():
    rng = np.random.default_rng(2)
    for d in (2, 3, 5):
        P, Q = random_basis(d, rng), random_basis(d, rng)
        for k in range(d):
            m = margenau_check(P[:, 0], P, Q, k)
            assert m.lhs == pytest.approx(m.direct, abs=1e-10)
            psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            psi /= np.linalg.norm(psi)
            m = margenau_check(psi, P, P, k)
            assert m.lhs == pytest.approx(m.direct, abs=1e-10)


def test_margenau_identity_random():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        d = int(rng.integers(2, 6))
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        m = margenau_check(psi, random_basis(d, rng), random_basis(d, rng), int(rng.integers(d)))
        assert abs(m.lhs - m.dephased) <= 1e-10


def test_margenau_rejects_unnormalized():
    with pytest.raises(ValueError):
        margenau_check(np.array([1.0, 1.0]), Z, X, 0)
