"""Dense-matrix checks for two-step measurement sequences on small Hilbert spaces.

Bases are given as unitary matrices whose columns are the basis vectors; the
rank-1 projectors of a basis are the outer products of its columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_ASSERT = 1e-10
TOL_CLASSIFY = 1e-6
TOL_SYMMETRY = 1e-9
TOL_WITNESS = 1e-8
MAX_DIM = 8


def _check_square(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ValueError(f"{name} has dimension {m.shape[0]} > {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def projectors(basis: np.ndarray) -> list[np.ndarray]:
    """Rank-1 projectors onto the columns of ``basis``; checks completeness and orthogonality."""
    basis = _check_square(basis, "basis")
    projs = [np.outer(basis[:, j], basis[:, j].conj()) for j in range(basis.shape[1])]
    d = basis.shape[0]
    if np.abs(sum(projs) - np.eye(d)).max() > 1e-12:
        raise ValueError("projectors do not sum to the identity")
    for j, a in enumerate(projs):
        for k, b in enumerate(projs):
            target = a if j == k else np.zeros_like(a)
            if np.abs(a @ b - target).max() > 1e-12:
                raise ValueError("projectors are not mutually orthogonal idempotents")
    return projs


def validate_density(rho: np.ndarray) -> np.ndarray:
    rho = _check_square(rho, "density operator")
    if np.abs(rho - rho.conj().T).max() > 1e-12:
        raise ValueError("density operator is not hermitian")
    if abs(np.trace(rho) - 1) > 1e-12:
        raise ValueError("density operator does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density operator is not positive semidefinite")
    return rho


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("state vector is not normalized")
    return np.outer(psi, psi.conj())


def sandwich_prob(rho: np.ndarray, seq: list[np.ndarray]) -> float:
    """``Tr(rho L1 L2 ... Ln ... L2 L1)`` for the projector sequence ``L1 .. Ln``."""
    rho = _check_square(rho, "density operator")
    d = rho.shape[0]
    m = np.eye(d, dtype=complex)
    for lam in seq:
        lam = _check_square(lam, "projector")
        if lam.shape[0] != d:
            raise ValueError(f"projector dimension {lam.shape[0]} does not match state dimension {d}")
        m = m @ lam
    val = np.trace(m.conj().T @ rho @ m)  # reversed product on the left is m^dagger for projectors
    if abs(val.imag) > TOL_ASSERT:
        raise ArithmeticError(f"sequence probability has imaginary part {val.imag:.3e}")
    p = val.real
    if p < -TOL_ASSERT or p > 1 + TOL_ASSERT:
        raise ArithmeticError(f"sequence probability {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def rotation_basis(theta: float) -> np.ndarray:
    """Real qubit basis ``(cos t, -sin t), (sin t, cos t)`` as columns."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex)


def random_basis(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def commutator_norm(P: np.ndarray, Q: np.ndarray) -> float:
    """Largest spectral norm of ``[L_p, L_q]`` over all projector pairs."""
    return _comm(projectors(P), projectors(Q))


def _comm(pp, qq) -> float:
    return max(np.linalg.norm(a @ b - b @ a, 2) for a in pp for b in qq)


def order_asymmetry(P: np.ndarray, Q: np.ndarray, rho: np.ndarray) -> tuple[float, tuple[int, int]]:
    return _asym(projectors(P), projectors(Q), rho)


def _asym(pp, qq, rho) -> tuple[float, tuple[int, int]]:
    # all Tr(rho A B A) at once; equals sandwich_prob for every pair
    A, B = np.asarray(pp), np.asarray(qq)
    pq = np.einsum("jab,kbc,jcd,da->jk", A, B, A, rho).real
    qp = np.einsum("kab,jbc,kcd,da->jk", B, A, B, rho).real
    gap = np.abs(pq - qp)
    j, k = np.unravel_index(np.argmax(gap), gap.shape)
    return float(gap[j, k]), (int(j), int(k))


@dataclass
class PairResult:
    kind: str
    dim: int
    commutator: float
    asymmetry: float
    classification: str  # compatible, incompatible, ambiguous
    ok: bool
    witness: tuple[int, int] | None = None


@dataclass
class FuzzReport:
    results: list[PairResult] = field(default_factory=list)

    @property
    def failures(self) -> list[PairResult]:
        return [r for r in self.results if not r.ok]

    def counts(self) -> dict:
        out: dict = {}
        for r in self.results:
            key = f"d{r.dim}:{r.classification}"
            out[key] = out.get(key, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "pairs": len(self.results),
            "failures": len(self.failures),
            "counts": self.counts(),
            "by_kind": {k: sum(r.kind == k for r in self.results) for k in sorted({r.kind for r in self.results})},
        }


def _pair(kind: str, d: int, rng: np.random.Generator):
    P = random_basis(d, rng)
    if kind == "identical":
        return P, P.copy()
    if kind == "permuted":
        return P, P[:, rng.permutation(d)]
    if kind == "phased":
        return P, P * np.exp(2j * np.pi * rng.random(d))
    return P, random_basis(d, rng)


KINDS = ("identical", "permuted", "phased", "generic", "generic")


def classify_pair(P: np.ndarray, Q: np.ndarray, probes: list[np.ndarray], kind: str = "") -> PairResult:
    d = P.shape[0]
    pp, qq = projectors(P), projectors(Q)
    comm = _comm(pp, qq)
    if comm < TOL_ASSERT:
        asym = max(_asym(pp, qq, rho)[0] for rho in probes)
        return PairResult(kind, d, comm, asym, "compatible", asym < TOL_SYMMETRY)
    if comm > TOL_CLASSIFY:
        # for rank-1 families the prepared state L_p itself separates the orders
        best, witness = -1.0, None
        for a in pp:
            gap, where = _asym(pp, qq, a)
            if gap > best:
                best, witness = gap, where
        for rho in probes:
            gap, where = _asym(pp, qq, rho)
            if gap > best:
                best, witness = gap, where
        return PairResult(kind, d, comm, best, "incompatible", best > TOL_WITNESS, witness)
    return PairResult(kind, d, comm, float("nan"), "ambiguous", True)


def theorem_fuzz(dims=(2, 3, 4, 5), trials: int = 200, seed: int = 0, n_probes: int = 4) -> FuzzReport:
    """Random basis pairs: commuting projectors must give order-symmetric sequences,
    non-commuting ones must admit a state that separates the two orders."""
    report = FuzzReport()
    for d in dims:
        rng = np.random.default_rng([seed, d])
        for t in range(trials):
            kind = KINDS[t % len(KINDS)]
            P, Q = _pair(kind, d, rng)
            probes = [random_density(d, rng) for _ in range(n_probes)]
            report.results.append(classify_pair(P, Q, probes, kind))
    return report


@dataclass(frozen=True)
class MargenauResult:
    lhs: float  # sum over P outcomes of two-step probabilities
    dephased: float  # q after P was manifested and its result dropped
    direct: float  # q measured straight away
    k: int

    @property
    def consistent(self) -> bool:
        return abs(self.lhs - self.dephased) <= TOL_ASSERT

    @property
    def gap(self) -> float:
        return self.direct - self.lhs


def margenau_check(psi: np.ndarray, P: np.ndarray, Q: np.ndarray, k: int) -> MargenauResult:
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("state vector is not normalized")
    P = _check_square(P, "P basis")
    Q = _check_square(Q, "Q basis")
    q = Q[:, k]
    amps_p = P.conj().T @ psi  # <p_t|psi>
    overlaps = q.conj() @ P  # <q_k|p_t>
    lhs = float(np.sum(np.abs(overlaps) ** 2 * np.abs(amps_p) ** 2))
    rho = pure_state(psi)
    dephased_rho = sum(lam @ rho @ lam for lam in projectors(P))
    dephased = float(np.trace(dephased_rho @ np.outer(q, q.conj())).real)
    direct = float(abs(q.conj() @ psi) ** 2)
    res = MargenauResult(lhs, dephased, direct, k)
    if not res.consistent:
        raise ArithmeticError(f"lhs {lhs} and dephased {dephased} disagree")
    return res
