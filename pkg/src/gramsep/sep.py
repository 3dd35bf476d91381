"""Separability certificates and full families of commuting normal matrices.

A diagonal Gram certificate (diagonal matrices D_1..D_M plus a frame
v_1..v_N) witnesses separability: w_ij = D_i v_j is then a Gram system for
rho, and the product decomposition can be read off the diagonals and the
frame.  The equivalent matrix-family formulation uses the M(M-1)/2 normal
commuting matrices M_mk = U D_m D_k^{-1} U^dag, which map the Gram vectors
w_kn of any K-term decomposition onto w_mn.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import densmat, gram
from .densmat import DensityMatrix, InputError
from .gram import GramSystem

# Diagonals with entries below this (times the largest entry) count as singular.
SINGULAR_DIAG_TOL = 1e-12


class ZeroDiagonal(InputError):
    pass


class SingularD(InputError):
    pass


class CertificateInvalid(InputError):
    pass


class JointDiagonalizationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SeparableDecomposition:
    """Product pairs (phi_k, psi_k) with rho = sum_k |phi_k psi_k><phi_k psi_k|."""

    dim_a: int
    dim_b: int
    phis: np.ndarray  # K x dim_a
    psis: np.ndarray  # K x dim_b

    def __post_init__(self):
        p = np.ascontiguousarray(self.phis, dtype=complex)
        q = np.ascontiguousarray(self.psis, dtype=complex)
        if p.ndim != 2 or q.ndim != 2 or p.shape[0] != q.shape[0]:
            raise InputError("phis and psis must be K x M and K x N")
        if p.shape[1] != self.dim_a or q.shape[1] != self.dim_b:
            raise InputError("product vector dimensions do not match (dim_a, dim_b)")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "phis", p)
        object.__setattr__(self, "psis", q)

    @property
    def k(self) -> int:
        return self.phis.shape[0]

    def product_terms(self) -> np.ndarray:
        """K x (M*N) rows |phi_k (x) psi_k>."""
        return np.einsum("km,kn->kmn", self.phis, self.psis).reshape(self.k, -1)

    def as_decomposition(self) -> gram.Decomposition:
        return gram.Decomposition(self.dim_a, self.dim_b, self.product_terms())

    def density(self) -> np.ndarray:
        t = self.product_terms()
        return t.T @ t.conj()

    def residual(self, rho: DensityMatrix) -> float:
        return float(np.abs(self.density() - rho.mat).max())


@dataclass(frozen=True)
class DiagonalGramCertificate:
    """Separability witness data: diagonals[m] (length K) and frame[n] (length K).

    ``basis_a``/``basis_b`` record the local basis the certificate refers to
    (None means computational); <D_i v_j, D_m v_n> equals rho expressed in
    that basis.
    """

    dim_a: int
    dim_b: int
    diagonals: np.ndarray  # M x K
    frame: np.ndarray      # N x K
    basis_a: np.ndarray | None = None
    basis_b: np.ndarray | None = None

    def __post_init__(self):
        d = np.ascontiguousarray(self.diagonals, dtype=complex)
        v = np.ascontiguousarray(self.frame, dtype=complex)
        if d.shape[0] != self.dim_a or v.shape[0] != self.dim_b or d.shape[1] != v.shape[1]:
            raise InputError("need diagonals M x K and frame N x K")
        d.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "diagonals", d)
        object.__setattr__(self, "frame", v)

    @property
    def k(self) -> int:
        return self.diagonals.shape[1]

    def min_abs_diagonal(self) -> float:
        return float(np.abs(self.diagonals).min())

    def is_nonsingular(self) -> bool:
        scale = max(float(np.abs(self.diagonals).max()), 1e-300)
        return self.min_abs_diagonal() > SINGULAR_DIAG_TOL * scale

    def gram_system(self) -> GramSystem:
        w = np.empty((self.k, self.dim_a * self.dim_b), dtype=complex)
        for m in range(self.dim_a):
            for n in range(self.dim_b):
                w[:, m * self.dim_b + n] = self.diagonals[m] * self.frame[n]
        return GramSystem(self.dim_a, self.dim_b, w)

    def local_frame(self) -> tuple[np.ndarray, np.ndarray]:
        ua = np.eye(self.dim_a, dtype=complex) if self.basis_a is None else self.basis_a
        ub = np.eye(self.dim_b, dtype=complex) if self.basis_b is None else self.basis_b
        return ua, ub


def _rho_in_certificate_basis(cert: DiagonalGramCertificate, rho: DensityMatrix) -> np.ndarray:
    ua, ub = cert.local_frame()
    u = np.kron(ua, ub)
    return u.conj().T @ rho.mat @ u


@dataclass(frozen=True)
class CertificateReport:
    max_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def verify_certificate(cert: DiagonalGramCertificate, rho: DensityMatrix,
                       tol: float = 1e-9) -> CertificateReport:
    """Max entrywise deviation of <D_i v_j, D_m v_n> from rho."""
    target = _rho_in_certificate_basis(cert, rho)
    dev = float(np.abs(cert.gram_system().gram_matrix() - target).max())
    return CertificateReport(dev, tol)


def _givens(dim: int, i: int, j: int, angle: float) -> np.ndarray:
    g = np.eye(dim, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    g[i, i] = c
    g[j, j] = c
    g[i, j] = -s
    g[j, i] = s
    return g


def decomposition_to_certificate(sd: SeparableDecomposition,
                                 enforce_nonsingular: bool = True) -> DiagonalGramCertificate:
    """Certificate with (D_m)_ll = <phi_l|e_m> and (v_n)_l = <psi_l|f_n>.

    If some phi_l is orthogonal to a basis vector the diagonal picks up a
    zero; we then retune the A basis by a small deterministic Givens rotation
    on the offending pair (up to 8 angles) so every diagonal is nonsingular.
    """
    m_dim = sd.dim_a
    ua = np.eye(m_dim, dtype=complex)
    scale = max(float(np.abs(sd.phis).max()), 1e-300)
    for attempt in range(9):
        diag = (ua.conj().T @ sd.phis.T).conj()  # M x K, entry [m, l] = <phi_l|e'_m>
        bad = np.argwhere(np.abs(diag) <= SINGULAR_DIAG_TOL * scale)
        if bad.size == 0 or not enforce_nonsingular:
            break
        if attempt == 8:
            raise ZeroDiagonal(
                "could not remove zero diagonals by basis perturbation")
        m = int(bad[0][0])
        ua = ua @ _givens(m_dim, m, (m + 1) % m_dim, (attempt + 1) * 1e-3)
    frame = sd.psis.T.conj()  # N x K
    basis_a = None if np.allclose(ua, np.eye(m_dim)) else ua
    return DiagonalGramCertificate(sd.dim_a, sd.dim_b, diag, frame, basis_a=basis_a)


def certificate_to_decomposition(cert: DiagonalGramCertificate,
                                 rho: DensityMatrix | None = None,
                                 tol: float = 1e-9) -> SeparableDecomposition:
    """Read the product decomposition off a certificate."""
    ua, ub = cert.local_frame()
    phis = (ua @ cert.diagonals.conj()).T  # K x M
    psis = (ub @ cert.frame.conj()).T      # K x N
    sd = SeparableDecomposition(cert.dim_a, cert.dim_b, phis, psis)
    if rho is not None:
        res = sd.residual(rho)
        if res > tol * max(1.0, float(np.abs(rho.mat).max())):
            raise CertificateInvalid(f"certificate misses rho by {res:.3e}")
    return sd


def pt_frame_conjugate(cert: DiagonalGramCertificate) -> DiagonalGramCertificate:
    """Certificate of rho^{T_B}: conjugate the frame (and its basis)."""
    bb = None if cert.basis_b is None else cert.basis_b.conj()
    return DiagonalGramCertificate(cert.dim_a, cert.dim_b, cert.diagonals,
                                   cert.frame.conj(), basis_a=cert.basis_a, basis_b=bb)


def pt_diagonal_conjugate(cert: DiagonalGramCertificate) -> DiagonalGramCertificate:
    """Certificate of rho^{T_A}: conjugate the diagonals (and their basis)."""
    ba = None if cert.basis_a is None else cert.basis_a.conj()
    return DiagonalGramCertificate(cert.dim_a, cert.dim_b, cert.diagonals.conj(),
                                   cert.frame, basis_a=ba, basis_b=cert.basis_b)


# ---------------------------------------------------------------------------
# FFCNM: the M(M-1)/2 normal commuting matrices of the matrix-family SNC.

@dataclass(frozen=True)
class FfcnmFamily:
    k: int
    matrices: dict[tuple[int, int], np.ndarray]  # (m, k): maps w_kn -> w_mn, m > k
    diagnostics: dict = field(default_factory=dict)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.matrices.keys())


def normality_residual(m: np.ndarray) -> float:
    """||[M, M^dag]||_F / ||M||_F^2."""
    nrm = np.linalg.norm(m)
    if nrm == 0.0:
        return 0.0
    comm = m @ m.conj().T - m.conj().T @ m
    return float(np.linalg.norm(comm) / nrm**2)


def commutation_residual(a: np.ndarray, b: np.ndarray) -> float:
    """||[A, B]||_F / (||A||_F ||B||_F)."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.linalg.norm(a @ b - b @ a) / (na * nb))


def build_ffcnm(cert: DiagonalGramCertificate, u: np.ndarray | None = None) -> FfcnmFamily:
    """Family M_mk = U D_m D_k^{-1} U^dag over all index pairs m > k."""
    if not cert.is_nonsingular():
        raise SingularD(
            f"certificate diagonals nearly singular (min entry {cert.min_abs_diagonal():.3e})")
    k = cert.k
    if u is None:
        u = np.eye(k, dtype=complex)
    u = densmat.as_complex_matrix(u)
    dev = np.abs(u.conj().T @ u - np.eye(k)).max()
    if dev > 1e-10:
        raise gram.NotIsometry(f"U deviates from unitarity by {dev:.3e}")
    mats = {}
    for m in range(1, cert.dim_a):
        for kk in range(m):
            ratio = cert.diagonals[m] / cert.diagonals[kk]
            mats[(m, kk)] = (u * ratio) @ u.conj().T
    diag = {
        "normality": max(normality_residual(x) for x in mats.values()),
        "commutation": _worst_commutation(mats),
    }
    return FfcnmFamily(k, mats, diag)


def _worst_commutation(mats: dict) -> float:
    keys = sorted(mats.keys())
    worst = 0.0
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            worst = max(worst, commutation_residual(mats[a], mats[b]))
    return worst


@dataclass(frozen=True)
class FfcnmReport:
    normality: float
    commutation: float
    relation: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.normality, self.commutation) <= self.tol and self.relation <= self.tol


def verify_ffcnm(fam: FfcnmFamily, g: GramSystem, tol: float = 1e-8) -> FfcnmReport:
    """Check normality, mutual commutation and M_mk w_kn = w_mn on the Gram system."""
    if fam.k != g.k:
        raise InputError(f"family K={fam.k} but Gram system K={g.k}")
    normal = max(normality_residual(m) for m in fam.matrices.values())
    commute = _worst_commutation(fam.matrices)
    relation = 0.0
    for (m, kk), mat in fam.matrices.items():
        for n in range(g.dim_b):
            relation = max(relation, float(
                np.linalg.norm(mat @ g.vector(kk, n) - g.vector(m, n))))
    return FfcnmReport(normal, commute, relation, tol)


def single_pair_relation(mat: np.ndarray, g: GramSystem, target: int = 1,
                         source: int = 0) -> float:
    """Worst residual of M w_{source,n} = w_{target,n}; the one-pair check
    used when only a single A-index pair of an M x N system is analyzed."""
    worst = 0.0
    for n in range(g.dim_b):
        worst = max(worst, float(
            np.linalg.norm(mat @ g.vector(source, n) - g.vector(target, n))))
    return worst


# ---------------------------------------------------------------------------
# Joint diagonalization (Jacobi sweeps, Cardoso-Souloumiac angles).

def _offdiag_mass(mats: np.ndarray) -> float:
    off = 0.0
    for a in mats:
        off += np.linalg.norm(a - np.diag(np.diag(a)))**2
    return float(off)


def _ondiag_mass(mats: np.ndarray) -> float:
    on = 0.0
    for a in mats:
        on += np.linalg.norm(np.diag(a))**2
    return float(on)


def joint_diagonalize(mats, tol: float = 1e-13, max_sweeps: int = 200):
    """Simultaneously diagonalize a commuting family of normal matrices.

    Each matrix is split into commuting Hermitian components (Fuglede-Putnam
    guarantees the split family still commutes), then plane rotations chosen
    from the principal axis of the Cardoso-Souloumiac 3x3 form reduce the
    summed off-diagonal mass.  Returns (u, diagonals, off_residual) with
    u^dag M u ~ diag for every input M.
    """
    mats = [densmat.as_complex_matrix(m) for m in mats]
    k = mats[0].shape[0]
    fam = []
    for m in mats:
        fam.append((m + m.conj().T) / 2)
        fam.append((m - m.conj().T) / 2j)
    a = np.array([(h + h.conj().T) / 2 for h in fam])
    u = np.eye(k, dtype=complex)
    rot_thresh = 1e-14
    for _ in range(max_sweeps):
        rotated = False
        for p in range(k - 1):
            for q in range(p + 1, k):
                gvec = np.stack([
                    (a[:, p, p] - a[:, q, q]).real,
                    2 * a[:, p, q].real,
                    2 * a[:, p, q].imag,
                ])
                gmat = gvec @ gvec.T
                _, evecs = np.linalg.eigh(gmat)
                x, y, z = evecs[:, -1]
                if x < 0:
                    x, y, z = -x, -y, -z
                r = np.sqrt(x * x + y * y + z * z)
                if r == 0.0 or (x + r) == 0.0:
                    continue
                c = np.sqrt((x + r) / (2 * r))
                s = (y - 1j * z) / np.sqrt(2 * r * (x + r))
                if abs(s) <= rot_thresh:
                    continue
                rotated = True
                rot = np.array([[c, -np.conj(s)], [s, c]])
                cols = a[:, :, [p, q]] @ rot
                a[:, :, p] = cols[:, :, 0]
                a[:, :, q] = cols[:, :, 1]
                rows = np.einsum("ij,ajl->ail", rot.conj().T, a[:, [p, q], :])
                a[:, p, :] = rows[:, 0, :]
                a[:, q, :] = rows[:, 1, :]
                ucols = u[:, [p, q]] @ rot
                u[:, p] = ucols[:, 0]
                u[:, q] = ucols[:, 1]
        on = _ondiag_mass(a)
        if _offdiag_mass(a) <= (tol**2) * max(on, 1e-300) or not rotated:
            break
    diags = [np.diag(u.conj().T @ m @ u) for m in mats]
    off = 0.0
    for m in mats:
        t = u.conj().T @ m @ u
        off = max(off, float(np.linalg.norm(t - np.diag(np.diag(t)))
                             / max(np.linalg.norm(t), 1e-300)))
    return u, diags, off


def extract_certificate(fam: FfcnmFamily, g: GramSystem,
                        offdiag_tol: float = 1e-8) -> DiagonalGramCertificate:
    """Certificate from a verified family: jointly diagonalize, read off
    frame v_n = U^dag w_0n and diagonals from the (m, 0) matrices."""
    if fam.k != g.k:
        raise InputError(f"family K={fam.k} but Gram system K={g.k}")
    m_dim = g.dim_a
    needed = [(m, 0) for m in range(1, m_dim)]
    missing = [p for p in needed if p not in fam.matrices]
    if missing:
        raise InputError(f"family lacks the pairs {missing} needed for extraction")
    mats = [fam.matrices[p] for p in needed]
    u, diags, off = joint_diagonalize(mats)
    if off > offdiag_tol:
        raise JointDiagonalizationFailed(
            f"off-diagonal residual {off:.3e} exceeds {offdiag_tol:.1e}")
    k = fam.k
    diagonals = np.ones((m_dim, k), dtype=complex)
    for row, d in zip(range(1, m_dim), diags):
        diagonals[row] = d
    frame = np.empty((g.dim_b, k), dtype=complex)
    for n in range(g.dim_b):
        frame[n] = u.conj().T @ g.vector(0, n)
    return DiagonalGramCertificate(g.dim_a, g.dim_b, diagonals, frame)


# JSON certificate format: {"k": int, "d": [[...]], "v": [[...]]}
# with the optional local bases carried alongside when they are non-trivial.

def certificate_to_json_dict(cert: DiagonalGramCertificate) -> dict:
    out = {
        "k": cert.k,
        "m": cert.dim_a,
        "n": cert.dim_b,
        "d": [densmat.vector_to_lists(row) for row in cert.diagonals],
        "v": [densmat.vector_to_lists(row) for row in cert.frame],
    }
    if cert.basis_a is not None:
        out["basis_a"] = densmat.matrix_to_lists(cert.basis_a)
    if cert.basis_b is not None:
        out["basis_b"] = densmat.matrix_to_lists(cert.basis_b)
    return out


def certificate_from_json_dict(d: dict) -> DiagonalGramCertificate:
    try:
        diag = np.array([densmat.lists_to_vector(row) for row in d["d"]])
        frame = np.array([densmat.lists_to_vector(row) for row in d["v"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed certificate JSON: {exc}") from exc
    ba = densmat.lists_to_matrix(d["basis_a"]) if "basis_a" in d else None
    bb = densmat.lists_to_matrix(d["basis_b"]) if "basis_b" in d else None
    dim_a = int(d.get("m", diag.shape[0]))
    dim_b = int(d.get("n", frame.shape[0]))
    return DiagonalGramCertificate(dim_a, dim_b, diag, frame, basis_a=ba, basis_b=bb)
