"""Canonical 2xN forms and normal extensions of partially known matrices.

A full-rank-C 2xN state is brought to the form [[A, B], [B^dag, I]] by the
local map I (x) C^{-1/2}.  Positivity gives A = B B^dag + Lam Lam^dag, and
the PPT condition is equivalent to A - B^dag B >= 0 with a factor
Lamt^dag Lamt.  Separability is then the existence of a normal completion

    M = [[B, R], [T, S]],   R R^dag = Lam Lam^dag,  T^dag T = Lamt^dag Lamt,

with S free; the adjoint of M maps the Gram vectors w_0n of the companion
(N+q)-term decomposition onto w_1n, so a completion feeds straight into the
certificate extraction of :mod:`gramsep.sep`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import densmat, gram, sep
from .densmat import DensityMatrix, InputError, NotPSD


class SingularC(InputError):
    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"lower-right block is singular (min eigenvalue {min_eigenvalue:.3e}); "
            "the state has a product vector in its kernel and is either NPT or "
            "supported on a 2x(N-1) subspace")


class NotPPT(InputError):
    pass


class RankMismatch(InputError):
    pass


class NotSelfPT(InputError):
    pass


def factor_psd(h, rel_tol: float = 1e-9, scale: float | None = None) -> np.ndarray:
    """Minimal-width factor F with F F^dag = h for Hermitian PSD h.

    Columns are sqrt(eigenvalue)-scaled eigenvectors, eigenvalues descending,
    each column phase-fixed; width equals the numeric rank.  ``scale``
    overrides the eigenvalue reference when h is a small difference of
    larger matrices and its own scale is all noise.
    """
    m = densmat.as_complex_matrix(h)
    dev = densmat.hermitian_deviation(m)
    if dev > 1e-8:
        raise densmat.NotHermitian(dev)
    evals, evecs = np.linalg.eigh((m + m.conj().T) / 2)
    if scale is None:
        scale = max(evals.max(), 0.0) if evals.size else 0.0
    if evals.size and evals[0] < -max(rel_tol, 1e-8) * max(scale, 1e-300):
        raise NotPSD(evals[0])
    keep = evals > rel_tol * max(scale, 1e-300)
    lam = evals[keep][::-1]
    vecs = evecs[:, keep][:, ::-1]
    cols = [gram.phase_fix(vecs[:, i]) * np.sqrt(lam[i]) for i in range(lam.size)]
    if not cols:
        return np.zeros((m.shape[0], 0), dtype=complex)
    return np.column_stack(cols)


@dataclass(frozen=True)
class CanonicalForm2xN:
    """Blocks of the transformed state plus the factors of both positivity gaps.

    ``lam`` is N x p with lam lam^dag = A - B B^dag; ``lam_tilde`` is
    p~ x N with lam_tilde^dag lam_tilde = A - B^dag B, or None when the state
    is not PPT.  ``c_inv_half`` is the applied local map, ``c_half`` its
    inverse (both act on the B side only).
    """

    n: int
    a: np.ndarray
    b: np.ndarray
    lam: np.ndarray
    lam_tilde: np.ndarray | None
    c_half: np.ndarray
    c_inv_half: np.ndarray
    ppt: bool
    a_minus_btb_min_eig: float

    @property
    def p(self) -> int:
        return self.lam.shape[1]

    @property
    def p_tilde(self) -> int | None:
        return None if self.lam_tilde is None else self.lam_tilde.shape[0]

    @property
    def rank(self) -> int:
        return self.n + self.p

    def canonical_matrix(self) -> np.ndarray:
        top = np.hstack([self.a, self.b])
        bot = np.hstack([self.b.conj().T, np.eye(self.n)])
        return np.vstack([top, bot])

    def canonical_state(self) -> DensityMatrix:
        return DensityMatrix(2, self.n, self.canonical_matrix(), unnormalized=True)


def canonical_form(rho: DensityMatrix, sing_tol: float = 1e-12,
                   rank_tol: float = densmat.RANK_TOL) -> CanonicalForm2xN:
    """Bring a 2xN state to the form [[A, B], [B^dag, I]] via I (x) C^{-1/2}."""
    if rho.dim_a != 2:
        raise InputError(f"canonical form needs dim_a = 2, got {rho.dim_a}")
    n = rho.dim_b
    c = rho.block(1, 1)
    evals, evecs = np.linalg.eigh((c + c.conj().T) / 2)
    top = max(evals.max(), 0.0)
    if evals[0] <= sing_tol * max(top, 1e-300):
        raise SingularC(float(evals[0]))
    c_inv_half = (evecs / np.sqrt(evals)) @ evecs.conj().T
    c_half = (evecs * np.sqrt(evals)) @ evecs.conj().T
    t = np.kron(np.eye(2), c_inv_half)
    rc = t @ rho.mat @ t
    rc = (rc + rc.conj().T) / 2
    a = rc[:n, :n]
    b = rc[:n, n:]
    a_scale = max(float(np.abs(a).max()), 1e-300)
    gap_rho = a - b @ b.conj().T
    lam = factor_psd((gap_rho + gap_rho.conj().T) / 2, rel_tol=rank_tol, scale=a_scale)
    gap = a - b.conj().T @ b
    gap = (gap + gap.conj().T) / 2
    gap_min = float(np.linalg.eigvalsh(gap)[0])
    ppt = gap_min >= -1e-9 * a_scale
    lam_tilde = (factor_psd(gap, rel_tol=rank_tol, scale=a_scale).conj().T
                 if ppt else None)
    return CanonicalForm2xN(n, a, b, lam, lam_tilde, c_half, c_inv_half,
                            ppt, gap_min)


@dataclass(frozen=True)
class ExtensionProblem:
    """The data of the completion problem: B fixed, Lam fixed up to column
    mixing, Lamt fixed up to row mixing, S free."""

    b: np.ndarray
    lam: np.ndarray        # N x p
    lam_tilde0: np.ndarray  # p~ x N

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def p(self) -> int:
        return self.lam.shape[1]

    @property
    def p_tilde(self) -> int:
        return self.lam_tilde0.shape[0]

    @property
    def q(self) -> int:
        return max(self.p, self.p_tilde)

    def entry_classes(self) -> list[list[str]]:
        """Entry classes of the (N+p~) x (N+p) known part: 'fixed' (B),
        'constrained' (factor blocks, free up to unitary mixing), 'free' (S)."""
        cls = []
        for i in range(self.n + self.p_tilde):
            row = []
            for j in range(self.n + self.p):
                if i < self.n:
                    row.append("fixed" if j < self.n else "constrained")
                else:
                    row.append("constrained" if j < self.n else "free")
            cls.append(row)
        return cls


def known_part(cf: CanonicalForm2xN) -> ExtensionProblem:
    """Completion data from a canonical form; the state must be PPT."""
    if cf.lam_tilde is None:
        raise NotPPT(
            f"A - B^dag B has eigenvalue {cf.a_minus_btb_min_eig:.3e} < 0; no completion exists")
    return ExtensionProblem(cf.b, cf.lam, cf.lam_tilde)


@dataclass(frozen=True)
class ExtensionSolution:
    """A candidate completion: the realized blocks, the assembled matrix and
    its normality residual (relative, ||[M, M^dag]||_F / ||M||_F^2)."""

    matrix: np.ndarray            # (N+q) x (N+q)
    s_block: np.ndarray           # q x q
    r_block: np.ndarray           # N x q, R R^dag = Lam Lam^dag
    t_block: np.ndarray           # q x N, T^dag T = Lamt^dag Lamt
    normality_residual: float
    equation_residual: float
    accepted: bool
    method: str
    mixing: dict

    @property
    def k(self) -> int:
        return self.matrix.shape[0]


def assemble(bmat: np.ndarray, r: np.ndarray, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    n = bmat.shape[0]
    q = s.shape[0]
    m = np.zeros((n + q, n + q), dtype=complex)
    m[:n, :n] = bmat
    if q:
        m[:n, n:] = r
        m[n:, :n] = t
        m[n:, n:] = s
    return m


def rank_n_test(cf: CanonicalForm2xN, tol: float = 1e-9) -> tuple[float, bool]:
    """For rank-N states the completion is B itself; separability reduces to
    [B, B^dag] = 0.  Returns (relative commutator residual, verdict)."""
    if cf.p != 0:
        raise RankMismatch(f"state has rank N + {cf.p}, not N")
    residual = sep.normality_residual(cf.b)
    return residual, residual <= tol


def self_pt_extension(cf: CanonicalForm2xN, tol: float = 1e-9) -> ExtensionSolution:
    """For rho = rho^{T_A} (Hermitian B), S = 0 completes [[B, Lam], [Lam^dag, 0]]
    to a Hermitian, hence normal, matrix."""
    dev = densmat.hermitian_deviation(cf.b)
    if dev > tol:
        raise NotSelfPT(f"B deviates from Hermitian by {dev:.3e}")
    ep = known_part(cf)
    bh = (cf.b + cf.b.conj().T) / 2
    r = ep.lam
    t = ep.lam.conj().T
    s = np.zeros((ep.p, ep.p), dtype=complex)
    m = assemble(bh, r, t, s)
    res = sep.normality_residual(m)
    return ExtensionSolution(m, s, r, t, res, res, res <= 1e-8, "self_pt", {})


def _rank1_vectors(ep: ExtensionProblem) -> tuple[np.ndarray, np.ndarray]:
    if ep.p != 1 or ep.p_tilde != 1:
        raise InputError(f"need p = p~ = 1, got ({ep.p}, {ep.p_tilde})")
    return ep.lam[:, 0], ep.lam_tilde0.conj().T[:, 0]


def solve_extension_55(ep: ExtensionProblem, accept_tol: float = 1e-8) -> ExtensionSolution:
    """Rank pattern (N+1, N+1): decide existence of a scalar completion.

    Normality of [[B, |Lam>], [<Lamt|, s]] reduces (given the positivity
    constraint) to (B - s)|Lamt> = mu (B^dag - s*)|Lam> with |mu| = 1 carrying
    the relative phase of the two factors.  Substituting a = mu^{-1/2},
    c = a*s makes the equation real-linear and homogeneous in (a, c); the
    smallest singular vector decides solvability exactly.
    """
    bmat = ep.b
    lvec, tvec = _rank1_vectors(ep)
    bt = bmat @ tvec
    bl = bmat.conj().T @ lvec
    cols = [bt - bl, 1j * (bt + bl), lvec - tvec, -1j * (lvec + tvec)]
    sys = np.array([[c.real, c.imag] for c in cols]).reshape(4, -1).T
    _, svals, vh = np.linalg.svd(sys)
    scale = float(np.linalg.norm(bmat) * (np.linalg.norm(lvec) + np.linalg.norm(tvec)))
    kernel = vh[-1]
    a = kernel[0] + 1j * kernel[1]
    c = kernel[2] + 1j * kernel[3]
    if abs(a) < 1e-8:
        # a ~ 0 forces c T = c* L; only the trivial kernel unless the factors
        # are parallel, so report the unattainable direction as no solution
        if svals[-2] < 1e-10 * max(svals[0], 1e-300):
            other = vh[-2]
            a = other[0] + 1j * other[1]
            c = other[2] + 1j * other[3]
    if abs(a) < 1e-12:
        return ExtensionSolution(
            assemble(bmat, lvec[:, None], tvec[None, :].conj(), np.zeros((1, 1))),
            np.zeros((1, 1)), lvec[:, None], tvec[None, :].conj(),
            1.0, float(svals[-1]), False, "rank1_linear", {})
    a, c = a / abs(a), c / abs(a)
    s = c / a
    mu = np.conj(a) ** 2
    eq = (bmat - s * np.eye(ep.n)) @ tvec - mu * (bmat.conj().T - np.conj(s) * np.eye(ep.n)) @ lvec
    eq_res = float(np.linalg.norm(eq))
    half = np.sqrt(mu)
    r = (half * lvec)[:, None]
    t = (np.conj(half) * tvec)[None, :].conj()
    m = assemble(bmat, r, t, np.array([[s]]))
    norm_res = sep.normality_residual(m)
    accepted = eq_res <= accept_tol * max(scale, 1e-300)
    return ExtensionSolution(m, np.array([[s]]), r, t, norm_res, eq_res, accepted,
                             "rank1_linear", {"s": s, "mu": mu})


def _offdiag_block_lstsq(bmat, r, t, q):
    """S minimizing ||B T^dag + R S^dag - B^dag R - T^dag S||_F (real-linear)."""
    n = bmat.shape[0]
    rhs = bmat.conj().T @ r - bmat @ t.conj().T
    cols = []
    basis = []
    for i in range(q):
        for j in range(q):
            for val in (1.0, 1.0j):
                e = np.zeros((q, q), dtype=complex)
                e[i, j] = val
                basis.append(e)
                eff = r @ e.conj().T - t.conj().T @ e
                cols.append(np.concatenate([eff.real.ravel(), eff.imag.ravel()]))
    sysm = np.array(cols).T
    target = np.concatenate([rhs.real.ravel(), rhs.imag.ravel()])
    coef, *_ = np.linalg.lstsq(sysm, target, rcond=None)
    s = np.zeros((q, q), dtype=complex)
    for x, e in zip(coef, basis):
        s += x * e
    return s


def solve_extension_56(ep: ExtensionProblem, grid: tuple[int, int, int] = (12, 12, 8),
                       accept_tol: float = 1e-6, refine: bool = True) -> ExtensionSolution:
    """Rank pattern (N+1, N+2): upper-right block is |Lam>(alpha, beta).

    The two off-diagonal normality equations are real-linear in S for a fixed
    unit vector (alpha, beta), so we grid the sphere (relative phase included;
    the leftover overall phase cannot be gauged once the Lamt factor is
    pinned), solve each cell by least squares, and polish the best cell over
    all parameters with a local least-squares descent on the full commutator.
    """
    if ep.p != 1 or ep.p_tilde != 2:
        raise InputError(f"need (p, p~) = (1, 2), got ({ep.p}, {ep.p_tilde})")
    bmat = ep.b
    lvec = ep.lam[:, 0]
    tmat = ep.lam_tilde0  # 2 x N

    def build(theta, phi, gamma):
        ab = np.array([np.cos(theta), np.sin(theta) * np.exp(1j * phi)]) * np.exp(1j * gamma)
        r = lvec[:, None] * ab[None, :]
        s = _offdiag_block_lstsq(bmat, r, tmat, 2)
        m = assemble(bmat, r, tmat, s)
        return m, s, r, ab

    best = None
    nth, nph, nga = grid
    for theta in np.linspace(0, np.pi / 2, nth):
        for phi in np.linspace(0, 2 * np.pi, nph, endpoint=False):
            for gamma in np.linspace(0, 2 * np.pi, nga, endpoint=False):
                m, s, r, ab = build(theta, phi, gamma)
                res = sep.normality_residual(m)
                if best is None or res < best[0]:
                    best = (res, (theta, phi, gamma), s, r, ab, m)

    res, angles, s, r, ab, m = best
    if refine:
        def fun(x):
            mm, *_ = build(x[0], x[1], x[2])
            comm = mm @ mm.conj().T - mm.conj().T @ mm
            return np.concatenate([comm.real.ravel(), comm.imag.ravel()])

        sol = scipy.optimize.least_squares(fun, np.array(angles), method="lm",
                                           xtol=1e-15, ftol=1e-15, gtol=1e-15)
        m2, s2, r2, ab2 = build(*sol.x)
        res2 = sep.normality_residual(m2)
        if res2 < res:
            res, s, r, ab, m = res2, s2, r2, ab2, m2
    eq = np.linalg.norm(m @ m.conj().T - m.conj().T @ m)
    return ExtensionSolution(m, s, r, tmat, res, float(eq), res <= accept_tol,
                             "alpha_beta_grid", {"alpha": ab[0], "beta": ab[1]})


def _polar_isometry(z: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(z, full_matrices=False)
    return u @ vh


def _pack(z1, z2, s):
    return np.concatenate([z1.real.ravel(), z1.imag.ravel(),
                           z2.real.ravel(), z2.imag.ravel(),
                           s.real.ravel(), s.imag.ravel()])


def solve_extension_general(ep: ExtensionProblem, budget: int = 12, seed: int = 0,
                            accept_tol: float = 1e-8,
                            target: float = 1e-12, jobs: int = 1) -> ExtensionSolution:
    """Minimize ||[M, M^dag]||_F over R = Lam V^dag, T = W Lamt, S free.

    Multi-start local least squares (isometries via polar retraction of
    unconstrained complex matrices).  A vanishing minimum certifies the
    completion; a nonzero best residual is reported without any claim of
    nonexistence.  ``jobs`` > 1 runs the independent starts in a thread pool;
    the result is merged by minimal residual with the start index as the
    deterministic tie-break.
    """
    n, p, pt, q = ep.n, ep.p, ep.p_tilde, ep.q
    bmat = ep.b
    if q == 0:
        res = sep.normality_residual(bmat)
        empty = np.zeros((0, 0), dtype=complex)
        return ExtensionSolution(bmat.copy(), empty, np.zeros((n, 0), dtype=complex),
                                 np.zeros((0, n), dtype=complex), res, res,
                                 res <= accept_tol, "rank_n", {})

    rng = np.random.default_rng(seed)
    shapes = ((q, p), (q, pt), (q, q))
    sizes = [2 * q * p, 2 * q * pt, 2 * q * q]

    def unpack(x):
        parts = np.split(x, np.cumsum(sizes)[:-1])
        z1 = (parts[0][:q * p] + 1j * parts[0][q * p:]).reshape(shapes[0])
        z2 = (parts[1][:q * pt] + 1j * parts[1][q * pt:]).reshape(shapes[1])
        s = (parts[2][:q * q] + 1j * parts[2][q * q:]).reshape(shapes[2])
        return z1, z2, s

    def blocks(x):
        z1, z2, s = unpack(x)
        r = ep.lam @ _polar_isometry(z1).conj().T
        t = _polar_isometry(z2) @ ep.lam_tilde0
        return r, t, s

    def fun(x):
        r, t, s = blocks(x)
        m = assemble(bmat, r, t, s)
        comm = m @ m.conj().T - m.conj().T @ m
        return np.concatenate([comm.real.ravel(), comm.imag.ravel()])

    def start(noise: float):
        z1 = np.vstack([np.eye(p), np.zeros((q - p, p))]).astype(complex)
        z2 = np.vstack([np.eye(pt), np.zeros((q - pt, pt))]).astype(complex)
        if noise:
            z1 = z1 + noise * (rng.normal(size=shapes[0]) + 1j * rng.normal(size=shapes[0]))
            z2 = z2 + noise * (rng.normal(size=shapes[1]) + 1j * rng.normal(size=shapes[1]))
        r = ep.lam @ _polar_isometry(z1).conj().T
        t = _polar_isometry(z2) @ ep.lam_tilde0
        s = _offdiag_block_lstsq(bmat, r, t, q)
        return _pack(z1, z2, s)

    def descend(x0):
        sol = scipy.optimize.least_squares(fun, x0, method="lm",
                                           xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                           max_nfev=4000)
        r, t, s = blocks(sol.x)
        res = sep.normality_residual(assemble(bmat, r, t, s))
        return res, sol.x

    starts = [start(0.0 if trial == 0 else 1.0) for trial in range(max(budget, 1))]
    best_x, best_res = None, np.inf
    if jobs > 1:
        import concurrent.futures

        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            for res, x in pool.map(descend, starts):
                if res < best_res:
                    best_x, best_res = x, res
    else:
        for x0 in starts:
            res, x = descend(x0)
            if res < best_res:
                best_x, best_res = x, res
            if best_res <= target:
                break

    r, t, s = blocks(best_x)
    m = assemble(bmat, r, t, s)
    eq = float(np.linalg.norm(m @ m.conj().T - m.conj().T @ m))
    return ExtensionSolution(m, s, r, t, best_res, eq, best_res <= accept_tol,
                             "multistart_lm", {"starts": min(budget, max(budget, 1))})


# ---------------------------------------------------------------------------
# From a completion back to a certificate of the original state.

def companion_gram(cf: CanonicalForm2xN, r_block: np.ndarray) -> gram.GramSystem:
    """Gram system of the A-swapped canonical state for the (N+q)-term
    decomposition |0>|k> + |1>B|k> plus |1>|R_j>; its w_0n are the standard
    basis vectors, which is what pins the known part of the completion."""
    n = cf.n
    q = r_block.shape[1]
    k = n + q
    terms = np.zeros((k, 2 * n), dtype=complex)
    for kk in range(n):
        terms[kk, kk] = 1.0
        terms[kk, n:] = cf.b[:, kk]
    for j in range(q):
        terms[n + j, n:] = r_block[:, j]
    return gram.GramSystem(2, n, terms.conj())


def swapped_canonical_matrix(cf: CanonicalForm2xN) -> np.ndarray:
    """[[I, B^dag], [B, A]]: the canonical state with the A-side basis swapped."""
    n = cf.n
    top = np.hstack([np.eye(n), cf.b.conj().T])
    bot = np.hstack([cf.b, cf.a])
    return np.vstack([top, bot])


def extension_to_decomposition(cf: CanonicalForm2xN, sol: ExtensionSolution,
                               rho: DensityMatrix, tol: float = 1e-8
                               ) -> tuple[sep.SeparableDecomposition, sep.FfcnmReport]:
    """Extract the product decomposition certified by a completion.

    The adjoint of the completion maps w_0n to w_1n on the companion Gram
    system of the swapped canonical state; joint diagonalization yields its
    certificate, and the local maps (A-side swap, then I (x) C^{1/2}) carry
    the product vectors back to the original state.
    """
    g = companion_gram(cf, sol.r_block)
    fam = sep.FfcnmFamily(g.k, {(1, 0): sol.matrix.conj().T})
    report = sep.verify_ffcnm(fam, g)
    cert_hat = sep.extract_certificate(fam, g)
    sd_hat = sep.certificate_to_decomposition(cert_hat)
    phis = sd_hat.phis[:, ::-1]            # undo the A-side swap
    psis = sd_hat.psis @ cf.c_half.T       # psi -> C^{1/2} psi
    sd = sep.SeparableDecomposition(2, cf.n, phis, psis)
    res = sd.residual(rho)
    if res > tol * max(1.0, float(np.abs(rho.mat).max())):
        raise sep.CertificateInvalid(
            f"extension-derived decomposition misses rho by {res:.3e}")
    return sd, report


def deflate_b_support(rho: DensityMatrix, rel_tol: float = densmat.RANK_TOL
                      ) -> tuple[DensityMatrix, np.ndarray]:
    """Restrict the B side to the support of tr_A rho.

    Returns the reduced state and the isometry Y with psi = Y psi' mapping
    reduced B-side vectors back to the original space.
    """
    n = rho.dim_b
    rho_b = rho.block(0, 0) + rho.block(1, 1)
    evals, evecs = np.linalg.eigh((rho_b + rho_b.conj().T) / 2)
    keep = evals > rel_tol * max(evals.max(), 1e-300)
    y = evecs[:, keep][:, ::-1]
    if y.shape[1] == n:
        return rho, np.eye(n, dtype=complex)
    iso = np.kron(np.eye(2), y)
    reduced = iso.conj().T @ rho.mat @ iso
    red = densmat.validate_density(reduced, 2, y.shape[1],
                                   unnormalized=rho.unnormalized)
    return red, y
