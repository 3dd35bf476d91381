"""Shared test fixtures: closed-form two-qubit data and rank-pattern samplers."""

import numpy as np

from gramsep import densmat, provec, sep, states


# --- closed-form two-qubit (Werner-family) data -----------------------------

def werner_spectral_terms(p):
    """Scaled eigenvectors of the Werner state, rows, in the fixed sign
    convention used by the regression data."""
    a = np.sqrt((1 - p) / 8)
    b = np.sqrt((1 + 3 * p) / 8)
    return np.array([
        [0, a, -a, 0],
        [a, 0, 0, -a],
        [0, a, a, 0],
        [b, 0, 0, b],
    ], dtype=complex)


def werner_factor_f2(p):
    return np.array([
        [0, -1, 0, 0],
        [-1, 0, 0, 0],
        [0, 0, 0, np.sqrt((1 - p) / (1 + 3 * p))],
        [0, 0, np.sqrt((1 + 3 * p) / (1 - p)), 0],
    ], dtype=complex)


def werner_certificate(p):
    """The K=4 diagonal-Gram certificate of the Werner state at p <= 1/3."""
    sq = np.sqrt
    d1 = (1 - 1j) * (sq(1 - 3 * p) + sq(p + 1)) / (sq(2) * (sq(1 - p) + sq(3 * p + 1)))
    d2 = -(1 + 1j) * (sq(p + 1) - sq(1 - 3 * p)) / (sq(2) * (sq(1 - p) - sq(3 * p + 1)))
    diag2 = np.array([d1, d2, -d1, -d2])
    hi = (sq(1 - p) + sq(3 * p + 1)) / (4 * sq(2))
    lo = (sq(1 - p) - sq(3 * p + 1)) / (4 * sq(2))
    v1 = np.array([hi * np.exp(1j * np.pi / 2), lo * np.exp(1j * np.pi / 2),
                   hi * np.exp(-1j * np.pi / 2), lo * np.exp(-1j * np.pi / 2)])
    hi2 = (sq(1 - 3 * p) + sq(p + 1)) / (4 * sq(2))
    lo2 = (sq(p + 1) - sq(1 - 3 * p)) / (4 * sq(2))
    v2 = np.array([lo2 * np.exp(3j * np.pi / 4), hi2 * np.exp(-3j * np.pi / 4),
                   lo2 * np.exp(3j * np.pi / 4), hi2 * np.exp(-3j * np.pi / 4)])
    diagonals = np.vstack([np.ones(4, dtype=complex), diag2])
    frame = np.vstack([v1, v2])
    return sep.DiagonalGramCertificate(2, 2, diagonals, frame)


def werner_connection_matrix(p):
    """The unitary connecting the spectral and certificate Gram systems.

    This is the conjugate of the matrix as usually tabulated; the tabulated
    form absorbs a conjugation into its transform convention, and the
    conjugate is what satisfies w'_mn = V w_mn in our inner-product
    convention (checked against the certificate data at machine precision).
    """
    sq = np.sqrt
    c1 = (-sq(1 + p) + 1j * sq(1 - 3 * p)) / (sq(8) * sq(1 - p))
    c3a = (sq(1 - 3 * p) - 1j * sq(1 + p)) / (sq(8) * sq(1 - p))
    c3b = (-sq(1 - 3 * p) + 1j * sq(1 + p)) / (sq(8) * sq(1 - p))
    v = np.array([
        [c1, -0.5j, c3a, -0.5j],
        [c1, -0.5j, c3b, 0.5j],
        [c1, 0.5j, c3a, 0.5j],
        [c1, 0.5j, c3b, -0.5j],
    ])
    return v.conj()


# --- rank-pattern samplers on 2x4 -------------------------------------------

def psd_rank_project(h, r):
    h = (h + h.conj().T) / 2
    evals, evecs = np.linalg.eigh(h)
    evals = np.clip(evals, 0, None)
    idx = np.argsort(evals)[::-1][:r]
    return (evecs[:, idx] * evals[idx]) @ evecs[:, idx].conj().T


def separable_56(seed):
    """Five generic product pairs plus a sixth product vector inside their
    span: a separable 2x4 state with rank pattern (5,6)."""
    rng = np.random.default_rng(seed)
    rho5, sd5 = states.random_separable(2, 4, 5, seed=seed)
    blocks = provec._row_blocks(rho5)
    psi0, psi1 = blocks[0], blocks[1]
    alpha6 = complex(*rng.normal(size=2))
    rows = psi0 + alpha6 * psi1
    f6 = np.linalg.svd(rows)[2][-1].conj()
    e6 = np.array([1, alpha6]) / np.sqrt(1 + abs(alpha6) ** 2)
    phis = np.vstack([sd5.phis, e6])
    psis = np.vstack([sd5.psis, f6 / np.linalg.norm(f6) / np.sqrt(5)])
    sd = sep.SeparableDecomposition(2, 4, phis, psis)
    tr = np.trace(sd.density()).real
    sd = sep.SeparableDecomposition(2, 4, phis / tr ** 0.25, psis / tr ** 0.25)
    rho = densmat.validate_density(sd.density(), 2, 4)
    return rho, sd


def rank57_state(seed, planted=False, iters=250):
    """Rank (5,7) 2x4 state (PPT or not) via alternating projections between
    the rank-5 PSD states and the states whose partial transpose kills one
    frozen direction.  Returns (state, planted pair) or None."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(8, 5)) + 1j * rng.normal(size=(8, 5))
    x = g @ g.conj().T
    x /= np.trace(x).real
    e = f = v = vs = None
    t = 0.15
    if planted:
        e = rng.normal(size=2) + 1j * rng.normal(size=2)
        e /= np.linalg.norm(e)
        f = rng.normal(size=4) + 1j * rng.normal(size=4)
        f /= np.linalg.norm(f)
        v = np.kron(e, f)
        vs = np.kron(e.conj(), f)
    u_frozen = None
    for it in range(iters):
        if planted:
            x = t * np.outer(v, v.conj()) + psd_rank_project(x - t * np.outer(v, v.conj()), 4)
        else:
            x = psd_rank_project(x, 5)
        x /= np.trace(x).real
        y = densmat.partial_transpose(x, "A", dims=(2, 4))
        y = (y + y.conj().T) / 2
        if u_frozen is None or it < 6:
            evals, evecs = np.linalg.eigh(y)
            u = evecs[:, np.argmin(np.abs(evals))]
            if planted:
                u = u - vs * np.vdot(vs, u) / np.vdot(vs, vs)
                nrm = np.linalg.norm(u)
                if nrm < 1e-6:
                    u = evecs[:, np.argsort(np.abs(evals))[1]]
                    u = u - vs * np.vdot(vs, u) / np.vdot(vs, vs)
                    nrm = np.linalg.norm(u)
                u = u / nrm
            u_frozen = u
        proj = np.eye(8) - np.outer(u_frozen, u_frozen.conj())
        x = densmat.partial_transpose(proj @ y @ proj, "A", dims=(2, 4))
    x = psd_rank_project((x + x.conj().T) / 2, 5)
    if planted:
        x = t * np.outer(v, v.conj()) + psd_rank_project(x - t * np.outer(v, v.conj()), 4)
        x = psd_rank_project(x, 5)
    x /= np.trace(x).real
    try:
        dm = densmat.validate_density(x, 2, 4, tol=1e-8)
    except densmat.InputError:
        return None
    pt = densmat.partial_transpose(dm, "A")
    ev = np.sort(np.abs(np.linalg.eigvalsh((pt + pt.conj().T) / 2)))
    if not (ev[0] < 1e-11 and ev[1] > 1e-4):
        return None
    if densmat.rank_pattern(dm) != (5, 7):
        return None
    return dm, (e, f)


def ppt56_state(seed, iters=600):
    """PPT 2x4 state with rank pattern (5,6) via alternating projections;
    generically an edge state.  Returns None when the projections miss."""
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(8, 5)) + 1j * rng.normal(size=(8, 5))
    x = g @ g.conj().T
    x /= np.trace(x).real
    for _ in range(iters):
        x = psd_rank_project(x, 5)
        x /= np.trace(x).real
        y = densmat.partial_transpose(x, "A", dims=(2, 4))
        x = densmat.partial_transpose(psd_rank_project(y, 6), "A", dims=(2, 4))
    x = psd_rank_project((x + x.conj().T) / 2, 5)
    x /= np.trace(x).real
    try:
        dm = densmat.validate_density(x, 2, 4, tol=1e-7)
    except densmat.InputError:
        return None
    if densmat.rank_pattern(dm) != (5, 6) or not densmat.is_ppt(dm)[0]:
        return None
    return dm


def horodecki_range_mixture(b, seed, weight=0.08):
    """Edge state mixed with one product projector from its own range:
    rank pattern (5,6), PPT, not edge, not separable."""
    rho_e = states.horodecki97(b)
    rng = np.random.default_rng(seed)
    blocks = provec._row_blocks(rho_e)
    psi0, psi1 = blocks[0], blocks[1]
    alpha = complex(*rng.normal(size=2))
    rows = psi0 + alpha * psi1
    f = np.linalg.svd(rows)[2][-1].conj()
    e = np.array([1, alpha]) / np.sqrt(1 + abs(alpha) ** 2)
    v = np.kron(e, f / np.linalg.norm(f))
    mix = (1 - weight) * rho_e.mat + weight * np.outer(v, v.conj())
    rho = densmat.validate_density(mix, 2, 4)
    return rho, (e, f / np.linalg.norm(f))
