"""Named and random state generators with known ground truth.

All randomness flows through numpy's PCG64 generator seeded explicitly, so
every fixture is reproducible from its (params, seed) pair.
"""

from __future__ import annotations

import numpy as np

from . import densmat, sep
from .densmat import DensityMatrix, InputError


class UnsupportedDimension(InputError):
    pass


def werner(p: float) -> DensityMatrix:
    """The one-parameter two-qubit family with off-diagonal weight 2p/4.

    Separable exactly for p <= 1/3; the partial transpose has minimum
    eigenvalue (1 - 3p)/4.
    """
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must be in [0, 1], got {p}")
    mat = np.array([
        [1 + p, 0, 0, 2 * p],
        [0, 1 - p, 0, 0],
        [0, 0, 1 - p, 0],
        [2 * p, 0, 0, 1 + p],
    ], dtype=complex) / 4
    return densmat.validate_density(mat, 2, 2)


def horodecki97_blocks(b: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical-form data (B, |Lam>, |Lamt>) of the 2x4 rank-5 edge family.

    B is the superdiagonal shift; the primed factor |Lamt> is forced by
    A - B^dag B = |Lamt><Lamt| and swaps the roles of the two weights.
    """
    if not 0.0 < b <= 1.0:
        raise InputError(f"b must be in (0, 1]; b=0 is the divergent limiting case")
    bmat = np.zeros((4, 4), dtype=complex)
    bmat[0, 1] = bmat[1, 2] = bmat[2, 3] = 1.0
    lo = np.sqrt((1 - b) / (2 * b))
    hi = np.sqrt((1 + b) / (2 * b))
    lam = np.array([lo, 0, 0, hi], dtype=complex)
    lam_tilde = np.array([hi, 0, 0, lo], dtype=complex)
    return bmat, lam, lam_tilde


def horodecki97(b: float) -> DensityMatrix:
    """The 2x4 rank-5 PPT state built from its canonical data, trace-normalized.

    PPT for every b in (0, 1]; an entangled edge state for b < 1 and
    separable only at b = 1 (and in the b -> 0 limit).
    """
    bmat, lam, _ = horodecki97_blocks(b)
    a = bmat @ bmat.conj().T + np.outer(lam, lam.conj())
    top = np.hstack([a, bmat])
    bot = np.hstack([bmat.conj().T, np.eye(4)])
    mat = np.vstack([top, bot])
    return densmat.validate_density(mat / np.trace(mat).real, 2, 4)


def _unit_rows(rng: np.random.Generator, k: int, dim: int) -> np.ndarray:
    v = rng.normal(size=(k, dim)) + 1j * rng.normal(size=(k, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_separable(m: int, n: int, k: int, seed: int
                     ) -> tuple[DensityMatrix, sep.SeparableDecomposition]:
    """Mixture of k product states drawn from the sphere measure, weight 1/k each."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    phis = _unit_rows(rng, k, m)
    psis = _unit_rows(rng, k, n) / np.sqrt(k)
    sd = sep.SeparableDecomposition(m, n, phis, psis)
    rho = densmat.validate_density(sd.density(), m, n)
    return rho, sd


def random_density(m: int, n: int, r: int, seed: int) -> DensityMatrix:
    """rho = G G^dag / tr(G G^dag) with G an (mn x r) complex Gaussian; rank r a.s."""
    if not 1 <= r <= m * n:
        raise InputError(f"rank must be in [1, {m * n}], got {r}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(m * n, r)) + 1j * rng.normal(size=(m * n, r))
    mat = g @ g.conj().T
    return densmat.validate_density(mat / np.trace(mat).real, m, n)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish unitary from the QR of a complex Gaussian, phases fixed."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def brute_force_separability(rho: DensityMatrix, tol: float = densmat.DEFAULT_TOL) -> bool:
    """Independent separability oracle for 2x2 and 2x3, where the partial
    transpose test is exact."""
    if rho.dim_a != 2 or rho.dim_b not in (2, 3):
        raise UnsupportedDimension(
            f"exact oracle covers 2x2 and 2x3 only, got {rho.dim_a}x{rho.dim_b}")
    ppt, _ = densmat.is_ppt(rho, tol)
    return ppt
