"""Dense complex matrices, density-matrix validation, product indexing and PPT tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Default relative tolerance for Hermiticity / PSD / trace checks.  Double
# precision eigensolvers deliver ~1e-12 backward error; 1e-9 absorbs
# accumulation through a few chained decompositions.
DEFAULT_TOL = 1e-9

# Rank decisions use this relative eigenvalue threshold unless overridden.
RANK_TOL = 1e-9


class InputError(ValueError):
    """Bad user input (wrong shape, out-of-range index, malformed JSON)."""


class SizeMismatch(InputError):
    pass


class NotHermitian(InputError):
    def __init__(self, deviation):
        self.deviation = deviation
        super().__init__(f"matrix is not Hermitian (max deviation {deviation:.3e})")


class NotPSD(InputError):
    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is not PSD (min eigenvalue {min_eigenvalue:.3e})")


class TraceDeviation(InputError):
    def __init__(self, trace):
        self.trace = trace
        super().__init__(f"trace deviates from one (trace {trace})")


def product_index(i: int, j: int, dim_b: int) -> int:
    """Flat index of |e_i f_j> with the A index slowest: i*dim_b + j."""
    if i < 0 or j < 0 or j >= dim_b:
        raise InputError(f"index ({i},{j}) out of range for dim_b={dim_b}")
    return i * dim_b + j


def split_index(idx: int, dim_b: int) -> tuple[int, int]:
    """Inverse of product_index."""
    if idx < 0:
        raise InputError(f"negative flat index {idx}")
    return divmod(idx, dim_b)


def as_complex_matrix(mat) -> np.ndarray:
    """Coerce to a C-contiguous complex128 2-D array."""
    m = np.ascontiguousarray(mat, dtype=complex)
    if m.ndim != 2:
        raise InputError(f"expected a 2-D array, got ndim={m.ndim}")
    return m


def hermitian_deviation(mat: np.ndarray) -> float:
    """Max-entry deviation from Hermiticity, relative to the largest entry."""
    scale = np.abs(mat).max()
    if scale == 0.0:
        return 0.0
    return np.abs(mat - mat.conj().T).max() / scale


@dataclass(frozen=True)
class DensityMatrix:
    """A validated Hermitian PSD operator on an M x N product space.

    ``mat`` is stored read-only.  ``unnormalized`` marks states whose trace is
    intentionally not one (e.g. after the canonical 2xN transform, which
    rescales the trace); validation then skips the trace check.
    """

    dim_a: int
    dim_b: int
    mat: np.ndarray
    tol: float = DEFAULT_TOL
    unnormalized: bool = False

    def __post_init__(self):
        m = as_complex_matrix(self.mat)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def block(self, i: int, m: int) -> np.ndarray:
        """The (i,m) block of the A-indexed block structure (dim_b x dim_b)."""
        n = self.dim_b
        return self.mat[i * n:(i + 1) * n, m * n:(m + 1) * n]


def validate_density(mat, dim_a: int, dim_b: int, tol: float = DEFAULT_TOL,
                     unnormalized: bool = False) -> DensityMatrix:
    """Validate Hermiticity, positivity and trace; return a DensityMatrix.

    Raises SizeMismatch / NotHermitian / NotPSD / TraceDeviation with the
    offending quantity attached.
    """
    if dim_a < 2 or dim_b < dim_a:
        raise InputError(f"need 2 <= dim_a <= dim_b, got ({dim_a},{dim_b})")
    m = as_complex_matrix(mat)
    d = dim_a * dim_b
    if m.shape != (d, d):
        raise SizeMismatch(f"expected {d}x{d}, got {m.shape[0]}x{m.shape[1]}")
    dev = hermitian_deviation(m)
    if dev > tol:
        raise NotHermitian(dev)
    h = (m + m.conj().T) / 2
    evals = np.linalg.eigvalsh(h)
    top = max(evals[-1], 0.0)
    if evals[0] < -tol * max(top, 1e-300):
        raise NotPSD(evals[0])
    tr = np.trace(m).real
    if not unnormalized and abs(tr - 1.0) > tol * max(1.0, abs(tr)):
        raise TraceDeviation(np.trace(m))
    return DensityMatrix(dim_a, dim_b, m, tol=tol, unnormalized=unnormalized)


def partial_transpose(rho, subsystem: str = "A", dims=None) -> np.ndarray:
    """Partial transpose on one tensor factor.

    T_A sends rho_{ij,mn} to rho_{mj,in}; T_B sends it to rho_{in,mj}.
    Accepts a DensityMatrix or a raw array with explicit ``dims=(M, N)``.
    """
    if isinstance(rho, DensityMatrix):
        m, n, mat = rho.dim_a, rho.dim_b, rho.mat
    else:
        if dims is None:
            raise InputError("dims=(M, N) required for raw arrays")
        m, n = dims
        mat = as_complex_matrix(rho)
    t = mat.reshape(m, n, m, n)
    if subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    elif subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise InputError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return np.ascontiguousarray(t.reshape(m * n, m * n))


@dataclass(frozen=True)
class RankReport:
    rank: int
    eigenvalues: np.ndarray  # descending
    threshold: float

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)


def numeric_rank(h, rel_tol: float = RANK_TOL) -> RankReport:
    """Rank of a Hermitian matrix: the number of its nonvanishing eigenvalues,
    i.e. those with |eig| above rel_tol * max|eig|."""
    m = as_complex_matrix(h)
    dev = hermitian_deviation(m)
    if dev > 1e-8:
        raise NotHermitian(dev)
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)[::-1]
    scale = np.abs(evals).max() if evals.size else 0.0
    threshold = rel_tol * scale
    rank = int(np.sum(np.abs(evals) > threshold))
    return RankReport(rank, evals, threshold)


def is_ppt(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """PPT test: (min eigenvalue of rho^{T_A} >= -tol * max eigenvalue, min eigenvalue)."""
    pt = partial_transpose(rho, "A")
    evals = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    min_eig = float(evals[0])
    max_eig = float(max(evals[-1], 0.0))
    return min_eig >= -tol * max(max_eig, 1e-300), min_eig


def rank_pattern(rho: DensityMatrix, rel_tol: float = RANK_TOL) -> tuple[int, int]:
    """(rank rho, rank rho^{T_A})."""
    r = numeric_rank(rho.mat, rel_tol).rank
    rt = numeric_rank(partial_transpose(rho, "A"), rel_tol).rank
    return r, rt


# ---------------------------------------------------------------------------
# JSON state format:
#   {"m": int, "n": int, "unnormalized": bool, "data": [[[re, im], ...], ...]}
# row-major with row index i*n + j.

def complex_to_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def matrix_to_lists(mat: np.ndarray) -> list:
    return [[complex_to_pair(z) for z in row] for row in np.asarray(mat, dtype=complex)]


def vector_to_lists(vec: np.ndarray) -> list:
    return [complex_to_pair(z) for z in np.asarray(vec, dtype=complex)]


def lists_to_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed complex matrix data: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError("matrix data must be nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def lists_to_vector(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("vector data must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def state_to_json_dict(rho: DensityMatrix) -> dict:
    return {
        "m": rho.dim_a,
        "n": rho.dim_b,
        "unnormalized": rho.unnormalized,
        "data": matrix_to_lists(rho.mat),
    }


def state_from_json_dict(d: dict, tol: float = DEFAULT_TOL) -> DensityMatrix:
    try:
        m = int(d["m"])
        n = int(d["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"state JSON needs integer 'm' and 'n': {exc}") from exc
    unnormalized = bool(d.get("unnormalized", False))
    mat = lists_to_matrix(d.get("data"))
    if mat.shape[0] != mat.shape[1]:
        raise InputError(f"state data must be square, got {mat.shape}")
    return validate_density(mat, m, n, tol=tol, unnormalized=unnormalized)
