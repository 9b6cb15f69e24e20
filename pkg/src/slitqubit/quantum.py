"""Qubit and qudit primitives in the slit basis.

States are plain numpy arrays: a pure state is a 1-D complex vector, a
density matrix is a 2-D complex array. The basis order is fixed everywhere
as ``{|l>, |r>}`` for one qubit and ``{|ll>, |lr>, |rl>, |rr>}`` for two,
with arm A as the left tensor factor.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
PSD_TOL = -1e-9

BASIS_1Q = ("l", "r")
BASIS_2Q = ("ll", "lr", "rl", "rr")

SIGMA_I = np.array([[1, 0], [0, 1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# operator basis in the order used for Pauli coefficient vectors
PAULI_BASIS = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)

_PAULI = {
    "i": SIGMA_I,
    "identity": SIGMA_I,
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
}

_SQ2 = 1 / np.sqrt(2)
_KETS = {
    "l": np.array([1, 0], dtype=complex),
    "r": np.array([0, 1], dtype=complex),
    "+": np.array([_SQ2, _SQ2], dtype=complex),
    "-": np.array([_SQ2, -_SQ2], dtype=complex),
    "+i": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "-i": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}


class BlochPoint(NamedTuple):
    bx: float
    by: float
    bz: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.bx**2 + self.by**2 + self.bz**2))

    @property
    def azimuth(self) -> float:
        return float(np.arctan2(self.by, self.bx))

    def as_array(self) -> np.ndarray:
        return np.array([self.bx, self.by, self.bz])


def pauli(axis: str) -> np.ndarray:
    """Return the Pauli matrix for ``axis`` in {x, y, z, i/identity}."""
    try:
        return _PAULI[axis.lower()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def ket(label: str) -> np.ndarray:
    """Normalized single-qubit ket for one of l, r, +, -, +i, -i."""
    try:
        return _KETS[label].copy()
    except KeyError:
        raise ValueError(f"unknown ket label {label!r}") from None


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` as the left (arm A) factor."""
    return np.kron(np.asarray(a), np.asarray(b))


def psi_slits() -> np.ndarray:
    """The ideal entangled slit state (|l>|r> + |r>|l>)/sqrt(2)."""
    return (tensor(_KETS["l"], _KETS["r"]) + tensor(_KETS["r"], _KETS["l"])) * _SQ2


def density(psi: np.ndarray) -> np.ndarray:
    """Outer product |psi><psi| (no normalization applied)."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def hermitize(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    return (mat + mat.conj().T) / 2


def is_hermitian(mat: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    mat = np.asarray(mat)
    return mat.ndim == 2 and mat.shape[0] == mat.shape[1] and bool(
        np.all(np.abs(mat - mat.conj().T) <= tol)
    )


def check_density(
    rho: np.ndarray, *, normalized: bool = True, physical: bool = True
) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises:
        DimensionError: if ``rho`` is not square.
        ValueError: if Hermiticity, trace or positivity checks fail.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    if not is_hermitian(rho):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if normalized and abs(tr - 1) > TRACE_TOL:
        raise ValueError(f"density matrix trace is {tr}, expected 1")
    if not normalized and tr <= 0:
        raise ValueError("density matrix must have positive trace")
    if physical and np.linalg.eigvalsh(rho).min() < PSD_TOL * max(tr, 1.0):
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """Overlap <psi|rho|psi> with a pure target state."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if rho.shape != (psi.size, psi.size):
        raise DimensionError(
            f"state of dimension {psi.size} does not match matrix {rho.shape}"
        )
    if not is_hermitian(rho, tol=1e-9):
        raise ValueError("density matrix is not Hermitian")
    return float(np.real(psi.conj() @ rho @ psi))


def bloch_of(state: np.ndarray) -> BlochPoint:
    """Bloch vector (Tr[rho sx], Tr[rho sy], Tr[rho sz]) of a qubit.

    Accepts a ket or a density matrix; either is normalized first.
    """
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.size != 2:
            raise DimensionError("Bloch coordinates need a qubit")
        rho = density(state)
    else:
        if state.shape != (2, 2):
            raise DimensionError("Bloch coordinates need a qubit")
        rho = state
    tr = np.trace(rho).real
    if tr <= 0 or not np.isfinite(tr):
        raise ValueError("cannot normalize a zero-norm state")
    rho = rho / tr
    return BlochPoint(
        float(2 * rho[0, 1].real),
        float(-2 * rho[0, 1].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


def state_from_bloch(b) -> np.ndarray:
    """Normalized ket with the given unit Bloch vector."""
    bx, by, bz = np.asarray(b, dtype=float) / np.linalg.norm(b)
    theta = np.arccos(np.clip(bz, -1.0, 1.0))
    phi = np.arctan2(by, bx)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def density_from_bloch(b) -> np.ndarray:
    bx, by, bz = b
    return (SIGMA_I + bx * SIGMA_X + by * SIGMA_Y + bz * SIGMA_Z) / 2


def project_physical(rho: np.ndarray) -> np.ndarray:
    """Nearest trace-one positive semidefinite matrix in Frobenius norm.

    The eigenvalues are projected onto the probability simplex: negative
    weight is clipped and the trace deficit is spread uniformly over the
    surviving eigenvalues.
    """
    rho = hermitize(rho)
    w, v = np.linalg.eigh(rho)
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    keep = u - (css - 1) / k > 0
    r = k[keep][-1]
    shift = (css[r - 1] - 1) / r
    lam = np.clip(w - shift, 0, None)
    out = (v * lam) @ v.conj().T
    return hermitize(out)


def condition(rho_ab: np.ndarray, m: np.ndarray, side: str = "B") -> np.ndarray:
    """Partial inner product <m|rho_AB|m> on one arm of a two-qubit state.

    ``m`` may be non-normalized; the trace of the result is the relative
    detection probability of the conditioning outcome.
    """
    rho_ab = np.asarray(rho_ab, dtype=complex)
    m = np.asarray(m, dtype=complex)
    n = m.size
    if rho_ab.shape != (n * n, n * n):
        raise DimensionError(
            f"conditioning vector of size {n} does not fit matrix {rho_ab.shape}"
        )
    r = rho_ab.reshape(n, n, n, n)  # [a, b, a', b']
    side = side.upper()
    if side == "B":
        return np.einsum("j,ajbk,k->ab", m.conj(), r, m)
    if side == "A":
        return np.einsum("j,jakb,k->ab", m.conj(), r, m)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def depolarize(rho: np.ndarray, p: float) -> np.ndarray:
    """Mix ``rho`` with the maximally mixed state at weight ``p``."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    return (1 - p) * rho + p * np.trace(rho) * np.eye(dim) / dim


def random_pure_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, dim: int = 2, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def pauli_coefficients(rho: np.ndarray) -> np.ndarray:
    """Real vector (Tr rho, Tr rho sx, Tr rho sy, Tr rho sz) of a qubit operator."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ s).real for s in PAULI_BASIS])
