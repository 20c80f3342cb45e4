"""Superoperator tools for a single qutrit.

Quantum channels on the 3-level system are represented as 9x9 real transfer
matrices over a Hermitian, orthonormal operator basis (the identity plus the
eight Gell-Mann matrices, each normalized to unit Hilbert-Schmidt norm).
States and measurement effects become real 9-vectors ("superkets" /
"superbras"), channel composition becomes matrix multiplication, and complete
positivity can be read off the eigenvalues of the Choi matrix obtained by a
fixed basis change.

Conventions:

- Inner product is Tr(A^dag B) with no dimensional prefactor, so the basis is
  orthonormal and the transfer matrix of the identity channel is the identity.
- vec() column-stacks (Fortran order), matching vec(A X B) = (B^T x A) vec(X).
- Transfer matrices act on column superkets: applying gate G then gate H gives
  the matrix product R_H @ R_G.
"""

from dataclasses import dataclass

import numpy as np

DIM = 3
SDIM = DIM * DIM

# Tolerances used by the structural checks below.
ATOL_HERMITIAN = 1e-12
ATOL_UNITARY = 1e-10
ATOL_TP = 1e-8
ATOL_CP = 1e-8


class NonHermitianError(ValueError):
    """Operator expected to be Hermitian is not."""


class NonUnitaryError(ValueError):
    """Matrix expected to be unitary is not."""


class EmptyChannelError(ValueError):
    """A Kraus channel needs at least one operator."""


@dataclass(frozen=True)
class OperatorBasis:
    """Orthonormal Hermitian operator basis for the qutrit.

    elements: array of shape (9, 3, 3), elements[m] is the m-th basis matrix.
    labels:   human-readable names, in the same order.
    """

    elements: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.elements.setflags(write=False)

    def __len__(self) -> int:
        return len(self.labels)


def _gellmann_matrices() -> dict[str, np.ndarray]:
    """The eight standard (unnormalized) Gell-Mann matrices plus identity."""
    x01 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    x02 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    x12 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    y01 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
    y02 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
    y12 = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
    z1 = np.diag([1.0, -1.0, 0.0]).astype(complex)
    z2 = np.diag([1.0, 1.0, -2.0]).astype(complex) / np.sqrt(3.0)
    return {
        "I": np.eye(3, dtype=complex),
        "X01": x01,
        "X02": x02,
        "X12": x12,
        "Y01": y01,
        "Y02": y02,
        "Y12": y12,
        "Z1": z1,
        "Z2": z2,
    }


def gellmann(label: str) -> np.ndarray:
    """Unnormalized Gell-Mann matrix (or identity) by label."""
    return _gellmann_matrices()[label].copy()


_BASIS_CACHE: OperatorBasis | None = None


def build_basis() -> OperatorBasis:
    """Normalized Gell-Mann basis: I/sqrt(3) plus the 8 Gell-Manns / sqrt(2).

    Every element B_m satisfies Tr(B_m^dag B_n) = delta_mn.  The result is
    cached; the arrays are read-only.
    """
    global _BASIS_CACHE
    if _BASIS_CACHE is not None:
        return _BASIS_CACHE
    raw = _gellmann_matrices()
    labels = ("I", "X01", "X02", "X12", "Y01", "Y02", "Y12", "Z1", "Z2")
    mats = np.empty((SDIM, DIM, DIM), dtype=complex)
    for m, lab in enumerate(labels):
        op = raw[lab]
        mats[m] = op / np.sqrt(np.trace(op.conj().T @ op).real)
    _BASIS_CACHE = OperatorBasis(elements=mats, labels=labels)
    return _BASIS_CACHE


def vectorize(op: np.ndarray, basis: OperatorBasis | None = None) -> np.ndarray:
    """Expand a Hermitian 3x3 operator in the basis; returns 9 real coords.

    coords[m] = Tr(B_m^dag op).  Raises NonHermitianError if op is not
    Hermitian (coordinates of a non-Hermitian operator would be complex).
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (DIM, DIM):
        raise ValueError(f"expected a 3x3 operator, got shape {op.shape}")
    if not np.allclose(op, op.conj().T, atol=ATOL_HERMITIAN):
        raise NonHermitianError("operator is not Hermitian to 1e-12")
    basis = basis or build_basis()
    coords = np.einsum("mij,ij->m", basis.elements.conj(), op)
    return np.real(coords)


def devectorize(coords: np.ndarray, basis: OperatorBasis | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`: rebuild the 3x3 Hermitian operator."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (SDIM,):
        raise ValueError(f"expected 9 coordinates, got shape {coords.shape}")
    basis = basis or build_basis()
    return np.einsum("m,mij->ij", coords, basis.elements)


def state_superket(rho: np.ndarray) -> np.ndarray:
    """Superket of a density matrix (first coordinate is Tr(rho)/sqrt(3))."""
    return vectorize(rho)


def identity_superbra() -> np.ndarray:
    """Row vector <<I| such that <<I | rho>> = Tr(rho) = sqrt(3) * coords[0]."""
    bra = np.zeros(SDIM)
    bra[0] = np.sqrt(3.0)
    return bra


def check_unitary(u: np.ndarray, atol: float = ATOL_UNITARY) -> None:
    """Raise NonUnitaryError unless u is unitary to within atol."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (DIM, DIM):
        raise NonUnitaryError(f"expected a 3x3 matrix, got shape {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(DIM), atol=atol):
        raise NonUnitaryError("matrix is not unitary to 1e-10")


def ptm_from_unitary(u: np.ndarray, basis: OperatorBasis | None = None) -> np.ndarray:
    """Transfer matrix of the unitary channel rho -> u rho u^dag.

    R[m, n] = Tr(B_m^dag u B_n u^dag); real and orthogonal for unitary u.
    """
    check_unitary(u)
    basis = basis or build_basis()
    conj = np.einsum("ab,nbc,dc->nad", u, basis.elements, u.conj())
    r = np.einsum("mab,nab->mn", basis.elements.conj(), conj)
    return np.real(r)


def ptm_from_kraus(
    kraus: list[np.ndarray] | tuple[np.ndarray, ...],
    basis: OperatorBasis | None = None,
) -> np.ndarray:
    """Transfer matrix of the channel rho -> sum_k K rho K^dag.

    The operators are not required to be trace-preserving (use
    :func:`kraus_is_trace_preserving` to check); an empty list raises
    EmptyChannelError.
    """
    if len(kraus) == 0:
        raise EmptyChannelError("Kraus channel needs at least one operator")
    basis = basis or build_basis()
    r = np.zeros((SDIM, SDIM))
    for k in kraus:
        k = np.asarray(k, dtype=complex)
        conj = np.einsum("ab,nbc,dc->nad", k, basis.elements, k.conj())
        r += np.real(np.einsum("mab,nab->mn", basis.elements.conj(), conj))
    return r


def kraus_is_trace_preserving(
    kraus: list[np.ndarray] | tuple[np.ndarray, ...], atol: float = ATOL_TP
) -> bool:
    """True when sum_k K^dag K = I to within atol."""
    total = sum(np.asarray(k).conj().T @ np.asarray(k) for k in kraus)
    return np.allclose(total, np.eye(DIM), atol=atol)


def compose(first: np.ndarray, then: np.ndarray) -> np.ndarray:
    """Transfer matrix of "apply `first`, then `then`" = then @ first."""
    return np.asarray(then) @ np.asarray(first)


def apply_ptm(r: np.ndarray, superket: np.ndarray) -> np.ndarray:
    """Apply a transfer matrix to a state superket."""
    return np.asarray(r) @ np.asarray(superket)


def _vec_basis_change(basis: OperatorBasis) -> np.ndarray:
    """Unitary T with T[:, m] = vec(B_m) mapping basis coords to vec coords."""
    return np.column_stack(
        [basis.elements[m].reshape(SDIM, order="F") for m in range(SDIM)]
    )


def choi_from_ptm(r: np.ndarray, basis: OperatorBasis | None = None) -> np.ndarray:
    """Choi matrix C = sum_ij |i><j| (x) Lambda(|i><j|) of the channel.

    Computed by changing the transfer matrix to the column-stacking
    representation and reshuffling.  For a trace-preserving channel
    Tr(C) = 3; the channel is completely positive iff C >= 0.
    """
    basis = basis or build_basis()
    t = _vec_basis_change(basis)
    s = t @ np.asarray(r, dtype=complex) @ t.conj().T
    c = np.empty((SDIM, SDIM), dtype=complex)
    for i in range(DIM):
        for j in range(DIM):
            # vec(E_ij) has a single 1 at index j*3+i (column stacking).
            block = s[:, j * DIM + i].reshape(DIM, DIM, order="F")
            c[i * DIM : (i + 1) * DIM, j * DIM : (j + 1) * DIM] = block
    return c


def ptm_from_choi(c: np.ndarray, basis: OperatorBasis | None = None) -> np.ndarray:
    """Inverse of :func:`choi_from_ptm`."""
    basis = basis or build_basis()
    s = np.empty((SDIM, SDIM), dtype=complex)
    c = np.asarray(c, dtype=complex)
    for i in range(DIM):
        for j in range(DIM):
            block = c[i * DIM : (i + 1) * DIM, j * DIM : (j + 1) * DIM]
            s[:, j * DIM + i] = block.reshape(SDIM, order="F")
    t = _vec_basis_change(basis)
    return np.real(t.conj().T @ s @ t)


def is_trace_preserving(r: np.ndarray, atol: float = ATOL_TP) -> bool:
    """TP iff the first row of the transfer matrix is (1, 0, ..., 0)."""
    row = np.zeros(SDIM)
    row[0] = 1.0
    return bool(np.allclose(np.asarray(r)[0], row, atol=atol))


@dataclass(frozen=True)
class CptpReport:
    """Result of a CPTP check on a transfer matrix."""

    is_tp: bool
    is_cp: bool
    min_choi_eigenvalue: float
    tp_deviation: float

    @property
    def is_cptp(self) -> bool:
        return self.is_tp and self.is_cp


def check_cptp(r: np.ndarray, atol: float = ATOL_CP) -> CptpReport:
    """Check trace preservation and complete positivity of a transfer matrix.

    Only the sign of the smallest Choi eigenvalue is consulted for CP;
    eigenvalues above -atol count as non-negative.
    """
    r = np.asarray(r, dtype=float)
    row = np.zeros(SDIM)
    row[0] = 1.0
    tp_dev = float(np.max(np.abs(r[0] - row)))
    choi = choi_from_ptm(r)
    eigs = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    min_eig = float(eigs[0])
    return CptpReport(
        is_tp=tp_dev <= ATOL_TP,
        is_cp=min_eig >= -atol,
        min_choi_eigenvalue=min_eig,
        tp_deviation=tp_dev,
    )


def project_to_cp(r: np.ndarray) -> np.ndarray:
    """Nearest CP transfer matrix: clip negative Choi eigenvalues to zero."""
    choi = choi_from_ptm(r)
    vals, vecs = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    clipped = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    return ptm_from_choi(clipped)
