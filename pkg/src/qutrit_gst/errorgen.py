"""Error generators, their elementary-generator decomposition, and infidelity.

The post-gate error generator of an estimated channel is
L = log(R_est · R_ideal^-1): the logarithm of what the noise did after the
ideal gate.  L is projected onto 72 elementary generators built from the
eight traceless basis matrices P (unnormalized, Tr P^2 = 2):

    H_P[rho] = -i [P, rho]                                   (Hamiltonian)
    S_P[rho] = P rho P - rho                                 (stochastic)
    C_PQ[rho] = P rho Q + Q rho P - {{P,Q}, rho}/2           (correlation)
    A_PQ[rho] = i (P rho Q - Q rho P + {{P,Q}, rho}/2)       (active)

with Q > P in the fixed label order X01 < X02 < X12 < Y01 < Y02 < Y12 <
Z1 < Z2.  The 72 vectorized generators are linearly independent (the
coefficient solve is an ordinary least squares), and the Hamiltonian power
p_H = |L_H| / (|L_H| + |L_S| + |L_C| + |L_A|) uses entry-wise 2-norms of the
reconstructed block matrices.

Note the stochastic and correlation/active generators are not individually
trace-preserving for qutrit basis matrices (P^2 != I), so a generic
first-row-zero matrix need not lie in their span; error generators of
physical near-ideal channels project with small residual regardless, and
the residual is always reported.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, logm

from .superop import SDIM, build_basis, gellmann

ROUND_TRIP_TOL = 1e-8
BRANCH_EIG_RTOL = 1e-10

ERROR_GENERATOR_LABELS = ("X01", "X02", "X12", "Y01", "Y02", "Y12", "Z1", "Z2")


class BranchError(ArithmeticError):
    """The principal matrix logarithm is ill-defined for this channel."""


class DegenerateError(ZeroDivisionError):
    """All decomposition blocks vanish; the power ratio is undefined."""


@dataclass(frozen=True)
class ErrorGenerator:
    """Superoperator L with exp(L)·ideal = est, in the operator basis."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.setflags(write=False)


@dataclass(frozen=True)
class ErrorGeneratorDecomposition:
    """Coefficients of L on the 72 elementary generators, plus residual."""

    h: np.ndarray
    s: np.ndarray
    c: np.ndarray
    a: np.ndarray
    residual_norm: float

    def __post_init__(self):
        for arr in (self.h, self.s, self.c, self.a):
            arr.setflags(write=False)

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.h, self.s, self.c, self.a])


def error_generator(est: np.ndarray, ideal: np.ndarray) -> ErrorGenerator:
    """Principal log of est·ideal⁻¹, guarded against branch-cut ambiguity."""
    ratio = est @ np.linalg.inv(ideal)
    eigs = np.linalg.eigvals(ratio)
    scale = np.abs(eigs).max()
    for lam in eigs:
        if lam.real < 0 and abs(lam.imag) <= BRANCH_EIG_RTOL * scale:
            raise BranchError(
                "channel ratio has a real-negative eigenvalue; principal log "
                f"is ill-defined (eigenvalues {np.array2string(eigs, precision=6)})"
            )
    log = logm(ratio)
    if np.abs(log.imag).max() > 1e-8:
        raise BranchError(
            "matrix log of the channel ratio is not real "
            f"(max imaginary part {np.abs(log.imag).max():.2e})"
        )
    log = log.real
    back = expm(log) @ ideal
    err = np.abs(back - est).max()
    if err > ROUND_TRIP_TOL * max(1.0, np.abs(est).max()):
        raise BranchError(f"log round trip failed: |exp(L)·ideal − est| = {err:.2e}")
    return ErrorGenerator(matrix=log)


def _superop_matrix(apply_map) -> np.ndarray:
    """Matrix of an abstract map on density operators, in the operator basis.

    Coordinates are Tr(B_m† · map[B_n]); the real part is kept, which for a
    Hermiticity-preserving map loses nothing.  The active generators as
    printed carry an anti-Hermitian piece (i/2·{{P,Q},rho} applied to
    Hermitian rho), so there the real part is the Hermiticity-preserving
    component — the only realization admitting a real superoperator matrix.
    """
    elements = build_basis().elements
    out = np.empty((SDIM, SDIM))
    for n in range(SDIM):
        image = apply_map(elements[n])
        out[:, n] = np.einsum("mij,ij->m", elements.conj(), image).real
    return out


@lru_cache(maxsize=1)
def elementary_generators() -> tuple[tuple[str, np.ndarray], ...]:
    """The 72 (label, matrix) elementary error generators, in fixed order."""
    ps = {lab: gellmann(lab) for lab in ERROR_GENERATOR_LABELS}
    out = []
    for lab in ERROR_GENERATOR_LABELS:
        p = ps[lab]
        out.append((f"H_{lab}", _superop_matrix(lambda r, p=p: -1j * (p @ r - r @ p))))
    for lab in ERROR_GENERATOR_LABELS:
        p = ps[lab]
        out.append((f"S_{lab}", _superop_matrix(lambda r, p=p: p @ r @ p - r)))
    pairs = [
        (ERROR_GENERATOR_LABELS[i], ERROR_GENERATOR_LABELS[j])
        for i in range(8)
        for j in range(i + 1, 8)
    ]
    for la, lb in pairs:
        p, q = ps[la], ps[lb]
        anti = p @ q + q @ p

        def c_map(r, p=p, q=q, anti=anti):
            return p @ r @ q + q @ r @ p - 0.5 * (anti @ r + r @ anti)

        out.append((f"C_{la},{lb}", _superop_matrix(c_map)))
    for la, lb in pairs:
        p, q = ps[la], ps[lb]
        anti = p @ q + q @ p

        def a_map(r, p=p, q=q, anti=anti):
            return 1j * (p @ r @ q - q @ r @ p + 0.5 * (anti @ r + r @ anti))

        out.append((f"A_{la},{lb}", _superop_matrix(a_map)))
    for _, mat in out:
        mat.setflags(write=False)
    return tuple(out)


@lru_cache(maxsize=1)
def _design_matrix() -> np.ndarray:
    cols = np.stack([mat.ravel() for _, mat in elementary_generators()], axis=1)
    cols.setflags(write=False)
    return cols


def project_error_generator(gen: ErrorGenerator) -> ErrorGeneratorDecomposition:
    """Least-squares coefficients of L on the 72 elementary generators."""
    design = _design_matrix()
    target = gen.matrix.ravel()
    coeffs, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.linalg.norm(design @ coeffs - target))
    return ErrorGeneratorDecomposition(
        h=coeffs[0:8],
        s=coeffs[8:16],
        c=coeffs[16:44],
        a=coeffs[44:72],
        residual_norm=residual,
    )


def decomposition_block_norms(d: ErrorGeneratorDecomposition) -> dict[str, float]:
    """Entry-wise 2-norms of the reconstructed H/S/C/A block matrices."""
    design = _design_matrix()
    blocks = {
        "H": design[:, 0:8] @ d.h,
        "S": design[:, 8:16] @ d.s,
        "C": design[:, 16:44] @ d.c,
        "A": design[:, 44:72] @ d.a,
    }
    return {key: float(np.linalg.norm(vec)) for key, vec in blocks.items()}


def hamiltonian_power(d: ErrorGeneratorDecomposition) -> float:
    """p_H = |L_H| / (|L_H| + |L_S| + |L_C| + |L_A|), entry-wise 2-norms."""
    norms = decomposition_block_norms(d)
    total = norms["H"] + norms["S"] + norms["C"] + norms["A"]
    if total == 0.0:
        raise DegenerateError("all decomposition blocks are zero")
    return norms["H"] / total


def entanglement_fidelity(est: np.ndarray, ideal: np.ndarray) -> float:
    return float(np.trace(ideal.T @ est)) / SDIM


def average_gate_infidelity(est: np.ndarray, ideal: np.ndarray) -> float:
    """1 − (d·F_e + 1)/(d+1) for d = 3, F_e = Tr(idealᵀ·est)/9."""
    d = 3
    return 1.0 - (d * entanglement_fidelity(est, ideal) + 1.0) / (d + 1.0)


def average_gate_fidelity(est: np.ndarray, ideal: np.ndarray) -> float:
    return 1.0 - average_gate_infidelity(est, ideal)
