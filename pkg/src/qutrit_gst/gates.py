"""The native qutrit gate set and the gate-set model container.

The six native gates:

- Gi     identity
- Gz1    exp(-i(2pi/3) Z1), a diagonal phase gate on levels {0,1}
- Gz2    exp(-i(2pi/3) Z2/sqrt(3)), equivalent to diag(1, 1, w) up to phase
- Gx01   exp(-i(pi/2) X01/2), a pi/2 rotation in the {0,1} subspace
- Gx12   exp(-i(pi/2) X12/2), a pi/2 rotation in the {1,2} subspace
- Gh     the qutrit discrete Fourier transform (1/sqrt(3)) [w^{jk}]

with w = exp(2pi i/3) and X/Z the unnormalized Gell-Mann matrices.  Subspace
rotations use the half-angle convention X_jk(theta) = exp(-i theta X_jk / 2).
Gz1, Gz2 and Gh are members of the 216-element qutrit Clifford group (the
clifford module validates this at build time); Gx01/Gx12 are not.

A GateSetModel bundles the gate transfer matrices with the preparation
superket and the 3-outcome measurement effects; the ideal model prepares
|0><0| and measures in the computational basis.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm, logm

from . import jsonio
from .superop import (
    SDIM,
    gellmann,
    identity_superbra,
    ptm_from_unitary,
    vectorize,
)

OMEGA = np.exp(2j * np.pi / 3)

NATIVE_GATE_LABELS = ("Gi", "Gz1", "Gz2", "Gx01", "Gx12", "Gh")

GATESET_BASIS_TAG = "gellmann-normalized"


class ModelError(ValueError):
    """Gate-set model is malformed or not usable for the requested task."""


def _dft_unitary() -> np.ndarray:
    j = np.arange(3)
    return np.power(OMEGA, np.outer(j, j)) / np.sqrt(3.0)


def native_unitary(label: str) -> np.ndarray:
    """Ideal unitary for a native gate label."""
    if label == "Gi":
        return np.eye(3, dtype=complex)
    if label == "Gz1":
        return expm(-1j * (2 * np.pi / 3) * gellmann("Z1"))
    if label == "Gz2":
        return expm(-1j * (2 * np.pi / 3) * gellmann("Z2") / np.sqrt(3.0))
    if label == "Gx01":
        return expm(-1j * (np.pi / 2) * gellmann("X01") / 2)
    if label == "Gx12":
        return expm(-1j * (np.pi / 2) * gellmann("X12") / 2)
    if label == "Gh":
        return _dft_unitary()
    raise ModelError(f"unknown native gate label {label!r}")


def rotation_axis(label: str, unitary: np.ndarray) -> np.ndarray:
    """Unit-angle Hermitian axis A with U = exp(-i theta A) for the gate.

    Over-rotating by delta radians multiplies in exp(-i delta A).  The
    rotation-style natives have a named axis (X01/2 for pi/2 pulses, the Z
    directions for the phase gates); Gi has no axis (A = 0, over-rotation is
    a no-op); anything else (Gh, external gates) falls back to the principal
    matrix log with theta = 1, so delta is a fraction of the full gate.
    """
    axes = {
        "Gz1": gellmann("Z1"),
        "Gz2": gellmann("Z2") / np.sqrt(3.0),
        "Gx01": gellmann("X01") / 2,
        "Gx12": gellmann("X12") / 2,
    }
    if label == "Gi":
        return np.zeros((3, 3), dtype=complex)
    if label in axes:
        return axes[label]
    a = 1j * logm(np.asarray(unitary, dtype=complex))
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class GateChannel:
    """One gate of a model: transfer matrix plus (optional) ideal unitary."""

    ptm: np.ndarray
    unitary: np.ndarray | None = None

    def __post_init__(self):
        self.ptm.setflags(write=False)
        if self.unitary is not None:
            self.unitary.setflags(write=False)


@dataclass(frozen=True)
class GateSetModel:
    """Gates, preparation superket, and measurement effect superkets.

    gates   : label -> GateChannel (9x9 transfer matrices)
    rho0    : length-9 superket of the prepared state
    effects : (3, 9), row k is the superbra of the outcome-k POVM effect
    """

    gates: dict[str, GateChannel]
    rho0: np.ndarray
    effects: np.ndarray

    def __post_init__(self):
        self.rho0.setflags(write=False)
        self.effects.setflags(write=False)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.gates)

    def ptm(self, label: str) -> np.ndarray:
        try:
            return self.gates[label].ptm
        except KeyError:
            raise ModelError(f"model has no gate named {label!r}") from None

    def word_ptm(self, word) -> np.ndarray:
        """Transfer matrix of a gate word applied left-to-right."""
        r = np.eye(SDIM)
        for label in word:
            r = self.ptm(label) @ r
        return r

    def povm_completeness_deviation(self) -> float:
        return float(np.max(np.abs(self.effects.sum(axis=0) - identity_superbra())))

    def with_gates(self, gates: dict[str, GateChannel]) -> "GateSetModel":
        return replace(self, gates=gates)


def ideal_spam() -> tuple[np.ndarray, np.ndarray]:
    """(rho0, effects) for perfect |0> preparation and computational readout."""
    rho0 = vectorize(np.diag([1.0, 0.0, 0.0]).astype(complex))
    effects = np.stack(
        [vectorize(np.diag(np.eye(3)[k]).astype(complex)) for k in range(3)]
    )
    return rho0, effects


def build_native_gateset() -> GateSetModel:
    """The ideal six-gate model with perfect SPAM."""
    rho0, effects = ideal_spam()
    gates = {}
    for label in NATIVE_GATE_LABELS:
        u = native_unitary(label)
        gates[label] = GateChannel(ptm=ptm_from_unitary(u), unitary=u)
    return GateSetModel(gates=gates, rho0=rho0, effects=effects)


def gateset_from_unitaries(
    unitaries: dict[str, np.ndarray],
    rho0: np.ndarray | None = None,
    effects: np.ndarray | None = None,
) -> GateSetModel:
    """Model from explicit unitaries; SPAM defaults to ideal."""
    ideal_rho0, ideal_effects = ideal_spam()
    gates = {
        label: GateChannel(ptm=ptm_from_unitary(u), unitary=np.asarray(u, dtype=complex))
        for label, u in unitaries.items()
    }
    return GateSetModel(
        gates=gates,
        rho0=ideal_rho0 if rho0 is None else np.asarray(rho0, dtype=float),
        effects=ideal_effects if effects is None else np.asarray(effects, dtype=float),
    )


# --- gate-set JSON format -------------------------------------------------
#
# {
#   "basis": "gellmann-normalized",
#   "gates": {label: 3x3 nested [re, im] pairs},
#   "rho0": [9 reals]          (optional; default ideal),
#   "effects": [[9 reals] x3]  (optional; default ideal)
# }


def gateset_to_json(model: GateSetModel) -> dict:
    gates = {}
    for label, ch in model.gates.items():
        if ch.unitary is None:
            raise ModelError(
                f"gate {label!r} has no unitary; the gate-set file stores unitaries "
                "(use the estimate format for reconstructed PTMs)"
            )
        gates[label] = jsonio.complex_matrix_to_json(ch.unitary)
    return {
        "basis": GATESET_BASIS_TAG,
        "gates": gates,
        "rho0": jsonio.real_matrix_to_json(model.rho0),
        "effects": [jsonio.real_matrix_to_json(e) for e in model.effects],
    }


def gateset_from_json(payload: dict) -> GateSetModel:
    basis_tag = payload.get("basis", GATESET_BASIS_TAG)
    if basis_tag != GATESET_BASIS_TAG:
        raise ModelError(f"unsupported basis tag {basis_tag!r}")
    unitaries = {
        label: jsonio.complex_matrix_from_json(rows)
        for label, rows in payload["gates"].items()
    }
    rho0 = None
    effects = None
    if "rho0" in payload:
        rho0 = jsonio.real_matrix_from_json(payload["rho0"], (SDIM,))
    if "effects" in payload:
        effects = np.stack(
            [jsonio.real_matrix_from_json(e, (SDIM,)) for e in payload["effects"]]
        )
    return gateset_from_unitaries(unitaries, rho0=rho0, effects=effects)


def save_gateset(path, model: GateSetModel) -> None:
    jsonio.save(path, gateset_to_json(model))


def load_gateset(path) -> GateSetModel:
    return gateset_from_json(jsonio.load(path))
