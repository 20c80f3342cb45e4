"""Parametrized noise model, exact circuit probabilities, and shot sampling.

Each noisy gate is built as N_decay . N_depol . R_overrot . R_ideal (rightmost
applied first):

- N_decay: amplitude damping on the {0,1} and {1,2} transitions with
  gamma_jk = 1 - exp(-t/T1_jk) for the gate duration t, composed with pure
  dephasing realized by two diagonal-projector jump operators whose rates
  kappa1 = 2/Tphi01, kappa2 = 2(1/Tphi12 - 1/Tphi01) reproduce the transition
  dephasing times 1/Tphi_jk = 1/T2_jk - 1/(2 T1_jk) exactly.  kappa2 < 0
  (Tphi12 slower than Tphi01) has no CP realization in this form and raises
  NoiseError.
- N_depol: uniform contraction diag(1, (1-p) x 8) of the traceless sector.
- R_overrot: exp(-i delta A) for the gate's own rotation generator A, i.e. a
  coherent over/under-rotation by delta radians of generator angle.

SPAM error perturbs both the prepared state and the readout with a symmetric
confusion: correct outcome kept with probability 1-eps, the two error
outcomes get eps/2 each.

Default parameters are transmon-scale: T1 = 221/119 us, T2(echo) = 126/76 us
for the {0,1}/{1,2} transitions, 30 ns gates.

Shot sampling is multinomial by inverse-CDF on a per-circuit
default_rng((seed, circuit_id)) stream, so results are independent of
evaluation order and zero-probability outcomes are never drawn.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .design import ExperimentDesign
from .gates import GateChannel, GateSetModel, ModelError, rotation_axis
from .superop import SDIM, build_basis, check_cptp, compose, ptm_from_kraus, ptm_from_unitary

DEFAULT_T1_01 = 221.0  # us
DEFAULT_T1_12 = 119.0  # us
DEFAULT_T2_01 = 126.0  # us (echo)
DEFAULT_T2_12 = 76.0  # us (echo)
DEFAULT_GATE_TIME = 30.0  # ns

PROBABILITY_SUM_TOL = 1e-8


class NoiseError(ValueError):
    """Noise parameters do not define a CPTP model."""


@dataclass(frozen=True)
class NoiseSpec:
    """Physical noise parameters; times in us, gate_time in ns, angles in rad."""

    depolarizing: float = 0.0
    t1_01: float = DEFAULT_T1_01
    t1_12: float = DEFAULT_T1_12
    t2_01: float = DEFAULT_T2_01
    t2_12: float = DEFAULT_T2_12
    gate_time: float = DEFAULT_GATE_TIME
    overrotation: dict[str, float] = field(default_factory=dict)
    spam_error: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.depolarizing <= 1.0:
            raise NoiseError("depolarizing probability must be in [0, 1]")
        if not 0.0 <= self.spam_error <= 1.0:
            raise NoiseError("spam_error must be in [0, 1]")
        for name in ("t1_01", "t1_12", "t2_01", "t2_12", "gate_time"):
            if getattr(self, name) <= 0:
                raise NoiseError(f"{name} must be positive")

    @classmethod
    def ideal(cls) -> "NoiseSpec":
        return cls(t1_01=math.inf, t1_12=math.inf, t2_01=math.inf, t2_12=math.inf)

    @classmethod
    def depolarizing_only(cls, p: float) -> "NoiseSpec":
        return replace(cls.ideal(), depolarizing=p)

    def to_json(self) -> dict:
        def num(x):
            return None if math.isinf(x) else float(x)

        return {
            "depolarizing": self.depolarizing,
            "t1_01": num(self.t1_01),
            "t1_12": num(self.t1_12),
            "t2_01": num(self.t2_01),
            "t2_12": num(self.t2_12),
            "gate_time": self.gate_time,
            "overrotation": {k: float(v) for k, v in sorted(self.overrotation.items())},
            "spam_error": self.spam_error,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "NoiseSpec":
        known = {
            "depolarizing", "t1_01", "t1_12", "t2_01", "t2_12",
            "gate_time", "overrotation", "spam_error",
        }
        unknown = sorted(set(payload) - known)
        if unknown:
            raise NoiseError(f"unknown noise keys: {', '.join(unknown)}")

        def num(x, default):
            if x is None:
                return math.inf
            return float(x)

        kwargs = {}
        if "depolarizing" in payload:
            kwargs["depolarizing"] = float(payload["depolarizing"])
        for name, default in (
            ("t1_01", DEFAULT_T1_01),
            ("t1_12", DEFAULT_T1_12),
            ("t2_01", DEFAULT_T2_01),
            ("t2_12", DEFAULT_T2_12),
        ):
            if name in payload:
                kwargs[name] = num(payload[name], default)
        if "gate_time" in payload:
            kwargs["gate_time"] = float(payload["gate_time"])
        if "overrotation" in payload:
            kwargs["overrotation"] = {
                k: float(v) for k, v in payload["overrotation"].items()
            }
        if "spam_error" in payload:
            kwargs["spam_error"] = float(payload["spam_error"])
        return cls(**kwargs)


def depolarizing_ptm(p: float) -> np.ndarray:
    if not 0.0 <= p <= 1.0:
        raise NoiseError("depolarizing probability must be in [0, 1]")
    d = np.ones(SDIM) * (1.0 - p)
    d[0] = 1.0
    return np.diag(d)


def _damping_kraus(gamma01: float, gamma12: float) -> list[np.ndarray]:
    k0 = np.diag([1.0, np.sqrt(1.0 - gamma01), np.sqrt(1.0 - gamma12)]).astype(complex)
    k1 = np.zeros((3, 3), dtype=complex)
    k1[0, 1] = np.sqrt(gamma01)
    k2 = np.zeros((3, 3), dtype=complex)
    k2[1, 2] = np.sqrt(gamma12)
    return [k0, k1, k2]


def decay_ptm(spec: NoiseSpec) -> np.ndarray:
    """Amplitude damping + pure dephasing for one gate duration."""
    t = spec.gate_time * 1e-3  # ns -> us
    gamma01 = 1.0 - math.exp(-t / spec.t1_01)
    gamma12 = 1.0 - math.exp(-t / spec.t1_12)
    r_damp = ptm_from_kraus(_damping_kraus(gamma01, gamma12))

    inv_tphi01 = (0.0 if math.isinf(spec.t2_01) else 1.0 / spec.t2_01) - (
        0.0 if math.isinf(spec.t1_01) else 0.5 / spec.t1_01
    )
    inv_tphi12 = (0.0 if math.isinf(spec.t2_12) else 1.0 / spec.t2_12) - (
        0.0 if math.isinf(spec.t1_12) else 0.5 / spec.t1_12
    )
    if inv_tphi01 < -1e-15 or inv_tphi12 < -1e-15:
        raise NoiseError("T2 exceeds 2*T1; no pure-dephasing rate exists")
    kappa1 = 2.0 * max(inv_tphi01, 0.0)
    kappa2 = 2.0 * (max(inv_tphi12, 0.0) - max(inv_tphi01, 0.0))
    if kappa2 < -1e-15:
        raise NoiseError(
            "dephasing on the {1,2} transition slower than on {0,1}; "
            "the projector-jump channel is not CP"
        )
    kappa2 = max(kappa2, 0.0)

    # Coherence ij of the dephasing semigroup decays at (lam_i + lam_j)/2
    # with lam = (0, kappa1, kappa2) -- diagonal in the matrix-unit basis.
    lam = np.array([0.0, kappa1, kappa2])
    basis = build_basis()
    factors = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            factors[i, j] = math.exp(-0.5 * (lam[i] + lam[j]) * t) if i != j else 1.0
    r_deph = np.real(
        np.einsum(
            "mij,ij,nij->mn", basis.elements.conj(), factors, basis.elements
        )
    )
    return compose(r_damp, r_deph)


def confusion_matrix(eps: float) -> np.ndarray:
    c = np.full((3, 3), eps / 2.0)
    np.fill_diagonal(c, 1.0 - eps)
    return c


def apply_noise(model: GateSetModel, spec: NoiseSpec) -> GateSetModel:
    """Noisy version of an ideal model; validates CPTP of every gate."""
    r_decay = decay_ptm(spec)
    r_depol = depolarizing_ptm(spec.depolarizing)
    gates = {}
    for label, ch in model.gates.items():
        r = ch.ptm
        delta = spec.overrotation.get(label, 0.0)
        if delta != 0.0:
            if ch.unitary is None:
                raise NoiseError(f"cannot over-rotate {label!r}: no unitary")
            a = rotation_axis(label, ch.unitary)
            r = compose(r, ptm_from_unitary(expm(-1j * delta * a)))
        r = compose(r, r_depol)
        r = compose(r, r_decay)
        report = check_cptp(r)
        if not report.is_cptp:
            raise NoiseError(
                f"noisy gate {label!r} violates CPTP "
                f"(min Choi eig {report.min_choi_eigenvalue:.2e})"
            )
        gates[label] = GateChannel(ptm=r, unitary=ch.unitary)

    rho0 = model.rho0
    effects = model.effects
    if spec.spam_error > 0.0:
        c = confusion_matrix(spec.spam_error)
        # Preparation: intended |0> becomes a classical mixture over levels;
        # readout: the reported outcome is confused symmetrically.
        rho0 = c[:, 0] @ _level_superkets()
        effects = c @ model.effects
    return GateSetModel(gates=gates, rho0=rho0, effects=effects)


def _level_superkets() -> np.ndarray:
    """Superkets of the three computational basis states, stacked (3, 9)."""
    from .superop import vectorize

    return np.stack(
        [vectorize(np.diag(np.eye(3)[k]).astype(complex)) for k in range(3)]
    )


def circuit_probabilities(model: GateSetModel, word) -> np.ndarray:
    """Exact outcome probabilities for a gate word on the model."""
    p = model.effects @ model.word_ptm(word) @ model.rho0
    total = float(p.sum())
    if abs(total - 1.0) > PROBABILITY_SUM_TOL:
        raise ModelError(f"outcome probabilities sum to {total}; model not TP")
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum()


@dataclass(frozen=True)
class CountRecord:
    circuit_id: int
    counts: tuple[int, int, int]
    shots: int

    def __post_init__(self):
        if sum(self.counts) != self.shots:
            raise ValueError("counts must sum to shots")


def sample_counts(
    design: ExperimentDesign, model: GateSetModel, shots: int, seed: int
) -> list[CountRecord]:
    """Multinomial shot counts for every design circuit (deterministic)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    records = []
    for c in design.circuits:
        p = circuit_probabilities(model, c.flat_word)
        rng = np.random.default_rng((seed, c.index))
        u = rng.random(shots)
        outcome = np.searchsorted(np.cumsum(p), u, side="right")
        n = np.bincount(outcome, minlength=3)
        records.append(
            CountRecord(circuit_id=c.index, counts=(int(n[0]), int(n[1]), int(n[2])), shots=shots)
        )
    return records


# --- counts CSV format ------------------------------------------------------


def save_counts(path, records: list[CountRecord]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["circuit_id", "n0", "n1", "n2", "shots"])
        for r in records:
            writer.writerow([r.circuit_id, *r.counts, r.shots])


def load_counts(path) -> list[CountRecord]:
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            records.append(
                CountRecord(
                    circuit_id=int(row["circuit_id"]),
                    counts=(int(row["n0"]), int(row["n1"]), int(row["n2"])),
                    shots=int(row["shots"]),
                )
            )
    return records
