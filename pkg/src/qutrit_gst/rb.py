"""Qutrit randomized benchmarking on a noisy gate-set model.

Sequences of uniform random Clifford elements are closed by the group
inverse of their product, executed through their compiled native words
(noise accrues per native gate), and the survival probability of the
prepared state is fit to A·p^m + B.  Average infidelity per Clifford is
r = (d−1)(1−p)/d with d = 3, i.e. (2/3)(1−p).

Everything is seed-deterministic: element choices draw from
default_rng((seed, 11, m, i)) and measurement sampling from
default_rng((seed, 13, m, i)), so per-(length, sequence) work is
order-independent.
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .clifford import CliffordElement, CliffordGroup, element_ptm
from .errorgen import average_gate_infidelity
from .gates import GateSetModel
from .noise import circuit_probabilities

QUTRIT_DIM = 3
SURVIVAL_FLOOR = 1.0 / QUTRIT_DIM


class FitError(RuntimeError):
    """The decay fit did not converge."""


@dataclass(frozen=True)
class RbConfig:
    lengths: tuple[int, ...]
    sequences_per_length: int = 30
    shots: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not self.lengths:
            raise ValueError("lengths must be non-empty")
        if any(m < 1 for m in self.lengths):
            raise ValueError("sequence lengths must be >= 1")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("sequence lengths must be strictly increasing")
        if self.sequences_per_length < 1 or self.shots < 1:
            raise ValueError("sequences_per_length and shots must be >= 1")


@dataclass(frozen=True)
class RbResult:
    """Survival statistics per length, decay-fit parameters, infidelity.

    survival maps length -> (mean, standard error of the mean);
    survivals holds the raw per-sequence values; fit holds A, B, p and
    fit_stderr their covariance-derived standard errors.
    """

    survival: dict[int, tuple[float, float]]
    survivals: dict[int, tuple[float, ...]]
    fit: dict[str, float]
    fit_stderr: dict[str, float]
    infidelity: float


def rb_sequences(
    group: CliffordGroup, m: int, seed: int, n_sequences: int = 1
) -> list[tuple[list[CliffordElement], CliffordElement]]:
    """n_sequences random length-m element lists, each with its inverse."""
    if m < 1:
        raise ValueError("sequence length must be >= 1")
    out = []
    for i in range(n_sequences):
        rng = np.random.default_rng((seed, 11, m, i))
        indices = rng.integers(0, len(group), size=m)
        total = indices[0]
        for idx in indices[1:]:
            total = group.multiply(int(idx), total)
        inverse = group.inv(total)
        out.append(([group.elements[int(idx)] for idx in indices], group.elements[inverse]))
    return out


def sequence_word(
    group: CliffordGroup, elements: list[CliffordElement], inverse: CliffordElement
):
    word: tuple[str, ...] = ()
    for el in elements:
        word = word + group.word(el.index)
    return word + group.word(inverse.index)


def _survival_probability(model: GateSetModel, word) -> float:
    return float(circuit_probabilities(model, word)[0])


def run_rb(model: GateSetModel, group: CliffordGroup, cfg: RbConfig) -> RbResult:
    """Simulate RB under the model and fit the survival decay."""
    survivals: dict[int, tuple[float, ...]] = {}
    for m in cfg.lengths:
        seqs = rb_sequences(group, m, cfg.seed, cfg.sequences_per_length)
        vals = []
        for i, (elements, inverse) in enumerate(seqs):
            p = circuit_probabilities(model, sequence_word(group, elements, inverse))
            rng = np.random.default_rng((cfg.seed, 13, m, i))
            draws = np.searchsorted(np.cumsum(p), rng.random(cfg.shots), side="right")
            vals.append(float(np.mean(draws == 0)))
        survivals[m] = tuple(vals)

    survival = {}
    for m, vals in survivals.items():
        arr = np.asarray(vals)
        stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
        survival[m] = (float(arr.mean()), stderr)

    fit, fit_stderr = fit_decay(
        np.asarray(cfg.lengths, dtype=float),
        np.asarray([survival[m][0] for m in cfg.lengths]),
        np.asarray([survival[m][1] for m in cfg.lengths]),
    )
    infid = (QUTRIT_DIM - 1) / QUTRIT_DIM * (1.0 - fit["p"])
    return RbResult(
        survival=survival,
        survivals=survivals,
        fit=fit,
        fit_stderr=fit_stderr,
        infidelity=infid,
    )


def _decay(m, a, b, p):
    return a * np.power(p, m) + b


def fit_decay(lengths: np.ndarray, means: np.ndarray, stderrs: np.ndarray):
    """Bounded least-squares fit of A·p^m + B; returns (params, stderrs)."""
    if np.ptp(means) < 1e-12:
        # flat data (e.g. ideal model, all survivals 1): decay is degenerate
        b0 = SURVIVAL_FLOOR
        return (
            {"A": float(means[0]) - b0, "B": b0, "p": 1.0},
            {"A": 0.0, "B": 0.0, "p": 0.0},
        )

    b0 = SURVIVAL_FLOOR
    a0 = 1.0 - b0
    m1, m2 = lengths[0], lengths[-1]
    s1, s2 = means[0] - b0, means[-1] - b0
    if s1 > 1e-9 and s2 > 1e-9 and s2 < s1:
        p0 = float((s2 / s1) ** (1.0 / (m2 - m1)))
    else:
        p0 = 0.9
    p0 = min(max(p0, 1e-6), 1.0 - 1e-9)

    sigma = np.maximum(stderrs, 1e-9)
    try:
        with warnings.catch_warnings():
            # zero-DOF fits (len(lengths) == 3) have no covariance estimate
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                _decay,
                lengths,
                means,
                p0=(a0, b0, p0),
                sigma=sigma,
                bounds=([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
                maxfev=20_000,
            )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"survival decay fit failed: {exc}") from exc
    diag = np.diag(pcov)
    perr = np.where(np.isfinite(diag), np.sqrt(np.maximum(diag, 0.0)), 0.0)
    fit = {"A": float(popt[0]), "B": float(popt[1]), "p": float(popt[2])}
    stderr = {"A": float(perr[0]), "B": float(perr[1]), "p": float(perr[2])}
    return fit, stderr


def gst_clifford_infidelity(
    est: GateSetModel, group: CliffordGroup, ideal: GateSetModel | None = None
) -> float:
    """Mean infidelity of estimated native words over all Clifford elements.

    Each element's compiled word is composed from the estimated gate PTMs
    and compared against the exact element PTM — the GST-side quantity that
    RB's per-Clifford infidelity estimates.
    """
    del ideal  # the exact element PTMs are the reference
    total = 0.0
    for el in group.elements:
        est_ptm = est.word_ptm(group.word(el.index))
        total += average_gate_infidelity(est_ptm, element_ptm(group, el.index))
    return total / len(group)


def mean_compiled_depth(group: CliffordGroup) -> float:
    return float(np.mean([len(group.word(el.index)) for el in group.elements]))


def save_survivals_csv(path, survivals: dict[int, tuple[float, ...]]) -> None:
    """Rows of length,seq_index,survival for every simulated sequence."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["length", "seq_index", "survival"])
        for m in sorted(survivals):
            for i, s in enumerate(survivals[m]):
                writer.writerow([m, i, repr(float(s))])


def save_rb_csv(path, result: RbResult) -> None:
    save_survivals_csv(path, result.survivals)


def load_rb_csv(path) -> dict[int, tuple[float, ...]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["length", "seq_index", "survival"]:
            raise ValueError(f"unexpected RB CSV header: {header}")
        data: dict[int, list[float]] = {}
        for row in reader:
            data.setdefault(int(row[0]), []).append(float(row[2]))
    return {m: tuple(vals) for m, vals in data.items()}


def rb_fit_to_json(result: RbResult) -> dict:
    return {
        "fit": dict(sorted(result.fit.items())),
        "fit_stderr": dict(sorted(result.fit_stderr.items())),
        "infidelity": result.infidelity,
        "survival": {
            str(m): {"mean": mean, "stderr": err}
            for m, (mean, err) in sorted(result.survival.items())
        },
    }
