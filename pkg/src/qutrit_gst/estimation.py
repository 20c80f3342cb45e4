"""Gate-set reconstruction: LGST seed, MLE refinement, gauge optimization.

LGST: with B the (12x9) matrix of transported effect rows and C the (9x9)
matrix of prepared-state columns, the bare fiducial block observes A0 = B C
and each gate sandwich observes A_g = B R_g C.  pinv(A0) A_g = C^-1 R_g C, so
conjugating by the ideal prep matrix C_t lands the estimate in a frame that
is an (unknown but TP-preserving) gauge away from truth: every density-matrix
superket has first coordinate 1/sqrt(3), hence the frame change C_t C^-1
fixes the identity row and the TP constraint survives linear inversion.

MLE: maximizes sum_ck n_ck log p_ck over a TP parametrization (per-gate rows
1..8, rho0 traceless part, two free effects with the third eliminated by
completeness).  Probabilities and gradients are evaluated in batch: circuit
words are padded into an integer matrix, states are propagated position by
position for all circuits at once, and the per-gate gradient accumulates
outer products of backward rows with forward states.  Deterministic L-BFGS-B
drives the objective; no stochastic elements anywhere.

Gauge optimization: minimizes sum_g ||B R_g B^-1 - T_g||_F^2 +
||B rho - rho_t||^2 + sum_k ||E_k B^-1 - E_k,t||^2 over TP-pinned B (first
row fixed to (1,0,...,0)), with the analytic gradient, starting from B = I.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .design import ExperimentDesign
from .gates import GateChannel, GateSetModel
from .noise import CountRecord
from .superop import SDIM, identity_superbra

PINV_RCOND = 1e-10
PROB_FLOOR = 1e-12
PROB_RADIUS = 1e-4


class EstimationError(ValueError):
    """Reconstruction failed (rank deficiency, bad data, divergence)."""


class GaugeError(ValueError):
    """Gauge optimization left the invertible region."""


@dataclass(frozen=True)
class GstDataset:
    """Design plus per-circuit outcome data as float arrays.

    counts[c] holds the three outcome counts for circuit c (floats so exact
    probabilities can stand in for infinite shots); shots[c] their sum.
    """

    design: ExperimentDesign
    counts: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        self.counts.setflags(write=False)
        self.shots.setflags(write=False)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots[:, None]

    @classmethod
    def from_records(
        cls, design: ExperimentDesign, records: list[CountRecord]
    ) -> "GstDataset":
        if len(records) != len(design.circuits):
            raise EstimationError(
                f"{len(records)} count records for {len(design.circuits)} circuits"
            )
        counts = np.zeros((len(records), 3))
        shots = np.zeros(len(records))
        for i, (circuit, rec) in enumerate(zip(design.circuits, records)):
            if rec.circuit_id != circuit.index:
                raise EstimationError(
                    f"record {i} has circuit_id {rec.circuit_id}, expected {circuit.index}"
                )
            counts[i] = rec.counts
            shots[i] = rec.shots
        return cls(design=design, counts=counts, shots=shots)

    @classmethod
    def from_probabilities(
        cls, design: ExperimentDesign, model: GateSetModel
    ) -> "GstDataset":
        """Exact-probability dataset (the infinite-shot limit, unit weight)."""
        from .noise import circuit_probabilities

        counts = np.stack(
            [circuit_probabilities(model, c.flat_word) for c in design.circuits]
        )
        return cls(design=design, counts=counts, shots=np.ones(len(design.circuits)))


@dataclass(frozen=True)
class GstEstimate:
    model: GateSetModel
    loglike: float
    iterations: int
    gauge: np.ndarray


def _pinv(a: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(a, rcond=PINV_RCOND)


def _circuit_lookup(design: ExperimentDesign) -> dict[tuple[int, int, int, int], int]:
    return {
        (c.prep_fid, c.germ, c.power, c.meas_fid): c.index for c in design.circuits
    }


def lgst(
    data: GstDataset,
    fids=None,
    model_ideal: GateSetModel | None = None,
) -> GateSetModel:
    """Linear-inversion GST from the fiducial block, in the target frame."""
    from .design import prep_design_matrix
    from .gates import build_native_gateset

    design = data.design
    fids = fids or design.fiducials
    model_ideal = model_ideal or build_native_gateset()
    freqs = data.frequencies
    lookup = _circuit_lookup(design)

    n_prep, n_meas = len(fids.prep), len(fids.meas)
    try:
        prep_empty = fids.prep.index(())
        meas_empty = fids.meas.index(())
    except ValueError:
        raise EstimationError(
            "LGST needs the empty word among both prep and meas fiducials"
        ) from None

    def block(germ_idx: int, power: int) -> np.ndarray:
        rows = np.empty((3 * n_meas, n_prep))
        for p in range(n_prep):
            for m in range(n_meas):
                cid = lookup.get((p, germ_idx, power, m))
                if cid is None:
                    raise EstimationError(
                        f"design lacks LGST circuit (prep {p}, germ {germ_idx}, "
                        f"power {power}, meas {m})"
                    )
                rows[3 * m : 3 * m + 3, p] = freqs[cid]
        return rows

    a0 = block(0, 0)
    if np.linalg.matrix_rank(a0, tol=1e-6) < SDIM:
        raise EstimationError("bare fiducial block is rank deficient")
    a0_pinv = _pinv(a0)

    c_t = prep_design_matrix(fids, model_ideal)
    c_t_inv = np.linalg.inv(c_t)

    single_germ = {g[0]: i for i, g in enumerate(design.germs) if len(g) == 1}
    gates = {}
    for label in model_ideal.labels:
        gi = single_germ.get(label)
        if gi is None:
            raise EstimationError(f"design has no single-gate germ for {label!r}")
        a_g = block(gi, 1)
        r_hat = c_t @ (a0_pinv @ a_g) @ c_t_inv
        r_hat[0] = 0.0
        r_hat[0, 0] = 1.0  # exact TP row
        gates[label] = GateChannel(ptm=r_hat, unitary=None)

    rho0 = c_t @ (a0_pinv @ a0[:, prep_empty])
    rho0[0] = 1.0 / np.sqrt(3.0)

    effects = np.empty((3, SDIM))
    for k in range(3):
        effects[k] = a0[3 * meas_empty + k, :] @ c_t_inv
    correction = (identity_superbra() - effects.sum(axis=0)) / 3.0
    effects = effects + correction[None, :]

    return GateSetModel(gates=gates, rho0=rho0, effects=effects)


# --- batched likelihood engine ----------------------------------------------


class _CircuitBatch:
    """Padded-word arrays for vectorized probability/gradient evaluation."""

    def __init__(self, design: ExperimentDesign, labels: tuple[str, ...]):
        self.labels = labels
        index = {lab: i for i, lab in enumerate(labels)}
        words = []
        for c in design.circuits:
            try:
                words.append([index[lab] for lab in c.flat_word])
            except KeyError as exc:
                raise EstimationError(f"circuit uses unknown gate {exc}") from None
        self.max_len = max((len(w) for w in words), default=0)
        self.words = np.full((len(words), self.max_len), -1, dtype=np.int64)
        for i, w in enumerate(words):
            self.words[i, : len(w)] = w
        self.masks = [
            [np.nonzero(self.words[:, t] == g)[0] for g in range(len(labels))]
            for t in range(self.max_len)
        ]

    def forward(self, ptms: np.ndarray, rho0: np.ndarray) -> np.ndarray:
        """States after each prefix; shape (n, max_len+1, 9)."""
        n = self.words.shape[0]
        f = np.empty((n, self.max_len + 1, SDIM))
        f[:, 0] = rho0[None, :]
        for t in range(self.max_len):
            f[:, t + 1] = f[:, t]
            for g, idx in enumerate(self.masks[t]):
                if idx.size:
                    f[idx, t + 1] = f[idx, t] @ ptms[g].T
        return f

    def backward(self, ptms: np.ndarray, effects: np.ndarray) -> np.ndarray:
        """Effect rows propagated through each suffix; shape (n, max_len+1, 3, 9)."""
        n = self.words.shape[0]
        b = np.empty((n, self.max_len + 1, 3, SDIM))
        b[:, self.max_len] = effects[None, :, :]
        for t in range(self.max_len - 1, -1, -1):
            b[:, t] = b[:, t + 1]
            for g, idx in enumerate(self.masks[t]):
                if idx.size:
                    b[idx, t] = b[idx, t + 1] @ ptms[g]
        return b

    def probabilities(self, ptms: np.ndarray, rho0: np.ndarray, effects: np.ndarray):
        f = self.forward(ptms, rho0)
        return f[:, self.max_len] @ effects.T, f


# --- TP parametrization -------------------------------------------------------


def _pack(model: GateSetModel, labels: tuple[str, ...]) -> np.ndarray:
    parts = [model.ptm(lab)[1:].ravel() for lab in labels]
    parts.append(model.rho0[1:])
    parts.append(model.effects[0])
    parts.append(model.effects[1])
    return np.concatenate(parts)


def _unpack(theta: np.ndarray, labels: tuple[str, ...]):
    n_gates = len(labels)
    block = (SDIM - 1) * SDIM
    ptms = np.empty((n_gates, SDIM, SDIM))
    for g in range(n_gates):
        ptms[g, 0] = 0.0
        ptms[g, 0, 0] = 1.0
        ptms[g, 1:] = theta[g * block : (g + 1) * block].reshape(SDIM - 1, SDIM)
    off = n_gates * block
    rho0 = np.empty(SDIM)
    rho0[0] = 1.0 / np.sqrt(3.0)
    rho0[1:] = theta[off : off + SDIM - 1]
    off += SDIM - 1
    e0 = theta[off : off + SDIM]
    e1 = theta[off + SDIM : off + 2 * SDIM]
    effects = np.stack([e0, e1, identity_superbra() - e0 - e1])
    return ptms, rho0, effects


def _model_from_arrays(
    labels: tuple[str, ...], ptms: np.ndarray, rho0: np.ndarray, effects: np.ndarray
) -> GateSetModel:
    gates = {
        lab: GateChannel(ptm=ptms[g].copy(), unitary=None)
        for g, lab in enumerate(labels)
    }
    return GateSetModel(gates=gates, rho0=rho0.copy(), effects=effects.copy())


def _neg_loglike_and_grad(theta, batch: _CircuitBatch, counts: np.ndarray):
    # Objective: sum_c N_c sum_k r(p_ck) - sum_ck n_ck log max(p_ck, floor).
    # The mass term sum_k r(p) equals 1 whenever the outcome probabilities lie
    # on the simplex (the parametrization keeps them summing to one), so it is
    # an additive constant there and does not move the maximum-likelihood
    # point; its quadratic continuation below PROB_RADIUS is what keeps the
    # optimizer from parking negative probabilities at zero-count outcomes.
    labels = batch.labels
    ptms, rho0, effects = _unpack(theta, labels)
    f = batch.forward(ptms, rho0)
    p = np.einsum("ci,ki->ck", f[:, batch.max_len], effects)
    p_safe = np.maximum(p, PROB_FLOOR)
    shots = counts.sum(axis=1, keepdims=True)
    low = p < PROB_RADIUS
    mass = np.where(low, (p * p / PROB_RADIUS + PROB_RADIUS) / 2.0, p)
    value = float(np.sum(shots * mass)) - float(np.sum(counts * np.log(p_safe)))

    coeff = shots * np.where(low, p / PROB_RADIUS, 1.0)
    coeff -= np.where(p > PROB_FLOOR, counts / p_safe, 0.0)
    b = batch.backward(ptms, effects)

    grad_ptms = np.zeros_like(ptms)
    for t in range(batch.max_len):
        for g, idx in enumerate(batch.masks[t]):
            if idx.size:
                grad_ptms[g] += np.einsum(
                    "ck,cka,cb->ab", coeff[idx], b[idx, t + 1], f[idx, t]
                )
    grad_rho0 = np.einsum("ck,cki->i", coeff, b[:, 0])
    grad_effects = np.einsum("ck,ci->ki", coeff, f[:, batch.max_len])

    parts = [grad_ptms[g, 1:].ravel() for g in range(len(labels))]
    parts.append(grad_rho0[1:])
    parts.append(grad_effects[0] - grad_effects[2])
    parts.append(grad_effects[1] - grad_effects[2])
    return value, np.concatenate(parts)


def mle_refine(
    data: GstDataset,
    seed_model: GateSetModel,
    max_iter: int = 1000,
    project_cp: bool = False,
) -> GstEstimate:
    """Maximum-likelihood refinement of a TP seed model.

    project_cp=True additionally clips negative Choi eigenvalues of each
    estimated gate after optimization (reported, not part of the MLE itself).
    """
    labels = seed_model.labels
    batch = _CircuitBatch(data.design, labels)
    counts = data.counts
    theta0 = _pack(seed_model, labels)

    value0, _ = _neg_loglike_and_grad(theta0, batch, counts)
    if not np.isfinite(value0):
        raise EstimationError("objective not finite at the seed model")

    res = minimize(
        _neg_loglike_and_grad,
        theta0,
        args=(batch, counts),
        method="L-BFGS-B",
        jac=True,
        options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-6},
    )
    if not np.isfinite(res.fun):
        raise EstimationError("objective diverged during optimization")

    ptms, rho0, effects = _unpack(res.x, labels)
    if project_cp:
        from .superop import project_to_cp

        for g in range(len(labels)):
            projected = project_to_cp(ptms[g])
            projected[0] = 0.0
            projected[0, 0] = 1.0
            ptms[g] = projected
    model = _model_from_arrays(labels, ptms, rho0, effects)
    return GstEstimate(
        model=model,
        loglike=loglikelihood(data, model),
        iterations=int(res.nit),
        gauge=np.eye(SDIM),
    )


def loglikelihood(data: GstDataset, model: GateSetModel) -> float:
    """sum_ck n_ck log p_ck for the model on the dataset."""
    batch = _CircuitBatch(data.design, model.labels)
    ptms = np.stack([model.ptm(lab) for lab in model.labels])
    p, _ = batch.probabilities(ptms, model.rho0, model.effects)
    return float(np.sum(data.counts * np.log(np.maximum(p, PROB_FLOOR))))


# --- gauge optimization -------------------------------------------------------


def _gauge_value_and_grad(
    b_free: np.ndarray,
    est_ptms: np.ndarray,
    tgt_ptms: np.ndarray,
    rho: np.ndarray,
    rho_t: np.ndarray,
    effects: np.ndarray,
    effects_t: np.ndarray,
):
    b = np.empty((SDIM, SDIM))
    b[0] = 0.0
    b[0, 0] = 1.0
    b[1:] = b_free.reshape(SDIM - 1, SDIM)
    if np.linalg.cond(b) > 1e8:
        return 1e100, np.zeros_like(b_free)
    k = np.linalg.inv(b)

    value = 0.0
    grad = np.zeros((SDIM, SDIM))
    for r, t in zip(est_ptms, tgt_ptms):
        rk = r @ k
        x = b @ rk
        m = x - t
        value += float(np.sum(m * m))
        grad += 2.0 * (m @ rk.T - x.T @ m @ k.T)
    v = b @ rho - rho_t
    value += float(v @ v)
    grad += 2.0 * np.outer(v, rho)
    for e, e_t in zip(effects, effects_t):
        ek = e @ k
        w = ek - e_t
        value += float(w @ w)
        grad -= 2.0 * np.outer(k @ w, ek).T
    return value, grad[1:].ravel()


def gauge_optimize(
    est: GateSetModel,
    target: GateSetModel,
    return_gauge: bool = False,
):
    """Move the estimate to the TP gauge closest to the target model."""
    labels = est.labels
    est_ptms = np.stack([est.ptm(lab) for lab in labels])
    tgt_ptms = np.stack([target.ptm(lab) for lab in labels])

    b0 = np.eye(SDIM)[1:].ravel()
    res = minimize(
        _gauge_value_and_grad,
        b0,
        args=(est_ptms, tgt_ptms, est.rho0, target.rho0, est.effects, target.effects),
        method="L-BFGS-B",
        jac=True,
        options={"maxiter": 2000, "ftol": 1e-18, "gtol": 1e-12},
    )
    b = np.empty((SDIM, SDIM))
    b[0] = 0.0
    b[0, 0] = 1.0
    b[1:] = res.x.reshape(SDIM - 1, SDIM)
    cond = np.linalg.cond(b)
    if cond > 1e8:
        raise GaugeError(f"gauge matrix condition number {cond:.2e} exceeds 1e8")
    k = np.linalg.inv(b)

    gates = {
        lab: GateChannel(ptm=b @ est.ptm(lab) @ k, unitary=est.gates[lab].unitary)
        for lab in labels
    }
    fixed = GateSetModel(gates=gates, rho0=b @ est.rho0, effects=est.effects @ k)
    if return_gauge:
        return fixed, b
    return fixed


def gauge_objective(est: GateSetModel, target: GateSetModel) -> float:
    """The gauge-optimization objective at B = I (distance to target)."""
    value = 0.0
    for lab in est.labels:
        value += float(np.sum((est.ptm(lab) - target.ptm(lab)) ** 2))
    v = est.rho0 - target.rho0
    value += float(v @ v)
    value += float(np.sum((est.effects - target.effects) ** 2))
    return value


# --- serialization ------------------------------------------------------------


def estimate_to_json(est: GstEstimate) -> dict:
    from .gates import GATESET_BASIS_TAG
    from .jsonio import real_matrix_to_json

    model = est.model
    return {
        "basis": GATESET_BASIS_TAG,
        "gates": {lab: real_matrix_to_json(model.ptm(lab)) for lab in model.labels},
        "rho0": [float(x) for x in model.rho0],
        "effects": [[float(x) for x in row] for row in model.effects],
        "loglike": est.loglike,
        "iterations": est.iterations,
        "gauge": real_matrix_to_json(est.gauge),
    }


def estimate_from_json(payload: dict) -> GstEstimate:
    from .gates import GATESET_BASIS_TAG
    from .jsonio import real_matrix_from_json

    if payload.get("basis") != GATESET_BASIS_TAG:
        raise EstimationError(f"unsupported basis tag {payload.get('basis')!r}")
    gates = {
        lab: GateChannel(ptm=real_matrix_from_json(mat, (SDIM, SDIM)))
        for lab, mat in payload["gates"].items()
    }
    model = GateSetModel(
        gates=gates,
        rho0=np.asarray(payload["rho0"], dtype=float),
        effects=np.asarray(payload["effects"], dtype=float),
    )
    return GstEstimate(
        model=model,
        loglike=float(payload["loglike"]),
        iterations=int(payload["iterations"]),
        gauge=real_matrix_from_json(payload["gauge"], (SDIM, SDIM)),
    )


def save_estimate(path, est: GstEstimate) -> None:
    from .jsonio import save

    save(path, estimate_to_json(est))


def load_estimate(path) -> GstEstimate:
    from .jsonio import load

    return estimate_from_json(load(path))


# --- bootstrap ----------------------------------------------------------------


def bootstrap_resample(data: GstDataset, seed: int, resample_id: int) -> GstDataset:
    """Parametric bootstrap: redraw counts from the observed frequencies."""
    freqs = data.frequencies
    counts = np.empty_like(data.counts)
    for c in range(len(data.design.circuits)):
        rng = np.random.default_rng((seed, 91, resample_id, c))
        n = int(round(data.shots[c]))
        p = np.clip(freqs[c], 0.0, 1.0)
        p = p / p.sum()
        counts[c] = rng.multinomial(n, p)
    return GstDataset(design=data.design, counts=counts, shots=data.shots.copy())
