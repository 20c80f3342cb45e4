import numpy as np
import pytest

from qutrit_gst.design import FiducialSet, build_design, default_germs
from qutrit_gst.errorgen import average_gate_infidelity
from qutrit_gst.estimation import (
    EstimationError,
    GstDataset,
    _neg_loglike_and_grad,
    _CircuitBatch,
    _pack,
    bootstrap_resample,
    gauge_objective,
    gauge_optimize,
    lgst,
    load_estimate,
    loglikelihood,
    mle_refine,
    save_estimate,
)
from qutrit_gst.gates import GateChannel, GateSetModel
from qutrit_gst.noise import NoiseSpec, apply_noise, sample_counts
from qutrit_gst.superop import SDIM


def agi_profile(m, target):
    return np.array(
        [average_gate_infidelity(m.ptm(g), target.ptm(g)) for g in target.labels]
    )


@pytest.fixture(scope="module")
def ideal_data(small_design, model):
    return GstDataset.from_probabilities(small_design, model)


def test_dataset_from_probabilities(ideal_data, small_design):
    assert ideal_data.counts.shape == (len(small_design), 3)
    np.testing.assert_allclose(ideal_data.counts.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(ideal_data.frequencies, ideal_data.counts, atol=0)


def test_dataset_from_records(small_design, model):
    records = sample_counts(small_design, model, shots=200, seed=1)
    data = GstDataset.from_records(small_design, records)
    assert data.counts.sum() == 200 * len(small_design)
    np.testing.assert_allclose(data.frequencies.sum(axis=1), 1.0, atol=1e-12)

    with pytest.raises(EstimationError):
        GstDataset.from_records(small_design, records[:-1])


def test_lgst_exact_on_ideal_data(ideal_data, model):
    est = lgst(ideal_data, ideal_data.design.fiducials, model)
    for label in model.labels:
        np.testing.assert_allclose(est.ptm(label), model.ptm(label), atol=1e-10)
    np.testing.assert_allclose(est.rho0, model.rho0, atol=1e-10)
    np.testing.assert_allclose(est.effects, model.effects, atol=1e-10)


def test_lgst_requires_empty_fiducials(small_design, model):
    data = GstDataset.from_probabilities(small_design, model)
    bad = FiducialSet(prep=(("Gh",),) * 9, meas=((("Gh",)),) * 4)
    with pytest.raises(EstimationError):
        lgst(data, bad, model)


def test_lgst_plus_gauge_recovers_depolarized_truth(small_design, model):
    truth = apply_noise(model, NoiseSpec.depolarizing_only(0.03))
    data = GstDataset.from_probabilities(small_design, truth)
    est = gauge_optimize(lgst(data, small_design.fiducials, model), model)
    np.testing.assert_allclose(agi_profile(est, model), agi_profile(truth, model), atol=1e-8)


def test_mle_gradient_matches_directional_differences(small_design, model):
    truth = apply_noise(model, NoiseSpec(depolarizing=0.02))
    records = sample_counts(small_design, truth, shots=300, seed=5)
    data = GstDataset.from_records(small_design, records)
    batch = _CircuitBatch(small_design, model.labels)
    theta = _pack(apply_noise(model, NoiseSpec(depolarizing=0.01)), model.labels)
    value, grad = _neg_loglike_and_grad(theta, batch, data.counts)
    rng = np.random.default_rng(0)
    eps = 1e-6
    for _ in range(5):
        d = rng.normal(size=theta.size)
        d /= np.linalg.norm(d)
        vp, _ = _neg_loglike_and_grad(theta + eps * d, batch, data.counts)
        vm, _ = _neg_loglike_and_grad(theta - eps * d, batch, data.counts)
        np.testing.assert_allclose((vp - vm) / (2 * eps), grad @ d, rtol=1e-5, atol=1e-4)


def test_mle_never_beats_truth_on_exact_data(small_design, model):
    # the optimizer must not exploit clipped probabilities to exceed the
    # information-theoretic optimum
    truth = apply_noise(model, NoiseSpec(depolarizing=0.01))
    data = GstDataset.from_probabilities(small_design, truth)
    est = mle_refine(data, lgst(data, small_design.fiducials, model))
    assert est.loglike <= loglikelihood(data, truth) + 1e-9


def test_mle_improves_seed_and_is_deterministic(small_design, model):
    truth = apply_noise(model, NoiseSpec(depolarizing=0.02))
    records = sample_counts(small_design, truth, shots=500, seed=9)
    data = GstDataset.from_records(small_design, records)
    seed_model = lgst(data, small_design.fiducials, model)
    est1 = mle_refine(data, seed_model)
    est2 = mle_refine(data, seed_model)
    assert est1.loglike >= loglikelihood(data, seed_model)
    assert est1.loglike == est2.loglike
    for label in model.labels:
        np.testing.assert_allclose(est1.model.ptm(label), est2.model.ptm(label), atol=0)
    assert est1.iterations == est2.iterations > 0


def test_mle_keeps_tp_structure(small_design, model):
    truth = apply_noise(model, NoiseSpec(depolarizing=0.02))
    records = sample_counts(small_design, truth, shots=500, seed=9)
    data = GstDataset.from_records(small_design, records)
    est = mle_refine(data, lgst(data, small_design.fiducials, model))
    for label in model.labels:
        row = est.model.ptm(label)[0]
        np.testing.assert_allclose(row, np.eye(SDIM)[0], atol=1e-14)
    assert abs(est.model.rho0[0] - 1 / np.sqrt(3)) < 1e-14
    np.testing.assert_allclose(
        est.model.effects.sum(axis=0) @ est.model.rho0, 1.0, atol=1e-12
    )


def test_gauge_optimize_recovers_planted_frame(model):
    rng = np.random.default_rng(2)
    b = np.eye(SDIM) + 0.05 * rng.normal(size=(SDIM, SDIM))
    b[0] = np.eye(SDIM)[0]  # TP-preserving gauge
    k = np.linalg.inv(b)
    truth = apply_noise(model, NoiseSpec.depolarizing_only(0.02))
    twisted = GateSetModel(
        gates={
            lab: GateChannel(ptm=b @ truth.ptm(lab) @ k) for lab in truth.labels
        },
        rho0=b @ truth.rho0,
        effects=truth.effects @ k,
    )
    fixed = gauge_optimize(twisted, model)
    assert gauge_objective(fixed, model) < gauge_objective(twisted, model)
    for label in model.labels:
        np.testing.assert_allclose(fixed.ptm(label), truth.ptm(label), atol=1e-6)


def test_estimate_json_round_trip(tmp_path, small_design, model):
    truth = apply_noise(model, NoiseSpec(depolarizing=0.02))
    records = sample_counts(small_design, truth, shots=200, seed=2)
    data = GstDataset.from_records(small_design, records)
    est = mle_refine(data, lgst(data, small_design.fiducials, model), max_iter=30)
    path = tmp_path / "estimate.json"
    save_estimate(path, est)
    back = load_estimate(path)
    assert back.loglike == est.loglike
    assert back.iterations == est.iterations
    for label in model.labels:
        np.testing.assert_allclose(back.model.ptm(label), est.model.ptm(label), atol=0)
    np.testing.assert_allclose(back.gauge, est.gauge, atol=0)


def test_bootstrap_resample_properties(small_design, model):
    records = sample_counts(small_design, model, shots=400, seed=3)
    data = GstDataset.from_records(small_design, records)
    r0 = bootstrap_resample(data, seed=1, resample_id=0)
    r0_again = bootstrap_resample(data, seed=1, resample_id=0)
    r1 = bootstrap_resample(data, seed=1, resample_id=1)
    np.testing.assert_allclose(r0.counts, r0_again.counts, atol=0)
    assert np.abs(r0.counts - r1.counts).max() > 0
    np.testing.assert_allclose(r0.counts.sum(axis=1), 400.0, atol=0)


def test_loglikelihood_manual_value(model):
    # one empty circuit: ideal probabilities are (1, 0, 0)
    fids = FiducialSet(prep=((),), meas=((),))
    design = build_design(fids, default_germs(), (0, 1), model)
    data = GstDataset.from_probabilities(design, model)
    ll = loglikelihood(data, model)
    # every term is n*log(p) with p >= clip; the ideal model reproduces its
    # own probabilities so ll == sum_p p log p over all circuits
    manual = float(np.sum(data.counts * np.log(np.maximum(data.counts, 1e-12))))
    np.testing.assert_allclose(ll, manual, atol=1e-9)
