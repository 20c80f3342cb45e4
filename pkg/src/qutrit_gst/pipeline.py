"""End-to-end orchestration: design → simulate → estimate → analyze → rb.

Each stage is a pure function over domain objects; run_pipeline chains them
from a flat config dict and assembles the versioned report.  All randomness
flows from the single seed, so identical (config, seed) produce
byte-identical reports through the sorted-key JSON writer.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .clifford import native_clifford_group
from .design import (
    ExperimentDesign,
    build_design,
    conditioning_summary,
    default_germs,
    select_fiducials,
)
from .errorgen import (
    DegenerateError,
    average_gate_infidelity,
    decomposition_block_norms,
    elementary_generators,
    error_generator,
    hamiltonian_power,
    project_error_generator,
)
from .estimation import (
    GstDataset,
    GstEstimate,
    gauge_optimize,
    lgst,
    mle_refine,
)
from .gates import GateSetModel, build_native_gateset
from .jsonio import real_matrix_to_json
from .noise import CountRecord, NoiseSpec, apply_noise, sample_counts
from .rb import RbConfig, gst_clifford_infidelity, rb_fit_to_json, run_rb

REPORT_SCHEMA = 1

DEFAULT_CONFIG = {
    "shots": 10_000,
    "seed": 0,
    "minimal_fiducials": True,
    "max_length": 16,
    "max_iter": 1000,
    "noise": {},
    "rb_lengths": [1, 2, 4, 8, 16, 32],
    "rb_sequences_per_length": 30,
    "rb_shots": 10_000,
    "threads": 1,
}


def lengths_from_max(max_length: int) -> tuple[int, ...]:
    """(0, 1, 2, 4, ..., max_length): powers of two up to the cap."""
    if max_length < 0:
        raise ValueError("max_length must be >= 0")
    lengths = [0]
    power = 1
    while power <= max_length:
        lengths.append(power)
        power *= 2
    return tuple(lengths)


def stage_design(
    target: GateSetModel,
    minimal_fiducials: bool = True,
    max_length: int = 16,
    germs=None,
) -> tuple[ExperimentDesign, dict]:
    fids = select_fiducials(model=target, minimal=minimal_fiducials)
    germ_list = default_germs() if germs is None else tuple(tuple(g) for g in germs)
    design = build_design(
        fids, germs=germ_list, lengths=lengths_from_max(max_length), model=target
    )
    summary = {
        "n_prep_fiducials": len(fids.prep),
        "n_meas_fiducials": len(fids.meas),
        "n_germs": len(design.germs),
        "n_circuits": len(design.circuits),
        "conditioning": conditioning_summary(design, target),
    }
    return design, summary


def stage_simulate(
    design: ExperimentDesign,
    target: GateSetModel,
    noise: NoiseSpec,
    shots: int,
    seed: int,
) -> tuple[GateSetModel, list[CountRecord]]:
    noisy = apply_noise(target, noise)
    return noisy, sample_counts(design, noisy, shots=shots, seed=seed)


def stage_estimate(
    design: ExperimentDesign,
    records: list[CountRecord],
    target: GateSetModel,
    max_iter: int = 1000,
) -> GstEstimate:
    data = GstDataset.from_records(design, records)
    seed_model = lgst(data, design.fiducials, target)
    refined = mle_refine(data, seed_model, max_iter=max_iter)
    fixed, gauge = gauge_optimize(refined.model, target, return_gauge=True)
    return GstEstimate(
        model=fixed,
        loglike=refined.loglike,
        iterations=refined.iterations,
        gauge=gauge,
    )


def _analyze_gate(est_ptm: np.ndarray, ideal_ptm: np.ndarray) -> dict:
    gen = error_generator(est_ptm, ideal_ptm)
    dec = project_error_generator(gen)
    labels = [lab for lab, _ in elementary_generators()]
    try:
        p_h = hamiltonian_power(dec)
    except DegenerateError:
        p_h = None
    return {
        "infidelity": average_gate_infidelity(est_ptm, ideal_ptm),
        "ptm": real_matrix_to_json(est_ptm),
        "error_generator": real_matrix_to_json(gen.matrix),
        "coefficients": {
            lab: float(c) for lab, c in zip(labels, dec.coefficients)
        },
        "block_norms": decomposition_block_norms(dec),
        "p_h": p_h,
        "residual": dec.residual_norm,
    }


def stage_analyze(
    est: GateSetModel, target: GateSetModel, threads: int = 1
) -> dict[str, dict]:
    labels = est.labels
    pairs = [(est.ptm(lab), target.ptm(lab)) for lab in labels]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda p: _analyze_gate(*p), pairs))
    else:
        results = [_analyze_gate(*p) for p in pairs]
    return dict(zip(labels, results))


def stage_rb(
    noisy: GateSetModel,
    target: GateSetModel,
    lengths,
    sequences_per_length: int,
    shots: int,
    seed: int,
):
    group = native_clifford_group(target)
    cfg = RbConfig(
        lengths=tuple(lengths),
        sequences_per_length=sequences_per_length,
        shots=shots,
        seed=seed,
    )
    return run_rb(noisy, group, cfg), group


def merge_config(config: dict | None) -> dict:
    merged = dict(DEFAULT_CONFIG)
    for key, value in (config or {}).items():
        if value is not None:
            merged[key] = value
    return merged


def run_pipeline(config: dict | None = None, target: GateSetModel | None = None):
    """Run every stage and assemble the schema-versioned report.

    Returns (report, artifacts) where artifacts holds the intermediate
    domain objects (design, records, estimate, rb result) for file output.
    """
    cfg = merge_config(config)
    target = target or build_native_gateset()
    noise = NoiseSpec.from_json(cfg["noise"]) if cfg["noise"] else NoiseSpec.ideal()

    design, summary = stage_design(
        target,
        minimal_fiducials=cfg["minimal_fiducials"],
        max_length=cfg["max_length"],
    )
    noisy, records = stage_simulate(
        design, target, noise, shots=cfg["shots"], seed=cfg["seed"]
    )
    estimate = stage_estimate(design, records, target, max_iter=cfg["max_iter"])
    gates_report = stage_analyze(estimate.model, target, threads=cfg["threads"])
    rb_result, group = stage_rb(
        noisy,
        target,
        lengths=cfg["rb_lengths"],
        sequences_per_length=cfg["rb_sequences_per_length"],
        shots=cfg["rb_shots"],
        seed=cfg["seed"],
    )
    gst_mean = gst_clifford_infidelity(estimate.model, group)

    echo_keys = (
        "shots",
        "seed",
        "minimal_fiducials",
        "max_length",
        "max_iter",
        "noise",
        "rb_lengths",
        "rb_sequences_per_length",
        "rb_shots",
    )
    report = {
        "schema": REPORT_SCHEMA,
        "config": {k: cfg[k] for k in echo_keys},
        "design": summary,
        "gates": gates_report,
        "spam": {
            "rho0": [float(x) for x in estimate.model.rho0],
            "effects": [[float(x) for x in row] for row in estimate.model.effects],
        },
        "loglike": estimate.loglike,
        "iterations": estimate.iterations,
        "rb": rb_fit_to_json(rb_result),
        "comparison": {
            "rb_infidelity": rb_result.infidelity,
            "gst_mean_clifford_infidelity": gst_mean,
            "relative_deviation": (
                abs(rb_result.infidelity - gst_mean) / gst_mean
                if gst_mean > 0
                else 0.0
            ),
        },
    }
    artifacts = {
        "design": design,
        "records": records,
        "noisy_model": noisy,
        "estimate": estimate,
        "rb_result": rb_result,
    }
    return report, artifacts
