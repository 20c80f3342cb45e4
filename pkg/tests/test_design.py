from itertools import combinations

import numpy as np
import pytest

from qutrit_gst.clifford import element_ptm
from qutrit_gst.design import (
    DesignError,
    build_design,
    conditioning_summary,
    default_germs,
    design_from_json,
    design_to_json,
    load_design,
    meas_design_matrix,
    prep_design_matrix,
    save_design,
    select_fiducials,
    _candidate_indices,
)


def test_default_germs_contents(model):
    germs = default_germs(model)
    assert ("Gh", "Gx01") in germs
    assert ("Gh", "Gx12") in germs
    for label in model.labels:
        assert (label,) in germs


def test_minimal_fiducial_counts(fids):
    assert len(fids.prep) == 9
    assert len(fids.meas) == 4
    assert fids.prep[0] == ()
    assert fids.meas[0] == ()


def test_prep_design_matrix_rank(fids, model):
    a = prep_design_matrix(fids, model)
    assert a.shape == (9, 9)
    assert np.linalg.matrix_rank(a, tol=1e-9) == 9


def test_meas_design_matrix_rank(fids, model):
    a = meas_design_matrix(fids, model)
    assert a.shape == (12, 9)
    assert np.linalg.matrix_rank(a, tol=1e-9) == 9


def test_three_measurement_bases_cap_at_rank_seven(fids, model, group):
    # each basis block spans <= 3 directions, all containing the identity
    # superbra, so three bases can never exceed rank 7; four are needed
    blocks = [model.effects @ model.word_ptm(w) for w in fids.meas]
    for triple in combinations(blocks, 3):
        assert np.linalg.matrix_rank(np.vstack(triple), tol=1e-9) <= 7


def test_selection_is_deterministic(model, group, fids):
    again = select_fiducials(model=model, group=group)
    assert again.prep == fids.prep
    assert again.meas == fids.meas


def test_non_minimal_selection(model, group):
    fat = select_fiducials(model=model, group=group, minimal=False)
    assert len(fat.prep) == 12
    assert len(fat.meas) == 7


def test_conditioning_summary(full_design, model):
    s = conditioning_summary(full_design, model)
    assert s["prep_count"] == 9
    assert s["meas_count"] == 4
    assert s["circuit_count"] == 1404
    assert 0.3 < s["prep_sigma_min"] < 0.35
    np.testing.assert_allclose(s["meas_sigma_min"], 1.0, atol=1e-9)


def test_circuit_counts_by_max_length(fids, model):
    for lengths, expected in [((0,), 252), ((0, 1, 2), 540), ((0, 1, 2, 4, 8, 16), 1404)]:
        d = build_design(fids, default_germs(), lengths, model)
        assert len(d) == expected


def test_circuits_unique_and_indexed(full_design):
    keys = {(c.prep_fid, c.germ, c.power, c.meas_fid) for c in full_design.circuits}
    assert len(keys) == len(full_design)
    assert [c.index for c in full_design.circuits] == list(range(len(full_design)))


def test_flat_words(full_design):
    fids = full_design.fiducials
    for c in full_design.circuits[:50]:
        germ = full_design.germs[c.germ]
        expect = fids.prep[c.prep_fid] + germ * c.power + fids.meas[c.meas_fid]
        assert c.flat_word == expect


def test_lengths_must_increase(fids, model):
    with pytest.raises(DesignError):
        build_design(fids, default_germs(), (0, 2, 1), model)


def test_empty_germ_rejected(fids, model):
    with pytest.raises(DesignError):
        build_design(fids, [()], (0, 1), model)


def test_design_json_round_trip(full_design, tmp_path):
    payload = design_to_json(full_design)
    back = design_from_json(payload)
    assert back.fiducials == full_design.fiducials
    assert back.germs == full_design.germs
    assert back.lengths == full_design.lengths
    assert back.circuits == full_design.circuits

    path = tmp_path / "design.json"
    save_design(path, full_design)
    assert load_design(path) == full_design


def test_candidate_pool_sorted_by_depth(group):
    pool = _candidate_indices(group, 3)
    assert len(pool) == 31  # 1 + 3 + 8 + 19 elements at depth <= 3
    depths = [len(group.word(i)) for i in pool]
    assert depths == sorted(depths)


def test_rank_cap_over_candidate_pool(group, model):
    # exhaustive over the depth<=3 pool: no triple of bases reaches rank 8
    pool = _candidate_indices(group, 3)
    blocks = [model.effects @ element_ptm(group, i) for i in pool]
    max_rank = max(
        np.linalg.matrix_rank(np.vstack(t), tol=1e-9) for t in combinations(blocks, 3)
    )
    assert max_rank == 7
