"""GST experiment design: fiducial selection, germs, and the circuit list.

Preparation fiducials are short Clifford circuits applied after state
preparation; measurement fiducials are applied before the computational
readout.  Candidates are Clifford elements whose compiled native word has
depth <= 4.  Selection is greedy: at each step pick the candidate maximizing
the smallest singular value of the growing design matrix (prepared-state
superkets as columns; transported effect superbras as rows), with ties broken
by (word depth, group index) so the empty word is always chosen first.  Nine
preparations reach rank 9; measurement bases contribute at most 1 + 2k
independent directions for k bases (three outcomes per basis sum to the
identity), so four bases are required and suffice.

The circuit list is the LGST block — every (prep, meas) pair bare, then every
pair sandwiching each single gate — followed by germ-power blocks: germ g
repeated floor(L/|g|) times for each maximum length L, deduplicated by the
(prep, germ, power, meas) key (fiducial words may chain into one another, so
distinct rows can share a flattened gate word; they stay separate records).
"""

from dataclasses import dataclass

import numpy as np

from . import jsonio
from .clifford import CliffordGroup, element_ptm, native_clifford_group
from .gates import GateSetModel, build_native_gateset

FIDUCIAL_CANDIDATE_DEPTH = 4
DEFAULT_LENGTHS = (0, 1, 2, 4, 8, 16)


class DesignError(ValueError):
    """Experiment design cannot be constructed as requested."""


@dataclass(frozen=True)
class FiducialSet:
    """Native-gate words for preparation and measurement fiducials."""

    prep: tuple[tuple[str, ...], ...]
    meas: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class GstCircuit:
    """One GST circuit: prep fiducial, repeated germ, measurement fiducial."""

    index: int
    prep_fid: int
    germ: int
    power: int
    meas_fid: int
    flat_word: tuple[str, ...]

    @property
    def text(self) -> str:
        return f"{self.prep_fid}:{self.germ}^{self.power}:{self.meas_fid}"


@dataclass(frozen=True)
class ExperimentDesign:
    fiducials: FiducialSet
    germs: tuple[tuple[str, ...], ...]
    lengths: tuple[int, ...]
    circuits: tuple[GstCircuit, ...]

    def __len__(self) -> int:
        return len(self.circuits)


def default_germs(model: GateSetModel | None = None) -> tuple[tuple[str, ...], ...]:
    """Six single-gate germs plus two Hadamard/rotation pairs."""
    model = model or build_native_gateset()
    singles = tuple((label,) for label in model.labels)
    return singles + (("Gh", "Gx01"), ("Gh", "Gx12"))


def _candidate_indices(group: CliffordGroup, max_depth: int) -> list[int]:
    """Group indices with compiled depth <= max_depth, sorted (depth, index)."""
    pairs = [
        (len(e.native_circuit), e.index)
        for e in group.elements
        if len(e.native_circuit) <= max_depth
    ]
    pairs.sort()
    return [idx for _, idx in pairs]


def _sv_ascending(stack: np.ndarray) -> np.ndarray:
    return np.linalg.svd(stack, compute_uv=False)[::-1]


def _lex_greater(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """a > b comparing ascending singular values lexicographically."""
    for x, y in zip(a, b):
        if x > y + tol:
            return True
        if x < y - tol:
            return False
    return False


def _greedy_max_sigma_min(vector_sets: list[np.ndarray], count: int) -> list[int]:
    """Greedily pick `count` blocks of rows maximizing sigma_min of the stack.

    vector_sets[c] is a (k_c, 9) block of rows contributed by candidate c.
    Stacks with more rows than dimensions are structurally rank-deficient at
    intermediate steps (each measurement basis carries one redundant
    direction), making the literal sigma_min tie at zero; comparison is
    therefore lexicographic over the ascending singular-value vector, which
    reduces to the sigma_min rule whenever sigma_min discriminates.
    Candidates are scanned in list order so earlier candidates win ties.
    """
    chosen: list[int] = []
    rows: list[np.ndarray] = []
    for _ in range(count):
        best_pos = -1
        best_score: np.ndarray | None = None
        for pos, block in enumerate(vector_sets):
            if pos in chosen:
                continue
            score = _sv_ascending(np.vstack(rows + [block]))
            if best_score is None or _lex_greater(score, best_score):
                best_score = score
                best_pos = pos
        chosen.append(best_pos)
        rows.append(vector_sets[best_pos])
    return chosen


def select_fiducials(
    group: CliffordGroup | None = None,
    model: GateSetModel | None = None,
    minimal: bool = True,
    max_candidate_depth: int = FIDUCIAL_CANDIDATE_DEPTH,
    prep_candidates: list[int] | None = None,
    meas_candidates: list[int] | None = None,
) -> FiducialSet:
    """Select preparation/measurement fiducials from compiled Clifford words.

    minimal=True picks exactly 9 prep and 4 meas fiducials; minimal=False
    appends three extra of each beyond the rank-9 minimum.  Candidate pools
    can be overridden with explicit group-index lists.  Raises DesignError
    when rank 9 is unreachable from the pool.
    """
    model = model or build_native_gateset()
    group = group or native_clifford_group()
    pool = _candidate_indices(group, max_candidate_depth)
    prep_pool = prep_candidates if prep_candidates is not None else pool
    meas_pool = meas_candidates if meas_candidates is not None else pool

    n_prep, n_meas = (9, 4) if minimal else (12, 7)
    if len(prep_pool) < n_prep or len(meas_pool) < n_meas:
        raise DesignError("candidate pool smaller than the requested fiducial count")

    ptms = {i: element_ptm(group, i) for i in set(prep_pool) | set(meas_pool)}

    prep_vectors = [(ptms[i] @ model.rho0)[None, :] for i in prep_pool]
    prep_sel = _greedy_max_sigma_min(prep_vectors, n_prep)
    prep_rank = np.linalg.matrix_rank(
        np.vstack([prep_vectors[p] for p in prep_sel]), tol=1e-9
    )
    if prep_rank < 9:
        raise DesignError(f"prep fiducials reach rank {prep_rank} < 9")

    meas_vectors = [model.effects @ ptms[i] for i in meas_pool]
    meas_sel = _greedy_max_sigma_min(meas_vectors, n_meas)
    meas_rank = np.linalg.matrix_rank(
        np.vstack([meas_vectors[p] for p in meas_sel]), tol=1e-9
    )
    if meas_rank < 9:
        raise DesignError(f"meas fiducials reach rank {meas_rank} < 9")

    return FiducialSet(
        prep=tuple(group.word(prep_pool[p]) for p in prep_sel),
        meas=tuple(group.word(meas_pool[p]) for p in meas_sel),
    )


def prep_design_matrix(fids: FiducialSet, model: GateSetModel) -> np.ndarray:
    """Columns are the prepared-state superkets (9 x n_prep)."""
    return np.column_stack([model.word_ptm(w) @ model.rho0 for w in fids.prep])


def meas_design_matrix(fids: FiducialSet, model: GateSetModel) -> np.ndarray:
    """Rows are the transported effect superbras ((3 n_meas) x 9)."""
    return np.vstack([model.effects @ model.word_ptm(w) for w in fids.meas])


def build_design(
    fids: FiducialSet,
    germs: tuple[tuple[str, ...], ...] | list = (),
    lengths: tuple[int, ...] | list = DEFAULT_LENGTHS,
    model: GateSetModel | None = None,
) -> ExperimentDesign:
    """Assemble the ordered, duplicate-free GST circuit list.

    Single-gate germs for every model gate are always present (the LGST block
    sandwiches each gate between every fiducial pair); user germs are
    appended after them.  Powers are floor(L/|germ|), skipped when zero.
    """
    model = model or build_native_gateset()
    lengths = tuple(int(x) for x in lengths)
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise DesignError("lengths must be strictly increasing")
    for g in germs:
        if len(g) == 0:
            raise DesignError("germs must be non-empty words")
    singles = [(label,) for label in model.labels]
    germ_list = singles + [tuple(g) for g in germs if tuple(g) not in singles]
    if not germ_list:
        raise DesignError("empty germ list")

    circuits: list[GstCircuit] = []
    seen: set[tuple[int, int, int, int]] = set()

    def add(prep_i: int, germ_i: int, power: int, meas_i: int) -> None:
        key = (prep_i, germ_i, power, meas_i)
        # Power 0 erases the germ, so all power-0 rows for a pair are one row.
        if power == 0:
            key = (prep_i, 0, 0, meas_i)
        if key in seen:
            return
        seen.add(key)
        circuits.append(
            GstCircuit(
                index=len(circuits),
                prep_fid=prep_i,
                germ=key[1],
                power=power,
                meas_fid=meas_i,
                flat_word=fids.prep[prep_i] + germ_list[germ_i] * power + fids.meas[meas_i],
            )
        )

    # LGST block: bare pairs, then each gate sandwiched between every pair.
    for p in range(len(fids.prep)):
        for m in range(len(fids.meas)):
            add(p, 0, 0, m)
    for gi, germ in enumerate(germ_list):
        if len(germ) == 1:
            for p in range(len(fids.prep)):
                for m in range(len(fids.meas)):
                    add(p, gi, 1, m)

    # Germ-power blocks.
    for gi, germ in enumerate(germ_list):
        for length in lengths:
            power = length // len(germ)
            if power < 1:
                continue
            for p in range(len(fids.prep)):
                for m in range(len(fids.meas)):
                    add(p, gi, power, m)

    return ExperimentDesign(
        fiducials=fids,
        germs=tuple(germ_list),
        lengths=lengths,
        circuits=tuple(circuits),
    )


def conditioning_summary(design: ExperimentDesign, model: GateSetModel | None = None) -> dict:
    """Smallest singular values of the prep/meas design matrices."""
    model = model or build_native_gateset()
    prep_sv = np.linalg.svd(prep_design_matrix(design.fiducials, model), compute_uv=False)
    meas_sv = np.linalg.svd(meas_design_matrix(design.fiducials, model), compute_uv=False)
    return {
        "prep_count": len(design.fiducials.prep),
        "meas_count": len(design.fiducials.meas),
        "prep_sigma_min": float(prep_sv[-1]),
        "meas_sigma_min": float(meas_sv[-1]),
        "circuit_count": len(design),
    }


# --- design JSON format ----------------------------------------------------


def design_to_json(design: ExperimentDesign) -> dict:
    return {
        "fiducials": {
            "prep": [list(w) for w in design.fiducials.prep],
            "meas": [list(w) for w in design.fiducials.meas],
        },
        "germs": [list(g) for g in design.germs],
        "lengths": list(design.lengths),
        "circuits": [
            {
                "id": c.index,
                "prep": c.prep_fid,
                "germ": c.germ,
                "power": c.power,
                "meas": c.meas_fid,
                "text": c.text,
                "word": list(c.flat_word),
            }
            for c in design.circuits
        ],
    }


def design_from_json(payload: dict) -> ExperimentDesign:
    fids = FiducialSet(
        prep=tuple(tuple(w) for w in payload["fiducials"]["prep"]),
        meas=tuple(tuple(w) for w in payload["fiducials"]["meas"]),
    )
    circuits = tuple(
        GstCircuit(
            index=c["id"],
            prep_fid=c["prep"],
            germ=c["germ"],
            power=c["power"],
            meas_fid=c["meas"],
            flat_word=tuple(c["word"]),
        )
        for c in payload["circuits"]
    )
    return ExperimentDesign(
        fiducials=fids,
        germs=tuple(tuple(g) for g in payload["germs"]),
        lengths=tuple(payload["lengths"]),
        circuits=circuits,
    )


def save_design(path, design: ExperimentDesign) -> None:
    jsonio.save(path, design_to_json(design))


def load_design(path) -> ExperimentDesign:
    return design_from_json(jsonio.load(path))
