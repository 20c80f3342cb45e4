"""Single-qutrit Clifford group: closure, multiplication table, compilation.

The group is generated by breadth-first closure under multiplication of a
generator list, with elements deduplicated up to global phase: each unitary is
canonicalized by making its first nonzero entry real-positive, rounding to 8
decimals (adding 0.0 to squash IEEE negative zeros, which would otherwise
split one element into several byte-distinct fingerprints), and hashing the
bytes.  For the qutrit the full Clifford group has d^3(d^2-1) = 216 elements.

Compilation expresses every element as a shortest word over the native gates
that are themselves Clifford members (Gz1, Gz2, Gh; the pi/2 subspace
rotations are not in the group, and including them would send the search into
an infinite group).  A single breadth-first pass over the multiplication
table compiles all 216 elements; the observed maximum depth is 7, inside the
documented bound of 12.
"""

from dataclasses import dataclass

import numpy as np

from .gates import GateSetModel, build_native_gateset
from .superop import check_unitary, ptm_from_unitary

GROUP_ORDER_BOUND = 10_000
DEFAULT_COMPILE_DEPTH = 12
_FINGERPRINT_DECIMALS = 8


class NotAGroupError(ValueError):
    """Closure did not terminate (or lost closure) within the safety bound."""


class CompilationError(ValueError):
    """A Clifford element has no native word within the depth bound."""


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero entry is real-positive."""
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > 1e-8))
    z = flat[idx]
    return u * (z.conjugate() / abs(z))


def fingerprint(u: np.ndarray) -> bytes:
    c = canonical_phase(u)
    re = np.round(c.real, _FINGERPRINT_DECIMALS) + 0.0
    im = np.round(c.imag, _FINGERPRINT_DECIMALS) + 0.0
    return re.tobytes() + im.tobytes()


@dataclass(frozen=True)
class CliffordElement:
    index: int
    unitary: np.ndarray  # canonical phase
    native_circuit: tuple[str, ...] | None = None

    def __post_init__(self):
        self.unitary.setflags(write=False)


@dataclass
class CliffordGroup:
    """Closed unitary group with lookup tables.

    elements[0] is the identity.  mult_table[i, j] is the index of
    U_i @ U_j; inverse[i] the index of U_i^dag.
    """

    elements: list[CliffordElement]
    mult_table: np.ndarray
    inverse: np.ndarray
    _index: dict[bytes, int]

    def __len__(self) -> int:
        return len(self.elements)

    def index_of(self, unitary: np.ndarray) -> int | None:
        """Index of a unitary up to global phase, or None if not a member."""
        return self._index.get(fingerprint(np.asarray(unitary, dtype=complex)))

    def multiply(self, i: int, j: int) -> int:
        return int(self.mult_table[i, j])

    def inv(self, i: int) -> int:
        return int(self.inverse[i])

    def unitary(self, i: int) -> np.ndarray:
        return self.elements[i].unitary

    def word(self, i: int) -> tuple[str, ...]:
        w = self.elements[i].native_circuit
        if w is None:
            raise CompilationError("group was generated without native words")
        return w


def generate_clifford_group(
    gens: list[np.ndarray], max_elements: int = GROUP_ORDER_BOUND
) -> CliffordGroup:
    """Breadth-first closure of the generators, up to global phase.

    Raises NotAGroupError when the closure exceeds max_elements (the usual
    symptom of a non-Clifford generator, whose closure is infinite) or when
    an inverse is missing from the closed set.
    """
    for g in gens:
        check_unitary(g)
    unitaries = [canonical_phase(np.eye(3, dtype=complex))]
    index = {fingerprint(unitaries[0]): 0}
    frontier = [0]
    gen_mats = [canonical_phase(np.asarray(g, dtype=complex)) for g in gens]
    while frontier:
        new_frontier = []
        for i in frontier:
            for g in gen_mats:
                prod = canonical_phase(g @ unitaries[i])
                fp = fingerprint(prod)
                if fp not in index:
                    if len(unitaries) >= max_elements:
                        raise NotAGroupError(
                            f"closure exceeded {max_elements} elements; "
                            "generators do not generate a finite phase-quotient group"
                        )
                    index[fp] = len(unitaries)
                    new_frontier.append(len(unitaries))
                    unitaries.append(prod)
        frontier = new_frontier

    n = len(unitaries)
    mult = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        for j in range(n):
            fp = fingerprint(unitaries[i] @ unitaries[j])
            k = index.get(fp)
            if k is None:
                raise NotAGroupError("set is not closed under multiplication")
            mult[i, j] = k
    inverse = np.empty(n, dtype=np.int32)
    for i in range(n):
        fp = fingerprint(unitaries[i].conj().T)
        k = index.get(fp)
        if k is None:
            raise NotAGroupError(f"element {i} has no inverse in the set")
        inverse[i] = k

    elements = [CliffordElement(index=i, unitary=u) for i, u in enumerate(unitaries)]
    return CliffordGroup(elements=elements, mult_table=mult, inverse=inverse, _index=index)


def clifford_native_alphabet(group: CliffordGroup, model: GateSetModel) -> dict[str, int]:
    """Native gate labels that are group members, with their element indices."""
    alphabet = {}
    for label, ch in model.gates.items():
        if ch.unitary is None:
            continue
        idx = group.index_of(ch.unitary)
        if idx is not None and label != "Gi":
            alphabet[label] = idx
    return alphabet


def compile_group(
    group: CliffordGroup,
    model: GateSetModel | None = None,
    max_depth: int = DEFAULT_COMPILE_DEPTH,
) -> CliffordGroup:
    """Attach a shortest native word to every element (single BFS).

    Words are over the Clifford-member native gates; the identity compiles to
    the empty word.  Raises CompilationError if any element is unreachable
    within max_depth.
    """
    model = model or build_native_gateset()
    alphabet = clifford_native_alphabet(group, model)
    if not alphabet:
        raise CompilationError("no native gate is a member of the group")
    labels = sorted(alphabet)
    words: dict[int, tuple[str, ...]] = {0: ()}
    frontier = [0]
    depth = 0
    while frontier and len(words) < len(group):
        depth += 1
        if depth > max_depth:
            missing = len(group) - len(words)
            raise CompilationError(
                f"{missing} elements not reachable within depth {max_depth}"
            )
        new_frontier = []
        for i in frontier:
            for label in labels:
                j = group.multiply(alphabet[label], i)
                if j not in words:
                    words[j] = words[i] + (label,)
                    new_frontier.append(j)
        frontier = new_frontier
    if len(words) < len(group):
        raise CompilationError(
            f"{len(group) - len(words)} elements unreachable from the native alphabet"
        )
    elements = [
        CliffordElement(index=i, unitary=e.unitary, native_circuit=words[i])
        for i, e in enumerate(group.elements)
    ]
    return CliffordGroup(
        elements=elements,
        mult_table=group.mult_table,
        inverse=group.inverse,
        _index=group._index,
    )


def compile_clifford(
    c: CliffordElement,
    model: GateSetModel,
    group: CliffordGroup | None = None,
    max_depth: int = DEFAULT_COMPILE_DEPTH,
) -> tuple[str, ...]:
    """Shortest native word for one element (compiles the group if needed)."""
    if c.native_circuit is not None:
        return c.native_circuit
    group = group or native_clifford_group(model)
    compiled = compile_group(group, model, max_depth=max_depth)
    return compiled.elements[c.index].native_circuit


_NATIVE_GROUP: CliffordGroup | None = None


def native_clifford_group(model: GateSetModel | None = None) -> CliffordGroup:
    """The 216-element Clifford group of the native gate set, fully compiled.

    Generated from the Clifford-member natives so that membership of the
    chosen Gz1/Gz2 conventions is validated by construction.  Cached when
    called for the default model.
    """
    global _NATIVE_GROUP
    if model is None and _NATIVE_GROUP is not None:
        return _NATIVE_GROUP
    m = model or build_native_gateset()
    gens = [m.gates[lab].unitary for lab in ("Gz1", "Gz2", "Gh")]
    group = compile_group(generate_clifford_group(gens), m)
    if model is None:
        _NATIVE_GROUP = group
    return group


def element_ptm(group: CliffordGroup, i: int) -> np.ndarray:
    """Transfer matrix of element i (phase-blind, so canonical phase is fine)."""
    return ptm_from_unitary(group.unitary(i))
