"""Restricted measurement sets, their duals, and admissibility checks.

The dual of a measurement set M is the set of Hermitian operators O with
0 <= tr(O X) <= 1 for every POVM element X in M.  ``dual_margin`` reports
how strictly an operator sits inside that dual; ``admissible_povm`` checks
a candidate POVM against products of virtual-space extreme points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from pepslhv import linalg
from pepslhv.basis import PAULI_X, PAULI_Y, PAULI_Z, OperatorBasis, VirtualSpaceTag, max_ent_state
from pepslhv.errors import UsageError

POVM_PSD_ATOL = 1e-9
POVM_SUM_ATOL = 1e-9
STRICT_MARGIN_FLOOR = 1e-8
ADMISSIBLE_ATOL = 1e-9


@dataclass(frozen=True)
class Povm:
    """A full POVM: PSD elements summing to the identity."""

    elements: tuple
    label: str = ""

    def __post_init__(self):
        elements = tuple(linalg.check_hermitian(x) for x in self.elements)
        if not elements:
            raise UsageError("POVM needs at least one element")
        dim = elements[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for x in elements:
            if x.shape != (dim, dim):
                raise UsageError("POVM elements have mixed dimensions")
            if linalg.min_eigenvalue(x) < -POVM_PSD_ATOL:
                raise UsageError(f"POVM element not PSD in '{self.label}'")
            total += x
        if float(np.max(np.abs(total - np.eye(dim)))) > POVM_SUM_ATOL:
            raise UsageError(f"POVM '{self.label}' does not sum to identity")
        object.__setattr__(self, "elements", elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class MeasurementSet:
    """The restricted set M = {M_i} of allowed local POVMs."""

    povms: tuple

    def __post_init__(self):
        povms = tuple(self.povms)
        if not povms:
            raise UsageError("measurement set must be non-empty")
        dim = povms[0].dim
        if any(p.dim != dim for p in povms):
            raise UsageError("POVMs in a measurement set must share dimension")
        object.__setattr__(self, "povms", povms)

    @property
    def dim(self) -> int:
        return self.povms[0].dim

    def by_label(self, label: str) -> Tuple[int, Povm]:
        for i, p in enumerate(self.povms):
            if p.label == label:
                return i, p
        raise UsageError(f"no POVM labelled '{label}' in measurement set")

    def iter_elements(self):
        for i, povm in enumerate(self.povms):
            for j, x in enumerate(povm.elements):
                yield i, j, x


@dataclass(frozen=True)
class DualMargin:
    """Overlap extremes of an operator against every element of M."""

    min_overlap: float
    max_overlap: float
    margin: float
    worst_element: Tuple[int, int]

    def in_dual(self, atol: float = 0.0) -> bool:
        return self.min_overlap >= -atol and self.max_overlap <= 1.0 + atol

    @property
    def strictly_interior(self) -> bool:
        return self.margin >= STRICT_MARGIN_FLOOR


def dual_margin(O, mset: MeasurementSet) -> DualMargin:
    """Min/max of tr(OX) over M and the strict margin min(tr, 1 - tr)."""
    op = linalg.check_hermitian(O)
    if op.shape[0] != mset.dim:
        raise UsageError(f"operator dim {op.shape[0]} != measurement dim {mset.dim}")
    min_o, max_o, margin = np.inf, -np.inf, np.inf
    worst = (0, 0)
    for i, j, x in mset.iter_elements():
        t = float(np.real(np.trace(op @ x)))
        min_o = min(min_o, t)
        max_o = max(max_o, t)
        slack = min(t, 1.0 - t)
        if slack < margin:
            margin = slack
            worst = (i, j)
    return DualMargin(min_overlap=min_o, max_overlap=max_o, margin=margin, worst_element=worst)


# ---------------------------------------------------------------------------
# Built-in families

_AXIS_STATES = {
    "X": (np.array([1, 1], dtype=complex) / np.sqrt(2), np.array([1, -1], dtype=complex) / np.sqrt(2)),
    "Y": (np.array([1, 1j], dtype=complex) / np.sqrt(2), np.array([1, -1j], dtype=complex) / np.sqrt(2)),
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
}


def pauli_product_measurements(n_qubits: int) -> MeasurementSet:
    """All 3^n products of single-qubit X/Y/Z eigenbasis projectors."""
    if n_qubits < 1:
        raise UsageError("need at least one qubit")
    povms = []
    for axes in itertools.product("XYZ", repeat=n_qubits):
        elements = []
        for outcome in itertools.product((0, 1), repeat=n_qubits):
            vec = linalg.kron_vectors([_AXIS_STATES[a][o] for a, o in zip(axes, outcome)])
            elements.append(np.outer(vec, vec.conj()))
        povms.append(Povm(elements=tuple(elements), label="".join(axes)))
    return MeasurementSet(povms=tuple(povms))


def depolarize_povm(povm: Povm, eta: float) -> Povm:
    """eta X + (1 - eta) tr(X) I / d applied elementwise; still a full POVM."""
    if not 0.0 <= eta <= 1.0:
        raise UsageError(f"eta must be in [0, 1], got {eta}")
    d = povm.dim
    eye = np.eye(d, dtype=complex)
    elements = tuple(
        eta * x + (1.0 - eta) * (np.real(np.trace(x)) / d) * eye for x in povm.elements
    )
    return Povm(elements=elements, label=f"{povm.label}~{eta:g}")


def noisy_pauli_product_measurements(n_qubits: int, eta: float) -> MeasurementSet:
    base = pauli_product_measurements(n_qubits)
    return MeasurementSet(povms=tuple(depolarize_povm(p, eta) for p in base.povms))


def bell_povm() -> Povm:
    """The four Bell projectors on two qubits."""
    phi = max_ent_state(2)
    paulis = [np.eye(2, dtype=complex), PAULI_X, PAULI_Y, PAULI_Z]
    elements = []
    for sigma in paulis:
        vec = np.kron(np.eye(2, dtype=complex), sigma) @ phi
        elements.append(np.outer(vec, vec.conj()))
    return Povm(elements=tuple(elements), label="bell")


def bell_measurement_set() -> MeasurementSet:
    return MeasurementSet(povms=(bell_povm(),))


def measurement_set_from_name(name: str) -> MeasurementSet:
    """Named families: "pauli:n", "noisy-pauli:n:eta", "bell"."""
    parts = name.split(":")
    try:
        if parts[0] == "pauli" and len(parts) == 2:
            return pauli_product_measurements(int(parts[1]))
        if parts[0] == "noisy-pauli" and len(parts) == 3:
            return noisy_pauli_product_measurements(int(parts[1]), float(parts[2]))
        if parts[0] == "bell" and len(parts) == 1:
            return bell_measurement_set()
    except ValueError as exc:
        raise UsageError(f"bad measurement-set name '{name}': {exc}") from exc
    raise UsageError(f"unknown measurement-set name '{name}'")


# ---------------------------------------------------------------------------
# Admissibility against virtual state spaces

@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    min_value: float
    max_value: float
    worst: Tuple[Tuple[int, ...], int, float]  # (basis tuple, element index, value)


def admissible_povm(povm: Povm, site_spaces: Sequence[VirtualSpaceTag]) -> AdmissibilityReport:
    """Scan tr(V X) over products of extreme points V of the tagged spaces.

    Linearity in V makes checking the extreme points sufficient for the
    whole convex hulls.
    """
    spaces = list(site_spaces)
    if not spaces:
        raise UsageError("need at least one virtual space")
    dim = int(np.prod([t.basis.D for t in spaces]))
    if povm.dim != dim:
        raise UsageError(f"POVM dim {povm.dim} != product virtual dim {dim}")
    ranges = [range(t.basis.D**2) for t in spaces]
    min_v, max_v = np.inf, -np.inf
    worst = ((0,) * len(spaces), 0, 0.0)
    for tup in itertools.product(*ranges):
        V = linalg.tensor_product([t.element(k) for t, k in zip(spaces, tup)])
        for j, x in enumerate(povm.elements):
            val = float(np.real(np.trace(V @ x)))
            min_v = min(min_v, val)
            max_v = max(max_v, val)
            # track the entry furthest outside [0, 1]
            excess = max(-val, val - 1.0)
            if excess > max(-worst[2], worst[2] - 1.0):
                worst = (tup, j, val)
    admissible = min_v >= -ADMISSIBLE_ATOL and max_v <= 1.0 + ADMISSIBLE_ATOL
    return AdmissibilityReport(admissible=admissible, min_value=min_v, max_value=max_v, worst=worst)


# ---------------------------------------------------------------------------
# File format

def measurement_set_to_json(mset: MeasurementSet) -> dict:
    return {
        "dim": mset.dim,
        "povms": [
            {"label": p.label, "elements": [linalg.matrix_to_json(x) for x in p.elements]}
            for p in mset.povms
        ],
    }


def measurement_set_from_json(obj: dict) -> MeasurementSet:
    try:
        povms = tuple(
            Povm(
                elements=tuple(linalg.matrix_from_json(x) for x in p["elements"]),
                label=str(p.get("label", "")),
            )
            for p in obj["povms"]
        )
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed measurement-set file: {exc}") from exc
    mset = MeasurementSet(povms=povms)
    if "dim" in obj and mset.dim != int(obj["dim"]):
        raise UsageError("measurement-set file dim disagrees with elements")
    return mset
