"""Sparse complex amplitudes over small computational bases.

Qubits are numbered from 1, matching the ``0_3`` style outcome labels used
throughout the package: qubit 1 is the leftmost bit of a basis label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

EPS_DROP = 1e-12
MAX_WIDTH = 4

BasisLabel = tuple[int, ...]


def as_label(bits: str | Sequence[int]) -> BasisLabel:
    """Normalise ``"010"`` or ``(0, 1, 0)`` into a basis label tuple."""
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits.strip("|>⟩ ")]
    label = tuple(int(b) for b in bits)
    if not 1 <= len(label) <= MAX_WIDTH:
        raise ValueError(f"basis label width must be 1..{MAX_WIDTH}, got {len(label)}")
    if any(b not in (0, 1) for b in label):
        raise ValueError(f"basis label entries must be 0 or 1: {label}")
    return label


def label_str(label: BasisLabel) -> str:
    return "".join(str(b) for b in label)


def _check_qubit(qubit: int, width: int) -> None:
    if not 1 <= qubit <= width:
        raise ValueError(f"qubit {qubit} out of range for width {width}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable map from basis labels to amplitudes.

    Terms with ``|amplitude| < EPS_DROP`` are removed on construction, so a
    stored term is always physically meaningful. The vector may be
    sub-normalised (after post-selection) or even non-normalised when built
    by hand.
    """

    width: int
    terms: Mapping[BasisLabel, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must be 1..{MAX_WIDTH}, got {self.width}")
        clean: dict[BasisLabel, complex] = {}
        for lab, amp in self.terms.items():
            lab = as_label(lab)
            if len(lab) != self.width:
                raise ValueError(f"label {label_str(lab)} does not have width {self.width}")
            clean[lab] = clean.get(lab, 0j) + complex(amp)
        kept = {k: v for k, v in sorted(clean.items(), reverse=True) if abs(v) >= EPS_DROP}
        object.__setattr__(self, "terms", kept)

    @classmethod
    def zero(cls, width: int) -> StateVector:
        return cls(width, {})

    @classmethod
    def from_dense(cls, vec: Sequence[complex], width: int) -> StateVector:
        """Build from a dense vector indexed big-endian (qubit 1 most significant)."""
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (2**width,):
            raise ValueError(f"dense vector must have length {2**width}")
        terms = {}
        for idx, amp in enumerate(vec):
            terms[tuple((idx >> (width - 1 - q)) & 1 for q in range(width))] = amp
        return cls(width, terms)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(2**self.width, dtype=complex)
        for lab, amp in self.terms.items():
            out[int(label_str(lab), 2)] = amp
        return out

    def __iter__(self) -> Iterator[tuple[BasisLabel, complex]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: StateVector) -> StateVector:
        if other.width != self.width:
            raise ValueError("cannot add state vectors of different width")
        acc = dict(self.terms)
        for lab, amp in other.terms.items():
            acc[lab] = acc.get(lab, 0j) + amp
        return StateVector(self.width, acc)

    def __neg__(self) -> StateVector:
        return self.scale(-1)

    def __sub__(self, other: StateVector) -> StateVector:
        return self + (-other)

    def scale(self, factor: complex) -> StateVector:
        return StateVector(self.width, {k: v * factor for k, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def allclose(self, other: StateVector, atol: float = 1e-12) -> bool:
        """Componentwise comparison; both vectors must share a width."""
        if other.width != self.width:
            return False
        labels = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= atol for k in labels)

    def __repr__(self) -> str:
        if not self.terms:
            return f"StateVector(0, width={self.width})"
        parts = [f"({amp.real:.6g}{amp.imag:+.6g}j)|{label_str(lab)}>" for lab, amp in self.terms.items()]
        return " + ".join(parts)


def make_state(label: str | Sequence[int]) -> StateVector:
    lab = as_label(label)
    return StateVector(len(lab), {lab: 1.0})


def norm_sq(state: StateVector) -> float:
    return float(sum(abs(a) ** 2 for a in state.terms.values()))


def amplitude(state: StateVector, label: str | Sequence[int]) -> complex:
    return state.terms.get(as_label(label), 0j)


def project(state: StateVector, qubit: int, value: int) -> StateVector:
    """Keep only the terms whose ``qubit`` equals ``value`` (no renormalisation)."""
    _check_qubit(qubit, state.width)
    if value not in (0, 1):
        raise ValueError(f"projection value must be 0 or 1, got {value}")
    return StateVector(state.width, {k: v for k, v in state.terms.items() if k[qubit - 1] == value})


def matches(label: BasisLabel, conditions: Iterable[tuple[int, int]]) -> bool:
    return all(label[q - 1] == v for q, v in conditions)


GATE_KINDS = ("rotation", "oracle", "hadamard", "phase_oracle", "increment", "linear")


@dataclass(frozen=True)
class GateSpec:
    """One gate acting on ``targets`` when every ``(qubit, value)`` control holds.

    Use the module-level constructors (:func:`rotation`, :func:`oracle_computer`
    ...) rather than filling the fields by hand. ``linear`` is a raw matrix over
    the target qubits and need not be unitary.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    answer: int = 0
    controls: tuple[tuple[int, int], ...] = ()
    matrix: tuple[tuple[complex, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.answer not in (0, 1):
            raise ValueError("answer bit must be 0 or 1")
        qubits = list(self.targets) + [q for q, _ in self.controls]
        if len(set(qubits)) != len(qubits):
            raise ValueError("targets and controls must be distinct qubits")
        if any(v not in (0, 1) for _, v in self.controls):
            raise ValueError("control values must be 0 or 1")
        if self.kind == "linear":
            if self.matrix is None or np.shape(self.matrix) != (2 ** len(self.targets),) * 2:
                raise ValueError("linear gate needs a square matrix matching its targets")
        elif len(self.targets) != 1:
            raise ValueError(f"{self.kind} gate acts on exactly one target")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def local_matrix(self) -> np.ndarray:
        """Matrix on the target qubits; column ``j`` is the image of ``|j>``."""
        if self.kind == "rotation":
            c, s = math.cos(self.angle), math.sin(self.angle)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "hadamard":
            return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        if self.kind == "increment" or (self.kind == "oracle" and self.answer == 1):
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "phase_oracle" and self.answer == 1:
            return np.array([[1, 0], [0, -1]], dtype=complex)
        if self.kind == "linear":
            return np.array(self.matrix, dtype=complex)
        return np.eye(2, dtype=complex)

    def is_unitary(self, atol: float = 1e-12) -> bool:
        m = self.local_matrix()
        return bool(np.allclose(m.conj().T @ m, np.eye(len(m)), atol=atol))


def rotation(target: int, angle: float, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    """Real rotation ``|0> -> cos|0> + sin|1>``, ``|1> -> -sin|0> + cos|1>``."""
    return GateSpec("rotation", (target,), angle=float(angle), controls=tuple(controls))


def oracle_computer(answer: int, target: int, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    """Black-box computer: flips ``target`` iff the answer is 1."""
    return GateSpec("oracle", (target,), answer=answer, controls=tuple(controls))


def hadamard(target: int, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    return GateSpec("hadamard", (target,), controls=tuple(controls))


def phase_oracle(answer: int, target: int, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    """Pi phase on ``|1>`` of ``target`` iff the answer is 1."""
    return GateSpec("phase_oracle", (target,), answer=answer, controls=tuple(controls))


def register_increment(target: int, controls: Sequence[tuple[int, int]] = ()) -> GateSpec:
    return GateSpec("increment", (target,), controls=tuple(controls))


def linear(targets: Sequence[int], matrix: Sequence[Sequence[complex]]) -> GateSpec:
    mat = tuple(tuple(complex(x) for x in row) for row in matrix)
    return GateSpec("linear", tuple(targets), matrix=mat)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    for q in gate.qubits:
        _check_qubit(q, state.width)
    mat = gate.local_matrix()
    idx = [q - 1 for q in gate.targets]
    out: dict[BasisLabel, complex] = {}
    for lab, amp in state.terms.items():
        if not matches(lab, gate.controls):
            out[lab] = out.get(lab, 0j) + amp
            continue
        col = 0
        for i in idx:
            col = (col << 1) | lab[i]
        column = mat[:, col]
        for row, coeff in enumerate(column):
            if coeff == 0:
                continue
            new = list(lab)
            for pos, i in enumerate(idx):
                new[i] = (row >> (len(idx) - 1 - pos)) & 1
            key = tuple(new)
            out[key] = out.get(key, 0j) + amp * coeff
    return StateVector(state.width, out)
