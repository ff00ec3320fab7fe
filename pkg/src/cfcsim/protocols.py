"""Step-sequence protocols: chained Zeno, simple CFC, interferometers.

A :class:`Protocol` is an immutable tuple of gates, checkpoints (labelling
points that do nothing to the state) and post-selecting measurements.
Builders fix the qubit layout once; every angle comes from the cycle counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .amplitudes import (
    GateSpec,
    StateVector,
    apply_gate,
    hadamard,
    linear,
    make_state,
    norm_sq,
    oracle_computer,
    phase_oracle,
    project,
    register_increment,
    rotation,
)

FOURTH_REGISTER_MODES = ("none", "computer_incremented", "subroutine_incremented")


class ProtocolError(ValueError):
    """Invalid protocol parameters or a protocol/state mismatch."""


@dataclass(frozen=True)
class Gate:
    gate: GateSpec
    tag: str = ""


@dataclass(frozen=True)
class Checkpoint:
    """Labelling point: splits histories on the values of ``qubits``.

    ``alphabet`` maps each bit tuple of the read qubits to the symbols
    appended to a history passing that way.
    """

    id: str
    qubits: tuple[int, ...]
    alphabet: tuple[tuple[tuple[int, ...], tuple[str, ...]], ...]
    tag: str = ""

    def symbols_for(self, bits: tuple[int, ...]) -> tuple[str, ...]:
        for key, syms in self.alphabet:
            if key == bits:
                return syms
        raise ProtocolError(f"checkpoint {self.id} has no token for bits {bits}")


@dataclass(frozen=True)
class Measurement:
    qubit: int
    detector: str
    select: int = 0
    tag: str = ""

    def __post_init__(self) -> None:
        if self.select not in (0, 1):
            raise ProtocolError("post-selected value must be 0 or 1")


ProtocolStep = Union[Gate, Checkpoint, Measurement]


@dataclass(frozen=True)
class Protocol:
    name: str
    width: int
    steps: tuple[ProtocolStep, ...]
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [s.id for s in self.steps if isinstance(s, Checkpoint)]
        if len(ids) != len(set(ids)):
            raise ProtocolError("checkpoint ids must be unique")
        for step in self.steps:
            qubits: tuple[int, ...]
            if isinstance(step, Gate):
                qubits = step.gate.qubits
            elif isinstance(step, Checkpoint):
                qubits = step.qubits
            else:
                qubits = (step.qubit,)
            if any(not 1 <= q <= self.width for q in qubits):
                raise ProtocolError(f"step {step} addresses a qubit outside width {self.width}")

    def initial_state(self) -> StateVector:
        return make_state((0,) * self.width)

    @property
    def measurements(self) -> list[tuple[int, Measurement]]:
        return [(i, s) for i, s in enumerate(self.steps) if isinstance(s, Measurement)]

    def default_outcomes(self) -> tuple[int, ...]:
        return tuple(m.select for _, m in self.measurements)

    def __len__(self) -> int:
        return len(self.steps)


# --------------------------------------------------------------------------- params


@dataclass(frozen=True)
class ChainedZenoParams:
    """Chained Zeno settings.

    ``cycles`` truncates the protocol to its first routine cycles while
    keeping the routine angle of the full ``N_prime`` protocol.
    """

    N: int
    N_prime: int
    answer: int = 0
    fourth_register: str = "none"
    cycles: int | None = None

    def __post_init__(self) -> None:
        for name in ("N", "N_prime"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < 1:
                raise ProtocolError(f"{name} must be an integer >= 1, got {val!r}")
        if self.answer not in (0, 1):
            raise ProtocolError("answer must be 0 or 1")
        if self.fourth_register not in FOURTH_REGISTER_MODES:
            raise ProtocolError(f"fourth_register must be one of {FOURTH_REGISTER_MODES}")
        if self.cycles is not None and not 1 <= self.cycles <= self.N_prime:
            raise ProtocolError("cycles must lie in 1..N_prime")

    @property
    def theta(self) -> float:
        return math.pi / (2 * self.N)

    @property
    def theta_prime(self) -> float:
        return math.pi / (2 * self.N_prime)

    @property
    def width(self) -> int:
        return 3 if self.fourth_register == "none" else 4


@dataclass(frozen=True)
class SimpleCfcParams:
    """Simple CFC settings.

    ``switch_outcome`` defaults to the only informative outcome for the
    answer: 0 for answer 1 and 1 for answer 0.
    """

    answer: int = 1
    expose_inner_workings: bool = False
    switch_outcome: int | None = None

    def __post_init__(self) -> None:
        if self.answer not in (0, 1):
            raise ProtocolError("answer must be 0 or 1")
        if self.switch_outcome not in (None, 0, 1):
            raise ProtocolError("switch_outcome must be 0 or 1")

    @property
    def outcome(self) -> int:
        return 1 - self.answer if self.switch_outcome is None else self.switch_outcome


@dataclass(frozen=True)
class EraserParams:
    """Path amplitudes of the three histories reaching detector S.

    ``mode="interferometer"`` realises the amplitudes with real beamsplitters,
    which forces ``c1 == -c2``; ``mode="direct"`` injects arbitrary amplitudes
    through a non-unitary linear map for definition analysis only.
    ``recombine=False`` drops the final beamsplitter (screen only).
    """

    c1: complex
    c2: complex
    c3: complex
    mode: str = "direct"
    recombine: bool = True

    def __post_init__(self) -> None:
        for name in ("c1", "c2", "c3"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.mode not in ("direct", "interferometer"):
            raise ProtocolError("mode must be 'direct' or 'interferometer'")
        if abs(self.c1) ** 2 + abs(self.c2) ** 2 + abs(self.c3) ** 2 > 1 + 1e-9:
            raise ProtocolError("path amplitudes exceed unit probability")
        if self.mode == "interferometer":
            if abs(self.c1 + self.c2) > 1e-12:
                raise ProtocolError("interferometer mode requires c1 == -c2 (dark port)")
            if any(abs(c.imag) > 1e-12 for c in (self.c1, self.c3)):
                raise ProtocolError("interferometer mode realises real amplitudes only")
            network_angles(self)

    @classmethod
    def balanced(cls, recombine: bool = True) -> EraserParams:
        """Amplitudes of the all-50/50 network."""
        alpha = gamma = math.pi / 4
        if recombine:
            c1 = math.sin(alpha) * math.sin(gamma) / 2
            return cls(c1, -c1, math.cos(alpha) * math.cos(gamma), "interferometer", True)
        return cls(-math.sin(alpha) / 2, math.sin(alpha) / 2, math.cos(alpha), "interferometer", False)


def network_angles(params: EraserParams) -> tuple[float, float]:
    """Solve the entry/eraser beamsplitter angles realising ``params``.

    With a balanced inner interferometer the S amplitudes are
    ``c1 = sin(a) sin(g) / 2`` and ``c3 = cos(a) cos(g)``; without the eraser
    the screen sees ``c1 = -sin(a) / 2`` and ``c3 = cos(a)``.
    """
    c1, c3 = params.c1.real, params.c3.real
    if not params.recombine:
        if abs(c3**2 + 4 * c1**2 - 1) > 1e-9:
            raise ProtocolError("screen-only network needs c3^2 + 4 c1^2 == 1")
        return math.atan2(-2 * c1, c3), 0.0
    diff, tot = c3 + 2 * c1, c3 - 2 * c1
    if abs(diff) > 1 + 1e-12 or abs(tot) > 1 + 1e-12:
        raise ProtocolError(f"amplitudes ({c1}, {-c1}, {c3}) are not realisable by the eraser network")
    a_minus_g = math.acos(max(-1.0, min(1.0, diff)))
    a_plus_g = math.acos(max(-1.0, min(1.0, tot)))
    return (a_plus_g + a_minus_g) / 2, (a_plus_g - a_minus_g) / 2


# --------------------------------------------------------------------------- builders

_CHAINED_ALPHABET = (
    ((1, 1), ("n(1)", "n(2)")),
    ((1, 0), ("n(1)", "f(2)")),
    ((0, 1), ("f(1)", "n(2)")),
    ((0, 0), ("f(1)", "f(2)")),
)


def _detector_suffix(j: int) -> str:
    return chr(ord("a") + j) if j < 26 else f"_{j + 1}"


def chained_parts(params: ChainedZenoParams, cycle: int = 1):
    """Steps of one routine cycle split as ``(head, subroutine_iterations, tail)``.

    ``subroutine_iterations`` is a list of N step blocks. Exposed so that
    probability scans can reuse one block as a transfer matrix.
    """
    comp_controls = ((1, 1), (2, 1))
    head: list[ProtocolStep] = [Gate(rotation(1, params.theta_prime), tag=f"R'{cycle}")]
    if params.fourth_register == "subroutine_incremented":
        head.append(Gate(register_increment(4, ((1, 1),)), tag=f"sub-increment{cycle}"))
    blocks = []
    for j in range(params.N):
        block: list[ProtocolStep] = [
            Gate(rotation(2, params.theta, ((1, 1),)), tag=f"R{cycle}.{j + 1}"),
            Checkpoint(f"c{cycle}.{j + 1}", (1, 2), _CHAINED_ALPHABET),
        ]
        if params.fourth_register == "computer_incremented":
            block.append(Gate(register_increment(4, comp_controls), tag=f"comp-increment{cycle}.{j + 1}"))
        block.append(Gate(oracle_computer(params.answer, 3, comp_controls), tag=f"comp{cycle}.{j + 1}"))
        block.append(Measurement(3, f"D_3{_detector_suffix(j)}", 0, tag=f"D_3.{cycle}.{j + 1}"))
        blocks.append(block)
    tail: list[ProtocolStep] = [Measurement(2, "D_2", 0, tag=f"D_2.{cycle}")]
    return head, blocks, tail


def build_chained_zeno(params: ChainedZenoParams) -> Protocol:
    """Nested Zeno protocol: qubit 1 subroutine switch, 2 computer switch, 3 output, 4 counter."""
    steps: list[ProtocolStep] = []
    for cycle in range(1, (params.cycles or params.N_prime) + 1):
        head, blocks, tail = chained_parts(params, cycle)
        steps += head
        for block in blocks:
            steps += block
        steps += tail
    meta = {
        "N": params.N,
        "N_prime": params.N_prime,
        "answer": params.answer,
        "fourth_register": params.fourth_register,
        "cycles": params.cycles or params.N_prime,
    }
    return Protocol("chained-zeno", params.width, tuple(steps), meta)


def zeno_block(N: int, answer: int, j: int = 1) -> list[ProtocolStep]:
    """One Zeno cycle: rotate the switch, insert the computer, read the register."""
    return [
        Gate(rotation(1, math.pi / (2 * N)), tag=f"R{j}"),
        Gate(oracle_computer(answer, 2, ((1, 1),)), tag=f"comp{j}"),
        Measurement(2, "D_2", 0, tag=f"D_2.{j}"),
    ]


def build_zeno(N: int, answer: int) -> Protocol:
    """Plain Zeno scheme: qubit 1 computer switch, qubit 2 output register."""
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool) or N < 1:
        raise ProtocolError(f"N must be an integer >= 1, got {N!r}")
    if answer not in (0, 1):
        raise ProtocolError("answer must be 0 or 1")
    steps: list[ProtocolStep] = []
    for j in range(1, N + 1):
        steps += zeno_block(N, answer, j)
    return Protocol("zeno", 2, tuple(steps), {"N": N, "answer": answer})


# Switch unitary: the usual rotation at pi/4. The Hadamard-like alternative
# (|1> -> (|0> - |1>)/sqrt2) fails to send answer 0 to |1>|0>.
SWITCH_ANGLE = math.pi / 4


def build_simple_cfc(params: SimpleCfcParams) -> Protocol:
    """Simple CFC: qubit 1 computer switch, qubit 2 input/output register.

    With the internals exposed, the register is also read at the end so that
    every history finishes in a single basis state.
    """
    u = Gate(rotation(1, SWITCH_ANGLE, ((2, 0),)), tag="U")
    steps: list[ProtocolStep] = [u]
    if params.expose_inner_workings:
        steps += [
            Gate(hadamard(2, ((1, 1),)), tag="comp.H1"),
            Gate(phase_oracle(params.answer, 2, ((1, 1),)), tag="comp.oracle"),
            Checkpoint("register", (2,), (((1,), ("n",)), ((0,), ("u",)))),
            Gate(hadamard(2, ((1, 1),)), tag="comp.H2"),
        ]
    else:
        steps += [
            Checkpoint("switch", (1,), (((1,), ("n",)), ((0,), ("f",)))),
            Gate(oracle_computer(params.answer, 2, ((1, 1),)), tag="comp"),
        ]
    steps += [Gate(u.gate, tag="U"), Measurement(1, "D_1", params.outcome, tag="switch-readout")]
    if params.expose_inner_workings:
        steps.append(Measurement(2, "R_2", 0, tag="register-readout"))
    meta = {"answer": params.answer, "expose_inner_workings": params.expose_inner_workings,
            "switch_outcome": params.outcome}
    return Protocol("simple-cfc", 2, tuple(steps), meta)


_C_ALPHABET = (((1, 1), ("n",)), ((1, 0), ("f",)), ((0, 1), ("x",)), ((0, 0), ("d",)))


def build_interferometer(params: EraserParams) -> Protocol:
    """Three-path network: qubit 1 outer path (1 = interferometer), qubit 2 inner arm.

    History tokens at checkpoint C: ``n`` through point C, ``f`` the other
    interferometer arm, ``d`` the direct path.
    """
    meta = {"c1": params.c1, "c2": params.c2, "c3": params.c3, "mode": params.mode,
            "recombine": params.recombine}
    checkpoint = Checkpoint("C", (1, 2), _C_ALPHABET)
    if params.mode == "direct":
        inject = np.zeros((4, 4), dtype=complex)
        inject[0b11, 0], inject[0b10, 0], inject[0b00, 0] = params.c1, params.c2, params.c3
        merge = np.zeros((4, 4), dtype=complex)
        merge[0b00, [0b11, 0b10, 0b00]] = 1
        steps: list[ProtocolStep] = [
            Gate(linear((1, 2), inject), tag="inject"),
            checkpoint,
            Gate(linear((1, 2), merge), tag="merge"),
            Measurement(1, "S", 0, tag="S"),
        ]
        return Protocol("eraser-direct", 2, tuple(steps), meta)

    alpha, gamma = network_angles(params)
    steps = [
        Gate(rotation(1, alpha), tag="BS1"),
        Gate(rotation(2, math.pi / 4, ((1, 1),)), tag="BSa"),
        checkpoint,
        Gate(rotation(2, math.pi / 4, ((1, 1),)), tag="BSb"),
    ]
    if params.recombine:
        steps.append(Gate(rotation(1, gamma, ((2, 0),)), tag="BS2"))
    steps.append(Measurement(2, "Q", 0, tag="Q"))
    if params.recombine:
        steps.append(Measurement(1, "S", 0, tag="S"))
    return Protocol("eraser" if params.recombine else "gedanken", 2, tuple(steps), meta)


# --------------------------------------------------------------------------- running


@dataclass(frozen=True)
class MeasurementRecord:
    step: int
    detector: str
    qubit: int
    selected: int
    p_selected: float
    p_click: float


@dataclass(frozen=True)
class FinalReport:
    """Outcome of running a protocol with post-selection.

    ``probability`` is the joint probability of every selected outcome;
    ``clicks`` sums, per detector, the probability of the rejected outcome at
    each of its measurements (relative to the initial norm).
    """

    state: StateVector
    probability: float
    clicks: Mapping[str, float]
    records: tuple[MeasurementRecord, ...]


def normalise_outcomes(protocol: Protocol, outcomes: Sequence | None) -> tuple[int, ...]:
    meas = protocol.measurements
    if outcomes is None:
        return protocol.default_outcomes()
    outcomes = list(outcomes)
    if len(outcomes) != len(meas):
        raise ProtocolError(f"expected {len(meas)} outcomes, got {len(outcomes)}")
    values = []
    for (_, m), o in zip(meas, outcomes):
        if hasattr(o, "qubit"):
            if o.qubit != m.qubit:
                raise ProtocolError(f"outcome {o} does not match a measurement of qubit {m.qubit}")
            o = o.value
        if o not in (0, 1):
            raise ProtocolError(f"outcome values must be 0 or 1, got {o!r}")
        values.append(int(o))
    return tuple(values)


def run_protocol(
    protocol: Protocol,
    initial: StateVector | None = None,
    outcomes: Sequence | None = None,
) -> FinalReport:
    """Apply every step in order, keeping the selected branch at each measurement."""
    state = protocol.initial_state() if initial is None else initial
    if state.width != protocol.width:
        raise ProtocolError(f"initial width {state.width} does not match protocol width {protocol.width}")
    selected = iter(normalise_outcomes(protocol, outcomes))
    norm0 = norm_sq(state)
    clicks: dict[str, float] = {}
    records = []
    for idx, step in enumerate(protocol.steps):
        if isinstance(step, Gate):
            state = apply_gate(state, step.gate)
        elif isinstance(step, Measurement):
            value = next(selected)
            kept = project(state, step.qubit, value)
            other = norm_sq(project(state, step.qubit, 1 - value)) / norm0 if norm0 else 0.0
            state = kept
            p_sel = norm_sq(kept) / norm0 if norm0 else 0.0
            clicks[step.detector] = clicks.get(step.detector, 0.0) + other
            records.append(MeasurementRecord(idx, step.detector, step.qubit, value, p_sel, other))
    prob = norm_sq(state) / norm0 if norm0 else 0.0
    return FinalReport(state, prob, clicks, tuple(records))


def run_unitary(protocol: Protocol, initial: StateVector | None = None) -> StateVector:
    """Apply only the gates; measurements and checkpoints are skipped."""
    state = protocol.initial_state() if initial is None else initial
    for step in protocol.steps:
        if isinstance(step, Gate):
            state = apply_gate(state, step.gate)
    return state


def block_matrix(steps: Sequence[ProtocolStep], width: int, outcomes: Sequence[int] | None = None) -> np.ndarray:
    """Dense matrix of a step block, measurements applied as projectors.

    Built by pushing each basis state through :func:`apply_gate` and
    :func:`project`, so it is the simulator's own linear map.
    """
    meas = [s for s in steps if isinstance(s, Measurement)]
    sel = [m.select for m in meas] if outcomes is None else list(outcomes)
    dim = 2**width
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[col] = 1
        state = StateVector.from_dense(basis, width)
        it = iter(sel)
        for step in steps:
            if isinstance(step, Gate):
                state = apply_gate(state, step.gate)
            elif isinstance(step, Measurement):
                state = project(state, step.qubit, next(it))
        out[:, col] = state.to_dense()
    return out


# --------------------------------------------------------------------------- text form


def _fmt_controls(controls) -> str:
    return ",".join(f"{q}:{v}" for q, v in controls) or "-"


def _fmt_bits(bits) -> str:
    return "".join(str(b) for b in bits)


def dump_protocol(protocol: Protocol) -> str:
    """Line-oriented text form, one step per line; see README for the grammar."""
    lines = [f"protocol {protocol.name} width={protocol.width}"]
    for key, val in protocol.params.items():
        lines.append(f"param {key}={val!r}")
    for step in protocol.steps:
        tag = f" tag={step.tag}" if step.tag else ""
        if isinstance(step, Gate):
            g = step.gate
            fields = [f"gate {g.kind}", f"targets={','.join(map(str, g.targets))}"]
            if g.kind == "rotation":
                fields.append(f"angle={g.angle!r}")
            if g.kind in ("oracle", "phase_oracle"):
                fields.append(f"answer={g.answer}")
            if g.kind == "linear":
                flat = [repr(complex(x)).replace(" ", "") for row in g.matrix for x in row]
                fields.append(f"matrix={';'.join(flat)}")
            fields.append(f"controls={_fmt_controls(g.controls)}")
            lines.append(" ".join(fields) + tag)
        elif isinstance(step, Checkpoint):
            alpha = "|".join(f"{_fmt_bits(bits)}:{'+'.join(syms)}" for bits, syms in step.alphabet)
            lines.append(
                f"checkpoint {step.id} qubits={','.join(map(str, step.qubits))} alphabet={alpha}{tag}"
            )
        else:
            lines.append(f"measure qubit={step.qubit} detector={step.detector} select={step.select}{tag}")
    return "\n".join(lines) + "\n"


def _kv(tokens: Sequence[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ProtocolError(f"malformed field {tok!r}")
        out[key] = val
    return out


def parse_protocol(text: str) -> Protocol:
    """Inverse of :func:`dump_protocol`."""
    import ast

    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("protocol "):
        raise ProtocolError("text must start with a 'protocol' line")
    head = lines[0].split()
    name, width = head[1], int(_kv(head[2:])["width"])
    params: dict[str, object] = {}
    steps: list[ProtocolStep] = []
    for line in lines[1:]:
        parts = line.split()
        kind = parts[0]
        if kind == "param":
            key, _, val = line[len("param "):].partition("=")
            params[key] = ast.literal_eval(val)
        elif kind == "gate":
            f = _kv(parts[2:])
            targets = tuple(int(x) for x in f["targets"].split(","))
            controls = () if f["controls"] == "-" else tuple(
                tuple(int(x) for x in c.split(":")) for c in f["controls"].split(",")
            )
            matrix = None
            if "matrix" in f:
                flat = [complex(x) for x in f["matrix"].split(";")]
                n = 2 ** len(targets)
                matrix = tuple(tuple(flat[r * n:(r + 1) * n]) for r in range(n))
            gate = GateSpec(parts[1], targets, angle=float(f.get("angle", 0.0)),
                            answer=int(f.get("answer", 0)), controls=controls, matrix=matrix)
            steps.append(Gate(gate, tag=f.get("tag", "")))
        elif kind == "checkpoint":
            f = _kv(parts[2:])
            alphabet = []
            for entry in f["alphabet"].split("|"):
                bits, _, syms = entry.partition(":")
                alphabet.append((tuple(int(b) for b in bits), tuple(syms.split("+"))))
            steps.append(Checkpoint(parts[1], tuple(int(x) for x in f["qubits"].split(",")),
                                    tuple(alphabet), tag=f.get("tag", "")))
        elif kind == "measure":
            f = _kv(parts[1:])
            steps.append(Measurement(int(f["qubit"]), f["detector"], int(f["select"]), tag=f.get("tag", "")))
        else:
            raise ProtocolError(f"unknown step kind {kind!r}")
    return Protocol(name, width, tuple(steps), params)
