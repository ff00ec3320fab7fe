"""Counterfactuality verdicts under three criteria.

* ``mj``: a single history, free of running tokens, and one associated output.
* ``proposed``: delete zero-sum groups of histories first, then require that no
  survivor runs the computer. Every maximal way of deleting disjoint groups is
  tried; disagreement between them yields ``ambiguous``.
* ``flux``: simulate step by step and require zero amplitude in a designated
  region (a dark port or the computer exit) of the post-selected branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .amplitudes import StateVector, apply_gate, matches, norm_sq, project
from .histories import (
    EPS_CANCEL,
    MJ_RELABEL,
    HistoryTable,
    coarse_grain,
    enumerate_histories,
    find_cancelling_subsets,
    render_outcomes,
)
from .protocols import (
    ChainedZenoParams,
    EraserParams,
    Gate,
    Measurement,
    Protocol,
    ProtocolError,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    network_angles,
    normalise_outcomes,
    run_protocol,
)

COUNTERFACTUAL = "counterfactual"
NOT_COUNTERFACTUAL = "not_counterfactual"
AMBIGUOUS = "ambiguous"

# running-token sets
CHAINED_FINE_RUNNING = frozenset({"n(2)"})
MJ_RUNNING = frozenset({"n"})


@dataclass(frozen=True)
class Verdict:
    """A criterion's status with its evidence; row indices are 0-based."""

    criterion: str
    status: str
    witnesses: tuple[int, ...] = ()
    survivors: tuple[int, ...] = ()
    cancellation_choices: tuple[tuple[frozenset[int], ...], ...] = ()
    computer_outputs: frozenset[int] | None = None

    def to_dict(self) -> dict:
        outs = None if self.computer_outputs is None else sorted(self.computer_outputs)
        return {
            "criterion": self.criterion,
            "status": self.status,
            "witnesses": [i + 1 for i in self.witnesses],
            "cancellation_choices": [[sorted(i + 1 for i in s) for s in choice]
                                     for choice in self.cancellation_choices],
            "computer_outputs": outs,
        }


def _runs(table: HistoryTable, i: int, running: frozenset[str]) -> bool:
    return bool(table.rows[i].path_symbols & running)


def _single_output(outputs: frozenset[int] | None) -> bool:
    return outputs is None or len(outputs) == 1


def mj_verdict(table: HistoryTable, running: Iterable[str], outputs: frozenset[int] | None = None) -> Verdict:
    """Counterfactual iff exactly one history, it never runs, and one output is possible.

    ``outputs=None`` means the output condition is not evaluated.
    """
    running = frozenset(running)
    rows = range(len(table.rows))
    runners = tuple(i for i in rows if _runs(table, i, running))
    ok = len(table.rows) == 1 and not runners and _single_output(outputs)
    if ok:
        return Verdict("mj", COUNTERFACTUAL, survivors=(0,), computer_outputs=outputs)
    witnesses = runners or (tuple(rows) if len(table.rows) > 1 else ())
    return Verdict("mj", NOT_COUNTERFACTUAL, witnesses=witnesses, computer_outputs=outputs)


def maximal_disjoint_choices(subsets: Sequence[frozenset[int]]) -> list[tuple[frozenset[int], ...]]:
    """All maximal families of pairwise disjoint subsets (the empty family if none)."""
    choices: list[tuple[frozenset[int], ...]] = []

    def extend(start: int, chosen: list[frozenset[int]], used: frozenset[int]) -> None:
        extended = False
        for k in range(start, len(subsets)):
            if not subsets[k] & used:
                extended = True
                extend(k + 1, chosen + [subsets[k]], used | subsets[k])
        if not extended:
            # maximal only if no earlier-skipped subset still fits
            if all(s & used for s in subsets if s not in chosen):
                choices.append(tuple(chosen))

    extend(0, [], frozenset())
    return choices


def hosten_verdict(table: HistoryTable, running: Iterable[str], outputs: frozenset[int] | None = None) -> Verdict:
    running = frozenset(running)
    subsets = find_cancelling_subsets(table)
    choices = maximal_disjoint_choices(subsets)
    outcomes = []
    for choice in choices:
        removed = frozenset().union(*choice)
        survivors = tuple(i for i in range(len(table.rows)) if i not in removed)
        runners = tuple(i for i in survivors if _runs(table, i, running))
        status = COUNTERFACTUAL if not runners and _single_output(outputs) else NOT_COUNTERFACTUAL
        outcomes.append((choice, survivors, runners, status))
    statuses = {o[3] for o in outcomes}
    if len(statuses) > 1:
        return Verdict("proposed", AMBIGUOUS, cancellation_choices=tuple(o[0] for o in outcomes),
                       computer_outputs=outputs)
    choice, survivors, runners, status = outcomes[0]
    return Verdict("proposed", status, witnesses=runners, survivors=survivors,
                   cancellation_choices=tuple(o[0] for o in outcomes), computer_outputs=outputs)


# --------------------------------------------------------------------------- flux


@dataclass(frozen=True)
class RegionCheck:
    """Inspect the state just before ``step`` runs (``len(steps)`` = final state)."""

    step: int
    conditions: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Region:
    name: str
    checks: tuple[RegionCheck, ...]


@dataclass(frozen=True)
class FluxReport:
    region: str
    magnitudes: tuple[tuple[int, float], ...]
    max_magnitude: float
    max_step: int | None
    threshold: float = EPS_CANCEL

    @property
    def passed(self) -> bool:
        return self.max_magnitude < self.threshold

    def to_verdict(self) -> Verdict:
        return Verdict("flux", COUNTERFACTUAL if self.passed else NOT_COUNTERFACTUAL)

    def to_dict(self) -> dict:
        return {"criterion": "flux", "region": self.region, "passed": self.passed,
                "max_magnitude": self.max_magnitude, "max_step": self.max_step,
                "magnitudes": [[s, m] for s, m in self.magnitudes]}


def region_magnitude(state: StateVector, conditions: Sequence[tuple[int, int]]) -> float:
    """Euclidean norm of the components matching every condition."""
    return math.sqrt(sum(abs(a) ** 2 for lab, a in state.terms.items() if matches(lab, conditions)))


def flux_verdict(protocol: Protocol, region: Region, initial: StateVector | None = None,
                 outcomes: Sequence | None = None) -> FluxReport:
    n = len(protocol.steps)
    by_step: dict[int, list[RegionCheck]] = {}
    for chk in region.checks:
        if not 0 <= chk.step <= n:
            raise ProtocolError(f"region {region.name!r} refers to step {chk.step} outside 0..{n}")
        by_step.setdefault(chk.step, []).append(chk)
    state = protocol.initial_state() if initial is None else initial
    if state.width != protocol.width:
        raise ProtocolError("initial width does not match protocol width")
    selected = iter(normalise_outcomes(protocol, outcomes))
    mags: list[tuple[int, float]] = []

    def inspect(idx: int) -> None:
        for chk in by_step.get(idx, ()):
            mags.append((idx, region_magnitude(state, chk.conditions)))

    for idx, step in enumerate(protocol.steps):
        inspect(idx)
        if isinstance(step, Gate):
            state = apply_gate(state, step.gate)
        elif isinstance(step, Measurement):
            state = project(state, step.qubit, next(selected))
    inspect(n)
    if not mags:
        return FluxReport(region.name, (), 0.0, None)
    best = max(mags, key=lambda x: x[1])
    return FluxReport(region.name, tuple(mags), best[1], best[0])


def _require(checks: list[RegionCheck], name: str) -> Region:
    if not checks:
        raise ProtocolError(f"protocol has no steps for region {name!r}")
    return Region(name, tuple(checks))


def dark_path_region(protocol: Protocol) -> Region:
    """Subroutine exit (qubit 1 on, qubit 2 off) just before each D_2 readout."""
    checks = [RegionCheck(i, ((1, 1), (2, 0))) for i, m in protocol.measurements if m.detector == "D_2"]
    return _require(checks, "subroutine-exit dark path")


def computer_exit_region(protocol: Protocol) -> Region:
    """Amplitude still on the computer path after each post-insertion readout."""
    checks = []
    steps = protocol.steps
    for i, step in enumerate(steps):
        if isinstance(step, Gate) and step.gate.kind == "oracle":
            j = next((k for k in range(i + 1, len(steps)) if isinstance(steps[k], Measurement)), None)
            if j is not None:
                checks.append(RegionCheck(j + 1, step.gate.controls))
    return _require(checks, "computer exit")


def dark_port_region(protocol: Protocol) -> Region:
    """Bottom output port of the inner interferometer, right after its last splitter."""
    checks = [RegionCheck(i + 1, ((1, 1), (2, 0))) for i, s in enumerate(protocol.steps)
              if isinstance(s, Gate) and s.tag == "BSb"]
    return _require(checks, "interferometer dark port")


def switch_port_region(protocol: Protocol) -> Region:
    """Register-flipped amplitude arriving at the selected switch readout."""
    checks = [RegionCheck(i, ((1, m.select), (2, 1))) for i, m in protocol.measurements if m.detector == "D_1"]
    return _require(checks, "computer output at switch detector")


def chained_flux_passes(protocol: Protocol, initial: StateVector | None = None) -> bool:
    """Either the subroutine exit is dark or nothing leaves the computer."""
    if flux_verdict(protocol, dark_path_region(protocol), initial).passed:
        return True
    return flux_verdict(protocol, computer_exit_region(protocol), initial).passed


# --------------------------------------------------------------------------- scenarios


def associated_outputs(build, params_for_answer, m: Sequence | None) -> frozenset[int]:
    """Answers for which the outcome set ``m`` has nonzero probability."""
    out = set()
    for a in (0, 1):
        proto = build(params_for_answer(a))
        if run_protocol(proto, outcomes=m).probability > 0.0:
            out.add(a)
    return frozenset(out)


@dataclass(frozen=True)
class VerdictReport:
    family: str
    params: Mapping[str, object]
    verdicts: tuple[Verdict, ...]
    fine: HistoryTable
    coarse: HistoryTable
    flux: FluxReport
    # answer -> (P(switch 0), P(switch 1)) in the post-selected branch
    answer_probabilities: Mapping[int, tuple[float, float]] = field(default_factory=dict)

    def status(self, criterion: str) -> str:
        return next(v.status for v in self.verdicts if v.criterion == criterion)

    def to_dict(self) -> dict:
        from .histories import table_to_dict

        return {
            "family": self.family,
            "params": {k: (str(v) if isinstance(v, complex) else v) for k, v in self.params.items()},
            "outcomes": render_outcomes(self.fine.outcomes),
            "verdicts": [v.to_dict() for v in self.verdicts],
            "flux": self.flux.to_dict(),
            "answer_probabilities": {str(k): list(v) for k, v in self.answer_probabilities.items()},
            "fine_table": table_to_dict(self.fine),
            "coarse_table": table_to_dict(self.coarse),
        }


def switch_distribution(protocol: Protocol) -> tuple[float, float]:
    """Joint probability of surviving every post-selection and reading qubit 1 as 0 or 1."""
    final = run_protocol(protocol).state
    return norm_sq(project(final, 1, 0)), norm_sq(project(final, 1, 1))


def interferometer_realisation(params: EraserParams) -> Protocol:
    """Real network for ``params`` when realisable, else the balanced one."""
    try:
        real = EraserParams(params.c1.real, -params.c1.real, params.c3.real, "interferometer", params.recombine)
        network_angles(real)
    except ProtocolError:
        real = EraserParams.balanced(params.recombine)
    return build_interferometer(real)


def verdict_matrix(family: str, params) -> VerdictReport:
    """Run all three criteria on one scenario.

    Families: ``"chained"`` (:class:`ChainedZenoParams`; histories cover the
    first routine cycle, flux the whole protocol), ``"simple"``
    (:class:`SimpleCfcParams`) and ``"fig8"`` (:class:`EraserParams`).
    """
    if family == "chained":
        one_cycle = ChainedZenoParams(params.N, params.N_prime, params.answer, params.fourth_register, cycles=1)
        fine = enumerate_histories(build_chained_zeno(one_cycle))
        coarse = coarse_grain(fine, MJ_RELABEL)
        outputs = None
        full = build_chained_zeno(params)
        flux = flux_verdict(full, dark_path_region(full))
        probs = {a: switch_distribution(build_chained_zeno(ChainedZenoParams(
            params.N, params.N_prime, a, params.fourth_register, params.cycles))) for a in (0, 1)}
        fine_running, coarse_running = CHAINED_FINE_RUNNING, MJ_RUNNING
    elif family == "simple":
        proto = build_simple_cfc(params)
        fine = enumerate_histories(proto)
        coarse = fine
        m = proto.default_outcomes()
        outputs = associated_outputs(
            build_simple_cfc,
            lambda a: SimpleCfcParams(a, params.expose_inner_workings, params.outcome), m)
        flux = flux_verdict(proto, switch_port_region(proto))
        probs = {a: switch_distribution(build_simple_cfc(SimpleCfcParams(
            a, params.expose_inner_workings, params.outcome))) for a in (0, 1)}
        fine_running = coarse_running = MJ_RUNNING
    elif family == "fig8":
        fine = enumerate_histories(build_interferometer(params))
        coarse = fine
        outputs = None
        real = interferometer_realisation(params)
        flux = flux_verdict(real, dark_port_region(real))
        probs = {}
        fine_running = coarse_running = MJ_RUNNING
    else:
        raise ValueError(f"unknown protocol family {family!r}")
    verdicts = (
        mj_verdict(coarse, coarse_running, outputs),
        hosten_verdict(fine, fine_running, outputs),
        flux.to_verdict(),
    )
    meta = dict(params.__dict__)
    return VerdictReport(family, meta, verdicts, fine, coarse, flux, probs)


__all__ = [
    "AMBIGUOUS", "COUNTERFACTUAL", "NOT_COUNTERFACTUAL", "FluxReport", "Region", "RegionCheck",
    "Verdict", "VerdictReport", "associated_outputs", "chained_flux_passes", "computer_exit_region",
    "dark_path_region", "dark_port_region", "flux_verdict", "hosten_verdict", "maximal_disjoint_choices",
    "mj_verdict", "switch_distribution", "switch_port_region", "verdict_matrix",
]
