"""Named history tables and the eraser report, ready for printing.

Chained-Zeno tables cover the first routine cycle. Their amplitudes are
annotated symbolically by re-running the same cycle at other routine counts
and fitting ``a sin(θ') + b cos(θ')``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .amplitudes import label_str, norm_sq
from .histories import (
    MJ_RELABEL,
    HistoryTable,
    coarse_grain,
    enumerate_histories,
    find_cancelling_subsets,
    table_to_csv,
    table_to_dict,
    total_vector,
)
from .protocols import (
    ChainedZenoParams,
    EraserParams,
    Protocol,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    run_protocol,
)
from .verdicts import (
    MJ_RUNNING,
    FluxReport,
    Verdict,
    dark_port_region,
    flux_verdict,
    hosten_verdict,
    interferometer_realisation,
)

TABLE_NAMES = ("I", "II", "III", "IVa", "IVb")
_PROBE_N_PRIME = (3, 5, 7)


def _ratio(x: float, max_den: int = 8) -> tuple[int, str] | None:
    """Split ``x`` into a signed numerator and a denominator text (``""``, ``"4"``, ``"√2"``)."""
    for scale, root in ((1.0, False), (1 / math.sqrt(2), True)):
        frac = Fraction(x / scale).limit_denominator(max_den)
        if frac != 0 and abs(float(frac) * scale - x) < 1e-9:
            q = frac.denominator
            if root:
                den = "√2" if q == 1 else f"({q}√2)"
            else:
                den = "" if q == 1 else str(q)
            return frac.numerator, den
    return None


def format_coefficient(x: float) -> str | None:
    """``0.75 -> "3/4"``, ``-0.7071.. -> "-1/√2"``; None if no short form fits."""
    if abs(x) < 1e-12:
        return "0"
    r = _ratio(x)
    if r is None:
        return None
    num, den = r
    return f"{num}/{den}" if den else str(num)


def _scaled(coeff: float, func: str) -> str | None:
    r = _ratio(coeff)
    if r is None:
        return None
    num, den = r
    sign = "-" if num < 0 else ""
    mult = "" if abs(num) == 1 else f"{abs(num)}*"
    return f"{sign}{mult}{func}" + (f"/{den}" if den else "")


def symbolic(a: float, b: float) -> str | None:
    """Render ``a sin(θ') + b cos(θ')`` compactly."""
    parts = []
    for coeff, func in ((a, "sin(θ')"), (b, "cos(θ')")):
        if abs(coeff) < 1e-9:
            continue
        text = _scaled(coeff, func)
        if text is None:
            return None
        parts.append(text)
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


@dataclass(frozen=True)
class EmittedTable:
    name: str
    table: HistoryTable
    protocol: Protocol
    annotations: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return table_to_csv(self.table, self.annotations)

    def to_json(self) -> str:
        data = table_to_dict(self.table, self.annotations)
        data["table"] = self.name
        return json.dumps(data, indent=2, ensure_ascii=False)


def _chained_table(name: str, params: ChainedZenoParams) -> HistoryTable:
    table = enumerate_histories(build_chained_zeno(params))
    return coarse_grain(table, MJ_RELABEL) if name == "II" else table


def _theta_annotations(name: str, params: ChainedZenoParams, table: HistoryTable) -> dict:
    """Fit each (row, basis) amplitude against sin/cos of the routine angle."""
    probes = []
    for n_prime in _PROBE_N_PRIME:
        p = ChainedZenoParams(params.N, n_prime, params.answer, params.fourth_register, cycles=1)
        probes.append((p.theta_prime, _chained_table(name, p)))
    if any(t.labels != table.labels for _, t in probes):
        return {}
    out = {}
    for i, row in enumerate(table.rows, start=1):
        for lab, amp in row.vector.terms.items():
            if abs(amp.imag) > 1e-12:
                continue
            xs = np.array([[math.sin(th), math.cos(th)] for th, _ in probes])
            ys = np.array([t.rows[i - 1].vector.terms.get(lab, 0j).real for _, t in probes])
            coef, *_ = np.linalg.lstsq(xs, ys, rcond=None)
            if np.max(np.abs(xs @ coef - ys)) > 1e-9:
                continue
            a, b = (0.0 if abs(c) < 1e-12 else float(c) for c in coef)
            text = symbolic(a, b)
            if text is not None:
                out[(i, label_str(lab))] = {"symbolic": text}
    return out


def _constant_annotations(table: HistoryTable) -> dict:
    out = {}
    for i, row in enumerate(table.rows, start=1):
        for lab, amp in row.vector.terms.items():
            if abs(amp.imag) < 1e-12:
                text = format_coefficient(amp.real)
                if text is not None:
                    out[(i, label_str(lab))] = {"symbolic": text}
    return out


def emit_table(name: str, N: int = 2, N_prime: int = 2) -> EmittedTable:
    """Build one of the named tables.

    ``I``/``II``: fine and coarse chained-Zeno tables for answer 0.
    ``III``: the same with the subroutine-incremented fourth register.
    ``IVa``: simple CFC, answer 1, black-box computer, switch reads 0.
    ``IVb``: simple CFC, answer 0, exposed computer, switch reads 1.
    """
    if name in ("I", "II", "III"):
        reg = "subroutine_incremented" if name == "III" else "none"
        params = ChainedZenoParams(N, N_prime, 0, reg, cycles=1)
        table = _chained_table(name, params)
        return EmittedTable(name, table, build_chained_zeno(params), _theta_annotations(name, params, table))
    if name in ("IVa", "IVb"):
        params = SimpleCfcParams(1) if name == "IVa" else SimpleCfcParams(0, expose_inner_workings=True)
        proto = build_simple_cfc(params)
        table = enumerate_histories(proto)
        return EmittedTable(name, table, proto, _constant_annotations(table))
    raise ValueError(f"unknown table {name!r}; expected one of {', '.join(TABLE_NAMES)}")


def decomposition_error(protocol: Protocol, table: HistoryTable) -> float:
    """Largest componentwise gap between the summed histories and the simulator branch."""
    branch = run_protocol(protocol, outcomes=[o.value for o in table.outcomes]).state
    diff = total_vector(table) - branch
    return max((abs(a) for a in diff.terms.values()), default=0.0)


@dataclass(frozen=True)
class Fig8Report:
    params: EraserParams
    table: HistoryTable
    cancelling_subsets: list
    verdict: Verdict
    flux: FluxReport
    flux_protocol: Protocol
    protocol: Protocol

    def to_dict(self) -> dict:
        return {
            "c1": str(self.params.c1), "c2": str(self.params.c2), "c3": str(self.params.c3),
            "histories": table_to_dict(self.table),
            "cancelling_subsets": [sorted(i + 1 for i in s) for s in self.cancelling_subsets],
            "proposed": self.verdict.to_dict(),
            "flux": self.flux.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["criterion", "status", "detail"])
        subsets = ";".join("{" + ",".join(str(i + 1) for i in sorted(s)) + "}" for s in self.cancelling_subsets)
        writer.writerow(["cancelling_subsets", "", subsets or "none"])
        choices = ";".join("+".join("{" + ",".join(str(i + 1) for i in sorted(s)) + "}" for s in c) or "none"
                           for c in self.verdict.cancellation_choices)
        writer.writerow(["proposed", self.verdict.status, choices])
        writer.writerow(["flux", "pass" if self.flux.passed else "fail", f"{self.flux.max_magnitude:.12g}"])
        return table_to_csv(self.table) + "\n" + buf.getvalue()


def emit_fig8(c1: complex, c2: complex, c3: complex) -> Fig8Report:
    """Histories to detector S, their cancelling groups, and both verdicts.

    The flux check runs on the real beamsplitter network with the same
    ``c1`` and ``c3`` when one exists, otherwise on the balanced network.
    """
    params = EraserParams(c1, c2, c3)
    proto = build_interferometer(params)
    table = enumerate_histories(proto)
    real = interferometer_realisation(params)
    flux = flux_verdict(real, dark_port_region(real))
    return Fig8Report(params, table, find_cancelling_subsets(table),
                      hosten_verdict(table, MJ_RUNNING), flux, real, proto)


def selected_probability(table: HistoryTable) -> float:
    return norm_sq(total_vector(table))


__all__ = [
    "EmittedTable", "Fig8Report", "TABLE_NAMES", "decomposition_error", "emit_fig8", "emit_table",
    "format_coefficient", "symbolic",
]
