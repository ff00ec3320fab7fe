"""Path-sum histories over protocol checkpoints.

A history is one branch through every checkpoint basis, ending in a single
basis state; its vector carries the product of the transition amplitudes.
Summing all histories for an outcome set reproduces the simulator's
post-selected branch exactly.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .amplitudes import StateVector, apply_gate, as_label, label_str, project
from .protocols import Checkpoint, Gate, Measurement, Protocol, ProtocolError, normalise_outcomes

EPS_CANCEL = 1e-9
MAX_SUBSET_ROWS = 20


@dataclass(frozen=True)
class PathToken:
    symbols: tuple[str, ...]
    checkpoint: str

    def render(self) -> str:
        return "".join(self.symbols)


@dataclass(frozen=True)
class OutcomeToken:
    value: int
    qubit: int

    def render(self) -> str:
        return f"{self.value}_{self.qubit}"


Token = Union[PathToken, OutcomeToken]


def render_label(tokens: Sequence[Token]) -> str:
    """``n(1)n(2)0_3 n(1)f(2)0_3 0_2``: a space follows each outcome token."""
    out = []
    for i, tok in enumerate(tokens):
        out.append(tok.render())
        if isinstance(tok, OutcomeToken) and i < len(tokens) - 1:
            out.append(" ")
    return "".join(out)


def render_outcomes(outcomes: Sequence[OutcomeToken]) -> str:
    return " ".join(o.render() for o in outcomes)


@dataclass(frozen=True)
class History:
    tokens: tuple[Token, ...]
    vector: StateVector

    @property
    def label(self) -> str:
        return render_label(self.tokens)

    @property
    def outcomes(self) -> tuple[OutcomeToken, ...]:
        return tuple(t for t in self.tokens if isinstance(t, OutcomeToken))

    @property
    def path_symbols(self) -> frozenset[str]:
        return frozenset(s for t in self.tokens if isinstance(t, PathToken) for s in t.symbols)

    @property
    def amplitude(self) -> complex:
        """Amplitude of a single-term history (zero vector gives 0)."""
        if len(self.vector) > 1:
            raise ValueError("history vector has several basis terms; use .vector")
        return next(iter(self.vector.terms.values()), 0j)


@dataclass(frozen=True)
class HistoryTable:
    outcomes: tuple[OutcomeToken, ...]
    rows: tuple[History, ...]
    width: int

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i: int) -> History:
        return self.rows[i]

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rows]

    def to_records(self) -> list[dict]:
        recs = []
        for i, row in enumerate(self.rows, start=1):
            for lab, amp in row.vector.terms.items():
                recs.append({"row": i, "label": row.label, "basis": label_str(lab),
                             "re": amp.real, "im": amp.imag})
        return recs

    def to_csv(self, extra: Mapping[tuple[int, str], Mapping[str, str]] | None = None) -> str:
        return table_to_csv(self, extra)

    def to_json(self, extra: Mapping[tuple[int, str], Mapping[str, str]] | None = None) -> str:
        return json.dumps(table_to_dict(self, extra), indent=2)


def total_vector(table: HistoryTable) -> StateVector:
    acc = StateVector.zero(table.width)
    for row in table.rows:
        acc = acc + row.vector
    return acc


# --------------------------------------------------------------------------- enumeration


def _expand(protocol: Protocol, outcomes: tuple[int, ...] | None):
    """Depth-first path expansion; ``outcomes=None`` branches on every measurement."""
    state = protocol.initial_state()
    paths: list[tuple[tuple[Token, ...], StateVector]] = [((), state)]
    sel = iter(outcomes) if outcomes is not None else None
    for step in protocol.steps:
        if isinstance(step, Gate):
            paths = [(toks, apply_gate(vec, step.gate)) for toks, vec in paths]
        elif isinstance(step, Checkpoint):
            nxt = []
            keys = sorted(itertools.product((0, 1), repeat=len(step.qubits)), reverse=True)
            for toks, vec in paths:
                for bits in keys:
                    part = vec
                    for q, b in zip(step.qubits, bits):
                        part = project(part, q, b)
                    if not part.is_zero():
                        nxt.append((toks + (PathToken(step.symbols_for(bits), step.id),), part))
            paths = nxt
        elif isinstance(step, Measurement):
            values = (next(sel),) if sel is not None else (1, 0)
            nxt = []
            for toks, vec in paths:
                for v in values:
                    part = project(vec, step.qubit, v)
                    if not part.is_zero():
                        nxt.append((toks + (OutcomeToken(v, step.qubit),), part))
            paths = nxt
    histories = []
    for toks, vec in paths:
        for lab, amp in vec.terms.items():
            histories.append(History(toks, StateVector(protocol.width, {lab: amp})))
    return histories


def enumerate_histories(protocol: Protocol, m: Sequence | None = None) -> HistoryTable:
    """All nonzero histories ending in the measurement outcomes ``m``.

    ``m`` is a sequence of bits or :class:`OutcomeToken` (one per measurement
    step); ``None`` uses each measurement's post-selected value.
    """
    values = normalise_outcomes(protocol, m)
    outs = tuple(OutcomeToken(v, meas.qubit) for v, (_, meas) in zip(values, protocol.measurements))
    return HistoryTable(outs, tuple(_expand(protocol, values)), protocol.width)


def history_tables(protocol: Protocol) -> dict[tuple[OutcomeToken, ...], HistoryTable]:
    """One table per reachable outcome set, in a single expansion."""
    groups: dict[tuple[OutcomeToken, ...], list[History]] = {}
    for h in _expand(protocol, None):
        groups.setdefault(h.outcomes, []).append(h)
    return {m: HistoryTable(m, tuple(rows), protocol.width) for m, rows in groups.items()}


def parse_outcomes(text: str) -> tuple[OutcomeToken, ...]:
    """``"0_3 0_3 0_2"`` -> outcome tokens."""
    toks = []
    for part in text.split():
        v, _, q = part.partition("_")
        toks.append(OutcomeToken(int(v), int(q)))
    return tuple(toks)


# --------------------------------------------------------------------------- coarse graining

MJ_RELABEL = {"n(1)n(2)": "n", "n(1)f(2)": "f", "f(1)f(2)": "f"}


def coarse_grain(table: HistoryTable, relabel: Mapping[str, str]) -> HistoryTable:
    """Relabel path tokens and merge rows whose coarse labels coincide.

    Merged vectors are summed and may hold several basis terms; rows that
    sum to zero are dropped.
    """
    merged: dict[tuple[Token, ...], StateVector] = {}
    for row in table.rows:
        coarse = []
        for tok in row.tokens:
            if isinstance(tok, PathToken):
                key = tok.render()
                if key not in relabel:
                    raise ValueError(f"relabel map has no entry for token {key!r}")
                coarse.append(PathToken((relabel[key],), tok.checkpoint))
            else:
                coarse.append(tok)
        key = tuple(coarse)
        merged[key] = merged[key] + row.vector if key in merged else row.vector
    rows = tuple(History(k, v) for k, v in merged.items() if not v.is_zero())
    return HistoryTable(table.outcomes, rows, table.width)


def identity_relabel(table: HistoryTable) -> dict[str, str]:
    return {t.render(): t.render() for r in table.rows for t in r.tokens if isinstance(t, PathToken)}


# --------------------------------------------------------------------------- cancellation


def find_cancelling_subsets(table: HistoryTable) -> list[frozenset[int]]:
    """Minimal nonempty row subsets (0-based) whose vectors sum to zero.

    Exhaustive over the power set. A subset counts as zero-sum when every
    component of its sum is below ``EPS_CANCEL`` times the largest component
    in the table.
    """
    n = len(table.rows)
    if n == 0:
        return []
    if n > MAX_SUBSET_ROWS:
        raise ValueError(f"exhaustive search limited to {MAX_SUBSET_ROWS} rows, table has {n}")
    labels = sorted({lab for r in table.rows for lab in r.vector.terms})
    mat = np.array([[r.vector.terms.get(lab, 0j) for lab in labels] for r in table.rows], dtype=complex)
    scale = np.abs(mat).max() if mat.size else 0.0
    if scale == 0:
        return []
    masks = np.arange(1, 2**n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    sums = bits @ mat
    zero = np.abs(sums).max(axis=1) < EPS_CANCEL * scale
    found: list[int] = []
    for mask in sorted(masks[zero].tolist(), key=lambda x: (bin(x).count("1"), x)):
        if not any(f & mask == f for f in found):
            found.append(mask)
    return [frozenset(i for i in range(n) if mask >> i & 1) for mask in found]


# --------------------------------------------------------------------------- serialisation

CSV_COLUMNS = ["row", "label", "basis", "re", "im"]


def _fmt(x: float) -> str:
    out = f"{x:.12g}"
    return "0" if out == "-0" else out


def table_to_dict(table: HistoryTable, extra=None) -> dict:
    rows = []
    for i, row in enumerate(table.rows, start=1):
        terms = []
        for lab, amp in row.vector.terms.items():
            term = {"basis": label_str(lab), "re": float(_fmt(amp.real)), "im": float(_fmt(amp.imag))}
            if extra and (i, label_str(lab)) in extra:
                term.update(extra[(i, label_str(lab))])
            terms.append(term)
        rows.append({"row": i, "label": row.label, "terms": terms})
    return {"outcomes": render_outcomes(table.outcomes), "width": table.width, "rows": rows}


def table_to_csv(table: HistoryTable, extra=None) -> str:
    extra_cols: list[str] = []
    if extra:
        for fields in extra.values():
            for k in fields:
                if k not in extra_cols:
                    extra_cols.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + extra_cols)
    for rec in table.to_records():
        line = [rec["row"], rec["label"], rec["basis"], _fmt(rec["re"]), _fmt(rec["im"])]
        fields = (extra or {}).get((rec["row"], rec["basis"]), {})
        line += [fields.get(k, "") for k in extra_cols]
        writer.writerow(line)
    return buf.getvalue()


def _parse_label(label: str) -> tuple[Token, ...]:
    """Best-effort inverse of :func:`render_label`; checkpoint ids are positional."""
    toks: list[Token] = []
    for group_no, group in enumerate(label.split(" ")):
        i = 0
        sym = ""
        while i < len(group):
            if group[i] in "01" and i + 1 < len(group) and group[i + 1] == "_":
                j = i + 2
                while j < len(group) and group[j].isdigit():
                    j += 1
                if sym:
                    toks.append(PathToken((sym,), f"p{len(toks)}"))
                    sym = ""
                toks.append(OutcomeToken(int(group[i]), int(group[i + 2:j])))
                i = j
            else:
                sym += group[i]
                i += 1
        if sym:
            toks.append(PathToken((sym,), f"p{len(toks)}"))
    return tuple(toks)


def table_from_csv(text: str) -> HistoryTable:
    """Rebuild a table from :func:`table_to_csv` output (extra columns ignored)."""
    reader = csv.DictReader(io.StringIO(text))
    rows: dict[int, tuple[str, dict]] = {}
    width = None
    for rec in reader:
        lab = as_label(rec["basis"])
        width = len(lab)
        label, terms = rows.setdefault(int(rec["row"]), (rec["label"], {}))
        terms[lab] = complex(float(rec["re"]), float(rec["im"]))
    if width is None:
        raise ValueError("empty table")
    hist = [History(_parse_label(label), StateVector(width, terms)) for _, (label, terms) in sorted(rows.items())]
    outs = hist[0].outcomes
    return HistoryTable(outs, tuple(hist), width)


def iter_outcome_sets(protocol: Protocol) -> Iterable[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=len(protocol.measurements))


__all__ = [
    "EPS_CANCEL", "History", "HistoryTable", "MJ_RELABEL", "OutcomeToken", "PathToken",
    "coarse_grain", "enumerate_histories", "find_cancelling_subsets", "history_tables",
    "identity_relabel", "iter_outcome_sets", "parse_outcomes", "render_label", "table_from_csv",
    "total_vector", "ProtocolError",
]
