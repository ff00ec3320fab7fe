"""Acceptance suite: one test per criterion, tolerances as stated.

Run under pytest for a PASS/FAIL summary section, or directly with
``python tests/test_acceptance.py`` for one line per criterion.
"""

import math
import random
import sys
import time

import numpy as np
import pytest

from cfcsim.amplitudes import StateVector, norm_sq, project
from cfcsim.histories import MJ_RELABEL, coarse_grain, enumerate_histories, history_tables, total_vector
from cfcsim.protocols import (
    ChainedZenoParams,
    EraserParams,
    Gate,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    build_zeno,
    run_protocol,
    run_unitary,
)
from cfcsim.stats import chained_probabilities, scan, zeno_probabilities
from cfcsim.verdicts import (
    AMBIGUOUS,
    COUNTERFACTUAL,
    NOT_COUNTERFACTUAL,
    dark_path_region,
    flux_verdict,
    verdict_matrix,
)

import oracle

DETAILS: dict[int, str] = {}

TABLE_I_LABELS = [
    "n(1)n(2)0_3n(1)f(2)0_30_2",
    "n(1)f(2)0_3n(1)f(2)0_30_2",
    "f(1)f(2)0_3f(1)f(2)0_30_2",
]


def note(k: int, text: str) -> None:
    DETAILS[k] = text


def one_cycle(N, Np, answer=0, reg="none"):
    return build_chained_zeno(ChainedZenoParams(N, Np, answer, reg, cycles=1))


def test_criterion_01_table_one():
    start = time.perf_counter()
    worst = 0.0
    for Np in (2, 4, 8):
        table = enumerate_histories(one_cycle(2, Np))
        assert [h.label.replace(" ", "") for h in table] == TABLE_I_LABELS
        th = math.pi / (2 * Np)
        expected = [StateVector(3, {"100": -math.sin(th) / 2}), StateVector(3, {"100": math.sin(th) / 2}),
                    StateVector(3, {"000": math.cos(th)})]
        for h, e in zip(table, expected):
            assert h.vector.allclose(e, atol=1e-9)
            worst = max(worst, max(abs(a) for a in (h.vector - e).terms.values()) if not (h.vector - e).is_zero() else 0)
    elapsed = time.perf_counter() - start
    note(1, f"3 rows for N'=2,4,8, max deviation {worst:.1e}, {elapsed:.3f} s")
    assert elapsed < 1.0


def test_criterion_02_table_two():
    for Np in (2, 4, 8):
        th = math.pi / (2 * Np)
        coarse = coarse_grain(enumerate_histories(one_cycle(2, Np)), MJ_RELABEL)
        assert [h.label.replace(" ", "") for h in coarse] == ["n0_3f0_30_2", "f0_3f0_30_2"]
        merged = StateVector(3, {"000": math.cos(th), "100": math.sin(th) / 2})
        assert coarse.rows[1].vector.allclose(merged, atol=1e-9)
        assert coarse.rows[0].vector.allclose(StateVector(3, {"100": -math.sin(th) / 2}), atol=1e-9)
    note(2, "rows 2 and 3 merge into cos θ'|000> + sin θ'|100>/2")


def test_criterion_03_table_three():
    for Np in (2, 4, 8):
        th = math.pi / (2 * Np)
        table = enumerate_histories(one_cycle(2, Np, reg="subroutine_incremented"))
        bases = [list(h.vector.terms) for h in table]
        assert bases == [[(1, 0, 0, 1)], [(1, 0, 0, 1)], [(0, 0, 0, 0)]]
        mags = [abs(h.amplitude) for h in table]
        assert np.allclose(mags, [math.sin(th) / 2, math.sin(th) / 2, math.cos(th)], atol=1e-9)
        total = total_vector(table)
        p_zero = norm_sq(project(total, 4, 0)) / norm_sq(total)
        assert abs(p_zero - 1) < 1e-12
    note(3, "|1001>,|1001>,|0000>; qubit 4 reads 0 with probability 1")


def test_criterion_04_dark_path_flux():
    dark, lit = {}, {}
    for N in (1, 2, 3):
        for Np in (1, 2, 4):
            proto = build_chained_zeno(ChainedZenoParams(N, Np, 0))
            rep = flux_verdict(proto, dark_path_region(proto))
            dark[N, Np] = max(m for _, m in rep.magnitudes)
            proto = build_chained_zeno(ChainedZenoParams(N, Np, 0, "computer_incremented"))
            rep = flux_verdict(proto, dark_path_region(proto))
            lit[N, Np] = max(m for _, m in rep.magnitudes)
    unlit = sorted(k for k, v in lit.items() if not v > 1e-3)
    note(4, f"dark path max {max(dark.values()):.1e}; computer-incremented exit <= 1e-3 at (N,N')={unlit}")
    assert all(v < 1e-12 for v in dark.values())
    assert not unlit


def test_criterion_05_verdict_disagreement():
    rep = verdict_matrix("chained", ChainedZenoParams(2, 2, 0))
    statuses = (rep.status("mj"), rep.status("proposed"), rep.flux.passed)
    note(5, f"MJ={statuses[0]}, proposed={statuses[1]}, flux pass={statuses[2]}")
    assert statuses == (NOT_COUNTERFACTUAL, COUNTERFACTUAL, True)


def test_criterion_06_fig8_ambiguity():
    rep = verdict_matrix("fig8", EraserParams(0.5, -0.5, 0.5))
    proposed = rep.verdicts[1]
    choices = {tuple(sorted(i + 1 for i in s)) for c in proposed.cancellation_choices for s in c}
    note(6, f"proposed={proposed.status}, choices={sorted(choices)}, flux pass={rep.flux.passed}")
    assert proposed.status == AMBIGUOUS
    assert all(len(c) == 1 for c in proposed.cancellation_choices)
    assert choices == {(1, 2), (2, 3)} and len(proposed.cancellation_choices) == 2
    assert rep.flux.passed


def test_criterion_07_simple_black_box():
    proto = build_simple_cfc(SimpleCfcParams(1))
    final = run_unitary(proto)
    assert final.allclose(StateVector(2, {"00": 0.5, "10": 0.5, "11": 1 / math.sqrt(2)}), atol=1e-12)
    p = run_protocol(proto).probability
    assert abs(p - 0.25) < 1e-12
    table = enumerate_histories(proto)
    assert len(table) == 1 and table.rows[0].path_symbols == {"f"}
    assert abs(abs(table.rows[0].amplitude) - 0.5) < 1e-12
    status = verdict_matrix("simple", SimpleCfcParams(1)).status("mj")
    note(7, f"P(switch 0)={p:.12g}, one row {table.labels[0]}, MJ={status}")
    assert status == COUNTERFACTUAL


def test_criterion_08_simple_exposed():
    params = SimpleCfcParams(0, expose_inner_workings=True)
    table = enumerate_histories(build_simple_cfc(params))
    assert len(table) == 2
    assert [h.path_symbols for h in table] == [{"n"}, {"u"}]
    assert sorted(abs(h.amplitude) for h in table) == pytest.approx([0.25, 0.75], abs=1e-9)
    ref = oracle.path_sum(oracle.simple_exposed_ops(0, 1), 2)
    assert np.allclose([h.amplitude for h in table], [a for *_, a in ref], atol=1e-9)
    status = verdict_matrix("simple", params).status("mj")
    note(8, f"rows {table.labels} = {[round(h.amplitude.real, 12) for h in table]}, MJ={status}")
    assert status == NOT_COUNTERFACTUAL


def test_criterion_09_random_guessing_limit():
    start = time.perf_counter()
    zeno = scan("zeno", 50)
    chained = scan("chained", 50, 50)
    elapsed = time.perf_counter() - start
    best = max(chained, key=lambda s: s.total)
    corner = next(s for s in chained if (s.N, s.N_prime) == (50, 50))
    note(9, f"zeno max {max(s.total for s in zeno):.4f}; chained max {best.total:.4f} at ({best.N},{best.N_prime}); "
            f"(50,50) p0={corner.p0:.4f} p1={corner.p1:.4f}; scan {elapsed:.1f} s")
    assert all(s.total <= 1 + 1e-9 for s in zeno)
    assert best.total > 1
    assert elapsed < 30
    assert corner.p0 > 0.9 and corner.p1 > 0.9


def _random_instance(rng: random.Random):
    kind = rng.choice(["chained", "chained4", "zeno", "simple", "eraser"])
    if kind == "chained":
        return build_chained_zeno(ChainedZenoParams(rng.randint(1, 3), rng.randint(1, 3), rng.randint(0, 1)))
    if kind == "chained4":
        reg = rng.choice(["computer_incremented", "subroutine_incremented"])
        return build_chained_zeno(ChainedZenoParams(rng.randint(1, 3), rng.randint(1, 2), rng.randint(0, 1), reg))
    if kind == "zeno":
        return build_zeno(rng.randint(1, 6), rng.randint(0, 1))
    if kind == "simple":
        return build_simple_cfc(SimpleCfcParams(rng.randint(0, 1), rng.random() < 0.5, rng.randint(0, 1)))
    a, g = rng.uniform(0, math.pi / 2), rng.uniform(0, math.pi / 2)
    recombine = rng.random() < 0.5
    if recombine:
        c1, c3 = math.sin(a) * math.sin(g) / 2, math.cos(a) * math.cos(g)
    else:
        c1, c3 = -math.sin(a) / 2, math.cos(a)
    return build_interferometer(EraserParams(c1, -c1, c3, "interferometer", recombine))


def test_criterion_10_decomposition_soundness():
    rng = random.Random(20240610)
    worst_vec, worst_sum = 0.0, 0.0
    for _ in range(100):
        proto = _random_instance(rng)
        assert all(s.gate.is_unitary() for s in proto.steps if isinstance(s, Gate))
        total = 0.0
        for m, table in history_tables(proto).items():
            branch = run_protocol(proto, outcomes=m).state
            diff = total_vector(table) - branch
            worst_vec = max(worst_vec, max((abs(a) for a in diff.terms.values()), default=0.0))
            total += norm_sq(branch)
        worst_sum = max(worst_sum, abs(total - 1))
    note(10, f"100 instances: max vector gap {worst_vec:.1e}, max probability-sum gap {worst_sum:.1e}")
    assert worst_vec <= 1e-12
    assert worst_sum <= 1e-9


def test_criterion_11_oracle_equivalence():
    worst = 0.0
    for N in range(1, 9):
        for Np in range(1, 9):
            s = chained_probabilities(N, Np)
            ref = oracle.chained_success(N, Np)
            worst = max(worst, abs(s.p0 - ref[0]), abs(s.p1 - ref[1]))
            for a in (0, 1):
                final, _ = oracle.chained_trace(N, Np, a)
                p = run_protocol(build_chained_zeno(ChainedZenoParams(N, Np, a))).probability
                worst = max(worst, abs(p - np.linalg.norm(final) ** 2))
        for a in (0, 1):
            p = run_protocol(build_zeno(N, a)).probability
            worst = max(worst, abs(p - np.linalg.norm(oracle.zeno_final(N, a)) ** 2))
        z = zeno_probabilities(N)
        worst = max(worst, abs(z.p1 - np.linalg.norm(oracle.proj(2, ((1, 0),)) @ oracle.zeno_final(N, 1)) ** 2))
    note(11, f"max deviation from dense oracle {worst:.1e} over N, N' <= 8")
    assert worst < 1e-9


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        k = int(name.split("_")[2])
        try:
            fn()
            status = "PASS"
        except AssertionError:
            status, failed = "FAIL", failed + 1
        print(f"criterion {k:2d}: {status}  {DETAILS.get(k, '')}")
    sys.exit(1 if failed else 0)
