import cmath

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfcsim.amplitudes import StateVector
from cfcsim.histories import (
    MJ_RELABEL,
    History,
    HistoryTable,
    OutcomeToken,
    PathToken,
    coarse_grain,
    enumerate_histories,
)
from cfcsim.protocols import (
    ChainedZenoParams,
    EraserParams,
    ProtocolError,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    build_zeno,
)
from cfcsim.verdicts import (
    AMBIGUOUS,
    CHAINED_FINE_RUNNING,
    COUNTERFACTUAL,
    MJ_RUNNING,
    NOT_COUNTERFACTUAL,
    Region,
    RegionCheck,
    associated_outputs,
    computer_exit_region,
    dark_path_region,
    dark_port_region,
    flux_verdict,
    hosten_verdict,
    interferometer_realisation,
    maximal_disjoint_choices,
    mj_verdict,
    verdict_matrix,
)


def fine(N=2, Np=2, answer=0, reg="none"):
    return enumerate_histories(build_chained_zeno(ChainedZenoParams(N, Np, answer, reg, cycles=1)))


def toy_table(symbols_and_amps):
    out = OutcomeToken(0, 1)
    hist = tuple(History((PathToken((s,), "c"), out), StateVector(1, {(0,): a})) for s, a in symbols_and_amps)
    return HistoryTable((out,), hist, 1)


class TestMj:
    def test_table_two_names_row_a(self):
        v = mj_verdict(coarse_grain(fine(), MJ_RELABEL), MJ_RUNNING)
        assert v.status == NOT_COUNTERFACTUAL
        assert v.witnesses == (0,)

    def test_table_four_a(self):
        table = enumerate_histories(build_simple_cfc(SimpleCfcParams(1)))
        assert mj_verdict(table, MJ_RUNNING, frozenset({1})).status == COUNTERFACTUAL

    def test_table_four_b(self):
        table = enumerate_histories(build_simple_cfc(SimpleCfcParams(0, expose_inner_workings=True)))
        v = mj_verdict(table, MJ_RUNNING)
        assert v.status == NOT_COUNTERFACTUAL
        assert v.witnesses == (0,)

    def test_two_outputs_block(self):
        assert mj_verdict(toy_table([("f", 1)]), MJ_RUNNING, frozenset({0, 1})).status == NOT_COUNTERFACTUAL

    @given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=10))
    def test_single_off_row_always_counterfactual(self, amp):
        assert mj_verdict(toy_table([("f", amp)]), MJ_RUNNING).status == COUNTERFACTUAL


class TestHosten:
    def test_table_one(self):
        v = hosten_verdict(fine(), CHAINED_FINE_RUNNING)
        assert v.status == COUNTERFACTUAL
        assert v.survivors == (2,)
        assert v.cancellation_choices == ((frozenset({0, 1}),),)

    def test_fig8_ambiguous(self):
        table = enumerate_histories(build_interferometer(EraserParams(0.5, -0.5, 0.5)))
        v = hosten_verdict(table, MJ_RUNNING)
        assert v.status == AMBIGUOUS
        assert set(v.cancellation_choices) == {(frozenset({0, 1}),), (frozenset({1, 2}),)}
        assert v.to_dict()["cancellation_choices"] == [[[1, 2]], [[2, 3]]]

    def test_fig8_unique(self):
        table = enumerate_histories(build_interferometer(EraserParams(0.5, -0.5, 0.6)))
        assert hosten_verdict(table, MJ_RUNNING).status == COUNTERFACTUAL

    def test_agreeing_choices_are_not_ambiguous(self):
        v = hosten_verdict(toy_table([("f", 1), ("f", -1), ("f", 1)]), MJ_RUNNING)
        assert v.status == COUNTERFACTUAL
        assert len(v.cancellation_choices) == 2

    @given(st.sampled_from(["n", "f"]), st.complex_numbers(min_magnitude=1e-3, max_magnitude=10))
    def test_reduces_to_mj_for_one_row(self, sym, amp):
        table = toy_table([(sym, amp)])
        assert hosten_verdict(table, MJ_RUNNING).status == mj_verdict(table, MJ_RUNNING).status

    def test_maximal_choices(self):
        a, b, c = frozenset({0, 1}), frozenset({1, 2}), frozenset({3, 4})
        got = maximal_disjoint_choices([a, b, c])
        assert sorted(map(set, got), key=len) == [{a, c}, {b, c}]
        assert maximal_disjoint_choices([]) == [()]


class TestFlux:
    @pytest.mark.parametrize("N", [2, 3])
    @pytest.mark.parametrize("Np", [1, 2, 4])
    def test_dark_path_is_dark(self, N, Np):
        proto = build_chained_zeno(ChainedZenoParams(N, Np, 0))
        rep = flux_verdict(proto, dark_path_region(proto))
        assert rep.passed and rep.max_magnitude < 1e-12
        assert len(rep.magnitudes) == Np

    def test_computer_increment_lights_the_exit(self):
        proto = build_chained_zeno(ChainedZenoParams(2, 2, 0, "computer_incremented"))
        rep = flux_verdict(proto, dark_path_region(proto))
        assert not rep.passed
        # first cycle: sin(theta') / sqrt 2 with theta' = pi / 4
        assert rep.magnitudes[0][1] == pytest.approx(0.5, abs=1e-12)

    def test_answer_one_keeps_computer_dark(self):
        proto = build_chained_zeno(ChainedZenoParams(3, 3, 1))
        assert flux_verdict(proto, computer_exit_region(proto)).passed
        assert not flux_verdict(proto, dark_path_region(proto)).passed

    def test_fig1_dark_port(self):
        proto = build_interferometer(EraserParams.balanced(recombine=False))
        assert flux_verdict(proto, dark_port_region(proto)).passed

    @given(st.floats(0, 6.28))
    def test_global_phase_invariance(self, phi):
        proto = build_chained_zeno(ChainedZenoParams(2, 3, 0, "computer_incremented"))
        region = dark_path_region(proto)
        base = flux_verdict(proto, region)
        shifted = flux_verdict(proto, region, initial=proto.initial_state().scale(cmath.exp(1j * phi)))
        assert shifted.max_magnitude == pytest.approx(base.max_magnitude, abs=1e-12)

    def test_invalid_region(self):
        proto = build_zeno(2, 1)
        with pytest.raises(ProtocolError):
            flux_verdict(proto, Region("bad", (RegionCheck(99, ((1, 1),)),)))
        with pytest.raises(ProtocolError):
            dark_port_region(proto)


class TestScenarios:
    def test_chained_disagreement(self):
        rep = verdict_matrix("chained", ChainedZenoParams(2, 2, 0))
        assert rep.status("mj") == NOT_COUNTERFACTUAL
        assert rep.status("proposed") == COUNTERFACTUAL
        assert rep.status("flux") == COUNTERFACTUAL

    def test_simple_black_box_all_agree(self):
        rep = verdict_matrix("simple", SimpleCfcParams(1))
        assert {v.status for v in rep.verdicts} == {COUNTERFACTUAL}
        assert rep.verdicts[0].computer_outputs == frozenset({1})

    def test_simple_exposed_contradiction(self):
        rep = verdict_matrix("simple", SimpleCfcParams(0, expose_inner_workings=True))
        assert rep.status("mj") == NOT_COUNTERFACTUAL

    def test_fig8(self):
        rep = verdict_matrix("fig8", EraserParams(0.5, -0.5, 0.5))
        assert rep.status("proposed") == AMBIGUOUS
        assert rep.flux.passed

    def test_computer_increment_loses_dark_port(self):
        rep = verdict_matrix("chained", ChainedZenoParams(2, 2, 0, "computer_incremented"))
        assert not rep.flux.passed
        # reported, not asserted against any quoted figure
        assert set(rep.answer_probabilities) == {0, 1}

    def test_outputs(self):
        build = build_simple_cfc
        assert associated_outputs(build, lambda a: SimpleCfcParams(a, switch_outcome=0), None) == frozenset({1})
        assert associated_outputs(build, lambda a: SimpleCfcParams(a, switch_outcome=1), None) == frozenset({0, 1})

    def test_realisation_falls_back(self):
        real = interferometer_realisation(EraserParams(0.5, -0.5, 0.5))
        assert real.name == "eraser"

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            verdict_matrix("bomb", None)

    def test_json_shape(self):
        d = verdict_matrix("fig8", EraserParams(0.5, -0.5, 0.5)).verdicts[1].to_dict()
        assert set(d) == {"criterion", "status", "witnesses", "cancellation_choices", "computer_outputs"}
