"""Command-line front end: ``cfcsim <command> [--format csv|json] [--dump-protocol]``.

Exit status is 0 on success, 1 when an internal invariant check fails and 2
on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from .histories import EPS_CANCEL, find_cancelling_subsets
from .protocols import (
    FOURTH_REGISTER_MODES,
    ChainedZenoParams,
    EraserParams,
    ProtocolError,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    build_zeno,
    dump_protocol,
)
from .stats import chained_probabilities, chained_run, scan, zeno_probabilities
from .tables import decomposition_error, emit_fig8, emit_table
from .verdicts import verdict_matrix

DECOMPOSITION_TOL = 1e-12
_TABLE_COMMANDS = {"table1": "I", "table2": "II", "table3": "III", "table4a": "IVa", "table4b": "IVb"}


class InvariantError(RuntimeError):
    pass


def _fmt(x: float) -> str:
    out = f"{x:.12g}"
    return "0" if out == "-0" else out


def _rows_csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _check_decomposition(protocol, table) -> None:
    err = decomposition_error(protocol, table)
    if err > DECOMPOSITION_TOL:
        raise InvariantError(f"history decomposition off by {err:.3g} for {protocol.name}")


# --------------------------------------------------------------------------- commands


def _cmd_table(args) -> str:
    name = _TABLE_COMMANDS[args.command]
    emitted = emit_table(name, args.N, args.Nprime)
    if args.dump_protocol:
        return dump_protocol(emitted.protocol)
    _check_decomposition(emitted.protocol, emitted.table)
    return emitted.to_json() + "\n" if args.format == "json" else emitted.to_csv()


def _cmd_fig8(args) -> str:
    report = emit_fig8(args.c1, args.c2, args.c3)
    if args.dump_protocol:
        return dump_protocol(report.protocol) + "\n" + dump_protocol(report.flux_protocol)
    _check_decomposition(report.protocol, report.table)
    return report.to_json() + "\n" if args.format == "json" else report.to_csv()


_STATS_HEADER = ["scheme", "N", "N_prime", "p0", "p1", "p0_plus_p1"]


def _stats_row(s) -> list:
    return [s.scheme, s.N, "" if s.N_prime is None else s.N_prime, s.p0, s.p1, s.total]


def _check_stats(rows) -> None:
    for s in rows:
        if not (-1e-12 <= s.p0 <= 1 + 1e-9 and -1e-12 <= s.p1 <= 1 + 1e-9):
            raise InvariantError(f"probabilities out of range at N={s.N}, N'={s.N_prime}")
        if s.scheme == "zeno" and s.total > 1 + 1e-9:
            raise InvariantError(f"plain Zeno scheme beats random guessing at N={s.N}")


def _emit_stats(rows, fmt: str) -> str:
    _check_stats(rows)
    if fmt == "json":
        return json.dumps([s.to_dict() for s in rows], indent=2) + "\n"
    return _rows_csv(_STATS_HEADER, [_stats_row(s) for s in rows])


def _cmd_zeno(args) -> str:
    if args.dump_protocol:
        return "\n".join(dump_protocol(build_zeno(args.N, a)) for a in (0, 1))
    return _emit_stats([zeno_probabilities(args.N)], args.format)


def _cmd_chained(args) -> str:
    params = ChainedZenoParams(args.N, args.Nprime, args.answer)
    if args.dump_protocol:
        return dump_protocol(build_chained_zeno(params))
    stats = chained_probabilities(args.N, args.Nprime)
    _check_stats([stats])
    final, dark, exit_ = chained_run(params)
    p_switch = [float(sum(abs(final[i]) ** 2 for i in range(8) if (i >> 2) & 1 == v)) for v in (0, 1)]
    record = {
        "N": args.N, "N_prime": args.Nprime, "answer": args.answer,
        "p_switch0": p_switch[0], "p_switch1": p_switch[1],
        "dark_path_max": dark, "computer_exit_max": exit_,
        "flux": "pass" if min(dark, exit_) < EPS_CANCEL else "fail",
        "p0": stats.p0, "p1": stats.p1, "p0_plus_p1": stats.total,
    }
    if args.format == "json":
        return json.dumps(record, indent=2) + "\n"
    return _rows_csv(list(record), [list(record.values())])


def _cmd_scan(args) -> str:
    if args.dump_protocol:
        raise ProtocolError("--dump-protocol is not available for scans")
    return _emit_stats(scan(args.scheme, args.max_N, args.max_Nprime), args.format)


def _verdict_scenario(args):
    if args.protocol == "chained":
        params = ChainedZenoParams(args.N, args.Nprime, args.answer, args.fourth_register)
        return params, build_chained_zeno(params)
    if args.protocol == "simple":
        params = SimpleCfcParams(args.answer, args.expose, args.switch_outcome)
        return params, build_simple_cfc(params)
    params = EraserParams(args.c1, args.c2, args.c3)
    return params, build_interferometer(params)


def _cmd_verdicts(args) -> str:
    params, protocol = _verdict_scenario(args)
    if args.dump_protocol:
        return dump_protocol(protocol)
    report = verdict_matrix(args.protocol, params)
    if args.protocol == "chained":
        one = ChainedZenoParams(params.N, params.N_prime, params.answer, params.fourth_register, cycles=1)
        _check_decomposition(build_chained_zeno(one), report.fine)
    else:
        _check_decomposition(protocol, report.fine)
    if args.format == "json":
        return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    rows = []
    for v in report.verdicts:
        d = v.to_dict()
        choices = ";".join("+".join("{" + ",".join(map(str, s)) + "}" for s in c) or "none"
                           for c in d["cancellation_choices"])
        outs = "" if d["computer_outputs"] is None else ",".join(map(str, d["computer_outputs"]))
        rows.append([d["criterion"], d["status"], ",".join(map(str, d["witnesses"])), choices, outs])
    return _rows_csv(["criterion", "status", "witnesses", "cancellation_choices", "computer_outputs"], rows)


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--dump-protocol", action="store_true",
                        help="print the protocol's step list instead of running it")

    parser = argparse.ArgumentParser(prog="cfcsim", description="Counterfactual computation protocol simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    for cmd, name in _TABLE_COMMANDS.items():
        p = sub.add_parser(cmd, parents=[common], help=f"history table {name}")
        p.add_argument("--N", type=int, default=2, help="subroutine cycles (tables 1-3)")
        p.add_argument("--Nprime", type=int, default=2, help="routine cycles (tables 1-3)")
        p.set_defaults(func=_cmd_table)

    p = sub.add_parser("fig8", parents=[common], help="eraser experiment histories and verdicts")
    p.add_argument("--c1", type=_complex, default=0.5)
    p.add_argument("--c2", type=_complex, default=-0.5)
    p.add_argument("--c3", type=_complex, default=0.5)
    p.set_defaults(func=_cmd_fig8)

    p = sub.add_parser("zeno", parents=[common], help="plain Zeno success probabilities")
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(func=_cmd_zeno)

    p = sub.add_parser("chained", parents=[common], help="chained-Zeno run and success probabilities")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--Nprime", type=int, required=True)
    p.add_argument("--answer", type=int, choices=(0, 1), default=0)
    p.set_defaults(func=_cmd_chained)

    p = sub.add_parser("scan", parents=[common], help="probability scan over cycle counts")
    p.add_argument("--scheme", choices=("zeno", "chained"), required=True)
    p.add_argument("--max-N", dest="max_N", type=int, required=True)
    p.add_argument("--max-Nprime", dest="max_Nprime", type=int, default=1)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("verdicts", parents=[common], help="all three counterfactuality verdicts")
    p.add_argument("--protocol", choices=("chained", "simple", "fig8"), required=True)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--Nprime", type=int, default=2)
    p.add_argument("--answer", type=int, choices=(0, 1), default=None,
                   help="computer answer (default 0 for chained, 1 for simple)")
    p.add_argument("--fourth-register", dest="fourth_register", choices=FOURTH_REGISTER_MODES, default="none")
    p.add_argument("--expose", action="store_true", help="simple CFC: analyse the computer's inner workings")
    p.add_argument("--switch-outcome", dest="switch_outcome", type=int, choices=(0, 1), default=None)
    p.add_argument("--c1", type=_complex, default=0.5)
    p.add_argument("--c2", type=_complex, default=-0.5)
    p.add_argument("--c3", type=_complex, default=0.5)
    p.set_defaults(func=_cmd_verdicts)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "answer", 0) is None:
        args.answer = 1 if args.protocol == "simple" else 0
    try:
        out = args.func(args)
    except InvariantError as exc:
        print(f"cfcsim: invariant check failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"cfcsim: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
