"""Command-line front end.

Commands:

    run              one protocol execution, transcript to a file
    fidelity-grid    closed-form/oracle fidelity surface as CSV
    verify-formulas  sweep every formula family against the oracle
    attack           seeded attack campaign, statistics to a file
    efficiency       resource ledgers and eta per protocol

Exit codes: 0 completed, 1 usage or config error, 2 protocol abort,
3 formula verification failure. Any command re-run with the same
config and seed writes byte-identical output.
"""

from __future__ import annotations

import argparse
import sys

from .attacks import AttackStrategy, run_with_attack
from .bits import BitString
from .efficiency import efficiency_osb, efficiency_sqpc
from .noise import (
    FORMULA_TOL,
    NoiseKind,
    Trips,
    sweep_scenarios,
    verify_all_formulas,
)
from .osb import OsbConfig, run_osb
from .sqpc import SqpcConfig, run_sqpc
from .transcript import Verdict, fmt_positions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_FORMULA = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(message)


def parse_noise(text: str):
    """'bf:0.25' -> (NoiseKind.BF, 0.25); 'none' -> None."""
    if text.lower() == "none":
        return None
    kind_token, sep, p_token = text.partition(":")
    if not sep:
        raise UsageError(f"noise spec {text!r} must look like kind:p")
    kind = NoiseKind.from_token(kind_token)
    try:
        p = float(p_token)
    except ValueError:
        raise UsageError(f"bad probability in noise spec {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"noise probability {p} outside [0, 1]")
    return kind, p


def load_config_file(path: str) -> dict[str, str]:
    """key=value lines; '#' starts a comment; errors carry line numbers."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        values[key.strip()] = value.strip()
    return values


def _merge_config(args: argparse.Namespace, actions: list) -> None:
    """Config-file values fill in anything the command line left at default.

    Keys are the long flag names without dashes; repeatable flags take
    comma-separated values.
    """
    if not args.config:
        return
    by_flag = {}
    for action in actions:
        for option in action.option_strings:
            by_flag[option.lstrip("-")] = action
    file_values = load_config_file(args.config)
    for key, text in file_values.items():
        action = by_flag.get(key)
        if action is None or action.dest in ("help", "config"):
            raise UsageError(f"{args.config}: unknown config key {key!r}")
        if getattr(args, action.dest) != action.default:
            continue  # explicit flag wins
        convert = action.type or str
        try:
            if isinstance(action, argparse._AppendAction):
                value = [convert(part.strip()) for part in text.split(",")]
            else:
                value = convert(text)
        except ValueError:
            raise UsageError(
                f"{args.config}: bad value {text!r} for key {key!r}") from None
        if action.choices and value not in action.choices:
            raise UsageError(f"{args.config}: {key!r} must be one of "
                             f"{sorted(action.choices)}")
        setattr(args, action.dest, value)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    if args.ma is None or args.mb is None:
        raise UsageError("run requires --ma and --mb")
    n = args.n
    m_a = BitString.from_hex(args.ma, n)
    m_b = BitString.from_hex(args.mb, n)
    noise_a = parse_noise(args.noise_a)
    noise_b = parse_noise(args.noise_b)
    adversary = None
    if args.attack != "none":
        from .attacks import build_adversary
        adversary = build_adversary(AttackStrategy.parse(args.attack))

    if args.protocol == "osb":
        config = OsbConfig(n=n, seed=args.seed, noise_a=noise_a,
                           noise_b=noise_b, gv_tolerance=args.tolerance,
                           check_fraction=args.check_fraction)
        result = run_osb(m_a, m_b, config, adversary)
    else:
        config = SqpcConfig(n=n, seed=args.seed, noise_a=noise_a,
                            noise_b=noise_b, case1_tolerance=args.tolerance)
        result = run_sqpc(m_a, m_b, config, adversary)

    if args.out:
        result.transcript.dump(args.out)
    outcome = result.outcome
    if outcome.verdict is Verdict.EQUAL:
        print("verdict=equal")
    elif outcome.verdict is Verdict.UNEQUAL:
        print(f"verdict=unequal positions={fmt_positions(outcome.unequal_positions)}")
    else:
        rate = "" if outcome.observed_error_rate is None else (
            f" rate={outcome.observed_error_rate!r}")
        print(f"verdict=aborted stage={outcome.abort_stage} "
              f"reason={outcome.abort_reason}{rate}")
        return EXIT_ABORT
    return EXIT_OK


GRID_HEADER = "p1,p2,kind_pair,parity,trips,closed_form,oracle,abs_deviation"
GRID_FIELDS = GRID_HEADER.split(",")


def _grid_row_values(row) -> list[str]:
    return [repr(row.p1), repr(row.p2), row.kind_pair, row.parity,
            row.trips.token, repr(row.closed_form), repr(row.oracle),
            repr(row.deviation)]


def grid_to_csv(rows) -> str:
    lines = [GRID_HEADER]
    for row in rows:
        lines.append(",".join(_grid_row_values(row)))
    return "\n".join(lines) + "\n"


def grid_to_log(rows) -> str:
    """Line-delimited key=value rendering of the same rows."""
    lines = []
    for row in rows:
        pairs = zip(GRID_FIELDS, _grid_row_values(row))
        lines.append(" ".join(f"{k}={v}" for k, v in pairs))
    return "\n".join(lines) + "\n"


def parse_grid_csv(text: str):
    """Inverse of grid_to_csv, for round-trip checks."""
    from .noise import GridRow
    lines = text.strip().split("\n")
    if lines[0] != GRID_HEADER:
        raise ValueError("missing grid header")
    rows = []
    for line in lines[1:]:
        p1, p2, pair, parity, trips, closed, oracle, _dev = line.split(",")
        rows.append(GridRow(p1=float(p1), p2=float(p2), kind_pair=pair,
                            parity=parity, trips=Trips(trips),
                            closed_form=float(closed), oracle=float(oracle)))
    return rows


def cmd_fidelity_grid(args: argparse.Namespace) -> int:
    trips = Trips(args.trips)
    rows = sweep_scenarios(args.step, trips)
    render = grid_to_csv if args.format == "csv" else grid_to_log
    _write_text(args.out, render(rows))
    bad = [r for r in rows if r.deviation >= FORMULA_TOL]
    if bad:
        worst = max(bad, key=lambda r: r.deviation)
        print(f"formula-mismatch family={worst.kind_pair}:{worst.parity} "
              f"trips={worst.trips.token} deviation={worst.deviation!r}",
              file=sys.stderr)
        return EXIT_FORMULA
    return EXIT_OK


def cmd_verify_formulas(args: argparse.Namespace) -> int:
    report = verify_all_formulas(args.step)
    lines = []
    for (trips, family), dev in sorted(report.max_deviation.items(),
                                       key=lambda kv: (kv[0][0].value, kv[0][1])):
        status = "ok" if dev < FORMULA_TOL else "FAIL"
        lines.append(f"trips={trips.token} family={family} "
                     f"max_deviation={dev!r} {status}")
    text = "\n".join(lines) + "\n"
    _write_text(args.out, text)
    if not report.passed:
        for trips, family, dev in report.failures():
            print(f"formula-mismatch family={family} trips={trips.token} "
                  f"deviation={dev!r}", file=sys.stderr)
        return EXIT_FORMULA
    return EXIT_OK


ATTACK_HEADER = ("protocol,attack,fraction,n,trials,seed,detection_rate,"
                 "detection_stages,mean_key_bits_recovered,"
                 "verdict_corruption_rate,case1_mismatch_rate,mean_gv_error_rate")


def _campaign_values(campaign) -> list[str]:
    stages = ";".join(f"{stage}:{count}" for stage, count
                      in sorted(campaign.stage_counts.items()))
    case1 = ("" if campaign.case1_mismatch_rate is None
             else repr(campaign.case1_mismatch_rate))
    gv = ("" if campaign.mean_gv_error_rate is None
          else repr(campaign.mean_gv_error_rate))
    return [campaign.protocol, campaign.strategy.kind.token,
            repr(campaign.strategy.fraction), str(campaign.n),
            str(campaign.trials), str(campaign.seed),
            repr(campaign.detection_rate), stages,
            repr(campaign.mean_key_bits_recovered),
            repr(campaign.verdict_corruption_rate), case1, gv]


def campaign_to_csv(campaign) -> str:
    return ATTACK_HEADER + "\n" + ",".join(_campaign_values(campaign)) + "\n"


def campaign_to_log(campaign) -> str:
    pairs = zip(ATTACK_HEADER.split(","), _campaign_values(campaign))
    return " ".join(f"{k}={v}" for k, v in pairs) + "\n"


def cmd_attack(args: argparse.Namespace) -> int:
    strategy = AttackStrategy.parse(args.attack)
    campaign = run_with_attack(args.protocol, args.n, strategy, args.trials,
                               args.seed, tolerance=args.tolerance,
                               check_fraction=args.check_fraction)
    render = campaign_to_csv if args.format == "csv" else campaign_to_log
    _write_text(args.out, render(campaign))
    return EXIT_OK


EFFICIENCY_HEADER = "protocol,n,c,q,b,eta,eta_decimal"


def _efficiency_rows(n_values: list[int]) -> list[list[str]]:
    rows = []
    for n in n_values:
        for name, fn in (("osb", efficiency_osb), ("sqpc", efficiency_sqpc)):
            ledger, eta = fn(n)
            rows.append([name, str(n), str(ledger.compared_bits),
                         str(ledger.qubits), str(ledger.decoding_bits),
                         f"{eta.numerator}/{eta.denominator}",
                         repr(float(eta))])
    return rows


def efficiency_table(n_values: list[int], fmt: str = "csv") -> str:
    rows = _efficiency_rows(n_values)
    if fmt == "csv":
        return "\n".join([EFFICIENCY_HEADER]
                         + [",".join(r) for r in rows]) + "\n"
    fields = EFFICIENCY_HEADER.split(",")
    return "\n".join(" ".join(f"{k}={v}" for k, v in zip(fields, row))
                     for row in rows) + "\n"


def cmd_efficiency(args: argparse.Namespace) -> int:
    if not args.n_values:
        raise UsageError("efficiency requires at least one --n")
    _write_text(args.out, efficiency_table(args.n_values, args.format))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="qpcsim",
                     description="Simulate and verify two quantum private "
                                 "comparison protocols under noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, formats=False):
        p.add_argument("--config", default=None,
                       help="key=value config file; explicit flags override")
        p.add_argument("--out", default=None, help="output file path")
        if formats:
            p.add_argument("--format", choices=("csv", "log"), default="csv",
                           help="tabular output rendering")

    p_run = sub.add_parser("run", help="execute one protocol run")
    p_run.add_argument("--protocol", choices=("osb", "sqpc"), default="osb")
    p_run.add_argument("--n", type=int, default=8, help="secret length in bits")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--ma", default=None, help="Alice's secret, hex")
    p_run.add_argument("--mb", default=None, help="Bob's secret, hex")
    p_run.add_argument("--noise-a", default="none", help="arm-A noise kind:p")
    p_run.add_argument("--noise-b", default="none", help="arm-B noise kind:p")
    p_run.add_argument("--attack", default="none", help="attack name[:fraction]")
    p_run.add_argument("--tolerance", type=float, default=0.0,
                       help="allowed check error rate")
    p_run.add_argument("--check-fraction", type=float, default=0.5,
                       help="share of measured pairs sacrificed for checking")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("fidelity-grid", help="emit fidelity surfaces as CSV")
    p_grid.add_argument("--step", type=float, default=0.1)
    p_grid.add_argument("--trips", choices=[t.value for t in Trips],
                        default="oneway")
    add_common(p_grid, formats=True)
    p_grid.set_defaults(func=cmd_fidelity_grid)

    p_verify = sub.add_parser("verify-formulas",
                              help="sweep closed forms against the oracle")
    p_verify.add_argument("--step", type=float, default=0.1)
    add_common(p_verify)
    p_verify.set_defaults(func=cmd_verify_formulas)

    p_attack = sub.add_parser("attack", help="run a seeded attack campaign")
    p_attack.add_argument("--protocol", choices=("osb", "sqpc"), default="osb")
    p_attack.add_argument("--attack", required=True, help="attack name[:fraction]")
    p_attack.add_argument("--n", type=int, default=16)
    p_attack.add_argument("--trials", type=int, default=100)
    p_attack.add_argument("--seed", type=int, default=0)
    p_attack.add_argument("--tolerance", type=float, default=0.0)
    p_attack.add_argument("--check-fraction", type=float, default=0.5)
    add_common(p_attack, formats=True)
    p_attack.set_defaults(func=cmd_attack)

    p_eff = sub.add_parser("efficiency", help="print resource ledgers and eta")
    p_eff.add_argument("--n", dest="n_values", type=int, action="append",
                       default=[], help="secret length (repeatable)")
    add_common(p_eff, formats=True)
    p_eff.set_defaults(func=cmd_efficiency)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        _merge_config(args, subparser._actions)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
