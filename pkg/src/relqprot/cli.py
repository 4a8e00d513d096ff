"""Command-line front end: closed forms, exact counts, single runs, sweeps.

Exit codes: 0 success or accepted run, 2 usage error, 3 enumeration bound
exceeded, 4 aborted run, 5 sweep with at least one failing cell (1 is the
generic failure code for a count verification mismatch).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .experiment import (
    ExperimentSpec,
    cells_to_csv,
    cells_to_json,
    run_experiment,
)
from .parity import (
    DEFAULT_ENUM_BOUND,
    EnumerationBoundError,
    alpha,
    count_block_strings,
    count_block_strings_closed,
    p_acc_fixed,
    p_fixed_block,
    pc_parity_block_bound,
    pc_parity_plain,
)
from .protocol import (
    HONEST,
    DelayBlocks,
    EarlyGuess,
    ProtocolConfig,
    SendBack,
    run_bit_commitment,
    run_coin_toss,
    transcript_to_jsonl,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BOUND = 3
EXIT_ABORTED = 4
EXIT_SWEEP_FAILED = 5

_CONFIG_FIELDS = {
    "n_blocks",
    "block_len",
    "width",
    "separation",
    "channel_delay",
    "tail_exponent",
    "disclosure_time",
    "master_seed",
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relqprot",
        description="Relativistic bit-commitment and coin-tossing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analytic = sub.add_parser("analytic", help="print the closed-form rate table")
    analytic.add_argument("-N", "--blocks", type=_positive_int, required=True)
    analytic.add_argument("-k", "--block-len", type=_positive_int, required=True)
    analytic.add_argument("--xi", "--tail-exponent", dest="tail_exponent", type=float)
    analytic.set_defaults(func=_cmd_analytic)

    count = sub.add_parser("count", help="count valid block strings exactly")
    count.add_argument("-N", "--blocks", type=_positive_int, required=True)
    count.add_argument("-k", "--block-len", type=_positive_int, required=True)
    count.add_argument("--verify", action="store_true",
                       help="cross-check the closed form against enumeration")
    count.add_argument("--enum-bound", type=_positive_int, default=DEFAULT_ENUM_BOUND)
    count.set_defaults(func=_cmd_count)

    run = sub.add_parser("run", help="execute one protocol run")
    run.add_argument("protocol", choices=("bc", "ct"))
    run.add_argument("--config", help="JSON file with protocol parameters")
    run.add_argument("-N", "--blocks", type=_positive_int)
    run.add_argument("-k", "--block-len", type=_positive_int)
    run.add_argument("--width", type=float)
    run.add_argument("--separation", type=float)
    run.add_argument("--channel-delay", type=float)
    run.add_argument("--xi", "--tail-exponent", dest="tail_exponent", type=float)
    run.add_argument("--disclosure-time", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--strategy-a", choices=("honest", "delay"), default="honest")
    run.add_argument("--delay-blocks", default="0",
                     help="comma-separated block indices withheld by the sender")
    run.add_argument("--strategy-b", choices=("honest", "earlyguess", "sendback"),
                     default="honest")
    run.add_argument("--no-half-disclosure", action="store_true",
                     help="coin toss only: disclose everything in one phase")
    run.add_argument("--out", default="transcript.jsonl",
                     help="transcript output path (line-delimited JSON)")
    run.add_argument("-v", "--verbose", action="store_true",
                     help="echo the resolved configuration to stderr")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run a Monte Carlo campaign")
    sweep.add_argument("--config", required=True, help="JSON experiment spec")
    sweep.add_argument("--seed", type=int,
                       help="override the master seed from the experiment file")
    sweep.add_argument("--out", default="sweep.csv")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--jobs", type=_positive_int, default=1)
    sweep.add_argument("-v", "--verbose", action="store_true",
                       help="echo the resolved experiment spec to stderr")
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _cmd_analytic(args) -> int:
    n, k = args.blocks, args.block_len
    rows = [
        ("plain parity guess success (k=1 exact)", _fmt(pc_parity_plain(n))),
        ("block-coded guess reference bound", _fmt(pc_parity_block_bound(n, k))),
        ("valid-string entropy ratio (alpha)", _fmt(alpha(n, k))),
        ("per-block success, public block positions", _fmt(p_fixed_block(k))),
        ("full-string success, public positions", _fmt(p_acc_fixed(n, k))),
        ("single-block delay escape (2^-k)", _fmt(0.5**k)),
    ]
    if args.tail_exponent is not None:
        if not args.tail_exponent > 0:
            print("error: tail exponent must be positive", file=sys.stderr)
            return EXIT_USAGE
        completion = (1.0 - math.exp(-args.tail_exponent)) ** (n * k)
        rows.append(("tailed honest completion ((1-e^-xi)^(N k))", _fmt(completion)))
    print(f"closed-form rates for N={n} blocks of k={k}")
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"  {label:<{width}} : {value}")
    print(
        "note: the block-coded bound is a loose reference; at k=1 the exact\n"
        "success is smaller by half the exponential term, and at small k>1 the\n"
        "measured optimal guess can exceed it (see README)."
    )
    return EXIT_OK


def _cmd_count(args) -> int:
    n, k = args.blocks, args.block_len
    even, odd = count_block_strings_closed(n, k)
    print(f"S_even={even} S_odd={odd} total={even + odd} alpha={_fmt(alpha(n, k))}")
    if args.verify:
        try:
            enum_even, enum_odd = count_block_strings(n, k, enum_bound=args.enum_bound)
        except EnumerationBoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BOUND
        if (enum_even, enum_odd) != (even, odd):
            print(
                f"mismatch: enumeration found S_even={enum_even} S_odd={enum_odd}",
                file=sys.stderr,
            )
            return EXIT_FAILURE
        print("enumeration agrees")
    return EXIT_OK


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _build_config(args) -> ProtocolConfig:
    fields: dict = {}
    if args.config:
        data = _load_json(args.config)
        unknown = set(data) - _CONFIG_FIELDS
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        fields.update(data)
    overrides = {
        "n_blocks": args.blocks,
        "block_len": args.block_len,
        "width": args.width,
        "separation": args.separation,
        "channel_delay": args.channel_delay,
        "tail_exponent": args.tail_exponent,
        "disclosure_time": args.disclosure_time,
        "master_seed": args.seed,
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if "n_blocks" not in fields or "block_len" not in fields:
        raise ValueError("n_blocks and block_len are required (flags or config file)")
    return ProtocolConfig(**fields)


def _cmd_run(args) -> int:
    try:
        config = _build_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        print(f"config: {config}", file=sys.stderr)

    if args.protocol == "bc":
        if args.strategy_b == "sendback":
            print("error: the send-back strategy applies to the coin toss only",
                  file=sys.stderr)
            return EXIT_USAGE
        if args.no_half_disclosure:
            print("error: --no-half-disclosure applies to the coin toss only",
                  file=sys.stderr)
            return EXIT_USAGE
        strategy_a = HONEST
        if args.strategy_a == "delay":
            try:
                blocks = [int(x) for x in args.delay_blocks.split(",") if x.strip() != ""]
            except ValueError:
                print("error: --delay-blocks must be comma-separated integers",
                      file=sys.stderr)
                return EXIT_USAGE
            strategy_a = DelayBlocks(blocks)
        strategy_b = EarlyGuess() if args.strategy_b == "earlyguess" else HONEST
        try:
            result = run_bit_commitment(config, strategy_a, strategy_b)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        early = result.early_guess
    else:
        if args.strategy_a == "delay":
            print("error: the delay strategy applies to bit commitment only",
                  file=sys.stderr)
            return EXIT_USAGE
        strategy_b = {"honest": HONEST, "earlyguess": EarlyGuess(),
                      "sendback": SendBack()}[args.strategy_b]
        try:
            result = run_coin_toss(
                config,
                strategy_b=strategy_b,
                enforce_half_disclosure=not args.no_half_disclosure,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        early = result.early_guess

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(transcript_to_jsonl(result.transcript))
    print(result.verdict.code())
    if early is not None:
        outcome = "correct" if early.correct else "wrong"
        print(f"early_guess={early.guess} confidence={_fmt(early.confidence)} {outcome}")
    return EXIT_OK if result.verdict.accepted else EXIT_ABORTED


def _cmd_sweep(args) -> int:
    try:
        data = _load_json(args.config)
        if args.seed is not None:
            data["master_seed"] = args.seed
        spec = ExperimentSpec.from_dict(data)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        print(f"spec: {spec}", file=sys.stderr)
    try:
        cells = run_experiment(spec, jobs=args.jobs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = cells_to_csv(cells) if args.format == "csv" else cells_to_json(cells)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(text)
    for cell in cells:
        params = " ".join(f"{k}={v}" for k, v in cell.params)
        status = "pass" if cell.passed else "FAIL"
        print(
            f"{cell.scenario} {params} estimate={_fmt(cell.estimate)} "
            f"reference={_fmt(cell.reference)} z={_fmt(cell.z)} {status}"
        )
    return EXIT_OK if all(c.passed for c in cells) else EXIT_SWEEP_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
