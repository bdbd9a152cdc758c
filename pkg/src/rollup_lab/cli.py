"""Command-line runner: every simulation writes CSV, optional SVG and a
run manifest into the output directory.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import fields, is_dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import __version__
from . import calldata as cd
from . import da_attacks as da
from . import prover_econ as pe
from .svg import line_chart
from .units import (
    AttackScenario,
    ConfigError,
    L1Params,
    eth,
    get_rollup,
    gwei,
    parse_scenario,
    to_eth,
)

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3
DEFAULT_OUT = "rollup_lab_out"
FINALITY_COLUMNS = ("budget_eth", "k_l1", "total_blocks", "amplification")
ECON_PRESETS = ("scroll", "scroll-appendix-c")
DEFAULT_BUDGETS = (0.1, 0.2, 0.5, 1, 2, 5, 10, 20, 50, 100)


class UsageError(Exception):
    pass


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Output:
    """Collects files in memory and writes them only once the run succeeded,
    so a failed run leaves nothing behind."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self, command: str, params: dict, started: float) -> list[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.files.items():
            p = self.directory / name
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        manifest = {
            "command": command,
            "parameters": params,
            "version": __version__,
            "outputs": [str(p) for p in paths],
            "wall_clock_s": round(time.perf_counter() - started, 6),
        }
        mp = self.directory / f"manifest_{command}.json"
        mp.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return paths + [mp]


def _jsonable(v: Any) -> Any:
    if is_dataclass(v):
        return {f.name: _jsonable(getattr(v, f.name)) for f in fields(v)}
    if isinstance(v, Mapping):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, float) and v == float("inf"):
        return "inf"
    return v


def _scenario(args) -> tuple[AttackScenario, L1Params]:
    """Scenario file values first, then explicit flags on top."""
    base = AttackScenario()
    if getattr(args, "scenario", None):
        base = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
    kw: dict[str, Any] = {
        "budget": base.budget, "priority_fee": base.priority_fee, "duration": base.duration,
        "delay_blocks": base.delay_blocks, "eth_usd": base.eth_usd, "rollup": base.rollup,
        "overrides": base.overrides,
    }
    if getattr(args, "budget", None) is not None:
        kw["budget"] = eth(args.budget)
    if getattr(args, "priority_fee", None) is not None:
        kw["priority_fee"] = gwei(args.priority_fee)
    if getattr(args, "duration", None) is not None:
        kw["duration"] = args.duration
    if getattr(args, "delay", None) is not None:
        kw["delay_blocks"] = args.delay
    sc = AttackScenario(**kw)
    _, l1 = sc.resolve()
    if getattr(args, "floor_gwei", None) is not None:
        l1 = l1.with_floor(gwei(args.floor_gwei))
    return sc, l1


def _rollups(args, scenario: AttackScenario):
    names = args.rollup or ([scenario.rollup] if scenario.rollup else [])
    if not names:
        raise UsageError("--rollup is required")
    out = []
    for name in names:
        try:
            cfg = get_rollup(name)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        sc = AttackScenario(
            budget=scenario.budget, priority_fee=scenario.priority_fee, duration=scenario.duration,
            delay_blocks=scenario.delay_blocks, eth_usd=scenario.eth_usd, rollup=name,
            overrides=scenario.overrides,
        )
        resolved, _ = sc.resolve()
        out.append(resolved or cfg)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_dos(args, out: Output) -> dict:
    sc, l1 = _scenario(args)
    rollups = _rollups(args, sc)
    if sc.duration is None and sc.budget == float("inf"):
        raise UsageError("give --budget or --duration")
    series = {}
    summary = {}
    for r in rollups:
        traj = da.simulate_dos(r, l1, sc, price_source=args.price_source)
        out.add(f"dos_{r.name}.csv", _csv_text(da.CSV_COLUMNS, da.trajectory_rows(traj)))
        series[r.name] = [(rec.block, to_eth(rec.cumulative)) for rec in traj.records]
        summary[r.name] = {
            "blocks": traj.blocks_sustained,
            "total_eth": to_eth(traj.total_spent),
            "caveat": traj.caveat,
        }
        note = f"  [{traj.caveat}]" if traj.caveat else ""
        print(f"{r.name}: {traj.blocks_sustained} blocks, {to_eth(traj.total_spent):.6f} ETH{note}")
    if args.svg:
        out.add("dos.svg", line_chart(series, "DoS cost per rollup", "L1 block", "cumulative cost (ETH)"))
    return {"scenario": _jsonable(sc), "l1": _jsonable(l1), "summary": summary}


def cmd_finality(args, out: Output) -> dict:
    sc, l1 = _scenario(args)
    budgets = args.budgets or ([args.budget] if args.budget is not None else list(DEFAULT_BUDGETS))
    if any(b <= 0 for b in budgets):
        raise UsageError("budgets must be positive")
    d = sc.delay_blocks
    if args.mode == "l2" and not (args.rollup or sc.rollup):
        raise UsageError("--mode l2 requires --rollup")
    if args.mode == "l1" and args.rollup:
        raise UsageError("--rollup only applies to --mode l2")
    series: dict[str, list] = {}
    if args.mode == "l1":
        rows = []
        for b in budgets:
            res = da.direct_l1_delay(eth(b), l1)
            rows.append((b, res.k_l1, res.total, 1.0))
            print(f"budget {b} ETH: k_l1={res.k_l1} total={res.total}")
        series["direct L1"] = [(r[0], r[2]) for r in rows]
        out.add("finality_l1.csv", _csv_text(FINALITY_COLUMNS, rows))
    else:
        for r in _rollups(args, sc):
            rows = []
            for b in budgets:
                res = da.amplified_delay(r, eth(b), l1, sc.priority_fee, d)
                if res.susceptible:
                    rows.append((b, res.k_l1, res.total_k, round(res.amplification, 6)))
                    print(f"{r.name} budget {b} ETH: k_l1={res.k_l1} total={res.total_k} amplification={res.amplification:.3f}")
                else:
                    rows.append((b, "", "", "not susceptible"))
                    print(f"{r.name} budget {b} ETH: not susceptible (batches per interval {res.t_batches:g} <= 1)")
            if any(isinstance(x[2], int) for x in rows):
                series[r.name] = [(x[0], x[2]) for x in rows if isinstance(x[2], int)]
            suffix = f"_d{d}" if d else ""
            out.add(f"finality_l2_{r.name}{suffix}.csv", _csv_text(FINALITY_COLUMNS, rows))
        series["direct L1"] = [(b, da.direct_l1_delay(eth(b), l1).total) for b in budgets]
    if args.svg:
        out.add(
            f"finality_{args.mode}.svg",
            line_chart(series, "Finality delay through blob stuffing", "budget (ETH)", "delay (L1 blocks)"),
        )
    return {"mode": args.mode, "budgets_eth": budgets, "delay_blocks": d, "l1": _jsonable(l1)}


def cmd_prover(args, out: Output) -> dict:
    rates = pe.Rates(
        cycles_per_s=args.rate or pe.BASELINE_RATE,
        usd_per_hour=args.usd_per_hour,
        l2_base_fee=gwei(args.base_fee_gwei),
        eth_usd=args.eth_usd,
    )
    rows = []
    if args.profile:
        try:
            profile = pe.load_profile(args.profile)
        except OSError as exc:
            raise IOError(str(exc)) from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        try:
            rep = pe.attack_report(profile, rates=rates)
        except pe.UnknownOpcodeError as exc:
            raise UsageError(str(exc)) from None
        rows.append(pe.report_row(Path(args.profile).stem, rep))
    else:
        names = list(pe.ATTACK_BLOCKS) if args.attack == "all" else [args.attack.lower()]
        for n in names:
            if n not in pe.ATTACK_BLOCKS:
                raise UsageError(f"unknown attack {n!r}; known: {', '.join(pe.ATTACK_BLOCKS)}")
            block = pe.ATTACK_BLOCKS[n]
            block_rates = rates if args.rate or not block.extrapolated else None
            rep = block.report(block_rates) if block.extrapolated else block.report(rates)
            rows.append(pe.report_row(n, rep))
    for row in rows:
        print(f"{row[0]}: profit/loss {row[6]:+.2f} USD, latency delay {row[7]:+g} s ({row[8]:+.1f}%)")
    out.add("prover.csv", _csv_text(pe.REPORT_COLUMNS, rows))
    return {"rates": _jsonable(rates), "attack": args.attack, "profile": args.profile}


def cmd_econ(args, out: Output) -> dict:
    if args.preset not in ECON_PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}")
    p = da.SCROLL_PRESET
    if args.eth_usd is not None:
        p = replace(p, eth_usd=args.eth_usd)
    rep = da.economic_damage(p)
    lines = rep.lines()
    out.add("econ.csv", _csv_text(("item", "value"), lines))
    text = "\n".join(f"{k:32s} {v}" for k, v in lines) + "\n"
    out.add("econ.txt", text)
    sys.stdout.write(text)
    return {"preset": args.preset, "inputs": _jsonable(p)}


def cmd_mitigate(args, out: Output) -> dict:
    sc, l1 = _scenario(args)
    if sc.duration is None:
        raise UsageError("--duration is required")
    series = {}
    for r in _rollups(args, sc):
        recs = da.simulate_mitigated(r, l1, sc.duration, sc.priority_fee, args.target, args.coefficient)
        header = ("block", "l1_price_wei", "l2_da_price_wei", "cost_plain", "cost_mitigated",
                  "cumulative_plain", "cumulative_mitigated")
        out.add(f"mitigate_{r.name}.csv", _csv_text(header, [
            (x.block, x.l1_price, x.l2_da_price, x.cost_plain, x.cost_mitigated,
             x.cumulative_plain, x.cumulative_mitigated) for x in recs
        ]))
        series[f"{r.name} plain"] = [(x.block, to_eth(x.cumulative_plain)) for x in recs]
        series[f"{r.name} mitigated"] = [(x.block, to_eth(x.cumulative_mitigated)) for x in recs]
        if recs:
            last = recs[-1]
            print(f"{r.name}: plain {to_eth(last.cumulative_plain):.6g} ETH, "
                  f"mitigated {to_eth(last.cumulative_mitigated):.6g} ETH")
    if args.svg:
        out.add("mitigate.svg", line_chart(series, "Attacker cost with an L2 blob base fee", "L1 block",
                                           "cumulative cost (ETH)", log_y=True))
    return {"duration": sc.duration, "target": args.target, "coefficient": args.coefficient}


def cmd_calldata(args, out: Output) -> dict:
    try:
        schedule = cd.get_schedule(args.schedule)
        cd.get_compressor(args.compressor)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    ratios = args.zero_ratio or [0.0, 0.03, 0.1, 0.25, 0.5, 0.75, 1.0]
    if any(not 0 <= r <= 1 for r in ratios):
        raise UsageError("zero ratios must be in [0, 1]")
    rows = cd.sweep(ratios, args.quality, schedule, args.compressor, args.seeds, args.size, args.seed)
    header = ("zero_ratio", "quality", "schedule", "mean_gas", "expected_gas", "mean_ratio")
    out.add("calldata.csv", _csv_text(header, [
        (r.zero_ratio, r.quality, r.schedule, r.mean_gas, r.expected_gas, round(r.mean_ratio, 6)) for r in rows
    ]))
    for r in rows:
        print(f"zero ratio {r.zero_ratio:g}, quality {r.quality}: {r.mean_gas:,.1f} gas, ratio {r.mean_ratio:.4f}")
    if args.svg:
        gas = {schedule.label: [(r.zero_ratio, r.mean_gas) for r in rows if r.quality == args.quality[0]]}
        out.add("calldata_gas.svg", line_chart(gas, "Calldata gas vs zero ratio", "zero ratio", "gas per blob"))
        comp = {f"q{q}": [(r.zero_ratio, r.mean_ratio) for r in rows if r.quality == q] for q in args.quality}
        out.add("calldata_ratio.svg", line_chart(comp, "Compression ratio vs zero ratio", "zero ratio", "ratio"))
    return {"schedule": schedule.label, "compressor": args.compressor, "seeds": args.seeds,
            "zero_ratios": ratios, "qualities": args.quality, "seed": args.seed}


# ---------------------------------------------------------------------------


def _add_scenario_flags(p: argparse.ArgumentParser, budget_default: bool = True) -> None:
    p.add_argument("--rollup", action="append", help="registry name; repeat for several")
    p.add_argument("--scenario", help="key = value scenario file")
    if budget_default:
        p.add_argument("--budget", type=float, help="budget in ETH")
    p.add_argument("--priority-fee", type=float, help="priority fee in Gwei")
    p.add_argument("--duration", type=int, help="number of L1 blocks")
    p.add_argument("--delay", type=int, help="fee-oracle delay in L1 blocks")
    p.add_argument("--floor-gwei", type=float, help="blob price floor and start price, Gwei")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rollup-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--out", help=f"output directory (default: $ROLLUP_LAB_OUT or ./{DEFAULT_OUT})")
    parser.add_argument("--svg", action="store_true", help="also write SVG plots")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dos", help="DoS cost trajectory")
    _add_scenario_flags(p)
    p.add_argument("--price-source", choices=("lookback", "relay"), default="lookback")
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("finality", help="finality-delay budget sweep")
    p.add_argument("--mode", choices=("l1", "l2"), required=True)
    _add_scenario_flags(p)
    p.add_argument("--budgets", type=float, nargs="+", help="budget sweep in ETH")
    p.set_defaults(func=cmd_finality)

    p = sub.add_parser("prover", help="prover-killer economics")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--attack", help=f"one of {', '.join(pe.ATTACK_BLOCKS)} or 'all'")
    g.add_argument("--profile", help="opcode,count CSV")
    p.add_argument("--rate", type=float, help="cycles per second for time estimates")
    p.add_argument("--usd-per-hour", type=float, default=pe.PROVER_USD_PER_HOUR)
    p.add_argument("--base-fee-gwei", type=float, default=pe.EFFECTIVE_L2_BASE_FEE / 1e9)
    p.add_argument("--eth-usd", type=float, default=pe.ETH_USD)
    p.set_defaults(func=cmd_prover)

    p = sub.add_parser("econ", help="per-batch loss ledger")
    p.add_argument("--preset", default="scroll", choices=sorted(ECON_PRESETS))
    p.add_argument("--eth-usd", type=float)
    p.set_defaults(func=cmd_econ)

    p = sub.add_parser("mitigate", help="attacker cost with and without an L2 blob base fee")
    _add_scenario_flags(p)
    p.add_argument("--target", type=float, default=0.5, help="utilization target")
    p.add_argument("--coefficient", type=float, default=1 / 8, help="adjustment coefficient")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("calldata", help="calldata gas and compressibility sweep")
    p.add_argument("--zero-ratio", type=float, action="append", help="repeat for several")
    p.add_argument("--schedule", default="pectra")
    p.add_argument("--quality", type=int, action="append", help="compressor quality; repeat for several")
    p.add_argument("--compressor", default=cd.DEFAULT_COMPRESSOR, help=", ".join(cd.COMPRESSORS))
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="first RNG seed")
    p.add_argument("--size", type=int, default=cd.BLOB_BYTES)
    p.set_defaults(func=cmd_calldata)
    return parser


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("ROLLUP_LAB_OUT") or DEFAULT_OUT)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "calldata" and not args.quality:
        args.quality = [11]
    out = Output(_out_dir(args))
    started = time.perf_counter()
    func: Callable = args.func
    try:
        params = func(args, out)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        paths = out.flush(args.command, params, started)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
