"""Prover-side economics: cycle tables, proving time and cost, fees and
the resulting profit or loss per block."""
from __future__ import annotations

import csv
import statistics
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .units import GWEI, to_usd

ETH_USD = 2500.0
PROVER_USD_PER_HOUR = 5.07
# per gas; matches the fee column of the measured attack blocks
EFFECTIVE_L2_BASE_FEE = 0.009 * GWEI
STATED_L2_BASE_FEE = 0.1 * GWEI
BLOCK_GAS_CAP = 36_000_000
# cycles per second; calibrated on the normal-block median
BASELINE_RATE = 289.51e6 / 320
# cycles per second; reproduces the extrapolated MODEXP time
MODEXP_RATE = 0.8713e6


@dataclass(frozen=True)
class OpcodeCost:
    name: str
    gas: float
    cycles: float
    cycles_per_gas: float
    group: str = "opcode"


_TABLE_ROWS = (
    # highest cycles per gas among opcodes
    ("jumpdest", 1, 1039.8, 1039.79, "opcode"),
    ("difficulty", 2, 1192.0, 596.00, "opcode"),
    ("mulmod", 8, 4640.8, 580.10, "opcode"),
    ("calldatacopy", 3, 1733.8, 577.93, "opcode"),
    ("gasprice", 2, 1145.8, 572.88, "opcode"),
    ("address", 2, 1144.8, 572.38, "opcode"),
    ("coinbase", 2, 1141.3, 570.64, "opcode"),
    ("origin", 2, 1134.8, 567.42, "opcode"),
    # lowest cycles per gas among opcodes
    ("create", 32000, 1679.5, 0.05, "opcode"),
    ("create2", 32000, 1706.7, 0.05, "opcode"),
    ("sstore", 21000, 4927.6, 0.23, "opcode"),
    ("log4", 1875, 2744.2, 1.46, "opcode"),
    ("log3", 1500, 2395.9, 1.60, "opcode"),
    ("log2", 1125, 2291.3, 2.04, "opcode"),
    ("log1", 750, 1914.5, 2.55, "opcode"),
    ("log0", 375, 1604.1, 4.28, "opcode"),
    # precompiles
    ("modexp", 200, 592344.7, 2961.72, "precompile"),
    ("bn-pair", 45000, 73896701.8, 1642.15, "precompile"),
    ("bn-add", 150, 123223.0, 821.49, "precompile"),
    ("bn-mul", 6000, 4412939.6, 735.49, "precompile"),
    ("kzg-point", 50000, 9490921.2, 189.82, "precompile"),
    ("identity", 15, 1531.0, 102.06, "precompile"),
    ("sha256", 60, 3633.8, 60.56, "precompile"),
    ("ecrecover", 3000, 48942.7, 16.31, "precompile"),
)

# Median over every benchmarked opcode, not only the rows above.
FULL_TABLE_MEDIAN_CPG = 369.09


def load_tables() -> list[OpcodeCost]:
    return [OpcodeCost(*row) for row in _TABLE_ROWS]


def table_index(table: list[OpcodeCost] | None = None) -> dict[str, OpcodeCost]:
    return {row.name: row for row in (table or load_tables())}


def mispricing_rank(table: list[OpcodeCost], ascending: bool = False, n: int | None = None) -> list[OpcodeCost]:
    n = len(table) if n is None else n
    if not 0 <= n <= len(table):
        raise ValueError("n must be between 0 and the table size")
    # two stable sorts: name first, then ratio, so ties stay in name order
    ordered = sorted(table, key=lambda r: r.name)
    ordered = sorted(ordered, key=lambda r: r.cycles_per_gas, reverse=not ascending)
    return ordered[:n]


@dataclass(frozen=True)
class MedianReport:
    median: float
    rows: int
    subset: bool


def median_cycles_per_gas(table: list[OpcodeCost], group: str | None = "opcode") -> MedianReport:
    """Median ratio over the given rows. ``subset`` is set because the
    embedded rows are the extremes, not the whole opcode set."""
    rows = [r for r in table if group is None or r.group == group]
    return MedianReport(statistics.median(r.cycles_per_gas for r in rows), len(rows), True)


class UnknownOpcodeError(KeyError):
    def __init__(self, names: list[str]):
        super().__init__(f"unknown opcode(s): {', '.join(names)}")
        self.names = names

    def __str__(self) -> str:
        return self.args[0]


@dataclass
class BlockProfile:
    entries: list[tuple[str, float]] = field(default_factory=list)
    declared_gas: float | None = None
    declared_cycles: float | None = None

    def __post_init__(self):
        for name, count in self.entries:
            if count < 0:
                raise ValueError(f"negative count for {name}")

    def _resolve(self, table: dict[str, OpcodeCost]) -> list[tuple[OpcodeCost, float]]:
        missing = sorted({n for n, _ in self.entries if n not in table})
        if missing:
            raise UnknownOpcodeError(missing)
        return [(table[n], c) for n, c in self.entries]

    def gas(self, table: dict[str, OpcodeCost] | None = None) -> float:
        if self.declared_gas is not None:
            return self.declared_gas
        total = sum(row.gas * c for row, c in self._resolve(table or table_index()))
        if total > BLOCK_GAS_CAP:
            warnings.warn(f"profile uses {total:.0f} gas, above the {BLOCK_GAS_CAP} block cap", stacklevel=2)
        return total


def block_cycles(profile: BlockProfile, table: dict[str, OpcodeCost] | None = None) -> float:
    if profile.declared_cycles is not None:
        return profile.declared_cycles
    return sum(row.cycles * c for row, c in profile._resolve(table or table_index()))


def load_profile(path: str | Path) -> BlockProfile:
    """Read an ``opcode,count`` CSV; a header row is optional."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"row {i + 1}: expected 'opcode,count'")
            name, count = row[0].strip().lower(), row[1].strip()
            if i == 0 and name == "opcode":
                continue
            try:
                entries.append((name, float(count)))
            except ValueError:
                raise ValueError(f"row {i + 1}: bad count {count!r}") from None
    return BlockProfile(entries)


def proving_time(cycles: float, rate: float = BASELINE_RATE) -> float:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return cycles / rate


def proving_cost(seconds: float, usd_per_hour: float = PROVER_USD_PER_HOUR) -> float:
    if seconds < 0 or usd_per_hour < 0:
        raise ValueError("inputs must be nonnegative")
    return seconds * usd_per_hour / 3600


def fees_collected(gas: float, l2_base_fee: float = EFFECTIVE_L2_BASE_FEE, eth_usd: float = ETH_USD) -> float:
    if gas < 0 or l2_base_fee < 0:
        raise ValueError("inputs must be nonnegative")
    return to_usd(gas * l2_base_fee, eth_usd)


@dataclass(frozen=True)
class Stat:
    min: float
    max: float
    avg: float
    median: float


@dataclass(frozen=True)
class ProverBaseline:
    """Proving statistics of ordinary mainnet blocks."""

    cycles: Stat = Stat(65.73e6, 549.73e6, 289.82e6, 289.51e6)
    gas: Stat = Stat(3.48e6, 35.85e6, 17.70e6, 17.85e6)
    cycles_per_gas: Stat = Stat(10.41, 25.98, 16.61, 16.48)
    time_s: Stat = Stat(91, 600, 319, 320)
    cost_usd: Stat = Stat(0.13, 0.85, 0.45, 0.45)

    @property
    def median_time_s(self) -> float:
        return self.time_s.median

    @property
    def median_cycles(self) -> float:
        return self.cycles.median

    def median_cost(self, usd_per_hour: float = PROVER_USD_PER_HOUR) -> float:
        return proving_cost(self.median_time_s, usd_per_hour)


@dataclass(frozen=True)
class ProverReport:
    total_gas: float
    total_cycles: float
    proving_time_s: float
    proving_cost_usd: float
    fees_usd: float
    baseline_time_s: float

    @property
    def profit_loss_usd(self) -> float:
        return self.fees_usd - self.proving_cost_usd

    @property
    def latency_delay_s(self) -> float:
        return self.proving_time_s - self.baseline_time_s

    @property
    def latency_delay_pct(self) -> float:
        return self.latency_delay_s / self.baseline_time_s * 100

    @property
    def slowdown(self) -> float:
        """Delay in multiples of the baseline proving time."""
        return self.latency_delay_s / self.baseline_time_s


@dataclass(frozen=True)
class Rates:
    cycles_per_s: float = BASELINE_RATE
    usd_per_hour: float = PROVER_USD_PER_HOUR
    l2_base_fee: float = EFFECTIVE_L2_BASE_FEE
    eth_usd: float = ETH_USD


def attack_report(
    profile: BlockProfile,
    baseline: ProverBaseline | None = None,
    rates: Rates | None = None,
    measured_time_s: float | None = None,
) -> ProverReport:
    """A measured proving time takes precedence over the cycle estimate."""
    baseline = baseline or ProverBaseline()
    rates = rates or Rates()
    gas = profile.gas()
    cycles = block_cycles(profile)
    seconds = measured_time_s if measured_time_s is not None else proving_time(cycles, rates.cycles_per_s)
    return ProverReport(
        total_gas=gas,
        total_cycles=cycles,
        proving_time_s=seconds,
        proving_cost_usd=proving_cost(seconds, rates.usd_per_hour),
        fees_usd=fees_collected(gas, rates.l2_base_fee, rates.eth_usd),
        baseline_time_s=baseline.median_time_s,
    )


@dataclass(frozen=True)
class AttackBlock:
    """A measured prover-killer block: gas and cycles in millions."""

    name: str
    gas_m: float
    cycles_m: float
    time_s: float
    published_pl: float
    published_delay_s: float
    extrapolated: bool = False

    def profile(self) -> BlockProfile:
        return BlockProfile(declared_gas=self.gas_m * 1e6, declared_cycles=self.cycles_m * 1e6)

    def report(self, rates: Rates | None = None) -> ProverReport:
        # the extrapolated row has no measured time; estimate it from cycles
        if self.extrapolated:
            rates = rates or Rates(cycles_per_s=MODEXP_RATE)
            return attack_report(self.profile(), rates=rates)
        return attack_report(self.profile(), rates=rates, measured_time_s=self.time_s)


ATTACK_BLOCKS = {
    b.name: b
    for b in (
        AttackBlock("modexp", 35.49, 26640.26, 30575, -42.26, 30255, extrapolated=True),
        AttackBlock("sha256", 35.49, 2110.15, 1501, -1.32, 1181),
        AttackBlock("bn_pairing", 35.51, 1904.79, 3966, -4.79, 3646),
        AttackBlock("mcopy", 34.08, 1061.48, 808, -0.37, 488),
        AttackBlock("keccak", 35.49, 988.12, 873, -0.43, 553),
        AttackBlock("calldatacopy", 33.52, 946.19, 641, -0.15, 322),
        AttackBlock("jumpdest", 34.08, 864.25, 602, -0.08, 283),
        AttackBlock("ecrecover", 33.52, 654.72, 1729, -1.68, 1409),
        AttackBlock("bn_mul", 33.52, 273.10, 199, 0.47, -121),
    )
}
# the MODEXP prover crashed after this many seconds
MODEXP_CRASH_S = 10_266

REPORT_COLUMNS = (
    "attack", "gas_m", "cycles_m", "time_s", "cost_usd", "fees_usd", "profit_loss_usd",
    "latency_delay_s", "latency_delay_pct",
)


def report_row(name: str, rep: ProverReport) -> tuple:
    return (
        name,
        round(rep.total_gas / 1e6, 2),
        round(rep.total_cycles / 1e6, 2),
        round(rep.proving_time_s, 1),
        round(rep.proving_cost_usd, 2),
        round(rep.fees_usd, 2),
        round(rep.profit_loss_usd, 2),
        round(rep.latency_delay_s, 1),
        round(rep.latency_delay_pct, 1),
    )
