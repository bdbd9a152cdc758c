"""DA-saturation attacks: DoS cost trajectories, finality delay (direct and
through an L2), delayed fee-oracle variants and the per-batch loss ledger."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from . import blob_market as bm
from .units import ETH, GWEI, AttackScenario, L1Params, RollupConfig, builtin_registry

MAX_INTERVALS = 1_000_000


@dataclass(frozen=True)
class IntervalProfile:
    """Attacker activity per L1 interval. ``t_batches`` is the number of
    batches sealed this interval; ``q`` is the blob carry into the next."""

    t_blobs: float
    t_tx: float
    t_batches: float
    q: float
    r: float
    batch_limit: float

    @property
    def mean_batches(self) -> float:
        """Long-run batches per interval, ignoring seal granularity."""
        return self.t_blobs / self.batch_limit


def interval_profile(rollup: RollupConfig, l1: L1Params, q_in: float = 0.0) -> IntervalProfile:
    r = l1.bt_l1 / rollup.bt_l2
    batch = rollup.max_blobs_per_batch
    limit = rollup.effective_block_limit
    t_tx = r * max(1, rollup.tx_to_fill)
    if limit is None:
        return IntervalProfile(r * batch, t_tx, r, 0.0, r, batch)
    t_blobs = r * min(limit, batch)
    filled = q_in + t_blobs
    # tolerate float noise so e.g. 6.0000000001/6 seals one batch, not zero
    sealed = math.floor(filled / batch + 1e-9)
    q_out = max(0.0, filled - sealed * batch)
    return IntervalProfile(t_blobs, t_tx, float(sealed), q_out, r, batch)


@dataclass(frozen=True)
class CostBreakdown:
    c_blobs: float
    c_calldata: float
    c_txs: float
    c_batches: float

    @property
    def total(self) -> float:
        return self.c_blobs + self.c_calldata + self.c_txs + self.c_batches


def interval_cost(
    profile: IntervalProfile, rho_blob: float, rollup: RollupConfig, l1: L1Params, delta: float
) -> CostBreakdown:
    """Blob fees use the L1 per-blob gas constant; calldata uses the gas the
    rollup charges to occupy one blob."""
    if rho_blob < 0:
        raise ValueError("rho_blob must be nonnegative")
    gas_price = rollup.l2_base_fee + rollup.priority_fee(delta)
    return CostBreakdown(
        c_blobs=profile.t_blobs * l1.gas_per_blob_calldata * rho_blob,
        c_calldata=profile.t_blobs * rollup.calldata_gas_per_blob * gas_price,
        c_txs=profile.t_tx * l1.intrinsic_tx_gas * gas_price,
        c_batches=profile.t_batches * rollup.commit_cost,
    )


@dataclass(frozen=True)
class IntervalRecord:
    block: int
    price_wei: float
    cost: CostBreakdown
    cumulative: float
    blobs_posted: float
    batches: float
    backlog: float


@dataclass
class AttackTrajectory:
    rollup: str
    records: list[IntervalRecord] = field(default_factory=list)
    caveat: str = ""

    @property
    def blocks_sustained(self) -> int:
        return len(self.records)

    @property
    def total_spent(self) -> float:
        return self.records[-1].cumulative if self.records else 0.0

    def hourly_rate(self, l1: L1Params | None = None) -> float:
        """Mean spend per hour of L1 time, in wei."""
        l1 = l1 or L1Params()
        if not self.records:
            return 0.0
        return self.total_spent / (len(self.records) * l1.bt_l1) * 3600


CSV_COLUMNS = ("block", "price_wei", "c_blobs", "c_calldata", "c_txs", "c_batches", "total", "cumulative", "backlog")


def trajectory_rows(traj: AttackTrajectory) -> list[tuple]:
    return [
        (
            rec.block, rec.price_wei, rec.cost.c_blobs, rec.cost.c_calldata, rec.cost.c_txs,
            rec.cost.c_batches, rec.cost.total, rec.cumulative, rec.backlog,
        )
        for rec in traj.records
    ]


def simulate_dos(
    rollup: RollupConfig,
    l1: L1Params,
    scenario: AttackScenario,
    *,
    budget: float | None = None,
    escalation: bool = True,
    others_fill: bool = False,
    price_source: str = "lookback",
) -> AttackTrajectory:
    """Step the attack one L1 interval at a time until the next interval
    would exceed the budget or the duration is reached.

    ``price_source`` picks how a nonzero ``scenario.delay_blocks`` is applied:
    ``"lookback"`` charges the price from d blocks ago, ``"relay"`` charges a
    rate-limited oracle copy (see ``blob_market.RelayOracle``).
    """
    if price_source not in ("lookback", "relay"):
        raise ValueError(f"unknown price_source {price_source!r}")
    budget = scenario.budget if budget is None else budget
    duration = scenario.duration
    if math.isinf(budget) and duration is None:
        raise ValueError("need a finite budget or a duration")
    traj = AttackTrajectory(rollup.name, caveat=rollup.ordering_note)
    if budget <= 0:
        return traj
    market = bm.BlobMarketState(l1, others_fill=others_fill, decay=False)
    oracle = bm.RelayOracle(scenario.delay_blocks, l1)
    d = scenario.delay_blocks
    q = cumulative = backlog = 0.0
    n = 0
    limit = MAX_INTERVALS if duration is None else min(duration, MAX_INTERVALS)
    while n < limit:
        prof = interval_profile(rollup, l1, q)
        if price_source == "relay":
            price = oracle.observe(n, market.current_price)
        else:
            price = bm.delayed_view(market, d)
        cost = interval_cost(prof, price, rollup, l1, scenario.priority_fee)
        if cumulative + cost.total > budget:
            break
        cumulative += cost.total
        q = prof.q
        backlog = max(0.0, backlog + prof.t_blobs - l1.blob_limit)
        traj.records.append(IntervalRecord(n, price, cost, cumulative, prof.t_blobs, prof.t_batches, backlog))
        market = bm.step(market, prof.t_blobs if escalation else 0)
        n += 1
    return traj


def sustainable_blocks(
    rollup: RollupConfig, l1: L1Params, budget: float, delta: float = 0.2 * GWEI
) -> int:
    """Largest k whose cumulative cost over k intervals fits the budget."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    return simulate_dos(rollup, l1, AttackScenario(budget=budget, priority_fee=delta)).blocks_sustained


def escalates(rollup: RollupConfig, l1: L1Params) -> bool:
    """Whether the attacker's own blobs alone push the L1 price up."""
    return interval_profile(rollup, l1).t_blobs > l1.blob_target


@dataclass(frozen=True)
class DirectDelay:
    k_l1_exact: float
    k_l1: int
    k_l1_simulated: int

    @property
    def total(self) -> int:
        return 2 * self.k_l1


def direct_l1_delay(budget: float, l1: L1Params | None = None) -> DirectDelay:
    """Fill every blob slot for as long as the budget allows, then the
    price needs as many blocks again to cool down."""
    l1 = l1 or L1Params()
    if budget <= 0:
        raise ValueError("budget must be positive")
    u, rho0 = l1.u_blob, l1.rho_blob_0
    per_block = l1.blob_limit * l1.blob_gas_per_blob * rho0
    exact = math.log((u - 1) * budget / per_block + 1) / math.log(u)
    spent, k = 0.0, 0
    market = bm.BlobMarketState(l1, decay=False)
    while True:
        c = l1.blob_limit * l1.blob_gas_per_blob * market.current_price
        if spent + c > budget:
            break
        spent += c
        k += 1
        market = bm.step(market, l1.blob_limit)
    return DirectDelay(exact, math.floor(exact + 1e-9), k)


@dataclass(frozen=True)
class AmplifiedDelay:
    rollup: str
    susceptible: bool
    k_l1: int = 0
    t_batches: float = 0.0
    batches_posted_per_block: int = 0
    backlog_blobs_per_interval: float = 0.0
    total_k: int = 0
    amplification: float = 0.0
    direct_total: int = 0
    residual: float = 0.0
    delay_blocks: int = 0

    @property
    def uncapped_total(self) -> float:
        """Delay if every extra batch needed its own L1 block to clear."""
        return self.k_l1 * (1 + self.t_batches)

    @property
    def pending_batches(self) -> float:
        """Committed but not yet finalized batches when the attack stops."""
        return self.k_l1 * max(0.0, self.t_batches - self.batches_posted_per_block)


def _blob_spend(k: int, d: int, l1: L1Params) -> float:
    """Sum of charged blob prices over k intervals, per unit blob gas."""
    u, rho0 = l1.u_blob, l1.rho_blob_0
    if d <= 1:
        return rho0 * (u**k - 1) / (u - 1)
    m = k // d
    return d * rho0 * (u**m - 1) / (u - 1) + (k - m * d) * rho0 * u**m


def amplified_delay(
    rollup: RollupConfig,
    budget: float,
    l1: L1Params | None = None,
    delta: float = 0.2 * GWEI,
    d: int = 0,
) -> AmplifiedDelay:
    """Finality delay from stuffing blobs through the rollup.

    While the attack lasts other users top every L1 block up, so the price
    rises every block and only ``floor(blob_limit / batch)`` batches land
    per block. The rest pile up and drain at ``blob_limit`` blobs per block
    once the attack stops, on top of the usual cool-down.
    """
    l1 = l1 or L1Params()
    if budget <= 0:
        raise ValueError("budget must be positive")
    prof = interval_profile(rollup, l1)
    t_batches = prof.mean_batches
    direct = direct_l1_delay(budget, l1).total
    if t_batches <= 1:
        return AmplifiedDelay(rollup.name, False, t_batches=t_batches, direct_total=direct, delay_blocks=d)
    gas_price = rollup.l2_base_fee + rollup.priority_fee(delta)
    c_const = (
        prof.t_blobs * rollup.calldata_gas_per_blob * gas_price
        + prof.t_tx * l1.intrinsic_tx_gas * gas_price
        + t_batches * rollup.commit_cost
    )
    blob_gas = prof.t_blobs * l1.blob_gas_per_blob

    def spend(k: int) -> float:
        return blob_gas * _blob_spend(k, d, l1) + c_const * k

    lo, hi = 0, 1
    while spend(hi) <= budget:
        lo, hi = hi, hi * 2
        if hi > MAX_INTERVALS:
            raise ValueError("budget too large for this configuration")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if spend(mid) <= budget:
            lo = mid
        else:
            hi = mid
    k = lo
    posted = math.floor(l1.blob_limit / prof.batch_limit + 1e-12)
    beta = (t_batches - posted) * prof.batch_limit
    per_interval = 2 + max(0, math.ceil(beta / l1.blob_limit - 1e-12))
    total = k * per_interval
    return AmplifiedDelay(
        rollup=rollup.name,
        susceptible=True,
        k_l1=k,
        t_batches=t_batches,
        batches_posted_per_block=posted,
        backlog_blobs_per_interval=max(0.0, beta),
        total_k=total,
        amplification=total / direct,
        direct_total=direct,
        residual=budget - spend(k),
        delay_blocks=d,
    )


@dataclass(frozen=True)
class DelayReport:
    rollup: str
    delay_blocks: int
    amplified: AmplifiedDelay
    dos: AttackTrajectory
    horizon: int
    max_interval_cost: float

    @property
    def max_observed_interval_cost(self) -> float:
        return max((r.cost.total for r in self.dos.records), default=0.0)

    @property
    def sustainable(self) -> bool:
        """DoS reached the horizon with every interval under the cost cap."""
        return (
            self.dos.blocks_sustained >= self.horizon
            and self.max_observed_interval_cost <= self.max_interval_cost
        )


def delayed_variants(
    rollup: RollupConfig,
    budget: float,
    l1: L1Params | None = None,
    d: int = 20,
    delta: float = 0.2 * GWEI,
    horizon: int = 3000,
    max_interval_cost: float = 1 * ETH,
) -> DelayReport:
    """Rerun the DoS and amplified-delay attacks against a fee oracle that
    lags the L1 price by refreshing only every d blocks."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    l1 = l1 or L1Params()
    scenario = AttackScenario(priority_fee=delta, duration=horizon, delay_blocks=d)
    dos = simulate_dos(rollup, l1, scenario, price_source="relay")
    amp = amplified_delay(rollup, budget, l1, delta, d)
    return DelayReport(rollup.name, d, amp, dos, horizon, max_interval_cost)


def delayed_sweep(budget: float, d: int = 20, l1: L1Params | None = None, **kw) -> list[DelayReport]:
    return [delayed_variants(r, budget, l1, d, **kw) for r in builtin_registry()]


# ---------------------------------------------------------------------------
# per-batch loss ledger

_CENT = Decimal("0.01")
_ETH_DP = Decimal("0.0001")


def _d(x: float) -> Decimal:
    return Decimal(repr(x))


def _cents(x: Decimal) -> Decimal:
    return x.quantize(_CENT, rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class EconDamageInputs:
    """Attacker posts one blob-sized calldata tx per L2 block; each tx ends up
    in its own batch. Gas prices are in wei per gas."""

    tx_per_hour: int = 1200
    batches_per_hour: int = 1200
    intrinsic_gas: int = 21_000
    calldata_gas: int = 2_080_064
    da_gas_per_tx: int = 52_428
    l2_gas_price: float = 0.25 * GWEI
    # not stated directly; chosen so the hourly DA component is 0.0052 ETH
    da_gas_price: float = 0.0052 * ETH / (1200 * 52_428)
    commit_gas: int = 849_900
    l1_gas_price: float = 5 * GWEI
    eth_usd: float = 2500.0

    def __post_init__(self):
        for name in ("tx_per_hour", "batches_per_hour", "eth_usd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


SCROLL_PRESET = EconDamageInputs()


@dataclass(frozen=True)
class EconDamageReport:
    """ETH amounts are rounded to 4 decimals and USD to cents, line by line."""

    intrinsic_eth: Decimal
    calldata_eth: Decimal
    da_eth: Decimal
    intrinsic_usd: Decimal
    calldata_usd: Decimal
    da_usd: Decimal
    hourly_cost_usd: Decimal
    fee_per_batch_usd: Decimal
    commit_eth: Decimal
    commit_usd: Decimal
    da_per_batch_usd: Decimal
    outlay_per_batch_usd: Decimal
    loss_per_batch_usd: Decimal
    loss_per_hour_usd: Decimal
    batches_per_hour: int

    @property
    def hourly_cost_eth(self) -> Decimal:
        return self.intrinsic_eth + self.calldata_eth + self.da_eth

    def lines(self) -> list[tuple[str, str]]:
        return [
            ("intrinsic_eth_per_hour", f"{self.intrinsic_eth:.4f}"),
            ("calldata_eth_per_hour", f"{self.calldata_eth:.4f}"),
            ("da_eth_per_hour", f"{self.da_eth:.4f}"),
            ("intrinsic_usd_per_hour", f"{self.intrinsic_usd:.2f}"),
            ("calldata_usd_per_hour", f"{self.calldata_usd:.2f}"),
            ("da_usd_per_hour", f"{self.da_usd:.2f}"),
            ("attacker_cost_usd_per_hour", f"{self.hourly_cost_usd:.2f}"),
            ("fees_collected_usd_per_batch", f"{self.fee_per_batch_usd:.2f}"),
            ("commit_eth_per_batch", f"{self.commit_eth}"),
            ("commit_usd_per_batch", f"{self.commit_usd:.2f}"),
            ("da_usd_per_batch", f"{self.da_per_batch_usd:.2f}"),
            ("outlay_usd_per_batch", f"{self.outlay_per_batch_usd:.2f}"),
            ("loss_usd_per_batch", f"{self.loss_per_batch_usd:.2f}"),
            ("loss_usd_per_hour", f"{self.loss_per_hour_usd:.2f}"),
        ]


def economic_damage(p: EconDamageInputs = SCROLL_PRESET) -> EconDamageReport:
    """Fees the rollup collects per batch against what it pays L1 to
    commit that batch and publish its data."""
    wei = Decimal(10) ** 18
    rate = _d(p.eth_usd)

    def hourly_eth(gas: int, price: float) -> Decimal:
        return (Decimal(p.tx_per_hour) * gas * _d(price) / wei).quantize(_ETH_DP, rounding=ROUND_HALF_UP)

    intrinsic = hourly_eth(p.intrinsic_gas, p.l2_gas_price)
    calldata = hourly_eth(p.calldata_gas, p.l2_gas_price)
    da = hourly_eth(p.da_gas_per_tx, p.da_gas_price)
    i_usd, c_usd, d_usd = (_cents(x * rate) for x in (intrinsic, calldata, da))
    hourly_usd = i_usd + c_usd + d_usd
    batches = Decimal(p.batches_per_hour)
    fee_per_batch = _cents(hourly_usd / batches)
    commit_eth = Decimal(p.commit_gas) * _d(p.l1_gas_price) / wei
    commit_usd = _cents(commit_eth * rate)
    da_per_batch = _cents(d_usd / batches)
    outlay = commit_usd + da_per_batch
    loss = outlay - fee_per_batch
    return EconDamageReport(
        intrinsic, calldata, da, i_usd, c_usd, d_usd, hourly_usd, fee_per_batch,
        commit_eth, commit_usd, da_per_batch, outlay, loss, _cents(loss * batches), p.batches_per_hour,
    )


# ---------------------------------------------------------------------------
# attacker cost with an L2-side blob base fee


@dataclass(frozen=True)
class MitigationRecord:
    block: int
    l1_price: float
    l2_da_price: float
    cost_plain: float
    cost_mitigated: float
    cumulative_plain: float
    cumulative_mitigated: float


def simulate_mitigated(
    rollup: RollupConfig,
    l1: L1Params,
    duration: int,
    delta: float = 0.2 * GWEI,
    utilization_target: float = 0.5,
    adjustment_coefficient: float = 1 / 8,
) -> list[MitigationRecord]:
    """Attacker cost per interval with and without an L2 blob base fee that
    updates every L2 block and is floored at the L1 blob price. The attacker
    fills the per-block DA cap in every L2 block."""
    from .tfm import MitigatedDaPrice, mitigated_da_step

    if duration < 0:
        raise ValueError("duration must be nonnegative")
    cap_blobs = rollup.effective_block_limit or rollup.max_blobs_per_batch
    cap = cap_blobs * l1.blob_gas_per_blob
    per_block_blobs = min(cap_blobs, rollup.max_blobs_per_batch)
    used = per_block_blobs * l1.blob_gas_per_blob
    blocks_per_interval = max(1, round(l1.bt_l1 / rollup.bt_l2))
    market = bm.BlobMarketState(l1, decay=False)
    da = MitigatedDaPrice(l1.rho_blob_0, utilization_target, adjustment_coefficient)
    q = cum_plain = cum_mit = 0.0
    out = []
    for n in range(duration):
        prof = interval_profile(rollup, l1, q)
        q = prof.q
        plain = interval_cost(prof, market.current_price, rollup, l1, delta)
        # charge the blob term at the L2 price in force for each L2 block
        blob_cost = 0.0
        for _ in range(blocks_per_interval):
            blob_cost += prof.t_blobs / blocks_per_interval * l1.gas_per_blob_calldata * da.rho_l2_blob
            da = mitigated_da_step(da, used, cap, market.current_price)
        mitigated = plain.total - plain.c_blobs + blob_cost
        cum_plain += plain.total
        cum_mit += mitigated
        out.append(MitigationRecord(n, market.current_price, da.rho_l2_blob, plain.total, mitigated, cum_plain, cum_mit))
        market = bm.step(market, prof.t_blobs)
    return out
