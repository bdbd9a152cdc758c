"""Fee pricing: the generic rollup fee, a floored L2 DA price and a
multidimensional resource market."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

DIMENSIONS = ("gas", "DA", "proving", "fixed")
UPDATE_COEFFICIENT = 1 / 8


@dataclass(frozen=True)
class TxResources:
    g: float = 0.0  # L2 gas
    b_tx: float = 0.0  # DA bytes
    c_tx: float = 0.0  # commit share, wei
    s_tx: float = 0.0  # settlement share, wei
    delta: float = 0.0  # priority fee, wei per gas

    def __post_init__(self):
        for name in ("g", "b_tx", "c_tx", "s_tx", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class PriceQuote:
    l2_fee: float
    l1_fee: float

    @property
    def total(self) -> float:
        return self.l2_fee + self.l1_fee


def l2_fee(rho_l2: float, delta: float, g: float) -> float:
    """Execution fee: (base fee + tip) per gas times gas."""
    return (rho_l2 + delta) * g


def l1_fee(rho_blob: float, scalar: float, b_tx: float, c_tx: float = 0.0, s_tx: float = 0.0) -> float:
    """DA fee plus the transaction's share of commit and settlement costs."""
    return rho_blob * scalar * b_tx + c_tx + s_tx


def tx_fee(res: TxResources, rho_l2: float, rho_blob: float, scalar: float = 1.0) -> PriceQuote:
    return PriceQuote(
        l2_fee=l2_fee(rho_l2, res.delta, res.g),
        l1_fee=l1_fee(rho_blob, scalar, res.b_tx, res.c_tx, res.s_tx),
    )


@dataclass(frozen=True)
class MitigatedDaPrice:
    """L2-side blob base fee that tracks DA utilization per L2 block and
    never falls below the L1 blob fee."""

    rho_l2_blob: float
    utilization_target: float = 0.5
    adjustment_coefficient: float = 1 / 8

    def __post_init__(self):
        if not 0 < self.utilization_target <= 1:
            raise ValueError("utilization_target must be in (0, 1]")
        if self.adjustment_coefficient <= 0:
            raise ValueError("adjustment_coefficient must be positive")
        if self.rho_l2_blob < 0:
            raise ValueError("rho_l2_blob must be nonnegative")

    @property
    def full_use_ratio(self) -> float:
        t = self.utilization_target
        return 1 + self.adjustment_coefficient * (1 - t) / t


def mitigated_da_step(
    state: MitigatedDaPrice, da_used: float, da_capacity: float, rho_blob_l1: float
) -> MitigatedDaPrice:
    if da_used < 0:
        raise ValueError("da_used must be nonnegative")
    if da_capacity <= 0:
        raise ValueError("da_capacity must be positive")
    target = state.utilization_target * da_capacity
    factor = 1 + state.adjustment_coefficient * (da_used - target) / target
    price = max(state.rho_l2_blob * factor, rho_blob_l1)
    return replace(state, rho_l2_blob=price)


@dataclass(frozen=True)
class ResourceMarket:
    """Per-dimension prices, targets and hard limits."""

    prices: tuple[float, ...]
    targets: tuple[float, ...]
    limits: tuple[float, ...]
    labels: tuple[str, ...] = DIMENSIONS

    def __post_init__(self):
        m = len(self.labels)
        if not (len(self.prices) == len(self.targets) == len(self.limits) == m):
            raise ValueError(f"prices, targets and limits must all have length {m}")
        for i, label in enumerate(self.labels):
            if not self.prices[i] > 0:
                raise ValueError(f"price for {label} must be positive")
            if not 0 < self.targets[i] <= self.limits[i]:
                raise ValueError(f"need 0 < target <= limit for {label}")

    @property
    def m(self) -> int:
        return len(self.labels)


def mdtfm_update(market: ResourceMarket, usage: Sequence[float]) -> tuple[float, ...]:
    """Element-wise price update toward the per-dimension target."""
    if len(usage) != market.m:
        raise ValueError(f"usage must have length {market.m}")
    out = []
    for p, used, target, label in zip(market.prices, usage, market.targets, market.labels):
        if target == 0:
            raise ValueError(f"degenerate target for dimension {label}")
        if used < 0:
            raise ValueError(f"negative usage for dimension {label}")
        out.append(p * (1 + UPDATE_COEFFICIENT * (used - target) / target))
    return tuple(out)


def advance_market(market: ResourceMarket, usage: Sequence[float]) -> ResourceMarket:
    return replace(market, prices=mdtfm_update(market, usage))


def mdtfm_build_block(
    candidates: Sequence[tuple[Sequence[float], float]], market: ResourceMarket
) -> list[int]:
    """Greedy 0/1 inclusion by bid per unit of priced resource, never
    exceeding any limit. Ties go to the lower candidate index."""
    m = market.m

    def density(j: int) -> float:
        col, bid = candidates[j]
        cost = sum(p * a for p, a in zip(market.prices, col))
        return bid / cost if cost > 0 else float("inf")

    for j, (col, bid) in enumerate(candidates):
        if len(col) != m:
            raise ValueError(f"candidate {j} has {len(col)} dimensions, expected {m}")
        if bid < 0 or any(a < 0 for a in col):
            raise ValueError(f"candidate {j} has a negative entry")

    order = sorted(range(len(candidates)), key=lambda j: (-density(j), j))
    used = [0.0] * m
    x = [0] * len(candidates)
    for j in order:
        col = candidates[j][0]
        if all(used[i] + col[i] <= market.limits[i] for i in range(m)):
            for i in range(m):
                used[i] += col[i]
            x[j] = 1
    return x


def block_usage(candidates: Sequence[tuple[Sequence[float], float]], x: Sequence[int], m: int = 4) -> list[float]:
    """A·x for an inclusion vector."""
    return [sum(candidates[j][0][i] for j in range(len(x)) if x[j]) for i in range(m)]
