"""Units, the rollup parameter registry and scenario files.

All monetary amounts are floats denominated in wei. Gas quantities are
floats in gas units. Helpers below convert to and from Gwei, ETH and USD.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

WEI = 1.0
GWEI = 1e9
ETH = 1e18

BLOB_BYTES = 131_072  # 2**17
PRE_PECTRA_BLOB_CALLDATA_GAS = 2.08e6
PECTRA_BLOB_FILL_GAS = 5_124_950.0


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration input."""

    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field_name = field_name


def gwei(x: float) -> float:
    return x * GWEI


def eth(x: float) -> float:
    return x * ETH


def to_gwei(wei: float) -> float:
    return wei / GWEI


def to_eth(wei: float) -> float:
    return wei / ETH


def to_usd(wei: float, eth_usd: float) -> float:
    return wei / ETH * eth_usd


def from_usd(usd: float, eth_usd: float) -> float:
    return usd / eth_usd * ETH


@dataclass(frozen=True)
class L1Params:
    bt_l1: float = 12.0
    blob_target: int = 6
    blob_limit: int = 9
    u_blob: float = 1.15
    rho_blob_0: float = 1.0
    blob_floor: float = 0.0
    # constant of the per-interval cost equations (blob fee and calldata terms)
    gas_per_blob_calldata: float = PRE_PECTRA_BLOB_CALLDATA_GAS
    gas_per_blob_fill: float = PECTRA_BLOB_FILL_GAS
    intrinsic_tx_gas: float = 21_000.0
    blob_gas_per_blob: float = float(BLOB_BYTES)

    def __post_init__(self):
        if self.bt_l1 <= 0:
            raise ConfigError("bt_l1 must be positive", "bt_l1")
        if not self.blob_target < self.blob_limit:
            raise ConfigError("blob_target must be below blob_limit", "blob_target")
        if self.u_blob <= 1:
            raise ConfigError("u_blob must exceed 1", "u_blob")
        if self.blob_floor < 0:
            raise ConfigError("blob_floor must be nonnegative", "blob_floor")
        if self.rho_blob_0 < self.blob_floor:
            raise ConfigError("rho_blob_0 must be at least blob_floor", "rho_blob_0")

    def with_floor(self, floor_wei: float) -> "L1Params":
        """Same parameters with a blob price floor that is also the start price."""
        return replace(self, blob_floor=floor_wei, rho_blob_0=max(self.rho_blob_0, floor_wei))


@dataclass(frozen=True)
class RollupConfig:
    """Per-rollup parameters.

    ``block_blob_limit`` is the per-L2-block DA cap in blobs (``None`` when
    the rollup has none). ``calldata_gas_per_blob`` is the L2 gas an attacker
    pays to occupy one blob with incompressible calldata under the fee
    schedule the rollup ran at the time the registry was frozen.
    """

    name: str
    bt_l2: float
    max_blobs_per_batch: float
    commit_cost: float
    l2_base_fee: float
    block_blob_limit: float | None = None
    tx_to_fill: float = 1
    scalar_blob: float = 1.0
    calldata_gas_per_blob: float = PRE_PECTRA_BLOB_CALLDATA_GAS
    ignores_priority_fee: bool = False
    da_cap_blobs_per_s: float | None = None
    throttle_block_bytes: int | None = None
    throttle_tx_bytes: int | None = None
    ordering_note: str = ""

    def __post_init__(self):
        if self.bt_l2 <= 0:
            raise ConfigError("bt_l2 must be positive", "bt_l2")
        if self.max_blobs_per_batch <= 0:
            raise ConfigError("max_blobs_per_batch must be positive", "max_blobs_per_batch")
        if self.tx_to_fill < 1:
            raise ConfigError("tx_to_fill must be at least 1", "tx_to_fill")
        if self.block_blob_limit is not None:
            if self.block_blob_limit <= 0:
                raise ConfigError("block_blob_limit must be positive", "block_blob_limit")
            if self.block_blob_limit > self.max_blobs_per_batch:
                raise ConfigError(
                    "block_blob_limit cannot exceed max_blobs_per_batch", "block_blob_limit"
                )
        for name in ("commit_cost", "l2_base_fee", "scalar_blob", "calldata_gas_per_blob"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative", name)
        if self.da_cap_blobs_per_s is not None and self.da_cap_blobs_per_s <= 0:
            raise ConfigError("da_cap_blobs_per_s must be positive", "da_cap_blobs_per_s")

    @property
    def effective_block_limit(self) -> float | None:
        """Per-L2-block DA cap after applying any throughput cap."""
        limit = self.block_blob_limit
        if self.da_cap_blobs_per_s is not None:
            cap = self.da_cap_blobs_per_s * self.bt_l2
            limit = cap if limit is None else min(limit, cap)
        return limit

    def priority_fee(self, delta: float) -> float:
        return 0.0 if self.ignores_priority_fee else delta

    @property
    def has_throttle_mode(self) -> bool:
        return self.throttle_block_bytes is not None

    def throttled(self) -> "RollupConfig":
        """The configuration while the sequencer's DA throttle is active."""
        if not self.has_throttle_mode:
            raise ConfigError(f"{self.name} has no throttle mode", "throttle_block_bytes")
        block_bytes = self.throttle_block_bytes
        tx_bytes = self.throttle_tx_bytes or block_bytes
        return replace(
            self,
            name=f"{self.name}-throttled",
            block_blob_limit=block_bytes / BLOB_BYTES,
            tx_to_fill=math.ceil(block_bytes / tx_bytes),
            throttle_block_bytes=None,
            throttle_tx_bytes=None,
        )


# Values frozen as of the data collection date (May 2025).
_REGISTRY = (
    RollupConfig(
        name="scroll", bt_l2=3.0, max_blobs_per_batch=6,
        commit_cost=gwei(75_840), l2_base_fee=gwei(0.039),
        calldata_gas_per_blob=PRE_PECTRA_BLOB_CALLDATA_GAS,
    ),
    RollupConfig(
        name="linea", bt_l2=2.0, max_blobs_per_batch=6, block_blob_limit=1, tx_to_fill=2,
        commit_cost=gwei(400_030), l2_base_fee=gwei(0.083),
        calldata_gas_per_blob=PRE_PECTRA_BLOB_CALLDATA_GAS,
    ),
    RollupConfig(
        name="zksync-era", bt_l2=1.0, max_blobs_per_batch=1,
        commit_cost=gwei(232_524), l2_base_fee=gwei(0.045),
        calldata_gas_per_blob=10.0 * BLOB_BYTES, ignores_priority_fee=True,
        ordering_note="custom metering: pubdata at 10 gas per byte; tips unused",
    ),
    RollupConfig(
        name="arbitrum", bt_l2=0.25, max_blobs_per_batch=3,
        commit_cost=gwei(168_858), l2_base_fee=gwei(0.014),
        calldata_gas_per_blob=PRE_PECTRA_BLOB_CALLDATA_GAS, da_cap_blobs_per_s=1.2,
        ordering_note=(
            "FCFS ordering and the 7M gas/s speed limit make the DoS attack much "
            "harder; DA throughput capped at the speed-limit-sustainable rate"
        ),
    ),
    RollupConfig(
        name="optimism", bt_l2=2.0, max_blobs_per_batch=6, block_blob_limit=2, tx_to_fill=2,
        commit_cost=gwei(21_000), l2_base_fee=gwei(0.012),
        calldata_gas_per_blob=PECTRA_BLOB_FILL_GAS,
        throttle_block_bytes=21_000, throttle_tx_bytes=300,
    ),
    RollupConfig(
        name="base", bt_l2=2.0, max_blobs_per_batch=7,
        commit_cost=gwei(21_000), l2_base_fee=gwei(0.002),
        calldata_gas_per_blob=PECTRA_BLOB_FILL_GAS,
        throttle_block_bytes=21_000, throttle_tx_bytes=300,
    ),
)

_BY_NAME = MappingProxyType({r.name: r for r in _REGISTRY})
_ALIASES = {"era": "zksync-era", "zksync": "zksync-era", "op": "optimism"}


def builtin_registry() -> list[RollupConfig]:
    """The six built-in rollups, in table order."""
    return list(_REGISTRY)


def get_rollup(name: str) -> RollupConfig:
    """Look up a rollup; a ``-throttled`` suffix selects its throttle mode."""
    key = name.strip().lower()
    throttled = key.endswith("-throttled")
    if throttled:
        key = key[: -len("-throttled")]
    key = _ALIASES.get(key, key)
    if key not in _BY_NAME:
        raise KeyError(f"unknown rollup {name!r}; known: {', '.join(_BY_NAME)}")
    cfg = _BY_NAME[key]
    return cfg.throttled() if throttled else cfg


def all_configurations() -> list[RollupConfig]:
    """Registry rollups plus the throttle-mode variants."""
    out = builtin_registry()
    out += [r.throttled() for r in _REGISTRY if r.has_throttle_mode]
    return out


@dataclass(frozen=True)
class AttackScenario:
    budget: float = math.inf
    priority_fee: float = gwei(0.2)
    duration: int | None = None
    delay_blocks: int = 0
    eth_usd: float = 2500.0
    rollup: str | None = None
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.budget > 0:
            raise ConfigError("budget must be positive", "budget_eth")
        if self.priority_fee < 0:
            raise ConfigError("priority fee must be nonnegative", "priority_fee_gwei")
        if self.duration is not None and self.duration < 0:
            raise ConfigError("duration must be nonnegative", "duration_blocks")
        if self.delay_blocks < 0:
            raise ConfigError("delay must be nonnegative", "delay_blocks")
        if self.eth_usd <= 0:
            raise ConfigError("eth_usd must be positive", "eth_usd")

    def resolve(self) -> tuple[RollupConfig | None, L1Params]:
        """Apply ``overrides`` to the named rollup and to default L1 parameters."""
        rollup = get_rollup(self.rollup) if self.rollup else None
        l1 = L1Params()
        r_names = {f.name for f in fields(RollupConfig)}
        l1_names = {f.name for f in fields(L1Params)}
        r_kw = {k: v for k, v in self.overrides.items() if k in r_names}
        l1_kw = {k: v for k, v in self.overrides.items() if k in l1_names and k not in r_names}
        if r_kw:
            if rollup is None:
                raise ConfigError("rollup overrides given without a rollup", next(iter(r_kw)))
            rollup = replace(rollup, **r_kw)
        if l1_kw:
            l1 = replace(l1, **l1_kw)
        return rollup, l1


_SCENARIO_KEYS = {"budget_eth", "priority_fee_gwei", "duration_blocks", "delay_blocks", "eth_usd", "rollup"}


def _parse_value(raw: str) -> Any:
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    try:
        return int(raw.replace("_", ""))
    except ValueError:
        pass
    try:
        return float(raw.replace("_", ""))
    except ValueError:
        return raw


def parse_scenario(text: str) -> AttackScenario:
    values: dict[str, Any] = {}
    overrides: dict[str, Any] = {}
    allowed_override = {f.name for f in fields(RollupConfig)} | {f.name for f in fields(L1Params)}
    allowed_override.discard("name")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        value = _parse_value(raw)
        if key.startswith("override."):
            name = key[len("override."):]
            if name not in allowed_override:
                raise ConfigError(f"line {lineno}: unknown override field {name!r}", key)
            target = overrides
        elif key in _SCENARIO_KEYS:
            name, target = key, values
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        if name in target:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key)
        target[name] = value

    def number(key: str) -> float | None:
        v = values.get(key)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key} must be a number", key)
        return float(v)

    kwargs: dict[str, Any] = {"overrides": MappingProxyType(dict(sorted(overrides.items())))}
    if (b := number("budget_eth")) is not None:
        kwargs["budget"] = eth(b)
    if (p := number("priority_fee_gwei")) is not None:
        kwargs["priority_fee"] = gwei(p)
    if (d := number("duration_blocks")) is not None:
        kwargs["duration"] = int(d)
    if (d := number("delay_blocks")) is not None:
        kwargs["delay_blocks"] = int(d)
    if (e := number("eth_usd")) is not None:
        kwargs["eth_usd"] = e
    if "rollup" in values:
        kwargs["rollup"] = str(values["rollup"])
    scenario = AttackScenario(**kwargs)
    if scenario.rollup is not None:
        try:
            get_rollup(scenario.rollup)
        except KeyError as exc:
            raise ConfigError(str(exc), "rollup") from None
    try:
        scenario.resolve()
    except TypeError as exc:  # pragma: no cover - replace() rejects bad kwargs
        raise ConfigError(str(exc)) from None
    return scenario


def load_scenario(path: str | Path) -> AttackScenario:
    """Read a key-value scenario file; absent fields take their defaults."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text)
