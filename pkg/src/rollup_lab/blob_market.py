"""L1 blob base-fee trajectory under a threshold update rule."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .units import L1Params


@dataclass(frozen=True)
class BlobMarketState:
    """Immutable snapshot; ``step`` returns a new state.

    ``history`` holds the price after every step taken, so its length equals
    the number of steps. ``others_fill`` makes any attacker blob trigger the
    full increase, as if other users top the block up to the limit.
    ``decay_factor`` defaults to the exact inverse of one increase.
    """

    params: L1Params = field(default_factory=L1Params)
    current_price: float | None = None
    history: tuple[float, ...] = ()
    others_fill: bool = False
    decay: bool = True
    decay_factor: float | None = None

    def __post_init__(self):
        if self.current_price is None:
            object.__setattr__(self, "current_price", self.params.rho_blob_0)
        if self.current_price < self.params.blob_floor:
            raise ValueError("current_price below blob_floor")

    @property
    def steps(self) -> int:
        return len(self.history)


def step(state: BlobMarketState, blobs_posted: float) -> BlobMarketState:
    if blobs_posted < 0:
        raise ValueError("blobs_posted must be nonnegative")
    p = state.params
    price = state.current_price
    if blobs_posted > p.blob_target or (state.others_fill and blobs_posted >= 1):
        price *= p.u_blob
    elif blobs_posted == 0 and state.decay:
        price *= state.decay_factor if state.decay_factor is not None else 1 / p.u_blob
    price = max(price, p.blob_floor)
    return replace(state, current_price=price, history=state.history + (price,))


def run(state: BlobMarketState, posted: list[float]) -> BlobMarketState:
    for b in posted:
        state = step(state, b)
    return state


def closed_form_price(k: float, params: L1Params | None = None) -> float:
    """Price after k consecutive increases from the start price."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    params = params or L1Params()
    return params.rho_blob_0 * params.u_blob**k


def delayed_view(state: BlobMarketState, d: int) -> float:
    """The price as seen d blocks ago; the start price if history is shorter."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    if d == 0:
        return state.current_price
    idx = len(state.history) - 1 - d
    if idx < 0:
        return state.params.rho_blob_0
    return state.history[idx]


@dataclass
class RelayOracle:
    """Rollup-side copy of the blob price, refreshed every ``d`` blocks.

    Each refresh moves the copy one update step toward the true L1 price,
    never past it. With d of 0 or 1 the copy is the L1 price itself.
    """

    d: int
    params: L1Params = field(default_factory=L1Params)
    price: float | None = None

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        if self.price is None:
            self.price = self.params.rho_blob_0

    def observe(self, n: int, true_price: float) -> float:
        """Price charged at block ``n`` given the current L1 price."""
        if self.d <= 1:
            self.price = true_price
        elif n > 0 and n % self.d == 0:
            u = self.params.u_blob
            if true_price > self.price:
                self.price = min(self.price * u, true_price)
            elif true_price < self.price:
                self.price = max(self.price / u, true_price)
        return self.price


def relayed_price(n: int, d: int, params: L1Params | None = None) -> float:
    """Price charged at block n by a fee oracle that refreshes every d blocks
    and moves at most one update step per refresh, while the true L1 price
    keeps escalating every block. d of 0 or 1 tracks the L1 price directly."""
    if n < 0 or d < 0:
        raise ValueError("n and d must be nonnegative")
    params = params or L1Params()
    steps = n if d <= 1 else n // d
    return max(params.rho_blob_0 * params.u_blob**steps, params.blob_floor)
