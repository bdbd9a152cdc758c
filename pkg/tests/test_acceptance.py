"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line."""
import random

from rollup_lab import blob_market as bm
from rollup_lab import calldata as cd
from rollup_lab import da_attacks as da
from rollup_lab import prover_econ as pe
from rollup_lab import tfm
from rollup_lab.units import ETH, AttackScenario, L1Params, all_configurations, builtin_registry, eth, get_rollup, gwei

L1 = L1Params()


def within(x, target, rel):
    return abs(x - target) <= rel * abs(target)


def test_1_direct_l1_finality_delay(criterion):
    parts, ok = [], True
    for b, want in ((1, 364), (10, 398), (100, 430)):
        res = da.direct_l1_delay(eth(b))
        ok &= abs(res.total - want) <= 2 and abs(res.k_l1 - res.k_l1_simulated) <= 1
        parts.append(f"{b} ETH -> {res.total} (want {want}, sim k={res.k_l1_simulated})")
    criterion(1, ok, "; ".join(parts))


def test_2_optimism_dos_hour(criterion):
    t = da.simulate_dos(get_rollup("optimism-throttled"), L1, AttackScenario(duration=300))
    total = t.total_spent / ETH
    criterion(2, t.blocks_sustained == 300 and within(total, 0.87, 0.10), f"300 intervals cost {total:.4f} ETH (want 0.87 +-10%)")


def test_3_sustainability_thresholds(criterion):
    scroll = get_rollup("scroll")
    k1 = da.sustainable_blocks(scroll, L1, eth(2))
    k2 = da.sustainable_blocks(scroll, L1.with_floor(gwei(0.1)), eth(2))
    ok = within(k1, 150, 0.15) and within(k2, 25, 0.20)
    criterion(3, ok, f"2 ETH sustains {k1} blocks at 1 wei (want 150 +-15%), {k2} at 0.1 Gwei floor (want 25 +-20%)")


def test_4_indefinite_dos_set(criterion):
    linear, rates = set(), {}
    for r in all_configurations():
        t = da.simulate_dos(r, L1, AttackScenario(duration=300))
        prices = {rec.price_wei for rec in t.records}
        worst = max(rec.cost.total for rec in t.records)
        mean = t.total_spent / len(t.records)
        straight = all(abs(rec.cumulative - (rec.block + 1) * mean) <= worst for rec in t.records)
        if len(prices) == 1 and straight:
            linear.add(r.name)
            rates[r.name] = t.hourly_rate(L1) / ETH
    want = {"linea", "optimism-throttled", "base-throttled"}
    ok = linear == want and all(0.8 <= v <= 2.7 for v in rates.values())
    detail = ", ".join(f"{k} {v:.3f} ETH/h" for k, v in sorted(rates.items()))
    criterion(4, ok, f"linear set {sorted(linear)}: {detail} (want [0.8, 2.7])")


def test_5_amplified_finality_delay(criterion):
    want = {"scroll": 748, "zksync-era": 588, "arbitrum": 579, "optimism": 585, "base": 1086}
    ok, parts = True, []
    for name, target in want.items():
        a = da.amplified_delay(get_rollup(name), eth(10))
        ok &= a.susceptible and within(a.total_k, target, 0.15) and a.amplification >= 1.45
        parts.append(f"{name} {a.total_k} ({a.amplification:.2f}x)")
    base = da.amplified_delay(get_rollup("base"), eth(10))
    ok &= within(base.amplification, 2.73, 0.15)
    linea = da.amplified_delay(get_rollup("linea"), eth(10))
    ok &= not linea.susceptible
    parts.append("linea not susceptible" if not linea.susceptible else "linea susceptible")
    criterion(5, ok, "; ".join(parts))


def test_6_delayed_update_variant(criterion):
    reports = da.delayed_sweep(eth(10), d=20)
    amps = {r.rollup: r.amplified.amplification for r in reports if r.amplified.susceptible}
    lo, hi = min(amps, key=amps.get), max(amps, key=amps.get)
    span_ok = within(amps[lo], 4.03, 0.20) and within(amps[hi], 21.11, 0.20)
    order_ok = lo == "scroll" and hi == "zksync-era"
    sustain_ok = all(r.sustainable for r in reports)
    detail = ", ".join(f"{k} {v:.2f}x" for k, v in amps.items())
    criterion(
        6,
        span_ok and order_ok and sustain_ok,
        f"{detail}; min {lo}, max {hi} (want scroll ~4.03, zksync-era ~21.11); "
        f"3000-block DoS sustainable for all six: {sustain_ok}",
    )


def test_7_prover_economics(criterion):
    ok, worst_pl, worst_delay = True, 0.0, 0.0
    for name, block in pe.ATTACK_BLOCKS.items():
        rep = block.report()
        pl_err = abs(rep.profit_loss_usd - block.published_pl)
        delay_err = abs(rep.latency_delay_s - block.published_delay_s) / abs(block.published_delay_s)
        worst_pl, worst_delay = max(worst_pl, pl_err), max(worst_delay, delay_err)
        ok &= pl_err <= 0.02 and delay_err <= 0.005
    slow = pe.ATTACK_BLOCKS["modexp"].report().slowdown
    ok &= within(slow, 94, 0.02)
    criterion(7, ok, f"9 rows: max P/L error ${worst_pl:.4f}, max delay error {worst_delay:.3%}; MODEXP {slow:.1f}x baseline")


def test_8_normal_block_baseline(criterion):
    cost = pe.ProverBaseline().median_cost()
    criterion(8, abs(cost - 0.45) <= 0.01, f"median cost ${cost:.4f} (want 0.45 +-0.01)")


def test_9_scroll_economic_damage(criterion):
    r = da.economic_damage()
    ok = (
        str(r.intrinsic_eth) == "0.0063"
        and str(r.calldata_eth) == "0.6240"
        and str(r.loss_per_batch_usd) == "9.31"
        and str(r.loss_per_hour_usd) == "11172.00"
    )
    criterion(
        9, ok,
        f"intrinsic {r.intrinsic_eth} ETH, calldata {r.calldata_eth} ETH, "
        f"loss ${r.loss_per_batch_usd}/batch, ${r.loss_per_hour_usd}/hour",
    )


def test_10_property_suite(criterion):
    rng = random.Random(0)
    checks = {}

    ok = True
    for _ in range(2000):
        res = tfm.TxResources(*(rng.uniform(0, 1e12) for _ in range(5)))
        q = tfm.tx_fee(res, rng.uniform(0, 1e10), rng.uniform(0, 1e10), rng.uniform(0, 4))
        ok &= q.total - (q.l2_fee + q.l1_fee) == 0
        c = da.interval_cost(
            da.IntervalProfile(rng.uniform(0, 100), rng.uniform(0, 500), rng.uniform(0, 20), 0, 1, 1),
            rng.uniform(0, 1e12), rng.choice(builtin_registry()), L1, rng.uniform(0, 1e9),
        )
        ok &= c.total - (c.c_blobs + c.c_calldata + c.c_txs + c.c_batches) == 0
    checks["sum identities"] = ok

    m = tfm.ResourceMarket((1.0, 2.0, 3.0, 4.0), (10.0, 5.0, 7.0, 1.0), (20.0, 10.0, 14.0, 2.0))
    fixed, start = m, m.prices
    ok = True
    for _ in range(10_000):
        m = tfm.advance_market(m, [rng.uniform(0, lim) for lim in m.limits])
        ok &= all(p > 0 for p in m.prices)
        fixed = tfm.advance_market(fixed, fixed.targets)
    ok &= all(abs(a - b) / a < 1e-12 for a, b in zip(start, fixed.prices))
    checks["mdtfm fixed point and positivity"] = ok

    s = bm.BlobMarketState(decay=False)
    ok = True
    for k in range(1, 601):
        s = bm.step(s, 9)
        ok &= abs(s.current_price - bm.closed_form_price(k)) / bm.closed_form_price(k) < 1e-9
    checks["blob closed form"] = ok

    ok = True
    for seed in range(50):
        size, ratio = rng.randrange(0, 4096), rng.random()
        a, b = cd.gen_payload(size, ratio, seed), cd.gen_payload(size, ratio, seed)
        ok &= a.data == b.data
        x, y = a.data, cd.gen_payload(rng.randrange(0, 4096), rng.random(), seed + 1000).data
        ok &= cd.calldata_gas(x + y, cd.PECTRA) == cd.calldata_gas(x, cd.PECTRA) + cd.calldata_gas(y, cd.PECTRA)
    checks["payload determinism and gas linearity"] = ok

    ratios = [cd.compression_ratio(cd.gen_payload(cd.BLOB_BYTES, 0.03, s)) for s in range(100)]
    checks["3% payload ratio > 0.95"] = min(ratios) > 0.95

    failed = [k for k, v in checks.items() if not v]
    criterion(10, not failed, f"{len(checks) - len(failed)}/{len(checks)} properties hold; min ratio {min(ratios):.4f}"
              + (f"; failed: {failed}" if failed else ""))
