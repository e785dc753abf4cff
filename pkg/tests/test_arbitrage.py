import pytest
from hypothesis import given
from hypothesis import strategies as st

from crossmarket.arbitrage import (ArbState, Arbitrageur, ArbView, basket_shares,
                                   evaluate_and_act, expiry_liquidation, settle_at_expiry,
                                   size_position)
from crossmarket.book import Side

SHARES = [50, 40, 60, 30, 50]
PRICES = [10.0, 20.0, 30.0, 40.0, 50.0]
M0 = 6800.0
FUT = 5
KW = dict(shares=SHARES, m0=M0, margin_rate=0.18, safety_ratio=0.60, multiplier=300, lot=100,
          futures_instrument=FUT)


def view(f, vf, wealth=10_000_000.0, pos=0, holdings=(0,) * 5):
    return ArbView(f, vf, wealth, pos, list(holdings), PRICES)


def oracle_size(wealth, f, margin_rate=0.18, safety=0.60, cap=10_000):
    best = 0
    for n in range(1, cap):
        basket = basket_shares(n, SHARES, M0, 300, 100)
        cost = sum(q * p for q, p in zip(basket, PRICES))
        m = n * 300 * f * margin_rate
        if m <= safety * wealth and m + cost <= wealth:
            best = n
        else:
            break
    return best


def test_open_when_premium_reaches_threshold():
    arb = Arbitrageur(1, kappa=15)
    orders = evaluate_and_act(arb, view(3025, 3005), 10, **KW)
    assert arb.state is ArbState.OPEN and arb.entry_premium == 20
    assert orders[0].instrument == FUT and orders[0].side is Side.SELL
    assert orders[0].quantity == arb.contracts > 0
    assert all(o.side is Side.BUY for o in orders[1:]) and len(orders) == 6


def test_no_action_below_threshold():
    arb = Arbitrageur(1, kappa=15)
    assert evaluate_and_act(arb, view(3012, 3005), 10, **KW) == []
    assert arb.state is ArbState.FLAT


def test_close_on_reversion():
    arb = Arbitrageur(1, kappa=15, state=ArbState.OPEN, contracts=2)
    basket = basket_shares(2, SHARES, M0, 300, 100)
    orders = evaluate_and_act(arb, view(3002, 3005, pos=-2, holdings=basket), 50, **KW)
    assert arb.state is ArbState.CLOSING
    assert orders[0].instrument == FUT and orders[0].side is Side.BUY and orders[0].quantity == 2
    assert [(o.instrument, o.quantity) for o in orders[1:]] == [(i, q) for i, q in enumerate(basket)]
    assert all(o.side is Side.SELL for o in orders[1:])
    # once everything is unwound the arbitrageur is flat again
    assert evaluate_and_act(arb, view(3002, 3005), 51, **KW) == []
    assert arb.state is ArbState.FLAT


def test_open_position_holds_between_thresholds():
    arb = Arbitrageur(1, kappa=15, state=ArbState.OPEN, contracts=1)
    basket = basket_shares(1, SHARES, M0, 300, 100)
    assert evaluate_and_act(arb, view(3010, 3005, pos=-1, holdings=basket), 5, **KW) == []


def test_partial_fill_residue_is_repaired():
    arb = Arbitrageur(1, kappa=15, state=ArbState.OPEN, contracts=3)
    basket = basket_shares(3, SHARES, M0, 300, 100)
    short = list(basket)
    short[2] -= 500
    orders = evaluate_and_act(arb, view(3010, 3005, pos=-2, holdings=short), 5, **KW)
    assert (FUT, Side.SELL, 1) in [(o.instrument, o.side, o.quantity) for o in orders]
    # the stock target follows the contracts actually held (2), so excess shares are sold
    want = basket_shares(2, SHARES, M0, 300, 100)
    for o in orders:
        if o.instrument < 5:
            delta = o.quantity if o.side is Side.BUY else -o.quantity
            assert short[o.instrument] + delta == want[o.instrument]


def test_size_position_example():
    n, basket = size_position(10_000_000, 3000, PRICES, SHARES, M0, 0.18)
    assert 300 * 3000 * 0.18 == 162_000
    assert int(0.60 * 10_000_000 // 162_000) == 37
    assert n == 9 == oracle_size(10_000_000, 3000)
    assert basket == basket_shares(9, SHARES, M0, 300, 100)
    # basket notional is close to the futures notional
    notional = sum(q * p for q, p in zip(basket, PRICES))
    assert abs(notional - 9 * 300 * 3000) < 300 * 3000


def test_size_position_affordability_floor():
    n, basket = size_position(500_000, 3000, PRICES, SHARES, M0, 0.18)
    assert n == 0 and basket == [0] * 5
    assert size_position(-1, 3000, PRICES, SHARES, M0, 0.18)[0] == 0
    arb = Arbitrageur(1, kappa=10)
    assert evaluate_and_act(arb, view(3050, 3005, wealth=500_000), 0, **KW) == []
    assert arb.state is ArbState.FLAT


def test_size_position_respects_contract_cap():
    assert size_position(10_000_000, 3000, PRICES, SHARES, M0, 0.18, max_contracts=4)[0] == 4


@given(st.floats(1e5, 1e8), st.floats(2500, 3500))
def test_size_position_matches_oracle_and_is_monotone(wealth, f):
    n = size_position(wealth, f, PRICES, SHARES, M0, 0.18)[0]
    assert n == oracle_size(wealth, f)
    assert 300 * f * 0.18 * n <= 0.60 * wealth
    assert size_position(2 * wealth, f, PRICES, SHARES, M0, 0.18)[0] >= n


def test_basket_weights_follow_index_shares():
    b = basket_shares(10, SHARES, M0, 300, 100)
    assert all(q % 100 == 0 for q in b)
    exact = [10 * 300 * 3000 * s / M0 for s in SHARES]
    assert all(0 <= e - q < 100 for q, e in zip(b, exact))


def test_settle_at_expiry():
    # short 1 at 3020, final index 3000: ticks of 0.2 points, 6000 cents per tick
    cents = settle_at_expiry(-1, -15100, 15000, 6000)
    assert cents == 600_000  # 6000 CNY
    assert settle_at_expiry(0, 0, 15000, 6000) == 0


def test_round_trip_pnl_is_premium_when_basket_is_at_value():
    # entry: short 1 at F = v_F + 20, basket bought at value; exit at convergence F = I
    kappa_pts = 20
    entry_ticks, exit_ticks = int((3000 + kappa_pts) / 0.2), 15000
    fut = settle_at_expiry(-1, -entry_ticks, exit_ticks, 6000)
    basket = basket_shares(1, SHARES, M0, 300, 100)
    buy = sum(q * p * 100 for q, p in zip(basket, PRICES))
    sell = sum(q * p * 100 for q, p in zip(basket, PRICES))  # no slippage: exits at value
    assert fut + sell - buy == kappa_pts * 300 * 100


def test_expiry_liquidation_sells_remaining_basket():
    orders = expiry_liquidation([0, 300, 0, 100, 0])
    assert [(o.instrument, o.side, o.quantity) for o in orders] == [(1, Side.SELL, 300),
                                                                     (3, Side.SELL, 100)]


def test_clone_keeps_threshold_and_endowment():
    a = Arbitrageur(3, 12.5, 10**9, state=ArbState.OPEN, contracts=4)
    b = a.clone(9)
    assert (b.id, b.kappa, b.initial_cash, b.state, b.contracts) == (9, 12.5, 10**9, ArbState.FLAT, 0)
