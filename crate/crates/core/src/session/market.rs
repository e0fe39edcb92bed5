use std::io::{self, Write};

use rand::Rng;

use super::{equilibrium_surplus, AssignMode, ConfigError, Schedule, SessionConfig};
use crate::analysis::StateSeries;
use crate::coevo::AdaptiveClimber;
use crate::lob::{MarketEvent, Order, OrderBook, Price, PriceBounds, Side, Time, Trade, TraderId};
use crate::rng::{stream, SimRng};
use crate::stgp::QuoteMapping;
use crate::traders::{CustomerOrder, QuoteContext, StrategySpec};

/// A trade together with both counterparties' limit prices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fill {
    pub trade: Trade,
    pub buyer_limit: Price,
    pub seller_limit: Price,
}

impl Fill {
    pub fn buyer_profit(&self) -> i64 {
        self.buyer_limit.0 - self.trade.price.0
    }

    pub fn seller_profit(&self) -> i64 {
        self.trade.price.0 - self.seller_limit.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionResult {
    pub tape: Vec<Trade>,
    pub fills: Vec<Fill>,
    pub sides: Vec<Side>,
    pub profits: Vec<i64>,
    pub trade_counts: Vec<u32>,
    /// Strategy each trader ended with (adaptive traders report their prod).
    pub final_strategies: Vec<StrategySpec>,
    pub adaptive_ids: Vec<TraderId>,
    /// Prod strategy values of the adaptive traders, sampled every `tau`.
    pub strategy_log: StateSeries,
    pub quotes: u64,
    pub replacements: u64,
    /// Sum over replenishment sweeps of the maximum surplus available from
    /// the outstanding assignments.
    pub max_surplus: i64,
}

impl SessionResult {
    pub fn total_profit(&self) -> i64 {
        self.profits.iter().sum()
    }

    /// Realised surplus over the theoretical maximum; `None` when nothing
    /// could have traded.
    pub fn efficiency(&self) -> Option<f64> {
        (self.max_surplus > 0).then(|| self.total_profit() as f64 / self.max_surplus as f64)
    }

    /// `trader_id,side,strategy,profit,trades`
    pub fn write_profits_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "trader_id,side,strategy,profit,trades")?;
        for i in 0..self.profits.len() {
            let side = match self.sides[i] {
                Side::Bid => "buyer",
                Side::Ask => "seller",
            };
            writeln!(w, "{},{},\"{}\",{},{}", i, side, self.final_strategies[i], self.profits[i], self.trade_counts[i])?;
        }
        Ok(())
    }
}

/// Fresh customer orders for every trader in `members` (all on the
/// schedule's side), in roster order.
pub fn assign_customer_orders<R: Rng + ?Sized>(
    schedule: &Schedule,
    members: &[TraderId],
    t: Time,
    rng: &mut R,
) -> Vec<(TraderId, CustomerOrder)> {
    let n = members.len();
    members
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let limit = match schedule.mode {
                AssignMode::FixedStep if n > 1 => {
                    let span = (schedule.p_max - schedule.p_min) as f64;
                    schedule.p_min + (span * i as f64 / (n - 1) as f64).round() as i64
                }
                AssignMode::FixedStep => schedule.p_min,
                AssignMode::Uniform => rng.random_range(schedule.p_min..=schedule.p_max),
            };
            (id, CustomerOrder { side: schedule.side, limit: Price(limit), issue_time: t })
        })
        .collect()
}

struct Trader {
    side: Side,
    strategy: StrategySpec,
    climber: Option<AdaptiveClimber>,
    current: Option<CustomerOrder>,
    profit: i64,
    trades: u32,
    rng: SimRng,
}

/// A running session. Each call to [`Market::step`] advances the clock by
/// one time unit: replenish if due, then let one randomly chosen trader
/// with a live assignment quote.
pub struct Market {
    bounds: PriceBounds,
    shave: i64,
    mapping: QuoteMapping,
    tau: u64,
    duration: u64,
    schedules: Vec<Schedule>,
    traders: Vec<Trader>,
    adaptive: Vec<TraderId>,
    book: OrderBook,
    rng: SimRng,
    t: Time,
    fills: Vec<Fill>,
    log: StateSeries,
    quotes: u64,
    replacements: u64,
    max_surplus: i64,
    live: Vec<usize>,
}

impl Market {
    /// `session_index` selects the RNG streams under the config's seed.
    pub fn new(cfg: &SessionConfig, session_index: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let bounds = cfg.bounds()?;
        let mut traders = Vec::with_capacity(cfg.n_traders());
        let mut adaptive = Vec::new();
        for (i, entry) in cfg.expanded_roster().into_iter().enumerate() {
            let mut rng = stream(cfg.seed, &[session_index, 1, i as u64]);
            let climber = match (&entry.adaptive, &entry.strategy) {
                (Some(params), StrategySpec::Przi(s)) => {
                    adaptive.push(i as TraderId);
                    Some(
                        AdaptiveClimber::new(*s, *params, &mut rng)
                            .map_err(|e| ConfigError::Roster { index: i, reason: e.to_string() })?,
                    )
                }
                _ => None,
            };
            traders.push(Trader {
                side: entry.side,
                strategy: entry.strategy,
                climber,
                current: None,
                profit: 0,
                trades: 0,
                rng,
            });
        }
        Ok(Market {
            bounds,
            shave: cfg.shave,
            mapping: cfg.quote_mapping,
            tau: cfg.tau,
            duration: cfg.duration,
            schedules: cfg.schedules.clone(),
            log: StateSeries::new(adaptive.len()),
            traders,
            adaptive,
            book: OrderBook::new(bounds),
            rng: stream(cfg.seed, &[session_index, 0]),
            t: 0,
            fills: Vec::new(),
            quotes: 0,
            replacements: 0,
            max_surplus: 0,
            live: Vec::new(),
        })
    }

    pub fn bounds(&self) -> PriceBounds {
        self.bounds
    }

    pub fn time(&self) -> Time {
        self.t
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.duration
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn climber(&self, id: TraderId) -> Option<&AdaptiveClimber> {
        self.traders.get(id as usize)?.climber.as_ref()
    }

    pub fn profit(&self, id: TraderId) -> i64 {
        self.traders[id as usize].profit
    }

    pub fn customer_order(&self, id: TraderId) -> Option<CustomerOrder> {
        self.traders.get(id as usize)?.current
    }

    pub fn fills(&self) -> &[Fill] {
        &self.fills
    }

    pub fn run(&mut self) {
        while !self.is_finished() {
            self.step();
        }
    }

    pub fn step(&mut self) {
        let t = self.t;
        if t.is_multiple_of(self.tau) {
            let state: Vec<f64> = self.adaptive.iter().map(|&id| self.traders[id as usize].prod_s()).collect();
            self.log.push(t, state).expect("dimension and time order fixed by construction");
        }
        self.replenish(t);

        self.live.clear();
        self.live.extend((0..self.traders.len()).filter(|&i| self.traders[i].current.is_some()));
        if !self.live.is_empty() {
            let id = self.live[self.rng.random_range(0..self.live.len())];
            self.quote(id, t);
        }
        self.t += 1;
    }

    fn replenish(&mut self, t: Time) {
        let mut swept = false;
        for k in 0..self.schedules.len() {
            let sched = &self.schedules[k];
            if !t.is_multiple_of(sched.interval) {
                continue;
            }
            let members: Vec<TraderId> =
                (0..self.traders.len()).filter(|&i| self.traders[i].side == sched.side).map(|i| i as TraderId).collect();
            for (id, co) in assign_customer_orders(sched, &members, t, &mut self.rng) {
                let tr = &mut self.traders[id as usize];
                if tr.current.is_some() {
                    self.book.close_assignment(id);
                }
                tr.current = Some(co);
                self.book.open_assignment(id);
            }
            swept = true;
        }
        if swept {
            let limits = |side: Side| -> Vec<Price> {
                self.traders.iter().filter_map(|tr| tr.current.filter(|c| c.side == side).map(|c| c.limit)).collect()
            };
            self.max_surplus += equilibrium_surplus(&limits(Side::Bid), &limits(Side::Ask)).surplus;
        }
    }

    fn quote(&mut self, id: usize, t: Time) {
        let ctx = QuoteContext::for_trader(&self.book, id as TraderId);
        let tr = &mut self.traders[id];
        let co = tr.current.expect("only live traders quote");
        let price = match &tr.climber {
            Some(c) => StrategySpec::Przi(c.active_s()).quote(&co, &ctx, self.shave, self.mapping, &mut tr.rng),
            None => tr.strategy.quote(&co, &ctx, self.shave, self.mapping, &mut tr.rng),
        };
        self.quotes += 1;
        let order = Order { trader_id: id as TraderId, side: tr.side, price, quantity: 1, submit_time: t };
        let events = self.book.submit_order(order).expect("quotes are in bounds and the trader holds an assignment");
        for ev in events {
            match ev {
                MarketEvent::TradeExecuted(trade) => self.settle(trade),
                MarketEvent::OrderReplaced { .. } => self.replacements += 1,
                MarketEvent::OrderRested(_) => {}
            }
        }
    }

    fn settle(&mut self, trade: Trade) {
        let buyer_limit = self.close_out(trade.buyer_id, |limit| limit.0 - trade.price.0);
        let seller_limit = self.close_out(trade.seller_id, |limit| trade.price.0 - limit.0);
        self.fills.push(Fill { trade, buyer_limit, seller_limit });
    }

    fn close_out(&mut self, id: TraderId, profit_of: impl Fn(Price) -> i64) -> Price {
        let tr = &mut self.traders[id as usize];
        let co = tr.current.take().expect("a trading counterparty holds an assignment");
        let profit = profit_of(co.limit);
        debug_assert!(profit >= 0, "loss-making trade");
        tr.profit += profit;
        tr.trades += 1;
        if let Some(c) = tr.climber.as_mut() {
            c.observe_trade(profit as f64, &mut tr.rng);
        }
        co.limit
    }

    pub fn into_result(self) -> SessionResult {
        SessionResult {
            tape: self.book.into_tape(),
            fills: self.fills,
            sides: self.traders.iter().map(|t| t.side).collect(),
            profits: self.traders.iter().map(|t| t.profit).collect(),
            trade_counts: self.traders.iter().map(|t| t.trades).collect(),
            final_strategies: self
                .traders
                .iter()
                .map(|t| match &t.climber {
                    Some(c) => StrategySpec::Przi(c.prod()),
                    None => t.strategy.clone(),
                })
                .collect(),
            adaptive_ids: self.adaptive,
            strategy_log: self.log,
            quotes: self.quotes,
            replacements: self.replacements,
            max_surplus: self.max_surplus,
        }
    }
}

impl Trader {
    fn prod_s(&self) -> f64 {
        self.climber.as_ref().map_or(f64::NAN, AdaptiveClimber::prod)
    }
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult, ConfigError> {
    run_session_indexed(cfg, 0)
}

pub fn run_session_indexed(cfg: &SessionConfig, session_index: u64) -> Result<SessionResult, ConfigError> {
    let mut m = Market::new(cfg, session_index)?;
    m.run();
    Ok(m.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coevo::ClimberParams;
    use crate::session::tests::zic_config;
    use crate::session::RosterEntry;

    #[test]
    fn zero_duration_is_empty() {
        let mut cfg = zic_config(3, 3);
        cfg.duration = 0;
        let r = run_session(&cfg).unwrap();
        assert!(r.tape.is_empty());
        assert!(r.profits.iter().all(|&p| p == 0));
        assert_eq!(r.max_surplus, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = zic_config(5, 5);
        assert_eq!(run_session(&cfg).unwrap(), run_session(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 2;
        assert_ne!(run_session(&cfg).unwrap().tape, run_session(&other).unwrap().tape);
    }

    #[test]
    fn profits_match_fills() {
        let r = run_session(&zic_config(10, 10)).unwrap();
        assert!(!r.fills.is_empty());
        let from_fills: i64 = r.fills.iter().map(|f| f.buyer_limit.0 - f.seller_limit.0).sum();
        assert_eq!(r.total_profit(), from_fills);
        assert!(r.fills.iter().all(|f| f.buyer_profit() >= 0 && f.seller_profit() >= 0));
        assert_eq!(r.tape, r.fills.iter().map(|f| f.trade).collect::<Vec<_>>());
    }

    #[test]
    fn fixed_step_assignment() {
        let s = Schedule { side: Side::Bid, p_min: 100, p_max: 110, mode: AssignMode::FixedStep, interval: 1 };
        let mut rng = stream(1, &[]);
        let got = assign_customer_orders(&s, &[4, 9], 0, &mut rng);
        assert_eq!(got.iter().map(|(id, c)| (*id, c.limit.0)).collect::<Vec<_>>(), vec![(4, 100), (9, 110)]);
        let got = assign_customer_orders(&s, &[4], 0, &mut rng);
        assert_eq!(got[0].1.limit, Price(100));
    }

    /// Chi-square on the 11 limits of [100, 110]; 10 degrees of freedom at
    /// p = 0.01 has critical value 23.21.
    #[test]
    fn uniform_assignment_is_uniform() {
        let s = Schedule { side: Side::Ask, p_min: 100, p_max: 110, mode: AssignMode::Uniform, interval: 1 };
        let mut rng = stream(2, &[]);
        let mut counts = [0u32; 11];
        let n = 100_000;
        for t in 0..n {
            let (_, co) = assign_customer_orders(&s, &[0], t, &mut rng)[0];
            assert_eq!(co.side, Side::Ask);
            counts[(co.limit.0 - 100) as usize] += 1;
        }
        let e = n as f64 / 11.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 23.21, "chi2 {chi2}");
    }

    #[test]
    fn replenishment_cancels_stale_orders() {
        let mut cfg = zic_config(1, 1);
        cfg.schedules[0].interval = 1;
        cfg.schedules[1].interval = 1;
        // non-overlapping schedules so nothing ever trades
        cfg.schedules[0].p_min = 10;
        cfg.schedules[0].p_max = 20;
        cfg.schedules[1].p_min = 300;
        cfg.schedules[1].p_max = 400;
        let mut m = Market::new(&cfg, 0).unwrap();
        for _ in 0..50 {
            m.step();
            assert!(m.book().bids().count() <= 1 && m.book().asks().count() <= 1);
            for id in 0..2 {
                if let Some(o) = m.book().order_of(id) {
                    let co = m.customer_order(id).unwrap();
                    match o.side {
                        Side::Bid => assert!(o.price <= co.limit),
                        Side::Ask => assert!(o.price >= co.limit),
                    }
                }
            }
        }
        assert!(m.fills().is_empty());
    }

    #[test]
    fn adaptive_traders_are_logged() {
        let mut cfg = zic_config(4, 4);
        cfg.roster.push(RosterEntry {
            side: Side::Bid,
            strategy: StrategySpec::Przi(0.2),
            count: 2,
            adaptive: Some(ClimberParams { k: 2, n_trades: 1, mutation_width: 0.05 }),
        });
        cfg.duration = 5000;
        cfg.schedules[0].interval = 100;
        cfg.schedules[1].interval = 100;
        let r = run_session(&cfg).unwrap();
        assert_eq!(r.adaptive_ids, vec![8, 9]);
        assert_eq!(r.strategy_log.len(), 50);
        assert_eq!(r.strategy_log.dim(), 2);
        assert_eq!(r.strategy_log.samples()[0], vec![0.2, 0.2]);
        assert!(r.strategy_log.samples().iter().flatten().all(|s| (-1.0..=1.0).contains(s)));
        assert!(matches!(r.final_strategies[8], StrategySpec::Przi(_)));
    }

    #[test]
    fn profits_csv() {
        let mut cfg = zic_config(1, 1);
        cfg.duration = 0;
        let r = run_session(&cfg).unwrap();
        let mut out = Vec::new();
        r.write_profits_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "trader_id,side,strategy,profit,trades\n0,buyer,\"ZIC\",0,0\n1,seller,\"ZIC\",0,0\n"
        );
    }
}
