//! Limit order book for a continuous double auction.
//!
//! Orders rest with price-time priority. Each trader may hold at most one
//! resting order; submitting again replaces it. An incoming order that
//! crosses the best opposite quote executes at the resting order's price.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TraderId = u32;
pub type Time = u64;

/// Integer price in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(pub i64);

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// System-wide admissible price range, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceBounds {
    pub min: Price,
    pub max: Price,
}

impl PriceBounds {
    pub fn new(min: i64, max: i64) -> Result<Self, BookError> {
        if min < 1 || max <= min {
            return Err(BookError::InvalidBounds { min, max });
        }
        Ok(PriceBounds { min: Price(min), max: Price(max) })
    }

    pub fn contains(&self, p: Price) -> bool {
        self.min <= p && p <= self.max
    }

    pub fn clamp(&self, p: i64) -> Price {
        Price(p.clamp(self.min.0, self.max.0))
    }
}

impl Default for PriceBounds {
    fn default() -> Self {
        PriceBounds { min: Price(1), max: Price(500) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Order {
    pub trader_id: TraderId,
    pub side: Side,
    pub price: Price,
    pub quantity: u32,
    pub submit_time: Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trade {
    pub time: Time,
    pub price: Price,
    pub buyer_id: TraderId,
    pub seller_id: TraderId,
    pub quantity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarketEvent {
    OrderReplaced { old: Order },
    OrderRested(Order),
    TradeExecuted(Trade),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BookError {
    #[error("trader {0} has no active customer assignment")]
    NoAssignment(TraderId),
    #[error("price {price} outside system bounds [{min}, {max}]")]
    PriceOutOfBounds { price: i64, min: i64, max: i64 },
    #[error("order quantity must be at least 1")]
    ZeroQuantity,
    #[error("invalid price bounds [{min}, {max}]: need 1 <= min < max")]
    InvalidBounds { min: i64, max: i64 },
}

type BidKey = (Reverse<Price>, u64);
type AskKey = (Price, u64);

#[derive(Clone, Copy, Debug)]
enum Slot {
    Bid(BidKey),
    Ask(AskKey),
}

#[derive(Clone, Debug)]
pub struct OrderBook {
    bounds: PriceBounds,
    bids: BTreeMap<BidKey, Order>,
    asks: BTreeMap<AskKey, Order>,
    by_trader: HashMap<TraderId, Slot>,
    active: BTreeSet<TraderId>,
    tape: Vec<Trade>,
    seq: u64,
}

impl OrderBook {
    pub fn new(bounds: PriceBounds) -> Self {
        OrderBook {
            bounds,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            by_trader: HashMap::new(),
            active: BTreeSet::new(),
            tape: Vec::new(),
            seq: 0,
        }
    }

    pub fn bounds(&self) -> PriceBounds {
        self.bounds
    }

    /// Marks `trader` as holding a live customer assignment so it may quote.
    pub fn open_assignment(&mut self, trader: TraderId) {
        self.active.insert(trader);
    }

    /// Withdraws the assignment and any resting order. Returns whether an
    /// order was cancelled.
    pub fn close_assignment(&mut self, trader: TraderId) -> bool {
        self.active.remove(&trader);
        self.cancel_order(trader)
    }

    pub fn has_assignment(&self, trader: TraderId) -> bool {
        self.active.contains(&trader)
    }

    pub fn submit_order(&mut self, mut order: Order) -> Result<Vec<MarketEvent>, BookError> {
        if order.quantity == 0 {
            return Err(BookError::ZeroQuantity);
        }
        if !self.bounds.contains(order.price) {
            return Err(BookError::PriceOutOfBounds {
                price: order.price.0,
                min: self.bounds.min.0,
                max: self.bounds.max.0,
            });
        }
        if !self.active.contains(&order.trader_id) {
            return Err(BookError::NoAssignment(order.trader_id));
        }

        let mut events = Vec::new();
        if let Some(old) = self.remove_resting(order.trader_id) {
            events.push(MarketEvent::OrderReplaced { old });
        }

        while order.quantity > 0 {
            let Some(resting) = self.best_opposite(order.side) else { break };
            let crosses = match order.side {
                Side::Bid => order.price >= resting.price,
                Side::Ask => order.price <= resting.price,
            };
            if !crosses {
                break;
            }
            let qty = order.quantity.min(resting.quantity);
            let (buyer_id, seller_id) = match order.side {
                Side::Bid => (order.trader_id, resting.trader_id),
                Side::Ask => (resting.trader_id, order.trader_id),
            };
            let trade = Trade { time: order.submit_time, price: resting.price, buyer_id, seller_id, quantity: qty };
            self.tape.push(trade);
            events.push(MarketEvent::TradeExecuted(trade));

            order.quantity -= qty;
            if resting.quantity == qty {
                self.remove_resting(resting.trader_id);
                self.active.remove(&resting.trader_id);
            } else {
                self.reduce_resting(resting.trader_id, qty);
            }
        }

        if order.quantity == 0 {
            self.active.remove(&order.trader_id);
        } else {
            self.rest(order);
            events.push(MarketEvent::OrderRested(order));
        }
        Ok(events)
    }

    pub fn cancel_order(&mut self, trader: TraderId) -> bool {
        self.remove_resting(trader).is_some()
    }

    pub fn best_prices(&self) -> (Option<Price>, Option<Price>) {
        (self.best_bid(), self.best_ask())
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.values().next().map(|o| o.price)
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.values().next().map(|o| o.price)
    }

    /// Best price on `side` ignoring any order held by `trader`.
    pub fn best_excluding(&self, side: Side, trader: TraderId) -> Option<Price> {
        match side {
            Side::Bid => self.bids.values().find(|o| o.trader_id != trader).map(|o| o.price),
            Side::Ask => self.asks.values().find(|o| o.trader_id != trader).map(|o| o.price),
        }
    }

    pub fn order_of(&self, trader: TraderId) -> Option<&Order> {
        match self.by_trader.get(&trader)? {
            Slot::Bid(k) => self.bids.get(k),
            Slot::Ask(k) => self.asks.get(k),
        }
    }

    /// Bids in priority order.
    pub fn bids(&self) -> impl Iterator<Item = &Order> {
        self.bids.values()
    }

    /// Asks in priority order.
    pub fn asks(&self) -> impl Iterator<Item = &Order> {
        self.asks.values()
    }

    pub fn tape(&self) -> &[Trade] {
        &self.tape
    }

    pub fn into_tape(self) -> Vec<Trade> {
        self.tape
    }

    pub fn is_crossed(&self) -> bool {
        matches!(self.best_prices(), (Some(b), Some(a)) if b >= a)
    }

    fn best_opposite(&self, side: Side) -> Option<Order> {
        match side {
            Side::Bid => self.asks.values().next().copied(),
            Side::Ask => self.bids.values().next().copied(),
        }
    }

    fn rest(&mut self, order: Order) {
        self.seq += 1;
        let slot = match order.side {
            Side::Bid => {
                let key = (Reverse(order.price), self.seq);
                self.bids.insert(key, order);
                Slot::Bid(key)
            }
            Side::Ask => {
                let key = (order.price, self.seq);
                self.asks.insert(key, order);
                Slot::Ask(key)
            }
        };
        self.by_trader.insert(order.trader_id, slot);
    }

    fn remove_resting(&mut self, trader: TraderId) -> Option<Order> {
        match self.by_trader.remove(&trader)? {
            Slot::Bid(k) => self.bids.remove(&k),
            Slot::Ask(k) => self.asks.remove(&k),
        }
    }

    fn reduce_resting(&mut self, trader: TraderId, qty: u32) {
        let order = match self.by_trader.get(&trader) {
            Some(Slot::Bid(k)) => self.bids.get_mut(k),
            Some(Slot::Ask(k)) => self.asks.get_mut(k),
            None => None,
        };
        if let Some(o) = order {
            o.quantity -= qty;
        }
    }
}

/// Writes the tape as CSV: `time,price,buyer_id,seller_id,qty`.
pub fn write_tape_csv<W: Write>(mut w: W, tape: &[Trade]) -> io::Result<()> {
    writeln!(w, "time,price,buyer_id,seller_id,qty")?;
    for t in tape {
        writeln!(w, "{},{},{},{},{}", t.time, t.price.0, t.buyer_id, t.seller_id, t.quantity)?;
    }
    Ok(())
}
