//! Minimal-intelligence quote generators.
//!
//! Every generator is a pure function of the customer order, a snapshot of
//! the visible book and (for the stochastic ones) the trader's own RNG.
//! Quotes never cross the trader's limit price.

mod przi;
mod spec;

pub use przi::{przi_pmf, przi_quote, przi_theta, PrziError, PrziPmf, PRZI_SNAP, PRZI_THETA_EPS};
pub use spec::{SpecError, StrategySpec};

use rand::Rng;

use crate::lob::{OrderBook, Price, PriceBounds, Side, Time, TraderId};

/// An instruction to buy or sell one unit no worse than `limit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CustomerOrder {
    pub side: Side,
    pub limit: Price,
    pub issue_time: Time,
}

/// What a trader can see of the book when it quotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuoteContext {
    pub bounds: PriceBounds,
    pub best_bid: Option<Price>,
    pub best_ask: Option<Price>,
}

impl QuoteContext {
    /// Snapshot of `book` with `trader`'s own resting order left out, so a
    /// trader never shaves against itself.
    pub fn for_trader(book: &OrderBook, trader: TraderId) -> Self {
        QuoteContext {
            bounds: book.bounds(),
            best_bid: book.best_excluding(Side::Bid, trader),
            best_ask: book.best_excluding(Side::Ask, trader),
        }
    }

    pub fn best_same(&self, side: Side) -> Option<Price> {
        match side {
            Side::Bid => self.best_bid,
            Side::Ask => self.best_ask,
        }
    }
}

/// Uniform draw over the whole no-loss range.
pub fn zic_quote<R: Rng + ?Sized>(co: &CustomerOrder, bounds: PriceBounds, rng: &mut R) -> Price {
    match co.side {
        Side::Bid => Price(rng.random_range(bounds.min.0..=co.limit.0)),
        Side::Ask => Price(rng.random_range(co.limit.0..=bounds.max.0)),
    }
}

pub fn gvwy_quote(co: &CustomerOrder) -> Price {
    co.limit
}

/// Improve the best same-side price by `shave` ticks, capped at the limit.
/// An empty side yields the stub price at the far end of the range.
pub fn shvr_quote(co: &CustomerOrder, ctx: &QuoteContext, shave: i64) -> Price {
    match co.side {
        Side::Bid => match ctx.best_bid {
            Some(b) => Price((b.0 + shave).min(co.limit.0)),
            None => ctx.bounds.min.min(co.limit),
        },
        Side::Ask => match ctx.best_ask {
            Some(a) => Price((a.0 - shave).max(co.limit.0)),
            None => ctx.bounds.max.max(co.limit),
        },
    }
}
