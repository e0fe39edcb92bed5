//! Parameterised-response zero intelligence.
//!
//! The quote is drawn from a PMF over the interval between the shaver's
//! price and the limit price. The mass is an exponential tilt
//! `exp(theta(s) * u(p))`, where `u` runs from 0 at the shaver end to 1 at
//! the limit end. `s = 0` is flat, large positive `s` piles mass on the
//! limit (giveaway) and large negative `s` on the shaver price.

use rand::Rng;
use thiserror::Error;

use super::{shvr_quote, CustomerOrder, QuoteContext};
use crate::lob::{Price, Side};

pub const PRZI_THETA_EPS: f64 = 0.01;
/// `|s|` at or above this collapses to the exact endpoint PMF.
pub const PRZI_SNAP: f64 = 0.995;

#[derive(Debug, Error, PartialEq)]
pub enum PrziError {
    #[error("strategy value {0} outside [-1, 1]")]
    OutOfRange(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrziPmf {
    lo: Price,
    hi: Price,
    mass: Vec<f64>,
    s: f64,
}

impl PrziPmf {
    pub fn support(&self) -> (Price, Price) {
        (self.lo, self.hi)
    }

    /// Mass for prices `lo..=hi`, in ascending price order.
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, p: Price) -> f64 {
        if p < self.lo || p > self.hi {
            return 0.0;
        }
        self.mass[(p.0 - self.lo.0) as usize]
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, m)| (self.lo.0 + i as i64) as f64 * m).sum()
    }

    /// The single price holding all the mass, if there is one.
    pub fn degenerate_at(&self) -> Option<Price> {
        let mut hit = None;
        for (i, &m) in self.mass.iter().enumerate() {
            if m == 1.0 {
                hit = Some(Price(self.lo.0 + i as i64));
            } else if m != 0.0 {
                return None;
            }
        }
        hit
    }
}

pub fn przi_theta(s: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * s * (1.0 - PRZI_THETA_EPS)).tan()
}

pub fn przi_pmf(s: f64, co: &CustomerOrder, ctx: &QuoteContext, shave: i64) -> Result<PrziPmf, PrziError> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(PrziError::OutOfRange(s));
    }
    let anchor = shvr_quote(co, ctx, shave);
    // `limit_end` is where u = 1; the buyer's range runs up to it, the
    // seller's down to it.
    let (lo, hi) = match co.side {
        Side::Bid => (anchor.min(co.limit), co.limit),
        Side::Ask => (co.limit, anchor.max(co.limit)),
    };
    let n = (hi.0 - lo.0 + 1) as usize;
    let limit_idx = match co.side {
        Side::Bid => n - 1,
        Side::Ask => 0,
    };
    let mut mass = vec![0.0; n];
    if n == 1 {
        mass[0] = 1.0;
    } else if s >= PRZI_SNAP {
        mass[limit_idx] = 1.0;
    } else if s <= -PRZI_SNAP {
        mass[n - 1 - limit_idx] = 1.0;
    } else {
        let theta = przi_theta(s);
        // Weights are geometric in the distance from the heavy end, which
        // gets weight 1: the limit end for theta > 0, the shaver end below.
        let q = (-theta.abs() / (n - 1) as f64).exp();
        let heavy_is_limit = theta >= 0.0;
        let mut w = 1.0;
        for k in 0..n {
            let from_limit = if heavy_is_limit { k } else { n - 1 - k };
            let idx = if limit_idx == 0 { from_limit } else { n - 1 - from_limit };
            mass[idx] = w;
            w *= q;
        }
        let z: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= z);
    }
    Ok(PrziPmf { lo, hi, mass, s })
}

/// Inverse-CDF draw.
pub fn przi_quote<R: Rng + ?Sized>(pmf: &PrziPmf, rng: &mut R) -> Price {
    if let Some(p) = pmf.degenerate_at() {
        return p;
    }
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, m) in pmf.mass.iter().enumerate() {
        acc += m;
        if x < acc {
            return Price(pmf.lo.0 + i as i64);
        }
    }
    // rounding left acc just under 1: take the last price with mass
    let last = pmf.mass.iter().rposition(|&m| m > 0.0).unwrap_or(0);
    Price(pmf.lo.0 + last as i64)
}
