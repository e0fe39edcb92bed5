use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Draws `clip(s + U(-width, +width), -1, 1)`.
pub fn mutate_strategy<R: Rng + ?Sized>(s: f64, width: f64, rng: &mut R) -> f64 {
    if width <= 0.0 {
        return s.clamp(-1.0, 1.0);
    }
    (s + rng.random_range(-width..=width)).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimberParams {
    /// Number of strategy slots, prod included.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Trades per evaluation window.
    pub n_trades: u32,
    #[serde(default = "default_width")]
    pub mutation_width: f64,
}

fn default_k() -> usize {
    2
}

fn default_width() -> f64 {
    0.05
}

impl Default for ClimberParams {
    fn default() -> Self {
        ClimberParams { k: 2, n_trades: 5, mutation_width: 0.05 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ClimberError {
    #[error("need at least two strategy slots, got {0}")]
    TooFewSlots(usize),
    #[error("evaluation window must be at least one trade")]
    EmptyWindow,
    #[error("mutation width {0} must be finite and non-negative")]
    BadWidth(f64),
    #[error("initial strategy {0} outside [-1, 1]")]
    BadInitial(f64),
    #[error("slot {slot} has {done} of {needed} trades; evaluation incomplete")]
    Incomplete { slot: usize, done: u32, needed: u32 },
}

/// Result of one adoption round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adoption {
    pub previous: f64,
    pub prod: f64,
    pub replaced: bool,
}

/// Stochastic hill-climber over a PRZI strategy value with one prod slot
/// and `k - 1` dev slots. Slots are evaluated in order, prod first, each for
/// `n_trades` trades; then the best-earning slot becomes prod (prod keeps
/// its place on ties) and the dev slots are refilled with mutants of it.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveClimber {
    params: ClimberParams,
    slots: Vec<f64>,
    trades: Vec<u32>,
    profit: Vec<f64>,
    active: usize,
    adoptions: u64,
}

impl AdaptiveClimber {
    pub fn new<R: Rng + ?Sized>(initial: f64, params: ClimberParams, rng: &mut R) -> Result<Self, ClimberError> {
        if params.k < 2 {
            return Err(ClimberError::TooFewSlots(params.k));
        }
        if params.n_trades == 0 {
            return Err(ClimberError::EmptyWindow);
        }
        if !params.mutation_width.is_finite() || params.mutation_width < 0.0 {
            return Err(ClimberError::BadWidth(params.mutation_width));
        }
        if !(-1.0..=1.0).contains(&initial) {
            return Err(ClimberError::BadInitial(initial));
        }
        let mut slots = vec![initial; params.k];
        for s in &mut slots[1..] {
            *s = mutate_strategy(initial, params.mutation_width, rng);
        }
        Ok(AdaptiveClimber {
            params,
            slots,
            trades: vec![0; params.k],
            profit: vec![0.0; params.k],
            active: 0,
            adoptions: 0,
        })
    }

    pub fn params(&self) -> ClimberParams {
        self.params
    }

    pub fn prod(&self) -> f64 {
        self.slots[0]
    }

    pub fn slots(&self) -> &[f64] {
        &self.slots
    }

    pub fn active_slot(&self) -> usize {
        self.active
    }

    /// Strategy value currently used for quoting.
    pub fn active_s(&self) -> f64 {
        self.slots[self.active]
    }

    pub fn window_profit(&self, slot: usize) -> f64 {
        self.profit[slot]
    }

    pub fn window_trades(&self, slot: usize) -> u32 {
        self.trades[slot]
    }

    pub fn adoptions(&self) -> u64 {
        self.adoptions
    }

    /// Credits a trade to the active slot. Returns the adoption outcome when
    /// this trade completes the last slot's window.
    pub fn observe_trade<R: Rng + ?Sized>(&mut self, profit: f64, rng: &mut R) -> Option<Adoption> {
        let a = self.active;
        self.profit[a] += profit;
        self.trades[a] += 1;
        if self.trades[a] < self.params.n_trades {
            return None;
        }
        if a + 1 < self.slots.len() {
            self.active = a + 1;
            None
        } else {
            Some(self.adopt(rng).expect("all windows complete"))
        }
    }

    pub fn adopt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Adoption, ClimberError> {
        let needed = self.params.n_trades;
        if let Some(slot) = self.trades.iter().position(|&t| t < needed) {
            return Err(ClimberError::Incomplete { slot, done: self.trades[slot], needed });
        }
        let mut best = 0;
        for i in 1..self.slots.len() {
            if self.profit[i] > self.profit[best] {
                best = i;
            }
        }
        let previous = self.slots[0];
        let prod = self.slots[best];
        self.slots[0] = prod;
        for i in 1..self.slots.len() {
            self.slots[i] = mutate_strategy(prod, self.params.mutation_width, rng);
        }
        self.trades.iter_mut().for_each(|t| *t = 0);
        self.profit.iter_mut().for_each(|p| *p = 0.0);
        self.active = 0;
        self.adoptions += 1;
        Ok(Adoption { previous, prod, replaced: best != 0 })
    }
}
