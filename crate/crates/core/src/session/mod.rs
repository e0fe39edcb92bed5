//! Market sessions: configuration, customer-order schedules and the clocked
//! trading loop.

mod market;
mod surplus;

pub use market::{assign_customer_orders, run_session, run_session_indexed, Fill, Market, SessionResult};
pub use surplus::{equilibrium_surplus, Equilibrium};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coevo::ClimberParams;
use crate::lob::{PriceBounds, Side};
use crate::stgp::QuoteMapping;
use crate::traders::StrategySpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    /// Evenly spaced limits across the range, handed out in roster order.
    FixedStep,
    /// Independent uniform integer draw per trader.
    #[default]
    Uniform,
}

/// Supply or demand schedule for one side of the market.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub side: Side,
    pub p_min: i64,
    pub p_max: i64,
    #[serde(default)]
    pub mode: AssignMode,
    /// Time units between replenishment sweeps; the first sweep is at t = 0.
    pub interval: u64,
}

/// One or more identical traders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub side: Side,
    pub strategy: StrategySpec,
    #[serde(default = "one")]
    pub count: u32,
    /// Present for PRZI traders that adapt their strategy value; the PRZI
    /// value becomes the initial prod strategy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<ClimberParams>,
}

fn one() -> u32 {
    1
}

fn default_sys_min() -> i64 {
    1
}

fn default_sys_max() -> i64 {
    500
}

fn default_tau() -> u64 {
    100
}

fn default_shave() -> i64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub duration: u64,
    pub roster: Vec<RosterEntry>,
    pub schedules: Vec<Schedule>,
    #[serde(default = "default_sys_min")]
    pub sys_min: i64,
    #[serde(default = "default_sys_max")]
    pub sys_max: i64,
    #[serde(default)]
    pub seed: u64,
    /// Strategy-log sampling interval.
    #[serde(default = "default_tau")]
    pub tau: u64,
    /// Ticks a shaver improves on the best same-side price.
    #[serde(default = "default_shave")]
    pub shave: i64,
    #[serde(default)]
    pub quote_mapping: QuoteMapping,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("system price bounds [{0}, {1}] invalid: need 1 <= sys_min < sys_max")]
    Bounds(i64, i64),
    #[error("roster needs at least one buyer and one seller")]
    OneSided,
    #[error("no schedule covers the {0:?} side")]
    Uncovered(Side),
    #[error("schedule {index}: {reason}")]
    Schedule { index: usize, reason: String },
    #[error("roster entry {index}: {reason}")]
    Roster { index: usize, reason: String },
    #[error("tau must be at least 1")]
    Tau,
    #[error("shave must be at least 1")]
    Shave,
}

impl SessionConfig {
    pub fn bounds(&self) -> Result<PriceBounds, ConfigError> {
        PriceBounds::new(self.sys_min, self.sys_max).map_err(|_| ConfigError::Bounds(self.sys_min, self.sys_max))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bounds = self.bounds()?;
        if self.tau == 0 {
            return Err(ConfigError::Tau);
        }
        if self.shave < 1 {
            return Err(ConfigError::Shave);
        }
        for (index, s) in self.schedules.iter().enumerate() {
            let bad = |reason: &str| ConfigError::Schedule { index, reason: reason.to_string() };
            if s.p_min > s.p_max {
                return Err(bad("p_min exceeds p_max"));
            }
            if s.p_min < bounds.min.0 || s.p_max > bounds.max.0 {
                return Err(bad("limit range outside system bounds"));
            }
            if s.interval == 0 {
                return Err(bad("interval must be at least 1"));
            }
        }
        for (index, e) in self.roster.iter().enumerate() {
            let bad = |reason: &str| ConfigError::Roster { index, reason: reason.to_string() };
            if e.count == 0 {
                return Err(bad("count must be at least 1"));
            }
            if let Some(p) = &e.adaptive {
                if !matches!(e.strategy, StrategySpec::Przi(_)) {
                    return Err(bad("only PRZI traders can be adaptive"));
                }
                if p.k < 2 {
                    return Err(bad("adaptive k must be at least 2"));
                }
                if p.n_trades == 0 {
                    return Err(bad("adaptive n_trades must be at least 1"));
                }
                if !p.mutation_width.is_finite() || p.mutation_width < 0.0 {
                    return Err(bad("mutation_width must be finite and non-negative"));
                }
            }
        }
        for side in [Side::Bid, Side::Ask] {
            if !self.roster.iter().any(|e| e.side == side) {
                return Err(ConfigError::OneSided);
            }
        }
        for side in [Side::Bid, Side::Ask] {
            if !self.schedules.iter().any(|s| s.side == side) {
                return Err(ConfigError::Uncovered(side));
            }
        }
        Ok(())
    }

    /// Total number of trader seats.
    pub fn n_traders(&self) -> usize {
        self.roster.iter().map(|e| e.count as usize).sum()
    }

    /// Roster with every entry expanded to `count = 1`, in id order.
    pub fn expanded_roster(&self) -> Vec<RosterEntry> {
        self.roster
            .iter()
            .flat_map(|e| std::iter::repeat_n(RosterEntry { count: 1, ..e.clone() }, e.count as usize))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn zic_config(buyers: u32, sellers: u32) -> SessionConfig {
        SessionConfig {
            duration: 1000,
            roster: vec![
                RosterEntry { side: Side::Bid, strategy: StrategySpec::Zic, count: buyers, adaptive: None },
                RosterEntry { side: Side::Ask, strategy: StrategySpec::Zic, count: sellers, adaptive: None },
            ],
            schedules: vec![
                Schedule { side: Side::Bid, p_min: 50, p_max: 150, mode: AssignMode::Uniform, interval: 1000 },
                Schedule { side: Side::Ask, p_min: 50, p_max: 150, mode: AssignMode::Uniform, interval: 1000 },
            ],
            sys_min: 1,
            sys_max: 500,
            seed: 1,
            tau: 100,
            shave: 1,
            quote_mapping: QuoteMapping::Direct,
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{
            "duration": 10,
            "roster": [
                {"side": "Bid", "strategy": "PRZI(0.25)", "adaptive": {"n_trades": 3}},
                {"side": "Ask", "strategy": "STGP((S,Pbest,1))", "count": 4}
            ],
            "schedules": [
                {"side": "Bid", "p_min": 100, "p_max": 200, "interval": 5},
                {"side": "Ask", "p_min": 100, "p_max": 200, "mode": "fixed_step", "interval": 5}
            ]
        }"#;
        let cfg = SessionConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sys_max, 500);
        assert_eq!(cfg.tau, 100);
        assert_eq!(cfg.roster[0].adaptive, Some(ClimberParams { k: 2, n_trades: 3, mutation_width: 0.05 }));
        assert_eq!(cfg.n_traders(), 5);
        assert_eq!(cfg.schedules[0].mode, AssignMode::Uniform);
        let again = SessionConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"duration": 1, "roster": [], "schedules": [], "colour": "red"}"#;
        assert!(SessionConfig::from_json(text).is_err());
    }

    #[test]
    fn validation_errors() {
        let mut c = zic_config(1, 1);
        c.sys_min = 0;
        assert_eq!(c.validate(), Err(ConfigError::Bounds(0, 500)));

        let mut c = zic_config(1, 1);
        c.roster.pop();
        assert_eq!(c.validate(), Err(ConfigError::OneSided));

        let mut c = zic_config(1, 1);
        c.schedules.pop();
        assert_eq!(c.validate(), Err(ConfigError::Uncovered(Side::Ask)));

        let mut c = zic_config(1, 1);
        c.schedules[0].p_max = 600;
        assert!(matches!(c.validate(), Err(ConfigError::Schedule { index: 0, .. })));

        let mut c = zic_config(1, 1);
        c.schedules[1].interval = 0;
        assert!(matches!(c.validate(), Err(ConfigError::Schedule { index: 1, .. })));

        let mut c = zic_config(1, 1);
        c.roster[0].adaptive = Some(ClimberParams::default());
        assert!(matches!(c.validate(), Err(ConfigError::Roster { index: 0, .. })));

        let mut c = zic_config(1, 1);
        c.tau = 0;
        assert_eq!(c.validate(), Err(ConfigError::Tau));
    }
}
