use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{gvwy_quote, przi_pmf, przi_quote, shvr_quote, zic_quote, CustomerOrder, QuoteContext};
use crate::lob::Price;
use crate::stgp::{EvalContext, ExprTree, ParseError, QuoteMapping};

/// A trader's behavioural genome.
#[derive(Clone, Debug, PartialEq)]
pub enum StrategySpec {
    Zic,
    Gvwy,
    Shvr,
    Przi(f64),
    Stgp(ExprTree),
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("unknown strategy `{0}`")]
    Unknown(String),
    #[error("bad PRZI parameter `{0}`: expected a decimal in [-1, 1]")]
    BadPrzi(String),
    #[error("bad STGP genome: {0}")]
    BadGenome(#[from] ParseError),
}

impl StrategySpec {
    pub fn quote<R: Rng + ?Sized>(
        &self,
        co: &CustomerOrder,
        ctx: &QuoteContext,
        shave: i64,
        mapping: QuoteMapping,
        rng: &mut R,
    ) -> Price {
        match self {
            StrategySpec::Zic => zic_quote(co, ctx.bounds, rng),
            StrategySpec::Gvwy => gvwy_quote(co),
            StrategySpec::Shvr => shvr_quote(co, ctx, shave),
            StrategySpec::Przi(s) => {
                let pmf = przi_pmf(*s, co, ctx, shave).expect("PRZI strategy validated at construction");
                przi_quote(&pmf, rng)
            }
            StrategySpec::Stgp(tree) => {
                let ectx = EvalContext::new(ctx.best_same(co.side), co.limit, co.side, ctx.bounds);
                tree.quote(&ectx, co.side, ctx.bounds, mapping)
            }
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Zic => f.write_str("ZIC"),
            StrategySpec::Gvwy => f.write_str("GVWY"),
            StrategySpec::Shvr => f.write_str("SHVR"),
            StrategySpec::Przi(s) => write!(f, "PRZI({s})"),
            StrategySpec::Stgp(t) => write!(f, "STGP({t})"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = SpecError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        match s {
            "ZIC" => return Ok(StrategySpec::Zic),
            "GVWY" => return Ok(StrategySpec::Gvwy),
            "SHVR" => return Ok(StrategySpec::Shvr),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("PRZI(").and_then(|r| r.strip_suffix(')')) {
            let v: f64 = arg.trim().parse().map_err(|_| SpecError::BadPrzi(arg.to_string()))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(SpecError::BadPrzi(arg.to_string()));
            }
            return Ok(StrategySpec::Przi(v));
        }
        if let Some(arg) = s.strip_prefix("STGP(").and_then(|r| r.strip_suffix(')')) {
            return Ok(StrategySpec::Stgp(ExprTree::parse(arg)?));
        }
        Err(SpecError::Unknown(s.to_string()))
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategySpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_every_form() {
        assert_eq!("ZIC".parse(), Ok(StrategySpec::Zic));
        assert_eq!(" GVWY ".parse(), Ok(StrategySpec::Gvwy));
        assert_eq!("SHVR".parse(), Ok(StrategySpec::Shvr));
        assert_eq!("PRZI(-0.75)".parse(), Ok(StrategySpec::Przi(-0.75)));
        assert_eq!("STGP((S,(S,Pbest,1),LIMIT))".parse(), Ok(StrategySpec::Stgp(ExprTree::shaver_seed())));
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(matches!("AA".parse::<StrategySpec>(), Err(SpecError::Unknown(_))));
        assert!(matches!("PRZI(1.5)".parse::<StrategySpec>(), Err(SpecError::BadPrzi(_))));
        assert!(matches!("PRZI(NaN)".parse::<StrategySpec>(), Err(SpecError::BadPrzi(_))));
        assert!(matches!("PRZI(x)".parse::<StrategySpec>(), Err(SpecError::BadPrzi(_))));
        assert!(matches!("STGP((S,1))".parse::<StrategySpec>(), Err(SpecError::BadGenome(_))));
    }

    #[test]
    fn json_uses_text_form() {
        let v = serde_json::to_string(&StrategySpec::Przi(0.5)).unwrap();
        assert_eq!(v, "\"PRZI(0.5)\"");
        let back: StrategySpec = serde_json::from_str(&v).unwrap();
        assert_eq!(back, StrategySpec::Przi(0.5));
    }

    proptest! {
        #[test]
        fn przi_text_round_trip(s in -1.0f64..=1.0) {
            let spec = StrategySpec::Przi(s);
            prop_assert_eq!(spec.to_string().parse::<StrategySpec>().unwrap(), spec);
        }
    }
}
