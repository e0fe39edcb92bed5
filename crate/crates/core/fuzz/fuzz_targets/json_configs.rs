#![no_main]

use cdasim::cli::{CoevolveConfig, QuiverConfig, StgpConfig};
use cdasim::session::SessionConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SessionConfig::from_json(text) {
        let _ = cfg.validate();
    }
    let _ = serde_json::from_str::<QuiverConfig>(text);
    let _ = serde_json::from_str::<CoevolveConfig>(text);
    if let Ok(cfg) = serde_json::from_str::<StgpConfig>(text) {
        let _ = cfg.template.validate();
        let _ = cfg.gp.validate();
    }
});
