#![no_main]

use cdasim::traders::StrategySpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = text.parse::<StrategySpec>() else { return };
    let again: StrategySpec = spec.to_string().parse().expect("printed spec reparses");
    assert_eq!(again.to_string(), spec.to_string());
});
