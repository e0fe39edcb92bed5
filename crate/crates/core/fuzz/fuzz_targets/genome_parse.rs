#![no_main]

use cdasim::stgp::{canonicalize, ExprTree};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(tree) = ExprTree::parse(text) else { return };
    let printed = tree.to_string();
    let again = ExprTree::parse(&printed).expect("printed genome reparses");
    assert_eq!(again, tree);
    let c = canonicalize(&tree);
    assert_eq!(canonicalize(&c), c);
});
