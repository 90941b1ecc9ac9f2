//! Small negotiations used throughout the tests and the documentation.

use crate::model::Arena;
use crate::textio::parse;

pub const FAMILY_ACYCLIC: &str = include_str!("../fixtures/family_acyclic.neg");
pub const FAMILY_DEADLOCK: &str = include_str!("../fixtures/family_deadlock.neg");
pub const FAMILY_CYCLIC: &str = include_str!("../fixtures/family_cyclic.neg");
pub const TWO_DAUGHTERS: &str = include_str!("../fixtures/two_daughters.neg");
pub const TWO_DAUGHTERS_SPLIT: &str = include_str!("../fixtures/two_daughters_split.neg");
pub const TIE_PAIR: &str = include_str!("../fixtures/tie_pair.neg");
pub const GOING_OUT: &str = include_str!("../fixtures/going_out.neg");

pub const ALL: [&str; 7] = [
    FAMILY_ACYCLIC,
    FAMILY_DEADLOCK,
    FAMILY_CYCLIC,
    TWO_DAUGHTERS,
    TWO_DAUGHTERS_SPLIT,
    TIE_PAIR,
    GOING_OUT,
];

/// Hand-written alternating machines with their expected answer.
pub const ATM_CORPUS: [(&str, bool); 9] = [
    (include_str!("../fixtures/atm/one_step.atm"), true),
    (include_str!("../fixtures/atm/universal_loop.atm"), false),
    (include_str!("../fixtures/atm/exists_choice.atm"), true),
    (include_str!("../fixtures/atm/universal_both.atm"), true),
    (include_str!("../fixtures/atm/universal_reject.atm"), false),
    (include_str!("../fixtures/atm/scan_accept.atm"), true),
    (include_str!("../fixtures/atm/scan_reject.atm"), false),
    (include_str!("../fixtures/atm/stuck.atm"), false),
    (include_str!("../fixtures/atm/alternation.atm"), true),
];

/// Parses one of the bundled fixtures.
///
/// # Panics
/// If the fixture text is not a valid arena.
pub fn load(text: &str) -> Arena {
    parse(text).expect("bundled fixture must parse")
}
