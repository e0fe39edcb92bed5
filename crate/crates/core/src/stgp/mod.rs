//! Strongly-typed genetic programming over quote-price expressions.

mod canon;
mod evolve;
pub(crate) mod expr;
pub mod ops;

pub use canon::canonicalize;
pub use evolve::{
    breed, evaluate, run_evolution, run_generation, select_parent, stgp_seats, template_genome, write_elites,
    write_gen_stats_csv, GenStats, GpError, GpParams, Individual, Population,
};
pub use expr::{EvalContext, ExprTree, Op, ParseError, QuoteMapping, Terminal, ValueType, PARSE_DEPTH_LIMIT};
