//! Row selection rules and the data structures behind them.

mod cd;
mod heap;
mod rules;
mod sumtree;

pub use cd::{cd_select_and_step, CdRule, CoordinateDescent};
pub use heap::{CoordinateDelta, ResidualHeap, ScoreMode};
pub use rules::{GreedyTarget, RuleConfig, RuleKind, Selector};
pub use sumtree::SumTree;
