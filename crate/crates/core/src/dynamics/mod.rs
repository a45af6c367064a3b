//! Mirror-descent dynamics on the evolving tree.

pub mod game;
pub mod integrate;
pub mod multipliers;

pub use game::{run_script, CostLedger, Game, GameTrace, StepCost, StepDetail, StepRecord};
pub use integrate::{deadend_drain, integrate_growth, DrainOutcome, GrowthOutcome, IntegratorConfig, Sample, Scheme, StepDiagnostics};
pub use multipliers::{solve_driven, solve_multipliers, Drive, MultiplierSolution, MultiplierVector};
