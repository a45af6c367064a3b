//! Generators, baselines and the experiment runner.

pub mod experiment;
pub mod generators;
pub mod greedy;
pub mod script;

pub use experiment::{run_experiment, write_results, ExperimentConfig, Family, OutputFormat, ResultRow, RESULT_COLUMNS};
pub use generators::{gen_lost_cow, gen_random_layered_tree, gen_random_script, gen_random_script_with, ScriptMix};
pub use greedy::baseline_greedy;
pub use script::{AdversaryScript, ScriptStep};
