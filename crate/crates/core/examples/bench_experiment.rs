//! Runs a small experiment grid and prints the results as CSV.

use lgt::harness::{run_experiment, write_results, ExperimentConfig, Family, OutputFormat};

fn main() -> lgt::Result<()> {
    let cfg = ExperimentConfig {
        ks: vec![2, 3],
        families: vec![
            Family::LostCow { instances: 2, max_length: 5 },
            Family::RandomScripts { instances: 2, steps: 40, mix: Default::default() },
            Family::RandomLayered { instances: 2, layers: 8, unit_edge_prob: 0.4 },
        ],
        samples: 500,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg)?;
    write_results(&rows, OutputFormat::Csv, std::io::stdout().lock())
}
