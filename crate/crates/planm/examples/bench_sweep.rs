//! Ratio tables: the adversarial chain for n = 4..24, then a random batch
//! with verifier replay, both as CSV.

use planm::bench::{rows_to_csv, run_experiment, ExperimentConfig};
use planm::{Algorithm, GeneratorConfig, GeneratorKind};

fn main() {
    let both = vec![Algorithm::PlanM, Algorithm::Greedy];
    let chains: Vec<GeneratorConfig> =
        (4..=24).step_by(4).map(|n| GeneratorConfig::new(GeneratorKind::PhiAdversarial, n, 0)).collect();
    let rows = run_experiment(&ExperimentConfig::new(chains, both.clone(), 1)).unwrap();
    print!("{}", rows_to_csv(&rows, false));

    let mut config = ExperimentConfig::new(vec![GeneratorConfig::s_bounded(2, 40, 100)], both, 5);
    config.verify = true;
    let rows = run_experiment(&config).unwrap();
    println!();
    print!("{}", rows_to_csv(&rows, false));
}
