//! The offline optimum by augmenting paths, checked against exhaustive
//! search on small random instances.

use planm::{brute_force_opt, generate, optimal_schedule, GeneratorConfig, GeneratorKind};

fn main() {
    let mut cfg = GeneratorConfig::new(GeneratorKind::UniformRandom, 4, 5);
    cfg.max_per_step = 3;
    cfg.span = 2;
    cfg.max_weight = 20;
    for seed in 0..5 {
        let instance = generate(&GeneratorConfig { seed, ..cfg.clone() }).unwrap();
        let fast = optimal_schedule(&instance);
        let slow = brute_force_opt(&instance).unwrap();
        println!("seed {seed}: {} packets, optimum {} (exhaustive {})", instance.len(), fast.weight0, slow.weight0);
        print!("{}", fast.to_text());
    }
}
