//! Seeded instance generators, printed in the JSON-lines instance format.

use planm::{generate, serialize_instance, GeneratorConfig, GeneratorKind};

fn main() {
    for kind in GeneratorKind::ALL {
        let mut cfg = GeneratorConfig::new(kind, 5, 42);
        cfg.max_per_step = 2;
        cfg.max_weight = 100;
        if kind == GeneratorKind::SBounded {
            cfg.span = 1;
        }
        let instance = generate(&cfg).unwrap();
        println!("# {kind}: {} packets, sentinel slot {}", instance.len(), instance.sentinel());
        print!("{}", serialize_instance(&instance));
    }
}
