//! Replays a PlanM run through the potential-function verifier and prints
//! the per-event case labels and potential changes.

use planm::arith::integer;
use planm::{generate, optimal_schedule, run, verify, Algorithm, GeneratorConfig, GeneratorKind, Instance, Packet};

fn main() {
    let w2 = Instance::new(vec![
        Packet::new(1, 0, 0, integer(5)),
        Packet::new(2, 0, 1, integer(10)),
        Packet::new(3, 0, 1, integer(4)),
    ])
    .unwrap();
    let (_, trace) = run(Algorithm::PlanM, &w2);
    let report = verify(&w2, &trace, &optimal_schedule(&w2)).unwrap();
    print!("{}", report.to_csv());
    let s = &report.summary;
    println!("advgain total {} = OPT {}, PlanM gain0 {}", s.adv_total, s.comparison_weight0, s.alg_gain0);

    let instance = generate(&GeneratorConfig::new(GeneratorKind::Agreeable, 60, 3)).unwrap();
    let (_, trace) = run(Algorithm::PlanM, &instance);
    let report = verify(&instance, &trace, &optimal_schedule(&instance)).unwrap();
    let mut cases: Vec<&str> = report.reports.iter().flat_map(|r| r.cases.iter().copied()).collect();
    cases.sort();
    cases.dedup();
    println!(
        "agreeable run: {} events, {} violations, cases seen {cases:?}",
        report.reports.len(),
        report.violations.len()
    );
}
