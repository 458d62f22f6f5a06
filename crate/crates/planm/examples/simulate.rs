//! PlanM and the greedy baseline on two small instances, with the trace
//! text PlanM produces.

use planm::arith::integer;
use planm::{run, serialize_trace, Algorithm, Instance, Packet};

fn main() {
    let w1 = Instance::new(vec![
        Packet::new(1, 0, 0, integer(3)),
        Packet::new(2, 0, 1, integer(5)),
        Packet::new(3, 0, 1, integer(1)),
        Packet::new(4, 0, 2, integer(4)),
    ])
    .unwrap();
    let w2 = Instance::new(vec![
        Packet::new(1, 0, 0, integer(5)),
        Packet::new(2, 0, 1, integer(10)),
        Packet::new(3, 0, 1, integer(4)),
    ])
    .unwrap();
    for (name, instance) in [("W1", &w1), ("W2", &w2)] {
        for algorithm in [Algorithm::PlanM, Algorithm::Greedy] {
            let (result, _) = run(algorithm, instance);
            let sent: Vec<String> = result.transmitted.iter().map(|(t, k)| format!("{t}:{k}")).collect();
            println!("{name} {algorithm}: sent [{}], gain0 = {}", sent.join(" "), result.gain0);
        }
    }
    let (_, trace) = run(Algorithm::PlanM, &w2);
    print!("\n{}", serialize_trace(&trace));
}
