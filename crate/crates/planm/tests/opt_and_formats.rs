//! Offline optimum against exhaustive search, and text-format round trips.

use planm::arith::rational;
use planm::{
    brute_force_opt, optimal_schedule, parse_instance, parse_trace, run, serialize_instance, serialize_trace,
    Algorithm, Instance, Packet, Schedule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(0..=12u64);
    let packets = (1..=n)
        .map(|id| {
            let r = rng.gen_range(0..6);
            let d = r + rng.gen_range(0..4);
            Packet::new(id, r, d, rational(rng.gen_range(0..20), rng.gen_range(1..4)))
        })
        .collect();
    Instance::new(packets).unwrap()
}

#[test]
fn optimum_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..500 {
        let inst = small_instance(&mut rng);
        let fast = optimal_schedule(&inst);
        let slow = brute_force_opt(&inst).unwrap();
        assert_eq!(fast.weight0, slow.weight0, "instance {i}: {}", serialize_instance(&inst));
        fast.check(&inst).unwrap();
        assert_eq!(Schedule::parse(&fast.to_text()).unwrap(), fast);
    }
}

fn packets() -> impl Strategy<Value = Vec<(i64, i64, i64, i64)>> {
    prop::collection::vec((0i64..20, 0i64..6, 0i64..1000, 1i64..50), 0..25)
}

fn build(spec: Vec<(i64, i64, i64, i64)>) -> Instance {
    let packets = spec
        .into_iter()
        .enumerate()
        .map(|(i, (r, span, num, den))| Packet::new(i as u64 + 1, r, r + span, rational(num, den)))
        .collect();
    Instance::new(packets).unwrap()
}

proptest! {
    #[test]
    fn instance_text_round_trips(spec in packets()) {
        let inst = build(spec);
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn trace_text_round_trips(spec in packets(), greedy in any::<bool>()) {
        let inst = build(spec);
        let algorithm = if greedy { Algorithm::Greedy } else { Algorithm::PlanM };
        let (_, trace) = run(algorithm, &inst);
        let text = serialize_trace(&trace);
        prop_assert_eq!(parse_trace(&text).unwrap(), trace);
    }
}
