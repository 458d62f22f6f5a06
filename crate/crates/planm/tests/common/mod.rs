//! Hand-built instances shared by the integration tests.
#![allow(dead_code)]

use planm::arith::{integer, rational};
use planm::plan::{LivePacket, PendingSet, Plan};
use planm::{Instance, Packet, Rational, Schedule, Slot};

pub fn instance(spec: &[(u64, Slot, Slot, Rational)]) -> Instance {
    Instance::new(spec.iter().map(|(id, r, d, w)| Packet::new(*id, *r, *d, w.clone())).collect()).unwrap()
}

fn ints(spec: &[(u64, Slot, Slot, i64)]) -> Instance {
    instance(&spec.iter().map(|&(id, r, d, w)| (id, r, d, integer(w))).collect::<Vec<_>>())
}

/// a=1 (d 0, w 3), b=2 (d 1, w 5), c=3 (d 1, w 1), e=4 (d 2, w 4).
pub fn w1() -> Instance {
    ints(&[(1, 0, 0, 3), (2, 0, 1, 5), (3, 0, 1, 1), (4, 0, 2, 4)])
}

/// `w1` plus k=5 (d 1, w 6).
pub fn w1_with_k() -> Instance {
    ints(&[(1, 0, 0, 3), (2, 0, 1, 5), (3, 0, 1, 1), (4, 0, 2, 4), (5, 0, 1, 6)])
}

/// b=1 (d 0, w 5), y=2 (d 1, w 10), c=3 (d 1, w 4).
pub fn w2() -> Instance {
    ints(&[(1, 0, 0, 5), (2, 0, 1, 10), (3, 0, 1, 4)])
}

pub fn schedule(slots: &[(Slot, u64)], total: i64) -> Schedule {
    Schedule { assignment: slots.iter().copied().collect(), weight0: integer(total) }
}

/// Ids of the eight packets of the example plan, pending at
/// time 1.
pub mod fig {
    pub const F: u64 = 1;
    pub const A: u64 = 2;
    pub const B: u64 = 3;
    pub const X: u64 = 4;
    pub const K: u64 = 5;
    pub const Z: u64 = 6;
    pub const P: u64 = 7;
    pub const Q: u64 = 8;
}

/// Eight packets whose plan at time 1 is {f,a,b,k,z,p,q} with segments
/// (0,3], (3,4], (4,7]. x is heavier than q but loses the contest for
/// slots 1..3.
pub fn plan_example() -> Instance {
    use fig::*;
    instance(&[
        (F, 0, 2, rational(9, 10)),
        (A, 0, 3, rational(1, 2)),
        (B, 0, 3, integer(1)),
        (X, 1, 3, rational(3, 10)),
        (K, 0, 4, rational(7, 10)),
        (Z, 1, 6, rational(4, 5)),
        (P, 1, 7, rational(3, 5)),
        (Q, 1, 7, rational(1, 10)),
    ])
}

pub fn plan_at(instance: &Instance, t: Slot) -> Plan {
    let mut pending = PendingSet::new(t, instance.sentinel());
    for p in instance.packets() {
        pending.insert(LivePacket::from_packet(p));
    }
    Plan::compute(pending)
}
