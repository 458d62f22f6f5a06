//! The plan of a pending set: members, tight slots, segments, minwt and the
//! substitute of each member.

use planm::arith::{integer, rational};
use planm::{Instance, LivePacket, Packet, PacketKey, PacketRef, PendingSet, Plan};

fn main() {
    let names = ["f", "a", "b", "x", "k", "z", "p", "q"];
    let spec = [
        (0, 2, rational(9, 10)),
        (0, 3, rational(1, 2)),
        (0, 3, integer(1)),
        (1, 3, rational(3, 10)),
        (0, 4, rational(7, 10)),
        (1, 6, rational(4, 5)),
        (1, 7, rational(3, 5)),
        (1, 7, rational(1, 10)),
    ];
    let packets = spec.iter().enumerate().map(|(i, (r, d, w))| Packet::new(i as u64 + 1, *r, *d, w.clone())).collect();
    let instance = Instance::new(packets).unwrap();
    let mut pending = PendingSet::new(1, instance.sentinel());
    for p in instance.packets() {
        pending.insert(LivePacket::from_packet(p));
    }
    let plan = Plan::compute(pending);
    let name = |k: &PacketKey| match k {
        PacketKey::Real(id) => names[*id as usize - 1],
        PacketKey::Virtual(_) => "virtual",
    };
    let members: Vec<&str> = plan.members().iter().map(name).collect();
    println!("plan at t=1: {members:?}");
    println!("tight slots: {:?}", plan.tight_slots());
    println!("segments: {:?}", plan.segments());
    for tau in 1..=7 {
        println!("pslack({tau}) = {}, minwt({tau}) = {}", plan.pslack(tau).unwrap(), plan.minwt(tau).value.a);
    }
    for (slot, key) in plan.canonical_schedule() {
        println!("canonical slot {slot}: {}", name(&key));
    }
    for key in plan.members() {
        match plan.substitute(*key).unwrap() {
            PacketRef::Pending(sub) => println!("sub({}) = {}", name(key), name(&sub)),
            PacketRef::Virtual { deadline, .. } => println!("sub({}) = zero-weight filler due at {deadline}", name(key)),
        }
    }
}
