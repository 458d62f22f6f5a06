//! Offline optimum by matroid greedy with augmenting paths, and an
//! exhaustive oracle for small instances.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::arith::{format_rational, parse_rational, Rational};
use crate::instance::{Instance, Packet, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("brute force handles at most {max} packets, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Slot to packet id; each packet at most once, inside its window.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub assignment: BTreeMap<Slot, u64>,
    pub weight0: Rational,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule { assignment: BTreeMap::new(), weight0: Rational::zero() }
    }

    fn from_assignment(instance: &Instance, assignment: BTreeMap<Slot, u64>) -> Self {
        let weight0 = assignment
            .values()
            .map(|&id| instance.get(id).expect("scheduled packet exists").original_weight().clone())
            .sum();
        Schedule { assignment, weight0 }
    }

    /// The slot of packet `id`, if scheduled.
    pub fn slot_of(&self, id: u64) -> Option<Slot> {
        self.assignment.iter().find(|(_, &p)| p == id).map(|(&s, _)| s)
    }

    pub fn slots_by_packet(&self) -> HashMap<u64, Slot> {
        self.assignment.iter().map(|(&s, &p)| (p, s)).collect()
    }

    /// Checks windows, uniqueness and the recorded total.
    pub fn check(&self, instance: &Instance) -> Result<(), String> {
        let mut seen = HashMap::new();
        for (&slot, &id) in &self.assignment {
            let p = instance.get(id).ok_or_else(|| format!("unknown packet {id}"))?;
            if slot < p.release || slot > p.deadline {
                return Err(format!("packet {id} at slot {slot} outside [{}, {}]", p.release, p.deadline));
            }
            if let Some(other) = seen.insert(id, slot) {
                return Err(format!("packet {id} at slots {other} and {slot}"));
            }
        }
        let total: Rational = self
            .assignment
            .values()
            .map(|&id| instance.get(id).unwrap().original_weight().clone())
            .sum();
        if total != self.weight0 {
            return Err(format!("recorded total {} but packets sum to {}", self.weight0, total));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (slot, id) in &self.assignment {
            out.push_str(&format!("{slot},{id}\n"));
        }
        out.push_str(&format!("total,{}\n", format_rational(&self.weight0)));
        out
    }

    pub fn parse(text: &str) -> Result<Schedule, OptError> {
        let mut sched = Schedule::empty();
        let mut total = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| OptError::Syntax { line: i + 1, message };
            let (a, b) = line.split_once(',').ok_or_else(|| err("expected two fields".into()))?;
            if a == "total" {
                total = Some(parse_rational(b).map_err(|e| err(e.to_string()))?);
                continue;
            }
            let slot: Slot = a.parse().map_err(|_| err(format!("bad slot {a:?}")))?;
            let id: u64 = b.parse().map_err(|_| err(format!("bad packet id {b:?}")))?;
            if sched.assignment.insert(slot, id).is_some() {
                return Err(err(format!("slot {slot} used twice")));
            }
        }
        sched.weight0 = total.ok_or(OptError::Syntax { line: 0, message: "missing total".into() })?;
        Ok(sched)
    }
}

/// Bipartite matching of packets to slots, grown one packet at a time.
struct SlotMatching<'a> {
    packets: &'a [Packet],
    owner: Vec<Option<usize>>,
    seen: Vec<u32>,
    round: u32,
}

impl<'a> SlotMatching<'a> {
    fn new(packets: &'a [Packet]) -> Self {
        let slots = packets.iter().map(|p| p.deadline + 1).max().unwrap_or(0).max(0) as usize;
        SlotMatching { packets, owner: vec![None; slots], seen: vec![0; slots], round: 0 }
    }

    fn augment(&mut self, i: usize) -> bool {
        let p = &self.packets[i];
        for slot in p.release as usize..=p.deadline as usize {
            if self.seen[slot] == self.round {
                continue;
            }
            self.seen[slot] = self.round;
            match self.owner[slot] {
                None => {
                    self.owner[slot] = Some(i);
                    return true;
                }
                Some(j) => {
                    if self.augment(j) {
                        self.owner[slot] = Some(i);
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Adds packet `i` if the matched set stays feasible.
    fn try_add(&mut self, i: usize) -> bool {
        self.round += 1;
        self.augment(i)
    }

    fn assignment(&self) -> BTreeMap<Slot, u64> {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(s, o)| o.map(|i| (s as Slot, self.packets[i].id)))
            .collect()
    }

    fn chosen(&self) -> Vec<&'a Packet> {
        self.owner.iter().flatten().map(|&i| &self.packets[i]).collect()
    }
}

/// Earliest-deadline-first placement of a set, ties by id; `None` if some
/// packet misses its deadline.
pub fn edf_assignment(set: &[&Packet]) -> Option<BTreeMap<Slot, u64>> {
    let mut order: Vec<&Packet> = set.to_vec();
    order.sort_by_key(|p| (p.release, p.deadline, p.id));
    let mut waiting: std::collections::BTreeSet<(Slot, u64)> = Default::default();
    let mut out = BTreeMap::new();
    let mut next = 0;
    let mut t = order.first().map(|p| p.release).unwrap_or(0);
    while next < order.len() || !waiting.is_empty() {
        if waiting.is_empty() {
            t = t.max(order[next].release);
        }
        while next < order.len() && order[next].release <= t {
            waiting.insert((order[next].deadline, order[next].id));
            next += 1;
        }
        let (d, id) = waiting.pop_first().expect("nonempty");
        if d < t {
            return None;
        }
        out.insert(t, id);
        t += 1;
    }
    Some(out)
}

/// Maximum-weight schedule: packets in decreasing weight order are kept
/// whenever an augmenting path fits them in. The kept set is placed
/// earliest-deadline-first.
pub fn optimal_schedule(instance: &Instance) -> Schedule {
    let mut order: Vec<usize> = (0..instance.len()).collect();
    let packets = instance.packets();
    order.sort_by(|&a, &b| packets[b].weight.cmp(&packets[a].weight));
    let mut matching = SlotMatching::new(packets);
    for i in order {
        matching.try_add(i);
    }
    let chosen = matching.chosen();
    let assignment = edf_assignment(&chosen).expect("matched set is feasible");
    Schedule::from_assignment(instance, assignment)
}

/// Exhaustive search over subsets with an earliest-deadline-first
/// feasibility test.
pub fn brute_force_opt(instance: &Instance) -> Result<Schedule, OptError> {
    let n = instance.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(OptError::TooLarge { max: BRUTE_FORCE_LIMIT, got: n });
    }
    let packets = instance.packets();
    let mut best = Schedule::empty();
    for mask in 0u32..(1 << n) {
        let set: Vec<&Packet> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &packets[i]).collect();
        let weight: Rational = set.iter().map(|p| p.original_weight().clone()).sum();
        if weight <= best.weight0 && mask != 0 {
            continue;
        }
        if let Some(assignment) = edf_assignment(&set) {
            best = Schedule { assignment, weight0: weight };
        }
    }
    Ok(best)
}

/// A random maximal feasible schedule, for exercising the verifier with
/// comparison schedules other than the optimum.
pub fn random_feasible_schedule(instance: &Instance, rng: &mut impl Rng) -> Schedule {
    let packets = instance.packets();
    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.shuffle(rng);
    let mut matching = SlotMatching::new(packets);
    for i in order {
        if rng.gen_bool(0.8) {
            matching.try_add(i);
        }
    }
    Schedule::from_assignment(instance, matching.assignment())
}
