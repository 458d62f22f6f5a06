//! PlanM and the greedy baseline, and the run loop that records a trace.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;

use crate::arith::{GoldenNumber, Rational, TaggedWeight, TiebreakCounter};
use crate::instance::{Instance, Packet, Slot};
use crate::plan::{ArrivalOutcome, LivePacket, PacketKey, PacketRef, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    PlanM,
    Greedy,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PlanM => "planm",
            Algorithm::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "planm" => Ok(Algorithm::PlanM),
            "greedy" => Ok(Algorithm::Greedy),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Idle,
    Ordinary,
    SimpleLeap,
    IteratedLeap,
    Greedy,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Idle => "idle",
            StepKind::Ordinary => "ordinary",
            StepKind::SimpleLeap => "simple-leap",
            StepKind::IteratedLeap => "iterated-leap",
            StepKind::Greedy => "greedy",
        }
    }
}

impl FromStr for StepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            StepKind::Idle,
            StepKind::Ordinary,
            StepKind::SimpleLeap,
            StepKind::IteratedLeap,
            StepKind::Greedy,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown step kind {s:?}"))
    }
}

/// One shifted packet `h_i` of an iterated leap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLink {
    pub h: PacketKey,
    /// `τ_i = nextts(d_{h_i})`.
    pub tau: Slot,
    pub old_deadline: Slot,
    /// Always `τ_{i−1}`.
    pub new_deadline: Slot,
    pub old_weight: TaggedWeight,
    pub new_weight: TaggedWeight,
    /// `minwt(d_{h_i})` before the step.
    pub mu: TaggedWeight,
}

/// Everything PlanM decided in a step that sends a packet from a later segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeapRecord {
    pub p: PacketKey,
    pub rho: PacketKey,
    pub rho_deadline: Slot,
    pub rho_old_weight: TaggedWeight,
    pub rho_new_weight: TaggedWeight,
    pub ell: PacketKey,
    /// `prevts(d_p)`.
    pub delta: Slot,
    /// `nextts(d_ρ)`.
    pub gamma: Slot,
    /// `nextts(d_p)`.
    pub tau0: Slot,
    /// `minwt(d_p)` before the step.
    pub mu0: TaggedWeight,
    pub chain: Vec<ChainLink>,
}

impl LeapRecord {
    pub fn kind(&self) -> StepKind {
        if self.chain.is_empty() {
            StepKind::SimpleLeap
        } else {
            StepKind::IteratedLeap
        }
    }

    /// Total increase of base weights made by the step.
    pub fn weight_increase(&self) -> GoldenNumber {
        let mut sum = &self.rho_new_weight.value - &self.rho_old_weight.value;
        for link in &self.chain {
            sum += &(&link.new_weight.value - &link.old_weight.value);
        }
        sum
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub t: Slot,
    pub sent: Option<PacketKey>,
    pub kind: StepKind,
    pub leap: Option<LeapRecord>,
    pub delta_weights: GoldenNumber,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Arrival { t: Slot, packet: Packet },
    Scheduled(StepRecord),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub sentinel: Slot,
    pub events: Vec<TraceEvent>,
    pub gain0: Rational,
}

impl RunTrace {
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Scheduled(s) => Some(s),
            TraceEvent::Arrival { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulerResult {
    pub transmitted: Vec<(Slot, PacketKey)>,
    /// Sum of original weights of the packets sent.
    pub gain0: Rational,
    /// Sum of the weights the packets had when sent, bumps included.
    pub gain_current: GoldenNumber,
}

/// A run in progress: the plan, the not yet released packets, and the
/// tiebreak counter for bumped weights.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    algorithm: Algorithm,
    instance: &'a Instance,
    plan: Plan,
    next_arrival: usize,
    tiebreaks: TiebreakCounter,
    result: SchedulerResult,
}

impl<'a> Simulator<'a> {
    pub fn new(algorithm: Algorithm, instance: &'a Instance) -> Self {
        Simulator {
            algorithm,
            instance,
            plan: Plan::empty(0, instance.sentinel()),
            next_arrival: 0,
            tiebreaks: TiebreakCounter::new(),
            result: SchedulerResult {
                transmitted: Vec::new(),
                gain0: Rational::zero(),
                gain_current: GoldenNumber::zero(),
            },
        }
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn time(&self) -> Slot {
        self.plan.time()
    }

    pub fn is_done(&self) -> bool {
        self.time() >= self.instance.sentinel()
    }

    pub fn result(&self) -> &SchedulerResult {
        &self.result
    }

    /// Delivers the next packet released at the current time, if any.
    pub fn next_arrival(&mut self) -> Option<(Packet, ArrivalOutcome)> {
        let p = self.instance.packets().get(self.next_arrival)?;
        if p.release != self.time() {
            return None;
        }
        self.next_arrival += 1;
        let outcome = self.plan.apply_arrival(LivePacket::from_packet(p));
        Some((p.clone(), outcome))
    }

    /// Sends one packet (or idles) and moves to the next slot.
    pub fn step(&mut self) -> StepRecord {
        let t = self.time();
        let record = match self.algorithm {
            Algorithm::PlanM => planm_step(&mut self.plan, &mut self.tiebreaks),
            Algorithm::Greedy => greedy_step(&mut self.plan),
        };
        if let Some((key, w, w0)) = record.1 {
            self.result.transmitted.push((t, key));
            self.result.gain0 += w0;
            self.result.gain_current += &w.value;
        }
        record.0
    }
}

type Sent = Option<(PacketKey, TaggedWeight, Rational)>;

fn sent_info(plan: &Plan, key: PacketKey) -> Sent {
    let lp = plan.pending().get(key).expect("sent packet is pending");
    Some((key, lp.weight.clone(), lp.original.clone()))
}

/// `w_p + φ·w(sub(p))` for every plan packet, best first.
pub fn planm_objectives(plan: &Plan) -> Vec<(PacketKey, GoldenNumber)> {
    let mut out: Vec<(PacketKey, GoldenNumber)> = plan
        .members()
        .iter()
        .map(|&p| {
            let sub = plan.substitute(p).expect("member");
            let ws = plan.ref_weight(&sub);
            (p, &plan.weight(p).value + &ws.value.mul_phi())
        })
        .collect();
    out.sort_by(|(a, oa), (b, ob)| {
        ob.cmp(oa)
            .then_with(|| plan.weight(*b).cmp(plan.weight(*a)))
            .then_with(|| a.cmp(b))
    });
    out
}

/// The packet PlanM sends: the first entry of `planm_objectives`, found by
/// comparing only the heaviest member of each segment, since members of
/// one segment share their substitute.
pub fn planm_choice(plan: &Plan) -> Option<PacketKey> {
    let segments = plan.segments();
    let mut best: Vec<Option<PacketKey>> = vec![None; segments.len()];
    for &k in plan.members() {
        let d = plan.deadline(k);
        let i = segments.partition_point(|&(_, hi)| hi < d);
        match best[i] {
            Some(b) if plan.weight(b) >= plan.weight(k) => {}
            _ => best[i] = Some(k),
        }
    }
    let mut outside: Vec<&LivePacket> =
        plan.pending().iter().filter(|p| !plan.contains(p.key)).collect();
    outside.sort_by_key(|p| std::cmp::Reverse(p.deadline));
    let mut heaviest: Option<&TaggedWeight> = None;
    let mut next_outside = 0;
    let mut choice: Option<(PacketKey, GoldenNumber)> = None;
    for (i, &(lo, _)) in segments.iter().enumerate().rev() {
        while next_outside < outside.len() && outside[next_outside].deadline > lo {
            let w = &outside[next_outside].weight;
            if heaviest.is_none_or(|h| w > h) {
                heaviest = Some(w);
            }
            next_outside += 1;
        }
        let Some(p) = best[i] else { continue };
        let sub = if i == 0 {
            plan.minwt(plan.time()).value
        } else {
            heaviest.map_or_else(GoldenNumber::zero, |w| w.value.clone())
        };
        let objective = &plan.weight(p).value + &sub.mul_phi();
        let better = match &choice {
            None => true,
            Some((c, oc)) => objective
                .cmp(oc)
                .then_with(|| plan.weight(p).cmp(plan.weight(*c)))
                .then_with(|| c.cmp(&p))
                .is_gt(),
        };
        if better {
            choice = Some((p, objective));
        }
    }
    choice.map(|(p, _)| p)
}

/// One step of PlanM at the plan's current time.
pub fn planm_step(plan: &mut Plan, tiebreaks: &mut TiebreakCounter) -> (StepRecord, Sent) {
    let t = plan.time();
    let Some(p) = planm_choice(plan) else {
        plan.apply_idle();
        return (idle_record(t), None);
    };
    let sent = sent_info(plan, p);
    if plan.in_init_seg(p) {
        plan.apply_schedule_initseg(p).expect("initial segment");
        let record = StepRecord {
            t,
            sent: Some(p),
            kind: StepKind::Ordinary,
            leap: None,
            delta_weights: GoldenNumber::zero(),
        };
        return (record, sent);
    }

    let rho = match plan.substitute(p).expect("member") {
        PacketRef::Pending(k) => k,
        PacketRef::Virtual { .. } => plan.materialize_spare(),
    };
    // every query below reads the plan as it was before the step
    let before = plan.clone();
    let ell = before.ell().key().expect("initial segment ends before the sentinel");
    let dp = before.deadline(p);
    let rho_deadline = before.deadline(rho);
    let rho_old_weight = before.weight(rho).clone();
    let rho_new_weight = before.minwt(rho_deadline).bumped(tiebreaks.fresh_tiebreak());
    let gamma = before.nextts(rho_deadline);
    let tau0 = before.nextts(dp);
    let mut chain = Vec::new();
    let mut tau = tau0;
    while tau < gamma {
        let h = plan.heaviest_member_in(tau, gamma).expect("segment before gamma has members");
        let (old_deadline, old_weight, mu) = match before.pending().get(h) {
            Some(lp) => (lp.deadline, lp.weight.clone(), before.minwt(lp.deadline)),
            // a filler made explicit just now
            None => (plan.deadline(h), plan.weight(h).clone(), before.minwt(plan.deadline(h))),
        };
        let next = before.nextts(old_deadline);
        let floor = before.minwt(tau);
        let new_weight = if old_weight < floor {
            floor.bumped(tiebreaks.fresh_tiebreak())
        } else {
            old_weight.clone()
        };
        chain.push(ChainLink {
            h,
            tau: next,
            old_deadline,
            new_deadline: tau,
            old_weight,
            new_weight,
            mu,
        });
        tau = next;
    }

    let info = plan.apply_schedule_later(p).expect("later segment");
    debug_assert_eq!((info.rho, info.ell), (rho, ell));
    plan.set_weight(rho, rho_new_weight.clone());
    for link in &chain {
        plan.set_deadline(link.h, link.new_deadline);
        plan.set_weight(link.h, link.new_weight.clone());
    }
    let leap = LeapRecord {
        p,
        rho,
        rho_deadline,
        rho_old_weight,
        rho_new_weight,
        ell,
        delta: info.delta,
        gamma,
        tau0,
        mu0: before.minwt(dp),
        chain,
    };
    let record = StepRecord {
        t,
        sent: Some(p),
        kind: leap.kind(),
        delta_weights: leap.weight_increase(),
        leap: Some(leap),
    };
    (record, sent)
}

/// Sends the heaviest pending packet.
pub fn greedy_step(plan: &mut Plan) -> (StepRecord, Sent) {
    let t = plan.time();
    let Some(h) = plan.pending().iter().max_by(|a, b| a.weight.cmp(&b.weight)).map(|p| p.key)
    else {
        plan.apply_idle();
        return (idle_record(t), None);
    };
    let sent = sent_info(plan, h);
    plan.apply_schedule_any(h);
    let record = StepRecord {
        t,
        sent: Some(h),
        kind: StepKind::Greedy,
        leap: None,
        delta_weights: GoldenNumber::zero(),
    };
    (record, sent)
}

fn idle_record(t: Slot) -> StepRecord {
    StepRecord { t, sent: None, kind: StepKind::Idle, leap: None, delta_weights: GoldenNumber::zero() }
}

/// Simulates `algorithm` on `instance` from slot 0 up to the last deadline.
pub fn run(algorithm: Algorithm, instance: &Instance) -> (SchedulerResult, RunTrace) {
    let mut sim = Simulator::new(algorithm, instance);
    let mut events = Vec::new();
    while !sim.is_done() {
        let t = sim.time();
        while let Some((packet, _)) = sim.next_arrival() {
            events.push(TraceEvent::Arrival { t, packet });
        }
        events.push(TraceEvent::Scheduled(sim.step()));
    }
    let result = sim.result().clone();
    let trace = RunTrace {
        algorithm,
        sentinel: instance.sentinel(),
        events,
        gain0: result.gain0.clone(),
    };
    (result, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::integer;

    fn inst(spec: &[(u64, Slot, Slot, i64)]) -> Instance {
        Instance::new(spec.iter().map(|&(id, r, d, w)| Packet::new(id, r, d, integer(w))).collect())
            .unwrap()
    }

    fn w1() -> Instance {
        inst(&[(1, 0, 0, 3), (2, 0, 1, 5), (3, 0, 1, 1), (4, 0, 2, 4)])
    }

    fn w2() -> Instance {
        inst(&[(1, 0, 0, 5), (2, 0, 1, 10), (3, 0, 1, 4)])
    }

    fn sent_ids(r: &SchedulerResult) -> Vec<(Slot, PacketKey)> {
        r.transmitted.clone()
    }

    #[test]
    fn w1_planm_objectives() {
        let instance = w1();
        let mut sim = Simulator::new(Algorithm::PlanM, &instance);
        while sim.next_arrival().is_some() {}
        let obj = planm_objectives(sim.plan());
        let phi = GoldenNumber::phi();
        let get = |id| obj.iter().find(|(k, _)| *k == PacketKey::Real(id)).unwrap().1.clone();
        assert_eq!(get(1), GoldenNumber::from_int(3) + phi.scale(&integer(3)));
        assert_eq!(get(2), GoldenNumber::from_int(5) + phi.clone());
        assert_eq!(get(4), GoldenNumber::from_int(4));
        assert_eq!(obj[0].0, PacketKey::Real(1));
        assert_eq!(sim.step().kind, StepKind::Ordinary);
    }

    #[test]
    fn w1_gains() {
        let (planm, _) = run(Algorithm::PlanM, &w1());
        let (greedy, _) = run(Algorithm::Greedy, &w1());
        assert_eq!(planm.gain0, integer(12));
        assert_eq!(greedy.gain0, integer(9));
        assert_eq!(greedy.transmitted[0], (0, PacketKey::Real(2)));
    }

    #[test]
    fn w2_planm_leaps_to_y() {
        let (result, trace) = run(Algorithm::PlanM, &w2());
        let first = trace.steps().next().unwrap();
        assert_eq!(first.kind, StepKind::SimpleLeap);
        let leap = first.leap.as_ref().unwrap();
        assert_eq!(leap.rho, PacketKey::Real(3));
        assert_eq!(leap.rho_new_weight.value, GoldenNumber::from_int(5));
        assert_eq!(first.delta_weights, GoldenNumber::from_int(1));
        assert_eq!(sent_ids(&result), vec![(0, PacketKey::Real(2)), (1, PacketKey::Real(3))]);
        assert_eq!(result.gain0, integer(14));
        assert_eq!(result.gain_current, GoldenNumber::from_int(15));
    }

    #[test]
    fn w2_greedy() {
        let (result, _) = run(Algorithm::Greedy, &w2());
        assert_eq!(sent_ids(&result), vec![(0, PacketKey::Real(2)), (1, PacketKey::Real(3))]);
        assert_eq!(result.gain0, integer(14));
    }

    #[test]
    fn greedy_breaks_ties_by_arrival() {
        let (result, _) = run(Algorithm::Greedy, &inst(&[(7, 0, 1, 2), (3, 0, 1, 2), (5, 0, 1, 2)]));
        assert_eq!(result.transmitted[0], (0, PacketKey::Real(3)));
    }

    #[test]
    fn empty_instance_runs_to_nothing() {
        let (result, trace) = run(Algorithm::PlanM, &Instance::empty());
        assert!(trace.events.is_empty());
        assert!(result.gain0.is_zero());
    }
}
