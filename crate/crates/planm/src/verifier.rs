//! Replays a PlanM run next to a comparison schedule and checks the
//! amortized bookkeeping at every event in exact arithmetic.
//!
//! The comparison schedule is tracked as a map `A` from slots to entries:
//! real packets that are still in the plan, or shadows that only remember a
//! weight. `F` holds furloughed packets outside the plan, and the potential
//! is `Ψ = w(B)/φ` with `B = F ∪ (P \ A)`. Internally the verifier tracks
//! `W = φΨ = w(B)`.
//!
//! Slot `H` (the sentinel) acts as an unbounded sink: slack conditions are
//! checked below it only, and the implicit zero-weight virtual packets that
//! pad the plan and `F` there are never listed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{format_rational, GoldenNumber, Rational, TaggedWeight, TiebreakCounter};
use crate::instance::{Instance, Packet, Slot};
use crate::opt::Schedule;
use crate::plan::{ArrivalOutcome, LivePacket, PacketKey, PacketRef, Plan, SlackProfile};
use crate::scheduler::{planm_step, Algorithm, LeapRecord, RunTrace, StepKind, StepRecord, TraceEvent};

/// An entry of the comparison schedule still to be collected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Real { key: PacketKey, weight: TaggedWeight },
    Shadow { weight: TaggedWeight, created_at: usize },
}

impl Entry {
    pub fn weight(&self) -> &TaggedWeight {
        match self {
            Entry::Real { weight, .. } | Entry::Shadow { weight, .. } => weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("comparison schedule is infeasible: {0}")]
    InfeasibleComparison(String),
    #[error("only planm traces can be verified, got {0}")]
    NotPlanM(Algorithm),
    #[error("trace sentinel {trace} differs from the instance sentinel {instance}")]
    SentinelMismatch { trace: Slot, instance: Slot },
}

/// A failed check. Structural failures carry zero on both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub event: usize,
    pub t: Slot,
    pub case: String,
    pub check: &'static str,
    pub lhs: GoldenNumber,
    pub rhs: GoldenNumber,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "event {} at t={} [{}] {}", self.event, self.t, self.case, self.check)?;
        if !(self.lhs.is_zero() && self.rhs.is_zero()) {
            write!(f, ": {} < {}", self.lhs, self.rhs)?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventReport {
    pub event: usize,
    pub t: Slot,
    pub kind: &'static str,
    pub cases: Vec<&'static str>,
    /// `ΔΨ` of each phase: `arrival`, or `adv` then `alg` (ordinary and
    /// idle steps) or `adv`, `init-seg`, `segment` (leaps).
    pub phases: Vec<(&'static str, GoldenNumber)>,
    pub delta_psi: GoldenNumber,
    pub advgain: GoldenNumber,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub events: usize,
    /// False when replay stopped at a violation.
    pub completed: bool,
    pub adv_total: GoldenNumber,
    pub comparison_weight0: Rational,
    pub alg_gain0: Rational,
    /// `Σ (w(p_t) − ΔW_t)` over the steps.
    pub alg_net: GoldenNumber,
    pub psi_final: GoldenNumber,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub reports: Vec<EventReport>,
    pub violations: Vec<Violation>,
    pub summary: Summary,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("event,t,kind,cases,delta_psi,advgain,status\n");
        for r in &self.reports {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.event,
                r.t,
                r.kind,
                r.cases.join(";"),
                r.delta_psi,
                r.advgain,
                if r.passed { "ok" } else { "violation" }
            ));
        }
        out
    }
}

/// Pending packets as the analysis sees them, mirrored from the plan.
#[derive(Debug, Clone)]
struct World {
    t: Slot,
    h: Slot,
    pending: BTreeMap<PacketKey, (Slot, TaggedWeight)>,
    members: BTreeSet<PacketKey>,
}

impl World {
    fn deadline(&self, k: PacketKey) -> Slot {
        self.pending[&k].0
    }

    fn weight(&self, k: PacketKey) -> &TaggedWeight {
        &self.pending[&k].1
    }

    fn advance(&mut self) {
        self.t += 1;
        let t = self.t;
        self.pending.retain(|_, (d, _)| *d >= t);
    }

    fn mismatch(&self, plan: &Plan) -> Option<String> {
        if self.t != plan.time() {
            return Some(format!("time {} vs plan time {}", self.t, plan.time()));
        }
        if &self.members != plan.members() {
            return Some(format!("members {:?} vs plan {:?}", self.members, plan.members()));
        }
        if self.pending.len() != plan.pending().len() {
            return Some("pending sets differ".into());
        }
        for lp in plan.pending().iter() {
            match self.pending.get(&lp.key) {
                Some((d, w)) if *d == lp.deadline && *w == lp.weight => {}
                other => return Some(format!("packet {} is {other:?} but the plan has ({}, {})", lp.key, lp.deadline, lp.weight)),
            }
        }
        None
    }
}

/// A packet of `F` chosen by some rule; `Implicit` is one of the
/// zero-weight virtual packets at the sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pick {
    Key(PacketKey, Slot),
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Initial,
    Middle,
    Terminal,
}

/// Per-event scratch: case labels, adversary gain and soft failures.
struct Ctx {
    event: usize,
    t: Slot,
    cases: Vec<&'static str>,
    adv: GoldenNumber,
    phases: Vec<(&'static str, GoldenNumber)>,
    failures: Vec<Violation>,
}

impl Ctx {
    fn case(&mut self, label: &'static str) {
        self.cases.push(label);
    }

    /// Records a phase's change of `W = φΨ`.
    fn phase(&mut self, name: &'static str, dw: &GoldenNumber) {
        self.phases.push((name, dw.clone()));
    }

    fn label(&self) -> String {
        self.cases.join(";")
    }

    fn fail(&self, check: &'static str, detail: String) -> Violation {
        Violation {
            event: self.event,
            t: self.t,
            case: self.label(),
            check,
            lhs: GoldenNumber::zero(),
            rhs: GoldenNumber::zero(),
            detail,
        }
    }

    fn soft(&mut self, check: &'static str, detail: String) {
        let v = self.fail(check, detail);
        self.failures.push(v);
    }

    /// Records a failure unless `lhs ≥ rhs`.
    fn check_ge(&mut self, check: &'static str, lhs: GoldenNumber, rhs: GoldenNumber) {
        if lhs < rhs {
            let mut v = self.fail(check, String::new());
            v.lhs = lhs;
            v.rhs = rhs;
            self.failures.push(v);
        }
    }
}

fn value(w: &TaggedWeight) -> GoldenNumber {
    w.value.clone()
}

/// The chain of a leap with `h_0 = p` and `h_{k+1} = ρ`.
struct Chain {
    hs: Vec<PacketKey>,
    tau: Vec<Slot>,
    mu: Vec<TaggedWeight>,
    old_w: Vec<TaggedWeight>,
    new_w: Vec<TaggedWeight>,
    new_d: Vec<Option<Slot>>,
}

impl Chain {
    fn new(leap: &LeapRecord, wp: &TaggedWeight) -> Self {
        let k = leap.chain.len();
        let mut c = Chain {
            hs: vec![leap.p],
            tau: vec![leap.tau0],
            mu: vec![leap.mu0.clone()],
            old_w: vec![wp.clone()],
            new_w: vec![wp.clone()],
            new_d: vec![None],
        };
        for link in &leap.chain {
            c.hs.push(link.h);
            c.tau.push(link.tau);
            c.mu.push(link.mu.clone());
            c.old_w.push(link.old_weight.clone());
            c.new_w.push(link.new_weight.clone());
            c.new_d.push(Some(link.new_deadline));
        }
        c.hs.push(leap.rho);
        c.old_w.push(leap.rho_old_weight.clone());
        c.new_w.push(leap.rho_new_weight.clone());
        c.new_d.push(None);
        debug_assert_eq!(c.hs.len(), k + 2);
        c
    }

    fn k(&self) -> usize {
        self.hs.len() - 2
    }

    fn dw(&self, i: usize) -> GoldenNumber {
        &self.new_w[i].value - &self.old_w[i].value
    }

    /// `Σ Δw(h_lo..=h_hi)`, zero when empty.
    fn sum_dw(&self, lo: usize, hi: usize) -> GoldenNumber {
        let mut s = GoldenNumber::zero();
        for i in lo..=hi {
            s += &self.dw(i);
        }
        s
    }
}

pub struct Verifier<'a> {
    instance: &'a Instance,
    opt_slot: HashMap<u64, Slot>,
    comparison_weight0: Rational,
    plan: Plan,
    tiebreaks: TiebreakCounter,
    next_arrival: usize,
    world: World,
    a: BTreeMap<Slot, Entry>,
    a_real: BTreeMap<PacketKey, Slot>,
    f: BTreeSet<(Slot, PacketKey)>,
    f_deadline: BTreeMap<PacketKey, Slot>,
    w_b: GoldenNumber,
    adv_total: GoldenNumber,
    alg_net: GoldenNumber,
    alg_gain0: Rational,
    event: usize,
    halted: bool,
    reports: Vec<EventReport>,
    violations: Vec<Violation>,
    rng: ChaCha8Rng,
    phi: GoldenNumber,
    inv_phi: GoldenNumber,
}

impl<'a> Verifier<'a> {
    pub fn new(instance: &'a Instance, comparison: &Schedule) -> Result<Self, VerifyError> {
        comparison.check(instance).map_err(VerifyError::InfeasibleComparison)?;
        let h = instance.sentinel();
        Ok(Verifier {
            instance,
            opt_slot: comparison.slots_by_packet(),
            comparison_weight0: comparison.weight0.clone(),
            plan: Plan::empty(0, h),
            tiebreaks: TiebreakCounter::new(),
            next_arrival: 0,
            world: World { t: 0, h, pending: BTreeMap::new(), members: BTreeSet::new() },
            a: BTreeMap::new(),
            a_real: BTreeMap::new(),
            f: BTreeSet::new(),
            f_deadline: BTreeMap::new(),
            w_b: GoldenNumber::zero(),
            adv_total: GoldenNumber::zero(),
            alg_net: GoldenNumber::zero(),
            alg_gain0: Rational::from_integer(0.into()),
            event: 0,
            halted: false,
            reports: Vec::new(),
            violations: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
            phi: GoldenNumber::phi(),
            inv_phi: GoldenNumber::inv_phi(),
        })
    }

    pub fn time(&self) -> Slot {
        self.world.t
    }

    /// `Ψ = w(B)/φ`, as tracked.
    pub fn psi(&self) -> GoldenNumber {
        &self.w_b * &self.inv_phi
    }

    pub fn entries(&self) -> &BTreeMap<Slot, Entry> {
        &self.a
    }

    pub fn furloughed(&self) -> Vec<PacketKey> {
        self.f.iter().map(|&(_, k)| k).collect()
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn on_event(&mut self, ev: &TraceEvent) {
        if self.halted {
            return;
        }
        let mut ctx = Ctx {
            event: self.event,
            t: self.world.t,
            cases: Vec::new(),
            adv: GoldenNumber::zero(),
            phases: Vec::new(),
            failures: Vec::new(),
        };
        let w_before = self.w_b.clone();
        let (kind, result) = match ev {
            TraceEvent::Arrival { t, packet } => ("arrival", self.arrival(&mut ctx, *t, packet)),
            TraceEvent::Scheduled(rec) => ("step", self.step(&mut ctx, rec)),
        };
        match result {
            Ok(()) => self.after_event(&mut ctx),
            Err(v) => ctx.failures.push(v),
        }
        self.adv_total += &ctx.adv;
        let passed = ctx.failures.is_empty();
        self.reports.push(EventReport {
            event: self.event,
            t: ctx.t,
            kind,
            cases: ctx.cases,
            phases: ctx.phases.into_iter().map(|(n, dw)| (n, &dw * &self.inv_phi)).collect(),
            delta_psi: &(&self.w_b - &w_before) * &self.inv_phi,
            advgain: ctx.adv,
            passed,
        });
        self.violations.extend(ctx.failures);
        self.halted |= !passed;
        self.event += 1;
    }

    // ---- F and A bookkeeping ----

    fn f_has(&self, k: PacketKey) -> bool {
        self.f_deadline.contains_key(&k)
    }

    fn add_f(&mut self, k: PacketKey) {
        let d = self.world.deadline(k);
        self.f.insert((d, k));
        self.f_deadline.insert(k, d);
    }

    fn remove_pick(&mut self, pick: Pick) {
        if let Pick::Key(k, d) = pick {
            self.f.remove(&(d, k));
            self.f_deadline.remove(&k);
        }
    }

    fn pick_value(&self, pick: Pick) -> GoldenNumber {
        match pick {
            Pick::Key(k, _) => value(self.world.weight(k)),
            Pick::Implicit => GoldenNumber::zero(),
        }
    }

    fn earliest_f_after(&self, lo: Slot) -> Pick {
        self.f
            .range((lo + 1, PacketKey::Real(0))..)
            .next()
            .map_or(Pick::Implicit, |&(d, k)| Pick::Key(k, d))
    }

    /// Earliest member of `F` due in `(lo, hi]`.
    fn pick_f(&self, lo: Slot, hi: Slot) -> Option<Pick> {
        match self.earliest_f_after(lo) {
            Pick::Key(k, d) if d <= hi => Some(Pick::Key(k, d)),
            _ if hi >= self.world.h => Some(Pick::Implicit),
            _ => None,
        }
    }

    fn insert_a(&mut self, ctx: &Ctx, slot: Slot, entry: Entry) -> Result<(), Violation> {
        if let Some(old) = self.a.get(&slot) {
            return Err(ctx.fail("unique-slot", format!("slot {slot} already holds {old:?}")));
        }
        if let Entry::Real { key, .. } = &entry {
            if self.a_real.insert(*key, slot).is_some() {
                return Err(ctx.fail("unique-entry", format!("packet {key} twice in the comparison")));
            }
        }
        self.a.insert(slot, entry);
        Ok(())
    }

    /// Turns the real entry of `key` into a shadow of weight `weight`.
    fn shadow(&mut self, ctx: &Ctx, key: PacketKey, weight: TaggedWeight) -> Result<Slot, Violation> {
        let slot = self
            .a_real
            .remove(&key)
            .ok_or_else(|| ctx.fail("entry-present", format!("packet {key} has no comparison entry")))?;
        self.a.insert(slot, Entry::Shadow { weight, created_at: ctx.event });
        Ok(slot)
    }

    // ---- slack views ----

    fn profile_of(&self, ctx: &Ctx, what: &'static str, keys: impl Iterator<Item = PacketKey>) -> Result<SlackProfile, Violation> {
        let t = self.world.t;
        let mut ds = Vec::new();
        for k in keys {
            let d = match self.world.pending.get(&k) {
                Some((d, _)) => *d,
                None => return Err(ctx.fail(what, format!("packet {k} is no longer pending"))),
            };
            if d < t {
                return Err(ctx.fail(what, format!("packet {k} expired at {d}")));
            }
            ds.push(d);
        }
        Ok(SlackProfile::from_deadlines(t, self.world.h, ds))
    }

    fn b_keys(&self) -> impl Iterator<Item = PacketKey> + '_ {
        self.f
            .iter()
            .map(|&(_, k)| k)
            .chain(self.world.members.iter().copied().filter(|k| !self.a_real.contains_key(k)))
    }

    fn b_profile(&self, ctx: &Ctx) -> Result<SlackProfile, Violation> {
        self.profile_of(ctx, "b-pending", self.b_keys())
    }

    fn p_profile(&self, ctx: &Ctx) -> Result<SlackProfile, Violation> {
        self.profile_of(ctx, "plan-pending", self.world.members.iter().copied())
    }

    fn w_b_scratch(&self) -> GoldenNumber {
        let mut s = GoldenNumber::zero();
        for k in self.b_keys() {
            if let Some((_, w)) = self.world.pending.get(&k) {
                s += &w.value;
            }
        }
        s
    }

    /// The furloughed packet released when `g ∈ P ∩ A` leaves `A`: the
    /// earliest one due in `(prevts(P, d_g), nextts(B, d_g)]`.
    fn restore(&self, ctx: &Ctx, dg: Slot, p: &SlackProfile, b: &SlackProfile) -> Result<Pick, Violation> {
        let eta = p.prevts(dg);
        let eta2 = b.nextts(dg);
        self.pick_f(eta, eta2).ok_or_else(|| {
            ctx.fail("restore-feasibility", format!("no furloughed packet due in ({eta}, {eta2}]"))
        })
    }

    /// Latest-deadline real entry of `A ∩ P` due in `(lo, hi]`.
    fn latest_entry(&self, lo: Slot, hi: Slot) -> Option<PacketKey> {
        self.a_real
            .keys()
            .filter(|k| self.world.members.contains(k))
            .map(|&k| (self.world.deadline(k), k))
            .filter(|&(d, _)| d > lo && d <= hi)
            .max()
            .map(|(_, k)| k)
    }

    // ---- arrivals ----

    fn arrival(&mut self, ctx: &mut Ctx, t: Slot, packet: &Packet) -> Result<(), Violation> {
        let expected = self.instance.packets().get(self.next_arrival);
        if expected != Some(packet) || t != self.world.t || packet.release != t {
            return Err(ctx.fail("trace-consistency", format!("unexpected arrival of {} at {t}", packet.id)));
        }
        self.next_arrival += 1;
        let j = PacketKey::Real(packet.id);
        let wj = packet.weight.clone();
        let dj = packet.deadline;
        let p_prof = self.p_profile(ctx)?;
        let b_sigma = self.b_profile(ctx)?;
        let lambda = p_prof.prevts(dj);
        let outcome = self.plan.apply_arrival(LivePacket::from_packet(packet));
        self.world.pending.insert(j, (dj, wj.clone()));
        let opt_slot = self.opt_slot.get(&packet.id).copied();
        let mut dw = GoldenNumber::zero();
        match outcome {
            ArrivalOutcome::Rejected => {
                ctx.case("A.1");
                if let Some(s) = opt_slot {
                    self.insert_a(ctx, s, Entry::Shadow { weight: wj.clone(), created_at: ctx.event })?;
                }
            }
            ArrivalOutcome::Replaced(u_ref) => {
                let (u, wu, du) = match &u_ref {
                    PacketRef::Pending(k) => (Some(*k), self.world.weight(*k).clone(), self.world.deadline(*k)),
                    PacketRef::Virtual { weight, deadline } => (None, weight.clone(), *deadline),
                };
                if let Some(uk) = u.filter(|k| self.a_real.contains_key(k)) {
                    ctx.case("A.2.i");
                    let pick = self.restore(ctx, du, &p_prof, &b_sigma)?;
                    let wf = self.pick_value(pick);
                    ctx.check_ge("restore-weight", wu.value.clone(), wf.clone());
                    dw += &(&wu.value - &wf);
                    self.remove_pick(pick);
                    self.shadow(ctx, uk, wu.clone())?;
                }
                let xi = self.b_profile(ctx)?.nextts(dj);
                if let Some(uk) = u {
                    self.world.members.remove(&uk);
                }
                self.world.members.insert(j);
                if let Some(s) = opt_slot {
                    ctx.case("A.2.a");
                    self.insert_a(ctx, s, Entry::Real { key: j, weight: wj.clone() })?;
                    if let Some(uk) = u {
                        self.add_f(uk);
                    }
                } else if du <= xi {
                    ctx.case("A.2.b");
                    dw += &(&wj.value - &wu.value);
                } else {
                    ctx.case("A.2.b");
                    let pick = self.pick_f(lambda, xi).ok_or_else(|| {
                        ctx.fail("restore-feasibility", format!("no furloughed packet due in ({lambda}, {xi}]"))
                    })?;
                    dw += &(&wj.value - &self.pick_value(pick));
                    self.remove_pick(pick);
                    if let Some(uk) = u {
                        self.add_f(uk);
                    }
                }
            }
        }
        ctx.phase("arrival", &dw);
        ctx.check_ge("arrival", dw.clone(), GoldenNumber::zero());
        self.w_b += &dw;
        Ok(())
    }

    // ---- steps ----

    fn step(&mut self, ctx: &mut Ctx, rec: &StepRecord) -> Result<(), Violation> {
        let t = self.world.t;
        if let Some(p) = self.instance.packets().get(self.next_arrival) {
            if p.release <= t {
                return Err(ctx.fail("trace-consistency", format!("packet {} never arrived", p.id)));
            }
        }
        if rec.t != t || t >= self.world.h {
            return Err(ctx.fail("trace-consistency", format!("step for slot {} at time {t}", rec.t)));
        }
        let before = self.plan.clone();
        let (mine, sent) = planm_step(&mut self.plan, &mut self.tiebreaks);
        if mine != *rec {
            return Err(ctx.fail("trace-consistency", format!("replay sends {:?} as {}", mine.sent, mine.kind.name())));
        }
        let wp = match &sent {
            Some((_, w, w0)) => {
                self.alg_gain0 += w0;
                value(w)
            }
            None => GoldenNumber::zero(),
        };
        self.alg_net += &(&wp - &rec.delta_weights);
        let w_before = self.w_b.clone();
        match (rec.kind, &rec.leap) {
            (StepKind::Idle, _) => {
                ctx.case("idle");
                self.ordinary(ctx, &before, None)?
            }
            (StepKind::Ordinary, _) => self.ordinary(ctx, &before, rec.sent)?,
            (StepKind::SimpleLeap | StepKind::IteratedLeap, Some(leap)) => self.leap(ctx, &before, leap, &rec.delta_weights)?,
            _ => return Err(ctx.fail("trace-consistency", format!("unexpected step kind {}", rec.kind.name()))),
        }
        // φ·w(p) − φ·ΔW + ΔΨ ≥ advgain
        let dpsi = &(&self.w_b - &w_before) * &self.inv_phi;
        let lhs = &(&(&wp - &rec.delta_weights) * &self.phi) + &dpsi;
        ctx.check_ge("scheduling", lhs, ctx.adv.clone());
        Ok(())
    }

    /// The comparison schedule sends its slot-`t` entry. Returns `ΔW`.
    fn adversary_step(&mut self, ctx: &mut Ctx, before: &Plan, wp: &GoldenNumber, w_sub: &GoldenNumber) -> Result<GoldenNumber, Violation> {
        let t = self.world.t;
        let (dw, wj) = match self.a.remove(&t) {
            None => {
                ctx.case("ADV.none");
                (GoldenNumber::zero(), GoldenNumber::zero())
            }
            Some(Entry::Shadow { weight, .. }) => {
                ctx.case("ADV.2");
                let ell = before.minwt(t);
                if weight > ell {
                    ctx.soft("shadow-below-ell", format!("shadow {weight} above {ell}"));
                }
                (GoldenNumber::zero(), value(&weight))
            }
            Some(Entry::Real { key, weight }) => {
                ctx.case("ADV.1");
                if !self.world.members.contains(&key) {
                    return Err(ctx.fail("inv-a", format!("comparison packet {key} left the plan")));
                }
                let b = self.b_profile(ctx)?;
                let pick = self.restore(ctx, self.world.deadline(key), before.profile(), &b)?;
                let wf = self.pick_value(pick);
                ctx.check_ge("restore-weight", value(&weight), wf.clone());
                self.a_real.remove(&key);
                self.remove_pick(pick);
                (&weight.value - &wf, value(&weight))
            }
        };
        ctx.adv += &wj;
        ctx.phase("adv", &dw);
        // ΔΨ − w_j ≥ −w_p/φ² − w(sub(p))/φ
        let lhs = &(&dw * &self.inv_phi) - &wj;
        let inv_phi2 = &self.inv_phi * &self.inv_phi;
        let rhs = -(&(wp * &inv_phi2) + &(w_sub * &self.inv_phi));
        ctx.check_ge("adv-step-cost", lhs, rhs);
        Ok(dw)
    }

    fn ordinary(&mut self, ctx: &mut Ctx, before: &Plan, sent: Option<PacketKey>) -> Result<(), Violation> {
        let t = self.world.t;
        let (wp, w_sub) = match sent {
            Some(p) => {
                let sub = before.substitute(p).map_err(|e| ctx.fail("trace-consistency", e.to_string()))?;
                (value(before.weight(p)), value(&before.ref_weight(&sub)))
            }
            None => (GoldenNumber::zero(), GoldenNumber::zero()),
        };
        let mut dw = GoldenNumber::zero();
        let dw_adv = self.adversary_step(ctx, before, &wp, &w_sub)?;
        let beta = before.nextts(t);
        let g = match sent {
            Some(p) if self.a_real.contains_key(&p) => Some(p),
            _ => self.latest_entry(t - 1, beta),
        };
        match g {
            None => ctx.case("O.1"),
            Some(g) => {
                ctx.case("O.2");
                let f = self.earliest_f_after(t - 1);
                let wl = before.minwt(t);
                let wg = value(self.world.weight(g));
                dw += &(&wg - &self.pick_value(f));
                self.remove_pick(f);
                self.shadow(ctx, g, wl.clone())?;
                ctx.adv += &(&wg - &wl.value);
            }
        }
        dw -= &wp;
        ctx.phase("alg", &dw);
        dw += &dw_adv;
        if let Some(p) = sent {
            self.world.members.remove(&p);
            self.world.pending.remove(&p);
        }
        self.world.advance();
        self.w_b += &dw;
        Ok(())
    }

    fn leap(&mut self, ctx: &mut Ctx, before: &Plan, leap: &LeapRecord, delta_weights: &GoldenNumber) -> Result<(), Violation> {
        let p = leap.p;
        let wp_tagged = before.weight(p).clone();
        let wp = value(&wp_tagged);
        let w_rho = value(&leap.rho_old_weight);
        let mut dw = self.adversary_step(ctx, before, &wp, &w_rho)?;

        // the initial segment loses ℓ
        let ell = leap.ell;
        let wl = before.weight(ell).clone();
        let dl = before.deadline(ell);
        let mut dw_init = GoldenNumber::zero();
        if self.a_real.contains_key(&ell) {
            ctx.case("L.InSeg.i");
            let b = self.b_profile(ctx)?;
            let pick = self.restore(ctx, dl, before.profile(), &b)?;
            let wf = self.pick_value(pick);
            ctx.check_ge("restore-weight", value(&wl), wf.clone());
            dw_init += &(&wl.value - &wf);
            self.remove_pick(pick);
            self.shadow(ctx, ell, wl.clone())?;
        }
        match self.earliest_f_after(self.world.t - 1) {
            Pick::Key(k, d) if d < dl => {
                ctx.case("L.InSeg.2");
                dw_init -= &value(self.world.weight(k));
                self.remove_pick(Pick::Key(k, d));
                self.add_f(ell);
            }
            _ => {
                ctx.case("L.InSeg.1");
                dw_init -= &wl.value;
            }
        }
        self.world.members.remove(&ell);
        self.world.advance();
        ctx.phase("init-seg", &dw_init);
        ctx.check_ge("init-seg", dw_init.clone(), -value(&wl));
        dw += &dw_init;
        let scratch = self.w_b_scratch();
        if scratch != &self.w_b + &dw {
            ctx.soft("potential-formula", format!("initial segment: scratch {scratch} vs {}", &self.w_b + &dw));
        }
        self.check_inv_b(ctx)?;

        // packets made explicit by the step
        self.world.pending.entry(leap.rho).or_insert_with(|| (leap.rho_deadline, leap.rho_old_weight.clone()));
        for link in &leap.chain {
            if let std::collections::btree_map::Entry::Vacant(e) = self.world.pending.entry(link.h) {
                e.insert((link.old_deadline, link.old_weight.clone()));
                self.world.members.insert(link.h);
            }
        }
        let chain = Chain::new(leap, &wp_tagged);
        let adv_before = ctx.adv.clone();
        let dw_seg = if chain.k() == 0 {
            self.simple_leap(ctx, before, leap, &chain)?
        } else {
            self.iterated_leap(ctx, before, leap, &chain)?
        };
        if self.world.members.contains(&p) {
            return Err(ctx.fail("trace-consistency", format!("packet {p} still planned after being sent")));
        }
        self.world.pending.remove(&p);
        ctx.phase("segment", &dw_seg);
        // Δ(δ,γ]Ψ − φ·ΔW − adv ≥ −w_p + w_ρ
        let adv_seg = &ctx.adv - &adv_before;
        let lhs = &(&(&dw_seg * &self.inv_phi) - &(delta_weights * &self.phi)) - &adv_seg;
        ctx.check_ge("leap-key", lhs, &w_rho - &wp);
        dw += &dw_seg;
        self.w_b += &dw;
        Ok(())
    }

    /// Applies group `[a, b]`: `h_a` leaves the plan, `h_{b+1}` joins, and
    /// `h_{a+1..=b+1}` take their new deadlines and weights.
    fn apply_group(&mut self, chain: &Chain, a: usize, b: usize) {
        self.world.members.remove(&chain.hs[a]);
        self.world.members.insert(chain.hs[b + 1]);
        for i in a + 1..=b + 1 {
            let entry = self.world.pending.get_mut(&chain.hs[i]).expect("chain packet pending");
            if let Some(d) = chain.new_d[i] {
                entry.0 = d;
            }
            entry.1 = chain.new_w[i].clone();
        }
    }

    fn simple_leap(&mut self, ctx: &mut Ctx, _before: &Plan, leap: &LeapRecord, chain: &Chain) -> Result<GoldenNumber, Violation> {
        let p = leap.p;
        let wp = value(&chain.old_w[0]);
        let mu = value(&leap.rho_new_weight);
        let rho_in_f = self.f_has(leap.rho);
        let inside = self.latest_entry(leap.delta, leap.gamma);
        let dw = if !rho_in_f && inside.is_none() {
            ctx.case("S.1");
            &mu - &wp
        } else {
            ctx.case("S.2");
            let g = if self.a_real.contains_key(&p) {
                p
            } else {
                self.latest_entry(self.world.t - 1, leap.gamma)
                    .ok_or_else(|| ctx.fail("leap-entry", "no comparison packet due by γ".into()))?
            };
            let f = if rho_in_f {
                Pick::Key(leap.rho, leap.rho_deadline)
            } else {
                self.earliest_f_after(leap.delta)
            };
            let wf = self.pick_value(f);
            let wg = value(self.world.weight(g));
            self.remove_pick(f);
            self.shadow(ctx, g, leap.mu0.clone())?;
            ctx.adv += &(&wg - &leap.mu0.value);
            &(&(&wg - &wp) - &wf) + &mu
        };
        self.apply_group(chain, 0, 0);
        Ok(dw)
    }

    fn iterated_leap(&mut self, ctx: &mut Ctx, before: &Plan, leap: &LeapRecord, chain: &Chain) -> Result<GoldenNumber, Violation> {
        let k = chain.k();
        self.check_weight_increase_bound(ctx, chain);
        let rho_in_f = self.f_has(leap.rho);
        let inside = self.latest_entry(leap.delta, leap.gamma);
        if !rho_in_f && inside.is_none() {
            ctx.case("I.1");
            let dw = &(&chain.sum_dw(1, k) + &chain.new_w[k + 1].value) - &chain.old_w[0].value;
            self.apply_group(chain, 0, k);
            return Ok(dw);
        }
        ctx.case("I.2");
        let g_star = self
            .latest_entry(self.world.t - 1, leap.gamma)
            .ok_or_else(|| ctx.fail("leap-entry", "no comparison packet due by γ".into()))?;
        let in_a: Vec<usize> = (0..=k).filter(|&i| self.a_real.contains_key(&chain.hs[i])).collect();
        let seg_of_g = before.nextts(self.world.deadline(g_star));
        let g = match (0..=k).find(|&i| chain.tau[i] == seg_of_g) {
            Some(i) if in_a.contains(&i) => chain.hs[i],
            _ => g_star,
        };
        let dg = self.world.deadline(g);
        let tilde = (0..=k).find(|&i| chain.tau[i] >= dg).expect("g is due by γ");
        let mut groups: Vec<(usize, usize, Group)> = Vec::new();
        if let Some(&last) = in_a.last() {
            if in_a[0] > 0 {
                groups.push((0, in_a[0] - 1, Group::Initial));
            }
            for w in in_a.windows(2) {
                groups.push((w[0], w[1] - 1, Group::Middle));
            }
            if g == chain.hs[last] {
                groups.push((last, k, Group::Terminal));
            } else {
                if tilde <= last {
                    return Err(ctx.fail("leap-groups", format!("g={g} falls before the last planned entry")));
                }
                groups.push((last, tilde - 1, Group::Middle));
                groups.push((tilde, k, Group::Terminal));
            }
        } else {
            if tilde > 0 {
                groups.push((0, tilde - 1, Group::Initial));
            }
            groups.push((tilde, k, Group::Terminal));
        }
        groups.sort_by_key(|&(a, _, _)| std::cmp::Reverse(a));

        let mut total = GoldenNumber::zero();
        for (a, b, kind) in groups {
            if self.a_real.contains_key(&chain.hs[b + 1]) {
                return Err(ctx.fail("leap-groups", format!("{} rejoins the plan while in the comparison", chain.hs[b + 1])));
            }
            let scratch_before = self.w_b_scratch();
            let adv_before = ctx.adv.clone();
            let ha = chain.hs[a];
            let w_ha = value(&chain.old_w[a]);
            let w_next = value(&chain.old_w[b + 1]);
            let delta = match kind {
                Group::Terminal => {
                    ctx.case("I.2.terminal");
                    let f = if self.f_has(leap.rho) {
                        Pick::Key(leap.rho, leap.rho_deadline)
                    } else {
                        self.earliest_f_after(leap.delta)
                    };
                    let wf = self.pick_value(f);
                    self.remove_pick(f);
                    let wg = value(self.world.weight(g));
                    let floor = before.minwt(before.deadline(g));
                    self.shadow(ctx, g, floor.clone())?;
                    ctx.adv += &(&wg - &floor.value);
                    &(&(&(&wg - &wf) - &w_ha) + &chain.new_w[k + 1].value) + &chain.sum_dw(a + 1, k)
                }
                Group::Middle if (a..=b).any(|i| chain.new_w[i + 1] != chain.old_w[i + 1]) => {
                    ctx.case("I.2.middle.M.i");
                    let p_prof = self.p_profile(ctx)?;
                    let b_prof = self.b_profile(ctx)?;
                    let pick = self.restore(ctx, self.world.deadline(ha), &p_prof, &b_prof)?;
                    let wf = self.pick_value(pick);
                    ctx.check_ge("restore-weight", w_ha.clone(), wf.clone());
                    self.remove_pick(pick);
                    self.shadow(ctx, ha, chain.mu[a].clone())?;
                    ctx.adv += &(&w_ha - &chain.mu[a].value);
                    &(&chain.sum_dw(a + 1, b + 1) + &w_next) - &wf
                }
                Group::Middle => {
                    ctx.case("I.2.middle.M.ii");
                    let h1 = chain.hs[a + 1];
                    if self.a_real.contains_key(&h1) {
                        return Err(ctx.fail("unique-entry", format!("packet {h1} already in the comparison")));
                    }
                    let slot = self.a_real.remove(&ha).ok_or_else(|| ctx.fail("entry-present", format!("packet {ha}")))?;
                    self.a.insert(slot, Entry::Real { key: h1, weight: chain.old_w[a + 1].clone() });
                    self.a_real.insert(h1, slot);
                    ctx.adv += &(&w_ha - &chain.old_w[a + 1].value);
                    &w_next - &chain.old_w[a + 1].value
                }
                Group::Initial => {
                    ctx.case("I.2.initial");
                    &(&chain.sum_dw(1, b + 1) - &w_ha) + &w_next
                }
            };
            self.apply_group(chain, a, b);
            let scratch = self.w_b_scratch();
            if scratch != &scratch_before + &delta {
                ctx.soft("potential-formula", format!("group [{a},{b}]: scratch {} vs formula {delta}", &scratch - &scratch_before));
            }
            self.check_inv_b(ctx)?;
            // Δ[a,b]Ψ − φ·Δw(h_{a+1..b+1}) − adv ≥ −w_{h_a} + w_{h_{b+1}}
            let adv_g = &ctx.adv - &adv_before;
            let lhs = &(&(&delta * &self.inv_phi) - &(&chain.sum_dw(a + 1, b + 1) * &self.phi)) - &adv_g;
            ctx.check_ge("leap-group", lhs, &w_next - &w_ha);
            total += &delta;
        }
        Ok(total)
    }

    /// A run of raised weights along the chain never exceeds the gap it
    /// closes: `Δw(h_a..=h_b) ≤ μ_{a−1} − w(h_b)` whenever something in
    /// `[a, b]` was raised.
    fn check_weight_increase_bound(&self, ctx: &mut Ctx, chain: &Chain) {
        let k = chain.k();
        for a in 1..=k {
            let mut sum = GoldenNumber::zero();
            let mut raised = false;
            for b in a..=k {
                sum += &chain.dw(b);
                raised |= chain.new_w[b] != chain.old_w[b];
                if raised {
                    ctx.check_ge("chain-increase", &chain.mu[a - 1].value - &chain.old_w[b].value, sum.clone());
                }
            }
        }
    }

    // ---- invariants ----

    fn check_inv_b(&self, ctx: &mut Ctx) -> Result<(), Violation> {
        let b = self.b_profile(ctx)?;
        for tau in self.world.t..self.world.h {
            let s = b.pslack(tau).expect("in range");
            if s < 0 {
                ctx.soft("inv-b", format!("pslack(B, {tau}) = {s}"));
                break;
            }
        }
        Ok(())
    }

    fn after_event(&mut self, ctx: &mut Ctx) {
        let t = self.world.t;
        if let Some(m) = self.world.mismatch(&self.plan) {
            ctx.soft("plan-mirror", m);
            return;
        }
        // InvA
        let has_shadow = self.a.values().any(|e| matches!(e, Entry::Shadow { .. }));
        let segments = if has_shadow { self.plan.segments() } else { Vec::new() };
        let mins = minwt_by_segment(&self.plan, &segments);
        let fill = TaggedWeight::fill();
        for (&slot, entry) in &self.a {
            if slot < t {
                ctx.soft("inv-a", format!("entry at past slot {slot}"));
                continue;
            }
            match entry {
                Entry::Real { key, weight } => match self.world.pending.get(key) {
                    Some((d, w)) if self.world.members.contains(key) && slot <= *d && w == weight => {}
                    other => ctx.soft("inv-a", format!("entry {key} at {slot} is {other:?}")),
                },
                Entry::Shadow { weight, .. } => {
                    let seg = segments.partition_point(|&(_, hi)| hi < slot);
                    let floor = mins[seg].unwrap_or(&fill);
                    if weight > floor {
                        let mut v = ctx.fail("inv-a", format!("shadow at {slot}"));
                        v.lhs = floor.value.clone();
                        v.rhs = weight.value.clone();
                        ctx.failures.push(v);
                    }
                }
            }
        }
        for (k, &slot) in &self.a_real {
            if !matches!(self.a.get(&slot), Some(Entry::Real { key, .. }) if key == k) {
                ctx.soft("inv-a", format!("index of {k} points at {slot}"));
            }
        }
        // F
        for &(d, k) in &self.f {
            match self.world.pending.get(&k) {
                Some((dk, _)) if *dk == d => {}
                other => ctx.soft("inv-f", format!("furloughed {k} is {other:?}")),
            }
            if self.world.members.contains(&k) || self.a_real.contains_key(&k) {
                ctx.soft("inv-f", format!("furloughed {k} is also planned or scheduled"));
            }
        }
        // InvB
        if let Err(v) = self.check_inv_b(ctx) {
            ctx.failures.push(v);
            return;
        }
        let scratch = self.w_b_scratch();
        if scratch != self.w_b {
            let mut v = ctx.fail("potential-scratch", String::new());
            v.lhs = scratch;
            v.rhs = self.w_b.clone();
            ctx.failures.push(v);
        }
        self.check_slack_identity(ctx);
    }

    /// `pslack(P,η) − pslack(B,η) + |F(η,η']| = pslack(P,η') − pslack(B,η') + |(P∩A)(η,η']|`
    /// on a few random pairs.
    fn check_slack_identity(&mut self, ctx: &mut Ctx) {
        let (t, h) = (self.world.t, self.world.h);
        if t >= h {
            return;
        }
        let (Ok(p), Ok(b)) = (self.p_profile(ctx), self.b_profile(ctx)) else { return };
        for _ in 0..2 {
            let x = self.rng.gen_range(t..h);
            let y = self.rng.gen_range(t..h);
            let (e1, e2) = (x.min(y), x.max(y));
            let f_count = self.f.iter().filter(|&&(d, _)| d > e1 && d <= e2).count() as i64;
            let pa_count = self
                .a_real
                .keys()
                .filter(|k| self.world.members.contains(k))
                .filter(|k| (e1 + 1..=e2).contains(&self.world.deadline(**k)))
                .count() as i64;
            let lhs = p.pslack(e1).unwrap() - b.pslack(e1).unwrap() + f_count;
            let rhs = p.pslack(e2).unwrap() - b.pslack(e2).unwrap() + pa_count;
            if lhs != rhs {
                ctx.soft("slack-identity", format!("({e1}, {e2}]: {lhs} vs {rhs}"));
            }
        }
    }

    pub fn finalize(mut self) -> Verification {
        let mut ctx = Ctx {
            event: self.event,
            t: self.world.t,
            cases: vec!["final"],
            adv: GoldenNumber::zero(),
            phases: Vec::new(),
            failures: Vec::new(),
        };
        if !self.halted {
            if self.world.t < self.world.h || self.next_arrival < self.instance.len() {
                ctx.soft("complete", format!("trace ends at t={} after {} arrivals", self.world.t, self.next_arrival));
            }
            if !self.a.is_empty() {
                ctx.soft("final-entries", format!("{} comparison entries left", self.a.len()));
            }
            let psi = self.psi();
            ctx.check_ge("final-potential", GoldenNumber::zero(), psi.clone());
            ctx.check_ge("final-potential", psi, GoldenNumber::zero());
            let w0 = GoldenNumber::from(self.comparison_weight0.clone());
            if self.adv_total != w0 {
                let mut v = ctx.fail("advgain-total", format!("comparison weight {}", format_rational(&self.comparison_weight0)));
                v.lhs = self.adv_total.clone();
                v.rhs = w0.clone();
                ctx.failures.push(v);
            }
            let gain0 = GoldenNumber::from(self.alg_gain0.clone());
            ctx.check_ge("alg-net", gain0.clone(), self.alg_net.clone());
            ctx.check_ge("telescoped", &(&self.alg_net * &self.phi) + &self.psi(), self.adv_total.clone());
            ctx.check_ge("ratio", &gain0 * &self.phi, w0);
        }
        self.violations.extend(ctx.failures);
        let summary = Summary {
            events: self.event,
            completed: !self.halted,
            adv_total: self.adv_total.clone(),
            comparison_weight0: self.comparison_weight0.clone(),
            alg_gain0: self.alg_gain0.clone(),
            alg_net: self.alg_net.clone(),
            psi_final: self.psi(),
        };
        Verification { reports: self.reports, violations: self.violations, summary }
    }
}

/// `minwt` of each segment, cheaper than one plan query per slot. `None`
/// stands for the filler weight.
fn minwt_by_segment<'p>(plan: &'p Plan, segments: &[(Slot, Slot)]) -> Vec<Option<&'p TaggedWeight>> {
    let mut members: Vec<(Slot, &TaggedWeight)> =
        plan.members().iter().map(|&k| (plan.deadline(k), plan.weight(k))).collect();
    members.sort_by_key(|&(d, _)| d);
    let fillers = plan.filler_count() > 0;
    let mut out = Vec::with_capacity(segments.len());
    let mut i = 0;
    let mut low: Option<&TaggedWeight> = None;
    for &(_, hi) in segments {
        while i < members.len() && members[i].0 <= hi {
            if low.is_none_or(|w| members[i].1 < w) {
                low = Some(members[i].1);
            }
            i += 1;
        }
        // fillers only count in the last segment, where they are the lightest
        let at_sentinel = hi == plan.sentinel() && fillers;
        out.push(if at_sentinel { None } else { low });
    }
    out
}

/// Replays `trace` on `instance` against `comparison`.
pub fn verify(instance: &Instance, trace: &RunTrace, comparison: &Schedule) -> Result<Verification, VerifyError> {
    if trace.algorithm != Algorithm::PlanM {
        return Err(VerifyError::NotPlanM(trace.algorithm));
    }
    if trace.sentinel != instance.sentinel() {
        return Err(VerifyError::SentinelMismatch { trace: trace.sentinel, instance: instance.sentinel() });
    }
    let mut v = Verifier::new(instance, comparison)?;
    for ev in &trace.events {
        v.on_event(ev);
    }
    let halted = v.is_halted();
    let (event, t) = (v.event, v.world.t);
    let mut out = v.finalize();
    if !halted && out.summary.alg_gain0 != trace.gain0 {
        out.violations.push(Violation {
            event,
            t,
            case: "final".into(),
            check: "trace-gain",
            lhs: GoldenNumber::from(trace.gain0.clone()),
            rhs: GoldenNumber::from(out.summary.alg_gain0.clone()),
            detail: "recorded total differs from the replay".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::integer;
    use crate::opt::optimal_schedule;
    use crate::scheduler::run;

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

    fn schedule(slots: &[(Slot, u64)], total: i64) -> Schedule {
        Schedule { assignment: slots.iter().copied().collect(), weight0: integer(total) }
    }

    fn over_phi(n: i64) -> GoldenNumber {
        GoldenNumber::from_int(n) * GoldenNumber::inv_phi()
    }

    fn phase(r: &EventReport, name: &str) -> GoldenNumber {
        r.phases.iter().find(|(n, _)| *n == name).unwrap().1.clone()
    }

    fn check(instance: &Instance, comparison: &Schedule) -> Verification {
        let (_, trace) = run(Algorithm::PlanM, instance);
        let v = verify(instance, &trace, comparison).unwrap();
        assert!(v.passed(), "{}", v.violations[0]);
        v
    }

    #[test]
    fn w1_first_step_is_ordinary() {
        let v = check(&w1(), &optimal_schedule(&w1()));
        let step = &v.reports[4];
        assert_eq!(step.kind, "step");
        assert_eq!(step.cases, vec!["ADV.1", "O.1"]);
        assert_eq!(phase(step, "adv"), over_phi(3));
        assert_eq!(phase(step, "alg"), over_phi(-3));
        assert_eq!(v.reports[2].cases, vec!["A.1"]);
    }

    #[test]
    fn heavier_arrival_swaps_the_backup_plan() {
        // a and k both outside the comparison schedule
        let instance = inst(&[(1, 0, 0, 3), (2, 0, 1, 5), (3, 0, 1, 1), (4, 0, 2, 4), (5, 0, 1, 6)]);
        let v = check(&instance, &schedule(&[(1, 2), (2, 4)], 9));
        let k = &v.reports[4];
        assert_eq!(k.cases, vec!["A.2.b"]);
        assert_eq!(k.delta_psi, over_phi(3));
    }

    #[test]
    fn w2_leap_without_the_sent_packet_in_the_comparison() {
        let v = check(&w2(), &schedule(&[(0, 1), (1, 3)], 9));
        let leap = &v.reports[3];
        assert_eq!(leap.cases, vec!["ADV.1", "L.InSeg.1", "S.1"]);
        assert_eq!(phase(leap, "segment"), over_phi(-5));
        assert_eq!(leap.advgain, GoldenNumber::from_int(5));
    }

    #[test]
    fn w2_leap_against_the_optimum() {
        let v = check(&w2(), &optimal_schedule(&w2()));
        let leap = &v.reports[3];
        assert_eq!(leap.cases, vec!["ADV.1", "L.InSeg.1", "S.2"]);
        assert_eq!(phase(leap, "segment"), over_phi(5));
        assert_eq!(leap.advgain, GoldenNumber::from_int(10));
        assert_eq!(v.summary.adv_total, GoldenNumber::from_int(15));
        assert_eq!(v.summary.alg_gain0, integer(14));
        assert_eq!(v.summary.psi_final, GoldenNumber::zero());
        assert!(v.to_csv().starts_with("event,t,kind,cases,delta_psi,advgain,status\n0,0,arrival,A.2.a,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (_, greedy) = run(Algorithm::Greedy, &w2());
        let opt = optimal_schedule(&w2());
        assert_eq!(verify(&w2(), &greedy, &opt), Err(VerifyError::NotPlanM(Algorithm::Greedy)));
        let (_, trace) = run(Algorithm::PlanM, &w2());
        let late = schedule(&[(1, 1)], 5);
        assert!(matches!(verify(&w2(), &trace, &late), Err(VerifyError::InfeasibleComparison(_))));
        let wrong_total = schedule(&[(0, 1)], 6);
        assert!(matches!(verify(&w2(), &trace, &wrong_total), Err(VerifyError::InfeasibleComparison(_))));
    }

    #[test]
    fn tampered_step_stops_replay() {
        let (_, mut trace) = run(Algorithm::PlanM, &w2());
        if let TraceEvent::Scheduled(s) = &mut trace.events[3] {
            s.sent = Some(PacketKey::Real(1));
        }
        let v = verify(&w2(), &trace, &optimal_schedule(&w2())).unwrap();
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].event, 3);
        assert_eq!(v.violations[0].check, "trace-consistency");
        assert!(!v.summary.completed);
    }

    #[test]
    fn truncated_trace_is_incomplete() {
        let (_, mut trace) = run(Algorithm::PlanM, &w1());
        trace.events.pop();
        let v = verify(&w1(), &trace, &optimal_schedule(&w1())).unwrap();
        assert!(v.violations.iter().any(|x| x.check == "complete"));
    }
}
