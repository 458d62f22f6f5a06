//! Plans: the maximum-weight feasible subset of the pending packets, with
//! slack profile, tight slots, segments, minimum weights and substitutes.
//!
//! The slot one past every deadline (the sentinel) is always tight. It is
//! backed by an unlimited supply of zero-weight filler packets that rank
//! below every real packet, so `minwt` is always defined and a substitute
//! always exists. Fillers stay implicit until an algorithm needs one as an
//! individual packet, at which point it is materialized as a virtual packet.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::arith::{Rational, TaggedWeight, GoldenNumber, FILL_TIEBREAK, SPARE_VIRTUAL_TIEBREAK};
use crate::instance::{Packet, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketKey {
    Real(u64),
    Virtual(u64),
}

impl PacketKey {
    pub fn is_virtual(self) -> bool {
        matches!(self, PacketKey::Virtual(_))
    }
}

impl fmt::Display for PacketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacketKey::Real(id) => write!(f, "{id}"),
            PacketKey::Virtual(n) => write!(f, "v{n}"),
        }
    }
}

impl FromStr for PacketKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad packet key {s:?}");
        match s.strip_prefix('v') {
            Some(n) => n.parse().map(PacketKey::Virtual).map_err(|_| bad()),
            None => s.parse().map(PacketKey::Real).map_err(|_| bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("slot {slot} outside [{lo}, {hi}]")]
    OutOfRange { slot: Slot, lo: Slot, hi: Slot },
    #[error("packet {0} is not in the initial segment")]
    NotInInitSeg(PacketKey),
    #[error("packet {0} is in the initial segment")]
    InInitSeg(PacketKey),
    #[error("packet {0} is not in the plan")]
    NotInPlan(PacketKey),
    #[error("packet {0} is not pending")]
    NotPending(PacketKey),
}

/// A pending packet with its current deadline and weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LivePacket {
    pub key: PacketKey,
    pub release: Slot,
    pub deadline: Slot,
    pub weight: TaggedWeight,
    /// Weight at release; zero for virtual packets.
    pub original: Rational,
}

impl LivePacket {
    pub fn from_packet(p: &Packet) -> Self {
        LivePacket {
            key: PacketKey::Real(p.id),
            release: p.release,
            deadline: p.deadline,
            weight: p.weight.clone(),
            original: p.original_weight().clone(),
        }
    }
}

/// The pending packets at time `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingSet {
    t: Slot,
    sentinel: Slot,
    packets: BTreeMap<PacketKey, LivePacket>,
    virtuals_made: u64,
}

impl PendingSet {
    pub fn new(t: Slot, sentinel: Slot) -> Self {
        PendingSet { t, sentinel, packets: BTreeMap::new(), virtuals_made: 0 }
    }

    pub fn time(&self) -> Slot {
        self.t
    }

    pub fn sentinel(&self) -> Slot {
        self.sentinel
    }

    pub fn get(&self, key: PacketKey) -> Option<&LivePacket> {
        self.packets.get(&key)
    }

    pub fn contains(&self, key: PacketKey) -> bool {
        self.packets.contains_key(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LivePacket> {
        self.packets.values()
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn insert(&mut self, p: LivePacket) {
        debug_assert!(p.deadline >= self.t && p.deadline <= self.sentinel);
        self.packets.insert(p.key, p);
    }

    fn remove(&mut self, key: PacketKey) -> Option<LivePacket> {
        self.packets.remove(&key)
    }

    pub fn weight(&self, key: PacketKey) -> &TaggedWeight {
        &self.packets[&key].weight
    }

    pub fn deadline(&self, key: PacketKey) -> Slot {
        self.packets[&key].deadline
    }

    /// Number of virtual packets materialized so far.
    pub fn virtuals_made(&self) -> u64 {
        self.virtuals_made
    }

    /// Adds a virtual packet at the sentinel. Spare ones rank below the
    /// filler; filler ones rank just above it.
    fn materialize(&mut self, spare: bool) -> PacketKey {
        self.virtuals_made += 1;
        let n = self.virtuals_made;
        let key = PacketKey::Virtual(n);
        let base = if spare { SPARE_VIRTUAL_TIEBREAK } else { FILL_TIEBREAK };
        self.packets.insert(
            key,
            LivePacket {
                key,
                release: self.t,
                deadline: self.sentinel,
                weight: TaggedWeight::new(GoldenNumber::zero(), base + n as i64),
                original: Rational::zero(),
            },
        );
        key
    }

    /// Moves to `t + 1` and drops packets whose deadline has passed.
    fn advance(&mut self) -> Vec<PacketKey> {
        self.t += 1;
        let t = self.t;
        let expired: Vec<PacketKey> =
            self.packets.values().filter(|p| p.deadline < t).map(|p| p.key).collect();
        for k in &expired {
            self.packets.remove(k);
        }
        expired
    }
}

/// `pslack(X, τ)` for `τ ∈ [t−1, sentinel]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlackProfile {
    t: Slot,
    sentinel: Slot,
    slack: Vec<i64>,
}

impl SlackProfile {
    pub fn empty(t: Slot, sentinel: Slot) -> Self {
        let len = (sentinel - t + 2).max(1) as usize;
        let slack = (0..len as i64).collect();
        SlackProfile { t, sentinel, slack }
    }

    pub fn from_deadlines(t: Slot, sentinel: Slot, deadlines: impl IntoIterator<Item = Slot>) -> Self {
        let mut p = SlackProfile::empty(t, sentinel);
        let mut count = vec![0i64; p.slack.len()];
        for d in deadlines {
            count[(d - t + 1) as usize] += 1;
        }
        let mut acc = 0;
        for (i, c) in count.iter().enumerate() {
            acc += c;
            p.slack[i] -= acc;
        }
        p
    }

    fn index(&self, tau: Slot) -> Result<usize, PlanError> {
        if tau < self.t - 1 || tau > self.sentinel {
            return Err(PlanError::OutOfRange { slot: tau, lo: self.t - 1, hi: self.sentinel });
        }
        Ok((tau - self.t + 1) as usize)
    }

    pub fn pslack(&self, tau: Slot) -> Result<i64, PlanError> {
        self.index(tau).map(|i| self.slack[i])
    }

    fn at(&self, tau: Slot) -> i64 {
        self.slack[(tau - self.t + 1) as usize]
    }

    pub fn time(&self) -> Slot {
        self.t
    }

    pub fn sentinel(&self) -> Slot {
        self.sentinel
    }

    pub fn is_tight(&self, tau: Slot) -> bool {
        tau == self.t - 1 || tau == self.sentinel || self.at(tau) == 0
    }

    /// Ascending, always starting at `t − 1` and ending at the sentinel.
    pub fn tight_slots(&self) -> Vec<Slot> {
        (self.t - 1..=self.sentinel).filter(|&tau| self.is_tight(tau)).collect()
    }

    /// Earliest tight slot `≥ tau`.
    pub fn nextts(&self, tau: Slot) -> Slot {
        let mut s = tau.max(self.t - 1);
        while !self.is_tight(s) {
            s += 1;
        }
        s
    }

    /// Latest tight slot `< tau`.
    pub fn prevts(&self, tau: Slot) -> Slot {
        let mut s = (tau - 1).min(self.sentinel);
        while s > self.t - 1 && !self.is_tight(s) {
            s -= 1;
        }
        s
    }

    /// Segments `(a, b]` between consecutive tight slots.
    pub fn segments(&self) -> Vec<(Slot, Slot)> {
        self.tight_slots().windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn min_slack(&self) -> i64 {
        self.slack.iter().copied().min().unwrap_or(0)
    }

    /// True iff `pslack ≥ 0` everywhere, i.e. the set can be scheduled.
    pub fn is_feasible(&self) -> bool {
        self.min_slack() >= 0
    }

    /// Smallest slack over `[from, sentinel]`.
    pub fn min_slack_from(&self, from: Slot) -> i64 {
        let i = (from - self.t + 1).max(0) as usize;
        self.slack[i..].iter().copied().min().unwrap_or(i64::MAX)
    }

    pub fn add(&mut self, d: Slot) {
        let i = (d - self.t + 1) as usize;
        for s in &mut self.slack[i..] {
            *s -= 1;
        }
    }

    pub fn remove(&mut self, d: Slot) {
        let i = (d - self.t + 1) as usize;
        for s in &mut self.slack[i..] {
            *s += 1;
        }
    }

    pub fn move_deadline(&mut self, from: Slot, to: Slot) {
        self.remove(from);
        self.add(to);
    }

    /// Rebases to `t + 1`; the set must hold no deadline `≤ t`.
    pub fn advance(&mut self) {
        debug_assert_eq!(self.slack.get(1).copied().unwrap_or(1), 1, "deadline t still present");
        self.t += 1;
        if self.slack.len() > 1 {
            self.slack.remove(0);
            for s in &mut self.slack {
                *s -= 1;
            }
        }
    }
}

/// A packet a plan query can name: either a pending packet or an implicit
/// virtual one (a filler in the plan, or a spare outside it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PacketRef {
    Pending(PacketKey),
    Virtual { weight: TaggedWeight, deadline: Slot },
}

pub type SubstituteResult = PacketRef;

impl PacketRef {
    pub fn key(&self) -> Option<PacketKey> {
        match self {
            PacketRef::Pending(k) => Some(*k),
            PacketRef::Virtual { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArrivalOutcome {
    /// The new packet is lighter than the packet it would have to displace.
    Rejected,
    /// The new packet joined the plan and pushed out `f`.
    Replaced(PacketRef),
}

/// What a scheduling step from a later segment changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeapInfo {
    pub rho: PacketKey,
    pub ell: PacketKey,
    pub delta: Slot,
    pub gamma: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pending: PendingSet,
    members: BTreeSet<PacketKey>,
    profile: SlackProfile,
}

impl Plan {
    /// Greedy admission in decreasing weight order; by the matroid property
    /// this is the unique maximum-weight feasible subset.
    pub fn compute(pending: PendingSet) -> Plan {
        let t = pending.time();
        let sentinel = pending.sentinel();
        let fill = TaggedWeight::fill();
        let mut order: Vec<&LivePacket> = pending.iter().filter(|p| p.weight > fill).collect();
        order.sort_by(|a, b| b.weight.cmp(&a.weight));
        let mut profile = SlackProfile::empty(t, sentinel);
        let mut members = BTreeSet::new();
        for p in order {
            if profile.min_slack_from(p.deadline) >= 1 {
                profile.add(p.deadline);
                members.insert(p.key);
            }
        }
        Plan { pending, members, profile }
    }

    pub fn empty(t: Slot, sentinel: Slot) -> Plan {
        Plan::compute(PendingSet::new(t, sentinel))
    }

    pub fn time(&self) -> Slot {
        self.pending.time()
    }

    pub fn sentinel(&self) -> Slot {
        self.pending.sentinel()
    }

    pub fn pending(&self) -> &PendingSet {
        &self.pending
    }

    pub fn members(&self) -> &BTreeSet<PacketKey> {
        &self.members
    }

    pub fn contains(&self, key: PacketKey) -> bool {
        self.members.contains(&key)
    }

    pub fn profile(&self) -> &SlackProfile {
        &self.profile
    }

    pub fn weight(&self, key: PacketKey) -> &TaggedWeight {
        self.pending.weight(key)
    }

    pub fn deadline(&self, key: PacketKey) -> Slot {
        self.pending.deadline(key)
    }

    pub fn pslack(&self, tau: Slot) -> Result<i64, PlanError> {
        self.profile.pslack(tau)
    }

    pub fn nextts(&self, tau: Slot) -> Slot {
        self.profile.nextts(tau)
    }

    pub fn prevts(&self, tau: Slot) -> Slot {
        self.profile.prevts(tau)
    }

    pub fn tight_slots(&self) -> Vec<Slot> {
        self.profile.tight_slots()
    }

    pub fn segments(&self) -> Vec<(Slot, Slot)> {
        self.profile.segments()
    }

    /// Number of implicit fillers in the plan (all due at the sentinel).
    pub fn filler_count(&self) -> i64 {
        self.profile.at(self.sentinel()).max(0)
    }

    /// Last slot of the initial segment.
    pub fn init_seg_end(&self) -> Slot {
        self.nextts(self.time())
    }

    pub fn in_init_seg(&self, key: PacketKey) -> bool {
        self.contains(key) && self.deadline(key) <= self.init_seg_end()
    }

    pub fn total_weight(&self) -> GoldenNumber {
        let mut sum = GoldenNumber::zero();
        for &k in &self.members {
            sum += &self.weight(k).value;
        }
        sum
    }

    /// Members in canonical order: deadline ascending, heavier first.
    pub fn canonical_order(&self) -> Vec<PacketKey> {
        let mut keys: Vec<PacketKey> = self.members.iter().copied().collect();
        keys.sort_by(|&a, &b| {
            self.deadline(a)
                .cmp(&self.deadline(b))
                .then_with(|| self.weight(b).cmp(self.weight(a)))
        });
        keys
    }

    /// Members placed in canonical order from slot `t` on; every packet
    /// meets its deadline exactly when the plan is feasible.
    pub fn canonical_schedule(&self) -> Vec<(Slot, PacketKey)> {
        self.canonical_order()
            .into_iter()
            .enumerate()
            .map(|(i, k)| (self.time() + i as Slot, k))
            .collect()
    }

    /// The lightest plan packet due by `nextts(tau)`.
    pub fn minwt_realizer(&self, tau: Slot) -> PacketRef {
        let limit = self.nextts(tau);
        if limit == self.sentinel() && self.filler_count() > 0 {
            return PacketRef::Virtual { weight: TaggedWeight::fill(), deadline: self.sentinel() };
        }
        self.members
            .iter()
            .filter(|&&k| self.deadline(k) <= limit)
            .min_by(|&&a, &&b| self.weight(a).cmp(self.weight(b)))
            .map(|&k| PacketRef::Pending(k))
            .expect("a tight slot below the sentinel has members")
    }

    pub fn minwt(&self, tau: Slot) -> TaggedWeight {
        self.ref_weight(&self.minwt_realizer(tau))
    }

    pub fn ref_weight(&self, r: &PacketRef) -> TaggedWeight {
        match r {
            PacketRef::Pending(k) => self.weight(*k).clone(),
            PacketRef::Virtual { weight, .. } => weight.clone(),
        }
    }

    pub fn ref_deadline(&self, r: &PacketRef) -> Slot {
        match r {
            PacketRef::Pending(k) => self.deadline(*k),
            PacketRef::Virtual { deadline, .. } => *deadline,
        }
    }

    /// `minwt` at every slot of `[t, sentinel]`.
    pub fn minwt_profile(&self) -> Vec<TaggedWeight> {
        let mut out = Vec::new();
        for (lo, hi) in self.segments() {
            let w = self.minwt(hi);
            for _ in lo + 1..=hi {
                out.push(w.clone());
            }
        }
        out
    }

    /// The lightest packet of the initial segment.
    pub fn ell(&self) -> PacketRef {
        self.minwt_realizer(self.time())
    }

    /// Heaviest pending packet outside the plan due after `after`.
    fn heaviest_outside_after(&self, after: Slot) -> PacketRef {
        self.pending
            .iter()
            .filter(|p| p.deadline > after && !self.members.contains(&p.key))
            .max_by(|a, b| a.weight.cmp(&b.weight))
            .map(|p| PacketRef::Pending(p.key))
            .unwrap_or_else(|| PacketRef::Virtual {
                weight: TaggedWeight::new(GoldenNumber::zero(), SPARE_VIRTUAL_TIEBREAK),
                deadline: self.sentinel(),
            })
    }

    pub fn substitute(&self, j: PacketKey) -> Result<SubstituteResult, PlanError> {
        if !self.contains(j) {
            return Err(PlanError::NotInPlan(j));
        }
        if self.in_init_seg(j) {
            return Ok(self.ell());
        }
        Ok(self.heaviest_outside_after(self.prevts(self.deadline(j))))
    }

    /// Heaviest plan packet due in `(lo, hi]`, materializing a filler if
    /// only fillers are there.
    pub fn heaviest_member_in(&mut self, lo: Slot, hi: Slot) -> Option<PacketKey> {
        let found = self
            .members
            .iter()
            .filter(|&&k| self.deadline(k) > lo && self.deadline(k) <= hi)
            .max_by(|&&a, &&b| self.weight(a).cmp(self.weight(b)))
            .copied();
        if found.is_some() {
            return found;
        }
        if hi == self.sentinel() && self.filler_count() > 0 {
            let key = self.pending.materialize(false);
            self.members.insert(key);
            self.profile.add(self.sentinel());
            return Some(key);
        }
        None
    }

    /// Turns the implicit spare substitute into a pending packet outside the plan.
    pub fn materialize_spare(&mut self) -> PacketKey {
        self.pending.materialize(true)
    }

    pub fn apply_arrival(&mut self, k: LivePacket) -> ArrivalOutcome {
        let key = k.key;
        let d = k.deadline;
        let w = k.weight.clone();
        self.pending.insert(k);
        let f = self.minwt_realizer(d);
        if w < self.ref_weight(&f) {
            return ArrivalOutcome::Rejected;
        }
        if let PacketRef::Pending(fk) = f {
            self.members.remove(&fk);
            self.profile.remove(self.deadline(fk));
        }
        self.members.insert(key);
        self.profile.add(d);
        ArrivalOutcome::Replaced(f)
    }

    fn advance(&mut self) {
        let expired = self.pending.advance();
        for k in expired {
            assert!(!self.members.remove(&k), "plan packet {k} expired");
        }
        self.profile.advance();
    }

    /// Schedules `p` from the initial segment: `Q = P \ {p}` at `t + 1`.
    pub fn apply_schedule_initseg(&mut self, p: PacketKey) -> Result<(), PlanError> {
        if !self.in_init_seg(p) {
            return Err(PlanError::NotInInitSeg(p));
        }
        self.members.remove(&p);
        let lp = self.pending.remove(p).expect("member is pending");
        self.profile.remove(lp.deadline);
        self.advance();
        Ok(())
    }

    /// Moves to `t + 1` without sending anything; only valid with no real
    /// packet in the plan.
    pub fn apply_idle(&mut self) {
        debug_assert!(self.members.is_empty());
        self.advance();
    }

    /// Schedules `p` from a later segment: `Q = P \ {p, ℓ} ∪ {ρ}` at `t + 1`.
    pub fn apply_schedule_later(&mut self, p: PacketKey) -> Result<LeapInfo, PlanError> {
        if !self.contains(p) {
            return Err(PlanError::NotInPlan(p));
        }
        if self.in_init_seg(p) {
            return Err(PlanError::InInitSeg(p));
        }
        let ell = self.ell().key().expect("initial segment ends before the sentinel");
        let dp = self.deadline(p);
        let delta = self.prevts(dp);
        let rho = match self.substitute(p)? {
            PacketRef::Pending(k) => k,
            PacketRef::Virtual { .. } => self.materialize_spare(),
        };
        let gamma = self.nextts(self.deadline(rho));
        for k in [p, ell] {
            self.members.remove(&k);
            self.profile.remove(self.deadline(k));
        }
        self.members.insert(rho);
        self.profile.add(self.deadline(rho));
        self.pending.remove(p);
        self.advance();
        Ok(LeapInfo { rho, ell, delta, gamma })
    }

    /// Sends any pending packet and recomputes the plan from scratch at `t + 1`.
    pub fn apply_schedule_any(&mut self, p: PacketKey) {
        let mut pending = self.pending.clone();
        pending.remove(p);
        pending.advance();
        *self = Plan::compute(pending);
    }

    /// Changes a pending packet's weight; membership is left alone.
    pub fn set_weight(&mut self, key: PacketKey, w: TaggedWeight) {
        self.pending.packets.get_mut(&key).expect("pending").weight = w;
    }

    /// Changes a pending packet's deadline; membership is left alone.
    pub fn set_deadline(&mut self, key: PacketKey, d: Slot) {
        let lp = self.pending.packets.get_mut(&key).expect("pending");
        let old = lp.deadline;
        lp.deadline = d;
        if self.members.contains(&key) {
            self.profile.move_deadline(old, d);
        }
    }

    /// Recomputes the plan from scratch on the same pending set.
    pub fn recompute(&self) -> Plan {
        Plan::compute(self.pending.clone())
    }

    /// Differences against a from-scratch recomputation, empty when equal.
    pub fn diff_against_scratch(&self) -> Vec<String> {
        let fresh = self.recompute();
        let mut out = Vec::new();
        if fresh.members != self.members {
            out.push(format!("members {:?} vs scratch {:?}", self.members, fresh.members));
        }
        if fresh.profile != self.profile {
            out.push(format!(
                "tight slots {:?} vs scratch {:?}",
                self.tight_slots(),
                fresh.tight_slots()
            ));
        }
        if out.is_empty() && fresh.minwt_profile() != self.minwt_profile() {
            out.push("minwt profile differs".to_string());
        }
        out
    }
}
