//! Packets, validated instances and the JSON-lines instance format.

use std::collections::HashSet;
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{format_rational, parse_rational, Rational, TaggedWeight};

/// A time slot. Signed so that `t − 1` is representable at `t = 0`.
pub type Slot = i64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("duplicate packet id {0}")]
    DuplicateId(u64),
    #[error("packet {id}: deadline {deadline} before release {release}")]
    DeadlineBeforeRelease { id: u64, release: Slot, deadline: Slot },
    #[error("packet {id}: negative weight")]
    NegativeWeight { id: u64 },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub release: Slot,
    pub deadline: Slot,
    /// Base value is the original rational weight; the tiebreak encodes
    /// arrival order so that equal weights still compare strictly.
    pub weight: TaggedWeight,
}

impl Packet {
    pub fn new(id: u64, release: Slot, deadline: Slot, weight: Rational) -> Self {
        Packet { id, release, deadline, weight: TaggedWeight::original(weight, 0) }
    }

    pub fn original_weight(&self) -> &Rational {
        &self.weight.value.a
    }
}

/// Packets sorted by `(release, id)` with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Instance {
    packets: Vec<Packet>,
}

impl Instance {
    pub fn empty() -> Self {
        Instance::default()
    }

    /// Validates, sorts, and assigns arrival tiebreaks: among equal base
    /// weights the packet that arrives first ranks highest.
    pub fn new(mut packets: Vec<Packet>) -> Result<Self, InstanceError> {
        let mut seen = HashSet::new();
        for p in &packets {
            if !seen.insert(p.id) {
                return Err(InstanceError::DuplicateId(p.id));
            }
            if p.deadline < p.release {
                return Err(InstanceError::DeadlineBeforeRelease {
                    id: p.id,
                    release: p.release,
                    deadline: p.deadline,
                });
            }
            if p.original_weight().is_negative() {
                return Err(InstanceError::NegativeWeight { id: p.id });
            }
        }
        packets.sort_by_key(|p| (p.release, p.id));
        for (rank, p) in packets.iter_mut().enumerate() {
            let base = p.original_weight().clone();
            p.weight = TaggedWeight::original(base, -(rank as i64) - 1);
        }
        Ok(Instance { packets })
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Packet> {
        self.packets.iter().find(|p| p.id == id)
    }

    /// Latest deadline, or `-1` for an empty instance.
    pub fn horizon(&self) -> Slot {
        self.packets.iter().map(|p| p.deadline).max().unwrap_or(-1)
    }

    /// The always-tight slot one past every deadline, backed by zero-weight
    /// filler packets.
    pub fn sentinel(&self) -> Slot {
        self.horizon() + 1
    }

    pub fn total_weight(&self) -> Rational {
        self.packets.iter().map(|p| p.original_weight().clone()).sum()
    }
}

pub fn validate(packets: Vec<Packet>) -> Result<Instance, InstanceError> {
    Instance::new(packets)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PacketLine {
    pub id: u64,
    pub r: u64,
    pub d: u64,
    pub w: String,
}

impl PacketLine {
    pub(crate) fn from_packet(p: &Packet) -> Self {
        PacketLine {
            id: p.id,
            r: p.release as u64,
            d: p.deadline as u64,
            w: format_rational(p.original_weight()),
        }
    }

    pub(crate) fn into_packet(self) -> Result<Packet, String> {
        let w = parse_rational(&self.w).map_err(|e| e.to_string())?;
        let slot = |x: u64| Slot::try_from(x).map_err(|_| format!("slot {x} out of range"));
        Ok(Packet::new(self.id, slot(self.r)?, slot(self.d)?, w))
    }
}

pub(crate) fn packet_to_json(p: &Packet) -> String {
    serde_json::to_string(&PacketLine::from_packet(p)).expect("packet line serializes")
}

pub(crate) fn packet_from_json(text: &str) -> Result<Packet, String> {
    let line: PacketLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    line.into_packet()
}

/// One packet per line; blank lines are ignored.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut packets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let packet = packet_from_json(line.trim())
            .map_err(|message| InstanceError::Syntax { line: i + 1, message })?;
        packets.push(packet);
    }
    Instance::new(packets)
}

pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::new();
    for p in instance.packets() {
        out.push_str(&packet_to_json(p));
        out.push('\n');
    }
    out
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{}(r={}, d={}, w={})",
            self.id,
            self.release,
            self.deadline,
            format_rational(self.original_weight())
        )
    }
}
