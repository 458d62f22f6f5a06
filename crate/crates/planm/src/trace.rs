//! Line-oriented text format for run traces.
//!
//! ```text
//! planm-trace v1 algorithm=planm sentinel=3
//! A,0,{"id":1,"r":0,"d":0,"w":"5/1"}
//! S,0,2,simple-leap,{...},1/1+0/1*phi
//! S,1,-,idle,-,0/1+0/1*phi
//! G,14/1
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{format_rational, parse_rational, GoldenNumber, TaggedWeight};
use crate::instance::{packet_from_json, packet_to_json, Slot};
use crate::plan::PacketKey;
use crate::scheduler::{Algorithm, ChainLink, LeapRecord, RunTrace, StepKind, StepRecord, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

const MAGIC: &str = "planm-trace v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkLine {
    h: String,
    tau: Slot,
    d0: Slot,
    d1: Slot,
    w0: String,
    w1: String,
    mu: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeapLine {
    p: String,
    rho: String,
    rho_d: Slot,
    rho_w0: String,
    rho_w1: String,
    ell: String,
    delta: Slot,
    gamma: Slot,
    tau0: Slot,
    mu0: String,
    chain: Vec<LinkLine>,
}

fn key<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn weight(s: &str) -> Result<TaggedWeight, String> {
    s.parse().map_err(|e: crate::arith::ParseNumberError| e.to_string())
}

impl LeapLine {
    fn from_record(l: &LeapRecord) -> Self {
        LeapLine {
            p: l.p.to_string(),
            rho: l.rho.to_string(),
            rho_d: l.rho_deadline,
            rho_w0: l.rho_old_weight.to_string(),
            rho_w1: l.rho_new_weight.to_string(),
            ell: l.ell.to_string(),
            delta: l.delta,
            gamma: l.gamma,
            tau0: l.tau0,
            mu0: l.mu0.to_string(),
            chain: l
                .chain
                .iter()
                .map(|c| LinkLine {
                    h: c.h.to_string(),
                    tau: c.tau,
                    d0: c.old_deadline,
                    d1: c.new_deadline,
                    w0: c.old_weight.to_string(),
                    w1: c.new_weight.to_string(),
                    mu: c.mu.to_string(),
                })
                .collect(),
        }
    }

    fn into_record(self) -> Result<LeapRecord, String> {
        let chain = self
            .chain
            .into_iter()
            .map(|c| {
                Ok(ChainLink {
                    h: key::<PacketKey>(&c.h)?,
                    tau: c.tau,
                    old_deadline: c.d0,
                    new_deadline: c.d1,
                    old_weight: weight(&c.w0)?,
                    new_weight: weight(&c.w1)?,
                    mu: weight(&c.mu)?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(LeapRecord {
            p: key(&self.p)?,
            rho: key(&self.rho)?,
            rho_deadline: self.rho_d,
            rho_old_weight: weight(&self.rho_w0)?,
            rho_new_weight: weight(&self.rho_w1)?,
            ell: key(&self.ell)?,
            delta: self.delta,
            gamma: self.gamma,
            tau0: self.tau0,
            mu0: weight(&self.mu0)?,
            chain,
        })
    }
}

pub fn serialize_trace(trace: &RunTrace) -> String {
    let mut out = format!("{MAGIC} algorithm={} sentinel={}\n", trace.algorithm, trace.sentinel);
    for event in &trace.events {
        match event {
            TraceEvent::Arrival { t, packet } => {
                out.push_str(&format!("A,{t},{}\n", packet_to_json(packet)));
            }
            TraceEvent::Scheduled(s) => {
                let sent = s.sent.map_or_else(|| "-".to_string(), |k| k.to_string());
                let leap = s.leap.as_ref().map_or_else(
                    || "-".to_string(),
                    |l| serde_json::to_string(&LeapLine::from_record(l)).expect("leap serializes"),
                );
                out.push_str(&format!("S,{},{sent},{},{leap},{}\n", s.t, s.kind.name(), s.delta_weights));
            }
        }
    }
    out.push_str(&format!("G,{}\n", format_rational(&trace.gain0)));
    out
}

fn parse_header(line: &str) -> Result<(Algorithm, Slot), String> {
    let rest = line.strip_prefix(MAGIC).ok_or("missing trace header")?;
    let mut algorithm = None;
    let mut sentinel = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("algorithm", v)) => algorithm = Some(v.parse::<Algorithm>()?),
            Some(("sentinel", v)) => {
                sentinel = Some(v.parse::<Slot>().map_err(|_| format!("bad sentinel {v:?}"))?)
            }
            _ => return Err(format!("unexpected header field {field:?}")),
        }
    }
    Ok((algorithm.ok_or("header lacks algorithm")?, sentinel.ok_or("header lacks sentinel")?))
}

fn parse_slot(s: &str) -> Result<Slot, String> {
    s.parse().map_err(|_| format!("bad slot {s:?}"))
}

fn parse_step(body: &str) -> Result<StepRecord, String> {
    let mut head = body.splitn(4, ',');
    let t = parse_slot(head.next().ok_or("missing slot")?)?;
    let sent = match head.next().ok_or("missing packet")? {
        "-" => None,
        s => Some(key::<PacketKey>(s)?),
    };
    let kind: StepKind = head.next().ok_or("missing step kind")?.parse()?;
    let tail = head.next().ok_or("missing leap")?;
    let (leap, dw) = tail.rsplit_once(',').ok_or("missing weight increase")?;
    let leap = match leap {
        "-" => None,
        json => {
            let line: LeapLine = serde_json::from_str(json).map_err(|e| e.to_string())?;
            Some(line.into_record()?)
        }
    };
    let delta_weights: GoldenNumber = dw.parse().map_err(|e: crate::arith::ParseNumberError| e.to_string())?;
    Ok(StepRecord { t, sent, kind, leap, delta_weights })
}

pub fn parse_trace(text: &str) -> Result<RunTrace, TraceError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: String| TraceError::Syntax { line: line + 1, message };
    let (i, header) = lines.next().ok_or_else(|| err(0, "empty trace".into()))?;
    let (algorithm, sentinel) = parse_header(header.trim()).map_err(|m| err(i, m))?;
    let mut events = Vec::new();
    let mut gain0 = None;
    let mut arrivals = 0usize;
    for (i, line) in lines {
        let line = line.trim();
        if gain0.is_some() {
            return Err(err(i, "content after the total".into()));
        }
        let (tag, body) = line.split_once(',').ok_or_else(|| err(i, "expected a tagged line".into()))?;
        match tag {
            "A" => {
                let (t, json) = body.split_once(',').ok_or_else(|| err(i, "missing packet".into()))?;
                let t = parse_slot(t).map_err(|m| err(i, m))?;
                let mut packet = packet_from_json(json).map_err(|m| err(i, m))?;
                // arrivals appear in instance order, which fixes the tiebreaks
                packet.weight.tiebreak = -(arrivals as i64) - 1;
                arrivals += 1;
                events.push(TraceEvent::Arrival { t, packet });
            }
            "S" => events.push(TraceEvent::Scheduled(parse_step(body).map_err(|m| err(i, m))?)),
            "G" => gain0 = Some(parse_rational(body).map_err(|e| err(i, e.to_string()))?),
            _ => return Err(err(i, format!("unknown line tag {tag:?}"))),
        }
    }
    let gain0 = gain0.ok_or_else(|| err(text.lines().count(), "missing total".into()))?;
    Ok(RunTrace { algorithm, sentinel, events, gain0 })
}
