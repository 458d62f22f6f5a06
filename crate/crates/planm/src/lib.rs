//! Online packet scheduling with deadlines.
//!
//! The crate implements the plan-based algorithm PlanM, which is
//! φ-competitive for maximizing the total weight of packets sent before
//! their deadlines, together with a greedy baseline, an exact offline
//! optimum, seeded instance generators, and a verifier that replays a run
//! and checks the potential-function bookkeeping event by event in exact
//! arithmetic over ℚ[φ].

pub mod arith;
pub mod bench;
pub mod generate;
pub mod instance;
pub mod opt;
pub mod plan;
pub mod scheduler;
pub mod trace;
pub mod verifier;

pub use arith::{golden_mul, golden_sign, GoldenNumber, Rational, TaggedWeight, TiebreakCounter};
pub use bench::{run_experiment, ExperimentConfig, ReportRow};
pub use generate::{generate, GeneratorConfig, GeneratorKind};
pub use opt::{brute_force_opt, optimal_schedule, OptError, Schedule};
pub use instance::{parse_instance, serialize_instance, validate, Instance, InstanceError, Packet, Slot};
pub use plan::{ArrivalOutcome, LeapInfo, LivePacket, PacketKey, PacketRef, PendingSet, Plan, PlanError};
pub use scheduler::{run, Algorithm, LeapRecord, RunTrace, SchedulerResult, StepKind, StepRecord};
pub use trace::{parse_trace, serialize_trace, TraceError};
pub use verifier::{verify, Verification, Verifier, VerifyError, Violation};
