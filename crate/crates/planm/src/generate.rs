//! Seeded instance generators.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{integer, rational, Rational};
use crate::instance::{Instance, Packet, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    UniformRandom,
    SBounded,
    Agreeable,
    PhiAdversarial,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::UniformRandom,
        GeneratorKind::SBounded,
        GeneratorKind::Agreeable,
        GeneratorKind::PhiAdversarial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::UniformRandom => "uniform-random",
            GeneratorKind::SBounded => "s-bounded",
            GeneratorKind::Agreeable => "agreeable",
            GeneratorKind::PhiAdversarial => "phi-adversarial",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GeneratorError::InvalidConfig(format!("unknown generator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Number of release steps; for the adversarial chain this is `n`.
    pub steps: u32,
    pub min_per_step: u32,
    pub max_per_step: u32,
    pub min_weight: u64,
    pub max_weight: u64,
    /// Maximum `d − r`. For `SBounded` this is `s`.
    pub span: u32,
    /// Adversarial chain only: each weight gets up to this many extra
    /// units of `1/610`, drawn from the seed.
    pub jitter: u32,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind, steps: u32, seed: u64) -> Self {
        GeneratorConfig {
            kind,
            steps,
            min_per_step: 0,
            max_per_step: 5,
            min_weight: 1,
            max_weight: 1_000_000,
            span: 10,
            jitter: 0,
            seed,
        }
    }

    pub fn s_bounded(s: u32, steps: u32, seed: u64) -> Self {
        GeneratorConfig { span: s, ..GeneratorConfig::new(GeneratorKind::SBounded, steps, seed) }
    }

    fn check(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::InvalidConfig(m.to_string()));
        if self.min_per_step > self.max_per_step {
            return bad("min_per_step exceeds max_per_step");
        }
        if self.min_weight > self.max_weight {
            return bad("min_weight exceeds max_weight");
        }
        if self.max_weight > i64::MAX as u64 {
            return bad("max_weight exceeds i64::MAX");
        }
        Ok(())
    }
}

/// Denominator of the φ approximations; `987/610` is a convergent of φ.
pub const PHI_DENOMINATOR: i64 = 610;

/// `φ^i` rounded to a multiple of `1/610`, using `φ ≈ 987/610`.
pub fn phi_power_approx(i: u32) -> Rational {
    let num = BigInt::from(987).pow(i) * BigInt::from(PHI_DENOMINATOR);
    let den = BigInt::from(PHI_DENOMINATOR).pow(i);
    let (q, r) = num.div_rem(&den);
    let rounded = if r * 2 >= den { q + 1 } else { q };
    Rational::new(rounded, BigInt::from(PHI_DENOMINATOR))
}

pub fn generate(config: &GeneratorConfig) -> Result<Instance, GeneratorError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut packets = Vec::new();
    let mut next_id = 1u64;
    let mut push = |packets: &mut Vec<Packet>, r: Slot, d: Slot, w: Rational| {
        packets.push(Packet::new(next_id, r, d, w));
        next_id += 1;
    };
    match config.kind {
        GeneratorKind::UniformRandom | GeneratorKind::SBounded | GeneratorKind::Agreeable => {
            let mut last_deadline: Slot = 0;
            for t in 0..config.steps as Slot {
                let count = rng.gen_range(config.min_per_step..=config.max_per_step);
                for _ in 0..count {
                    let mut d = t + rng.gen_range(0..=config.span) as Slot;
                    if config.kind == GeneratorKind::Agreeable {
                        d = d.max(last_deadline);
                        last_deadline = d;
                    }
                    let w = rng.gen_range(config.min_weight..=config.max_weight);
                    push(&mut packets, t, d, integer(w as i64));
                }
            }
        }
        GeneratorKind::PhiAdversarial => {
            let n = config.steps;
            let jitter = |rng: &mut ChaCha8Rng| {
                let units = rng.gen_range(0..=config.jitter) as i64;
                rational(units, PHI_DENOMINATOR)
            };
            for i in 0..=n {
                let t = i as Slot;
                let tight = phi_power_approx(i) + jitter(&mut rng);
                push(&mut packets, t, t, tight);
                if i < n {
                    let flexible = phi_power_approx(i + 1) + jitter(&mut rng);
                    push(&mut packets, t, t + 1, flexible);
                }
            }
            if n == 0 {
                packets.clear();
            }
        }
    }
    Ok(Instance::new(packets).expect("generated packets are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::serialize_instance;

    #[test]
    fn zero_steps_is_empty() {
        for kind in GeneratorKind::ALL {
            let inst = generate(&GeneratorConfig::new(kind, 0, 7)).unwrap();
            assert!(inst.is_empty(), "{kind}");
        }
    }

    #[test]
    fn s_bounded_spans() {
        for seed in 0..50 {
            let inst = generate(&GeneratorConfig::s_bounded(2, 40, seed)).unwrap();
            assert!(inst.packets().iter().all(|p| p.deadline - p.release <= 2));
        }
    }

    #[test]
    fn agreeable_deadlines_follow_release_order() {
        for seed in 0..50 {
            let cfg = GeneratorConfig::new(GeneratorKind::Agreeable, 40, seed);
            let inst = generate(&cfg).unwrap();
            let ds: Vec<Slot> = inst.packets().iter().map(|p| p.deadline).collect();
            assert!(ds.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        for kind in GeneratorKind::ALL {
            let cfg = GeneratorConfig { jitter: 30, ..GeneratorConfig::new(kind, 30, 99) };
            let a = serialize_instance(&generate(&cfg).unwrap());
            let b = serialize_instance(&generate(&cfg).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn phi_powers_follow_fibonacci_ratios() {
        assert_eq!(phi_power_approx(0), integer(1));
        assert_eq!(phi_power_approx(1), rational(987, 610));
        assert_eq!(phi_power_approx(2), rational(1597, 610));
    }

    #[test]
    fn adversarial_chain_shape() {
        let inst = generate(&GeneratorConfig::new(GeneratorKind::PhiAdversarial, 3, 0)).unwrap();
        let shape: Vec<(Slot, Slot)> =
            inst.packets().iter().map(|p| (p.release, p.deadline)).collect();
        assert_eq!(shape, vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3)]);
    }

    #[test]
    fn rejects_inverted_ranges() {
        let cfg = GeneratorConfig { min_weight: 5, max_weight: 1, ..GeneratorConfig::new(GeneratorKind::UniformRandom, 3, 0) };
        assert!(generate(&cfg).is_err());
    }
}
