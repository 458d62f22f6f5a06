//! Batch experiments: generate instances, run the schedulers, compare with
//! the offline optimum, and optionally replay the verifier.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{golden_sign, GoldenNumber, Rational};
use crate::generate::{generate, GeneratorConfig, GeneratorError};
use crate::instance::{Instance, Slot};
use crate::opt::optimal_schedule;
use crate::scheduler::{run, Algorithm};
use crate::verifier::verify;

pub const HORIZON_CAP_VAR: &str = "SCHED_HORIZON_CAP";
pub const DEFAULT_HORIZON_CAP: Slot = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("sentinel slot {sentinel} exceeds the horizon cap {cap}")]
    HorizonTooLarge { sentinel: Slot, cap: Slot },
    #[error("bad {HORIZON_CAP_VAR} value {0:?}")]
    BadCap(String),
}

/// The horizon cap from the environment, or the default.
pub fn horizon_cap() -> Result<Slot, BenchError> {
    match std::env::var(HORIZON_CAP_VAR) {
        Ok(v) => v.trim().parse::<Slot>().ok().filter(|c| *c >= 0).ok_or(BenchError::BadCap(v)),
        Err(_) => Ok(DEFAULT_HORIZON_CAP),
    }
}

pub fn check_horizon(instance: &Instance, cap: Slot) -> Result<(), BenchError> {
    let sentinel = instance.sentinel();
    if sentinel > cap {
        return Err(BenchError::HorizonTooLarge { sentinel, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    /// Each generator config yields `count` instances with seeds
    /// `config.seed + i`.
    pub generators: Vec<GeneratorConfig>,
    pub algorithms: Vec<Algorithm>,
    pub count: u32,
    pub verify: bool,
    pub horizon_cap: Slot,
}

impl ExperimentConfig {
    pub fn new(generators: Vec<GeneratorConfig>, algorithms: Vec<Algorithm>, count: u32) -> Self {
        ExperimentConfig { generators, algorithms, count, verify: false, horizon_cap: DEFAULT_HORIZON_CAP }
    }
}

/// Outcome of replaying the verifier on a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyVerdict {
    Skipped,
    /// The verifier covers PlanM only.
    NotApplicable,
    Passed,
    Failed,
}

impl VerifyVerdict {
    pub fn name(self) -> &'static str {
        match self {
            VerifyVerdict::Skipped => "-",
            VerifyVerdict::NotApplicable => "n/a",
            VerifyVerdict::Passed => "pass",
            VerifyVerdict::Failed => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub instance: usize,
    pub generator: String,
    pub steps: u32,
    pub seed: u64,
    pub packets: usize,
    pub algorithm: Algorithm,
    pub gain0: Rational,
    pub opt: Rational,
    /// Sign of `φ·gain0 − opt`.
    pub phi_sign: i32,
    /// Sign of `2·gain0 − opt`.
    pub two_sign: i32,
    pub verified: VerifyVerdict,
    pub runtime: Duration,
}

impl ReportRow {
    /// The ratio bound the algorithm is known to meet: φ for PlanM, 2 for
    /// the greedy baseline.
    pub fn bound_holds(&self) -> bool {
        match self.algorithm {
            Algorithm::PlanM => self.phi_sign >= 0,
            Algorithm::Greedy => self.two_sign >= 0,
        }
    }

    pub fn ratio_display(&self) -> String {
        ratio_decimal(&self.opt, &self.gain0)
    }
}

/// `num/den` rounded half up to six decimals; `inf` for a positive
/// numerator over zero and `1.000000` for `0/0`.
pub fn ratio_decimal(num: &Rational, den: &Rational) -> String {
    if den.is_zero() {
        return if num.is_zero() { "1.000000".into() } else { "inf".into() };
    }
    let q = num / den;
    let negative = q.is_negative();
    let q = q.abs();
    let scaled = q * Rational::from_integer(BigInt::from(1_000_000));
    let (whole, rem) = scaled.numer().div_rem(scaled.denom());
    let micros = if rem * 2 >= *scaled.denom() { whole + 1 } else { whole };
    let (int, frac) = micros.div_rem(&BigInt::from(1_000_000));
    format!("{}{int}.{frac:06}", if negative { "-" } else { "" })
}

fn sign_of_multiple(c: &GoldenNumber, gain0: &Rational, opt: &Rational) -> i32 {
    golden_sign(&(c.scale(gain0) - GoldenNumber::from(opt.clone())))
}

/// Label, seed and size of the instance a row refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceInfo {
    pub instance: usize,
    pub generator: String,
    pub steps: u32,
    pub seed: u64,
}

/// One row per algorithm for a single instance.
pub fn evaluate(info: &InstanceInfo, instance: &Instance, algorithms: &[Algorithm], verify_runs: bool) -> Vec<ReportRow> {
    let opt = optimal_schedule(instance);
    algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            let (result, trace) = run(algorithm, instance);
            let verified = match (verify_runs, algorithm) {
                (false, _) => VerifyVerdict::Skipped,
                (true, Algorithm::Greedy) => VerifyVerdict::NotApplicable,
                (true, Algorithm::PlanM) => match verify(instance, &trace, &opt) {
                    Ok(v) if v.passed() => VerifyVerdict::Passed,
                    _ => VerifyVerdict::Failed,
                },
            };
            ReportRow {
                instance: info.instance,
                generator: info.generator.clone(),
                steps: info.steps,
                seed: info.seed,
                packets: instance.len(),
                algorithm,
                phi_sign: sign_of_multiple(&GoldenNumber::phi(), &result.gain0, &opt.weight0),
                two_sign: sign_of_multiple(&GoldenNumber::from_int(2), &result.gain0, &opt.weight0),
                gain0: result.gain0,
                opt: opt.weight0.clone(),
                verified,
                runtime: start.elapsed(),
            }
        })
        .collect()
}

/// One row per (instance, algorithm), ordered by instance then algorithm.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReportRow>, BenchError> {
    let mut rows = Vec::new();
    let mut index = 0;
    for gen in &config.generators {
        for i in 0..config.count {
            let cfg = GeneratorConfig { seed: gen.seed.wrapping_add(i as u64), ..gen.clone() };
            let instance = generate(&cfg)?;
            check_horizon(&instance, config.horizon_cap)?;
            let info = InstanceInfo { instance: index, generator: generator_label(&cfg), steps: cfg.steps, seed: cfg.seed };
            rows.extend(evaluate(&info, &instance, &config.algorithms, config.verify));
            index += 1;
        }
    }
    Ok(rows)
}

pub fn generator_label(cfg: &GeneratorConfig) -> String {
    match cfg.kind {
        crate::generate::GeneratorKind::SBounded => format!("{}-{}", cfg.kind, cfg.span),
        kind => kind.to_string(),
    }
}

const CSV_HEADER: [&str; 13] = [
    "instance", "generator", "steps", "seed", "packets", "algorithm", "gain0", "opt", "ratio", "phi_check",
    "two_check", "bound", "verify",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    instance: usize,
    generator: &'a str,
    steps: u32,
    seed: u64,
    packets: usize,
    algorithm: &'static str,
    gain0: String,
    opt: String,
    ratio: String,
    phi_check: i32,
    two_check: i32,
    bound: &'static str,
    verify: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_us: Option<u128>,
}

/// CSV report. Without timings the output depends only on the config.
pub fn rows_to_csv(rows: &[ReportRow], timings: bool) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        let mut header = CSV_HEADER.to_vec();
        if timings {
            header.push("runtime_us");
        }
        writer.write_record(header).expect("header writes");
    }
    for r in rows {
        writer
            .serialize(CsvRow {
                instance: r.instance,
                generator: &r.generator,
                steps: r.steps,
                seed: r.seed,
                packets: r.packets,
                algorithm: r.algorithm.name(),
                gain0: r.gain0.to_string(),
                opt: r.opt.to_string(),
                ratio: r.ratio_display(),
                phi_check: r.phi_sign,
                two_check: r.two_sign,
                bound: if r.bound_holds() { "pass" } else { "fail" },
                verify: r.verified.name(),
                runtime_us: timings.then_some(r.runtime.as_micros()),
            })
            .expect("row serializes");
    }
    String::from_utf8(writer.into_inner().expect("buffer flushes")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{integer, rational};
    use crate::generate::GeneratorKind;

    #[test]
    fn decimal_ratios() {
        assert_eq!(ratio_decimal(&integer(15), &integer(14)), "1.071429");
        assert_eq!(ratio_decimal(&integer(2), &integer(1)), "2.000000");
        assert_eq!(ratio_decimal(&rational(1, 3), &integer(1)), "0.333333");
        assert_eq!(ratio_decimal(&rational(2, 3), &integer(1)), "0.666667");
        assert_eq!(ratio_decimal(&integer(0), &integer(0)), "1.000000");
        assert_eq!(ratio_decimal(&integer(3), &integer(0)), "inf");
    }

    #[test]
    fn signs_are_exact() {
        // 13φ − 21 > 0 while 8φ − 13 < 0
        assert_eq!(sign_of_multiple(&GoldenNumber::phi(), &integer(13), &integer(21)), 1);
        assert_eq!(sign_of_multiple(&GoldenNumber::phi(), &integer(8), &integer(13)), -1);
        assert_eq!(sign_of_multiple(&GoldenNumber::from_int(2), &integer(5), &integer(10)), 0);
    }

    #[test]
    fn same_config_same_csv() {
        let gens = vec![
            GeneratorConfig::new(GeneratorKind::UniformRandom, 20, 3),
            GeneratorConfig::s_bounded(2, 20, 3),
        ];
        let mut cfg = ExperimentConfig::new(gens, vec![Algorithm::PlanM, Algorithm::Greedy], 5);
        cfg.verify = true;
        let a = rows_to_csv(&run_experiment(&cfg).unwrap(), false);
        let b = rows_to_csv(&run_experiment(&cfg).unwrap(), false);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 2 * 5 * 2);
        assert!(a.starts_with("instance,generator,steps,seed,packets,algorithm,gain0,opt,ratio,phi_check,two_check,bound,verify\n"));
        assert!(a.lines().skip(1).all(|l| l.contains(",pass,")));
    }

    #[test]
    fn empty_report_keeps_the_header() {
        assert_eq!(rows_to_csv(&[], false), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn verifier_agrees_with_the_ratio_check() {
        let gens = vec![GeneratorConfig::new(GeneratorKind::Agreeable, 30, 11)];
        let mut cfg = ExperimentConfig::new(gens, vec![Algorithm::PlanM], 10);
        cfg.verify = true;
        for row in run_experiment(&cfg).unwrap() {
            assert_eq!(row.verified, VerifyVerdict::Passed);
            assert!(row.bound_holds());
        }
    }

    #[test]
    fn horizon_cap_rejects_long_instances() {
        let inst = generate(&GeneratorConfig::new(GeneratorKind::PhiAdversarial, 10, 0)).unwrap();
        assert_eq!(check_horizon(&inst, 11), Ok(()));
        assert_eq!(check_horizon(&inst, 10), Err(BenchError::HorizonTooLarge { sentinel: 11, cap: 10 }));
    }
}
