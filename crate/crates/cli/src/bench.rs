//! Benchmark harness: generate patterns, run both modes, emit CSV rows.

use std::io::Write;
use std::path::PathBuf;

use owqs::generators::{self, AngleSet, RandomSpec};
use owqs::gflow::{find_gflow, OpenGraph};
use owqs::{
    parse_pattern, run, tune_weights, tune_weights_free, validate, ExecutionPlan, InputState, OutcomePolicy, Pattern,
    RunConfig,
};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Linear {
        m: usize,
    },
    Cluster2d {
        n: usize,
        m: usize,
    },
    Random {
        n: usize,
        density: f64,
        angles: AngleSet,
        allow_nogflow: bool,
    },
    File(PathBuf),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Linear { .. } => "linear",
            Family::Cluster2d { .. } => "cluster2d",
            Family::Random { .. } => "random",
            Family::File(_) => "file",
        }
    }

    /// Only random patterns depend on the seed.
    fn seeded(&self) -> bool {
        matches!(self, Family::Random { .. })
    }

    pub fn generate(&self, seed: u64) -> Result<Pattern, CliError> {
        let p = match self {
            Family::Linear { m } => generators::linear(*m),
            Family::Cluster2d { n, m } => generators::cluster(*n, *m),
            Family::Random {
                n,
                density,
                angles,
                allow_nogflow,
            } => generators::random(&RandomSpec {
                n: *n,
                density: *density,
                angles: *angles,
                seed,
                allow_nogflow: *allow_nogflow,
            })
            .ok_or_else(|| CliError::Runtime(format!("no pattern with a gflow found for n = {n}, seed = {seed}")))?,
            Family::File(path) => parse_pattern(&crate::io::read(path)?)?,
        };
        let report = validate(&p);
        if !report.is_ok() {
            return Err(CliError::Validation(report.to_string()));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub family: Family,
    /// Seeds `seed, seed + 1, ..., seed + reps - 1`.
    pub seed: u64,
    pub reps: usize,
    /// Timed repetitions per row; the fastest is reported.
    pub inner: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub mode: String,
    pub m_peak: usize,
    pub wall_ms: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub warnings: Vec<String>,
}

struct Prepared {
    pattern: Pattern,
    owqs: ExecutionPlan,
    /// `None` without a gflow.
    eowqs: Option<(Pattern, ExecutionPlan)>,
}

fn prepare(p: Pattern) -> Result<Prepared, CliError> {
    let (_, owqs) = tune_weights(&p)?;
    let has_gflow = find_gflow(&OpenGraph::from_pattern(&p)?).is_some();
    let eowqs = if has_gflow {
        let (_, plan) = tune_weights_free(&p)?;
        Some((p.without_signals(), plan))
    } else {
        None
    };
    Ok(Prepared {
        pattern: p,
        owqs,
        eowqs,
    })
}

/// Runs one pattern `inner` times; returns the peak and the fastest time.
fn timed(p: &Pattern, plan: &ExecutionPlan, cfg: &RunConfig, inner: usize) -> Result<(usize, f64), CliError> {
    let input = InputState::plus(p.inputs().iter().copied());
    let mut best = f64::INFINITY;
    let mut peak = 0;
    for _ in 0..inner.max(1) {
        let r = run(p, plan, &input, cfg)?;
        peak = r.stats.m_peak;
        best = best.min(r.stats.wall_ms);
    }
    Ok((peak, best))
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutput, CliError> {
    let mut out = BenchOutput::default();
    let mut shared: Option<Prepared> = None;
    for seed in spec.seed..spec.seed + spec.reps as u64 {
        let fresh;
        let prepared = if spec.family.seeded() {
            fresh = prepare(spec.family.generate(seed)?)?;
            &fresh
        } else {
            if shared.is_none() {
                shared = Some(prepare(spec.family.generate(seed)?)?);
            }
            shared.as_ref().expect("just prepared")
        };
        let n = prepared.pattern.qubits().len();
        let row = |mode: &str, (m_peak, wall_ms): (usize, f64)| BenchRow {
            family: spec.family.name().to_string(),
            n,
            mode: mode.to_string(),
            m_peak,
            wall_ms,
            seed,
        };
        let cfg = RunConfig {
            record_probs: false,
            ..RunConfig::owqs(OutcomePolicy::Random { seed })
        };
        out.rows
            .push(row("owqs", timed(&prepared.pattern, &prepared.owqs, &cfg, spec.inner)?));
        match &prepared.eowqs {
            Some((free, plan)) => {
                let cfg = RunConfig {
                    record_probs: false,
                    ..RunConfig::eowqs()
                };
                out.rows.push(row("eowqs", timed(free, plan, &cfg, spec.inner)?));
            }
            None => out
                .warnings
                .push(format!("seed {seed}: incorrect pattern (no gflow), eowqs row skipped")),
        }
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(["family", "n", "mode", "m_peak", "wall_ms", "seed"])
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    for r in rows {
        wr.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    wr.flush().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_stable() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "family,n,mode,m_peak,wall_ms,seed\n");
        let mut buf = Vec::new();
        let row = BenchRow {
            family: "linear".into(),
            n: 5,
            mode: "owqs".into(),
            m_peak: 2,
            wall_ms: 0.25,
            seed: 3,
        };
        write_csv(&[row], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "family,n,mode,m_peak,wall_ms,seed\nlinear,5,owqs,2,0.25,3\n"
        );
    }

    #[test]
    fn random_rows_per_seed_and_mode() {
        let spec = BenchSpec {
            family: Family::Random {
                n: 8,
                density: 0.3,
                angles: AngleSet::Uniform,
                allow_nogflow: false,
            },
            seed: 7,
            reps: 5,
            inner: 1,
        };
        let out = run_bench(&spec).unwrap();
        assert_eq!(out.rows.len(), 10);
        assert_eq!(out.rows.iter().filter(|r| r.mode == "eowqs").count(), 5);
    }
}
