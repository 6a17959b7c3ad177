//! File formats: input states, run reports and plan dumps as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use owqs::engine::{InputGroup, RunResult};
use owqs::oracle::DenseRun;
use owqs::substate::{KernelCounts, NormWarning};
use owqs::{ExecutionPlan, InputState, Pattern, QubitId};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `--input` value: a state file or `plus`.
pub fn load_input(arg: &str, p: &Pattern) -> Result<InputState, CliError> {
    if arg == "plus" {
        return Ok(InputState::plus(p.inputs().iter().copied()));
    }
    let text = read(Path::new(arg))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{arg}: {e}")))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Parses `--force-outcomes`: `0`/`1` characters, optionally separated by
/// commas or spaces.
pub fn parse_bits(s: &str) -> Result<Vec<u8>, CliError> {
    s.chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(CliError::Usage(format!(
                "--force-outcomes takes 0/1 digits, found `{other}`"
            ))),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStepJson {
    pub entangles: Vec<(QubitId, QubitId)>,
    pub measure: QubitId,
    pub ms: Vec<QubitId>,
}

/// Machine-readable twin of the plan dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub weights: Option<[f64; 4]>,
    pub steps: Vec<PlanStepJson>,
    pub output_entangles: Vec<(QubitId, QubitId)>,
    pub corrections: Vec<String>,
    pub peak: usize,
}

impl PlanJson {
    pub fn new(plan: &ExecutionPlan, weights: Option<owqs::CostWeights>) -> Self {
        PlanJson {
            weights: weights.map(|w| [w.w_ms, w.w_os, w.w_ss, w.w_flag]),
            steps: plan
                .steps
                .iter()
                .map(|s| PlanStepJson {
                    entangles: s.entangles.clone(),
                    measure: s.qubit,
                    ms: s.ms.clone(),
                })
                .collect(),
            output_entangles: plan.output_entangles.clone(),
            corrections: plan.corrections.iter().map(|c| c.to_string()).collect(),
            peak: plan.predicted_peak,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub m_peak: usize,
    pub plan: PlanJson,
    pub measurement_order: Vec<QubitId>,
    pub wall_ms: f64,
    pub norm_warnings: Vec<NormWarning>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ops: Option<KernelCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discarded_phases: Option<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleJson {
    pub output_state: InputGroup,
    /// `prob0` per measurement in pattern order.
    pub probs: Vec<f64>,
    /// Largest amplitude difference to the engine output, global phase included.
    pub max_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: owqs::Mode,
    pub outcomes: BTreeMap<QubitId, u8>,
    /// One entry per output factor, amplitudes LSB-first in `qubits` order.
    pub output_state: Vec<InputGroup>,
    /// `prob0` per measurement in plan order; `-1` where not computed.
    pub probs: Vec<f64>,
    pub stats: StatsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleJson>,
}

impl RunReport {
    pub fn new(
        mode: owqs::Mode,
        r: &RunResult,
        plan: PlanJson,
        tensor: bool,
        detailed: bool,
        oracle: Option<&DenseRun>,
    ) -> Self {
        let factors = if tensor {
            vec![r.output_state()]
        } else {
            r.factors.clone()
        };
        let engine_state = r.output_state_with_phase();
        RunReport {
            mode,
            outcomes: r.outcomes.iter().collect(),
            output_state: factors.iter().map(group).collect(),
            probs: r.stats.probs.clone(),
            stats: StatsJson {
                m_peak: r.stats.m_peak,
                plan,
                measurement_order: r.stats.measurement_order.clone(),
                wall_ms: r.stats.wall_ms,
                norm_warnings: r.stats.norm_warnings.clone(),
                warnings: r.stats.warnings.clone(),
                ops: detailed.then_some(r.stats.ops),
                discarded_phases: detailed.then(|| r.stats.discarded_phases.clone()),
            },
            oracle: oracle.map(|d| OracleJson {
                output_state: InputGroup {
                    qubits: d.output.qubits.clone(),
                    amps: d.output.amps.clone(),
                },
                probs: d.prob0.clone(),
                max_diff: engine_state
                    .amplitudes()
                    .iter()
                    .zip(&d.output.amps)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max),
            }),
        }
    }
}

fn group(s: &owqs::SubState) -> InputGroup {
    InputGroup {
        qubits: s.qubits().to_vec(),
        amps: s.amplitudes().to_vec(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorJson {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GflowJson {
    pub found: bool,
    pub layers: usize,
    pub correction_sets: BTreeMap<QubitId, Vec<QubitId>>,
    pub layering: BTreeMap<QubitId, usize>,
}
