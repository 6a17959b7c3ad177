//! Pattern families used by tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gflow::{find_gflow, pattern_from_gflow, GFlow, OpenGraph};
use crate::pattern::{parse_pattern, Action, Angle, EntanglementGraph, Pattern, QubitId, Signal};

const CNOT: &str = include_str!("../data/cnot.owp");
const SWAP: &str = include_str!("../data/swap.owp");

/// Two-qubit CNOT on inputs 1, 2 with outputs 1, 4; qubit 1 is the control.
pub fn cnot() -> Pattern {
    parse_pattern(CNOT).expect("bundled pattern parses")
}

/// Three-CNOT SWAP over eight qubits; inputs 1, 2 and outputs 6, 8.
pub fn swap() -> Pattern {
    parse_pattern(SWAP).expect("bundled pattern parses")
}

/// Label of grid site `(row, col)` in an `n`-row cluster.
pub fn cluster_id(n: usize, row: usize, col: usize) -> QubitId {
    QubitId((col * n + row + 1) as u32)
}

/// `n x m` grid with inputs in the first column, outputs in the last, every
/// measurement at angle 0 and domains induced by the flow `(i, j) -> (i, j+1)`.
pub fn cluster(n: usize, m: usize) -> Pattern {
    assert!(n >= 1 && m >= 1, "cluster needs at least one row and column");
    let id = |r, c| cluster_id(n, r, c);
    let mut edges = Vec::new();
    for c in 0..m {
        for r in 0..n {
            if c + 1 < m {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < n {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let vertices: Vec<QubitId> = (0..m).flat_map(|c| (0..n).map(move |r| id(r, c))).collect();
    let graph = EntanglementGraph::new(vertices.iter().copied(), edges).expect("grid edges are distinct");
    let og = OpenGraph::new(
        graph,
        (0..n).map(|r| id(r, 0)).collect(),
        (0..n).map(|r| id(r, m - 1)).collect(),
    )
    .expect("grid vertices");
    let mut correction_sets = BTreeMap::new();
    let mut layering = BTreeMap::new();
    for c in 0..m {
        for r in 0..n {
            layering.insert(id(r, c), c);
            if c + 1 < m {
                correction_sets.insert(id(r, c), BTreeSet::from([id(r, c + 1)]));
            }
        }
    }
    pattern_from_gflow(
        &og,
        &GFlow {
            correction_sets,
            layering,
        },
        &BTreeMap::new(),
    )
}

/// One-row cluster of `m` qubits.
pub fn linear(m: usize) -> Pattern {
    cluster(1, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleSet {
    Zero,
    /// Multiples of pi/2.
    Clifford,
    /// Multiples of pi/4.
    PiQuarter,
    /// Uniform in `[0, 2pi)`.
    Uniform,
}

impl FromStr for AngleSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(AngleSet::Zero),
            "clifford" => Ok(AngleSet::Clifford),
            "pi4" => Ok(AngleSet::PiQuarter),
            "uniform" => Ok(AngleSet::Uniform),
            other => Err(format!("unknown angle set `{other}` (zero, clifford, pi4, uniform)")),
        }
    }
}

impl fmt::Display for AngleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AngleSet::Zero => "zero",
            AngleSet::Clifford => "clifford",
            AngleSet::PiQuarter => "pi4",
            AngleSet::Uniform => "uniform",
        })
    }
}

impl AngleSet {
    fn draw(self, rng: &mut impl Rng) -> Angle {
        match self {
            AngleSet::Zero => Angle::ZERO,
            AngleSet::Clifford => Angle::pi_multiple(rng.gen_range(0..4), 2),
            AngleSet::PiQuarter => Angle::pi_multiple(rng.gen_range(0..8), 4),
            AngleSet::Uniform => Angle::Radians(rng.gen_range(0.0..std::f64::consts::TAU)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    /// Probability of each non-tree edge.
    pub density: f64,
    pub angles: AngleSet,
    pub seed: u64,
    /// Accept graphs without a gflow; such patterns carry no signals.
    pub allow_nogflow: bool,
}

impl RandomSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        RandomSpec {
            n,
            density: 0.3,
            angles: AngleSet::Uniform,
            seed,
            allow_nogflow: false,
        }
    }
}

const MAX_ATTEMPTS: usize = 10_000;

/// Random connected open graph turned into a pattern. Without
/// `allow_nogflow`, graphs are redrawn until one has a gflow and the
/// pattern's domains are the ones that gflow induces.
pub fn random(spec: &RandomSpec) -> Option<Pattern> {
    assert!(spec.n >= 2, "random patterns need at least two qubits");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_ATTEMPTS {
        let og = random_open_graph(spec.n, spec.density, &mut rng);
        let angles: BTreeMap<QubitId, Angle> = og.measured().map(|q| (q, spec.angles.draw(&mut rng))).collect();
        match find_gflow(&og) {
            Some(g) => return Some(pattern_from_gflow(&og, &g, &angles)),
            None if spec.allow_nogflow => return Some(signal_free(&og, &angles)),
            None => {}
        }
    }
    None
}

fn random_open_graph(n: usize, density: f64, rng: &mut impl Rng) -> OpenGraph {
    let ids: Vec<QubitId> = (1..=n as u32).map(QubitId).collect();
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.insert((ids[j], ids[i]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density.clamp(0.0, 1.0)) {
                edges.insert((ids[i], ids[j]));
            }
        }
    }
    let max_io = (n / 3).max(1);
    let k_in = rng.gen_range(1..=max_io);
    let k_out = rng.gen_range(k_in..=max_io.max(k_in)).min(n - 1);
    let mut shuffled = ids.clone();
    shuffled.shuffle(rng);
    let inputs: BTreeSet<QubitId> = shuffled[..k_in].iter().copied().collect();
    let outputs: BTreeSet<QubitId> = shuffled[n - k_out..].iter().copied().collect();
    let graph = EntanglementGraph::new(ids, edges).expect("distinct edges");
    OpenGraph::new(graph, inputs, outputs).expect("labels from the graph")
}

fn signal_free(og: &OpenGraph, angles: &BTreeMap<QubitId, Angle>) -> Pattern {
    let mut actions: Vec<Action> = og.graph.edges().iter().map(|&(u, v)| Action::Entangle(u, v)).collect();
    for q in og.measured() {
        actions.push(Action::Measure {
            qubit: q,
            angle: angles[&q],
            s: Signal::zero(),
            t: Signal::zero(),
        });
    }
    Pattern::new(
        og.graph.vertices().clone(),
        og.inputs.clone(),
        og.outputs.clone(),
        actions,
    )
    .expect("open graph vertices")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gflow::verify_gflow;
    use crate::pattern::validate;

    #[test]
    fn cluster_shapes() {
        let p = cluster(1, 3);
        assert_eq!(p.qubits().len(), 3);
        assert_eq!(p.inputs(), &BTreeSet::from([QubitId(1)]));
        assert_eq!(p.outputs(), &BTreeSet::from([QubitId(3)]));
        assert_eq!(p.measured_qubits(), vec![QubitId(1), QubitId(2)]);

        let p = cluster(2, 2);
        assert_eq!(p.qubits().len(), 4);
        assert_eq!(p.entangle_count(), 4);
        assert_eq!(p.outputs().len(), 2);
    }

    #[test]
    fn clusters_validate_and_have_gflow() {
        for (n, m) in [(1, 1), (1, 5), (2, 3), (3, 4), (4, 2)] {
            let p = cluster(n, m);
            assert!(validate(&p).is_ok(), "{n}x{m}: {}", validate(&p));
            let og = OpenGraph::from_pattern(&p).unwrap();
            let g = find_gflow(&og).unwrap();
            assert!(verify_gflow(&og, &g));
        }
    }

    #[test]
    fn bundled_patterns_validate() {
        assert!(validate(&cnot()).is_ok());
        assert!(validate(&swap()).is_ok());
    }

    #[test]
    fn random_patterns_are_valid_and_reproducible() {
        for seed in 0..20 {
            let spec = RandomSpec::new(7, seed);
            let p = random(&spec).unwrap();
            assert!(validate(&p).is_ok(), "{}", validate(&p));
            assert!(find_gflow(&OpenGraph::from_pattern(&p).unwrap()).is_some());
            assert_eq!(random(&spec), Some(p));
        }
    }
}
