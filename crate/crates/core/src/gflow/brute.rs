//! Exhaustive reference for small open graphs.
//!
//! Exponential in the number of vertices; meant for cross-checking
//! [`super::find_gflow`] on graphs with at most a handful of qubits.

use std::collections::{BTreeMap, BTreeSet};

use super::{GFlow, OpenGraph};
use crate::pattern::{EntanglementGraph, QubitId};

/// Largest vertex count [`brute_force_gflow`] accepts.
pub const BRUTE_LIMIT: usize = 12;

/// Searches every measurement order and every correction set. Measured
/// qubits are placed from last to first; `v` may go in front of the already
/// placed set `L` when some `X ⊆ (L ∪ O) \ I` has `v ∈ Odd(X)` and no other
/// unplaced measured qubit in `Odd(X)`.
pub fn brute_force_gflow(og: &OpenGraph) -> Option<GFlow> {
    let ids: Vec<QubitId> = og.graph.vertices().iter().copied().collect();
    let n = ids.len();
    assert!(n <= BRUTE_LIMIT, "brute force is limited to {BRUTE_LIMIT} qubits");
    let bit = |q: &QubitId| 1u32 << ids.iter().position(|x| x == q).expect("vertex");
    let adj: Vec<u32> = ids
        .iter()
        .map(|&v| og.graph.neighbors(v).map(|u| bit(&u)).fold(0, |a, b| a | b))
        .collect();
    let odd: Vec<u32> = (0..1u32 << n)
        .map(|x| (0..n).filter(|i| x >> i & 1 == 1).fold(0, |acc, i| acc ^ adj[i]))
        .collect();
    let inputs: u32 = og.inputs.iter().map(bit).fold(0, |a, b| a | b);
    let outputs: u32 = og.outputs.iter().map(bit).fold(0, |a, b| a | b);
    let measured = !outputs & ((1u32 << n) - 1);

    // placed set -> (previous placed set, vertex, correction set)
    let mut parent: BTreeMap<u32, Option<(u32, usize, u32)>> = BTreeMap::from([(0, None)]);
    let mut frontier = vec![0u32];
    while let Some(placed) = frontier.pop() {
        let later = placed | outputs;
        let allowed = later & !inputs;
        for v in (0..n).filter(|&v| measured >> v & 1 == 1 && placed >> v & 1 == 0) {
            let next = placed | 1 << v;
            if parent.contains_key(&next) {
                continue;
            }
            let forbidden = measured & !placed & !(1 << v);
            // every subset of `allowed`, smallest first
            let mut x = 0u32;
            let found = loop {
                if x != 0 && odd[x as usize] >> v & 1 == 1 && odd[x as usize] & forbidden == 0 {
                    break Some(x);
                }
                if x == allowed {
                    break None;
                }
                x = (x.wrapping_sub(allowed)) & allowed;
            };
            if let Some(x) = found {
                parent.insert(next, Some((placed, v, x)));
                frontier.push(next);
            }
        }
    }

    let full = measured;
    parent.get(&full)?;
    let k = full.count_ones() as usize;
    let mut correction_sets = BTreeMap::new();
    let mut layering: BTreeMap<QubitId, usize> = og.outputs.iter().map(|&o| (o, k)).collect();
    let mut cur = full;
    let mut layer = 0;
    while let Some(Some((prev, v, x))) = parent.get(&cur) {
        let set: BTreeSet<QubitId> = (0..n).filter(|i| x >> i & 1 == 1).map(|i| ids[i]).collect();
        correction_sets.insert(ids[*v], set);
        layering.insert(ids[*v], layer);
        layer += 1;
        cur = *prev;
    }
    Some(GFlow {
        correction_sets,
        layering,
    })
}

/// Connected graphs on vertices `1..=n`, one per isomorphism class.
pub fn connected_graphs(n: usize) -> Vec<EntanglementGraph> {
    assert!((1..=7).contains(&n), "enumeration supports 1 to 7 vertices");
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let perms = permutations(n);
    let mut classes = BTreeSet::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        if !connected(n, &edges) {
            continue;
        }
        let canon = perms
            .iter()
            .map(|p| {
                edges.iter().fold(0u32, |acc, &(a, b)| {
                    let (x, y) = (p[a].min(p[b]), p[a].max(p[b]));
                    acc | 1 << pairs.iter().position(|&e| e == (x, y)).expect("pair")
                })
            })
            .min()
            .expect("at least the identity permutation");
        classes.insert(canon);
    }
    classes
        .into_iter()
        .map(|mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &(a, b))| (QubitId(a as u32 + 1), QubitId(b as u32 + 1)));
            EntanglementGraph::new((1..=n as u32).map(QubitId), edges).expect("simple graph")
        })
        .collect()
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = 1u32;
    loop {
        let grown = edges.iter().fold(seen, |acc, &(a, b)| {
            if acc >> a & 1 == 1 || acc >> b & 1 == 1 {
                acc | 1 << a | 1 << b
            } else {
                acc
            }
        });
        if grown == seen {
            return seen == (1u32 << n) - 1;
        }
        seen = grown;
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every `(inputs, outputs)` choice with at least one output.
pub fn open_graphs(graph: &EntanglementGraph) -> impl Iterator<Item = OpenGraph> + '_ {
    let ids: Vec<QubitId> = graph.vertices().iter().copied().collect();
    let n = ids.len();
    let pick =
        move |mask: u32| -> BTreeSet<QubitId> { (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect() };
    (0u32..1 << n).flat_map(move |i| {
        let pick = pick.clone();
        (1u32..1 << n).map(move |o| OpenGraph {
            graph: graph.clone(),
            inputs: pick(i),
            outputs: pick(o),
        })
    })
}
