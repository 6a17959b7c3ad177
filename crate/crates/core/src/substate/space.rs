use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Branch, MeasureOutcome, SubState, SubStateError};
use crate::pattern::QubitId;

/// Norm drift above this is reported as a warning.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubStateId(usize);

/// Amplitude updates performed by each kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCounts {
    pub cz_calls: u64,
    pub cz_updates: u64,
    pub x_calls: u64,
    pub x_updates: u64,
    pub z_calls: u64,
    pub z_updates: u64,
    pub measure_calls: u64,
    pub measure_updates: u64,
    pub merges: u64,
    pub merge_updates: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormWarning {
    /// Qubit whose measurement left the drift behind.
    pub qubit: QubitId,
    pub norm_sqr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpaceStats {
    /// Largest sub-state ever instantiated, in qubits.
    pub m_peak: usize,
    pub ops: KernelCounts,
    pub norm_warnings: Vec<NormWarning>,
    /// Leftover amplitudes of sub-states whose last qubit was measured.
    pub discarded_phases: Vec<Complex64>,
}

/// Disjoint sub-states covering every live (prepared, unmeasured) qubit.
#[derive(Clone, Debug, Default)]
pub struct StateSpace {
    slots: Vec<Option<SubState>>,
    free: Vec<usize>,
    /// qubit -> (slot, position inside the slot's sub-state)
    locator: HashMap<QubitId, (usize, usize)>,
    stats: SpaceStats,
}

impl StateSpace {
    pub fn new() -> Self {
        StateSpace::default()
    }

    pub fn stats(&self) -> &SpaceStats {
        &self.stats
    }

    pub fn live_qubits(&self) -> usize {
        self.locator.len()
    }

    pub fn is_live(&self, q: QubitId) -> bool {
        self.locator.contains_key(&q)
    }

    /// Sub-state id and position of a live qubit.
    pub fn locate(&self, q: QubitId) -> Option<(SubStateId, usize)> {
        self.locator.get(&q).map(|&(s, p)| (SubStateId(s), p))
    }

    pub fn get(&self, id: SubStateId) -> Option<&SubState> {
        self.slots.get(id.0).and_then(|s| s.as_ref())
    }

    pub fn substates(&self) -> impl Iterator<Item = (SubStateId, &SubState)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (SubStateId(i), s)))
    }

    pub fn into_substates(self) -> (Vec<SubState>, SpaceStats) {
        (self.slots.into_iter().flatten().collect(), self.stats)
    }

    /// Adds a sub-state whose qubits are not live yet.
    pub fn insert(&mut self, s: SubState) -> Result<SubStateId, SubStateError> {
        if let Some(q) = s.qubits().iter().find(|q| self.is_live(**q)) {
            return Err(SubStateError::AlreadyLive(*q));
        }
        self.stats.m_peak = self.stats.m_peak.max(s.num_qubits());
        let slot = match self.free.pop() {
            Some(i) => i,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        for (p, q) in s.qubits().iter().enumerate() {
            self.locator.insert(*q, (slot, p));
        }
        self.slots[slot] = Some(s);
        Ok(SubStateId(slot))
    }

    pub fn prepare_plus(&mut self, q: QubitId) -> Result<SubStateId, SubStateError> {
        self.insert(SubState::plus(q))
    }

    fn take(&mut self, id: SubStateId) -> Result<SubState, SubStateError> {
        let s = self
            .slots
            .get_mut(id.0)
            .and_then(Option::take)
            .ok_or(SubStateError::UnknownSubState)?;
        self.free.push(id.0);
        Ok(s)
    }

    fn slot_mut(&mut self, slot: usize) -> &mut SubState {
        self.slots[slot].as_mut().expect("locator points at a live slot")
    }

    /// Replaces sub-states `a` and `b` by their tensor product; `a`'s qubits
    /// keep the low positions.
    pub fn tensor_merge(&mut self, a: SubStateId, b: SubStateId) -> Result<SubStateId, SubStateError> {
        if a == b || self.get(a).is_none() || self.get(b).is_none() {
            return Err(SubStateError::UnknownSubState);
        }
        let sa = self.take(a)?;
        let sb = self.take(b)?;
        let merged = sa.tensor(&sb)?;
        self.stats.ops.merges += 1;
        self.stats.ops.merge_updates += merged.amplitudes().len() as u64;
        for q in merged.qubits() {
            self.locator.remove(q);
        }
        self.insert(merged)
    }

    /// CZ between two live qubits, merging their sub-states first if needed.
    pub fn entangle(&mut self, u: QubitId, v: QubitId) -> Result<(), SubStateError> {
        let (su, _) = self.locate(u).ok_or(SubStateError::NotLive(u))?;
        let (sv, _) = self.locate(v).ok_or(SubStateError::NotLive(v))?;
        if su != sv {
            self.tensor_merge(su, sv)?;
        }
        let (slot, pu) = self.locator[&u];
        let (_, pv) = self.locator[&v];
        let n = self.slot_mut(slot).apply_cz(pu, pv)?;
        self.stats.ops.cz_calls += 1;
        self.stats.ops.cz_updates += n as u64;
        Ok(())
    }

    pub fn apply_x(&mut self, q: QubitId) -> Result<(), SubStateError> {
        let (slot, p) = *self.locator.get(&q).ok_or(SubStateError::NotLive(q))?;
        let n = self.slot_mut(slot).apply_x(p)?;
        self.stats.ops.x_calls += 1;
        self.stats.ops.x_updates += n as u64;
        Ok(())
    }

    pub fn apply_z(&mut self, q: QubitId) -> Result<(), SubStateError> {
        let (slot, p) = *self.locator.get(&q).ok_or(SubStateError::NotLive(q))?;
        let n = self.slot_mut(slot).apply_z(p)?;
        self.stats.ops.z_calls += 1;
        self.stats.ops.z_updates += n as u64;
        Ok(())
    }

    /// Measures `q` and removes it from the space. A sub-state left with no
    /// qubits is dropped and its remaining amplitude is recorded.
    pub fn measure_eliminate(
        &mut self,
        q: QubitId,
        angle: f64,
        branch: Branch,
    ) -> Result<MeasureOutcome, SubStateError> {
        let (slot, pos) = *self.locator.get(&q).ok_or(SubStateError::NotLive(q))?;
        let sub = self.slot_mut(slot);
        let out = sub.measure_eliminate(pos, angle, branch)?;
        let remaining: Vec<QubitId> = sub.qubits()[pos..].to_vec();
        let updates = sub.amplitudes().len() as u64;
        let norm_sqr = (branch != Branch::Positive).then(|| sub.norm_sqr());
        self.stats.ops.measure_calls += 1;
        self.stats.ops.measure_updates += updates;

        self.locator.remove(&q);
        for r in remaining {
            self.locator.get_mut(&r).expect("live qubit").1 -= 1;
        }
        if let Some(n) = norm_sqr {
            if (n - 1.0).abs() > NORM_TOLERANCE {
                self.stats.norm_warnings.push(NormWarning { qubit: q, norm_sqr: n });
            }
        }
        if self.slots[slot].as_ref().is_some_and(|s| s.num_qubits() == 0) {
            let empty = self.take(SubStateId(slot))?;
            self.stats.discarded_phases.push(empty.amplitudes()[0]);
        }
        Ok(out)
    }
}
