//! The HHH state: one Space Saving summary per lattice node.
//!
//! Output walks the lattice from the fully specified level up to the root.
//! For each tracked prefix `p` it forms a conservative estimate `F'_p` of the
//! conditioned count (mass under `p` not already covered by an emitted
//! descendant) and emits `p` when `F'_p >= ceil(phi * N)`.
//!
//! * one dimension: `F'_p = f_max(p) - s_p`, where `s_p` accumulates the
//!   lower bounds of the nearest emitted descendants;
//! * two dimensions: `F'_p = f_max(p) - sum f_min(h) + sum f_max(glb(h, h'))`
//!   over the maximal emitted descendants `h` of `p`, adding back only the
//!   glbs not below a third such descendant;
//! * any dimension: the same, adding back the glb of every pair.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::lattice::{Glb, HierarchySpec, Label, Prefix};
use crate::report::{HhhReport, OutputEntry};
use crate::space_saving::{Estimate, SpaceSaving, UpdateMode};

#[derive(Clone, Debug)]
pub struct HhhState {
    spec: HierarchySpec,
    epsilon: Fraction,
    capacity: usize,
    labels: Vec<Label>,
    nodes: Vec<SpaceSaving<Prefix>>,
    total: u64,
}

/// A tracked prefix visited by an output procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub prefix: Prefix,
    pub estimate: Estimate,
    /// Estimated conditioned count `F'_p`.
    pub conditioned: i64,
    pub emitted: bool,
}

/// Report plus every candidate that was considered.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: HhhReport,
    pub candidates: Vec<Candidate>,
}

/// Which add-back rule the lattice output procedure uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PairRule {
    /// Skip glbs lying below a third maximal descendant (exact in 2D).
    ExcludeTriples,
    /// Add back every pairwise glb.
    AllPairs,
}

impl HhhState {
    /// `ceil(1/epsilon)` counters at each of the `H` lattice nodes.
    pub fn new(spec: HierarchySpec, epsilon: Fraction, mode: UpdateMode) -> Result<Self> {
        if !epsilon.is_proper() {
            return Err(Error::InvalidEpsilon(epsilon.to_string()));
        }
        let capacity = usize::try_from(epsilon.ceil_recip())
            .map_err(|_| Error::InvalidEpsilon(epsilon.to_string()))?;
        let labels = spec.labels();
        let nodes = labels
            .iter()
            .map(|_| SpaceSaving::new(capacity, mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(HhhState {
            spec,
            epsilon,
            capacity,
            labels,
            nodes,
            total: 0,
        })
    }

    /// Assembles a state from per-node summaries listed in
    /// [`HierarchySpec::labels`] order, for example ones restored from disk
    /// or rebuilt by hand.
    pub fn from_parts(
        spec: HierarchySpec,
        epsilon: Fraction,
        nodes: Vec<SpaceSaving<Prefix>>,
        total: u64,
    ) -> Result<Self> {
        if !epsilon.is_proper() {
            return Err(Error::InvalidEpsilon(epsilon.to_string()));
        }
        let labels = spec.labels();
        if nodes.len() != labels.len() {
            return Err(Error::Incompatible(format!(
                "{} node summaries for a lattice of {} nodes",
                nodes.len(),
                labels.len()
            )));
        }
        let capacity = nodes[0].capacity();
        let mode = nodes[0].mode();
        if nodes.iter().any(|n| n.capacity() != capacity || n.mode() != mode) {
            return Err(Error::Incompatible("node summaries differ in capacity or mode".into()));
        }
        Ok(HhhState {
            spec,
            epsilon,
            capacity,
            labels,
            nodes,
            total,
        })
    }

    pub fn spec(&self) -> &HierarchySpec {
        &self.spec
    }

    pub fn epsilon(&self) -> Fraction {
        self.epsilon
    }

    /// Counters per node.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> UpdateMode {
        self.nodes[0].mode()
    }

    /// Sum of all inserted counts, `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn nodes(&self) -> &[SpaceSaving<Prefix>] {
        &self.nodes
    }

    pub fn node(&self, label: &Label) -> &SpaceSaving<Prefix> {
        &self.nodes[self.spec.node_index(label)]
    }

    /// Counters allocated across all nodes, `H * ceil(1/epsilon)`.
    pub fn allocated_counters(&self) -> usize {
        self.nodes.iter().map(SpaceSaving::capacity).sum()
    }

    /// Counter slots actually reserved in memory across all nodes.
    pub fn reserved_slots(&self) -> usize {
        self.nodes.iter().map(SpaceSaving::reserved_slots).sum()
    }

    /// Bounds on the unconditioned count of any prefix.
    pub fn estimate(&self, p: &Prefix) -> Estimate {
        self.node(p.label()).estimate(p)
    }

    fn check_insert(&self, e: &Prefix, c: u64) -> Result<()> {
        if e.dims() != self.spec.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dimensions(),
                found: e.dims(),
            });
        }
        if !self.spec.is_fully_specified(e) {
            return Err(Error::InvalidHierarchy(
                "inserted elements must be fully specified".into(),
            ));
        }
        if c == 0 {
            return Err(Error::ZeroIncrement);
        }
        if c != 1 && self.mode() == UpdateMode::Unitary {
            return Err(Error::UnitaryIncrement(c));
        }
        Ok(())
    }

    /// Adds `c` occurrences of the fully specified element `e` to the summary
    /// of each of its `H` generalizations.
    pub fn insert(&mut self, e: &Prefix, c: u64) -> Result<()> {
        self.check_insert(e, c)?;
        for (node, label) in self.nodes.iter_mut().zip(&self.labels) {
            node.update(self.spec.generalize_to(e, label), c)?;
        }
        self.total += c;
        Ok(())
    }

    pub fn insert_values(&mut self, values: &[u32], c: u64) -> Result<()> {
        let e = self.spec.element(values)?;
        self.insert(&e, c)
    }

    /// Inserts a batch with one task per lattice node. The result is
    /// identical to inserting the batch sequentially.
    pub fn par_insert_batch(&mut self, batch: &[(Prefix, u64)]) -> Result<()> {
        for (e, c) in batch {
            self.check_insert(e, *c)?;
        }
        let spec = &self.spec;
        self.nodes
            .par_iter_mut()
            .zip(self.labels.par_iter())
            .try_for_each(|(node, label)| {
                batch
                    .iter()
                    .try_for_each(|(e, c)| node.update(spec.generalize_to(e, label), *c))
            })?;
        self.total += batch.iter().map(|(_, c)| c).sum::<u64>();
        Ok(())
    }

    fn check_phi(&self, phi: Fraction) -> Result<()> {
        if !phi.is_proper() {
            return Err(Error::InvalidPhi(phi.to_string()));
        }
        Ok(())
    }

    /// Approximate HHHs, dispatching on the number of dimensions.
    pub fn output(&self, phi: Fraction) -> Result<HhhReport> {
        self.evaluate(phi).map(|e| e.report)
    }

    pub fn evaluate(&self, phi: Fraction) -> Result<Evaluation> {
        match self.spec.dimensions() {
            1 => self.evaluate_1d(phi),
            2 => self.evaluate_2d(phi),
            _ => self.evaluate_nd(phi),
        }
    }

    pub fn output_1d(&self, phi: Fraction) -> Result<HhhReport> {
        self.evaluate_1d(phi).map(|e| e.report)
    }

    pub fn output_2d(&self, phi: Fraction) -> Result<HhhReport> {
        self.evaluate_2d(phi).map(|e| e.report)
    }

    pub fn output_nd(&self, phi: Fraction) -> Result<HhhReport> {
        self.evaluate_nd(phi).map(|e| e.report)
    }

    pub fn evaluate_1d(&self, phi: Fraction) -> Result<Evaluation> {
        self.check_phi(phi)?;
        self.require_dims(|d| d == 1, 1)?;
        let threshold = phi.ceil_mul(self.total) as i64;
        let mut candidates = Vec::new();
        // Discount s_e keyed by prefix, tracked or not.
        let mut pending: HashMap<Prefix, u64> = HashMap::new();
        for level in (0..=self.spec.depth()).rev() {
            let node = &self.nodes[level as usize];
            let mut next: HashMap<Prefix, u64> = HashMap::new();
            let forward = |p: &Prefix, s: u64, next: &mut HashMap<Prefix, u64>| {
                if let Some(parent) = self.spec.parent(p, 0) {
                    *next.entry(parent).or_default() += s;
                }
            };
            for p in sorted_items(node) {
                let s = pending.remove(p).unwrap_or(0);
                let estimate = node.estimate(p);
                let conditioned = estimate.upper as i64 - s as i64;
                let emitted = conditioned >= threshold;
                forward(p, if emitted { estimate.lower } else { s }, &mut next);
                candidates.push(Candidate {
                    prefix: p.clone(),
                    estimate,
                    conditioned,
                    emitted,
                });
            }
            // Untracked prefixes cannot be emitted but still pass their
            // discount upward.
            for (p, s) in pending.drain() {
                forward(&p, s, &mut next);
            }
            pending = next;
        }
        Ok(self.finish(phi, candidates))
    }

    pub fn evaluate_2d(&self, phi: Fraction) -> Result<Evaluation> {
        self.check_phi(phi)?;
        self.require_dims(|d| d == 2, 2)?;
        Ok(self.evaluate_lattice(phi, PairRule::ExcludeTriples))
    }

    pub fn evaluate_nd(&self, phi: Fraction) -> Result<Evaluation> {
        self.check_phi(phi)?;
        self.require_dims(|d| d >= 2, 2)?;
        Ok(self.evaluate_lattice(phi, PairRule::AllPairs))
    }

    fn require_dims(&self, ok: impl Fn(usize) -> bool, expected: usize) -> Result<()> {
        let d = self.spec.dimensions();
        if !ok(d) {
            return Err(Error::DimensionMismatch { expected, found: d });
        }
        Ok(())
    }

    fn evaluate_lattice(&self, phi: Fraction, rule: PairRule) -> Evaluation {
        let spec = &self.spec;
        let threshold = phi.ceil_mul(self.total) as i64;
        let mut candidates = Vec::new();
        // Emitted prefixes with their estimates, grouped by node index.
        let mut emitted: Vec<Vec<(Prefix, Estimate)>> = vec![Vec::new(); self.nodes.len()];
        for level in (0..=spec.depth()).rev() {
            let mut fresh: Vec<(usize, Prefix, Estimate)> = Vec::new();
            for (idx, label) in self.labels.iter().enumerate() {
                if label.level() != level {
                    continue;
                }
                let below_nodes: Vec<usize> = (0..self.nodes.len())
                    .filter(|&j| {
                        j != idx && !emitted[j].is_empty() && self.labels[j].dominates(label)
                    })
                    .collect();
                let node = &self.nodes[idx];
                for p in sorted_items(node) {
                    let estimate = node.estimate(p);
                    let below: Vec<&(Prefix, Estimate)> = below_nodes
                        .iter()
                        .flat_map(|&j| emitted[j].iter())
                        .filter(|(h, _)| spec.is_descendant(h, p))
                        .collect();
                    let maximal: Vec<&(Prefix, Estimate)> = below
                        .iter()
                        .filter(|(h, _)| !below.iter().any(|(g, _)| spec.is_strict_descendant(h, g)))
                        .copied()
                        .collect();
                    let conditioned = self.conditioned_estimate(estimate, &maximal, rule);
                    let emit = conditioned >= threshold;
                    if emit {
                        fresh.push((idx, p.clone(), estimate));
                    }
                    candidates.push(Candidate {
                        prefix: p.clone(),
                        estimate,
                        conditioned,
                        emitted: emit,
                    });
                }
            }
            for (idx, p, est) in fresh {
                emitted[idx].push((p, est));
            }
        }
        self.finish(phi, candidates)
    }

    fn conditioned_estimate(
        &self,
        estimate: Estimate,
        maximal: &[&(Prefix, Estimate)],
        rule: PairRule,
    ) -> i64 {
        let mut f = estimate.upper as i64;
        for (_, h) in maximal {
            f -= h.lower as i64;
        }
        for i in 0..maximal.len() {
            for j in i + 1..maximal.len() {
                let Glb::Prefix(q) = self.spec.glb(&maximal[i].0, &maximal[j].0) else {
                    continue;
                };
                if rule == PairRule::ExcludeTriples
                    && maximal
                        .iter()
                        .enumerate()
                        .any(|(k, (h3, _))| k != i && k != j && self.spec.is_descendant(&q, h3))
                {
                    continue;
                }
                f += self.estimate(&q).upper as i64;
            }
        }
        f
    }

    fn finish(&self, phi: Fraction, candidates: Vec<Candidate>) -> Evaluation {
        let entries = candidates
            .iter()
            .filter(|c| c.emitted)
            .map(|c| OutputEntry {
                prefix: c.prefix.clone(),
                lower: c.estimate.lower,
                upper: c.estimate.upper,
                conditioned: c.conditioned,
            })
            .collect();
        let mut warnings = Vec::new();
        let two_eps = self.epsilon.checked_mul_int(2);
        if two_eps.is_none_or(|t| phi <= t) {
            warnings.push(format!(
                "phi = {phi} does not exceed 2 * epsilon = 2 * {}; output-size and error bounds do not apply",
                self.epsilon
            ));
        }
        let report = HhhReport::new(self.spec.clone(), self.epsilon, phi, self.total, entries, warnings);
        Evaluation { report, candidates }
    }
}

fn sorted_items(node: &SpaceSaving<Prefix>) -> Vec<&Prefix> {
    let mut items = node.items();
    items.sort();
    items
}
