//! Merging HHH states built independently over distributed streams.
//!
//! Every lattice node's summaries are merged in a single k-way pass; the
//! output procedures then run on the merged state unchanged. With inputs of
//! `ceil(3/epsilon)` counters each, merged estimates are within `3 epsilon N`
//! of the truth over the concatenated stream.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::hhh::HhhState;
use crate::space_saving::SpaceSaving;

/// Parameters of a merge, derived from its inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergePlan {
    pub inputs: usize,
    pub capacity: usize,
    /// Per-input epsilon times three.
    pub epsilon_effective: Option<Fraction>,
}

impl MergePlan {
    pub fn for_states(states: &[&HhhState]) -> Result<Self> {
        let first = states.first().ok_or(Error::EmptyMerge)?;
        for s in &states[1..] {
            if s.spec() != first.spec() {
                return Err(Error::Incompatible("hierarchies differ".into()));
            }
            if s.epsilon() != first.epsilon() || s.capacity() != first.capacity() {
                return Err(Error::Incompatible("epsilon or capacity differ".into()));
            }
            if s.mode() != first.mode() {
                return Err(Error::Incompatible("update modes differ".into()));
            }
        }
        Ok(MergePlan {
            inputs: states.len(),
            capacity: first.capacity(),
            epsilon_effective: first.epsilon().checked_mul_int(3),
        })
    }
}

/// Merges `states` node by node. The result keeps the inputs' hierarchy,
/// epsilon and per-node capacity; its total is the sum of the input totals.
pub fn merge_states(states: &[&HhhState]) -> Result<HhhState> {
    let plan = MergePlan::for_states(states)?;
    let first = states[0];
    let nodes = (0..first.nodes().len())
        .into_par_iter()
        .map(|idx| {
            let inputs: Vec<&SpaceSaving<_>> = states.iter().map(|s| &s.nodes()[idx]).collect();
            SpaceSaving::merge(&inputs, plan.capacity)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = states.iter().map(|s| s.total()).sum();
    HhhState::from_parts(first.spec().clone(), first.epsilon(), nodes, total)
}
