//! Exact, memory-unconstrained reference computations.
//!
//! Everything here works from the multiset of fully specified elements and
//! enumerates only the prefixes that have at least one observed descendant;
//! every other prefix has count zero.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::fraction::Fraction;
use crate::lattice::{HierarchySpec, Label, Prefix};
use crate::report::HhhReport;

/// Collapses a stream into distinct elements with their total counts.
pub fn aggregate(stream: &[(Prefix, u64)]) -> HashMap<Prefix, u64> {
    let mut out: HashMap<Prefix, u64> = HashMap::new();
    for (e, c) in stream {
        if *c > 0 {
            *out.entry(e.clone()).or_default() += c;
        }
    }
    out
}

/// Exact unconditioned counts `f(p)` of every prefix with `f(p) > 0`.
#[derive(Clone, Debug, Default)]
pub struct ExactCounts {
    counts: HashMap<Prefix, u64>,
    total: u64,
}

impl ExactCounts {
    pub fn get(&self, p: &Prefix) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Prefix, u64)> {
        self.counts.iter().map(|(p, &c)| (p, c))
    }
}

pub fn exact_counts(stream: &[(Prefix, u64)], spec: &HierarchySpec) -> ExactCounts {
    let mut counts: HashMap<Prefix, u64> = HashMap::new();
    let mut total = 0;
    for (e, f) in aggregate(stream) {
        total += f;
        for g in spec.generalizations(&e) {
            *counts.entry(g).or_default() += f;
        }
    }
    ExactCounts { counts, total }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactEntry {
    pub prefix: Prefix,
    /// `F_p` at the time `p` was admitted.
    pub conditioned: u64,
    /// `f(p)`
    pub unconditioned: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ExactHhh {
    pub entries: Vec<ExactEntry>,
    pub total: u64,
}

impl ExactHhh {
    pub fn prefixes(&self) -> HashSet<Prefix> {
        self.entries.iter().map(|e| e.prefix.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Adds each element's mass to the prefixes (at nodes in `labels`) it is
/// not excluded from: `e` counts toward `p` unless some member of `set` lies
/// strictly between `e` (inclusive) and `p`.
fn accumulate_conditioned(
    elements: &HashMap<Prefix, u64>,
    spec: &HierarchySpec,
    labels: &[Label],
    set: &HashSet<Prefix>,
) -> HashMap<Prefix, u64> {
    let all = spec.labels();
    let mut out: HashMap<Prefix, u64> = HashMap::new();
    for (e, &f) in elements {
        let marked: Vec<&Label> = all
            .iter()
            .filter(|l| set.contains(&spec.generalize_to(e, l)))
            .collect();
        for label in labels {
            let covered = marked.iter().any(|m| *m != label && m.dominates(label));
            if !covered {
                *out.entry(spec.generalize_to(e, label)).or_default() += f;
            }
        }
    }
    out
}

/// Exact HHHs by the level-by-level induction: fully specified heavy hitters
/// first, then at each higher level every prefix whose conditioned count with
/// respect to the HHHs found so far reaches `phi * N`.
pub fn exact_hhh(stream: &[(Prefix, u64)], spec: &HierarchySpec, phi: Fraction) -> ExactHhh {
    let elements = aggregate(stream);
    let total: u64 = elements.values().sum();
    let counts = exact_counts(stream, spec);
    let mut found: HashSet<Prefix> = HashSet::new();
    let mut entries = Vec::new();
    for level in (0..=spec.depth()).rev() {
        let labels = spec.labels_at_level(level);
        let conditioned = accumulate_conditioned(&elements, spec, &labels, &found);
        let mut admitted: Vec<(Prefix, u64)> = conditioned
            .into_iter()
            .filter(|&(_, f)| phi.exceeded_by(f, total))
            .collect();
        admitted.sort();
        for (p, f) in admitted {
            found.insert(p.clone());
            entries.push(ExactEntry {
                unconditioned: counts.get(&p),
                prefix: p,
                conditioned: f,
            });
        }
    }
    ExactHhh { entries, total }
}

/// `F_p` with respect to an arbitrary set `set`, by direct enumeration of the
/// elements under `p`.
pub fn conditioned_count_wrt(
    stream: &[(Prefix, u64)],
    spec: &HierarchySpec,
    p: &Prefix,
    set: &HashSet<Prefix>,
) -> u64 {
    let below: Vec<&Prefix> = set
        .iter()
        .filter(|q| spec.is_strict_descendant(q, p))
        .collect();
    aggregate(stream)
        .into_iter()
        .filter(|(e, _)| spec.is_descendant(e, p))
        .filter(|(e, _)| !below.iter().any(|q| spec.is_descendant(e, q)))
        .map(|(_, f)| f)
        .sum()
}

/// `F_p` with respect to `set` for every prefix with a positive value.
pub fn conditioned_counts_wrt(
    stream: &[(Prefix, u64)],
    spec: &HierarchySpec,
    set: &HashSet<Prefix>,
) -> HashMap<Prefix, u64> {
    accumulate_conditioned(&aggregate(stream), spec, &spec.labels(), set)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AccuracyViolation {
    pub prefix: String,
    pub f_min: u64,
    pub f_max: u64,
    pub exact: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageViolation {
    pub prefix: String,
    pub conditioned: u64,
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub accuracy_violations: Vec<AccuracyViolation>,
    pub coverage_violations: Vec<CoverageViolation>,
}

/// Checks a report for Accuracy (each interval brackets the exact count and
/// is at most `epsilon N` wide) and Coverage (every prefix outside the report
/// has conditioned count below `phi N` with respect to the report).
pub fn check_report(
    stream: &[(Prefix, u64)],
    spec: &HierarchySpec,
    phi: Fraction,
    epsilon: Fraction,
    report: &HhhReport,
) -> Verdict {
    let counts = exact_counts(stream, spec);
    let n = counts.total();
    let mut accuracy_violations = Vec::new();
    for e in &report.entries {
        let exact = counts.get(&e.prefix);
        let bracketed = e.lower <= exact && exact <= e.upper;
        if !bracketed || !epsilon.bounds(e.upper.saturating_sub(e.lower), n) {
            accuracy_violations.push(AccuracyViolation {
                prefix: spec.format_prefix(&e.prefix),
                f_min: e.lower,
                f_max: e.upper,
                exact,
            });
        }
    }
    let set = report.prefixes();
    let mut coverage: Vec<(Prefix, u64)> = conditioned_counts_wrt(stream, spec, &set)
        .into_iter()
        .filter(|(p, f)| !set.contains(p) && phi.exceeded_by(*f, n))
        .collect();
    coverage.sort();
    let coverage_violations: Vec<CoverageViolation> = coverage
        .into_iter()
        .map(|(p, f)| CoverageViolation {
            prefix: spec.format_prefix(&p),
            conditioned: f,
            threshold: phi.ceil_mul(n),
        })
        .collect();
    Verdict {
        pass: accuracy_violations.is_empty() && coverage_violations.is_empty(),
        accuracy_violations,
        coverage_violations,
    }
}
