//! Seeded synthetic streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::lattice::{HierarchySpec, Prefix};

/// Environment variable consulted by the CLI for a default seed.
pub const SEED_ENV: &str = "HHH_SEED";

fn random_element(spec: &HierarchySpec, rng: &mut ChaCha8Rng) -> Prefix {
    let values: Vec<u32> = spec
        .dims()
        .iter()
        .map(|d| {
            if d.width == 32 {
                rng.random::<u32>()
            } else {
                rng.random_range(0..1u32 << d.width)
            }
        })
        .collect();
    spec.element(&values).expect("value drawn within width")
}

/// `universe` random fully specified elements; rank `r` of a skewed
/// distribution maps to entry `r - 1`.
fn universe(spec: &HierarchySpec, size: u64, rng: &mut ChaCha8Rng) -> Vec<Prefix> {
    (0..size).map(|_| random_element(spec, rng)).collect()
}

/// `n` elements whose ranks follow a Zipf law with exponent `alpha` over a
/// universe of `universe_size` random elements.
pub fn gen_zipf(
    spec: &HierarchySpec,
    universe_size: u64,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<Prefix>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parse {
            what: "zipf exponent",
            input: alpha.to_string(),
        });
    }
    if universe_size == 0 {
        return Err(Error::Parse {
            what: "universe size",
            input: "0".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = universe(spec, universe_size, &mut rng);
    let zipf = Zipf::new(universe_size as f64, alpha).map_err(|e| Error::Parse {
        what: "zipf parameters",
        input: e.to_string(),
    })?;
    Ok((0..n)
        .map(|_| {
            let rank = zipf.sample(&mut rng) as usize;
            items[rank.clamp(1, items.len()) - 1].clone()
        })
        .collect())
}

/// `n` elements drawn uniformly from the whole domain.
pub fn gen_uniform(spec: &HierarchySpec, n: usize, seed: u64) -> Vec<Prefix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_element(spec, &mut rng)).collect()
}

/// A stream that saturates every summary with uniform noise before a few
/// heavy elements arrive: `noise` uniform elements, then `heavy` distinct
/// elements with `per_heavy` occurrences each, interleaved with more noise.
pub fn gen_few_heavy(
    spec: &HierarchySpec,
    noise: usize,
    heavy: usize,
    per_heavy: usize,
    seed: u64,
) -> Vec<Prefix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heavies: Vec<Prefix> = (0..heavy).map(|_| random_element(spec, &mut rng)).collect();
    let mut out: Vec<Prefix> = (0..noise).map(|_| random_element(spec, &mut rng)).collect();
    for _ in 0..per_heavy {
        for h in &heavies {
            out.push(h.clone());
            out.push(random_element(spec, &mut rng));
        }
    }
    out
}

/// Unit-count stream pairs for insertion and oracle checks.
pub fn unit_stream(elements: Vec<Prefix>) -> Vec<(Prefix, u64)> {
    elements.into_iter().map(|e| (e, 1)).collect()
}

/// Tracked-counter occupancy of a summary-sized budget: how many distinct
/// elements of `stream` exceed `epsilon * N`, versus the `1/epsilon` counters
/// a worst-case stream needs.
pub fn heavy_count(stream: &[(Prefix, u64)], threshold: u64) -> usize {
    crate::oracle::aggregate(stream)
        .values()
        .filter(|&&f| f > threshold)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DimSpec;

    #[test]
    fn zipf_is_deterministic() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let a = gen_zipf(&spec, 1000, 500, 1.0, 7).unwrap();
        let b = gen_zipf(&spec, 1000, 500, 1.0, 7).unwrap();
        let c = gen_zipf(&spec, 1000, 500, 1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn steep_zipf_is_dominated_by_one_element() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        let s = unit_stream(gen_zipf(&spec, 1000, 2000, 8.0, 1).unwrap());
        let counts = crate::oracle::aggregate(&s);
        let top = counts.values().max().copied().unwrap();
        // Rank one has probability 1/zeta(8) ~ 0.9959: mean 1992, sd 2.9.
        assert!(top > 1977, "top = {top}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let spec = HierarchySpec::ipv4_bytes(1).unwrap();
        assert!(gen_zipf(&spec, 10, 10, 0.0, 1).is_err());
        assert!(gen_zipf(&spec, 0, 10, 1.0, 1).is_err());
    }

    #[test]
    fn generators_respect_width() {
        let spec = HierarchySpec::uniform(2, DimSpec::plain(8, 2)).unwrap();
        for e in gen_uniform(&spec, 200, 3).iter().chain(&gen_few_heavy(&spec, 50, 3, 10, 4)) {
            assert!(e.values().iter().all(|&v| v < 256));
        }
        assert_eq!(gen_few_heavy(&spec, 50, 3, 10, 4).len(), 50 + 3 * 10 * 2);
    }
}
