#![allow(dead_code)]

use hhh_core::gen::{gen_few_heavy, gen_uniform, gen_zipf, unit_stream};
use hhh_core::{DimSpec, Fraction, HhhState, HierarchySpec, Prefix, UpdateMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn frac(s: &str) -> Fraction {
    s.parse().unwrap()
}

pub fn build(
    spec: &HierarchySpec,
    epsilon: Fraction,
    mode: UpdateMode,
    stream: &[(Prefix, u64)],
) -> HhhState {
    let mut st = HhhState::new(spec.clone(), epsilon, mode).unwrap();
    for (e, c) in stream {
        st.insert(e, *c).unwrap();
    }
    st
}

/// 16-bit values in four 4-bit steps.
pub fn spec_1d() -> HierarchySpec {
    HierarchySpec::uniform(1, DimSpec::plain(16, 4)).unwrap()
}

/// Pairs of 8-bit values in 2-bit steps: `H = 25`, `A = 5`.
pub fn spec_2d() -> HierarchySpec {
    HierarchySpec::uniform(2, DimSpec::plain(8, 2)).unwrap()
}

/// Triples of 8-bit values in 4-bit steps: `H = 27`.
pub fn spec_3d() -> HierarchySpec {
    HierarchySpec::uniform(3, DimSpec::plain(8, 4)).unwrap()
}

#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub spec: HierarchySpec,
    pub stream: Vec<(Prefix, u64)>,
    pub epsilon: Fraction,
    pub phi: Fraction,
    pub mode: UpdateMode,
}

impl Case {
    pub fn state(&self) -> HhhState {
        build(&self.spec, self.epsilon, self.mode, &self.stream)
    }

    pub fn total(&self) -> u64 {
        self.stream.iter().map(|(_, c)| c).sum()
    }
}

/// Gives every element a random weight in `1..=4`.
pub fn weighted(stream: Vec<(Prefix, u64)>, seed: u64) -> Vec<(Prefix, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    stream
        .into_iter()
        .map(|(e, _)| (e, rng.random_range(1..=4)))
        .collect()
}

/// Streams of one generator family for `spec`.
pub fn generate(spec: &HierarchySpec, family: &str, n: usize, seed: u64) -> Vec<(Prefix, u64)> {
    let elements = match family {
        "uniform" => gen_uniform(spec, n, seed),
        "zipf0.8" => gen_zipf(spec, 4 * n as u64, n, 0.8, seed).unwrap(),
        "zipf1.2" => gen_zipf(spec, 4 * n as u64, n, 1.2, seed).unwrap(),
        "few-heavy" => gen_few_heavy(spec, n / 2, 6, n / 24, seed),
        _ => panic!("unknown family {family}"),
    };
    unit_stream(elements)
}

pub const FAMILIES: [&str; 4] = ["uniform", "zipf0.8", "zipf1.2", "few-heavy"];

/// `(epsilon, phi)` pairs, all with `epsilon < phi / 2`.
pub const PARAMS: [(&str, &str); 3] = [("0.01", "0.05"), ("0.02", "0.1"), ("0.025", "0.06")];

/// The randomized corpus: every family in 1D to 3D at
/// every parameter pair, over three seeds. Odd seeds use weighted counts.
pub fn corpus() -> Vec<Case> {
    let dims: [(&str, HierarchySpec, usize); 3] = [
        ("1d", spec_1d(), 4000),
        ("2d", spec_2d(), 2500),
        ("3d", spec_3d(), 1500),
    ];
    let mut out = Vec::new();
    for (dname, spec, n) in &dims {
        for family in FAMILIES {
            for (pi, (eps, phi)) in PARAMS.iter().enumerate() {
                for seed in 0..3u64 {
                    let s = 1000 * pi as u64 + 17 * seed + family.len() as u64 + *n as u64;
                    let unit = generate(spec, family, *n, s);
                    let (stream, mode) = if seed % 2 == 1 {
                        (weighted(unit, s), UpdateMode::Weighted)
                    } else {
                        (unit, UpdateMode::Unitary)
                    };
                    out.push(Case {
                        name: format!("{dname}/{family}/eps={eps}/phi={phi}/seed={s}"),
                        spec: spec.clone(),
                        stream,
                        epsilon: frac(eps),
                        phi: frac(phi),
                        mode,
                    });
                }
            }
        }
    }
    out
}

/// `floor(1 / (phi - 2 epsilon))`, exactly; `None` unless `epsilon < phi/2`.
pub fn floor_output_bound_1d(phi: Fraction, eps: Fraction) -> Option<u128> {
    let (pn, pd) = (phi.numer() as u128, phi.denom() as u128);
    let (en, ed) = (eps.numer() as u128, eps.denom() as u128);
    // phi - 2 eps = (pn ed - 2 en pd) / (pd ed)
    let num = (pn * ed).checked_sub(2 * en * pd).filter(|&x| x > 0)?;
    Some(pd * ed / num)
}

/// `x <= eps / (phi - 2 eps) * n`, exactly, for `eps < phi / 2`.
pub fn within_cond_error_1d(x: i128, phi: Fraction, eps: Fraction, n: u64) -> bool {
    let (pn, pd) = (phi.numer() as i128, phi.denom() as i128);
    let (en, ed) = (eps.numer() as i128, eps.denom() as i128);
    // x (pn ed - 2 en pd) / (pd ed) <= en n / ed
    let gap = pn * ed - 2 * en * pd;
    assert!(gap > 0);
    x * gap <= en * n as i128 * pd
}
