//! Independent estimates: Monte Carlo walks and exact convolution entropies.
//!
//! Sample `i` of a run with master seed `s` uses ChaCha20 seeded with `s`
//! (via `SeedableRng::seed_from_u64`) on stream `i`; each step draws one
//! `f64` in `[0,1)` and picks the first support point whose cumulative weight
//! exceeds it. Estimates are accumulated over fixed blocks of sample indices and
//! merged in index order, so they do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::boundary::BoundaryAtlas;
use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::measure::{convolution_powers, StepMeasure, DEFAULT_SUPPORT_BUDGET};

const BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Running count, mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pairwise combination of two disjoint batches.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self) -> EstimateWithError {
        EstimateWithError {
            estimate: self.mean,
            std_error: (self.variance() / self.count as f64).sqrt(),
            samples: self.count,
        }
    }
}

/// Cumulative weights for sampling by inversion.
struct Sampler<'a> {
    support: &'a [Element],
    cumulative: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(mu: &'a StepMeasure) -> Result<Self> {
        if !mu.is_probability() {
            return Err(Error::Domain("walks need a probability measure".into()));
        }
        let mut acc = 0.0;
        let cumulative = mu
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Sampler {
            support: mu.support(),
            cumulative,
        })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> &'a Element {
        let u: f64 = rng.gen();
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.support[i.min(self.support.len() - 1)]
    }
}

fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `Z_0, …, Z_n` for sample `index`.
pub fn sample_walk(group: &Group, mu: &StepMeasure, cfg: &WalkConfig, index: u64) -> Result<Vec<Element>> {
    let sampler = Sampler::new(mu)?;
    let mut rng = sample_rng(cfg.seed, index);
    let mut z = Element::identity();
    let mut path = Vec::with_capacity(cfg.steps + 1);
    path.push(z.clone());
    for _ in 0..cfg.steps {
        group.mul_assign(&mut z, sampler.draw(&mut rng));
        path.push(z.clone());
    }
    Ok(path)
}

/// `Z_n` for sample `index`, without storing the path.
pub fn walk_endpoint(group: &Group, mu: &StepMeasure, cfg: &WalkConfig, index: u64) -> Result<Element> {
    let sampler = Sampler::new(mu)?;
    Ok(endpoint(group, &sampler, cfg, index))
}

fn endpoint(group: &Group, sampler: &Sampler, cfg: &WalkConfig, index: u64) -> Element {
    let mut rng = sample_rng(cfg.seed, index);
    let mut z = Element::identity();
    for _ in 0..cfg.steps {
        group.mul_assign(&mut z, sampler.draw(&mut rng));
    }
    z
}

/// `d(e, Z_n)` for samples `indices`, in order.
pub fn endpoint_lengths(
    group: &Group,
    mu: &StepMeasure,
    cfg: &WalkConfig,
    indices: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    let sampler = Sampler::new(mu)?;
    Ok(indices
        .into_par_iter()
        .map(|i| group.length(&endpoint(group, &sampler, cfg, i as u64)) as f64)
        .collect())
}

/// Moments of `f(d(e, Z_n))` over the given sample indices.
fn length_moments(
    group: &Group,
    mu: &StepMeasure,
    cfg: &WalkConfig,
    indices: std::ops::Range<usize>,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<Moments> {
    check(cfg)?;
    let sampler = Sampler::new(mu)?;
    let starts: Vec<usize> = indices.clone().step_by(BLOCK).collect();
    let blocks: Vec<Moments> = starts
        .par_iter()
        .map(|&s| {
            let mut m = Moments::default();
            for i in s..(s + BLOCK).min(indices.end) {
                let z = endpoint(group, &sampler, cfg, i as u64);
                m.push(f(group.length(&z) as f64));
            }
            m
        })
        .collect();
    Ok(blocks.iter().fold(Moments::default(), |acc, b| acc.merge(b)))
}

fn check(cfg: &WalkConfig) -> Result<()> {
    if cfg.steps == 0 || cfg.samples == 0 {
        return Err(Error::Domain("walks need at least one step and one sample".into()));
    }
    Ok(())
}

/// Moments of `d(e,Z_n)/n` over a range of sample indices.
pub fn drift_moments(
    group: &Group,
    mu: &StepMeasure,
    cfg: &WalkConfig,
    indices: std::ops::Range<usize>,
) -> Result<Moments> {
    let n = cfg.steps as f64;
    length_moments(group, mu, cfg, indices, |d| d / n)
}

/// Mean of `d(e,Z_n)/n` with its standard error.
pub fn drift_mc(group: &Group, mu: &StepMeasure, cfg: &WalkConfig) -> Result<EstimateWithError> {
    Ok(drift_moments(group, mu, cfg, 0..cfg.samples)?.estimate())
}

/// Sample variance of `(d(e,Z_n) - n ℓ̂)/√n`, with the normal-theory standard
/// error `s²·√(2/(m-1))`.
pub fn variance_mc(group: &Group, mu: &StepMeasure, cfg: &WalkConfig) -> Result<EstimateWithError> {
    let n = cfg.steps as f64;
    let m = length_moments(group, mu, cfg, 0..cfg.samples, |d| d / n.sqrt())?;
    let v = m.variance();
    Ok(EstimateWithError {
        estimate: v,
        std_error: if m.count > 1 {
            v * (2.0 / (m.count - 1) as f64).sqrt()
        } else {
            0.0
        },
        samples: m.count,
    })
}

/// Kolmogorov–Smirnov distance between `(d(e,Z_n) - nℓ̂)/√(nσ²)` and `N(0,1)`.
pub fn clt_empirical(group: &Group, mu: &StepMeasure, cfg: &WalkConfig, sigma2: f64) -> Result<f64> {
    check(cfg)?;
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("variance {sigma2} must be positive")));
    }
    let lengths = endpoint_lengths(group, mu, cfg, 0..cfg.samples)?;
    Ok(ks_normal(&lengths, cfg.steps, sigma2))
}

/// KS distance of normalized lengths against the standard normal.
pub fn ks_normal(lengths: &[f64], steps: usize, sigma2: f64) -> f64 {
    let n = steps as f64;
    let m = lengths.len() as f64;
    let drift = lengths.iter().sum::<f64>() / (m * n);
    let scale = (n * sigma2).sqrt();
    let mut z: Vec<f64> = lengths.iter().map(|d| (d - n * drift) / scale).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let mut ks: f64 = 0.0;
    let mut i = 0;
    while i < z.len() {
        // Ties are common since lengths are integers.
        let mut j = i;
        while j < z.len() && z[j] == z[i] {
            j += 1;
        }
        let c = normal.cdf(z[i]);
        ks = ks.max((c - i as f64 / m).abs()).max((j as f64 / m - c).abs());
        i = j;
    }
    ks
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub entropy: f64,
    /// `H(μ^{*(n+1)}) - H(μ^{*n})`.
    pub difference: f64,
    /// `H(μ^{*n})/n`.
    pub average: f64,
}

/// Exact Shannon entropies of `μ^{*n}` for `n = 1..=n_max`, computing one
/// extra power for the last difference.
pub fn entropy_exact_seq(group: &Group, mu: &StepMeasure, n_max: usize) -> Result<Vec<EntropyRow>> {
    entropy_exact_seq_with_budget(group, mu, n_max, DEFAULT_SUPPORT_BUDGET)
}

pub fn entropy_exact_seq_with_budget(
    group: &Group,
    mu: &StepMeasure,
    n_max: usize,
    budget: usize,
) -> Result<Vec<EntropyRow>> {
    let mut h = Vec::with_capacity(n_max + 2);
    convolution_powers(group, mu, n_max + 1, budget, |_, d| h.push(d.entropy()))?;
    Ok((1..=n_max)
        .map(|n| EntropyRow {
            n,
            entropy: h[n],
            difference: h[n + 1] - h[n],
            average: h[n] / n as f64,
        })
        .collect())
}

/// Fraction of reverse-walk endpoints `W_n` with `|d(e,W_n) - h_ξ(W_n)| > gap`,
/// where `h_ξ` is evaluated through a witness of `ξ` deeper than any endpoint.
pub fn horofunction_gap_fraction(
    atlas: &BoundaryAtlas,
    mu: &StepMeasure,
    xi: usize,
    cfg: &WalkConfig,
    gap: f64,
) -> Result<f64> {
    check(cfg)?;
    let group = atlas.group();
    let reversed = mu.reflected(group);
    let depth = cfg.steps * mu.max_length(group) as usize + atlas.precision() + 10;
    let y = atlas.deep_witness(xi, depth)?;
    let ny = group.length(&y) as f64;
    let sampler = Sampler::new(&reversed)?;
    let over = (0..cfg.samples)
        .into_par_iter()
        .filter(|&i| {
            let w = endpoint(group, &sampler, cfg, i as u64);
            let h = group.dist(&w, &y) as f64 - ny;
            (group.length(&w) as f64 - h).abs() > gap
        })
        .count();
    Ok(over as f64 / cfg.samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    fn f2() -> (Group, StepMeasure) {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        let mu = StepMeasure::uniform_on_generators(&g);
        (g, mu)
    }

    #[test]
    fn walks_are_reproducible() {
        let (g, mu) = f2();
        let cfg = WalkConfig {
            steps: 50,
            samples: 1,
            seed: 11,
        };
        assert_eq!(sample_walk(&g, &mu, &cfg, 3).unwrap(), sample_walk(&g, &mu, &cfg, 3).unwrap());
        assert_ne!(sample_walk(&g, &mu, &cfg, 3).unwrap(), sample_walk(&g, &mu, &cfg, 4).unwrap());
        let zero = WalkConfig { steps: 0, ..cfg };
        assert_eq!(sample_walk(&g, &mu, &zero, 0).unwrap(), vec![Element::identity()]);
        assert_eq!(
            walk_endpoint(&g, &mu, &cfg, 3).unwrap(),
            *sample_walk(&g, &mu, &cfg, 3).unwrap().last().unwrap()
        );
    }

    #[test]
    fn deterministic_walk_has_unit_drift() {
        let (g, _) = f2();
        let a = StepMeasure::point_mass(g.word("a").unwrap());
        let cfg = WalkConfig {
            steps: 100,
            samples: 10,
            seed: 1,
        };
        let d = drift_mc(&g, &a, &cfg).unwrap();
        assert_eq!(d.estimate, 1.0);
        assert_eq!(d.std_error, 0.0);
        assert_eq!(variance_mc(&g, &a, &cfg).unwrap().estimate, 0.0);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.5).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.count, all.count);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_first_powers() {
        let (g, mu) = f2();
        let rows = entropy_exact_seq(&g, &mu, 3).unwrap();
        assert!((rows[0].entropy - 4f64.ln()).abs() < 1e-14);
        // μ*μ: mass 1/4 at e and 1/16 on each of 12 reduced words.
        let h2 = -(0.25f64 * 0.25f64.ln()) - 12.0 * (1.0 / 16.0) * (1.0f64 / 16.0).ln();
        assert!((rows[1].entropy - h2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_ks() {
        let ks = ks_normal(&[10.0], 20, 1.0);
        assert!(ks >= 0.5 && ks <= 1.0);
    }
}
