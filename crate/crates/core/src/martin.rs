//! The Martin kernel as the fixed point of a projectivized transfer operator.
//!
//! Every boundary point `ξ` gets an anchor `a(ξ)` of norm `N_a` pointing towards
//! it, a region `Λ(ξ)` of points far from `ξ` and a slightly larger `Λ'(ξ)`.
//! A positive harmonic function on `Λ'(ξ)` is determined by its values at the
//! exit points of `Λ'(ξ)`; translating those back by `a(ξ)^{-1}` gives the
//! operator `M f(x,ξ) = Σ_b G(x,b;Λ'(ξ)) f(a(ξ)^{-1}b, a(ξ)^{-1}ξ)`, whose
//! normalization `L f = M f / M f(e,·)` has the lifted Martin kernel as its
//! unique positive fixed point.
//!
//! Relative Green functions are evaluated exactly through exit weights, so the
//! only discretization is the boundary atlas itself.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::boundary::BoundaryAtlas;
use crate::error::{Error, Result};
use crate::green::GreenFunction;
use crate::group::{Ball, Element, Group};

/// Region kinds attached to a boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// `Λ_k(ξ) = a_k Λ(a_k^{-1}ξ)`; `Λ_0 = Λ`.
    Inner(usize),
    /// `Λ'_k(ξ) = a_k Λ'(a_k^{-1}ξ)`.
    Outer(usize),
}

#[derive(Clone, Debug)]
struct PointData {
    anchor: Element,
    /// `a(ξ)^{-1}ξ`.
    next: usize,
    /// Ball ids of `Λ(ξ) ∩ Ball(R_dom)`, increasing.
    domain: Vec<u32>,
    gate: Vec<Element>,
    /// For each gate point `b`, the position of `a^{-1}b` in the domain of `next`.
    targets: Vec<u32>,
    /// Row-major `|domain| × |gate|` exit weights `G(x, b; Λ'(ξ))`.
    exit: Vec<f64>,
}

/// Precomputed anchors, regions and exit weights on a boundary atlas.
#[derive(Clone, Debug)]
pub struct MartinSetup {
    atlas: BoundaryAtlas,
    green: GreenFunction,
    n_anchor: usize,
    r_dom: usize,
    ball: Ball,
    /// `G(x, e)` per ball id, the weight of the norm.
    weight: Vec<f64>,
    points: Vec<PointData>,
    /// `position[ξ][id]`: index of ball id in the domain of `ξ`, or `u32::MAX`.
    position: Vec<Vec<u32>>,
}

/// A function `f(x, ξ)` on `x ∈ Λ(ξ) ∩ Ball(R_dom)`, stored per boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelField {
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Weighted sup of successive differences.
    pub differences: Vec<f64>,
    pub rate: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Weighted sup of the final field on the outermost sphere of the domain.
    pub domain_tail: f64,
    /// Largest weighted norm over the iterates divided by the initial one.
    pub norm_growth: f64,
}

/// Default anchor norm for a support whose longest element has norm `reach`.
pub fn default_anchor_size(reach: u32) -> usize {
    (4 * reach as usize).max(4)
}

/// Default domain radius.
pub fn default_domain_radius(n_anchor: usize) -> usize {
    2 * n_anchor
}

impl MartinSetup {
    /// `atlas` must have precision at least `n_anchor`.
    pub fn new(atlas: &BoundaryAtlas, green: &GreenFunction, n_anchor: usize, r_dom: usize) -> Result<Self> {
        let group = atlas.group().clone();
        if atlas.precision() < n_anchor {
            return Err(Error::Precision(format!(
                "atlas precision {} is below the anchor size {n_anchor}",
                atlas.precision()
            )));
        }
        let reach = green.measure().max_length(&group) as usize;
        if r_dom < n_anchor {
            return Err(Error::Domain(format!(
                "domain radius {r_dom} is below the anchor size {n_anchor}"
            )));
        }
        let ball = group.ball(r_dom);
        let norms: Vec<i64> = ball.elements().iter().map(|x| group.length(x) as i64).collect();
        let e = Element::identity();
        let weight: Vec<f64> = ball.elements().par_iter().map(|x| green.g(x, &e)).collect();
        let inner = 2 * (n_anchor / 4) as i64;
        let outer = 2 * (n_anchor / 2) as i64;
        let scan = (n_anchor / 2 + 2 + 2 * reach) as u32;
        let deep = n_anchor + atlas.precision() + atlas.margin() + 2;

        let anchors: Vec<Element> = (0..atlas.len())
            .map(|xi| anchor(atlas, xi, n_anchor))
            .collect::<Result<_>>()?;
        let nexts: Vec<usize> = (0..atlas.len())
            .into_par_iter()
            .map(|xi| {
                let y = atlas.deep_witness(xi, deep)?;
                atlas.act_via(&group.inv(&anchors[xi]), &y)
            })
            .collect::<Result<_>>()?;
        let support: Vec<Element> = green.measure().support().to_vec();

        // Gates depend only on the anchor.
        let mut distinct: Vec<Element> = anchors.clone();
        distinct.sort();
        distinct.dedup();
        let gates: FxHashMap<Element, (Vec<Element>, nalgebra::DMatrix<f64>)> = distinct
            .par_iter()
            .map(|a| {
                let region = |g: &Element| group.gromov2(a, g, &e) <= outer;
                let gate = green.gate(&e, &region, scan)?;
                let inv = green.gate_inverse(&gate)?;
                Ok((a.clone(), (gate, inv)))
            })
            .collect::<Result<_>>()?;

        let domains: Vec<Vec<u32>> = anchors
            .par_iter()
            .map(|a| {
                (0..ball.len())
                    .filter(|&i| {
                        let d = group.dist(a, ball.element(i)) as i64;
                        norms[i] + n_anchor as i64 - d <= inner
                    })
                    .map(|i| i as u32)
                    .collect()
            })
            .collect();
        let position: Vec<Vec<u32>> = domains
            .iter()
            .map(|dom| {
                let mut pos = vec![u32::MAX; ball.len()];
                for (k, &id) in dom.iter().enumerate() {
                    pos[id as usize] = k as u32;
                }
                pos
            })
            .collect();

        for (xi, a) in anchors.iter().enumerate() {
            for g in &support {
                for h in [g.clone(), group.inv(g)] {
                    if group.gromov2(a, &h, &e) > inner {
                        return Err(Error::Precision(format!(
                            "support point {} is not far from boundary point {xi}; increase the anchor size",
                            group.display(&h)
                        )));
                    }
                }
            }
        }

        let points: Vec<PointData> = (0..atlas.len())
            .into_par_iter()
            .map(|xi| {
                let a = &anchors[xi];
                let ainv = group.inv(a);
                let next = nexts[xi];
                let (gate, inv) = &gates[a];
                let mut targets = Vec::with_capacity(gate.len());
                for b in gate {
                    let t = group.mul(&ainv, b);
                    let id = ball.id(&t).ok_or_else(|| {
                        Error::Precision(format!(
                            "translated exit point {} leaves the domain radius {r_dom}",
                            group.display(&t)
                        ))
                    })?;
                    let p = position[next][id];
                    if p == u32::MAX {
                        return Err(Error::Precision(format!(
                            "exit point {} of boundary point {xi} is not in the next region",
                            group.display(b)
                        )));
                    }
                    targets.push(p);
                }
                let domain = domains[xi].clone();
                let mut exit = Vec::with_capacity(domain.len() * gate.len());
                for &id in &domain {
                    exit.extend(green.exit_weights_with(ball.element(id as usize), gate, inv));
                }
                Ok(PointData {
                    anchor: a.clone(),
                    next,
                    domain,
                    gate: gate.clone(),
                    targets,
                    exit,
                })
            })
            .collect::<Result<_>>()?;

        Ok(MartinSetup {
            atlas: atlas.clone(),
            green: green.clone(),
            n_anchor,
            r_dom,
            ball,
            weight,
            points,
            position,
        })
    }

    pub fn atlas(&self) -> &BoundaryAtlas {
        &self.atlas
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    pub fn group(&self) -> &Group {
        self.atlas.group()
    }

    pub fn n_anchor(&self) -> usize {
        self.n_anchor
    }

    pub fn domain_radius(&self) -> usize {
        self.r_dom
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn anchor(&self, xi: usize) -> &Element {
        &self.points[xi].anchor
    }

    /// `a(ξ)^{-1}ξ`, as used by the operator.
    pub fn shifted(&self, xi: usize) -> usize {
        self.points[xi].next
    }

    pub fn gate(&self, xi: usize) -> &[Element] {
        &self.points[xi].gate
    }

    pub fn domain(&self, xi: usize) -> impl Iterator<Item = &Element> + '_ {
        self.points[xi]
            .domain
            .iter()
            .map(|&id| self.ball.element(id as usize))
    }

    pub fn domain_len(&self, xi: usize) -> usize {
        self.points[xi].domain.len()
    }

    /// Anchor chain `a_1, …, a_k` and the points `a_j^{-1}ξ`.
    pub fn anchor_chain(&self, xi: usize, k: usize) -> (Vec<Element>, Vec<usize>) {
        let group = self.group();
        let mut a = Element::identity();
        let mut cur = xi;
        let mut chain = Vec::with_capacity(k);
        let mut shifted = Vec::with_capacity(k);
        for _ in 0..k {
            a = group.mul(&a, &self.points[cur].anchor);
            cur = self.points[cur].next;
            chain.push(a.clone());
            shifted.push(cur);
        }
        (chain, shifted)
    }

    /// Membership of `x` in `Λ_k(ξ)` or `Λ'_k(ξ)`.
    pub fn region_membership(&self, xi: usize, kind: RegionKind, x: &Element) -> bool {
        let group = self.group();
        let (k, threshold) = match kind {
            RegionKind::Inner(k) => (k, 2 * (self.n_anchor / 4) as i64),
            RegionKind::Outer(k) => (k, 2 * (self.n_anchor / 2) as i64),
        };
        let (a_k, base) = if k == 0 {
            (Element::identity(), xi)
        } else {
            let (chain, shifted) = self.anchor_chain(xi, k);
            (chain[k - 1].clone(), shifted[k - 1])
        };
        let y = group.between(&a_k, x);
        group.gromov2(&self.points[base].anchor, &y, &Element::identity()) <= threshold
    }

    /// Value of a field at `(x, ξ)`, if `x` is in the stored domain.
    pub fn lookup(&self, f: &KernelField, x: &Element, xi: usize) -> Option<f64> {
        let id = self.ball.id(x)?;
        let p = self.position[xi][id];
        (p != u32::MAX).then(|| f.values[xi][p as usize])
    }

    /// `f₀(x, ξ) = G(x, e)`.
    pub fn initial_field(&self) -> KernelField {
        KernelField {
            values: self
                .points
                .iter()
                .map(|p| p.domain.iter().map(|&id| self.weight[id as usize]).collect())
                .collect(),
        }
    }

    /// A field from a function of `(x, ξ)`.
    pub fn field_from(&self, f: impl Fn(&Element, usize) -> f64 + Sync) -> KernelField {
        KernelField {
            values: (0..self.points.len())
                .into_par_iter()
                .map(|xi| {
                    self.points[xi]
                        .domain
                        .iter()
                        .map(|&id| f(self.ball.element(id as usize), xi))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn apply_m(&self, f: &KernelField) -> KernelField {
        KernelField {
            values: self
                .points
                .par_iter()
                .map(|p| {
                    let src = &f.values[p.next];
                    let gathered: Vec<f64> = p.targets.iter().map(|&t| src[t as usize]).collect();
                    let m = p.gate.len();
                    p.exit
                        .chunks(m.max(1))
                        .take(p.domain.len())
                        .map(|row| row.iter().zip(&gathered).map(|(u, v)| u * v).sum())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn apply_l(&self, f: &KernelField) -> Result<KernelField> {
        let mut m = self.apply_m(f);
        for (xi, row) in m.values.iter_mut().enumerate() {
            // The identity has ball id 0, the first domain entry.
            let norm = row[0];
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::DegenerateNormalizer(xi));
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        Ok(m)
    }

    /// Weighted sup `sup |f(x,ξ)| / G(x,e)`.
    pub fn weighted_norm(&self, f: &KernelField) -> f64 {
        self.points
            .iter()
            .zip(&f.values)
            .flat_map(|(p, vals)| {
                p.domain
                    .iter()
                    .zip(vals)
                    .map(|(&id, v)| v.abs() / self.weight[id as usize])
            })
            .fold(0.0, f64::max)
    }

    pub fn weighted_distance(&self, f: &KernelField, g: &KernelField) -> f64 {
        let diff = KernelField {
            values: f
                .values
                .iter()
                .zip(&g.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        };
        self.weighted_norm(&diff)
    }

    /// Iterates `L` from `start` until the weighted difference drops below `eps`.
    pub fn fixed_point_from(
        &self,
        start: KernelField,
        eps: f64,
        max_iter: usize,
    ) -> Result<(KernelField, ConvergenceReport)> {
        let norm0 = self.weighted_norm(&start);
        let mut f = start;
        let mut diffs = Vec::new();
        let mut growth: f64 = 1.0;
        for _ in 0..max_iter {
            let next = self.apply_l(&f)?;
            if next.values.iter().flatten().any(|&v| v <= 0.0) {
                return Err(Error::Integrity("iterate lost positivity".into()));
            }
            let d = self.weighted_distance(&next, &f);
            growth = growth.max(self.weighted_norm(&next) / norm0);
            diffs.push(d);
            f = next;
            if d < eps {
                let residual = self.weighted_distance(&self.apply_l(&f)?, &f);
                let report = ConvergenceReport {
                    rate: fitted_rate(&diffs),
                    iterations: diffs.len(),
                    residual,
                    domain_tail: self.domain_tail(&f),
                    norm_growth: growth,
                    differences: diffs,
                };
                return Ok((f, report));
            }
        }
        Err(Error::NoConvergence(format!(
            "fixed-point iteration: last differences {:?}",
            &diffs[diffs.len().saturating_sub(2)..]
        )))
    }

    /// Fixed point from `G(·, e)`.
    pub fn fixed_point(&self, eps: f64) -> Result<(KernelField, ConvergenceReport)> {
        self.fixed_point_from(self.initial_field(), eps, 500)
    }

    fn domain_tail(&self, f: &KernelField) -> f64 {
        let outer = self.ball.sphere_ids(self.r_dom);
        self.points
            .iter()
            .zip(&f.values)
            .flat_map(|(p, vals)| {
                p.domain
                    .iter()
                    .zip(vals)
                    .filter(|(&id, _)| outer.contains(&(id as usize)))
                    .map(|(&id, v)| v.abs() / self.weight[id as usize])
            })
            .fold(0.0, f64::max)
    }

    /// `max |M K(x,ξ) - K(a^{-1}, a^{-1}ξ) K(x,ξ)|` over the domain, weighted.
    pub fn cocycle_defect(&self, k: &KernelField) -> f64 {
        let group = self.group();
        let m = self.apply_m(k);
        let mut worst: f64 = 0.0;
        for (xi, p) in self.points.iter().enumerate() {
            let Some(factor) = self.lookup(k, &group.inv(&p.anchor), p.next) else {
                continue;
            };
            for (j, &id) in p.domain.iter().enumerate() {
                let d = (m.values[xi][j] - factor * k.values[xi][j]).abs() / self.weight[id as usize];
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Compares `M^n f` with the direct formula through `Λ'_{n-1}(ξ)` on the
    /// given boundary points, at domain points within `radius`. Returns the
    /// largest absolute deviation.
    pub fn iterate_identity_check(&self, f: &KernelField, n: usize, points: &[usize], radius: usize) -> Result<f64> {
        if n == 0 || n > 3 {
            return Err(Error::Domain("iterate identity is checked for n in 1..=3".into()));
        }
        let group = self.group();
        let e = Element::identity();
        let mut iterated = f.clone();
        for _ in 0..n {
            iterated = self.apply_m(&iterated);
        }
        let reach = self.green.measure().max_length(group) as usize;
        let outer = 2 * (self.n_anchor / 2) as i64;
        let mut worst: f64 = 0.0;
        for &xi in points {
            let (chain, shifted) = self.anchor_chain(xi, n);
            let (a_prev, base) = if n == 1 {
                (e.clone(), xi)
            } else {
                (chain[n - 2].clone(), shifted[n - 2])
            };
            let a_n = &chain[n - 1];
            let xi_n = shifted[n - 1];
            let anchor = self.points[base].anchor.clone();
            let region = |g: &Element| group.gromov2(&anchor, &group.between(&a_prev, g), &e) <= outer;
            let scan = ((n - 1) * self.n_anchor + self.n_anchor / 2 + 2 + 2 * reach) as u32;
            let gate = self.green.gate(&e, &region, scan)?;
            let inv = self.green.gate_inverse(&gate)?;
            let a_inv = group.inv(a_n);
            let vals: Vec<f64> = gate
                .iter()
                .map(|b| {
                    self.lookup(f, &group.mul(&a_inv, b), xi_n).ok_or_else(|| {
                        Error::Precision(format!(
                            "exit point {} translates outside the stored domain",
                            group.display(b)
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            for (j, x) in self.domain(xi).enumerate() {
                if group.length(x) as usize > radius {
                    continue;
                }
                let u = self.green.exit_weights_with(x, &gate, &inv);
                let direct: f64 = u.iter().zip(&vals).map(|(a, b)| a * b).sum();
                worst = worst.max((direct - iterated.values[xi][j]).abs());
            }
        }
        Ok(worst)
    }

    /// Exit identity for a function `u` harmonic on `Λ'(ξ)`:
    /// `max |u(x) - Σ_b G(x,b;Λ'(ξ)) u(b)|` over the domain of `ξ`.
    pub fn exit_identity_defect(&self, xi: usize, u: impl Fn(&Element) -> f64) -> f64 {
        let p = &self.points[xi];
        let ub: Vec<f64> = p.gate.iter().map(&u).collect();
        let m = p.gate.len();
        p.domain
            .iter()
            .zip(p.exit.chunks(m.max(1)))
            .map(|(&id, row)| {
                let x = self.ball.element(id as usize);
                let s: f64 = row.iter().zip(&ub).map(|(a, b)| a * b).sum();
                (u(x) - s).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// The lexicographically least `a` with `|a| = N_a` and `h_ξ(a) = -N_a`.
pub fn anchor(atlas: &BoundaryAtlas, xi: usize, n_anchor: usize) -> Result<Element> {
    let ball = atlas.ball();
    let values = atlas.values(xi);
    ball.sphere_ids(n_anchor)
        .find(|&id| values[id] == -(n_anchor as i32))
        .map(|id| ball.element(id).clone())
        .ok_or_else(|| Error::Integrity(format!("boundary point {xi} has no anchor of norm {n_anchor}")))
}

/// Default number of deepening steps for the ratio kernel.
pub const RATIO_DEPTH_BUDGET: usize = 40;

/// `K(x, ξ)` as the limit of `G(x, y)/G(e, y)` along witnesses of `ξ` of
/// increasing depth.
pub fn ratio_kernel(green: &GreenFunction, atlas: &BoundaryAtlas, x: &Element, xi: usize, eps: f64) -> Result<f64> {
    let base = atlas.precision() + atlas.margin();
    let mut witnesses = Vec::with_capacity(RATIO_DEPTH_BUDGET);
    let mut y = atlas.deep_witness(xi, base)?;
    let group = atlas.group();
    for _ in 0..RATIO_DEPTH_BUDGET {
        witnesses.push(y.clone());
        y = atlas.deep_witness_from(xi, &y, group.length(&y) as usize + 1)?;
    }
    green.martin_kernel_ratio(x, witnesses, eps)
}

fn fitted_rate(diffs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 1e-15)
        .map(|(i, &d)| (i as f64, d.ln()))
        .collect();
    let pts = &pts[pts.len().saturating_sub(10)..];
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

/// Deviations in the strong Ancona inequality as a function of distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnconaTrend {
    /// `(D, max deviation)`.
    pub deviations: Vec<(usize, f64)>,
    pub slope: f64,
    pub correlation: f64,
}

/// For geodesics `γ` from `e` to `y₀` with `|y₀| = D`, compares the ratios
/// `G(x,y)/G(x',y)` for two targets near `y₀`, with `x, x'` near `e`.
pub fn strong_ancona_trend(
    green: &GreenFunction,
    lengths: &[usize],
    samples: usize,
    seed: u64,
) -> Result<AnconaTrend> {
    let group = green.group();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let near = group.ball(2);
    let near_elems = near.elements();
    let mut deviations = Vec::new();
    for &d in lengths {
        let sphere = geodesic_endpoints(group, d, samples, &mut rng);
        let mut worst: f64 = 0.0;
        for y0 in &sphere {
            for _ in 0..4 {
                let x = near_elems.choose(&mut rng).unwrap();
                let x2 = near_elems.choose(&mut rng).unwrap();
                let y1 = group.mul(y0, near_elems.choose(&mut rng).unwrap());
                let y2 = group.mul(y0, near_elems.choose(&mut rng).unwrap());
                if x == x2 || y1 == y2 {
                    continue;
                }
                let r1 = green.g(x, &y1) / green.g(x2, &y1);
                let r2 = green.g(x, &y2) / green.g(x2, &y2);
                worst = worst.max((r1 / r2 - 1.0).abs());
            }
        }
        deviations.push((d, worst));
    }
    let pts: Vec<(f64, f64)> = deviations
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(d, v)| (d as f64, v.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    Ok(AnconaTrend {
        deviations,
        slope: sxy / sxx,
        correlation: sxy / (sxx * syy).sqrt(),
    })
}

/// Random elements at distance exactly `d`, grown one generator at a time.
fn geodesic_endpoints(group: &Group, d: usize, count: usize, rng: &mut ChaCha20Rng) -> Vec<Element> {
    let gens = group.generators();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut y = Element::identity();
        let mut len = 0;
        while len < d {
            let s = &gens[rng.gen_range(0..gens.len())];
            let z = group.mul(&y, s);
            let lz = group.length(&z) as usize;
            if lz == len + 1 {
                y = z;
                len = lz;
            }
        }
        out.push(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::measure::StepMeasure;

    fn f2_setup(r_dom: usize) -> MartinSetup {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        let mu = StepMeasure::uniform_on_generators(&g);
        let atlas = BoundaryAtlas::new(&g, 4).unwrap();
        let green = GreenFunction::new(&g, &mu, 1e-14).unwrap();
        MartinSetup::new(&atlas, &green, 4, r_dom).unwrap()
    }

    #[test]
    fn anchors_and_regions_on_tree() {
        let s = f2_setup(5);
        let g = s.group().clone();
        let xi = s.atlas().locate(&g.word("a b a b a b a b").unwrap()).unwrap();
        assert_eq!(g.display(s.anchor(xi)), "a b a b");
        let xi4 = s.atlas().locate(&g.word("a a a a a a a a").unwrap()).unwrap();
        assert_eq!(g.display(s.anchor(xi4)), "a a a a");
        assert!(!s.region_membership(xi4, RegionKind::Inner(0), s.anchor(xi4)));
        assert!(s.region_membership(xi4, RegionKind::Inner(0), &g.word("b b b").unwrap()));
        for x in s.ball().elements().iter().take(200) {
            if s.region_membership(xi, RegionKind::Inner(0), x) {
                assert!(s.region_membership(xi, RegionKind::Outer(0), x));
                assert!(s.region_membership(xi, RegionKind::Inner(1), x));
            }
            if s.region_membership(xi, RegionKind::Inner(1), x) {
                assert!(s.region_membership(xi, RegionKind::Inner(2), x));
            }
        }
        assert_eq!(s.gate(xi).len(), 1);
    }

    #[test]
    fn operator_linearity_and_projectivization() {
        let s = f2_setup(5);
        let f = s.initial_field();
        let zero = KernelField {
            values: f.values.iter().map(|v| vec![0.0; v.len()]).collect(),
        };
        assert!(s.apply_m(&zero).values.iter().flatten().all(|&v| v == 0.0));
        let twice = KernelField {
            values: f.values.iter().map(|v| v.iter().map(|x| 2.0 * x).collect()).collect(),
        };
        let m1 = s.apply_m(&f);
        let m2 = s.apply_m(&twice);
        for (a, b) in m1.values.iter().flatten().zip(m2.values.iter().flatten()) {
            assert!((2.0 * a - b).abs() <= 1e-14 * b.abs());
        }
        let l1 = s.apply_l(&f).unwrap();
        let l2 = s.apply_l(&twice).unwrap();
        assert!(s.weighted_distance(&l1, &l2) < 1e-13);
        assert!(l1.values.iter().all(|v| (v[0] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn tree_kernel_is_the_fixed_point() {
        let s = f2_setup(5);
        let atlas = s.atlas().clone();
        let g = s.group().clone();
        let tree = s.field_from(|x, xi| {
            let y = atlas.canonical_witness(xi);
            3f64.powi(-(g.dist(x, y) as i32 - g.length(y) as i32))
        });
        let l = s.apply_l(&tree).unwrap();
        assert!(s.weighted_distance(&l, &tree) < 1e-10);
        assert!(s.cocycle_defect(&tree) < 1e-10);
        let (k, report) = s.fixed_point(1e-12).unwrap();
        assert!(s.weighted_distance(&k, &tree) < 1e-10);
        assert!(report.rate < 0.9);
    }

    #[test]
    fn iterate_identity_on_tree() {
        let s = f2_setup(5);
        let f = s.initial_field();
        assert_eq!(s.iterate_identity_check(&f, 1, &[0, 7, 50], 3).unwrap(), 0.0);
        assert!(s.iterate_identity_check(&f, 2, &[0, 7, 50], 3).unwrap() < 1e-6);
    }
}
