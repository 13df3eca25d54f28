//! Green functions of step measures whose support moves at most one letter.
//!
//! For such measures every syllable boundary of the target is a cut point for
//! the walk, so `G(e, ℓ₁⋯ℓ_L) = F_{ℓ₁} ⋯ F_{ℓ_L} G₀` where `F_ℓ` is the matrix of
//! first-passage probabilities from the fiber `{e}×K` to the fiber `{ℓ}×K` and
//! `G₀` is the Green matrix of the fiber over the identity. The `F_ℓ` are the
//! minimal solution of a system of matrix equations and are obtained by
//! monotone iteration from zero.
//!
//! The convolution series is kept as an independent lower-bound oracle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Element, Group};
use crate::measure::{convolution_powers, SparseDist, StepMeasure};

const MAX_ITERATIONS: usize = 100_000;

/// A Green function value with a bound on the truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug)]
struct Matrices {
    q: usize,
    /// Row-major `q × q` blocks.
    first_passage: Vec<Vec<f64>>,
    g0: Vec<f64>,
}

impl Matrices {
    fn new(first_passage: &[DMatrix<f64>], g0: &DMatrix<f64>) -> Self {
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            let q = m.nrows();
            (0..q * q).map(|k| m[(k / q, k % q)]).collect()
        };
        Matrices {
            q: g0.nrows(),
            first_passage: first_passage.iter().map(flat).collect(),
            g0: flat(g0),
        }
    }
}

/// The Green function of a fixed measure, ready for evaluation anywhere.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    group: Group,
    mu: StepMeasure,
    first_passage: Vec<DMatrix<f64>>,
    current: Matrices,
    previous: Matrices,
    rate: f64,
    iterations: usize,
}

impl GreenFunction {
    /// Solves the first-passage equations to within `eps`.
    pub fn new(group: &Group, mu: &StepMeasure, eps: f64) -> Result<Self> {
        if mu.weights().iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidMeasure(
                "Green functions need a nonnegative measure".into(),
            ));
        }
        if mu.total_mass() > 1.0 + 1e-12 {
            return Err(Error::InvalidMeasure(format!(
                "total mass {} exceeds 1",
                mu.total_mass()
            )));
        }
        let q = group.finite_order();
        let nl = group.alphabet_len();
        let mut step = vec![DMatrix::<f64>::zeros(q, q); nl];
        let mut stay = DMatrix::<f64>::zeros(q, q);
        for (g, w) in mu.iter() {
            let target = match g.word() {
                [] => &mut stay,
                [l] => &mut step[*l as usize],
                _ => {
                    return Err(Error::InvalidMeasure(format!(
                        "support point {} moves more than one letter",
                        group.display(g)
                    )))
                }
            };
            for k in 0..q {
                target[(k, group.fin_mul(k, g.finite()))] += w;
            }
        }
        let blocks = letter_blocks(group);
        let mut f = vec![DMatrix::<f64>::zeros(q, q); nl];
        let mut prev_f: Vec<DMatrix<f64>>;
        let mut last_delta = f64::INFINITY;
        let mut rate = 0.0;
        let mut iterations = 0;
        loop {
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(Error::NoConvergence(format!(
                    "first-passage iteration did not settle after {MAX_ITERATIONS} steps"
                )));
            }
            let ret: Vec<DMatrix<f64>> = (0..nl)
                .map(|l| &step[l] * &f[group.inverse_letter(l as u8) as usize])
                .collect();
            let mut next = f.clone();
            for block in &blocks {
                let mut loops = stay.clone();
                for (l, r) in ret.iter().enumerate() {
                    if !block.letters.contains(&l) {
                        loops += r;
                    }
                }
                match block.order {
                    None => {
                        // Letters a and a^{-1}: the excursion through the other one returns.
                        for (i, &l) in block.letters.iter().enumerate() {
                            let other = block.letters[1 - i];
                            let local = &loops + &ret[other];
                            next[l] = solve_left(&local, &step[l])?;
                        }
                    }
                    Some(n) => {
                        for t in 1..n {
                            next[block.letters[t - 1]] =
                                cycle_first_passage(&loops, &step, &block.letters, n, t)?;
                        }
                    }
                }
            }
            let delta = next
                .iter()
                .zip(&f)
                .map(|(a, b)| (a - b).abs().max())
                .fold(0.0, f64::max);
            prev_f = std::mem::replace(&mut f, next);
            if delta > 0.0 && last_delta.is_finite() && last_delta > 0.0 {
                rate = (delta / last_delta).min(1.0);
            }
            last_delta = delta;
            let tail = if rate < 1.0 {
                delta * rate / (1.0 - rate)
            } else {
                f64::INFINITY
            };
            if delta == 0.0 || (iterations > 2 && tail < eps * 1e-3 && delta < eps * 1e-3) {
                break;
            }
        }
        let build_g0 = |f: &[DMatrix<f64>]| -> Result<DMatrix<f64>> {
            let mut u = stay.clone();
            for l in 0..nl {
                u += &step[l] * &f[group.inverse_letter(l as u8) as usize];
            }
            let a = DMatrix::identity(q, q) - u;
            a.try_inverse()
                .ok_or_else(|| Error::NoConvergence("walk is recurrent on the base fiber".into()))
        };
        let current = Matrices::new(&f, &build_g0(&f)?);
        let previous = Matrices::new(&prev_f, &build_g0(&prev_f)?);
        let first_passage = f;
        Ok(GreenFunction {
            group: group.clone(),
            mu: mu.clone(),
            first_passage,
            current,
            previous,
            rate,
            iterations,
        })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn measure(&self) -> &StepMeasure {
        &self.mu
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Observed contraction rate of the first-passage iteration.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// First-passage matrix for the letter `l`.
    pub fn first_passage(&self, l: u8) -> &DMatrix<f64> {
        &self.first_passage[l as usize]
    }

    fn eval(m: &Matrices, h: &Element) -> f64 {
        let q = m.q;
        if q == 1 {
            let p: f64 = h.word().iter().map(|&l| m.first_passage[l as usize][0]).product();
            return p * m.g0[0];
        }
        let mut row: smallvec::SmallVec<[f64; 8]> = smallvec::smallvec![0.0; q];
        let mut next: smallvec::SmallVec<[f64; 8]> = smallvec::smallvec![0.0; q];
        row[0] = 1.0;
        for &l in h.word() {
            let f = &m.first_passage[l as usize];
            for j in 0..q {
                next[j] = (0..q).map(|i| row[i] * f[i * q + j]).sum();
            }
            std::mem::swap(&mut row, &mut next);
        }
        let k = h.finite();
        (0..q).map(|i| row[i] * m.g0[i * q + k]).sum()
    }

    /// `G(e, h)`.
    pub fn at(&self, h: &Element) -> f64 {
        Self::eval(&self.current, h)
    }

    /// `G(x, y)` with its truncation bound.
    pub fn value(&self, x: &Element, y: &Element) -> GreenValue {
        let h = self.group.between(x, y);
        let v = Self::eval(&self.current, &h);
        let p = Self::eval(&self.previous, &h);
        let diff = (v - p).abs();
        let tail = if self.rate < 1.0 {
            diff * self.rate / (1.0 - self.rate)
        } else {
            diff
        };
        GreenValue {
            value: v,
            tail_bound: tail + 4.0 * f64::EPSILON * v.abs(),
        }
    }

    /// `G(x, y)`.
    pub fn g(&self, x: &Element, y: &Element) -> f64 {
        self.at(&self.group.between(x, y))
    }

    /// Harmonicity defect `G(x,y) - δ_{xy} - Σ μ(g) G(xg, y)`.
    pub fn harmonicity_defect(&self, x: &Element, y: &Element) -> f64 {
        let mut s = if x == y { 1.0 } else { 0.0 };
        for (g, w) in self.mu.iter() {
            s += w * self.g(&self.group.mul(x, g), y);
        }
        self.g(x, y) - s
    }

    /// Exit points of the region from `start`: elements outside the region that a
    /// walk started at `start` can step to while staying inside it. The search is
    /// confined to `Ball(scan)`; gate points too close to that boundary are reported
    /// as a budget error because the gate may continue beyond it.
    pub fn gate(
        &self,
        start: &Element,
        in_region: &dyn Fn(&Element) -> bool,
        scan: u32,
    ) -> Result<Vec<Element>> {
        let steps: Vec<&Element> = self
            .mu
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(g, _)| g)
            .collect();
        let reach = self.mu.max_length(&self.group);
        let mut gate: FxHashSet<Element> = FxHashSet::default();
        let mut seen: FxHashSet<Element> = FxHashSet::default();
        let mut queue = VecDeque::new();
        let mut truncated = false;
        seen.insert(start.clone());
        queue.push_back(start.clone());
        while let Some(z) = queue.pop_front() {
            for g in &steps {
                let w = self.group.mul(&z, g);
                if !in_region(&w) {
                    gate.insert(w);
                } else if self.group.length(&w) > scan {
                    truncated = true;
                } else if seen.insert(w.clone()) {
                    queue.push_back(w);
                }
            }
        }
        let mut gate: Vec<Element> = gate.into_iter().collect();
        gate.sort();
        if truncated {
            if let Some(b) = gate
                .iter()
                .find(|b| self.group.length(b) + 2 * reach > scan)
            {
                return Err(Error::Budget(format!(
                    "exit set is not localized: {} lies near the scan radius {scan}",
                    self.group.display(b)
                )));
            }
        }
        Ok(gate)
    }

    /// Exit weights `u_b = G(x, b; A) - δ_{xb}` on the gate, from
    /// `Σ_b u_b G(b, b') = G(x, b') - δ_{xb'}`.
    pub fn exit_weights(&self, x: &Element, gate: &[Element]) -> Result<Vec<f64>> {
        let inv = self.gate_inverse(gate)?;
        Ok(self.exit_weights_with(x, gate, &inv))
    }

    /// `G(gate, gate)^{-1}`, to share across many starting points.
    pub fn gate_inverse(&self, gate: &[Element]) -> Result<DMatrix<f64>> {
        let m = gate.len();
        let mat = DMatrix::from_fn(m, m, |i, j| self.g(&gate[i], &gate[j]));
        mat.try_inverse()
            .ok_or_else(|| Error::Precision("Green matrix of the exit set is singular".into()))
    }

    pub fn exit_weights_with(&self, x: &Element, gate: &[Element], inv: &DMatrix<f64>) -> Vec<f64> {
        let m = gate.len();
        let rhs = DVector::from_fn(m, |j, _| {
            self.g(x, &gate[j]) - if *x == gate[j] { 1.0 } else { 0.0 }
        })
        .transpose();
        let u = rhs * inv;
        u.iter().copied().collect()
    }

    /// `G(x, y; A)`: paths from `x` to `y` whose intermediate points lie in `A`.
    pub fn relative_green(
        &self,
        x: &Element,
        y: &Element,
        in_region: &dyn Fn(&Element) -> bool,
        scan: u32,
    ) -> Result<GreenValue> {
        let gate = self.gate(x, in_region, scan)?;
        let base = self.value(x, y);
        if gate.is_empty() {
            return Ok(base);
        }
        let u = self.exit_weights(x, &gate)?;
        let mut v = base.value;
        for (b, ub) in gate.iter().zip(&u) {
            v -= ub * (self.g(b, y) - if b == y { 1.0 } else { 0.0 });
        }
        let scale: f64 = 1.0 + u.iter().map(|w| w.abs()).sum::<f64>();
        Ok(GreenValue {
            value: v,
            tail_bound: base.tail_bound * scale * 2.0,
        })
    }

    /// Ancona ratio `G(x,y) / (G(x,z) G(z,y))`; `z` must satisfy `<x|y>_z ≤ k`.
    pub fn ancona_ratio(&self, x: &Element, y: &Element, z: &Element, k: f64) -> Result<f64> {
        let gp = self.group.gromov_product(x, y, z);
        if gp > k {
            return Err(Error::Domain(format!(
                "{} is at Gromov distance {gp} from the geodesic, above {k}",
                self.group.display(z)
            )));
        }
        Ok(self.g(x, y) / (self.g(x, z) * self.g(z, y)))
    }

    /// Ratio limit `G(x, y_n)/G(e, y_n)` along `points`, stopped once two
    /// consecutive changes are below `eps`.
    pub fn martin_kernel_ratio(
        &self,
        x: &Element,
        points: impl IntoIterator<Item = Element>,
        eps: f64,
    ) -> Result<f64> {
        if x.is_identity() {
            return Ok(1.0);
        }
        let e = Element::identity();
        let mut last: Option<f64> = None;
        let mut quiet = 0;
        let mut history = (f64::NAN, f64::NAN);
        for y in points {
            let r = self.g(x, &y) / self.g(&e, &y);
            if let Some(prev) = last {
                if (r - prev).abs() < eps {
                    quiet += 1;
                    if quiet >= 2 {
                        return Ok(r);
                    }
                } else {
                    quiet = 0;
                }
            }
            history = (history.1, r);
            last = Some(r);
        }
        Err(Error::Budget(format!(
            "Martin ratio did not settle; last two ratios {} and {}",
            history.0, history.1
        )))
    }
}

struct LetterBlock {
    letters: Vec<usize>,
    order: Option<usize>,
}

fn letter_blocks(group: &Group) -> Vec<LetterBlock> {
    let mut blocks: Vec<LetterBlock> = Vec::new();
    let mut l = 0usize;
    while l < group.alphabet_len() {
        let inv = group.inverse_letter(l as u8) as usize;
        let probe = group.letter_element(l as u8, 0);
        // Walk the cyclic subgroup generated by l to find its order.
        let mut x = probe.clone();
        let mut order = 1usize;
        while !x.is_identity() && order <= 256 {
            x = group.mul(&x, &probe);
            order += 1;
        }
        if x.is_identity() {
            blocks.push(LetterBlock {
                letters: (l..l + order - 1).collect(),
                order: Some(order),
            });
            l += order - 1;
        } else {
            debug_assert_eq!(inv, l + 1);
            blocks.push(LetterBlock {
                letters: vec![l, l + 1],
                order: None,
            });
            l += 2;
        }
    }
    blocks
}

/// `(I - loops)^{-1} rhs`.
fn solve_left(loops: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = loops.nrows();
    let a = DMatrix::identity(q, q) - loops;
    a.lu()
        .solve(rhs)
        .ok_or_else(|| Error::NoConvergence("singular first-passage system".into()))
}

/// First passage from position 0 to position `t` inside a cyclic factor of order `n`.
fn cycle_first_passage(
    loops: &DMatrix<f64>,
    step: &[DMatrix<f64>],
    letters: &[usize],
    n: usize,
    t: usize,
) -> Result<DMatrix<f64>> {
    let q = loops.nrows();
    let positions: Vec<usize> = (0..n).filter(|&p| p != t).collect();
    let m = positions.len();
    let mut a = DMatrix::<f64>::zeros(m * q, m * q);
    let mut b = DMatrix::<f64>::zeros(m * q, q);
    for (i, &p) in positions.iter().enumerate() {
        let block = DMatrix::identity(q, q) - loops;
        a.view_mut((i * q, i * q), (q, q)).copy_from(&block);
        for j in 1..n {
            let s = &step[letters[j - 1]];
            let target = (p + j) % n;
            if target == t {
                let mut v = b.view_mut((i * q, 0), (q, q));
                v += s;
            } else {
                let k = positions.iter().position(|&r| r == target).unwrap();
                let mut v = a.view_mut((i * q, k * q), (q, q));
                v -= s;
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NoConvergence("singular cyclic first-passage system".into()))?;
    let zero = positions.iter().position(|&r| r == 0).unwrap();
    Ok(x.rows(zero * q, q).into_owned())
}

/// Partial sums `Σ_{n ≤ n_max} μ^{*n}(h)` of the convolution series; a lower bound.
pub fn green_series(group: &Group, mu: &StepMeasure, h: &Element, n_max: usize) -> Result<Vec<f64>> {
    let mut sums = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    convolution_powers(group, mu, n_max, usize::MAX / 8, |_, d| {
        acc += d.get(h);
        sums.push(acc);
    })?;
    Ok(sums)
}

/// Truncated dynamic program for `G(x, y; A)` over paths of length at most
/// `n_max` that stay in `Ball(radius)`; an independent lower bound.
pub fn relative_green_dp(
    group: &Group,
    mu: &StepMeasure,
    x: &Element,
    y: &Element,
    in_region: &dyn Fn(&Element) -> bool,
    radius: u32,
    n_max: usize,
) -> f64 {
    let mut total = if x == y { 1.0 } else { 0.0 };
    let mut dist = SparseDist::point(x.clone());
    for _ in 0..n_max {
        let next = dist.step(group, mu, |z| group.length(z) <= radius);
        total += next.get(y);
        let mut kept = SparseDist::default();
        for (z, p) in next.mass {
            if in_region(&z) {
                kept.mass.insert(z, p);
            }
        }
        dist = kept;
        if dist.total() < 1e-15 {
            break;
        }
    }
    total
}

/// Spectral radius estimate from exact return probabilities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRadius {
    /// Fitted `ρ`, correcting for the `m^{-3/2}` prefactor and a `1/m` term.
    pub estimate: Option<f64>,
    /// `μ^{*2m}(e)^{1/2m}` at the two largest computed `m`.
    pub raw_roots: Vec<f64>,
    /// `(2m, μ^{*2m}(e))` for every computed `m`.
    pub returns: Vec<(usize, f64)>,
}

/// Estimates the spectral radius from `μ^{*2m}(e)` for `2m ≤ steps`.
///
/// Return probabilities on nonamenable groups behave like `A m^{-3/2} ρ^{2m}`;
/// the fit `log p + 1.5 log m = A + 2m log ρ + c/m` over the last three even
/// times removes the polynomial prefactor. Points that cannot return to the
/// identity in the remaining steps are pruned, which keeps the computation exact.
pub fn spectral_radius_estimate(group: &Group, mu: &StepMeasure, steps: usize) -> Result<SpectralRadius> {
    if !mu.is_probability() {
        return Err(Error::InvalidMeasure("spectral radius needs a probability measure".into()));
    }
    let reach = mu.max_length(group).max(1);
    let mut dist = SparseDist::point(Element::identity());
    let mut returns = Vec::new();
    let e = Element::identity();
    for t in 1..=steps {
        let remaining = (steps - t) as u32;
        dist = dist.step(group, mu, |z| group.length(z) <= remaining * reach);
        if t % 2 == 0 {
            returns.push((t, dist.get(&e)));
        }
    }
    let positive: Vec<(usize, f64)> = returns.iter().copied().filter(|&(_, p)| p > 0.0).collect();
    let raw_roots: Vec<f64> = positive
        .iter()
        .rev()
        .take(2)
        .rev()
        .map(|&(n, p)| p.powf(1.0 / n as f64))
        .collect();
    let estimate = if positive.len() >= 3 && positive.len() == returns.len() {
        let pts = &positive[positive.len() - 3..];
        let a = DMatrix::from_fn(3, 3, |i, j| {
            let m = pts[i].0 as f64 / 2.0;
            match j {
                0 => 1.0,
                1 => 2.0 * m,
                _ => 1.0 / m,
            }
        });
        let b = DVector::from_fn(3, |i, _| {
            let m = pts[i].0 as f64 / 2.0;
            pts[i].1.ln() + 1.5 * m.ln()
        });
        a.lu().solve(&b).map(|c| c[1].exp())
    } else {
        None
    };
    Ok(SpectralRadius {
        estimate,
        raw_roots,
        returns,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

/// Harnack constant: the largest, over generators `s`, of the cheapest
/// `-Σ log μ(g_i)` over products `g_1⋯g_k = s` of support points.
pub fn harnack_constant(group: &Group, mu: &StepMeasure) -> Result<f64> {
    let steps: Vec<(Element, f64)> = mu
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(g, w)| (g.clone(), -w.ln()))
        .collect();
    let targets: FxHashSet<Element> = group.generators().iter().cloned().collect();
    let cap = 2 + 3 * mu.max_length(group).max(1);
    let mut best: FxHashMap<Element, f64> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    best.insert(Element::identity(), 0.0);
    heap.push((Cost(0.0), Element::identity()));
    let mut found = 0;
    let mut worst: f64 = 0.0;
    let mut done: FxHashSet<Element> = FxHashSet::default();
    while let Some((Cost(c), x)) = heap.pop() {
        if !done.insert(x.clone()) {
            continue;
        }
        if targets.contains(&x) {
            found += 1;
            worst = worst.max(c);
            if found == targets.len() {
                return Ok(worst);
            }
        }
        for (g, w) in &steps {
            let y = group.mul(&x, g);
            if group.length(&y) > cap {
                continue;
            }
            let nc = c + w;
            if best.get(&y).is_none_or(|&b| nc < b) {
                best.insert(y.clone(), nc);
                heap.push((Cost(nc), y));
            }
        }
    }
    Err(Error::InvalidMeasure(
        "some generator is not reachable by the support".into(),
    ))
}
