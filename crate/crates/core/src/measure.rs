//! Finitely supported step measures and their convolution powers.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, Group};

const PROBABILITY_TOL: f64 = 1e-12;

/// A finitely supported measure on the group.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMeasure {
    support: Vec<Element>,
    weights: Vec<f64>,
}

/// JSON form: symbol/weight pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub support: Vec<String>,
    pub weights: Vec<f64>,
}

impl MeasureSpec {
    pub fn uniform(symbols: &[String]) -> Self {
        let w = 1.0 / symbols.len() as f64;
        MeasureSpec {
            support: symbols.to_vec(),
            weights: vec![w; symbols.len()],
        }
    }
}

impl StepMeasure {
    /// Builds a measure, merging repeated support points and dropping zero weights.
    pub fn new(support: Vec<Element>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite weight {w}")));
        }
        let mut merged: Vec<(Element, f64)> = Vec::new();
        for (g, w) in support.into_iter().zip(weights) {
            match merged.iter_mut().find(|(h, _)| *h == g) {
                Some((_, v)) => *v += w,
                None => merged.push((g, w)),
            }
        }
        merged.retain(|(_, w)| *w != 0.0);
        if merged.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let (support, weights) = merged.into_iter().unzip();
        Ok(StepMeasure { support, weights })
    }

    pub fn from_spec(group: &Group, spec: &MeasureSpec) -> Result<Self> {
        let support = spec
            .support
            .iter()
            .map(|s| group.word(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(support, spec.weights.clone())
    }

    /// Uniform measure on the generating set.
    pub fn uniform_on_generators(group: &Group) -> Self {
        let gens = group.generators().to_vec();
        let w = 1.0 / gens.len() as f64;
        let n = gens.len();
        StepMeasure {
            support: gens,
            weights: vec![w; n],
        }
    }

    pub fn point_mass(g: Element) -> Self {
        StepMeasure {
            support: vec![g],
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &[Element] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn weight(&self, g: &Element) -> f64 {
        self.iter().find(|(h, _)| *h == g).map_or(0.0, |(_, w)| w)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0) && (self.total_mass() - 1.0).abs() <= PROBABILITY_TOL
    }

    pub fn max_length(&self, group: &Group) -> u32 {
        self.support.iter().map(|g| group.length(g)).max().unwrap_or(0)
    }

    /// The reflected measure `g ↦ μ(g^{-1})`.
    pub fn reflected(&self, group: &Group) -> Self {
        StepMeasure {
            support: self.support.iter().map(|g| group.inv(g)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Whether the semigroup generated by the positive-weight support reaches
    /// every element of `Ball(2)`. The search is confined to a ball large
    /// enough for any reaching word to be found.
    pub fn is_admissible(&self, group: &Group) -> bool {
        let positive: Vec<&Element> = self
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(g, _)| g)
            .collect();
        if positive.is_empty() {
            return false;
        }
        let cap = 2 + 3 * self.max_length(group).max(1);
        let targets: FxHashSet<Element> = group.ball(2).elements().iter().cloned().collect();
        let mut seen: FxHashSet<Element> = FxHashSet::default();
        let mut queue = VecDeque::new();
        for g in &positive {
            if seen.insert((*g).clone()) {
                queue.push_back((*g).clone());
            }
        }
        while let Some(x) = queue.pop_front() {
            for g in &positive {
                let y = group.mul(&x, g);
                if group.length(&y) <= cap && seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        targets.iter().all(|t| seen.contains(t))
    }

    /// Errors unless the measure is an admissible probability measure.
    pub fn require_admissible(&self, group: &Group) -> Result<()> {
        if let Some(w) = self.weights.iter().find(|&&w| w < 0.0) {
            return Err(Error::InvalidMeasure(format!("negative weight {w}")));
        }
        if !self.is_probability() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {} instead of 1",
                self.total_mass()
            )));
        }
        if !self.is_admissible(group) {
            return Err(Error::InvalidMeasure(
                "support does not generate the group as a semigroup".into(),
            ));
        }
        Ok(())
    }

    /// Convex combination `(1-θ)·self + θ·other`.
    pub fn mix(&self, other: &StepMeasure, theta: f64) -> Result<Self> {
        let mut support = self.support.clone();
        let mut weights: Vec<f64> = self.weights.iter().map(|w| (1.0 - theta) * w).collect();
        for (g, w) in other.iter() {
            support.push(g.clone());
            weights.push(theta * w);
        }
        StepMeasure::new(support, weights)
    }

    pub fn to_spec(&self, group: &Group) -> MeasureSpec {
        MeasureSpec {
            support: self.support.iter().map(|g| group.display(g)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// A finitely supported distribution, typically `μ^{*n}`.
#[derive(Clone, Debug, Default)]
pub struct SparseDist {
    pub mass: FxHashMap<Element, f64>,
}

impl SparseDist {
    pub fn point(x: Element) -> Self {
        let mut mass = FxHashMap::default();
        mass.insert(x, 1.0);
        SparseDist { mass }
    }

    pub fn get(&self, x: &Element) -> f64 {
        self.mass.get(x).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.mass
            .values()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// One convolution step `self * μ`, keeping only elements with `keep(x)`.
    pub fn step(&self, group: &Group, mu: &StepMeasure, keep: impl Fn(&Element) -> bool) -> Self {
        let mut out: FxHashMap<Element, f64> =
            FxHashMap::with_capacity_and_hasher(self.mass.len() * mu.len(), Default::default());
        for (x, &p) in &self.mass {
            for (g, w) in mu.iter() {
                let y = group.mul(x, g);
                if keep(&y) {
                    *out.entry(y).or_insert(0.0) += p * w;
                }
            }
        }
        SparseDist { mass: out }
    }
}

/// Default cap on the number of support points of a convolution power.
pub const DEFAULT_SUPPORT_BUDGET: usize = 20_000_000;

/// Iterates convolution powers `μ^{*0}, μ^{*1}, …, μ^{*n}`, calling `visit` on each.
pub fn convolution_powers(
    group: &Group,
    mu: &StepMeasure,
    n: usize,
    budget: usize,
    mut visit: impl FnMut(usize, &SparseDist),
) -> Result<SparseDist> {
    let mut dist = SparseDist::point(Element::identity());
    visit(0, &dist);
    for k in 1..=n {
        if dist.len().saturating_mul(mu.len()) > budget.saturating_mul(4) {
            return Err(Error::Budget(format!(
                "convolution power {k} would exceed the support budget of {budget} (reached n = {})",
                k - 1
            )));
        }
        dist = dist.step(group, mu, |_| true);
        if dist.len() > budget {
            return Err(Error::Budget(format!(
                "support of convolution power {k} has {} points, over the budget of {budget}",
                dist.len()
            )));
        }
        visit(k, &dist);
    }
    Ok(dist)
}

/// Exact sparse distribution of `μ^{*n}`.
pub fn convolution_power(group: &Group, mu: &StepMeasure, n: usize) -> Result<SparseDist> {
    convolution_powers(group, mu, n, DEFAULT_SUPPORT_BUDGET, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    #[test]
    fn second_power_of_simple_walk() {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        let mu = StepMeasure::uniform_on_generators(&g);
        let zero = convolution_power(&g, &mu, 0).unwrap();
        assert_eq!(zero.get(&g.identity()), 1.0);
        let two = convolution_power(&g, &mu, 2).unwrap();
        assert!((two.get(&g.identity()) - 0.25).abs() < 1e-15);
        assert!((two.get(&g.word("a a").unwrap()) - 1.0 / 16.0).abs() < 1e-15);
        assert!((two.total() - 1.0).abs() < 1e-12);
        assert!((mu.reflected(&g).weight(&g.word("a").unwrap()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn admissibility() {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        assert!(StepMeasure::uniform_on_generators(&g).is_admissible(&g));
        let a = StepMeasure::point_mass(g.word("a").unwrap());
        assert!(!a.is_admissible(&g));
        // Positive words alone still generate F_2 as a semigroup if inverses come from products.
        let spec = MeasureSpec {
            support: vec!["a".into(), "b".into(), "a^-1 b^-1".into()],
            weights: vec![0.4, 0.4, 0.2],
        };
        assert!(StepMeasure::from_spec(&g, &spec).unwrap().is_admissible(&g));
        let neg = MeasureSpec {
            support: vec!["a".into(), "a^-1".into()],
            weights: vec![1.5, -0.5],
        };
        let m = StepMeasure::from_spec(&g, &neg).unwrap();
        assert!(matches!(m.require_admissible(&g), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn budget_error_reports_power() {
        let g = Group::new(GroupSpec::free_group(2)).unwrap();
        let mu = StepMeasure::uniform_on_generators(&g);
        let err = convolution_powers(&g, &mu, 10, 100, |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }
}
