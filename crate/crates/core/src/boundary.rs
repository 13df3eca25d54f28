//! Finite discretization of the Busemann boundary.
//!
//! A boundary point at precision `N` is the restriction of a horofunction to
//! `Ball(N)`. Points are found as restrictions of `h_y(x) = d(x,y) - d(e,y)` for
//! `y` on far spheres, and each keeps the elements `y` that realize it. The
//! group acts through those witnesses: `g·ξ` is the restriction of `h_{gy}`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{Ball, Element, Group};

pub const DEFAULT_MARGIN: usize = 2;
pub const DEFAULT_WINDOW: usize = 3;

/// A horofunction restricted to `Ball(N)`, values in ball-id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncHoro {
    pub precision: usize,
    pub values: Vec<i32>,
    #[serde(skip)]
    pub witness: Element,
}

#[derive(Clone, Debug)]
struct Representative {
    values: Vec<i32>,
    /// Sorted; the first one is the canonical witness.
    witnesses: Vec<Element>,
}

/// Radii over which the enumeration was constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stabilization {
    pub first_radius: usize,
    pub last_radius: usize,
    pub count: usize,
}

/// Result of comparing two boundary points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryDistance {
    /// Largest `n` such that the tables agree on `Ball(n)`.
    pub agreement: usize,
    /// `e^{-n}`; an upper bound only when `identical`.
    pub value: f64,
    /// Tables agree at full precision.
    pub identical: bool,
}

#[derive(Clone, Debug)]
pub struct BoundaryAtlas {
    group: Group,
    ball: Ball,
    precision: usize,
    margin: usize,
    reps: Vec<Representative>,
    lookup: FxHashMap<Vec<i32>, usize>,
    /// `action[s][i]`: canonical action of generator `s` on point `i`.
    action: Vec<Vec<usize>>,
    certificate: Stabilization,
    seed: Option<usize>,
}

/// Restriction of `h_y` to `Ball(N)`; requires `d(e,y) >= N + margin`.
pub fn horofunction_restriction(
    group: &Group,
    ball: &Ball,
    y: &Element,
    margin: usize,
) -> Result<TruncHoro> {
    let n = ball.radius();
    let depth = group.length(y) as usize;
    if depth < n + margin {
        return Err(Error::Precision(format!(
            "witness {} at distance {depth} is too shallow for precision {n} (needs {})",
            group.display(y),
            n + margin
        )));
    }
    Ok(TruncHoro {
        precision: n,
        values: table(group, ball, y),
        witness: y.clone(),
    })
}

fn table(group: &Group, ball: &Ball, y: &Element) -> Vec<i32> {
    let ny = group.length(y) as i32;
    ball.elements()
        .iter()
        .map(|x| group.dist(x, y) as i32 - ny)
        .collect()
}

type TableKey = (Vec<u8>, usize, Vec<u32>);

/// Groups elements whose tables on `ball` necessarily agree.
fn table_classes<'a>(group: &Group, ball: &Ball, elements: impl Iterator<Item = &'a Element>) -> Vec<Vec<usize>> {
    let keep = ball.radius() + 1;
    let mut classes: FxHashMap<TableKey, Vec<usize>> = FxHashMap::default();
    for (i, y) in elements.enumerate() {
        let w = y.word();
        let cut = w.len().min(keep);
        let key = (w[..cut].to_vec(), y.finite(), group.tail_profile(&w[cut..]).to_vec());
        classes.entry(key).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = classes.into_values().collect();
    classes.sort();
    classes
}

/// Tables of every sphere element. Left multiplication by `x ∈ Ball(N)` only
/// touches the first `N + 1` letters of a normal form, so elements sharing that
/// prefix, the finite part and the tail profile share a table.
fn sphere_tables(group: &Group, ball: &Ball, sphere: &[Element]) -> BTreeMap<Vec<i32>, Vec<Element>> {
    let classes = table_classes(group, ball, sphere.iter());
    let tables: Vec<Vec<i32>> = classes
        .par_iter()
        .map(|members| table(group, ball, &sphere[members[0]]))
        .collect();
    let mut out: BTreeMap<Vec<i32>, Vec<Element>> = BTreeMap::new();
    for (t, members) in tables.into_iter().zip(classes) {
        out.entry(t)
            .or_default()
            .extend(members.into_iter().map(|i| sphere[i].clone()));
    }
    out
}

impl BoundaryAtlas {
    /// Enumerates boundary points at precision `n` from the spheres of radius
    /// `n + margin .. n + margin + window`, requiring the same set on each.
    pub fn enumerate(group: &Group, n: usize, margin: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Domain("stabilization window must be positive".into()));
        }
        let ball = group.ball(n);
        let first = n + margin;
        let last = first + window - 1;
        let spheres = Ball::spheres(group, last);
        let mut previous: Option<(usize, BTreeMap<Vec<i32>, Vec<Element>>)> = None;
        for r in first..=last {
            let tables = sphere_tables(group, &ball, &spheres[r]);
            if let Some((r0, prev)) = &previous {
                if !prev.keys().eq(tables.keys()) {
                    return Err(Error::Unstable {
                        r1: *r0,
                        r2: r,
                        n1: prev.len(),
                        n2: tables.len(),
                    });
                }
            }
            previous = Some((r, tables));
        }
        let (_, deepest) = previous.expect("window is nonempty");
        let mut reps: Vec<Representative> = deepest
            .into_iter()
            .map(|(values, mut witnesses)| {
                witnesses.sort();
                Representative { values, witnesses }
            })
            .collect();
        reps.sort_by(|a, b| a.witnesses[0].cmp(&b.witnesses[0]));
        let count = reps.len();
        let mut atlas = BoundaryAtlas {
            group: group.clone(),
            ball,
            precision: n,
            margin,
            lookup: FxHashMap::default(),
            reps,
            action: Vec::new(),
            certificate: Stabilization {
                first_radius: first,
                last_radius: last,
                count,
            },
            seed: None,
        };
        atlas.reindex()?;
        Ok(atlas)
    }

    /// Enumeration with the default margin and window.
    pub fn new(group: &Group, n: usize) -> Result<Self> {
        Self::enumerate(group, n, DEFAULT_MARGIN, DEFAULT_WINDOW)
    }

    fn reindex(&mut self) -> Result<()> {
        self.lookup = self
            .reps
            .iter()
            .enumerate()
            .map(|(i, r)| (r.values.clone(), i))
            .collect();
        let gens = self.group.generators().to_vec();
        self.action = gens
            .iter()
            .map(|s| (0..self.len()).map(|i| self.act(s, i)).collect())
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn certificate(&self) -> Stabilization {
        self.certificate
    }

    /// Seed that produced this atlas when it is a minimal component.
    pub fn seed(&self) -> Option<usize> {
        self.seed
    }

    pub fn values(&self, xi: usize) -> &[i32] {
        &self.reps[xi].values
    }

    pub fn witnesses(&self, xi: usize) -> &[Element] {
        &self.reps[xi].witnesses
    }

    pub fn canonical_witness(&self, xi: usize) -> &Element {
        &self.reps[xi].witnesses[0]
    }

    pub fn horofunction(&self, xi: usize) -> TruncHoro {
        TruncHoro {
            precision: self.precision,
            values: self.reps[xi].values.clone(),
            witness: self.reps[xi].witnesses[0].clone(),
        }
    }

    /// `h_ξ(x)` for `x` in `Ball(N)`.
    pub fn h(&self, xi: usize, x: &Element) -> Result<i32> {
        let id = self.ball.id(x).ok_or_else(|| {
            Error::Precision(format!(
                "{} lies outside the atlas ball of radius {}",
                self.group.display(x),
                self.precision
            ))
        })?;
        Ok(self.reps[xi].values[id])
    }

    /// Index of the point whose table equals `values`.
    pub fn find(&self, values: &[i32]) -> Option<usize> {
        self.lookup.get(values).copied()
    }

    /// Locates the point realized by witness `y`.
    pub fn locate(&self, y: &Element) -> Result<usize> {
        let depth = self.group.length(y) as usize;
        if depth < self.precision + self.margin {
            return Err(Error::Precision(format!(
                "witness at distance {depth} is too shallow for precision {}; increase the margin or use deeper witnesses",
                self.precision
            )));
        }
        let t = table(&self.group, &self.ball, y);
        self.find(&t).ok_or_else(|| {
            Error::Precision(format!(
                "no boundary point matches the table of {}; increase the precision",
                self.group.display(y)
            ))
        })
    }

    /// `g·ξ` computed from the canonical witness.
    pub fn act(&self, g: &Element, xi: usize) -> Result<usize> {
        if g.is_identity() {
            return Ok(xi);
        }
        self.locate(&self.group.mul(g, &self.reps[xi].witnesses[0]))
    }

    /// `g·ξ` computed from a caller-supplied witness of `ξ`.
    pub fn act_via(&self, g: &Element, witness: &Element) -> Result<usize> {
        self.locate(&self.group.mul(g, witness))
    }

    /// Canonical action of the `s`-th generator, precomputed.
    pub fn act_generator(&self, s: usize, xi: usize) -> usize {
        self.action[s][xi]
    }

    /// Distribution of `g·ξ` when the witness is drawn uniformly from all stored witnesses.
    ///
    /// On trees this splits mass evenly among the refinements of a cylinder,
    /// which is what makes the transfer matrix conserve the visual measure.
    pub fn act_distribution(&self, g: &Element, xi: usize) -> Result<Vec<(usize, f64)>> {
        if g.is_identity() {
            return Ok(vec![(xi, 1.0)]);
        }
        let ws = &self.reps[xi].witnesses;
        let moved: Vec<Element> = ws.iter().map(|y| self.group.mul(g, y)).collect();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for class in table_classes(&self.group, &self.ball, moved.iter()) {
            *counts.entry(self.locate(&moved[class[0]])?).or_default() += class.len();
        }
        let total = ws.len() as f64;
        Ok(counts
            .into_iter()
            .map(|(j, c)| (j, c as f64 / total))
            .collect())
    }

    /// A witness of `ξ` at distance at least `depth`, grown from the canonical one
    /// by appending generators that lengthen it without changing the table.
    pub fn deep_witness(&self, xi: usize, depth: usize) -> Result<Element> {
        self.deep_witness_from(xi, &self.reps[xi].witnesses[0], depth)
    }

    /// As [`Self::deep_witness`], starting from a given witness of `ξ`.
    pub fn deep_witness_from(&self, xi: usize, start: &Element, depth: usize) -> Result<Element> {
        let mut y = start.clone();
        let target = &self.reps[xi].values;
        let mut len = self.group.length(&y) as usize;
        'grow: while len < depth {
            for s in self.group.generators() {
                let z = self.group.mul(&y, s);
                let lz = self.group.length(&z) as usize;
                if lz == len + 1 && &table(&self.group, &self.ball, &z) == target {
                    y = z;
                    len = lz;
                    continue 'grow;
                }
            }
            return Err(Error::Precision(format!(
                "cannot deepen the witness of boundary point {xi} beyond distance {len}"
            )));
        }
        Ok(y)
    }

    /// Busemann cocycle `c_B(g, ξ) = h_ξ(g^{-1})`.
    pub fn cocycle(&self, g: &Element, xi: usize) -> Result<i32> {
        self.h(xi, &self.group.inv(g))
    }

    /// Largest `n ≤ N` on which the two tables agree.
    pub fn agreement_radius(&self, xi: usize, eta: usize) -> usize {
        let a = &self.reps[xi].values;
        let b = &self.reps[eta].values;
        match a.iter().zip(b).position(|(u, v)| u != v) {
            None => self.precision,
            Some(i) => self.ball.radius_of(i).saturating_sub(1),
        }
    }

    pub fn boundary_dist(&self, xi: usize, eta: usize) -> BoundaryDistance {
        let n = self.agreement_radius(xi, eta);
        BoundaryDistance {
            agreement: n,
            value: (-(n as f64)).exp(),
            identical: xi == eta || self.reps[xi].values == self.reps[eta].values,
        }
    }

    /// Orbit closure of `seed` under `elements` (the generators when empty), as a new atlas.
    ///
    /// All witnesses are followed, so the result is closed under the averaged action.
    pub fn minimal_component(&self, seed: usize, elements: &[Element]) -> Result<Self> {
        let elements = if elements.is_empty() {
            self.group.generators().to_vec()
        } else {
            elements.to_vec()
        };
        let mut keep = vec![false; self.len()];
        keep[seed] = true;
        let mut stack = vec![seed];
        while let Some(i) = stack.pop() {
            for g in &elements {
                for (j, _) in self.act_distribution(g, i)? {
                    if !keep[j] {
                        keep[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let reps = self
            .reps
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(r, _)| r.clone())
            .collect::<Vec<_>>();
        let new_seed = keep[..seed].iter().filter(|&&k| k).count();
        let mut sub = BoundaryAtlas {
            group: self.group.clone(),
            ball: self.ball.clone(),
            precision: self.precision,
            margin: self.margin,
            lookup: FxHashMap::default(),
            reps,
            action: Vec::new(),
            certificate: self.certificate,
            seed: Some(new_seed),
        };
        sub.reindex()?;
        Ok(sub)
    }

    pub fn dump(&self) -> AtlasDump {
        AtlasDump {
            precision: self.precision,
            ball: self
                .ball
                .elements()
                .iter()
                .map(|x| self.group.display(x))
                .collect(),
            representatives: self
                .reps
                .iter()
                .map(|r| RepresentativeDump {
                    witness: self.group.display(&r.witnesses[0]),
                    values: r.values.clone(),
                })
                .collect(),
            action: self.action.clone(),
            certificate: self.certificate,
            seed: self.seed,
        }
    }

    /// Checks that every table vanishes at `e` and is 1-Lipschitz along generator edges.
    pub fn check_tables(&self) -> Result<()> {
        for (i, r) in self.reps.iter().enumerate() {
            if r.values[0] != 0 {
                return Err(Error::Integrity(format!("h(e) != 0 at boundary point {i}")));
            }
            for x in 0..self.ball.len() {
                for s in 0..self.group.generators().len() {
                    if let Some(y) = self.ball.neighbor(x, s) {
                        if (r.values[x] - r.values[y]).abs() > 1 {
                            return Err(Error::Integrity(format!(
                                "table of boundary point {i} is not 1-Lipschitz"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Lemma-coincide check for one pair: if the tables agree on `Ball(M)` then for
    /// `x` in `Ball(M - slack)` they agree on `Ball(x, M + h(x) - slack) ∩ Ball(N)`.
    /// Returns the number of `(x, z)` pairs tested.
    pub fn check_coincide(&self, xi: usize, eta: usize, slack: i32) -> Result<usize> {
        let m = self.agreement_radius(xi, eta) as i32;
        let a = &self.reps[xi].values;
        let b = &self.reps[eta].values;
        let mut tested = 0;
        let inner = m - slack;
        if inner < 0 {
            return Ok(0);
        }
        for xid in 0..self.ball.count_within(inner as usize) {
            let x = self.ball.element(xid);
            let r = m + a[xid] - slack;
            if r < 0 {
                continue;
            }
            for (zid, z) in self.ball.elements().iter().enumerate() {
                if self.group.dist(x, z) as i32 <= r {
                    tested += 1;
                    if a[zid] != b[zid] {
                        return Err(Error::Integrity(format!(
                            "points {xi} and {eta} agree on Ball({m}) but differ at {} within Ball({}, {r})",
                            self.group.display(z),
                            self.group.display(x)
                        )));
                    }
                }
            }
        }
        Ok(tested)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentativeDump {
    pub witness: String,
    pub values: Vec<i32>,
}

/// JSON form of an atlas: tables in ball-id order.
#[derive(Clone, Debug, Serialize)]
pub struct AtlasDump {
    pub precision: usize,
    pub ball: Vec<String>,
    pub representatives: Vec<RepresentativeDump>,
    pub action: Vec<Vec<usize>>,
    pub certificate: Stabilization,
    pub seed: Option<usize>,
}
