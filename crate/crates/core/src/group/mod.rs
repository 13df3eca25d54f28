//! Exact arithmetic in free groups, free products of finite cyclic groups and
//! their direct products with a finite group.
//!
//! Elements are stored in normal form: a reduced word over the letters of the
//! base free product together with the index of the finite component. A letter
//! is either `a^{±1}` for an infinite factor or a full syllable `c^j`
//! (`0 < j < n`) for a factor of order `n`.
//!
//! The word metric is taken with respect to the user-supplied generating set
//! `S`. Every generator is required to move at most one letter in the base
//! (its base part is the identity or a single letter), so that the Cayley graph
//! of the base is traversed block by block and every syllable boundary of a
//! geodesic target is a cut point. The distance to any element is then a
//! min-plus product, over the finite component, of per-letter costs that are
//! obtained once by breadth-first search in the Cayley graph of `(Γ, S)`.

mod ball;
mod delta;
mod spec;

pub use ball::Ball;
pub use delta::{estimate_delta, Delta};
pub use spec::{BaseFamily, Family, GroupSpec};

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Letter code in the base alphabet.
pub type Letter = u8;

/// Normal-form word of the base free product.
pub type Word = SmallVec<[Letter; 24]>;

const INF: u32 = u32::MAX / 4;
const BFS_RADIUS_CAP: u32 = 64;
const BFS_VISIT_CAP: usize = 4_000_000;

/// A group element in canonical normal form.
///
/// Two elements are equal iff their normal forms coincide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Element {
    word: Word,
    fin: u8,
}

impl Element {
    pub fn identity() -> Self {
        Element::default()
    }

    pub fn word(&self) -> &[Letter] {
        &self.word
    }

    /// Index of the finite component (always 0 when there is none).
    pub fn finite(&self) -> usize {
        self.fin as usize
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty() && self.fin == 0
    }

    /// Number of letters of the base normal form.
    pub fn base_len(&self) -> usize {
        self.word.len()
    }
}

#[derive(Clone, Debug)]
struct Factor {
    name: String,
    /// `None` for an infinite cyclic factor.
    order: Option<u32>,
    first_code: Letter,
}

#[derive(Clone, Copy, Debug)]
struct LetterInfo {
    factor: u8,
    /// `±1` for infinite factors, `1..n` for finite ones.
    exp: i32,
}

/// A compiled [`GroupSpec`]: alphabet, finite factor, generators and metric tables.
#[derive(Clone, Debug)]
pub struct Group {
    spec: GroupSpec,
    factors: Vec<Factor>,
    letters: Vec<LetterInfo>,
    inverse_letter: Vec<Letter>,
    fin_table: Vec<Vec<u8>>,
    fin_inverse: Vec<u8>,
    generators: Vec<Element>,
    /// `step_cost[l][k] = d(e, (l, k))`.
    step_cost: Vec<Vec<u32>>,
    /// `fin_cost[k] = d(e, (e, k))`.
    fin_cost: Vec<u32>,
}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Self> {
        let (base, table) = match &spec.family {
            Family::FreeGroup { rank } => (BaseFamily::FreeGroup { rank: *rank }, None),
            Family::FreeProduct { orders } => (
                BaseFamily::FreeProduct {
                    orders: orders.clone(),
                },
                None,
            ),
            Family::DirectWithFinite { base, table } => (base.clone(), Some(table.clone())),
        };
        let orders: Vec<Option<u32>> = match &base {
            BaseFamily::FreeGroup { rank } => {
                if *rank < 2 {
                    return Err(Error::InvalidGroup(format!(
                        "free group of rank {rank} is elementary; rank must be at least 2"
                    )));
                }
                vec![None; *rank]
            }
            BaseFamily::FreeProduct { orders } => {
                if orders.len() < 2 {
                    return Err(Error::InvalidGroup(
                        "a free product needs at least two factors".into(),
                    ));
                }
                if let Some(bad) = orders.iter().find(|&&n| n < 2) {
                    return Err(Error::InvalidGroup(format!("cyclic factor of order {bad}")));
                }
                if orders.len() == 2 && orders.iter().all(|&n| n == 2) {
                    return Err(Error::InvalidGroup(
                        "Z/2 * Z/2 is virtually Z, hence elementary".into(),
                    ));
                }
                orders.iter().map(|&n| Some(n)).collect()
            }
        };
        let names = match &spec.names {
            Some(n) => {
                if n.len() != orders.len() {
                    return Err(Error::InvalidGroup(format!(
                        "{} factor names given for {} factors",
                        n.len(),
                        orders.len()
                    )));
                }
                n.clone()
            }
            None => spec::default_names(orders.len()),
        };
        for n in &names {
            if n == "e" || n.is_empty() || n.contains(|c: char| "(),^ ".contains(c)) {
                return Err(Error::InvalidGroup(format!("invalid factor name {n:?}")));
            }
        }

        let mut factors = Vec::new();
        let mut letters = Vec::new();
        let mut inverse_letter = Vec::new();
        for (f, (name, order)) in names.iter().zip(&orders).enumerate() {
            let first_code = letters.len();
            match order {
                None => {
                    letters.push(LetterInfo {
                        factor: f as u8,
                        exp: 1,
                    });
                    letters.push(LetterInfo {
                        factor: f as u8,
                        exp: -1,
                    });
                    inverse_letter.push((first_code + 1) as Letter);
                    inverse_letter.push(first_code as Letter);
                }
                Some(n) => {
                    for j in 1..*n {
                        letters.push(LetterInfo {
                            factor: f as u8,
                            exp: j as i32,
                        });
                        inverse_letter.push((first_code + (*n - j) as usize - 1) as Letter);
                    }
                }
            }
            if letters.len() > 250 {
                return Err(Error::InvalidGroup("alphabet too large".into()));
            }
            factors.push(Factor {
                name: name.clone(),
                order: *order,
                first_code: first_code as Letter,
            });
        }

        let fin_table = match table {
            None => vec![vec![0u8]],
            Some(t) => validate_finite_table(&t)?,
        };
        let q = fin_table.len();
        let fin_inverse = (0..q)
            .map(|k| {
                (0..q)
                    .find(|&j| fin_table[k][j] == 0)
                    .map(|j| j as u8)
                    .ok_or_else(|| Error::InvalidGroup("finite table without inverses".into()))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut group = Group {
            spec: spec.clone(),
            factors,
            letters,
            inverse_letter,
            fin_table,
            fin_inverse,
            generators: Vec::new(),
            step_cost: Vec::new(),
            fin_cost: Vec::new(),
        };

        let mut generators = Vec::new();
        for s in &spec.generators {
            let g = group.parse_element(s)?;
            if g.word.len() > 1 {
                return Err(Error::InvalidGroup(format!(
                    "generator {s} moves more than one letter in the base"
                )));
            }
            if g.is_identity() {
                return Err(Error::InvalidGroup(format!("generator {s} is the identity")));
            }
            if generators.contains(&g) {
                return Err(Error::InvalidGroup(format!("duplicate generator {s}")));
            }
            generators.push(g);
        }
        for g in &generators {
            let gi = group.inv(g);
            if !generators.contains(&gi) {
                return Err(Error::InvalidGroup(format!(
                    "generating set is not symmetric: inverse of {} missing",
                    group.display(g)
                )));
            }
        }
        group.generators = generators;
        group.compute_metric_tables()?;
        Ok(group)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    /// Order of the finite direct factor (1 when absent).
    pub fn finite_order(&self) -> usize {
        self.fin_table.len()
    }

    pub fn alphabet_len(&self) -> usize {
        self.letters.len()
    }

    pub fn identity(&self) -> Element {
        Element::identity()
    }

    /// The element `(l, k)` made of a single letter and a finite component.
    pub fn letter_element(&self, l: Letter, k: usize) -> Element {
        let mut word = Word::new();
        word.push(l);
        Element { word, fin: k as u8 }
    }

    pub fn finite_element(&self, k: usize) -> Element {
        Element {
            word: Word::new(),
            fin: k as u8,
        }
    }

    pub fn inverse_letter(&self, l: Letter) -> Letter {
        self.inverse_letter[l as usize]
    }

    pub fn fin_mul(&self, a: usize, b: usize) -> usize {
        self.fin_table[a][b] as usize
    }

    pub fn fin_inv(&self, a: usize) -> usize {
        self.fin_inverse[a] as usize
    }

    /// Appends a letter to a normal-form word, reducing at the junction.
    pub fn push_letter(&self, word: &mut Word, l: Letter) {
        let Some(&last) = word.last() else {
            word.push(l);
            return;
        };
        let a = self.letters[last as usize];
        let b = self.letters[l as usize];
        if a.factor != b.factor {
            word.push(l);
            return;
        }
        let factor = &self.factors[a.factor as usize];
        match factor.order {
            None => {
                if a.exp == -b.exp {
                    word.pop();
                } else {
                    word.push(l);
                }
            }
            Some(n) => {
                word.pop();
                let j = (a.exp + b.exp).rem_euclid(n as i32);
                if j != 0 {
                    word.push(factor.first_code + (j - 1) as u8);
                }
            }
        }
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        let mut word = x.word.clone();
        for &l in &y.word {
            self.push_letter(&mut word, l);
        }
        Element {
            word,
            fin: self.fin_table[x.fin as usize][y.fin as usize],
        }
    }

    /// In-place right multiplication `x <- x * g`.
    pub fn mul_assign(&self, x: &mut Element, g: &Element) {
        for &l in &g.word {
            self.push_letter(&mut x.word, l);
        }
        x.fin = self.fin_table[x.fin as usize][g.fin as usize];
    }

    pub fn inv(&self, x: &Element) -> Element {
        Element {
            word: x
                .word
                .iter()
                .rev()
                .map(|&l| self.inverse_letter[l as usize])
                .collect(),
            fin: self.fin_inverse[x.fin as usize],
        }
    }

    /// `x^{-1} y`.
    pub fn between(&self, x: &Element, y: &Element) -> Element {
        let mut word = Word::new();
        for &l in x.word.iter().rev() {
            self.push_letter(&mut word, self.inverse_letter[l as usize]);
        }
        for &l in &y.word {
            self.push_letter(&mut word, l);
        }
        Element {
            word,
            fin: self.fin_table[self.fin_inverse[x.fin as usize] as usize][y.fin as usize],
        }
    }

    /// Reduces a word given as a list of symbols to normal form.
    pub fn normal_form<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Element> {
        let mut x = Element::identity();
        for s in symbols {
            let g = self.parse_element(s.as_ref())?;
            self.mul_assign(&mut x, &g);
        }
        Ok(x)
    }

    /// Parses a whitespace-separated word such as `"a b a^-1"` or `"(a,1) (b^-1,0)"`.
    pub fn word(&self, text: &str) -> Result<Element> {
        let tokens = tokenize(text)?;
        self.normal_form(&tokens)
    }

    /// Parses a single symbol: `e`, `a`, `a^-1`, `A`, `c^2`, or `(w,k)`.
    pub fn parse_element(&self, sym: &str) -> Result<Element> {
        let sym = sym.trim();
        if let Some(inner) = sym.strip_prefix('(') {
            let inner = inner
                .strip_suffix(')')
                .ok_or_else(|| Error::Malformed(format!("unbalanced parenthesis in {sym:?}")))?;
            let (base, fin) = inner
                .rsplit_once(',')
                .ok_or_else(|| Error::Malformed(format!("expected (word,k) in {sym:?}")))?;
            let k: usize = fin
                .trim()
                .parse()
                .map_err(|_| Error::Malformed(format!("bad finite component in {sym:?}")))?;
            if k >= self.finite_order() {
                return Err(Error::Malformed(format!(
                    "finite component {k} out of range in {sym:?}"
                )));
            }
            let mut x = Element::identity();
            for t in base.split_whitespace() {
                let g = self.parse_base_symbol(t)?;
                self.mul_assign(&mut x, &g);
            }
            x.fin = self.fin_table[x.fin as usize][k];
            return Ok(x);
        }
        self.parse_base_symbol(sym)
    }

    fn parse_base_symbol(&self, sym: &str) -> Result<Element> {
        if sym == "e" {
            return Ok(Element::identity());
        }
        let (name, power) = match sym.split_once('^') {
            Some((n, p)) => {
                let p: i64 = p
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad exponent in {sym:?}")))?;
                (n, p)
            }
            None => (sym, 1),
        };
        let (f, power) = match self.factors.iter().position(|f| f.name == name) {
            Some(f) => (f, power),
            None => {
                // Upper-case single letters denote inverses.
                let lower = name.to_lowercase();
                match self.factors.iter().position(|f| f.name == lower) {
                    Some(f) if name != lower && name.chars().count() == 1 => (f, -power),
                    _ => return Err(Error::Malformed(format!("unknown symbol {sym:?}"))),
                }
            }
        };
        let factor = &self.factors[f];
        let mut x = Element::identity();
        match factor.order {
            None => {
                let l = if power > 0 {
                    factor.first_code
                } else {
                    factor.first_code + 1
                };
                for _ in 0..power.unsigned_abs() {
                    self.push_letter(&mut x.word, l);
                }
            }
            Some(n) => {
                let j = power.rem_euclid(n as i64);
                if j != 0 {
                    x.word.push(factor.first_code + (j - 1) as u8);
                }
            }
        }
        Ok(x)
    }

    pub fn letter_name(&self, l: Letter) -> String {
        let info = self.letters[l as usize];
        let name = &self.factors[info.factor as usize].name;
        if info.exp == 1 {
            name.clone()
        } else {
            format!("{name}^{}", info.exp)
        }
    }

    pub fn display(&self, x: &Element) -> String {
        let base = if x.word.is_empty() {
            "e".to_string()
        } else {
            x.word
                .iter()
                .map(|&l| self.letter_name(l))
                .collect::<Vec<_>>()
                .join(" ")
        };
        if self.finite_order() > 1 {
            format!("({base},{})", x.fin)
        } else {
            base
        }
    }

    /// Word length `d(e, x)` with respect to the generating set.
    pub fn length(&self, x: &Element) -> u32 {
        if self.fin_table.len() == 1 {
            return x
                .word
                .iter()
                .map(|&l| self.step_cost[l as usize][0])
                .sum();
        }
        if x.word.is_empty() {
            return self.fin_cost[x.fin as usize];
        }
        self.word_costs(&x.word)[x.fin as usize]
    }

    /// `costs[k]` is the length of the element with base word `word` and finite part `k`.
    fn word_costs(&self, word: &[Letter]) -> SmallVec<[u32; 8]> {
        let q = self.fin_table.len();
        let mut cost: SmallVec<[u32; 8]> = SmallVec::from_elem(INF, q);
        cost[0] = 0;
        let mut next: SmallVec<[u32; 8]> = SmallVec::from_elem(INF, q);
        for &l in word {
            let step = &self.step_cost[l as usize];
            for c in next.iter_mut() {
                *c = INF;
            }
            for (k, &ck) in cost.iter().enumerate() {
                if ck >= INF {
                    continue;
                }
                let kinv = self.fin_inverse[k] as usize;
                for (k2, n2) in next.iter_mut().enumerate() {
                    let kappa = self.fin_table[kinv][k2] as usize;
                    let c = ck + step[kappa];
                    if c < *n2 {
                        *n2 = c;
                    }
                }
            }
            std::mem::swap(&mut cost, &mut next);
        }
        cost
    }

    /// Length profile of a normal-form tail, up to an additive constant.
    ///
    /// For `y = p·t` with `t` untouched by left multiplication by `x`, the
    /// length of `x·y` depends on `t` only through this profile.
    pub fn tail_profile(&self, tail: &[Letter]) -> SmallVec<[u32; 8]> {
        if self.fin_table.len() == 1 {
            return SmallVec::from_elem(0, 1);
        }
        let mut c = self.word_costs(tail);
        let m = c.iter().copied().min().unwrap_or(0);
        for v in c.iter_mut() {
            *v -= m;
        }
        c
    }

    pub fn dist(&self, x: &Element, y: &Element) -> u32 {
        self.length(&self.between(x, y))
    }

    /// Twice the Gromov product `<x|y>_z`, an integer.
    pub fn gromov2(&self, x: &Element, y: &Element, z: &Element) -> i64 {
        self.dist(x, z) as i64 + self.dist(y, z) as i64 - self.dist(x, y) as i64
    }

    /// Gromov product `<x|y>_z` (a half-integer).
    pub fn gromov_product(&self, x: &Element, y: &Element, z: &Element) -> f64 {
        self.gromov2(x, y, z) as f64 / 2.0
    }

    /// Plain breadth-first search distance from the identity, capped at `radius`.
    ///
    /// Used to cross-check [`Group::length`]; returns `None` beyond the cap.
    pub fn bfs_length(&self, target: &Element, radius: u32) -> Option<u32> {
        let mut seen: FxHashMap<Element, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        seen.insert(Element::identity(), 0);
        queue.push_back(Element::identity());
        while let Some(x) = queue.pop_front() {
            let d = seen[&x];
            if &x == target {
                return Some(d);
            }
            if d >= radius {
                continue;
            }
            for s in &self.generators {
                let y = self.mul(&x, s);
                if !seen.contains_key(&y) {
                    seen.insert(y.clone(), d + 1);
                    queue.push_back(y);
                }
            }
        }
        None
    }

    fn compute_metric_tables(&mut self) -> Result<()> {
        let q = self.fin_table.len();
        let n_letters = self.letters.len();
        let mut step_cost = vec![vec![INF; q]; n_letters];
        let mut fin_cost = vec![INF; q];
        let mut remaining = n_letters * q + q;

        let mut seen: FxHashMap<Element, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        seen.insert(Element::identity(), 0);
        queue.push_back(Element::identity());
        while let Some(x) = queue.pop_front() {
            let d = seen[&x];
            match x.word.len() {
                0 if fin_cost[x.fin as usize] == INF => {
                    fin_cost[x.fin as usize] = d;
                    remaining -= 1;
                }
                1 if step_cost[x.word[0] as usize][x.fin as usize] == INF => {
                    step_cost[x.word[0] as usize][x.fin as usize] = d;
                    remaining -= 1;
                }
                _ => {}
            }
            if remaining == 0 {
                break;
            }
            if d >= BFS_RADIUS_CAP || seen.len() > BFS_VISIT_CAP {
                return Err(Error::InvalidGroup(
                    "generating set does not generate the group (search budget exhausted)".into(),
                ));
            }
            for s in &self.generators {
                let y = self.mul(&x, s);
                if !seen.contains_key(&y) {
                    seen.insert(y.clone(), d + 1);
                    queue.push_back(y);
                }
            }
        }
        if remaining > 0 {
            return Err(Error::InvalidGroup(
                "generating set does not generate the group".into(),
            ));
        }
        self.step_cost = step_cost;
        self.fin_cost = fin_cost;
        Ok(())
    }

    /// Builds the ball of the given radius around the identity.
    pub fn ball(&self, radius: usize) -> Ball {
        Ball::new(self, radius)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let factors: Vec<String> = self
            .factors
            .iter()
            .map(|f| match f.order {
                None => "Z".to_string(),
                Some(n) => format!("Z/{n}"),
            })
            .collect();
        write!(f, "{}", factors.join(" * "))?;
        if self.finite_order() > 1 {
            write!(f, " x K(|K|={})", self.finite_order())?;
        }
        Ok(())
    }
}

fn validate_finite_table(t: &[Vec<usize>]) -> Result<Vec<Vec<u8>>> {
    let q = t.len();
    if q == 0 || q > 64 {
        return Err(Error::InvalidGroup(format!("finite factor of order {q}")));
    }
    if t.iter().any(|row| row.len() != q || row.iter().any(|&v| v >= q)) {
        return Err(Error::InvalidGroup("multiplication table is not square".into()));
    }
    for (k, row) in t.iter().enumerate() {
        if t[0][k] != k || row[0] != k {
            return Err(Error::InvalidGroup(
                "index 0 must be the identity of the finite factor".into(),
            ));
        }
        let mut seen = vec![false; q];
        for &v in row {
            if seen[v] {
                return Err(Error::InvalidGroup("table row is not a permutation".into()));
            }
            seen[v] = true;
        }
    }
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                if t[t[a][b]][c] != t[a][t[b][c]] {
                    return Err(Error::InvalidGroup(
                        "multiplication table is not associative".into(),
                    ));
                }
            }
        }
    }
    Ok(t.iter()
        .map(|row| row.iter().map(|&v| v as u8).collect())
        .collect())
}

/// Splits a word into symbols, keeping parenthesized pairs together.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '(' => {
                if depth == 0 && !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                    cur.clear();
                }
                depth += 1;
                cur.push(c);
            }
            ')' => {
                if depth == 0 {
                    return Err(Error::Malformed(format!("unbalanced ')' in {text:?}")));
                }
                depth -= 1;
                cur.push(c);
                if depth == 0 {
                    out.push(cur.trim().to_string());
                    cur.clear();
                }
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                }
                cur.clear();
            }
            c => cur.push(c),
        }
    }
    if depth != 0 {
        return Err(Error::Malformed(format!("unbalanced '(' in {text:?}")));
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Group {
        Group::new(GroupSpec::free_group(2)).unwrap()
    }

    #[test]
    fn free_reduction() {
        let g = f2();
        let x = g.normal_form(&["a", "b", "b^-1"]).unwrap();
        assert_eq!(x, g.word("a").unwrap());
        assert_eq!(g.display(&x), "a");
        // idempotent
        let again = g.word(&g.display(&x)).unwrap();
        assert_eq!(again, x);
    }

    #[test]
    fn cyclic_order_relation() {
        let spec = GroupSpec {
            names: Some(vec!["c".into(), "d".into()]),
            ..GroupSpec::free_product(&[3, 2])
        };
        let spec = GroupSpec {
            generators: vec!["c".into(), "c^-1".into(), "d".into()],
            ..spec
        };
        let g = Group::new(spec).unwrap();
        assert!(g.normal_form(&["c", "c", "c"]).unwrap().is_identity());
        assert_eq!(g.display(&g.word("c c").unwrap()), "c^2");
        assert_eq!(g.word("c c").unwrap(), g.word("c^-1").unwrap());
    }

    #[test]
    fn product_componentwise_identity() {
        let g = Group::new(GroupSpec::free_times_z2()).unwrap();
        let x = g.normal_form(&["(a,1)", "(a^-1,1)"]).unwrap();
        assert!(x.is_identity());
        assert_eq!(g.display(&x), "(e,0)");
    }

    #[test]
    fn unknown_symbol_is_malformed() {
        let g = f2();
        assert!(matches!(g.word("a z"), Err(Error::Malformed(_))));
        assert!(matches!(g.word("(a,1"), Err(Error::Malformed(_))));
    }

    #[test]
    fn uppercase_is_inverse() {
        let g = f2();
        assert_eq!(g.word("A").unwrap(), g.word("a^-1").unwrap());
        assert!(g.word("a A").unwrap().is_identity());
    }

    #[test]
    fn distances_match_examples() {
        let g = f2();
        let e = g.identity();
        assert_eq!(g.dist(&e, &g.word("a b a^-1").unwrap()), 3);
        let x = g.word("a b").unwrap();
        assert_eq!(g.dist(&x, &x), 0);

        let p = Group::new(GroupSpec::free_times_z2()).unwrap();
        let a0 = p.word("(a,0)").unwrap();
        assert_eq!(p.dist(&p.identity(), &a0), 2);
        assert_eq!(p.bfs_length(&a0, 4), Some(2));
    }

    #[test]
    fn gromov_examples() {
        let g = f2();
        let e = g.identity();
        let x = g.word("a b").unwrap();
        let y = g.word("a b^-1").unwrap();
        assert_eq!(g.gromov_product(&x, &y, &e), 1.0);
        assert_eq!(g.gromov_product(&x, &x, &e), 2.0);
        let x = g.word("a a a").unwrap();
        let y = g.word("a a b").unwrap();
        assert_eq!(g.gromov_product(&x, &y, &e), 2.0);
    }

    #[test]
    fn rejects_elementary_and_asymmetric() {
        assert!(Group::new(GroupSpec::free_product(&[2, 2])).is_err());
        assert!(Group::new(GroupSpec::free_group(1)).is_err());
        let mut spec = GroupSpec::free_group(2);
        spec.generators.pop();
        assert!(matches!(Group::new(spec), Err(Error::InvalidGroup(_))));
    }

    #[test]
    fn rejects_non_generating_set() {
        let mut spec = GroupSpec::free_group(2);
        spec.generators = vec!["a".into(), "a^-1".into()];
        assert!(Group::new(spec).is_err());
    }

    #[test]
    fn length_matches_bfs_on_small_ball() {
        for spec in [
            GroupSpec::free_group(2),
            GroupSpec::free_product(&[3, 3]),
            GroupSpec::free_product(&[2, 3]),
            GroupSpec::free_times_z2(),
        ] {
            let g = Group::new(spec).unwrap();
            let ball = g.ball(5);
            for (i, x) in ball.elements().iter().enumerate() {
                assert_eq!(g.length(x) as usize, ball.radius_of(i));
            }
        }
    }
}
