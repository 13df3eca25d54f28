#![allow(dead_code)]

use std::sync::OnceLock;

use hyperwalk::boundary::BoundaryAtlas;
use hyperwalk::green::GreenFunction;
use hyperwalk::group::{Element, Group, GroupSpec};
use hyperwalk::measure::StepMeasure;
use proptest::test_runner::{Config, RngSeed};

pub fn proptest_config(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

/// A group with a measure on it, and the name used in messages.
pub struct Case {
    pub name: &'static str,
    pub group: Group,
    pub mu: StepMeasure,
}

fn case(name: &'static str, spec: GroupSpec, weights: Option<&[(&str, f64)]>) -> Case {
    let group = Group::new(spec).unwrap();
    let mu = match weights {
        None => StepMeasure::uniform_on_generators(&group),
        Some(w) => {
            let support = w.iter().map(|(s, _)| group.word(s).unwrap()).collect();
            StepMeasure::new(support, w.iter().map(|p| p.1).collect()).unwrap()
        }
    };
    mu.require_admissible(&group).unwrap();
    Case { name, group, mu }
}

/// Uniform on the sheet-changing elements, over the product word metric.
pub const EXAMPLE_MEASURE: [(&str, f64); 5] =
    [("(e,1)", 0.2), ("(a,1)", 0.2), ("(a^-1,1)", 0.2), ("(b,1)", 0.2), ("(b^-1,1)", 0.2)];

/// The groups and measures exercised throughout the suites.
pub fn cases() -> &'static [Case] {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        vec![
            case("F2 simple", GroupSpec::free_group(2), None),
            case(
                "F2 biased",
                GroupSpec::free_group(2),
                Some(&[("a", 0.4), ("a^-1", 0.1), ("b", 0.3), ("b^-1", 0.2)]),
            ),
            case(
                "F2xZ2 example",
                GroupSpec::free_times_z2_standard(),
                Some(&EXAMPLE_MEASURE),
            ),
            case("F2xZ2 sheet-changing generators", GroupSpec::free_times_z2(), None),
            case(
                "Z3*Z2*Z2",
                GroupSpec::free_product(&[3, 2, 2]),
                Some(&[("a", 0.3), ("a^-1", 0.2), ("b", 0.25), ("c", 0.25)]),
            ),
        ]
    })
}

pub fn f2() -> &'static Case {
    &cases()[0]
}

pub fn example() -> &'static Case {
    &cases()[2]
}

/// Minimal-component atlases at precision 4, one per case.
pub fn atlas(i: usize) -> &'static BoundaryAtlas {
    static ATLASES: OnceLock<Vec<OnceLock<BoundaryAtlas>>> = OnceLock::new();
    let cells = ATLASES.get_or_init(|| cases().iter().map(|_| OnceLock::new()).collect());
    cells[i].get_or_init(|| {
        let c = &cases()[i];
        BoundaryAtlas::new(&c.group, 4)
            .unwrap()
            .minimal_component(0, c.mu.support())
            .unwrap()
    })
}

pub fn green(i: usize) -> &'static GreenFunction {
    static GREENS: OnceLock<Vec<OnceLock<GreenFunction>>> = OnceLock::new();
    let cells = GREENS.get_or_init(|| cases().iter().map(|_| OnceLock::new()).collect());
    cells[i].get_or_init(|| {
        let c = &cases()[i];
        GreenFunction::new(&c.group, &c.mu, 1e-13).unwrap()
    })
}

/// Product of generators by index.
pub fn word(group: &Group, letters: &[usize]) -> Element {
    let gens = group.generators();
    let mut x = Element::identity();
    for &i in letters {
        group.mul_assign(&mut x, &gens[i % gens.len()]);
    }
    x
}

/// `d(gx, gy) = d(x, y)`.
pub fn left_invariant(group: &Group, g: &Element, x: &Element, y: &Element) -> bool {
    group.dist(&group.mul(g, x), &group.mul(g, y)) == group.dist(x, y)
}

/// `c_B(g₁g₂, ξ) = c_B(g₁, g₂ξ) + c_B(g₂, ξ)`; `None` when some norm exceeds the precision.
pub fn cocycle_identity(atlas: &BoundaryAtlas, g1: &Element, g2: &Element, xi: usize) -> Option<bool> {
    let group = atlas.group();
    let n = atlas.precision() as u32;
    let g = group.mul(g1, g2);
    if [g1, g2, &g].iter().any(|h| group.length(h) > n) {
        return None;
    }
    let moved = atlas.act(g2, xi).ok()?;
    let lhs = atlas.cocycle(&g, xi).ok()?;
    let rhs = atlas.cocycle(g1, moved).ok()? + atlas.cocycle(g2, xi).ok()?;
    Some(lhs == rhs)
}

/// `e^{-C d(x,y)} ≤ G(x,z)/G(y,z) ≤ e^{C d(x,y)}`, with a relative slack for rounding.
pub fn harnack_holds(green: &GreenFunction, c: f64, x: &Element, y: &Element, z: &Element) -> bool {
    let d = green.group().dist(x, y) as f64;
    let r = green.g(x, z) / green.g(y, z);
    let bound = (c * d).exp() * (1.0 + 1e-12);
    r <= bound && r >= 1.0 / bound
}

/// Sheet indicator `h_ξ((e,1))` on the product example.
pub fn sheet_indicator(atlas: &BoundaryAtlas) -> Vec<f64> {
    let flip = atlas.group().word("(e,1)").unwrap();
    (0..atlas.len()).map(|xi| atlas.h(xi, &flip).unwrap() as f64).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
