//! Acceptance criteria 1–11. Each test prints one PASS/FAIL line followed by
//! the individual checks.

mod common;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::*;
use hyperwalk::boundary::BoundaryAtlas;
use hyperwalk::config::RunConfig;
use hyperwalk::estimators::{self, endpoint_lengths, entropy_exact_seq, ks_normal, WalkConfig};
use hyperwalk::green::{harnack_constant, GreenFunction};
use hyperwalk::group::{estimate_delta, Element, Group, GroupSpec};
use hyperwalk::measure::MeasureSpec;
use hyperwalk::martin::{strong_ancona_trend, MartinSetup};
use hyperwalk::pipeline::{self, Context};
use hyperwalk::spectral::{self, TransferMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Criteria run one at a time so that their timings are not shared.
static SERIAL: Mutex<()> = Mutex::new(());

struct Criterion {
    number: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
    start: Instant,
}

impl Criterion {
    fn new(number: u32, title: &'static str) -> Self {
        Criterion {
            number,
            title,
            checks: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn within(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.check(format!("{what}: {value:.10} vs {target:.10} (tol {tol:e})"), ok);
    }

    fn runtime_below(&mut self, limit: Duration) {
        let t = self.start.elapsed();
        self.check(format!("runtime {:.2?} < {:?}", t, limit), t < limit);
    }

    fn finish(self) {
        let ok = self.checks.iter().all(|c| c.1);
        println!(
            "criterion {:>2} {}: {}",
            self.number,
            if ok { "PASS" } else { "FAIL" },
            self.title
        );
        for (what, pass) in &self.checks {
            println!("    [{}] {what}", if *pass { "ok" } else { "xx" });
        }
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
        assert!(ok, "criterion {} failed: {failed:?}", self.number);
    }
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn f2_setup() -> (Group, hyperwalk::measure::StepMeasure, BoundaryAtlas) {
    let c = f2();
    let atlas = BoundaryAtlas::new(&c.group, 4)
        .unwrap()
        .minimal_component(0, c.mu.support())
        .unwrap();
    (c.group.clone(), c.mu.clone(), atlas)
}

#[test]
fn criterion_01_free_group_drift() {
    let _g = serial();
    let mut cr = Criterion::new(1, "F2 simple walk drift");
    let (group, mu, atlas) = f2_setup();
    let tm = TransferMatrix::build(&mu, &atlas, 0.0).unwrap();
    let rep = spectral::report_from(&tm).unwrap();
    cr.within("drift_spectral", spectral::drift_spectral(&tm, &rep.stationary), 0.5, 1e-8);
    let cfg = WalkConfig { steps: 10_000, samples: 1_000, seed: 1 };
    let mc = estimators::drift_mc(&group, &mu, &cfg).unwrap();
    cr.within("drift_mc (3 SE)", mc.estimate, 0.5, 3.0 * mc.std_error);
    cr.runtime_below(Duration::from_secs(10));
    cr.finish();
}

#[test]
fn criterion_02_free_group_entropy() {
    let _g = serial();
    let mut cr = Criterion::new(2, "F2 simple walk entropy");
    let target = 3f64.ln() / 2.0;
    let (group, mu, atlas) = f2_setup();
    let tm = TransferMatrix::build(&mu, &atlas, 0.0).unwrap();
    let rep = spectral::report_from(&tm).unwrap();
    let green = GreenFunction::new(&group, &mu, 1e-13).unwrap();
    let setup = MartinSetup::new(&atlas, &green, 4, 8).unwrap();
    let (k, _) = setup.fixed_point(1e-10).unwrap();
    let h = spectral::entropy_spectral(&mu, &atlas, &rep.stationary, |x, xi| {
        setup.lookup(&k, x, xi).ok_or(hyperwalk::Error::Domain("outside the domain".into()))
    })
    .unwrap();
    cr.within("entropy_spectral (fixed-point kernel)", h, target, 1e-4);
    let rows = entropy_exact_seq(&group, &mu, 12).unwrap();
    let last = rows.last().unwrap();
    cr.within(&format!("entropy_exact_seq difference H_{} - H_{}", last.n + 1, last.n), last.difference, target, 0.01);
    cr.runtime_below(Duration::from_secs(60));
    cr.finish();
}

#[test]
fn criterion_03_free_group_variance() {
    let _g = serial();
    let mut cr = Criterion::new(3, "F2 simple walk CLT variance");
    let (group, mu, atlas) = f2_setup();
    let tm = TransferMatrix::build(&mu, &atlas, 0.0).unwrap();
    let rep = spectral::report_from(&tm).unwrap();
    let sol = spectral::poisson_solve(&tm, &rep.stationary).unwrap();
    let var = spectral::variance_spectral(&tm, &rep.stationary, &sol).unwrap();
    cr.within("variance_spectral", var, 0.75, 1e-6);
    let fd = spectral::clt_params_fd(&mu, &atlas, &rep.stationary, 1e-3).unwrap();
    cr.within("clt_params_fd variance", fd.variance, 0.75, 1e-4);
    let cfg = WalkConfig { steps: 2000, samples: 10_000, seed: 3 };
    let mc = estimators::variance_mc(&group, &mu, &cfg).unwrap();
    cr.within("variance_mc (5%)", mc.estimate, 0.75, 0.05 * 0.75);
    cr.runtime_below(Duration::from_secs(60));
    cr.finish();
}

/// Radial birth–death chain of a walk that moves in the free factor with
/// probability `p_move` (uniformly among `2k` generators) and otherwise
/// changes only the finite coordinate.
struct BirthDeath {
    up: f64,
    down: f64,
    branching: f64,
}

impl BirthDeath {
    fn drift(&self) -> f64 {
        self.up - self.down
    }

    fn variance(&self) -> f64 {
        self.up + self.down - self.drift().powi(2)
    }

    fn entropy(&self) -> f64 {
        self.drift() * self.branching.ln()
    }
}

#[test]
fn criterion_04_product_example() {
    let _g = serial();
    let mut cr = Criterion::new(4, "F2 x Z/2 example: peripheral spectrum and oracle values");
    let c = example();
    let atlas = atlas(2);
    let tm = TransferMatrix::build(&c.mu, atlas, 0.0).unwrap();
    let rep = spectral::report_from(&tm).unwrap();
    let near = |z: [f64; 2], re: f64| ((z[0] - re).powi(2) + z[1].powi(2)).sqrt() < 1e-6;
    let at_one = rep.eigenvalues.iter().filter(|z| near(**z, 1.0)).count();
    let at_minus = rep.eigenvalues.iter().filter(|z| near(**z, -1.0)).count();
    cr.check(
        format!("peripheral spectrum {:?}", rep.peripheral),
        rep.peripheral.len() == 2 && at_one == 1 && at_minus == 1,
    );
    let next = rep.eigenvalues[2];
    let next_mod = (next[0].powi(2) + next[1].powi(2)).sqrt();
    cr.check(format!("next modulus {next_mod:.6} < 1 - 1e-3"), next_mod < 1.0 - 1e-3);
    let u = spectral::real_eigenvector(&tm.real(), -1.0);
    let cos = cosine(&u, &sheet_indicator(atlas)).abs();
    cr.check(format!("cosine of the -1 eigenfunction with the sheet indicator {cos:.12}"), cos > 0.999);

    // Oracle from the measure: which support points move the free factor.
    let p_move: f64 = c.mu.iter().filter(|(g, _)| !g.word().is_empty()).map(|(_, w)| w).sum();
    let bd = BirthDeath {
        up: p_move * 3.0 / 4.0,
        down: p_move / 4.0,
        branching: 3.0,
    };
    cr.within("oracle drift", bd.drift(), 0.4, 1e-12);
    cr.within("oracle variance", bd.variance(), 0.64, 1e-12);
    cr.within("oracle entropy", bd.entropy(), 0.4 * 3f64.ln(), 1e-12);
    let cfg = WalkConfig { steps: 10_000, samples: 1_000, seed: 4 };
    let mc = estimators::drift_mc(&c.group, &c.mu, &cfg).unwrap();
    cr.within("oracle drift vs drift_mc (3 SE)", bd.drift(), mc.estimate, 3.0 * mc.std_error);
    let cfg = WalkConfig { steps: 2000, samples: 4000, seed: 5 };
    let mc = estimators::variance_mc(&c.group, &c.mu, &cfg).unwrap();
    cr.within("oracle variance vs variance_mc (3 SE)", bd.variance(), mc.estimate, 3.0 * mc.std_error);

    let nu = &rep.stationary;
    cr.within("drift_spectral", spectral::drift_spectral(&tm, nu), bd.drift(), 1e-4);
    let sol = spectral::poisson_solve(&tm, nu).unwrap();
    cr.within("variance_spectral", spectral::variance_spectral(&tm, nu, &sol).unwrap(), bd.variance(), 1e-4);
    let mut cfg = RunConfig::for_group(GroupSpec::free_times_z2_standard());
    cfg.measure = Some(MeasureSpec {
        support: EXAMPLE_MEASURE.iter().map(|(s, _)| s.to_string()).collect(),
        weights: EXAMPLE_MEASURE.iter().map(|p| p.1).collect(),
    });
    let ctx = Context::new(&cfg).unwrap();
    let h = ctx.entropy(nu).unwrap();
    cr.within(&format!("entropy_spectral ({:?} kernel)", h.kernel), h.entropy, bd.entropy(), 1e-4);
    cr.finish();
}

#[test]
fn criterion_05_green_oracle() {
    let _g = serial();
    let mut cr = Criterion::new(5, "Green function and Ancona ratio on F2");
    let c = f2();
    let coarse = GreenFunction::new(&c.group, &c.mu, 1e-8).unwrap();
    let e = Element::identity();
    let a = c.group.word("a").unwrap();
    for (name, y, target) in [("G(e,e)", &e, 1.5), ("G(e,a)", &a, 0.5)] {
        let v = coarse.value(&e, y);
        cr.check(
            format!("{name} = {:.12}, error {:.2e} within tail bound {:.2e} <= 1e-8", v.value, (v.value - target).abs(), v.tail_bound),
            (v.value - target).abs() <= v.tail_bound && v.tail_bound <= 1e-8,
        );
    }
    let g = green(0);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.gen_range(2..10);
        let letters: Vec<usize> = (0..len).map(|_| rng.gen_range(0..4)).collect();
        let y = word(&c.group, &letters);
        let n = c.group.length(&y) as usize;
        if n < 2 {
            continue;
        }
        // A point on the geodesic from e to y.
        let cut = rng.gen_range(1..n);
        let z = y.word()[..cut]
            .iter()
            .fold(c.group.identity(), |acc, &l| c.group.mul(&acc, &c.group.letter_element(l, 0)));
        worst = worst.max((g.ancona_ratio(&e, &y, &z, 0.0).unwrap() - 2.0 / 3.0).abs());
    }
    cr.check(format!("on-geodesic Ancona ratio deviation from 2/3: {worst:.2e} < 1e-8"), worst < 1e-8);
    cr.finish();
}

#[test]
fn criterion_06_martin_fixed_point() {
    let _g = serial();
    let mut cr = Criterion::new(6, "Martin kernel fixed point on F2");
    let (group, mu, atlas) = f2_setup();
    let green = GreenFunction::new(&group, &mu, 1e-13).unwrap();
    let setup = MartinSetup::new(&atlas, &green, 4, 8).unwrap();
    let eps = 1e-10;
    let (k, report) = setup.fixed_point(eps).unwrap();
    cr.check(format!("fitted rate {:.3e} < 0.9 after {} iterations", report.rate, report.iterations), report.rate < 0.9);
    let mut worst: f64 = 0.0;
    let mut stored = 0;
    for xi in 0..atlas.len() {
        let y = atlas.deep_witness(xi, 40).unwrap();
        let ny = group.length(&y) as f64;
        for x in setup.domain(xi) {
            let h = group.dist(x, &y) as f64 - ny;
            let tree = 3f64.powf(-h);
            worst = worst.max((setup.lookup(&k, x, xi).unwrap() - tree).abs());
            stored += 1;
        }
    }
    cr.check(format!("max |K - 3^(-h)| over {stored} stored pairs: {worst:.2e} < 1e-5"), worst < 1e-5);
    let start = setup.field_from(|x, xi| {
        green.g(x, &Element::identity()) * (2.0 + ((xi * 7 + group.length(x) as usize) as f64).cos())
    });
    let (k2, _) = setup.fixed_point_from(start, eps, 500).unwrap();
    let d = setup.weighted_distance(&k, &k2);
    cr.check(format!("two initializations differ by {d:.2e} <= 2 eps"), d <= 2.0 * eps);
    cr.finish();
}

#[test]
fn criterion_07_strong_ancona_trend() {
    let _g = serial();
    let mut cr = Criterion::new(7, "strong Ancona deviations decay with distance on F2 x Z/2");
    for i in [2usize, 3] {
        let trend = strong_ancona_trend(green(i), &pipeline::ANCONA_LENGTHS, 50, 7).unwrap();
        cr.check(
            format!("{}: slope {:.4}, correlation {:.4}", cases()[i].name, trend.slope, trend.correlation),
            trend.slope < 0.0 && trend.correlation < -0.9,
        );
    }
    cr.finish();
}

#[test]
fn criterion_08_doeblin_fortet() {
    let _g = serial();
    let mut cr = Criterion::new(8, "Doeblin-Fortet inequality with rho < 1 for some n <= 20");
    for (i, c) in cases().iter().enumerate() {
        let tm = TransferMatrix::build(&c.mu, atlas(i), 0.0).unwrap();
        let df = spectral::doeblin_fortet(&tm, atlas(i), 0.5, 20, 8);
        let rho = df.n_star.map(|n| df.fits[n - 1].1);
        cr.check(
            format!("{}: n* = {:?}, rho = {:?}", c.name, df.n_star, rho),
            df.n_star.is_some_and(|n| n <= 20) && rho.is_some_and(|r| r < 1.0),
        );
    }
    cr.finish();
}

#[test]
fn criterion_09_empirical_clt() {
    let _g = serial();
    let mut cr = Criterion::new(9, "empirical CLT on F2");
    let c = f2();
    let cfg = WalkConfig { steps: 2000, samples: 100_000, seed: 9 };
    let lengths = endpoint_lengths(&c.group, &c.mu, &cfg, 0..cfg.samples).unwrap();
    let ks = ks_normal(&lengths, cfg.steps, 0.75);
    cr.check(format!("KS distance with sigma^2 = 0.75: {ks:.4} < 0.02"), ks < 0.02);
    let control = ks_normal(&lengths, cfg.steps, 0.25);
    cr.check(format!("negative control with sigma^2 = 0.25: {control:.4} > 0.1"), control > 0.1);
    cr.finish();
}

#[test]
fn criterion_10_smoothness_probe() {
    let _g = serial();
    let mut cr = Criterion::new(10, "smooth dependence along a measure family");
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/f2_sweep.json");
    let cfg = RunConfig::load(&path).unwrap();
    let ctx = Context::new(&cfg).unwrap();
    let rows = pipeline::sweep(&ctx).unwrap();
    cr.check(format!("{} grid points without errors", rows.len()), rows.len() == 11 && rows.iter().all(|r| r.error.is_none()));
    let probe = pipeline::smoothness_probe(&rows, 4).unwrap();
    let limits = [1e-5, 1e-3, 1e-4];
    for (s, lim) in probe.series.iter().zip(limits) {
        cr.check(format!("{} fit residual {:.3e} < {lim:e}", s.name, s.fit_residual), s.fit_residual < lim);
    }
    // The same series with a unit step injected after the midpoint.
    let thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let stepped: Vec<(String, Vec<f64>)> = [
        ("drift", rows.iter().map(|r| r.drift.unwrap()).collect::<Vec<_>>()),
        ("entropy", rows.iter().map(|r| r.entropy.unwrap()).collect()),
        ("variance", rows.iter().map(|r| r.variance.unwrap()).collect()),
    ]
    .into_iter()
    .map(|(n, v)| {
        let v = v.iter().zip(&thetas).map(|(y, t)| y + if *t > 0.25 { 1.0 } else { 0.0 }).collect();
        (n.to_string(), v)
    })
    .collect();
    let control = pipeline::probe_series(&thetas, &stepped, 4).unwrap();
    for (s, lim) in control.series.iter().zip(limits) {
        cr.check(
            format!("{} with a step: residual {:.3e} >= 100 x {lim:e}", s.name, s.fit_residual),
            s.fit_residual >= 100.0 * lim,
        );
    }
    cr.finish();
}

#[test]
fn criterion_11_property_suites() {
    let _g = serial();
    let mut cr = Criterion::new(11, "randomized property suites with fixed seeds");
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let letters = |rng: &mut ChaCha20Rng, max: usize| -> Vec<usize> {
        let n = rng.gen_range(0..=max);
        (0..n).map(|_| rng.gen_range(0..16)).collect()
    };

    let mut cocycle = (0, 0);
    for _ in 0..400 {
        let i = [0usize, 1, 2, 4][rng.gen_range(0..4)];
        let a = atlas(i);
        let (g1, g2) = (word(a.group(), &letters(&mut rng, 2)), word(a.group(), &letters(&mut rng, 2)));
        match cocycle_identity(a, &g1, &g2, rng.gen_range(0..a.len())) {
            Some(true) => cocycle.0 += 1,
            Some(false) => cocycle.1 += 1,
            None => {}
        }
    }
    cr.check(format!("cocycle identity: {} exact, {} violations", cocycle.0, cocycle.1), cocycle.1 == 0 && cocycle.0 > 100);

    let mut stat = 0.0f64;
    let mut poisson = 0.0f64;
    for (i, c) in cases().iter().enumerate() {
        let tm = TransferMatrix::build(&c.mu, atlas(i), 0.0).unwrap();
        let rep = spectral::report_from(&tm).unwrap();
        stat = stat.max(rep.stationarity_residual);
        poisson = poisson.max(spectral::poisson_solve(&tm, &rep.stationary).unwrap().residual);
    }
    cr.check(format!("stationarity residual {stat:.2e} < 1e-10"), stat < 1e-10);
    cr.check(format!("Poisson residual {poisson:.2e} < 1e-10"), poisson < 1e-10);

    let mut harnack = 0;
    for _ in 0..300 {
        let i = rng.gen_range(0..cases().len());
        let c = &cases()[i];
        let constant = harnack_constant(&c.group, &c.mu).unwrap();
        let (x, y, z) = (
            word(&c.group, &letters(&mut rng, 4)),
            word(&c.group, &letters(&mut rng, 4)),
            word(&c.group, &letters(&mut rng, 6)),
        );
        harnack += usize::from(!harnack_holds(green(i), constant, &x, &y, &z));
    }
    cr.check(format!("Harnack bounds: {harnack} violations in 300 triples"), harnack == 0);

    let mut coincide = (0usize, 0usize);
    for _ in 0..150 {
        let i = [0usize, 2, 4][rng.gen_range(0..3)];
        let a = atlas(i);
        let slack = (10.0 * estimate_delta(a.group(), 3).unwrap().delta).ceil() as i32;
        match a.check_coincide(rng.gen_range(0..a.len()), rng.gen_range(0..a.len()), slack) {
            Ok(n) => coincide.0 += n,
            Err(_) => coincide.1 += 1,
        }
    }
    cr.check(format!("Lemma-coincide: {} pairs tested, {} violations", coincide.0, coincide.1), coincide.1 == 0);

    let mut invariance = 0;
    for _ in 0..500 {
        let c = &cases()[rng.gen_range(0..cases().len())];
        let (g, x, y) = (
            word(&c.group, &letters(&mut rng, 8)),
            word(&c.group, &letters(&mut rng, 8)),
            word(&c.group, &letters(&mut rng, 8)),
        );
        invariance += usize::from(!left_invariant(&c.group, &g, &x, &y));
    }
    cr.check(format!("left invariance: {invariance} violations in 500 triples"), invariance == 0);
    cr.finish();
}
