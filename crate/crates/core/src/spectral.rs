//! The transfer operator `L_μ u(ξ) = Σ_g μ(g) u(g·ξ)` on a finite boundary atlas,
//! its perturbation by the Busemann cocycle, and the quantities read off from it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryAtlas;
use crate::error::{Error, Result};
use crate::group::Element;
use crate::measure::StepMeasure;

/// Largest atlas handled by the dense eigen-solver.
pub const MAX_DENSE_DIM: usize = 4096;
/// Eigenvalues with modulus above `1 - PERIPHERAL_TOL` are peripheral.
pub const PERIPHERAL_TOL: f64 = 1e-6;
const SIMPLE_TOL: f64 = 1e-8;

/// One transition of the boundary chain: from `ξ`, apply `g` with probability
/// `μ(g)`, landing at each target with the witness-averaged weight.
#[derive(Clone, Debug)]
struct Move {
    weight: f64,
    cocycle: i32,
    targets: Vec<(usize, f64)>,
}

/// Finite realization of `L_{μ,t}` (row `ξ`, column `ξ'`).
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    dim: usize,
    moves: Vec<Vec<Move>>,
    pub t: f64,
    pub matrix: DMatrix<Complex64>,
}

impl TransferMatrix {
    pub fn build(mu: &StepMeasure, atlas: &BoundaryAtlas, t: f64) -> Result<Self> {
        let group = atlas.group();
        let n = atlas.precision() as u32;
        for g in mu.support() {
            let len = group.length(g);
            if len > n {
                return Err(Error::Precision(format!(
                    "support point {} has norm {len}, above the atlas precision {n}",
                    group.display(g)
                )));
            }
        }
        let dim = atlas.len();
        if dim > MAX_DENSE_DIM {
            return Err(Error::Budget(format!(
                "atlas has {dim} points, above the dense limit {MAX_DENSE_DIM}"
            )));
        }
        let moves: Vec<Vec<Move>> = (0..dim)
            .into_par_iter()
            .map(|xi| {
                mu.iter()
                    .map(|(g, w)| {
                        let targets = atlas.act_distribution(g, xi).map_err(|e| {
                            Error::Precision(format!("acting by {} on point {xi}: {e}", group.display(g)))
                        })?;
                        Ok(Move {
                            weight: w,
                            cocycle: atlas.cocycle(g, xi)?,
                            targets,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
        for (xi, row) in moves.iter().enumerate() {
            for m in row {
                let phase = Complex64::from_polar(m.weight, t * m.cocycle as f64);
                for &(j, p) in &m.targets {
                    matrix[(xi, j)] += phase * p;
                }
            }
        }
        Ok(TransferMatrix { dim, moves, t, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Real part, which is the whole matrix at `t = 0`.
    pub fn real(&self) -> DMatrix<f64> {
        self.matrix.map(|z| z.re)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let r = self.real() * DVector::from_column_slice(u);
        r.as_slice().to_vec()
    }

    /// `φ(ξ) = Σ_g μ(g) c_B(g,ξ)`.
    pub fn mean_cocycle(&self) -> Vec<f64> {
        self.moves
            .iter()
            .map(|row| row.iter().map(|m| m.weight * m.cocycle as f64).sum())
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub dimension: usize,
    /// `[re, im]`, by decreasing modulus then argument.
    pub eigenvalues: Vec<[f64; 2]>,
    pub dominant: [f64; 2],
    pub peripheral: Vec<[f64; 2]>,
    pub gap: f64,
    pub stationary: Vec<f64>,
    pub stationarity_residual: f64,
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut ev = fm
        .eigenvalues()
        .map_err(|e| Error::NoConvergence(format!("eigenvalue solver: {e:?}")))?;
    ev.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(a.arg().partial_cmp(&b.arg()).unwrap())
    });
    Ok(ev)
}

/// Left fixed vector `ν L = ν`, `Σν = 1`, by a direct solve.
pub fn stationary_measure(l: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = l.nrows();
    let mut a = l.transpose() - DMatrix::identity(n, n);
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    let nu = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonSimple(n))?;
    Ok(nu.as_slice().to_vec())
}

pub fn spectral_report(mu: &StepMeasure, atlas: &BoundaryAtlas) -> Result<SpectralReport> {
    let tm = TransferMatrix::build(mu, atlas, 0.0)?;
    report_from(&tm)
}

pub fn report_from(tm: &TransferMatrix) -> Result<SpectralReport> {
    let l = tm.real();
    let ev = sorted_eigenvalues(&l)?;
    let near_one = ev.iter().filter(|z| (*z - 1.0).norm() < SIMPLE_TOL).count();
    if near_one != 1 {
        return Err(Error::NonSimple(near_one));
    }
    let nu = stationary_measure(&l)?;
    let residual = stationarity_residual(&l, &nu);
    let pair = |z: &Complex64| [z.re, z.im];
    let peripheral: Vec<[f64; 2]> = ev
        .iter()
        .filter(|z| z.norm() > 1.0 - PERIPHERAL_TOL)
        .map(pair)
        .collect();
    let gap = ev
        .iter()
        .map(|z| z.norm())
        .find(|&r| r <= 1.0 - PERIPHERAL_TOL)
        .unwrap_or(0.0);
    Ok(SpectralReport {
        dimension: tm.dim(),
        eigenvalues: ev.iter().map(pair).collect(),
        dominant: pair(&ev[0]),
        peripheral,
        gap,
        stationary: nu,
        stationarity_residual: residual,
    })
}

pub fn stationarity_residual(l: &DMatrix<f64>, nu: &[f64]) -> f64 {
    let v = DVector::from_column_slice(nu);
    let lv = l.tr_mul(&v);
    (lv - v).amax()
}

/// A right eigenvector for the real eigenvalue `lambda`, unit in the sup norm.
pub fn real_eigenvector(l: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let n = l.nrows();
    let shifted = l - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let v: Vec<f64> = vt.row(k).iter().copied().collect();
    let m = v.iter().fold(0.0f64, |a, x| if x.abs() > a.abs() { *x } else { a });
    v.iter().map(|x| x / m).collect()
}

/// `ℓ = Σ_g μ(g) Σ_ξ ν(ξ) c_B(g,ξ)`.
pub fn drift_spectral(tm: &TransferMatrix, nu: &[f64]) -> f64 {
    tm.mean_cocycle().iter().zip(nu).map(|(p, n)| p * n).sum()
}

/// `h = -Σ_x μ(x) Σ_ξ ν(ξ) log K(x^{-1}, ξ)` for a kernel `K`.
pub fn entropy_spectral(
    mu: &StepMeasure,
    atlas: &BoundaryAtlas,
    nu: &[f64],
    kernel: impl Fn(&Element, usize) -> Result<f64>,
) -> Result<f64> {
    let group = atlas.group();
    let mut h = 0.0;
    for (x, w) in mu.iter() {
        let xinv = group.inv(x);
        for (xi, &n) in nu.iter().enumerate() {
            let k = kernel(&xinv, xi)?;
            if !(k > 0.0) {
                return Err(Error::Integrity(format!(
                    "kernel value {k} at ({}, {xi}) is not positive",
                    group.display(&xinv)
                )));
            }
            h -= w * n * k.ln();
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, Serialize)]
pub struct PoissonSolution {
    pub v: Vec<f64>,
    pub drift: f64,
    pub residual: f64,
}

/// Solves `(I - L)v = φ - ℓ` with `∫v dν = 0`, written as
/// `(I - L + 1ν)v = φ - ℓ`.
pub fn poisson_solve(tm: &TransferMatrix, nu: &[f64]) -> Result<PoissonSolution> {
    let n = tm.dim();
    let l = tm.real();
    let phi = tm.mean_cocycle();
    let drift = drift_spectral(tm, nu);
    let mut a = DMatrix::identity(n, n) - &l;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += nu[j];
        }
    }
    let rhs = DVector::from_iterator(n, phi.iter().map(|p| p - drift));
    let v = a.lu().solve(&rhs).ok_or(Error::NonSimple(2))?;
    let lv = &l * &v;
    let residual = (0..n)
        .map(|i| (phi[i] + lv[i] - v[i] - drift).abs())
        .fold(0.0, f64::max);
    Ok(PoissonSolution {
        v: v.as_slice().to_vec(),
        drift,
        residual,
    })
}

/// `σ² = Σ_g μ(g) Σ_ξ ν(ξ) E[c̃(g,ξ)²]` with `c̃ = c_B + v(g·ξ) - v(ξ) - ℓ`.
pub fn variance_spectral(tm: &TransferMatrix, nu: &[f64], sol: &PoissonSolution) -> Result<f64> {
    let v = &sol.v;
    let mut s = 0.0;
    for (xi, row) in tm.moves.iter().enumerate() {
        for m in row {
            for &(j, p) in &m.targets {
                let c = m.cocycle as f64 + v[j] - v[xi] - sol.drift;
                s += nu[xi] * m.weight * p * c * c;
            }
        }
    }
    if !(s > 0.0) {
        return Err(Error::Nondegeneracy(s));
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbedEig {
    pub t: f64,
    pub lambda: [f64; 2],
    /// Eigenfunction as `[re, im]` pairs, with `∫u dν = 1`.
    pub eigenfunction: Vec<[f64; 2]>,
}

/// Dominant eigenvalue of `L_{μ,t}` near 1, by shifted inverse iteration from `1`.
pub fn perturbed_eigenvalue(mu: &StepMeasure, atlas: &BoundaryAtlas, nu: &[f64], t: f64) -> Result<PerturbedEig> {
    if t.abs() > 0.1 {
        return Err(Error::PerturbationTooLarge(format!("|t| = {} exceeds 0.1", t.abs())));
    }
    let tm = TransferMatrix::build(mu, atlas, t)?;
    let (lambda, u) = eigen_near_one(&tm.matrix, nu)?;
    Ok(PerturbedEig {
        t,
        lambda: [lambda.re, lambda.im],
        eigenfunction: u.iter().map(|z| [z.re, z.im]).collect(),
    })
}

fn eigen_near_one(m: &DMatrix<Complex64>, nu: &[f64]) -> Result<(Complex64, Vec<Complex64>)> {
    let n = m.nrows();
    let shift = Complex64::new(1.0 + 1e-3, 0.0);
    let a = m - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = a.lu();
    let nuc = DVector::from_iterator(n, nu.iter().map(|&x| Complex64::new(x, 0.0)));
    let mut u = DVector::from_element(n, Complex64::new(1.0, 0.0));
    let mut last = Complex64::new(f64::NAN, 0.0);
    for _ in 0..200 {
        let w = lu
            .solve(&u)
            .ok_or_else(|| Error::PerturbationTooLarge("shifted operator is singular".into()))?;
        let norm = nuc.dot(&w);
        if norm.norm() < 1e-300 {
            return Err(Error::PerturbationTooLarge("eigenfunction has zero ν-mean".into()));
        }
        u = w / norm;
        let lambda = nuc.dot(&(m * &u));
        let resid = (m * &u - &u * lambda).camax() / u.camax();
        if resid < 1e-13 || (resid < 1e-10 && (lambda - last).norm() < 1e-16) {
            return Ok((lambda, u.as_slice().to_vec()));
        }
        last = lambda;
    }
    Err(Error::PerturbationTooLarge(
        "no separated eigenvalue near 1; inverse iteration did not settle".into(),
    ))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CltParams {
    pub drift: f64,
    pub variance: f64,
    pub fourth_difference: f64,
}

/// Drift and variance from `λ(t) = exp(iat - bt²/2 + o(t²))` by five-point
/// central differences on `{0, ±t0, ±2t0}`.
pub fn clt_params_fd(mu: &StepMeasure, atlas: &BoundaryAtlas, nu: &[f64], t0: f64) -> Result<CltParams> {
    let lam = |t: f64| -> Result<Complex64> {
        if t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let p = perturbed_eigenvalue(mu, atlas, nu, t)?;
        Ok(Complex64::new(p.lambda[0], p.lambda[1]))
    };
    let (m2, m1, p1, p2) = (lam(-2.0 * t0)?, lam(-t0)?, lam(t0)?, lam(2.0 * t0)?);
    let one = Complex64::new(1.0, 0.0);
    let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * t0);
    let d2 = (-m2 - p2 + (p1 + m1) * 16.0 - one * 30.0) / (12.0 * t0 * t0);
    let d4 = (m2 + p2 - (p1 + m1) * 4.0 + one * 6.0).norm();
    if d1.re.abs() > 1e-8 || d4 > 1e-8 {
        return Err(Error::StepSize(d4.max(d1.re.abs())));
    }
    let a = d1.im;
    let b = -a * a - d2.re;
    Ok(CltParams {
        drift: a,
        variance: b,
        fourth_difference: d4,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DoeblinFortet {
    pub beta: f64,
    /// `(n, ρ, C)` for every power tried.
    pub fits: Vec<(usize, f64, f64)>,
    /// First power with `ρ < 1`.
    pub n_star: Option<usize>,
}

/// `e^{β n(ξ,η)}` for every pair, `n` the agreement radius, so that
/// `d(ξ,η)^{-β}` is a lookup.
pub struct PairWeights {
    dim: usize,
    weights: Vec<f64>,
}

impl PairWeights {
    pub fn new(atlas: &BoundaryAtlas, beta: f64) -> Self {
        let dim = atlas.len();
        let weights = (0..dim)
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..dim).map(move |j| {
                    if i == j {
                        0.0
                    } else {
                        (beta * atlas.agreement_radius(i, j) as f64).exp()
                    }
                })
            })
            .collect();
        PairWeights { dim, weights }
    }

    /// Empirical Hölder seminorm `max |u(ξ)-u(η)| / d(ξ,η)^β`, `d = e^{-n}`.
    pub fn seminorm(&self, u: &[f64]) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.dim {
            let row = &self.weights[i * self.dim..(i + 1) * self.dim];
            for j in i + 1..self.dim {
                s = s.max((u[i] - u[j]).abs() * row[j]);
            }
        }
        s
    }
}

/// For `n = 1..=n_max`, fits `|Lⁿu|_β ≤ ρ|u|_β + C|u|_∞` by nonnegative least
/// squares over a family of test functions.
pub fn doeblin_fortet(
    tm: &TransferMatrix,
    atlas: &BoundaryAtlas,
    beta: f64,
    n_max: usize,
    seed: u64,
) -> DoeblinFortet {
    use rand::{Rng, SeedableRng};
    let dim = tm.dim();
    let l = tm.real();
    let pw = PairWeights::new(atlas, beta);
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut tests: Vec<DVector<f64>> = Vec::new();
    for _ in 0..8 {
        tests.push(DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0)));
    }
    let ball = atlas.ball();
    for id in 1..ball.count_within(2) {
        tests.push(DVector::from_fn(dim, |xi, _| atlas.values(xi)[id] as f64));
    }
    for _ in 0..4 {
        let k = rng.gen_range(0..dim);
        tests.push(DVector::from_fn(dim, |xi, _| (xi == k) as u8 as f64));
    }
    let base: Vec<(f64, f64)> = tests
        .par_iter()
        .map(|u| (pw.seminorm(u.as_slice()), u.amax()))
        .collect();
    let mut fits = Vec::new();
    let mut current = tests;
    let mut n_star = None;
    for n in 1..=n_max {
        current = current.iter().map(|u| &l * u).collect();
        let rows: Vec<(f64, f64, f64)> = current
            .par_iter()
            .zip(&base)
            .map(|(u, &(s, m))| (s, m, pw.seminorm(u.as_slice())))
            .collect();
        let (rho, c) = nnls2(&rows);
        fits.push((n, rho, c));
        if n_star.is_none() && rho < 1.0 {
            n_star = Some(n);
        }
    }
    DoeblinFortet { beta, fits, n_star }
}

/// Nonnegative least squares for `y ≈ ρ x₁ + C x₂`, rows `(x₁, x₂, y)`, each row
/// scaled by `1/(x₁ + x₂)`.
fn nnls2(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let scaled: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|&(a, b, y)| {
            let s = (a + b).max(1e-300);
            (a / s, b / s, y / s)
        })
        .collect();
    let (mut saa, mut sab, mut sbb, mut say, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, y) in &scaled {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        say += a * y;
        sby += b * y;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() > 1e-14 {
        let rho = (say * sbb - sby * sab) / det;
        let c = (saa * sby - sab * say) / det;
        if rho >= 0.0 && c >= 0.0 {
            return (rho, c);
        }
    }
    let sse = |rho: f64, c: f64| -> f64 {
        scaled.iter().map(|&(a, b, y)| (y - rho * a - c * b).powi(2)).sum()
    };
    let only_rho = ((say / saa).max(0.0), 0.0);
    let only_c = (0.0, (sby / sbb).max(0.0));
    if sse(only_rho.0, 0.0) <= sse(0.0, only_c.1) {
        only_rho
    } else {
        only_c
    }
}

/// `min_ξ (1/n) Σ_g μ^{*n}(g) c_B(g,ξ)`, computed through `Lⁿ` applied to the
/// cocycle mean: `Σ_{k<n} L^k φ`.
pub fn uniform_cocycle_averages(tm: &TransferMatrix, n_max: usize) -> Vec<f64> {
    let l = tm.real();
    let phi = DVector::from_vec(tm.mean_cocycle());
    let mut acc = DVector::zeros(tm.dim());
    let mut term = phi;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        acc += &term;
        term = &l * term;
        out.push(acc.min() / n as f64);
    }
    out
}
