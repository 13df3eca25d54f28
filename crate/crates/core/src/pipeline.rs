//! Orchestration of the library routines behind the command line.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryAtlas;
use crate::config::{KernelChoice, RunConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::estimators::{self, EntropyRow, EstimateWithError, WalkConfig};
use crate::green::{GreenFunction, GreenValue};
use crate::group::Group;
use crate::martin::{self, AnconaTrend, ConvergenceReport, KernelField, MartinSetup};
use crate::measure::StepMeasure;
use crate::spectral::{self, CltParams, DoeblinFortet, SpectralReport, TransferMatrix};

/// Group, measure and lazily built atlases and Green function.
pub struct Context {
    config: RunConfig,
    group: Group,
    measure: StepMeasure,
    full_atlas: Arc<OnceLock<BoundaryAtlas>>,
    atlas: OnceLock<BoundaryAtlas>,
    green: OnceLock<GreenFunction>,
}

fn cached<T>(cell: &OnceLock<T>, make: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = make()?;
    Ok(cell.get_or_init(|| v))
}

impl Context {
    /// Validates the configuration (including every grid point) and resolves defaults.
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let group = config.group()?;
        let measure = config.measure_at(&group, 0.0)?;
        let mut config = config.clone();
        let reach = measure.max_length(&group);
        let n_anchor = *config.anchor.get_or_insert(martin::default_anchor_size(reach));
        config
            .domain_radius
            .get_or_insert(martin::default_domain_radius(n_anchor));
        if config.measure.is_none() {
            config.measure = Some(measure.to_spec(&group));
        }
        Ok(Context {
            config,
            group,
            measure,
            full_atlas: Arc::new(OnceLock::new()),
            atlas: OnceLock::new(),
            green: OnceLock::new(),
        })
    }

    /// The same run for `μ_θ`, sharing the full atlas.
    pub fn at(&self, theta: f64) -> Result<Context> {
        Ok(Context {
            config: self.config.clone(),
            group: self.group.clone(),
            measure: self.config.measure_at(&self.group, theta)?,
            full_atlas: Arc::clone(&self.full_atlas),
            atlas: OnceLock::new(),
            green: OnceLock::new(),
        })
    }

    /// Resolved configuration.
    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn measure(&self) -> &StepMeasure {
        &self.measure
    }

    pub fn n_anchor(&self) -> usize {
        self.config.anchor.unwrap_or(4)
    }

    pub fn domain_radius(&self) -> usize {
        self.config.domain_radius.unwrap_or(2 * self.n_anchor())
    }

    /// All boundary points at the configured precision.
    pub fn full_atlas(&self) -> Result<&BoundaryAtlas> {
        cached(&self.full_atlas, || BoundaryAtlas::new(&self.group, self.config.precision))
    }

    /// The minimal component containing the configured seed point.
    pub fn atlas(&self) -> Result<&BoundaryAtlas> {
        cached(&self.atlas, || {
            let full = self.full_atlas()?;
            let seed = self.config.boundary_seed;
            if seed >= full.len() {
                return Err(Error::Malformed(format!(
                    "boundary_seed {seed} is out of range for {} points",
                    full.len()
                )));
            }
            full.minimal_component(seed, self.measure.support())
        })
    }

    pub fn green(&self) -> Result<&GreenFunction> {
        cached(&self.green, || {
            GreenFunction::new(&self.group, &self.measure, self.config.tolerances.eps_green)
        })
    }

    pub fn transfer(&self, t: f64) -> Result<TransferMatrix> {
        TransferMatrix::build(&self.measure, self.atlas()?, t)
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            steps: self.config.walk.steps,
            samples: self.config.walk.samples,
            seed: self.config.seed,
        }
    }

    pub fn spectral(&self) -> Result<Spectral> {
        let tm = self.transfer(0.0)?;
        let report = spectral::report_from(&tm)?;
        Ok(Spectral { tm, report })
    }

    pub fn martin(&self) -> Result<MartinSetup> {
        MartinSetup::new(self.atlas()?, self.green()?, self.n_anchor(), self.domain_radius())
    }

    /// Fixed point from `G(·, e)` at the configured tolerance.
    pub fn fixed_point(&self) -> Result<(MartinSetup, KernelField, ConvergenceReport)> {
        let setup = self.martin()?;
        let (field, report) = setup.fixed_point(self.config.tolerances.eps_fp)?;
        Ok((setup, field, report))
    }

    /// Entropy for the stationary measure `nu`, with the kernel the config selects.
    pub fn entropy(&self, nu: &[f64]) -> Result<EntropyResult> {
        let choice = self.config.kernel;
        let mut fallback = None;
        if choice != KernelChoice::Ratio {
            let attempt = if self.n_anchor() > self.config.precision {
                Err(Error::Precision(format!(
                    "anchor size {} exceeds the atlas precision {}",
                    self.n_anchor(),
                    self.config.precision
                )))
            } else {
                self.fixed_point()
            };
            match attempt {
                Ok((setup, field, report)) => {
                    let h = spectral::entropy_spectral(&self.measure, self.atlas()?, nu, |x, xi| {
                        setup.lookup(&field, x, xi).ok_or_else(|| {
                            Error::Domain(format!(
                                "{} is outside the stored region of point {xi}",
                                self.group.display(x)
                            ))
                        })
                    })?;
                    return Ok(EntropyResult {
                        entropy: h,
                        kernel: KernelChoice::FixedPoint,
                        fixed_point: Some(report),
                        fallback: None,
                    });
                }
                Err(e) if choice == KernelChoice::FixedPoint => return Err(e),
                Err(e) => fallback = Some(e.to_string()),
            }
        }
        let green = self.green()?;
        let atlas = self.atlas()?;
        let eps = self.config.tolerances.eps_ratio;
        let h = spectral::entropy_spectral(&self.measure, atlas, nu, |x, xi| {
            martin::ratio_kernel(green, atlas, x, xi, eps)
        })?;
        Ok(EntropyResult {
            entropy: h,
            kernel: KernelChoice::Ratio,
            fixed_point: None,
            fallback,
        })
    }

    pub fn drift(&self) -> Result<DriftResult> {
        let s = self.spectral()?;
        Ok(DriftResult {
            drift: spectral::drift_spectral(&s.tm, &s.report.stationary),
            gap: s.report.gap,
            stationarity_residual: s.report.stationarity_residual,
            dimension: s.report.dimension,
        })
    }

    pub fn variance(&self) -> Result<VarianceResult> {
        let s = self.spectral()?;
        let nu = &s.report.stationary;
        let sol = spectral::poisson_solve(&s.tm, nu)?;
        let variance = spectral::variance_spectral(&s.tm, nu, &sol)?;
        let (clt_fd, clt_fd_error) =
            match spectral::clt_params_fd(&self.measure, self.atlas()?, nu, self.config.tolerances.t0) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
        Ok(VarianceResult {
            variance,
            drift: sol.drift,
            poisson_residual: sol.residual,
            clt_fd,
            clt_fd_error,
        })
    }
}

/// Transfer matrix at `t = 0` with its spectral report.
pub struct Spectral {
    pub tm: TransferMatrix,
    pub report: SpectralReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyResult {
    pub entropy: f64,
    pub kernel: KernelChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<ConvergenceReport>,
    /// Why the fixed-point kernel was not used, when it was not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftResult {
    pub drift: f64,
    pub gap: f64,
    pub stationarity_residual: f64,
    pub dimension: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VarianceResult {
    pub variance: f64,
    pub drift: f64,
    pub poisson_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clt_fd: Option<CltParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clt_fd_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GreenResult {
    pub x: String,
    pub y: String,
    #[serde(flatten)]
    pub value: GreenValue,
    pub harmonicity_defect: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum AnconaResult {
    Triple {
        x: String,
        y: String,
        z: String,
        k: f64,
        gromov_product: f64,
        ratio: f64,
    },
    Trend(AnconaTrend),
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumResult {
    pub boundary_points: usize,
    pub minimal_component: usize,
    #[serde(flatten)]
    pub report: SpectralReport,
    pub doeblin_fortet: DoeblinFortet,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldDump {
    pub point: usize,
    pub witness: String,
    pub anchor: String,
    /// `(x, K(x, ξ))` for stored `x` within the dump radius.
    pub values: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointResult {
    pub n_anchor: usize,
    pub domain_radius: usize,
    pub report: ConvergenceReport,
    pub cocycle_defect: f64,
    pub dump_radius: usize,
    pub field: Vec<FieldDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McResult {
    pub seed: u64,
    pub steps: usize,
    pub samples: usize,
    pub drift: EstimateWithError,
    pub variance: EstimateWithError,
}

#[derive(Clone, Debug, Serialize)]
pub struct CltResult {
    pub sigma2: f64,
    pub ks: f64,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    #[serde(flatten)]
    pub result: EntropyResult,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub exact: Vec<EntropyRow>,
}

/// A requested computation with its command-specific arguments.
#[derive(Clone, Debug)]
pub enum Command {
    Green { x: String, y: String },
    /// A single ratio when `triple` is given, the distance trend otherwise.
    Ancona {
        triple: Option<(String, String, String)>,
        k: f64,
        samples: usize,
    },
    Spectrum,
    Drift,
    /// `exact` extra rows of exact convolution entropies.
    Entropy { exact: usize },
    Variance,
    FixedPoint { dump_radius: usize },
    Mc,
    /// `sigma2` defaults to the spectral variance.
    Clt { sigma2: Option<f64> },
    Sweep { order: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Green { .. } => "green",
            Command::Ancona { .. } => "ancona",
            Command::Spectrum => "spectrum",
            Command::Drift => "drift",
            Command::Entropy { .. } => "entropy",
            Command::Variance => "variance",
            Command::FixedPoint { .. } => "fixedpoint",
            Command::Mc => "mc",
            Command::Clt { .. } => "clt",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Output envelope: every result carries the resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub result: T,
}

/// Runs a command and returns the JSON document.
pub fn run(config: &RunConfig, command: &Command) -> Result<serde_json::Value> {
    let ctx = Context::new(config)?;
    let result = match command {
        Command::Green { x, y } => serde_json::to_value(green(&ctx, x, y)?)?,
        Command::Ancona { triple, k, samples } => serde_json::to_value(ancona(&ctx, triple.as_ref(), *k, *samples)?)?,
        Command::Spectrum => serde_json::to_value(spectrum(&ctx)?)?,
        Command::Drift => serde_json::to_value(ctx.drift()?)?,
        Command::Entropy { exact } => {
            let s = ctx.spectral()?;
            let result = ctx.entropy(&s.report.stationary)?;
            let exact = if *exact > 0 {
                estimators::entropy_exact_seq(&ctx.group, &ctx.measure, *exact)?
            } else {
                Vec::new()
            };
            serde_json::to_value(EntropyReport { result, exact })?
        }
        Command::Variance => serde_json::to_value(ctx.variance()?)?,
        Command::FixedPoint { dump_radius } => serde_json::to_value(fixed_point(&ctx, *dump_radius)?)?,
        Command::Mc => serde_json::to_value(mc(&ctx)?)?,
        Command::Clt { sigma2 } => serde_json::to_value(clt(&ctx, *sigma2)?)?,
        Command::Sweep { order } => serde_json::to_value(sweep_with_probe(&ctx, *order)?)?,
    };
    Ok(serde_json::to_value(Document {
        schema_version: SCHEMA_VERSION,
        command: command.name(),
        config: ctx.config.clone(),
        result,
    })?)
}

pub fn green(ctx: &Context, x: &str, y: &str) -> Result<GreenResult> {
    let (xe, ye) = (ctx.group.word(x)?, ctx.group.word(y)?);
    let g = ctx.green()?;
    Ok(GreenResult {
        x: ctx.group.display(&xe),
        y: ctx.group.display(&ye),
        value: g.value(&xe, &ye),
        harmonicity_defect: g.harmonicity_defect(&xe, &ye),
        iterations: g.iterations(),
    })
}

/// Distances used for the strong Ancona trend.
pub const ANCONA_LENGTHS: [usize; 7] = [6, 7, 8, 9, 10, 11, 12];

pub fn ancona(ctx: &Context, triple: Option<&(String, String, String)>, k: f64, samples: usize) -> Result<AnconaResult> {
    let g = ctx.green()?;
    match triple {
        Some((x, y, z)) => {
            let (xe, ye, ze) = (ctx.group.word(x)?, ctx.group.word(y)?, ctx.group.word(z)?);
            Ok(AnconaResult::Triple {
                x: ctx.group.display(&xe),
                y: ctx.group.display(&ye),
                z: ctx.group.display(&ze),
                k,
                gromov_product: ctx.group.gromov_product(&xe, &ye, &ze),
                ratio: g.ancona_ratio(&xe, &ye, &ze, k)?,
            })
        }
        None => Ok(AnconaResult::Trend(martin::strong_ancona_trend(
            g,
            &ANCONA_LENGTHS,
            samples,
            ctx.config.seed,
        )?)),
    }
}

pub fn spectrum(ctx: &Context) -> Result<SpectrumResult> {
    let s = ctx.spectral()?;
    let atlas = ctx.atlas()?;
    Ok(SpectrumResult {
        boundary_points: ctx.full_atlas()?.len(),
        minimal_component: atlas.len(),
        doeblin_fortet: spectral::doeblin_fortet(&s.tm, atlas, 0.5, 20, ctx.config.seed),
        report: s.report,
    })
}

pub fn fixed_point(ctx: &Context, dump_radius: usize) -> Result<FixedPointResult> {
    let (setup, field, report) = ctx.fixed_point()?;
    let atlas = ctx.atlas()?;
    let group = &ctx.group;
    let shown = setup.ball().count_within(dump_radius.min(setup.domain_radius()));
    let dumps = (0..atlas.len())
        .map(|xi| FieldDump {
            point: xi,
            witness: group.display(atlas.canonical_witness(xi)),
            anchor: group.display(setup.anchor(xi)),
            values: setup.ball().elements()[..shown]
                .iter()
                .filter_map(|x| setup.lookup(&field, x, xi).map(|v| (group.display(x), v)))
                .collect(),
        })
        .collect();
    Ok(FixedPointResult {
        n_anchor: setup.n_anchor(),
        domain_radius: setup.domain_radius(),
        cocycle_defect: setup.cocycle_defect(&field),
        report,
        dump_radius,
        field: dumps,
    })
}

pub fn mc(ctx: &Context) -> Result<McResult> {
    let cfg = ctx.walk_config();
    Ok(McResult {
        seed: cfg.seed,
        steps: cfg.steps,
        samples: cfg.samples,
        drift: estimators::drift_mc(&ctx.group, &ctx.measure, &cfg)?,
        variance: estimators::variance_mc(&ctx.group, &ctx.measure, &cfg)?,
    })
}

pub fn clt(ctx: &Context, sigma2: Option<f64>) -> Result<CltResult> {
    let sigma2 = match sigma2 {
        Some(s) => s,
        None => ctx.variance()?.variance,
    };
    let cfg = ctx.walk_config();
    Ok(CltResult {
        sigma2,
        ks: estimators::clt_empirical(&ctx.group, &ctx.measure, &cfg, sigma2)?,
        steps: cfg.steps,
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

/// One grid point of a sweep. Quantities that failed are empty and the
/// reasons are collected in `error`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub drift: Option<f64>,
    pub entropy: Option<f64>,
    pub variance: Option<f64>,
    pub gap: Option<f64>,
    pub fixed_point_rate: Option<f64>,
    /// Monte Carlo drift minus spectral drift, when cross-checks are enabled.
    pub mc_drift_delta: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn fail(&mut self, what: &str, e: Error) {
        let msg = format!("{what}: {e}");
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

/// Evaluates one grid point; never fails, errors go into the row.
pub fn sweep_row(base: &Context, theta: f64) -> SweepRow {
    let mut row = SweepRow {
        theta,
        ..SweepRow::default()
    };
    let ctx = match base.at(theta) {
        Ok(c) => c,
        Err(e) => {
            row.fail("measure", e);
            return row;
        }
    };
    let s = match ctx.spectral() {
        Ok(s) => s,
        Err(e) => {
            row.fail("spectrum", e);
            return row;
        }
    };
    let nu = &s.report.stationary;
    row.gap = Some(s.report.gap);
    let drift = spectral::drift_spectral(&s.tm, nu);
    row.drift = Some(drift);
    match spectral::poisson_solve(&s.tm, nu).and_then(|sol| spectral::variance_spectral(&s.tm, nu, &sol)) {
        Ok(v) => row.variance = Some(v),
        Err(e) => row.fail("variance", e),
    }
    match ctx.entropy(nu) {
        Ok(h) => {
            row.entropy = Some(h.entropy);
            row.fixed_point_rate = h.fixed_point.map(|r| r.rate);
        }
        Err(e) => row.fail("entropy", e),
    }
    if ctx.config.walk.cross_check {
        match estimators::drift_mc(&ctx.group, &ctx.measure, &ctx.walk_config()) {
            Ok(est) => row.mc_drift_delta = Some(est.estimate - drift),
            Err(e) => row.fail("mc", e),
        }
    }
    row
}

/// All grid points of the configured family, in grid order.
pub fn sweep(ctx: &Context) -> Result<Vec<SweepRow>> {
    let fam = ctx
        .config
        .family
        .as_ref()
        .ok_or_else(|| Error::Malformed("sweep needs a `family`".into()))?;
    // Built once here so grid points do not race to build it.
    ctx.full_atlas()?;
    Ok(fam.grid.values().into_par_iter().map(|t| sweep_row(ctx, t)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Absent when some grid point failed.
    pub smoothness: Option<SmoothnessProbe>,
}

fn sweep_with_probe(ctx: &Context, order: usize) -> Result<SweepReport> {
    let rows = sweep(ctx)?;
    let smoothness = smoothness_probe(&rows, order).ok();
    Ok(SweepReport { rows, smoothness })
}

pub const SWEEP_HEADER: [&str; 8] = [
    "theta",
    "drift",
    "entropy",
    "variance",
    "gap",
    "fixed_point_rate",
    "mc_drift_delta",
    "error",
];

/// Seventeen significant digits, `.` as decimal separator.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    let cell = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for r in rows {
        w.write_record([
            format_float(r.theta),
            cell(r.drift),
            cell(r.entropy),
            cell(r.variance),
            cell(r.gap),
            cell(r.fixed_point_rate),
            cell(r.mc_drift_delta),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesProbe {
    pub name: String,
    /// `divided_differences[k-1]` holds the order-`k` differences.
    pub divided_differences: Vec<Vec<f64>>,
    /// Largest absolute order-`k` difference.
    pub magnitudes: Vec<f64>,
    /// `magnitudes[k+1] / magnitudes[k]`; `None` when the denominator vanishes.
    pub ratios: Vec<Option<f64>>,
    /// Largest residual of the least-squares polynomial fit of degree `order`.
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessProbe {
    pub order: usize,
    pub step: f64,
    pub series: Vec<SeriesProbe>,
}

/// Divided differences and polynomial-fit residuals of drift, entropy and
/// variance along a sweep.
pub fn smoothness_probe(rows: &[SweepRow], order: usize) -> Result<SmoothnessProbe> {
    let thetas: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let pick = |name: &str, f: fn(&SweepRow) -> Option<f64>| -> Result<(String, Vec<f64>)> {
        let vals = rows
            .iter()
            .map(|r| {
                f(r).ok_or_else(|| Error::Domain(format!("{name} is missing at θ = {}", r.theta)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((name.to_string(), vals))
    };
    let series = vec![
        pick("drift", |r| r.drift)?,
        pick("entropy", |r| r.entropy)?,
        pick("variance", |r| r.variance)?,
    ];
    probe_series(&thetas, &series, order)
}

/// The probe on arbitrary series over a uniform grid.
pub fn probe_series(thetas: &[f64], series: &[(String, Vec<f64>)], order: usize) -> Result<SmoothnessProbe> {
    let n = thetas.len();
    if order == 0 || n < order + 2 {
        return Err(Error::Domain(format!(
            "order {order} needs at least {} grid points, got {n}",
            order + 2
        )));
    }
    let step = thetas[1] - thetas[0];
    let uniform = thetas
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1e-300));
    if !(step > 0.0) || !uniform {
        return Err(Error::Domain("smoothness probe needs a uniform increasing grid".into()));
    }
    let probes = series
        .iter()
        .map(|(name, vals)| {
            let mut diffs = Vec::with_capacity(order);
            let mut cur = vals.clone();
            for k in 1..=order {
                cur = cur.windows(2).map(|w| (w[1] - w[0]) / (k as f64 * step)).collect();
                diffs.push(cur.clone());
            }
            let magnitudes: Vec<f64> = diffs
                .iter()
                .map(|d| d.iter().fold(0.0f64, |a, x| a.max(x.abs())))
                .collect();
            let ratios = magnitudes
                .windows(2)
                .map(|w| (w[0] > 0.0).then(|| w[1] / w[0]))
                .collect();
            Ok(SeriesProbe {
                name: name.clone(),
                divided_differences: diffs,
                magnitudes,
                ratios,
                fit_residual: poly_fit_residual(thetas, vals, order)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SmoothnessProbe {
        order,
        step,
        series: probes,
    })
}

/// Max residual of the least-squares polynomial of the given degree, with the
/// abscissae mapped to `[-1, 1]` for conditioning.
pub fn poly_fit_residual(xs: &[f64], ys: &[f64], degree: usize) -> Result<f64> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let scale = |x: f64| 2.0 * (x - lo) / (hi - lo) - 1.0;
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| scale(xs[i]).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Integrity(format!("polynomial fit: {e}")))?;
    Ok((a * coef - b).amax())
}
