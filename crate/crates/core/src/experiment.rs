//! Configuration-driven experiments: the layer behind the command-line
//! harness.
//!
//! A configuration is a TOML document with a `mode` key, a rate source
//! (`profile` pieces or an explicit `rates` list) and the parameters of the
//! mode. Every mode writes CSV artifacts into `out` when it is set and
//! returns a report whose `passed` flag drives the exit status.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::airy::{tw_cdf, tw_gue_cdf_checked, DEFAULT_NODES};
use crate::asymptotics::{discrete_crit, hydro_residual, legendre_height, limit_quantities};
use crate::error::{Error, Result};
use crate::field::sample_fields;
use crate::fredholm::{gap_probability, GapQuery};
use crate::kernel::{eval_k, eval_k_rewritten, eval_kf, QuadratureSpec, SpaceTimePoint};
use crate::oracle::{ctmc_height_dist, height_dist_truncated, weight_cap_for};
use crate::profile::{DiscreteRates, ProfileSpec, SpeedProfile};
use crate::sim::{sample_heights, sample_path_heights, DownRightPath};
use crate::stats::ks_distance;

fn default_scale() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExperimentConfig {
    /// Macroscopic profile; rates are `ξ_x = profile(x / scale)`.
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Explicit rates, used instead of `profile` when given.
    #[serde(default)]
    pub rates: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory for CSV artifacts.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Mode {
    Simulate {
        /// Down-right path `[[t, N], …]`.
        path: Vec<(f64, usize)>,
        replicas: usize,
        #[serde(default)]
        window: Option<usize>,
    },
    Field {
        depth: usize,
        t: f64,
        replicas: usize,
    },
    Kernel {
        p: (f64, usize, i64),
        q: (f64, usize, i64),
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Tail {
        path: Vec<(f64, usize)>,
        /// Thresholds, one per path point. For a single point, omitting
        /// them tabulates `P(h > y)` for `y = 0..N−1`.
        #[serde(default)]
        heights: Option<Vec<i64>>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Limitshape {
        tau: f64,
        eta_min: f64,
        eta_max: f64,
        points: usize,
    },
    Tw {
        r: Vec<f64>,
        #[serde(default)]
        nodes: Option<usize>,
    },
    Converge {
        tau: f64,
        eta: f64,
        scales: Vec<usize>,
        replicas: usize,
        #[serde(default = "default_ks_threshold")]
        threshold: f64,
    },
    Hydro {
        tau: f64,
        eta: f64,
        steps: Vec<f64>,
        #[serde(default = "default_min_order")]
        min_order: f64,
    },
    OracleCheck {},
}

fn default_ks_threshold() -> f64 {
    0.1
}

fn default_min_order() -> f64 {
    1.8
}

/// A CSV artifact: header and rows, rendered deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub mode: &'static str,
    /// False when a tolerance or acceptance check failed.
    pub passed: bool,
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    pub tables: Vec<Table>,
    /// Files written under `out`.
    pub files: Vec<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn profile(&self) -> Result<SpeedProfile> {
        match &self.profile {
            Some(spec) => SpeedProfile::from_spec(spec),
            None => Err(Error::Config(format!("mode {} needs a profile", self.mode.name()))),
        }
    }

    /// The first `n` rates from `rates` or from the discretized profile.
    fn discrete(&self, n: usize) -> Result<DiscreteRates> {
        match (&self.rates, &self.profile) {
            (Some(r), _) => {
                let r = DiscreteRates::explicit(r.clone())?;
                r.first(n)?;
                Ok(r)
            }
            (None, Some(_)) => self.profile()?.discretize(self.scale, n.max(1)),
            (None, None) => Err(Error::Config("either rates or profile is required".into())),
        }
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config(format!("mode {} is stochastic and needs a seed", self.mode.name())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match &self.mode {
            Mode::Simulate { path, replicas, .. } => {
                positive("replicas", *replicas)?;
                DownRightPath::new(path.clone())?;
                self.seed()?;
            }
            Mode::Field { depth, replicas, t } => {
                positive("depth", *depth)?;
                positive("replicas", *replicas)?;
                if !(*t >= 0.0 && t.is_finite()) {
                    return Err(Error::Config(format!("t must be finite and >= 0, got {t}")));
                }
                self.seed()?;
            }
            Mode::Tail { path, heights, .. } => {
                let p = DownRightPath::new(path.clone())?;
                match heights {
                    Some(h) if h.len() != p.len() => {
                        return Err(Error::Config("one threshold per path point is required".into()))
                    }
                    None if p.len() != 1 => {
                        return Err(Error::Config("thresholds are required for multipoint paths".into()))
                    }
                    _ => {}
                }
            }
            Mode::Limitshape {
                eta_min, eta_max, points, ..
            } => {
                positive("points", *points)?;
                if !(*eta_min > 0.0 && eta_max >= eta_min) {
                    return Err(Error::Config("need 0 < eta_min <= eta_max".into()));
                }
                self.profile()?;
            }
            Mode::Converge { scales, replicas, .. } => {
                positive("replicas", *replicas)?;
                if scales.len() < 2 || scales.contains(&0) {
                    return Err(Error::Config("converge needs at least two positive scales".into()));
                }
                self.profile()?;
                self.seed()?;
            }
            Mode::Hydro { steps, .. } => {
                if steps.len() < 2 || steps.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Config("hydro needs at least two positive steps".into()));
                }
                self.profile()?;
            }
            Mode::Tw { r, nodes } => {
                if r.is_empty() {
                    return Err(Error::Config("tw needs at least one point".into()));
                }
                if let Some(n) = nodes {
                    positive("nodes", *n)?;
                }
            }
            Mode::Kernel { tol, .. } => {
                if !(*tol > 0.0) {
                    return Err(Error::Config("tol must be positive".into()));
                }
            }
            Mode::OracleCheck {} => {}
        }
        Ok(())
    }
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate { .. } => "simulate",
            Mode::Field { .. } => "field",
            Mode::Kernel { .. } => "kernel",
            Mode::Tail { .. } => "tail",
            Mode::Limitshape { .. } => "limitshape",
            Mode::Tw { .. } => "tw",
            Mode::Converge { .. } => "converge",
            Mode::Hydro { .. } => "hydro",
            Mode::OracleCheck {} => "oracle-check",
        }
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

/// Run one experiment and write its artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let mut report = Report {
        mode: config.mode.name(),
        passed: true,
        lines: Vec::new(),
        tables: Vec::new(),
        files: Vec::new(),
    };
    match &config.mode {
        Mode::Simulate { path, replicas, window } => simulate(config, path, *replicas, *window, &mut report)?,
        Mode::Field { depth, t, replicas } => field(config, *depth, *t, *replicas, &mut report)?,
        Mode::Kernel { p, q, tol } => kernel(config, *p, *q, *tol, &mut report)?,
        Mode::Tail { path, heights, tol } => tail(config, path, heights.as_deref(), *tol, &mut report)?,
        Mode::Limitshape {
            tau,
            eta_min,
            eta_max,
            points,
        } => limitshape(config, *tau, *eta_min, *eta_max, *points, &mut report)?,
        Mode::Tw { r, nodes } => tw(r, nodes.unwrap_or(DEFAULT_NODES), &mut report)?,
        Mode::Converge {
            tau,
            eta,
            scales,
            replicas,
            threshold,
        } => converge(config, *tau, *eta, scales, *replicas, *threshold, &mut report)?,
        Mode::Hydro {
            tau,
            eta,
            steps,
            min_order,
        } => hydro(config, *tau, *eta, steps, *min_order, &mut report)?,
        Mode::OracleCheck {} => {
            let rows = oracle_suite()?;
            let mut t = Table::new("oracle_check", &["check", "value", "bound", "pass"]);
            for r in &rows {
                report.passed &= r.pass;
                report.lines.push(format!(
                    "{:<34} {:>10.3e} {} {:>8.1e}  {}",
                    r.name,
                    r.error,
                    if r.at_least { ">=" } else { "<=" },
                    r.tolerance,
                    if r.pass { "PASS" } else { "FAIL" }
                ));
                t.push([r.name.clone(), format!("{:e}", r.error), format!("{:e}", r.tolerance), r.pass.to_string()]);
            }
            report.tables.push(t);
        }
    }
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        for t in &report.tables {
            let file = dir.join(format!("{}.csv", t.name));
            fs::write(&file, t.to_csv()?).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
            report.files.push(file);
        }
    }
    Ok(report)
}

fn simulate(cfg: &ExperimentConfig, path: &[(f64, usize)], replicas: usize, window: Option<usize>, report: &mut Report) -> Result<()> {
    let path = DownRightPath::new(path.to_vec())?;
    let window = window.unwrap_or(path.max_level());
    let rates = cfg.discrete(window)?;
    let rows = sample_path_heights(&rates, window, &path, replicas, cfg.seed()?)?;
    let labels: Vec<String> = path.points().iter().map(|(t, n)| format!("h_t{t}_N{n}")).collect();
    let mut header = vec!["replica"];
    header.extend(labels.iter().map(String::as_str));
    let mut table = Table::new("simulate", &header);
    for (i, row) in rows.iter().enumerate() {
        table.push(std::iter::once(i.to_string()).chain(row.iter().map(|h| h.to_string())));
    }
    for (k, label) in labels.iter().enumerate() {
        let mean = rows.iter().map(|r| r[k] as f64).sum::<f64>() / replicas as f64;
        report.lines.push(format!("{label}: mean {mean:.6} over {replicas} replicas"));
    }
    report.tables.push(table);
    Ok(())
}

fn field(cfg: &ExperimentConfig, depth: usize, t: f64, replicas: usize, report: &mut Report) -> Result<()> {
    let rates = cfg.discrete(depth)?;
    let arrays = sample_fields(&rates, depth, t, replicas, cfg.seed()?)?;
    let mut snap = Table::new("field", &["replica", "level", "index", "value", "time"]);
    let mut proj = Table::new("field_projections", &["replica", "level", "height", "push_position", "tasep_position"]);
    for (r, a) in arrays.iter().enumerate() {
        for (level, index, value, time) in a.snapshot() {
            snap.push([r.to_string(), level.to_string(), index.to_string(), value.to_string(), f(time)]);
        }
        let p = a.project();
        for n in 0..depth {
            proj.push([
                r.to_string(),
                (n + 1).to_string(),
                p.heights[n].to_string(),
                p.push_positions[n].to_string(),
                p.tasep_positions[n].to_string(),
            ]);
        }
    }
    let mean = arrays.iter().map(|a| a.project().heights[depth - 1] as f64).sum::<f64>() / replicas as f64;
    report.lines.push(format!("projected height at level {depth}: mean {mean:.6}"));
    report.tables.push(snap);
    report.tables.push(proj);
    Ok(())
}

fn kernel(cfg: &ExperimentConfig, p: (f64, usize, i64), q: (f64, usize, i64), tol: f64, report: &mut Report) -> Result<()> {
    let rates = cfg.discrete(p.1.max(q.1).max(1))?;
    let quad = QuadratureSpec {
        target_tol: tol,
        ..QuadratureSpec::default()
    };
    let pp = SpaceTimePoint::new(p.0, p.1, p.2);
    let qq = SpaceTimePoint::new(q.0, q.1, q.2);
    let kf = eval_kf(&pp, &qq, &rates, &quad)?;
    let k = eval_k(&pp, &qq, &rates, &quad)?;
    let mut t = Table::new("kernel", &["form", "re", "im"]);
    report.lines.push(format!("K_F = {:.17e} {:+.17e}i", kf.re, kf.im));
    report.lines.push(format!("K   = {:.17e} {:+.17e}i", k.re, k.im));
    t.push(["K_F".into(), f(kf.re), f(kf.im)]);
    t.push(["K".into(), f(k.re), f(k.im)]);
    if q.2 < 0 && q.0 > 0.0 {
        let kr = eval_k_rewritten(&pp, &qq, &rates, &quad)?;
        report.lines.push(format!("K (rewritten) = {:.17e} {:+.17e}i", kr.re, kr.im));
        t.push(["K_rewritten".into(), f(kr.re), f(kr.im)]);
    }
    report.tables.push(t);
    Ok(())
}

fn tail(cfg: &ExperimentConfig, path: &[(f64, usize)], heights: Option<&[i64]>, tol: f64, report: &mut Report) -> Result<()> {
    let path = DownRightPath::new(path.to_vec())?;
    let rates = cfg.discrete(path.max_level())?;
    let quad = QuadratureSpec {
        target_tol: tol,
        ..QuadratureSpec::default()
    };
    let queries: Vec<Vec<i64>> = match heights {
        Some(h) => vec![h.to_vec()],
        None => (0..path.max_level() as i64).map(|y| vec![y]).collect(),
    };
    let mut header: Vec<String> = path.points().iter().map(|(t, n)| format!("y_t{t}_N{n}")).collect();
    header.push("probability".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("tail", &header);
    for ys in queries {
        let v = gap_probability(&GapQuery::new(path.clone(), ys.clone())?, &rates, &quad)?;
        report.lines.push(format!("P(h > {ys:?}) = {:.15e}", v.probability));
        table.push(ys.iter().map(|y| y.to_string()).chain(std::iter::once(f(v.probability))));
    }
    report.tables.push(table);
    Ok(())
}

fn limitshape(cfg: &ExperimentConfig, tau: f64, lo: f64, hi: f64, points: usize, report: &mut Report) -> Result<()> {
    let p = cfg.profile()?;
    let mut t = Table::new("limitshape", &["eta", "h", "rho", "z", "d"]);
    for k in 0..points {
        let eta = if points == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        };
        let q = limit_quantities(&p, tau, eta)?;
        t.push([f(eta), f(q.h), f(q.rho), f(q.z), q.d.map_or(String::new(), f)]);
    }
    report.lines.push(format!("{points} points of the limit shape at tau = {tau}"));
    report.tables.push(t);
    Ok(())
}

fn tw(r: &[f64], nodes: usize, report: &mut Report) -> Result<()> {
    let mut t = Table::new("tw", &["r", "F"]);
    for &x in r {
        let v = tw_gue_cdf_checked(x, nodes, 1e-10)?;
        report.lines.push(format!("F_GUE({x}) = {v:.15e}"));
        t.push([f(x), f(v)]);
    }
    report.tables.push(t);
    Ok(())
}

/// Outcome of the convergence study at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scale: usize,
    pub replicas: usize,
    /// KS distance of `−(h − L𝔥)/(𝔡L^{1/3})` to `F_GUE`.
    pub ks: f64,
    /// Same, after spreading each integer height uniformly over its unit cell.
    pub ks_dequantized: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Tracy–Widom convergence study at the macroscopic point `(τ, η)`.
pub fn convergence_study(profile: &SpeedProfile, tau: f64, eta: f64, scales: &[usize], replicas: usize, seed: u64) -> Result<Vec<ConvergenceRow>> {
    let q = limit_quantities(profile, tau, eta)?;
    let d = q
        .d
        .ok_or_else(|| Error::Regime(format!("({tau}, {eta}) is outside the rarefaction region")))?;
    scales
        .iter()
        .map(|&l| {
            let lf = l as f64;
            let n = (eta * lf).floor() as usize;
            let rates = profile.discretize(lf, n)?;
            let hs = sample_heights(&rates, n, tau * lf, n, replicas, seed)?;
            let scale = d * lf.cbrt();
            let centre = lf * q.h;
            let xs: Vec<f64> = hs.iter().map(|&h| -(h as f64 - centre) / scale).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let jittered: Vec<f64> = hs
                .iter()
                .map(|&h| -(h as f64 + rng.random::<f64>() - 0.5 - centre) / scale)
                .collect();
            let mean = xs.iter().sum::<f64>() / replicas as f64;
            let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (replicas as f64 - 1.0).max(1.0);
            Ok(ConvergenceRow {
                scale: l,
                replicas,
                ks: ks_distance(&xs, tw_cdf)?,
                ks_dequantized: ks_distance(&jittered, tw_cdf)?,
                mean,
                variance,
            })
        })
        .collect()
}

/// Strict decrease over the scales and a final value below `threshold`.
pub fn convergence_passes(rows: &[ConvergenceRow], threshold: f64) -> bool {
    rows.windows(2).all(|w| w[1].ks < w[0].ks) && rows.last().is_some_and(|r| r.ks < threshold)
}

fn converge(cfg: &ExperimentConfig, tau: f64, eta: f64, scales: &[usize], replicas: usize, threshold: f64, report: &mut Report) -> Result<()> {
    let rows = convergence_study(&cfg.profile()?, tau, eta, scales, replicas, cfg.seed()?)?;
    let mut t = Table::new("converge", &["L", "replicas", "ks", "ks_dequantized", "mean", "variance"]);
    for r in &rows {
        report.lines.push(format!(
            "L = {:>5}: KS {:.4}  (dequantized {:.4}), mean {:.4}, variance {:.4}",
            r.scale, r.ks, r.ks_dequantized, r.mean, r.variance
        ));
        t.push([
            r.scale.to_string(),
            r.replicas.to_string(),
            f(r.ks),
            f(r.ks_dequantized),
            f(r.mean),
            f(r.variance),
        ]);
    }
    report.passed = convergence_passes(&rows, threshold);
    report.lines.push(format!(
        "KS strictly decreasing and below {threshold} at the largest L: {}",
        if report.passed { "yes" } else { "no" }
    ));
    report.tables.push(t);
    Ok(())
}

/// Observed orders `log2(r_k / r_{k+1})` for step sequences halving each time.
fn observed_orders(residuals: &[f64], steps: &[f64]) -> Vec<f64> {
    residuals
        .windows(2)
        .zip(steps.windows(2))
        .map(|(r, s)| (r[0] / r[1]).ln() / (s[0] / s[1]).ln())
        .collect()
}

fn hydro(cfg: &ExperimentConfig, tau: f64, eta: f64, steps: &[f64], min_order: f64, report: &mut Report) -> Result<()> {
    let p = cfg.profile()?;
    let mut t = Table::new("hydro", &["tau", "eta", "step", "pde", "identity"]);
    let mut res = Vec::new();
    for &s in steps {
        let r = hydro_residual(&p, tau, eta, s)?;
        t.push([f(tau), f(eta), f(s), f(r.pde), f(r.identity)]);
        report.lines.push(format!("step {s:e}: residual {:.3e}, identity {:.3e}", r.pde, r.identity));
        report.passed &= r.identity <= 1e-9;
        res.push(r.pde.abs());
    }
    if res.iter().all(|&r| r > 0.0) {
        let orders = observed_orders(&res, steps);
        report.lines.push(format!("observed orders {orders:?}"));
        report.passed &= orders.iter().all(|&o| o >= min_order);
    }
    report.tables.push(t);
    Ok(())
}

/// One row of the oracle-check matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    /// Worst observed error (or failure indicator) of the check.
    pub error: f64,
    pub tolerance: f64,
    /// The check is `error >= tolerance` rather than `error <= tolerance`.
    pub at_least: bool,
    pub pass: bool,
}

fn row(name: &str, error: f64, tolerance: f64) -> CheckRow {
    CheckRow {
        name: name.into(),
        error,
        tolerance,
        at_least: false,
        pass: error <= tolerance,
    }
}

/// The deterministic identities: closed forms, duality, hydrodynamics,
/// Fredholm against both exact oracles, the two kernel representations,
/// Airy and Tracy–Widom consistency, and the discretization rate.
pub fn oracle_suite() -> Result<Vec<CheckRow>> {
    let homog = SpeedProfile::constant(1.0)?;
    let up = SpeedProfile::two_piece(1.0, 3.0, 5.0)?;
    let down = SpeedProfile::two_piece(1.0, 3.0, 0.5)?;
    let mut rows = Vec::new();

    let mut worst: f64 = 0.0;
    for eta in [1.5f64, 2.0, 4.0, 9.0] {
        let q = limit_quantities(&homog, 1.0, eta)?;
        let s = eta.sqrt();
        worst = worst
            .max((q.z - (1.0 - s)).abs())
            .max((q.h - (s - 1.0).powi(2)).abs())
            .max((q.rho - (1.0 - 1.0 / s)).abs());
    }
    rows.push(row("homogeneous closed forms", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for p in [&homog, &up, &down] {
        for eta in [1.5, 2.5, 4.0, 6.0, 8.0] {
            let te = p.tau_e(eta)?;
            for frac in [0.2, 0.45, 0.7, 0.9] {
                let tau = frac * te;
                worst = worst.max((legendre_height(p, tau, eta)? - limit_quantities(p, tau, eta)?.h).abs());
            }
        }
    }
    rows.push(row("legendre duality", worst, 1e-8));

    let steps = [1e-2, 5e-3, 2.5e-3];
    let mut min_order = f64::INFINITY;
    let mut identity: f64 = 0.0;
    for (p, tau, eta) in [(&homog, 1.0, 4.0), (&up, 1.0, 4.5), (&down, 2.0, 5.0)] {
        let mut res = Vec::new();
        for s in steps {
            let r = hydro_residual(p, tau, eta, s)?;
            identity = identity.max(r.identity);
            res.push(r.pde.abs());
        }
        min_order = observed_orders(&res, &steps).into_iter().fold(min_order, f64::min);
    }
    rows.push(CheckRow {
        name: "hydrodynamic residual order".into(),
        error: min_order,
        tolerance: 1.8,
        at_least: true,
        pass: min_order >= 1.8,
    });
    rows.push(row("flux identity", identity, 1e-9));

    let quad = QuadratureSpec::default();
    let (mut e_chain, mut e_schur, mut tail) = (0.0f64, 0.0f64, 0.0f64);
    let vectors: [&[f64]; 3] = [&[1.0, 1.0, 1.0, 1.0], &[1.0, 0.5, 2.0, 1.5], &[2.0, 3.0, 0.7, 1.2]];
    for xi in vectors {
        let rates = DiscreteRates::explicit(xi.to_vec())?;
        for n in 2..=4 {
            for t in [0.3, 0.7, 1.5] {
                let chain = ctmc_height_dist(&xi[..n], t)?;
                let cap = weight_cap_for(&xi[..n], t, 1e-9).min(26);
                let schur = height_dist_truncated(&rates, t, n, cap, 1e-4)?;
                tail = tail.max(schur.tail_bound);
                for y in 0..n as i64 {
                    let g = gap_probability(&GapQuery::new(DownRightPath::single(t, n)?, vec![y])?, &rates, &quad)?.probability;
                    e_chain = e_chain.max((g - chain.tail_gt(y)).abs());
                    // P(h > y) = P(λ'_1 < N − y)
                    let s: f64 = (0..n as i64 - y).map(|l| schur.prob(l)).sum();
                    e_schur = e_schur.max((g - s).abs());
                }
            }
        }
    }
    rows.push(row("fredholm vs chain", e_chain, 1e-6));
    rows.push(row("fredholm vs truncated schur", e_schur, 1e-5 + tail));

    let rates = up.discretize(1.0, 6)?;
    let mut worst: f64 = 0.0;
    for (p, q) in representation_grid() {
        worst = worst.max((eval_k(&p, &q, &rates, &quad)? - eval_k_rewritten(&p, &q, &rates, &quad)?).norm());
    }
    rows.push(row("kernel representations", worst, 1e-8));

    let mut worst: f64 = 0.0;
    for x in [-2.0, -0.5, 0.0, 1.0] {
        for y in [-1.5, 0.3, 2.0] {
            worst = worst.max((crate::airy::airy_kernel(x, y)? - crate::airy::airy_kernel_contour(x, y)).abs());
        }
    }
    rows.push(row("airy kernel representations", worst, 1e-8));
    let mut worst: f64 = 0.0;
    for r in [-2.0, 0.0, 2.0] {
        let a = crate::airy::tw_gue_cdf(&crate::airy::NystromGrid::new(r, DEFAULT_NODES)?)?;
        let b = crate::airy::tw_gue_cdf(&crate::airy::NystromGrid::new(r, 2 * DEFAULT_NODES)?)?;
        worst = worst.max((a - b).abs());
    }
    rows.push(row("tracy-widom grid doubling", worst, 1e-10));

    let ratios = discretization_ratios(&up, 1.0, 4.0, &[100, 200, 400])?;
    let off = ratios.iter().map(|r| (r - 2.0).abs()).fold(0.0, f64::max);
    rows.push(row("discretization rate |ratio - 2|", off, 0.4));
    Ok(rows)
}

/// Thirty admissible pairs `(p, q)` with `y < 0`, `s > 0` for six sites:
/// equal-time pairs, and pairs at distinct times or levels in both orders.
pub fn representation_grid() -> Vec<(SpaceTimePoint, SpaceTimePoint)> {
    let mut out = Vec::new();
    for (x, y) in [(-1, -1), (-2, -1), (0, -3), (1, -2), (-4, -4), (2, -1), (-3, -2), (0, -1), (-1, -5), (3, -2)] {
        out.push((SpaceTimePoint::new(0.8, 6, x), SpaceTimePoint::new(0.8, 6, y)));
    }
    for (x, y) in [(-1, -1), (0, -2), (-3, -1), (1, -3), (-2, -2)] {
        out.push((SpaceTimePoint::new(0.4, 6, x), SpaceTimePoint::new(1.1, 4, y)));
        out.push((SpaceTimePoint::new(0.9, 5, x), SpaceTimePoint::new(0.9, 3, y)));
    }
    for (x, y) in [(-1, -2), (-2, -1), (-1, -1), (-3, -2), (-2, -3)] {
        out.push((SpaceTimePoint::new(1.3, 3, x), SpaceTimePoint::new(0.6, 5, y)));
        out.push((SpaceTimePoint::new(0.7, 2, x), SpaceTimePoint::new(0.7, 6, y)));
    }
    out
}

/// `|𝔥_L/L − 𝔥|` at successive scales, returned as ratios of consecutive
/// errors.
pub fn discretization_ratios(profile: &SpeedProfile, tau: f64, eta: f64, scales: &[usize]) -> Result<Vec<f64>> {
    let h = limit_quantities(profile, tau, eta)?.h;
    let err = scales
        .iter()
        .map(|&l| {
            let lf = l as f64;
            let n = (eta * lf).floor() as usize;
            let c = discrete_crit(&profile.discretize(lf, n)?, tau * lf, n, Some(lf))?;
            Ok((c.h / lf - h).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(err.windows(2).map(|w| w[0] / w[1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_and_validates() {
        let text = r#"
mode = "converge"
seed = 3
tau = 1.0
eta = 4.0
scales = [20, 40]
replicas = 10

[profile]
pieces = [{ start = 0.0, kind = "constant", value = 1.0 }]
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.mode.name(), "converge");
        c.validate().unwrap();
        let no_seed = text.replace("seed = 3\n", "");
        let c = ExperimentConfig::from_toml(&no_seed).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("mode = \"bogus\"").is_err());
    }

    #[test]
    fn tables_render_as_csv() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(["1".to_string(), "2.5".to_string()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,2.5\n");
    }

    #[test]
    fn grid_is_admissible() {
        let g = representation_grid();
        assert_eq!(g.len(), 30);
        for (p, q) in g {
            assert!(q.x < 0 && q.t > 0.0);
            assert!(crate::kernel::check_order(&p, &q).is_ok());
        }
    }
}
