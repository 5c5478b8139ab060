//! Command-line front end. Every subcommand writes its artifacts into the
//! output directory; each file starts with the generator version and the
//! resolved configuration so a run can be replayed byte for byte.

use crate::asymptotics::convergence_sweep;
use crate::basis::{graded_indices, space_dimension, MultiIndex, Point};
use crate::equilibrium::{weighted_ball_green, EquilibriumKind, EquilibriumMeasure};
use crate::error::{Error, Result};
use crate::fekete::{approx_fekete, exhaustive_fekete, tfd_csv, tfd_table, FeketeMethod, FeketeOptions};
use crate::gram::{christoffel, moment_matrix, orthonormal_factor};
use crate::measure::{make_design, DesignJson, DesignSpace, DiscreteDesign, WeightFunction};
use crate::optimal::{certify, d_optimal, vdm_integral_christoffel, vdm_integral_det, Certificate, SolverOptions};
use crate::basis::PolyBasis;
use crate::report::{fmt_real, Csv};
use crate::simulate::{simulate_regression, variance_identity_check, RegressionExperiment};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const THREADS_ENV: &str = "OPTDESIGN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "optdesign", version, about = "Weighted optimal designs, Fekete points and equilibrium measures")]
pub struct Cli {
    /// Worker threads (falls back to OPTDESIGN_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// D-optimal design plus Kiefer–Wolfowitz certificate.
    Design(Opts),
    /// G-value and certificate of a given design.
    Gvalue(Opts),
    /// Approximate (or exhaustive) weighted Fekete points.
    Fekete(Opts),
    /// s-th order diameters beside optimal-design Gram roots.
    Tfd(Opts),
    /// Density, CDF and moment tables of an equilibrium measure.
    Equilibrium(Opts),
    /// Convergence of optimal designs to an equilibrium measure.
    Converge(Opts),
    /// Monte Carlo regression on a design.
    Simulate(Opts),
    /// Brute-force Vandermonde-integral checks on small random designs.
    Oracle(Opts),
}

impl Command {
    fn split(self) -> (&'static str, Opts) {
        match self {
            Command::Design(o) => ("design", o),
            Command::Gvalue(o) => ("gvalue", o),
            Command::Fekete(o) => ("fekete", o),
            Command::Tfd(o) => ("tfd", o),
            Command::Equilibrium(o) => ("equilibrium", o),
            Command::Converge(o) => ("converge", o),
            Command::Simulate(o) => ("simulate", o),
            Command::Oracle(o) => ("oracle", o),
        }
    }
}

/// All options; each subcommand reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Opts {
    /// interval | cube | ball | simplex | disk | custom
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[arg(long = "dim")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Size parameter (half-width, radius, simplex scale).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Points per axis, or rings for ball and disk.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Directions per ring (ball) or angles per ring (disk).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    /// JSON list of points `[[[re, im], ...], ...]` for the custom domain.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_file: Option<PathBuf>,
    /// unit | gaussian
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Merge design atoms closer than this distance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_radius: Option<f64>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exchange_passes: Option<usize>,
    /// Search every subset of the grid (tiny grids only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<bool>,
    /// Equilibrium measure: arcsine | cube | ball | simplex | weighted-complex-ball
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Highest total degree of test monomials.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    /// Rows in the density table.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Design JSON (as written by `design`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design_file: Option<PathBuf>,
    /// Noise standard deviation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Number of observations per trial.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// True coefficients (default all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// Extra real evaluation points for the variance table (1D).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<Vec<f64>>,
    /// Atoms per random design in `oracle`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    /// Add wall-clock columns (output is then no longer byte-stable).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

impl Opts {
    /// `self` over `base`, field by field.
    pub fn overlay(&self, base: &Opts) -> Result<Opts> {
        let mut merged = serde_json::to_value(base)?;
        let top = serde_json::to_value(self)?;
        if let (Some(m), Some(t)) = (merged.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                m.insert(k.clone(), v.clone());
            }
        }
        Ok(serde_json::from_value(merged)?)
    }

    fn domain(&self) -> &str {
        self.domain.as_deref().unwrap_or("interval")
    }

    /// Fill every default the subcommand will read.
    fn resolve(mut self, sub: &str) -> Result<Opts> {
        let domain = self.domain().to_string();
        let (grid, dirs) = match domain.as_str() {
            "interval" => (201, None),
            "cube" | "simplex" => (21, None),
            "ball" => (12, Some(24)),
            "disk" | "complex-disk" => (20, Some(32)),
            "custom" | "custom-grid" => (0, None),
            other => return Err(Error::invalid(format!("unknown domain '{other}'"))),
        };
        self.domain = Some(domain.clone());
        self.dim.get_or_insert(1);
        self.a.get_or_insert(1.0);
        if grid > 0 {
            self.grid.get_or_insert(grid);
        }
        if let Some(d) = dirs {
            self.directions.get_or_insert(d);
        }
        let weight = self.weight.get_or_insert_with(|| "unit".into()).clone();
        if weight == "gaussian" {
            self.weight_scale.get_or_insert(1.0);
        }
        match sub {
            "design" | "fekete" => {
                self.degree.get_or_insert(2);
            }
            "gvalue" | "simulate" => {
                if self.degree.is_none() {
                    let from_file = match &self.design_file {
                        Some(p) => design_file_degree(p)?,
                        None => None,
                    };
                    self.degree = Some(from_file.unwrap_or(2));
                }
            }
            "oracle" => {
                self.degree.get_or_insert(2);
                self.atoms.get_or_insert(3);
                self.instances.get_or_insert(5);
                self.seed.get_or_insert(0);
            }
            "tfd" | "converge" => {
                self.degrees.get_or_insert_with(|| vec![2, 4, 8, 16]);
            }
            _ => {}
        }
        if matches!(sub, "design" | "tfd" | "converge" | "simulate") {
            self.epsilon.get_or_insert(1e-5);
        }
        if matches!(sub, "fekete" | "tfd") {
            self.exchange_passes.get_or_insert(FeketeOptions::default().exchange_passes);
        }
        if matches!(sub, "equilibrium" | "converge") {
            if self.target.is_none() {
                self.target = Some(default_target(&domain, &weight)?);
            }
            self.t_max.get_or_insert(6);
        }
        if sub == "equilibrium" {
            self.samples.get_or_insert(201);
        }
        if sub == "simulate" {
            self.sigma.get_or_insert(0.1);
            self.observations.get_or_insert(100);
            self.trials.get_or_insert(10_000);
            self.seed.get_or_insert(0);
        }
        Ok(self)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            epsilon: self.epsilon.unwrap_or(1e-5),
            max_iter: self.max_iter,
            merge_radius: self.merge_radius.unwrap_or(0.0),
            ..Default::default()
        }
    }
}

/// Degree recorded in a design file, if any.
fn design_file_degree(path: &Path) -> Result<Option<usize>> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let inner = v.get("result").unwrap_or(&v);
    Ok(inner.get("degree").and_then(|d| d.as_u64()).map(|d| d as usize))
}

fn default_target(domain: &str, weight: &str) -> Result<String> {
    Ok(match (domain, weight) {
        ("interval", "unit") => "arcsine",
        ("cube", "unit") => "cube",
        ("ball", "unit") => "ball",
        ("simplex", "unit") => "simplex",
        ("disk" | "complex-disk", "gaussian") => "weighted-complex-ball",
        _ => {
            return Err(Error::invalid(format!(
                "no closed-form target for domain '{domain}' with weight '{weight}'; pass --target"
            )))
        }
    }
    .into())
}

/// Resolved configuration recorded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(flatten)]
    pub opts: Opts,
}

impl RunConfig {
    /// Merge the config file (if any) under the command-line flags.
    pub fn from_cli(cli: Cli) -> Result<RunConfig> {
        let (sub, flags) = cli.command.split();
        let (file_opts, file_threads) = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let mut v: serde_json::Value = serde_json::from_str(&text)?;
                let obj = v
                    .as_object_mut()
                    .ok_or_else(|| Error::invalid("config file must hold a JSON object"))?;
                if let Some(s) = obj.remove("subcommand") {
                    if s.as_str() != Some(sub) {
                        return Err(Error::invalid(format!(
                            "config file is for subcommand {s}, not '{sub}'"
                        )));
                    }
                }
                let threads = match obj.remove("threads") {
                    Some(t) => Some(serde_json::from_value::<usize>(t)?),
                    None => None,
                };
                (serde_json::from_value::<Opts>(v)?, threads)
            }
            None => (Opts::default(), None),
        };
        let threads = match cli.threads.or(file_threads) {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) if !v.trim().is_empty() => Some(v.trim().parse().map_err(|_| {
                    Error::invalid(format!("{THREADS_ENV}='{v}' is not a thread count"))
                })?),
                _ => None,
            },
        };
        if threads == Some(0) {
            return Err(Error::invalid("thread count must be >= 1"));
        }
        Ok(RunConfig {
            subcommand: sub.to_string(),
            threads,
            opts: flags.overlay(&file_opts)?.resolve(sub)?,
        })
    }

    fn out_dir(&self) -> PathBuf {
        self.opts.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// The part of the config that determines the results.
    fn header_config(&self) -> RunConfig {
        let mut c = self.clone();
        c.opts.out = None;
        c.threads = None;
        c
    }
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    generator: String,
    config: &'a RunConfig,
    result: T,
}

struct Writer {
    dir: PathBuf,
    config: RunConfig,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(cfg: &RunConfig) -> Result<Writer> {
        let dir = cfg.out_dir();
        fs::create_dir_all(&dir)?;
        Ok(Writer {
            dir,
            config: cfg.header_config(),
            written: Vec::new(),
        })
    }

    fn generator() -> String {
        format!("optdesign {VERSION}")
    }

    fn put(&mut self, name: &str, text: String) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, result: T) -> Result<()> {
        let art = Artifact {
            generator: Self::generator(),
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&art)?;
        text.push('\n');
        self.put(name, text)
    }

    fn header_lines(&self) -> Result<Vec<String>> {
        Ok(vec![
            Self::generator(),
            format!("config {}", serde_json::to_string(&self.config)?),
        ])
    }

    fn csv(&mut self, name: &str, mut table: Csv) -> Result<()> {
        let mut comments = self.header_lines()?;
        comments.append(&mut table.comments);
        table.comments = comments;
        self.put(name, table.render())
    }

    fn plot(&mut self, name: &str, body: String) -> Result<()> {
        let mut text = String::new();
        for line in self.header_lines()? {
            text.push_str(&format!("# {line}\n"));
        }
        text.push_str(&body);
        self.put(name, text)
    }
}

fn build_space(o: &Opts) -> Result<DesignSpace> {
    let (d, a) = (o.dim.unwrap_or(1), o.a.unwrap_or(1.0));
    let grid = o.grid.unwrap_or(0);
    let dirs = o.directions.unwrap_or(0);
    match o.domain() {
        "interval" => {
            if d != 1 {
                return Err(Error::invalid("interval domain has dim 1; use cube"));
            }
            DesignSpace::interval(a, grid)
        }
        "cube" => DesignSpace::cube(d, a, grid),
        "ball" => DesignSpace::ball(d, a, grid, dirs),
        "simplex" => DesignSpace::simplex(d, a, grid),
        "disk" | "complex-disk" => {
            if d != 1 {
                return Err(Error::invalid("the disk domain lives in C^1; use a custom grid"));
            }
            DesignSpace::complex_disk(a, grid, dirs)
        }
        "custom" | "custom-grid" => {
            let path = o
                .points_file
                .as_ref()
                .ok_or_else(|| Error::invalid("custom domain needs --points-file"))?;
            let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(&fs::read_to_string(path)?)?;
            let pts = raw
                .into_iter()
                .map(|c| Point::new(c.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
                .collect::<Result<Vec<_>>>()?;
            DesignSpace::custom(pts)
        }
        other => Err(Error::invalid(format!("unknown domain '{other}'"))),
    }
}

fn build_weight(o: &Opts) -> Result<WeightFunction> {
    match o.weight.as_deref().unwrap_or("unit") {
        "unit" => Ok(WeightFunction::unit()),
        "gaussian" => {
            let c = o.weight_scale.unwrap_or(1.0);
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::invalid("weight scale must be finite and >= 0"));
            }
            Ok(WeightFunction::gaussian_scaled(c))
        }
        other => Err(Error::invalid(format!("unknown weight '{other}'"))),
    }
}

fn build_target(o: &Opts) -> Result<EquilibriumMeasure> {
    let kind: EquilibriumKind = o
        .target
        .as_deref()
        .ok_or_else(|| Error::invalid("--target is required"))?
        .parse()?;
    let d = o.dim.unwrap_or(1);
    match kind {
        EquilibriumKind::IntervalArcsine if d != 1 => Err(Error::invalid("the arcsine target is one-dimensional")),
        EquilibriumKind::IntervalArcsine => EquilibriumMeasure::arcsine(o.a.unwrap_or(1.0)),
        EquilibriumKind::WeightedComplexBall => EquilibriumMeasure::weighted_complex_ball(d),
        k => EquilibriumMeasure::new(k, d, o.a.unwrap_or(1.0)),
    }
}

fn load_design(path: &Path) -> Result<DiscreteDesign> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let inner = v.get("result").cloned().unwrap_or(v);
    let json: DesignJson = serde_json::from_value(inner)?;
    DiscreteDesign::from_json(&json)
}

fn degree(o: &Opts) -> usize {
    o.degree.unwrap_or(2)
}

#[derive(Serialize)]
struct DesignCertificate {
    certificate: Certificate,
    solver_iterations: usize,
    solver_converged: bool,
    solver_kw_gap: f64,
    solver_log_det: f64,
    atoms: usize,
}

fn cmd_design(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let space = build_space(o)?;
    let weight = build_weight(o)?;
    let s = degree(o);
    let r = d_optimal(&space, &weight, s, &o.solver())?;
    let cert = certify(&r.design, &weight, s, &space)?;
    println!(
        "design: {} atoms, log det = {:.12e}, kw_gap = {:.3e}, iterations = {}",
        r.design.len(),
        r.log_det,
        cert.kw_gap,
        r.iterations
    );
    w.json("design.json", r.design.to_json(s))?;
    w.json(
        "certificate.json",
        DesignCertificate {
            certificate: cert,
            solver_iterations: r.iterations,
            solver_converged: r.converged,
            solver_kw_gap: r.kw_gap,
            solver_log_det: r.log_det,
            atoms: r.design.len(),
        },
    )?;
    if !r.converged {
        return Err(Error::Numerical(format!(
            "no convergence within {} iterations (kw_gap {:.3e})",
            r.iterations, r.kw_gap
        )));
    }
    Ok(())
}

fn cmd_gvalue(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let path = o
        .design_file
        .as_ref()
        .ok_or_else(|| Error::invalid("gvalue needs --design-file"))?;
    let design = load_design(path)?;
    let space = build_space(o)?;
    let cert = certify(&design, &build_weight(o)?, degree(o), &space)?;
    println!("g_value = {:.12e} (n = {}), kw_gap = {:.3e}", cert.g_value, cert.n, cert.kw_gap);
    w.json("gvalue.json", cert)
}

#[derive(Serialize)]
struct FeketeOut {
    method: FeketeMethod,
    degree: usize,
    n: usize,
    delta_s: f64,
    weighted_vdm_log: f64,
    points: Vec<Vec<[f64; 2]>>,
    grid_indices: Vec<usize>,
}

fn cmd_fekete(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let space = build_space(o)?;
    let weight = build_weight(o)?;
    let s = degree(o);
    let r = if o.exhaustive.unwrap_or(false) {
        exhaustive_fekete(&space, &weight, s)?
    } else {
        let opts = FeketeOptions {
            exchange_passes: o.exchange_passes.unwrap_or(20),
        };
        approx_fekete(&space, &weight, s, &opts)?
    };
    println!("delta_s = {:.12e} ({}, {} points)", r.delta_s, r.method, r.points.len());
    w.json(
        "fekete.json",
        FeketeOut {
            method: r.method,
            degree: s,
            n: r.points.len(),
            delta_s: r.delta_s,
            weighted_vdm_log: r.weighted_vdm_log,
            points: r.points.iter().map(|p| p.coords().iter().map(|c| [c.re, c.im]).collect()).collect(),
            grid_indices: r.indices.clone(),
        },
    )
}

fn cmd_tfd(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let space = build_space(o)?;
    let weight = build_weight(o)?;
    let fopts = FeketeOptions {
        exchange_passes: o.exchange_passes.unwrap_or(20),
    };
    let degrees = o.degrees.clone().unwrap_or_default();
    let rows = tfd_table(&space, &weight, &degrees, &fopts, &o.solver())?;
    for r in &rows {
        println!("s = {:>3}  delta_s = {:.6}  gram_root = {:.6}  gap = {:.3e}", r.s, r.delta_s, r.gram_root, r.gap);
    }
    w.csv("tfd.csv", tfd_csv(&rows))
}

fn cmd_equilibrium(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let m = build_target(o)?;
    let samples = o.samples.unwrap_or(201).max(2);
    let (d, a) = (m.dim(), m.size());
    let mut dens = if m.is_complex() {
        Csv::new(&["r", "density", "green"])
    } else if d == 1 {
        Csv::new(&["x", "density", "cdf"])
    } else {
        Csv::new(&["t", "density"])
    };
    for k in 0..samples {
        let u = k as f64 / (samples - 1) as f64;
        if m.is_complex() {
            // radial profile along the first coordinate axis, out to |z| = 1
            let mut c = vec![Complex64::new(0.0, 0.0); d];
            c[0] = Complex64::new(u, 0.0);
            let p = Point::new(c)?;
            dens.push(vec![fmt_real(u), fmt_real(m.density(&p)?), fmt_real(weighted_ball_green(&p))]);
        } else if d == 1 {
            let (lo, hi) = if m.kind() == EquilibriumKind::Simplex { (0.0, a) } else { (-a, a) };
            let x = lo + (hi - lo) * u;
            dens.push(vec![fmt_real(x), fmt_real(m.density(&Point::real1(x))?), fmt_real(m.cdf(x)?)]);
        } else {
            // from the centre of the domain along the first axis to the boundary
            let (centre, reach) = match m.kind() {
                EquilibriumKind::Simplex => {
                    let c = a / (d + 1) as f64;
                    (c, a - (d - 1) as f64 * c)
                }
                _ => (0.0, a),
            };
            let mut x = vec![centre; d];
            x[0] = centre + (reach - centre) * u;
            dens.push(vec![fmt_real(u), fmt_real(m.density(&Point::real(&x))?)]);
        }
    }
    dens.comments.push(format!("measure {}", m.describe()));
    w.csv("equilibrium_density.csv", dens)?;

    let t_max = o.t_max.unwrap_or(6);
    let mut mom = Csv::new(&["alpha", "beta", "moment"]);
    let fmt_idx = |m: &MultiIndex| m.0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";");
    let zero = MultiIndex(vec![0; d]);
    for alpha in graded_indices(d, t_max) {
        if m.is_complex() {
            for beta in graded_indices(d, t_max - alpha.degree()) {
                let v = m.mixed_moment(&alpha, &beta)?;
                mom.push(vec![fmt_idx(&alpha), fmt_idx(&beta), fmt_real(v)]);
            }
        } else {
            mom.push(vec![fmt_idx(&alpha), fmt_idx(&zero), fmt_real(m.moment(&alpha)?)]);
        }
    }
    println!("{}: normalization {:.12e}", m.describe(), m.normalization());
    w.csv("equilibrium_moments.csv", mom)
}

fn cmd_converge(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let space = build_space(o)?;
    let weight = build_weight(o)?;
    let target = build_target(o)?;
    let degrees = o.degrees.clone().unwrap_or_default();
    let mut report = convergence_sweep(&space, &weight, &degrees, &target, o.t_max.unwrap_or(6), &o.solver())?;
    if !o.timing.unwrap_or(false) {
        report = report.without_runtime();
    }
    for r in &report.rows {
        println!(
            "s = {:>3}  kw_gap = {:.3e}  moment_distance = {:.6e}  ks = {}",
            r.s,
            r.kw_gap,
            r.moment_distance,
            r.ks_distance.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
        );
    }
    w.csv("converge.csv", report.to_csv())?;
    w.json("converge.json", &report)?;
    let mut metrics = vec!["moment_distance", "second_moment_error", "kw_gap"];
    if report.rows.iter().all(|r| r.ks_distance.is_some()) {
        metrics.push("ks_distance");
    }
    for metric in metrics {
        w.plot(&format!("plot_{metric}.dat"), report.plot_series(metric)?)?;
    }
    if let Some(r) = report.rows.iter().find(|r| !r.converged) {
        return Err(Error::Numerical(format!("degree {} did not converge", r.s)));
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let s = degree(o);
    let design = match &o.design_file {
        Some(p) => load_design(p)?,
        None => {
            let space = build_space(o)?;
            d_optimal(&space, &build_weight(o)?, s, &o.solver())?.design
        }
    };
    let n = space_dimension(design.dim(), s)?;
    let theta: Vec<Complex64> = match &o.theta {
        Some(t) => t.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        None => vec![Complex64::new(1.0, 0.0); n],
    };
    let exp = RegressionExperiment {
        design: design.clone(),
        degree: s,
        theta,
        sigma: o.sigma.unwrap_or(0.1),
        m: o.observations.unwrap_or(100),
        trials: o.trials.unwrap_or(10_000),
        seed: o.seed.unwrap_or(0),
    };
    let stats = simulate_regression(&exp)?;
    println!(
        "cov relative error = {:.4e}, volume proxy = {:.6e}",
        stats.cov_relative_error, stats.volume_proxy
    );
    w.json("simulate.json", &stats)?;
    if exp.sigma > 0.0 {
        let mut pts = design.support().to_vec();
        if let Some(extra) = &o.eval {
            if design.dim() != 1 {
                return Err(Error::invalid("--eval takes real points of a 1D design"));
            }
            pts.extend(extra.iter().map(|&x| Point::real1(x)));
        }
        let check = variance_identity_check(&exp, &pts)?;
        println!("variance identity: {}", if check.pass { "all ratios in [0.9, 1.1]" } else { "ratios outside [0.9, 1.1] or too few trials" });
        let mut table = check.to_csv();
        table.comments.push(format!("pass {}", check.pass));
        w.csv("variance.csv", table)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleRow {
    instance: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    det_moment: f64,
    det_vdm: f64,
    det_relative_error: f64,
    christoffel_relative_error: f64,
}

#[derive(Serialize)]
struct OracleOut {
    tolerance: f64,
    max_det_relative_error: f64,
    max_christoffel_relative_error: f64,
    rows: Vec<OracleRow>,
}

const ORACLE_TOL: f64 = 1e-8;

fn cmd_oracle(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let o = &cfg.opts;
    let s = degree(o);
    let k = o.atoms.unwrap_or(3);
    let a = o.a.unwrap_or(1.0);
    let weight = build_weight(o)?;
    let basis = PolyBasis::monomial(1, s)?;
    let mut rows = Vec::new();
    for inst in 0..o.instances.unwrap_or(5) {
        let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));
        rng.set_stream(inst as u64);
        let xs: Vec<f64> = (0..k).map(|_| rng.random_range(-a..=a)).collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let ws: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let design = make_design(xs.iter().map(|&x| Point::real1(x)).collect(), ws.clone())?;
        let mm = moment_matrix(&design, &weight, s, &basis)?;
        let det_vdm = vdm_integral_det(&design, &weight, s)?;
        let det_rel = (det_vdm - mm.det()).abs() / mm.det().abs().max(f64::MIN_POSITIVE);
        let mut k_rel: f64 = 0.0;
        if k > s {
            let ev = orthonormal_factor(&mm)?;
            let probes: Vec<f64> = xs.iter().cloned().chain((0..3).map(|_| rng.random_range(-a..=a))).collect();
            for z in probes {
                let p = Point::real1(z);
                let want = christoffel(&ev, &p)?;
                let got = vdm_integral_christoffel(&design, &weight, s, &p)?;
                k_rel = k_rel.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
            }
        }
        rows.push(OracleRow {
            instance: inst,
            points: xs,
            weights: ws,
            det_moment: mm.det(),
            det_vdm,
            det_relative_error: det_rel,
            christoffel_relative_error: k_rel,
        });
    }
    let max_det = rows.iter().map(|r| r.det_relative_error).fold(0.0, f64::max);
    let max_k = rows.iter().map(|r| r.christoffel_relative_error).fold(0.0, f64::max);
    let verdict = |name: &str, e: f64| {
        if e <= ORACLE_TOL {
            println!("{name} match: relative error ≤ 1e-8 (max {e:.3e})");
        } else {
            println!("{name} MISMATCH: relative error {e:.3e} > 1e-8");
        }
    };
    verdict("det", max_det);
    if k > s {
        verdict("christoffel", max_k);
    } else {
        println!("christoffel: skipped (designs with {k} atoms are singular at degree {s})");
    }
    w.json(
        "oracle.json",
        OracleOut {
            tolerance: ORACLE_TOL,
            max_det_relative_error: max_det,
            max_christoffel_relative_error: max_k,
            rows,
        },
    )?;
    if max_det > ORACLE_TOL || max_k > ORACLE_TOL {
        return Err(Error::Numerical("oracle mismatch".into()));
    }
    Ok(())
}

/// Run a resolved configuration; returns the artifact paths.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let work = || -> Result<Vec<PathBuf>> {
        let mut w = Writer::new(cfg)?;
        match cfg.subcommand.as_str() {
            "design" => cmd_design(cfg, &mut w),
            "gvalue" => cmd_gvalue(cfg, &mut w),
            "fekete" => cmd_fekete(cfg, &mut w),
            "tfd" => cmd_tfd(cfg, &mut w),
            "equilibrium" => cmd_equilibrium(cfg, &mut w),
            "converge" => cmd_converge(cfg, &mut w),
            "simulate" => cmd_simulate(cfg, &mut w),
            "oracle" => cmd_oracle(cfg, &mut w),
            other => Err(Error::invalid(format!("unknown subcommand '{other}'"))),
        }?;
        Ok(w.written)
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(work),
        None => work(),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else {
        3
    }
}

/// Parse arguments, run, and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
