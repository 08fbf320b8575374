//! Reproducible experiment runs: spec files, sample sets, figure
//! reproductions and the sample-complexity benchmark.
//!
//! Every run is a pure function of its [`ExperimentSpec`] (or figure options):
//! records are simulated in parallel but collected in index order, so CSV
//! outputs are byte-identical across runs and worker counts.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{empirical_cone, records_to_csv, ConeBounds, EstimateReport, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::input_gen::{item_rng, random_walk, uniform_coeffs, GridCoverSpec, WienerSpec};
use crate::plant::{trajectory_to_csv, InputHold, PlantModel};
use crate::plot::{render_figure, PlotPanel};
use crate::signal::{
    make_basis, running_inner_product, samples_for, synthesize, BasisKind, BasisSet, Signal,
};
use crate::DEFAULT_DT;

/// Sector of the benchmark LTI plant and, by construction, of the pendulum.
pub const TRUE_CONE: (f64, f64) = (0.25, 1.25);

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    #[serde(flatten)]
    pub kind: BasisKind,
    pub n_basis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingSpec {
    /// Covering grid with `2N - 1` points per basis axis.
    Grid {
        #[serde(rename = "N")]
        half_density: u32,
        #[serde(default = "one")]
        u_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<u64>,
    },
    /// I.i.d. uniform coefficients in `[-u_max, u_max]`.
    Uniform {
        count: usize,
        #[serde(default = "one")]
        u_max: f64,
        #[serde(default)]
        eps_min: f64,
    },
    /// Independent random walks of length `T`, or with `sweep`, every prefix
    /// `T_min, T_min + step, ..., T` of one walk.
    Wiener {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<SweepSpec>,
        #[serde(default = "one")]
        step_scale: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(rename = "T_min")]
    pub t_min: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Cone,
    Svm,
    Gain,
}

/// A single experiment as read from a JSON spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    pub sampling: SamplingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_name() -> String {
    "experiment".into()
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        samples_for(self.horizon, self.dt)?;
        match &self.sampling {
            SamplingSpec::Grid {
                half_density, u_max, ..
            } => {
                let basis = self.require_basis()?;
                GridCoverSpec::new(*u_max, basis.n_basis, *half_density)?;
            }
            SamplingSpec::Uniform {
                count,
                u_max,
                eps_min,
            } => {
                self.require_basis()?;
                self.require_seed()?;
                if *count == 0 {
                    return Err(Error::InvalidArgument("sampling.count must be at least 1".into()));
                }
                if !(*u_max > 0.0) || !u_max.is_finite() {
                    return Err(Error::range("u_max", *u_max, "(0, inf)"));
                }
                if !(*eps_min >= 0.0) {
                    return Err(Error::range("eps_min", *eps_min, "[0, inf)"));
                }
            }
            SamplingSpec::Wiener { count, sweep, .. } => {
                self.require_seed()?;
                if sweep.is_some() && count.is_some_and(|c| c != 1) {
                    return Err(Error::InvalidArgument(
                        "a Wiener sweep uses a single path; drop sampling.count".into(),
                    ));
                }
                if count == &Some(0) {
                    return Err(Error::InvalidArgument("sampling.count must be at least 1".into()));
                }
                self.wiener_spec()?.validate()?;
            }
        }
        Ok(())
    }

    fn require_basis(&self) -> Result<&BasisSpec> {
        self.basis
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("this sampling mode needs a `basis`".into()))
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidArgument("stochastic sampling needs a `seed`".into()))
    }

    fn wiener_spec(&self) -> Result<WienerSpec> {
        let SamplingSpec::Wiener {
            sweep, step_scale, ..
        } = &self.sampling
        else {
            return Err(Error::InvalidArgument("not a Wiener sampling spec".into()));
        };
        let seed = self.require_seed()?;
        let mut w = match sweep {
            Some(s) => WienerSpec::sweep(self.dt, s.t_min, self.horizon, s.step, seed),
            None => WienerSpec::fixed(self.dt, self.horizon, seed),
        };
        w.step_scale = *step_scale;
        Ok(w)
    }

    /// Grid size and covering radius, when sampling is a grid.
    pub fn derived(&self) -> Derived {
        match &self.sampling {
            SamplingSpec::Grid {
                half_density, u_max, ..
            } => {
                match self
                    .basis
                    .as_ref()
                    .and_then(|b| GridCoverSpec::new(*u_max, b.n_basis, *half_density).ok())
                {
                    Some(g) => Derived {
                        k: Some(g.cardinality_f64()),
                        delta: Some(g.cover_radius()),
                    },
                    None => Derived::default(),
                }
            }
            SamplingSpec::Uniform { count, .. } => Derived {
                k: Some(*count as f64),
                delta: None,
            },
            SamplingSpec::Wiener { .. } => Derived {
                k: self
                    .wiener_spec()
                    .and_then(|w| w.prefix_ends())
                    .ok()
                    .map(|e| match &self.sampling {
                        SamplingSpec::Wiener {
                            sweep: None, count, ..
                        } => count.unwrap_or(1) as f64,
                        _ => e.len() as f64,
                    }),
                delta: None,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub delta: Option<f64>,
}

enum Source {
    Grid { basis: BasisSet, grid: GridCoverSpec },
    Coefficients { basis: BasisSet, coeffs: Vec<Vec<f64>> },
    Walks { wiener: WienerSpec, count: usize },
    Sweep { wiener: WienerSpec, ends: Vec<usize> },
}

/// The inputs of an experiment, generated lazily by index.
pub struct SampleSet {
    source: Source,
    dt: f64,
}

impl SampleSet {
    pub fn generate(spec: &ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let basis = || -> Result<BasisSet> {
            let b = spec.require_basis()?;
            make_basis(b.kind.clone(), b.n_basis, spec.horizon, spec.dt)
        };
        let source = match &spec.sampling {
            SamplingSpec::Grid {
                half_density,
                u_max,
                cap,
            } => {
                let basis = basis()?;
                let mut grid = GridCoverSpec::new(*u_max, basis.n_basis(), *half_density)?;
                if let Some(cap) = cap {
                    grid = grid.with_cap(*cap);
                }
                grid.check_budget()?;
                Source::Grid { basis, grid }
            }
            SamplingSpec::Uniform {
                count,
                u_max,
                eps_min,
            } => {
                let basis = basis()?;
                let coeffs = uniform_coeffs(*u_max, *eps_min, basis.n_basis(), *count, spec.require_seed()?)?;
                Source::Coefficients { basis, coeffs }
            }
            SamplingSpec::Wiener { count, sweep, .. } => {
                let wiener = spec.wiener_spec()?;
                if sweep.is_some() {
                    let ends = wiener.prefix_ends()?;
                    Source::Sweep { wiener, ends }
                } else {
                    Source::Walks {
                        wiener,
                        count: count.unwrap_or(1),
                    }
                }
            }
        };
        Ok(Self { source, dt: spec.dt })
    }

    pub fn len(&self) -> usize {
        match &self.source {
            Source::Grid { grid, .. } => grid.cardinality().unwrap_or(u64::MAX) as usize,
            Source::Coefficients { coeffs, .. } => coeffs.len(),
            Source::Walks { count, .. } => *count,
            Source::Sweep { ends, .. } => ends.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn walk_horizon(wiener: &WienerSpec, ends: Option<&[usize]>) -> f64 {
        match ends {
            Some(e) => *e.last().unwrap() as f64 * wiener.dt,
            None => match wiener.horizon {
                crate::input_gen::WienerHorizon::Fixed { horizon } => horizon,
                crate::input_gen::WienerHorizon::Sweep { t_max, .. } => t_max,
            },
        }
    }

    /// Input trajectory `index`.
    pub fn input(&self, index: usize) -> Result<Signal> {
        if index >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "sample index {index} out of range (set has {})",
                self.len()
            )));
        }
        match &self.source {
            Source::Grid { basis, grid } => synthesize(basis, &grid.point(index as u64)),
            Source::Coefficients { basis, coeffs } => synthesize(basis, &coeffs[index]),
            Source::Walks { wiener, .. } => random_walk(
                wiener.dt,
                Self::walk_horizon(wiener, None),
                wiener.step_scale,
                &mut item_rng(wiener.seed, index as u64),
            ),
            Source::Sweep { wiener, ends } => {
                let path = self.sweep_path(wiener, ends)?;
                Signal::new(self.dt, path.values()[..=ends[index]].to_vec())
            }
        }
    }

    fn sweep_path(&self, wiener: &WienerSpec, ends: &[usize]) -> Result<Signal> {
        random_walk(
            wiener.dt,
            Self::walk_horizon(wiener, Some(ends)),
            wiener.step_scale,
            &mut item_rng(wiener.seed, 0),
        )
    }

    /// Input and output of trajectory `index`.
    pub fn trajectory(&self, plant: &PlantModel, index: usize) -> Result<(Signal, Signal)> {
        let u = self.input(index)?;
        let y = plant.simulate(&u)?;
        Ok((u, y))
    }

    /// Moments of every trajectory, in index order.
    pub fn simulate(&self, plant: &PlantModel) -> Result<Vec<TrajectoryRecord>> {
        if let Source::Sweep { wiener, ends } = &self.source {
            // Causality: each prefix response is the truncation of the full one.
            let u = self.sweep_path(wiener, ends)?;
            let y = plant.simulate(&u)?;
            let uu = running_inner_product(&u, &u)?;
            let yu = running_inner_product(&y, &u)?;
            let yy = running_inner_product(&y, &y)?;
            return Ok(ends
                .iter()
                .map(|&k| TrajectoryRecord {
                    horizon: u.time(k),
                    norm_u_sq: uu[k],
                    cross: yu[k],
                    norm_y_sq: yy[k],
                })
                .collect());
        }
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (u, y) = self.trajectory(plant, i)?;
                TrajectoryRecord::from_signals(&u, &y, u.horizon())
            })
            .collect()
    }

    /// One row per trajectory: its coefficient vector or its walk seed.
    pub fn manifest_csv(&self) -> String {
        let mut out = String::new();
        match &self.source {
            Source::Grid { basis, .. } | Source::Coefficients { basis, .. } => {
                out.push_str("index");
                for j in 1..=basis.n_basis() {
                    let _ = write!(out, ",c{j}");
                }
                out.push('\n');
                let row = |out: &mut String, i: usize, c: &[f64]| {
                    let _ = write!(out, "{i}");
                    for v in c {
                        let _ = write!(out, ",{v}");
                    }
                    out.push('\n');
                };
                match &self.source {
                    Source::Grid { grid, .. } => {
                        for i in 0..self.len() {
                            row(&mut out, i, &grid.point(i as u64));
                        }
                    }
                    Source::Coefficients { coeffs, .. } => {
                        for (i, c) in coeffs.iter().enumerate() {
                            row(&mut out, i, c);
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Source::Walks { wiener, count } => {
                out.push_str("index,seed,stream,T\n");
                let t = Self::walk_horizon(wiener, None);
                for i in 0..*count {
                    let _ = writeln!(out, "{i},{},{i},{t}", wiener.seed);
                }
            }
            Source::Sweep { wiener, ends } => {
                out.push_str("index,seed,stream,T\n");
                for (i, &k) in ends.iter().enumerate() {
                    let _ = writeln!(out, "{i},{},0,{}", wiener.seed, k as f64 * wiener.dt);
                }
            }
        }
        out
    }
}

/// `t,u,y` CSV of trajectory `index`.
pub fn trajectory_csv(set: &SampleSet, plant: &PlantModel, index: usize) -> Result<String> {
    let (u, y) = set.trajectory(plant, index)?;
    trajectory_to_csv(&u, &y)
}

/// Provenance written next to every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub dt: f64,
    pub spec: serde_json::Value,
    pub derived: Derived,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(name: &str, command: &str, seed: Option<u64>, dt: f64, spec: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            command: command.into(),
            version: VERSION.into(),
            seed,
            dt,
            spec,
            derived: Derived::default(),
            files: Vec::new(),
        }
    }

    pub fn for_spec(spec: &ExperimentSpec, command: &str) -> Result<Self> {
        let mut m = Self::new(
            &spec.name,
            command,
            spec.seed,
            spec.dt,
            serde_json::to_value(spec)?,
        );
        m.derived = spec.derived();
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(
            dir,
            "manifest.json",
            &(serde_json::to_string_pretty(self)? + "\n"),
        )
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Options shared by the figure commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    pub dt: f64,
    pub seed: u64,
    pub hold: InputHold,
}

impl Default for FigureOptions {
    /// Figures hold inputs first-order so the simulated signals match the
    /// trapezoidal moments; see [`InputHold`].
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            seed: 1,
            hold: InputHold::FirstOrder,
        }
    }
}

/// One dataset of a figure: records from a single plant and generator.
#[derive(Clone, Debug)]
pub struct Panel {
    pub label: String,
    pub plant: String,
    pub records: Vec<TrajectoryRecord>,
    pub bounds: ConeBounds,
}

impl Panel {
    fn new(label: String, plant: &PlantModel, records: Vec<TrajectoryRecord>) -> Result<Self> {
        let bounds = empirical_cone(&records)?;
        Ok(Self {
            label,
            plant: plant.name().into(),
            records,
            bounds,
        })
    }

    /// Relative errors against [`TRUE_CONE`] of the separately tightest
    /// bounds `a_R` and `b_L`, and of `b_I` paired with `a_R`.
    pub fn errors(&self) -> PanelErrors {
        let rel = |x: f64, t: f64| (x - t).abs() / t;
        PanelErrors {
            lower: rel(self.bounds.a_r, TRUE_CONE.0),
            upper: rel(self.bounds.b_l, TRUE_CONE.1),
            paired_upper: rel(self.bounds.b_i, TRUE_CONE.1),
        }
    }

    /// Records with `residual >= -tol * ||u||^2` for `cone(a, b)`.
    pub fn all_inside(&self, a: f64, b: f64, tol: f64) -> bool {
        let (q, s, r) = crate::cone::cone_supply_rate(a, b);
        self.records
            .iter()
            .all(|rec| crate::cone::qsr_residual(rec, q, s, r) >= -tol * rec.norm_u_sq)
    }

    fn dir(&self) -> String {
        format!("{}_{}", self.label, self.plant)
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("norm_u,norm_y\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{}", r.norm_u(), r.norm_y());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelErrors {
    #[serde(rename = "lower_error")]
    pub lower: f64,
    #[serde(rename = "upper_error")]
    pub upper: f64,
    #[serde(rename = "paired_upper_error", with = "crate::cone::ext_real")]
    pub paired_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelReport {
    pub label: String,
    pub plant: String,
    #[serde(flatten)]
    pub estimate: EstimateReport,
    #[serde(flatten)]
    pub errors: PanelErrors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub figure: String,
    pub true_cone: (f64, f64),
    pub panels: Vec<PanelReport>,
}

/// The outputs of one figure command.
#[derive(Clone, Debug)]
pub struct FigureRun {
    pub name: String,
    pub title: String,
    pub panels: Vec<Panel>,
    pub manifest: Manifest,
}

impl FigureRun {
    pub fn panel(&self, label: &str, plant: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.label == label && p.plant == plant)
    }

    pub fn report(&self) -> FigureReport {
        FigureReport {
            figure: self.name.clone(),
            true_cone: TRUE_CONE,
            panels: self
                .panels
                .iter()
                .map(|p| PanelReport {
                    label: p.label.clone(),
                    plant: p.plant.clone(),
                    estimate: EstimateReport::new(&p.bounds, None),
                    errors: p.errors(),
                })
                .collect(),
        }
    }

    /// Writes `manifest.json`, `report.json`, `figure.svg` and one directory
    /// per panel holding `records.csv` and `scatter.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = self.manifest.clone();
        let mut csvs = Vec::new();
        for p in &self.panels {
            let sub = p.dir();
            let records = records_to_csv(&p.records);
            write_file(dir, &format!("{sub}/records.csv"), &records)?;
            write_file(dir, &format!("{sub}/scatter.csv"), &p.scatter_csv())?;
            manifest.files.push(format!("{sub}/records.csv"));
            manifest.files.push(format!("{sub}/scatter.csv"));
            csvs.push((sub, records));
        }
        let svg = figure_svg(&self.title, &csvs)?;
        write_file(dir, "figure.svg", &svg)?;
        write_file(
            dir,
            "report.json",
            &(serde_json::to_string_pretty(&self.report())? + "\n"),
        )?;
        manifest.files.extend(["report.json".into(), "figure.svg".into()]);
        manifest.write(dir)
    }
}

/// The figure as a function of the panel record tables alone.
pub fn figure_svg(title: &str, panels: &[(String, String)]) -> Result<String> {
    let parsed = panels
        .iter()
        .map(|(label, csv)| {
            Ok(PlotPanel {
                label: label.clone(),
                records: crate::cone::records_from_csv(csv)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    render_figure(title, &parsed, Some(TRUE_CONE))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fig1Variant {
    FourierNonseq,
    LegendreT10,
    LegendreT1,
}

impl Fig1Variant {
    pub const ALL: [Fig1Variant; 3] = [Self::FourierNonseq, Self::LegendreT10, Self::LegendreT1];

    pub fn horizon(self) -> f64 {
        match self {
            Self::FourierNonseq | Self::LegendreT10 => 10.0,
            Self::LegendreT1 => 1.0,
        }
    }

    pub fn basis(self) -> BasisSpec {
        let t = self.horizon();
        let kind = match self {
            Self::FourierNonseq => BasisKind::FourierExplicit {
                frequencies: [0.0, 2.0, 20.0, 200.0]
                    .iter()
                    .map(|m| m * std::f64::consts::PI / t)
                    .collect(),
            },
            Self::LegendreT10 | Self::LegendreT1 => BasisKind::Legendre,
        };
        BasisSpec { kind, n_basis: 4 }
    }

    pub fn spec(self, plant: PlantModel, dt: f64) -> ExperimentSpec {
        ExperimentSpec {
            name: format!("fig1-{self}"),
            plant,
            basis: Some(self.basis()),
            sampling: SamplingSpec::Grid {
                half_density: 3,
                u_max: 1.0,
                cap: None,
            },
            seed: None,
            dt,
            horizon: self.horizon(),
            estimators: vec![EstimatorKind::Cone],
            out: None,
        }
    }
}

impl fmt::Display for Fig1Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FourierNonseq => "fourier-nonseq",
            Self::LegendreT10 => "legendre-T10",
            Self::LegendreT1 => "legendre-T1",
        })
    }
}

impl FromStr for Fig1Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown variant `{s}` (expected fourier-nonseq, legendre-T10 or legendre-T1)"
                ))
            })
    }
}

fn both_plants(hold: InputHold) -> [PlantModel; 2] {
    [
        PlantModel::lti_circle().with_hold(hold),
        PlantModel::pendulum().with_hold(hold),
    ]
}

fn spec_panel(spec: &ExperimentSpec, label: String) -> Result<Panel> {
    let records = SampleSet::generate(spec)?.simulate(&spec.plant)?;
    Panel::new(label, &spec.plant, records)
}

/// K = 625 grid trajectories of both plants for the given basis variants.
pub fn run_fig1(variants: &[Fig1Variant], opts: &FigureOptions) -> Result<FigureRun> {
    if variants.is_empty() {
        return Err(Error::InvalidArgument("no fig1 variant selected".into()));
    }
    let mut panels = Vec::new();
    let mut specs = Vec::new();
    for &v in variants {
        for plant in both_plants(opts.hold) {
            let spec = v.spec(plant, opts.dt);
            panels.push(spec_panel(&spec, v.to_string())?);
            specs.push(spec);
        }
    }
    let mut manifest = Manifest::new("fig1", "fig1", None, opts.dt, serde_json::to_value(&specs)?);
    manifest.derived = specs[0].derived();
    Ok(FigureRun {
        name: "fig1".into(),
        title: "Grid-cover trajectories (K = 625)".into(),
        panels,
        manifest,
    })
}

/// Uniform-coefficient sampling of the LTI plant with `b` sequential Fourier bases.
pub fn fig2_spec(n_basis: usize, count: usize, horizon: f64, opts: &FigureOptions) -> ExperimentSpec {
    ExperimentSpec {
        name: format!("fig2-b{n_basis}"),
        plant: PlantModel::lti_circle().with_hold(opts.hold),
        basis: Some(BasisSpec {
            kind: BasisKind::FourierSequential,
            n_basis,
        }),
        sampling: SamplingSpec::Uniform {
            count,
            u_max: 1.0,
            eps_min: 0.0,
        },
        seed: Some(opts.seed),
        dt: opts.dt,
        horizon,
        estimators: vec![EstimatorKind::Cone],
        out: None,
    }
}

pub fn run_fig2(b_list: &[usize], count: usize, horizon: f64, opts: &FigureOptions) -> Result<FigureRun> {
    if b_list.is_empty() {
        return Err(Error::InvalidArgument("b list is empty".into()));
    }
    let specs: Vec<_> = b_list
        .iter()
        .map(|&b| fig2_spec(b, count, horizon, opts))
        .collect();
    let panels = specs
        .iter()
        .map(|s| spec_panel(s, format!("b{}", s.basis.as_ref().unwrap().n_basis)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureRun {
        name: "fig2".into(),
        title: format!("Uniform coefficient sampling ({count} trajectories, T = {horizon})"),
        panels,
        manifest: Manifest::new(
            "fig2",
            "fig2",
            Some(opts.seed),
            opts.dt,
            serde_json::to_value(&specs)?,
        ),
    })
}

pub fn fig3_spec(horizon: f64, count: usize, opts: &FigureOptions) -> ExperimentSpec {
    ExperimentSpec {
        name: format!("fig3-T{horizon}"),
        plant: PlantModel::lti_circle().with_hold(opts.hold),
        basis: None,
        sampling: SamplingSpec::Wiener {
            count: Some(count),
            sweep: None,
            step_scale: 1.0,
        },
        seed: Some(opts.seed),
        dt: opts.dt,
        horizon,
        estimators: vec![EstimatorKind::Cone],
        out: None,
    }
}

/// Fixed-length random-walk inputs to the LTI plant.
pub fn run_fig3(t_list: &[f64], count: usize, opts: &FigureOptions) -> Result<FigureRun> {
    if t_list.is_empty() {
        return Err(Error::InvalidArgument("T list is empty".into()));
    }
    let specs: Vec<_> = t_list.iter().map(|&t| fig3_spec(t, count, opts)).collect();
    let panels = specs
        .iter()
        .map(|s| spec_panel(s, format!("T{}", s.horizon)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureRun {
        name: "fig3".into(),
        title: format!("Random-walk inputs ({count} trajectories per T)"),
        panels,
        manifest: Manifest::new(
            "fig3",
            "fig3",
            Some(opts.seed),
            opts.dt,
            serde_json::to_value(&specs)?,
        ),
    })
}

pub fn fig4_spec(
    plant: PlantModel,
    t_min: f64,
    t_max: f64,
    step: f64,
    opts: &FigureOptions,
) -> ExperimentSpec {
    ExperimentSpec {
        name: format!("fig4-Tmax{t_max}"),
        plant,
        basis: None,
        sampling: SamplingSpec::Wiener {
            count: None,
            sweep: Some(SweepSpec { t_min, step }),
            step_scale: 1.0,
        },
        seed: Some(opts.seed),
        dt: opts.dt,
        horizon: t_max,
        estimators: vec![EstimatorKind::Cone],
        out: None,
    }
}

/// Prefix sweeps of a single random walk on both plants.
pub fn run_fig4(t_min: f64, t_max_list: &[f64], step: f64, opts: &FigureOptions) -> Result<FigureRun> {
    if t_max_list.is_empty() {
        return Err(Error::InvalidArgument("T_max list is empty".into()));
    }
    let mut panels = Vec::new();
    let mut specs = Vec::new();
    for &t_max in t_max_list {
        for plant in both_plants(opts.hold) {
            let spec = fig4_spec(plant, t_min, t_max, step, opts);
            panels.push(spec_panel(&spec, format!("Tmax{t_max}"))?);
            specs.push(spec);
        }
    }
    Ok(FigureRun {
        name: "fig4".into(),
        title: format!("Single random walk, T = {t_min} to T_max step {step}"),
        panels,
        manifest: Manifest::new(
            "fig4",
            "fig4",
            Some(opts.seed),
            opts.dt,
            serde_json::to_value(&specs)?,
        ),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Basis sizes for grid mode.
    pub grid_b: Vec<usize>,
    #[serde(rename = "N")]
    pub half_density: u32,
    /// Largest grid that is actually simulated.
    pub budget: u64,
    /// Basis sizes for uniform-sampling mode.
    pub ml_b: Vec<usize>,
    pub ml_count: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    #[serde(default)]
    pub hold: InputHold,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            grid_b: vec![1, 2, 3, 4, 5, 6, 8, 10, 20],
            half_density: 3,
            budget: 1_000_000,
            ml_b: vec![2, 4, 10, 20, 50, 100],
            ml_count: 1000,
            horizon: 20.0,
            dt: DEFAULT_DT,
            seed: 1,
            hold: InputHold::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchOutcome {
    Ok,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: String,
    pub b: usize,
    #[serde(rename = "N")]
    pub half_density: Option<u32>,
    /// Exact sample count when it fits in 64 bits.
    #[serde(rename = "K")]
    pub k: Option<u64>,
    pub k_approx: f64,
    pub outcome: BenchOutcome,
    pub seconds: f64,
    #[serde(rename = "a_R")]
    pub a_r: Option<f64>,
    #[serde(rename = "b_L")]
    pub b_l: Option<f64>,
    pub lower_error: Option<f64>,
    pub upper_error: Option<f64>,
}

impl BenchRow {
    fn with_estimate(mut self, panel: &Panel) -> Self {
        let e = panel.errors();
        self.a_r = Some(panel.bounds.a_r);
        self.b_l = Some(panel.bounds.b_l);
        self.lower_error = Some(e.lower);
        self.upper_error = Some(e.upper);
        self
    }
}

fn basis_for_bench(n_basis: usize) -> BasisSpec {
    BasisSpec {
        kind: BasisKind::FourierSequential,
        n_basis,
    }
}

/// Sample count, time and estimation error versus basis size, for grid
/// covering and for uniform sampling at a fixed sample count.
pub fn run_complexity_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let opts = FigureOptions {
        dt: cfg.dt,
        seed: cfg.seed,
        hold: cfg.hold,
    };
    let mut rows = Vec::new();
    for &b in &cfg.grid_b {
        let grid = GridCoverSpec::new(1.0, b, cfg.half_density)?.with_cap(cfg.budget);
        let row = BenchRow {
            mode: "grid".into(),
            b,
            half_density: Some(cfg.half_density),
            k: grid.cardinality(),
            k_approx: grid.cardinality_f64(),
            outcome: BenchOutcome::Ok,
            seconds: 0.0,
            a_r: None,
            b_l: None,
            lower_error: None,
            upper_error: None,
        };
        if let Err(Error::BudgetExceeded { .. }) = grid.check_budget() {
            rows.push(BenchRow {
                outcome: BenchOutcome::BudgetExceeded,
                ..row
            });
            continue;
        }
        let spec = ExperimentSpec {
            name: format!("bench-grid-b{b}"),
            plant: PlantModel::lti_circle().with_hold(cfg.hold),
            basis: Some(basis_for_bench(b)),
            sampling: SamplingSpec::Grid {
                half_density: cfg.half_density,
                u_max: 1.0,
                cap: Some(cfg.budget),
            },
            seed: None,
            dt: cfg.dt,
            horizon: cfg.horizon,
            estimators: vec![EstimatorKind::Cone],
            out: None,
        };
        let start = Instant::now();
        let panel = spec_panel(&spec, format!("b{b}"))?;
        rows.push(
            BenchRow {
                seconds: start.elapsed().as_secs_f64(),
                ..row
            }
            .with_estimate(&panel),
        );
    }
    for &b in &cfg.ml_b {
        let spec = fig2_spec(b, cfg.ml_count, cfg.horizon, &opts);
        let start = Instant::now();
        let panel = spec_panel(&spec, format!("b{b}"))?;
        rows.push(
            BenchRow {
                mode: "ml".into(),
                b,
                half_density: None,
                k: Some(cfg.ml_count as u64),
                k_approx: cfg.ml_count as f64,
                outcome: BenchOutcome::Ok,
                seconds: start.elapsed().as_secs_f64(),
                a_r: None,
                b_l: None,
                lower_error: None,
                upper_error: None,
            }
            .with_estimate(&panel),
        );
    }
    Ok(rows)
}

/// Scaling table with header
/// `mode,b,N,K,outcome,seconds,a_R,b_L,lower_error,upper_error`.
pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    fn opt<T: fmt::Display>(v: &Option<T>) -> String {
        v.as_ref().map(ToString::to_string).unwrap_or_default()
    }
    let mut out = String::from("mode,b,N,K,outcome,seconds,a_R,b_L,lower_error,upper_error\n");
    for r in rows {
        let k =
            r.k.map(|k| k.to_string())
                .unwrap_or_else(|| format!("{:e}", r.k_approx));
        let outcome = match r.outcome {
            BenchOutcome::Ok => "ok",
            BenchOutcome::BudgetExceeded => "budget_exceeded",
        };
        let _ = writeln!(
            out,
            "{},{},{},{k},{outcome},{:.3},{},{},{},{}",
            r.mode,
            r.b,
            opt(&r.half_density),
            r.seconds,
            opt(&r.a_r),
            opt(&r.b_l),
            opt(&r.lower_error),
            opt(&r.upper_error)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_spec() -> ExperimentSpec {
        ExperimentSpec::from_json(
            r#"{"plant": {"kind": "lti_circle"},
                "basis": {"kind": "legendre", "n_basis": 2},
                "sampling": {"mode": "grid", "N": 2},
                "T": 1.0}"#,
        )
        .unwrap()
    }

    #[test]
    fn spec_round_trip() {
        let spec = grid_spec();
        assert_eq!(spec.dt, DEFAULT_DT);
        let back = ExperimentSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        assert_eq!(spec.derived().k, Some(9.0));
    }

    #[test]
    fn spec_validation() {
        let missing_seed = r#"{"plant": {"kind": "lti_circle"},
            "sampling": {"mode": "wiener", "count": 3}, "T": 1.0}"#;
        assert_eq!(
            ExperimentSpec::from_json(missing_seed).unwrap_err().exit_code(),
            2
        );
        let zero_t = r#"{"plant": {"kind": "lti_circle"},
            "sampling": {"mode": "wiener", "count": 3}, "seed": 1, "T": 0.0}"#;
        assert!(ExperimentSpec::from_json(zero_t).is_err());
        let no_basis = r#"{"plant": {"kind": "pendulum"},
            "sampling": {"mode": "grid", "N": 2}, "T": 1.0}"#;
        assert!(ExperimentSpec::from_json(no_basis).is_err());
    }

    #[test]
    fn grid_set_manifest() {
        let set = SampleSet::generate(&grid_spec()).unwrap();
        assert_eq!(set.len(), 9);
        let csv = set.manifest_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("index,c1,c2"));
        assert_eq!(lines.next(), Some("0,-0.5,-0.5"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn sweep_records_match_direct_prefixes() {
        let spec = fig4_spec(PlantModel::pendulum(), 0.2, 2.0, 0.2, &FigureOptions::default());
        let set = SampleSet::generate(&spec).unwrap();
        let recs = set.simulate(&spec.plant).unwrap();
        assert_eq!(recs.len(), 10);
        for (i, rec) in recs.iter().enumerate() {
            let (u, y) = set.trajectory(&spec.plant, i).unwrap();
            let direct = TrajectoryRecord::from_signals(&u, &y, u.horizon()).unwrap();
            assert!((rec.horizon - direct.horizon).abs() < 1e-12);
            for (a, b) in [
                (rec.norm_u_sq, direct.norm_u_sq),
                (rec.cross, direct.cross),
                (rec.norm_y_sq, direct.norm_y_sq),
            ] {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn variant_names() {
        for v in Fig1Variant::ALL {
            assert_eq!(v.to_string().parse::<Fig1Variant>().unwrap(), v);
        }
        assert!("fourier".parse::<Fig1Variant>().is_err());
    }

    #[test]
    fn bench_budget_row() {
        let cfg = BenchConfig {
            grid_b: vec![2, 20],
            ml_b: vec![],
            horizon: 1.0,
            ..BenchConfig::default()
        };
        let rows = run_complexity_bench(&cfg).unwrap();
        assert_eq!(rows[0].k, Some(25));
        assert_eq!(rows[0].outcome, BenchOutcome::Ok);
        assert_eq!(rows[1].k, Some(5u64.pow(20)));
        assert_eq!(rows[1].outcome, BenchOutcome::BudgetExceeded);
        let csv = bench_to_csv(&rows);
        assert!(csv.contains(",95367431640625,budget_exceeded,"));
    }
}
