//! Scenario documents, figure presets and the on-disk run layout.
//!
//! A run directory holds one `snapshot_KKKK.csv` per snapshot (the initial state
//! is `snapshot_0000.csv`), `metrics.ndjson` with one [`MetricsRecord`] per
//! snapshot, and `manifest.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::density::{InitialDensity, Piecewise};
use crate::dynamics::{
    run_observed, RunOptions, Schedule, SchemeParams, StepReport, Termination, Trajectory,
    DEFAULT_ALPHA_CFL, DEFAULT_PSI_ETA_CAP,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::MassMesh;
use crate::metrics::MetricsRecord;
use crate::reference::ReferenceProfile;
use crate::transform::{init_pseudo_inverse, reconstruct, DensitySample};

pub const SNAPSHOT_HEADER: &str = "t,eta,x,u,psi_eta";
pub const METRICS_FILE: &str = "metrics.ndjson";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FIGURE_IDS: [&str; 9] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Uniform,
    Graded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub kind: MeshKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub focus: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl MeshSpec {
    pub fn uniform(n: usize) -> Self {
        Self {
            kind: MeshKind::Uniform,
            n,
            focus: Vec::new(),
            ratio: None,
        }
    }

    pub fn graded(n: usize, focus: &[f64], ratio: f64) -> Self {
        Self {
            kind: MeshKind::Graded,
            n,
            focus: focus.to_vec(),
            ratio: Some(ratio),
        }
    }

    pub fn build(&self) -> Result<MassMesh> {
        match self.kind {
            MeshKind::Uniform => {
                if !self.focus.is_empty() || self.ratio.is_some() {
                    return Err(Error::config(
                        "/mesh",
                        "focus and ratio only apply to graded meshes",
                    ));
                }
                MassMesh::uniform(self.n)
            }
            MeshKind::Graded => {
                let ratio = self
                    .ratio
                    .ok_or_else(|| Error::config("/mesh/ratio", "graded mesh needs a ratio"))?;
                MassMesh::graded(self.n, &self.focus, ratio)
            }
        }
    }
}

/// Initial density by preset name with preset-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndicatorParams {
    #[serde(default = "minus_half")]
    a: f64,
    #[serde(default = "half")]
    b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriangleParams {
    #[serde(default = "one")]
    half_width: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerBumpParams {
    alpha: f64,
    #[serde(default = "one")]
    radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn minus_half() -> f64 {
    -0.5
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA_CFL
}

fn default_cap() -> f64 {
    DEFAULT_PSI_ETA_CAP
}

impl InitialSpec {
    pub fn new(preset: &str) -> Self {
        Self {
            preset: preset.into(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), Value::from(value));
        self
    }

    pub fn density(&self) -> Result<InitialDensity> {
        let wrap = |e: Error| match e {
            Error::Density(msg) => Error::config("/initial/params", msg),
            other => other,
        };
        match self.preset.as_str() {
            "indicator" => {
                let p: IndicatorParams = self.params()?;
                InitialDensity::indicator(p.a, p.b).map_err(wrap)
            }
            "triangle" => {
                let p: TriangleParams = self.params()?;
                InitialDensity::triangle(p.half_width).map_err(wrap)
            }
            "composite_sqrt" => {
                let _: NoParams = self.params()?;
                Ok(InitialDensity::CompositeSqrt)
            }
            "composite_step" => {
                let _: NoParams = self.params()?;
                Ok(InitialDensity::CompositeStep)
            }
            "piecewise" => {
                let p: Piecewise = self.params()?;
                InitialDensity::piecewise(p).map_err(wrap)
            }
            "power_bump" => {
                let p: PowerBumpParams = self.params()?;
                InitialDensity::power_bump(p.alpha, p.radius).map_err(wrap)
            }
            other => Err(Error::config(
                "/initial/preset",
                format!(
                    "unknown preset '{other}' (expected indicator, triangle, composite_sqrt, composite_step, piecewise or power_bump)"
                ),
            )),
        }
    }

    fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        let value = Value::Object(self.params.clone());
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = format!("/initial/params{}", pointer(e.path()));
            Error::config(path.trim_end_matches('/'), e.inner().to_string())
        })
    }
}

/// A fully specified run. Serializes back to a document `load_config` accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default = "default_alpha")]
    pub alpha_cfl: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default = "default_cap")]
    pub psi_eta_cap: f64,
    pub mesh: MeshSpec,
    pub initial: InitialSpec,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// Parses and validates a scenario document.
///
/// Errors carry a JSON pointer to the offending value.
pub fn load_config(text: &str) -> Result<Scenario> {
    let mut de = serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::config(pointer(e.path()), e.inner().to_string()))?;
    de.end().map_err(|e| Error::config("/", e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_config_file(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_config(&text)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl Scenario {
    /// Scenario with default scheme parameters and no snapshots or reference.
    pub fn new(name: &str, m: f64, mesh: MeshSpec, initial: InitialSpec, t_end: f64) -> Self {
        Self {
            name: name.into(),
            m,
            nu: 1.0,
            alpha_cfl: DEFAULT_ALPHA_CFL,
            dt_max: None,
            psi_eta_cap: DEFAULT_PSI_ETA_CAP,
            mesh,
            initial,
            t_end,
            snapshot_times: Vec::new(),
            reference: None,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("/name", "name must be nonempty"));
        }
        let p = self.params();
        let checks = [
            ("/m", p.m >= 1.0 && p.m.is_finite(), "m must be a finite number >= 1"),
            ("/nu", p.nu > 0.0 && p.nu.is_finite(), "nu must be a finite number > 0"),
            (
                "/alpha_cfl",
                p.alpha_cfl > 2.0 && p.alpha_cfl.is_finite(),
                "alpha_cfl must be a finite number > 2",
            ),
            ("/dt_max", p.dt_max.is_none_or(|d| d > 0.0), "dt_max must be > 0"),
            ("/psi_eta_cap", p.psi_eta_cap > 0.0, "psi_eta_cap must be > 0"),
            (
                "/t_end",
                self.t_end >= 0.0 && self.t_end.is_finite(),
                "t_end must be a finite number >= 0",
            ),
        ];
        if let Some((path, _, msg)) = checks.iter().find(|c| !c.1) {
            return Err(Error::config(*path, *msg));
        }
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(t >= 0.0 && t <= self.t_end) {
                return Err(Error::config(
                    format!("/snapshot_times/{i}"),
                    format!("snapshot time {t} outside [0, {}]", self.t_end),
                ));
            }
            if i > 0 && !(t >= self.snapshot_times[i - 1]) {
                return Err(Error::config(
                    format!("/snapshot_times/{i}"),
                    "snapshot times must be sorted",
                ));
            }
        }
        self.build_mesh().map_err(|e| match e {
            Error::Mesh(msg) => Error::config("/mesh", msg),
            other => other,
        })?;
        self.density()?;
        self.reference_profile()?;
        Ok(())
    }

    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            m: self.m,
            nu: self.nu,
            alpha_cfl: self.alpha_cfl,
            dt_max: self.dt_max,
            psi_eta_cap: self.psi_eta_cap,
        }
    }

    pub fn build_mesh(&self) -> Result<MassMesh> {
        self.mesh.build()
    }

    pub fn density(&self) -> Result<InitialDensity> {
        self.initial.density()
    }

    pub fn reference_profile(&self) -> Result<Option<ReferenceProfile>> {
        self.reference
            .as_deref()
            .map(|name| {
                ReferenceProfile::from_name(name, self.m)
                    .map_err(|e| Error::config("/reference", e.to_string()))
            })
            .transpose()
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.snapshot_times.clone(), self.t_end)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// In-memory result of integrating a scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    /// Reconstructions of every snapshot, initial state first.
    pub samples: Vec<DensitySample>,
    pub metrics: Vec<MetricsRecord>,
    pub wall_time: f64,
}

impl Simulation {
    pub fn completed(&self) -> bool {
        self.trajectory.completed()
    }
}

/// Integrates `scenario`, calling `observer` after every step.
pub fn simulate_observed<F>(scenario: &Scenario, exec: Exec, observer: F) -> Result<Simulation>
where
    F: FnMut(&StepReport<'_>),
{
    scenario.validate()?;
    let start = Instant::now();
    let mesh = Arc::new(scenario.build_mesh()?);
    let initial = init_pseudo_inverse(&scenario.density()?, mesh)?;
    let options = RunOptions {
        exec,
        ..RunOptions::default()
    };
    let trajectory = run_observed(
        initial,
        &scenario.params(),
        &scenario.schedule(),
        &options,
        observer,
    )?;
    let reference = scenario.reference_profile()?;
    let samples = trajectory
        .snapshots
        .iter()
        .map(reconstruct)
        .collect::<Result<Vec<_>>>()?;
    let metrics = samples
        .iter()
        .map(|s| MetricsRecord::from_sample(s, scenario.m, reference.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation {
        trajectory,
        samples,
        metrics,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn simulate(scenario: &Scenario, exec: Exec) -> Result<Simulation> {
    simulate_observed(scenario, exec, |_| {})
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Scenario,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub wall_time_s: f64,
    pub steps: u64,
    pub termination: Termination,
    /// Time-step rule, recorded because it is not a config knob.
    pub cfl_rule: String,
    pub snapshots: Vec<SnapshotEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

pub const CFL_RULE: &str =
    "dt = 1 / (alpha_cfl * max(nu, 1) * max_i max(psi_{i-1..i+1})^m / (d_{i-1} d_i))";

pub fn version_string() -> String {
    format!("fluxlag {}", env!("CARGO_PKG_VERSION"))
}

/// Runs `scenario` and writes its outputs to `dir`, replacing earlier outputs.
///
/// A solver failure does not make this an error: snapshots taken before the
/// failure are written and the manifest records the termination reason.
pub fn run_scenario(scenario: &Scenario, dir: &Path, exec: Exec) -> Result<RunOutput> {
    scenario.validate()?;
    let started = chrono::Utc::now();
    let sim = simulate(scenario, exec)?;
    let manifest = write_outputs(scenario, &sim, dir, started)?;
    Ok(RunOutput {
        manifest,
        metrics: sim.metrics,
    })
}

/// What [`run_scenario`] wrote.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub metrics: Vec<MetricsRecord>,
}

/// Writes snapshots, metrics and manifest for a finished simulation.
pub fn write_outputs(
    scenario: &Scenario,
    sim: &Simulation,
    dir: &Path,
    started: chrono::DateTime<chrono::Utc>,
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    clear_snapshots(dir)?;

    let mut snapshots = Vec::with_capacity(sim.samples.len());
    for (k, sample) in sim.samples.iter().enumerate() {
        let file = format!("snapshot_{k:04}.csv");
        write_snapshot(&dir.join(&file), sample)?;
        snapshots.push(SnapshotEntry { t: sample.t, file });
    }

    let path = dir.join(METRICS_FILE);
    let mut out = BufWriter::new(fs::File::create(&path).map_err(|e| io_err(&path, e))?);
    for record in &sim.metrics {
        let line = serde_json::to_string(record).expect("metrics serialize");
        writeln!(out, "{line}").map_err(|e| io_err(&path, e))?;
    }
    out.flush().map_err(|e| io_err(&path, e))?;

    let manifest = Manifest {
        config: scenario.clone(),
        version: version_string(),
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        wall_time_s: sim.wall_time,
        steps: sim.trajectory.steps,
        termination: sim.trajectory.termination.clone(),
        cfl_rule: CFL_RULE.into(),
        snapshots,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

/// One CSV row per interior node.
pub fn write_snapshot(path: &Path, sample: &DensitySample) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path).map_err(|e| io_err(path, e))?);
    let n = sample.len();
    let mut body = String::with_capacity(n * 120);
    body.push_str(SNAPSHOT_HEADER);
    body.push('\n');
    for i in 1..n - 1 {
        use std::fmt::Write as _;
        let _ = writeln!(
            body,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            sample.t, sample.eta[i], sample.x[i], sample.u[i], sample.psi_eta[i]
        );
    }
    out.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

fn clear_snapshots(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let stale = path
            .file_name()
            .and_then(|f| f.to_str())
            .is_some_and(|f| f.starts_with("snapshot_") && f.ends_with(".csv"));
        if stale {
            fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Runs independent scenarios, each into its own directory.
pub fn run_many(jobs: &[(Scenario, PathBuf)], exec: Exec) -> Vec<Result<RunOutput>> {
    exec.map(jobs, |(scenario, dir)| {
        run_scenario(scenario, dir, Exec::Sequential)
    })
}

/// `k` logarithmically spaced points from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![b],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            let mut v: Vec<f64> = (0..k)
                .map(|j| (la + (lb - la) * j as f64 / (k - 1) as f64).exp())
                .collect();
            v[0] = a;
            v[k - 1] = b;
            v
        }
    }
}

const GRADING_RATIO: f64 = 10.0;
const EDGES: [f64; 2] = [-0.5, 0.5];
/// Mass images of `x = -1/2, 1/2` for both composite data, plus the support ends.
const COMPOSITE_FOCUS: [f64; 4] = [-0.5, -0.375, 0.375, 0.5];

/// Default node count of a figure preset.
pub fn default_n(figure: &str) -> usize {
    match figure {
        "fig6" | "fig7" | "fig8" => 100,
        "fig9" => 200,
        _ => 1000,
    }
}

/// Scenarios reproducing one figure, with the figure's default node count.
pub fn preset(figure: &str) -> Result<Vec<Scenario>> {
    preset_with_n(figure, None)
}

/// Scenarios reproducing one figure; `n` overrides every run's node count.
pub fn preset_with_n(figure: &str, n: Option<usize>) -> Result<Vec<Scenario>> {
    let nn = n.unwrap_or_else(|| default_n(figure));
    let graded = |focus: &[f64]| MeshSpec::graded(nn, focus, GRADING_RATIO);
    let triangle = || InitialSpec::new("triangle");
    let indicator = || InitialSpec::new("indicator");
    let with_times = |mut s: Scenario, times: Vec<f64>, reference: Option<&str>| {
        s.snapshot_times = times;
        s.reference = reference.map(Into::into);
        s
    };
    let scenarios = match figure {
        "fig1" => vec![with_times(
            Scenario::new("fig1", 1.0, graded(&EDGES), triangle(), 1.0),
            vec![0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
            None,
        )],
        "fig2" => vec![with_times(
            Scenario::new("fig2", 1.5, graded(&EDGES), triangle(), 0.6),
            vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6],
            None,
        )],
        "fig3" => vec![with_times(
            Scenario::new("fig3", 3.0, graded(&EDGES), triangle(), 1.5),
            vec![0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.2, 1.35, 1.5],
            None,
        )],
        "fig4" => [(1.0, 1.0), (4.0, 0.5)]
            .iter()
            .map(|&(m, t_end)| {
                with_times(
                    Scenario::new(
                        &format!("fig4_m{m}"),
                        m,
                        graded(&COMPOSITE_FOCUS),
                        InitialSpec::new("composite_sqrt"),
                        t_end,
                    ),
                    logspace(0.005 * t_end, t_end, 9),
                    None,
                )
            })
            .collect(),
        "fig5" => [1.0, 2.0]
            .iter()
            .map(|&m| {
                with_times(
                    Scenario::new(
                        &format!("fig5_m{m}"),
                        m,
                        graded(&COMPOSITE_FOCUS),
                        InitialSpec::new("composite_step"),
                        1.0,
                    ),
                    logspace(0.005, 1.0, 9),
                    None,
                )
            })
            .collect(),
        "fig6" => {
            let base = |name: &str, n: usize| {
                with_times(
                    Scenario::new(name, 1.0, MeshSpec::uniform(n), indicator(), 50.0),
                    logspace(0.05, 50.0, 31),
                    Some("selfsim_heat"),
                )
            };
            let mut v = vec![base("fig6", nn)];
            if n.is_none() {
                v.push(base("fig6_n1000", 1000));
            }
            v
        }
        "fig7" | "fig8" => {
            let m = if figure == "fig7" { 2.0 } else { 10.0 };
            vec![with_times(
                Scenario::new(figure, m, MeshSpec::uniform(nn), indicator(), 50.0),
                logspace(0.05, 50.0, 31),
                Some("barenblatt"),
            )]
        }
        "fig9" => [1.0, 10.0, 100.0]
            .iter()
            .map(|&nu| {
                let mut s = with_times(
                    Scenario::new(
                        &format!("fig9_nu{nu}"),
                        1.0,
                        MeshSpec::uniform(nn),
                        indicator(),
                        1.0,
                    ),
                    vec![0.25, 0.5, 0.75, 1.0],
                    Some("u_hom"),
                );
                s.nu = nu;
                s
            })
            .collect(),
        other => {
            return Err(Error::config(
                "/figure",
                format!("unknown figure id '{other}' (expected fig1 to fig9)"),
            ))
        }
    };
    Ok(scenarios)
}

/// Scenario behind a convergence-rate study: indicator datum on a uniform mesh
/// against the large-time attractor of exponent `m`.
pub fn rate_scenario(m: f64, n: usize, t_end: f64) -> Scenario {
    let mut s = Scenario::new(
        &format!("rates_m{m}_n{n}"),
        m,
        MeshSpec::uniform(n),
        InitialSpec::new("indicator"),
        t_end,
    );
    s.snapshot_times = logspace(0.05f64.min(t_end), t_end, 41);
    s.reference = Some(if m == 1.0 { "selfsim_heat" } else { "barenblatt" }.into());
    s
}

/// Scenario of one member of the viscosity sweep.
pub fn sweep_nu_scenario(nu: f64, t: f64, n: usize) -> Scenario {
    let mut s = Scenario::new(
        &format!("nu_{nu}"),
        1.0,
        MeshSpec::uniform(n),
        InitialSpec::new("indicator"),
        t,
    );
    s.nu = nu;
    s.snapshot_times = vec![t];
    s.reference = Some("u_hom".into());
    s
}

/// `(t, l1_paper)` pairs of a metrics stream with a defined error.
pub fn l1_paper_series(metrics: &[MetricsRecord]) -> Vec<(f64, f64)> {
    metrics
        .iter()
        .filter_map(|r| r.l1_paper.map(|e| (r.t, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"name": "x", "mesh": {"kind": "uniform", "n": 20},
        "initial": {"preset": "indicator"}, "t_end": 0.1}"#;

    #[test]
    fn minimal_document_takes_defaults() {
        let s = load_config(MINIMAL).unwrap();
        assert_eq!((s.m, s.nu, s.alpha_cfl), (1.0, 1.0, 8.0));
        assert_eq!(s.psi_eta_cap, 1e12);
        assert!(s.snapshot_times.is_empty() && s.reference.is_none());
    }

    #[test]
    fn alpha_two_is_rejected() {
        let doc = MINIMAL.replace("\"t_end\"", "\"alpha_cfl\": 2, \"t_end\"");
        let e = load_config(&doc).unwrap_err();
        assert!(matches!(&e, Error::Config { path, .. } if path == "/alpha_cfl"), "{e}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let doc = MINIMAL.replace("\"t_end\"", "\"dx\": 0.1, \"t_end\"");
        let e = load_config(&doc).unwrap_err().to_string();
        assert!(e.contains("dx"), "{e}");

        let doc = MINIMAL.replace("\"n\": 20", "\"n\": 20, \"spacing\": 1");
        let e = load_config(&doc).unwrap_err().to_string();
        assert!(e.contains("spacing") && e.contains("/mesh"), "{e}");

        let doc = MINIMAL.replace(r#""preset": "indicator""#, r#""preset": "indicator", "params": {"c": 1}"#);
        let e = load_config(&doc).unwrap_err().to_string();
        assert!(e.contains("/initial/params") && e.contains('c'), "{e}");
    }

    #[test]
    fn type_errors_carry_pointer() {
        let doc = MINIMAL.replace("\"n\": 20", "\"n\": \"twenty\"");
        match load_config(&doc).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "/mesh/n"),
            e => panic!("{e}"),
        }
        let doc = MINIMAL.replace("0.1}", "0.1, \"snapshot_times\": [0.05, \"a\"]}");
        match load_config(&doc).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "/snapshot_times/1"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            ("\"n\": 20", "\"n\": 21", "/mesh"),
            ("\"t_end\": 0.1", "\"t_end\": -1", "/t_end"),
            ("\"t_end\": 0.1", "\"t_end\": 0.1, \"snapshot_times\": [0.2]", "/snapshot_times/0"),
            ("\"t_end\": 0.1", "\"t_end\": 0.1, \"reference\": \"nope\"", "/reference"),
            ("\"indicator\"", "\"blob\"", "/initial/preset"),
            ("\"name\": \"x\"", "\"name\": \"\"", "/name"),
            ("\"name\": \"x\"", "\"name\": \"x\", \"m\": 0.5", "/m"),
        ];
        for (from, to, want) in cases {
            let doc = MINIMAL.replace(from, to);
            match load_config(&doc) {
                Err(Error::Config { path, .. }) => assert_eq!(path, want, "{to}"),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn every_preset_round_trips() {
        for id in FIGURE_IDS {
            let scenarios = preset(id).unwrap();
            assert!(!scenarios.is_empty());
            for s in scenarios {
                let back = load_config(&s.to_json()).unwrap();
                assert_eq!(back, s, "{id}");
            }
        }
        assert!(preset("fig10").is_err());
    }

    #[test]
    fn preset_contents() {
        let f1 = &preset("fig1").unwrap()[0];
        assert_eq!((f1.m, f1.mesh.n, f1.initial.preset.as_str()), (1.0, 1000, "triangle"));
        let f7 = &preset("fig7").unwrap()[0];
        assert_eq!((f7.m, f7.mesh.n, f7.reference.as_deref()), (2.0, 100, Some("barenblatt")));
        assert_eq!(f7.initial.preset, "indicator");
        let nus: Vec<f64> = preset("fig9").unwrap().iter().map(|s| s.nu).collect();
        assert_eq!(nus, [1.0, 10.0, 100.0]);
        assert!(preset("fig9").unwrap().iter().all(|s| s.reference.as_deref() == Some("u_hom")));
        let f6 = preset("fig6").unwrap();
        assert_eq!(f6.iter().map(|s| s.mesh.n).collect::<Vec<_>>(), [100, 1000]);
        assert_eq!(preset_with_n("fig6", Some(200)).unwrap().len(), 1);
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(0.1, 10.0, 3);
        assert_eq!(v[0], 0.1);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert_eq!(v[2], 10.0);
    }

    #[test]
    fn run_writes_layout_and_reruns_identically() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = load_config(MINIMAL).unwrap();
        s.snapshot_times = vec![0.05, 0.1];
        s.reference = Some("u_hom".into());
        let manifest = run_scenario(&s, dir.path(), Exec::Sequential).unwrap().manifest;
        assert_eq!(manifest.termination, Termination::Completed);
        assert_eq!(manifest.snapshots.len(), 3);
        let first = fs::read_to_string(dir.path().join("snapshot_0001.csv")).unwrap();
        let mut lines = first.lines();
        assert_eq!(lines.next(), Some(SNAPSHOT_HEADER));
        assert_eq!(lines.count(), 18);
        assert!(!first.contains('\r'));

        let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
        assert_eq!(metrics.lines().count(), 3);
        assert!(metrics.starts_with("{\"t\":0.0,\"l1_paper\":"), "{metrics}");

        let echoed = Manifest::read(dir.path()).unwrap().config;
        assert_eq!(load_config(&echoed.to_json()).unwrap(), s);

        run_scenario(&s, dir.path(), Exec::Sequential).unwrap();
        let again = fs::read_to_string(dir.path().join("snapshot_0001.csv")).unwrap();
        assert_eq!(first, again);
    }
}
