//! JSON scenario files and the task runner behind the command line.
//!
//! ```json
//! {
//!   "chart": {"kind": "contact", "n": 1},
//!   "hamiltonian": "z",
//!   "task": "simulate",
//!   "initial": {"point": [0, 1, 1]},
//!   "time": {"t_final": 1.0, "dt": 0.001},
//!   "output": {"dir": "out"}
//! }
//! ```
//!
//! Output paths are resolved against the directory holding the config file.

pub mod identity;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, OneFormExpr};
use crate::error::{GeoError, Result};
use crate::fields::{FieldSpec, FieldSpecConfig};
use crate::flow::{integrate, Hamiltonian, IntegratorConfig, Method};
use crate::kinetics::adjudicate::random_one_form;
use crate::kinetics::grid::GridSolver;
use crate::kinetics::particle::ParticlePusher;
use crate::kinetics::{
    intertwine_residual, momentum_map, Axis, DensitySource, GridDensity, GridLayout, MomentumOneForm,
    ParticleEnsemble,
};
use crate::poly::random::{random_poly, RandomPolyConfig};
use crate::poly::Poly;

pub use identity::{identity_suite, IdentityReport, LawReport, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Simulate,
    IdentityCheck,
    KineticParticle,
    KineticGrid,
    MomentumCheck,
}

/// Initial density on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    /// Polynomial in the chart coordinates.
    Expression(String),
    /// `exp(-sum (x_i - c_i)^2 / (2 s_i^2))` over coordinates with
    /// `s_i > 0`; coordinates with `s_i = 0` are ignored.
    Gaussian { center: Vec<f64>, sigma: Vec<f64> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Axis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_form: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    /// Snapshot times for kinetic tasks; `t_final` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

fn default_particles() -> usize {
    100_000
}

fn default_samples() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub chart: Chart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpecConfig>,
    pub task: Task,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_particles")]
    pub particles: usize,
    /// Random inputs per law for `identity-check` and `momentum-check`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            GeoError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| GeoError::Config(format!("{}: {e}", path.display())))
    }
}

fn require<T: Clone>(v: &Option<T>, what: &str, task: Task) -> Result<T> {
    v.clone()
        .ok_or_else(|| GeoError::Config(format!("{} requires `{what}`", task_name(task))))
}

fn task_name(task: Task) -> String {
    serde_json::to_value(task)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn context(what: &str) -> impl Fn(GeoError) -> GeoError + '_ {
    move |e| GeoError::Config(format!("{what}: {e}"))
}

/// A config with every expression parsed and every task requirement met.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub spec: FieldSpec,
    pub hamiltonian: Option<Poly>,
    pub plan: Plan,
}

#[derive(Clone, Debug)]
pub enum Plan {
    Simulate {
        point: Vec<f64>,
        t_final: f64,
        integrator: IntegratorConfig,
    },
    Identity,
    Kinetic {
        layout: GridLayout,
        density: PreparedDensity,
        times: Vec<f64>,
        dt: f64,
    },
    Momentum {
        one_form: Option<MomentumOneForm>,
    },
}

#[derive(Clone, Debug)]
pub enum PreparedDensity {
    Poly(Poly),
    Gaussian { center: Vec<f64>, sigma: Vec<f64> },
}

impl PreparedDensity {
    fn source(&self) -> DensitySource {
        match self {
            PreparedDensity::Poly(p) => DensitySource::poly(p),
            PreparedDensity::Gaussian { center, sigma } => {
                let (c, s) = (center.clone(), sigma.clone());
                DensitySource::function(move |x| {
                    let e: f64 = (0..x.len())
                        .filter(|&i| s[i] > 0.0)
                        .map(|i| (x[i] - c[i]).powi(2) / (2.0 * s[i] * s[i]))
                        .sum();
                    (-e).exp()
                })
            }
        }
    }
}

/// Parses and shape-checks without computing anything.
pub fn prepare(config: &ScenarioConfig) -> Result<Prepared> {
    let chart = config.chart;
    let task = config.task;
    let spec = match &config.field {
        Some(f) => f.resolve(chart).map_err(context("field"))?,
        None => FieldSpec::hamiltonian(chart),
    };
    let hamiltonian = config
        .hamiltonian
        .as_deref()
        .map(|s| chart.parse(s).map_err(context("hamiltonian")))
        .transpose()?;
    let need_h = || require(&hamiltonian, "hamiltonian", task);
    let t_final = || {
        let t = require(&config.time.t_final, "time.t_final", task)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(GeoError::Config("time.t_final must be positive".into()));
        }
        Ok(t)
    };
    let dt = || {
        let dt = require(&config.time.dt, "time.dt", task)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GeoError::Config("time.dt must be positive".into()));
        }
        Ok(dt)
    };
    let plan = match task {
        Task::Simulate => {
            need_h()?;
            let point = require(&config.initial.point, "initial.point", task)?;
            if point.len() != chart.dim() {
                return Err(GeoError::Config(format!(
                    "initial.point has {} entries, chart {chart} needs {}",
                    point.len(),
                    chart.dim()
                )));
            }
            let step = dt()?;
            let integrator = IntegratorConfig {
                method: config.time.method.unwrap_or(Method::Rk4),
                step,
                rel_tol: config.time.rel_tol.unwrap_or(1e-9),
                abs_tol: config.time.abs_tol.unwrap_or(1e-12),
                max_steps: 10_000_000,
            };
            integrator.validate()?;
            Plan::Simulate {
                point,
                t_final: t_final()?,
                integrator,
            }
        }
        Task::IdentityCheck => Plan::Identity,
        Task::KineticGrid | Task::KineticParticle => {
            need_h()?;
            if !spec.is_hamiltonian_zero() {
                return Err(GeoError::Config(format!(
                    "kinetic tasks use the hamiltonian row with zero gauge, not {spec}"
                )));
            }
            let axes = require(&config.initial.grid, "initial.grid", task)?;
            let layout = GridLayout::new(chart, axes).map_err(context("initial.grid"))?;
            let density = match require(&config.initial.density, "initial.density", task)? {
                DensityConfig::Expression(s) => {
                    PreparedDensity::Poly(chart.parse(&s).map_err(context("initial.density"))?)
                }
                DensityConfig::Gaussian { center, sigma } => {
                    if center.len() != chart.dim() || sigma.len() != chart.dim() {
                        return Err(GeoError::Config(format!(
                            "gaussian center and sigma need {} entries each",
                            chart.dim()
                        )));
                    }
                    if sigma.iter().any(|s| !(*s >= 0.0)) {
                        return Err(GeoError::Config("gaussian sigma must be nonnegative".into()));
                    }
                    PreparedDensity::Gaussian { center, sigma }
                }
            };
            let t_final = t_final()?;
            let mut times = config.time.snapshots.clone();
            if times.is_empty() {
                times.push(t_final);
            }
            if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 || *times.last().unwrap() > t_final {
                return Err(GeoError::Config(
                    "time.snapshots must increase within [0, t_final]".into(),
                ));
            }
            if task == Task::KineticParticle && config.particles < crate::kinetics::particle::MIN_PARTICLES {
                return Err(GeoError::Config(format!(
                    "particles must be at least {}",
                    crate::kinetics::particle::MIN_PARTICLES
                )));
            }
            Plan::Kinetic {
                layout,
                density,
                times,
                dt: dt()?,
            }
        }
        Task::MomentumCheck => {
            let one_form = match &config.initial.one_form {
                Some(comps) => {
                    need_h()?;
                    if comps.len() != chart.dim() {
                        return Err(GeoError::Config(format!(
                            "initial.one_form has {} components, chart {chart} needs {}",
                            comps.len(),
                            chart.dim()
                        )));
                    }
                    let polys = comps
                        .iter()
                        .map(|s| chart.parse(s))
                        .collect::<Result<Vec<_>>>()
                        .map_err(context("initial.one_form"))?;
                    Some(MomentumOneForm::new(OneFormExpr::new(chart, polys)?))
                }
                None => None,
            };
            Plan::Momentum { one_form }
        }
    };
    Ok(Prepared {
        config: config.clone(),
        spec,
        hamiltonian,
        plan,
    })
}

/// Text printed by `validate`.
pub fn validate(config: &ScenarioConfig) -> Result<String> {
    let p = prepare(config)?;
    let mut out = String::from("ok\n");
    if let Some(h) = &p.hamiltonian {
        out.push_str(&format!("hamiltonian: {}\n", config.chart.format(h)));
    }
    out.push_str(&format!("chart: {}\nfield: {}\n", config.chart, p.spec));
    Ok(out)
}

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct Snapshot {
    time: f64,
    file: String,
    mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    escaped_mass: Option<f64>,
}

#[derive(Serialize)]
struct KineticReport<'a> {
    task: Task,
    chart: Chart,
    hamiltonian: String,
    seed: u64,
    initial_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    particles: Option<usize>,
    snapshots: &'a [Snapshot],
}

#[derive(Serialize)]
struct MomentumReport {
    chart: Chart,
    seed: u64,
    hamiltonian: String,
    one_form: Vec<String>,
    density: String,
    residual: String,
    status: Status,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| GeoError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs a scenario, writing artifacts under `base.join(output.dir)`.
pub fn run(config: &ScenarioConfig, base: &Path) -> Result<RunOutcome> {
    let p = prepare(config)?;
    let chart = config.chart;
    let dir = base.join(&config.output.dir);
    std::fs::create_dir_all(&dir).map_err(|e| GeoError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    match &p.plan {
        Plan::Simulate {
            point,
            t_final,
            integrator,
        } => {
            let h = p.hamiltonian.clone().expect("checked by prepare");
            let traj = integrate(&p.spec, &h.into(), point, (0.0, *t_final), integrator)?;
            let path = dir.join("trajectory.csv");
            let f = std::fs::File::create(&path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
            traj.write_csv(std::io::BufWriter::new(f))?;
            files.push(path);
            let last: Vec<String> = traj.last().iter().map(|v| format!("{v:.12e}")).collect();
            Ok(RunOutcome {
                passed: true,
                files,
                summary: format!("{} points, final state [{}]", traj.len(), last.join(", ")),
            })
        }
        Plan::Identity => {
            let report = identity_suite(chart, config.seed, config.samples)?;
            let path = dir.join("identity.json");
            write_json(&path, &report)?;
            files.push(path);
            let failed = report.laws.iter().filter(|l| l.status == Status::Fail).count();
            Ok(RunOutcome {
                passed: report.passed,
                files,
                summary: format!("{} laws, {failed} failed", report.laws.len()),
            })
        }
        Plan::Kinetic {
            layout,
            density,
            times,
            dt,
        } => {
            let h: Hamiltonian = p.hamiltonian.clone().expect("checked by prepare").into();
            let source = density.source();
            let mut snaps = Vec::new();
            let (initial_mass, particles) = crate::kinetics::with_pool(|| -> Result<(f64, Option<usize>)> {
                let mut clock = 0.0;
                if config.task == Task::KineticGrid {
                    let solver = GridSolver::new(layout, &h)?;
                    let mut f = GridDensity::sample(layout.clone(), |x| source.eval(x))?;
                    let m0 = f.mass();
                    for (i, &t) in times.iter().enumerate() {
                        solver.advance(&mut f, t - clock, *dt)?;
                        clock = t;
                        let path = dir.join(format!("density_{i:03}.txt"));
                        f.write_file(&path)?;
                        snaps.push(Snapshot {
                            time: t,
                            file: file_name(&path),
                            mass: f.mass(),
                            escaped_mass: None,
                        });
                        files.push(path);
                    }
                    Ok((m0, None))
                } else {
                    let pusher = ParticlePusher::new(layout, &h)?;
                    let mut ens = ParticleEnsemble::quiet_start(layout, &source, config.particles)?;
                    let m0 = ens.total_weight();
                    let count = ens.len();
                    let mut escaped = 0.0;
                    for (i, &t) in times.iter().enumerate() {
                        escaped += pusher.advance(&mut ens, t - clock, *dt)?.0;
                        clock = t;
                        let g = ens.deposit(layout)?;
                        let path = dir.join(format!("density_{i:03}.txt"));
                        g.write_file(&path)?;
                        snaps.push(Snapshot {
                            time: t,
                            file: file_name(&path),
                            mass: ens.total_weight(),
                            escaped_mass: Some(escaped),
                        });
                        files.push(path);
                    }
                    let path = dir.join("particles.csv");
                    ens.write_file(&path)?;
                    files.push(path);
                    Ok((m0, Some(count)))
                }
            })??;
            let report = KineticReport {
                task: config.task,
                chart,
                hamiltonian: chart.format(p.hamiltonian.as_ref().expect("checked by prepare")),
                seed: config.seed,
                initial_mass,
                particles,
                snapshots: &snaps,
            };
            let path = dir.join("kinetic.json");
            write_json(&path, &report)?;
            files.push(path);
            let last = snaps.last().expect("at least one snapshot");
            Ok(RunOutcome {
                passed: true,
                files,
                summary: format!(
                    "{} snapshots, mass {:.12e} -> {:.12e}",
                    snaps.len(),
                    initial_mass,
                    last.mass
                ),
            })
        }
        Plan::Momentum { one_form } => {
            let (h, pi) = match one_form {
                Some(pi) => (p.hamiltonian.clone().expect("checked by prepare"), pi.clone()),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    let cfg = RandomPolyConfig {
                        max_degree: 2,
                        max_terms: 4,
                        coeff_bound: 3,
                    };
                    let h = match &p.hamiltonian {
                        Some(h) => h.clone(),
                        None => loop {
                            let h = random_poly(&mut rng, chart.dim(), cfg);
                            if !h.is_constant() {
                                break h;
                            }
                        },
                    };
                    (h, MomentumOneForm::new(random_one_form(&mut rng, chart, cfg)))
                }
            };
            let residual = intertwine_residual(&FieldSpec::hamiltonian(chart), &h, &pi)?;
            let status = if residual.is_zero() { Status::Pass } else { Status::Fail };
            let report = MomentumReport {
                chart,
                seed: config.seed,
                hamiltonian: chart.format(&h),
                one_form: pi.form().components().iter().map(|c| chart.format(c)).collect(),
                density: chart.format(&momentum_map(&pi)),
                residual: chart.format(&residual),
                status,
            };
            let path = dir.join("momentum.json");
            write_json(&path, &report)?;
            files.push(path);
            Ok(RunOutcome {
                passed: status == Status::Pass,
                files,
                summary: format!("residual {}: {status:?}", report.residual),
            })
        }
    }
}
