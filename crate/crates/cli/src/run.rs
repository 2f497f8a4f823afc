//! Executes the tasks of an experiment in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fracsym::kernel::CacheStatus;
use fracsym::{
    antisym_eig, build_domain, check_f1, check_f2, check_monotonicity, check_sign, check_symmetry, dirichlet_eig,
    hopf_decay_fit, lemma22_check, moving_plane_scan, p_minimize, polarization_identity_check, scaled_family,
    small_volume_threshold, torsion, Domain, Field, FitWindow, MinimizerResult, NonlocalOperator, PowerNonlinearity,
    Reflection, SolverOptions, VerificationReport, WeightTable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Task};
use crate::sweep::kernel_sweep;

pub const SCHEMA_VERSION: u32 = 1;

/// A file produced by a task, written by [`crate::emit_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub index: usize,
    pub kind: String,
    pub passed: bool,
    /// Present for tasks that run an iterative solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    pub values: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub reports: Vec<VerificationReport>,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

impl TaskResult {
    fn new(index: usize, kind: &str) -> Self {
        Self {
            index,
            kind: kind.to_string(),
            passed: true,
            converged: None,
            values: BTreeMap::new(),
            series: BTreeMap::new(),
            reports: Vec::new(),
            artifacts: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    fn converged(&mut self, ok: bool) {
        self.converged = Some(self.converged.unwrap_or(true) && ok);
    }

    fn finish(&mut self) {
        self.passed = self.converged.unwrap_or(true) && self.reports.iter().all(|r| r.passed);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    /// Absent for files outside the determinism contract.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub passed: bool,
    /// Indices of tasks with a failed check or an unconverged solver.
    pub failed_tasks: Vec<usize>,
}

/// Wall-clock data, kept out of the deterministic report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub task_seconds: Vec<f64>,
    pub setup_seconds: f64,
    pub threads: usize,
    pub cache: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub tasks: Vec<TaskResult>,
    /// Filled by [`crate::emit_report`].
    pub manifest: Vec<ManifestEntry>,
    #[serde(skip)]
    pub metadata: RunMetadata,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.status.passed
    }
}

/// A task that could not be carried out.
#[derive(Debug, thiserror::Error)]
#[error("task {index} ({kind}): {source}")]
pub struct TaskError {
    pub index: usize,
    pub kind: &'static str,
    #[source]
    pub source: fracsym::Error,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("setup: {0}")]
    Setup(fracsym::Error),
    #[error(transparent)]
    Task(#[from] TaskError),
}

/// Default weight-table cache: `$FRACSYM_CACHE_DIR`, else a directory under
/// the system temporary directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("FRACSYM_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("fracsym-cache"))
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    domain: Domain,
    op: NonlocalOperator,
    opts: SolverOptions,
    r1: Reflection,
    rn: Reflection,
    artifacts: Vec<Artifact>,
}

/// Runs every task of `config`, loading or building the weight table in
/// `cache_dir` when given.
pub fn run(config: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<RunReport, RunError> {
    let started = unix_now();
    let setup_clock = Instant::now();
    let grid = config.grid_spec().map_err(RunError::Setup)?;
    let params = config.kernel_params().map_err(RunError::Setup)?;
    let domain = build_domain(&config.domain, &grid).map_err(RunError::Setup)?;
    let radius = config.kernel.radius.unwrap_or_else(|| WeightTable::default_radius(&grid));
    let (table, cache) = match cache_dir {
        Some(dir) => {
            let (t, status) = WeightTable::load_or_build(dir, &grid, &params, radius).map_err(RunError::Setup)?;
            let label = match status {
                CacheStatus::Hit => "hit",
                CacheStatus::Built => "built",
                CacheStatus::Rebuilt => "rebuilt",
            };
            (t, label.to_string())
        }
        None => (WeightTable::build(&grid, &params, radius).map_err(RunError::Setup)?, "disabled".into()),
    };
    let op = NonlocalOperator::new(&grid, Arc::new(table)).map_err(RunError::Setup)?;
    let dim = grid.dim();
    let mut ctx = Context {
        config,
        domain,
        op,
        opts: config.solver_options(),
        r1: Reflection::through_origin(0),
        rn: Reflection::through_origin(dim - 1),
        artifacts: Vec::new(),
    };
    let setup_seconds = setup_clock.elapsed().as_secs_f64();

    let mut tasks = Vec::new();
    let mut task_seconds = Vec::new();
    for (index, task) in config.tasks.iter().enumerate() {
        let clock = Instant::now();
        let mut result = TaskResult::new(index, task.kind());
        ctx.run_task(task, &mut result).map_err(|source| TaskError {
            index,
            kind: task.kind(),
            source,
        })?;
        result.finish();
        tasks.push(result);
        task_seconds.push(clock.elapsed().as_secs_f64());
    }

    let failed_tasks: Vec<usize> = tasks.iter().filter(|t| !t.passed).map(|t| t.index).collect();
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        status: RunStatus {
            passed: failed_tasks.is_empty(),
            failed_tasks,
        },
        tasks,
        manifest: Vec::new(),
        metadata: RunMetadata {
            started_unix: started,
            finished_unix: unix_now(),
            task_seconds,
            setup_seconds,
            threads: rayon::current_num_threads(),
            cache,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        artifacts: std::mem::take(&mut ctx.artifacts),
    })
}

fn field_csv(u: &Field) -> Vec<u8> {
    let mut buf = Vec::new();
    u.write_csv(&mut buf).expect("writing to memory");
    buf
}

impl Context<'_> {
    fn dump(&mut self, result: &mut TaskResult, stem: &str, u: &Field) {
        let name = format!("task{:02}-{stem}.csv", result.index);
        self.artifacts.push(Artifact {
            name: name.clone(),
            bytes: field_csv(u),
        });
        result.artifacts.push(name);
    }

    fn h(&self) -> f64 {
        self.op.grid().h()
    }

    fn run_task(&mut self, task: &Task, result: &mut TaskResult) -> fracsym::Result<()> {
        match task {
            Task::Eig { count } => self.eig(*count, result),
            Task::AntisymEig { axis } => self.antisym_eig(*axis, result),
            Task::MinimizeP { p, constrained } => {
                self.minimize(*p, *constrained, result)?;
                Ok(())
            }
            Task::Torsion { fit_decay } => self.torsion(*fit_decay, result),
            Task::VerifyAll { p } => self.verify_all(*p, result),
            Task::KernelSweep { samples, points } => self.sweep(*samples, *points, result),
            Task::MovingPlane { p } => {
                let res = self.minimize(*p, true, result)?;
                self.moving_plane(&res, result)?;
                Ok(())
            }
            Task::SmallVolume {
                families,
                scales,
                trials,
                c_infinity,
                p,
            } => self.small_volume(families, scales, *trials, *c_infinity, *p, result),
        }
    }

    fn eig(&mut self, count: usize, result: &mut TaskResult) -> fracsym::Result<()> {
        let res = dirichlet_eig(&self.op, self.domain.mask(), count, &self.opts)?;
        result.converged(res.converged);
        result.value("lambda1", res.eigenvalues[0]);
        result.series.insert("eigenvalues".into(), res.eigenvalues.clone());
        result.series.insert("residuals".into(), res.residuals.clone());
        result.series.insert("iterations".into(), res.iterations.iter().map(|&i| i as f64).collect());
        for (k, u) in res.eigenfields.iter().enumerate() {
            self.dump(result, &format!("eigenfield{}", k + 1), u);
        }
        Ok(())
    }

    fn antisym_eig(&mut self, axis: usize, result: &mut TaskResult) -> fracsym::Result<()> {
        let r = Reflection::through_origin(axis);
        let res = antisym_eig(&self.op, &r, self.domain.mask(), &self.opts)?;
        result.converged(res.converged);
        result.value("lambda1_minus", res.eigenvalues[0]);
        result.value("residual", res.residuals[0]);
        result.value("iterations", res.iterations[0] as f64);
        self.dump(result, "eigenfield", &res.eigenfields[0]);
        Ok(())
    }

    fn minimize(&mut self, p: f64, constrained: bool, result: &mut TaskResult) -> fracsym::Result<MinimizerResult> {
        let r = constrained.then_some(self.rn);
        let res = p_minimize(&self.op, p, r, self.domain.mask(), &self.opts)?;
        result.converged(res.converged);
        result.value("p", p);
        result.value("lambda", res.value);
        result.value("residual", res.residual);
        result.value("iterations", res.iterations as f64);
        result.value("norm_inf", res.field.norm_inf());
        result.series.insert("energy_history".into(), res.energy_history.clone());
        self.dump(result, "minimizer", &res.field);
        Ok(res)
    }

    fn torsion(&mut self, fit_decay: bool, result: &mut TaskResult) -> fracsym::Result<()> {
        let psi = torsion(&self.op, self.domain.mask(), &self.opts)?;
        result.converged(true);
        result.value("max", psi.norm_inf());
        if fit_decay {
            let tol = self.config.tolerances.decay_exponent;
            match hopf_decay_fit(&psi, &self.domain, self.config.kernel.s, FitWindow::default(), tol) {
                Ok(fit) => {
                    result.value("decay_exponent", fit.exponent);
                    result.value("decay_min_ratio", fit.min_ratio);
                    result.reports.push(fit.report());
                }
                Err(fracsym::Error::InsufficientData(msg)) => result.notes.push(format!("decay fit skipped: {msg}")),
                Err(e) => return Err(e),
            }
        }
        self.dump(result, "torsion", &psi);
        Ok(())
    }

    fn moving_plane(&mut self, res: &MinimizerResult, result: &mut TaskResult) -> fracsym::Result<f64> {
        let tol = &self.config.tolerances;
        let f = PowerNonlinearity::new(res.value, res.p);
        let scan = moving_plane_scan(&res.field, &f, &self.domain, tol.moving_plane)?;
        result.value("lambda0", scan.lambda0);
        result.value("c_infinity", scan.c_infinity);
        result.series.insert("levels".into(), scan.levels.clone());
        result.series.insert("level_minima".into(), scan.minima.clone());
        result.reports.push(scan.report(tol.lambda0_cells * self.h()));
        Ok(scan.c_infinity)
    }

    fn verify_all(&mut self, p: f64, result: &mut TaskResult) -> fracsym::Result<()> {
        let res = self.minimize(p, true, result)?;
        let tol = self.config.tolerances.clone();
        let u = &res.field;
        let grid = self.op.grid().clone();
        result.reports.push(check_symmetry(u, &self.r1, tol.symmetry)?);
        result.reports.push(check_sign(u, &self.rn.halfspace(&grid), tol.sign)?);
        result.reports.push(check_monotonicity(u, &self.domain, tol.monotonicity)?);
        self.moving_plane(&res, result)?;
        result.reports.push(polarization_identity_check(&self.op, u, &self.rn, tol.polarization)?);

        // The pairing check needs a doubly antisymmetric field; the minimizer is even
        // in x₁, so a seeded random one is used.
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let w = Field::from_fn(self.domain.mask(), |_| rng.gen_range(-1.0..1.0))?
            .antisymmetrized(&self.r1)?
            .antisymmetrized(&self.rn)?;
        result.reports.push(lemma22_check(&self.op, &w, &self.r1, &self.rn, tol.lemma22)?);

        let f = PowerNonlinearity::new(res.value, p);
        let k = u.norm_inf().max(f64::MIN_POSITIVE);
        let seed = self.config.seed;
        result.reports.push(check_f1(&f, self.domain.mask(), k, 10_000, seed, tol.hypotheses)?);
        result.reports.push(check_f2(&f, self.domain.mask(), k, 10_000, seed, tol.hypotheses)?);
        Ok(())
    }

    fn sweep(&mut self, samples: usize, points: usize, result: &mut TaskResult) -> fracsym::Result<()> {
        let tol = self.config.tolerances.kernel;
        let out = kernel_sweep(self.config.dim(), self.config.kernel.s, points, samples, self.config.seed, tol)?;
        result.value("surrogate_min", out.surrogate_min);
        result.value("deficit_min", out.deficit_min);
        result.value("violations", out.violations as f64);
        result.reports.extend(out.reports(tol));
        Ok(())
    }

    fn small_volume(
        &mut self,
        families: &[Vec<f64>],
        scales: &[f64],
        trials: usize,
        c_infinity: Option<f64>,
        p: f64,
        result: &mut TaskResult,
    ) -> fracsym::Result<()> {
        let c = match c_infinity {
            Some(c) => c,
            None => {
                let res = self.minimize(p, true, result)?;
                self.moving_plane(&res, result)?
            }
        };
        result.value("c_infinity_used", c);
        for (k, widths) in families.iter().enumerate() {
            let family = scaled_family(self.op.grid(), &self.r1, &self.rn, widths, scales)?;
            let sv = small_volume_threshold(&self.op, c, &family, &self.r1, &self.rn, trials, &self.opts)?;
            result.value(&format!("family{k}.delta_star"), sv.delta_star);
            result.value(&format!("family{k}.validation_min"), sv.validation_min);
            result.series.insert(format!("family{k}.measures"), sv.measures.clone());
            result.series.insert(format!("family{k}.lambda1_minus"), sv.lambdas.clone());
            let mut report = sv.report();
            report.note = Some(format!("widths {widths:?}; {}", report.note.unwrap_or_default()));
            result.reports.push(report);
        }
        Ok(())
    }
}
