//! Experiment configuration: a TOML file with `[domain]`, `[grid]`,
//! `[kernel]`, `[solver]`, `[tolerances]` sections and a `[[tasks]]` array.

use std::fmt;
use std::path::{Path, PathBuf};

use fracsym::{critical_exponent, GridSpec, KernelParams, Shape, SolverOptions};
use serde::{Deserialize, Serialize};

pub const TASK_KINDS: [&str; 8] = [
    "eig",
    "antisym-eig",
    "minimize-p",
    "torsion",
    "verify-all",
    "kernel-sweep",
    "moving-plane",
    "small-volume",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub h: f64,
    pub extents: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub s: f64,
    /// Truncation radius R; defaults to the grid diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Replaces c_{N,s}.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

/// Tolerances handed to the verification checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub symmetry: f64,
    pub sign: f64,
    pub monotonicity: f64,
    pub moving_plane: f64,
    /// λ₀ may not exceed this many grid spacings.
    pub lambda0_cells: f64,
    pub polarization: f64,
    pub lemma22: f64,
    pub decay_exponent: f64,
    pub kernel: f64,
    pub hypotheses: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-6,
            sign: 1e-8,
            monotonicity: 1e-8,
            moving_plane: 1e-8,
            lambda0_cells: 1.0,
            polarization: 1e-10,
            lemma22: 1e-10,
            decay_exponent: 0.1,
            kernel: 1e-12,
            hypotheses: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Eig {
        count: usize,
    },
    AntisymEig {
        axis: usize,
    },
    MinimizeP {
        p: f64,
        constrained: bool,
    },
    Torsion {
        fit_decay: bool,
    },
    VerifyAll {
        p: f64,
    },
    KernelSweep {
        samples: usize,
        points: usize,
    },
    MovingPlane {
        p: f64,
    },
    SmallVolume {
        /// Box widths per family; each family is scaled by every entry of
        /// `scales`.
        families: Vec<Vec<f64>>,
        scales: Vec<f64>,
        trials: usize,
        /// Bound on |c|; when absent it is taken from the moving-plane scan
        /// of the constrained minimizer for `p`.
        #[serde(skip_serializing_if = "Option::is_none")]
        c_infinity: Option<f64>,
        p: f64,
    },
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Eig { .. } => "eig",
            Task::AntisymEig { .. } => "antisym-eig",
            Task::MinimizeP { .. } => "minimize-p",
            Task::Torsion { .. } => "torsion",
            Task::VerifyAll { .. } => "verify-all",
            Task::KernelSweep { .. } => "kernel-sweep",
            Task::MovingPlane { .. } => "moving-plane",
            Task::SmallVolume { .. } => "small-volume",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub domain: Shape,
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub solver: SolverOptions,
    pub tolerances: Tolerances,
    pub tasks: Vec<Task>,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.grid.extents.len()
    }

    pub fn grid_spec(&self) -> fracsym::Result<GridSpec> {
        GridSpec::centered(self.grid.h, &self.grid.extents)
    }

    pub fn kernel_params(&self) -> fracsym::Result<KernelParams> {
        match self.kernel.constant {
            Some(c) => KernelParams::with_constant(self.dim(), self.kernel.s, c),
            None => KernelParams::new(self.dim(), self.kernel.s),
        }
    }

    /// Solver options with the experiment seed applied.
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            seed: self.seed,
            ..self.solver.clone()
        }
    }
}

/// Every problem found in a configuration, each tagged with its field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<(String, String)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.problems.len())?;
        for (field, msg) in &self.problems {
            writeln!(f, "  {field}: {msg}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

// Loosely typed mirror of the file so that every field can be checked before
// giving up.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output")]
    output: PathBuf,
    domain: toml::Table,
    grid: GridConfig,
    kernel: RawKernel,
    #[serde(default)]
    solver: Option<toml::Value>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    tasks: Vec<toml::Table>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(default)]
    dim: Option<usize>,
    s: f64,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    constant: Option<f64>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        problems: vec![(path.display().to_string(), format!("cannot read: {e}"))],
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        problems: vec![("file".into(), e.message().to_string() + &span_note(text, e.span()))],
    })?;
    let mut problems = Vec::new();
    let mut bad = |field: &str, msg: String| problems.push((field.to_string(), msg));

    let dim = raw.grid.extents.len();
    if !(1..=3).contains(&dim) {
        bad("grid.extents", format!("need 1 to 3 axes, got {dim}"));
    }
    if let Err(e) = GridSpec::centered(raw.grid.h, &raw.grid.extents) {
        bad("grid", e.to_string());
    }
    if let Some(d) = raw.kernel.dim {
        if d != dim {
            bad("kernel.dim", format!("{d} does not match the {dim} grid axes"));
        }
    }
    let s = raw.kernel.s;
    if !(s > 0.0 && s < 1.0) {
        bad("kernel.s", format!("must lie in (0, 1), got {s}"));
    }
    if let Some(r) = raw.kernel.radius {
        if !(r.is_finite() && r > 0.0) {
            bad("kernel.radius", format!("must be positive, got {r}"));
        }
    }
    if let Some(c) = raw.kernel.constant {
        if !(c.is_finite() && c > 0.0) {
            bad("kernel.constant", format!("must be positive, got {c}"));
        }
    }

    let domain = match toml::Value::Table(raw.domain).try_into::<Shape>() {
        Ok(Shape::Custom) => {
            bad("domain.label", "custom domains cannot be described in a config file".into());
            None
        }
        Ok(shape) => Some(shape),
        Err(e) => {
            bad("domain", e.message().to_string());
            None
        }
    };
    if let (Some(shape), Ok(grid)) = (&domain, GridSpec::centered(raw.grid.h, &raw.grid.extents)) {
        if (1..=3).contains(&dim) {
            if let Err(e) = fracsym::build_domain(shape, &grid) {
                bad("domain", e.to_string());
            }
        }
    }

    let solver = match raw.solver {
        None => SolverOptions::default(),
        Some(v) => match v.try_into::<SolverOptions>() {
            Ok(o) => o,
            Err(e) => {
                bad("solver", e.message().to_string());
                SolverOptions::default()
            }
        },
    };
    if let Err(e) = solver.validate() {
        bad("solver", e.to_string());
    }

    let critical = if s > 0.0 && s < 1.0 { critical_exponent(dim.max(1), s) } else { f64::INFINITY };
    let mut tasks = Vec::new();
    for (i, t) in raw.tasks.into_iter().enumerate() {
        match parse_task(t, dim, critical) {
            Ok(task) => tasks.push(task),
            Err(errs) => {
                for (field, msg) in errs {
                    bad(&format!("tasks[{i}].{field}"), msg);
                }
            }
        }
    }

    if !problems.is_empty() {
        return Err(ConfigError { problems });
    }
    Ok(ExperimentConfig {
        seed: raw.seed,
        output: raw.output,
        domain: domain.expect("validated"),
        grid: raw.grid,
        kernel: KernelConfig {
            s,
            radius: raw.kernel.radius,
            constant: raw.kernel.constant,
        },
        solver,
        tolerances: raw.tolerances,
        tasks,
    })
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => format!(" (line {})", text[..r.start.min(text.len())].lines().count().max(1)),
        None => String::new(),
    }
}

type FieldErrors = Vec<(String, String)>;

struct TaskFields {
    table: toml::Table,
    errors: FieldErrors,
}

impl TaskFields {
    fn take<T: serde::de::DeserializeOwned>(&mut self, key: &str, default: T) -> T {
        match self.table.remove(key) {
            None => default,
            Some(v) => match v.try_into() {
                Ok(x) => x,
                Err(e) => {
                    self.errors.push((key.into(), e.message().to_string()));
                    default
                }
            },
        }
    }

    fn take_opt<T: serde::de::DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.table.remove(key)?;
        match v.try_into() {
            Ok(x) => Some(x),
            Err(e) => {
                self.errors.push((key.into(), e.message().to_string()));
                None
            }
        }
    }

    fn check(&mut self, ok: bool, key: &str, msg: impl Into<String>) {
        if !ok {
            self.errors.push((key.into(), msg.into()));
        }
    }

    fn subcritical(&mut self, p: f64, critical: f64) {
        let ok = p > 1.0 && p < critical;
        let bound = if critical.is_finite() { format!("{critical}") } else { "∞".into() };
        self.check(ok, "p", format!("{p} is not subcritical (need 1 < p < {bound})"));
    }
}

fn parse_task(table: toml::Table, dim: usize, critical: f64) -> Result<Task, FieldErrors> {
    let mut f = TaskFields {
        table,
        errors: Vec::new(),
    };
    let kind: String = f.take("kind", String::new());
    let two_axes = |f: &mut TaskFields| f.check(dim >= 2, "kind", format!("{kind} needs at least two grid axes"));
    let task = match kind.as_str() {
        "eig" => {
            let count = f.take("count", 1usize);
            f.check(count >= 1, "count", "must be at least 1");
            Task::Eig { count }
        }
        "antisym-eig" => {
            let axis = f.take("axis", dim.saturating_sub(1));
            f.check(axis < dim, "axis", format!("{axis} is not a grid axis"));
            Task::AntisymEig { axis }
        }
        "minimize-p" => {
            let p = f.take("p", 2.0);
            f.subcritical(p, critical);
            let constrained = f.take("constrained", true);
            Task::MinimizeP { p, constrained }
        }
        "torsion" => Task::Torsion {
            fit_decay: f.take("fit_decay", true),
        },
        "verify-all" => {
            let p = f.take("p", 2.0);
            f.subcritical(p, critical);
            two_axes(&mut f);
            Task::VerifyAll { p }
        }
        "kernel-sweep" => {
            let samples = f.take("samples", 100_000usize);
            let points = f.take("points", 200usize);
            f.check(points >= 2, "points", "need at least 2 grid points");
            Task::KernelSweep { samples, points }
        }
        "moving-plane" => {
            let p = f.take("p", 2.0);
            f.subcritical(p, critical);
            two_axes(&mut f);
            Task::MovingPlane { p }
        }
        "small-volume" => {
            two_axes(&mut f);
            // A square and a slab thin along x_N.
            let mut slab = vec![1.0; dim];
            if let Some(last) = slab.last_mut() {
                *last = 0.25;
            }
            let families: Vec<Vec<f64>> = f.take("families", vec![vec![1.0; dim], slab]);
            f.check(
                !families.is_empty() && families.iter().all(|w| w.len() == dim && w.iter().all(|&x| x > 0.0)),
                "families",
                format!("need one or more lists of {dim} positive widths"),
            );
            let scales = f.take("scales", vec![1.0, 0.5, 0.25, 0.125]);
            f.check(
                !scales.is_empty() && scales.windows(2).all(|w| w[1] < w[0]) && scales.iter().all(|&r| r > 0.0),
                "scales",
                "need positive, strictly decreasing scales",
            );
            let trials = f.take("trials", 2usize);
            let c_infinity = f.take_opt("c_infinity");
            if let Some(c) = c_infinity {
                f.check(c >= 0.0 && f64::is_finite(c), "c_infinity", "must be finite and nonnegative");
            }
            let p = f.take("p", 2.0);
            if c_infinity.is_none() {
                f.subcritical(p, critical);
            }
            Task::SmallVolume {
                families,
                scales,
                trials,
                c_infinity,
                p,
            }
        }
        "" => {
            f.errors.push(("kind".into(), format!("missing; expected one of {}", TASK_KINDS.join(", "))));
            return Err(f.errors);
        }
        other => {
            f.errors.push((
                "kind".into(),
                format!("unknown task `{other}`; expected one of {}", TASK_KINDS.join(", ")),
            ));
            return Err(f.errors);
        }
    };
    for key in f.table.keys() {
        f.errors.push((key.clone(), format!("unknown field for task {kind}")));
    }
    if f.errors.is_empty() {
        Ok(task)
    } else {
        Err(f.errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
label = "ball"
radius = 1.0

[grid]
h = 0.125
extents = [20, 20]

[kernel]
s = 0.5

[[tasks]]
kind = "eig"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.domain, Shape::Ball { radius: 1.0 });
        assert_eq!(c.tasks, vec![Task::Eig { count: 1 }]);
        assert_eq!(c.solver, SolverOptions::default());
        assert_eq!(c.output, PathBuf::from("out"));
    }

    #[test]
    fn bad_s_is_named() {
        let err = parse_config_str(&MINIMAL.replace("s = 0.5", "s = 1.2")).unwrap_err();
        assert_eq!(err.problems.len(), 1);
        assert_eq!(err.problems[0].0, "kernel.s");
    }

    #[test]
    fn unknown_task_lists_valid_ones() {
        let err = parse_config_str(&MINIMAL.replace("\"eig\"", "\"eigen\"")).unwrap_err();
        assert_eq!(err.problems[0].0, "tasks[0].kind");
        for kind in TASK_KINDS {
            assert!(err.problems[0].1.contains(kind));
        }
    }

    #[test]
    fn all_errors_are_collected() {
        let text = MINIMAL.replace("s = 0.5", "s = 1.2").replace("radius = 1.0", "radius = -1.0")
            + "\n[[tasks]]\nkind = \"minimize-p\"\np = 0.5\n\n[[tasks]]\nkind = \"eig\"\ncount = 0\nbogus = 1\n";
        let err = parse_config_str(&text).unwrap_err();
        let fields: Vec<&str> = err.problems.iter().map(|(f, _)| f.as_str()).collect();
        assert!(fields.contains(&"kernel.s"), "{fields:?}");
        assert!(fields.contains(&"domain"), "{fields:?}");
        assert!(fields.contains(&"tasks[1].p"), "{fields:?}");
        assert!(fields.contains(&"tasks[2].count"), "{fields:?}");
        assert!(fields.contains(&"tasks[2].bogus"), "{fields:?}");
    }

    #[test]
    fn small_volume_defaults_to_square_and_slab() {
        let c = parse_config_str(&MINIMAL.replace("\"eig\"", "\"small-volume\"")).unwrap();
        match &c.tasks[0] {
            Task::SmallVolume { families, .. } => assert_eq!(families, &vec![vec![1.0, 1.0], vec![1.0, 0.25]]),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn syntax_errors_are_reported() {
        let err = parse_config_str("[grid\nh = 1").unwrap_err();
        assert_eq!(err.problems[0].0, "file");
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config_str(MINIMAL).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), c);
    }
}
