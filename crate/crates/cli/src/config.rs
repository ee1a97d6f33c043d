use std::path::PathBuf;

use gllab_core::deviation_lab::{BnSpec, Regime};
use gllab_core::matrix_walk::MeasureSpec;
use gllab_core::LabError;
use serde::Deserialize;

use crate::error::CliError;

/// One run: the measure, shared knobs and one optional block per command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_cocycle")]
    pub cocycle: String,
    pub out: Option<PathBuf>,
    pub measure: MeasureSpec,
    pub lyapunov: Option<LyapunovBlock>,
    pub tails: Option<TailsBlock>,
    pub bounds: Option<BoundsBlock>,
    pub mdp: Option<MdpBlock>,
    pub decompose: Option<DecomposeBlock>,
    pub check_measure: Option<CheckMeasureBlock>,
}

fn default_threads() -> usize {
    1
}

fn default_cocycle() -> String {
    "log-norm".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovBlock {
    pub n: usize,
    pub reps: usize,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    #[serde(default = "default_starts")]
    pub variance_starts: usize,
}

fn default_x_grid() -> usize {
    4
}

fn default_starts() -> usize {
    2
}

/// How the centring constant is obtained when the measure has no closed form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaBlock {
    pub value: Option<f64>,
    #[serde(default = "default_lambda_n")]
    pub n: usize,
    #[serde(default = "default_lambda_reps")]
    pub reps: usize,
}

fn default_lambda_n() -> usize {
    2000
}

fn default_lambda_reps() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsBlock {
    pub n: usize,
    pub alpha: f64,
    pub y_grid: Vec<f64>,
    pub reps: u64,
    #[serde(default = "default_tail_x_grid")]
    pub x_grid: usize,
    pub lambda: Option<LambdaBlock>,
    pub regime: Option<Regime>,
    pub fit_window: Option<(f64, f64)>,
    pub baum_katz: Option<BaumKatzBlock>,
    pub lil: Option<LilBlock>,
}

fn default_tail_x_grid() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaumKatzBlock {
    pub alpha: f64,
    pub p: f64,
    pub y: f64,
    pub schedule: Vec<usize>,
    pub reps: u64,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilBlock {
    pub v: f64,
    pub y: f64,
    pub schedule: Vec<usize>,
    pub reps: u64,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    pub haeusler: Option<HaeuslerBlock>,
    pub haeusler_suite: Option<HaeuslerSuiteBlock>,
    pub maximal: Option<MaximalBlock>,
    pub vbe: Option<VbeBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaeuslerBlock {
    pub gamma: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaeuslerSuiteBlock {
    /// Branching per level of each random martingale space.
    pub spaces: Vec<Vec<usize>>,
    pub grid: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalBlock {
    pub max_depth: usize,
    pub p: Vec<f64>,
    #[serde(default)]
    pub random: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VbeBlock {
    pub p: f64,
    pub n: usize,
    pub scale: f64,
    pub reps: u64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpBlock {
    pub bn: BnSpec,
    #[serde(default)]
    pub c_of_n_max: usize,
    #[serde(default)]
    pub linear_slopes: Vec<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
    pub arcones_schedule: Option<Vec<usize>>,
    pub compare: Option<MdpCompareBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpCompareBlock {
    pub y: f64,
    pub v: f64,
    pub schedule: Vec<usize>,
    pub reps: u64,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    pub lambda: Option<LambdaBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeBlock {
    pub grid_power: u32,
    pub tol: f64,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_path_len")]
    pub path_len: usize,
}

fn default_trajectories() -> usize {
    1000
}

fn default_steps() -> usize {
    20
}

fn default_bins() -> usize {
    64
}

fn default_path_len() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckMeasureBlock {
    #[serde(default = "default_gordin_n")]
    pub gordin_n_max: usize,
    #[serde(default = "default_gordin_reps")]
    pub gordin_reps: usize,
}

fn default_gordin_n() -> usize {
    32
}

fn default_gordin_reps() -> usize {
    2000
}

fn positive(section: &str, field: &str, ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("[{section}] `{field}` is out of range")))
    }
}

fn increasing<T: PartialOrd + Copy>(section: &str, field: &str, xs: &[T]) -> Result<(), CliError> {
    if xs.is_empty() || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!("[{section}] `{field}` must be non-empty and strictly increasing")));
    }
    Ok(())
}

fn lab(section: &str, e: LabError) -> CliError {
    CliError::Config(format!("[{section}] {e}"))
}

impl ExperimentConfig {
    /// Parses TOML; syntax and schema errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks the block a command needs before any computation starts.
    pub fn validate_for(&self, command: &str) -> Result<(), CliError> {
        positive("run", "threads", self.threads >= 1 && self.threads <= 1024)?;
        let missing = |s: &str| CliError::Config(format!("missing [{s}] section for command `{command}`"));
        match command {
            "lyapunov" => {
                let b = self.lyapunov.as_ref().ok_or_else(|| missing("lyapunov"))?;
                positive("lyapunov", "n", b.n >= 1)?;
                positive("lyapunov", "reps", b.reps >= 2)?;
                positive("lyapunov", "x_grid", b.x_grid >= 1)?;
                positive("lyapunov", "variance_starts", b.variance_starts >= 2)?;
            }
            "tails" => {
                let b = self.tails.as_ref().ok_or_else(|| missing("tails"))?;
                positive("tails", "n", b.n >= 1)?;
                positive("tails", "alpha", b.alpha > 0.5 && b.alpha <= 1.0)?;
                positive("tails", "reps", b.reps >= 100)?;
                positive("tails", "x_grid", b.x_grid >= 1)?;
                increasing("tails", "y_grid", &b.y_grid)?;
                positive("tails", "y_grid", b.y_grid.iter().all(|y| *y > 0.0))?;
                if let Some(Regime::Mdp { bn }) = &b.regime {
                    bn.validate().map_err(|e| lab("tails", e))?;
                }
                if let Some(w) = b.fit_window {
                    positive("tails", "fit_window", w.0 < w.1)?;
                }
                if let Some(bk) = &b.baum_katz {
                    positive("tails.baum_katz", "alpha", bk.alpha > 0.0 && bk.alpha <= 1.0)?;
                    positive("tails.baum_katz", "p", bk.p > 0.0)?;
                    positive("tails.baum_katz", "y", bk.y > 0.0)?;
                    positive("tails.baum_katz", "reps", bk.reps >= 1)?;
                    increasing("tails.baum_katz", "schedule", &bk.schedule)?;
                    positive("tails.baum_katz", "schedule", bk.schedule[0] >= 1)?;
                }
                if let Some(l) = &b.lil {
                    positive("tails.lil", "v", l.v >= 0.0)?;
                    positive("tails.lil", "y", l.y > 0.0)?;
                    positive("tails.lil", "reps", l.reps >= 1)?;
                    increasing("tails.lil", "schedule", &l.schedule)?;
                    positive("tails.lil", "schedule", l.schedule[0] >= 3)?;
                }
            }
            "bounds" => {
                let b = self.bounds.as_ref().ok_or_else(|| missing("bounds"))?;
                if let Some(h) = &b.haeusler {
                    for (name, xs) in [("gamma", &h.gamma), ("u", &h.u), ("v", &h.v)] {
                        positive("bounds.haeusler", name, !xs.is_empty() && xs.iter().all(|x| *x > 0.0 && x.is_finite()))?;
                    }
                    positive("bounds.haeusler", "p1/p2", h.p1 >= 0.0 && h.p2 >= 0.0)?;
                }
                if let Some(s) = &b.haeusler_suite {
                    positive("bounds.haeusler_suite", "grid", s.grid >= 1)?;
                    for sp in &s.spaces {
                        let atoms: usize = sp.iter().product();
                        positive("bounds.haeusler_suite", "spaces", !sp.is_empty() && sp.iter().all(|b| *b >= 2) && atoms <= 1 << 16)?;
                    }
                }
                if let Some(m) = &b.maximal {
                    positive("bounds.maximal", "max_depth", (1..=8).contains(&m.max_depth))?;
                    for &p in &m.p {
                        gllab_core::mg_tools::c_p(p).map_err(|e| lab("bounds.maximal", e))?;
                    }
                }
                if let Some(v) = &b.vbe {
                    gllab_core::mg_tools::vbe_constant(v.p).map_err(|e| lab("bounds.vbe", e))?;
                    positive("bounds.vbe", "n", v.n >= 1)?;
                    positive("bounds.vbe", "scale", v.scale > 0.0)?;
                    positive("bounds.vbe", "reps", v.reps >= 1)?;
                    positive("bounds.vbe", "y", !v.y.is_empty() && v.y.iter().all(|y| *y > 0.0))?;
                }
            }
            "mdp" => {
                let b = self.mdp.as_ref().ok_or_else(|| missing("mdp"))?;
                b.bn.validate().map_err(|e| lab("mdp", e))?;
                positive("mdp", "v", b.v.iter().all(|v| *v >= 0.0))?;
                if let Some(s) = &b.arcones_schedule {
                    increasing("mdp", "arcones_schedule", s)?;
                    positive("mdp", "arcones_schedule", s[0] >= 1)?;
                }
                if let Some(c) = &b.compare {
                    positive("mdp.compare", "y", c.y > 0.0)?;
                    positive("mdp.compare", "v", c.v > 0.0)?;
                    positive("mdp.compare", "reps", c.reps >= 1)?;
                    increasing("mdp.compare", "schedule", &c.schedule)?;
                    positive("mdp.compare", "schedule", c.schedule[0] >= 1)?;
                }
            }
            "decompose" => {
                let b = self.decompose.as_ref().ok_or_else(|| missing("decompose"))?;
                positive("decompose", "grid_power", (1..=20).contains(&b.grid_power))?;
                positive("decompose", "tol", b.tol > 0.0)?;
                positive("decompose", "trajectories", b.trajectories >= 1)?;
                positive("decompose", "steps", b.steps >= 1)?;
                positive("decompose", "bins", b.bins >= 1)?;
                positive("decompose", "path_len", b.path_len >= 1)?;
            }
            "check-measure" => {}
            other => return Err(CliError::Config(format!("unknown command `{other}`"))),
        }
        Ok(())
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }
}
