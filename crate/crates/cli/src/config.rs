//! Experiment configuration: a plain TOML file with a `[problem]` block and
//! an algorithm-specific `[run]` block.

use serde::Deserialize;

use mpamp_core::model::SignalPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Amp,
    RowLossless,
    RowLossy,
    Col,
    DpPlan,
    SeOnly,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Amp => "amp",
            Algorithm::RowLossless => "row-lossless",
            Algorithm::RowLossy => "row-lossy",
            Algorithm::Col => "col",
            Algorithm::DpPlan => "dp-plan",
            Algorithm::SeOnly => "se-only",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub kappa: Option<f64>,
    pub rho: Option<f64>,
    #[serde(default = "default_nonzero_variance")]
    pub nonzero_variance: f64,
    pub snr_db: Option<f64>,
    pub noise_var: Option<f64>,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_nonzero_variance() -> f64 {
    1.0
}

fn default_p() -> usize {
    1
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub iters: Option<usize>,
    pub schedule: Option<Vec<usize>>,
    pub rates: Option<Vec<f64>>,
    pub distortions: Option<Vec<f64>>,
    pub b: Option<f64>,
    pub target_emse_db: Option<f64>,
    pub rd_model: Option<String>,
    pub dithered: Option<bool>,
    pub kappa_sweep: Option<Vec<f64>>,
    pub snr_db_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub output_stem: String,
    pub output_dir: Option<String>,
    #[serde(default = "default_scheduling")]
    pub scheduling: String,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub run: RunConfig,
}

fn default_scheduling() -> String {
    "fixed".into()
}

/// A named validation finding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Measurement rate; requires either `kappa` or both `n` and `m`.
    pub fn kappa(&self) -> Option<f64> {
        match (self.problem.kappa, self.problem.n, self.problem.m) {
            (Some(k), _, _) => Some(k),
            (None, Some(n), Some(m)) if n > 0 => Some(m as f64 / n as f64),
            _ => None,
        }
    }

    /// Rows: explicit `m` or derived from `kappa * n`.
    pub fn rows(&self) -> Option<usize> {
        match (self.problem.m, self.problem.kappa, self.problem.n) {
            (Some(m), _, _) => Some(m),
            (None, Some(k), Some(n)) => Some((k * n as f64).round() as usize),
            _ => None,
        }
    }

    pub fn prior(&self) -> Option<SignalPrior> {
        let rho = self.problem.rho?;
        SignalPrior::new(rho, self.problem.nonzero_variance).ok()
    }

    /// Noise variance, directly or via the SNR definition
    /// `snr = 10 log10(N E[X^2] / (M sigma_w^2))`.
    pub fn noise_var(&self) -> Option<f64> {
        if let Some(v) = self.problem.noise_var {
            return Some(v);
        }
        let snr = self.problem.snr_db?;
        let kappa = self.kappa()?;
        let m2 = self.prior()?.second_moment();
        Some(m2 / (kappa * 10f64.powf(snr / 10.0)))
    }

    pub fn noise_var_for(&self, kappa: f64, snr_db: f64) -> Option<f64> {
        let m2 = self.prior()?.second_moment();
        Some(m2 / (kappa * 10f64.powf(snr_db / 10.0)))
    }

    /// Static validation; an empty list means the config is runnable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut need = |cond: bool, field: &str, message: &str| {
            if !cond {
                out.push(Diagnostic {
                    field: field.into(),
                    message: message.into(),
                });
            }
        };

        if self.output_stem.is_empty() {
            need(false, "output_stem", "must not be empty");
        }
        match self.scheduling.as_str() {
            "fixed" | "reverse" | "threaded" => {}
            s if s.starts_with("shuffled:") && s["shuffled:".len()..].parse::<u64>().is_ok() => {}
            other => need(
                false,
                "scheduling",
                &format!("unknown mode `{other}` (fixed | reverse | shuffled:<seed> | threaded)"),
            ),
        }

        let p = &self.problem;
        match p.rho {
            None => need(false, "problem.rho", "required"),
            Some(r) if !(0.0..=1.0).contains(&r) => {
                need(false, "problem.rho", "must be in [0, 1]")
            }
            _ => {}
        }
        if !(p.nonzero_variance > 0.0) {
            need(false, "problem.nonzero_variance", "must be > 0");
        }
        if p.trials == 0 {
            need(false, "problem.trials", "must be >= 1");
        }
        if p.p == 0 {
            need(false, "problem.p", "must be >= 1");
        }
        if p.snr_db.is_some() && p.noise_var.is_some() {
            need(false, "problem.noise_var", "give either snr_db or noise_var, not both");
        }
        if p.snr_db.is_none() && p.noise_var.is_none() && self.run.snr_db_sweep.is_none() {
            need(false, "problem.noise_var", "either snr_db or noise_var is required");
        }
        if let Some(v) = p.noise_var {
            if !(v >= 0.0) {
                need(false, "problem.noise_var", "must be >= 0");
            }
        }

        let sweeping = self.run.kappa_sweep.is_some() || self.run.snr_db_sweep.is_some();
        let needs_instances = !matches!(self.algorithm, Algorithm::DpPlan | Algorithm::SeOnly);
        if needs_instances {
            match p.n {
                None => need(false, "problem.n", "required for simulation runs"),
                Some(0) => need(false, "problem.n", "must be >= 1"),
                _ => {}
            }
            if !sweeping && self.rows().is_none() {
                need(false, "problem.m", "give m, or kappa together with n");
            }
            if let Some(m) = self.rows() {
                if m == 0 {
                    need(false, "problem.m", "must be >= 1");
                }
            }
        } else if self.kappa().is_none() {
            need(false, "problem.kappa", "give kappa, or both n and m");
        }

        let r = &self.run;
        if sweeping && self.algorithm != Algorithm::Col {
            need(false, "run.kappa_sweep", "sweeps are only supported for algorithm = \"col\"");
        }
        match self.algorithm {
            Algorithm::Amp | Algorithm::SeOnly => {
                if r.iters.unwrap_or(0) == 0 {
                    need(false, "run.iters", "must be >= 1");
                }
            }
            Algorithm::RowLossless => {
                if r.iters.unwrap_or(0) == 0 {
                    need(false, "run.iters", "must be >= 1");
                }
                if let (Some(m), pp) = (self.rows(), p.p) {
                    if pp > 0 && m % pp != 0 {
                        need(false, "problem.p", "node count must divide m for row partitioning");
                    }
                }
            }
            Algorithm::RowLossy => {
                let has_d = r.distortions.as_ref().is_some_and(|v| !v.is_empty());
                let has_r = r.rates.as_ref().is_some_and(|v| !v.is_empty());
                let has_plan = r.b.is_some() && r.target_emse_db.is_some();
                if !(has_d || has_r || has_plan) {
                    need(
                        false,
                        "run",
                        "row-lossy needs `distortions`, `rates`, or both `b` and `target_emse_db`",
                    );
                }
                if let Some(b) = r.b {
                    if !(b >= 0.0) {
                        need(false, "run.b", "must be >= 0");
                    }
                }
                if let Some(t) = r.target_emse_db {
                    if !(t > 0.0) {
                        need(false, "run.target_emse_db", "must be > 0");
                    }
                }
                if let (Some(m), pp) = (self.rows(), p.p) {
                    if pp > 0 && m % pp != 0 {
                        need(false, "problem.p", "node count must divide m for row partitioning");
                    }
                }
            }
            Algorithm::Col => {
                if !sweeping {
                    match &r.schedule {
                        None => need(false, "run.schedule", "required for col runs"),
                        Some(s) if s.is_empty() => need(false, "run.schedule", "must not be empty"),
                        Some(s) if s.iter().any(|&t| t == 0) => {
                            need(false, "run.schedule", "inner counts must be >= 1")
                        }
                        _ => {}
                    }
                }
                if let (Some(n), pp) = (p.n, p.p) {
                    if pp > 0 && n % pp != 0 {
                        need(false, "problem.p", "node count must divide n for column partitioning");
                    }
                }
                if let Some(sweep) = &r.kappa_sweep {
                    if sweep.is_empty() || sweep.iter().any(|&k| !(k > 0.0)) {
                        need(false, "run.kappa_sweep", "must be nonempty positive rates");
                    }
                }
            }
            Algorithm::DpPlan => {
                if r.b.is_none() {
                    need(false, "run.b", "required for dp-plan");
                } else if !(r.b.unwrap() >= 0.0) {
                    need(false, "run.b", "must be >= 0");
                }
                match r.target_emse_db {
                    None => need(false, "run.target_emse_db", "required for dp-plan"),
                    Some(t) if !(t > 0.0) => need(false, "run.target_emse_db", "must be > 0"),
                    _ => {}
                }
            }
        }
        if let Some(model) = &r.rd_model {
            if model != "ecsq" && model != "shannon" {
                need(false, "run.rd_model", "must be \"ecsq\" or \"shannon\"");
            }
        }
        out
    }
}
