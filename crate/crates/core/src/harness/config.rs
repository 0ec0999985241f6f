//! Plain `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Keys left out keep their
//! defaults; command-line flags go through [`ExperimentConfig::set`] after
//! the file is read. Relative paths resolve against the config file's
//! directory.

use crate::error::{Error, Result};
use crate::instance::Family;
use crate::reduction::ReductionMethod;
use crate::svm::{Kernel, TrainConfig};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

/// Where the instances of one side of an experiment come from.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub count: usize,
    /// TSPLIB files; when non-empty they replace the generator.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub train: InstanceSpec,
    pub test: InstanceSpec,
    /// Families tested on the characteristics and variant axes.
    pub test_families: Vec<Family>,
    /// Sizes tested on the size axis.
    pub test_sizes: Vec<usize>,
    pub coord_max: u32,
    /// Fixed sample count; `None` means `m_factor * n`.
    pub m: Option<usize>,
    pub m_factor: usize,
    pub eps_m: f64,
    pub kernel: Kernel,
    pub tol: f64,
    pub penalty_scale: f64,
    pub cache_mb: usize,
    pub max_iter: Option<usize>,
    pub reps: usize,
    pub seed: u64,
    pub time_limit: Duration,
    pub dp_cap: usize,
    /// Accept unproved training labels instead of failing.
    pub heuristic_labels: bool,
    pub guard_top_k: usize,
    /// CMSA tours per reduction; `None` means `n`.
    pub cmsa_samples: Option<usize>,
    pub methods: Vec<ReductionMethod>,
    /// Pretrained model; skips training when set.
    pub model_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Fill the `reduce_ms` / `solve_ms` columns (makes CSVs run-dependent).
    pub record_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spec = |n, count| InstanceSpec {
            family: Family::Euclidean,
            n,
            count,
            files: Vec::new(),
        };
        ExperimentConfig {
            name: "experiment".into(),
            train: spec(30, 30),
            test: spec(60, 30),
            test_families: vec![Family::Euclidean, Family::Clustered, Family::Random],
            test_sizes: vec![40, 60],
            coord_max: 1000,
            m: None,
            m_factor: 100,
            eps_m: 10.0,
            kernel: Kernel::default_rbf(),
            tol: 1e-3,
            penalty_scale: 1.0,
            cache_mb: 200,
            max_iter: None,
            reps: 25,
            seed: 1,
            time_limit: Duration::from_secs(60),
            dp_cap: crate::solvers::DEFAULT_DP_CAP,
            heuristic_labels: false,
            guard_top_k: 1,
            cmsa_samples: None,
            methods: vec![ReductionMethod::Mlpr],
            model_path: None,
            out_dir: PathBuf::from("results"),
            record_timings: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl ExperimentConfig {
    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", no + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Applies one setting by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let paths = |v: &str| -> Vec<PathBuf> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
                .collect()
        };
        match key {
            "name" => self.name = value.to_string(),
            "train_family" => self.train.family = parse(key, value)?,
            "train_n" => self.train.n = parse(key, value)?,
            "train_count" => self.train.count = parse(key, value)?,
            "train_files" => self.train.files = paths(value),
            "test_family" => self.test.family = parse(key, value)?,
            "test_n" => self.test.n = parse(key, value)?,
            "test_count" => self.test.count = parse(key, value)?,
            "test_files" => self.test.files = paths(value),
            "test_families" => self.test_families = parse_list(key, value)?,
            "test_sizes" => self.test_sizes = parse_list(key, value)?,
            "coord_max" => self.coord_max = parse(key, value)?,
            "m" => self.m = parse_auto(key, value)?,
            "m_factor" => self.m_factor = parse(key, value)?,
            "eps_m" => self.eps_m = parse(key, value)?,
            "kernel" => {
                self.kernel = match value.to_ascii_lowercase().as_str() {
                    "linear" => Kernel::Linear,
                    "rbf" => match self.kernel {
                        Kernel::Rbf { .. } => self.kernel,
                        Kernel::Linear => Kernel::default_rbf(),
                    },
                    _ => return Err(Error::Config(format!("unknown kernel `{value}`"))),
                }
            }
            "gamma" => self.kernel = Kernel::Rbf { gamma: parse(key, value)? },
            "tol" => self.tol = parse(key, value)?,
            "penalty_scale" => self.penalty_scale = parse(key, value)?,
            "cache_mb" => self.cache_mb = parse(key, value)?,
            "max_iter" => self.max_iter = parse_auto(key, value)?,
            "reps" => self.reps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "time_limit_s" => {
                let s: f64 = parse(key, value)?;
                self.time_limit = Duration::try_from_secs_f64(s)
                    .map_err(|_| Error::Config(format!("bad time limit `{value}`")))?;
            }
            "dp_cap" => self.dp_cap = parse(key, value)?,
            "heuristic_labels" => self.heuristic_labels = parse_bool(key, value)?,
            "guard_top_k" => self.guard_top_k = parse(key, value)?,
            "cmsa_samples" => self.cmsa_samples = parse_auto(key, value)?,
            "methods" => self.methods = parse_list(key, value)?,
            "model_path" => self.model_path = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "record_timings" => self.record_timings = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.train.files.iter_mut().for_each(fix);
        self.test.files.iter_mut().for_each(fix);
        if let Some(p) = self.model_path.as_mut() {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no reduction methods selected".into()));
        }
        if self.guard_top_k == 0 {
            return Err(Error::Config("guard_top_k must be at least 1".into()));
        }
        if self.m == Some(0) || self.m == Some(1) || self.m_factor == 0 {
            return Err(Error::Config("at least 2 samples are needed".into()));
        }
        for spec in [&self.train, &self.test] {
            if spec.files.is_empty() && (spec.n < 3 || spec.count == 0) {
                return Err(Error::Config("instance sets need n >= 3 and count >= 1".into()));
            }
        }
        let files = self.train.files.iter().chain(&self.test.files);
        for p in files.chain(self.model_path.as_ref()) {
            if !p.exists() {
                return Err(Error::Config(format!("path not found: {}", p.display())));
            }
        }
        self.train_config().validate()
    }

    /// Sample count for an `n`-city instance.
    pub fn sample_count(&self, n: usize) -> usize {
        self.m.unwrap_or(self.m_factor * n)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            kernel: self.kernel,
            eps_m: self.eps_m,
            tol: self.tol,
            max_iter: self.max_iter,
            cache_mb: self.cache_mb,
            penalty_scale: self.penalty_scale,
        }
    }

    pub fn solve_options(&self) -> crate::solvers::SolveOptions {
        crate::solvers::SolveOptions {
            dp_cap: self.dp_cap,
            time_limit: Some(self.time_limit),
            node_limit: None,
            initial_tour: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let text = "\
# size axis
name = size
train_n = 20   # small
kernel = linear
reps = 3
methods = mlpr, cbm
m = auto
";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.train.n, 20);
        assert_eq!(cfg.kernel, Kernel::Linear);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.methods, vec![ReductionMethod::Mlpr, ReductionMethod::Cbm]);
        assert_eq!(cfg.sample_count(60), 6000);
        assert_eq!(cfg.eps_m, 10.0);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/results"));
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new("/tmp");
        assert!(ExperimentConfig::parse("reps = 0", base).is_err());
        assert!(ExperimentConfig::parse("nonsense = 1", base).is_err());
        assert!(ExperimentConfig::parse("reps", base).is_err());
        assert!(ExperimentConfig::parse("train_files = /no/such/file.tsp", base).is_err());
        assert!(ExperimentConfig::parse("kernel = poly", base).is_err());
    }
}
