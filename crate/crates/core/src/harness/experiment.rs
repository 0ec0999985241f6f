//! Training and evaluation runs.

use super::config::{ExperimentConfig, InstanceSpec};
use super::report::{compute_gap, sort_records, summarize, MetricsRecord, Summary};
use crate::error::{Error, Result};
use crate::features::build_feature_table;
use crate::instance::{parse_tsplib, Family, Instance, Tour};
use crate::reduction::{reduce_cbm, reduce_cmsa, reduce_mlpr_with, ReductionMethod, ReductionResult};
use crate::rng::derive_seed;
use crate::sampling::sample_feasible;
use crate::solvers::{solve_exact, validate_tour};
use crate::svm::{load_model, save_model, train_data, Dataset, SvmModel};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

// seed-derivation roles
const ROLE_TRAIN_INSTANCE: u64 = 0;
const ROLE_TRAIN_SAMPLES: u64 = 1;
const ROLE_TEST_INSTANCE: u64 = 2;
const ROLE_TEST_RUN: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Same size, different cost structure.
    Characteristics,
    /// Same family, larger instances.
    Size,
    /// Symmetric training, asymmetric / precedence-constrained tests.
    Variant,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "characteristics" => Ok(Axis::Characteristics),
            "size" => Ok(Axis::Size),
            "variant" => Ok(Axis::Variant),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Characteristics => "characteristics",
            Axis::Size => "size",
            Axis::Variant => "variant",
        })
    }
}

/// Named set of test instances.
#[derive(Debug, Clone)]
pub struct TestGroup {
    pub name: String,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSummary {
    pub instances: usize,
    pub rows: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub class_weights: (f64, f64),
    pub model_kind: String,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub residual: f64,
    pub n_support: Option<usize>,
    pub weights: Option<Vec<f64>>,
    pub bias: f64,
    /// Training instances labelled from an unproved tour.
    pub heuristic_labels: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: SvmModel,
    pub summary: TrainingSummary,
}

impl TrainingOutcome {
    /// Writes `model.svm` and `training_report.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("model.svm"), save_model(&self.model))?;
        std::fs::write(
            dir.join("training_report.json"),
            serde_json::to_string_pretty(&self.summary)? + "\n",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: Summary,
    pub training: Option<TrainingOutcome>,
}

fn family_code(f: Family) -> u64 {
    match f {
        Family::Euclidean => 0,
        Family::Clustered => 1,
        Family::Random => 2,
        Family::Atsp => 3,
        Family::Sop => 4,
    }
}

fn generated(family: Family, n: usize, count: usize, cfg: &ExperimentConfig, role: u64) -> Result<Vec<Instance>> {
    let group = format!("{family}-{n}");
    (0..count)
        .map(|k| {
            let seed = derive_seed(cfg.seed, &[role, family_code(family), n as u64, k as u64]);
            Ok(family
                .generate(n, cfg.coord_max, seed)?
                .with_name(format!("{group}#{k:03}")))
        })
        .collect()
}

fn from_files(spec: &InstanceSpec) -> Result<Vec<TestGroup>> {
    spec.files
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().replace(['#', ','], "_"));
            let inst = parse_tsplib(&std::fs::read_to_string(p)?)?.with_name(format!("{stem}#000"));
            Ok(TestGroup {
                name: stem,
                instances: vec![inst],
            })
        })
        .collect()
}

/// Training instances as configured.
pub fn training_instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    if cfg.train.files.is_empty() {
        generated(cfg.train.family, cfg.train.n, cfg.train.count, cfg, ROLE_TRAIN_INSTANCE)
    } else {
        Ok(from_files(&cfg.train)?
            .into_iter()
            .flat_map(|g| g.instances)
            .collect())
    }
}

/// Test groups for an axis; listed test files override the generators.
pub fn test_groups(cfg: &ExperimentConfig, axis: Option<Axis>) -> Result<Vec<TestGroup>> {
    if !cfg.test.files.is_empty() {
        return from_files(&cfg.test);
    }
    let cells: Vec<(Family, usize)> = match axis {
        None => vec![(cfg.test.family, cfg.test.n)],
        Some(Axis::Size) => cfg.test_sizes.iter().map(|&n| (cfg.test.family, n)).collect(),
        Some(Axis::Characteristics) | Some(Axis::Variant) => {
            cfg.test_families.iter().map(|&f| (f, cfg.test.n)).collect()
        }
    };
    cells
        .into_iter()
        .map(|(f, n)| {
            Ok(TestGroup {
                name: format!("{f}-{n}"),
                instances: generated(f, n, cfg.test.count, cfg, ROLE_TEST_INSTANCE)?,
            })
        })
        .collect()
}

/// Solves every training instance exactly, labels its edges and trains
/// one model on the pooled table.
pub fn run_training(cfg: &ExperimentConfig) -> Result<TrainingOutcome> {
    let instances = training_instances(cfg)?;
    train_on(cfg, &instances)
}

pub fn train_on(cfg: &ExperimentConfig, instances: &[Instance]) -> Result<TrainingOutcome> {
    let opts = cfg.solve_options();
    let labelled: Vec<(crate::features::EdgeFeatureTable, bool)> = instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            let sol = solve_exact(inst, None, &opts)?;
            if !sol.optimal && !cfg.heuristic_labels {
                return Err(Error::Solver(format!(
                    "training instance {} not solved to optimality",
                    inst.name()
                )));
            }
            let seed = derive_seed(cfg.seed, &[ROLE_TRAIN_SAMPLES, k as u64]);
            let batch = sample_feasible(inst, cfg.sample_count(inst.n()), seed)?;
            Ok((build_feature_table(inst, &batch, Some(&sol.tour))?, sol.optimal))
        })
        .collect::<Result<_>>()?;
    let data = Dataset::from_tables(labelled.iter().map(|(t, _)| t))?;
    let (model, report) = train_data(&data, &cfg.train_config())?;
    let (n_support, weights) = match &model {
        SvmModel::Dual(m) => (Some(m.n_support()), None),
        SvmModel::Linear(m) => (None, Some(m.weights.clone())),
    };
    let summary = TrainingSummary {
        instances: instances.len(),
        rows: data.len(),
        n_pos: report.n_pos,
        n_neg: report.n_neg,
        class_weights: report.class_weights,
        model_kind: model.kind_tag().to_string(),
        iterations: report.iterations,
        converged: report.converged,
        objective: report.objective,
        residual: report.residual,
        n_support,
        weights,
        bias: model.bias(),
        heuristic_labels: labelled.iter().filter(|(_, opt)| !opt).count(),
    };
    Ok(TrainingOutcome { model, summary })
}

/// The configured pretrained model, or a freshly trained one.
pub fn obtain_model(cfg: &ExperimentConfig) -> Result<(SvmModel, Option<TrainingOutcome>)> {
    match &cfg.model_path {
        Some(p) => Ok((load_model(&std::fs::read_to_string(p)?)?, None)),
        None => {
            let t = run_training(cfg)?;
            Ok((t.model.clone(), Some(t)))
        }
    }
}

/// Applies one reducer with the configured options.
pub fn reduce_with(
    cfg: &ExperimentConfig,
    method: ReductionMethod,
    instance: &Instance,
    model: Option<&SvmModel>,
    seed: u64,
) -> Result<ReductionResult> {
    let m = cfg.sample_count(instance.n());
    match method {
        ReductionMethod::Mlpr => {
            let model = model.ok_or_else(|| Error::InvalidArgument("mlpr needs a model".into()))?;
            reduce_mlpr_with(instance, model, m, seed, cfg.guard_top_k)
        }
        ReductionMethod::Cbm => reduce_cbm(instance, m, seed),
        ReductionMethod::Cmsa => reduce_cmsa(instance, seed, cfg.cmsa_samples.unwrap_or(instance.n())),
    }
}

/// Reduces every test instance `reps` times with every method and solves
/// original and reduced problems. Records come back in canonical order.
pub fn evaluate(
    cfg: &ExperimentConfig,
    model: Option<&SvmModel>,
    groups: &[TestGroup],
    methods: &[ReductionMethod],
) -> Result<Vec<MetricsRecord>> {
    let opts = cfg.solve_options();
    let instances: Vec<(usize, usize, &Instance)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, grp)| grp.instances.iter().enumerate().map(move |(k, i)| (g, k, i)))
        .collect();
    // original optima, computed once per instance
    let originals: Vec<(Tour, bool)> = instances
        .par_iter()
        .map(|&(_, _, inst)| solve_exact(inst, None, &opts).map(|r| (r.tour, r.optimal)))
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize, ReductionMethod)> = (0..instances.len())
        .flat_map(|i| (0..cfg.reps).flat_map(move |r| methods.iter().map(move |&m| (i, r, m))))
        .collect();
    let mut records: Vec<MetricsRecord> = cells
        .par_iter()
        .map(|&(i, rep, method)| {
            let (g, k, inst) = instances[i];
            let (orig, orig_opt) = &originals[i];
            let seed = derive_seed(cfg.seed, &[ROLE_TEST_RUN, g as u64, k as u64, rep as u64]);
            let t0 = Instant::now();
            let red = reduce_with(cfg, method, inst, model, seed)?;
            let reduce_ms = t0.elapsed().as_millis() as u64;
            let guard_ok = validate_tour(inst, &red.guard_tour.order, Some(&red.mask));
            let mut solve_opts = opts.clone();
            solve_opts.initial_tour = Some(red.guard_tour.order.clone());
            let t1 = Instant::now();
            let solved = solve_exact(inst, Some(&red.mask), &solve_opts);
            let solve_ms = t1.elapsed().as_millis() as u64;
            let (gap, proved) = match &solved {
                Ok(r) if validate_tour(inst, &r.tour.order, Some(&red.mask)) => {
                    let proved = *orig_opt && r.optimal;
                    let mut gap = compute_gap(orig.cost, r.tour.cost)?;
                    if proved && gap.abs() < 1e-9 {
                        gap = 0.0;
                    }
                    (Some(gap), proved)
                }
                _ => (None, false),
            };
            Ok(MetricsRecord {
                instance: inst.name().to_string(),
                method: method.to_string(),
                seed,
                gap_percent: gap,
                remaining_percent: red.remaining_fraction,
                success: guard_ok && gap.is_some(),
                proved_optimal: proved,
                reduce_ms: cfg.record_timings.then_some(reduce_ms),
                solve_ms: cfg.record_timings.then_some(solve_ms),
            })
        })
        .collect::<Result<_>>()?;
    sort_records(&mut records);
    Ok(records)
}

fn finish(records: Vec<MetricsRecord>, training: Option<TrainingOutcome>) -> ExperimentOutput {
    let summary = summarize(&records);
    ExperimentOutput {
        records,
        summary,
        training,
    }
}

/// Trains (or loads) a model and evaluates it along one generalization axis.
pub fn run_generalization(cfg: &ExperimentConfig, axis: Axis) -> Result<ExperimentOutput> {
    let groups = test_groups(cfg, Some(axis))?;
    let needs_model = cfg.methods.contains(&ReductionMethod::Mlpr);
    let (model, training) = if needs_model {
        let (m, t) = obtain_model(cfg)?;
        (Some(m), t)
    } else {
        (None, None)
    };
    let records = evaluate(cfg, model.as_ref(), &groups, &cfg.methods)?;
    Ok(finish(records, training))
}

/// Runs all three reducers on the same test instances and seeds.
pub fn run_baseline_comparison(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let groups = test_groups(cfg, None)?;
    let (model, training) = obtain_model(cfg)?;
    let methods = [ReductionMethod::Mlpr, ReductionMethod::Cbm, ReductionMethod::Cmsa];
    let records = evaluate(cfg, Some(&model), &groups, &methods)?;
    Ok(finish(records, training))
}
