use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mlpr::harness::{
    emit_report, records_from_csv, run_baseline_comparison, run_generalization, run_training,
    summarize, summary_to_json, Axis, ExperimentConfig, ExperimentOutput,
};
use mlpr::instance::{
    parse_reduced, parse_tsplib, write_mtz_lp, write_reduced, write_tsplib, Family, ReducedMode,
};
use mlpr::reduction::{reduce_cbm, reduce_cmsa, reduce_mlpr_with, ReductionMethod};
use mlpr::sampling::default_sample_count;
use mlpr::solvers::{improve_2opt, solve_exact, SolveOptions};
use mlpr::svm::load_model;
use mlpr::{EdgeMask, Instance};
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Parser)]
#[command(name = "mlpr", version, about = "Learned edge pruning for TSP, ATSP and SOP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances as TSPLIB files.
    Generate {
        #[arg(long, default_value = "euclidean")]
        family: Family,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        coord_max: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Label training instances exactly and fit a model.
    Train(ExperimentArgs),
    /// Prune one instance and write the reduced problem.
    Reduce {
        instance: PathBuf,
        #[arg(long, default_value = "mlpr")]
        method: ReductionMethod,
        /// Trained model (required for mlpr).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Sample count; defaults to 100 n.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Edges of the k best samples are always kept.
        #[arg(long, default_value_t = 1)]
        guard_top_k: usize,
        #[arg(long, value_enum, default_value = "sparse")]
        format: OutputFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance (TSPLIB or sparse reduced file).
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        time_limit: f64,
        #[arg(long, default_value_t = mlpr::solvers::DEFAULT_DP_CAP)]
        dp_cap: usize,
    },
    /// Generalization experiment along one axis.
    Experiment {
        #[arg(long, default_value = "size")]
        axis: Axis,
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Compare the learned reducer with the correlation and construction baselines.
    Compare(ExperimentArgs),
    /// Recompute the JSON summary from a results CSV.
    Report {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    /// `i j cost` edge list
    Sparse,
    /// full TSPLIB matrix, removed edges priced out
    Penalized,
    /// MTZ model in CPLEX LP format
    Lp,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eps_m: Option<f64>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)
                .with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        let mut apply = |k: &str, v: String| cfg.set(k, &v);
        if let Some(v) = self.m {
            apply("m", v.to_string())?;
        }
        if let Some(v) = self.eps_m {
            apply("eps_m", v.to_string())?;
        }
        if let Some(v) = &self.kernel {
            apply("kernel", v.clone())?;
        }
        if let Some(v) = self.seed {
            apply("seed", v.to_string())?;
        }
        if let Some(v) = self.reps {
            apply("reps", v.to_string())?;
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects key=value, got `{kv}`");
            };
            apply(k.trim(), v.trim().to_string())?;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_instance(path: &Path) -> Result<(Instance, Option<EdgeMask>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path
        .file_stem()
        .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
    if text.trim_start().starts_with("n ") {
        let (inst, mask) = parse_reduced(&text, &name)?;
        Ok((inst, Some(mask)))
    } else {
        Ok((parse_tsplib(&text)?, None))
    }
}

fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, stem: &str) -> Result<()> {
    if let Some(t) = &out.training {
        t.save(&cfg.out_dir)?;
    }
    let (csv, json) = emit_report(&out.records, &cfg.out_dir, stem)?;
    for g in &out.summary.groups {
        println!(
            "{:<20} {:<5} runs {:>4}  mean gap {:>8}  best gap {:>8}  remaining {:>6.2}%  success {:>6.2}%",
            g.group,
            g.method,
            g.runs,
            g.mean_gap.map_or("-".into(), |v| format!("{v:.4}%")),
            g.best_gap.map_or("-".into(), |v| format!("{v:.4}%")),
            g.mean_remaining,
            g.success_rate
        );
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            family,
            n,
            count,
            coord_max,
            seed,
            out,
        } => {
            std::fs::create_dir_all(&out)?;
            for k in 0..count {
                let name = format!("{family}-{n}-{k:03}");
                let inst = family.generate(n, coord_max, seed.wrapping_add(k as u64))?.with_name(&name);
                let path = out.join(format!("{name}.tsp"));
                std::fs::write(&path, write_tsplib(&inst))?;
                println!("{}", path.display());
            }
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            let outcome = run_training(&cfg)?;
            outcome.save(&cfg.out_dir)?;
            let s = &outcome.summary;
            println!(
                "trained {} on {} rows from {} instances ({} positive, {} negative), converged: {}",
                s.model_kind, s.rows, s.instances, s.n_pos, s.n_neg, s.converged
            );
            println!("wrote {}", cfg.out_dir.join("model.svm").display());
        }
        Command::Reduce {
            instance,
            method,
            model,
            m,
            seed,
            guard_top_k,
            format,
            out,
        } => {
            let (inst, prior) = read_instance(&instance)?;
            if prior.is_some() {
                bail!("{} is already reduced", instance.display());
            }
            let m = m.unwrap_or_else(|| default_sample_count(inst.n()));
            let result = match method {
                ReductionMethod::Mlpr => {
                    let Some(path) = model else {
                        bail!("--model is required for mlpr");
                    };
                    let model = load_model(&std::fs::read_to_string(&path)?)?;
                    reduce_mlpr_with(&inst, &model, m, seed, guard_top_k)?
                }
                ReductionMethod::Cbm => reduce_cbm(&inst, m, seed)?,
                ReductionMethod::Cmsa => reduce_cmsa(&inst, seed, inst.n())?,
            };
            let text = match format {
                OutputFormat::Sparse => write_reduced(&inst, &result.mask, ReducedMode::SparseEdgeList)?,
                OutputFormat::Penalized => write_reduced(&inst, &result.mask, ReducedMode::PenalizedFullMatrix)?,
                OutputFormat::Lp => write_mtz_lp(&inst, &result.mask)?,
            };
            std::fs::write(&out, text)?;
            println!(
                "{}: kept {} of {} edges ({:.2}%), guard tour cost {}",
                method,
                result.mask.kept_count(),
                inst.edge_count(),
                result.remaining_fraction,
                result.guard_tour.cost
            );
        }
        Command::Solve {
            instance,
            time_limit,
            dp_cap,
        } => {
            let (inst, mask) = read_instance(&instance)?;
            let opts = SolveOptions {
                dp_cap,
                time_limit: Some(Duration::try_from_secs_f64(time_limit)?),
                ..SolveOptions::default()
            };
            let r = solve_exact(&inst, mask.as_ref(), &opts)?;
            let tour = improve_2opt(&inst, &r.tour, mask.as_ref());
            println!("cost {}", tour.cost);
            println!("optimal {}", r.optimal);
            println!("tour {}", tour.display_one_based());
            println!("nodes {} time {:.3}s", r.nodes_expanded, r.wall_time.as_secs_f64());
        }
        Command::Experiment { axis, args } => {
            let cfg = args.load()?;
            let out = run_generalization(&cfg, axis)?;
            write_outputs(&cfg, &out, &format!("{}_{axis}", cfg.name))?;
        }
        Command::Compare(args) => {
            let cfg = args.load()?;
            let out = run_baseline_comparison(&cfg)?;
            write_outputs(&cfg, &out, &format!("{}_compare", cfg.name))?;
        }
        Command::Report { csv, out } => {
            let records = records_from_csv(&std::fs::read_to_string(&csv)?)?;
            let json = summary_to_json(&summarize(&records))?;
            match out {
                Some(p) => std::fs::write(p, json)?,
                None => print!("{json}"),
            }
        }
    }
    Ok(())
}
