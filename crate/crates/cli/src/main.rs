//! `divshap` command-line front end.
//!
//! Exit status is 0 on success, 1 on any runtime error and 2 on invalid
//! usage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use divshap::bench::{self, run_experiment, ExperimentMode, ExperimentReport, KReport};
use divshap::config::{load_config, FileConfig};
use divshap::graph::{build_graph, SimilarityConfig};
use divshap::pipeline::{fit_timed, EvalMode, PipelineModel};
use divshap::{load_ucr, mine_shapelets, Dataset};

#[derive(Parser)]
#[command(name = "divshap", version, about = "Diversified shapelet + ELM time-series classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a training file and save it.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        /// Model file to write.
        #[arg(long, short)]
        model: PathBuf,
        /// Per-k sweep CSV.
        #[arg(long)]
        sweep_csv: Option<PathBuf>,
        /// Scaled shapelet features of the training set.
        #[arg(long)]
        transformed: Option<PathBuf>,
    },
    /// Predict a labelled or unlabelled file with a saved model.
    Predict {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Predicted class per series, one per line.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scaled shapelet features of the test set.
        #[arg(long)]
        transformed: Option<PathBuf>,
        #[arg(long, env = "DIVSHAP_WORKERS")]
        workers: Option<usize>,
    },
    /// Fit, then report cross-validated and test accuracy for every k.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        split: Split,
        #[command(flatten)]
        report: ReportOut,
    },
    /// DivShapELM against raw ELM and 1NN baselines.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        split: Split,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Write the ranked candidate pool as CSV.
    MineDump {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only the best N candidates.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Write the diversity graph over the top-ranked candidates as CSV.
    GraphDump {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        train: PathBuf,
        /// Number of top-ranked candidates used as vertices.
        #[arg(long, default_value_t = 200)]
        top: usize,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        vertices: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file; flags override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kappa: Option<usize>,
    /// Worker threads (defaults to the config file, then all cores).
    #[arg(long, env = "DIVSHAP_WORKERS")]
    workers: Option<usize>,
    /// Enable the SAX candidate pre-filter.
    #[arg(long)]
    sax_filter: bool,
    #[arg(long, value_enum)]
    eval_mode: Option<EvalModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalModeArg {
    /// Stratified cross-validation on the training set.
    Cv,
    /// Training accuracy.
    Train,
}

#[derive(Args)]
struct Split {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
}

#[derive(Args)]
struct ReportOut {
    /// JSON report.
    #[arg(long)]
    json: Option<PathBuf>,
    /// One-row summary CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-k CSV.
    #[arg(long)]
    sweep_csv: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<FileConfig> {
        let mut file = match &self.config {
            Some(path) => load_config(path).with_context(|| format!("reading config {}", path.display()))?,
            None => FileConfig::default(),
        };
        let p = &mut file.pipeline;
        if let Some(seed) = self.seed {
            *p = p.clone().with_seed(seed);
        }
        if let Some(kappa) = self.kappa {
            p.kappa = kappa;
        }
        if self.sax_filter {
            p.mining.use_sax_filter = true;
        }
        match self.eval_mode {
            Some(EvalModeArg::Cv) => {
                if p.eval.mode == EvalMode::TrainingAccuracy {
                    p.eval.mode = EvalMode::CrossValidation { folds: 5 };
                }
            }
            Some(EvalModeArg::Train) => p.eval.mode = EvalMode::TrainingAccuracy,
            None => {}
        }
        if self.workers.is_some() {
            file.workers = self.workers;
        }
        Ok(file)
    }
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!("worker count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

fn load(path: &Path) -> Result<Dataset> {
    load_ucr(path).with_context(|| format!("loading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn experiment(common: &Common, split: &Split, out: &ReportOut, mode: ExperimentMode) -> Result<()> {
    let cfg = common.resolve()?;
    init_workers(cfg.workers)?;
    let train = load(&split.train)?;
    let test = load(&split.test)?;
    let report = run_experiment(&train, &test, &cfg.pipeline, mode)?;
    print!("{}", report.table());
    write_report(&report, out)
}

fn write_report(report: &ExperimentReport, out: &ReportOut) -> Result<()> {
    if let Some(p) = &out.json {
        write(p, &report.to_json()?)?;
    }
    if let Some(p) = &out.csv {
        write(p, &report.summary_csv())?;
    }
    if let Some(p) = &out.sweep_csv {
        write(p, &report.sweep_csv())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            common,
            train,
            model,
            sweep_csv,
            transformed,
        } => {
            let cfg = common.resolve()?;
            init_workers(cfg.workers)?;
            let train = load(&train)?;
            let (fitted, timings) = fit_timed(&train, &cfg.pipeline)?;
            fitted.save(&model).with_context(|| format!("writing {}", model.display()))?;
            println!("selected k: {}", fitted.selected_k);
            for row in &fitted.sweep {
                println!("  k = {:<2} cv accuracy {:.4}", row.k, row.mean_accuracy);
            }
            info!("fit timings: {timings:?}");
            if let Some(p) = sweep_csv {
                let rows: Vec<KReport> = fitted.sweep.iter().map(KReport::from).collect();
                write(&p, &bench::sweep_csv(&fitted.classes, &rows))?;
            }
            if let Some(p) = transformed {
                write(&p, &fitted.features(&train)?.to_csv(&fitted.classes))?;
            }
        }
        Command::Predict {
            model,
            test,
            out,
            transformed,
            workers,
        } => {
            init_workers(workers)?;
            let model = PipelineModel::load(&model).with_context(|| format!("reading model {}", model.display()))?;
            let test = load(&test)?;
            let prediction = model.predict(&test)?;
            if let Some(p) = out {
                let mut text = prediction.names.join("\n");
                text.push('\n');
                write(&p, &text)?;
            }
            if let Some(p) = transformed {
                let aligned = test.aligned_to_classes(&model.classes);
                write(&p, &model.features(&aligned)?.to_csv(aligned.classes()))?;
            }
            match prediction.accuracy {
                Some(acc) => println!("accuracy: {acc:.4} ({} series)", prediction.labels.len()),
                None => println!("accuracy: n/a (empty test set)"),
            }
        }
        Command::Sweep { common, split, report } => experiment(&common, &split, &report, ExperimentMode::Sweep)?,
        Command::Compare { common, split, report } => experiment(&common, &split, &report, ExperimentMode::Compare)?,
        Command::MineDump {
            common,
            train,
            out,
            limit,
        } => {
            let cfg = common.resolve()?;
            init_workers(cfg.workers)?;
            let train = load(&train)?;
            let pool = mine_shapelets(&train, &cfg.pipeline.mining_config())?;
            write(&out, &pool.to_csv(&train, limit))?;
            println!("{} ranked candidates from {} generated", pool.len(), pool.generated);
        }
        Command::GraphDump {
            common,
            train,
            top,
            edges,
            vertices,
        } => {
            let cfg = common.resolve()?;
            init_workers(cfg.workers)?;
            let train = load(&train)?;
            let pool = mine_shapelets(&train, &cfg.pipeline.mining_config())?;
            let ranked = pool.shapelets(&train).take(top).collect();
            let sim: SimilarityConfig = cfg.pipeline.similarity();
            let graph = build_graph(ranked, &sim);
            write(&edges, &graph.edges_csv())?;
            write(&vertices, &graph.vertices_csv())?;
            println!("{} vertices, {} edges", graph.vertices().len(), graph.edge_count());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
