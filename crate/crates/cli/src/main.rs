//! `robustmsc`: run classification, noise-test and label-sweep experiments
//! on multi-graph datasets, or generate a synthetic dataset.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use robustmsc::experiment::{run_classify, run_label_sweep, run_noise_test, ExperimentConfig, ResultsTable};
use robustmsc::io::{write_labels, write_manifest};
use robustmsc::synthetic::{generate, SyntheticSpec};

#[derive(Parser)]
#[command(name = "robustmsc", version, about = "Robust semi-supervised classification on multi-graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated classification with sampled labeled sets.
    Classify(ExperimentArgs),
    /// Inject intrusive graphs over a grid of settings and compare methods.
    NoiseTest(ExperimentArgs),
    /// Classification at several labeled fractions.
    LabelSweep(ExperimentArgs),
    /// Write the planted-partition dataset with two intrusive views.
    GenSynthetic(SyntheticArgs),
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Ground-truth labels (`node ±1` per line).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Comma-separated: robust, tss, eql, perf.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    label_fraction: Option<f64>,
    /// Comma-separated fractions for label-sweep.
    #[arg(long)]
    fractions: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    cv_repeats: Option<usize>,
    /// `model,intensity,count,seed` (e.g. `AV,high,6,1`) or `none`.
    #[arg(long)]
    noise: Option<String>,
    /// Comma-separated subset of ER, RW, AV.
    #[arg(long)]
    noise_models: Option<String>,
    /// Comma-separated subset of low, high.
    #[arg(long)]
    noise_intensities: Option<String>,
    /// Comma-separated injected counts.
    #[arg(long)]
    noise_counts: Option<String>,
    #[arg(long)]
    penalty_const: Option<f64>,
    /// A value in (0, 1], or `calibrated:d_thresh,p_thresh,m_l,m_u`.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<String>,
    /// Comma-separated grid for c.
    #[arg(long)]
    hyper_c: Option<String>,
    /// Comma-separated grid for c0.
    #[arg(long)]
    hyper_c0: Option<String>,
    /// Cap on removed graphs, or `none`.
    #[arg(long)]
    max_removed: Option<String>,
    /// `ap` or `accuracy`.
    #[arg(long)]
    perf_metric: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ExperimentArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
        let pairs: Vec<(&str, Option<String>)> = vec![
            ("manifest", path(self.manifest)),
            ("labels", path(self.labels)),
            ("methods", self.methods),
            ("label_fraction", self.label_fraction.map(|v| v.to_string())),
            ("fractions", self.fractions),
            ("repeats", self.repeats.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("folds", self.folds.map(|v| v.to_string())),
            ("cv_repeats", self.cv_repeats.map(|v| v.to_string())),
            ("noise", self.noise),
            ("noise_models", self.noise_models),
            ("noise_intensities", self.noise_intensities),
            ("noise_counts", self.noise_counts),
            ("penalty_const", self.penalty_const.map(|v| v.to_string())),
            ("temperature", self.temperature),
            ("hyper_c", self.hyper_c),
            ("hyper_c0", self.hyper_c0),
            ("max_removed", self.max_removed),
            ("perf_metric", self.perf_metric),
            ("workers", self.workers.map(|v| v.to_string())),
            ("output_dir", path(self.output_dir)),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            cfg.set(k, v).with_context(|| format!("--set {kv}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SyntheticArgs {
    /// Output directory for the manifest, views and labels.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Omit the two intrusive views.
    #[arg(long)]
    clean: bool,
}

fn report(table: &ResultsTable, cfg: &ExperimentConfig) {
    for s in table.summaries() {
        let setting = if s.noise_model == "none" {
            "clean".to_string()
        } else {
            format!("{}-{}-{}", s.noise_model, s.intensity, s.injected)
        };
        match (s.mean_ap, s.std_ap) {
            (Some(m), Some(sd)) => println!(
                "{:<6} {:<12} frac={:<5} AP {m:.4} ± {sd:.4} ({} runs, {} failed)",
                s.method, setting, s.label_fraction, s.runs, s.failures
            ),
            _ => println!("{:<6} {:<12} frac={:<5} all {} runs failed", s.method, setting, s.label_fraction, s.runs),
        }
    }
    for r in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: {} repeat {} failed: {}",
            r.method,
            r.repeat,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("outputs written to {}", cfg.output_dir.display());
}

fn gen_synthetic(args: SyntheticArgs) -> Result<()> {
    let mut spec = SyntheticSpec::figure_one(args.seed);
    if args.clean {
        spec = spec.informative_only();
    }
    let data = generate(&spec)?;
    let manifest = write_manifest(&args.out, &data.graph)?;
    let labels = args.out.join("labels.txt");
    write_labels(&labels, &data.truth)?;
    let intrusive: String = data.intrusive.iter().map(|k| format!("{k}\n")).collect();
    std::fs::write(args.out.join("intrusive.txt"), intrusive).context("writing intrusive.txt")?;
    println!(
        "wrote {} views over {} nodes: {} (labels {}, intrusive views {:?})",
        data.graph.m(),
        data.graph.n(),
        manifest.display(),
        labels.display(),
        data.intrusive
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify(a) => {
            let cfg = a.into_config()?;
            let t = run_classify(&cfg).context("classify")?;
            report(&t, &cfg);
        }
        Command::NoiseTest(a) => {
            let cfg = a.into_config()?;
            let t = run_noise_test(&cfg).context("noise-test")?;
            report(&t, &cfg);
        }
        Command::LabelSweep(a) => {
            let cfg = a.into_config()?;
            let t = run_label_sweep(&cfg).context("label-sweep")?;
            report(&t, &cfg);
        }
        Command::GenSynthetic(a) => gen_synthetic(a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
