//! `memnet` binary: train and probe memory-network models from the
//! command line. Every subcommand is deterministic given its
//! configuration and seeds, and artifacts are written only under `--out`.

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use memnet::baselines::{lstm_detrended_forecast, DetrendConfig};
use memnet::serialize::{load_model, Checkpoint};
use memnet::tasks::airline::{airline_series, TRAIN_END};
use memnet::tasks::babi::{babi_parse, babi_parse_file, build_vocab, gen_task1, story_to_task};
use memnet::tasks::henon::henon_tasks;
use memnet::train::{gradcheck_batch, CheckModel, DEFAULT_TOLERANCE};
use memnet_cli::config::{
    resolve, ConfigOverlay, RunConfig, QA_DEV_SEED, QA_DEV_STORIES, QA_TEST_SEED, QA_TRAIN_SEED,
};
use memnet_cli::ops::{
    babi_eval, copy_generalization, dump_memory_artifacts, eval_seed as copygen_eval_seed,
    first_error_positions, median, nrmse, recursive_forecast, recursive_forecast_replay, run,
    split_means, synchronize_eval, EVAL_SEED_BASE,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "memnet",
    about = "Train and probe memory-network sequence models",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one model per seed and report training and evaluation metrics.
    Train(RunArgs),
    /// Evaluate untrained models (a train run with zero epochs).
    Eval(RunArgs),
    /// Free-run forecast on the airline series from a trained checkpoint.
    Forecast(ForecastArgs),
    /// Fresh-state synchronization probe on the airline series.
    Sync(SyncArgs),
    /// Length-generalization sweep for a trained copy/reverse model.
    Copygen(CopygenArgs),
    /// Story question-answering evaluation of a trained checkpoint.
    Babi(BabiArgs),
    /// Dump memory similarity traces and final key/value matrices.
    Dump(DumpArgs),
    /// Verify analytic gradients against the finite-difference oracle.
    Gradcheck(GradcheckArgs),
}

/// Flags shared by `train` and `eval`: a config file plus field overrides.
/// Flags win over the file; the file wins over the task preset.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML config file with any subset of the run settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task: henon | airline | copy | reverse | babi.
    #[arg(long)]
    task: Option<String>,
    /// Model family: memnet | rnn | lstm.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n_h: Option<usize>,
    #[arg(long)]
    n_mem: Option<usize>,
    /// Gaussian read-kernel width.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed; repeat for several independent runs (--seed 0 --seed 1).
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    shuffle: Option<bool>,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    metric_every: Option<usize>,
    #[arg(long)]
    henon_windows: Option<usize>,
    #[arg(long)]
    henon_window: Option<usize>,
    #[arg(long)]
    airline_window: Option<usize>,
    #[arg(long)]
    airline_stride: Option<usize>,
    #[arg(long)]
    copy_max_len: Option<usize>,
    #[arg(long)]
    copy_n_bits: Option<usize>,
    #[arg(long)]
    copy_per_len: Option<usize>,
    /// Synthetic QA corpus size (stories).
    #[arg(long)]
    babi_stories: Option<usize>,
    /// QA story file for training (requires --babi-test).
    #[arg(long)]
    babi_train: Option<String>,
    /// QA story file for evaluation (requires --babi-train).
    #[arg(long)]
    babi_test: Option<String>,
    /// Directory for report.json, learning curves, and checkpoints.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut flags = ConfigOverlay {
            task: self.task.as_deref().map(str::parse).transpose()?,
            model: self.model.as_deref().map(str::parse).transpose()?,
            n_h: self.n_h,
            n_mem: self.n_mem,
            sigma: self.sigma,
            lr: self.lr,
            epochs: self.epochs,
            seeds: None,
            shuffle: self.shuffle,
            clip_norm: self.clip_norm,
            metric_every: self.metric_every,
            henon_windows: self.henon_windows,
            henon_window: self.henon_window,
            airline_window: self.airline_window,
            airline_stride: self.airline_stride,
            copy_max_len: self.copy_max_len,
            copy_n_bits: self.copy_n_bits,
            copy_per_len: self.copy_per_len,
            babi_stories: self.babi_stories,
            babi_train: self.babi_train.clone(),
            babi_test: self.babi_test.clone(),
        };
        if !self.seeds.is_empty() {
            flags.seeds = Some(self.seeds.clone());
        }
        resolve(self.config.as_deref(), &flags)
    }
}

#[derive(Args, Debug)]
struct ForecastArgs {
    /// Trained checkpoint to forecast with.
    #[arg(long)]
    model_file: PathBuf,
    /// Warm up on the series up to this index (exclusive).
    #[arg(long, default_value_t = TRAIN_END)]
    warmup_end: usize,
    /// Number of values to forecast.
    #[arg(long, default_value_t = 48)]
    horizon: usize,
    /// Also train and score the detrended-LSTM reference forecaster.
    #[arg(long)]
    with_baseline: bool,
    /// Directory for forecast.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SyncArgs {
    /// Trained checkpoint to probe.
    #[arg(long)]
    model_file: PathBuf,
    /// Start of the probe stretch (index into the series).
    #[arg(long, default_value_t = TRAIN_END)]
    start: usize,
    /// Steps counted as the warm-in window.
    #[arg(long, default_value_t = 16)]
    split: usize,
    /// Directory for sync.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CopygenArgs {
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    model_file: PathBuf,
    /// Evaluate the reverse task instead of copy.
    #[arg(long)]
    reverse: bool,
    /// Sequence lengths to probe.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,120")]
    lengths: Vec<usize>,
    /// Fresh sequences per length.
    #[arg(long, default_value_t = 100)]
    per_length: usize,
    #[arg(long, default_value_t = 8)]
    n_bits: usize,
    /// Directory for accuracy and correctness-grid CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BabiArgs {
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    model_file: PathBuf,
    /// Story files: evaluate on --test-file with the vocabulary built
    /// over both files (must match how the model was trained).
    #[arg(long, requires = "test_file")]
    train_file: Option<PathBuf>,
    #[arg(long, requires = "train_file")]
    test_file: Option<PathBuf>,
    /// Synthetic corpus size per split when no files are given; must
    /// match the size the model was trained with.
    #[arg(long, default_value_t = 1000)]
    stories: usize,
    /// Directory for babi_eval.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpArgs {
    /// Trained memory-model checkpoint.
    #[arg(long)]
    model_file: PathBuf,
    /// Probe data: henon | airline | copy | reverse | babi.
    #[arg(long)]
    task: String,
    /// Held-out window settings for the henon probe.
    #[arg(long, default_value_t = 40)]
    windows: usize,
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Sequence length for the copy/reverse probe.
    #[arg(long, default_value_t = 20)]
    len: usize,
    #[arg(long, default_value_t = 8)]
    n_bits: usize,
    /// Synthetic corpus size for the babi probe vocabulary.
    #[arg(long, default_value_t = 1000)]
    stories: usize,
    /// Story index within the synthetic test corpus.
    #[arg(long, default_value_t = 0)]
    story_index: usize,
    /// Directory for sims.csv, keys.csv, values.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Model family to check: memnet | rnn | lstm | all.
    #[arg(long, default_value = "all")]
    model: String,
    /// Random instances per family.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Train(args) => cmd_run(&args, false),
        Cmd::Eval(args) => cmd_run(&args, true),
        Cmd::Forecast(args) => cmd_forecast(&args),
        Cmd::Sync(args) => cmd_sync(&args),
        Cmd::Copygen(args) => cmd_copygen(&args),
        Cmd::Babi(args) => cmd_babi(&args),
        Cmd::Dump(args) => cmd_dump(&args),
        Cmd::Gradcheck(args) => cmd_gradcheck(&args),
    }
}

fn cmd_run(args: &RunArgs, force_eval_only: bool) -> Result<ExitCode> {
    let mut cfg = args.resolve()?;
    if force_eval_only {
        cfg.epochs = 0;
    }
    let report = run(&cfg, args.out.as_deref())?;
    if let Some(out) = &args.out {
        println!(
            "{} {} on {}: {} seed(s), {} parameters",
            if force_eval_only { "evaluated" } else { "trained" },
            cfg.model,
            cfg.task,
            report.seeds.len(),
            report.n_params,
        );
        for s in &report.seeds {
            let loss = s.final_train_loss.map_or("-".to_string(), |v| format!("{v:.6}"));
            let metric = s.final_metric.map_or("-".to_string(), |v| format!("{v:.6}"));
            let flag = if s.diverged { " DIVERGED" } else { "" };
            println!("  seed {}: train_loss {loss} metric {metric}{flag}", s.seed);
        }
        if let Some(best) = report.best_seed {
            println!("best seed: {best}");
        }
        println!("report: {}", out.join("report.json").display());
    } else {
        // No output directory: the report goes to stdout instead.
        print!("{}", report.to_json());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_forecast(args: &ForecastArgs) -> Result<ExitCode> {
    let ckpt = load_model(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    let series = airline_series();
    ensure!(
        args.warmup_end >= 1 && args.warmup_end <= series.len(),
        "warmup_end must be in 1..={}, got {}",
        series.len(),
        args.warmup_end,
    );
    let warmup = &series[..args.warmup_end];
    let outcome = match &ckpt {
        Checkpoint::MemNet(m) => recursive_forecast(m, warmup, args.horizon)?,
        other => recursive_forecast_replay(other, warmup, args.horizon)?,
    };
    println!(
        "forecast: {} value(s) from warmup of {}{}",
        outcome.forecast.len(),
        args.warmup_end,
        if outcome.truncated { " (truncated: prediction left the finite range)" } else { "" },
    );

    let actual_end = args.warmup_end + outcome.forecast.len();
    if !outcome.forecast.is_empty() && actual_end <= series.len() {
        let actual = &series[args.warmup_end..actual_end];
        println!("nrmse vs actual: {:.6}", nrmse(&outcome.forecast, actual)?);
        if args.with_baseline {
            let base = lstm_detrended_forecast(warmup, outcome.forecast.len(), &DetrendConfig::default())?;
            println!("detrended-lstm nrmse: {:.6}", nrmse(&base, actual)?);
        }
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let path = out.join("forecast.csv");
        std::fs::write(&path, outcome.csv())?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sync(args: &SyncArgs) -> Result<ExitCode> {
    let ckpt = load_model(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    let series = airline_series();
    ensure!(args.start < series.len(), "start must be below {}, got {}", series.len(), args.start);
    let outcome = synchronize_eval(&ckpt, &series[args.start..])?;
    let (before, after) = split_means(&outcome.abs_errors, args.split);
    println!("sync over {} step(s) from index {}", outcome.abs_errors.len(), args.start);
    println!("mean abs error, first {}: {before:.6}", args.split);
    println!("mean abs error, rest: {after:.6}");
    if before > 0.0 && after.is_finite() {
        println!("ratio rest/first: {:.4}", after / before);
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let path = out.join("sync.csv");
        std::fs::write(&path, outcome.csv())?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_copygen(args: &CopygenArgs) -> Result<ExitCode> {
    let ckpt = load_model(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    ensure!(!args.lengths.is_empty(), "give at least one probe length");
    let report = copy_generalization(
        &ckpt,
        args.reverse,
        &args.lengths,
        args.per_length,
        args.n_bits,
        EVAL_SEED_BASE,
    )?;
    println!(
        "{} generalization, {} sequence(s) per length:",
        if args.reverse { "reverse" } else { "copy" },
        args.per_length,
    );
    for r in &report.lengths {
        println!(
            "  len {:>4}: bit accuracy {:.4}, exact {}/{}",
            r.len, r.bit_accuracy, r.exact_sequences, r.total_sequences,
        );
    }
    let longest = report.lengths.iter().max_by_key(|r| r.len).expect("nonempty lengths");
    let prefixes = first_error_positions(&longest.grid);
    println!("len {} median correct prefix: {}", longest.len, median(&prefixes));

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let acc = out.join("copygen_accuracy.csv");
        std::fs::write(&acc, report.accuracy_csv())?;
        let grid = out.join(format!("copygen_grid_len{}.csv", longest.len));
        std::fs::write(&grid, longest.grid_csv())?;
        println!("wrote {} and {}", acc.display(), grid.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_babi(args: &BabiArgs) -> Result<ExitCode> {
    let ckpt = load_model(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    let (eval_stories, vocab) = match (&args.train_file, &args.test_file) {
        (Some(train), Some(test)) => {
            let train_stories = babi_parse_file(train)
                .with_context(|| format!("loading {}", train.display()))?;
            let test_stories =
                babi_parse_file(test).with_context(|| format!("loading {}", test.display()))?;
            let mut all = train_stories;
            all.extend(test_stories.iter().cloned());
            let vocab = build_vocab(&all);
            (test_stories, vocab)
        }
        _ => {
            // Rebuild the synthetic corpora exactly as a training run
            // does, so the vocabulary indices line up with the model.
            let train = babi_parse(&gen_task1(args.stories, QA_TRAIN_SEED))?;
            let dev = babi_parse(&gen_task1(QA_DEV_STORIES, QA_DEV_SEED))?;
            let test = babi_parse(&gen_task1(args.stories, QA_TEST_SEED))?;
            let mut all = train;
            all.extend(dev);
            all.extend(test.iter().cloned());
            let vocab = build_vocab(&all);
            (test, vocab)
        }
    };
    let report = babi_eval(&ckpt, &eval_stories, &vocab)?;
    println!(
        "{} question(s), {} wrong, error rate {:.4} — {}",
        report.n_questions,
        report.n_wrong,
        report.error_rate,
        if report.failed { "FAILED (above the 5% bar)" } else { "passed" },
    );
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let path = out.join("babi_eval.json");
        std::fs::write(&path, report.to_json())?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dump(args: &DumpArgs) -> Result<ExitCode> {
    let ckpt = load_model(&args.model_file)
        .with_context(|| format!("loading {}", args.model_file.display()))?;
    let model = match &ckpt {
        Checkpoint::MemNet(m) => m,
        _ => bail!("memory dumps need a memory-model checkpoint"),
    };
    let (inputs, writes) = dump_probe(args)?;
    let dump = dump_memory_artifacts(model, &inputs, &writes)?;
    std::fs::create_dir_all(&args.out)?;
    for (name, content) in [
        ("sims.csv", dump.sims_csv()),
        ("keys.csv", dump.keys_csv()),
        ("values.csv", dump.values_csv()),
    ] {
        let path = args.out.join(name);
        std::fs::write(&path, content)?;
        println!("wrote {}", path.display());
    }
    println!(
        "{} step(s) against {} slot(s); final write count {}",
        dump.sims.len(),
        dump.n_mem(),
        writes.iter().filter(|&&w| w).count().min(dump.n_mem()),
    );
    Ok(ExitCode::SUCCESS)
}

/// Held-out probe data for a dump, per task family.
fn dump_probe(args: &DumpArgs) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    match args.task.as_str() {
        "henon" => {
            // One window past the training block: the same held-out data
            // a training run scores against.
            let mut tasks = henon_tasks(args.windows + 1, args.window, 0.1, 0.1, false)?;
            let t = tasks.pop().expect("windows + 1 tasks");
            Ok((t.inputs, t.writes))
        }
        "airline" => {
            let series = airline_series();
            let inputs = series[TRAIN_END..].iter().map(|&v| vec![v]).collect::<Vec<_>>();
            let writes = vec![true; inputs.len()];
            Ok((inputs, writes))
        }
        "copy" | "reverse" => {
            let gen = if args.task == "reverse" {
                memnet::tasks::copy::gen_reverse
            } else {
                memnet::tasks::copy::gen_copy
            };
            // Far past any evaluation index, so the probe is fresh.
            let t = gen(args.len, args.n_bits, copygen_eval_seed(EVAL_SEED_BASE, args.len, 1_000_000))?;
            Ok((t.inputs, t.writes))
        }
        "babi" => {
            let train = babi_parse(&gen_task1(args.stories, QA_TRAIN_SEED))?;
            let dev = babi_parse(&gen_task1(QA_DEV_STORIES, QA_DEV_SEED))?;
            let test = babi_parse(&gen_task1(args.stories, QA_TEST_SEED))?;
            ensure!(
                args.story_index < test.len(),
                "story index {} out of range for {} test stories",
                args.story_index,
                test.len(),
            );
            let mut all = train;
            all.extend(dev);
            all.extend(test.iter().cloned());
            let vocab = build_vocab(&all);
            let t = story_to_task(&test[args.story_index], &vocab)?;
            Ok((t.inputs, t.writes))
        }
        other => bail!("unknown dump task {other:?}; expected henon|airline|copy|reverse|babi"),
    }
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<ExitCode> {
    let families = match args.model.as_str() {
        "memnet" => vec![CheckModel::MemNet],
        "rnn" => vec![CheckModel::Rnn],
        "lstm" => vec![CheckModel::Lstm],
        "all" => vec![CheckModel::MemNet, CheckModel::Rnn, CheckModel::Lstm],
        other => bail!("unknown model {other:?}; expected memnet|rnn|lstm|all"),
    };
    let mut all_passed = true;
    for family in families {
        let report = gradcheck_batch(family, args.instances, args.seed, args.tolerance)?;
        let status = if report.passed() { "ok" } else { "FAILED" };
        println!(
            "{:>6}: {} instance(s), max relative error {:.3e} (tolerance {:.1e}) {status}",
            family.name(),
            report.per_instance.len(),
            report.max_rel_err,
            report.tolerance,
        );
        if !report.passed() {
            println!(
                "  worst instance: #{} at {:.3e}",
                report.worst_instance, report.max_rel_err
            );
            all_passed = false;
        }
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
