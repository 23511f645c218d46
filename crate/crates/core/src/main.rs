use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use scma::ae::{build_autoencoder, make_dcma_masks, train_autoencoder, AeHyper, Autoencoder, EncoderArch};
use scma::detect::{ComplexityWeights, LogMpaDetector, LogMpaOptions, MapDetector, DEFAULT_MAP_GUARD};
use scma::dl::{generate_training_set, train_decoder, DecoderArch, TrainHyper, TrainedDecoder, TrainingGroup};
use scma::harness::{
    benchmark_runtime, compare_complexity, constellation_csv, constellation_projection, parse_grid, run_sweep,
    CodebookSource, Detector, DetectorSpec, RunConfig, StoppingRule, SweepSpec,
};
use scma::model::{ebn0_db_to_linear, ensemble_power, generate_frames, noise_variance, Codebook};
use scma::rng::{derive_seed, derived};

#[derive(Parser)]
#[command(name = "scma", version, about = "SCMA/DCMA detection, learned decoders and learned codebooks")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Root seed; every random stream of the run is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON run configuration (codebook, factor graph, detector, training parameters).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $SCMA_OUT_DIR or .]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER/SER sweep over an Eb/N0 grid.
    Sweep(SweepArgs),
    /// Train the learned decoder on a generated data set.
    TrainDecoder(TrainDecoderArgs),
    /// Train the autoencoder and extract its codebook.
    TrainAutoencoder(TrainAeArgs),
    /// Write a codebook as JSON.
    ExportCodebook(ExportArgs),
    /// Closed-form operation counts for Log-MPA and the learned decoder.
    Complexity(ComplexityArgs),
    /// Mean per-frame decode time of each detector.
    Bench(BenchArgs),
    /// Superposition points of one resource, optionally with received samples.
    Constellation(ConstellationArgs),
}

#[derive(Args)]
struct CodebookArgs {
    /// Codebook JSON file.
    #[arg(long, conflicts_with = "learned")]
    codebook: Option<PathBuf>,
    /// Use the codebook extracted from an autoencoder checkpoint.
    #[arg(long)]
    learned: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// map, logmpa, dl or ae.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Decoder or autoencoder checkpoint for the dl and ae detectors.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    codebook: CodebookArgs,
    /// Grid as start:step:stop or a comma list; `inf` disables noise.
    #[arg(long)]
    ebn0: Option<String>,
    /// Run exactly this many frames per point.
    #[arg(long, conflicts_with_all = ["min_errors", "max_frames"])]
    frames: Option<u64>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    /// Record per-frame wall time (makes the output machine-dependent).
    #[arg(long)]
    timing: bool,
    /// Output file stem [default: sweep-<detector>]
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct TrainDecoderArgs {
    /// Training Eb/N0 groups in dB.
    #[arg(long, default_value = "2:1:6")]
    ebn0: String,
    /// Samples per group.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    hidden_width: Option<usize>,
    #[command(flatten)]
    codebook: CodebookArgs,
    /// Also write the generated training set in binary form.
    #[arg(long)]
    dataset_out: Option<PathBuf>,
    /// Train one decoder per Eb/N0 group and test each on --test-ebn0.
    #[arg(long)]
    matrix: bool,
    #[arg(long, default_value = "0:2:12")]
    test_ebn0: String,
    #[arg(long, default_value_t = 100_000)]
    test_frames: u64,
    #[arg(long, default_value = "decoder")]
    name: String,
}

#[derive(Args)]
struct TrainAeArgs {
    /// Share of resources each user occupies; 0.5 gives the SCMA masks, 1 the dense ones.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Training Eb/N0 in dB; `inf` trains without noise.
    #[arg(long)]
    ebn0: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value = "autoencoder")]
    name: String,
}

#[derive(Args)]
struct ExportArgs {
    /// Autoencoder checkpoint to read the codebook from.
    #[arg(long, conflicts_with = "small")]
    checkpoint: Option<PathBuf>,
    /// The bundled 3-user, 2-resource codebook.
    #[arg(long)]
    small: bool,
    #[arg(long, default_value = "codebook")]
    name: String,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Log-MPA iteration counts.
    #[arg(long = "it", value_delimiter = ',', default_value = "3,5,7")]
    iterations: Vec<usize>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    hidden_width: Option<usize>,
    /// Charge every operation one unit instead of 1/10/20.
    #[arg(long)]
    unit_weights: bool,
    #[arg(long, default_value = "complexity")]
    name: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2000)]
    frames: usize,
    #[arg(long, default_value_t = 6.0)]
    ebn0: f64,
    #[arg(long = "it", value_delimiter = ',', default_value = "3,5,7")]
    iterations: Vec<usize>,
    /// Trained decoder to time; an untrained one of the same shape otherwise.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    no_map: bool,
    #[arg(long, default_value = "bench")]
    name: String,
}

#[derive(Args)]
struct ConstellationArgs {
    #[arg(long)]
    resource: usize,
    #[command(flatten)]
    codebook: CodebookArgs,
    /// Add received samples at this Eb/N0.
    #[arg(long)]
    received_ebn0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    name: Option<String>,
}

struct Ctx {
    seed: u64,
    config: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, file: &str, contents: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(file);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
        Ok(path)
    }

    fn source(&self, args: &CodebookArgs) -> CodebookSource {
        match (&args.codebook, &args.learned, &self.config.codebook) {
            (Some(p), _, _) => CodebookSource::File { path: p.clone() },
            (None, Some(p), _) => CodebookSource::Learned { checkpoint: p.clone() },
            (None, None, Some(p)) => CodebookSource::File { path: p.clone() },
            (None, None, None) => CodebookSource::Reference,
        }
    }

    fn codebook(&self, args: &CodebookArgs) -> Result<Codebook> {
        match self.source(args) {
            CodebookSource::Reference => Ok(self.config.codebook()?),
            src => Ok(src.load()?),
        }
    }

    fn decoder_arch(&self, cfg: &scma::model::SystemConfig, layers: Option<usize>, width: Option<usize>) -> DecoderArch {
        let base = self.config.decoder.map_or((6, 48), |h| (h.layers, h.width));
        DecoderArch::for_config(cfg).with_hidden(layers.unwrap_or(base.0), width.unwrap_or(base.1))
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn sweep(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let detector = match (a.detector.as_deref(), &ctx.config.detector) {
        (Some("map"), _) => DetectorSpec::Map,
        (Some("logmpa"), _) => DetectorSpec::LogMpa { iterations: a.iterations },
        (Some(kind @ ("dl" | "ae")), _) => {
            let checkpoint = a.checkpoint.clone().with_context(|| format!("--detector {kind} needs --checkpoint"))?;
            if kind == "dl" {
                DetectorSpec::DlDecoder { checkpoint }
            } else {
                DetectorSpec::AeDecoder { checkpoint }
            }
        }
        (Some(other), _) => bail!("unknown detector {other:?} (expected map, logmpa, dl or ae)"),
        (None, Some(spec)) => spec.clone(),
        (None, None) => bail!("no detector given (use --detector or the config file)"),
    };
    let ebn0_db = match (&a.ebn0, &ctx.config.ebn0_db) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(g)) => g.clone(),
        (None, None) => bail!("no Eb/N0 grid given (use --ebn0 or the config file)"),
    };
    let mut stop = ctx.config.stop.unwrap_or_default();
    if let Some(n) = a.frames {
        stop = StoppingRule::fixed(n, stop.batch_frames);
    }
    if let Some(e) = a.min_errors {
        stop.min_bit_errors = e;
    }
    if let Some(m) = a.max_frames {
        stop.max_frames = m;
        stop.min_frames = stop.min_frames.min(m);
    }
    let codebook = ctx.source(&a.codebook);
    if matches!(codebook, CodebookSource::Reference) {
        ctx.config.codebook()?;
    }
    let spec = SweepSpec {
        detector,
        codebook,
        gains: ctx.config.gains.clone(),
        ebn0_db,
        stop,
        seed: ctx.seed,
        timing: a.timing,
    };
    let result = run_sweep(&spec)?;
    result.check_identities()?;
    let stem = a.name.clone().unwrap_or_else(|| format!("sweep-{}", result.detector));
    ctx.write(&format!("{stem}.csv"), &result.to_csv())?;
    ctx.write(&format!("{stem}.meta.json"), &pretty(&json!({ "spec": spec, "result": result }))?)?;
    Ok(())
}

fn train_hyper(ctx: &Ctx, a: &TrainDecoderArgs, seed: u64) -> TrainHyper {
    let mut h = ctx.config.decoder_training.unwrap_or(TrainHyper {
        epochs: 100,
        learning_rate: 2e-3,
        lr_decay: 0.97,
        ..TrainHyper::default()
    });
    h.epochs = a.epochs.unwrap_or(h.epochs);
    h.learning_rate = a.lr.unwrap_or(h.learning_rate);
    h.lr_decay = a.lr_decay.unwrap_or(h.lr_decay);
    h.batch_size = a.batch.unwrap_or(h.batch_size);
    h.seed = seed;
    h
}

fn curve_csv(curve: &[scma::dl::EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,validation_loss\n");
    for e in curve {
        let v = e.validation_loss.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, v));
    }
    out
}

fn train_decoder_cmd(ctx: &Ctx, a: &TrainDecoderArgs) -> Result<()> {
    let cb = ctx.codebook(&a.codebook)?;
    let cfg = cb.system_config()?;
    let gains = ctx.config.gains(cfg.resources)?;
    let arch = ctx.decoder_arch(&cfg, a.hidden_layers, a.hidden_width);
    let grid = parse_grid(&a.ebn0)?;
    let runs: Vec<Vec<TrainingGroup>> = if a.matrix {
        grid.iter().map(|&db| vec![TrainingGroup::new(db, a.samples)]).collect()
    } else {
        vec![TrainingGroup::uniform(&grid, a.samples)]
    };
    let test_grid = parse_grid(&a.test_ebn0)?;
    let mut matrix = String::from("train_ebn0_db,test_ebn0_db,frames,bit_err,ber,ci95\n");
    for (r, groups) in runs.iter().enumerate() {
        let set = generate_training_set(&cb, &gains, groups, &mut derived(ctx.seed, &[1, r as u64]))?;
        if let Some(p) = &a.dataset_out {
            let p = if a.matrix { p.with_extension(format!("{r}.bin")) } else { p.clone() };
            set.write_binary(&p)?;
            println!("{}", p.display());
        }
        let hyper = train_hyper(ctx, a, derive_seed(ctx.seed, &[2, r as u64]));
        let outcome = train_decoder(&arch, &cfg, &set, &hyper)?;
        let stem = if a.matrix { format!("{}-{}dB", a.name, groups[0].ebn0_db) } else { a.name.clone() };
        let path = ctx.out.join(format!("{stem}.json"));
        std::fs::create_dir_all(&ctx.out)?;
        outcome.decoder.save(&path)?;
        println!("{}", path.display());
        ctx.write(&format!("{stem}.curve.csv"), &curve_csv(&outcome.curve))?;
        if a.matrix {
            let det = Detector::Network {
                label: stem.clone(),
                network: outcome.decoder.network,
            };
            let stop = StoppingRule::fixed(a.test_frames, 1000);
            let res = det.sweep(&cb, &gains, &test_grid, &stop, derive_seed(ctx.seed, &[3]))?;
            for p in &res.points {
                matrix.push_str(&format!(
                    "{},{},{},{},{:e},{:e}\n",
                    groups[0].ebn0_db, p.ebn0_db, p.frames, p.bit_errors, p.ber, p.ci95
                ));
            }
        }
    }
    if a.matrix {
        ctx.write(&format!("{}-matrix.csv", a.name), &matrix)?;
    }
    Ok(())
}

fn train_ae_cmd(ctx: &Ctx, a: &TrainAeArgs) -> Result<()> {
    let cb = ctx.config.codebook()?;
    let cfg = cb.system_config()?;
    let gains = ctx.config.gains(cfg.resources)?;
    let masks = make_dcma_masks(&ctx.config.factor_graph()?, a.density)?;
    let enc = ctx.config.encoder.map_or_else(EncoderArch::default, |h| EncoderArch {
        hidden_layers: h.layers,
        hidden_width: h.width,
    });
    let dec = match ctx.config.decoder {
        Some(h) => DecoderArch::for_config(&cfg).with_hidden(h.layers, h.width),
        None => DecoderArch::for_config(&cfg).with_hidden(5, 48),
    };
    let mut h = ctx.config.autoencoder_training.unwrap_or(AeHyper {
        samples: 2_000_000,
        learning_rate: 1e-3,
        ..AeHyper::default()
    });
    h.train_ebn0_db = a.ebn0.unwrap_or(h.train_ebn0_db);
    h.samples = a.samples.unwrap_or(h.samples);
    h.learning_rate = a.lr.unwrap_or(h.learning_rate);
    h.lr_decay = a.lr_decay.unwrap_or(h.lr_decay);
    h.batch_size = a.batch.unwrap_or(h.batch_size);
    h.seed = derive_seed(ctx.seed, &[2]);
    let ae = build_autoencoder(&cfg, masks.masks, &enc, &dec, gains, &mut derived(ctx.seed, &[1]))?;
    let outcome = train_autoencoder(ae, &h)?;
    let report = outcome.autoencoder.structure_report()?;
    let learned = outcome.autoencoder.extract_codebook()?;
    let summary = json!({
        "density": a.density,
        "overlap": masks.overlap,
        "hyper": h,
        "coverage": outcome.coverage,
        "final_loss": outcome.final_loss,
        "structure": report,
        "signal_power": ensemble_power(&learned, &outcome.autoencoder.gains),
    });
    std::fs::create_dir_all(&ctx.out)?;
    let path = ctx.out.join(format!("{}.json", a.name));
    outcome.autoencoder.save(&path, summary.clone())?;
    println!("{}", path.display());
    let mut curve = String::from("cycle,samples_seen,train_loss\n");
    for e in &outcome.curve {
        curve.push_str(&format!("{},{},{}\n", e.cycle, e.samples_seen, e.train_loss));
    }
    ctx.write(&format!("{}.curve.csv", a.name), &curve)?;
    ctx.write(&format!("{}.codebook.json", a.name), &learned.to_json())?;
    ctx.write(&format!("{}.report.json", a.name), &pretty(&summary)?)?;
    Ok(())
}

fn export_cmd(ctx: &Ctx, a: &ExportArgs) -> Result<()> {
    let cb = match (&a.checkpoint, a.small) {
        (Some(p), _) => Autoencoder::load(p)?.extract_codebook()?,
        (None, true) => Codebook::small(),
        (None, false) => ctx.config.codebook()?,
    };
    ctx.write(&format!("{}.json", a.name), &cb.to_json())?;
    Ok(())
}

fn complexity_cmd(ctx: &Ctx, a: &ComplexityArgs) -> Result<()> {
    let cfg = ctx.config.codebook()?.system_config()?;
    let weights = if a.unit_weights { ComplexityWeights::unit() } else { ComplexityWeights::default() };
    let table = compare_complexity(&cfg, &a.iterations, &ctx.decoder_arch(&cfg, a.hidden_layers, a.hidden_width), &weights)?;
    ctx.write(&format!("{}.csv", a.name), &table.to_csv())?;
    print!("{}", table.to_csv());
    Ok(())
}

fn bench_cmd(ctx: &Ctx, a: &BenchArgs) -> Result<()> {
    let cb = ctx.config.codebook()?;
    let cfg = cb.system_config()?;
    let gains = ctx.config.gains(cfg.resources)?;
    let mut dets = Vec::new();
    for &it in &a.iterations {
        dets.push(Detector::LogMpa(LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(it))?));
    }
    let network = match &a.checkpoint {
        Some(p) => TrainedDecoder::load(p)?.network,
        None => ctx.decoder_arch(&cfg, None, None).build(&mut derived(ctx.seed, &[1]))?,
    };
    dets.push(Detector::Network {
        label: "dl-decoder".into(),
        network,
    });
    if !a.no_map {
        dets.push(Detector::Map(MapDetector::new(&cb, &gains, DEFAULT_MAP_GUARD)?));
    }
    let report = benchmark_runtime(&dets, &cb, &gains, a.frames, a.ebn0, ctx.seed)?;
    ctx.write(&format!("{}.csv", a.name), &report.to_csv())?;
    ctx.write(&format!("{}.meta.json", a.name), &pretty(&report)?)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn constellation_cmd(ctx: &Ctx, a: &ConstellationArgs) -> Result<()> {
    let cb = ctx.codebook(&a.codebook)?;
    let cfg = cb.system_config()?;
    let gains = ctx.config.gains(cfg.resources)?;
    let received = match a.received_ebn0 {
        Some(db) => {
            let var = noise_variance(ensemble_power(&cb, &gains), ebn0_db_to_linear(db), &cfg)?;
            Some(generate_frames(&cb.signal_table(&gains), a.samples, var, &mut derived(ctx.seed, &[1])).received)
        }
        None => None,
    };
    let points = constellation_projection(&cb, &gains, a.resource, received.as_deref())?;
    let stem = a.name.clone().unwrap_or_else(|| format!("constellation-r{}", a.resource));
    ctx.write(&format!("{stem}.csv"), &constellation_csv(&points))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("SCMA_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| Path::new(".").to_path_buf());
    let ctx = Ctx {
        seed: cli.seed,
        config,
        out,
    };
    match &cli.command {
        Command::Sweep(a) => sweep(&ctx, a),
        Command::TrainDecoder(a) => train_decoder_cmd(&ctx, a),
        Command::TrainAutoencoder(a) => train_ae_cmd(&ctx, a),
        Command::ExportCodebook(a) => export_cmd(&ctx, a),
        Command::Complexity(a) => complexity_cmd(&ctx, a),
        Command::Bench(a) => bench_cmd(&ctx, a),
        Command::Constellation(a) => constellation_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
