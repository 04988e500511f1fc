//! Command-line surface: `estimate`, `evaluate`, `prompt`, `export-geojson`,
//! and `cache` subcommands.
//!
//! Data goes to standard output or files; progress and notices go to
//! standard error, keeping stdout pipe-safe. Exit codes: 0 success, 1 when
//! some photos errored but the run completed, 2 on configuration or I/O
//! failure.

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::client::{
    BatchItem, ExchangeCache, HttpProvider, LmmClient, LmmProvider, ModelConfig, ProviderKind,
    ReplayStore,
};
use crate::dataset::{
    append_run, export_geojson, load_manifest, PhotoOutcome, PhotoRecord, RunLog, RunRecord,
};
use crate::estimate::EstimateSource;
use crate::metrics::{evaluate, scatter_to_csv, EvalPhoto, EvaluationReport};
use crate::parse::parse_depth;
use crate::prompt::{build_prompt, build_prompt_named, PromptTemplate};
use crate::reference::Profile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "floodgauge",
    version,
    about = "Floodwater depth estimation from flood photos via a vision model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate floodwater depth for photos from a manifest or image paths
    Estimate(EstimateArgs),
    /// Compute MAE and correlation statistics for a finished run
    Evaluate(EvaluateArgs),
    /// Print the rendered estimation prompt
    Prompt(PromptArgs),
    /// Export a run's point depths as a GeoJSON FeatureCollection
    ExportGeojson(ExportGeojsonArgs),
    /// Inspect or clear the on-disk exchange cache
    Cache(CacheArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProviderArg {
    Replay,
    Http,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Built-in landmark profile id (appendix1 or tables)
    #[arg(long, default_value = "appendix1")]
    profile: String,
    /// Load the landmark profile from a JSON file instead
    #[arg(long)]
    profile_file: Option<PathBuf>,
}

impl ProfileArgs {
    fn build_prompt(&self) -> Result<PromptTemplate> {
        if let Some(path) = &self.profile_file {
            let profile = Profile::from_json_file(path)?;
            Ok(build_prompt(&profile))
        } else {
            Ok(build_prompt_named(&self.profile)?)
        }
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Image files to estimate (photo id = file stem)
    images: Vec<PathBuf>,
    /// Manifest file (.csv or .json) listing the photos
    #[arg(long, conflicts_with = "images")]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "replay")]
    provider: ProviderArg,
    /// Endpoint URL (http provider)
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4-vision")]
    model_id: String,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Replay fixture directory (replay provider)
    #[arg(long)]
    fixtures_dir: Option<PathBuf>,
    #[arg(long, default_value = ".floodgauge-cache")]
    cache_dir: PathBuf,
    /// Disable the exchange cache
    #[arg(long)]
    no_cache: bool,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 60.0)]
    timeout_s: f64,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 1024)]
    max_output_tokens: u32,
    #[arg(long, default_value = "runs.jsonl")]
    run_log: PathBuf,
    /// Run identifier (default: derived from the current UTC time)
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    run_id: String,
    #[arg(long, default_value = "runs.jsonl")]
    run_log: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Report JSON output path
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    /// Scatter CSV output path
    #[arg(long, default_value = "scatter.csv")]
    scatter: PathBuf,
    /// Outlier threshold as a multiple of the MAE
    #[arg(long, default_value_t = 2.0)]
    outlier_factor: f64,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[command(flatten)]
    profile: ProfileArgs,
}

#[derive(Debug, Args)]
struct ExportGeojsonArgs {
    #[arg(long)]
    run_id: String,
    #[arg(long, default_value = "runs.jsonl")]
    run_log: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "depths.geojson")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CacheArgs {
    #[command(subcommand)]
    action: CacheAction,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    /// Count the cached exchanges
    List {
        #[arg(long, default_value = ".floodgauge-cache")]
        cache_dir: PathBuf,
    },
    /// Remove every cached exchange
    Clear {
        #[arg(long, default_value = ".floodgauge-cache")]
        cache_dir: PathBuf,
    },
}

/// Entry point used by `main`; arguments include the program name.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_with(args, &mut out, &mut err)
}

/// Testable entry point with injectable output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_CONFIG
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args, out, err),
        Command::Evaluate(args) => cmd_evaluate(args, out, err),
        Command::Prompt(args) => cmd_prompt(args, out),
        Command::ExportGeojson(args) => cmd_export_geojson(args, err),
        Command::Cache(args) => cmd_cache(args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_CONFIG
        }
    }
}

/// A photo queued for estimation: id plus readable bytes or a read error.
struct LoadedPhoto {
    photo_id: String,
    bytes: Result<Vec<u8>, String>,
}

fn looks_remote(path: &str) -> bool {
    path.starts_with("http://") || path.starts_with("https://")
}

fn read_photo(photo_id: &str, path: &Path) -> LoadedPhoto {
    let bytes = if looks_remote(&path.to_string_lossy()) {
        Err(format!(
            "remote locator {} is not fetched; download the image and reference a local path",
            path.display()
        ))
    } else {
        std::fs::read(path).map_err(|e| format!("reading {}: {e}", path.display()))
    };
    LoadedPhoto {
        photo_id: photo_id.to_string(),
        bytes,
    }
}

fn gather_photos(args: &EstimateArgs) -> Result<Vec<LoadedPhoto>> {
    if let Some(manifest_path) = &args.manifest {
        let records = load_manifest(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new(""));
        Ok(records
            .iter()
            .map(|r| {
                let path = if Path::new(&r.path).is_absolute() || looks_remote(&r.path) {
                    PathBuf::from(&r.path)
                } else {
                    base.join(&r.path)
                };
                read_photo(&r.photo_id, &path)
            })
            .collect())
    } else if args.images.is_empty() {
        bail!("give image paths or --manifest");
    } else {
        let mut seen = HashSet::new();
        let mut photos = Vec::new();
        for path in &args.images {
            let photo_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.to_string_lossy().into_owned());
            if !seen.insert(photo_id.clone()) {
                bail!("duplicate photo id `{photo_id}` among the image arguments");
            }
            photos.push(read_photo(&photo_id, path));
        }
        Ok(photos)
    }
}

fn build_client(args: &EstimateArgs) -> Result<LmmClient> {
    let cfg = ModelConfig {
        provider: match args.provider {
            ProviderArg::Replay => ProviderKind::Replay,
            ProviderArg::Http => ProviderKind::Http,
        },
        model_id: args.model_id.clone(),
        endpoint_url: args.endpoint.clone(),
        temperature: args.temperature,
        max_output_tokens: args.max_output_tokens,
        timeout_s: args.timeout_s,
        max_retries: args.max_retries,
        concurrency_limit: args.concurrency.max(1),
        ..ModelConfig::default()
    };
    let cache_dir = (!args.no_cache).then_some(args.cache_dir.as_path());
    let provider: Arc<dyn LmmProvider> = match cfg.provider {
        ProviderKind::Replay => {
            let dir = args
                .fixtures_dir
                .as_deref()
                .ok_or_else(|| anyhow!("the replay provider needs --fixtures-dir"))?;
            Arc::new(ReplayStore::open(dir)?)
        }
        ProviderKind::Http => {
            let endpoint = cfg
                .endpoint_url
                .as_deref()
                .ok_or_else(|| anyhow!("the http provider needs --endpoint"))?;
            Arc::new(HttpProvider::from_env(
                endpoint,
                std::time::Duration::from_secs_f64(cfg.timeout_s),
            )?)
        }
    };
    Ok(LmmClient::with_provider(provider, cfg, cache_dir)?)
}

fn cmd_estimate(args: EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let prompt = args.profile.build_prompt()?;
    let photos = gather_photos(&args)?;
    let client = build_client(&args)?;
    let started = chrono::Utc::now().to_rfc3339();

    if photos.is_empty() {
        writeln!(err, "0 photos; nothing to estimate")?;
    } else {
        writeln!(err, "estimating {} photo(s)...", photos.len())?;
    }

    // submit the readable photos as one batch, then stitch outcomes back
    // into input order
    let mut indices = Vec::new();
    let mut batch = Vec::new();
    for (i, p) in photos.iter().enumerate() {
        if let Ok(bytes) = &p.bytes {
            indices.push(i);
            batch.push(BatchItem {
                id: p.photo_id.clone(),
                bytes: bytes.clone(),
            });
        }
    }
    let batch_results = client.estimate_batch(&batch, &prompt);

    let mut outcomes: Vec<Option<PhotoOutcome>> = photos
        .iter()
        .map(|p| {
            p.bytes.as_ref().err().map(|message| PhotoOutcome::Error {
                photo_id: p.photo_id.clone(),
                message: message.clone(),
            })
        })
        .collect();
    for (index, result) in indices.iter().zip(batch_results) {
        let photo_id = photos[*index].photo_id.clone();
        let outcome = match result {
            Ok(exchange) => {
                let source = EstimateSource::Model(exchange.model_id.clone());
                match parse_depth(&exchange.response_text, source) {
                    Ok(estimate) => PhotoOutcome::Ok {
                        photo_id,
                        image_hash: exchange.image_hash.clone(),
                        estimate,
                    },
                    Err(e) => PhotoOutcome::Error {
                        photo_id,
                        message: format!("response parse failed: {e}"),
                    },
                }
            }
            Err(e) => PhotoOutcome::Error {
                photo_id,
                message: e.to_string(),
            },
        };
        outcomes[*index] = Some(outcome);
    }
    let outcomes: Vec<PhotoOutcome> = outcomes
        .into_iter()
        .map(|o| o.expect("every photo has an outcome"))
        .collect();

    let id_width = outcomes
        .iter()
        .map(|o| o.photo_id().len())
        .max()
        .unwrap_or(8)
        .max("photo_id".len());
    writeln!(out, "{:<id_width$}  {:>8}  flags", "photo_id", "depth_m")?;
    let mut failures = 0usize;
    for outcome in &outcomes {
        match outcome {
            PhotoOutcome::Ok { photo_id, estimate, .. } => {
                let flags = estimate.flag_names().join(",");
                writeln!(
                    out,
                    "{photo_id:<id_width$}  {:>8.3}  {}",
                    estimate.value_m,
                    if flags.is_empty() { "-" } else { &flags }
                )?;
            }
            PhotoOutcome::Error { photo_id, message } => {
                failures += 1;
                writeln!(out, "{photo_id:<id_width$}  {:>8}  {message}", "ERROR")?;
            }
        }
    }

    let run_id = args.run_id.clone().unwrap_or_else(|| {
        format!("run-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S%3fZ"))
    });
    let record = RunRecord {
        run_id: run_id.clone(),
        model_id: args.model_id.clone(),
        prompt_checksum: prompt.checksum().to_string(),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        photos: outcomes,
    };
    append_run(&args.run_log, &record)?;
    writeln!(
        err,
        "run {run_id}: {} ok, {} failed; appended to {}",
        record.photos.len() - failures,
        failures,
        args.run_log.display()
    )?;

    Ok(if failures > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn print_report(report: &EvaluationReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "n          {}", report.n)?;
    writeln!(
        out,
        "MAE        {:.3} m ({:.1} cm)",
        report.mae_m,
        report.mae_m * 100.0
    )?;
    writeln!(out, "signed err {:.3} m", report.mean_signed_error_m)?;
    writeln!(out, "Pearson r  {:.4} (vs annotator mean)", report.pearson_vs_mean)?;
    for a in &report.pearson_per_annotator {
        writeln!(out, "           {:.4} (annotator {})", a.r, a.annotator_id)?;
    }
    writeln!(
        out,
        "outliers   {} (|error| > {} x MAE)",
        report.outliers.len(),
        report.outlier_factor
    )?;
    for o in &report.outliers {
        writeln!(out, "           {} ({:.3} m)", o.photo_id, o.abs_error_m)?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let run = RunLog::at(&args.run_log).find(&args.run_id)?;
    let records = load_manifest(&args.manifest)?;

    let mut eval_photos = Vec::new();
    let mut unannotated = 0usize;
    for record in &records {
        if record.annotations.annotator_depths.is_empty() {
            unannotated += 1;
            continue;
        }
        let model_m = run
            .photos
            .iter()
            .find(|o| o.photo_id() == record.photo_id)
            .and_then(|o| o.estimate())
            .map(|e| e.value_m);
        eval_photos.push(EvalPhoto {
            photo_id: record.photo_id.clone(),
            model_m,
            annotations: record.annotations.annotator_depths.clone(),
        });
    }
    if unannotated > 0 {
        writeln!(err, "skipping {unannotated} photo(s) without manual depths")?;
    }

    let report = evaluate(&eval_photos, args.outlier_factor)?;

    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.report, json.as_bytes())
        .with_context(|| format!("writing {}", args.report.display()))?;
    std::fs::write(&args.scatter, scatter_to_csv(&report).as_bytes())
        .with_context(|| format!("writing {}", args.scatter.display()))?;

    print_report(&report, out)?;
    writeln!(
        err,
        "wrote {} and {}",
        args.report.display(),
        args.scatter.display()
    )?;
    Ok(EXIT_OK)
}

fn cmd_prompt(args: PromptArgs, out: &mut dyn Write) -> Result<i32> {
    let template = args.profile.build_prompt()?;
    write!(out, "{}", template.rendered())?;
    Ok(EXIT_OK)
}

fn cmd_export_geojson(args: ExportGeojsonArgs, err: &mut dyn Write) -> Result<i32> {
    let run = RunLog::at(&args.run_log).find(&args.run_id)?;
    let records: Vec<PhotoRecord> = load_manifest(&args.manifest)?;
    let export = export_geojson(&run, &records);
    let json = serde_json::to_string_pretty(&export.document)?;
    std::fs::write(&args.out, json.as_bytes())
        .with_context(|| format!("writing {}", args.out.display()))?;
    writeln!(
        err,
        "wrote {} feature(s) to {}; skipped {} without coordinates, {} errored",
        export.features,
        args.out.display(),
        export.skipped_no_coordinates,
        export.skipped_errors
    )?;
    Ok(EXIT_OK)
}

fn cmd_cache(args: CacheArgs, out: &mut dyn Write) -> Result<i32> {
    match args.action {
        CacheAction::List { cache_dir } => {
            let count = if cache_dir.exists() {
                ExchangeCache::open(&cache_dir)?.len()?
            } else {
                0
            };
            writeln!(out, "{count} cached exchange(s) in {}", cache_dir.display())?;
        }
        CacheAction::Clear { cache_dir } => {
            let removed = if cache_dir.exists() {
                ExchangeCache::open(&cache_dir)?.clear()?
            } else {
                0
            };
            writeln!(out, "cleared {removed} cached exchange(s)")?;
        }
    }
    Ok(EXIT_OK)
}
