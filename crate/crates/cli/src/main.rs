//! `bsvqa`: batch front end for bitstream extraction, MOS prediction,
//! coefficient fitting and cross-validated model comparison.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use bsvqa::bitstream::extract_with_metadata;
use bsvqa::evaluation::{
    compare_models, cross_validate, write_comparison_csv, write_residuals_csv, EvalOptions,
    EvalReport, DEFAULT_OUTLIER_THRESHOLD,
};
use bsvqa::features::write_frame_csv;
use bsvqa::fitting::{fit, FitOptions};
use bsvqa::models::{bundled_defaults, parse_coefficient_file};
use bsvqa::{predict, read_dataset_csv, CoefficientSet, Dataset, ModelId};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tempfile::NamedTempFile;

#[derive(Parser, Debug)]
#[command(
    name = "bsvqa",
    version,
    about = "No-reference bitstream video quality toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an H.264 Annex-B file into a frame-stats CSV plus a metadata JSON.
    Extract {
        #[arg(long)]
        bitstream: PathBuf,
        /// Frame CSV path; metadata goes next to it as `<stem>.meta.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict MOS for every row of a dataset.
    Predict {
        #[arg(long, required = true, value_delimiter = ',')]
        model: Vec<ModelId>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit one model's coefficients to a dataset.
    Fit {
        #[arg(long)]
        model: ModelId,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// k-fold cross-validation of one model.
    Evaluate {
        #[arg(long)]
        model: ModelId,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
    /// Cross-validate several models over shared folds and rank them by PCC.
    Compare {
        /// Models to compare; defaults to the nine comparison models.
        #[arg(long, value_delimiter = ',')]
        model: Vec<ModelId>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, default_value_t = 5)]
        folds: usize,
    },
}

#[derive(Args, Debug, Serialize)]
struct Common {
    #[arg(long)]
    dataset: PathBuf,
    /// Coefficient JSON (one document or an array). Bundled defaults otherwise.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct Tuning {
    /// Number of optimiser starts per fit.
    #[arg(long, default_value_t = FitOptions::default().starts)]
    starts: usize,
    /// Outlier threshold for rows without a confidence interval.
    #[arg(long, default_value_t = DEFAULT_OUTLIER_THRESHOLD)]
    outlier_threshold: f64,
}

impl Tuning {
    fn eval_options(&self) -> anyhow::Result<EvalOptions> {
        if self.starts == 0 {
            bail!(bsvqa::Error::InvalidInput(
                "--starts must be at least 1".into()
            ));
        }
        Ok(EvalOptions {
            fit: FitOptions {
                starts: self.starts,
                ..FitOptions::default()
            },
            outlier_threshold: self.outlier_threshold,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// The full invocation, embedded in every artifact.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<Vec<ModelId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bitstream: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outlier_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    version: &'static str,
}

impl<'a> RunConfig<'a> {
    fn new(command: &'static str) -> Self {
        Self {
            command,
            models: None,
            bitstream: None,
            dataset: None,
            coefficients: None,
            folds: None,
            seed: None,
            starts: None,
            outlier_threshold: None,
            format: None,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    fn common(mut self, c: &'a Common) -> Self {
        self.dataset = Some(&c.dataset);
        self.coefficients = c.coefficients.as_deref();
        self.seed = Some(c.seed);
        self.format = Some(c.format);
        self
    }

    fn tuning(mut self, t: &Tuning) -> Self {
        self.starts = Some(t.starts);
        self.outlier_threshold = Some(t.outlier_threshold);
        self
    }

    fn csv_line(&self) -> anyhow::Result<String> {
        Ok(format!("# config: {}\n", serde_json::to_string(self)?))
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig<'a>,
    #[serde(flatten)]
    body: T,
}

/// Output files staged next to their destination and only moved into place
/// once every one of them has been written.
#[derive(Default)]
struct Outputs(Vec<(NamedTempFile, PathBuf)>);

impl Outputs {
    fn stage(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir)
            .with_context(|| format!("cannot create a file in {}", dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        self.0.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(self) -> anyhow::Result<()> {
        for (tmp, path) in self.0 {
            tmp.persist(&path)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

fn json_bytes<T: Serialize>(config: &RunConfig, body: T) -> anyhow::Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Envelope { config, body })?;
    v.push(b'\n');
    Ok(v)
}

fn with_config_line(config: &RunConfig, csv: Vec<u8>) -> anyhow::Result<Vec<u8>> {
    let mut out = config.csv_line()?.into_bytes();
    out.extend(csv);
    Ok(out)
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn load_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let file =
        fs::File::open(path).with_context(|| format!("cannot open dataset {}", path.display()))?;
    Ok(read_dataset_csv(file)?)
}

fn load_coefficients(path: Option<&Path>) -> anyhow::Result<Vec<CoefficientSet>> {
    match path {
        None => Ok(bundled_defaults()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read coefficients {}", p.display()))?;
            Ok(parse_coefficient_file(&text)?)
        }
    }
}

/// The set for `model` from a user file, or the default when no file is given.
fn coefficients_for(
    sets: &[CoefficientSet],
    model: ModelId,
    from_file: bool,
) -> anyhow::Result<CoefficientSet> {
    match sets.iter().find(|c| c.model() == model) {
        Some(c) => Ok(c.clone()),
        None if !from_file => Ok(CoefficientSet::default_for(model)),
        None => bail!(bsvqa::Error::InvalidInput(format!(
            "coefficient file has no entry for model {model}"
        ))),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut outputs = Outputs::default();
    match &cli.command {
        Command::Extract { bitstream, out } => {
            let bytes = fs::read(bitstream)
                .with_context(|| format!("cannot read bitstream {}", bitstream.display()))?;
            let (frames, sps, meta) = extract_with_metadata(&bytes)?;
            let mut config = RunConfig::new("extract");
            config.bitstream = Some(bitstream);
            let mut csv = Vec::new();
            write_frame_csv(&mut csv, &frames)?;
            outputs.stage(out, &with_config_line(&config, csv)?)?;
            #[derive(Serialize)]
            struct Meta<'a> {
                metadata: &'a bsvqa::bitstream::StreamMetadata,
                sps: &'a bsvqa::bitstream::SpsInfo,
            }
            let meta = json_bytes(
                &config,
                Meta {
                    metadata: &meta,
                    sps: &sps,
                },
            )?;
            outputs.stage(&sibling(out, "meta.json"), &meta)?;
        }
        Command::Predict { model, common } => {
            let mut config = RunConfig::new("predict").common(common);
            config.models = Some(model.clone());
            let dataset = load_dataset(&common.dataset)?;
            let sets = load_coefficients(common.coefficients.as_deref())?;
            let chosen = model
                .iter()
                .map(|&m| coefficients_for(&sets, m, common.coefficients.is_some()))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let bytes = predictions(&config, &dataset, &chosen, common.format)?;
            outputs.stage(&common.out, &bytes)?;
        }
        Command::Fit {
            model,
            common,
            tuning,
        } => {
            let mut config = RunConfig::new("fit").common(common).tuning(tuning);
            config.models = Some(vec![*model]);
            let options = tuning.eval_options()?;
            let dataset = load_dataset(&common.dataset)?;
            let init = match &common.coefficients {
                Some(p) => Some(coefficients_for(
                    &load_coefficients(Some(p))?,
                    *model,
                    true,
                )?),
                None => None,
            };
            let result = fit(
                *model,
                &dataset,
                init.as_ref(),
                None,
                common.seed,
                &options.fit,
            )?;
            let bytes = match common.format {
                Format::Json => json_bytes(&config, &result)?,
                Format::Csv => {
                    let mut wtr = csv::Writer::from_writer(Vec::new());
                    wtr.write_record(["coefficient", "value"])?;
                    for (name, value) in model
                        .coefficient_names()
                        .iter()
                        .zip(result.coefficients.to_vec())
                    {
                        wtr.write_record([name.clone(), value.to_string()])?;
                    }
                    wtr.write_record(["final_sse".to_string(), result.final_sse.to_string()])?;
                    wtr.write_record(["converged".to_string(), result.converged.to_string()])?;
                    with_config_line(&config, wtr.into_inner()?)?
                }
            };
            outputs.stage(&common.out, &bytes)?;
        }
        Command::Evaluate {
            model,
            common,
            tuning,
            folds,
        } => {
            let mut config = RunConfig::new("evaluate").common(common).tuning(tuning);
            config.models = Some(vec![*model]);
            config.folds = Some(*folds);
            let options = tuning.eval_options()?;
            let dataset = load_dataset(&common.dataset)?;
            let init = match &common.coefficients {
                Some(p) => Some(coefficients_for(
                    &load_coefficients(Some(p))?,
                    *model,
                    true,
                )?),
                None => None,
            };
            let report = cross_validate(
                *model,
                &dataset,
                *folds,
                common.seed,
                init.as_ref(),
                &options,
            )?;
            stage_reports(
                &mut outputs,
                &config,
                common,
                std::slice::from_ref(&report),
                None,
            )?;
        }
        Command::Compare {
            model,
            common,
            tuning,
            folds,
        } => {
            if common.coefficients.is_some() {
                bail!(bsvqa::Error::InvalidInput(
                    "compare starts every model from its defaults; --coefficients is not accepted"
                        .into()
                ));
            }
            let models = if model.is_empty() {
                ModelId::PRIMARY.to_vec()
            } else {
                model.clone()
            };
            let mut config = RunConfig::new("compare").common(common).tuning(tuning);
            config.models = Some(models.clone());
            config.folds = Some(*folds);
            let options = tuning.eval_options()?;
            let dataset = load_dataset(&common.dataset)?;
            let comparison = compare_models(&models, &dataset, *folds, common.seed, &options)?;
            stage_reports(
                &mut outputs,
                &config,
                common,
                &comparison.reports,
                Some(&comparison),
            )?;
        }
    }
    outputs.commit()
}

/// Writes the report table (JSON or CSV) plus one residual CSV per model.
fn stage_reports(
    outputs: &mut Outputs,
    config: &RunConfig,
    common: &Common,
    reports: &[EvalReport],
    comparison: Option<&bsvqa::evaluation::Comparison>,
) -> anyhow::Result<()> {
    let main = match (common.format, comparison) {
        (Format::Json, Some(c)) => json_bytes(config, c)?,
        (Format::Json, None) => json_bytes(config, &reports[0])?,
        (Format::Csv, _) => {
            let mut csv = Vec::new();
            write_comparison_csv(&mut csv, reports)?;
            with_config_line(config, csv)?
        }
    };
    outputs.stage(&common.out, &main)?;
    for report in reports {
        let mut csv = Vec::new();
        write_residuals_csv(&mut csv, report)?;
        let path = sibling(&common.out, &format!("{}.residuals.csv", report.model));
        outputs.stage(&path, &with_config_line(config, csv)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    sequence_id: &'a str,
    model: ModelId,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<bsvqa::Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn predictions(
    config: &RunConfig,
    dataset: &Dataset,
    sets: &[CoefficientSet],
    format: Format,
) -> anyhow::Result<Vec<u8>> {
    let mut rows = Vec::with_capacity(dataset.len() * sets.len());
    for set in sets {
        for row in dataset.rows() {
            let outcome = predict(&row.features, &row.display, set);
            let (prediction, error) = match outcome {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            rows.push(PredictionRow {
                sequence_id: row.sequence_id(),
                model: set.model(),
                prediction,
                error,
            });
        }
    }
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                coefficients: &'a [CoefficientSet],
                predictions: Vec<PredictionRow<'a>>,
            }
            json_bytes(
                config,
                Body {
                    coefficients: sets,
                    predictions: rows,
                },
            )
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["sequence_id", "model", "mos", "native_scale_value", "error"])?;
            for r in &rows {
                let (mos, native) = r
                    .prediction
                    .as_ref()
                    .map(|p| (p.mos.to_string(), p.native_scale_value.to_string()))
                    .unwrap_or_default();
                wtr.write_record([
                    r.sequence_id,
                    r.model.as_str(),
                    &mos,
                    &native,
                    r.error.as_deref().unwrap_or(""),
                ])?;
            }
            with_config_line(config, wtr.into_inner()?)
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn error_record(err: &anyhow::Error) -> ErrorRecord {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<bsvqa::Error>().map(|e| e.kind()))
        .or_else(|| {
            err.chain()
                .any(|e| e.downcast_ref::<std::io::Error>().is_some())
                .then_some("io")
        })
        .unwrap_or("error");
    ErrorRecord {
        error: ErrorBody {
            kind,
            message: format!("{err:#}"),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let kind = if e.to_string().contains("unknown model id") {
                "unknown_model"
            } else {
                "usage"
            };
            emit(ErrorRecord {
                error: ErrorBody {
                    kind,
                    message: e.to_string().trim_end().to_string(),
                },
            });
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            emit(error_record(&err));
            ExitCode::FAILURE
        }
    }
}

fn emit(record: ErrorRecord) {
    match serde_json::to_string(&record) {
        Ok(line) => eprintln!("{line}"),
        Err(_) => eprintln!("{}", record.error.message),
    }
}
