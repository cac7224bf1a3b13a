use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use dfa::distortion::{DerivativeScheme, DistortionParams};
use dfa::frames::{FrameMode, FrameParams, PeakWeighting};
use dfa::linalg::{rotation_about, Vec3};
use dfa::nifti::{read_volume, write_volume, NiftiError, NiftiVolume};
use dfa::pipeline::*;
use dfa::sphere::{PeakParams, ShVolume, DEFAULT_ORDER};
use dfa::synth::{generate, SynthKind, SyntheticSpec};
use dfa::DfaError;

#[derive(Parser)]
#[command(name = "dfa", version, about = "Director field analysis for ODF and tensor volumes")]
#[command(args_override_self = true)]
struct Cli {
    /// JSON file whose keys mirror the long flags of the subcommand;
    /// flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect ODF peaks.
    Peaks(PeaksArgs),
    /// Orientational order and dispersion along the principal peak.
    OoOd(OoOdArgs),
    /// Local orthogonal frames from a peak volume.
    Frames(FramesArgs),
    /// Splay, bend, twist and total distortion maps.
    Distortion(DistortionArgs),
    /// Tensor-field gradient analysis.
    Tfa(TfaArgs),
    /// Generate a synthetic tensor field.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct OdfInput {
    /// SH ODF volume (sh:L).
    #[arg(long = "in", value_name = "FILE", conflicts_with = "tensor")]
    input: Option<PathBuf>,
    /// Tensor volume (tensor6), converted to its SH ODF.
    #[arg(long, value_name = "FILE")]
    tensor: Option<PathBuf>,
    /// SH order used for tensor input.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
}

#[derive(Args, Clone)]
struct PeakArgs {
    #[arg(long = "gfa-thresh", default_value_t = 0.3)]
    gfa_thresh: f64,
    #[arg(long = "peak-ratio", default_value_t = 0.5)]
    peak_ratio: f64,
}

impl PeakArgs {
    fn params(&self) -> PeakParams {
        PeakParams {
            gfa_threshold: self.gfa_thresh,
            peak_ratio: self.peak_ratio,
            ..PeakParams::default()
        }
    }
}

#[derive(Args)]
struct PeaksArgs {
    #[command(flatten)]
    input: OdfInput,
    #[command(flatten)]
    peak: PeakArgs,
    #[arg(long = "max-peaks", default_value_t = 3)]
    max_peaks: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OoOdArgs {
    #[command(flatten)]
    input: OdfInput,
    #[command(flatten)]
    peak: PeakArgs,
    #[arg(long = "out-oo")]
    out_oo: PathBuf,
    #[arg(long = "out-od")]
    out_od: PathBuf,
    #[arg(long = "out-mask")]
    out_mask: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Relative,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Director,
    VectorMean,
    VectorMax,
}

#[derive(Args, Clone)]
struct FrameArgs {
    /// Gaussian width in voxels.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Neighborhood half-width in voxels.
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Relative)]
    weighting: WeightingArg,
    #[arg(long = "frame-mode", value_enum, default_value_t = ModeArg::Director)]
    frame_mode: ModeArg,
}

impl FrameArgs {
    fn params(&self) -> Result<FrameParams, CliError> {
        if !(self.sigma > 0.0) {
            return Err(CliError::Usage("--sigma must be positive".into()));
        }
        Ok(FrameParams {
            sigma: self.sigma,
            radius: self.radius,
            weighting: match self.weighting {
                WeightingArg::Relative => PeakWeighting::RelativeToPrincipal,
                WeightingArg::Raw => PeakWeighting::Raw,
            },
            mode: match self.frame_mode {
                ModeArg::Director => FrameMode::Director,
                ModeArg::VectorMean => FrameMode::VectorMean,
                ModeArg::VectorMax => FrameMode::VectorMax,
            },
            ..FrameParams::default()
        })
    }
}

#[derive(Args)]
struct FramesArgs {
    #[arg(long)]
    peaks: PathBuf,
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Geodesic,
    Verbatim,
}

#[derive(Args)]
struct DistortionArgs {
    /// Frame volume (frame9).
    #[arg(long, conflicts_with_all = ["input", "tensor"])]
    frames: Option<PathBuf>,
    #[command(flatten)]
    input: OdfInput,
    #[command(flatten)]
    peak: PeakArgs,
    #[command(flatten)]
    frame: FrameArgs,
    /// Rescale axis rotations to a common physical step.
    #[arg(long = "spacing-normalize")]
    spacing_normalize: bool,
    /// Physical step (mm) for --spacing-normalize.
    #[arg(long = "reference-step", default_value_t = 1.0)]
    reference_step: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Geodesic)]
    scheme: SchemeArg,
    /// Output path prefix; writes <prefix>{splay,bend,twist,total,mask}.nii.
    #[arg(long = "out-prefix")]
    out_prefix: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum TfaOp {
    GradNorm,
    MdGrad,
    Structure4,
}

#[derive(Args)]
struct TfaArgs {
    /// Tensor volume (tensor6).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    op: TfaOp,
    #[arg(long)]
    out: PathBuf,
    /// Also write the eigenvalue moduli of the structure tensor (vec:6).
    #[arg(long = "out-eigen")]
    out_eigen: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: SynthKind,
    #[arg(long, value_parser = parse_usize3, default_value = "32,16,3")]
    dims: [usize; 3],
    #[arg(long, value_parser = parse_f64_3, default_value = "1,1,1")]
    spacing: [f64; 3],
    /// Total angle across x (radians; accepts pi, pi/2, 2pi); rad/mm for
    /// the helical kind. Defaults per kind.
    #[arg(long, value_parser = parse_angle)]
    angle: Option<f64>,
    /// Eigenvalues in mm²/s, descending.
    #[arg(long, value_parser = parse_f64_3, default_value = "0.0017,0.0002,0.0002")]
    eigenvalues: [f64; 3],
    /// Tensor mode at the bottom and top rows, e.g. 1,0.
    #[arg(long = "mode-range", value_parser = parse_f64_2)]
    mode_range: Option<[f64; 2]>,
    /// Global rotation axis (normalized).
    #[arg(long = "rotation-axis", value_parser = parse_f64_3, requires = "rotation_angle")]
    rotation_axis: Option<[f64; 3]>,
    #[arg(long = "rotation-angle", value_parser = parse_angle)]
    rotation_angle: Option<f64>,
    /// Tensor volume output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the SH ODF (sh:L).
    #[arg(long = "out-odf")]
    out_odf: Option<PathBuf>,
    /// Also write the construction-axis peaks (peaks:1).
    #[arg(long = "out-peaks")]
    out_peaks: Option<PathBuf>,
    /// Also write the singular-voxel mask.
    #[arg(long = "out-singular")]
    out_singular: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
}

fn parse_kind(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: DfaError| e.to_string())
}

fn parse_list<const N: usize, T: std::str::FromStr>(s: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<[T; N], String> {
    let parts: Vec<T> = s.split(',').map(|p| parse(p.trim())).collect::<Result<_, _>>()?;
    let n = parts.len();
    parts.try_into().map_err(|_| format!("expected {N} comma-separated values, got {n}"))
}

fn parse_usize3(s: &str) -> Result<[usize; 3], String> {
    parse_list(s, |p| p.parse::<usize>().map_err(|e| e.to_string()))
}

fn parse_f64_3(s: &str) -> Result<[f64; 3], String> {
    parse_list(s, |p| p.parse::<f64>().map_err(|e| e.to_string()))
}

fn parse_f64_2(s: &str) -> Result<[f64; 2], String> {
    parse_list(s, |p| p.parse::<f64>().map_err(|e| e.to_string()))
}

/// A number, or a multiple/fraction of `pi` such as `pi`, `2pi`, `pi/4`.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(idx) = t.find("pi") {
        let (pre, post) = (&t[..idx], &t[idx + 2..]);
        let factor = match pre.trim_end_matches('*') {
            "" => 1.0,
            "-" => -1.0,
            f => f.parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"))?,
        };
        let divisor = match post.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"))?,
            None if post.is_empty() => 1.0,
            None => return Err(format!("bad angle {s:?}")),
        };
        return Ok(factor * std::f64::consts::PI / divisor);
    }
    t.parse::<f64>().map_err(|e| format!("bad angle {s:?}: {e}"))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<NiftiError> for CliError {
    fn from(e: NiftiError) -> Self {
        match e {
            NiftiError::TagMismatch { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Nifti(n) => n.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<DfaError> for CliError {
    fn from(e: DfaError) -> Self {
        match e {
            DfaError::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<NiftiVolume, CliError> {
    info!("reading {}", path.display());
    Ok(read_volume(path)?)
}

fn write(path: &Path, v: &NiftiVolume) -> Result<(), CliError> {
    info!("writing {}", path.display());
    Ok(write_volume(path, v)?)
}

fn load_odf(input: &OdfInput) -> Result<ShVolume, CliError> {
    match (&input.input, &input.tensor) {
        (Some(p), None) => Ok(sh_from_nifti(&read(p)?)?),
        (None, Some(p)) => {
            if !input.order.is_multiple_of(2) {
                return Err(CliError::Usage(format!("--order must be even, got {}", input.order)));
            }
            Ok(odf_from_tensor_nifti(&read(p)?, input.order)?)
        }
        _ => Err(CliError::Usage("one of --in or --tensor is required".into())),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Peaks(a) => {
            if a.max_peaks == 0 {
                return Err(CliError::Usage("--max-peaks must be at least 1".into()));
            }
            let odf = load_odf(&a.input)?;
            let params = PeakParams {
                max_peaks: Some(a.max_peaks),
                ..a.peak.params()
            };
            write(&a.out, &peaks_to_nifti(&run_peaks(&odf, &params), a.max_peaks))
        }
        Command::OoOd(a) => {
            let odf = load_odf(&a.input)?;
            let maps = run_oo_od(&odf, &a.peak.params());
            write(&a.out_oo, &scalar_to_nifti(&maps.oo))?;
            write(&a.out_od, &scalar_to_nifti(&maps.od))?;
            if let Some(p) = &a.out_mask {
                write(p, &mask_to_nifti(&maps.mask))?;
            }
            Ok(())
        }
        Command::Frames(a) => {
            let peaks = peaks_from_nifti(&read(&a.peaks)?)?;
            write(&a.out, &frames_to_nifti(&run_frames(&peaks, &a.frame.params()?)))
        }
        Command::Distortion(a) => {
            if !(a.reference_step > 0.0) {
                return Err(CliError::Usage("--reference-step must be positive".into()));
            }
            let params = DistortionParams {
                scheme: match a.scheme {
                    SchemeArg::Geodesic => DerivativeScheme::Geodesic,
                    SchemeArg::Verbatim => DerivativeScheme::Verbatim,
                },
                spacing_normalize: a.spacing_normalize,
                reference_step: a.reference_step,
            };
            let frames = match &a.frames {
                Some(p) => frames_from_nifti(&read(p)?)?,
                None => {
                    let odf = load_odf(&a.input)?;
                    run_frames(&run_peaks(&odf, &a.peak.params()), &a.frame.params()?)
                }
            };
            let maps = run_distortion(&frames, &params);
            let prefix = &a.out_prefix;
            for (name, map) in [
                ("splay", &maps.splay),
                ("bend", &maps.bend),
                ("twist", &maps.twist),
                ("total", &maps.total),
            ] {
                write(Path::new(&format!("{prefix}{name}.nii")), &scalar_to_nifti(map))?;
            }
            write(Path::new(&format!("{prefix}mask.nii")), &mask_to_nifti(&maps.mask))
        }
        Command::Tfa(a) => {
            let field = matrices_from_nifti(&read(&a.input)?)?;
            match a.op {
                TfaOp::GradNorm => write(&a.out, &scalar_to_nifti(&tfa_gradient_norm(&field))),
                TfaOp::MdGrad => write(&a.out, &vectors_to_nifti(&tfa_md_gradient(&field))),
                TfaOp::Structure4 => {
                    let (matrix, moduli) = tfa_structure4(&field)?;
                    write(&a.out, &vectors_to_nifti(&matrix))?;
                    if let Some(p) = &a.out_eigen {
                        write(p, &vectors_to_nifti(&moduli))?;
                    }
                    Ok(())
                }
            }
        }
        Command::Synth(a) => {
            let mut spec = SyntheticSpec::new(a.kind);
            spec.dims = a.dims;
            spec.spacing = a.spacing;
            spec.eigenvalues = a.eigenvalues;
            if let Some(angle) = a.angle {
                spec.angle = angle;
            }
            spec.mode_range = a.mode_range.map(|[b, t]| (b, t));
            if let (Some(axis), Some(angle)) = (a.rotation_axis, a.rotation_angle) {
                let axis = Vec3::from(axis);
                if !(axis.norm() > 0.0) {
                    return Err(CliError::Usage("--rotation-axis must be nonzero".into()));
                }
                spec.rotation = rotation_about(&axis.normalize(), angle);
            }
            let field = generate(&spec)?;
            write(&a.out, &tensors_to_nifti(&field.tensors))?;
            if let Some(p) = &a.out_odf {
                if a.order % 2 != 0 {
                    return Err(CliError::Usage(format!("--order must be even, got {}", a.order)));
                }
                write(p, &sh_to_nifti(&field.odf(a.order)?))?;
            }
            if let Some(p) = &a.out_peaks {
                write(p, &peaks_to_nifti(&field.peaks, 1))?;
            }
            if let Some(p) = &a.out_singular {
                write(p, &mask_to_nifti(&field.singular))?;
            }
            Ok(())
        }
    }
}

/// Inserts `--key value` pairs from the JSON config right after the
/// subcommand so that explicit flags, which come later, override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| CliError::Usage("--config needs a file".into()))?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: invalid JSON: {e}")))?;
    let serde_json::Value::Object(map) = json else {
        return Err(CliError::Usage(format!("{path}: config must be a JSON object")));
    };
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Bool(true) => injected.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(json_scalar).collect::<Result<_, _>>()?;
                injected.push(flag);
                injected.push(parts.join(","));
            }
            other => {
                injected.push(flag);
                injected.push(json_scalar(&other)?);
            }
        }
    }
    let sub = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !a.starts_with('-') && *i != pos + 1)
        .map(|(i, _)| i)
        .ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn json_scalar(v: &serde_json::Value) -> Result<String, CliError> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(CliError::Usage(format!("unsupported config value {other}"))),
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("DFA_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("DFA_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("DFA_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = expand_config(std::env::args().collect()).and_then(|args| {
        let cli = match Cli::try_parse_from(args) {
            Ok(cli) => cli,
            Err(e) => {
                let code = match e.kind() {
                    clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                    _ => 1,
                };
                let _ = e.print();
                std::process::exit(code);
            }
        };
        configure_threads()?;
        run(cli.command)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
