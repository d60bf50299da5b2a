use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeprof_core::quant::{self, Granularity, QuantParams, QuantizedTensor, Scheme, TensorView};
use edgeprof_core::{
    emit_plot_data, run_profile, run_sweep, Aggregation, Concurrency, Error, Format, PresetCatalog,
    Result,
};
use serde_json::json;

/// Relative output paths are resolved against this directory when set.
const OUT_DIR_VAR: &str = "EDGEPROF_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "edgeprof",
    version,
    about = "Analytical LLM inference profiler for edge devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Profile one model on one device at one precision.
    Profile(ProfileArgs),
    /// Profile the cross product of devices, models and precisions.
    Sweep(SweepArgs),
    /// Inspect the built-in presets.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
    /// Quantization simulator.
    Quant {
        #[command(subcommand)]
        command: QuantCommand,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Aggregation of stage latencies.
    #[arg(long, default_value = "serial")]
    mode: Aggregation,
    /// json, csv or markdown.
    #[arg(long, default_value = "json")]
    format: String,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Model preset name or path to a model config.
    #[arg(long)]
    model: String,
    /// Device preset name or path to a hardware config.
    #[arg(long)]
    device: String,
    /// Precision preset name or path to a precision config.
    #[arg(long)]
    precision: String,
    /// Override the model's sequence length.
    #[arg(long)]
    seq_len: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated device names or paths; defaults to every preset.
    #[arg(long, value_delimiter = ',')]
    devices: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    precisions: Vec<String>,
    /// Also write the six plot series as JSON to this path.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Worker threads: 0 picks automatically, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum PresetsCommand {
    /// List every preset with its provenance flag.
    List {
        #[arg(long, value_enum, default_value_t = ListFormat::Text)]
        format: ListFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ListFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum QuantCommand {
    /// Calibrate, quantize and reconstruct a tensor, then report the error.
    Demo(QuantDemoArgs),
}

#[derive(Args)]
struct QuantDemoArgs {
    #[arg(long, default_value_t = 8)]
    bits: u32,
    /// symmetric or asymmetric.
    #[arg(long, default_value = "symmetric")]
    scheme: Scheme,
    /// per_tensor or per_channel.
    #[arg(long, default_value = "per_tensor")]
    granularity: Granularity,
    /// Tensor file: a `channels elements` header, then one value per line.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ListFormat::Text)]
    format: ListFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Profile(args) => profile(args),
        Command::Sweep(args) => sweep(args),
        Command::Presets {
            command: PresetsCommand::List { format },
        } => {
            let listing = PresetCatalog::builtin().listing();
            match format {
                ListFormat::Text => print!("{}", listing.to_text()),
                ListFormat::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&listing).expect("listing serializes")
                    )
                }
            }
            Ok(())
        }
        Command::Quant {
            command: QuantCommand::Demo(args),
        } => quant_demo(args),
    }
}

fn profile(args: ProfileArgs) -> Result<()> {
    let format: Format = args.output.format.parse()?;
    let catalog = PresetCatalog::builtin();
    let mut model = catalog.resolve_model(&args.model)?;
    if let Some(s) = args.seq_len {
        model = model.with_seq_len(s)?;
    }
    let device = catalog.resolve_device(&args.device)?;
    let precision = catalog.resolve_precision(&args.precision)?;
    let report = run_profile(&model, &device, &precision, args.output.mode)?;
    emit(&report.render(format), args.output.out.as_deref())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let format: Format = args.output.format.parse()?;
    let catalog = PresetCatalog::builtin();
    let or_all = |given: Vec<String>, all: Vec<String>| if given.is_empty() { all } else { given };
    let devices = or_all(
        args.devices,
        catalog.devices().map(|d| d.name().to_string()).collect(),
    );
    let models = or_all(
        args.models,
        catalog.models().map(|m| m.name().to_string()).collect(),
    );
    let precisions = or_all(
        args.precisions,
        catalog.precisions().map(|p| p.name().to_string()).collect(),
    );

    let result = run_sweep(
        catalog,
        &devices,
        &models,
        &precisions,
        args.output.mode,
        Concurrency::from_threads(args.threads),
    )?;
    if let Some(path) = &args.plot_data {
        write_file(path, &emit_plot_data(&result)?.to_json())?;
    }
    emit(&result.render(format), args.output.out.as_deref())
}

/// Built-in demo tensor: two channels with very different ranges.
fn demo_tensor() -> TensorView {
    TensorView::from_rows(&[
        vec![93.47, -41.2, 12.5, 0.0, -98.92, 7.31],
        vec![0.75, -0.31, 0.02, -0.9, 0.44, 0.0],
    ])
    .expect("demo tensor is well formed")
}

fn quant_demo(args: QuantDemoArgs) -> Result<()> {
    let tensor = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
            TensorView::from_text(&text)?
        }
        None => demo_tensor(),
    };
    let params = quant::calibrate(&tensor, args.scheme, args.granularity, args.bits)?;
    let codes = quant::quantize(&tensor, &params)?;
    let restored = quant::dequantize(&codes, &params)?;
    let stats = quant::quant_error_stats(&tensor, &restored)?;

    match args.format {
        ListFormat::Json => {
            let doc = json!({
                "params": params,
                "input": tensor,
                "codes": codes,
                "reconstructed": restored,
                "error": stats,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("demo serializes")
            );
        }
        ListFormat::Text => print!("{}", demo_text(&params, &tensor, &codes, &restored, stats)),
    }
    Ok(())
}

fn demo_text(
    params: &QuantParams,
    tensor: &TensorView,
    codes: &QuantizedTensor,
    restored: &TensorView,
    stats: quant::ErrorStats,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}-bit {}, codes in [{}, {}]",
        params.scheme(),
        params.bits(),
        params.granularity(),
        params.qmin(),
        params.qmax()
    );
    let per = tensor.elements_per_channel();
    for c in 0..tensor.channels() {
        let _ = writeln!(
            out,
            "channel {c}: scale {:.6e}, zero-point {:.6e}",
            params.scale(c),
            params.zero_point(c)
        );
        for (i, x) in tensor.row(c).iter().enumerate() {
            let idx = c * per + i;
            let _ = writeln!(
                out,
                "  {x:>14.6} -> {:>6} -> {:>14.6}",
                codes.values()[idx],
                restored.values()[idx]
            );
        }
    }
    let _ = writeln!(
        out,
        "mse {:.6e}, max |err| {:.6e}, mean |err| {:.6e}",
        stats.mse, stats.max_abs, stats.mean_abs
    );
    out
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let path = resolve_out(path);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(&path, text)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}
