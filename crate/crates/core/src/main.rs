use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tfstretch::eval::{
    perfect_stretch, run_corpus, synth_melody, CorpusConfig, MelodySpec, RateChoice, MAX_EVAL_RATE, MIN_EVAL_RATE,
};
use tfstretch::nspv::{nspv_stretch, write_peaks_csv, NspvConfig};
use tfstretch::onset::{detect_onsets, OnsetConfig};
use tfstretch::pv::{pv_stretch, PvConfig};
use tfstretch::spectrogram::spectrogram;
use tfstretch::{read_wav, write_wav, Error, Signal};

#[derive(Parser)]
#[command(name = "tfstretch", version, about = "Time stretching with classical and scale-frame phase vocoders")]
struct Cli {
    /// Progress and parameter choices on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stretch a WAV file in time without changing its pitch.
    Stretch(StretchArgs),
    /// Detect onsets and list them as CSV.
    Onsets(OnsetArgs),
    /// Export a dB spectrogram as CSV.
    Spectrogram(SpectrogramArgs),
    /// Render a seeded synthetic melody, optionally perfectly stretched.
    Synth(SynthArgs),
    /// Score both vocoders on a corpus of synthetic melodies.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Pv,
    Nspv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OnsetFlags {
    /// Flux frames on each side of a candidate used for the local mean.
    #[arg(long)]
    sf_neighborhood: Option<usize>,
    /// A flux peak must exceed this multiple of its local mean.
    #[arg(long)]
    sf_bias: Option<f64>,
}

impl OnsetFlags {
    fn config(&self, sample_rate: u32) -> OnsetConfig {
        let mut cfg = OnsetConfig::for_sample_rate(sample_rate);
        if let Some(n) = self.sf_neighborhood {
            cfg.neighborhood = n;
        }
        if let Some(b) = self.sf_bias {
            cfg.bias = b;
        }
        cfg
    }
}

#[derive(Args)]
struct StretchArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stretch factor in (0, 4].
    #[arg(long, value_parser = parse_rate)]
    rate: f64,
    #[arg(long, value_enum, default_value = "nspv")]
    algo: Algo,
    /// Accepted for symmetry with the other commands; stretching is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pv_hop: Option<usize>,
    #[arg(long)]
    pv_channels: Option<usize>,
    #[arg(long)]
    min_win: Option<usize>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    min_channels: Option<usize>,
    /// Transient reinitialization tolerance in dB.
    #[arg(long, default_value_t = 2.0)]
    epsilon_db: f64,
    #[command(flatten)]
    onset: OnsetFlags,
    /// Write the stretch plan as JSON.
    #[arg(long)]
    dump_plan: Option<PathBuf>,
    /// Write detected peaks and regions as CSV.
    #[arg(long)]
    dump_peaks: Option<PathBuf>,
    /// Write analysis coefficients, as JSON if the name ends in .json, CSV otherwise.
    #[arg(long)]
    dump_coefficients: Option<PathBuf>,
}

#[derive(Args)]
struct OnsetArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    onset: OnsetFlags,
}

#[derive(Args)]
struct SpectrogramArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    hop: usize,
    #[arg(long, default_value_t = 2048)]
    channels: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Render the melody stretched by this factor, in [0.5, 3.75].
    #[arg(long, value_parser = parse_melody_rate)]
    rate: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the melody description as JSON.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated rates cycled over the corpus instead of random ones.
    #[arg(long, value_delimiter = ',', value_parser = parse_rate)]
    rates: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if r.is_finite() && r > 0.0 && r <= 4.0 {
        Ok(r)
    } else {
        Err(format!("rate {r} is outside (0, 4]"))
    }
}

fn parse_melody_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (MIN_EVAL_RATE..=MAX_EVAL_RATE).contains(&r) {
        Ok(r)
    } else {
        Err(format!("rate {r} is outside [{MIN_EVAL_RATE}, {MAX_EVAL_RATE}]"))
    }
}

fn create(path: &Path) -> tfstretch::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `--out` if given, stdout otherwise.
fn sink(out: &Option<PathBuf>) -> tfstretch::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn stretch(args: &StretchArgs, verbose: bool) -> tfstretch::Result<()> {
    let signal = read_wav(&args.input)?;
    let sr = signal.sample_rate();
    let (out, summary) = match args.algo {
        Algo::Pv => {
            let mut cfg = if sr >= 32000 { PvConfig::new(512, 2048) } else { PvConfig::default() };
            if let Some(m) = args.pv_channels {
                cfg = PvConfig::new(cfg.hop, m);
            }
            if let Some(a) = args.pv_hop {
                cfg.hop = a;
            }
            if verbose {
                eprintln!("pv: hop {} channels {}", cfg.hop, cfg.channels);
            }
            let out = pv_stretch(signal.samples(), args.rate, &cfg)?;
            let summary = json!({
                "algo": "pv",
                "hop": cfg.hop,
                "channels": cfg.channels,
                "synthesis_hop": out.synthesis_hop,
                "realized_rate": out.realized_rate,
            });
            (out.samples, summary)
        }
        Algo::Nspv => {
            let mut cfg = NspvConfig::for_sample_rate(sr);
            cfg.onset = args.onset.config(sr);
            cfg.eps_db = args.epsilon_db;
            if let Some(w) = args.min_win {
                cfg.scale.min_win = w;
            }
            if let Some(k) = args.scales {
                cfg.scale.num_scales = k;
            }
            if let Some(c) = args.min_channels {
                cfg.scale.min_channels = c;
            }
            if verbose {
                eprintln!("nspv: {:?}", cfg);
            }
            let out = nspv_stretch(signal.samples(), args.rate, &cfg)?;
            if let Some(p) = &args.dump_plan {
                out.plan.write_json(create(p)?)?;
            }
            if let Some(p) = &args.dump_peaks {
                write_peaks_csv(&out.peaks, create(p)?)?;
            }
            if let Some(p) = &args.dump_coefficients {
                if p.extension().is_some_and(|e| e == "json") {
                    out.coefficients.write_json(create(p)?)?;
                } else {
                    out.coefficients.write_csv(create(p)?)?;
                }
            }
            let summary = json!({
                "algo": "nspv",
                "onsets": out.onsets.onsets,
                "frames": out.plan.frames(),
                "compensated_rate": out.plan.compensated_rate,
                "analysis_redundancy": out.analysis_redundancy,
            });
            (out.samples, summary)
        }
    };
    let output = Signal::new(out, sr)?;
    match &args.out {
        Some(p) => write_wav(p, &output)?,
        None => {
            let mut summary = summary;
            summary["rate"] = json!(args.rate);
            summary["input_len"] = json!(signal.len());
            summary["output_len"] = json!(output.len());
            println!("{summary}");
        }
    }
    if verbose {
        eprintln!("{} -> {} samples", signal.len(), output.len());
    }
    Ok(())
}

fn onsets(args: &OnsetArgs) -> tfstretch::Result<()> {
    let signal = read_wav(&args.input)?;
    let cfg = args.onset.config(signal.sample_rate());
    let list = detect_onsets(signal.samples(), &cfg)?;
    let mut w = sink(&args.out)?;
    writeln!(w, "onset_sample,onset_seconds,sf_value")?;
    for (i, &o) in list.onsets.iter().enumerate() {
        let sf = list.sf_value(i).unwrap_or(f64::NAN);
        writeln!(w, "{o},{},{sf}", o as f64 / signal.sample_rate() as f64)?;
    }
    w.flush()?;
    Ok(())
}

fn spectrogram_cmd(args: &SpectrogramArgs) -> tfstretch::Result<()> {
    let signal = read_wav(&args.input)?;
    let s = spectrogram(&signal, args.hop, args.channels)?;
    let mut w = sink(&args.out)?;
    s.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn synth(args: &SynthArgs, verbose: bool) -> tfstretch::Result<()> {
    let spec = MelodySpec::random(args.seed);
    let signal = match args.rate {
        Some(r) => perfect_stretch(&spec, r)?,
        None => synth_melody(&spec)?,
    };
    if let Some(p) = &args.spec_out {
        serde_json::to_writer_pretty(create(p)?, &spec)?;
    }
    match &args.out {
        Some(p) => write_wav(p, &signal)?,
        None => println!("{}", json!({ "seed": args.seed, "samples": signal.len(), "spec": spec })),
    }
    if verbose {
        eprintln!("seed {}: {} notes, {} samples", args.seed, spec.notes.len(), signal.len());
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs, verbose: bool) -> tfstretch::Result<()> {
    let rates = if args.rates.is_empty() { RateChoice::Random } else { RateChoice::List(args.rates.clone()) };
    let cfg = CorpusConfig { count: args.count, seed: args.seed, rates, ..CorpusConfig::default() };
    if verbose {
        eprintln!("evaluating {} melodies from seed {}", args.count, args.seed);
    }
    let report = run_corpus(&cfg)?;
    let mut w = sink(&args.out)?;
    match args.format {
        Format::Json => {
            report.write_json(&mut w)?;
            writeln!(w)?;
        }
        Format::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    if verbose {
        eprintln!("averages: {:?}", report.averages);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Stretch(a) => stretch(a, cli.verbose),
        Command::Onsets(a) => onsets(a),
        Command::Spectrogram(a) => spectrogram_cmd(a),
        Command::Synth(a) => synth(a, cli.verbose),
        Command::Evaluate(a) => evaluate(a, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(2)
        }
    }
}

fn report_error(e: &Error) {
    eprintln!("{}: {e}", e.name());
}
