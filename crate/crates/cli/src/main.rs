//! Command-line front end: runs presets and writes result tables.

use anyhow::{bail, Context, Result};
use clap::Parser;
use sqclock_core::io::{
    run_preset, ConfigFile, OutputFormat, Report, RunManifest, RunOptions, SCHEMA_VERSION,
    TOOL_VERSION,
};
use sqclock_core::sequence::{Preset, Simulator};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

fn version() -> &'static str {
    static VERSION: OnceLock<String> = OnceLock::new();
    VERSION.get_or_init(|| format!("{TOOL_VERSION} (schema {SCHEMA_VERSION})"))
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Squeezed-state optical clock simulator.
#[derive(Debug, Parser)]
#[command(name = "sqclock", version = version(), about)]
struct Cli {
    /// Preset or report to run (see --list-presets).
    #[arg(long, value_name = "NAME", required_unless_present_any = ["list_presets", "from_manifest"])]
    preset: Option<String>,

    /// TOML file overriding the preset defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed of every random stream.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Trials per measurement point; cycles for clock presets.
    #[arg(long, value_name = "N", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    trials: u64,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "sqclock-out")]
    out: PathBuf,

    /// Worker threads. Changes speed only, never results.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    /// Table format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// List presets and reports, then exit.
    #[arg(long, conflicts_with_all = ["preset", "config", "seed", "from_manifest", "dump_amplitudes"])]
    list_presets: bool,

    /// Re-run the preset, settings, seed and trial count recorded in a manifest.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["preset", "config", "seed", "trials", "format"])]
    from_manifest: Option<PathBuf>,

    /// Also write the prepared-state amplitudes as CSV (m, re, im).
    #[arg(long, value_name = "PATH")]
    dump_amplitudes: Option<PathBuf>,
}

fn list_presets() {
    println!("presets:");
    for p in Preset::ALL {
        println!("  {:<16}{}", p.name(), p.description());
    }
    println!("reports:");
    let table = Report::SqlTable;
    println!("  {:<16}{}", table.name(), table.description());
}

fn run(cli: Cli) -> Result<()> {
    let (report, settings, trials, format) = match &cli.from_manifest {
        Some(path) => {
            let m = RunManifest::load(path)
                .with_context(|| format!("reading manifest {}", path.display()))?;
            let report: Report = m.preset.parse()?;
            (report, m.settings, m.trials, m.format)
        }
        None => {
            let name = cli.preset.as_deref().context("--preset is required")?;
            let report: Report = name.parse()?;
            let mut settings = report.settings();
            if let Some(path) = &cli.config {
                settings = ConfigFile::load(path)?.apply(&settings)?;
            }
            if let Some(seed) = cli.seed {
                settings.seed = seed;
            }
            let format = match cli.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            (report, settings, cli.trials as usize, format)
        }
    };

    if let Some(path) = &cli.dump_amplitudes {
        let Report::Preset(preset) = report else {
            bail!("--dump-amplitudes needs a simulated preset, not {report}");
        };
        let (cfg, seq) = preset.build(&settings)?;
        let sim = Simulator::new(&cfg, &seq)?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        sim.prepared_state()
            .write_amplitudes_csv(BufWriter::new(file))?;
    }

    let opts = RunOptions {
        trials,
        format,
        out_dir: cli.out.clone(),
    };
    let manifest = run_preset(report, &settings, &opts)
        .with_context(|| format!("running {report} into {}", cli.out.display()))?;
    for name in manifest
        .outputs
        .iter()
        .map(String::as_str)
        .chain(["manifest.json"])
    {
        println!("wrote {}", cli.out.join(name).display());
    }
    println!(
        "{} finished in {:.2} s",
        manifest.preset, manifest.runtime_s
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        list_presets();
        return ExitCode::SUCCESS;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n as usize);
    }
    let result = pool
        .build()
        .context("starting worker threads")
        .and_then(|pool| pool.install(|| run(cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
