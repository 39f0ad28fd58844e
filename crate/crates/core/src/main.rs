use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hammerprobe::experiments::{
    cmd_aslr_demo, cmd_attack, cmd_classify, cmd_profile, cmd_report, ExperimentConfig, ExperimentError,
};

#[derive(Parser)]
#[command(version, about = "Rowhammer bit-probing simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Add ground-truth columns (physical addresses, true key bits).
    #[arg(long, global = true)]
    privileged_audit: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise and profile one module per hammering configuration.
    Profile,
    /// Count page classes in the profile stores of the output directory.
    Classify,
    /// Profile the attack module and recover the victim key.
    Attack,
    /// Stack-variable location inference under ASLR.
    AslrDemo {
        /// Variable sizes in bytes (multiples of 16).
        #[arg(long = "n", value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Verify checksums and summarise the output directory.
    Report,
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = &cli.out;
    match cli.command {
        Command::Profile => {
            for r in cmd_profile(&cfg, out, cli.privileged_audit)?.density {
                println!(
                    "({}, {}) {:.2} MiB: {} flippy pages, {:.2}/MiB (target {:.2})",
                    r.r, r.b, r.area_mib, r.flippy_pages, r.flippy_per_mib, r.target_per_mib
                );
            }
        }
        Command::Classify => {
            println!("config      reliable  unstable  unusable");
            for r in cmd_classify(out)? {
                println!("{:<10} {:>9} {:>9} {:>9}", r.config, r.reliable, r.unstable, r.unusable);
            }
        }
        Command::Attack => {
            let o = cmd_attack(&cfg, out, cli.privileged_audit)?;
            for (b, src) in o.recovered.bits.iter().zip(&o.recovered.sources) {
                let offline = src.map(|c| c.offline_label()).unwrap_or_else(|| "-".into());
                let value = b.value.map_or("?".to_string(), |v| (v as u8).to_string());
                let real = o.truth.map(|k| format!(" real {}", k.bit(b.bit) as u8)).unwrap_or_default();
                println!("bit {:3}  offline {:>9}  failures {:3}/{:3}  probed {value}{real}", b.bit, offline, b.failures, b.trials);
            }
            let s = &o.summary;
            println!("decoded {}/256, {} pages used, {:.1} bits/hour simulated", s.decoded, s.pages_used, s.bits_per_hour);
            if let Some(a) = s.accuracy {
                println!("accuracy {a:.4}");
            }
        }
        Command::AslrDemo { sizes } => {
            if !sizes.is_empty() {
                cfg.aslr.sizes = sizes;
            }
            for r in cmd_aslr_demo(&cfg, out)? {
                println!("n = {:3}: unique location in {:.3} of {} trials (analytic {:.3})", r.n, r.frequency, r.trials, r.analytic);
            }
        }
        Command::Report => print!("{}", cmd_report(out)?.text),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
