use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use selinf::{run, Format, RunConfig};
use selinf_core::{TestKind, EPS_COSPH, EPS_LP, EPS_PROB, EPS_TEST};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

/// Check whether a system of output distributions is consistent with
/// selective influences.
///
/// Exit status: 0 if no selected test rules selective influences out,
/// 1 if one does, 2 on usage or input errors.
#[derive(Debug, Parser)]
#[command(name = "selinf", version)]
struct Args {
    /// System description (JSON).
    input: PathBuf,

    /// Comma-separated tests: marginal, lp, fine, distance, cosphericity, battery, contrast.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,

    /// Distance metric, `power:p=<x>` or `class:<A1 classes>;<A2 classes>`
    /// with classes split by `|` and labels by `,`. Repeatable.
    #[arg(long = "metric")]
    metrics: Vec<String>,

    /// JSON file of input-value-specific transforms added to the battery.
    #[arg(long)]
    transforms: Option<PathBuf>,

    #[arg(long, default_value_t = EPS_LP)]
    eps_lp: f64,

    #[arg(long, default_value_t = EPS_TEST)]
    eps_test: f64,

    #[arg(long, default_value_t = EPS_PROB)]
    eps_prob: f64,

    /// Tolerance for the cosphericity inequality.
    #[arg(long, default_value_t = EPS_COSPH)]
    eps_cosph: f64,

    /// Largest output subset compared by the marginal test (default n-1).
    #[arg(long)]
    max_subset: Option<usize>,

    /// Longest chain for designs that are not fully crossed.
    #[arg(long, default_value_t = 6)]
    max_length: usize,

    /// Number of random groupings and of random monotone relabelings in the battery.
    #[arg(long, default_value_t = 10)]
    battery_size: usize,

    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,

    /// Seed for generated battery transforms.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the feasibility matrix as a labelled 0/1 grid to this path.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut tests = Vec::with_capacity(args.tests.len());
    for name in &args.tests {
        match TestKind::from_name(name.trim()) {
            Some(t) => tests.push(t),
            None => {
                eprintln!("error: unknown test '{}'", name);
                return ExitCode::from(2);
            }
        }
    }
    let config = RunConfig {
        input: args.input,
        tests,
        metrics: args.metrics,
        transforms: args.transforms,
        eps_prob: args.eps_prob,
        eps_test: args.eps_test,
        eps_lp: args.eps_lp,
        eps_cosph: args.eps_cosph,
        max_subset: args.max_subset,
        max_length: args.max_length,
        battery_size: args.battery_size,
        format: match args.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        },
        seed: args.seed,
        dump_matrix: args.dump_matrix,
    };
    let outcome = run(&config);
    if outcome.code == 2 {
        eprint!("{}", outcome.output);
    } else {
        print!("{}", outcome.output);
    }
    ExitCode::from(outcome.code as u8)
}
