mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mkt", version, about = "Minkowski distance, cut locus and transport density on planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Scene description (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write SVG renderings (default).
    #[arg(long, overrides_with = "no_svg")]
    pub svg: bool,
    #[arg(long = "no-svg", overrides_with = "svg")]
    pub no_svg: bool,
}

impl Common {
    pub fn svg_enabled(&self) -> bool {
        !self.no_svg
    }
}

#[derive(Args, Clone, Copy)]
pub struct GridArgs {
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Distance to the boundary on the grid: distance.csv (x, y, d, singular).
    Distance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Cut time and cut point per boundary angle: cutlocus.csv.
    Cutlocus {
        #[command(flatten)]
        common: Common,
        /// Number of boundary angles (defaults to `n_theta` from the config).
        #[arg(long)]
        n_theta: Option<usize>,
    },
    /// Solution pair (d, v) on the grid: field.csv, field.json, manifest.json.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Verification battery on (d, perturb_v * v): report.json. Exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        perturb_v: f64,
    },
    /// Gauge constants of the configured gauge: constants.json.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
}

pub enum Failure {
    Verification,
    Config(String),
    Numeric(String),
}

impl From<mkt_core::Error> for Failure {
    fn from(e: mkt_core::Error) -> Self {
        use mkt_core::Error as E;
        match e {
            E::Config(_) | E::InvalidCurve(_) | E::InvalidGauge(_) | E::Precondition(_) => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Distance { common, grid } => commands::distance(&common, grid),
        Command::Cutlocus { common, n_theta } => commands::cutlocus(&common, n_theta),
        Command::Solve { common, grid } => commands::solve(&common, grid),
        Command::Verify { common, perturb_v } => commands::verify(&common, perturb_v),
        Command::Constants { common, samples } => commands::constants(&common, samples),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mkt_core::Error;

    #[test]
    fn errors_map_to_exit_classes() {
        assert!(matches!(Failure::from(Error::Config("x".into())), Failure::Config(_)));
        assert!(matches!(Failure::from(Error::InvalidCurve("x".into())), Failure::Config(_)));
        assert!(matches!(Failure::from(Error::Geometry("x".into())), Failure::Numeric(_)));
        let numeric = Error::Numeric {
            message: "x".into(),
            estimate: 1.0,
        };
        assert!(matches!(Failure::from(numeric), Failure::Numeric(_)));
    }
}
