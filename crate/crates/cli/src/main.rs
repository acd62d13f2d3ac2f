mod commands;
mod reproduce;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit code for a flexible verdict; 0 means rigid.
pub const EXIT_FLEXIBLE: u8 = 10;
/// Exit code for a check that ran but did not pass.
pub const EXIT_CHECK_FAILED: u8 = 3;
pub const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "flexcone", version, about = "Infinitesimal flexibility of polyhedra and hyperbolic cone-manifolds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Relative singular-value tolerance for kernel detection.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    pub tol: f64,
    /// Seed for randomized constructions.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON (the default).
    #[arg(long, global = true, conflicts_with = "text")]
    pub json: bool,
    /// Emit a human-readable summary.
    #[arg(long, global = true)]
    pub text: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

fn pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected LO,HI, got {s}"));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok([lo, hi])
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AmbientArg {
    Euclidean,
    Minkowski,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SchemaArg {
    Double,
    DoubleOfDouble,
    ThreeComp,
    FourComp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReproduceId {
    Thm1,
    #[value(name = "thm2-3comp")]
    Thm2ThreeComp,
    #[value(name = "thm2-4comp")]
    Thm2FourComp,
    Thm3,
    Thm4,
    AnglesIdeal,
    Tube,
    Cover,
}

#[derive(Args, Debug, Clone)]
pub struct SchemaInput {
    /// Schema file.
    #[arg(long, conflicts_with_all = ["builtin", "source"])]
    pub schema: Option<PathBuf>,
    /// Built-in gluing layout, applied to --source.
    #[arg(long, requires = "source")]
    pub builtin: Option<SchemaArg>,
    /// Polyhedron file for --builtin.
    #[arg(long)]
    pub source: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Flex analysis of a polyhedron file. Exit code 0 = rigid, 10 = flexible.
    Analyze {
        input: PathBuf,
        /// Defaults to euclidean for euclidean files and minkowski otherwise.
        #[arg(long)]
        ambient: Option<AmbientArg>,
    },
    /// Concurrency test of the black face planes of a colored octahedron. Exit code as analyze.
    Bl { input: PathBuf },
    /// Write an example polyhedron file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Truncate a polyhedron with hyperideal vertices.
    Truncate { input: PathBuf },
    /// Lengths and angles of a truncation (polyhedron or truncation file).
    Metrics { input: PathBuf },
    /// Smallest distance between old edges of a truncation.
    Tube { input: PathBuf },
    /// Assemble a cone-manifold from a gluing schema.
    Glue {
        #[command(flatten)]
        input: SchemaInput,
        /// Also write the schema file used.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// First-order cone-angle check of a signed flex on a gluing. Exit code 3 if it fails.
    Flexcheck {
        #[command(flatten)]
        input: SchemaInput,
        /// Flex field file; defaults to the first nontrivial flex of the first piece.
        #[arg(long)]
        flex: Option<PathBuf>,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-4, value_parser = positive)]
        step: f64,
    },
    /// Cyclic covers of the prism complement in which every meridian is nontrivial.
    Cover {
        #[arg(long, default_value_t = 7)]
        n: u64,
        /// Assignment to check, e.g. 1,1,2,1.
        #[arg(long, value_delimiter = ',')]
        assignment: Option<Vec<u64>>,
    },
    /// Cone angles of the branched cover of the double of a truncated twisted octahedron.
    Lift {
        #[arg(long, default_value_t = 50.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0.99)]
        shrink: f64,
        #[arg(long, default_value_t = 7)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "1,1,2,1")]
        assignment: Vec<u64>,
    },
    /// Move a hyperbolic polyhedron forwards and backwards along a flex.
    Deaverage {
        input: PathBuf,
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        t: f64,
        /// Flex field file; defaults to the first nontrivial flex.
        #[arg(long)]
        flex: Option<PathBuf>,
    },
    /// Search for two deformation families with equal cone angles.
    Collide {
        #[arg(long, default_value_t = 0.05, value_parser = positive)]
        eps: f64,
        #[arg(long, default_value = "0.8,1.2", value_parser = pair)]
        a_range: [f64; 2],
        #[arg(long, default_value = "0.8,1.2", value_parser = pair)]
        b_range: [f64; 2],
    },
    /// Run a full pipeline and report pass/fail for each check. Exit code 3 on failure.
    Reproduce { id: ReproduceId },
}

#[derive(Subcommand, Debug)]
pub enum GenerateKind {
    /// Twisted octahedron; twist pi/2 is flexible.
    Schonhardt {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
        twist: f64,
        /// Klein model, scaled so the circumradius is this value.
        #[arg(long)]
        klein_radius: Option<f64>,
    },
    /// Flexible twisted octahedron with vertices at Klein radius 1/shrink.
    Hyperideal {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.95)]
        shrink: f64,
        /// Use the twisted octahedron inscribed for this ideal ratio instead of a, b.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Ideal twisted octahedron in the half-space model.
    Ideal {
        #[arg(long, default_value_t = 1000.0)]
        ratio: f64,
    },
    /// Octahedron with four coplanar vertices.
    Gluck {
        #[arg(long, default_value_t = -0.7, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        d_offset: f64,
    },
    Antiprism {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Extra quarter turn of the top.
        #[arg(long)]
        twisted: bool,
    },
    Regular {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value = "euclidean")]
        space: String,
    },
    /// Random octahedron with concurrent black planes (uses --seed).
    Concurrent,
    /// Random octahedron (uses --seed).
    Random,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
