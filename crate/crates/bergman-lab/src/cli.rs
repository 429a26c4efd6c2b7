//! Command-line surface.
//!
//! All value-bearing flags are collected as raw strings and validated by
//! the config resolver, so a bad value produces the same "invalid value
//! for `key`" usage error whether it came from the command line or from a
//! `--config` file, and file entries use exactly the long flag names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

const AFTER_HELP: &str = "\
Exit codes:
  0  run completed and every threshold held
  1  usage or configuration error (the message names the offending field)
  2  run completed but a threshold failed (residual too large, zero found,
     convergence target missed)

Parameter layering: flags override `--config` file entries, which override
defaults.  A config file holds flat `key = value` lines (keys = long flag
names) or a summary document from an earlier run, which replays it.

Outputs: <name>.csv and <name>.summary.json in --outdir (default:
$BERGMAN_LAB_OUTDIR, else the working directory); the summary is also
printed to stdout.  Output bytes are independent of --threads.";

/// Numerical laboratory for Bergman kernels of the domains
/// `E(m) = { z : |z_1|^(2 m_1) + ... + |z_n|^(2 m_n) < 1 }`.
#[derive(Parser, Debug)]
#[command(name = "bergman-lab", version, after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Worker threads for parallel sections (0 = one per logical CPU).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Parameter file: flat `key = value` lines, or a summary document
    /// from an earlier run to replay it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Basename for the output files (default: the subcommand name).
    #[arg(long, global = true, value_name = "NAME")]
    pub out: Option<String>,

    /// Output directory (default: $BERGMAN_LAB_OUTDIR, else `.`).
    #[arg(long, global = true, value_name = "DIR")]
    pub outdir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the monomial moments of a domain up to a degree cap.
    Moments(MomentsArgs),
    /// Evaluate the truncated kernel series at one point pair, with the
    /// closed form for comparison where one exists.
    KernelEval(KernelEvalArgs),
    /// Check the biholomorphic transformation law of the kernel on
    /// sampled point pairs.
    CheckTransform(CheckTransformArgs),
    /// Check the proper-covering transformation law along the power map
    /// `z -> (z_k^j)` at one point pair.
    CheckCovering(CheckCoveringArgs),
    /// Bergman-project a test function by quadrature and report its
    /// coefficient table and decay diagnostics.
    Project(ProjectArgs),
    /// Multistart search for zeros of the kernel on the diagonal-modulus
    /// slice; exits 2 when a zero is certified.
    ZeroSearch(ZeroSearchArgs),
    /// Exhaustion-convergence table: kernels of `E(j m)` against the
    /// bidisc kernel as `j` grows.
    Ramadanov(RamadanovArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::KernelEval(_) => "kernel-eval",
            Command::CheckTransform(_) => "check-transform",
            Command::CheckCovering(_) => "check-covering",
            Command::Project(_) => "project",
            Command::ZeroSearch(_) => "zero-search",
            Command::Ramadanov(_) => "ramadanov",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct MomentsArgs {
    /// Domain exponents, comma separated (e.g. `1,2`).
    #[arg(long)]
    pub m: Option<String>,
    /// Largest total degree tabulated [default: 8].
    #[arg(long)]
    pub cap: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct KernelEvalArgs {
    /// Domain exponents, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Series truncation degree [default: 60].
    #[arg(long)]
    pub cap: Option<String>,
    /// First point, comma-separated complex coordinates (e.g.
    /// `0.3+0.1i,0.2-0.4i`).
    #[arg(long)]
    pub z: Option<String>,
    /// Second point [default: same as --z].
    #[arg(long)]
    pub w: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CheckTransformArgs {
    /// Domain exponents, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Series truncation degree [default: 40].
    #[arg(long)]
    pub cap: Option<String>,
    /// Map kind: rotation, permutation, ball-automorphism or identity
    /// [default: rotation].
    #[arg(long)]
    pub map: Option<String>,
    /// Rotation angles in radians, comma separated (rotation map).
    #[arg(long)]
    pub angles: Option<String>,
    /// Coordinate permutation as 0-based positions (permutation map).
    #[arg(long)]
    pub perm: Option<String>,
    /// Automorphism center, complex coordinates (ball-automorphism map).
    #[arg(long)]
    pub center: Option<String>,
    /// Number of sampled point pairs [default: 50].
    #[arg(long)]
    pub pairs: Option<String>,
    /// Sampling seed [default: 0].
    #[arg(long)]
    pub seed: Option<String>,
    /// Largest boundary defect of sampled points [default: 0.5].
    #[arg(long)]
    pub max_defect: Option<String>,
    /// Use closed-form kernels where available instead of series
    /// [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub use_closed_forms: Option<String>,
    /// Largest acceptable relative residual [default: 1e-10].
    #[arg(long)]
    pub threshold: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CheckCoveringArgs {
    /// Target-domain exponents, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Covering exponent of `z -> (z_k^j)` [default: 2].
    #[arg(long)]
    pub j: Option<String>,
    /// Source point, complex coordinates [default: sampled from --seed].
    #[arg(long)]
    pub z: Option<String>,
    /// Target point, complex coordinates [default: sampled from --seed].
    #[arg(long)]
    pub w: Option<String>,
    /// Source-side series cap [default: 60].
    #[arg(long)]
    pub cap_source: Option<String>,
    /// Target-side series cap [default: 60].
    #[arg(long)]
    pub cap_target: Option<String>,
    /// Sampling seed used when --z/--w are absent [default: 0].
    #[arg(long)]
    pub seed: Option<String>,
    /// Use closed-form kernels where available [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub use_closed_forms: Option<String>,
    /// Largest acceptable relative residual [default: 1e-6].
    #[arg(long)]
    pub threshold: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ProjectArgs {
    /// Domain exponents, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Integrand: `constant:C`, `monomial:A1,..,AN`,
    /// `conj-monomial:A1,..,AN` or `bump:SUPPORT` [default: constant:1].
    #[arg(long)]
    pub g: Option<String>,
    /// Radial quadrature nodes per coordinate [default: 48].
    #[arg(long)]
    pub radial: Option<String>,
    /// Angular quadrature nodes per coordinate [default: 64].
    #[arg(long)]
    pub angular: Option<String>,
    /// Projection degree cap (must be below --angular) [default: 12].
    #[arg(long)]
    pub cap: Option<String>,
    /// Also measure the coefficient change under grid doubling
    /// [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub refine: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ZeroSearchArgs {
    /// Domain exponents, comma separated.
    #[arg(long)]
    pub m: Option<String>,
    /// Series truncation degree [default: 60].
    #[arg(long)]
    pub cap: Option<String>,
    /// Number of independent local searches [default: 64].
    #[arg(long)]
    pub starts: Option<String>,
    /// Seed of the start-point generator [default: 0].
    #[arg(long)]
    pub seed: Option<String>,
    /// Iteration budget per local search [default: 400].
    #[arg(long)]
    pub max_iters: Option<String>,
    /// Objective-spread stopping tolerance, 0 disables [default: 0].
    #[arg(long)]
    pub f_tol: Option<String>,
    /// Simplex-diameter stopping tolerance [default: 1e-10].
    #[arg(long)]
    pub x_tol: Option<String>,
    /// Shrink margin: search stays in `sum rho^m <= 1 - margin`
    /// [default: 0.05].
    #[arg(long)]
    pub margin: Option<String>,
    /// Zero threshold as a fraction of `|F(0)|` [default: 1e-10].
    #[arg(long)]
    pub zero_threshold_rel: Option<String>,
    /// Also compute a uniform grid lower bound at this resolution
    /// (cells per axis).
    #[arg(long, value_name = "RESOLUTION")]
    pub grid_certificate: Option<String>,
    /// Search the doctored disc validation series (known zero) instead of
    /// a kernel; requires `--m 1` [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub validation: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RamadanovArgs {
    /// Base exponents of the family `E(j m)`, two entries [default: 1,1].
    #[arg(long)]
    pub m: Option<String>,
    /// Levels `j`, strictly increasing [default: 1,2,4,8,16].
    #[arg(long)]
    pub j: Option<String>,
    /// Test points: complex coordinates, two per point
    /// [default: 0.5+0i,0.5+0i].
    #[arg(long)]
    pub points: Option<String>,
    /// Series truncation degree per level [default: 80].
    #[arg(long)]
    pub cap: Option<String>,
    /// Relative distance to the limit required at the last level
    /// [default: 0.02].
    #[arg(long)]
    pub final_tol_rel: Option<String>,
}
