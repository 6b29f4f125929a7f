use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Everything a run depends on. A report embeds this verbatim, and rerunning
/// with the same values reproduces the report byte for byte.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(
    name = "translike",
    version,
    about = "Checks translation-like actions on hyperbolic point clouds"
)]
pub struct RunConfig {
    /// Master seed; every random stream is derived from it by name.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout. CSV artifacts are written
    /// next to it as `<stem>.<artifact>.csv`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Full check of the dyadic lattice window: separation, displacement,
    /// freeness, growth, covering and orbit structure.
    VerifyLattice(VerifyLatticeArgs),
    /// Ball-growth profile and its exponential rate.
    ProfileGrowth(ProfileGrowthArgs),
    /// Seeded covering-radius estimate.
    Covering(CoveringArgs),
    /// Bottleneck bijection between two clouds.
    Match(MatchArgs),
    /// Transport the lattice action to another cloud and certify it.
    Conjugate(ConjugateArgs),
    /// Orbit of a Kleinian group cut by a horospherical band, compared with grids.
    Horoband(HorobandArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyLattice(_) => "verify-lattice",
            Command::ProfileGrowth(_) => "profile-growth",
            Command::Covering(_) => "covering",
            Command::Match(_) => "match",
            Command::Conjugate(_) => "conjugate",
            Command::Horoband(_) => "horoband",
        }
    }
}

/// Test hooks that break an otherwise valid run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Replace the first generator by the identity map.
    NonFree,
    /// Send two source points to the same target point.
    NonInjectivePairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// The window shrunk by `--margin` grid steps and levels.
    Interior,
    /// `|x|, |y| <= box-half-width`, `1/box-height <= z <= box-height`.
    Box,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WindowArgs {
    /// Grid half-width A: `|a|, |b| <= A`.
    #[arg(long = "a", default_value_t = 16)]
    pub a: i64,
    /// Level half-range C: `|c| <= C`.
    #[arg(long = "c", default_value_t = 8)]
    pub c: i64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RegionArgs {
    #[arg(long, value_enum, default_value_t = Region::Interior)]
    pub region: Region,
    #[arg(long, default_value_t = 2)]
    pub margin: i64,
    #[arg(long, default_value_t = 8.0)]
    pub box_half_width: f64,
    #[arg(long, default_value_t = 8.0)]
    pub box_height: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyLatticeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Word range: all (m, n) with |m|, |n| <= K.
    #[arg(long = "k", default_value_t = 5)]
    pub k: i64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
    pub radii: Vec<f64>,
    /// Ball centres to examine; 0 means every point.
    #[arg(long, default_value_t = 0)]
    pub centers: usize,
    #[arg(long, default_value_t = 2.0)]
    pub slope_from: f64,
    #[arg(long, default_value_t = 6.0)]
    pub slope_to: f64,
    #[arg(long, default_value_t = 0.8)]
    pub slope_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub slope_max: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub region: RegionArgs,
    #[arg(long, default_value_t = 0.75)]
    pub covering_bound: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub min_distance_tolerance: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub displacement_tolerance: f64,
    #[arg(long, value_enum, hide = true)]
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProfileGrowthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Cloud to profile instead of the lattice window (see `match --left`).
    #[arg(long)]
    pub cloud: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub centers: usize,
    #[arg(long, default_value_t = 2.0)]
    pub slope_from: f64,
    #[arg(long, default_value_t = 6.0)]
    pub slope_to: f64,
    #[arg(long)]
    pub slope_min: Option<f64>,
    #[arg(long)]
    pub slope_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CoveringArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub cloud: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub region: RegionArgs,
    /// Fail unless the estimated radius is at most this.
    #[arg(long)]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MatchArgs {
    /// Cloud source: a CSV path with x,y,z columns, `lattice:A,C`,
    /// `perturbed:A,C,EPS` or `random:N`.
    #[arg(long)]
    pub left: String,
    #[arg(long)]
    pub right: String,
    /// Trim the larger cloud to the size of the smaller one.
    #[arg(long)]
    pub trim: bool,
    /// Cross-check R* by enumerating all bijections (at most 9 points).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConjugateArgs {
    #[arg(long = "a", default_value_t = 8)]
    pub a: i64,
    #[arg(long = "c", default_value_t = 4)]
    pub c: i64,
    #[arg(long = "k", default_value_t = 5)]
    pub k: i64,
    /// Target cloud source; defaults to `perturbed:A,C,0.1`.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum, hide = true)]
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HorobandArgs {
    /// Generator file: one matrix per line, `re(a),im(a),...,re(d),im(d)`.
    #[arg(long)]
    pub generators: PathBuf,
    #[arg(long, default_value_t = translike_core::hyp3::DET_TOLERANCE)]
    pub det_tolerance: f64,
    /// Maximum word length L.
    #[arg(long, default_value_t = 8)]
    pub word_length: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0,1")]
    pub basepoint: Vec<f64>,
    #[arg(long, default_value_t = translike_core::orbitnet::DEFAULT_MERGE_TOLERANCE)]
    pub merge_tolerance: f64,
    #[arg(long, default_value_t = translike_core::orbitnet::DEFAULT_ORBIT_BUDGET)]
    pub budget: usize,
    /// Horosphere height h0.
    #[arg(long, default_value_t = 1.0)]
    pub height: f64,
    /// Band half-width: points with |ln(z / h0)| <= epsilon.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Proximity graph edges join band points at most this far apart.
    #[arg(long, default_value_t = 1.5)]
    pub edge_threshold: f64,
    /// Grid sides to compare; default odd sides from 3 up to what fits.
    #[arg(long, value_delimiter = ',')]
    pub sides: Vec<usize>,
    /// Also compare using the ambient metric restricted to the band.
    #[arg(long)]
    pub ambient: bool,
}
