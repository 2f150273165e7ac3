//! Argument grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "coarse-lab", version, about = "Finite-sample coarse geometry toolkit")]
pub struct Cli {
    /// Seed for the ChaCha8 generator; required by commands that sample.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the command's artifact (a cover or space) to this file.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Include wall time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Summary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and inspect sample spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Cover metrics.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Cover-to-cover constructions.
    #[command(subcommand)]
    Transform(TransformCmd),
    /// Explicit cover constructions and certificates.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Operator supports over block decompositions.
    #[command(subcommand)]
    Support(SupportCmd),
    /// Compactification models and the corona cover.
    #[command(subcommand)]
    Corona(CoronaCmd),
    /// Registered multi-step checks.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpaceCmd {
    /// Size, kind and diameter of a space file.
    Info {
        #[arg(long)]
        space: PathBuf,
    },
    /// Cubical lattice `[lo, hi]^dim`.
    Grid {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long)]
        step: f64,
    },
    /// Lattice sample of the cone `P_n`.
    Pn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        extent: f64,
        #[arg(long)]
        step: f64,
    },
    /// Random tree on `nodes` vertices (needs `--seed`).
    Tree {
        #[arg(long)]
        nodes: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum CoverCmd {
    /// Multiplicity, mesh, Lebesgue number and optional appetite.
    Stats {
        #[arg(long)]
        cover: PathBuf,
        /// Entourage over the cover's space for the appetite test.
        #[arg(long)]
        entourage: Option<PathBuf>,
        #[arg(long)]
        max_multiplicity: Option<usize>,
        #[arg(long)]
        min_lebesgue: Option<f64>,
        #[arg(long)]
        max_mesh: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransformCmd {
    /// Multiplicity `n+1` cover with appetite `L^{n+1}` to `n+1` L-disjoint families.
    Colorize {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// `L²`-disjoint colored cover to a cover with appetite `L`.
    Expand {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
    },
    /// Union of colored covers of two subspaces.
    Merge {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// The ambient space of both subspaces.
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
    },
    /// Refinement of a product cover with `n+m+1` families.
    Product {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        ex: PathBuf,
        #[arg(long)]
        ey: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum WitnessCmd {
    /// Cube cover of a lattice in `R^n`.
    Cube {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        step: f64,
        /// Side of the sampled cube `[0, extent]^n`; defaults to `2a`.
        #[arg(long)]
        extent: Option<f64>,
    },
    /// Two-family cover of a tree.
    Tree {
        #[arg(long, conflicts_with = "nodes")]
        tree: Option<PathBuf>,
        /// Random tree size (needs `--seed`).
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// Cell cover of the ray lattice `[0, extent]^n` for a radius entourage.
    Ray {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        extent: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        radius: f64,
    },
    /// Lifted sphere cover of a sampled hyperbolic disk.
    Hyperbolic {
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        kappa: f64,
        #[arg(long, default_value_t = 0.2)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        l: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 30.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.5)]
        dr: f64,
        #[arg(long, default_value_t = 0.5)]
        ds: f64,
        #[arg(long, default_value_t = 4.0)]
        half_angle: f64,
        #[arg(long, default_value_t = 40)]
        cap: usize,
        /// Override the computed sphere spacing.
        #[arg(long)]
        rho: Option<f64>,
        /// Override the computed shift.
        #[arg(long)]
        shift: Option<usize>,
    },
    /// Fully labeled cell of a Sperner labeling.
    Sperner {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = LabelingArg::Nearest)]
        labeling: LabelingArg,
    },
    /// Point of multiplicity `n+1` in a cover of `P_n`.
    LowerBound {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Star cover of a simplicial complex.
    Star {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long)]
        stability: usize,
        #[arg(long, default_value_t = 12)]
        resolution: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelingArg {
    Nearest,
    Constant,
}

#[derive(Debug, Subcommand)]
pub enum SupportCmd {
    /// Support calculus inclusions for `S`, `T`, `u`, `v`.
    Verify {
        #[arg(long)]
        decomposition: PathBuf,
        /// `T`.
        #[arg(long)]
        op: PathBuf,
        /// `S` (defaults to `T`).
        #[arg(long)]
        op_s: Option<PathBuf>,
        /// `u` (defaults to the all-ones vector).
        #[arg(long)]
        u: Option<PathBuf>,
        /// `v` (defaults to the first basis vector).
        #[arg(long)]
        v: Option<PathBuf>,
        #[arg(long, default_value_t = coarse_core::support::ZERO_TOL)]
        tol: f64,
    },
    /// Whether `Supp(T)` lies in an entourage over the block quotient.
    Controlled {
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
        #[arg(long, default_value_t = coarse_core::support::ZERO_TOL)]
        tol: f64,
    },
    /// `φTφ*` for a block-respecting partial isometry.
    Induce {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Block map as comma-separated target block indices.
        #[arg(long, value_delimiter = ',')]
        map: Vec<usize>,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        op: PathBuf,
        #[arg(long, default_value_t = coarse_core::support::ZERO_TOL)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CoronaCmd {
    /// `f` and `g` tables with closeness bounds.
    Equiv {
        #[arg(long)]
        model: PathBuf,
    },
    /// ρ-sequence of an interior entourage.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        entourage: PathBuf,
        /// Decay constant `c` in `ρ_i ≤ c/i`; defaults to the ambient diameter.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Cover of `νX × {0..depth}` from a cover schedule.
    Dimcover {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineName {
    AsdimUpper,
    AsdimLower,
    HyperbolicFull,
    CoronaFull,
    SupportSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridName {
    Grid1d,
    Grid2d,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(value_enum)]
    pub name: PipelineName,
    /// asdim-upper: lattice to cover.
    #[arg(long, value_enum)]
    pub space: Option<GridName>,
    /// asdim-upper, hyperbolic-full: target Lebesgue scale.
    #[arg(long)]
    pub l: Option<f64>,
    /// asdim-upper, asdim-lower: sample extent.
    #[arg(long)]
    pub extent: Option<f64>,
    /// asdim-upper, asdim-lower: lattice step.
    #[arg(long)]
    pub step: Option<f64>,
    /// asdim-lower: dimension of `P_n`.
    #[arg(long)]
    pub n: Option<usize>,
    /// hyperbolic-full: curvature.
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// corona-full: window depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// support-suite: number of random triples.
    #[arg(long)]
    pub trials: Option<usize>,
}
