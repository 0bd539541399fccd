use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use splatcut::graph::CutParams;
use splatcut::harness::{Axis, SyntheticSpec};
use splatcut::lift::{LiftMode, LiftParams, TAU_FRONT_FACING};
use splatcut::pipeline::SegmentParams;
use splatcut::Side;

#[derive(Debug, Parser)]
#[command(name = "splatcut", version, about = "Graph-cut segmentation of Gaussian splatting scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lift masks or scribbles onto the scene and cut it into fg/bg.
    Segment(SegmentArgs),
    /// Render one view, optionally restricted to one side of a labeling.
    Render(RenderArgs),
    /// Compare predicted masks or images against ground truth.
    Eval(EvalArgs),
    /// Run a synthetic parameter sweep and write it as CSV.
    Bench(BenchArgs),
    /// Serve the HTTP API for interactive segmentation.
    Serve(ServeArgs),
}

/// Lift and cut parameters shared by `segment`, `bench` and `serve`.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Coarse-splatting threshold (0.9 front-facing, 0.3 inward scenes).
    #[arg(long, default_value_t = TAU_FRONT_FACING)]
    pub tau: f64,
    /// Neighbors per Gaussian in the kNN graph.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub gamma_pos: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_col: f64,
    /// Pairwise term weight.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Color weight inside the pairwise term.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_n: f64,
    /// Cluster-similarity weight inside the unary term.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_u: f64,
    #[arg(long, default_value_t = 1)]
    pub clusters_src: usize,
    #[arg(long, default_value_t = 4)]
    pub clusters_sink: usize,
    /// Likelihood above which a Gaussian seeds the source clusters.
    #[arg(long, default_value_t = 0.95)]
    pub conf_hi: f64,
    /// Likelihood below which a Gaussian seeds the sink clusters.
    #[arg(long, default_value_t = 0.05)]
    pub conf_lo: f64,
    #[arg(long, default_value = "soft")]
    pub mode: LiftMode,
    /// Stop after thresholding the likelihoods.
    #[arg(long)]
    pub coarse_only: bool,
    /// Rescale positions to a unit cube before building the graph.
    #[arg(long)]
    pub normalize_extent: bool,
    /// Likelihood for Gaussians no view sees [default: 0, or 0.5 for bench].
    #[arg(long)]
    pub zero_weight: Option<f64>,
}

impl ParamArgs {
    pub fn to_params(&self, default_zero_weight: f64) -> SegmentParams {
        SegmentParams {
            lift: LiftParams {
                mode: self.mode,
                tau: self.tau,
                zero_contribution_weight: self.zero_weight.unwrap_or(default_zero_weight),
            },
            cut: CutParams {
                k: self.k,
                gamma_pos: self.gamma_pos,
                gamma_col: self.gamma_col,
                lambda: self.lambda,
                lambda_n: self.lambda_n,
                lambda_u: self.lambda_u,
                conf_hi: self.conf_hi,
                conf_lo: self.conf_lo,
                clusters_src: self.clusters_src,
                clusters_sink: self.clusters_sink,
                normalize_extent: self.normalize_extent,
            },
            coarse_only: self.coarse_only,
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    /// Directory of PNG masks named after each camera's image stem.
    #[arg(long, conflicts_with = "scribbles", required_unless_present = "scribbles")]
    pub masks: Option<PathBuf>,
    /// JSON file of `{view_index, fg, bg}` objects (one or an array).
    #[arg(long)]
    pub scribbles: Option<PathBuf>,
    #[arg(long)]
    pub out_fg: PathBuf,
    #[arg(long)]
    pub out_bg: Option<PathBuf>,
    /// Labels file: one 0/1 per line in Gaussian order.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    /// Camera index in the cameras file.
    #[arg(long)]
    pub view: usize,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Side to draw when labels are given.
    #[arg(long, default_value = "fg", requires = "labels")]
    pub side: Side,
    /// Background color as `r,g,b` in [0, 1].
    #[arg(long, value_parser = parse_rgb, default_value = "0,0,0")]
    pub background: [f64; 3],
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted mask PNG or directory of PNGs.
    #[arg(long, conflicts_with_all = ["pred_img", "gt_img"])]
    pub pred_mask: Option<PathBuf>,
    /// Ground-truth mask PNG or directory; also the crop mask for images.
    #[arg(long)]
    pub gt_mask: PathBuf,
    #[arg(long, requires = "gt_img")]
    pub pred_img: Option<PathBuf>,
    #[arg(long, requires = "pred_img")]
    pub gt_img: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 500)]
    pub n_per_cluster: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.3)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_max: f64,
    /// Fraction of boundary-band pixels flipped per mask.
    #[arg(long, default_value_t = 0.05)]
    pub mask_noise: f64,
    #[arg(long, default_value_t = 8)]
    pub n_views: usize,
    #[arg(long, default_value_t = 2.0)]
    pub blob_radius: f64,
    #[arg(long, default_value_t = 96)]
    pub image_size: usize,
    #[arg(long, default_value_t = 30.0)]
    pub orbit_radius: f64,
    #[arg(long, default_value_t = 150.0)]
    pub focal: f64,
}

impl SpecArgs {
    pub fn to_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_per_cluster: self.n_per_cluster,
            separation: self.separation,
            scale_range: (self.scale_min, self.scale_max),
            mask_noise: self.mask_noise,
            n_views: self.n_views,
            seed,
            blob_radius: self.blob_radius,
            image_size: self.image_size,
            orbit_radius: self.orbit_radius,
            focal: self.focal,
            ..SyntheticSpec::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub axis: Axis,
    /// CSV path, or a directory to receive `ablation_<axis>.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds per configuration.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    /// Write zeros in the runtime column for byte-stable output.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub cameras: PathBuf,
    /// Optional mask directory for `source: masks` cuts.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Directory of static UI files served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

pub fn parse_rgb(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected r,g,b, got '{s}'"));
    }
    let mut rgb = [0.0; 3];
    for (c, p) in rgb.iter_mut().zip(&parts) {
        *c = p.parse::<f64>().map_err(|e| format!("bad channel '{p}': {e}"))?;
        if !(0.0..=1.0).contains(c) {
            return Err(format!("channel {c} outside [0, 1]"));
        }
    }
    Ok(rgb)
}
