//! Procedural two-cluster scenes with ground truth, orbit cameras, noisy
//! masks and the ablation sweeps built on them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{label_iou, mask_metrics, render_fg_mask};
use crate::mincut::Partition;
use crate::pipeline::{segment, SegmentParams, Seeds};
use crate::raster::rgb_to_dc;
use crate::scene::{Camera, GaussianScene, Mask, RawGaussian, SH_COEFFS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_per_cluster: usize,
    /// Distance between the two cluster centers.
    pub separation: f64,
    /// Per-axis activated scale range.
    pub scale_range: (f64, f64),
    /// RGB of the foreground and background cluster.
    pub colors: [[f64; 3]; 2],
    /// Fraction of boundary-band pixels flipped in each mask.
    pub mask_noise: f64,
    pub n_views: usize,
    pub seed: u64,
    /// Gaussian centers are uniform in a ball of this radius around each
    /// cluster center.
    pub blob_radius: f64,
    pub image_size: usize,
    pub orbit_radius: f64,
    pub focal: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_cluster: 500,
            separation: 10.0,
            scale_range: (0.3, 1.0),
            colors: [[0.9, 0.15, 0.1], [0.1, 0.25, 0.9]],
            mask_noise: 0.0,
            n_views: 8,
            seed: 0,
            blob_radius: 2.0,
            image_size: 96,
            orbit_radius: 30.0,
            focal: 150.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.separation > 0.0) {
            return bad(format!("separation must be > 0, got {}", self.separation));
        }
        if !(0.0..0.5).contains(&self.mask_noise) {
            return bad(format!("mask noise must be in [0, 0.5), got {}", self.mask_noise));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("scale range ({lo}, {hi}) must satisfy 0 < lo <= hi"));
        }
        if self.n_per_cluster == 0 || self.n_views == 0 || self.image_size == 0 {
            return bad("cluster size, view count and image size must be >= 1".into());
        }
        if !(self.blob_radius >= 0.0) || !(self.orbit_radius > 0.0) || !(self.focal > 0.0) {
            return bad("blob radius must be >= 0, orbit radius and focal > 0".into());
        }
        Ok(())
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::zeros()
    }
}

fn in_unit_ball(rng: &mut impl Rng, dims: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dims).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 && n2 > 1e-12 {
            return v;
        }
    }
}

/// Two blobs at `∓separation/2` on x; the first `n_per_cluster` Gaussians
/// form the foreground cluster.
pub fn make_two_cluster_scene(spec: &SyntheticSpec) -> Result<(GaussianScene, Vec<bool>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gaussians = Vec::with_capacity(2 * spec.n_per_cluster);
    let mut labels = Vec::with_capacity(2 * spec.n_per_cluster);
    for (cluster, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut sh = [0.0f32; SH_COEFFS];
        for c in 0..3 {
            sh[c] = rgb_to_dc(spec.colors[cluster][c]) as f32;
        }
        for _ in 0..spec.n_per_cluster {
            let mut p = [sign * spec.separation / 2.0, 0.0, 0.0];
            if spec.n_per_cluster > 1 {
                let off = in_unit_ball(&mut rng, 3);
                for d in 0..3 {
                    p[d] += spec.blob_radius * off[d];
                }
            }
            let (lo, hi) = spec.scale_range;
            let scale = [0; 3].map(|_| if lo < hi { rng.gen_range(lo..=hi) } else { lo });
            let q = in_unit_ball(&mut rng, 4);
            let opacity = rng.gen_range(0.7..=1.0);
            gaussians.push(RawGaussian::from_activated(p.map(|v| v as f32), sh, opacity, scale, [q[0], q[1], q[2], q[3]]));
            labels.push(cluster == 0);
        }
    }
    Ok((GaussianScene::from_raw(gaussians)?, labels))
}

fn orbit(center: Vector3<f64>, radius: f64, n_views: usize, width: usize, height: usize, f: f64, phase: f64) -> Vec<Camera> {
    (0..n_views)
        .map(|i| {
            let az = phase + 2.0 * PI * i as f64 / n_views as f64;
            let pos = center + radius * Vector3::new(az.sin(), 0.0, -az.cos());
            Camera::look_at(
                i as i64,
                format!("view_{i:03}"),
                width,
                height,
                f,
                pos,
                center,
                Vector3::new(0.0, -1.0, 0.0),
            )
        })
        .collect()
}

/// Cameras evenly spaced on a horizontal circle, looking at `center`;
/// azimuth 0 sits at `center - radius * z`.
pub fn make_orbit_cameras(center: Vector3<f64>, radius: f64, n_views: usize, width: usize, height: usize, f: f64) -> Vec<Camera> {
    orbit(center, radius, n_views, width, height, f, 0.0)
}

/// Training views for `spec`.
pub fn spec_cameras(spec: &SyntheticSpec) -> Vec<Camera> {
    make_orbit_cameras(spec.center(), spec.orbit_radius, spec.n_views, spec.image_size, spec.image_size, spec.focal)
}

/// Eight held-out views at azimuths between the eight-view training orbit.
pub fn eval_cameras(spec: &SyntheticSpec) -> Vec<Camera> {
    orbit(
        spec.center(),
        spec.orbit_radius,
        8,
        spec.image_size,
        spec.image_size,
        spec.focal,
        PI / 8.0,
    )
}

pub const BAND_RADIUS: isize = 2;

/// Pixels with a differently valued pixel within `BAND_RADIUS` (Chebyshev).
pub fn boundary_band(mask: &Mask) -> Vec<usize> {
    let (w, h) = (mask.width as isize, mask.height as isize);
    let mut band = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = mask.bits[(y * w + x) as usize];
            let near = (-BAND_RADIUS..=BAND_RADIUS).any(|dy| {
                (-BAND_RADIUS..=BAND_RADIUS).any(|dx| {
                    let (sx, sy) = (x + dx, y + dy);
                    sx >= 0 && sy >= 0 && sx < w && sy < h && mask.bits[(sy * w + sx) as usize] != v
                })
            });
            if near {
                band.push((y * w + x) as usize);
            }
        }
    }
    band
}

/// Flips `round(noise * |band|)` band pixels chosen by `rng`.
pub fn perturb_mask(mask: &Mask, noise: f64, rng: &mut impl Rng) -> Mask {
    let band = boundary_band(mask);
    let flips = (noise * band.len() as f64).round() as usize;
    let mut out = mask.clone();
    for i in sample(rng, band.len(), flips.min(band.len())) {
        let p = band[i];
        out.bits[p] = !out.bits[p];
    }
    out
}

/// Ground-truth silhouettes per view, with boundary noise.
pub fn make_gt_masks(scene: &GaussianScene, labels: &[bool], cams: &[Camera], noise: f64, seed: u64) -> Result<Vec<Mask>> {
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::InvalidInput(format!("mask noise must be in [0, 0.5), got {noise}")));
    }
    cams.par_iter()
        .enumerate()
        .map(|(i, cam)| {
            let clean = render_fg_mask(scene, labels, cam)?;
            if noise == 0.0 {
                return Ok(clean);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
            Ok(perturb_mask(&clean, noise, &mut rng))
        })
        .collect()
}

/// Likelihood for Gaussians that no view sees: dense blobs hide their cores,
/// and treating those as background would seed the sink inside the object.
pub const UNSEEN_WEIGHT: f64 = 0.5;

/// Pipeline defaults used by the synthetic benchmarks.
pub fn bench_params() -> SegmentParams {
    let mut p = SegmentParams::default();
    p.lift.zero_contribution_weight = UNSEEN_WEIGHT;
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub gaussian_iou: f64,
    pub mask_iou: f64,
    pub acc: f64,
    pub energy: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub gt_labels: Vec<bool>,
    pub coarse: Partition,
    pub cut: Partition,
    pub coarse_metrics: RunMetrics,
    pub cut_metrics: RunMetrics,
}

/// Mean mask IoU and accuracy of `labels` against `gt_masks` rendered from
/// `cams`.
pub fn eval_labels(scene: &GaussianScene, labels: &[bool], gt_masks: &[Mask], cams: &[Camera]) -> Result<(f64, f64)> {
    let per_view: Vec<(f64, f64)> = cams
        .par_iter()
        .zip(gt_masks.par_iter())
        .map(|(cam, gt)| {
            let m = mask_metrics(&render_fg_mask(scene, labels, cam)?, gt)?;
            Ok((m.iou, m.accuracy))
        })
        .collect::<Result<_>>()?;
    let n = per_view.len() as f64;
    Ok((
        per_view.iter().map(|v| v.0).sum::<f64>() / n,
        per_view.iter().map(|v| v.1).sum::<f64>() / n,
    ))
}

/// Builds the scene for `spec`, lifts its noisy masks and evaluates both
/// the coarse and the cut partition.
pub fn run_case(spec: &SyntheticSpec, params: &SegmentParams) -> Result<CaseResult> {
    let (mut scene, gt) = make_two_cluster_scene(spec)?;
    let cams = spec_cameras(spec);
    let masks = make_gt_masks(&scene, &gt, &cams, spec.mask_noise, spec.seed)?;
    let params = SegmentParams {
        coarse_only: false,
        ..*params
    };
    let seg = segment(&mut scene, &cams, Seeds::Masks(&masks), &params)?;
    let eval = eval_cameras(spec);
    let eval_gt = make_gt_masks(&scene, &gt, &eval, 0.0, 0)?;
    let metrics = |p: &Partition, runtime_ms: f64| -> Result<RunMetrics> {
        let (mask_iou, acc) = eval_labels(&scene, &p.labels, &eval_gt, &eval)?;
        Ok(RunMetrics {
            gaussian_iou: label_iou(&p.labels, &gt),
            mask_iou,
            acc,
            energy: p.energy,
            runtime_ms,
        })
    };
    let times = seg.summary.runtime_ms;
    Ok(CaseResult {
        coarse_metrics: metrics(&seg.coarse, times.lift)?,
        cut_metrics: metrics(&seg.partition, times.total)?,
        gt_labels: gt,
        coarse: seg.coarse,
        cut: seg.partition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Views,
    Energy,
    Neighbors,
    Clusters,
    Lambda,
    Gamma,
    Tau,
}

impl Axis {
    pub const ALL: [Axis; 7] = [
        Axis::Views,
        Axis::Energy,
        Axis::Neighbors,
        Axis::Clusters,
        Axis::Lambda,
        Axis::Gamma,
        Axis::Tau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Views => "views",
            Axis::Energy => "energy",
            Axis::Neighbors => "neighbors",
            Axis::Clusters => "clusters",
            Axis::Lambda => "lambda",
            Axis::Gamma => "gamma",
            Axis::Tau => "tau",
        }
    }

    /// `(value label, spec, params)` for every point on the axis.
    pub fn configs(self, spec: &SyntheticSpec, params: &SegmentParams) -> Vec<(String, SyntheticSpec, SegmentParams)> {
        let (s, p) = (*spec, *params);
        let cut = |f: &dyn Fn(&mut SegmentParams)| {
            let mut q = p;
            f(&mut q);
            q
        };
        match self {
            Axis::Views => [1usize, 2, 4, 8]
                .iter()
                .map(|&n| (n.to_string(), SyntheticSpec { n_views: n, ..s }, p))
                .collect(),
            Axis::Energy => vec![
                ("full".into(), s, p),
                ("no_lambda_n".into(), s, cut(&|q| q.cut.lambda_n = 0.0)),
                ("no_lambda_u".into(), s, cut(&|q| q.cut.lambda_u = 0.0)),
                ("single".into(), SyntheticSpec { n_views: 1, ..s }, p),
            ],
            Axis::Neighbors => [1usize, 10, 50, 100]
                .iter()
                .map(|&k| (k.to_string(), s, cut(&|q| q.cut.k = k)))
                .collect(),
            Axis::Clusters => [1usize, 5, 10, 20]
                .iter()
                .map(|&c| {
                    (
                        c.to_string(),
                        s,
                        cut(&|q| {
                            q.cut.clusters_src = c;
                            q.cut.clusters_sink = c;
                        }),
                    )
                })
                .collect(),
            Axis::Lambda => [0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&l| (l.to_string(), s, cut(&|q| q.cut.lambda = l)))
                .collect(),
            Axis::Gamma => [0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&g| (g.to_string(), s, cut(&|q| q.cut.gamma_col = g)))
                .collect(),
            Axis::Tau => [0.1, 0.3, 0.5, 0.7, 0.9]
                .iter()
                .map(|&t| (t.to_string(), s, cut(&|q| q.lift.tau = t)))
                .collect(),
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Axis::ALL.iter().map(|a| a.name()).collect();
                Error::InvalidInput(format!("unknown axis '{s}' (expected one of {})", names.join("|")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub method: String,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}

pub const CSV_HEADER: &str = "axis,value,method,seed,gaussian_iou,mask_iou,acc,energy,runtime_ms";

/// Runs every configuration of `axis` for each seed; rows come out in
/// (value, seed, coarse then cut) order. `timing = false` zeroes the
/// runtime column so repeated sweeps are byte-identical.
pub fn run_sweep(axis: Axis, spec: &SyntheticSpec, params: &SegmentParams, seeds: &[u64], timing: bool) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(String, SyntheticSpec, SegmentParams)> = axis
        .configs(spec, params)
        .into_iter()
        .flat_map(|(v, s, p)| seeds.iter().map(move |&seed| (v.clone(), SyntheticSpec { seed, ..s }, p)))
        .collect();
    let results: Vec<Result<CaseResult>> = jobs.par_iter().map(|(_, s, p)| run_case(s, p)).collect();
    let mut rows = Vec::with_capacity(jobs.len() * 2);
    for ((value, s, _), res) in jobs.iter().zip(results) {
        let res = res?;
        for (method, mut m) in [("coarse", res.coarse_metrics), ("cut", res.cut_metrics)] {
            if !timing {
                m.runtime_ms = 0.0;
            }
            rows.push(SweepRow {
                axis: axis.name().into(),
                value: value.clone(),
                method: method.into(),
                seed: s.seed,
                metrics: m,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.3}",
            r.axis, r.value, r.method, r.seed, m.gaussian_iou, m.mask_iou, m.acc, m.energy, m.runtime_ms
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gaussian_clusters() {
        let spec = SyntheticSpec {
            n_per_cluster: 1,
            ..SyntheticSpec::default()
        };
        let (scene, labels) = make_two_cluster_scene(&spec).unwrap();
        assert_eq!(scene.count(), 2);
        assert_eq!(labels, vec![true, false]);
        assert_eq!(scene.position(0), Vector3::new(-5.0, 0.0, 0.0));
        assert_eq!(scene.position(1), Vector3::new(5.0, 0.0, 0.0));
    }

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec {
            mask_noise: 0.5,
            ..SyntheticSpec::default()
        }
        .validate()
        .is_err());
        assert!(SyntheticSpec {
            separation: 0.0,
            ..SyntheticSpec::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn band_of_half_plane() {
        let mut m = Mask::new(10, 4, false);
        for y in 0..4 {
            for x in 5..10 {
                m.bits[y * 10 + x] = true;
            }
        }
        // columns 3..=6 are within two pixels of the edge
        assert_eq!(boundary_band(&m).len(), 4 * 4);
    }

    #[test]
    fn axis_parse() {
        assert_eq!("tau".parse::<Axis>().unwrap(), Axis::Tau);
        assert!("depth".parse::<Axis>().is_err());
    }
}
