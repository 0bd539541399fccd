//! Tile-based front-to-back compositor with per-Gaussian contribution tracking.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::project::{project_gaussian, tile_grid, Splat2D, TILE_SIZE};
use crate::scene::{Camera, GaussianScene, Image, Mask};

pub const ALPHA_MAX: f64 = 0.99;
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Blending stops before transmittance would drop below this.
pub const T_MIN: f64 = 1e-4;

/// Per-Gaussian sums of blending weight over masked and all pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionTotals {
    pub masked: Vec<f64>,
    pub total: Vec<f64>,
}

impl ContributionTotals {
    pub fn zeros(n: usize) -> Self {
        ContributionTotals {
            masked: vec![0.0; n],
            total: vec![0.0; n],
        }
    }

    pub fn add(&mut self, other: &ContributionTotals) {
        for (a, b) in self.masked.iter_mut().zip(&other.masked) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
    }
}

/// What a blended (Gaussian, pixel) pair adds to the totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `alpha * T`.
    Blend,
    /// 1 for every pair that survives the skip and termination rules.
    Indicator,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions<'a> {
    /// Gaussians to draw; all when `None`.
    pub include: Option<&'a [bool]>,
    /// Per-Gaussian color override (indexed by Gaussian).
    pub colors: Option<&'a [[f64; 3]]>,
    pub background: [f64; 3],
}

impl Default for RenderOptions<'_> {
    fn default() -> Self {
        RenderOptions {
            include: None,
            colors: None,
            background: [0.0; 3],
        }
    }
}

/// Projected splats binned to tiles, each tile's list sorted front to back.
pub struct BinnedSplats {
    pub splats: Vec<Splat2D>,
    pub tiles: Vec<Vec<usize>>,
    pub grid: (usize, usize),
}

pub fn bin_splats(scene: &GaussianScene, cam: &Camera, include: Option<&[bool]>) -> BinnedSplats {
    let splats: Vec<Splat2D> = (0..scene.count())
        .into_par_iter()
        .filter(|&g| include.is_none_or(|inc| inc[g]))
        .filter_map(|g| project_gaussian(g, scene, cam))
        .collect();
    let grid = tile_grid(cam);
    let mut tiles = vec![Vec::new(); grid.0 * grid.1];
    for (i, s) in splats.iter().enumerate() {
        for ty in s.tile_min[1]..s.tile_max[1] {
            for tx in s.tile_min[0]..s.tile_max[0] {
                tiles[ty * grid.0 + tx].push(i);
            }
        }
    }
    tiles.par_iter_mut().for_each(|list| {
        list.sort_by(|&a, &b| {
            let (sa, sb) = (&splats[a], &splats[b]);
            sa.depth.total_cmp(&sb.depth).then(sa.gaussian_index.cmp(&sb.gaussian_index))
        })
    });
    BinnedSplats { splats, tiles, grid }
}

/// Composites one pixel over the depth-sorted `list`, calling `emit(k, alpha * T)`
/// for every blended entry `list[k]`. Returns the final transmittance.
#[inline]
pub fn blend_pixel(x: usize, y: usize, list: &[usize], splats: &[Splat2D], mut emit: impl FnMut(usize, f64, f64)) -> f64 {
    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
    let mut transmittance = 1.0;
    for (k, &i) in list.iter().enumerate() {
        let s = &splats[i];
        let (dx, dy) = (px - s.mean2d[0], py - s.mean2d[1]);
        let power = -0.5 * (s.conic[0] * dx * dx + s.conic[2] * dy * dy) - s.conic[1] * dx * dy;
        if power > 0.0 {
            continue;
        }
        let alpha = (s.opacity * power.exp()).min(ALPHA_MAX);
        if alpha < ALPHA_MIN {
            continue;
        }
        let next = transmittance * (1.0 - alpha);
        if next < T_MIN {
            break;
        }
        emit(k, alpha * transmittance, alpha);
        transmittance = next;
    }
    transmittance
}

fn tile_pixels(cam: &Camera, tile: usize, grid: (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    let (tx, ty) = (tile % grid.0, tile / grid.0);
    let x0 = tx * TILE_SIZE;
    let y0 = ty * TILE_SIZE;
    let x1 = (x0 + TILE_SIZE).min(cam.width);
    let y1 = (y0 + TILE_SIZE).min(cam.height);
    (y0..y1).flat_map(move |y| (x0..x1).map(move |x| (x, y)))
}

fn splat_color(s: &Splat2D, colors: Option<&[[f64; 3]]>) -> [f64; 3] {
    colors.map_or(s.color, |c| c[s.gaussian_index])
}

/// Renders `scene` from `cam` with the given options.
pub fn render_with(scene: &GaussianScene, cam: &Camera, opts: RenderOptions<'_>) -> Image {
    let binned = bin_splats(scene, cam, opts.include);
    let per_tile: Vec<Vec<(usize, [f64; 3])>> = (0..binned.tiles.len())
        .into_par_iter()
        .map(|t| {
            let list = &binned.tiles[t];
            tile_pixels(cam, t, binned.grid)
                .map(|(x, y)| {
                    let mut rgb = [0.0; 3];
                    let t_final = blend_pixel(x, y, list, &binned.splats, |k, w, _| {
                        let c = splat_color(&binned.splats[list[k]], opts.colors);
                        for ch in 0..3 {
                            rgb[ch] += w * c[ch];
                        }
                    });
                    for ch in 0..3 {
                        rgb[ch] += t_final * opts.background[ch];
                    }
                    (y * cam.width + x, rgb)
                })
                .collect()
        })
        .collect();
    let mut img = Image::filled(cam.width, cam.height, opts.background);
    for (idx, rgb) in per_tile.into_iter().flatten() {
        img.pixels[idx] = rgb;
    }
    img
}

/// Renders the whole scene, or only the Gaussians flagged in `subset`.
pub fn render(scene: &GaussianScene, cam: &Camera, subset: Option<&[bool]>, background: [f64; 3]) -> Image {
    render_with(
        scene,
        cam,
        RenderOptions {
            include: subset,
            colors: None,
            background,
        },
    )
}

/// Per-pixel accumulated opacity `1 - T_final`.
pub fn alpha_map(scene: &GaussianScene, cam: &Camera, include: Option<&[bool]>) -> Vec<f64> {
    let binned = bin_splats(scene, cam, include);
    let mut out = vec![0.0; cam.width * cam.height];
    let per_tile: Vec<Vec<(usize, f64)>> = (0..binned.tiles.len())
        .into_par_iter()
        .map(|t| {
            tile_pixels(cam, t, binned.grid)
                .map(|(x, y)| {
                    let tf = blend_pixel(x, y, &binned.tiles[t], &binned.splats, |_, _, _| {});
                    (y * cam.width + x, 1.0 - tf)
                })
                .collect()
        })
        .collect();
    for (idx, a) in per_tile.into_iter().flatten() {
        out[idx] = a;
    }
    out
}

fn check_dims(mask: &Mask, cam: &Camera) -> Result<()> {
    if mask.dims() != (cam.width, cam.height) {
        return Err(Error::DimensionMismatch {
            expected: (cam.width, cam.height),
            actual: mask.dims(),
        });
    }
    Ok(())
}

/// Same traversal as [`render`], summing each Gaussian's weight over the
/// masked pixels and over all pixels.
pub fn accumulate_contributions(
    scene: &GaussianScene,
    cam: &Camera,
    mask: &Mask,
    weighting: Weighting,
) -> Result<ContributionTotals> {
    check_dims(mask, cam)?;
    let binned = bin_splats(scene, cam, None);
    let partials: Vec<Vec<(f64, f64)>> = (0..binned.tiles.len())
        .into_par_iter()
        .map(|t| {
            let list = &binned.tiles[t];
            let mut acc = vec![(0.0, 0.0); list.len()];
            for (x, y) in tile_pixels(cam, t, binned.grid) {
                let fg = mask.get(x, y);
                blend_pixel(x, y, list, &binned.splats, |k, w, _| {
                    let v = match weighting {
                        Weighting::Blend => w,
                        Weighting::Indicator => 1.0,
                    };
                    acc[k].1 += v;
                    if fg {
                        acc[k].0 += v;
                    }
                });
            }
            acc
        })
        .collect();
    let mut totals = ContributionTotals::zeros(scene.count());
    for (t, acc) in partials.iter().enumerate() {
        for (k, &(m, a)) in acc.iter().enumerate() {
            let g = binned.splats[binned.tiles[t][k]].gaussian_index;
            totals.masked[g] += m;
            totals.total[g] += a;
        }
    }
    Ok(totals)
}

/// Blend-weighted contribution totals for one view.
pub fn render_with_contributions(scene: &GaussianScene, cam: &Camera, mask: &Mask) -> Result<ContributionTotals> {
    accumulate_contributions(scene, cam, mask, Weighting::Blend)
}
