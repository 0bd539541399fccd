//! CPU splatting rasterizer.

mod project;
mod render;
mod sh;

pub use project::{compute_cov3d, project_gaussian, quat_to_matrix, tile_grid, Splat2D, DILATION, NEAR_CLIP, TILE_SIZE};
pub use render::{
    accumulate_contributions, alpha_map, bin_splats, blend_pixel, render, render_with, render_with_contributions,
    BinnedSplats, ContributionTotals, RenderOptions, Weighting, ALPHA_MAX, ALPHA_MIN, T_MIN,
};
pub use sh::{eval_sh, rgb_to_dc, sh_basis};
