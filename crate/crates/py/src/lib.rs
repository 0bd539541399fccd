//! Python module `splatcut`: scenes, cameras, masks, lifting, cuts,
//! rendering and metrics.

use nalgebra::Vector3;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyBytes, PyDict, PyFloat, PyInt, PyString};

use splatcut::graph::FlowGraph;
use splatcut::harness::{make_gt_masks, make_orbit_cameras, make_two_cluster_scene, spec_cameras, SyntheticSpec};
use splatcut::lift::{coarse_splat as coarse, LiftMode, Scribbles};
use splatcut::mincut::max_flow as solve;
use splatcut::pipeline::{lift_weights, segment as run_segment, SegmentParams, Seeds};
use splatcut::{io, metrics, raster, Side};

create_exception!(splatcut, SplatcutError, PyException);

fn err(e: splatcut::Error) -> PyErr {
    SplatcutError::new_err(e.to_string())
}

fn parse_side(side: &str) -> PyResult<Side> {
    side.parse().map_err(err)
}

/// A loaded Gaussian splatting scene.
#[pyclass(name = "Scene", module = "splatcut", skip_from_py_object)]
#[derive(Clone)]
struct Scene {
    inner: splatcut::GaussianScene,
}

#[pymethods]
impl Scene {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Scene {
            inner: io::load_splat_model(path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Scene {
            inner: io::read_splat_model(data).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.count()
    }

    fn __repr__(&self) -> String {
        format!("Scene({} gaussians)", self.inner.count())
    }

    fn positions(&self) -> Vec<(f64, f64, f64)> {
        (0..self.inner.count())
            .map(|g| {
                let p = self.inner.position(g);
                (p.x, p.y, p.z)
            })
            .collect()
    }

    fn opacities(&self) -> Vec<f64> {
        (0..self.inner.count()).map(|g| self.inner.opacity(g)).collect()
    }

    /// Likelihoods from the last lift or segment call.
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    /// Writes the Gaussians on `side` ("fg", "bg" or "all") as binary PLY.
    #[pyo3(signature = (path, labels, side = "fg"))]
    fn save(&self, path: &str, labels: Vec<bool>, side: &str) -> PyResult<usize> {
        io::save_splat_model(&self.inner, &labels, parse_side(side)?, path).map_err(err)
    }

    #[pyo3(signature = (labels, side = "fg"))]
    fn to_bytes<'py>(&self, py: Python<'py>, labels: Vec<bool>, side: &str) -> PyResult<Bound<'py, PyBytes>> {
        let mut buf = Vec::new();
        io::write_splat_model(&self.inner, &labels, parse_side(side)?, &mut buf).map_err(err)?;
        Ok(PyBytes::new(py, &buf))
    }
}

#[pyclass(name = "Camera", module = "splatcut", from_py_object)]
#[derive(Clone)]
struct Camera {
    inner: splatcut::Camera,
}

#[pymethods]
impl Camera {
    #[getter]
    fn id(&self) -> i64 {
        self.inner.id
    }
    #[getter]
    fn image_name(&self) -> String {
        self.inner.image_name.clone()
    }
    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }
    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }
    #[getter]
    fn focal(&self) -> (f64, f64) {
        (self.inner.fx, self.inner.fy)
    }
    /// Camera center in world coordinates.
    #[getter]
    fn center(&self) -> (f64, f64, f64) {
        let c = self.inner.center();
        (c.x, c.y, c.z)
    }

    fn __repr__(&self) -> String {
        format!("Camera(id={}, {}, {}x{})", self.inner.id, self.inner.image_name, self.inner.width, self.inner.height)
    }
}

fn wrap_cameras(cams: Vec<splatcut::Camera>) -> Vec<Camera> {
    cams.into_iter().map(|inner| Camera { inner }).collect()
}

fn unwrap_cameras(cams: &[Camera]) -> Vec<splatcut::Camera> {
    cams.iter().map(|c| c.inner.clone()).collect()
}

#[pyfunction]
fn load_cameras(path: &str) -> PyResult<Vec<Camera>> {
    Ok(wrap_cameras(io::load_cameras(path).map_err(err)?))
}

#[pyfunction]
fn save_cameras(cameras: Vec<Camera>, path: &str) -> PyResult<()> {
    io::save_cameras(&unwrap_cameras(&cameras), path).map_err(err)
}

/// `n` cameras on a horizontal circle around `center`, all looking at it.
#[pyfunction]
#[pyo3(signature = (center, radius, n, width, height, focal))]
fn orbit_cameras(center: (f64, f64, f64), radius: f64, n: usize, width: usize, height: usize, focal: f64) -> Vec<Camera> {
    let c = Vector3::new(center.0, center.1, center.2);
    wrap_cameras(make_orbit_cameras(c, radius, n, width, height, focal))
}

/// Binary per-pixel mask.
#[pyclass(name = "Mask", module = "splatcut", from_py_object)]
#[derive(Clone)]
struct Mask {
    inner: splatcut::Mask,
}

#[pymethods]
impl Mask {
    /// Row-major booleans, `width * height` of them.
    #[new]
    fn new(width: usize, height: usize, bits: Vec<bool>) -> PyResult<Self> {
        if bits.len() != width * height {
            return Err(SplatcutError::new_err(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Mask {
            inner: splatcut::Mask { width, height, bits },
        })
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: bool) -> Self {
        Mask {
            inner: splatcut::Mask::new(width, height, value),
        }
    }

    /// Loads a PNG, resizing to `width x height` when given.
    #[staticmethod]
    #[pyo3(signature = (path, width = None, height = None))]
    fn load(path: &str, width: Option<usize>, height: Option<usize>) -> PyResult<Self> {
        let inner = match (width, height) {
            (Some(w), Some(h)) => io::load_mask(path, w, h).map_err(err)?,
            _ => io::decode_mask(&std::fs::read(path)?).map_err(err)?,
        };
        Ok(Mask { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_mask(&self.inner, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }
    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }
    fn count(&self) -> usize {
        self.inner.count()
    }
    fn bits(&self) -> Vec<bool> {
        self.inner.bits.clone()
    }
}

/// Linear RGB image in [0, 1].
#[pyclass(name = "Image", module = "splatcut", from_py_object)]
#[derive(Clone)]
struct Image {
    inner: splatcut::Image,
}

#[pymethods]
impl Image {
    /// `pixels` is row-major, three floats per pixel.
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<f64>) -> PyResult<Self> {
        if pixels.len() != width * height * 3 {
            return Err(SplatcutError::new_err(format!(
                "{} values for a {width}x{height} RGB image",
                pixels.len()
            )));
        }
        let pixels = pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(Image {
            inner: splatcut::Image { width, height, pixels },
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Image {
            inner: io::load_image(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_image(&self.inner, path).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }
    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }
    fn pixels(&self) -> Vec<f64> {
        self.inner.pixels.iter().flatten().copied().collect()
    }
    fn to_png<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::encode_image(&self.inner))
    }
}

#[pyfunction]
#[pyo3(signature = (scene, camera, subset = None, background = (0.0, 0.0, 0.0)))]
fn render(scene: &Scene, camera: &Camera, subset: Option<Vec<bool>>, background: (f64, f64, f64)) -> PyResult<Image> {
    if let Some(s) = &subset {
        if s.len() != scene.inner.count() {
            return Err(SplatcutError::new_err(format!(
                "subset has {} entries, scene has {} gaussians",
                s.len(),
                scene.inner.count()
            )));
        }
    }
    let bg = [background.0, background.1, background.2];
    Ok(Image {
        inner: raster::render(&scene.inner, &camera.inner, subset.as_deref(), bg),
    })
}

fn masks_of(masks: &[Mask]) -> Vec<splatcut::Mask> {
    masks.iter().map(|m| m.inner.clone()).collect()
}

fn scribbles_of(list: Vec<(usize, Vec<[usize; 2]>, Vec<[usize; 2]>)>) -> Vec<(usize, Scribbles)> {
    list.into_iter().map(|(v, fg, bg)| (v, Scribbles { fg, bg })).collect()
}

fn to_json(v: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    if v.is_instance_of::<PyBool>() {
        Ok(serde_json::Value::Bool(v.extract()?))
    } else if v.is_instance_of::<PyInt>() {
        Ok(serde_json::json!(v.extract::<i64>()?))
    } else if v.is_instance_of::<PyFloat>() {
        Ok(serde_json::json!(v.extract::<f64>()?))
    } else if v.is_instance_of::<PyString>() {
        Ok(serde_json::Value::String(v.extract()?))
    } else {
        Err(SplatcutError::new_err(format!("unsupported parameter value {v}")))
    }
}

/// Defaults overridden by keyword arguments named like the CLI flags
/// (`k`, `tau`, `lambda_n`, `coarse_only`, `zero_contribution_weight`, ...).
fn params_from(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<SegmentParams> {
    let Ok(serde_json::Value::Object(mut merged)) = serde_json::to_value(SegmentParams::default()) else {
        unreachable!("params serialize to an object")
    };
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            let key: String = k.extract()?;
            if !merged.contains_key(&key) {
                return Err(SplatcutError::new_err(format!("unknown parameter '{key}'")));
            }
            merged.insert(key, to_json(&v)?);
        }
    }
    let params: SegmentParams =
        serde_json::from_value(serde_json::Value::Object(merged)).map_err(|e| SplatcutError::new_err(e.to_string()))?;
    params.validate().map_err(err)?;
    Ok(params)
}

/// Default parameters as a dict.
#[pyfunction]
fn default_params<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &serde_json::to_string(&SegmentParams::default()).unwrap_or_default())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Per-Gaussian foreground likelihoods from one mask per camera.
#[pyfunction]
#[pyo3(signature = (scene, cameras, masks, mode = "soft", zero_weight = 0.0))]
fn lift(scene: &mut Scene, cameras: Vec<Camera>, masks: Vec<Mask>, mode: &str, zero_weight: f64) -> PyResult<Vec<f64>> {
    let mode: LiftMode = mode.parse().map_err(err)?;
    let mut params = SegmentParams::default().lift;
    params.mode = mode;
    params.zero_contribution_weight = zero_weight;
    let masks = masks_of(&masks);
    lift_weights(&mut scene.inner, &unwrap_cameras(&cameras), Seeds::Masks(&masks), &params).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (weights, tau = 0.9))]
fn coarse_splat(weights: Vec<f64>, tau: f64) -> Vec<bool> {
    coarse(&weights, tau).labels
}

/// Lift then cut. Returns `{"labels", "weights", "coarse", "summary"}`.
///
/// `scribbles` is a list of `(view_index, fg_pixels, bg_pixels)`.
#[pyfunction]
#[pyo3(signature = (scene, cameras, masks = None, scribbles = None, **params))]
fn segment<'py>(
    py: Python<'py>,
    scene: &mut Scene,
    cameras: Vec<Camera>,
    masks: Option<Vec<Mask>>,
    scribbles: Option<Vec<(usize, Vec<[usize; 2]>, Vec<[usize; 2]>)>>,
    params: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = params_from(params)?;
    let cams = unwrap_cameras(&cameras);
    let seg = match (masks, scribbles) {
        (Some(m), None) => {
            let m = masks_of(&m);
            run_segment(&mut scene.inner, &cams, Seeds::Masks(&m), &params)
        }
        (None, Some(s)) => {
            let s = scribbles_of(s);
            run_segment(&mut scene.inner, &cams, Seeds::Scribbles(&s), &params)
        }
        _ => return Err(SplatcutError::new_err("give exactly one of masks or scribbles")),
    }
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("labels", seg.partition.labels)?;
    out.set_item("weights", seg.weights)?;
    out.set_item("coarse", seg.coarse.labels)?;
    let summary = serde_json::to_string(&seg.summary).map_err(|e| SplatcutError::new_err(e.to_string()))?;
    out.set_item("summary", json_to_py(py, &summary)?)?;
    Ok(out)
}

/// Exact s-t min cut. Returns `(flow_value, labels)`; `True` is the source side.
#[pyfunction]
fn max_flow(src_cap: Vec<f64>, sink_cap: Vec<f64>, nlinks: Vec<(usize, usize, f64)>) -> PyResult<(f64, Vec<bool>)> {
    let graph = FlowGraph {
        n: src_cap.len(),
        src_cap,
        sink_cap,
        nlinks,
    };
    let p = solve(&graph).map_err(err)?;
    Ok((p.flow_value, p.labels))
}

/// Two-cluster test scene. Returns `(scene, truth_labels, cameras, masks)`.
#[pyfunction]
#[pyo3(signature = (n_per_cluster = 500, n_views = 8, mask_noise = 0.0, seed = 0, image_size = 96, focal = 150.0))]
fn synthetic_scene(
    n_per_cluster: usize,
    n_views: usize,
    mask_noise: f64,
    seed: u64,
    image_size: usize,
    focal: f64,
) -> PyResult<(Scene, Vec<bool>, Vec<Camera>, Vec<Mask>)> {
    let spec = SyntheticSpec {
        n_per_cluster,
        n_views,
        mask_noise,
        seed,
        image_size,
        focal,
        ..SyntheticSpec::default()
    };
    let (scene, truth) = make_two_cluster_scene(&spec).map_err(err)?;
    let cams = spec_cameras(&spec);
    let masks = make_gt_masks(&scene, &truth, &cams, mask_noise, seed).map_err(err)?;
    Ok((
        Scene { inner: scene },
        truth,
        wrap_cameras(cams),
        masks.into_iter().map(|inner| Mask { inner }).collect(),
    ))
}

#[pyfunction]
fn mask_metrics<'py>(py: Python<'py>, pred: &Mask, gt: &Mask) -> PyResult<Bound<'py, PyAny>> {
    let m = metrics::mask_metrics(&pred.inner, &gt.inner).map_err(err)?;
    json_to_py(py, &serde_json::to_string(&m).unwrap_or_default())
}

#[pyfunction]
fn label_iou(pred: Vec<bool>, gt: Vec<bool>) -> PyResult<f64> {
    if pred.len() != gt.len() {
        return Err(SplatcutError::new_err(format!("{} predicted labels vs {} truth labels", pred.len(), gt.len())));
    }
    Ok(metrics::label_iou(&pred, &gt))
}

#[pyfunction]
fn psnr(pred: &Image, gt: &Image) -> PyResult<f64> {
    if pred.inner.dims() != gt.inner.dims() {
        return Err(SplatcutError::new_err("image sizes differ"));
    }
    Ok(metrics::psnr(&pred.inner, &gt.inner))
}

#[pyfunction]
fn ssim(pred: &Image, gt: &Image) -> PyResult<f64> {
    if pred.inner.dims() != gt.inner.dims() {
        return Err(SplatcutError::new_err("image sizes differ"));
    }
    Ok(metrics::ssim(&pred.inner, &gt.inner))
}

/// `(psnr_db, ssim)` inside the bounding box of `gt_mask`.
#[pyfunction]
fn photometric(pred: &Image, gt: &Image, gt_mask: &Mask) -> PyResult<(f64, f64)> {
    let p = metrics::photometric(&pred.inner, &gt.inner, &gt_mask.inner).map_err(err)?;
    Ok((p.psnr_db, p.ssim))
}

/// Foreground mask of `labels` seen from `camera`.
#[pyfunction]
fn render_fg_mask(scene: &Scene, labels: Vec<bool>, camera: &Camera) -> PyResult<Mask> {
    Ok(Mask {
        inner: metrics::render_fg_mask(&scene.inner, &labels, &camera.inner).map_err(err)?,
    })
}

#[pymodule]
#[pyo3(name = "splatcut")]
fn splatcut_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SplatcutError", m.py().get_type::<SplatcutError>())?;
    m.add_class::<Scene>()?;
    m.add_class::<Camera>()?;
    m.add_class::<Mask>()?;
    m.add_class::<Image>()?;
    m.add_function(wrap_pyfunction!(load_cameras, m)?)?;
    m.add_function(wrap_pyfunction!(save_cameras, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_cameras, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(render_fg_mask, m)?)?;
    m.add_function(wrap_pyfunction!(default_params, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(coarse_splat, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(max_flow, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_scene, m)?)?;
    m.add_function(wrap_pyfunction!(mask_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(label_iou, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(photometric, m)?)?;
    Ok(())
}
