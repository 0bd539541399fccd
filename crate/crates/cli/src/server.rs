//! Single-session HTTP API over one loaded scene.
//!
//! Cuts are serialized by a mutex; the finished partition is swapped in as
//! one `Arc`, so readers see either the old cut or the new one.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use splatcut::io::{encode_image, load_masks_for, write_splat_model};
use splatcut::lift::Scribbles;
use splatcut::pipeline::{segment, SegmentParams, SegmentSummary, Seeds};
use splatcut::raster::{render, render_with, RenderOptions};
use splatcut::{Camera, Error, GaussianScene, Image, Mask, Side};
use tower_http::services::ServeDir;

use crate::args::ServeArgs;
use crate::commands::load_inputs;
use crate::CliError;

/// Tint applied to foreground pixels in overlay renders.
pub const OVERLAY_RGB: [f64; 3] = [1.0, 0.0, 0.0];
pub const OVERLAY_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Default)]
struct ViewScribbles {
    fg: BTreeSet<[usize; 2]>,
    bg: BTreeSet<[usize; 2]>,
}

/// A finished cut.
#[derive(Debug)]
pub struct CutState {
    pub generation: u64,
    pub labels: Vec<bool>,
    pub summary: SegmentSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Mode {
    Full,
    Fg,
    Bg,
    Overlay,
}

pub struct Session {
    scene: GaussianScene,
    cameras: Vec<Camera>,
    masks: Option<Vec<Mask>>,
    params: SegmentParams,
    scribbles: RwLock<Vec<ViewScribbles>>,
    current: RwLock<Option<Arc<CutState>>>,
    cut_lock: tokio::sync::Mutex<()>,
    /// PNG bytes keyed by (view, mode, generation); full renders use generation 0.
    cache: Mutex<HashMap<(usize, Mode, u64), Bytes>>,
}

impl Session {
    pub fn new(
        scene: GaussianScene,
        cameras: Vec<Camera>,
        masks: Option<Vec<Mask>>,
        params: SegmentParams,
    ) -> splatcut::Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidInput("refusing to serve a scene with no cameras".into()));
        }
        params.validate()?;
        if let Some(m) = &masks {
            if m.len() != cameras.len() {
                return Err(Error::InvalidInput(format!("{} masks for {} cameras", m.len(), cameras.len())));
            }
        }
        let n = cameras.len();
        Ok(Session {
            scene,
            cameras,
            masks,
            params,
            scribbles: RwLock::new(vec![ViewScribbles::default(); n]),
            current: RwLock::new(None),
            cut_lock: tokio::sync::Mutex::new(()),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn current(&self) -> Option<Arc<CutState>> {
        self.current.read().unwrap().clone()
    }

    /// Scribbles in view order, skipping empty views.
    pub fn scribble_list(&self) -> Vec<(usize, Scribbles)> {
        self.scribbles
            .read()
            .unwrap()
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.fg.is_empty() || !s.bg.is_empty())
            .map(|(i, s)| {
                (
                    i,
                    Scribbles {
                        fg: s.fg.iter().copied().collect(),
                        bg: s.bg.iter().copied().collect(),
                    },
                )
            })
            .collect()
    }
}

fn fail(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({"error": msg.into()}))).into_response()
}

#[derive(Serialize)]
struct ViewInfo<'a> {
    id: i64,
    img_name: &'a str,
    width: usize,
    height: usize,
}

async fn views(State(s): State<Arc<Session>>) -> Response {
    let list: Vec<ViewInfo> = s
        .cameras
        .iter()
        .map(|c| ViewInfo {
            id: c.id,
            img_name: &c.image_name,
            width: c.width,
            height: c.height,
        })
        .collect();
    Json(list).into_response()
}

async fn params(State(s): State<Arc<Session>>) -> Response {
    Json(s.params).into_response()
}

#[derive(Deserialize)]
struct RenderQuery {
    view: usize,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    overlay: Option<String>,
}

/// Full render with foreground coverage blended toward [`OVERLAY_RGB`].
pub fn overlay_image(scene: &GaussianScene, cam: &Camera, labels: &[bool]) -> Image {
    let mut img = render(scene, cam, None, [0.0; 3]);
    let colors: Vec<[f64; 3]> = labels.iter().map(|&l| if l { [1.0; 3] } else { [0.0; 3] }).collect();
    let coverage = render_with(
        scene,
        cam,
        RenderOptions {
            colors: Some(&colors),
            ..RenderOptions::default()
        },
    );
    for (p, c) in img.pixels.iter_mut().zip(&coverage.pixels) {
        let a = OVERLAY_ALPHA * c[0];
        for k in 0..3 {
            p[k] = p[k] * (1.0 - a) + OVERLAY_RGB[k] * a;
        }
    }
    img
}

async fn render_view(State(s): State<Arc<Session>>, Query(q): Query<RenderQuery>) -> Response {
    if q.view >= s.cameras.len() {
        return fail(StatusCode::NOT_FOUND, format!("unknown view {}", q.view));
    }
    let overlay = match q.overlay.as_deref() {
        None | Some("0") | Some("false") => false,
        Some("1") | Some("true") => true,
        Some(other) => return fail(StatusCode::BAD_REQUEST, format!("overlay must be 0 or 1, got '{other}'")),
    };
    let mode = match (q.mode.as_deref().unwrap_or("full"), overlay) {
        (_, true) => Mode::Overlay,
        ("full", _) => Mode::Full,
        ("fg", _) => Mode::Fg,
        ("bg", _) => Mode::Bg,
        (other, _) => return fail(StatusCode::BAD_REQUEST, format!("unknown mode '{other}' (full|fg|bg)")),
    };
    let cut = s.current();
    let generation = match (mode, &cut) {
        (Mode::Full, _) => 0,
        (_, Some(c)) => c.generation,
        (_, None) => return fail(StatusCode::CONFLICT, "no cut yet; POST /api/cut first"),
    };
    let key = (q.view, mode, generation);
    if let Some(png) = s.cache.lock().unwrap().get(&key) {
        return png_response(png.clone());
    }
    let session = s.clone();
    let job = tokio::task::spawn_blocking(move || {
        let cam = &session.cameras[q.view];
        let img = match (mode, cut.as_deref()) {
            (Mode::Full, _) => render(&session.scene, cam, None, [0.0; 3]),
            (Mode::Overlay, Some(c)) => overlay_image(&session.scene, cam, &c.labels),
            (side, Some(c)) => {
                let want_fg = side == Mode::Fg;
                let include: Vec<bool> = c.labels.iter().map(|&l| l == want_fg).collect();
                render(&session.scene, cam, Some(&include), [0.0; 3])
            }
            (_, None) => unreachable!("checked above"),
        };
        Bytes::from(encode_image(&img))
    });
    match job.await {
        Ok(png) => {
            s.cache.lock().unwrap().insert(key, png.clone());
            png_response(png)
        }
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

fn png_response(png: Bytes) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], png).into_response()
}

#[derive(Deserialize)]
struct ScribbleRequest {
    view: usize,
    #[serde(default)]
    fg: Vec<[i64; 2]>,
    #[serde(default)]
    bg: Vec<[i64; 2]>,
    #[serde(default)]
    replace: bool,
}

fn counts(all: &[ViewScribbles]) -> Value {
    let list: Vec<Value> = all
        .iter()
        .enumerate()
        .map(|(i, v)| json!({"view": i, "fg": v.fg.len(), "bg": v.bg.len()}))
        .collect();
    json!({ "counts": list })
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, Response> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| fail(StatusCode::BAD_REQUEST, format!("bad JSON body: {e}")))
}

impl Default for ScribbleRequest {
    fn default() -> Self {
        ScribbleRequest {
            view: usize::MAX,
            fg: Vec::new(),
            bg: Vec::new(),
            replace: false,
        }
    }
}

/// Later pixels win: a pixel added as bg leaves the fg set and vice versa,
/// with this request's fg list applied before its bg list.
async fn post_scribbles(State(s): State<Arc<Session>>, body: Bytes) -> Response {
    let req: ScribbleRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let Some(cam) = s.cameras.get(req.view) else {
        return fail(StatusCode::NOT_FOUND, format!("unknown view {}", req.view));
    };
    let check = |px: &[i64; 2]| -> Result<[usize; 2], Response> {
        let [x, y] = *px;
        if x < 0 || y < 0 || x as usize >= cam.width || y as usize >= cam.height {
            return Err(fail(
                StatusCode::BAD_REQUEST,
                format!("coordinate ({x}, {y}) outside the {}x{} view", cam.width, cam.height),
            ));
        }
        Ok([x as usize, y as usize])
    };
    let fg = match req.fg.iter().map(check).collect::<Result<Vec<_>, _>>() {
        Ok(v) => v,
        Err(r) => return r,
    };
    let bg = match req.bg.iter().map(check).collect::<Result<Vec<_>, _>>() {
        Ok(v) => v,
        Err(r) => return r,
    };
    let mut all = s.scribbles.write().unwrap();
    let view = &mut all[req.view];
    if req.replace {
        *view = ViewScribbles::default();
    }
    for p in fg {
        view.bg.remove(&p);
        view.fg.insert(p);
    }
    for p in bg {
        view.fg.remove(&p);
        view.bg.insert(p);
    }
    Json(counts(&all)).into_response()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Source {
    #[default]
    Scribbles,
    Masks,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct CutRequest {
    params: Map<String, Value>,
    source: Source,
}

/// Session parameters with `overrides` applied; unknown keys are rejected.
fn merge_params(base: &SegmentParams, overrides: &Map<String, Value>) -> Result<SegmentParams, String> {
    let Value::Object(mut merged) = serde_json::to_value(base).map_err(|e| e.to_string())? else {
        unreachable!("params serialize to an object")
    };
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            let known: Vec<&str> = merged.keys().map(String::as_str).collect();
            return Err(format!("unknown parameter '{k}' (known: {})", known.join(", ")));
        }
        merged.insert(k.clone(), v.clone());
    }
    let params: SegmentParams = serde_json::from_value(Value::Object(merged)).map_err(|e| e.to_string())?;
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn summary_json(state: &CutState) -> Value {
    let mut v = serde_json::to_value(&state.summary).unwrap_or_default();
    if let Value::Object(m) = &mut v {
        m.insert("generation".into(), json!(state.generation));
    }
    v
}

async fn post_cut(State(s): State<Arc<Session>>, body: Bytes) -> Response {
    let Ok(_guard) = s.cut_lock.try_lock() else {
        return fail(StatusCode::CONFLICT, "a cut is already running");
    };
    let req: CutRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let params = match merge_params(&s.params, &req.params) {
        Ok(p) => p,
        Err(msg) => return fail(StatusCode::BAD_REQUEST, msg),
    };
    let scribbles = s.scribble_list();
    match req.source {
        Source::Scribbles if scribbles.is_empty() => {
            return fail(StatusCode::UNPROCESSABLE_ENTITY, "no scribbles; POST /api/scribbles first")
        }
        Source::Masks if s.masks.is_none() => {
            return fail(StatusCode::UNPROCESSABLE_ENTITY, "server was started without --masks")
        }
        _ => {}
    }
    let session = s.clone();
    let job = tokio::task::spawn_blocking(move || {
        let mut scene = session.scene.clone();
        let seeds = match (req.source, &session.masks) {
            (Source::Masks, Some(m)) => Seeds::Masks(m),
            _ => Seeds::Scribbles(&scribbles),
        };
        segment(&mut scene, &session.cameras, seeds, &params)
    });
    let seg = match job.await {
        Ok(Ok(seg)) => seg,
        Ok(Err(e)) => return fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e) => return fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let state = {
        let mut current = s.current.write().unwrap();
        let generation = current.as_ref().map_or(0, |c| c.generation) + 1;
        let state = Arc::new(CutState {
            generation,
            labels: seg.partition.labels,
            summary: seg.summary,
        });
        *current = Some(state.clone());
        state
    };
    s.cache.lock().unwrap().retain(|k, _| k.2 == 0);
    Json(summary_json(&state)).into_response()
}

#[derive(Deserialize)]
struct ExportQuery {
    side: String,
}

async fn export(State(s): State<Arc<Session>>, Query(q): Query<ExportQuery>) -> Response {
    let side = match q.side.as_str() {
        "fg" => Side::Fg,
        "bg" => Side::Bg,
        other => return fail(StatusCode::BAD_REQUEST, format!("unknown side '{other}' (fg|bg)")),
    };
    let Some(cut) = s.current() else {
        return fail(StatusCode::CONFLICT, "no cut yet; POST /api/cut first");
    };
    let mut buf = Vec::new();
    match write_splat_model(&s.scene, &cut.labels, side, &mut buf) {
        Ok(_) => (
            [
                (header::CONTENT_TYPE, "application/octet-stream".to_string()),
                (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{}.ply\"", q.side)),
            ],
            buf,
        )
            .into_response(),
        Err(Error::EmptySelection) => fail(StatusCode::UNPROCESSABLE_ENTITY, format!("the {} side is empty", q.side)),
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(session: Arc<Session>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/views", get(views))
        .route("/api/params", get(params))
        .route("/api/render", get(render_view))
        .route("/api/scribbles", post(post_scribbles))
        .route("/api/cut", post(post_cut))
        .route("/api/export", get(export))
        .with_state(session);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let (scene, cams) = load_inputs(&args.scene, &args.cameras)?;
    let masks = match &args.masks {
        Some(dir) => Some(load_masks_for(dir, &cams)?),
        None => None,
    };
    let session = Arc::new(Session::new(scene, cams, masks, args.params.to_params(0.0))?);
    let app = router(session, args.ui_dir.clone());
    let addr = SocketAddr::new(args.host, args.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::input(format!("cannot bind {addr}: {e}")))?;
        eprintln!("serving on http://{addr}");
        axum::serve(listener, app).await.map_err(|e| CliError::Internal(e.to_string()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    use axum::body::Body;
    use axum::http::Request;
    use tower::ServiceExt;

    fn tiny_session() -> Arc<Session> {
        use splatcut::harness::{make_gt_masks, make_two_cluster_scene, spec_cameras, SyntheticSpec};
        let spec = SyntheticSpec {
            n_per_cluster: 60,
            image_size: 32,
            focal: 50.0,
            n_views: 2,
            ..SyntheticSpec::default()
        };
        let (scene, truth) = make_two_cluster_scene(&spec).unwrap();
        let cams = spec_cameras(&spec);
        let masks = make_gt_masks(&scene, &truth, &cams, 0.0, 0).unwrap();
        let params = splatcut::harness::bench_params();
        Arc::new(Session::new(scene, cams, Some(masks), params).unwrap())
    }

    async fn status_and_body(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, Bytes) {
        let req = Request::builder().method(method).uri(uri).body(Body::from(body.to_string())).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        use http_body_util::BodyExt;
        (status, resp.into_body().collect().await.unwrap().to_bytes())
    }

    #[tokio::test]
    async fn busy_cut_is_rejected_and_readers_see_the_old_partition() {
        let s = tiny_session();
        let app = router(s.clone(), None);
        let cut = r#"{"source": "masks"}"#;
        assert_eq!(status_and_body(&app, "POST", "/api/cut", cut).await.0, StatusCode::OK);
        let before = status_and_body(&app, "GET", "/api/render?view=0&mode=fg", "").await;

        let held = s.cut_lock.lock().await;
        let (status, _) = status_and_body(&app, "POST", "/api/cut", cut).await;
        assert_eq!(status, StatusCode::CONFLICT);
        assert_eq!(status_and_body(&app, "GET", "/api/render?view=0&mode=fg", "").await, before);
        assert_eq!(s.current().unwrap().generation, 1);
        drop(held);

        assert_eq!(status_and_body(&app, "POST", "/api/cut", cut).await.0, StatusCode::OK);
        assert_eq!(s.current().unwrap().generation, 2);
        // stale renders were dropped from the cache
        assert!(s.cache.lock().unwrap().keys().all(|k| k.2 == 0));
    }

    #[test]
    fn overrides_merge_and_reject_unknown_keys() {
        let base = SegmentParams::default();
        let mut o = Map::new();
        o.insert("k".into(), json!(4));
        o.insert("coarse_only".into(), json!(true));
        let p = merge_params(&base, &o).unwrap();
        assert_eq!((p.cut.k, p.coarse_only, p.cut.lambda), (4, true, 0.5));
        o.insert("lamda".into(), json!(1.0));
        assert!(merge_params(&base, &o).unwrap_err().contains("lamda"));
        let mut bad = Map::new();
        bad.insert("tau".into(), json!(3.0));
        assert!(merge_params(&base, &bad).is_err());
    }
}
