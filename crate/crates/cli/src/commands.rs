//! Batch subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};
use splatcut::harness::{run_sweep, sweep_csv, UNSEEN_WEIGHT};
use splatcut::io::{
    decode_mask, load_cameras, load_image, load_masks_for, load_splat_model, save_image, save_splat_model,
};
use splatcut::lift::Scribbles;
use splatcut::metrics::{mask_metrics, photometric, MaskMetrics, Photometric};
use splatcut::mincut::Partition;
use splatcut::pipeline::{segment as run_segment, Seeds};
use splatcut::raster::render as render_view;
use splatcut::{Camera, Error, GaussianScene, Mask, Side};

use crate::args::{BenchArgs, EvalArgs, RenderArgs, SegmentArgs};
use crate::CliError;

fn emit(out: &mut dyn Write, line: &Value) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Internal(e.to_string()))
}

/// Scene plus cameras, refusing an empty camera list.
pub fn load_inputs(scene: &Path, cameras: &Path) -> Result<(GaussianScene, Vec<Camera>), CliError> {
    let scene = load_splat_model(scene)?;
    let cams = load_cameras(cameras)?;
    if cams.is_empty() {
        return Err(CliError::input("cameras file lists no cameras"));
    }
    Ok((scene, cams))
}

#[derive(Debug, Deserialize)]
struct ScribbleRecord {
    view_index: usize,
    #[serde(default)]
    fg: Vec<[usize; 2]>,
    #[serde(default)]
    bg: Vec<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScribbleFile {
    One(ScribbleRecord),
    Many(Vec<ScribbleRecord>),
}

/// `{view_index, fg: [[x, y]…], bg: [[x, y]…]}`, alone or in an array.
pub fn parse_scribbles(json: &str) -> splatcut::Result<Vec<(usize, Scribbles)>> {
    let file: ScribbleFile =
        serde_json::from_str(json).map_err(|e| Error::InvalidInput(format!("scribbles file: {e}")))?;
    let records = match file {
        ScribbleFile::One(r) => vec![r],
        ScribbleFile::Many(rs) => rs,
    };
    Ok(records
        .into_iter()
        .map(|r| (r.view_index, Scribbles { fg: r.fg, bg: r.bg }))
        .collect())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        CliError::Input(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| {
        CliError::Input(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

pub fn segment(args: &SegmentArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (mut scene, cams) = load_inputs(&args.scene, &args.cameras)?;
    let params = args.params.to_params(0.0);
    let seg = match (&args.masks, &args.scribbles) {
        (Some(dir), _) => {
            let masks = load_masks_for(dir, &cams)?;
            run_segment(&mut scene, &cams, Seeds::Masks(&masks), &params)?
        }
        (None, Some(path)) => {
            let scribbles = parse_scribbles(&read_text(path)?)?;
            run_segment(&mut scene, &cams, Seeds::Scribbles(&scribbles), &params)?
        }
        (None, None) => return Err(CliError::input("one of --masks or --scribbles is required")),
    };
    let labels = &seg.partition.labels;
    if let Some(path) = &args.labels {
        write_text(path, &seg.partition.labels_text())?;
    }
    save_splat_model(&scene, labels, Side::Fg, &args.out_fg)?;
    if let Some(path) = &args.out_bg {
        save_splat_model(&scene, labels, Side::Bg, path)?;
    }
    let summary = serde_json::to_string_pretty(&seg.summary).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out, "{summary}").map_err(|e| CliError::Internal(e.to_string()))
}

pub fn render(args: &RenderArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (scene, cams) = load_inputs(&args.scene, &args.cameras)?;
    let cam = cams.get(args.view).ok_or_else(|| {
        CliError::input(format!("view {} out of range ({} cameras)", args.view, cams.len()))
    })?;
    let include = match &args.labels {
        Some(path) => {
            let labels = Partition::parse_labels(&read_text(path)?)?;
            if labels.len() != scene.count() {
                return Err(CliError::input(format!(
                    "labels file has {} entries, scene has {} Gaussians",
                    labels.len(),
                    scene.count()
                )));
            }
            Some(labels.iter().map(|&l| args.side.selects(l)).collect::<Vec<bool>>())
        }
        None => None,
    };
    let img = render_view(&scene, cam, include.as_deref(), args.background);
    save_image(&img, &args.out)?;
    emit(out, &json!({"out": args.out, "width": img.width, "height": img.height}))
}

fn png_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| {
        CliError::Input(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })?;
    let mut stems = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Internal(e.to_string()))?.path();
        let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if path.is_file() && is_png {
            if let Some(s) = path.file_stem() {
                stems.insert(s.to_string_lossy().into_owned(), path);
            }
        }
    }
    Ok(stems)
}

/// Pairs files across `paths` (all files, or all directories matched by stem).
fn pair_up(paths: &[&Path]) -> Result<Vec<(String, Vec<PathBuf>)>, CliError> {
    if paths.iter().all(|p| p.is_file()) {
        let name = paths[0]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![(name, paths.iter().map(|p| p.to_path_buf()).collect())]);
    }
    if !paths.iter().all(|p| p.is_dir()) {
        let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::input(format!(
            "expected all files or all directories: {}",
            list.join(", ")
        )));
    }
    let maps = paths.iter().map(|p| png_stems(p)).collect::<Result<Vec<_>, _>>()?;
    let mut unmatched = Vec::new();
    for (p, m) in paths.iter().zip(&maps) {
        let missing: Vec<&str> = maps
            .iter()
            .flat_map(|o| o.keys())
            .filter(|s| !m.contains_key(*s))
            .map(String::as_str)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if !missing.is_empty() {
            unmatched.push(format!("{} lacks {}", p.display(), missing.join(", ")));
        }
    }
    if !unmatched.is_empty() {
        return Err(CliError::input(format!("unmatched stems: {}", unmatched.join("; "))));
    }
    if maps[0].is_empty() {
        return Err(CliError::input(format!("no PNG files in {}", paths[0].display())));
    }
    Ok(maps[0]
        .keys()
        .map(|s| (s.clone(), maps.iter().map(|m| m[s].clone()).collect()))
        .collect())
}

fn read_mask(path: &Path) -> Result<Mask, CliError> {
    let bytes = fs::read(path).map_err(|e| {
        CliError::Input(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(decode_mask(&bytes)?)
}

/// `+inf` for identical images, since JSON has no infinity.
fn psnr_json(v: f64) -> Value {
    if v.is_infinite() {
        json!(if v > 0.0 { "+inf" } else { "-inf" })
    } else {
        json!(v)
    }
}

fn mask_line(name: &str, m: &MaskMetrics) -> Value {
    json!({"pair": name, "iou": m.iou, "accuracy": m.accuracy, "tp": m.tp, "fp": m.fp, "fn": m.fn_, "tn": m.tn})
}

fn photo_line(name: &str, p: &Photometric) -> Value {
    json!({"pair": name, "psnr_db": psnr_json(p.psnr_db), "ssim": p.ssim})
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    match (&args.pred_mask, &args.pred_img, &args.gt_img) {
        (Some(pred), None, None) => {
            let pairs = pair_up(&[pred, &args.gt_mask])?;
            let (mut iou, mut acc) = (0.0, 0.0);
            for (name, files) in &pairs {
                let m = mask_metrics(&read_mask(&files[0])?, &read_mask(&files[1])?)?;
                iou += m.iou;
                acc += m.accuracy;
                emit(out, &mask_line(name, &m))?;
            }
            let n = pairs.len() as f64;
            emit(out, &json!({"pair": "mean", "n": pairs.len(), "iou": iou / n, "accuracy": acc / n}))
        }
        (None, Some(pred), Some(gt)) => {
            let pairs = pair_up(&[pred, gt, &args.gt_mask])?;
            let (mut psnr, mut ssim) = (0.0, 0.0);
            for (name, files) in &pairs {
                let p = photometric(&load_image(&files[0])?, &load_image(&files[1])?, &read_mask(&files[2])?)?;
                psnr += p.psnr_db;
                ssim += p.ssim;
                emit(out, &photo_line(name, &p))?;
            }
            let n = pairs.len() as f64;
            emit(out, &json!({"pair": "mean", "n": pairs.len(), "psnr_db": psnr_json(psnr / n), "ssim": ssim / n}))
        }
        _ => Err(CliError::input("give --pred-mask, or both --pred-img and --gt-img")),
    }
}

pub fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.seeds == 0 {
        return Err(CliError::input("--seeds must be >= 1"));
    }
    let spec = args.spec.to_spec(args.seed);
    spec.validate()?;
    let params = args.params.to_params(UNSEEN_WEIGHT);
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let rows = run_sweep(args.axis, &spec, &params, &seeds, !args.no_timing)?;
    let path = if args.out.is_dir() {
        args.out.join(format!("ablation_{}.csv", args.axis.name()))
    } else {
        args.out.clone()
    };
    write_text(&path, &sweep_csv(&rows))?;
    emit(out, &json!({"out": path, "axis": args.axis.name(), "rows": rows.len()}))
}
