mod common;

use serde_json::Value;
use splatcut::harness::bench_params;
use splatcut::io::{decode_image, encode_image, load_splat_model, save_image, save_mask};
use splatcut::lift::coarse_splat;
use splatcut::mincut::Partition;
use splatcut::pipeline::{lift_weights, segment, SegmentParams, Seeds};
use splatcut::raster::render;
use splatcut::{Image, Mask};

use common::{p, splatcut, stderr, stdout, Fixture};

fn segment_args<'a>(f: &'a Fixture, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "segment",
        "--scene",
        &f.scene_path(),
        "--cameras",
        &f.cams_path(),
        "--masks",
        &f.masks_path(),
        "--out-fg",
        &p(&f.path("fg.ply")),
        "--out-bg",
        &p(&f.path("bg.ply")),
        "--labels",
        &p(&f.path("labels.txt")),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(args: &[String]) -> std::process::Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    splatcut(&refs)
}

#[test]
fn segment_writes_outputs_and_summary() {
    let f = Fixture::small();
    let out = run(&segment_args(&f, &["--zero-weight", "0.5"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let (n_fg, n_bg) = (summary["n_fg"].as_u64().unwrap() as usize, summary["n_bg"].as_u64().unwrap() as usize);
    assert_eq!(n_fg + n_bg, f.scene.count());
    let (cut, coarse) = (summary["energy_cut"].as_f64().unwrap(), summary["energy_coarse"].as_f64().unwrap());
    assert!(cut <= coarse + 1e-9 * coarse.max(1.0), "{cut} > {coarse}");
    assert_eq!(summary["params"]["k"], 10);
    assert_eq!(summary["params"]["lambda"], 0.5);
    assert_eq!(summary["params"]["zero_contribution_weight"], 0.5);
    for stage in ["lift", "graph", "cut", "total"] {
        assert!(summary["runtime_ms"][stage].is_number());
    }

    let labels = Partition::parse_labels(&std::fs::read_to_string(f.path("labels.txt")).unwrap()).unwrap();
    let mut scene = f.scene.clone();
    let seg = segment(&mut scene, &f.cams, Seeds::Masks(&f.masks), &bench_params()).unwrap();
    assert_eq!(labels, seg.partition.labels);
    assert_eq!(load_splat_model(f.path("fg.ply")).unwrap().count(), n_fg);
    assert_eq!(load_splat_model(f.path("bg.ply")).unwrap().count(), n_bg);
}

#[test]
fn coarse_only_matches_coarse_splat() {
    let f = Fixture::small();
    let out = run(&segment_args(&f, &["--coarse-only", "--tau", "0.9", "--zero-weight", "0"]));
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["energy_cut"].is_null());
    let labels = Partition::parse_labels(&std::fs::read_to_string(f.path("labels.txt")).unwrap()).unwrap();
    let mut scene = f.scene.clone();
    let w = lift_weights(&mut scene, &f.cams, Seeds::Masks(&f.masks), &SegmentParams::default().lift).unwrap();
    assert_eq!(labels, coarse_splat(&w, 0.9).labels);
}

#[test]
fn missing_mask_is_an_input_error() {
    let f = Fixture::small();
    std::fs::remove_file(f.path("masks").join("view_002.png")).unwrap();
    let out = run(&segment_args(&f, &[]));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("view_002"), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
}

#[test]
fn scribbles_file_drives_the_cut() {
    let f = Fixture::small();
    let cam = &f.cams[0];
    // fg on pixels covered by the true foreground mask, bg on background ones
    let m = &f.masks[0];
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for y in (0..cam.height).step_by(3) {
        for x in (0..cam.width).step_by(3) {
            if m.get(x, y) {
                fg.push([x, y]);
            } else {
                bg.push([x, y]);
            }
        }
    }
    let json = serde_json::json!([{"view_index": 0, "fg": fg, "bg": bg}]);
    std::fs::write(f.path("scribbles.json"), json.to_string()).unwrap();
    let args: Vec<String> = [
        "segment",
        "--scene",
        &f.scene_path(),
        "--cameras",
        &f.cams_path(),
        "--scribbles",
        &p(&f.path("scribbles.json")),
        "--out-fg",
        &p(&f.path("fg.ply")),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["n_fg"].as_u64().unwrap() > 0);

    let bad = serde_json::json!({"view_index": 9, "fg": [[0, 0]]});
    std::fs::write(f.path("scribbles.json"), bad.to_string()).unwrap();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("view index 9"), "{}", stderr(&out));
}

#[test]
fn render_modes_match_the_library() {
    let f = Fixture::small();
    let png = f.path("full.png");
    let base = ["render", "--scene", &f.scene_path(), "--cameras", &f.cams_path(), "--view", "1"];
    let mut args: Vec<&str> = base.to_vec();
    let png_s = p(&png);
    args.extend(["--out", &png_s]);
    let out = splatcut(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let want = encode_image(&render(&f.scene, &f.cams[1], None, [0.0; 3]));
    assert_eq!(std::fs::read(&png).unwrap(), want);

    let labels_path = f.path("truth.txt");
    std::fs::write(&labels_path, Partition::from_labels(f.truth.clone()).labels_text()).unwrap();
    let labels_s = p(&labels_path);
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--labels", &labels_s, "--side", "fg", "--out", &png_s]);
    assert!(splatcut(&args).status.success());
    let want = encode_image(&render(&f.scene, &f.cams[1], Some(&f.truth), [0.0; 3]));
    assert_eq!(std::fs::read(&png).unwrap(), want);

    // all background labels: the fg side draws nothing
    std::fs::write(&labels_path, Partition::from_labels(vec![false; f.scene.count()]).labels_text()).unwrap();
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--labels", &labels_s, "--side", "fg", "--background", "0.2,0.4,0.6", "--out", &png_s]);
    assert!(splatcut(&args).status.success());
    let img = decode_image(&std::fs::read(&png).unwrap()).unwrap();
    let bg = decode_image(&encode_image(&Image::filled(64, 64, [0.2, 0.4, 0.6]))).unwrap();
    assert_eq!(img, bg);

    let out = splatcut(&["render", "--scene", &f.scene_path(), "--cameras", &f.cams_path(), "--view", "4", "--out", &png_s]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("out of range"));
}

fn strip(rows: std::ops::Range<usize>) -> Mask {
    let mut m = Mask::new(4, 16, false);
    for y in rows {
        for x in 0..4 {
            m.bits[y * 4 + x] = true;
        }
    }
    m
}

fn json_lines(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn eval_masks_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    std::fs::create_dir(&a).unwrap();
    std::fs::create_dir(&b).unwrap();
    for (i, rows) in [(0, 0..10), (1, 3..9)] {
        save_mask(&strip(rows.clone()), a.join(format!("{i}.png"))).unwrap();
        save_mask(&strip(rows), b.join(format!("{i}.png"))).unwrap();
    }
    let out = splatcut(&["eval", "--pred-mask", &p(&a), "--gt-mask", &p(&b)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines = json_lines(&stdout(&out));
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2]["pair"], "mean");
    assert_eq!(lines[2]["iou"], 1.0);

    let (pm, gm) = (dir.path().join("pred.png"), dir.path().join("gt.png"));
    save_mask(&strip(0..10), &pm).unwrap();
    save_mask(&strip(5..15), &gm).unwrap();
    let out = splatcut(&["eval", "--pred-mask", &p(&pm), "--gt-mask", &p(&gm)]);
    let lines = json_lines(&stdout(&out));
    assert!((lines[0]["iou"].as_f64().unwrap() - 0.3333).abs() < 1e-4);
    assert_eq!((lines[0]["tp"].as_u64(), lines[0]["fn"].as_u64()), (Some(20), Some(20)));

    let img = dir.path().join("img.png");
    let mut im = Image::filled(4, 16, [0.3, 0.5, 0.7]);
    im.pixels[5] = [0.9, 0.1, 0.2];
    save_image(&im, &img).unwrap();
    let out = splatcut(&["eval", "--pred-img", &p(&img), "--gt-img", &p(&img), "--gt-mask", &p(&gm)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines = json_lines(&stdout(&out));
    assert_eq!(lines[0]["psnr_db"], "+inf");
    assert_eq!(lines[0]["ssim"], 1.0);

    std::fs::remove_file(b.join("1.png")).unwrap();
    save_mask(&strip(0..2), b.join("7.png")).unwrap();
    let out = splatcut(&["eval", "--pred-mask", &p(&a), "--gt-mask", &p(&b)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("lacks 1") && err.contains("lacks 7"), "{err}");
}

#[test]
fn bench_csv_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let small = [
        "--n-per-cluster", "40", "--image-size", "40", "--focal", "62.5", "--n-views", "3", "--seeds", "1", "--no-timing",
    ];
    let run_axis = |axis: &str, out: &str| {
        let mut args = vec!["bench", "--axis", axis, "--out", out];
        args.extend(small);
        let o = splatcut(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let csv1 = p(&dir.path().join("n1.csv"));
    let csv2 = p(&dir.path().join("n2.csv"));
    run_axis("neighbors", &csv1);
    run_axis("neighbors", &csv2);
    let text = std::fs::read_to_string(&csv1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&csv2).unwrap());
    let values = |t: &str| -> Vec<String> {
        t.lines()
            .skip(1)
            .filter(|l| l.split(',').nth(2) == Some("cut"))
            .map(|l| l.split(',').nth(1).unwrap().to_string())
            .collect()
    };
    assert_eq!(values(&text), ["1", "10", "50", "100"]);

    run_axis("clusters", &p(dir.path()));
    let text = std::fs::read_to_string(dir.path().join("ablation_clusters.csv")).unwrap();
    assert_eq!(values(&text), ["1", "5", "10", "20"]);

    let o = splatcut(&["bench", "--axis", "colour", "--out", &csv1]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}
