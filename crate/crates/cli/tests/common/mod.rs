#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splatcut::harness::{make_gt_masks, make_two_cluster_scene, spec_cameras, SyntheticSpec};
use splatcut::io::{save_cameras, save_mask, stem, write_selection};
use splatcut::{Camera, GaussianScene, Mask};

/// Two-cluster scene written to a temp dir as PLY, cameras.json and masks/.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub spec: SyntheticSpec,
    pub scene: GaussianScene,
    pub truth: Vec<bool>,
    pub cams: Vec<Camera>,
    pub masks: Vec<Mask>,
}

impl Fixture {
    pub fn new(spec: SyntheticSpec) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let (scene, truth) = make_two_cluster_scene(&spec).unwrap();
        let cams = spec_cameras(&spec);
        let masks = make_gt_masks(&scene, &truth, &cams, spec.mask_noise, spec.seed).unwrap();
        let mut ply = Vec::new();
        write_selection(&scene, |_| true, &mut ply).unwrap();
        std::fs::write(dir.path().join("scene.ply"), ply).unwrap();
        save_cameras(&cams, dir.path().join("cameras.json")).unwrap();
        std::fs::create_dir(dir.path().join("masks")).unwrap();
        for (c, m) in cams.iter().zip(&masks) {
            save_mask(m, dir.path().join("masks").join(format!("{}.png", stem(&c.image_name)))).unwrap();
        }
        Fixture {
            dir,
            spec,
            scene,
            truth,
            cams,
            masks,
        }
    }

    pub fn small() -> Fixture {
        Fixture::new(SyntheticSpec {
            n_per_cluster: 150,
            image_size: 64,
            focal: 100.0,
            n_views: 4,
            ..SyntheticSpec::default()
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn scene_path(&self) -> String {
        self.path("scene.ply").display().to_string()
    }

    pub fn cams_path(&self) -> String {
        self.path("cameras.json").display().to_string()
    }

    pub fn masks_path(&self) -> String {
        self.path("masks").display().to_string()
    }
}

pub fn splatcut(args: &[&str]) -> Output {
    splatcut_env(args, &[])
}

pub fn splatcut_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_splatcut"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}
