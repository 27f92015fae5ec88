#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stereobench::io::save_image;
use stereobench_core::synth::natural_image;
use stereobench_core::Image8;

pub fn write_pair(dir: &Path, id: &str, left: &Image8, right: &Image8) {
    std::fs::create_dir_all(dir).unwrap();
    save_image(left, &dir.join(format!("{id}_L.png"))).unwrap();
    save_image(right, &dir.join(format!("{id}_R.png"))).unwrap();
}

/// Scenes `0001..=n` of `h x w` synthetic texture.
pub fn hr_fixture(dir: &Path, n: u32, h: usize, w: usize) {
    for i in 1..=n {
        write_pair(
            dir,
            &format!("{i:04}"),
            &natural_image(h, w, 2 * i),
            &natural_image(h, w, 2 * i + 1),
        );
    }
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn stereobench(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_stereobench"))
        .args(args)
        .output()
        .unwrap();
    Run {
        code: status.code().expect("exited normally"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn pngs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    v.sort();
    v
}
