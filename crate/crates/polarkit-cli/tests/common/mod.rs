//! Shared fixtures and helpers for the CLI and acceptance tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polarkit::image::{Image, RawMosaic};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polarkit"))
}

pub fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().expect("spawn polarkit");
    assert!(
        out.status.success(),
        "polarkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn exit_code(args: &[&str], dir: &Path) -> i32 {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn polarkit")
        .status
        .code()
        .expect("exit code")
}

pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 33) as f64 / (1u64 << 31) as f64
    }
}

/// Smooth RGB blob scene with a constant border of `margin` pixels and a
/// mild high-frequency texture to give phase correlation a sharp peak.
pub fn blob_scene(w: usize, h: usize, seed: u64, margin: usize) -> Image {
    let mut rng = Lcg(seed);
    let mut data = vec![0.08; w * h * 3];
    let inner_w = (w - 2 * margin) as f64;
    let inner_h = (h - 2 * margin) as f64;
    for _ in 0..5 {
        let cx = margin as f64 + rng.next_f64() * inner_w;
        let cy = margin as f64 + rng.next_f64() * inner_h;
        let sigma = 10.0 + rng.next_f64() * (w as f64 / 10.0);
        let amp = [
            0.15 + 0.45 * rng.next_f64(),
            0.15 + 0.45 * rng.next_f64(),
            0.15 + 0.45 * rng.next_f64(),
        ];
        for y in 0..h {
            for x in 0..w {
                let d2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * sigma * sigma);
                if d2 < 20.0 {
                    let g = (-d2).exp();
                    for (c, &a) in amp.iter().enumerate() {
                        let i = (y * w + x) * 3 + c;
                        data[i] = (data[i] + a * g).min(0.93);
                    }
                }
            }
        }
    }
    for y in margin..h - margin {
        for x in margin..w - margin {
            let tex = 0.02 * (0.9 * x as f64).sin() * (0.8 * y as f64).cos();
            for c in 0..3 {
                let i = (y * w + x) * 3 + c;
                data[i] = (data[i] + tex).clamp(0.0, 0.95);
            }
        }
    }
    Image::from_vec(w, h, 3, data).unwrap()
}

/// Very smooth RGB scene (wide blobs, no texture): demosaicking is
/// near-exact on it, which isolates separation error from decode error.
pub fn smooth_scene(w: usize, h: usize, seed: u64, margin: usize) -> Image {
    let mut rng = Lcg(seed);
    let mut data = vec![0.08; w * h * 3];
    let inner_w = (w - 2 * margin) as f64;
    let inner_h = (h - 2 * margin) as f64;
    for _ in 0..4 {
        let cx = margin as f64 + rng.next_f64() * inner_w;
        let cy = margin as f64 + rng.next_f64() * inner_h;
        let sigma = w as f64 / 8.0 + rng.next_f64() * (w as f64 / 8.0);
        let amp = [
            0.1 + 0.3 * rng.next_f64(),
            0.1 + 0.3 * rng.next_f64(),
            0.1 + 0.3 * rng.next_f64(),
        ];
        for y in 0..h {
            for x in 0..w {
                let d2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * sigma * sigma);
                if d2 < 20.0 {
                    let g = (-d2).exp();
                    for (c, &a) in amp.iter().enumerate() {
                        let i = (y * w + x) * 3 + c;
                        data[i] = (data[i] + a * g).min(0.93);
                    }
                }
            }
        }
    }
    Image::from_vec(w, h, 3, data).unwrap()
}

/// Sharp-edged mono texture: random axis-aligned rectangles. Two seeds
/// give two images with structurally distinct edge sets.
pub fn rect_texture(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = Lcg(seed);
    let mut data = vec![0.1; w * h];
    for _ in 0..6 {
        let x0 = (rng.next_f64() * (w as f64 - 8.0)) as usize;
        let y0 = (rng.next_f64() * (h as f64 - 8.0)) as usize;
        let rw = 4 + (rng.next_f64() * (w as f64 / 3.0)) as usize;
        let rh = 4 + (rng.next_f64() * (h as f64 / 3.0)) as usize;
        let v = 0.2 + 0.7 * rng.next_f64();
        for y in y0..(y0 + rh).min(h) {
            for x in x0..(x0 + rw).min(w) {
                data[y * w + x] = v;
            }
        }
    }
    Image::from_vec(w, h, 1, data).unwrap()
}

/// Circularly shifts mosaic samples by `(dx, dy)`.
pub fn shift_mosaic(mosaic: &RawMosaic, dx: i64, dy: i64) -> RawMosaic {
    let (w, h) = (mosaic.width() as i64, mosaic.height() as i64);
    let mut samples = vec![0u16; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let sx = (x - dx).rem_euclid(w) as usize;
            let sy = (y - dy).rem_euclid(h) as usize;
            samples[(y * w + x) as usize] = mosaic.sample(sx, sy);
        }
    }
    RawMosaic::from_samples(mosaic.width(), mosaic.height(), mosaic.layout_id(), samples).unwrap()
}

/// Reads a key=value report into (key, value) pairs in file order.
pub fn read_report(path: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn report_value(report: &[(String, String)], key: &str) -> String {
    report
        .iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing key {key}"))
        .1
        .clone()
}

/// Recursively hashes a directory's file names and contents (FNV-1a).
pub fn dir_digest(dir: &Path) -> u64 {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    let mut hash = 0xcbf29ce484222325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for path in entries {
        eat(path.file_name().unwrap().to_string_lossy().as_bytes());
        if path.is_dir() {
            // Reports and images only; no nested dirs are produced.
            continue;
        }
        eat(&std::fs::read(&path).unwrap());
    }
    hash
}
