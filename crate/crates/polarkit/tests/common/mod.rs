//! Shared fixture generators for the oracle tests.

use polarkit::image::Image;

/// Deterministic xorshift; good enough for fixture layout choices.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 33) as f64 / (1u64 << 31) as f64
    }
}

/// Smooth RGB test scene: a stack of Gaussian bumps over a low base
/// level, confined to the interior so a `margin`-wide border stays flat.
pub fn blob_scene(w: usize, h: usize, seed: u64, margin: usize) -> Image {
    let mut rng = Lcg(seed);
    let mut data = vec![0.08; w * h * 3];
    let inner_w = (w - 2 * margin) as f64;
    let inner_h = (h - 2 * margin) as f64;
    for _ in 0..5 {
        let cx = margin as f64 + rng.next_f64() * inner_w;
        let cy = margin as f64 + rng.next_f64() * inner_h;
        let sigma = 6.0 + rng.next_f64() * (w as f64 / 12.0);
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
                    for c in 0..3 {
                        data[(y * w + x) * 3 + c] += amp[c] * g;
                    }
                }
            }
        }
    }
    // Keep the scene inside [0, 1] so 16-bit rendering never clips.
    for v in &mut data {
        *v = v.min(0.95);
    }
    Image::from_vec(w, h, 3, data).unwrap()
}
