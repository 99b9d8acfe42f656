//! Quantitative losses and image quality metrics.
//!
//! The training-style losses are L1, total variation (L1 on forward-
//! difference gradients), and a Fourier-phase loss; the evaluation
//! metrics are PSNR and single-scale SSIM. Weighted aggregates combine
//! them per training stage.
//!
//! The phase loss compares only the *angles* of the DFT coefficients, so
//! it is invariant to global positive rescaling — the testable form of
//! "phase captures structure, amplitude captures color". Angle
//! differences wrap at the ±pi branch cut; the loss uses the wrapped
//! distance in `[0, pi]`, and frequencies whose magnitude is numerically
//! zero in either image are excluded because their phase is noise.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{fft_2d, next_power_of_two};
use crate::image::Image;

/// DFT coefficients below this magnitude carry no meaningful phase.
pub const PHASE_MAGNITUDE_FLOOR: f64 = 1e-9;

/// Mean absolute difference.
pub fn l1(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_geometry(b, "l1")?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y).abs()).sum();
    Ok(sum / a.data().len() as f64)
}

/// Mean L1 difference of forward-difference gradients.
///
/// The x-gradient stack excludes the last column, the y-gradient stack
/// the last row; the mean runs over both stacks and all channels.
/// Invariant to constant offsets between the images.
pub fn tv_loss(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_geometry(b, "tv_loss")?;
    if a.width() < 2 || a.height() < 2 {
        return Err(Error::Usage("tv_loss needs at least 2x2 images".into()));
    }
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..ch {
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    let ga = a.get(x + 1, y, c) - a.get(x, y, c);
                    let gb = b.get(x + 1, y, c) - b.get(x, y, c);
                    sum += (ga - gb).abs();
                    count += 1;
                }
                if y + 1 < h {
                    let ga = a.get(x, y + 1, c) - a.get(x, y, c);
                    let gb = b.get(x, y + 1, c) - b.get(x, y, c);
                    sum += (ga - gb).abs();
                    count += 1;
                }
            }
        }
    }
    Ok(sum / count as f64)
}

fn padded_spectrum(img: &Image, c: usize, pw: usize, ph: usize) -> Vec<Complex64> {
    let mut data = vec![Complex64::default(); pw * ph];
    for y in 0..img.height() {
        for x in 0..img.width() {
            data[y * pw + x] = Complex64::new(img.get(x, y, c), 0.0);
        }
    }
    fft_2d(&mut data, pw, ph);
    data
}

/// Mean wrapped difference of Fourier-phase angles, in `[0, pi]`.
///
/// Each channel is zero-padded to the next power of two per side before
/// the transform; channel means are averaged. Identical images score 0,
/// as does any global positive rescaling; spatial shifts add a linear
/// phase ramp and score strictly positive.
pub fn phase_loss(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_geometry(b, "phase_loss")?;
    let (pw, ph) = (next_power_of_two(a.width()), next_power_of_two(a.height()));
    let mut channel_means = Vec::with_capacity(a.channels());
    for c in 0..a.channels() {
        let fa = padded_spectrum(a, c, pw, ph);
        let fb = padded_spectrum(b, c, pw, ph);
        let mut sum = 0.0;
        let mut count = 0usize;
        for (va, vb) in fa.iter().zip(&fb) {
            if va.norm() < PHASE_MAGNITUDE_FLOOR || vb.norm() < PHASE_MAGNITUDE_FLOOR {
                continue;
            }
            let mut d = (va.arg() - vb.arg()).rem_euclid(std::f64::consts::TAU);
            if d > std::f64::consts::PI {
                d = std::f64::consts::TAU - d;
            }
            sum += d;
            count += 1;
        }
        if count > 0 {
            channel_means.push(sum / count as f64);
        }
    }
    if channel_means.is_empty() {
        return Ok(0.0);
    }
    Ok(channel_means.iter().sum::<f64>() / channel_means.len() as f64)
}

/// Peak signal-to-noise ratio in dB; identical images return `+inf`.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    a.require_same_geometry(b, "psnr")?;
    if !peak.is_finite() || peak <= 0.0 {
        return Err(Error::Usage(format!("psnr peak must be positive, got {peak}")));
    }
    let mse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// SSIM window radius (11 taps) and Gaussian sigma.
const SSIM_RADIUS: usize = 5;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Single-scale SSIM with the standard 11x11 Gaussian window
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.0), averaged over
/// fully valid window positions, then over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_geometry(b, "ssim")?;
    let window = 2 * SSIM_RADIUS + 1;
    if a.width() < window || a.height() < window {
        return Err(Error::Usage(format!(
            "ssim needs at least {window}x{window} images, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let kernel = gaussian_kernel_2d();
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let (w, h, ch) = (a.width(), a.height(), a.channels());

    let mut channel_sum = 0.0;
    for c in 0..ch {
        let mut sum = 0.0;
        let mut count = 0usize;
        for y in SSIM_RADIUS..h - SSIM_RADIUS {
            for x in SSIM_RADIUS..w - SSIM_RADIUS {
                let (mut ma, mut mb) = (0.0, 0.0);
                let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
                let mut k = 0usize;
                for dy in 0..window {
                    for dx in 0..window {
                        let weight = kernel[k];
                        k += 1;
                        let va = a.get(x + dx - SSIM_RADIUS, y + dy - SSIM_RADIUS, c);
                        let vb = b.get(x + dx - SSIM_RADIUS, y + dy - SSIM_RADIUS, c);
                        ma += weight * va;
                        mb += weight * vb;
                        saa += weight * va * va;
                        sbb += weight * vb * vb;
                        sab += weight * va * vb;
                    }
                }
                let var_a = saa - ma * ma;
                let var_b = sbb - mb * mb;
                let cov = sab - ma * mb;
                let value = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
                sum += value;
                count += 1;
            }
        }
        channel_sum += sum / count as f64;
    }
    Ok(channel_sum / ch as f64)
}

fn gaussian_kernel_2d() -> Vec<f64> {
    let window = 2 * SSIM_RADIUS + 1;
    let mut kernel = Vec::with_capacity(window * window);
    let denom = 2.0 * SSIM_SIGMA * SSIM_SIGMA;
    for dy in 0..window {
        for dx in 0..window {
            let rx = dx as f64 - SSIM_RADIUS as f64;
            let ry = dy as f64 - SSIM_RADIUS as f64;
            kernel.push((-(rx * rx + ry * ry) / denom).exp());
        }
    }
    let total: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= total;
    }
    kernel
}

/// Weights of the stage losses; a zero weight disables the term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// L1 term.
    pub gamma1: f64,
    /// Perceptual slot; contributes only through a caller-supplied
    /// callback, since perceptual losses need a learned network.
    pub gamma2: f64,
    /// Total-variation term.
    pub gamma3: f64,
    /// Fourier-phase term.
    pub gamma4: f64,
    /// Diffusion term (stage 2).
    pub gamma5: f64,
    /// Reconstruction term (stage 2).
    pub gamma6: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { gamma1: 1.0, gamma2: 0.0, gamma3: 0.1, gamma4: 0.1, gamma5: 1.0, gamma6: 1.0 }
    }
}

impl LossWeights {
    fn validate(&self) -> Result<()> {
        let all = [self.gamma1, self.gamma2, self.gamma3, self.gamma4, self.gamma5, self.gamma6];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Usage(format!("loss weights must be finite and >= 0: {all:?}")));
        }
        Ok(())
    }
}

/// Caller-supplied perceptual metric slot.
pub type PerceptualFn<'a> = &'a dyn Fn(&Image, &Image) -> f64;

/// One weighted term of a stage loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerm {
    pub name: &'static str,
    pub raw: f64,
    pub weight: f64,
    pub weighted: f64,
}

/// Total stage loss plus its per-term breakdown.
#[derive(Debug, Clone)]
pub struct StageLoss {
    pub total: f64,
    pub terms: Vec<LossTerm>,
}

fn term(name: &'static str, raw: f64, weight: f64) -> LossTerm {
    LossTerm { name, raw, weight, weighted: weight * raw }
}

/// Stage-1 supervision: `gamma1 L1 + gamma2 perceptual + gamma3 TV +
/// gamma4 phase` between a prediction and its target.
///
/// The perceptual term is 0 unless a callback is supplied.
pub fn stage1_loss(
    prediction: &Image,
    target: &Image,
    weights: &LossWeights,
    perceptual: Option<PerceptualFn>,
) -> Result<StageLoss> {
    weights.validate()?;
    let l1_raw = l1(prediction, target)?;
    let tv_raw = if weights.gamma3 > 0.0 { tv_loss(prediction, target)? } else { 0.0 };
    let phase_raw = if weights.gamma4 > 0.0 { phase_loss(prediction, target)? } else { 0.0 };
    let perceptual_raw = match perceptual {
        Some(f) if weights.gamma2 > 0.0 => f(prediction, target),
        _ => 0.0,
    };
    let terms = vec![
        term("l1", l1_raw, weights.gamma1),
        term("perceptual", perceptual_raw, weights.gamma2),
        term("tv", tv_raw, weights.gamma3),
        term("phase", phase_raw, weights.gamma4),
    ];
    Ok(StageLoss { total: terms.iter().map(|t| t.weighted).sum(), terms })
}

/// Stage-2 supervision: `gamma5 diffusion + gamma6 reconstruction`, from
/// already-computed term values.
pub fn stage2_loss(diffusion: f64, reconstruction: f64, weights: &LossWeights) -> Result<StageLoss> {
    weights.validate()?;
    let terms = vec![
        term("diffusion", diffusion, weights.gamma5),
        term("reconstruction", reconstruction, weights.gamma6),
    ];
    Ok(StageLoss { total: terms.iter().map(|t| t.weighted).sum(), terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_image(w: usize, h: usize, ch: usize, seed: u64) -> Image {
        let mut state = seed.wrapping_mul(2654435761).wrapping_add(1);
        let mut data = Vec::with_capacity(w * h * ch);
        for _ in 0..w * h * ch {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            data.push(0.05 + 0.9 * ((state >> 33) as f64 / (1u64 << 31) as f64));
        }
        Image::from_vec(w, h, ch, data).unwrap()
    }

    fn circular_shift(img: &Image, dx: i64, dy: i64) -> Image {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut out = Image::zeros(img.width(), img.height(), img.channels()).unwrap();
        for y in 0..h {
            for x in 0..w {
                for c in 0..img.channels() {
                    let sx = (x - dx).rem_euclid(w) as usize;
                    let sy = (y - dy).rem_euclid(h) as usize;
                    out.set(x as usize, y as usize, c, img.get(sx, sy, c));
                }
            }
        }
        out
    }

    #[test]
    fn l1_basics() {
        let a = noise_image(8, 8, 1, 1);
        assert_eq!(l1(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 0.1).unwrap();
        assert!((l1(&a, &b).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn l1_matches_elementwise_oracle() {
        let a = noise_image(6, 5, 3, 2);
        let b = noise_image(6, 5, 3, 3);
        let mut sum = 0.0;
        for (x, y) in a.data().iter().zip(b.data()) {
            sum += (x - y).abs();
        }
        assert!((l1(&a, &b).unwrap() - sum / 90.0).abs() < 1e-15);
    }

    #[test]
    fn tv_loss_ignores_constants_and_offsets() {
        let a = Image::constant(4, 4, 1, 0.2).unwrap();
        let b = Image::constant(4, 4, 1, 0.9).unwrap();
        assert_eq!(tv_loss(&a, &b).unwrap(), 0.0);
        let c = noise_image(8, 8, 1, 4);
        assert_eq!(tv_loss(&c, &c).unwrap(), 0.0);
        let d = c.map(|v| v + 0.35).unwrap();
        assert!(tv_loss(&c, &d).unwrap() < 1e-15);
    }

    #[test]
    fn phase_loss_identity_and_scale_invariance() {
        let a = noise_image(16, 16, 1, 5);
        assert!(phase_loss(&a, &a).unwrap() < 1e-12);
        for scale in [0.5, 2.0, 10.0] {
            let b = a.map(|v| scale * v).unwrap();
            assert!(phase_loss(&a, &b).unwrap() <= 1e-9, "scale {scale}");
        }
    }

    #[test]
    fn phase_loss_detects_shifts() {
        let a = noise_image(16, 16, 1, 6);
        let b = circular_shift(&a, 3, 1);
        assert!(phase_loss(&a, &b).unwrap() > 0.01);
    }

    #[test]
    fn phase_loss_of_zero_images_is_zero() {
        let z = Image::zeros(8, 8, 1).unwrap();
        assert_eq!(phase_loss(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn psnr_ground_truths() {
        let a = noise_image(8, 8, 3, 7);
        let b = a.map(|v| v + 0.1).unwrap();
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_matches_direct_recomputation() {
        let a = noise_image(9, 4, 1, 8);
        let b = noise_image(9, 4, 1, 9);
        let mse: f64 = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<f64>()
            / 36.0;
        let want = 10.0 * (1.0 / mse).log10();
        assert!((psnr(&a, &b, 1.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ssim_identity_is_one() {
        let a = noise_image(16, 16, 1, 10);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_of_opposite_constants_is_tiny() {
        let a = Image::constant(16, 16, 1, 0.0).unwrap();
        let b = Image::constant(16, 16, 1, 1.0).unwrap();
        // Plugging constants into the SSIM formula:
        // (c1 * c2) / ((1 + c1) * c2) = 1e-4 / 1.0001.
        let got = ssim(&a, &b).unwrap();
        assert!((got - 1e-4 / 1.0001).abs() < 1e-12);
        assert!(got < 0.01);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = noise_image(16, 16, 3, 11);
        let b = noise_image(16, 16, 3, 12);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = Image::zeros(8, 8, 1).unwrap();
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn stage_losses_are_linear_in_weights() {
        let a = noise_image(16, 16, 1, 13);
        let b = noise_image(16, 16, 1, 14);

        let zero = LossWeights { gamma1: 0.0, gamma2: 0.0, gamma3: 0.0, gamma4: 0.0, gamma5: 0.0, gamma6: 0.0 };
        assert_eq!(stage1_loss(&a, &b, &zero, None).unwrap().total, 0.0);

        let only_l1 = LossWeights { gamma1: 1.0, ..zero };
        let got = stage1_loss(&a, &b, &only_l1, None).unwrap();
        assert!((got.total - l1(&a, &b).unwrap()).abs() < 1e-15);

        let mixed = LossWeights { gamma1: 1.0, gamma4: 2.0, ..zero };
        let got = stage1_loss(&a, &b, &mixed, None).unwrap();
        let want = l1(&a, &b).unwrap() + 2.0 * phase_loss(&a, &b).unwrap();
        assert!((got.total - want).abs() < 1e-12);

        let s2 = stage2_loss(0.5, 0.25, &LossWeights::default()).unwrap();
        assert!((s2.total - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perceptual_slot_contributes_only_with_callback() {
        let a = noise_image(16, 16, 1, 15);
        let weights = LossWeights {
            gamma1: 0.0,
            gamma2: 3.0,
            gamma3: 0.0,
            gamma4: 0.0,
            gamma5: 0.0,
            gamma6: 0.0,
        };
        assert_eq!(stage1_loss(&a, &a, &weights, None).unwrap().total, 0.0);
        let callback = |_: &Image, _: &Image| 0.5;
        let got = stage1_loss(&a, &a, &weights, Some(&callback)).unwrap();
        assert!((got.total - 1.5).abs() < 1e-15);
    }

    #[test]
    fn negative_weights_are_rejected() {
        let a = noise_image(16, 16, 1, 16);
        let bad = LossWeights { gamma1: -1.0, ..Default::default() };
        assert!(stage1_loss(&a, &a, &bad, None).is_err());
    }
}
