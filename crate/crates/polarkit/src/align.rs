//! Geometric alignment: phase correlation, affine estimation, warping.
//!
//! Mixed and transmission captures of the same scene are spatially
//! misaligned by refraction through the glass. Alignment here is
//! per-channel: every polarization angle and color plane may carry its
//! own transform, which avoids the aliasing a single full-resolution
//! warp of a mosaicked image would introduce.
//!
//! Translation offsets come from FFT phase correlation; general affine
//! transforms are estimated from point correspondences by least squares.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{fft_2d_real, ifft_2d};
use crate::image::Image;
use crate::mosaic::reflect_index;

/// 2x3 affine matrix mapping *output* pixel coordinates to *source*
/// coordinates (the inverse-warping convention):
///
/// ```text
/// x_src = a x + b y + c
/// y_src = d x + e y + f
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    m: [f64; 6],
}

/// Smallest linear-part determinant accepted as invertible.
pub const MIN_DETERMINANT: f64 = 1e-6;

impl AffineTransform {
    /// Wraps the row-major coefficients `[a, b, c, d, e, f]`.
    pub fn new(m: [f64; 6]) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("non-finite affine coefficient".into()));
        }
        let t = Self { m };
        if t.determinant().abs() <= MIN_DETERMINANT {
            return Err(Error::Domain(format!(
                "affine transform is singular (|det| = {})",
                t.determinant().abs()
            )));
        }
        Ok(t)
    }

    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0] }
    }

    /// Transform whose application moves sampling by `(-dx, -dy)`, i.e.
    /// warping with it shifts image content by `(+dx, +dy)`. Panics on
    /// non-finite offsets.
    pub fn translation(dx: f64, dy: f64) -> Self {
        assert!(dx.is_finite() && dy.is_finite(), "translation must be finite");
        Self { m: [1.0, 0.0, -dx, 0.0, 1.0, -dy] }
    }

    /// Row-major coefficients `[a, b, c, d, e, f]`.
    pub fn coefficients(&self) -> [f64; 6] {
        self.m
    }

    /// Determinant of the 2x2 linear part.
    pub fn determinant(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    /// Maps an output coordinate to its source coordinate.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.m[0] * x + self.m[1] * y + self.m[2],
            self.m[3] * x + self.m[4] * y + self.m[5],
        )
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if det.abs() <= MIN_DETERMINANT {
            return Err(Error::Domain("cannot invert a singular transform".into()));
        }
        let [a, b, c, d, e, f] = self.m;
        let (ia, ib, id, ie) = (e / det, -b / det, -d / det, a / det);
        AffineTransform::new([ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)])
    }

    /// `self` after `other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &AffineTransform) -> Result<AffineTransform> {
        let [a1, b1, c1, d1, e1, f1] = self.m;
        let [a2, b2, c2, d2, e2, f2] = other.m;
        AffineTransform::new([
            a1 * a2 + b1 * d2,
            a1 * b2 + b1 * e2,
            a1 * c2 + b1 * f2 + c1,
            d1 * a2 + e1 * d2,
            d1 * b2 + e1 * e2,
            d1 * c2 + e1 * f2 + f1,
        ])
    }
}

/// One `(source, target)` point pair in pixel coordinates.
pub type PointPair = ((f64, f64), (f64, f64));

/// Point pairs `(source, target)` in pixel coordinates.
#[derive(Debug, Clone, Default)]
pub struct Correspondences {
    pairs: Vec<PointPair>,
}

impl Correspondences {
    pub fn new(pairs: Vec<PointPair>) -> Result<Self> {
        for ((sx, sy), (tx, ty)) in &pairs {
            if ![sx, sy, tx, ty].iter().all(|v| v.is_finite()) {
                return Err(Error::Usage("non-finite correspondence point".into()));
            }
        }
        Ok(Self { pairs })
    }

    /// Parses a plain-text file with one `sx sy tx ty` quadruple per
    /// line; `#` starts a comment.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse().map_err(|_| {
                        Error::Format(format!("line {}: bad number {t:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if fields.len() != 4 {
                return Err(Error::Format(format!(
                    "line {}: expected 4 numbers (sx sy tx ty), got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            pairs.push(((fields[0], fields[1]), (fields[2], fields[3])));
        }
        Self::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[PointPair] {
        &self.pairs
    }
}

/// Integer translation between two images by FFT phase correlation.
///
/// Returns `(dx, dy)` such that `b(x, y) = a(x - dx, y - dy)` under
/// circular indexing: positive `dx` means `b`'s content sits `dx` pixels
/// to the right of `a`'s. Requires equal power-of-two dimensions of at
/// least 8 and single-channel inputs; the result is exact for noiseless
/// circular shifts within a quarter of the image size.
///
/// Ties in the correlation surface break toward the smallest
/// `dx² + dy²`, then lexicographically by `(dx, dy)`.
pub fn phase_correlate(a: &Image, b: &Image) -> Result<(i64, i64)> {
    a.require_same_geometry(b, "phase correlation")?;
    if a.channels() != 1 {
        return Err(Error::Usage("phase correlation expects single-channel images".into()));
    }
    let (w, h) = (a.width(), a.height());
    for (name, n) in [("width", w), ("height", h)] {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Usage(format!(
                "phase correlation requires power-of-two {name} >= 8, got {n}"
            )));
        }
    }

    let fa = fft_2d_real(a.data(), w, h);
    let fb = fft_2d_real(b.data(), w, h);
    let mut cross: Vec<Complex64> = fa
        .iter()
        .zip(&fb)
        .map(|(&va, &vb)| {
            let prod = vb * va.conj();
            let mag = prod.norm();
            if mag > 1e-12 {
                prod / mag
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ifft_2d(&mut cross, w, h);

    let unwrap = |i: usize, n: usize| -> i64 {
        if i > n / 2 {
            i as i64 - n as i64
        } else {
            i as i64
        }
    };

    let mut best = (f64::NEG_INFINITY, i64::MAX, (0i64, 0i64));
    for y in 0..h {
        for x in 0..w {
            let v = cross[y * w + x].re;
            let (dx, dy) = (unwrap(x, w), unwrap(y, h));
            let norm2 = dx * dx + dy * dy;
            let better = v > best.0
                || (v == best.0 && norm2 < best.1)
                || (v == best.0 && norm2 == best.1 && (dx, dy) < best.2);
            if better {
                best = (v, norm2, (dx, dy));
            }
        }
    }
    Ok(best.2)
}

/// Least-squares affine fit `A · src ≈ dst` from point correspondences.
///
/// Exact (to rounding) when the correspondence set is affine-consistent.
/// Fewer than 3 pairs or a collinear configuration is a rank error.
/// Points are normalized (centroid to origin, RMS distance √2) before
/// solving, which keeps the normal equations well conditioned.
pub fn estimate_affine(corr: &Correspondences) -> Result<AffineTransform> {
    if corr.len() < 3 {
        return Err(Error::Usage(format!(
            "affine estimation needs at least 3 correspondences, got {}",
            corr.len()
        )));
    }
    let src: Vec<(f64, f64)> = corr.pairs().iter().map(|&(s, _)| s).collect();
    let dst: Vec<(f64, f64)> = corr.pairs().iter().map(|&(_, t)| t).collect();

    let norm_src = Normalization::fit(&src);
    let norm_dst = Normalization::fit(&dst);
    let ns: Vec<(f64, f64)> = src.iter().map(|&p| norm_src.apply(p)).collect();
    let nd: Vec<(f64, f64)> = dst.iter().map(|&p| norm_dst.apply(p)).collect();

    // Normal equations share one 3x3 Gram matrix for both output rows.
    let mut g = [[0.0f64; 3]; 3];
    let mut rx = [0.0f64; 3];
    let mut ry = [0.0f64; 3];
    for (&(x, y), &(u, v)) in ns.iter().zip(&nd) {
        let row = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
            rx[i] += row[i] * u;
            ry[i] += row[i] * v;
        }
    }
    let sol_x = solve3(g, rx).ok_or_else(degenerate_rank)?;
    let sol_y = solve3(g, ry).ok_or_else(degenerate_rank)?;

    let normalized = AffineTransform::new([
        sol_x[0], sol_x[1], sol_x[2], sol_y[0], sol_y[1], sol_y[2],
    ])
    .map_err(|_| degenerate_rank())?;

    // Undo the normalization: A = T_dst⁻¹ · Â · T_src.
    norm_dst
        .inverse_transform()?
        .compose(&normalized)?
        .compose(&norm_src.transform())
}

fn degenerate_rank() -> Error {
    Error::Domain("correspondences are collinear or otherwise rank-deficient".into())
}

struct Normalization {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Normalization {
    fn fit(points: &[(f64, f64)]) -> Self {
        let n = points.len() as f64;
        let (cx, cy) = points
            .iter()
            .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x / n, ay + y / n));
        let rms = (points
            .iter()
            .map(|&(x, y)| (x - cx).powi(2) + (y - cy).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let scale = if rms > 1e-12 { std::f64::consts::SQRT_2 / rms } else { 1.0 };
        Self { cx, cy, scale }
    }

    fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        ((x - self.cx) * self.scale, (y - self.cy) * self.scale)
    }

    fn transform(&self) -> AffineTransform {
        AffineTransform {
            m: [self.scale, 0.0, -self.cx * self.scale, 0.0, self.scale, -self.cy * self.scale],
        }
    }

    fn inverse_transform(&self) -> Result<AffineTransform> {
        AffineTransform::new([1.0 / self.scale, 0.0, self.cx, 0.0, 1.0 / self.scale, self.cy])
    }
}

/// Gaussian elimination with partial pivoting; `None` when near-singular.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for (k, &xk) in x.iter().enumerate().skip(row + 1) {
            acc -= a[row][k] * xk;
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Inverse-warps an image with bilinear sampling and reflect padding.
///
/// Every channel uses the same transform; see [`warp_channels`] for the
/// per-channel variant. The identity transform reproduces the input
/// exactly.
pub fn warp(img: &Image, t: &AffineTransform) -> Result<Image> {
    warp_channels(img, &vec![*t; img.channels()])
}

/// Inverse-warps each channel with its own transform.
///
/// This is the alignment primitive for mosaicked data, where each
/// polarization/color plane carries an independently estimated
/// transform.
pub fn warp_channels(img: &Image, transforms: &[AffineTransform]) -> Result<Image> {
    if transforms.len() != img.channels() {
        return Err(Error::Usage(format!(
            "{} transforms for {} channels",
            transforms.len(),
            img.channels()
        )));
    }
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = vec![0.0; w * h * ch];
    for (c, t) in transforms.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = t.apply(x as f64, y as f64);
                out[(y * w + x) * ch + c] = sample_bilinear(img, sx, sy, c);
            }
        }
    }
    Image::from_vec(w, h, ch, out)
}

fn sample_bilinear(img: &Image, x: f64, y: f64, c: usize) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (w, h) = (img.width(), img.height());
    let gx = |i: f64| reflect_index(i as isize, w);
    let gy = |i: f64| reflect_index(i as isize, h);
    let v00 = img.get(gx(x0), gy(y0), c);
    let v10 = img.get(gx(x0 + 1.0), gy(y0), c);
    let v01 = img.get(gx(x0), gy(y0 + 1.0), c);
    let v11 = img.get(gx(x0 + 1.0), gy(y0 + 1.0), c);
    (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11)
}
