//! Stokes-parameter computation and derived polarization maps.
//!
//! A linear-polarization measurement consists of four intensity images
//! behind polarizers at 0°, 45°, 90°, and 135°. From those the first
//! three Stokes parameters follow pixelwise, per channel:
//!
//! ```text
//! s0 = (i0 + i45 + i90 + i135) / 2      total intensity
//! s1 = i0  - i90                        0°/90° balance
//! s2 = i45 - i135                       45°/135° balance
//! ```
//!
//! The degree of linear polarization is `sqrt(s1² + s2²) / s0` and the
//! angle of linear polarization is `atan2(s2, s1) / 2`. Circular
//! polarization (S3) is outside the scope of this toolkit; the sensors it
//! models measure linear polarization only.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::image::Image;

/// `s0` below this threshold is treated as "no light": DOLP is defined as
/// zero there instead of dividing by a vanishing intensity.
pub const S0_EPSILON: f64 = 1e-9;

/// Slack allowed when checking `sqrt(s1² + s2²) <= s0`.
pub const REALIZABILITY_SLACK: f64 = 1e-9;

/// Four co-registered radiance images at the canonical polarizer angles.
///
/// Mono and RGB frames are both supported; the four images must share
/// geometry and contain only nonnegative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFrame {
    i0: Image,
    i45: Image,
    i90: Image,
    i135: Image,
}

impl PolarFrame {
    pub fn new(i0: Image, i45: Image, i90: Image, i135: Image) -> Result<Self> {
        for img in [&i45, &i90, &i135] {
            i0.require_same_geometry(img, "polar frame")?;
        }
        for img in [&i0, &i45, &i90, &i135] {
            if img.min() < 0.0 {
                return Err(Error::Usage("polar frame intensities must be nonnegative".into()));
            }
        }
        Ok(Self { i0, i45, i90, i135 })
    }

    pub fn i0(&self) -> &Image {
        &self.i0
    }

    pub fn i45(&self) -> &Image {
        &self.i45
    }

    pub fn i90(&self) -> &Image {
        &self.i90
    }

    pub fn i135(&self) -> &Image {
        &self.i135
    }

    /// The four images in 0°, 45°, 90°, 135° order.
    pub fn angles(&self) -> [&Image; 4] {
        [&self.i0, &self.i45, &self.i90, &self.i135]
    }

    pub fn width(&self) -> usize {
        self.i0.width()
    }

    pub fn height(&self) -> usize {
        self.i0.height()
    }

    pub fn channels(&self) -> usize {
        self.i0.channels()
    }
}

/// Per-pixel, per-channel Stokes parameters (S0, S1, S2).
///
/// Physically realizable maps satisfy `s0 >= 0` and
/// `sqrt(s1² + s2²) <= s0` everywhere. [`StokesMap::new`] enforces that
/// (with [`REALIZABILITY_SLACK`]); [`compute_stokes`] does not, because a
/// noisy sensor frame can legitimately produce a slightly unrealizable
/// map, which the downstream operations handle by clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesMap {
    s0: Image,
    s1: Image,
    s2: Image,
}

impl StokesMap {
    /// Builds a map and checks physical realizability.
    pub fn new(s0: Image, s1: Image, s2: Image) -> Result<Self> {
        let map = Self::from_components(s0, s1, s2)?;
        for i in 0..map.s0.data().len() {
            let (v0, v1, v2) = (map.s0.data()[i], map.s1.data()[i], map.s2.data()[i]);
            if v0 < 0.0 {
                return Err(Error::Usage(format!("negative s0 sample {v0}")));
            }
            if (v1 * v1 + v2 * v2).sqrt() > v0 + REALIZABILITY_SLACK {
                return Err(Error::Usage(format!(
                    "unrealizable stokes sample (s0={v0}, s1={v1}, s2={v2})"
                )));
            }
        }
        Ok(map)
    }

    /// Builds a map checking only geometry and finiteness.
    pub fn from_components(s0: Image, s1: Image, s2: Image) -> Result<Self> {
        s0.require_same_geometry(&s1, "stokes map")?;
        s0.require_same_geometry(&s2, "stokes map")?;
        Ok(Self { s0, s1, s2 })
    }

    pub fn s0(&self) -> &Image {
        &self.s0
    }

    pub fn s1(&self) -> &Image {
        &self.s1
    }

    pub fn s2(&self) -> &Image {
        &self.s2
    }

    pub fn width(&self) -> usize {
        self.s0.width()
    }

    pub fn height(&self) -> usize {
        self.s0.height()
    }

    pub fn channels(&self) -> usize {
        self.s0.channels()
    }

    /// Pixelwise sum of two maps (incoherent superposition).
    pub fn add(&self, other: &StokesMap) -> Result<StokesMap> {
        StokesMap::from_components(
            self.s0.zip_map(&other.s0, |a, b| a + b)?,
            self.s1.zip_map(&other.s1, |a, b| a + b)?,
            self.s2.zip_map(&other.s2, |a, b| a + b)?,
        )
    }
}

/// Computes (S0, S1, S2) from a four-angle frame.
pub fn compute_stokes(frame: &PolarFrame) -> StokesMap {
    let n = frame.i0.data().len();
    let (mut s0, mut s1, mut s2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let a = frame.i0.data()[i];
        let b = frame.i45.data()[i];
        let c = frame.i90.data()[i];
        let d = frame.i135.data()[i];
        s0[i] = (a + b + c + d) / 2.0;
        s1[i] = a - c;
        s2[i] = b - d;
    }
    let (w, h, ch) = (frame.width(), frame.height(), frame.channels());
    StokesMap::from_components(
        Image::from_vec(w, h, ch, s0).expect("finite by construction"),
        Image::from_vec(w, h, ch, s1).expect("finite by construction"),
        Image::from_vec(w, h, ch, s2).expect("finite by construction"),
    )
    .expect("same geometry")
}

/// Degree of linear polarization, clamped to `[0, 1]`.
///
/// Pixels with `s0 <= S0_EPSILON` carry no light and map to 0.
pub fn dolp(s: &StokesMap) -> Image {
    let n = s.s0.data().len();
    let mut out = vec![0.0; n];
    for (i, value) in out.iter_mut().enumerate() {
        let v0 = s.s0.data()[i];
        if v0 > S0_EPSILON {
            let mag = (s.s1.data()[i].powi(2) + s.s2.data()[i].powi(2)).sqrt();
            *value = (mag / v0).clamp(0.0, 1.0);
        }
    }
    Image::from_vec(s.width(), s.height(), s.channels(), out).expect("finite by construction")
}

/// Angle of linear polarization plus a degeneracy mask.
#[derive(Debug, Clone)]
pub struct AolpMap {
    /// Orientation in radians, in `(-pi/2, pi/2]`.
    pub angle: Image,
    /// True where `s1 = s2 = 0`: the orientation is undefined and the
    /// angle is reported as 0.
    pub degenerate: Vec<bool>,
}

/// Angle of linear polarization, `atan2(s2, s1) / 2`.
///
/// The two-argument `atan2` preserves the quadrant of (s1, s2); the
/// result is folded into `(-pi/2, pi/2]`, which covers every distinct
/// orientation of linear polarization.
pub fn aolp(s: &StokesMap) -> AolpMap {
    let n = s.s0.data().len();
    let mut angles = vec![0.0; n];
    let mut degenerate = vec![false; n];
    for (i, angle) in angles.iter_mut().enumerate() {
        let (v1, v2) = (s.s1.data()[i], s.s2.data()[i]);
        if v1 == 0.0 && v2 == 0.0 {
            degenerate[i] = true;
        } else {
            let mut a = 0.5 * v2.atan2(v1);
            // atan2 can land exactly on -pi, i.e. a = -pi/2, which names
            // the same orientation as +pi/2.
            if a <= -FRAC_PI_2 {
                a += PI;
            }
            *angle = a;
        }
    }
    AolpMap {
        angle: Image::from_vec(s.width(), s.height(), s.channels(), angles)
            .expect("finite by construction"),
        degenerate,
    }
}

/// Total-intensity image with the polarizer's ½ attenuation undone.
///
/// This equals `s0`; summing orthogonal polarizer pairs recovers the
/// unpolarized radiance of the scene.
pub fn unpolarized(frame: &PolarFrame) -> Image {
    compute_stokes(frame).s0
}

/// Intensity behind an ideal linear polarizer at angle `phi` (radians).
///
/// Evaluates `(s0 + s1 cos 2phi + s2 sin 2phi) / 2`. For realizable maps
/// the value is nonnegative up to rounding; negatives (within `-1e-12` of
/// zero for realizable inputs) are clamped to 0. Panics on a non-finite
/// angle.
pub fn intensity_at(s: &StokesMap, phi: f64) -> Image {
    assert!(phi.is_finite(), "polarizer angle must be finite, got {phi}");
    let (c, sn) = ((2.0 * phi).cos(), (2.0 * phi).sin());
    let n = s.s0.data().len();
    let mut out = vec![0.0; n];
    for (i, sample) in out.iter_mut().enumerate() {
        let v = 0.5 * (s.s0.data()[i] + s.s1.data()[i] * c + s.s2.data()[i] * sn);
        *sample = v.max(0.0);
    }
    Image::from_vec(s.width(), s.height(), s.channels(), out).expect("finite by construction")
}

/// Samples a Stokes map at the four canonical angles.
pub fn sample_canonical_frame(s: &StokesMap) -> PolarFrame {
    use std::f64::consts::FRAC_PI_4;
    PolarFrame::new(
        intensity_at(s, 0.0),
        intensity_at(s, FRAC_PI_4),
        intensity_at(s, FRAC_PI_2),
        intensity_at(s, 3.0 * FRAC_PI_4),
    )
    .expect("canonical samples are nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn frame1(i0: f64, i45: f64, i90: f64, i135: f64) -> PolarFrame {
        PolarFrame::new(
            Image::constant(1, 1, 1, i0).unwrap(),
            Image::constant(1, 1, 1, i45).unwrap(),
            Image::constant(1, 1, 1, i90).unwrap(),
            Image::constant(1, 1, 1, i135).unwrap(),
        )
        .unwrap()
    }

    fn stokes1(s0: f64, s1: f64, s2: f64) -> StokesMap {
        StokesMap::new(
            Image::constant(1, 1, 1, s0).unwrap(),
            Image::constant(1, 1, 1, s1).unwrap(),
            Image::constant(1, 1, 1, s2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fully_polarized_at_zero_degrees() {
        let s = compute_stokes(&frame1(1.0, 0.5, 0.0, 0.5));
        assert_eq!(s.s0().get(0, 0, 0), 1.0);
        assert_eq!(s.s1().get(0, 0, 0), 1.0);
        assert_eq!(s.s2().get(0, 0, 0), 0.0);
    }

    #[test]
    fn unpolarized_light_has_zero_s1_s2() {
        let c = 0.3;
        let s = compute_stokes(&frame1(c, c, c, c));
        assert_eq!(s.s0().get(0, 0, 0), 2.0 * c);
        assert_eq!(s.s1().get(0, 0, 0), 0.0);
        assert_eq!(s.s2().get(0, 0, 0), 0.0);
    }

    #[test]
    fn fully_polarized_at_forty_five_degrees() {
        let s = compute_stokes(&frame1(0.5, 1.0, 0.5, 0.0));
        assert_eq!(s.s0().get(0, 0, 0), 1.0);
        assert_eq!(s.s1().get(0, 0, 0), 0.0);
        assert_eq!(s.s2().get(0, 0, 0), 1.0);
    }

    #[test]
    fn dolp_cases() {
        assert_eq!(dolp(&stokes1(1.0, 1.0, 0.0)).get(0, 0, 0), 1.0);
        assert_eq!(dolp(&stokes1(0.6, 0.0, 0.0)).get(0, 0, 0), 0.0);
        // 3-4-5 magnitude
        assert!((dolp(&stokes1(1.0, 0.6, 0.8)).get(0, 0, 0) - 1.0).abs() < 1e-15);
        // dark pixel is degenerate, not a division by zero
        assert_eq!(dolp(&stokes1(0.0, 0.0, 0.0)).get(0, 0, 0), 0.0);
    }

    #[test]
    fn aolp_cases() {
        assert_eq!(aolp(&stokes1(1.0, 1.0, 0.0)).angle.get(0, 0, 0), 0.0);
        assert!((aolp(&stokes1(1.0, 0.0, 1.0)).angle.get(0, 0, 0) - FRAC_PI_4).abs() < 1e-15);
        assert!((aolp(&stokes1(1.0, -1.0, 0.0)).angle.get(0, 0, 0) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn aolp_flags_degenerate_pixels() {
        let m = aolp(&stokes1(1.0, 0.0, 0.0));
        assert!(m.degenerate[0]);
        assert_eq!(m.angle.get(0, 0, 0), 0.0);
        assert!(!aolp(&stokes1(1.0, 0.5, 0.0)).degenerate[0]);
    }

    #[test]
    fn aolp_scale_invariance() {
        for k in [0.5, 2.0, 17.0] {
            let a = aolp(&stokes1(1.0, 0.3, -0.4)).angle.get(0, 0, 0);
            let b = aolp(&stokes1(k, k * 0.3, k * -0.4)).angle.get(0, 0, 0);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unpolarized_restores_total_intensity() {
        let c = 0.4;
        assert_eq!(unpolarized(&frame1(c, c, c, c)).get(0, 0, 0), 2.0 * c);
        assert_eq!(unpolarized(&frame1(1.0, 0.5, 0.0, 0.5)).get(0, 0, 0), 1.0);
    }

    #[test]
    fn malus_extremes_and_midpoint() {
        let s = stokes1(1.0, 1.0, 0.0);
        assert_eq!(intensity_at(&s, 0.0).get(0, 0, 0), 1.0);
        assert!(intensity_at(&s, FRAC_PI_2).get(0, 0, 0).abs() < 1e-15);
        assert!((intensity_at(&s, FRAC_PI_4).get(0, 0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_pairs_sum_to_s0() {
        let s = stokes1(1.0, 0.3, -0.2);
        let f = sample_canonical_frame(&s);
        let a = f.i0().get(0, 0, 0) + f.i90().get(0, 0, 0);
        let b = f.i45().get(0, 0, 0) + f.i135().get(0, 0, 0);
        assert!((a - 1.0).abs() < 1e-15);
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn new_rejects_unrealizable_maps() {
        let s0 = Image::constant(1, 1, 1, 1.0).unwrap();
        let s1 = Image::constant(1, 1, 1, 0.9).unwrap();
        let s2 = Image::constant(1, 1, 1, 0.9).unwrap();
        assert!(StokesMap::new(s0, s1, s2).is_err());
    }

    #[test]
    fn frame_rejects_negative_intensities() {
        let pos = Image::constant(1, 1, 1, 0.1).unwrap();
        let neg = Image::constant(1, 1, 1, -0.1).unwrap();
        assert!(PolarFrame::new(pos.clone(), pos.clone(), pos.clone(), neg).is_err());
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        /// Strictly realizable scalar Stokes samples.
        fn stokes_samples() -> impl Strategy<Value = (f64, f64, f64)> {
            (0.0f64..2.0, 0.0f64..=1.0, -std::f64::consts::PI..std::f64::consts::PI)
                .prop_map(|(s0, p, ang)| (s0, p * s0 * ang.cos(), p * s0 * ang.sin()))
        }

        proptest! {
            #[test]
            fn canonical_round_trip_is_identity((s0, s1, s2) in stokes_samples()) {
                let s = StokesMap::new(
                    Image::constant(1, 1, 1, s0).unwrap(),
                    Image::constant(1, 1, 1, s1).unwrap(),
                    Image::constant(1, 1, 1, s2).unwrap(),
                ).unwrap();
                let back = compute_stokes(&sample_canonical_frame(&s));
                prop_assert!((back.s0().get(0, 0, 0) - s0).abs() <= 1e-12);
                prop_assert!((back.s1().get(0, 0, 0) - s1).abs() <= 1e-12);
                prop_assert!((back.s2().get(0, 0, 0) - s2).abs() <= 1e-12);
            }

            #[test]
            fn malus_law_for_fully_polarized_light(
                i0 in 0.01f64..4.0,
                phi0 in -1.5f64..1.5,
                phi in -3.0f64..3.0,
            ) {
                let s = StokesMap::new(
                    Image::constant(1, 1, 1, i0).unwrap(),
                    Image::constant(1, 1, 1, i0 * (2.0 * phi0).cos()).unwrap(),
                    Image::constant(1, 1, 1, i0 * (2.0 * phi0).sin()).unwrap(),
                ).unwrap();
                let measured = intensity_at(&s, phi).get(0, 0, 0);
                let expected = i0 * (phi - phi0).cos().powi(2);
                prop_assert!((measured - expected).abs() <= 1e-12 * i0.max(1.0));
            }

            #[test]
            fn dolp_stays_in_unit_interval((s0, s1, s2) in stokes_samples()) {
                let s = StokesMap::from_components(
                    Image::constant(1, 1, 1, s0).unwrap(),
                    Image::constant(1, 1, 1, s1).unwrap(),
                    Image::constant(1, 1, 1, s2).unwrap(),
                ).unwrap();
                let d = dolp(&s).get(0, 0, 0);
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }
    }
}
