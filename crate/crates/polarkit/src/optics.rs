//! Fresnel physics and the synthetic-scene oracle.
//!
//! Light reflecting off (or refracting through) a dielectric interface is
//! attenuated differently for the s-polarized component (perpendicular to
//! the plane of incidence) and the p-polarized component (parallel to
//! it). The power coefficients follow from Snell's law:
//!
//! ```text
//! R_s = ((n1 cos θi − n2 cos θt) / (n1 cos θi + n2 cos θt))²
//! R_p = ((n2 cos θi − n1 cos θt) / (n2 cos θi + n1 cos θt))²
//! T_s = 1 − R_s,   T_p = 1 − R_p         (lossless dielectric)
//! ```
//!
//! At the Brewster angle `atan(n2 / n1)` the p reflectance vanishes, so
//! reflected light is fully s-polarized — the property every separation
//! algorithm in this crate ultimately leans on.
//!
//! [`synthesize`] builds a mixed capture from known transmission and
//! reflection radiances by incoherent Stokes superposition: each layer
//! contributes a partially polarized Stokes vector whose degree and
//! orientation follow from the Fresnel coefficients, and the mixed frame
//! is the superposition sampled through an ideal polarizer at the four
//! canonical angles. Because every ground-truth quantity is known
//! exactly, the simulator acts as the verification oracle for decoding,
//! separation, and the end-to-end pipeline.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::image::{Image, RawMosaic, RAW_MAX};
use crate::kv::KeyValues;
use crate::mosaic::MosaicLayout;
use crate::stokes::{intensity_at, sample_canonical_frame, PolarFrame, StokesMap};

/// A planar dielectric interface and an incidence angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSpec {
    n1: f64,
    n2: f64,
    theta: f64,
}

impl InterfaceSpec {
    /// Validates the media and incidence angle.
    ///
    /// Requires `n1 >= 1`, `n2 > 0`, `theta` in `[0, pi/2)`, and
    /// `sin(theta) * n1 / n2 <= 1`; total internal reflection is a domain
    /// error in this configuration.
    pub fn new(n1: f64, n2: f64, theta: f64) -> Result<Self> {
        if !n1.is_finite() || n1 < 1.0 {
            return Err(Error::Usage(format!("refractive index n1 must be >= 1, got {n1}")));
        }
        if !n2.is_finite() || n2 <= 0.0 {
            return Err(Error::Usage(format!("refractive index n2 must be positive, got {n2}")));
        }
        if !theta.is_finite() || !(0.0..FRAC_PI_2).contains(&theta) {
            return Err(Error::Usage(format!(
                "incidence angle must lie in [0, pi/2), got {theta}"
            )));
        }
        if theta.sin() * n1 / n2 > 1.0 {
            return Err(Error::Domain(format!(
                "total internal reflection at theta = {theta} for n1/n2 = {}",
                n1 / n2
            )));
        }
        Ok(Self { n1, n2, theta })
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    /// Incidence angle in radians.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Fresnel power coefficients for one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelCoefficients {
    /// s-polarized reflectance.
    pub r_s: f64,
    /// p-polarized reflectance.
    pub r_p: f64,
    /// s-polarized transmittance, `1 - r_s`.
    pub t_s: f64,
    /// p-polarized transmittance, `1 - r_p`.
    pub t_p: f64,
}

impl FresnelCoefficients {
    /// Mean reflected power fraction, `(r_s + r_p) / 2`.
    pub fn alpha_r(&self) -> f64 {
        (self.r_s + self.r_p) / 2.0
    }

    /// Mean transmitted power fraction, `(t_s + t_p) / 2`.
    pub fn alpha_t(&self) -> f64 {
        (self.t_s + self.t_p) / 2.0
    }

    /// Degree of linear polarization of the reflected light.
    pub fn reflection_dolp(&self) -> f64 {
        let total = self.r_s + self.r_p;
        if total == 0.0 {
            0.0
        } else {
            (self.r_s - self.r_p).abs() / total
        }
    }

    /// Degree of linear polarization of the transmitted light.
    pub fn transmission_dolp(&self) -> f64 {
        let total = self.t_s + self.t_p;
        if total == 0.0 {
            0.0
        } else {
            (self.t_s - self.t_p).abs() / total
        }
    }
}

/// Evaluates the Fresnel power coefficients for a validated interface.
pub fn fresnel(interface: &InterfaceSpec) -> FresnelCoefficients {
    let cos_i = interface.theta.cos();
    // Snell's law; the constructor guarantees the argument is <= 1.
    let sin_t = (interface.theta.sin() * interface.n1 / interface.n2).min(1.0);
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    let (n1, n2) = (interface.n1, interface.n2);
    let r_s = ((n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)).powi(2);
    let r_p = ((n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t)).powi(2);
    FresnelCoefficients { r_s, r_p, t_s: 1.0 - r_s, t_p: 1.0 - r_p }
}

/// Brewster angle `atan(n2 / n1)`, where p reflectance vanishes.
pub fn brewster_angle(n1: f64, n2: f64) -> Result<f64> {
    if !n1.is_finite() || !n2.is_finite() || n1 <= 0.0 || n2 <= 0.0 {
        return Err(Error::Usage(format!(
            "refractive indices must be positive, got n1 = {n1}, n2 = {n2}"
        )));
    }
    Ok((n2 / n1).atan())
}

/// Ground-truth description of a synthetic mixed scene.
///
/// `transmission` and `reflection` are linear radiance images of the two
/// layers before the interface. `phi_perp` is the orientation of the
/// reflection's polarized component (the s direction); transmission is
/// polarized orthogonally at `phi_perp + pi/2`.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    transmission: Image,
    reflection: Image,
    interface: InterfaceSpec,
    phi_perp: f64,
    dolp_t_extra: f64,
    fresnel_transmission_dolp: bool,
}

impl SceneSpec {
    pub fn new(
        transmission: Image,
        reflection: Image,
        interface: InterfaceSpec,
        phi_perp: f64,
    ) -> Result<Self> {
        transmission.require_same_geometry(&reflection, "scene layers")?;
        if !phi_perp.is_finite() || phi_perp <= -FRAC_PI_2 || phi_perp > FRAC_PI_2 {
            return Err(Error::Usage(format!(
                "phi_perp must lie in (-pi/2, pi/2], got {phi_perp}"
            )));
        }
        if transmission.min() < 0.0 || reflection.min() < 0.0 {
            return Err(Error::Usage("scene radiances must be nonnegative".into()));
        }
        Ok(Self {
            transmission,
            reflection,
            interface,
            phi_perp,
            dolp_t_extra: 0.0,
            fresnel_transmission_dolp: true,
        })
    }

    /// Extra transmission polarization on top of the Fresnel-derived
    /// value (e.g. a polarized emitter behind the glass).
    pub fn with_dolp_t_extra(mut self, dolp: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&dolp) {
            return Err(Error::Usage(format!("dolp_t_extra must lie in [0, 1], got {dolp}")));
        }
        self.dolp_t_extra = dolp;
        Ok(self)
    }

    /// Whether the transmitted layer picks up the refraction-induced
    /// polarization `|t_s - t_p| / (t_s + t_p)`.
    ///
    /// Enabled by default (the physical behavior). Disabling it models an
    /// idealized unpolarized-transmission capture, which is the fixture
    /// the Brewster separation oracle assumes.
    pub fn with_fresnel_transmission_dolp(mut self, enabled: bool) -> Self {
        self.fresnel_transmission_dolp = enabled;
        self
    }

    pub fn transmission(&self) -> &Image {
        &self.transmission
    }

    pub fn reflection(&self) -> &Image {
        &self.reflection
    }

    pub fn interface(&self) -> &InterfaceSpec {
        &self.interface
    }

    pub fn phi_perp(&self) -> f64 {
        self.phi_perp
    }
}

/// Everything [`synthesize`] knows about a rendered scene.
#[derive(Debug, Clone)]
pub struct Synthesis {
    /// Stokes map of the mixed capture.
    pub mixed: StokesMap,
    /// The mixed capture sampled at the four canonical polarizer angles.
    pub frame: PolarFrame,
    /// Mean transmitted power fraction (the mixing coefficient of T).
    pub alpha_t: f64,
    /// Mean reflected power fraction (the mixing coefficient of R).
    pub alpha_r: f64,
    /// Degree of linear polarization of the reflected layer.
    pub dolp_reflection: f64,
    /// Degree of linear polarization of the transmitted layer.
    pub dolp_transmission: f64,
    /// Stokes map of the transmission contribution alone.
    pub transmission_stokes: StokesMap,
    /// Stokes map of the reflection contribution alone.
    pub reflection_stokes: StokesMap,
}

impl Synthesis {
    /// Attenuated transmission radiance `alpha_t * T`, the quantity a
    /// perfect separation recovers.
    pub fn transmission_component(&self) -> Image {
        self.transmission_stokes.s0().clone()
    }

    /// Attenuated reflection radiance `alpha_r * R`.
    pub fn reflection_component(&self) -> Image {
        self.reflection_stokes.s0().clone()
    }

    /// Per-angle frame of the transmission contribution alone.
    pub fn transmission_frame(&self) -> PolarFrame {
        sample_canonical_frame(&self.transmission_stokes)
    }

    /// Per-angle frame of the reflection contribution alone.
    pub fn reflection_frame(&self) -> PolarFrame {
        sample_canonical_frame(&self.reflection_stokes)
    }
}

fn polarized_stokes(radiance: &Image, scale: f64, dolp: f64, orientation: f64) -> StokesMap {
    let (c2, s2) = ((2.0 * orientation).cos(), (2.0 * orientation).sin());
    let s0 = radiance.map(|v| scale * v).expect("finite");
    let s1 = s0.map(|v| dolp * v * c2).expect("finite");
    let s2img = s0.map(|v| dolp * v * s2).expect("finite");
    StokesMap::from_components(s0, s1, s2img).expect("same geometry")
}

/// Renders the mixed Stokes map and per-angle frame for a scene.
///
/// The reflection contributes `s0 = alpha_r * R` with polarized fraction
/// `|r_s - r_p| / (r_s + r_p)` oriented at `phi_perp`; the transmission
/// contributes `s0 = alpha_t * T` with its own polarized fraction
/// oriented at `phi_perp + pi/2`. The layers add incoherently, so the
/// unpolarized mixed image satisfies the mixing model exactly:
/// `s0_mixed = alpha_t * T + alpha_r * R`.
pub fn synthesize(scene: &SceneSpec) -> Synthesis {
    let fc = fresnel(&scene.interface);
    let alpha_r = fc.alpha_r();
    let alpha_t = fc.alpha_t();
    let p_r = fc.reflection_dolp();
    let p_t = if scene.fresnel_transmission_dolp {
        fc.transmission_dolp().max(scene.dolp_t_extra)
    } else {
        scene.dolp_t_extra
    };

    let reflection_stokes = polarized_stokes(&scene.reflection, alpha_r, p_r, scene.phi_perp);
    let transmission_stokes =
        polarized_stokes(&scene.transmission, alpha_t, p_t, scene.phi_perp + FRAC_PI_2);
    let mixed = transmission_stokes.add(&reflection_stokes).expect("same geometry");
    let frame = sample_canonical_frame(&mixed);

    Synthesis {
        mixed,
        frame,
        alpha_t,
        alpha_r,
        dolp_reflection: p_r,
        dolp_transmission: p_t,
        transmission_stokes,
        reflection_stokes,
    }
}

/// A rendered raw mosaic plus how many samples overflowed 16 bits.
#[derive(Debug, Clone)]
pub struct RenderedMosaic {
    pub mosaic: RawMosaic,
    /// Samples whose intensity exceeded 1.0 and were clipped at the
    /// 16-bit ceiling.
    pub clipped: usize,
}

/// Samples a scene onto the DoFP sensor grid.
///
/// The mosaic is twice the scene size in each dimension: every scene
/// pixel maps to a 2x2 block of polarizer sites, and the Bayer color of
/// the block selects the channel. Sites are point-sampled (no optical
/// blur) and quantized to 16 bits with round-half-up.
pub fn render_mosaic(scene: &SceneSpec, layout: &MosaicLayout) -> Result<RenderedMosaic> {
    let t = &scene.transmission;
    if !t.width().is_multiple_of(2) || !t.height().is_multiple_of(2) {
        return Err(Error::Usage(format!(
            "scene dimensions must be multiples of 2, got {}x{}",
            t.width(),
            t.height()
        )));
    }
    if t.channels() != 3 {
        return Err(Error::Usage("mosaic rendering expects RGB scenes".into()));
    }
    let synth = synthesize(scene);
    let angles: [(u16, f64); 4] = [
        (0, 0.0),
        (45, std::f64::consts::FRAC_PI_4),
        (90, FRAC_PI_2),
        (135, 3.0 * std::f64::consts::FRAC_PI_4),
    ];
    let frames: Vec<(u16, Image)> = angles
        .iter()
        .map(|&(deg, phi)| (deg, intensity_at(&synth.mixed, phi)))
        .collect();

    let (mw, mh) = (t.width() * 2, t.height() * 2);
    let mut samples = vec![0u16; mw * mh];
    let mut clipped = 0usize;
    for row in 0..mh {
        for col in 0..mw {
            let angle = layout.angle_pattern()[row % 2][col % 2];
            let color = layout.bayer_pattern()[(row / 2) % 2][(col / 2) % 2];
            let (sx, sy) = (col / 2, row / 2);
            let img = &frames.iter().find(|(a, _)| *a == angle).expect("canonical angle").1;
            let v = img.get(sx, sy, color.channel());
            let q = (v * RAW_MAX as f64 + 0.5).floor();
            samples[row * mw + col] = if q > RAW_MAX as f64 {
                clipped += 1;
                RAW_MAX
            } else {
                q as u16
            };
        }
    }
    Ok(RenderedMosaic {
        mosaic: RawMosaic::from_samples(mw, mh, layout_id_of(layout), samples)?,
        clipped,
    })
}

/// Finds the PRAW tag of a layout, defaulting to 0 for custom layouts.
fn layout_id_of(layout: &MosaicLayout) -> u8 {
    for id in 0..=2 {
        if MosaicLayout::from_id(id).map(|l| &l == layout).unwrap_or(false) {
            return id;
        }
    }
    0
}

/// Scene parameters loaded from a plain-text `key = value` file.
///
/// Keys and defaults: `n1` (1.0), `n2` (1.5), `theta_deg` (45),
/// `phi_perp_deg` (0), `dolp_t_extra` (0), `fresnel_transmission_dolp`
/// (true). Unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub n1: f64,
    pub n2: f64,
    pub theta_deg: f64,
    pub phi_perp_deg: f64,
    pub dolp_t_extra: f64,
    pub fresnel_transmission_dolp: bool,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            n1: 1.0,
            n2: 1.5,
            theta_deg: 45.0,
            phi_perp_deg: 0.0,
            dolp_t_extra: 0.0,
            fresnel_transmission_dolp: true,
        }
    }
}

impl SceneParams {
    pub const KEYS: [&'static str; 6] = [
        "n1",
        "n2",
        "theta_deg",
        "phi_perp_deg",
        "dolp_t_extra",
        "fresnel_transmission_dolp",
    ];

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_key_values(&KeyValues::from_file(path)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.require_known_keys(&Self::KEYS)?;
        let d = Self::default();
        Ok(Self {
            n1: kv.get_f64("n1", d.n1)?,
            n2: kv.get_f64("n2", d.n2)?,
            theta_deg: kv.get_f64("theta_deg", d.theta_deg)?,
            phi_perp_deg: kv.get_f64("phi_perp_deg", d.phi_perp_deg)?,
            dolp_t_extra: kv.get_f64("dolp_t_extra", d.dolp_t_extra)?,
            fresnel_transmission_dolp: kv
                .get_bool("fresnel_transmission_dolp", d.fresnel_transmission_dolp)?,
        })
    }

    pub fn interface(&self) -> Result<InterfaceSpec> {
        InterfaceSpec::new(self.n1, self.n2, self.theta_deg.to_radians())
    }

    /// Builds the scene from a transmission/reflection image pair.
    pub fn scene(&self, transmission: Image, reflection: Image) -> Result<SceneSpec> {
        let scene = SceneSpec::new(
            transmission,
            reflection,
            self.interface()?,
            self.phi_perp_deg.to_radians(),
        )?
        .with_dolp_t_extra(self.dolp_t_extra)?
        .with_fresnel_transmission_dolp(self.fresnel_transmission_dolp);
        Ok(scene)
    }
}

/// Loads a scene fixture from its on-disk form: two radiance images
/// plus a `key = value` parameter file.
pub fn load_scene(
    transmission: impl AsRef<std::path::Path>,
    reflection: impl AsRef<std::path::Path>,
    params: impl AsRef<std::path::Path>,
) -> Result<SceneSpec> {
    let p = SceneParams::from_file(params)?;
    p.scene(crate::io::read_image(transmission)?, crate::io::read_image(reflection)?)
}
