//! Polarimetric imaging toolkit for reflection/transmission separation.
//!
//! When a camera looks through glass, the captured image `M` mixes the
//! transmission layer `T` (the scene behind the glass) with an unwanted
//! reflection layer `R`:
//!
//! ```text
//! M = alpha_t * T + alpha_r * R
//! ```
//!
//! Polarization is the physical cue that makes the two layers separable:
//! reflection off a dielectric is partially (at the Brewster angle fully)
//! polarized, while transmitted light stays close to unpolarized. This
//! crate implements the full classical toolchain around that idea:
//!
//! * [`image`] / [`io`] — image buffers and bit-exact PGM/PPM/PFM/PRAW I/O;
//! * [`mosaic`] — decoding division-of-focal-plane polarization sensor
//!   readouts into four per-angle RGB images;
//! * [`stokes`] — Stokes parameters, DOLP/AOLP maps, Malus's law;
//! * [`optics`] — Fresnel coefficients, Brewster angle, and a physically
//!   correct scene simulator that serves as the ground-truth oracle for
//!   every separation test;
//! * [`align`] — phase correlation and per-channel affine alignment;
//! * [`separate`] — mixing-model inversion, edge-space coefficient
//!   search, and Brewster-angle Stokes separation;
//! * [`diffusion`] — DDPM noise schedules, forward/reverse steps, and the
//!   diffusion loss with a pluggable denoiser;
//! * [`metrics`] — L1, total-variation, Fourier-phase, PSNR and SSIM
//!   metrics plus the weighted stage losses.
//!
//! The companion `polarkit` CLI wires these into `decode`, `simulate`,
//! `separate`, `align`, `metrics`, `diffuse` and `pipeline` subcommands.
//! A book-length guide with runnable examples lives in `book/` at the
//! repository root; its code snippets compile and run as doc-tests.

pub mod align;
pub mod diffusion;
pub mod error;
pub mod fourier;
pub mod image;
pub mod io;
pub mod kv;
pub mod metrics;
pub mod mosaic;
pub mod optics;
pub mod separate;
pub mod stokes;

pub use error::{Error, Result};
pub use image::{Image, RawMosaic};
