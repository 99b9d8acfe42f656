//! `polarkit align`: estimate and apply an alignment transform.
//!
//! With a correspondence file the transform is a least-squares affine
//! fit (points are `reference -> moving`, matching the inverse-warp
//! convention). Without one, each channel is aligned independently by
//! integer phase correlation.

use std::path::Path;

use polarkit::align::{estimate_affine, phase_correlate, warp_channels, AffineTransform, Correspondences};
use polarkit::error::Result;
use polarkit::io::{read_image, write_image, ImageFormat};

use crate::config::PipelineConfig;
use crate::report::Report;

pub fn run(
    config: &PipelineConfig,
    reference: &Path,
    moving: &Path,
    correspondences: Option<&Path>,
    quiet: bool,
) -> Result<()> {
    let reference = read_image(reference)?;
    let moving = read_image(moving)?;
    reference.require_same_geometry(&moving, "align inputs")?;

    let mut report = Report::new();
    let transforms: Vec<AffineTransform> = match correspondences {
        Some(path) => {
            let corr = Correspondences::from_file(path)?;
            let t = estimate_affine(&corr)?;
            report.push("method", "correspondences");
            report.push("pairs", corr.len());
            vec![t; moving.channels()]
        }
        None => {
            report.push("method", "phase-correlation");
            let mut ts = Vec::with_capacity(moving.channels());
            for c in 0..moving.channels() {
                let (dx, dy) = phase_correlate(&reference.channel(c)?, &moving.channel(c)?)?;
                report.push(&format!("shift_channel{c}"), format!("{dx} {dy}"));
                // Moving content sits (dx, dy) from the reference; shift
                // it back.
                ts.push(AffineTransform::translation(-(dx as f64), -(dy as f64)));
            }
            ts
        }
    };

    for (c, t) in transforms.iter().enumerate() {
        let m = t.coefficients();
        report.push(
            &format!("transform_channel{c}"),
            format!("{} {} {} {} {} {}", m[0], m[1], m[2], m[3], m[4], m[5]),
        );
    }

    let warped = warp_channels(&moving, &transforms)?;
    let out = &config.out_dir;
    write_image(&warped, out.join("warped.pfm"), ImageFormat::Pfm)?;
    report.write(out.join("transform.txt"))?;

    if !quiet {
        println!("align: {} channel transform(s) -> {}", transforms.len(), out.display());
    }
    Ok(())
}
