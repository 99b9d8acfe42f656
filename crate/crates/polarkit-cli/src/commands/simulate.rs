//! `polarkit simulate`: render a fully labeled synthetic mixture.

use std::path::Path;

use polarkit::error::{Error, Result};
use polarkit::image::Image;
use polarkit::io::{read_image, write_image, write_raw, ImageFormat};
use polarkit::mosaic::MosaicLayout;
use polarkit::optics::{brewster_angle, render_mosaic, synthesize};

use crate::config::PipelineConfig;
use crate::report::Report;

pub fn run(
    config: &PipelineConfig,
    transmission: &Path,
    reflection: Option<&Path>,
    no_reflection: bool,
    quiet: bool,
) -> Result<()> {
    let t = read_image(transmission)?;
    let r = match (reflection, no_reflection) {
        (Some(path), false) => read_image(path)?,
        (None, true) => Image::zeros(t.width(), t.height(), t.channels())?,
        (None, false) => {
            return Err(Error::Usage(
                "provide --reflection PATH or pass --no-reflection".into(),
            ))
        }
        (Some(_), true) => {
            return Err(Error::Usage(
                "--reflection and --no-reflection are mutually exclusive".into(),
            ))
        }
    };

    let scene = config.scene.scene(t, r)?;
    let synth = synthesize(&scene);
    let layout = MosaicLayout::from_id(config.layout_id)?;
    let rendered = render_mosaic(&scene, &layout)?;

    let out = &config.out_dir;
    write_image(synth.frame.i0(), out.join("m0.pfm"), ImageFormat::Pfm)?;
    write_image(synth.frame.i45(), out.join("m45.pfm"), ImageFormat::Pfm)?;
    write_image(synth.frame.i90(), out.join("m90.pfm"), ImageFormat::Pfm)?;
    write_image(synth.frame.i135(), out.join("m135.pfm"), ImageFormat::Pfm)?;
    write_raw(&rendered.mosaic, out.join("mixed.praw"))?;
    write_image(&synth.transmission_component(), out.join("t_component.pfm"), ImageFormat::Pfm)?;
    write_image(&synth.reflection_component(), out.join("r_component.pfm"), ImageFormat::Pfm)?;
    write_image(synth.mixed.s0(), out.join("mixed_s0.pfm"), ImageFormat::Pfm)?;

    let mut gt = Report::new();
    gt.push("alpha_t", synth.alpha_t);
    gt.push("alpha_r", synth.alpha_r);
    gt.push("dolp_reflection", synth.dolp_reflection);
    gt.push("dolp_transmission", synth.dolp_transmission);
    gt.push("n1", config.scene.n1);
    gt.push("n2", config.scene.n2);
    gt.push("theta_deg", config.scene.theta_deg);
    gt.push("brewster_deg", brewster_angle(config.scene.n1, config.scene.n2)?.to_degrees());
    gt.push("phi_perp_deg", config.scene.phi_perp_deg);
    gt.push("layout_id", config.layout_id);
    gt.push("clipped_samples", rendered.clipped);
    gt.write(out.join("ground_truth.txt"))?;

    if !quiet {
        println!(
            "simulate: alpha_t={:.6} alpha_r={:.6} dolp_r={:.6} -> {}",
            synth.alpha_t,
            synth.alpha_r,
            synth.dolp_reflection,
            out.display()
        );
    }
    Ok(())
}
