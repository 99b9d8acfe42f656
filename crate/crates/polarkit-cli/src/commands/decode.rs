//! `polarkit decode`: PRAW -> per-angle images + polarization maps.

use std::path::Path;

use polarkit::error::Result;
use polarkit::image::Image;
use polarkit::io::{read_raw, write_image, ImageFormat};
use polarkit::mosaic::{decode_frame, MosaicLayout};
use polarkit::stokes::{aolp, compute_stokes, dolp, unpolarized};

use crate::config::PipelineConfig;

pub fn run(config: &PipelineConfig, raw: &Path, layout: Option<u8>, quiet: bool) -> Result<()> {
    let mosaic = read_raw(raw)?;
    let layout = MosaicLayout::from_id(layout.unwrap_or(mosaic.layout_id()))?;

    let frame = decode_frame(&mosaic, &layout)?;
    let stokes = compute_stokes(&frame);
    let dolp_map = dolp(&stokes);
    let aolp_map = aolp(&stokes);
    let unpol = unpolarized(&frame);

    let out = &config.out_dir;
    write_image(frame.i0(), out.join("i0.pfm"), ImageFormat::Pfm)?;
    write_image(frame.i45(), out.join("i45.pfm"), ImageFormat::Pfm)?;
    write_image(frame.i90(), out.join("i90.pfm"), ImageFormat::Pfm)?;
    write_image(frame.i135(), out.join("i135.pfm"), ImageFormat::Pfm)?;
    write_image(stokes.s0(), out.join("s0.pfm"), ImageFormat::Pfm)?;
    write_image(&dolp_map, out.join("dolp.pfm"), ImageFormat::Pfm)?;
    write_image(&aolp_map.angle, out.join("aolp.pfm"), ImageFormat::Pfm)?;
    write_image(&unpol, out.join("unpolarized.pfm"), ImageFormat::Pfm)?;

    // Degeneracy mask as a binary integer image.
    let mask = Image::from_vec(
        aolp_map.angle.width(),
        aolp_map.angle.height(),
        aolp_map.angle.channels(),
        aolp_map.degenerate.iter().map(|&d| if d { 1.0 } else { 0.0 }).collect(),
    )?;
    let mask_format = if mask.channels() == 1 { ImageFormat::Pgm } else { ImageFormat::Ppm };
    write_image(&mask, out.join(format!("aolp_degenerate.{}", mask_format.extension())), mask_format)?;

    if !quiet {
        println!(
            "decode: {}x{} mosaic -> 9 files in {}",
            mosaic.width(),
            mosaic.height(),
            out.display()
        );
    }
    Ok(())
}
