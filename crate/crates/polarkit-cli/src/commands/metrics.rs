//! `polarkit metrics`: fixed-order machine-readable metric lines.

use std::path::Path;

use polarkit::error::Result;
use polarkit::io::read_image;
use polarkit::metrics::{l1, phase_loss, psnr, ssim, tv_loss};

pub fn run(reference: &Path, test: &Path) -> Result<()> {
    let a = read_image(reference)?;
    let b = read_image(test)?;
    // Fixed output order; one key=value line per metric.
    println!("l1={}", l1(&a, &b)?);
    println!("tv={}", tv_loss(&a, &b)?);
    println!("phase={}", phase_loss(&a, &b)?);
    println!("psnr={}", psnr(&a, &b, 1.0)?);
    println!("ssim={}", ssim(&a, &b)?);
    Ok(())
}
