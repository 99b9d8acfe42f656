//! `polarkit separate`: reflection/transmission separation.

use std::path::Path;

use polarkit::error::Result;
use polarkit::io::{read_image, write_image, ImageFormat};
use polarkit::separate::{search_alpha_edge_with, separate_brewster, SeparationResult};
use polarkit::stokes::{compute_stokes, PolarFrame};

use crate::config::PipelineConfig;
use crate::report::Report;

fn write_result(config: &PipelineConfig, result: &SeparationResult, extra: &[(&str, String)]) -> Result<()> {
    let out = &config.out_dir;
    write_image(&result.t_hat, out.join("t_hat.pfm"), ImageFormat::Pfm)?;
    write_image(&result.r_hat, out.join("r_hat.pfm"), ImageFormat::Pfm)?;
    let mut report = Report::new();
    report.push("alpha_t", result.alpha_t);
    report.push("alpha_r", result.alpha_r);
    report.push("objective", result.objective_value);
    report.push("clip_fraction", result.clip_fraction);
    for (k, v) in extra {
        report.push(k, v);
    }
    report.write(out.join("report.txt"))?;
    Ok(())
}

pub fn run_brewster(config: &PipelineConfig, frame_dir: &Path, quiet: bool) -> Result<()> {
    let frame = PolarFrame::new(
        read_image(frame_dir.join("i0.pfm"))?,
        read_image(frame_dir.join("i45.pfm"))?,
        read_image(frame_dir.join("i90.pfm"))?,
        read_image(frame_dir.join("i135.pfm"))?,
    )?;
    let stokes = compute_stokes(&frame);
    let p_r = config.brewster_p_r()?;
    let result = separate_brewster(&stokes, p_r)?;
    write_result(config, &result, &[("p_r", p_r.to_string()), ("method", "brewster".into())])?;
    if !quiet {
        println!("separate brewster: p_r={p_r:.6} clip_fraction={:.6}", result.clip_fraction);
    }
    Ok(())
}

pub fn run_edge_search(
    config: &PipelineConfig,
    mixed: &Path,
    transmission: &Path,
    quiet: bool,
) -> Result<()> {
    let m = read_image(mixed)?;
    let t = read_image(transmission)?;
    let result = search_alpha_edge_with(&m, &t, &config.edge_search)?;
    write_result(config, &result, &[("method", "edge-search".into())])?;
    if !quiet {
        println!(
            "separate edge-search: alpha_t={:.4} objective={:.6}",
            result.alpha_t, result.objective_value
        );
    }
    Ok(())
}
