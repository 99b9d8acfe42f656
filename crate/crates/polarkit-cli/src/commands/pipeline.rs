//! `polarkit pipeline`: align -> decode -> Stokes -> unpolarized
//! reconstruction -> reflection estimation, with a summary report.
//!
//! Alignment happens before demosaicking, independently per polarization
//! angle and Bayer color plane (16 planes total), so no interpolation
//! ever mixes samples across filter sites. The aligned mixed capture is
//! then decoded alongside the transmission reference, separated both by
//! the edge-space coefficient search and by Brewster Stokes separation,
//! and scored against the reference with the full metric suite.

use std::collections::BTreeMap;

use polarkit::align::{estimate_affine, phase_correlate, warp, AffineTransform, Correspondences};
use polarkit::error::{Error, Result};
use polarkit::image::Image;
use polarkit::io::{read_raw, write_image, ImageFormat};
use polarkit::mosaic::{demosaic_bilinear, merge_sites, split_angles, split_sites, MosaicLayout};
use polarkit::metrics::{l1, phase_loss, psnr, ssim, tv_loss};
use polarkit::separate::{search_alpha_edge_with, separate_brewster};
use polarkit::stokes::{aolp, compute_stokes, dolp, unpolarized, PolarFrame};

use crate::config::{CorrespondenceSource, PipelineConfig};
use crate::report::Report;

fn stage<T>(label: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{label} stage: {m}")),
        Error::Usage(m) => Error::Usage(format!("{label} stage: {m}")),
        Error::Domain(m) => Error::Domain(format!("{label} stage: {m}")),
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{label} stage: {io}"))),
    })
}

const ANGLES: [u16; 4] = [0, 45, 90, 135];

pub fn run(config: &PipelineConfig, quiet: bool) -> Result<()> {
    let mixed_path = config.mixed_raw.as_ref().ok_or_else(|| {
        Error::Usage("pipeline needs mixed_raw = <path> in the config".into())
    })?;
    let trans_path = config.transmission_raw.as_ref().ok_or_else(|| {
        Error::Usage("pipeline needs transmission_raw = <path> in the config".into())
    })?;

    // Input stage. The layout comes from the PRAW headers, which must
    // agree between the two captures.
    let mixed_raw = stage("input", read_raw(mixed_path))?;
    let trans_raw = stage("input", read_raw(trans_path))?;
    if mixed_raw.layout_id() != trans_raw.layout_id() {
        return Err(Error::Usage(format!(
            "input stage: layout mismatch, mixed has {} but transmission has {}",
            mixed_raw.layout_id(),
            trans_raw.layout_id()
        )));
    }
    let layout_id = mixed_raw.layout_id();
    let layout = stage("input", MosaicLayout::from_id(layout_id))?;

    // Split into per-angle quarter-resolution Bayer images.
    let mixed_quarters = stage("split", split_angles(&mixed_raw, &layout))?;
    let trans_quarters = stage("split", split_angles(&trans_raw, &layout))?;

    // Alignment stage: per angle and per Bayer site plane.
    let mut report = Report::new();
    report.push("layout_id", layout_id);
    let mut aligned_quarters: Vec<Image> = Vec::with_capacity(4);
    let mut plane_shifts: Vec<(i64, i64)> = Vec::new();
    let mut all_identity = true;

    let file_transform = match &config.correspondences {
        CorrespondenceSource::File(path) => {
            let corr = stage("align", Correspondences::from_file(path))?;
            Some(stage("align", estimate_affine(&corr))?)
        }
        CorrespondenceSource::Auto => None,
    };

    for (idx, angle) in ANGLES.iter().enumerate() {
        let m_quarter = mixed_quarters.angles()[idx];
        let t_quarter = trans_quarters.angles()[idx];
        let m_planes = stage("align", split_sites(m_quarter))?;
        let t_planes = stage("align", split_sites(t_quarter))?;
        let (r_a, c_a) = layout.angle_offset(*angle)?;

        let mut warped_planes = Vec::with_capacity(4);
        for (p, (m_plane, t_plane)) in m_planes.iter().zip(&t_planes).enumerate() {
            let (pr, pc) = (p / 2, p % 2);
            let transform = match &file_transform {
                Some(t_mosaic) => {
                    // Conjugate the mosaic-space transform into this
                    // plane's coordinates: plane -> mosaic -> plane.
                    let (ox, oy) = ((2 * pc + c_a) as f64, (2 * pr + r_a) as f64);
                    let plane_to_mosaic =
                        AffineTransform::new([4.0, 0.0, ox, 0.0, 4.0, oy])?;
                    let mosaic_to_plane =
                        AffineTransform::new([0.25, 0.0, -ox / 4.0, 0.0, 0.25, -oy / 4.0])?;
                    mosaic_to_plane.compose(t_mosaic)?.compose(&plane_to_mosaic)?
                }
                None => {
                    let (dx, dy) = stage("align", phase_correlate(t_plane, m_plane))?;
                    plane_shifts.push((dx, dy));
                    report.push(
                        &format!("shift_plane_a{angle}_s{pr}{pc}"),
                        format!("{dx} {dy}"),
                    );
                    AffineTransform::translation(-(dx as f64), -(dy as f64))
                }
            };
            if transform != AffineTransform::identity() {
                all_identity = false;
            }
            warped_planes.push(stage("align", warp(m_plane, &transform))?);
        }
        let merged = stage(
            "align",
            merge_sites(&[
                warped_planes[0].clone(),
                warped_planes[1].clone(),
                warped_planes[2].clone(),
                warped_planes[3].clone(),
            ]),
        )?;
        aligned_quarters.push(merged);
    }
    report.push("alignment_identity", all_identity);

    if !plane_shifts.is_empty() {
        // Consensus shift in mosaic coordinates (site planes subsample
        // the mosaic by 4 in each direction).
        let mut counts: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        for &s in &plane_shifts {
            *counts.entry(s).or_default() += 1;
        }
        let ((dx, dy), votes) =
            counts.iter().max_by_key(|(s, &c)| (c, std::cmp::Reverse(*s))).expect("nonempty");
        report.push("shift_mosaic", format!("{} {}", 4 * dx, 4 * dy));
        report.push("shift_consensus", format!("{votes}/{}", plane_shifts.len()));
    }

    // Decode stage: demosaic every angle of both captures.
    let pattern = layout.bayer_pattern();
    let decode4 = |quarters: &[Image]| -> Result<PolarFrame> {
        PolarFrame::new(
            demosaic_bilinear(&quarters[0], pattern)?,
            demosaic_bilinear(&quarters[1], pattern)?,
            demosaic_bilinear(&quarters[2], pattern)?,
            demosaic_bilinear(&quarters[3], pattern)?,
        )
    };
    let mixed_frame = stage("decode", decode4(&aligned_quarters))?;
    let trans_frame = stage(
        "decode",
        decode4(&[
            trans_quarters.i0().clone(),
            trans_quarters.i45().clone(),
            trans_quarters.i90().clone(),
            trans_quarters.i135().clone(),
        ]),
    )?;

    // Stokes + unpolarized reconstruction.
    let mixed_stokes = compute_stokes(&mixed_frame);
    let m_unpol = unpolarized(&mixed_frame);
    let t_unpol = unpolarized(&trans_frame);
    let m_dolp = dolp(&mixed_stokes);
    let m_aolp = aolp(&mixed_stokes);

    // Reflection estimation: edge-space search against the reference.
    let edge = stage("separate", search_alpha_edge_with(&m_unpol, &t_unpol, &config.edge_search))?;
    report.push("alpha_t_edge", edge.alpha_t);
    report.push("alpha_r_edge", edge.alpha_r);
    report.push("objective_edge", edge.objective_value);
    report.push("clip_fraction_edge", edge.clip_fraction);

    // Brewster Stokes separation from the mixed capture alone.
    let p_r = stage("separate", config.brewster_p_r())?;
    let brewster = stage("separate", separate_brewster(&mixed_stokes, p_r))?;
    report.push("p_r", p_r);
    report.push("clip_fraction_brewster", brewster.clip_fraction);

    // Metric suite: recovered transmission against the reference.
    report.push("l1", stage("metrics", l1(&brewster.t_hat, &t_unpol))?);
    report.push("tv", stage("metrics", tv_loss(&brewster.t_hat, &t_unpol))?);
    report.push("phase", stage("metrics", phase_loss(&brewster.t_hat, &t_unpol))?);
    let transmission_psnr = stage("metrics", psnr(&brewster.t_hat, &t_unpol, 1.0))?;
    report.push("psnr", transmission_psnr);
    report.push("ssim", stage("metrics", ssim(&brewster.t_hat, &t_unpol))?);

    // Output stage.
    let out = &config.out_dir;
    let w = |name: &str, img: &Image| write_image(img, out.join(name), ImageFormat::Pfm);
    stage("output", w("m_i0.pfm", mixed_frame.i0()))?;
    stage("output", w("m_i45.pfm", mixed_frame.i45()))?;
    stage("output", w("m_i90.pfm", mixed_frame.i90()))?;
    stage("output", w("m_i135.pfm", mixed_frame.i135()))?;
    stage("output", w("t_i0.pfm", trans_frame.i0()))?;
    stage("output", w("t_i45.pfm", trans_frame.i45()))?;
    stage("output", w("t_i90.pfm", trans_frame.i90()))?;
    stage("output", w("t_i135.pfm", trans_frame.i135()))?;
    stage("output", w("m_s0.pfm", mixed_stokes.s0()))?;
    stage("output", w("m_dolp.pfm", &m_dolp))?;
    stage("output", w("m_aolp.pfm", &m_aolp.angle))?;
    stage("output", w("m_unpolarized.pfm", &m_unpol))?;
    stage("output", w("t_unpolarized.pfm", &t_unpol))?;
    stage("output", w("t_hat.pfm", &brewster.t_hat))?;
    stage("output", w("r_hat.pfm", &brewster.r_hat))?;
    stage("output", w("r_hat_edge.pfm", &edge.r_hat))?;
    stage("output", report.write(out.join("summary.txt")))?;

    if !quiet {
        println!(
            "pipeline: alpha_t_edge={:.4} transmission psnr={:.2} dB -> {}",
            edge.alpha_t,
            transmission_psnr,
            out.display()
        );
    }
    Ok(())
}
