//! Division-of-focal-plane mosaic decoding.
//!
//! A DoFP polarization camera interleaves a 2x2 grid of micro-polarizers
//! (0°, 45°, 90°, 135°) with a color Bayer mosaic applied at 2x2-block
//! granularity, so a 4x4 super-pattern tiles the sensor. Decoding splits
//! the readout into four quarter-resolution Bayer images (one per angle)
//! and then demosaics each into RGB.
//!
//! The exact sensor arrangement differs between camera models and is
//! selected by a [`MosaicLayout`]; the default matches common commercial
//! RGB-polarization sensors but is configurable rather than assumed.

use crate::error::{Error, Result};
use crate::image::{Image, RawMosaic, RAW_MAX};
use crate::stokes::PolarFrame;

/// Color of one Bayer cell. Channel order in decoded images is R, G, B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BayerColor {
    Red,
    Green,
    Blue,
}

impl BayerColor {
    /// Channel index of this color in an RGB image.
    pub fn channel(&self) -> usize {
        match self {
            BayerColor::Red => 0,
            BayerColor::Green => 1,
            BayerColor::Blue => 2,
        }
    }
}

use BayerColor::{Blue as B, Green as G, Red as R};

/// Sensor arrangement: which polarizer angle and Bayer color sits at each
/// site of the 4x4 super-pattern.
///
/// `angle_pattern[row % 2][col % 2]` gives the polarizer angle in degrees,
/// and `bayer_pattern[(row / 2) % 2][(col / 2) % 2]` the color of the
/// 2x2 block a site belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MosaicLayout {
    angle_pattern: [[u16; 2]; 2],
    bayer_pattern: [[BayerColor; 2]; 2],
}

impl MosaicLayout {
    /// Validates that the angles are a permutation of {0, 45, 90, 135}
    /// and the Bayer grid holds exactly one red, one blue and two greens.
    pub fn new(angle_pattern: [[u16; 2]; 2], bayer_pattern: [[BayerColor; 2]; 2]) -> Result<Self> {
        let mut angles: Vec<u16> = angle_pattern.iter().flatten().copied().collect();
        angles.sort_unstable();
        if angles != [0, 45, 90, 135] {
            return Err(Error::Usage(format!(
                "angle pattern {angle_pattern:?} is not a permutation of 0/45/90/135"
            )));
        }
        let count = |c: BayerColor| bayer_pattern.iter().flatten().filter(|&&x| x == c).count();
        if count(R) != 1 || count(G) != 2 || count(B) != 1 {
            return Err(Error::Usage(format!(
                "bayer pattern {bayer_pattern:?} must hold one red, two greens, one blue"
            )));
        }
        Ok(Self { angle_pattern, bayer_pattern })
    }

    /// Looks up a layout by its PRAW header tag.
    ///
    /// | id | angles (row-major)   | bayer |
    /// |----|----------------------|-------|
    /// | 0  | 90, 45 / 135, 0      | RGGB  |
    /// | 1  | 0, 45 / 135, 90      | RGGB  |
    /// | 2  | 90, 45 / 135, 0      | BGGR  |
    pub fn from_id(id: u8) -> Result<Self> {
        let layout = match id {
            0 => Self::new([[90, 45], [135, 0]], [[R, G], [G, B]]),
            1 => Self::new([[0, 45], [135, 90]], [[R, G], [G, B]]),
            2 => Self::new([[90, 45], [135, 0]], [[B, G], [G, R]]),
            _ => return Err(Error::Format(format!("unknown layout id {id}"))),
        };
        Ok(layout.expect("built-in layouts are valid"))
    }

    pub fn angle_pattern(&self) -> [[u16; 2]; 2] {
        self.angle_pattern
    }

    pub fn bayer_pattern(&self) -> [[BayerColor; 2]; 2] {
        self.bayer_pattern
    }

    /// (row, col) offset of `angle_deg` within the 2x2 micro-polarizer grid.
    pub fn angle_offset(&self, angle_deg: u16) -> Result<(usize, usize)> {
        for r in 0..2 {
            for c in 0..2 {
                if self.angle_pattern[r][c] == angle_deg {
                    return Ok((r, c));
                }
            }
        }
        Err(Error::Usage(format!("angle {angle_deg} not in layout")))
    }
}

impl Default for MosaicLayout {
    fn default() -> Self {
        Self::from_id(0).expect("layout 0 is built in")
    }
}

/// Splits a mosaic into four quarter-resolution Bayer images keyed by
/// polarizer angle, converted to `[0, 1]`.
///
/// Output pixel (row `i`, col `j`) of the image for angle `a` is the
/// mosaic sample at (2i + r_a, 2j + c_a), where (r_a, c_a) locates `a`
/// in the layout's angle pattern. Every mosaic sample lands in exactly
/// one quarter image.
pub fn split_angles(mosaic: &RawMosaic, layout: &MosaicLayout) -> Result<PolarFrame> {
    if !mosaic.width().is_multiple_of(4) || !mosaic.height().is_multiple_of(4) {
        return Err(Error::Usage(format!(
            "mosaic dimensions must be multiples of 4, got {}x{}",
            mosaic.width(),
            mosaic.height()
        )));
    }
    let (w, h) = (mosaic.width() / 2, mosaic.height() / 2);
    let extract = |angle: u16| -> Result<Image> {
        let (r_a, c_a) = layout.angle_offset(angle)?;
        let mut data = vec![0.0; w * h];
        for i in 0..h {
            for j in 0..w {
                data[i * w + j] = mosaic.sample(2 * j + c_a, 2 * i + r_a) as f64 / RAW_MAX as f64;
            }
        }
        Image::from_vec(w, h, 1, data)
    };
    PolarFrame::new(extract(0)?, extract(45)?, extract(90)?, extract(135)?)
}

/// Parity-preserving reflected index (OpenCV's `BORDER_REFLECT_101`):
/// -1 maps to 1 and n maps to n-2, so Bayer color phase survives the
/// border extension.
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

/// Bilinear demosaicking of a single-channel Bayer image.
///
/// At a pixel whose native color is `c`, channel `c` passes the sample
/// through unchanged; missing channels are averages of the nearest
/// same-color neighbors (horizontal, vertical, or diagonal as the
/// pattern dictates), with reflect padding at the borders.
pub fn demosaic_bilinear(bayer: &Image, pattern: [[BayerColor; 2]; 2]) -> Result<Image> {
    if bayer.channels() != 1 {
        return Err(Error::Usage("demosaic input must be single-channel".into()));
    }
    if bayer.width() < 2 || bayer.height() < 2 {
        return Err(Error::Usage("demosaic input must be at least 2x2".into()));
    }
    let (w, h) = (bayer.width(), bayer.height());
    let at = |x: isize, y: isize| bayer.get(reflect_index(x, w), reflect_index(y, h), 0);
    let mut out = vec![0.0; w * h * 3];

    // Cells of the 2x2 pattern holding each color.
    let cells_of = |color: BayerColor| -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for (r, row) in pattern.iter().enumerate() {
            for (c, &col) in row.iter().enumerate() {
                if col == color {
                    cells.push((r, c));
                }
            }
        }
        cells
    };

    for color in [R, G, B] {
        let cells = cells_of(color);
        let ch = color.channel();
        for y in 0..h {
            for x in 0..w {
                let (py, px) = (y % 2, x % 2);
                let native = cells.iter().any(|&(r, c)| r == py && c == px);
                let (xi, yi) = (x as isize, y as isize);
                let v = if native {
                    bayer.get(x, y, 0)
                } else if cells.len() == 2 {
                    // Green at a red or blue site: four axis neighbors.
                    (at(xi - 1, yi) + at(xi + 1, yi) + at(xi, yi - 1) + at(xi, yi + 1)) / 4.0
                } else {
                    let (r, c) = cells[0];
                    if r == py {
                        (at(xi - 1, yi) + at(xi + 1, yi)) / 2.0
                    } else if c == px {
                        (at(xi, yi - 1) + at(xi, yi + 1)) / 2.0
                    } else {
                        (at(xi - 1, yi - 1)
                            + at(xi + 1, yi - 1)
                            + at(xi - 1, yi + 1)
                            + at(xi + 1, yi + 1))
                            / 4.0
                    }
                };
                out[(y * w + x) * 3 + ch] = v;
            }
        }
    }
    Image::from_vec(w, h, 3, out)
}

/// Decodes a raw mosaic into four co-registered RGB images.
pub fn decode_frame(mosaic: &RawMosaic, layout: &MosaicLayout) -> Result<PolarFrame> {
    let quarters = split_angles(mosaic, layout)?;
    let pattern = layout.bayer_pattern();
    PolarFrame::new(
        demosaic_bilinear(quarters.i0(), pattern)?,
        demosaic_bilinear(quarters.i45(), pattern)?,
        demosaic_bilinear(quarters.i90(), pattern)?,
        demosaic_bilinear(quarters.i135(), pattern)?,
    )
}

/// Splits a mono image into its four 2x2-parity site planes, indexed
/// `[row_parity * 2 + col_parity]`. Used for per-color-channel alignment
/// of Bayer images, where each plane carries a single color.
pub fn split_sites(img: &Image) -> Result<[Image; 4]> {
    if img.channels() != 1 {
        return Err(Error::Usage("site split expects a mono image".into()));
    }
    if !img.width().is_multiple_of(2) || !img.height().is_multiple_of(2) {
        return Err(Error::Usage("site split expects even dimensions".into()));
    }
    let (w, h) = (img.width() / 2, img.height() / 2);
    let mut planes = Vec::with_capacity(4);
    for pr in 0..2 {
        for pc in 0..2 {
            let mut data = vec![0.0; w * h];
            for y in 0..h {
                for x in 0..w {
                    data[y * w + x] = img.get(2 * x + pc, 2 * y + pr, 0);
                }
            }
            planes.push(Image::from_vec(w, h, 1, data)?);
        }
    }
    Ok(planes.try_into().expect("four planes"))
}

/// Inverse of [`split_sites`].
pub fn merge_sites(planes: &[Image; 4]) -> Result<Image> {
    for p in planes {
        planes[0].require_same_geometry(p, "merge_sites")?;
        if p.channels() != 1 {
            return Err(Error::Usage("site merge expects mono planes".into()));
        }
    }
    let (w, h) = (planes[0].width() * 2, planes[0].height() * 2);
    let mut out = Image::zeros(w, h, 1)?;
    for pr in 0..2 {
        for pc in 0..2 {
            let plane = &planes[pr * 2 + pc];
            for y in 0..plane.height() {
                for x in 0..plane.width() {
                    out.set(2 * x + pc, 2 * y + pr, 0, plane.get(x, y, 0));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mosaic_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> RawMosaic {
        let mut samples = vec![0u16; w * h];
        for y in 0..h {
            for x in 0..w {
                samples[y * w + x] = f(x, y);
            }
        }
        RawMosaic::from_samples(w, h, 0, samples).unwrap()
    }

    #[test]
    fn indicator_fixture_routes_to_one_angle() {
        let layout = MosaicLayout::default();
        let (r0, c0) = layout.angle_offset(0).unwrap();
        let mosaic = mosaic_from_fn(8, 8, |x, y| {
            if y % 2 == r0 && x % 2 == c0 {
                RAW_MAX
            } else {
                0
            }
        });
        let frame = split_angles(&mosaic, &layout).unwrap();
        assert!(frame.i0().data().iter().all(|&v| v == 1.0));
        for img in [frame.i45(), frame.i90(), frame.i135()] {
            assert!(img.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_index_fixture_lands_at_known_sites() {
        let layout = MosaicLayout::default();
        let mosaic = mosaic_from_fn(4, 4, |x, y| (y * 4 + x) as u16);
        let frame = split_angles(&mosaic, &layout).unwrap();
        // Layout 0 places 90 at (0,0), 45 at (0,1), 135 at (1,0), 0 at (1,1).
        // Hand-indexed linear indices per angle site:
        let expect = |img: &Image, idx: [u16; 4]| {
            let want: Vec<f64> = idx.iter().map(|&i| i as f64 / RAW_MAX as f64).collect();
            assert_eq!(img.data(), &want[..]);
        };
        expect(frame.i90(), [0, 2, 8, 10]);
        expect(frame.i45(), [1, 3, 9, 11]);
        expect(frame.i135(), [4, 6, 12, 14]);
        expect(frame.i0(), [5, 7, 13, 15]);
    }

    #[test]
    fn default_layout_routes_origin_to_ninety() {
        let layout = MosaicLayout::default();
        assert_eq!(layout.angle_pattern(), [[90, 45], [135, 0]]);
        let mosaic = mosaic_from_fn(4, 4, |x, y| if x == 0 && y == 0 { RAW_MAX } else { 0 });
        let frame = split_angles(&mosaic, &layout).unwrap();
        assert_eq!(frame.i90().get(0, 0, 0), 1.0);
        assert_eq!(frame.i0().get(0, 0, 0), 0.0);
    }

    #[test]
    fn split_is_a_bijection_on_samples() {
        let layout = MosaicLayout::default();
        let mosaic = mosaic_from_fn(8, 8, |x, y| (y * 8 + x) as u16);
        let frame = split_angles(&mosaic, &layout).unwrap();
        let mut seen: Vec<f64> = frame
            .angles()
            .iter()
            .flat_map(|img| img.data().iter().copied())
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = mosaic
            .samples()
            .iter()
            .map(|&s| s as f64 / RAW_MAX as f64)
            .collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, want);
    }

    #[test]
    fn constant_bayer_demosaics_to_constant_rgb() {
        let bayer = Image::constant(6, 4, 1, 0.37).unwrap();
        let rgb = demosaic_bilinear(&bayer, MosaicLayout::default().bayer_pattern()).unwrap();
        for &v in rgb.data() {
            assert!((v - 0.37).abs() < 1e-15);
        }
    }

    #[test]
    fn rggb_native_red_passes_through() {
        // RGGB tile [R=1, G=0, G=0, B=0] tiled periodically.
        let mut bayer = Image::zeros(6, 6, 1).unwrap();
        for y in (0..6).step_by(2) {
            for x in (0..6).step_by(2) {
                bayer.set(x, y, 0, 1.0);
            }
        }
        let rgb = demosaic_bilinear(&bayer, [[R, G], [G, B]]).unwrap();
        for y in (0..6).step_by(2) {
            for x in (0..6).step_by(2) {
                assert_eq!(rgb.get(x, y, 0), 1.0);
            }
        }
        // Blue at red sites comes from diagonals, all zero here.
        assert_eq!(rgb.get(2, 2, 2), 0.0);
    }

    #[test]
    fn green_reproduces_horizontal_ramp_in_interior() {
        let w = 12;
        let mut bayer = Image::zeros(w, 8, 1).unwrap();
        for y in 0..8 {
            for x in 0..w {
                bayer.set(x, y, 0, 0.05 * x as f64 + 0.1);
            }
        }
        let rgb = demosaic_bilinear(&bayer, [[R, G], [G, B]]).unwrap();
        for y in 1..7 {
            for x in 1..w - 1 {
                let want = 0.05 * x as f64 + 0.1;
                assert!(
                    (rgb.get(x, y, 1) - want).abs() < 1e-12,
                    "green at ({x},{y}) = {} want {want}",
                    rgb.get(x, y, 1)
                );
            }
        }
    }

    #[test]
    fn uniform_mosaic_decodes_to_identical_constant_frames() {
        let mosaic = mosaic_from_fn(8, 8, |_, _| 30000);
        let frame = decode_frame(&mosaic, &MosaicLayout::default()).unwrap();
        let v = 30000.0 / RAW_MAX as f64;
        for img in frame.angles() {
            for &s in img.data() {
                assert!((s - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_mosaic_decodes_to_zero_frames() {
        let mosaic = mosaic_from_fn(8, 8, |_, _| 0);
        let frame = decode_frame(&mosaic, &MosaicLayout::default()).unwrap();
        for img in frame.angles() {
            assert!(img.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn energy_bookkeeping_for_constant_scenes() {
        let mosaic = mosaic_from_fn(8, 8, |_, _| 21111);
        let frame = split_angles(&mosaic, &MosaicLayout::default()).unwrap();
        let mean: f64 = frame.angles().iter().map(|img| img.mean()).sum::<f64>() / 4.0;
        assert!((mean - mosaic.mean()).abs() < 1e-9);
    }

    #[test]
    fn reflect_index_preserves_parity() {
        assert_eq!(reflect_index(-1, 8), 1);
        assert_eq!(reflect_index(-2, 8), 2);
        assert_eq!(reflect_index(8, 8), 6);
        assert_eq!(reflect_index(9, 8), 5);
        assert_eq!(reflect_index(3, 8), 3);
        assert_eq!(reflect_index(-1, 1), 0);
    }

    #[test]
    fn layout_validation() {
        assert!(MosaicLayout::new([[0, 45], [90, 90]], [[R, G], [G, B]]).is_err());
        assert!(MosaicLayout::new([[0, 45], [90, 135]], [[R, G], [G, G]]).is_err());
        assert!(MosaicLayout::from_id(255).is_err());
        assert!(MosaicLayout::from_id(1).is_ok());
        assert!(MosaicLayout::from_id(2).is_ok());
    }

    #[test]
    fn site_split_and_merge_round_trip() {
        let img = Image::from_vec(4, 4, 1, (0..16).map(|i| i as f64).collect()).unwrap();
        let planes = split_sites(&img).unwrap();
        assert_eq!(planes[0].get(0, 0, 0), 0.0);
        assert_eq!(planes[1].get(0, 0, 0), 1.0);
        assert_eq!(planes[2].get(0, 0, 0), 4.0);
        assert_eq!(planes[3].get(0, 0, 0), 5.0);
        assert_eq!(merge_sites(&planes).unwrap(), img);
    }
}
