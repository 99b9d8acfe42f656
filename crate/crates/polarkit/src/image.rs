//! Image buffers shared by every stage of the toolkit.
//!
//! An [`Image`] stores linear radiance as `f64` samples in row-major,
//! channel-interleaved order with the origin at the top-left corner
//! (y grows downward). Samples are nominally in `[0, 1]` but values above
//! 1 are permitted for HDR intermediates; files quantize only at the I/O
//! boundary. A [`RawMosaic`] is one unprocessed sensor readout of a
//! polarized color-filter-array camera.
//!
//! Images are immutable in all pipeline operations: every function takes
//! inputs by reference and returns fresh buffers, so values can be shared
//! freely across threads.

use crate::error::{Error, Result};

/// A real-valued raster with 1 (mono) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Creates an image filled with zeros.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_vec(width, height, channels, vec![0.0; width * height * channels])
    }

    /// Creates an image filled with a constant value.
    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::from_vec(width, height, channels, vec![value; width * height * channels])
    }

    /// Wraps a row-major, channel-interleaved sample buffer.
    ///
    /// Rejects empty geometry, channel counts other than 1 or 3, length
    /// mismatches, and non-finite samples.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Usage(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Usage(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Usage(format!(
                "sample buffer holds {} values, expected {}x{}x{} = {}",
                data.len(),
                width,
                height,
                channels,
                width * height * channels
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Usage(format!("non-finite sample {bad} in image data")));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Flat view of the samples in storage order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    /// Sample at column `x`, row `y`, channel `c`.
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        let i = self.index(x, y, c);
        self.data[i] = value;
    }

    /// True when `other` has the same width, height and channel count.
    pub fn same_geometry(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Returns a usage error unless both images share geometry.
    pub fn require_same_geometry(&self, other: &Image, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{what}: geometry mismatch, {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Applies `f` to every sample, producing a new image.
    ///
    /// The result must stay finite; a non-finite output is a usage error.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        Image::from_vec(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pixelwise combination of two images of identical geometry.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.require_same_geometry(other, "zip_map")?;
        Image::from_vec(
            self.width,
            self.height,
            self.channels,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    /// Extracts one channel as a mono image.
    pub fn channel(&self, c: usize) -> Result<Image> {
        if c >= self.channels {
            return Err(Error::Usage(format!(
                "channel {c} out of range for {}-channel image",
                self.channels
            )));
        }
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Image::from_vec(self.width, self.height, 1, data)
    }

    /// Interleaves mono planes into a multi-channel image.
    pub fn from_channels(planes: &[Image]) -> Result<Image> {
        if planes.is_empty() {
            return Err(Error::Usage("from_channels: no planes given".into()));
        }
        for p in planes {
            planes[0].require_same_geometry(p, "from_channels")?;
            if p.channels != 1 {
                return Err(Error::Usage("from_channels: planes must be mono".into()));
            }
        }
        let (w, h, c) = (planes[0].width, planes[0].height, planes.len());
        let mut data = vec![0.0; w * h * c];
        for (ci, p) in planes.iter().enumerate() {
            for (i, &v) in p.data.iter().enumerate() {
                data[i * c + ci] = v;
            }
        }
        Image::from_vec(w, h, c, data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Number of distinct values in a 16-bit sample, minus one.
pub const RAW_MAX: u16 = u16::MAX;

/// One sensor readout of a division-of-focal-plane polarized color camera.
///
/// Both dimensions must be multiples of 4 so that the 4x4 super-pattern
/// (2x2 micro-polarizer grid interleaved with a 2x2-block Bayer mosaic)
/// tiles evenly.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMosaic {
    width: usize,
    height: usize,
    bit_depth: u8,
    layout_id: u8,
    samples: Vec<u16>,
}

impl RawMosaic {
    /// Wraps raw sensor samples. `layout_id` must name a known layout
    /// (see [`crate::mosaic::MosaicLayout::from_id`]).
    pub fn from_samples(
        width: usize,
        height: usize,
        layout_id: u8,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || !width.is_multiple_of(4) || !height.is_multiple_of(4) {
            return Err(Error::Usage(format!(
                "mosaic dimensions must be nonzero multiples of 4, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::Usage(format!(
                "mosaic holds {} samples, expected {}",
                samples.len(),
                width * height
            )));
        }
        crate::mosaic::MosaicLayout::from_id(layout_id)?;
        Ok(Self { width, height, bit_depth: 16, layout_id, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn layout_id(&self) -> u8 {
        self.layout_id
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    /// Sample at column `x`, row `y`.
    #[inline]
    pub fn sample(&self, x: usize, y: usize) -> u16 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|&s| s as f64 / RAW_MAX as f64).sum();
        sum / self.samples.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_channel_count() {
        assert!(Image::zeros(2, 2, 2).is_err());
        assert!(Image::zeros(2, 2, 4).is_err());
        assert!(Image::zeros(2, 2, 1).is_ok());
        assert!(Image::zeros(2, 2, 3).is_ok());
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(Image::from_vec(2, 2, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(Image::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Image::from_vec(1, 1, 1, vec![f64::INFINITY]).is_err());
        assert!(matches!(
            Image::from_vec(1, 1, 1, vec![f64::NAN]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn indexing_is_row_major_interleaved() {
        let mut img = Image::zeros(3, 2, 3).unwrap();
        img.set(1, 1, 2, 0.5);
        assert_eq!(img.data()[(3 + 1) * 3 + 2], 0.5);
        assert_eq!(img.get(1, 1, 2), 0.5);
    }

    #[test]
    fn channel_split_and_merge_round_trip() {
        let data: Vec<f64> = (0..2 * 2 * 3).map(|i| i as f64).collect();
        let img = Image::from_vec(2, 2, 3, data).unwrap();
        let planes: Vec<Image> = (0..3).map(|c| img.channel(c).unwrap()).collect();
        assert_eq!(planes[1].get(0, 1, 0), img.get(0, 1, 1));
        let merged = Image::from_channels(&planes).unwrap();
        assert_eq!(merged, img);
    }

    #[test]
    fn mosaic_requires_multiple_of_four() {
        assert!(RawMosaic::from_samples(6, 4, 0, vec![0; 24]).is_err());
        assert!(RawMosaic::from_samples(4, 4, 0, vec![0; 16]).is_ok());
    }

    #[test]
    fn mosaic_rejects_unknown_layout() {
        assert!(matches!(
            RawMosaic::from_samples(4, 4, 255, vec![0; 16]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn images_are_send_and_sync() {
        fn check<T: Send + Sync>() {}
        check::<Image>();
        check::<RawMosaic>();
    }
}
