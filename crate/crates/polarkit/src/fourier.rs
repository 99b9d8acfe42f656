//! Small 2-D FFT wrapper shared by phase correlation and the phase loss.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place forward 2-D FFT of a row-major `width` x `height` buffer.
pub fn fft_2d(data: &mut [Complex64], width: usize, height: usize) {
    transform_2d(data, width, height, rustfft::FftDirection::Forward);
}

/// In-place inverse 2-D FFT, normalized by `1 / (width * height)`.
pub fn ifft_2d(data: &mut [Complex64], width: usize, height: usize) {
    transform_2d(data, width, height, rustfft::FftDirection::Inverse);
    let norm = 1.0 / (width * height) as f64;
    for v in data.iter_mut() {
        *v *= norm;
    }
}

fn transform_2d(
    data: &mut [Complex64],
    width: usize,
    height: usize,
    direction: rustfft::FftDirection,
) {
    assert_eq!(data.len(), width * height, "buffer does not match dimensions");
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(width, direction);
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft(height, direction);
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Real samples to complex spectrum via [`fft_2d`].
pub fn fft_2d_real(samples: &[f64], width: usize, height: usize) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut data, width, height);
    data
}

/// Next power of two at or above `n`.
pub fn next_power_of_two(n: usize) -> usize {
    n.next_power_of_two()
}
