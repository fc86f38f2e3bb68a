//! Tensor-product FFT over a cubic grid stored row-major (last axis fastest).

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized transform along every axis of a `points^dim` array.
///
/// `Forward` computes `sum_n x_n exp(-2 pi i k n / points)` per axis, `Inverse`
/// the same with the opposite sign.
pub(crate) fn fft_nd(values: &mut [Complex64], dim: usize, points: usize, direction: FftDirection) {
    debug_assert_eq!(values.len(), points.pow(dim as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft(points, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    if dim == 1 {
        fft.process_with_scratch(values, &mut scratch);
        return;
    }

    let mut line = vec![Complex64::new(0.0, 0.0); points];
    for axis in 0..dim {
        let stride = points.pow((dim - 1 - axis) as u32);
        let block = stride * points;
        for outer in (0..values.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    values[base + k * stride] = *v;
                }
            }
        }
    }
}
