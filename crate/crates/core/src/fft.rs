//! Multi-dimensional FFT on row-major arrays.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward transform `F[k] = sum_i f[i] e^{-2 pi i k.i / N}` in place, over
/// every axis of a row-major array with the given shape.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize]) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "shape does not match data length");
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        if n == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(n);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let block = n * stride;
        for outer in 0..total / block {
            let base = outer * block;
            for inner in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + inner + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + inner + i * stride] = *v;
                }
            }
        }
    }
}

/// Smallest power of two `>= n`.
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
