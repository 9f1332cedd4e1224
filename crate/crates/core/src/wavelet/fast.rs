//! Transform-domain evaluation: the reflected series is transformed once and
//! each scale costs one kernel FFT, a pointwise product and an inverse FFT.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{check_inputs, half_width, psi1, ScaleGrid, WaveletError, WaveletField};
use crate::exec::{map_indexed, Execution};
use crate::ingest::TimeSeries;

/// Slope wavelet transform of a log-level series on `grid`.
pub fn cwt_slope(series: &TimeSeries, grid: &ScaleGrid) -> Result<WaveletField, WaveletError> {
    cwt_slope_with(series, grid, Execution::default())
}

pub fn cwt_slope_with(
    series: &TimeSeries,
    grid: &ScaleGrid,
    exec: Execution,
) -> Result<WaveletField, WaveletError> {
    check_inputs(series, grid)?;
    let n = series.len();
    let step = series.step();

    // The kernel sums to zero, so removing the mean changes nothing except
    // keeping large level offsets out of the floating-point products.
    let mean = series.values().iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.values().iter().map(|v| v - mean).collect();

    let max_half = grid
        .scales()
        .iter()
        .map(|&s| half_width(s, step))
        .max()
        .unwrap_or(0);
    let extended = reflect_extend(&centred, max_half);
    let len = extended.len().next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);

    let mut signal: Vec<Complex64> = extended.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    signal.resize(len, Complex64::new(0.0, 0.0));
    forward.process(&mut signal);

    let rows = map_indexed(grid.len(), exec, |i| {
        let scale = grid.scales()[i];
        let half = half_width(scale, step);
        // h[m] = K[half - m], K[u] = psi1(u dt) dt with halved end weights.
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for (m, h) in kernel.iter_mut().enumerate().take(2 * half + 1) {
            let u = half as isize - m as isize;
            let weight = if m == 0 || m == 2 * half { 0.5 } else { 1.0 };
            h.re = weight * step * psi1(u as f64 * step, scale);
        }
        forward.process(&mut kernel);
        for (k, x) in kernel.iter_mut().zip(&signal) {
            *k *= *x;
        }
        inverse.process(&mut kernel);
        let norm = 1.0 / len as f64;
        // Output index of sample j is j + max_half + half; no circular wrap
        // reaches these indices because max_half >= half.
        (0..n)
            .map(|j| kernel[j + max_half + half].re * norm)
            .collect::<Vec<f64>>()
    });

    Ok(WaveletField::from_rows(
        grid.clone(),
        series.times().to_vec(),
        series.values(),
        rows,
    ))
}

/// Pads `values` with `pad` samples on each side by point reflection about
/// the end samples, repeating the reflection as often as needed.
fn reflect_extend(values: &[f64], pad: usize) -> Vec<f64> {
    let n = values.len() as isize;
    let (first, last) = (values[0], values[values.len() - 1]);
    (-(pad as isize)..n + pad as isize)
        .map(|mut i| {
            let mut sign = 1.0;
            let mut offset = 0.0;
            while i < 0 || i >= n {
                if i < 0 {
                    offset += sign * 2.0 * first;
                    i = -i;
                } else {
                    offset += sign * 2.0 * last;
                    i = 2 * (n - 1) - i;
                }
                sign = -sign;
            }
            offset + sign * values[i as usize]
        })
        .collect()
}
