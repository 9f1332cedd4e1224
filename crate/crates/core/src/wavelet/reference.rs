//! Naive O(N * support) evaluation of the slope transform, used as an oracle
//! for the FFT path. Shares only the kernel formula and the cone-of-influence
//! rule with it.

use super::{check_inputs, psi1, ScaleGrid, WaveletError, WaveletField, TRUNCATION};
use crate::ingest::TimeSeries;

/// Direct trapezoidal sum of `psi1(tau_k - t_j; s) X(tau_k) dt` for every
/// scale and sample time.
pub fn direct_cwt_reference(
    series: &TimeSeries,
    grid: &ScaleGrid,
) -> Result<WaveletField, WaveletError> {
    check_inputs(series, grid)?;
    let times = series.times();
    let values = series.values();
    let n = times.len() as i64;
    let dt = series.step();

    let rows = grid
        .scales()
        .iter()
        .map(|&s| {
            let reach = (TRUNCATION * s / dt + 1e-9).floor() as i64;
            (0..n)
                .map(|j| {
                    let mut acc = 0.0;
                    for k in j - reach..=j + reach {
                        let w = if (k - j).abs() == reach { 0.5 } else { 1.0 };
                        let offset = (k - j) as f64 * dt;
                        acc += w * psi1(offset, s) * extended_value(values, k, n);
                    }
                    acc * dt
                })
                .collect()
        })
        .collect();

    Ok(WaveletField::from_rows(
        grid.clone(),
        times.to_vec(),
        values,
        rows,
    ))
}

/// Value of the point-reflected continuation at integer position `k`.
fn extended_value(values: &[f64], k: i64, n: i64) -> f64 {
    if k < 0 {
        2.0 * values[0] - extended_value(values, -k, n)
    } else if k >= n {
        2.0 * values[(n - 1) as usize] - extended_value(values, 2 * (n - 1) - k, n)
    } else {
        values[k as usize]
    }
}
