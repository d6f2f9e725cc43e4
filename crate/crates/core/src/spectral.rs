//! Trigonometric differentiation and integration of samples on a uniform
//! periodic grid `s_j = j / N`, `s` in `[0, 1)`.
//!
//! The Nyquist mode is dropped by both the derivative and the antiderivative,
//! which makes the derivative matrix exactly skew-symmetric: summation by
//! parts `sum(u' v) = -sum(u v')` holds to rounding.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Signed wavenumber of FFT bin `j`; `None` for the Nyquist bin.
pub fn wavenumber(j: usize, n: usize) -> Option<i64> {
    if n % 2 == 0 && j == n / 2 {
        None
    } else if j <= n / 2 {
        Some(j as i64)
    } else {
        Some(j as i64 - n as i64)
    }
}

/// d/ds of the trigonometric interpolant, sampled at the nodes.
pub fn derivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = forward(values);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = match wavenumber(j, n) {
            Some(m) => *cj * Complex64::new(0.0, 2.0 * PI * m as f64),
            None => Complex64::new(0.0, 0.0),
        };
    }
    inverse_real(c)
}

/// Zero-mean periodic antiderivative of the zero-mean part of `values`.
pub fn antiderivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = forward(values);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = match wavenumber(j, n) {
            Some(0) | None => Complex64::new(0.0, 0.0),
            Some(m) => *cj / Complex64::new(0.0, 2.0 * PI * m as f64),
        };
    }
    inverse_real(c)
}

/// Second-order central differences; used as an independent oracle.
pub fn central_difference(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| (values[(j + 1) % n] - values[(j + n - 1) % n]) * n as f64 / 2.0)
        .collect()
}

/// Trigonometric interpolation of periodic samples onto `m` uniform nodes.
pub fn resample(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    let c = forward(values);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for (j, cj) in c.iter().enumerate() {
        let k = match wavenumber(j, n) {
            Some(k) => k,
            None => continue,
        };
        if (k.unsigned_abs() as usize) * 2 >= m {
            continue;
        }
        let idx = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
        out[idx] = *cj * (m as f64 / n as f64);
    }
    inverse_real(out)
}

/// Plain parameter mean `sum(v) / N`.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Weighted mean `sum(v * w) / N`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / values.len() as f64
}
