//! Trigonometric interpolation helpers for periodic samples on equispaced grids
//! `t_j = 2πj/N`, `N` even.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn forward(values: &[f64]) -> Vec<Complex<f64>> {
    let n = values.len();
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

fn inverse(mut coeffs: Vec<Complex<f64>>) -> Vec<f64> {
    let n = coeffs.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut coeffs);
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Signed frequency of FFT bin `k` for length `n`; the Nyquist bin maps to `+n/2`.
fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Resample a periodic signal to `n_out` equispaced nodes through its
/// trigonometric interpolant. Downsampling truncates the spectrum, folding the
/// two modes at the new Nyquist frequency into one real mode.
pub fn resample(values: &[f64], n_out: usize) -> Vec<f64> {
    let n_in = values.len();
    if n_in == n_out {
        return values.to_vec();
    }
    assert!(n_in % 2 == 0 && n_out % 2 == 0, "resample needs even lengths");
    let c = forward(values);
    let mut out = vec![Complex::new(0.0, 0.0); n_out];
    let half_in = (n_in / 2) as i64;
    let half_out = (n_out / 2) as i64;
    for (k, &ck) in c.iter().enumerate() {
        let f = frequency(k, n_in);
        if f == half_in {
            // old Nyquist mode: split evenly between ±n_in/2 when upsampling
            if n_out > n_in {
                out[half_in as usize] += ck * 0.5;
                out[(n_out as i64 - half_in) as usize] += ck * 0.5;
            } else if half_in == half_out {
                out[half_out as usize] += ck;
            }
            continue;
        }
        if f.abs() < half_out {
            let idx = if f >= 0 { f } else { n_out as i64 + f } as usize;
            out[idx] += ck;
        } else if f.abs() == half_out {
            out[half_out as usize] += ck;
        }
    }
    inverse(out)
}

/// Spectral derivative `d^order/dt^order` of periodic samples.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    let mut c = forward(values);
    for (k, ck) in c.iter_mut().enumerate() {
        let f = frequency(k, n);
        if n % 2 == 0 && f == (n / 2) as i64 && order % 2 == 1 {
            *ck = Complex::new(0.0, 0.0);
            continue;
        }
        let ik = Complex::new(0.0, f as f64);
        *ck *= ik.powu(order);
    }
    inverse(c)
}

/// Cosine/sine coefficients `(a_m, b_m)` of a real periodic signal, so that
/// `x(t) = Σ a_m cos(mt) + b_m sin(mt)` for `m < N/2`.
pub fn fourier_coefficients(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    let c = forward(values);
    (0..n / 2)
        .map(|m| {
            if m == 0 {
                (c[0].re, 0.0)
            } else {
                (2.0 * c[m].re, -2.0 * c[m].im)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    #[test]
    fn resample_is_exact_for_band_limited_signals() {
        let f = |t: f64| 0.3 + (2.0 * t).cos() - 0.5 * (5.0 * t).sin();
        let coarse: Vec<f64> = grid(32).into_iter().map(f).collect();
        let fine = resample(&coarse, 96);
        for (t, v) in grid(96).into_iter().zip(&fine) {
            assert!((f(t) - v).abs() < 1e-13);
        }
        let back = resample(&fine, 32);
        for (a, b) in coarse.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let ts = grid(64);
        let v: Vec<f64> = ts.iter().map(|t| (3.0 * t).sin()).collect();
        let d1 = derivative(&v, 1);
        let d2 = derivative(&v, 2);
        for (i, t) in ts.iter().enumerate() {
            assert!((d1[i] - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
            assert!((d2[i] + 9.0 * (3.0 * t).sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn fourier_coefficients_recover_modes() {
        let v: Vec<f64> = grid(16).iter().map(|t| 2.0 + t.cos() - 0.25 * (3.0 * t).sin()).collect();
        let c = fourier_coefficients(&v);
        assert!((c[0].0 - 2.0).abs() < 1e-14);
        assert!((c[1].0 - 1.0).abs() < 1e-14);
        assert!((c[3].1 + 0.25).abs() < 1e-14);
    }
}
