//! Orthonormal type-II discrete cosine transform of arbitrary length.
//!
//! `X_k = c_k Σ_n x_n cos(π (2n + 1) k / (2N))` with `c_0 = √(1/N)` and
//! `c_k = √(2/N)` otherwise, so the transform matrix is orthogonal.
//!
//! The fast path reorders the input as `v = [x_0, x_2, x_4, …, x_5, x_3, x_1]`,
//! takes one complex FFT of length `N` and recovers
//! `X_k = c_k Re(e^{-iπk/(2N)} V_k)`. The FFT planner handles every length
//! (mixed radix, Rader and Bluestein), so the cost is `O(N log N)` for all `N`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Dct2 {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    /// `c_k e^{-iπk/(2N)}` for every output index.
    twiddle: Vec<Complex<f64>>,
}

impl std::fmt::Debug for Dct2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dct2").field("len", &self.len).finish()
    }
}

impl Dct2 {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DCT length must be positive");
        let fft = FftPlanner::new().plan_fft_forward(len);
        let n = len as f64;
        let twiddle = (0..len)
            .map(|k| {
                let c = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                let angle = -PI * k as f64 / (2.0 * n);
                Complex::new(c * angle.cos(), c * angle.sin())
            })
            .collect();
        Self { len, fft, twiddle }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn spectrum(&self, input: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(input.len(), self.len);
        let n = self.len;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for k in 0..n.div_ceil(2) {
            buf[k].re = input[2 * k];
        }
        for k in 0..n / 2 {
            buf[n - 1 - k].re = input[2 * k + 1];
        }
        self.fft.process(&mut buf);
        buf
    }

    /// Full transform of `input` into `out`.
    pub fn transform(&self, input: &[f64], out: &mut [f64]) {
        let v = self.spectrum(input);
        for ((o, vk), w) in out.iter_mut().zip(&v).zip(&self.twiddle) {
            *o = (vk * w).re;
        }
    }

    /// Writes `X_{rows[i]}` into `out[i]`.
    pub fn transform_rows(&self, input: &[f64], rows: &[usize], out: &mut [f64]) {
        let v = self.spectrum(input);
        for (o, &k) in out.iter_mut().zip(rows) {
            *o = (v[k] * self.twiddle[k]).re;
        }
    }
}

/// Direct `O(N·|rows|)` evaluation of the same transform, used as the slow
/// reference path. Angles are reduced modulo `2π` in integer arithmetic.
pub fn dct2_reference_rows(input: &[f64], rows: &[usize]) -> Vec<f64> {
    let n = input.len();
    let period = 4 * n as u128;
    rows.iter()
        .map(|&k| {
            let c = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let t = ((2 * i as u128 + 1) * k as u128) % period;
                    x * (PI * t as f64 / (2.0 * n as f64)).cos()
                })
                .sum();
            c * sum
        })
        .collect()
}

pub fn dct2_reference(input: &[f64]) -> Vec<f64> {
    let rows: Vec<usize> = (0..input.len()).collect();
    dct2_reference_rows(input, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn fast_matches_reference_for_many_lengths() {
        for n in [1usize, 2, 3, 5, 7, 8, 12, 13, 16, 31, 64, 97, 100, 210, 256, 331] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 113) as f64 / 17.0 - 3.0).collect();
            let dct = Dct2::new(n);
            let mut fast = vec![0.0; n];
            dct.transform(&x, &mut fast);
            let slow = dct2_reference(&x);
            assert!(rel_err(&fast, &slow) < 1e-13, "n = {n}: {}", rel_err(&fast, &slow));
        }
    }

    #[test]
    fn transform_is_orthogonal() {
        let n = 45;
        let dct = Dct2::new(n);
        let mut col = vec![0.0; n];
        let mut basis = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            dct.transform(&e, &mut col);
            basis[j].copy_from_slice(&col);
        }
        for a in 0..n {
            for b in 0..n {
                let d: f64 = basis[a].iter().zip(&basis[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn selected_rows_agree_with_full() {
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let dct = Dct2::new(n);
        let mut full = vec![0.0; n];
        dct.transform(&x, &mut full);
        let rows = [0usize, 3, 17, 59];
        let mut part = vec![0.0; rows.len()];
        dct.transform_rows(&x, &rows, &mut part);
        for (p, &r) in part.iter().zip(&rows) {
            assert_eq!(*p, full[r]);
        }
    }
}
