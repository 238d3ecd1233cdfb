//! In-place radix-2 FFT for power-of-two lengths.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math::{cos, sin};

fn bit_reverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
}

fn transform(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    bit_reverse(buf);
    // Twiddles exp(sign 2πik/n) for k < n/2, computed directly for accuracy.
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Complex64::new(cos(t), sign * sin(t))
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for block in buf.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(len / 2);
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let t = *b * twiddles[k * stride];
                *b = *a - t;
                *a += t;
            }
        }
        len *= 2;
    }
}

/// `X_k = Σ_j x_j e^{-2πijk/n}`.
pub fn forward(buf: &mut [Complex64]) {
    transform(buf, -1.0);
}

/// Inverse of [`forward`], including the `1/n` factor.
pub fn inverse(buf: &mut [Complex64]) {
    transform(buf, 1.0);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &v)| {
                    let t = -2.0 * PI * (j * k) as f64 / n as f64;
                    acc + v * Complex64::new(cos(t), sin(t))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 4, 8, 32] {
            let x: Vec<Complex64> =
                (0..n).map(|j| Complex64::new(libm::sin(j as f64 * 1.3) + 0.2, (j % 3) as f64)).collect();
            let mut y = x.clone();
            forward(&mut y);
            for (a, b) in y.iter().zip(naive(&x)) {
                assert!((a - b).norm() < 1e-11);
            }
            inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }
}
