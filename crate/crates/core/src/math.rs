//! Scalar helpers. `core` has no transcendental functions, so they come from `libm`.

pub const INF: f64 = f64::INFINITY;

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Hölder conjugate `p' = p / (p - 1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        INF
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Summation that is consistent along the dyadic tree: pairwise on
/// power-of-two blocks, so a parent sum is literally `left + right`.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_exponents() {
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(conjugate(1.0), INF);
        assert_eq!(conjugate(INF), 1.0);
        assert!((conjugate(4.0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_splits_evenly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pairwise_sum(&xs), pairwise_sum(&xs[..2]) + pairwise_sum(&xs[2..]));
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
