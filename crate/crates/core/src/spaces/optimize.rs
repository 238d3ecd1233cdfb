//! Quasi-Newton minimization with a weak Wolfe line search.
//!
//! The bisection-expansion line search keeps BFGS usable on the piecewise
//! smooth objectives produced by rearrangement norms: it only asks for
//! sufficient decrease and a weak curvature condition, both of which can be
//! met on either side of a kink.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;

pub(crate) struct Point<P> {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub payload: P,
}

pub(crate) struct Outcome<P> {
    pub best: Point<P>,
    pub iters: usize,
    pub converged: bool,
}

pub(crate) struct Limits {
    pub max_iter: usize,
    /// Stop once `max |g_i| <= gtol`.
    pub gtol: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const LINE_STEPS: usize = 60;

pub(crate) fn minimize<P>(
    x0: Vec<f64>,
    mut objective: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>, P)>,
    limits: Limits,
    stop: impl Fn(&Point<P>) -> bool,
) -> Result<Outcome<P>> {
    let n = x0.len();
    let (f0, g0, p0) = objective(&x0)?;
    let mut cur = Point { x: x0, f: f0, g: g0, payload: p0 };
    if n == 0 || inf_norm(&cur.g) <= limits.gtol || stop(&cur) {
        return Ok(Outcome { best: cur, iters: 0, converged: true });
    }
    let mut h = identity(n);
    let mut scaled = false;
    let mut stagnant = 0usize;
    for iter in 1..=limits.max_iter {
        let mut d = mat_vec(&h, &cur.g, n);
        d.iter_mut().for_each(|v| *v = -*v);
        let mut gd = dot(&cur.g, &d);
        if !(gd < 0.0) {
            h = identity(n);
            scaled = false;
            d = cur.g.iter().map(|v| -v).collect();
            gd = dot(&cur.g, &d);
        }
        let mut t = if scaled { 1.0 } else { 1.0 / inf_norm(&d).max(1.0) };
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut accepted: Option<Point<P>> = None;
        let mut fallback: Option<Point<P>> = None;
        for _ in 0..LINE_STEPS {
            let xt: Vec<f64> = cur.x.iter().zip(&d).map(|(x, di)| x + t * di).collect();
            let (ft, gt, pt) = objective(&xt)?;
            let trial = Point { x: xt, f: ft, g: gt, payload: pt };
            if !ft.is_finite() || ft > cur.f + C1 * t * gd {
                hi = t;
            } else if dot(&trial.g, &d) < C2 * gd {
                lo = t;
                fallback = Some(trial);
            } else {
                accepted = Some(trial);
                break;
            }
            t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t };
        }
        let next = match accepted.or(fallback) {
            Some(p) => p,
            None => return Ok(Outcome { best: cur, iters: iter, converged: true }),
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if !scaled {
                let yy = dot(&y, &y);
                let gamma = sy / yy;
                h.iter_mut().for_each(|v| *v *= gamma);
                scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy, n);
        }
        let decrease = cur.f - next.f;
        stagnant = if decrease <= 1e-15 * cur.f.abs().max(1e-300) { stagnant + 1 } else { 0 };
        cur = next;
        if inf_norm(&cur.g) <= limits.gtol || stop(&cur) || stagnant >= 8 {
            return Ok(Outcome { best: cur, iters: iter, converged: true });
        }
    }
    Ok(Outcome { best: cur, iters: limits.max_iter, converged: false })
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / sᵀy`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_and_kink() {
        let quad = |x: &[f64]| -> Result<(f64, Vec<f64>, ())> {
            let f = (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0);
            Ok((f, vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)], ()))
        };
        let out = minimize(vec![0.0, 0.0], quad, Limits { max_iter: 200, gtol: 1e-12 }, |_| false).unwrap();
        assert!((out.best.x[0] - 1.0).abs() < 1e-9 && (out.best.x[1] + 2.0).abs() < 1e-9);

        // max(|x|, |y - 1|) + 0.01 y^2 has its minimum on a kink.
        let kink = |x: &[f64]| -> Result<(f64, Vec<f64>, ())> {
            let a = x[0].abs();
            let b = (x[1] - 1.0).abs();
            let (f, g) = if a >= b {
                (a, vec![x[0].signum(), 0.0])
            } else {
                (b, vec![0.0, (x[1] - 1.0).signum()])
            };
            Ok((f + 0.01 * x[1] * x[1], vec![g[0], g[1] + 0.02 * x[1]], ()))
        };
        let out = minimize(vec![2.0, -3.0], kink, Limits { max_iter: 500, gtol: 0.0 }, |_| false).unwrap();
        // Minimum: x0 = 0, y where |y-1| + 0.01 y^2 minimal -> y = 1, f = 0.01.
        assert!((out.best.f - 0.01).abs() < 1e-6, "{}", out.best.f);
    }
}
