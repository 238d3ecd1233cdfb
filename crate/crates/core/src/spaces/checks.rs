//! Probe-based verification of space identities and convexity inequalities.

use alloc::vec;
use alloc::vec::Vec;

use super::{eval_norm, SolverConfig, SpaceExpr};
use crate::error::{Error, Result};
use crate::lattice::MeasurePoints;
use crate::math::{exp, powf};
use crate::rng;

/// Seeded nonnegative probe of length `dim`: log-uniform entries in
/// `[e^{-3/2}, e^{3/2}]`, about one in eight set to zero, never all zero.
pub fn probe_vector(dim: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, rng::mix(index, 0x9B0B));
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            let zero = rng::uniform(&mut r, 0.0, 1.0) < 0.125;
            let val = exp(rng::uniform(&mut r, -1.5, 1.5));
            if zero {
                0.0
            } else {
                val
            }
        })
        .collect();
    if dim > 0 && v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    pub probes: usize,
    pub max_rel_discrepancy: f64,
    pub worst_probe: usize,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
    /// Every optimizer involved met its stopping rule.
    pub converged: bool,
}

/// Compares `‖ξ‖_lhs` and `‖ξ‖_rhs` on `n_probes` seeded probes.
pub fn check_identity(
    lhs: &SpaceExpr,
    rhs: &SpaceExpr,
    points: &MeasurePoints,
    n_probes: usize,
    tol: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<IdentityReport> {
    let a = lhs.validate(points.len())?;
    let b = rhs.validate(points.len())?;
    if a != b {
        return Err(Error::domain("identity sides live on different layouts"));
    }
    let mut report = IdentityReport {
        probes: n_probes,
        max_rel_discrepancy: 0.0,
        worst_probe: 0,
        lhs: Vec::with_capacity(n_probes),
        rhs: Vec::with_capacity(n_probes),
        tol,
        passed: true,
        converged: true,
    };
    for k in 0..n_probes {
        let xi = probe_vector(a.dim(), seed, k as u64);
        let l = eval_norm(lhs, points, &xi, cfg)?;
        let r = eval_norm(rhs, points, &xi, cfg)?;
        let scale = l.value.abs().max(r.value.abs());
        let disc = if scale == 0.0 { 0.0 } else { (l.value - r.value).abs() / scale };
        if disc > report.max_rel_discrepancy {
            report.max_rel_discrepancy = disc;
            report.worst_probe = k;
        }
        report.converged &= l.converged && r.converged;
        report.lhs.push(l.value);
        report.rhs.push(r.value);
    }
    report.passed = report.max_rel_discrepancy <= tol;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ConvexityMode {
    /// `‖(Σ|ξ_k|^p)^{1/p}‖ ≤ (Σ‖ξ_k‖^p)^{1/p}`.
    Convex,
    /// `(Σ‖ξ_k‖^p)^{1/p} ≤ ‖(Σ|ξ_k|^p)^{1/p}‖`.
    Concave,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexityReport {
    pub p: f64,
    pub mode: ConvexityMode,
    /// Largest observed ratio of the two sides, oriented so that `≤ 1` means the inequality holds.
    pub worst_ratio: f64,
    pub witness: Vec<Vec<f64>>,
    pub holds: bool,
}

/// Slack allowed above ratio 1 before a probe counts as a violation.
pub const CONVEXITY_SLACK: f64 = 1e-9;

/// Samples tuples and measures the `p`-convexity (or `p`-concavity) ratio.
/// Disjointly supported unit vectors and equal constant pairs are always
/// among the tuples.
pub fn check_convexity(
    x: &SpaceExpr,
    points: &MeasurePoints,
    p: f64,
    mode: ConvexityMode,
    n_probes: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<ConvexityReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain("convexity exponent must satisfy 0 < p < inf"));
    }
    let dim = x.validate(points.len())?.dim();
    let mut tuples: Vec<Vec<Vec<f64>>> = Vec::new();
    if dim >= 2 {
        let mut e0 = vec![0.0; dim];
        let mut e1 = vec![0.0; dim];
        e0[0] = 1.0;
        e1[1] = 1.0;
        tuples.push(vec![e0, e1]);
    }
    tuples.push(vec![vec![1.0; dim], vec![1.0; dim]]);
    for k in 0..n_probes {
        let mut r = rng::stream(seed, rng::mix(k as u64, 0xC0E5));
        let count = 2 + (rng::uniform(&mut r, 0.0, 3.0) as usize).min(2);
        tuples.push((0..count).map(|j| probe_vector(dim, seed, (k * 4 + j) as u64 + (1 << 32))).collect());
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Vec::new();
    for tuple in tuples {
        let combined: Vec<f64> = (0..dim)
            .map(|i| powf(tuple.iter().map(|v| powf(v[i], p)).sum::<f64>(), 1.0 / p))
            .collect();
        let left = eval_norm(x, points, &combined, cfg)?.value;
        let mut acc = 0.0;
        for v in &tuple {
            acc += powf(eval_norm(x, points, v, cfg)?.value, p);
        }
        let right = powf(acc, 1.0 / p);
        let ratio = match mode {
            ConvexityMode::Convex => left / right,
            ConvexityMode::Concave => right / left,
        };
        if ratio > worst {
            worst = ratio;
            witness = tuple;
        }
    }
    let slack = CONVEXITY_SLACK.max(10.0 * cfg.tol);
    Ok(ConvexityReport { p, mode, worst_ratio: worst, witness, holds: worst <= 1.0 + slack })
}
