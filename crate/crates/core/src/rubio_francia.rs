//! Rubio de Francia majorants for lattice functions and their a posteriori
//! verification.
//!
//! Given `u ≥ 0`, a weight `w` and exponents `1 < r < r₊ ≤ ∞`, the majorant is
//!
//! ```text
//! v = w⁻¹ (Σ_{n<n_terms} M̃ⁿ u_w / (2K)ⁿ)^{1/r₊'},   u_w = (u w)^{r₊'},
//! ```
//!
//! where `K` bounds the lattice maximal operator on
//! `X = L^{r'/r₊'}(w^{1−r'}; Y^{r₊'})`. Norms use the measure convention
//! `‖f‖_{L^p(w;Y)} = (Σ_x w(x) ‖f(x, ·)‖_Y^p / N)^{1/p}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{CubeFamily, LatticeFunction};
use crate::math::{conjugate, powf};
use crate::operators::{self, EmpiricalSettings, MaximalMode, Operator};
use crate::spaces::{eval_norm_lattice, SolverConfig, SpaceExpr};
use crate::weights::{ap_constant, rh_constant, Weight};

/// Exponents and target space of a majorant construction.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MajorantProblem {
    pub r: f64,
    pub r_plus: f64,
    /// Space over the measure points.
    pub y: SpaceExpr,
    #[cfg_attr(feature = "serde", serde(default))]
    pub family: CubeFamily,
}

impl MajorantProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0 && self.r < self.r_plus && self.r.is_finite()) || self.r_plus.is_nan() {
            return Err(Error::domain("exponents must satisfy 1 < r < r_plus <= inf"));
        }
        Ok(())
    }

    /// `r₊'`, equal to 1 when `r₊ = ∞`.
    pub fn r_plus_conj(&self) -> f64 {
        conjugate(self.r_plus)
    }

    /// `L^{r'}(w; Y)`.
    pub fn outer_space(&self, w: &Weight) -> SpaceExpr {
        SpaceExpr::bochner(conjugate(self.r), w.values().to_vec(), self.y.clone())
    }

    /// `X = L^{r'/r₊'}(w^{1−r'}; Y^{r₊'})`.
    pub fn series_space(&self, w: &Weight) -> SpaceExpr {
        let rc = conjugate(self.r);
        let a = self.r_plus_conj();
        let weight = w.values().iter().map(|&v| powf(v, 1.0 - rc)).collect();
        SpaceExpr::bochner(rc / a, weight, self.y.clone().concavify(a))
    }
}

/// Knobs of [`build_majorant`].
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantConfig {
    /// Fixed bound for `‖M̃‖_{X→X}`; estimated empirically when `None`.
    pub k: Option<f64>,
    pub n_terms: usize,
    /// Multiplier applied to the empirical estimate of `K`.
    pub safety_factor: f64,
    pub seed: u64,
    pub n_probes: usize,
    pub n_ascent: usize,
    pub solver: SolverConfig,
}

impl Default for MajorantConfig {
    fn default() -> Self {
        MajorantConfig {
            k: None,
            n_terms: 32,
            safety_factor: 1.5,
            seed: 0,
            n_probes: 8,
            n_ascent: 4,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorantResult {
    pub v: LatticeFunction,
    pub k_used: f64,
    /// Empirical lower bound for `‖M̃‖_{X→X}` behind `k_used`, if estimated.
    pub k_estimate: Option<f64>,
    pub n_terms: usize,
    /// `2^{−(n_terms−1)}`: the omitted tail relative to `‖u_w‖_X` when `K` is a true bound.
    pub tail_bound: f64,
}

fn check_inputs(u: &LatticeFunction, w: &Weight, problem: &MajorantProblem) -> Result<()> {
    problem.validate()?;
    if u.grid() != w.grid() {
        return Err(Error::domain("function and weight live on different grids"));
    }
    if !u.is_nonnegative() {
        return Err(Error::domain("the function to majorize must be nonnegative"));
    }
    let layout = problem.y.validate(u.points().len())?;
    if layout.cells != 1 {
        return Err(Error::domain("Y must be a space over the measure points"));
    }
    Ok(())
}

/// `(u w)^{r₊'}`, cellwise.
fn u_weighted(u: &LatticeFunction, w: &Weight, a: f64) -> LatticeFunction {
    let m = u.points().len();
    let vals: Vec<f64> = u.values().iter().enumerate().map(|(i, &x)| powf(x * w.values()[i / m], a)).collect();
    LatticeFunction::new(u.grid(), u.points().clone(), vals).expect("finite nonnegative values")
}

/// Builds the truncated majorant. When `K` is not given, it is the safety
/// factor times the largest of the empirical norm of `M̃` on `X` and the
/// growth ratios `‖M̃ⁿ⁺¹u_w‖_X / ‖M̃ⁿu_w‖_X` along the series itself.
pub fn build_majorant(
    u: &LatticeFunction,
    w: &Weight,
    problem: &MajorantProblem,
    cfg: &MajorantConfig,
) -> Result<MajorantResult> {
    check_inputs(u, w, problem)?;
    if cfg.n_terms == 0 {
        return Err(Error::domain("at least one series term is required"));
    }
    if let Some(k) = cfg.k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::domain("K must be positive and finite"));
        }
    }
    let a = problem.r_plus_conj();
    let mut terms = vec![u_weighted(u, w, a)];
    for _ in 1..cfg.n_terms {
        let next = operators::maximal(terms.last().expect("nonempty"), MaximalMode::Lattice, problem.family);
        terms.push(next);
    }
    let (k_used, k_estimate) = match cfg.k {
        Some(k) => (k, None),
        None => {
            let est = estimate_k(u, w, problem, cfg, &terms)?;
            (cfg.safety_factor * est, Some(est))
        }
    };
    let inv = 1.0 / (2.0 * k_used);
    let mut sum = vec![0.0; u.values().len()];
    let mut scale = 1.0;
    for t in &terms {
        for (s, &x) in sum.iter_mut().zip(t.values()) {
            *s += x * scale;
        }
        scale *= inv;
    }
    let m = u.points().len();
    let v: Vec<f64> = sum
        .iter()
        .zip(u.values())
        .enumerate()
        // The n = 0 term alone gives v ≥ u; the max only absorbs rounding.
        .map(|(i, (&s, &ui))| (powf(s, 1.0 / a) / w.values()[i / m]).max(ui))
        .collect();
    Ok(MajorantResult {
        v: LatticeFunction::new(u.grid(), u.points().clone(), v)?,
        k_used,
        k_estimate,
        n_terms: cfg.n_terms,
        tail_bound: powf(2.0, -((cfg.n_terms - 1) as f64)),
    })
}

fn estimate_k(
    u: &LatticeFunction,
    w: &Weight,
    problem: &MajorantProblem,
    cfg: &MajorantConfig,
    terms: &[LatticeFunction],
) -> Result<f64> {
    let x = problem.series_space(w);
    let op = Operator::LatticeMaximal { family: problem.family };
    let settings =
        EmpiricalSettings { n_probes: cfg.n_probes, n_ascent: cfg.n_ascent, seed: cfg.seed, solver: cfg.solver.clone() };
    let mut k = operators::empirical_norm(&op, &[x.clone()], &x, u.grid(), u.points(), &settings)?.value;
    let mut prev = eval_norm_lattice(&x, &terms[0], &cfg.solver)?.value;
    for t in &terms[1..] {
        if prev == 0.0 {
            break;
        }
        let cur = eval_norm_lattice(&x, t, &cfg.solver)?.value;
        k = k.max(cur / prev);
        prev = cur;
    }
    Ok(k.max(1.0))
}

/// Location of a failed inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Witness {
    pub cell: usize,
    pub point: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckOutcome {
    pub passed: bool,
    /// Largest ratio `lhs / rhs` of the checked inequality (0 when vacuous).
    pub worst_ratio: f64,
    pub witness: Option<Witness>,
}

/// Measured and certified constants of one slice `v(·, s) w`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SliceCertificate {
    pub point: usize,
    /// The slice of `u` vanishes, so there is nothing to certify.
    pub skipped: bool,
    /// `[(v_s w)^{r₊'}]_{A_1}`: measured, and the bound `2K(1 + tol)` certified by check (c).
    pub a1_power: f64,
    pub a1_power_bound: f64,
    /// `[v_s w]_{A_1}` measured, and its bound `(2K(1 + tol))^{1/r₊'}`.
    pub a1: f64,
    pub a1_bound: f64,
    /// `[v_s w]_{RH_{r₊'}}` measured, and its bound `(2K(1 + tol))^{1/r₊'}`.
    pub rh: f64,
    pub rh_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MajorantReport {
    /// (a) `u ≤ v` pointwise, exactly.
    pub majorization: CheckOutcome,
    /// (b) `‖v‖_{L^{r'}(w;Y)} ≤ 2‖u‖_{L^{r'}(w;Y)}(1 + tol)`.
    pub norm_doubling: CheckOutcome,
    /// (c) `M̃((v_s w)^{r₊'}) ≤ 2K (v_s w)^{r₊'} (1 + tol)` for every slice.
    pub slice_a1: CheckOutcome,
    pub slices: Vec<SliceCertificate>,
    pub u_norm: f64,
    pub v_norm: f64,
    pub tol: f64,
}

impl MajorantReport {
    pub fn passed(&self) -> bool {
        self.majorization.passed && self.norm_doubling.passed && self.slice_a1.passed
    }

    /// Name of the first failing check.
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.majorization.passed {
            Some("majorization")
        } else if !self.norm_doubling.passed {
            Some("norm-doubling")
        } else if !self.slice_a1.passed {
            Some("slice-a1")
        } else {
            None
        }
    }
}

/// Checks the three majorant properties of `v` for `u`.
pub fn verify_majorant(
    u: &LatticeFunction,
    v: &LatticeFunction,
    w: &Weight,
    problem: &MajorantProblem,
    k_used: f64,
    tol: f64,
    solver: &SolverConfig,
) -> Result<MajorantReport> {
    check_inputs(u, w, problem)?;
    if !u.same_shape(v) {
        return Err(Error::domain("u and v have different shapes"));
    }
    if !v.is_nonnegative() {
        return Err(Error::domain("v must be nonnegative"));
    }
    let m = u.points().len();
    let n = u.grid().cells();

    let mut majorization = CheckOutcome { passed: true, worst_ratio: 0.0, witness: None };
    for (i, (&ui, &vi)) in u.values().iter().zip(v.values()).enumerate() {
        let ratio = if ui == 0.0 { 0.0 } else { ui / vi };
        if ratio > majorization.worst_ratio {
            majorization.worst_ratio = ratio;
            if ui > vi {
                majorization.witness = Some(Witness { cell: i / m, point: i % m });
            }
        }
        majorization.passed &= ui <= vi;
    }

    let outer = problem.outer_space(w);
    let u_norm = eval_norm_lattice(&outer, u, solver)?.value;
    let v_norm = eval_norm_lattice(&outer, v, solver)?.value;
    let doubling_ratio = if v_norm == 0.0 { 0.0 } else { v_norm / (2.0 * u_norm) };
    let norm_doubling =
        CheckOutcome { passed: doubling_ratio <= 1.0 + tol, worst_ratio: doubling_ratio, witness: None };

    let a = problem.r_plus_conj();
    let bound = 2.0 * k_used * (1.0 + tol);
    let mut slice_a1 = CheckOutcome { passed: true, worst_ratio: 0.0, witness: None };
    let mut slices = Vec::with_capacity(m);
    for s in 0..m {
        let us = u.slice(s);
        let vs = v.slice(s);
        let vw: Vec<f64> = vs.iter().zip(w.values()).map(|(a, b)| a * b).collect();
        let skipped = us.iter().all(|&x| x == 0.0);
        let mut cert = SliceCertificate {
            point: s,
            skipped,
            a1_power: 0.0,
            a1_power_bound: bound,
            a1: 0.0,
            a1_bound: powf(bound, 1.0 / a),
            rh: 0.0,
            rh_bound: powf(bound, 1.0 / a),
        };
        if !skipped {
            let big: Vec<f64> = vw.iter().map(|&x| powf(x, a)).collect();
            let mb = operators::maximal_slice(&big, problem.family);
            for x in 0..n {
                let ratio = if big[x] > 0.0 { mb[x] / (2.0 * k_used * big[x]) } else { f64::INFINITY };
                if ratio > slice_a1.worst_ratio {
                    slice_a1.worst_ratio = ratio;
                    slice_a1.witness = Some(Witness { cell: x, point: s });
                }
            }
            if vw.iter().all(|&x| x > 0.0) {
                let wv = Weight::new(w.grid(), vw)?;
                let wb = Weight::new(w.grid(), big)?;
                cert.a1_power = ap_constant(&wb, 1.0, problem.family)?.value;
                cert.a1 = ap_constant(&wv, 1.0, problem.family)?.value;
                cert.rh = rh_constant(&wv, a, problem.family)?.value;
            } else {
                cert.a1_power = f64::INFINITY;
                cert.a1 = f64::INFINITY;
                cert.rh = f64::INFINITY;
            }
        }
        slices.push(cert);
    }
    slice_a1.passed = slice_a1.worst_ratio <= 1.0 + tol;
    if slice_a1.passed {
        slice_a1.witness = None;
    }
    Ok(MajorantReport { majorization, norm_doubling, slice_a1, slices, u_norm, v_norm, tol })
}

/// A verified majorant together with the number of retries it took.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifiedMajorant {
    pub result: MajorantResult,
    pub report: MajorantReport,
    pub retries: usize,
}

/// Builds and verifies, retrying with `K` doubled and 8 more terms while a
/// check fails, up to `max_retries` times. The series tail bound is added to
/// `tol` in checks (b) and (c). Returns the last attempt, passing or not.
pub fn build_verified_majorant(
    u: &LatticeFunction,
    w: &Weight,
    problem: &MajorantProblem,
    cfg: &MajorantConfig,
    tol: f64,
    max_retries: usize,
) -> Result<VerifiedMajorant> {
    let mut cfg = cfg.clone();
    let mut retries = 0;
    loop {
        let result = build_majorant(u, w, problem, &cfg)?;
        let report = verify_majorant(u, &result.v, w, problem, result.k_used, tol + result.tail_bound, &cfg.solver)?;
        if report.passed() || retries >= max_retries {
            return Ok(VerifiedMajorant { result, report, retries });
        }
        retries += 1;
        cfg.k = Some(2.0 * result.k_used);
        cfg.n_terms += 8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DyadicGrid, MeasurePoints};
    use crate::weights::{generate_weight, WeightGenerator};

    fn problem(m: usize) -> (MajorantProblem, MeasurePoints) {
        let p = MajorantProblem { r: 2.0, r_plus: 4.0, y: SpaceExpr::lebesgue(2.0), family: CubeFamily::Dyadic };
        (p, MeasurePoints::counting(m).unwrap())
    }

    #[test]
    fn constant_input_gives_geometric_series() {
        let g = DyadicGrid::from_cells(16).unwrap();
        let (p, pts) = problem(1);
        let u = LatticeFunction::new(g, pts, vec![1.0; 16]).unwrap();
        let w = Weight::constant(g, 1.0).unwrap();
        let cfg = MajorantConfig { k: Some(1.0), ..Default::default() };
        let res = build_majorant(&u, &w, &p, &cfg).unwrap();
        let expected = powf(2.0 / (2.0 - 1.0), 1.0 / p.r_plus_conj());
        assert!(res.v.values().iter().all(|&x| (x - expected).abs() < 1e-8));
        let report = verify_majorant(&u, &res.v, &w, &p, res.k_used, 1e-6, &SolverConfig::default()).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn zero_input_and_errors() {
        let g = DyadicGrid::from_cells(8).unwrap();
        let (p, pts) = problem(2);
        let u = LatticeFunction::zeros(g, pts.clone());
        let w = Weight::constant(g, 2.0).unwrap();
        let res = build_majorant(&u, &w, &p, &MajorantConfig::default()).unwrap();
        assert!(res.v.values().iter().all(|&x| x == 0.0));
        let report = verify_majorant(&u, &res.v, &w, &p, res.k_used, 1e-6, &SolverConfig::default()).unwrap();
        assert!(report.passed() && report.slices.iter().all(|s| s.skipped));
        let neg = LatticeFunction::new(g, pts, vec![-1.0; 16]).unwrap();
        assert!(build_majorant(&neg, &w, &p, &MajorantConfig::default()).is_err());
        let bad = MajorantProblem { r: 4.0, ..p.clone() };
        assert!(build_majorant(&u, &w, &bad, &MajorantConfig::default()).is_err());
    }

    #[test]
    fn identity_guess_fails_slice_check() {
        let g = DyadicGrid::from_cells(8).unwrap();
        let (p, pts) = problem(1);
        let u = LatticeFunction::new(g, pts, vec![1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 5.0]).unwrap();
        let w = Weight::constant(g, 1.0).unwrap();
        let report = verify_majorant(&u, &u, &w, &p, 1.0, 1e-6, &SolverConfig::default()).unwrap();
        assert!(report.majorization.passed);
        assert!(!report.slice_a1.passed);
        assert_eq!(report.first_failure(), Some("slice-a1"));
        assert!(report.slice_a1.witness.is_some());
    }

    #[test]
    fn seeded_instance_verifies() {
        let g = DyadicGrid::from_cells(16).unwrap();
        let (p, pts) = problem(4);
        let w = generate_weight(g, WeightGenerator::DyadicMartingale { beta: 0.3 }, 5).unwrap();
        let vals: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64 * 0.3).max(0.0)).collect();
        let u = LatticeFunction::new(g, pts, vals).unwrap();
        let out = build_verified_majorant(&u, &w, &p, &MajorantConfig::default(), 1e-6, 5).unwrap();
        assert!(out.report.passed(), "{:?}", out.report);
        assert!(out.result.k_estimate.is_some());
    }
}
