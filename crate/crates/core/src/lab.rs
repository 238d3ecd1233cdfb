//! Extrapolation experiments: empirical weighted norms of scalar and
//! vector-valued extensions across exponents and weights, Fubini checks,
//! monotone envelopes and the exponent ranges of the bilinear Hilbert
//! transform.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::lattice::{CubeFamily, DyadicGrid, LatticeFunction, MeasurePoints};
use crate::math::{conjugate, powf, rel_diff};
use crate::operators::{empirical_ascent, operator_probe, Operator};
use crate::rng;
use crate::spaces::{eval_norm_lattice, SolverConfig, SpaceExpr};
use crate::weights::{ap_constant, generate_weight, rh_constant, Weight, WeightGenerator};

/// Exponent ranges `(p₁⁻, p₁⁺, p₂⁻, p₂⁺)` of the bilinear Hilbert transform.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BhtRange {
    pub p1_minus: f64,
    pub p1_plus: f64,
    pub p2_minus: f64,
    pub p2_plus: f64,
}

/// `p_j⁻ = 2q_j / (1 + q_j)` and `p_j⁺ = 2q_j`, for `q_j > 1` with `1/q₁ + 1/q₂ < 1`.
pub fn bht_range(q1: f64, q2: f64) -> Result<BhtRange> {
    for q in [q1, q2] {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::domain("q must lie in (1, inf)"));
        }
    }
    if !(1.0 / q1 + 1.0 / q2 < 1.0) {
        return Err(Error::domain("need 1/q1 + 1/q2 < 1"));
    }
    Ok(BhtRange { p1_minus: 2.0 * q1 / (1.0 + q1), p1_plus: 2.0 * q1, p2_minus: 2.0 * q2 / (1.0 + q2), p2_plus: 2.0 * q2 })
}

/// One `(exponents, weights)` measurement.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentRow {
    /// `p_j` per slot.
    pub p: Vec<f64>,
    /// `1/p = Σ 1/p_j`.
    pub p_out: f64,
    /// `[w_j^{p_j}]_{A_{p_j/p_j⁻}}` per slot.
    pub ap: Vec<f64>,
    /// `[w_j^{p_j}]_{RH_{(p_j⁺/p_j)'}}` per slot.
    pub rh: Vec<f64>,
    /// Lower bound for the norm of the vector-valued extension.
    pub norm: f64,
    /// Lower bound for the scalar norm from the same probes.
    pub scalar_norm: f64,
    pub probes: usize,
    pub seed: u64,
    /// Index of the weight tuple in the experiment plan.
    pub weight_index: usize,
    pub converged: bool,
}

impl ExperimentRow {
    /// Largest recorded characteristic.
    pub fn characteristic(&self) -> f64 {
        self.ap.iter().chain(&self.rh).fold(1.0f64, |m, &v| m.max(v))
    }

    /// The vector bound is at least the scalar bound, up to `rel` rounding.
    pub fn embedding_monotone(&self, rel: f64) -> bool {
        self.norm >= self.scalar_norm * (1.0 - rel)
    }
}

/// Everything [`extrapolation_table`] needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtrapolationSpec {
    pub op: Operator,
    /// `(p_j⁻, p_j⁺)` per slot.
    pub ranges: Vec<(f64, f64)>,
    /// Exponent samples, each with one `p_j` per slot.
    pub exponents: Vec<Vec<f64>>,
    pub generators: Vec<WeightGenerator>,
    pub weights_per_generator: usize,
    pub grid: DyadicGrid,
    pub points: MeasurePoints,
    /// `X_j` per slot, over `points`.
    pub spaces: Vec<SpaceExpr>,
    /// Target space of the vector-valued extension.
    pub codomain: SpaceExpr,
    pub family: CubeFamily,
    pub n_probes: usize,
    pub n_ascent: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

/// A single planned row: exponents and one weight per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RowPlan {
    pub p: Vec<f64>,
    pub weights: Vec<Weight>,
    pub weight_index: usize,
}

impl ExtrapolationSpec {
    fn validate(&self) -> Result<()> {
        let arity = self.op.arity();
        check_len(arity, self.ranges.len())?;
        check_len(arity, self.spaces.len())?;
        self.op.check_grid(self.grid)?;
        for &(lo, hi) in &self.ranges {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::domain("ranges must satisfy 0 < p_minus < p_plus <= inf"));
            }
        }
        for sample in &self.exponents {
            check_len(arity, sample.len())?;
            for (&p, &(lo, hi)) in sample.iter().zip(&self.ranges) {
                if !(p > lo && p < hi && p.is_finite()) {
                    return Err(Error::domain("exponent samples must lie inside (p_minus, p_plus)"));
                }
            }
        }
        for x in self.spaces.iter().chain(core::iter::once(&self.codomain)) {
            if x.validate(self.points.len())?.cells != 1 {
                return Err(Error::domain("extension spaces must live on the measure points"));
            }
        }
        Ok(())
    }

    /// Weight tuples crossed with exponent samples, in a fixed order.
    pub fn plan(&self) -> Result<Vec<RowPlan>> {
        self.validate()?;
        let arity = self.op.arity();
        let mut tuples = Vec::new();
        for (gi, gen) in self.generators.iter().enumerate() {
            for i in 0..self.weights_per_generator {
                let index = gi * self.weights_per_generator + i;
                let ws: Result<Vec<Weight>> = (0..arity)
                    .map(|j| {
                        let seed = rng::mix(self.seed, rng::mix(index as u64, j as u64));
                        generate_weight(self.grid, *gen, seed)
                    })
                    .collect();
                tuples.push((index, ws?));
            }
        }
        let mut plans = Vec::with_capacity(tuples.len() * self.exponents.len());
        for p in &self.exponents {
            for (index, ws) in &tuples {
                plans.push(RowPlan { p: p.clone(), weights: ws.clone(), weight_index: *index });
            }
        }
        Ok(plans)
    }
}

/// Places a one-point function on coordinate `s` of `points`.
pub fn embed(f: &LatticeFunction, points: &MeasurePoints, s: usize) -> Result<LatticeFunction> {
    check_len(1, f.points().len())?;
    if s >= points.len() {
        return Err(Error::domain("coordinate out of range"));
    }
    let m = points.len();
    let mut values = vec![0.0; f.values().len() * m];
    for (x, &v) in f.values().iter().enumerate() {
        values[x * m + s] = v;
    }
    LatticeFunction::new(f.grid(), points.clone(), values)
}

/// Measures one row. Vector probes are the seeded lattice probes plus the
/// scalar probes embedded in coordinate `k mod M`; the scalar bound uses the
/// scalar probes alone, so the vector bound dominates it whenever embedding
/// preserves norms.
pub fn run_row(spec: &ExtrapolationSpec, plan: &RowPlan) -> Result<ExperimentRow> {
    let arity = spec.op.arity();
    let scalar_points = MeasurePoints::counting(1)?;
    let p_out = 1.0 / plan.p.iter().map(|p| 1.0 / p).sum::<f64>();
    let mut ap = Vec::with_capacity(arity);
    let mut rh = Vec::with_capacity(arity);
    let mut domains = Vec::with_capacity(arity);
    let mut scalar_domains = Vec::with_capacity(arity);
    let mut total = Weight::constant(spec.grid, 1.0)?;
    for j in 0..arity {
        let (lo, hi) = spec.ranges[j];
        let p = plan.p[j];
        let w = &plan.weights[j];
        let wp = w.pow(p)?;
        ap.push(ap_constant(&wp, p / lo, spec.family)?.value);
        rh.push(rh_constant(&wp, conjugate(hi / p), spec.family)?.value);
        domains.push(SpaceExpr::bochner(p, wp.values().to_vec(), spec.spaces[j].clone()));
        scalar_domains.push(SpaceExpr::bochner(p, wp.values().to_vec(), SpaceExpr::lebesgue(p)));
        total = total.product(w)?;
    }
    let wout = total.pow(p_out)?;
    let codomain = SpaceExpr::bochner(p_out, wout.values().to_vec(), spec.codomain.clone());
    let scalar_codomain = SpaceExpr::bochner(p_out, wout.values().to_vec(), SpaceExpr::lebesgue(p_out));

    let mut norm = 0.0f64;
    let mut scalar_norm = 0.0f64;
    let mut converged = true;
    let m = spec.points.len();
    for k in 0..spec.n_probes {
        let vector: Vec<LatticeFunction> =
            (0..arity).map(|j| operator_probe(spec.grid, &spec.points, spec.seed, k as u64, j)).collect();
        let (r, _, c) = empirical_ascent(&spec.op, &domains, &codomain, vector, spec.n_ascent, &spec.solver)?;
        norm = norm.max(r);
        converged &= c;

        let scalar: Vec<LatticeFunction> =
            (0..arity).map(|j| operator_probe(spec.grid, &scalar_points, spec.seed, k as u64, j)).collect();
        let embedded: Result<Vec<LatticeFunction>> = scalar.iter().map(|f| embed(f, &spec.points, k % m)).collect();
        let (r, _, c) = empirical_ascent(&spec.op, &scalar_domains, &scalar_codomain, scalar, spec.n_ascent, &spec.solver)?;
        scalar_norm = scalar_norm.max(r);
        converged &= c;
        let (r, _, c) = empirical_ascent(&spec.op, &domains, &codomain, embedded?, spec.n_ascent, &spec.solver)?;
        norm = norm.max(r);
        converged &= c;
    }
    Ok(ExperimentRow {
        p: plan.p.clone(),
        p_out,
        ap,
        rh,
        norm,
        scalar_norm,
        probes: spec.n_probes,
        seed: spec.seed,
        weight_index: plan.weight_index,
        converged,
    })
}

/// Orders rows by characteristic, ties by plan order.
pub fn sort_rows(rows: &mut [ExperimentRow]) {
    rows.sort_by(|a, b| a.characteristic().total_cmp(&b.characteristic()));
}

/// Runs every planned row sequentially and sorts by characteristic.
pub fn extrapolation_table(spec: &ExtrapolationSpec) -> Result<Vec<ExperimentRow>> {
    let plans = spec.plan()?;
    let rows: Result<Vec<ExperimentRow>> = plans.iter().map(|p| run_row(spec, p)).collect();
    let mut rows = rows?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// Least non-decreasing majorant of `(characteristic, value)` samples,
/// evaluated at the sorted characteristics.
pub fn monotone_envelope(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut run = f64::NEG_INFINITY;
    sorted
        .into_iter()
        .map(|(c, v)| {
            run = run.max(v);
            (c, run)
        })
        .collect()
}

/// [`monotone_envelope`] of the rows' norms against their characteristics.
pub fn row_envelope(rows: &[ExperimentRow]) -> Vec<(f64, f64)> {
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.characteristic(), r.norm)).collect();
    monotone_envelope(&samples)
}

/// Outcome of [`fubini_check`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FubiniReport {
    pub probes: usize,
    /// Largest relative gap in `‖T̃f‖^p_{L^p(w^p;ℓ^p)} = Σ_s ‖T f_s‖^p_{L^p(w^p)}`.
    pub diagonal_max_rel: f64,
    /// Largest relative gap between the norm of a one-coordinate probe's
    /// image and the scalar norm of its slice, for each space tried.
    pub embedding_max_rel: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Tolerance of both Fubini identities.
pub const FUBINI_TOL: f64 = 1e-9;

/// Checks the diagonal identity for `X = L^p` over `M` counting points and
/// the coordinate embedding for `X ∈ {L^p, L^3, L^{2,1}}` (scaled by `‖e_s‖_X`).
pub fn fubini_check(
    op: &Operator,
    p: f64,
    w: &Weight,
    m: usize,
    n_probes: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<FubiniReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain("p must lie in (0, inf)"));
    }
    let grid = w.grid();
    op.check_grid(grid)?;
    let points = MeasurePoints::counting(m)?;
    let scalar_points = MeasurePoints::counting(1)?;
    let wp = w.pow(p)?;
    let vector_space = SpaceExpr::bochner(p, wp.values().to_vec(), SpaceExpr::lebesgue(p));
    let scalar_space = SpaceExpr::bochner(p, wp.values().to_vec(), SpaceExpr::lebesgue(p));
    let embed_spaces = [SpaceExpr::lebesgue(p), SpaceExpr::lebesgue(3.0), SpaceExpr::lorentz(2.0, 1.0)];
    let arity = op.arity();
    let mut diagonal = 0.0f64;
    let mut embedding = 0.0f64;
    for k in 0..n_probes {
        let inputs: Vec<LatticeFunction> = (0..arity).map(|j| operator_probe(grid, &points, seed, k as u64, j)).collect();
        let refs: Vec<&LatticeFunction> = inputs.iter().collect();
        let out = op.apply(&refs)?;
        let lhs = powf(eval_norm_lattice(&vector_space, &out, cfg)?.value, p);
        let mut rhs = 0.0;
        for s in 0..m {
            let slices: Vec<Vec<f64>> = inputs.iter().map(|f| f.slice(s)).collect();
            let slice_refs: Vec<&[f64]> = slices.iter().map(|v| v.as_slice()).collect();
            let ts = LatticeFunction::scalar(grid, op.apply_slices(&slice_refs)?)?;
            rhs += powf(eval_norm_lattice(&scalar_space, &ts, cfg)?.value, p);
        }
        diagonal = diagonal.max(rel_diff(lhs, rhs));

        let s0 = k % m;
        let scalar: Vec<LatticeFunction> =
            (0..arity).map(|j| operator_probe(grid, &scalar_points, seed, k as u64, j)).collect();
        let scalar_refs: Vec<&LatticeFunction> = scalar.iter().collect();
        let scalar_out = op.apply(&scalar_refs)?;
        let scalar_norm = eval_norm_lattice(&scalar_space, &scalar_out, cfg)?.value;
        let embedded: Result<Vec<LatticeFunction>> = scalar.iter().map(|f| embed(f, &points, s0)).collect();
        let embedded = embedded?;
        let embedded_refs: Vec<&LatticeFunction> = embedded.iter().collect();
        let vector_out = op.apply(&embedded_refs)?;
        for x in &embed_spaces {
            let mut unit = vec![0.0; m];
            unit[s0] = 1.0;
            let e = crate::spaces::eval_norm(x, &points, &unit, cfg)?.value;
            let bochner = SpaceExpr::bochner(p, wp.values().to_vec(), x.clone());
            let v = eval_norm_lattice(&bochner, &vector_out, cfg)?.value;
            embedding = embedding.max(rel_diff(v, scalar_norm * e));
        }
    }
    let passed = diagonal <= FUBINI_TOL && embedding <= FUBINI_TOL;
    Ok(FubiniReport { probes: n_probes, diagonal_max_rel: diagonal, embedding_max_rel: embedding, tol: FUBINI_TOL, passed })
}
