//! The `weightlab` command line.
//!
//! Every subcommand validates all of its inputs before computing, renders
//! its whole result in memory and only then writes it, so a failing run
//! emits no partial output. Exit codes: 0 on success, 1 when a verification
//! reports false, 2 on usage, input or domain errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use weightlab_core::lab::{bht_range, fubini_check, monotone_envelope, ExtrapolationSpec};
use weightlab_core::lattice::{CubeFamily, DyadicGrid, LatticeFunction, MeasurePoints};
use weightlab_core::operators::{
    apply_multiplier, bilinear, hilbert, maximal, vq_dyadic_blocks, vq_norm, BilinearKernel, CzProfile, MaximalMode,
};
use weightlab_core::rubio_francia::{
    build_verified_majorant, verify_majorant, CheckOutcome, MajorantConfig, MajorantProblem,
};
use weightlab_core::spaces::{check_identity, eval_norm, umd_transform, NormReport, SolverConfig, SpaceExpr};
use weightlab_core::sparse::{
    certify_sparse, find_domination, seeded_instance, sparse_form, DominationParams, SparseCertificate,
    SparseCollection, DEFAULT_DENSITY,
};
use weightlab_core::weights::{ap_constant, check_weight_lemmas, generate_weight, rh_constant, Weight};

use crate::expr::{format_space, parse_operator, parse_space, parse_symbol_spec, parse_tuple, parse_weight_gen};
use crate::format::{real, reals, Cell, Format, Report, TextLayout};
use crate::io::{format_collection, format_lattice, read_collection, read_lattice, read_reals, read_weight};
use crate::parallel::{domination_corpus, extrapolation_table, thread_pool};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "weightlab", version, about = "Weights, function spaces and operators on the dyadic grid")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Grid level k (N = 2^k cells); inferred from input files when omitted.
    #[arg(long, global = true)]
    pub grid_log2: Option<u32>,
    /// Number M of measure points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// File with the M point masses; counting measure when omitted.
    #[arg(long, global = true)]
    pub masses: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of probes (or seeded instances) for randomized checks.
    #[arg(long, global = true)]
    pub probes: Option<usize>,
    /// Tolerance of the verification performed by the subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Stopping tolerance of the norm optimizers.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub solver_tol: f64,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Family {
    #[default]
    Dyadic,
    AllAligned,
}

impl From<Family> for CubeFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Dyadic => CubeFamily::Dyadic,
            Family::AllAligned => CubeFamily::AllAligned,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Mode {
    #[default]
    Scalar,
    Lattice,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Kernel {
    #[default]
    Bht,
    SmoothCz,
}

/// A weight read from a file or generated from `--seed`.
#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Weight file, one positive real per cell.
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Generator, e.g. `log-uniform:1.5`; needs --grid-log2.
    #[arg(long)]
    pub weight_gen: Option<String>,
}

#[derive(Debug, Args)]
pub struct MajorantArgs {
    /// Nonnegative function u (N·M values).
    #[arg(long)]
    pub u: PathBuf,
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long)]
    pub r: f64,
    /// Upper exponent; `inf` allowed.
    #[arg(long)]
    pub r_plus: f64,
    /// Space Y over the measure points.
    #[arg(long, default_value = "L(2)")]
    pub y: String,
    #[arg(long, value_enum, default_value_t)]
    pub family: Family,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// A_p or RH_s characteristic of a weight.
    WeightChar {
        input: Option<PathBuf>,
        #[arg(long)]
        weight_gen: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        rh: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        family: Family,
    },
    /// Monotonicity, duality and reverse-Hölder checks for one weight.
    WeightLemmas {
        input: Option<PathBuf>,
        #[arg(long)]
        weight_gen: Option<String>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s: f64,
        /// Exponents q >= p for the monotonicity check (default p, p + 1/2, 2p).
        #[arg(long)]
        q: Vec<f64>,
        #[arg(long, value_enum, default_value_t)]
        family: Family,
    },
    /// Norm of a vector in a space.
    Norm {
        input: PathBuf,
        #[arg(long)]
        space: String,
    },
    /// Köthe dual norm of a vector.
    DualNorm {
        input: PathBuf,
        #[arg(long)]
        space: String,
    },
    /// Norm in a product (or Calderón product with --theta) of spaces.
    ProductNorm {
        input: PathBuf,
        #[arg(long = "space", required = true)]
        spaces: Vec<String>,
        #[arg(long = "theta")]
        thetas: Vec<f64>,
    },
    /// Compares two space expressions on seeded probes.
    IdentityCheck {
        #[arg(long)]
        lhs: String,
        #[arg(long)]
        rhs: String,
    },
    /// Prints ((X^{p_-})*)^{(p_+/p_-)'}.
    UmdTransform {
        #[arg(long)]
        space: String,
        #[arg(long)]
        p_minus: f64,
        #[arg(long)]
        p_plus: f64,
    },
    /// Dyadic maximal function.
    Maximal {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t)]
        family: Family,
    },
    /// Periodic Hilbert transform.
    Hilbert { input: PathBuf },
    /// Bilinear Hilbert transform or a smooth bilinear kernel.
    Bht {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        kernel: Kernel,
    },
    /// Fourier multiplier: `identity`, `hilbert`, `bochner-riesz:δ` or `@file`.
    Multiplier {
        input: PathBuf,
        #[arg(long)]
        symbol: String,
    },
    /// q-variation norm of samples, optionally per dyadic frequency block.
    VqNorm {
        input: PathBuf,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        dyadic: bool,
    },
    /// Builds and verifies a Rubio de Francia majorant.
    RdfBuild {
        #[command(flatten)]
        args: MajorantArgs,
        /// Bound for the maximal operator; estimated when omitted.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 32)]
        terms: usize,
        #[arg(long, default_value_t = 5)]
        retries: usize,
        #[arg(long, default_value_t = 1.5)]
        safety: f64,
        #[arg(long, default_value_t = 4)]
        ascent: usize,
    },
    /// Verifies a majorant v of u.
    RdfVerify {
        #[command(flatten)]
        args: MajorantArgs,
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        k_used: f64,
    },
    /// Certifies sparseness of a collection of `level j` lines.
    SparseCertify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: f64,
    },
    /// Value of the sparse form.
    SparseForm {
        #[arg(long)]
        collection: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        p_minus: f64,
        #[arg(long)]
        p_plus: f64,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: f64,
    },
    /// Stopping-time sparse domination of an operator.
    SparseFind {
        #[arg(long, default_value = "hilbert")]
        op: String,
        /// f and g files; seeded instances are used when omitted.
        #[arg(long, requires = "g")]
        f: Option<PathBuf>,
        #[arg(long, requires = "f")]
        g: Option<PathBuf>,
        /// Number of seeded instances, starting at --seed.
        #[arg(long, default_value_t = 1, conflicts_with = "f")]
        instances: u64,
        #[arg(long, default_value_t = 1.0)]
        p_minus: f64,
        #[arg(long, default_value_t = 2.0)]
        p_plus: f64,
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: f64,
    },
    /// Weighted vector-valued extension norms across exponents and weights.
    Extrapolate {
        #[arg(long)]
        op: String,
        /// `p_minus,p_plus` per slot.
        #[arg(long = "range")]
        ranges: Vec<String>,
        /// Bilinear ranges from q1, q2 instead of --range.
        #[arg(long, requires = "q2", conflicts_with = "ranges")]
        q1: Option<f64>,
        #[arg(long, requires = "q1")]
        q2: Option<f64>,
        /// One exponent sample, `p1[,p2]`; repeat for more.
        #[arg(long = "exponents", required = true)]
        exponents: Vec<String>,
        #[arg(long = "weight-gen", required = true)]
        generators: Vec<String>,
        #[arg(long, default_value_t = 4)]
        weights_per_gen: usize,
        /// Space X_j per slot (one value applies to all slots).
        #[arg(long = "space")]
        spaces: Vec<String>,
        /// Target space; defaults to X_1 (or X_1·X_2 for bilinear operators).
        #[arg(long)]
        codomain: Option<String>,
        #[arg(long, default_value_t = 2)]
        ascent: usize,
        #[arg(long, value_enum, default_value_t)]
        family: Family,
        /// Print the monotone envelope instead of the rows.
        #[arg(long)]
        envelope: bool,
    },
    /// Fubini identity and coordinate embedding for vector-valued extensions.
    FubiniCheck {
        #[arg(long)]
        op: String,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Exponent ranges of the bilinear Hilbert transform.
    BhtRange {
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
    },
}

/// A rendered result and whether its verification passed.
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

fn ok(report: Report) -> Outcome {
    Outcome { report, passed: true }
}

/// Parses `argv` (program name first), runs the subcommand and writes its
/// result. Returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = thread_pool().and_then(|pool| pool.install(|| execute(&cli)));
    match outcome {
        Ok(o) => {
            let text = o.report.render(cli.common.format);
            let written = match &cli.common.out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|source| Error::Io { path: path.display().to_string(), source }),
                None => {
                    use std::io::Write;
                    let mut out = std::io::stdout().lock();
                    out.write_all(text.as_bytes())
                        .and_then(|_| out.flush())
                        .map_err(|source| Error::Io { path: "<stdout>".into(), source })
                }
            };
            if let Err(e) = written {
                eprintln!("weightlab: {e}");
                return 2;
            }
            if o.passed {
                0
            } else {
                eprintln!("weightlab: verification failed");
                1
            }
        }
        Err(e) => {
            eprintln!("weightlab: {e}");
            2
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl Common {
    fn measure(&self) -> Result<MeasurePoints, Error> {
        match &self.masses {
            Some(path) => {
                let masses = read_reals(path)?;
                if let Some(m) = self.points {
                    if m != masses.len() {
                        return Err(usage(format!("--points {m} disagrees with {} masses", masses.len())));
                    }
                }
                Ok(MeasurePoints::new(masses)?)
            }
            None => Ok(MeasurePoints::counting(self.points.unwrap_or(1))?),
        }
    }

    fn grid(&self) -> Result<DyadicGrid, Error> {
        let k = self.grid_log2.ok_or_else(|| usage("--grid-log2 is required"))?;
        Ok(DyadicGrid::new(k)?)
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig { tol: self.solver_tol, seed: self.seed, ..SolverConfig::default() }
    }

    fn weight(&self, file: Option<&Path>, gen: Option<&str>) -> Result<Weight, Error> {
        match (file, gen) {
            (Some(path), None) => read_weight(path, self.grid_log2),
            (None, Some(spec)) => {
                let gen = parse_weight_gen(spec)?;
                Ok(generate_weight(self.grid()?, gen, self.seed)?)
            }
            _ => Err(usage("give exactly one of a weight file and --weight-gen")),
        }
    }
}

fn norm_report(r: &NormReport) -> Report {
    let method = serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Report::record(vec![
        ("value", r.value.into()),
        ("method", method.into()),
        ("tolerance", r.tolerance.into()),
        ("iterations", r.iterations.into()),
        ("converged", r.converged.into()),
    ])
    .show(&["value"])
}

fn lattice_report(f: &LatticeFunction) -> Report {
    let m = f.points().len();
    let mut r = Report::new(&["cell", "point", "value"]);
    for (i, &v) in f.values().iter().enumerate() {
        r.push(vec![(i / m).into(), (i % m).into(), v.into()]);
    }
    r.meta("grid_log2", f.grid().level() as u64).meta("points", m).text(TextLayout::Raw(format_lattice(f)))
}

fn check_row(name: &str, c: &CheckOutcome) -> Vec<Cell> {
    vec![
        name.into(),
        c.passed.into(),
        c.worst_ratio.into(),
        c.witness.map(|w| w.cell).into(),
        c.witness.map(|w| w.point).into(),
    ]
}

fn collection_rows(c: &SparseCollection, with_witnesses: bool) -> Report {
    let mut r = Report::new(&["level", "index", "witness"]);
    for (i, q) in c.cubes.iter().enumerate() {
        let (level, index) = q.dyadic_coords(c.grid).expect("dyadic cube");
        let witness = match (&c.witnesses, with_witnesses) {
            (Some(w), true) => Cell::List(w[i].iter().map(|&x| x.into()).collect()),
            _ => Cell::Empty,
        };
        r.push(vec![(level as u64).into(), index.into(), witness]);
    }
    r
}

fn positive(name: &str, v: f64) -> Result<f64, Error> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be positive and finite")))
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome, Error> {
    let c = &cli.common;
    if let Some(t) = c.tol {
        positive("--tol", t)?;
    }
    positive("--solver-tol", c.solver_tol)?;
    match &cli.command {
        Command::WeightChar { input, weight_gen, p, rh, family } => {
            if p.is_none() && rh.is_none() {
                return Err(usage("give --p and/or --rh"));
            }
            let w = c.weight(input.as_deref(), weight_gen.as_deref())?;
            let family = CubeFamily::from(*family);
            let mut r = Report::new(&["kind", "exponent", "value", "start", "end"]);
            let mut reports = Vec::new();
            if let Some(p) = p {
                reports.push(("ap", ap_constant(&w, *p, family)?));
            }
            if let Some(s) = rh {
                reports.push(("rh", rh_constant(&w, *s, family)?));
            }
            for (kind, rep) in reports {
                r.push(vec![
                    kind.into(),
                    rep.exponent.into(),
                    rep.value.into(),
                    rep.maximizer.start.into(),
                    rep.maximizer.end.into(),
                ]);
            }
            Ok(ok(r.show(&["value"])))
        }
        Command::WeightLemmas { input, weight_gen, p, r, s, q, family } => {
            let w = c.weight(input.as_deref(), weight_gen.as_deref())?;
            let rep = check_weight_lemmas(&w, *p, *r, *s, q, (*family).into())?;
            let pairs = |v: &[(f64, f64)]| Cell::List(v.iter().map(|&(a, b)| reals(&[a, b])).collect());
            let report = Report::record(vec![
                ("p", rep.p.into()),
                ("r", rep.r.into()),
                ("s", rep.s.into()),
                ("monotonicity_holds", rep.monotonicity_holds.into()),
                ("duality_lhs", rep.duality.0.into()),
                ("duality_rhs", rep.duality.1.into()),
                ("duality_rel_err", rep.duality_rel_err.into()),
                ("duality_holds", rep.duality_holds.into()),
                ("rh_s_pow", rep.rh_s_pow.into()),
                ("ar_s_pow", rep.ar_s_pow.into()),
                ("ws_ap", rep.ws_ap.into()),
                ("sandwich_upper", rep.sandwich_upper.into()),
                ("sandwich_holds", rep.sandwich_holds.into()),
                ("all_hold", rep.all_hold().into()),
            ])
            .meta("monotonicity", pairs(&rep.monotonicity))
            .meta("self_improvement", pairs(&rep.self_improvement))
            .text(TextLayout::KeyValue);
            Ok(Outcome { report, passed: rep.all_hold() })
        }
        Command::Norm { input, space } | Command::DualNorm { input, space } => {
            let mut x = parse_space(space)?;
            if matches!(cli.command, Command::DualNorm { .. }) {
                x = x.dual();
            }
            let points = c.measure()?;
            let xi = read_reals(input)?;
            Ok(ok(norm_report(&eval_norm(&x, &points, &xi, &c.solver())?)))
        }
        Command::ProductNorm { input, spaces, thetas } => {
            let children = spaces.iter().map(|s| parse_space(s)).collect::<Result<Vec<_>, _>>()?;
            let x = if thetas.is_empty() {
                SpaceExpr::product(children)
            } else {
                SpaceExpr::calderon(children, thetas.clone())
            };
            let points = c.measure()?;
            let xi = read_reals(input)?;
            Ok(ok(norm_report(&eval_norm(&x, &points, &xi, &c.solver())?)))
        }
        Command::IdentityCheck { lhs, rhs } => {
            let (lhs, rhs) = (parse_space(lhs)?, parse_space(rhs)?);
            let points = c.measure()?;
            let rep = check_identity(&lhs, &rhs, &points, c.probes.unwrap_or(100), c.tol.unwrap_or(1e-5), c.seed, &c.solver())?;
            let report = Report::record(vec![
                ("probes", rep.probes.into()),
                ("max_rel_discrepancy", rep.max_rel_discrepancy.into()),
                ("worst_probe", rep.worst_probe.into()),
                ("tol", rep.tol.into()),
                ("passed", rep.passed.into()),
                ("converged", rep.converged.into()),
            ])
            .meta("lhs", reals(&rep.lhs))
            .meta("rhs", reals(&rep.rhs))
            .text(TextLayout::KeyValue);
            Ok(Outcome { report, passed: rep.passed })
        }
        Command::UmdTransform { space, p_minus, p_plus } => {
            let x = umd_transform(&parse_space(space)?, *p_minus, *p_plus)?;
            Ok(ok(Report::record(vec![("space", format_space(&x).into())])))
        }
        Command::Maximal { input, mode, family } => {
            let f = read_lattice(input, c.grid_log2, &c.measure()?)?;
            let mode = match mode {
                Mode::Scalar => MaximalMode::Scalar,
                Mode::Lattice => MaximalMode::Lattice,
            };
            Ok(ok(lattice_report(&maximal(&f, mode, (*family).into()))))
        }
        Command::Hilbert { input } => {
            let f = read_lattice(input, c.grid_log2, &c.measure()?)?;
            Ok(ok(lattice_report(&hilbert(&f))))
        }
        Command::Bht { f, g, kernel } => {
            let points = c.measure()?;
            let f = read_lattice(f, c.grid_log2, &points)?;
            let g = read_lattice(g, c.grid_log2, &points)?;
            let kernel = match kernel {
                Kernel::Bht => BilinearKernel::BhtTruncated,
                Kernel::SmoothCz => BilinearKernel::SmoothCz { profile: CzProfile::TaperedCauchy },
            };
            Ok(ok(lattice_report(&bilinear(&f, &g, kernel)?)))
        }
        Command::Multiplier { input, symbol } => {
            let f = read_lattice(input, c.grid_log2, &c.measure()?)?;
            let m = parse_symbol_spec(symbol, f.grid().cells())?;
            Ok(ok(lattice_report(&apply_multiplier(&m, &f)?)))
        }
        Command::VqNorm { input, q, dyadic } => {
            let m = read_reals(input)?;
            if *dyadic {
                let (blocks, sup) = vq_dyadic_blocks(&m, *q)?;
                let mut r = Report::new(&["lo", "hi", "norm"]);
                for b in blocks {
                    r.push(vec![Cell::Text(b.lo.to_string()), Cell::Text(b.hi.to_string()), b.norm.into()]);
                }
                Ok(ok(r.meta("sup", sup)))
            } else {
                Ok(ok(Report::record(vec![("value", vq_norm(&m, *q)?.into())])))
            }
        }
        Command::RdfBuild { args, k, terms, retries, safety, ascent } => {
            let (u, w, problem) = majorant_inputs(c, args)?;
            let cfg = MajorantConfig {
                k: *k,
                n_terms: *terms,
                safety_factor: *safety,
                seed: c.seed,
                n_probes: c.probes.unwrap_or(8),
                n_ascent: *ascent,
                solver: c.solver(),
            };
            let tol = c.tol.unwrap_or(1e-6);
            let vm = build_verified_majorant(&u, &w, &problem, &cfg, tol, *retries)?;
            let report = lattice_report(&vm.result.v)
                .meta("k_used", vm.result.k_used)
                .meta("k_estimate", vm.result.k_estimate)
                .meta("n_terms", vm.result.n_terms)
                .meta("tail_bound", vm.result.tail_bound)
                .meta("retries", vm.retries)
                .meta("passed", vm.report.passed())
                .meta("first_failure", vm.report.first_failure());
            Ok(Outcome { report, passed: vm.report.passed() })
        }
        Command::RdfVerify { args, v, k_used } => {
            let (u, w, problem) = majorant_inputs(c, args)?;
            let v = read_lattice(v, Some(u.grid().level()), u.points())?;
            let rep = verify_majorant(&u, &v, &w, &problem, positive("--k-used", *k_used)?, c.tol.unwrap_or(1e-6), &c.solver())?;
            let mut report = Report::new(&["check", "passed", "worst_ratio", "witness_cell", "witness_point"]);
            report.push(check_row("majorization", &rep.majorization));
            report.push(check_row("norm-doubling", &rep.norm_doubling));
            report.push(check_row("slice-a1", &rep.slice_a1));
            let slices: Vec<f64> = rep.slices.iter().map(|s| s.a1_power).collect();
            let report = report
                .meta("u_norm", rep.u_norm)
                .meta("v_norm", rep.v_norm)
                .meta("tol", rep.tol)
                .meta("slice_a1_power", reals(&slices))
                .show(&["check", "passed", "worst_ratio"]);
            Ok(Outcome { report, passed: rep.passed() })
        }
        Command::SparseCertify { input, density } => {
            let grid = c.grid()?;
            let cubes = read_collection(input, grid)?;
            let collection = SparseCollection::new(grid, cubes, *density)?;
            match certify_sparse(&collection) {
                SparseCertificate::Feasible(s) => {
                    let text = format_collection(&s);
                    Ok(ok(collection_rows(&s, true).meta("feasible", true).text(TextLayout::Raw(text))))
                }
                SparseCertificate::Infeasible { family, demand, capacity } => {
                    let bad = SparseCollection::new(grid, family, *density)?;
                    let text = format!("infeasible {demand} {capacity}\n{}", format_collection(&bad));
                    let report = collection_rows(&bad, false)
                        .meta("feasible", false)
                        .meta("demand", demand)
                        .meta("capacity", capacity)
                        .text(TextLayout::Raw(text));
                    Ok(Outcome { report, passed: false })
                }
            }
        }
        Command::SparseForm { collection, f, g, p_minus, p_plus, density } => {
            let f = read_reals(f)?;
            let g = read_reals(g)?;
            let grid = crate::io::grid_for(f.len(), c.grid_log2, Path::new("--f"))?;
            let cubes = read_collection(collection, grid)?;
            let s = SparseCollection::new(grid, cubes, *density)?;
            Ok(ok(Report::record(vec![("value", sparse_form(&s, &f, &g, *p_minus, *p_plus)?.into())])))
        }
        Command::SparseFind { op, f, g, instances, p_minus, p_plus, lambda, density } => {
            let params = DominationParams { p_minus: *p_minus, p_plus: *p_plus, lambda: *lambda, density: *density };
            let (f, g) = match (f, g) {
                (Some(f), Some(g)) => (read_reals(f)?, read_reals(g)?),
                _ => {
                    if *instances > 1 {
                        return domination_table(c, op, *instances, &params);
                    }
                    seeded_instance(c.grid()?, c.seed)
                }
            };
            let op = parse_operator(op, f.len())?;
            let d = find_domination(&op, &f, &g, &params)?;
            let text = format!(
                "c {}\npairing {}\nform {}\ncertified {}\n{}",
                real(d.c),
                real(d.pairing),
                real(d.form),
                d.certified,
                format_collection(&SparseCollection { witnesses: None, ..d.collection.clone() })
            );
            let report = collection_rows(&d.collection, false)
                .meta("c", d.c)
                .meta("pairing", d.pairing)
                .meta("form", d.form)
                .meta("sparse", d.sparse)
                .meta("certified", d.certified)
                .text(TextLayout::Raw(text));
            Ok(Outcome { report, passed: d.certified })
        }
        Command::Extrapolate {
            op,
            ranges,
            q1,
            q2,
            exponents,
            generators,
            weights_per_gen,
            spaces,
            codomain,
            ascent,
            family,
            envelope,
        } => {
            let grid = c.grid()?;
            let points = MeasurePoints::counting(c.points.unwrap_or(4))?;
            let op = parse_operator(op, grid.cells())?;
            let arity = op.arity();
            let ranges: Vec<(f64, f64)> = match (q1, q2) {
                (Some(q1), Some(q2)) => {
                    let r = bht_range(*q1, *q2)?;
                    vec![(r.p1_minus, r.p1_plus), (r.p2_minus, r.p2_plus)]
                }
                _ => ranges
                    .iter()
                    .map(|s| match parse_tuple(s)?.as_slice() {
                        [lo, hi] => Ok((*lo, *hi)),
                        _ => Err(usage(format!("--range {s:?} needs two values"))),
                    })
                    .collect::<Result<_, Error>>()?,
            };
            let exponents = exponents.iter().map(|s| parse_tuple(s)).collect::<Result<Vec<_>, _>>()?;
            let generators = generators.iter().map(|s| parse_weight_gen(s)).collect::<Result<Vec<_>, _>>()?;
            let mut spaces = spaces.iter().map(|s| parse_space(s)).collect::<Result<Vec<_>, _>>()?;
            match spaces.len() {
                0 => spaces = vec![SpaceExpr::lebesgue(2.0); arity],
                1 => spaces = vec![spaces[0].clone(); arity],
                _ => {}
            }
            let codomain = match codomain {
                Some(s) => parse_space(s)?,
                None if arity == 1 => spaces[0].clone(),
                None => SpaceExpr::product(spaces.clone()),
            };
            let spec = ExtrapolationSpec {
                op,
                ranges,
                exponents,
                generators,
                weights_per_generator: *weights_per_gen,
                grid,
                points,
                spaces,
                codomain,
                family: (*family).into(),
                n_probes: c.probes.unwrap_or(8),
                n_ascent: *ascent,
                seed: c.seed,
                solver: c.solver(),
            };
            let rows = extrapolation_table(&spec)?;
            let monotone = rows.iter().all(|r| r.embedding_monotone(EMBEDDING_SLACK));
            if *envelope {
                let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.characteristic(), r.norm)).collect();
                let mut report = Report::new(&["characteristic", "envelope"]);
                for (ch, v) in monotone_envelope(&samples) {
                    report.push(vec![ch.into(), v.into()]);
                }
                return Ok(Outcome { report, passed: monotone });
            }
            let mut report = Report::new(&["p1", "p2", "ap1", "rh1", "ap2", "rh2", "norm", "probes", "seed"]);
            let slot = |v: &[f64], j: usize| -> Cell { v.get(j).copied().into() };
            for r in &rows {
                report.push(vec![
                    slot(&r.p, 0),
                    slot(&r.p, 1),
                    slot(&r.ap, 0),
                    slot(&r.rh, 0),
                    slot(&r.ap, 1),
                    slot(&r.rh, 1),
                    r.norm.into(),
                    r.probes.into(),
                    r.seed.into(),
                ]);
            }
            let scalar: Vec<f64> = rows.iter().map(|r| r.scalar_norm).collect();
            let index = Cell::List(rows.iter().map(|r| r.weight_index.into()).collect());
            let report = report.meta("scalar_norm", reals(&scalar)).meta("weight_index", index).meta("embedding_monotone", monotone);
            Ok(Outcome { report, passed: monotone })
        }
        Command::FubiniCheck { op, p, weight } => {
            let w = c.weight(weight.weight.as_deref(), weight.weight_gen.as_deref())?;
            let op = parse_operator(op, w.grid().cells())?;
            let m = c.points.unwrap_or(4);
            let rep = fubini_check(&op, *p, &w, m, c.probes.unwrap_or(20), c.seed, &c.solver())?;
            let report = Report::record(vec![
                ("probes", rep.probes.into()),
                ("diagonal_max_rel", rep.diagonal_max_rel.into()),
                ("embedding_max_rel", rep.embedding_max_rel.into()),
                ("tol", rep.tol.into()),
                ("passed", rep.passed.into()),
            ])
            .text(TextLayout::KeyValue);
            Ok(Outcome { report, passed: rep.passed })
        }
        Command::BhtRange { q1, q2 } => {
            let r = bht_range(*q1, *q2)?;
            Ok(ok(Report::record(vec![
                ("p1_minus", r.p1_minus.into()),
                ("p1_plus", r.p1_plus.into()),
                ("p2_minus", r.p2_minus.into()),
                ("p2_plus", r.p2_plus.into()),
            ])))
        }
    }
}

/// Relative rounding allowed when comparing vector and scalar lower bounds.
pub const EMBEDDING_SLACK: f64 = 1e-9;

fn majorant_inputs(c: &Common, a: &MajorantArgs) -> Result<(LatticeFunction, Weight, MajorantProblem), Error> {
    let y = parse_space(&a.y)?;
    let u = read_lattice(&a.u, c.grid_log2, &c.measure()?)?;
    let w = match (&a.weight.weight, &a.weight.weight_gen) {
        (None, Some(spec)) => generate_weight(u.grid(), parse_weight_gen(spec)?, c.seed)?,
        (file, gen) => c.weight(file.as_deref(), gen.as_deref())?,
    };
    let problem = MajorantProblem { r: a.r, r_plus: a.r_plus, y, family: a.family.into() };
    problem.validate()?;
    Ok((u, w, problem))
}

fn domination_table(c: &Common, op: &str, instances: u64, params: &DominationParams) -> Result<Outcome, Error> {
    let grid = c.grid()?;
    let op = parse_operator(op, grid.cells())?;
    if op.arity() != 1 {
        return Err(usage("sparse domination needs an operator of one argument"));
    }
    let seeds = c.seed..c.seed + instances;
    let all = domination_corpus(&op, grid, seeds.clone(), params)?;
    let mut report = Report::new(&["seed", "c", "pairing", "form", "cubes", "certified"]);
    let mut max_c = 0.0f64;
    let mut certified = true;
    for (s, d) in seeds.zip(&all) {
        max_c = max_c.max(d.c);
        certified &= d.certified;
        report.push(vec![s.into(), d.c.into(), d.pairing.into(), d.form.into(), d.collection.cubes.len().into(), d.certified.into()]);
    }
    let report = report.meta("max_c", max_c).meta("certified", certified);
    Ok(Outcome { report, passed: certified })
}
