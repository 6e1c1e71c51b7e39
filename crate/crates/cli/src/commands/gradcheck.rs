use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dgcca_core::gcca::finite_difference_objective;
use dgcca_core::linalg::mean_center_columns;
use dgcca_core::{gcca_gradient, solve_gcca, GccaInput, Matrix};

use crate::error::{CliError, CliResult};

pub const TOLERANCE: f64 = 1e-4;
/// Entries whose analytic and numeric values are both below this are
/// compared on an absolute scale.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;
const FLAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of views J
    #[arg(long, default_value_t = 3)]
    pub views: usize,
    /// Output width per view, comma-separated; a single value applies to all
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub dims: Vec<usize>,
    /// Number of samples N
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Entries checked per view
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Use J copies of one view
    #[arg(long)]
    pub identical: bool,
    /// Negate the analytic gradient (checks that the harness can fail)
    #[arg(long, hide = true)]
    pub break_sign: bool,
}

impl Default for GradcheckArgs {
    fn default() -> Self {
        Self {
            seed: 0,
            views: 3,
            dims: vec![4],
            n: 20,
            r: 2,
            eps: 1e-6,
            samples: 20,
            step: 1e-5,
            identical: false,
            break_sign: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViewCheck {
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub eigengap: f64,
    pub guard_passed: bool,
    /// Degenerate instance at a zero-error optimum: every gradient vanishes.
    pub flat_optimum: bool,
    pub max_abs_gradient: f64,
    pub views: Vec<ViewCheck>,
    pub max_rel_error: f64,
    pub passed: bool,
}

fn build_input(args: &GradcheckArgs) -> CliResult<GccaInput> {
    let dims: Vec<usize> = match args.dims.len() {
        1 => vec![args.dims[0]; args.views],
        n if n == args.views => args.dims.clone(),
        n => return Err(CliError::Config(format!("--dims lists {n} widths for {} views", args.views))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut draw = |o: usize| mean_center_columns(&Matrix::from_fn(o, args.n.max(1), |_, _| rng.random_range(-1.0..1.0)));
    let views = if args.identical {
        let y = draw(dims[0]);
        vec![y; args.views]
    } else {
        dims.iter().map(|&o| draw(o)).collect()
    };
    GccaInput::new(views, args.r, args.eps).map_err(|e| CliError::Config(e.to_string()))
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

/// Compare analytic and finite-difference gradients on a random instance.
pub fn check(args: &GradcheckArgs) -> CliResult<GradcheckReport> {
    if !(args.step > 0.0) || args.samples == 0 {
        return Err(CliError::Config("--step must be positive and --samples at least 1".into()));
    }
    let input = build_input(args)?;
    let sol = solve_gcca(&input).map_err(|e| CliError::Config(e.to_string()))?;
    let mut grads = gcca_gradient(&input, &sol).map_err(|e| CliError::Diverged(e.to_string()))?.per_view;
    if args.break_sign {
        grads = grads.iter().map(|g| g.scale(-1.0)).collect();
    }
    let max_abs_gradient = grads.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    let guard_passed = !sol.is_degenerate();
    let mut report = GradcheckReport {
        eigengap: sol.eigengap,
        guard_passed,
        flat_optimum: false,
        max_abs_gradient,
        views: Vec::new(),
        max_rel_error: 0.0,
        passed: false,
    };
    if !guard_passed {
        report.flat_optimum = max_abs_gradient <= FLAT_TOL && sol.reconstruction_error.abs() <= FLAT_TOL;
        report.passed = report.flat_optimum;
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x9e37_79b9_7f4a_7c15);
    for (j, g) in grads.iter().enumerate() {
        let total = g.rows() * g.cols();
        let picks = rand::seq::index::sample(&mut rng, total, args.samples.min(total));
        let mut worst = 0.0f64;
        for flat in picks.iter() {
            let (row, col) = (flat / g.cols(), flat % g.cols());
            let numeric = finite_difference_objective(&input, j, row, col, args.step)
                .map_err(|e| CliError::Diverged(e.to_string()))?;
            worst = worst.max(rel_error(g[(row, col)], numeric));
        }
        report.views.push(ViewCheck { checked: picks.len(), max_rel_error: worst });
        report.max_rel_error = report.max_rel_error.max(worst);
    }
    report.passed = report.max_rel_error <= TOLERANCE;
    Ok(report)
}

pub fn run(args: &GradcheckArgs) -> CliResult<()> {
    let report = check(args)?;
    println!("eigengap {:.3e} (guard {})", report.eigengap, if report.guard_passed { "passed" } else { "tripped" });
    if report.flat_optimum {
        println!("flat optimum: all gradients vanish (max |grad| {:.3e})", report.max_abs_gradient);
    }
    for (j, v) in report.views.iter().enumerate() {
        println!("view {j}: {} entries, max relative error {:.3e}", v.checked, v.max_rel_error);
    }
    println!("max relative error {:.3e}, tolerance {TOLERANCE:e}", report.max_rel_error);
    if report.passed {
        println!("PASS");
        Ok(())
    } else if !report.guard_passed {
        Err(CliError::Gradcheck(format!("eigengap {:.3e} below guard; gradient undefined", report.eigengap)))
    } else {
        Err(CliError::Gradcheck(format!("max relative error {:.3e} exceeds {TOLERANCE:e}", report.max_rel_error)))
    }
}
