//! Time stepping `(M + beta_nn S) U^n = M U^{n-1} + k_n fbar^n + S H^n`,
//! where `H^n` is the history sum supplied either by [`DirectHistory`]
//! (exact weights) or by [`HistoryEngine`] (far field compressed).

use std::f64::consts::PI;
use std::time::Instant;

use crate::clustering::{auto_shape, default_depth, ClusterTree};
use crate::error::{invalid, Error, Result};
use crate::fem::{FieldVector, SpatialGrid, Source};
use crate::history::{Counters, DirectHistory, HistoryEngine, HistorySum};
use crate::reference::ReferenceSolution;
use crate::sink::SolutionSink;
use crate::taylor::{optimal_eta, phi_into, psi_into, ExpansionParams};
use crate::time_mesh::TimeMesh;
use crate::weights::{gamma, KernelParams, SeriesControl, WeightEngine};

/// Largest expansion order tried by automatic selection.
pub const MAX_AUTO_ORDER: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Slow,
    Fast,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Slow => "slow",
            Mode::Fast => "fast",
        })
    }
}

/// Everything needed to set up one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub final_time: f64,
    pub intervals: usize,
    pub dim: usize,
    pub subdivisions: usize,
    pub diffusivity: f64,
    /// Expansion order; `None` selects automatically.
    pub r: Option<usize>,
    /// Admissibility parameter; `None` uses the cost-optimal value for `r`.
    pub eta: Option<f64>,
    pub branching: Option<usize>,
    pub depth: Option<usize>,
    /// Constant in the accuracy gate `(r+1)(eta/2)^r <= C N^(nu-2)`.
    pub accuracy_constant: f64,
    pub series: SeriesControl,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: 0.5,
            final_time: 6.0,
            intervals: 2000,
            dim: 2,
            subdivisions: 40,
            diffusivity: 1.0 / (2.0 * PI * PI),
            r: None,
            eta: None,
            branching: None,
            depth: None,
            accuracy_constant: 1.0,
            series: SeriesControl::default(),
        }
    }
}

impl RunConfig {
    pub fn kernel(&self) -> Result<KernelParams> {
        KernelParams::new(self.nu)
    }

    pub fn mesh(&self) -> Result<TimeMesh> {
        TimeMesh::uniform(self.intervals, self.final_time)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.dim, self.subdivisions, self.diffusivity)
    }

    /// Exact weights bound to this configuration's mesh.
    pub fn weights(&self) -> Result<WeightEngine> {
        WeightEngine::new(self.kernel()?, self.mesh()?, self.series).with_lag_cache()
    }

    /// `(r, eta)` for the fast method.
    pub fn expansion(&self) -> Result<ExpansionParams> {
        match (self.r, self.eta) {
            (Some(r), Some(eta)) => ExpansionParams::new(r, eta),
            (Some(r), None) => ExpansionParams::optimal(r),
            (None, Some(_)) => Err(Error::Config("an explicit eta needs an explicit r".into())),
            (None, None) => Ok(select_params(self.nu, &self.mesh()?, self.accuracy_constant)?.expansion),
        }
    }

    /// `(Q, G)`, filling in whatever is not given.
    pub fn tree_shape(&self, expansion: ExpansionParams) -> Result<(usize, usize)> {
        let n = self.intervals;
        match (self.branching, self.depth) {
            (Some(q), Some(g)) => Ok((q, g)),
            (Some(q), None) => Ok((q, default_depth(n, q)?)),
            (None, Some(g)) => Ok((2, g)),
            (None, None) => auto_shape(n, expansion.r(), expansion.eta()),
        }
    }
}

/// `rho_nu = pi^(1-nu) (1-nu)^(1-nu) / (2-nu)^(2-nu) sin(pi nu / 2)`.
pub fn rho_nu(nu: f64) -> f64 {
    let a = 1.0 - nu;
    let b = 2.0 - nu;
    // 0^0 = 1 at nu = 1
    let a_pow = if a > 0.0 { a.powf(a) } else { 1.0 };
    PI.powf(a) * a_pow / b.powf(b) * (0.5 * PI * nu).sin()
}

/// Outcome of [`select_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSelection {
    pub expansion: ExpansionParams,
    /// `2^(nu-2) Gamma(nu+1) rho_nu (k_min/T)^(1-nu)`.
    pub stability_threshold: f64,
    /// `C N^(nu-2)`.
    pub accuracy_threshold: f64,
}

/// Smallest `r` (with cost-optimal `eta`) whose error factor
/// `(r+1)(eta/2)^r` meets both the stability and the accuracy threshold.
pub fn select_params(nu: f64, mesh: &TimeMesh, accuracy_constant: f64) -> Result<ParamSelection> {
    KernelParams::new(nu)?;
    if !(accuracy_constant > 0.0) {
        return Err(invalid(format!("accuracy constant must be positive, got {accuracy_constant}")));
    }
    let t = mesh.final_time();
    let stability_threshold =
        2f64.powf(nu - 2.0) * gamma(nu + 1.0) * rho_nu(nu) * (mesh.min_step() / t).powf(1.0 - nu);
    let accuracy_threshold = accuracy_constant * (mesh.intervals() as f64).powf(nu - 2.0);
    let target = stability_threshold.min(accuracy_threshold);
    for r in 1..=MAX_AUTO_ORDER {
        let expansion = ExpansionParams::new(r, optimal_eta(r))?;
        if expansion.error_factor() <= target {
            return Ok(ParamSelection {
                expansion,
                stability_threshold,
                accuracy_threshold,
            });
        }
    }
    Err(Error::Config(format!(
        "no expansion order up to {MAX_AUTO_ORDER} reaches the error factor {target:.3e}"
    )))
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub n: usize,
    pub rhs_ops: u64,
    pub rhs_s: f64,
    pub solver_s: f64,
    pub l2_norm: f64,
    pub l2_error: Option<f64>,
    pub nodal_error: Option<f64>,
}

/// Whole-run record; `total_s = setup_s + rhs_s + solver_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub expansion: Option<ExpansionParams>,
    pub shape: Option<(usize, usize)>,
    pub setup_s: f64,
    pub rhs_s: f64,
    pub solver_s: f64,
    pub total_s: f64,
    /// Time spent writing the solution stream, outside the phase totals.
    pub io_s: f64,
    pub counters: Counters,
    pub max_nodal_error: Option<f64>,
    pub steps: Vec<StepReport>,
}

impl RunReport {
    pub fn rhs_ops(&self) -> u64 {
        self.counters.rhs_ops()
    }

    pub fn peak_values(&self) -> usize {
        self.counters.peak_values
    }
}

/// Optional extras of a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    pub sink: Option<&'a mut dyn SolutionSink>,
    pub reference: Option<&'a ReferenceSolution>,
    /// Keep every `U^n` in the output.
    pub keep_values: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// `U^1 .. U^N` when requested.
    pub values: Vec<FieldVector>,
    pub last: FieldVector,
}

/// Direct scheme with exact weights; stores all past solutions.
pub fn slow_run(config: &RunConfig, source: &dyn Source, u0: &[f64], opts: RunOptions<'_>) -> Result<RunOutput> {
    let clock = Instant::now();
    let grid = config.grid()?;
    let weights = config.weights()?;
    let mut history = DirectHistory::new(weights.clone(), grid.free_nodes());
    let setup_s = clock.elapsed().as_secs_f64();
    drive(&mut history, &weights, &grid, source, u0, opts, Mode::Slow, None, None, setup_s)
}

/// Fast scheme: cluster tree, far-field moments, near-field exact weights.
pub fn fast_run(config: &RunConfig, source: &dyn Source, u0: &[f64], opts: RunOptions<'_>) -> Result<RunOutput> {
    let clock = Instant::now();
    let grid = config.grid()?;
    let weights = config.weights()?;
    let expansion = config.expansion()?;
    let (q, g) = config.tree_shape(expansion)?;
    let tree = ClusterTree::build_uniform(weights.mesh(), q, g)?;
    let mut engine = HistoryEngine::new(tree, expansion, weights.clone(), grid.free_nodes())?;
    let setup_s = clock.elapsed().as_secs_f64();
    log::debug!(
        "fast run: r = {}, eta = {:.4}, Q = {q}, G = {g}, condition ~ {:.3e}",
        expansion.r(),
        expansion.eta(),
        1.0 + weights.mesh().max_step().powf(config.nu) / grid.h().powi(2)
    );
    drive(
        &mut engine,
        &weights,
        &grid,
        source,
        u0,
        opts,
        Mode::Fast,
        Some(expansion),
        Some((q, g)),
        setup_s,
    )
}

#[allow(clippy::too_many_arguments)]
fn drive<H: HistorySum>(
    history: &mut H,
    weights: &WeightEngine,
    grid: &SpatialGrid,
    source: &dyn Source,
    u0: &[f64],
    mut opts: RunOptions<'_>,
    mode: Mode,
    expansion: Option<ExpansionParams>,
    shape: Option<(usize, usize)>,
    setup_s: f64,
) -> Result<RunOutput> {
    let m = grid.free_nodes();
    if u0.len() != m {
        return Err(invalid(format!("initial value has length {}, expected {m}", u0.len())));
    }
    let mesh = weights.mesh();
    let mut prev = u0.to_vec();
    let mut values = Vec::new();
    let mut steps = Vec::with_capacity(mesh.intervals());
    let (mut rhs_total, mut solver_total, mut io_total) = (0.0, 0.0, 0.0);
    let mut max_nodal: Option<f64> = None;

    for n in 1..=mesh.intervals() {
        let ops_before = history.counters().rhs_ops();
        let clock = Instant::now();
        let h = history.history_sum(n)?;
        let (t0, t1) = (mesh.level(n - 1), mesh.level(n));
        let k = mesh.step(n);
        let mut rhs = grid.apply_mass(&prev);
        let load = source.load_average(grid, t0, t1);
        let sh = grid.apply_stiffness(&h);
        for i in 0..m {
            rhs[i] += k * load[i] + sh[i];
        }
        let mut rhs_s = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let u = grid.solve(weights.diag(n)?, &rhs)?;
        let solver_s = clock.elapsed().as_secs_f64();

        if let Some(sink) = opts.sink.as_deref_mut() {
            let clock = Instant::now();
            sink.write_step(n, &u)?;
            io_total += clock.elapsed().as_secs_f64();
        }

        let clock = Instant::now();
        history.commit(n, &u)?;
        rhs_s += clock.elapsed().as_secs_f64();

        let (l2_error, nodal_error) = match opts.reference {
            Some(reference) => {
                let exact = reference.field(n);
                let diff: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
                let nodal = reference.nodal_error(n, &u);
                max_nodal = Some(max_nodal.map_or(nodal, |e: f64| e.max(nodal)));
                (Some(grid.l2_norm(&diff)), Some(nodal))
            }
            None => (None, None),
        };
        steps.push(StepReport {
            n,
            rhs_ops: history.counters().rhs_ops() - ops_before,
            rhs_s,
            solver_s,
            l2_norm: grid.l2_norm(&u),
            l2_error,
            nodal_error,
        });
        rhs_total += rhs_s;
        solver_total += solver_s;
        if opts.keep_values {
            values.push(u.clone());
        }
        prev = u;
    }
    if let Some(sink) = opts.sink.as_deref_mut() {
        sink.finish()?;
    }

    Ok(RunOutput {
        report: RunReport {
            mode,
            expansion,
            shape,
            setup_s,
            rhs_s: rhs_total,
            solver_s: solver_total,
            total_s: setup_s + rhs_total + solver_total,
            io_s: io_total,
            counters: history.counters().clone(),
            max_nodal_error: max_nodal,
            steps,
        },
        values,
        last: prev,
    })
}

/// Perturbation sums of the fast weights relative to the stability margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `max_n sum_j |beta~_nj - beta_nj| / (rho_nu T^(nu-1) k_n)`.
    pub row_ratio: f64,
    /// `max_j sum_n |beta~_nj - beta_nj| / (rho_nu T^(nu-1) k_j)`.
    pub column_ratio: f64,
}

impl StabilityReport {
    pub fn certified(&self) -> bool {
        self.row_ratio <= 1.0 && self.column_ratio <= 1.0
    }
}

/// O(N^2) comparison of the effective fast weights with the exact ones.
pub fn stability_diagnostic(
    weights: &WeightEngine,
    tree: &ClusterTree,
    expansion: ExpansionParams,
) -> Result<StabilityReport> {
    let mesh = weights.mesh();
    if tree.mesh() != mesh {
        return Err(invalid("weight engine and cluster tree use different time meshes"));
    }
    let nu = weights.params().nu();
    let kernel = weights.params();
    let scale = rho_nu(nu) * mesh.final_time().powf(nu - 1.0);
    let n_total = mesh.intervals();
    let r = expansion.r();
    let mut columns = vec![0.0; n_total + 1];
    let mut row_ratio = 0.0f64;
    let (mut phi, mut psi) = (vec![0.0; r], vec![0.0; r]);
    let covers = tree.all_covers(expansion.eta());
    for n in 1..=n_total {
        let cover = &covers[tree.leaf_of(n) - tree.leaves().start];
        let mut row = 0.0;
        for &c in &cover.far {
            let cl = tree.cluster(c);
            let sbar = 0.5 * (mesh.level(cl.lo - 1) + mesh.level(cl.hi));
            phi_into(kernel, sbar, mesh.level(n - 1), mesh.level(n), &mut phi)?;
            for j in cl.intervals() {
                psi_into(sbar, mesh.level(j - 1), mesh.level(j), &mut psi);
                let approx: f64 = phi.iter().zip(&psi).map(|(a, b)| a * b).sum();
                let diff = (approx - weights.offdiag(n, j)?).abs();
                row += diff;
                columns[j] += diff;
            }
        }
        row_ratio = row_ratio.max(row / (scale * mesh.step(n)));
    }
    let column_ratio = (1..=n_total)
        .map(|j| columns[j] / (scale * mesh.step(j)))
        .fold(0.0, f64::max);
    Ok(StabilityReport { row_ratio, column_ratio })
}
