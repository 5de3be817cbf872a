//! Experiment runner for the separable test problem
//! `u0 = phi_11`, `f = (1 + sin pi t) phi_11`.
//!
//! Writes into `--out`:
//! - `report.csv`: one row per run with phase timings and counters;
//! - `errors.csv`: per-step L2 and nodal errors (no timings);
//! - `solution_<tag>.bin` plus `.hdr`: the solution stream of each run;
//! - `tree_dump.txt` with `--diag`, `stability.csv` with `--diag-stability`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, CommandFactory, Parser, ValueEnum};

use crate::clustering::{max_depth, ClusterTree};
use crate::error::Result;
use crate::fem::{SineModeSource, TimeProfile};
use crate::reference::{LaplaceContour, ReferenceSolution};
use crate::sink::{BinarySink, SinkHeader};
use crate::stepper::{fast_run, select_params, slow_run, stability_diagnostic, Mode, RunConfig, RunOptions, RunOutput};
use crate::weights::SeriesControl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Slow,
    Fast,
    Both,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "fracdg", version, about = "Slow and fast DG time stepping for fractional subdiffusion")]
pub struct Args {
    /// Fractional order, 0 < nu < 1.
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 6.0)]
    pub final_time: f64,
    /// Number of time steps.
    #[arg(long = "N", default_value_t = 2000)]
    pub intervals: usize,
    /// Spatial dimension (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Subdivisions per axis.
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    /// Diffusivity; defaults to 1/(2 pi^2).
    #[arg(long = "K")]
    pub diffusivity: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Expansion order; omitted means automatic selection.
    #[arg(long)]
    pub r: Option<usize>,
    /// Admissibility parameter; omitted means 2 exp(-(r+2)/(r+1)).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Branching factor of the cluster tree.
    #[arg(long = "Q")]
    pub branching: Option<usize>,
    /// Depth of the cluster tree.
    #[arg(long = "G")]
    pub depth: Option<usize>,
    /// Compute the O(N^2) perturbation-sum stability diagnostic.
    #[arg(long)]
    pub diag_stability: bool,
    /// Write the cluster tree with the last leaf's cover to tree_dump.txt.
    #[arg(long)]
    pub diag: bool,
    /// Output directory.
    #[arg(long, default_value = "fracdg-out")]
    pub out: PathBuf,
    /// Run once per listed step count.
    #[arg(long = "sweep-N", value_delimiter = ',')]
    pub sweep_n: Vec<usize>,
    /// Run once per listed subdivision count.
    #[arg(long = "sweep-m", value_delimiter = ',')]
    pub sweep_m: Vec<usize>,
    /// Run the fast method once per listed order.
    #[arg(long = "sweep-r", value_delimiter = ',')]
    pub sweep_r: Vec<usize>,
    /// Skip writing solution streams.
    #[arg(long)]
    pub no_stream: bool,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: RunConfig,
    pub modes: Vec<Mode>,
    pub sweep_n: Vec<usize>,
    pub sweep_m: Vec<usize>,
    /// `None` entries select the order automatically.
    pub sweep_r: Vec<Option<usize>>,
    pub out: PathBuf,
    pub diag: bool,
    pub diag_stability: bool,
    pub stream: bool,
}

/// Parses and validates command-line arguments (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<ExperimentSpec, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let conflict = |msg: String| Args::command().error(ErrorKind::ArgumentConflict, msg);
    let invalid = |msg: String| Args::command().error(ErrorKind::ValueValidation, msg);

    if args.mode == ModeArg::Slow {
        for (given, name) in [
            (args.r.is_some(), "--r"),
            (args.eta.is_some(), "--eta"),
            (args.branching.is_some(), "--Q"),
            (args.depth.is_some(), "--G"),
            (!args.sweep_r.is_empty(), "--sweep-r"),
        ] {
            if given {
                return Err(conflict(format!("{name} only applies to the fast method, but --mode slow was given")));
            }
        }
    }
    if args.eta.is_some() && args.r.is_none() {
        return Err(conflict("--eta needs an explicit --r".into()));
    }
    if args.eta.is_some() && !args.sweep_r.is_empty() {
        return Err(conflict("--eta cannot be combined with --sweep-r".into()));
    }
    if args.r.is_some() && !args.sweep_r.is_empty() {
        return Err(conflict("--r cannot be combined with --sweep-r".into()));
    }
    let sweep_n = if args.sweep_n.is_empty() { vec![args.intervals] } else { args.sweep_n.clone() };
    if sweep_n.contains(&0) {
        return Err(invalid("step counts must be positive".into()));
    }
    if let (Some(q), Some(g)) = (args.branching, args.depth) {
        for &n in &sweep_n {
            let fits = q >= 2 && q.checked_pow(g as u32).is_some_and(|l| l <= n && n % l == 0);
            if !fits {
                let hint = match max_depth(n, q) {
                    Some(cap) => format!("largest admissible depth is {cap}"),
                    None => format!("{n} is not divisible by {q}"),
                };
                return Err(invalid(format!("--N {n} cannot be split into {q}^{g} equal leaves; {hint}")));
            }
        }
    }
    let sweep_m = if args.sweep_m.is_empty() { vec![args.m] } else { args.sweep_m.clone() };
    let modes = match args.mode {
        ModeArg::Slow => vec![Mode::Slow],
        ModeArg::Fast => vec![Mode::Fast],
        ModeArg::Both => vec![Mode::Slow, Mode::Fast],
    };
    let sweep_r = if args.sweep_r.is_empty() {
        vec![args.r]
    } else {
        args.sweep_r.iter().copied().map(Some).collect()
    };
    Ok(ExperimentSpec {
        base: RunConfig {
            nu: args.nu,
            final_time: args.final_time,
            intervals: sweep_n[0],
            dim: args.dim,
            subdivisions: args.m,
            diffusivity: args.diffusivity.unwrap_or(RunConfig::default().diffusivity),
            r: args.r,
            eta: args.eta,
            branching: args.branching,
            depth: args.depth,
            accuracy_constant: 1.0,
            series: SeriesControl::default(),
        },
        modes,
        sweep_n,
        sweep_m,
        sweep_r,
        out: args.out,
        diag: args.diag,
        diag_stability: args.diag_stability,
        stream: !args.no_stream,
    })
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub mode: Mode,
    pub intervals: usize,
    pub subdivisions: usize,
    pub r: Option<usize>,
    pub eta: Option<f64>,
    pub shape: Option<(usize, usize)>,
    pub max_nodal_error: f64,
    pub setup_s: f64,
    pub rhs_s: f64,
    pub solver_s: f64,
    pub total_s: f64,
    pub rhs_ops: u64,
    pub peak_values: usize,
}

pub const REPORT_HEADER: &str =
    "mode,r,eta,max_nodal_error,setup_s,rhs_s,solver_s,total_s,rhs_ops,peak_values,N,Q,G,m";
pub const ERRORS_HEADER: &str = "mode,N,m,r,n,t,l2_error,max_nodal_error";

impl ReportRow {
    fn csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{:.6e},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            self.mode,
            opt(self.r.map(|r| r.to_string())),
            opt(self.eta.map(|e| format!("{e:.6}"))),
            self.max_nodal_error,
            self.setup_s,
            self.rhs_s,
            self.solver_s,
            self.total_s,
            self.rhs_ops,
            self.peak_values,
            self.intervals,
            opt(self.shape.map(|s| s.0.to_string())),
            opt(self.shape.map(|s| s.1.to_string())),
            self.subdivisions,
        )
    }
}

/// Executes every run of `spec` and writes the artifacts.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ReportRow>> {
    std::fs::create_dir_all(&spec.out)?;
    let mut report = format!("{REPORT_HEADER}\n");
    let mut errors = format!("{ERRORS_HEADER}\n");
    let mut rows = Vec::new();
    let mut stability = String::new();
    let mut dump = String::new();

    for (n, sub) in spec.sweep_n.iter().flat_map(|&n| spec.sweep_m.iter().map(move |&m| (n, m))) {
        let base = RunConfig {
            intervals: n,
            subdivisions: sub,
            ..spec.base.clone()
        };
        let grid = base.grid()?;
        let mesh = base.mesh()?;
        let reference = ReferenceSolution::new(&grid, &mesh, base.nu, LaplaceContour::default())?;
        let source = SineModeSource {
            modes: (1, 1),
            profile: TimeProfile::OnePlusSinPi,
        };
        let u0 = grid.sine_mode((1, 1));

        for &mode in &spec.modes {
            let orders: Vec<Option<usize>> = match mode {
                Mode::Slow => vec![None],
                Mode::Fast => spec.sweep_r.clone(),
            };
            for r in orders {
                let config = RunConfig { r, ..base.clone() };
                let mut tag = match (mode, r) {
                    (Mode::Slow, _) => format!("slow_N{n}"),
                    (Mode::Fast, Some(r)) => format!("fast_r{r}_N{n}"),
                    (Mode::Fast, None) => format!("fast_auto_N{n}"),
                };
                if spec.sweep_m.len() > 1 {
                    tag.push_str(&format!("_m{sub}"));
                }
                let expansion = match mode {
                    Mode::Fast => Some(config.expansion()?),
                    Mode::Slow => None,
                };
                let shape = expansion.map(|e| config.tree_shape(e)).transpose()?;
                let mut sink = if spec.stream {
                    let header = SinkHeader {
                        intervals: n,
                        dim: grid.free_nodes(),
                        nu: config.nu,
                        final_time: config.final_time,
                        r: expansion.map(|e| e.r()),
                        eta: expansion.map(|e| e.eta()),
                        branching: shape.map(|s| s.0),
                        depth: shape.map(|s| s.1),
                    };
                    Some(BinarySink::create(spec.out.join(format!("solution_{tag}.bin")), &header)?)
                } else {
                    None
                };
                let opts = RunOptions {
                    sink: sink.as_mut().map(|s| s as &mut dyn crate::sink::SolutionSink),
                    reference: Some(&reference),
                    keep_values: false,
                };
                let out: RunOutput = match mode {
                    Mode::Slow => slow_run(&config, &source, &u0, opts)?,
                    Mode::Fast => fast_run(&config, &source, &u0, opts)?,
                };
                let rep = &out.report;
                let row = ReportRow {
                    mode,
                    intervals: n,
                    subdivisions: sub,
                    r: rep.expansion.map(|e| e.r()),
                    eta: rep.expansion.map(|e| e.eta()),
                    shape: rep.shape,
                    max_nodal_error: rep.max_nodal_error.unwrap_or(f64::NAN),
                    setup_s: rep.setup_s,
                    rhs_s: rep.rhs_s,
                    solver_s: rep.solver_s,
                    total_s: rep.total_s,
                    rhs_ops: rep.rhs_ops(),
                    peak_values: rep.peak_values(),
                };
                let _ = writeln!(report, "{}", row.csv());
                let r_col = row.r.map(|r| r.to_string()).unwrap_or_default();
                for step in &rep.steps {
                    let _ = writeln!(
                        errors,
                        "{mode},{n},{sub},{r_col},{},{:.17e},{:.6e},{:.6e}",
                        step.n,
                        mesh.level(step.n),
                        step.l2_error.unwrap_or(f64::NAN),
                        step.nodal_error.unwrap_or(f64::NAN)
                    );
                }
                log::info!("{tag}: max nodal error {:.3e}, rhs ops {}", row.max_nodal_error, row.rhs_ops);

                if let (Some(e), Some((q, g))) = (expansion, shape) {
                    if spec.diag_stability || spec.diag {
                        let tree = ClusterTree::build_uniform(&mesh, q, g)?;
                        if spec.diag_stability {
                            let diag = stability_diagnostic(&config.weights()?, &tree, e)?;
                            if stability.is_empty() {
                                stability.push_str("N,r,eta,row_ratio,column_ratio,stability_threshold,accuracy_threshold\n");
                            }
                            let sel = select_params(config.nu, &mesh, config.accuracy_constant)?;
                            let _ = writeln!(
                                stability,
                                "{n},{},{:.6},{:.6e},{:.6e},{:.6e},{:.6e}",
                                e.r(),
                                e.eta(),
                                diag.row_ratio,
                                diag.column_ratio,
                                sel.stability_threshold,
                                sel.accuracy_threshold
                            );
                        }
                        if spec.diag && dump.is_empty() {
                            let cover = tree.minimal_cover(tree.leaves().end - 1, e.eta());
                            dump = tree.dump(Some(&cover));
                        }
                    }
                }
                rows.push(row);
            }
        }
    }

    write(&spec.out, "report.csv", &report)?;
    write(&spec.out, "errors.csv", &errors)?;
    if !stability.is_empty() {
        write(&spec.out, "stability.csv", &stability)?;
    }
    if !dump.is_empty() {
        write(&spec.out, "tree_dump.txt", &dump)?;
    }
    Ok(rows)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

/// Human-readable summary in the layout of the report.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<5} {:>6} {:>4} {:>7} {:>8} {:>12} {:>9} {:>9} {:>9} {:>9} {:>14} {:>12}",
        "mode", "N", "r", "eta", "Q,G", "max error", "setup s", "RHS s", "solver s", "total s", "RHS ops", "peak values"
    );
    for row in rows {
        let shape = row.shape.map(|(q, g)| format!("{q},{g}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<5} {:>6} {:>4} {:>7} {:>8} {:>12.3e} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>14} {:>12}",
            row.mode.to_string(),
            row.intervals,
            row.r.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            row.eta.map(|e| format!("{e:.4}")).unwrap_or_else(|| "-".into()),
            shape,
            row.max_nodal_error,
            row.setup_s,
            row.rhs_s,
            row.solver_s,
            row.total_s,
            row.rhs_ops,
            row.peak_values
        );
    }
    out
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let spec = match parse_args(argv) {
        Ok(spec) => spec,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&spec) {
        Ok(rows) => {
            print!("{}", render_table(&rows));
            println!("artifacts written to {}", spec.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
