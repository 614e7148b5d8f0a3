//! Batch front end: parse a TOML config, dispatch one subcommand, write
//! machine-readable artifacts.
//!
//! Exit codes: 0 on success, 2 when the input refuses validation (bad
//! config, violated scale-hierarchy inequality), 1 on numeric failure
//! (norm drift, lost convergence, unattainable design targets).

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use ccsim_core::error::Error as CoreError;
use ccsim_core::evolve::propagate;
use ccsim_core::hamiltonians::{effective_hamiltonian, FullHamiltonian, FullHamiltonianSpec};
use ccsim_core::hilbert::{BasisDescriptor, QuantumState};
use ccsim_core::params::{
    decoherence_check, effective_couplings, shifted_detunings, validity_check, DecoherenceReport,
    EffectiveSpinModel, ReducedParams, ShiftedDetunings, ValidityReport,
};
use ccsim_core::{
    cancellation_scan, compare_models, expansion_error_report, fit_parameters, ground_state,
    CompareSpec, HIERARCHY_WARN_FLOOR,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{ModelKind, OutputFormat, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Config or input refused before any numerics ran.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 1,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ccsim",
    version,
    about = "Coupled-cavity spin-chain simulator and parameter-design tool"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Artifact directory (overrides CCSIM_OUTPUT_DIR and the config).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the effective spin couplings, validity and decoherence reports.
    Derive(CommonArgs),
    /// Propagate one model (full or effective) and write the trajectory.
    Simulate(CommonArgs),
    /// Propagate full and effective models and write both plus a summary.
    Compare(CommonArgs),
    /// Sweep the branch-amplitude ratio and tabulate the couplings.
    Scan(CommonArgs),
    /// Diagnose the ground state of the effective chain.
    Groundstate(CommonArgs),
    /// Fit free parameters to coupling targets.
    Design(CommonArgs),
    /// Tabulate exact photon-elimination couplings against closed forms.
    Oracle(CommonArgs),
}

type CommandFn = fn(&RunConfig, &std::path::Path) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Derive(a) => (a, cmd_derive),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Compare(a) => (a, cmd_compare),
        Command::Scan(a) => (a, cmd_scan),
        Command::Groundstate(a) => (a, cmd_groundstate),
        Command::Design(a) => (a, cmd_design),
        Command::Oracle(a) => (a, cmd_oracle),
    };
    match dispatch(args, run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(args: &CommonArgs, run: CommandFn) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let dir = output::resolve_dir(
        args.output_dir.as_deref(),
        cfg.output.as_ref().and_then(|o| o.directory.as_deref()),
    )?;
    run(&cfg, &dir)
}

#[derive(Serialize)]
struct DeriveArtifact {
    params: ReducedParams,
    shifted: ShiftedDetunings,
    model: EffectiveSpinModel,
    validity: ValidityReport,
    decoherence: Option<DecoherenceReport>,
}

fn cmd_derive(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let micro = cfg.micro_params();
    let model = effective_couplings(&params)?;
    let shifted = shifted_detunings(&params);
    let validity = validity_check(&params, micro.as_ref(), HIERARCHY_WARN_FLOOR);
    let decoherence = match (&micro, &cfg.decoherence) {
        (Some(m), Some(d)) => Some(decoherence_check(m, d.gamma_e, d.gamma_c)),
        _ => None,
    };

    println!("J1      = {:.4} MHz", model.j1 * 1e3);
    println!("J2      = {:.4} MHz", model.j2 * 1e3);
    println!("lambda1 = {:.4} MHz", model.lambda1 * 1e3);
    println!("lambda2 = {:.4} MHz", model.lambda2 * 1e3);
    println!("J2/J1   = {:.4}", model.j2 / model.j1);
    println!(
        "scale hierarchy: min margin {:.2} (floor {}) — {}",
        validity.min_margin,
        validity.hierarchy_factor,
        if validity.pass { "pass" } else { "FAIL" }
    );
    for check in validity.checks.iter().filter(|c| !c.pass) {
        println!(
            "  violated: {} ({:.4} vs {:.4}, margin {:.2})",
            check.name, check.left, check.right, check.margin
        );
    }
    if let Some(d) = &decoherence {
        println!(
            "cooperativity {:.3e}, coupling-to-decay {:.3e} — {}",
            d.cooperativity,
            d.coupling_to_dissipation,
            if d.pass { "pass" } else { "FAIL" }
        );
    }

    let artifact = DeriveArtifact {
        params,
        shifted,
        model,
        validity,
        decoherence,
    };
    let path = output::write_json(dir, "derive.json", &artifact)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let pattern = cfg.initial_pattern()?;
    let evolve = cfg.evolve_block()?;
    let pcfg = evolve.propagator_config();

    let series = match evolve.model {
        ModelKind::Full => {
            let basis =
                BasisDescriptor::new(cfg.system.n_sites, cfg.system.n_max_a, cfg.system.n_max_b)?;
            let spec = FullHamiltonianSpec {
                params,
                basis,
                periodic: cfg.system.periodic,
                include_cross_term: true,
                include_local_terms: true,
            };
            let h = FullHamiltonian::new(&spec)?;
            let psi0 = QuantumState::from_spin_pattern(basis, pattern)?;
            propagate(&h, &psi0, evolve.t_final, &pcfg)?
        }
        ModelKind::Effective => {
            let model = effective_couplings(&params)?.with_boundary(cfg.system.periodic);
            let basis = BasisDescriptor::spin_only(cfg.system.n_sites)?;
            let h = effective_hamiltonian(&model, &basis)?;
            let psi0 = QuantumState::from_spin_pattern(basis, pattern)?;
            propagate(&h, &psi0, evolve.t_final, &pcfg)?
        }
    };

    let drift = series
        .norms
        .iter()
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    let path = match cfg.output_format() {
        OutputFormat::Csv => {
            output::write_text(dir, "trajectory.csv", &output::trajectory_csv(&series))?
        }
        OutputFormat::Json => output::write_json(dir, "trajectory.json", &series)?,
    };
    println!(
        "wrote {} ({} samples over {} ns, norm drift {drift:.2e})",
        path.display(),
        series.len(),
        evolve.t_final
    );
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    max_dev_per_site: &'a [f64],
    max_dev: f64,
    rms_dev: f64,
    max_mean_photon: f64,
    validity: &'a ValidityReport,
    warnings: &'a [String],
}

fn cmd_compare(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let pattern = cfg.initial_pattern()?;
    let evolve = cfg.evolve_block()?;
    let pcfg = evolve.propagator_config();

    let mut spec = CompareSpec::new(params, pattern, evolve.t_final);
    spec.n_max_a = cfg.system.n_max_a;
    spec.n_max_b = cfg.system.n_max_b;
    spec.periodic = cfg.system.periodic;
    spec.full_config = pcfg.clone();
    spec.effective_config = pcfg;
    if let Some(target) = evolve.sample_target {
        spec.sample_target = target;
    }
    let result = compare_models(&spec)?;

    let (full_path, eff_path) = match cfg.output_format() {
        OutputFormat::Csv => (
            output::write_text(
                dir,
                "compare_full.csv",
                &output::trajectory_csv(&result.full),
            )?,
            output::write_text(
                dir,
                "compare_effective.csv",
                &output::trajectory_csv(&result.effective),
            )?,
        ),
        OutputFormat::Json => (
            output::write_json(dir, "compare_full.json", &result.full)?,
            output::write_json(dir, "compare_effective.json", &result.effective)?,
        ),
    };
    let summary = CompareSummary {
        max_dev_per_site: &result.max_dev_per_site,
        max_dev: result.max_dev,
        rms_dev: result.rms_dev,
        max_mean_photon: result.max_mean_photon,
        validity: &result.validity,
        warnings: &result.warnings,
    };
    let summary_path = output::write_json(dir, "compare_summary.json", &summary)?;

    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "max deviation {:.4} (rms {:.4}), peak mean photons {:.4}",
        result.max_dev, result.rms_dev, result.max_mean_photon
    );
    println!(
        "wrote {}, {}, {}",
        full_path.display(),
        eff_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn cmd_scan(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let grid = cfg.scan_grid()?;
    let rows = cancellation_scan(&params, &grid)?;
    let path = match cfg.output_format() {
        OutputFormat::Csv => output::write_text(dir, "scan.csv", &output::scan_csv(&rows))?,
        OutputFormat::Json => output::write_json(dir, "scan.json", &rows)?,
    };
    let best = rows
        .iter()
        .min_by(|a, b| a.j1.abs().partial_cmp(&b.j1.abs()).unwrap())
        .expect("grid validated non-empty");
    println!(
        "wrote {} ({} rows; |J1| minimal at ratio {})",
        path.display(),
        rows.len(),
        best.ratio
    );
    Ok(())
}

fn cmd_groundstate(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let model = effective_couplings(&params)?.with_boundary(cfg.system.periodic);
    let gs = ground_state(&model)?;
    println!(
        "E0 = {:.6e} rad/ns ({:.6e} per site), gap {:.3e}, degenerate: {}",
        gs.energy, gs.energy_per_site, gs.gap, gs.degenerate
    );
    let path = output::write_json(dir, "ground_state.json", &gs)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_design(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let seed = cfg.reduced_params()?;
    let design = cfg.design_block()?;
    let fit = fit_parameters(design, &seed)?;

    let p = &fit.params;
    println!("[parameters.reduced]");
    for (name, value) in [
        ("a1", p.a1),
        ("a2", p.a2),
        ("a3", p.a3),
        ("b1", p.b1),
        ("b2", p.b2),
        ("b3", p.b3),
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("delta3", p.delta3),
        ("stark_a", p.stark_a),
        ("stark_b", p.stark_b),
        ("hop_a", p.hop_a),
        ("hop_b", p.hop_b),
    ] {
        println!("{name} = {value}");
    }
    for report in &fit.per_target {
        println!(
            "target {}: achieved {:.6e} vs {:.6e} (error {:.2e}) — {}",
            report.label,
            report.achieved,
            report.target,
            report.error,
            if report.met { "met" } else { "missed" }
        );
    }
    println!(
        "residual {:.3e} after {} evaluations",
        fit.residual, fit.evaluations
    );
    let path = output::write_json(dir, "design.json", &fit)?;
    println!("wrote {}", path.display());

    if !fit.targets_met {
        return Err(CliError::Core(CoreError::Infeasible {
            best_residual: fit.residual,
            tolerance: design.tolerance,
        }));
    }
    Ok(())
}

fn cmd_oracle(cfg: &RunConfig, dir: &std::path::Path) -> Result<(), CliError> {
    let params = cfg.reduced_params()?;
    let report = expansion_error_report(&params)?;
    let worst = report
        .rows
        .iter()
        .flat_map(|r| [r.rel_err_pm, r.rel_err_zz])
        .flatten()
        .fold(0.0, f64::max);
    let path = match cfg.output_format() {
        OutputFormat::Csv => {
            output::write_text(dir, "oracle.csv", &output::expansion_csv(&report))?
        }
        OutputFormat::Json => output::write_json(dir, "oracle.json", &report)?,
    };
    println!(
        "wrote {} ({} separations, worst closed-form error {worst:.2e}, field {:.3e})",
        path.display(),
        report.rows.len(),
        report.field
    );
    Ok(())
}
