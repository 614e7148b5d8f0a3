//! Strict TOML run-configuration schema.
//!
//! Every block rejects unknown keys so a typo fails loudly instead of
//! silently running with a default. All frequencies are angular rates in
//! rad/ns and all times are ns; an optional top-level `units` key must
//! spell that out (`"rad_per_ns"`) or the file is rejected, since the
//! published operating points mix GHz and MHz when quoted in prose.

use std::path::{Path, PathBuf};

use ccsim_core::evolve::{Method, PropagatorConfig};
use ccsim_core::params::{reduce_params, MicroParams, ReducedParams};
use ccsim_core::DesignTarget;
use serde::Deserialize;

use crate::CliError;

/// Top-level run configuration; block presence requirements depend on the
/// subcommand.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Frequency/time unit sanity marker; only `"rad_per_ns"` is accepted.
    pub units: Option<String>,
    pub system: SystemBlock,
    pub parameters: ParametersBlock,
    pub initial: Option<InitialBlock>,
    pub evolve: Option<EvolveBlock>,
    pub output: Option<OutputBlock>,
    pub scan: Option<ScanBlock>,
    pub design: Option<DesignTarget>,
    pub decoherence: Option<DecoherenceBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub n_sites: usize,
    #[serde(default = "default_true")]
    pub periodic: bool,
    /// Photon-number cutoff of the first cavity family.
    #[serde(default = "default_cutoff")]
    pub n_max_a: usize,
    /// Photon-number cutoff of the second cavity family.
    #[serde(default = "default_cutoff")]
    pub n_max_b: usize,
}

/// Exactly one of the two parameter representations must be present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersBlock {
    pub reduced: Option<ReducedBlock>,
    pub micro: Option<MicroBlock>,
}

/// Two-photon couplings and detunings (site count comes from `[system]`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedBlock {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub stark_a: f64,
    pub stark_b: f64,
    pub hop_a: f64,
    pub hop_b: f64,
}

/// Raw drive amplitudes, cavity couplings and one-photon detunings.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroBlock {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub delta_c31: f64,
    pub delta_c42: f64,
    pub delta_l31: f64,
    pub delta_l32: f64,
    pub delta_l41: f64,
    pub delta_l42: f64,
    pub hop_a: f64,
    pub hop_b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// Spin pattern over {1, 2}, one character per site; photons start
    /// in vacuum.
    pub pattern: String,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Midpoint,
    Rk4,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Full,
    Effective,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    /// Propagation horizon in ns.
    pub t_final: f64,
    /// Step override in ns; omitted means automatic resolution.
    pub step: Option<f64>,
    #[serde(default)]
    pub method: MethodKind,
    /// Which model `simulate` propagates.
    #[serde(default)]
    pub model: ModelKind,
    pub sample_every: Option<usize>,
    pub max_norm_drift: Option<f64>,
    pub phase_resolution_factor: Option<f64>,
    /// Approximate sample count for `compare` trajectories.
    pub sample_target: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Branch-amplitude ratio grid for `scan`: either an explicit list or an
/// inclusive linear range.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub ratios: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

/// Dissipation rates (rad/ns) for the decoherence report; meaningful only
/// together with microscopic parameters.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceBlock {
    /// Emitter upper-level decay rate.
    pub gamma_e: f64,
    /// Cavity field decay rate.
    pub gamma_c: f64,
}

fn default_true() -> bool {
    true
}

fn default_cutoff() -> usize {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(units) = &self.units {
            if units != "rad_per_ns" {
                return Err(CliError::Config(format!(
                    "units must be \"rad_per_ns\" (angular rates), got \"{units}\""
                )));
            }
        }
        match (&self.parameters.reduced, &self.parameters.micro) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either [parameters.reduced] or [parameters.micro], not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "one of [parameters.reduced] or [parameters.micro] is required".into(),
                ))
            }
            _ => {}
        }
        if self.system.n_sites == 0 {
            return Err(CliError::Config("system.n_sites must be positive".into()));
        }
        if let Some(initial) = &self.initial {
            if initial.pattern.chars().count() != self.system.n_sites {
                return Err(CliError::Config(format!(
                    "initial.pattern has {} characters for {} sites",
                    initial.pattern.chars().count(),
                    self.system.n_sites
                )));
            }
        }
        Ok(())
    }

    /// Microscopic parameters, when that representation was given.
    pub fn micro_params(&self) -> Option<MicroParams> {
        self.parameters.micro.as_ref().map(|m| MicroParams {
            n_sites: self.system.n_sites,
            omega1: m.omega1,
            omega2: m.omega2,
            omega3: m.omega3,
            omega4: m.omega4,
            g_a: m.g_a,
            g_b: m.g_b,
            delta_c31: m.delta_c31,
            delta_c42: m.delta_c42,
            delta_l31: m.delta_l31,
            delta_l32: m.delta_l32,
            delta_l41: m.delta_l41,
            delta_l42: m.delta_l42,
            hop_a: m.hop_a,
            hop_b: m.hop_b,
        })
    }

    /// The reduced two-photon parameter set, derived from the microscopic
    /// block when necessary.
    pub fn reduced_params(&self) -> Result<ReducedParams, CliError> {
        if let Some(r) = &self.parameters.reduced {
            return Ok(ReducedParams {
                n_sites: self.system.n_sites,
                a1: r.a1,
                a2: r.a2,
                a3: r.a3,
                b1: r.b1,
                b2: r.b2,
                b3: r.b3,
                delta1: r.delta1,
                delta2: r.delta2,
                delta3: r.delta3,
                stark_a: r.stark_a,
                stark_b: r.stark_b,
                hop_a: r.hop_a,
                hop_b: r.hop_b,
            });
        }
        let micro = self.micro_params().expect("validated: one block present");
        Ok(reduce_params(&micro)?)
    }

    /// Blocks `simulate` and `compare` cannot run without.
    pub fn initial_pattern(&self) -> Result<&str, CliError> {
        self.initial
            .as_ref()
            .map(|b| b.pattern.as_str())
            .ok_or_else(|| CliError::Config("an [initial] block is required".into()))
    }

    pub fn evolve_block(&self) -> Result<&EvolveBlock, CliError> {
        self.evolve
            .as_ref()
            .ok_or_else(|| CliError::Config("an [evolve] block is required".into()))
    }

    pub fn output_format(&self) -> OutputFormat {
        self.output.as_ref().map(|o| o.format).unwrap_or_default()
    }

    /// Ratio grid for `scan`, from either form of the block.
    pub fn scan_grid(&self) -> Result<Vec<f64>, CliError> {
        let block = self
            .scan
            .as_ref()
            .ok_or_else(|| CliError::Config("a [scan] block is required".into()))?;
        match (&block.ratios, block.start, block.stop, block.count) {
            (Some(r), None, None, None) => {
                if r.is_empty() {
                    Err(CliError::Config("scan.ratios must not be empty".into()))
                } else {
                    Ok(r.clone())
                }
            }
            (None, Some(start), Some(stop), Some(count)) => {
                if count == 0 {
                    return Err(CliError::Config("scan.count must be positive".into()));
                }
                if count == 1 {
                    return Ok(vec![start]);
                }
                let step = (stop - start) / (count - 1) as f64;
                Ok((0..count).map(|i| start + step * i as f64).collect())
            }
            _ => Err(CliError::Config(
                "give scan.ratios or all of scan.{start,stop,count}".into(),
            )),
        }
    }

    pub fn design_block(&self) -> Result<&DesignTarget, CliError> {
        self.design
            .as_ref()
            .ok_or_else(|| CliError::Config("a [design] block is required".into()))
    }
}

impl EvolveBlock {
    /// Propagator settings with this block's overrides applied.
    pub fn propagator_config(&self) -> PropagatorConfig {
        let mut cfg = PropagatorConfig {
            method: match self.method {
                MethodKind::Midpoint => Method::PiecewiseExponentialMidpoint,
                MethodKind::Rk4 => Method::ExplicitRk4,
            },
            step: self.step,
            ..PropagatorConfig::default()
        };
        if let Some(sample_every) = self.sample_every {
            cfg.sample_every = sample_every;
        }
        if let Some(drift) = self.max_norm_drift {
            cfg.max_norm_drift = drift;
        }
        if let Some(factor) = self.phase_resolution_factor {
            cfg.phase_resolution_factor = factor;
        }
        cfg
    }
}
