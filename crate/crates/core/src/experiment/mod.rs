//! Declarative experiments built from configuration files or presets,
//! with CSV output and plot-data extraction.

mod config;
mod plotdata;
mod presets;
mod runner;

use std::collections::BTreeSet;
use std::path::PathBuf;

pub use config::{parse_config, print_config};
pub use plotdata::emit_plot_data;
pub use presets::{preset, preset_names, PresetInfo, PRESETS};
pub use runner::{run_experiment, simulate, write_outputs, MomentComparison, RunResult};

use crate::circuit::{CircuitSpec, CouplingForm, InductanceMode};
use crate::entanglement::EofFormula;
use crate::error::{Error, Result};
use crate::observables::LoopRule;

/// Post-processing steps a run can perform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    FormFactor,
    PairEof,
    Negativity,
    Monogamy,
    MomentCheck,
}

impl Analysis {
    pub const ALL: [Analysis; 5] =
        [Analysis::FormFactor, Analysis::PairEof, Analysis::Negativity, Analysis::Monogamy, Analysis::MomentCheck];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::FormFactor => "form_factor",
            Analysis::PairEof => "pair_eof",
            Analysis::Negativity => "negativity",
            Analysis::Monogamy => "monogamy",
            Analysis::MomentCheck => "moment_check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Analysis::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

/// Modeling choices where more than one reading is defensible. Every run
/// records the modes it used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modes {
    pub coupling_sign: CouplingForm,
    pub eof_formula: EofFormula,
    pub inductance_matrix: InductanceMode,
    pub loop_rule: LoopRule,
}

impl Default for Modes {
    fn default() -> Self {
        Modes {
            coupling_sign: CouplingForm::Phase,
            eof_formula: EofFormula::Wootters,
            inductance_matrix: InductanceMode::Bare,
            loop_rule: LoopRule::FullPeriod,
        }
    }
}

impl Modes {
    pub const KEYS: [&'static str; 4] = ["coupling_sign", "eof_formula", "inductance_matrix", "loop_rule"];

    /// Sets one mode from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::param(key.to_string(), format!("unknown value `{value}`"));
        match key {
            "coupling_sign" => {
                self.coupling_sign = match value {
                    "phase" => CouplingForm::Phase,
                    "charge" => CouplingForm::Charge,
                    _ => return Err(bad()),
                }
            }
            "eof_formula" => {
                self.eof_formula = match value {
                    "wootters" => EofFormula::Wootters,
                    "literal" => EofFormula::Literal,
                    _ => return Err(bad()),
                }
            }
            "inductance_matrix" => {
                self.inductance_matrix = match value {
                    "bare" => InductanceMode::Bare,
                    "loaded" => InductanceMode::Loaded,
                    _ => return Err(bad()),
                }
            }
            "loop_rule" => {
                self.loop_rule = match value {
                    "full_period" => LoopRule::FullPeriod,
                    "single_lobe" => LoopRule::SingleLobe,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(Error::param(key.to_string(), "unknown mode")),
        }
        Ok(())
    }

    pub fn entries(&self) -> [(&'static str, &'static str); 4] {
        [
            ("coupling_sign", self.coupling_sign.as_str()),
            ("eof_formula", self.eof_formula.as_str()),
            ("inductance_matrix", self.inductance_matrix.as_str()),
            ("loop_rule", self.loop_rule.as_str()),
        ]
    }
}

/// A complete, validated experiment description. Times are in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub circuit: CircuitSpec,
    /// Fock levels kept per site.
    pub truncation: usize,
    pub t_end: f64,
    pub dt: f64,
    pub store_every: usize,
    pub monitor_positivity: bool,
    pub analyses: BTreeSet<Analysis>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub modes: Modes,
}

impl ExperimentConfig {
    /// Every problem with the configuration, as human-readable lines.
    pub fn issues(&self) -> Vec<String> {
        let mut out: Vec<String> = self.circuit.issues().into_iter().map(|e| format!("circuit: {e}")).collect();
        out.extend(self.run_issues());
        out
    }

    /// Problems outside the circuit description.
    fn run_issues(&self) -> Vec<String> {
        let mut out = self.timing_issues();
        out.extend(self.setup_issues());
        out
    }

    fn timing_issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push("simulation.dt: must be positive".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            out.push("simulation.t_end: must be positive".into());
        }
        out
    }

    fn setup_issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.truncation < 2 {
            out.push(format!("simulation.truncation: must be at least 2, got {}", self.truncation));
        }
        if self.store_every == 0 {
            out.push("simulation.store_every: must be at least 1".into());
        }
        let n = self.circuit.n_memristors();
        for a in [Analysis::PairEof, Analysis::Monogamy] {
            if self.analyses.contains(&a) && self.truncation != 2 {
                out.push(format!("analysis.enabled: `{}` needs truncation = 2 (qubit sites)", a.as_str()));
            }
        }
        if self.analyses.contains(&Analysis::Monogamy) && n != 3 {
            out.push("analysis.enabled: `monogamy` needs three memristors".into());
        }
        out
    }

    /// Changes the truncation and resets `monitor_positivity` to its
    /// default for the new Hilbert-space size.
    pub fn set_truncation(&mut self, d: usize) {
        self.truncation = d;
        let dim = d.checked_pow(self.circuit.n_memristors() as u32).unwrap_or(usize::MAX);
        self.monitor_positivity = dim <= config::POSITIVITY_MONITOR_MAX_DIM;
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}
