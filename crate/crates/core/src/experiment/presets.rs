//! Built-in parameter sets for the reference three-memristor networks.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::PathBuf;

use super::config::{default_timing, DEFAULT_PERIODS, DEFAULT_STORE_EVERY, POSITIVITY_MONITOR_MAX_DIM};
use super::{Analysis, ExperimentConfig, Modes};
use crate::circuit::{CircuitSpec, DriveSpec, Topology};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo { name: "fig2a", description: "triangular, identical memristors" },
    PresetInfo { name: "fig2b", description: "triangular, memristor 2 differs" },
    PresetInfo { name: "fig2c", description: "triangular, all memristors differ" },
    PresetInfo { name: "fig2d", description: "linear, identical memristors" },
    PresetInfo { name: "fig2e", description: "linear, memristor 2 differs" },
    PresetInfo { name: "fig2f", description: "linear, all memristors differ" },
    PresetInfo { name: "uncoupled", description: "three identical memristors without couplers" },
    PresetInfo { name: "fig4", description: "pair entanglement of formation for fig2a-fig2f" },
    PresetInfo { name: "fig5", description: "negativities for fig2a-fig2f" },
    PresetInfo { name: "fig6", description: "monogamy residual for fig2a-fig2f" },
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// (C_Σ in fF, couplers (j, k, L in μH), topology); L_j = 0.2 μH.
type Panel = ([f64; 3], Vec<(usize, usize, f64)>, Topology);

fn panel(letter: char) -> Option<Panel> {
    let (caps, l12, l23, l13) = match letter {
        'a' | 'd' => ([3.6, 3.6, 3.6], 2.0, 2.0, 2.0),
        'b' | 'e' => ([3.6, 2.6, 3.6], 1.69, 1.69, 2.0),
        'c' | 'f' => ([3.6, 2.6, 3.0], 1.69, 1.55, 1.83),
        _ => return None,
    };
    let topology = if matches!(letter, 'a' | 'b' | 'c') { Topology::Triangular } else { Topology::Linear };
    let mut couplers = vec![(0, 1, l12), (1, 2, l23)];
    if topology == Topology::Triangular {
        couplers.push((0, 2, l13));
    }
    Some((caps, couplers, topology))
}

/// Decimal literal scaled by a power of ten without binary rounding drift.
fn si(value: f64, exponent: i32) -> f64 {
    format!("{value}e{exponent}").parse().expect("well-formed float literal")
}

fn circuit(caps_ff: [f64; 3], couplers_uh: &[(usize, usize, f64)], topology: Topology) -> CircuitSpec {
    let mut couplers = BTreeMap::new();
    for &(j, k, l) in couplers_uh {
        couplers.insert((j, k), si(l, -6));
    }
    CircuitSpec {
        cap_sigma: caps_ff.iter().map(|&c| si(c, -15)).collect(),
        l_self: vec![si(0.2, -6); 3],
        couplers,
        drives: vec![DriveSpec::default(); 3],
        theta: vec![FRAC_PI_4; 3],
        varphi: vec![FRAC_PI_2; 3],
        topology,
    }
}

fn config(name: String, circuit: CircuitSpec, analyses: &[Analysis]) -> Result<ExperimentConfig> {
    let modes = Modes::default();
    let (period, dt) = default_timing(&circuit, &modes)?;
    let truncation = 2;
    Ok(ExperimentConfig {
        name,
        circuit,
        truncation,
        t_end: DEFAULT_PERIODS * period,
        dt,
        store_every: DEFAULT_STORE_EVERY,
        monitor_positivity: truncation.pow(3) <= POSITIVITY_MONITOR_MAX_DIM,
        analyses: analyses.iter().copied().collect::<BTreeSet<_>>(),
        seed: 0,
        output_dir: PathBuf::from("out"),
        modes,
    })
}

/// The configurations behind a preset name. Figure groups expand to six.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let single = |letter: char, label: String, analyses: &[Analysis]| -> Result<ExperimentConfig> {
        let (caps, couplers, topology) = panel(letter).expect("letters a-f are valid panels");
        config(label, circuit(caps, &couplers, topology), analyses)
    };
    let letters = ['a', 'b', 'c', 'd', 'e', 'f'];
    match name {
        "uncoupled" => {
            let spec = circuit([3.6; 3], &[], Topology::Linear);
            Ok(vec![config(name.into(), spec, &[Analysis::FormFactor])?])
        }
        "fig4" | "fig5" | "fig6" => {
            let analyses: &[Analysis] = match name {
                "fig4" => &[Analysis::FormFactor, Analysis::PairEof],
                "fig5" => &[Analysis::Negativity],
                _ => &[Analysis::FormFactor, Analysis::Monogamy],
            };
            letters.iter().map(|&l| single(l, format!("{name}{l}"), analyses)).collect()
        }
        _ => {
            let letter = name.strip_prefix("fig2").and_then(|s| {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if letters.contains(&c) => Some(c),
                    _ => None,
                }
            });
            match letter {
                Some(l) => Ok(vec![single(l, name.into(), &[Analysis::FormFactor])?]),
                None => {
                    Err(Error::Selection(format!("unknown preset `{name}`; available: {}", preset_names().join(", "))))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{parse_config, print_config};

    #[test]
    fn every_listed_preset_builds_and_round_trips() {
        for info in PRESETS {
            let configs = preset(info.name).unwrap();
            assert!(!configs.is_empty());
            for c in configs {
                c.validate().unwrap();
                assert_eq!(parse_config(&print_config(&c)).unwrap(), c, "{}", c.name);
            }
        }
    }

    #[test]
    fn groups_expand_to_six_panels() {
        let names: Vec<String> = preset("fig5").unwrap().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["fig5a", "fig5b", "fig5c", "fig5d", "fig5e", "fig5f"]);
    }

    #[test]
    fn unknown_preset_lists_alternatives() {
        let err = preset("fig7").unwrap_err().to_string();
        assert!(err.contains("fig2a") && err.contains("uncoupled"));
        assert!(preset("fig2g").is_err());
        assert!(preset("fig2ab").is_err());
    }
}
