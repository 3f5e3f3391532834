//! Executes an [`ExperimentConfig`] and writes its CSV outputs.
//!
//! Output files (all numbers in `{:.12e}`, times in seconds):
//!
//! | file | columns |
//! |------|---------|
//! | `manifest.toml` | run settings, modes, derived energies, diagnostics |
//! | `trajectory.csv` | `t`, then per site `n_j, phi_j, gamma_j, V_j, I_j` |
//! | `form_factor.csv` | `site, loop_index, t_start, t_end, area, perimeter, form_factor` |
//! | `pair_eof.csv` | `t, measure, value, estimated` with measures `C_jk`, `E_jk` |
//! | `negativity.csv` | `t, measure, value, estimated` with measures `N_j-kl`, `N3` |
//! | `monogamy.csv` | `t, measure, value, estimated` with measures `E_2-13`, `E_2-1`, `E_2-3`, `M2` |
//! | `moment_check.csv` | `t, site, n_engine, n_oracle, phi_engine, phi_oracle, rel_err` |
//!
//! Sites are numbered from 1 in every file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Analysis, ExperimentConfig};
use crate::circuit::{build_hamiltonian_with, derive_energies, DerivedEnergies};
use crate::entanglement::{correlation_report, CorrelationOptions, CorrelationReport};
use crate::error::{Error, Result};
use crate::lindblad::{integrate, make_initial_state, InitialState, IntegrationOptions, MasterEquation, Trajectory};
use crate::moments::{integrate_moments, MomentState};
use crate::observables::{segment_loops, LoopSeries};

/// Engine versus moment-equation comparison on the full time grid.
#[derive(Clone, Debug)]
pub struct MomentComparison {
    pub oracle: Vec<MomentState>,
    /// Per site and step: max of the ⟨n̂⟩ and ⟨φ̂⟩ deviations, each divided
    /// by the sup norm of the corresponding oracle series.
    pub rel_err: Vec<Vec<f64>>,
    pub max_rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub energies: DerivedEnergies,
    pub trajectory: Trajectory,
    /// One series per site when `form_factor` is enabled.
    pub loops: Vec<LoopSeries>,
    /// One report per stored snapshot when any correlation analysis is enabled.
    pub correlations: Vec<CorrelationReport>,
    pub moments: Option<MomentComparison>,
}

fn snapshot_seed(seed: u64, step: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (step as u64)
}

/// Integrates the configuration and evaluates every enabled analysis.
pub fn simulate(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let modes = &config.modes;
    let spec = &config.circuit;
    let energies = derive_energies(spec, modes.inductance_matrix)?;
    let h = build_hamiltonian_with(&energies, config.truncation, modes.coupling_sign)?;
    let eq = MasterEquation::new(&h, &energies, &spec.drives)?;
    let init = InitialState { theta: spec.theta.clone(), varphi: spec.varphi.clone() };
    let rho0 = make_initial_state(&init, config.truncation)?;
    let opts = IntegrationOptions {
        t_end: config.t_end,
        dt: config.dt,
        store_every: config.store_every,
        monitor_positivity: config.monitor_positivity,
    };
    let trajectory = integrate(&rho0, &eq, &opts)?;

    let loops = if config.analyses.contains(&Analysis::FormFactor) {
        (0..spec.n_memristors())
            .map(|j| {
                segment_loops(&trajectory.voltage[j], &trajectory.current[j], &trajectory.times, modes.loop_rule)
                    .map(|s| s.for_site(j))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let wants_correlations =
        [Analysis::PairEof, Analysis::Negativity, Analysis::Monogamy].iter().any(|a| config.analyses.contains(a));
    let correlations = if wants_correlations {
        let base = CorrelationOptions {
            eof_formula: modes.eof_formula,
            with_monogamy: config.analyses.contains(&Analysis::Monogamy),
            ..CorrelationOptions::default()
        };
        trajectory
            .snapshots
            .par_iter()
            .map(|snap| {
                let opts = CorrelationOptions { seed: snapshot_seed(config.seed, snap.step), ..base.clone() };
                correlation_report(&snap.state, snap.t, &opts)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let moments = if config.analyses.contains(&Analysis::MomentCheck) {
        Some(compare_moments(&trajectory, &init, &energies, config)?)
    } else {
        None
    };

    Ok(RunResult { config: config.clone(), energies, trajectory, loops, correlations, moments })
}

fn compare_moments(
    trajectory: &Trajectory,
    init: &InitialState,
    energies: &DerivedEnergies,
    config: &ExperimentConfig,
) -> Result<MomentComparison> {
    let start = MomentState::from_initial(init, energies);
    let oracle = integrate_moments(&start, config.t_end, config.dt, energies, &config.circuit.drives)?;
    if oracle.len() != trajectory.times.len() {
        return Err(Error::DimensionMismatch { expected: trajectory.times.len(), found: oracle.len() });
    }
    let n_sites = energies.n_sites();
    let sup = |f: &dyn Fn(&MomentState) -> f64| oracle.iter().map(|m| f(m).abs()).fold(0.0, f64::max);
    let mut rel_err = vec![Vec::with_capacity(oracle.len()); n_sites];
    let mut max_rel_err = 0.0_f64;
    for (j, errs) in rel_err.iter_mut().enumerate() {
        let n_scale = sup(&|m| m.n[j]);
        let phi_scale = sup(&|m| m.phi[j]);
        let rel = |diff: f64, scale: f64| if scale > 0.0 { diff / scale } else { diff };
        for (k, m) in oracle.iter().enumerate() {
            let e_n = rel((trajectory.expect_n[j][k] - m.n[j]).abs(), n_scale);
            let e_phi = rel((trajectory.expect_phi[j][k] - m.phi[j]).abs(), phi_scale);
            let e = e_n.max(e_phi);
            max_rel_err = max_rel_err.max(e);
            errs.push(e);
        }
    }
    Ok(MomentComparison { oracle, rel_err, max_rel_err })
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(e).context(format!("writing {}", path.display())))?;
    written.push(path);
    Ok(())
}

fn manifest(result: &RunResult) -> String {
    let c = &result.config;
    let e = &result.energies;
    let t = &result.trajectory;
    let list = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    let _ = writeln!(s, "name = {:?}", c.name);
    let _ = writeln!(s, "software = \"trimem {}\"", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "\n[run]");
    let _ = writeln!(s, "topology = {:?}", c.circuit.topology.as_str());
    let _ = writeln!(s, "truncation = {}", c.truncation);
    let _ = writeln!(s, "dt = {}", num(c.dt));
    let _ = writeln!(s, "t_end = {}", num(c.t_end));
    let _ = writeln!(s, "steps = {}", t.times.len() - 1);
    let _ = writeln!(s, "store_every = {}", c.store_every);
    let _ = writeln!(s, "seed = {}", c.seed);
    let analyses: Vec<String> = c.analyses.iter().map(|a| format!("{:?}", a.as_str())).collect();
    let _ = writeln!(s, "analyses = [{}]", analyses.join(", "));
    let drives: Vec<String> = c.circuit.drives.iter().map(|d| format!("{:?}", d.waveform.as_str())).collect();
    let _ = writeln!(s, "drive_waveforms = [{}]", drives.join(", "));
    let _ = writeln!(s, "\n[modes]");
    for (k, v) in c.modes.entries() {
        let _ = writeln!(s, "{k} = {v:?}");
    }
    let _ = writeln!(s, "\n[derived]  # angular-frequency units, rad/s");
    let _ = writeln!(s, "e_c = [{}]", list(&e.e_c));
    let _ = writeln!(s, "e_l = [{}]", list(&e.e_l));
    let _ = writeln!(s, "omega = [{}]", list(&e.omega));
    let _ = writeln!(s, "eta = [{}]", list(&e.eta));
    let _ = writeln!(s, "gamma_scale = [{}]", list(&e.gamma_scale));
    let rows: Vec<String> = e.g_couple.iter().map(|r| format!("[{}]", list(r))).collect();
    let _ = writeln!(s, "g_couple = [{}]", rows.join(", "));
    let _ = writeln!(s, "\n[diagnostics]");
    let _ = writeln!(s, "max_trace_drift = {}", num(t.max_trace_drift));
    if t.min_eigenvalue.is_finite() {
        let _ = writeln!(s, "min_eigenvalue = {}", num(t.min_eigenvalue));
    }
    let _ = writeln!(s, "min_purity = {}", num(t.min_purity));
    let _ = writeln!(s, "max_purity = {}", num(t.max_purity));
    if let Some(m) = &result.moments {
        let _ = writeln!(s, "moment_max_rel_err = {}", num(m.max_rel_err));
    }
    s
}

fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.n_sites();
    let mut s = String::from("t");
    for j in 1..=n {
        let _ = write!(s, ",n_{j},phi_{j},gamma_{j},V_{j},I_{j}");
    }
    s.push('\n');
    for (k, time) in t.times.iter().enumerate() {
        s.push_str(&num(*time));
        for j in 0..n {
            for series in [&t.expect_n, &t.expect_phi, &t.gamma, &t.voltage, &t.current] {
                s.push(',');
                s.push_str(&num(series[j][k]));
            }
        }
        s.push('\n');
    }
    s
}

fn form_factor_csv(loops: &[LoopSeries]) -> String {
    let mut s = String::from("site,loop_index,t_start,t_end,area,perimeter,form_factor\n");
    for series in loops {
        for (i, l) in series.loops.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                series.site + 1,
                i,
                num(l.t_start),
                num(l.t_end),
                num(l.area),
                num(l.perimeter),
                num(l.form_factor)
            );
        }
    }
    s
}

const LONG_HEADER: &str = "t,measure,value,estimated\n";

fn long_row(s: &mut String, t: f64, measure: &str, value: f64, estimated: bool) {
    let _ = writeln!(s, "{},{measure},{},{}", num(t), num(value), u8::from(estimated));
}

fn pair_eof_csv(reports: &[CorrelationReport]) -> String {
    let mut s = String::from(LONG_HEADER);
    for r in reports {
        for (i, &(j, k)) in r.pairs.iter().enumerate() {
            long_row(&mut s, r.t, &format!("C_{}{}", j + 1, k + 1), r.concurrence[i], false);
            long_row(&mut s, r.t, &format!("E_{}{}", j + 1, k + 1), r.eof[i], false);
        }
    }
    s
}

fn negativity_csv(reports: &[CorrelationReport]) -> String {
    let mut s = String::from(LONG_HEADER);
    for r in reports {
        for (b, v) in &r.negativity {
            long_row(&mut s, r.t, &format!("N_{}", b.label()), *v, false);
        }
        if let Some(n3) = r.tripartite_negativity {
            long_row(&mut s, r.t, "N3", n3, false);
        }
    }
    s
}

fn monogamy_csv(reports: &[CorrelationReport]) -> String {
    let mut s = String::from(LONG_HEADER);
    for r in reports {
        let (Some(joint), Some(m2)) = (r.eof_2_vs_13, r.monogamy_m2) else { continue };
        long_row(&mut s, r.t, "E_2-13", joint.value, joint.estimated);
        long_row(&mut s, r.t, "E_2-1", r.eof[0], false);
        long_row(&mut s, r.t, "E_2-3", r.eof[2], false);
        long_row(&mut s, r.t, "M2", m2, joint.estimated);
    }
    s
}

fn moment_csv(t: &Trajectory, m: &MomentComparison, store_every: usize) -> String {
    let mut s = String::from("t,site,n_engine,n_oracle,phi_engine,phi_oracle,rel_err\n");
    let last = t.times.len() - 1;
    for (k, time) in t.times.iter().enumerate() {
        if k % store_every != 0 && k != last {
            continue;
        }
        for j in 0..t.n_sites() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                num(*time),
                j + 1,
                num(t.expect_n[j][k]),
                num(m.oracle[k].n[j]),
                num(t.expect_phi[j][k]),
                num(m.oracle[k].phi[j]),
                num(m.rel_err[j][k])
            );
        }
    }
    s
}

/// Writes the manifest, the trajectory, and one CSV per enabled analysis.
pub fn write_outputs(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(e).context(format!("creating {}", dir.display())))?;
    let c = &result.config;
    let mut written = Vec::new();
    write_file(dir, "manifest.toml", &manifest(result), &mut written)?;
    write_file(dir, "trajectory.csv", &trajectory_csv(&result.trajectory), &mut written)?;
    for a in &c.analyses {
        let (name, body) = match a {
            Analysis::FormFactor => ("form_factor.csv", form_factor_csv(&result.loops)),
            Analysis::PairEof => ("pair_eof.csv", pair_eof_csv(&result.correlations)),
            Analysis::Negativity => ("negativity.csv", negativity_csv(&result.correlations)),
            Analysis::Monogamy => ("monogamy.csv", monogamy_csv(&result.correlations)),
            Analysis::MomentCheck => {
                let m = result.moments.as_ref().expect("moment_check runs whenever it is enabled");
                ("moment_check.csv", moment_csv(&result.trajectory, m, c.store_every))
            }
        };
        write_file(dir, name, &body, &mut written)?;
    }
    Ok(written)
}

/// [`simulate`] followed by [`write_outputs`] into `dir`.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<RunResult> {
    let context = || format!("experiment `{}`", config.name);
    let result = simulate(config).map_err(|e| e.context(context()))?;
    write_outputs(&result, dir).map_err(|e| e.context(context()))?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::preset;

    fn short(mut c: ExperimentConfig, periods: f64) -> ExperimentConfig {
        c.t_end = periods * c.t_end / 30.0;
        c
    }

    #[test]
    fn outputs_have_expected_headers() {
        let mut c = short(preset("fig6").unwrap().remove(0), 2.0);
        c.analyses.insert(Analysis::Negativity);
        c.analyses.insert(Analysis::PairEof);
        c.analyses.insert(Analysis::MomentCheck);
        c.store_every = 50;
        let dir = tempfile::tempdir().unwrap();
        let written = run_experiment(&c, dir.path()).unwrap();
        let read = |n: &str| fs::read_to_string(dir.path().join(n)).unwrap();
        assert!(read("trajectory.csv").starts_with("t,n_1,phi_1,gamma_1,V_1,I_1,n_2"));
        assert!(read("form_factor.csv").starts_with("site,loop_index,t_start"));
        assert!(read("pair_eof.csv").contains(",C_12,"));
        assert!(read("negativity.csv").contains(",N3,"));
        assert!(read("negativity.csv").contains(",N_1-23,"));
        assert!(read("monogamy.csv").contains(",M2,"));
        assert!(read("moment_check.csv").starts_with("t,site,n_engine"));
        assert!(read("manifest.toml").contains("coupling_sign = \"phase\""));
        let m = written.moments.unwrap();
        assert!(m.max_rel_err.is_finite());
    }

    #[test]
    fn symmetric_sites_give_identical_form_factors() {
        let c = short(preset("fig2a").unwrap().remove(0), 6.0);
        let r = simulate(&c).unwrap();
        let f: Vec<Vec<f64>> = r.loops.iter().map(|l| l.form_factors()).collect();
        assert!(!f[0].is_empty());
        for j in 1..3 {
            assert_eq!(f[j].len(), f[0].len());
            for (a, b) in f[j].iter().zip(&f[0]) {
                assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
    }
}
