//! Experiment file grammar (TOML).
//!
//! ```toml
//! name = "fig2a"
//!
//! [circuit]
//! topology = "triangular"        # or "linear"
//! memristors = 3                 # optional; defaults to the number of [memristor.N] tables
//!
//! [memristor.1]                  # one table per site, counted from 1
//! cap_sigma = "3.6 fF"           # F, nF, pF, fF; bare numbers are SI
//! l_self = "0.2 uH"              # H, mH, uH/μH, nH, pH
//! theta = 0.7853981633974483     # initial state, radians (default π/4)
//! varphi = 1.5707963267948966    # radians (default π/2)
//! drive = "linear_ramp"          # linear_ramp | sinusoid | constant
//! drive_frequency = "5.9 GHz"    # optional: Hz, kHz, MHz, GHz (cycles) or rad/s; default ω_j
//! amplitude = 0.0                # radians, sinusoid only
//! phase_offset = 0.0             # radians
//!
//! [couplers]
//! "1-2" = "2 uH"
//!
//! [simulation]
//! truncation = 2                 # Fock levels per site
//! periods = 30                   # horizon in periods of the slowest drive, or t_end = "12 ns"
//! dt = "0.8 ps"                  # default (2π/ω_max)/200
//! store_every = 10               # keep every n-th density matrix for the analyses
//! monitor_positivity = true      # default: on when the Hilbert space has at most 64 states
//!
//! [analysis]
//! enabled = ["form_factor", "pair_eof", "negativity", "monogamy", "moment_check"]
//! seed = 0                       # u64; quote values above 2^63 - 1
//! output_dir = "out"
//!
//! [modes]
//! coupling_sign = "phase"        # phase | charge
//! eof_formula = "wootters"       # wootters | literal
//! inductance_matrix = "bare"     # bare | loaded
//! loop_rule = "full_period"      # full_period | single_lobe
//! ```
//!
//! Parsing reports every problem it finds, not only the first.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::path::PathBuf;

use toml::{Table, Value};

use super::{Analysis, ExperimentConfig, Modes};
use crate::circuit::{derive_energies, CircuitSpec, DriveSpec, Topology, Waveform};
use crate::error::{Error, Result};

pub(crate) const DEFAULT_PERIODS: f64 = 30.0;
pub(crate) const DEFAULT_STEPS_PER_PERIOD: f64 = 200.0;
pub(crate) const DEFAULT_STORE_EVERY: usize = 10;
pub(crate) const POSITIVITY_MONITOR_MAX_DIM: usize = 64;

#[derive(Clone, Copy)]
enum Quantity {
    Capacitance,
    Inductance,
    Time,
    Frequency,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Capacitance => "capacitance",
            Quantity::Inductance => "inductance",
            Quantity::Time => "time",
            Quantity::Frequency => "frequency",
        }
    }

    /// (decimal exponent, extra factor) for a unit suffix.
    fn unit(self, suffix: &str) -> Option<(i32, f64)> {
        let table: &[(&str, i32, f64)] = match self {
            Quantity::Capacitance => &[("F", 0, 1.0), ("nF", -9, 1.0), ("pF", -12, 1.0), ("fF", -15, 1.0)],
            Quantity::Inductance => &[
                ("H", 0, 1.0),
                ("mH", -3, 1.0),
                ("uH", -6, 1.0),
                ("μH", -6, 1.0),
                ("µH", -6, 1.0),
                ("nH", -9, 1.0),
                ("pH", -12, 1.0),
            ],
            Quantity::Time => &[
                ("s", 0, 1.0),
                ("ms", -3, 1.0),
                ("us", -6, 1.0),
                ("μs", -6, 1.0),
                ("µs", -6, 1.0),
                ("ns", -9, 1.0),
                ("ps", -12, 1.0),
            ],
            Quantity::Frequency => &[
                ("rad/s", 0, 1.0),
                ("Hz", 0, 2.0 * PI),
                ("kHz", 3, 2.0 * PI),
                ("MHz", 6, 2.0 * PI),
                ("GHz", 9, 2.0 * PI),
            ],
        };
        table.iter().find(|(s, _, _)| *s == suffix).map(|&(_, e, f)| (e, f))
    }
}

/// Shifts the decimal exponent textually so "3.6 fF" becomes exactly 3.6e-15.
fn scale_decimal(number: f64, exponent: i32) -> f64 {
    if exponent == 0 {
        return number;
    }
    let repr = format!("{number:e}");
    let (mantissa, exp) = repr.split_once('e').expect("`{:e}` output always has an exponent");
    let exp: i32 = exp.parse().expect("`{:e}` exponent is an integer");
    format!("{mantissa}e{}", exp + exponent).parse().expect("well-formed float literal")
}

fn parse_quantity(value: &Value, kind: Quantity) -> std::result::Result<f64, String> {
    match value {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => {
            let s = s.trim();
            let split = s
                .find(|c: char| c.is_whitespace())
                .ok_or_else(|| format!("`{s}` has no unit; write e.g. \"{}\"", example_unit(kind)))?;
            let (num, unit) = (s[..split].trim(), s[split..].trim());
            let number: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
            let (exp, factor) = kind.unit(unit).ok_or_else(|| format!("unknown {} unit `{unit}`", kind.name()))?;
            Ok(scale_decimal(number, exp) * factor)
        }
        other => Err(format!("expected a {} (number or \"value unit\"), got {}", kind.name(), other.type_str())),
    }
}

fn example_unit(kind: Quantity) -> &'static str {
    match kind {
        Quantity::Capacitance => "3.6 fF",
        Quantity::Inductance => "0.2 uH",
        Quantity::Time => "10 ns",
        Quantity::Frequency => "5 GHz",
    }
}

/// Collects errors while walking the document.
struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn error(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn check_keys(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                self.error(&full, "unknown key");
            }
        }
    }

    fn table<'a>(&mut self, parent: &'a Table, key: &str, path: &str) -> Option<&'a Table> {
        match parent.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                self.error(path, format!("expected a table, got {}", other.type_str()));
                None
            }
        }
    }

    fn quantity(&mut self, table: &Table, key: &str, path: &str, kind: Quantity) -> Option<f64> {
        let v = table.get(key)?;
        match parse_quantity(v, kind) {
            Ok(x) => Some(x),
            Err(msg) => {
                self.error(&format!("{path}.{key}"), msg);
                None
            }
        }
    }

    fn float(&mut self, table: &Table, key: &str, path: &str) -> Option<f64> {
        match table.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.error(&format!("{path}.{key}"), format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn integer(&mut self, table: &Table, key: &str, path: &str) -> Option<i64> {
        match table.get(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                self.error(&format!("{path}.{key}"), format!("expected an integer, got {}", other.type_str()));
                None
            }
        }
    }

    fn count(&mut self, table: &Table, key: &str, path: &str) -> Option<usize> {
        let i = self.integer(table, key, path)?;
        if i < 0 {
            self.error(&format!("{path}.{key}"), "must not be negative");
            return None;
        }
        Some(i as usize)
    }

    fn string<'a>(&mut self, table: &'a Table, key: &str, path: &str) -> Option<&'a str> {
        match table.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.error(&format!("{path}.{key}"), format!("expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn boolean(&mut self, table: &Table, key: &str, path: &str) -> Option<bool> {
        match table.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.error(&format!("{path}.{key}"), format!("expected true or false, got {}", other.type_str()));
                None
            }
        }
    }
}

fn parse_waveform(s: &str) -> Option<Waveform> {
    [Waveform::LinearRamp, Waveform::Sinusoid, Waveform::Constant].into_iter().find(|w| w.as_str() == s)
}

fn parse_pair(key: &str, n: usize) -> Option<(usize, usize)> {
    let (a, b) = key.split_once('-')?;
    let (a, b): (usize, usize) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    if a == b || a == 0 || b == 0 || a > n || b > n {
        return None;
    }
    Some((a.min(b) - 1, a.max(b) - 1))
}

/// Horizon and step defaults that depend on the circuit's frequencies.
pub(crate) fn default_timing(circuit: &CircuitSpec, modes: &Modes) -> Result<(f64, f64)> {
    let e = derive_energies(circuit, modes.inductance_matrix)?;
    Ok((drive_period(circuit, &e.omega), 2.0 * PI / e.max_omega() / DEFAULT_STEPS_PER_PERIOD))
}

/// Longest drive period among the sites.
fn drive_period(circuit: &CircuitSpec, omega: &[f64]) -> f64 {
    circuit.drives.iter().zip(omega).map(|(d, &w)| 2.0 * PI / d.angular_frequency(w)).fold(0.0, f64::max)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: Table =
        text.parse().map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut r = Reader { errors: Vec::new() };
    r.check_keys(&doc, "", &["name", "circuit", "memristor", "couplers", "simulation", "analysis", "modes"]);

    let name = r.string(&doc, "name", "").unwrap_or("experiment").to_string();

    // modes first: the timing defaults depend on the inductance mode
    let mut modes = Modes::default();
    if let Some(t) = r.table(&doc, "modes", "modes") {
        r.check_keys(t, "modes", &Modes::KEYS);
        for key in Modes::KEYS {
            if let Some(v) = r.string(t, key, "modes") {
                if modes.set(key, v).is_err() {
                    r.error(&format!("modes.{key}"), format!("unknown value `{v}`; {}", mode_choices(key)));
                }
            }
        }
    }

    let empty = Table::new();
    let circuit_t = r.table(&doc, "circuit", "circuit").unwrap_or_else(|| {
        r.error("circuit", "missing section");
        &empty
    });
    r.check_keys(circuit_t, "circuit", &["topology", "memristors"]);
    let topology = match r.string(circuit_t, "topology", "circuit") {
        Some("triangular") => Some(Topology::Triangular),
        Some("linear") => Some(Topology::Linear),
        Some(other) => {
            r.error("circuit.topology", format!("unknown topology `{other}`; expected triangular or linear"));
            None
        }
        None => {
            if !std::ptr::eq(circuit_t, &empty) {
                r.error("circuit.topology", "missing");
            }
            None
        }
    };

    let mem_t = r.table(&doc, "memristor", "memristor").unwrap_or(&empty);
    let n = match r.count(circuit_t, "memristors", "circuit") {
        Some(n) => n,
        None => mem_t.len(),
    };
    if !(2..=3).contains(&n) {
        r.error("circuit.memristors", format!("must be 2 or 3, got {n}"));
    }
    for key in mem_t.keys() {
        if key.parse::<usize>().map_or(true, |j| j == 0 || j > n) {
            r.error(&format!("memristor.{key}"), format!("sites are numbered 1 to {n}"));
        }
    }

    let mut spec = CircuitSpec {
        cap_sigma: Vec::with_capacity(n),
        l_self: Vec::with_capacity(n),
        couplers: BTreeMap::new(),
        drives: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        varphi: Vec::with_capacity(n),
        topology: topology.unwrap_or(Topology::Triangular),
    };
    for j in 1..=n.min(3) {
        let path = format!("memristor.{j}");
        let Some(t) = r.table(mem_t, &j.to_string(), &path) else {
            r.error(&path, "missing section");
            continue;
        };
        r.check_keys(
            t,
            &path,
            &["cap_sigma", "l_self", "theta", "varphi", "drive", "drive_frequency", "amplitude", "phase_offset"],
        );
        let cap = r.quantity(t, "cap_sigma", &path, Quantity::Capacitance);
        let l = r.quantity(t, "l_self", &path, Quantity::Inductance);
        if t.get("cap_sigma").is_none() {
            r.error(&format!("{path}.cap_sigma"), "missing");
        }
        if t.get("l_self").is_none() {
            r.error(&format!("{path}.l_self"), "missing");
        }
        let waveform = match r.string(t, "drive", &path) {
            Some(s) => parse_waveform(s).unwrap_or_else(|| {
                r.error(
                    &format!("{path}.drive"),
                    format!("unknown waveform `{s}`; expected linear_ramp, sinusoid or constant"),
                );
                Waveform::LinearRamp
            }),
            None => Waveform::LinearRamp,
        };
        let drive = DriveSpec {
            waveform,
            frequency: r.quantity(t, "drive_frequency", &path, Quantity::Frequency),
            amplitude: r.float(t, "amplitude", &path).unwrap_or(0.0),
            phase_offset: r.float(t, "phase_offset", &path).unwrap_or(0.0),
        };
        spec.cap_sigma.push(cap.unwrap_or(f64::NAN));
        spec.l_self.push(l.unwrap_or(f64::NAN));
        spec.theta.push(r.float(t, "theta", &path).unwrap_or(FRAC_PI_4));
        spec.varphi.push(r.float(t, "varphi", &path).unwrap_or(FRAC_PI_2));
        spec.drives.push(drive);
    }

    if let Some(t) = r.table(&doc, "couplers", "couplers") {
        for (key, value) in t {
            let path = format!("couplers.\"{key}\"");
            let Some((j, k)) = parse_pair(key, n) else {
                r.error(&path, format!("expected a pair like \"1-2\" with sites 1 to {n}"));
                continue;
            };
            if spec.coupler(j, k).is_some() {
                r.error(&path, "duplicate coupler");
                continue;
            }
            match parse_quantity(value, Quantity::Inductance) {
                Ok(l) => spec.set_coupler(j, k, Some(l)),
                Err(msg) => r.error(&path, msg),
            }
        }
    }

    if topology == Some(Topology::Linear) && spec.coupler(0, 2).is_some() {
        r.error("couplers.\"1-3\"", "the linear topology has no coupler between memristors 1 and 3");
    }

    let circuit_ok = topology.is_some() && r.errors.is_empty();
    if circuit_ok {
        for issue in spec.issues() {
            r.errors.push(format!("circuit: {issue}"));
        }
    }

    let sim_t = r.table(&doc, "simulation", "simulation").unwrap_or(&empty);
    r.check_keys(sim_t, "simulation", &["truncation", "periods", "t_end", "dt", "store_every", "monitor_positivity"]);
    let truncation = r.count(sim_t, "truncation", "simulation").unwrap_or(2);
    let periods = r.float(sim_t, "periods", "simulation");
    let t_end_raw = r.quantity(sim_t, "t_end", "simulation", Quantity::Time);
    if periods.is_some() && t_end_raw.is_some() {
        r.error("simulation", "give either `periods` or `t_end`, not both");
    }
    if let Some(p) = periods {
        if !(p > 0.0 && p.is_finite()) {
            r.error("simulation.periods", "must be positive");
        }
    }
    let dt_raw = r.quantity(sim_t, "dt", "simulation", Quantity::Time);
    let store_every = r.count(sim_t, "store_every", "simulation").unwrap_or(DEFAULT_STORE_EVERY);
    let dim = truncation.checked_pow(n as u32).unwrap_or(usize::MAX);
    let monitor_positivity =
        r.boolean(sim_t, "monitor_positivity", "simulation").unwrap_or(dim <= POSITIVITY_MONITOR_MAX_DIM);

    let (mut t_end, mut dt) = (t_end_raw.unwrap_or(f64::NAN), dt_raw.unwrap_or(f64::NAN));
    let timing_resolved = r.errors.is_empty() || (t_end_raw.is_some() && dt_raw.is_some());
    if r.errors.is_empty() && (t_end_raw.is_none() || dt_raw.is_none()) {
        match default_timing(&spec, &modes) {
            Ok((period, default_dt)) => {
                if t_end_raw.is_none() {
                    t_end = periods.unwrap_or(DEFAULT_PERIODS) * period;
                }
                if dt_raw.is_none() {
                    dt = default_dt;
                }
            }
            Err(e) => r.error("circuit", e),
        }
    }

    let an_t = r.table(&doc, "analysis", "analysis").unwrap_or(&empty);
    r.check_keys(an_t, "analysis", &["enabled", "seed", "output_dir"]);
    let mut analyses = BTreeSet::new();
    match an_t.get("enabled") {
        None => {
            analyses.insert(Analysis::FormFactor);
        }
        Some(Value::Array(items)) => {
            for item in items {
                match item.as_str().and_then(Analysis::parse) {
                    Some(a) => {
                        analyses.insert(a);
                    }
                    None => r.error(
                        "analysis.enabled",
                        format!(
                            "unknown analysis {item}; expected one of {}",
                            Analysis::ALL.map(|a| a.as_str()).join(", ")
                        ),
                    ),
                }
            }
        }
        Some(other) => r.error("analysis.enabled", format!("expected an array of strings, got {}", other.type_str())),
    }
    let seed = match an_t.get("seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(Value::String(text)) if text.parse::<u64>().is_ok() => text.parse().unwrap_or(0),
        Some(_) => {
            r.error("analysis.seed", "must be a non-negative integer (quote values above 2^63 - 1)");
            0
        }
    };
    let output_dir = PathBuf::from(r.string(an_t, "output_dir", "analysis").unwrap_or("out"));

    let config = ExperimentConfig {
        name,
        circuit: spec,
        truncation,
        t_end,
        dt,
        store_every,
        monitor_positivity,
        analyses,
        seed,
        output_dir,
        modes,
    };
    // circuit issues were already reported above
    if timing_resolved {
        r.errors.extend(config.timing_issues());
    }
    r.errors.extend(config.setup_issues());
    if r.errors.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(r.errors))
    }
}

fn mode_choices(key: &str) -> &'static str {
    match key {
        "coupling_sign" => "expected phase or charge",
        "eof_formula" => "expected wootters or literal",
        "inductance_matrix" => "expected bare or loaded",
        _ => "expected full_period or single_lobe",
    }
}

fn quoted(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Canonical text form. Quantities are written as SI numbers in shortest
/// round-trip notation, so `parse_config(&print_config(c))` reproduces `c`.
pub fn print_config(config: &ExperimentConfig) -> String {
    let c = &config.circuit;
    let mut s = String::new();
    // writing to a String cannot fail
    let _ = writeln!(s, "name = {}", quoted(&config.name));
    let _ = writeln!(s, "\n[circuit]");
    let _ = writeln!(s, "topology = {}", quoted(c.topology.as_str()));
    let _ = writeln!(s, "memristors = {}", c.n_memristors());
    for j in 0..c.n_memristors() {
        let d = &c.drives[j];
        let _ = writeln!(s, "\n[memristor.{}]", j + 1);
        let _ = writeln!(s, "cap_sigma = {:?}", c.cap_sigma[j]);
        let _ = writeln!(s, "l_self = {:?}", c.l_self[j]);
        let _ = writeln!(s, "theta = {:?}", c.theta[j]);
        let _ = writeln!(s, "varphi = {:?}", c.varphi[j]);
        let _ = writeln!(s, "drive = {}", quoted(d.waveform.as_str()));
        if let Some(w) = d.frequency {
            let _ = writeln!(s, "drive_frequency = {w:?}");
        }
        let _ = writeln!(s, "amplitude = {:?}", d.amplitude);
        let _ = writeln!(s, "phase_offset = {:?}", d.phase_offset);
    }
    if !c.couplers.is_empty() {
        let _ = writeln!(s, "\n[couplers]");
        for (&(j, k), l) in &c.couplers {
            let _ = writeln!(s, "\"{}-{}\" = {l:?}", j + 1, k + 1);
        }
    }
    let _ = writeln!(s, "\n[simulation]");
    let _ = writeln!(s, "truncation = {}", config.truncation);
    let _ = writeln!(s, "t_end = {:?}", config.t_end);
    let _ = writeln!(s, "dt = {:?}", config.dt);
    let _ = writeln!(s, "store_every = {}", config.store_every);
    let _ = writeln!(s, "monitor_positivity = {}", config.monitor_positivity);
    let _ = writeln!(s, "\n[analysis]");
    let enabled: Vec<String> = config.analyses.iter().map(|a| quoted(a.as_str())).collect();
    let _ = writeln!(s, "enabled = [{}]", enabled.join(", "));
    if i64::try_from(config.seed).is_ok() {
        let _ = writeln!(s, "seed = {}", config.seed);
    } else {
        let _ = writeln!(s, "seed = \"{}\"", config.seed);
    }
    let _ = writeln!(s, "output_dir = {}", quoted(&config.output_dir.to_string_lossy()));
    let _ = writeln!(s, "\n[modes]");
    for (k, v) in config.modes.entries() {
        let _ = writeln!(s, "{k} = {}", quoted(v));
    }
    s
}
