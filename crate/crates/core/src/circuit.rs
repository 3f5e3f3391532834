//! Circuit parameters, derived energy scales, and the quantized Hamiltonian.
//!
//! Each memristor is a CA-SQUID biased at half a flux quantum in parallel
//! with an inductor, which leaves a harmonic oscillator per site. Sites
//! couple through inductors, giving a phase-phase interaction
//! `−g_jk (a_j† + a_j)(a_k† + a_k)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layout::SiteLayout;
use crate::units::{joules_to_rad_per_s, ELEMENTARY_CHARGE, REDUCED_FLUX_QUANTUM};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Every pair of sites shares a coupling inductor.
    Triangular,
    /// Nearest neighbours only; sites 1 and 3 are not coupled.
    Linear,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Triangular => "triangular",
            Topology::Linear => "linear",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Waveform {
    /// φ_d(t) = ω_d t + offset
    LinearRamp,
    /// φ_d(t) = A sin(ω_d t) + offset
    Sinusoid,
    /// φ_d(t) = offset
    Constant,
}

impl Waveform {
    pub fn as_str(self) -> &'static str {
        match self {
            Waveform::LinearRamp => "linear_ramp",
            Waveform::Sinusoid => "sinusoid",
            Waveform::Constant => "constant",
        }
    }
}

/// External flux threading the outer loop of one memristor.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec {
    pub waveform: Waveform,
    /// Drive angular frequency in rad/s. `None` locks it to the memristor's
    /// own oscillator frequency.
    pub frequency: Option<f64>,
    /// Radians; only used by [`Waveform::Sinusoid`].
    pub amplitude: f64,
    /// Radians.
    pub phase_offset: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec { waveform: Waveform::LinearRamp, frequency: None, amplitude: 0.0, phase_offset: 0.0 }
    }
}

impl DriveSpec {
    pub fn angular_frequency(&self, natural: f64) -> f64 {
        self.frequency.unwrap_or(natural)
    }

    /// φ_d(t) in radians. `natural` is the memristor frequency used when no
    /// explicit drive frequency is set.
    pub fn flux(&self, t: f64, natural: f64) -> f64 {
        let w = self.angular_frequency(natural);
        match self.waveform {
            Waveform::LinearRamp => w * t + self.phase_offset,
            Waveform::Sinusoid => self.amplitude * (w * t).sin() + self.phase_offset,
            Waveform::Constant => self.phase_offset,
        }
    }
}

/// Raw hardware description of a 2- or 3-memristor network. Sites are
/// indexed from 0 in code; configuration files count from 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    /// Effective SQUID capacitance per site, farads.
    pub cap_sigma: Vec<f64>,
    /// Loop inductance per site, henries.
    pub l_self: Vec<f64>,
    /// Coupling inductors keyed by `(j, k)` with `j < k`, henries.
    pub couplers: BTreeMap<(usize, usize), f64>,
    pub drives: Vec<DriveSpec>,
    /// Initial-state polar angle per site, radians.
    pub theta: Vec<f64>,
    /// Initial-state azimuth per site, radians.
    pub varphi: Vec<f64>,
    pub topology: Topology,
}

fn ordered(j: usize, k: usize) -> (usize, usize) {
    if j < k {
        (j, k)
    } else {
        (k, j)
    }
}

impl CircuitSpec {
    pub fn n_memristors(&self) -> usize {
        self.cap_sigma.len()
    }

    pub fn coupler(&self, j: usize, k: usize) -> Option<f64> {
        self.couplers.get(&ordered(j, k)).copied()
    }

    pub fn set_coupler(&mut self, j: usize, k: usize, inductance: Option<f64>) {
        match inductance {
            Some(l) => {
                self.couplers.insert(ordered(j, k), l);
            }
            None => {
                self.couplers.remove(&ordered(j, k));
            }
        }
    }

    /// Every invariant violation, each as a parameter error naming the field.
    pub fn issues(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let n = self.n_memristors();
        if !(2..=3).contains(&n) {
            out.push(Error::param("n_memristors", format!("must be 2 or 3, got {n}")));
            return out;
        }
        for (name, len) in [
            ("l_self", self.l_self.len()),
            ("drive", self.drives.len()),
            ("theta", self.theta.len()),
            ("varphi", self.varphi.len()),
        ] {
            if len != n {
                out.push(Error::param(name, format!("expected {n} entries, got {len}")));
            }
        }
        for (j, &c) in self.cap_sigma.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                out.push(Error::param(format!("cap_sigma[{}]", j + 1), format!("must be positive, got {c:e}")));
            }
        }
        for (j, &l) in self.l_self.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                out.push(Error::param(format!("l_self[{}]", j + 1), format!("must be positive, got {l:e}")));
            }
        }
        for (&(j, k), &l) in &self.couplers {
            if j >= k || k >= n {
                out.push(Error::param(format!("l_couple[{}][{}]", j + 1, k + 1), "no such pair"));
            } else if !(l > 0.0 && l.is_finite()) {
                out.push(Error::param(
                    format!("l_couple[{}][{}]", j + 1, k + 1),
                    format!("must be positive, got {l:e}"),
                ));
            }
        }
        for (j, d) in self.drives.iter().enumerate() {
            if let Some(w) = d.frequency {
                if !(w > 0.0 && w.is_finite()) {
                    out.push(Error::param(format!("drive[{}].frequency", j + 1), "must be positive"));
                }
            }
        }
        match (self.topology, n) {
            (Topology::Triangular, 2) => {
                out.push(Error::param("topology", "triangular coupling needs three memristors"))
            }
            (Topology::Triangular, _) => {
                for (j, k) in [(0, 1), (1, 2), (0, 2)] {
                    if self.coupler(j, k).is_none() {
                        out.push(Error::param(
                            format!("l_couple[{}][{}]", j + 1, k + 1),
                            "triangular topology requires every coupler",
                        ));
                    }
                }
            }
            (Topology::Linear, 3) => {
                if self.coupler(0, 2).is_some() {
                    out.push(Error::param("l_couple[1][3]", "linear topology has no coupler between sites 1 and 3"));
                }
            }
            (Topology::Linear, _) => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.issues().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Which inductance matrix feeds the on-site inductive energies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InductanceMode {
    /// Diagonal 1/L_j only; on-site frequencies ignore the couplers.
    Bare,
    /// Couplers touching a site add to its diagonal entry.
    Loaded,
}

impl InductanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InductanceMode::Bare => "bare",
            InductanceMode::Loaded => "loaded",
        }
    }
}

/// Inverse inductance matrix in H⁻¹. Off-diagonals are −1/L_jk in both
/// modes (zero for absent couplers).
pub fn inductance_matrix(spec: &CircuitSpec, mode: InductanceMode) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.n_memristors();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = 1.0 / spec.l_self[j];
    }
    for (&(j, k), &l) in &spec.couplers {
        m[(j, k)] = -1.0 / l;
        m[(k, j)] = -1.0 / l;
        if mode == InductanceMode::Loaded {
            m[(j, j)] += 1.0 / l;
            m[(k, k)] += 1.0 / l;
        }
    }
    Ok(m)
}

/// Energy scales of the network, all in angular-frequency units (ħ = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedEnergies {
    pub cap_sigma: Vec<f64>,
    /// Charging energy 2e²/C_Σ.
    pub e_c: Vec<f64>,
    /// Inductive energy φ₀² (L⁻¹)_jj.
    pub e_l: Vec<f64>,
    /// Oscillator frequency sqrt(2 E_C E_L).
    pub omega: Vec<f64>,
    /// Zero-point phase scale (E_C / 2E_L)^{1/4}; φ̂ = η (a† + a).
    pub eta: Vec<f64>,
    /// Coupler inductive energy φ₀²/L_jk (zero when absent).
    pub e_l_couple: Vec<Vec<f64>>,
    /// Hamiltonian coupling strength multiplying (a_j†+a_j)(a_k†+a_k).
    pub g_couple: Vec<Vec<f64>>,
    /// The dimensionless g_j in the decay rate, equal to η_j / 2.
    pub gamma_scale: Vec<f64>,
    pub mode: InductanceMode,
}

impl DerivedEnergies {
    pub fn n_sites(&self) -> usize {
        self.omega.len()
    }

    /// Coefficient of −φ̂_j φ̂_k implied by the Hamiltonian coupling, g_jk/(η_j η_k).
    pub fn phase_coupling(&self, j: usize, k: usize) -> f64 {
        self.g_couple[j][k] / (self.eta[j] * self.eta[k])
    }

    pub fn max_omega(&self) -> f64 {
        self.omega.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_omega(&self) -> f64 {
        self.omega.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Zero-point scale (E_C / 32 E_L)^{1/4}, written without reference to η.
    pub fn quarter_phase_scale(&self, j: usize) -> f64 {
        (self.e_c[j] / (32.0 * self.e_l[j])).powf(0.25)
    }
}

pub fn derive_energies(spec: &CircuitSpec, mode: InductanceMode) -> Result<DerivedEnergies> {
    spec.validate()?;
    let n = spec.n_memristors();
    let inv_l = inductance_matrix(spec, mode)?;
    let phi0_sq = REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM;

    let e_c: Vec<f64> =
        spec.cap_sigma.iter().map(|&c| joules_to_rad_per_s(2.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / c)).collect();
    let e_l: Vec<f64> = (0..n).map(|j| joules_to_rad_per_s(phi0_sq * inv_l[(j, j)])).collect();
    let omega: Vec<f64> = (0..n).map(|j| (2.0 * e_c[j] * e_l[j]).sqrt()).collect();
    let eta: Vec<f64> = (0..n).map(|j| (e_c[j] / (2.0 * e_l[j])).powf(0.25)).collect();
    let gamma_scale = eta.iter().map(|h| 0.5 * h).collect();

    let mut e_l_couple = vec![vec![0.0; n]; n];
    let mut g_couple = vec![vec![0.0; n]; n];
    for (&(j, k), &l) in &spec.couplers {
        let e = joules_to_rad_per_s(phi0_sq / l);
        // bare mode: equals sqrt(L_j L_k)/L_jk * sqrt(ω_j ω_k)
        let g = 2.0 * e * eta[j] * eta[k];
        e_l_couple[j][k] = e;
        e_l_couple[k][j] = e;
        g_couple[j][k] = g;
        g_couple[k][j] = g;
    }

    Ok(DerivedEnergies {
        cap_sigma: spec.cap_sigma.clone(),
        e_c,
        e_l,
        omega,
        eta,
        e_l_couple,
        g_couple,
        gamma_scale,
        mode,
    })
}

/// Operator form of the pair coupling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingForm {
    /// −g (a_j† + a_j)(a_k† + a_k), consistent with φ̂ = η(a† + a).
    Phase,
    /// −g (a_j − a_j†)(a_k − a_k†), the alternative operator ordering.
    Charge,
}

impl CouplingForm {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingForm::Phase => "phase",
            CouplingForm::Charge => "charge",
        }
    }
}

/// Dense Hamiltonian on the truncated Fock space, in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub dim_per_site: usize,
    pub n_sites: usize,
    pub matrix: DMatrix<C64>,
}

impl HamiltonianMatrix {
    pub fn layout(&self) -> SiteLayout {
        SiteLayout::uniform(self.n_sites, self.dim_per_site)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_hamiltonian(energies: &DerivedEnergies, d: usize) -> Result<HamiltonianMatrix> {
    build_hamiltonian_with(energies, d, CouplingForm::Phase)
}

pub fn build_hamiltonian_with(energies: &DerivedEnergies, d: usize, form: CouplingForm) -> Result<HamiltonianMatrix> {
    if d < 2 {
        return Err(Error::Truncation(d));
    }
    let n = energies.n_sites();
    let layout = SiteLayout::uniform(n, d);
    let dim = layout.dim();
    let mut h = DMatrix::<C64>::zeros(dim, dim);

    for col in 0..dim {
        let diag: f64 = (0..n).map(|j| energies.omega[j] * layout.digit(col, j) as f64).sum();
        h[(col, col)] += C64::from(diag);
    }

    // ladder branches of a single-site quadrature acting on |m>:
    // (a† ± a)|m> = sqrt(m+1)|m+1> ± sqrt(m)|m-1>; for the charge form we use
    // (a − a†)|m> = sqrt(m)|m-1> − sqrt(m+1)|m+1>.
    let branches = |m: usize| -> [(isize, f64); 2] {
        let up = ((m + 1) as f64).sqrt();
        let down = (m as f64).sqrt();
        match form {
            CouplingForm::Phase => [(1, up), (-1, down)],
            CouplingForm::Charge => [(1, -up), (-1, down)],
        }
    };

    for j in 0..n {
        for k in (j + 1)..n {
            let g = energies.g_couple[j][k];
            if g == 0.0 {
                continue;
            }
            let (sj, sk) = (layout.stride(j) as isize, layout.stride(k) as isize);
            for col in 0..dim {
                let (mj, mk) = (layout.digit(col, j), layout.digit(col, k));
                for (dj, aj) in branches(mj) {
                    let nj = mj as isize + dj;
                    if nj < 0 || nj >= d as isize || aj == 0.0 {
                        continue;
                    }
                    for (dk, ak) in branches(mk) {
                        let nk = mk as isize + dk;
                        if nk < 0 || nk >= d as isize || ak == 0.0 {
                            continue;
                        }
                        let row = (col as isize + dj * sj + dk * sk) as usize;
                        h[(row, col)] -= C64::from(g * aj * ak);
                    }
                }
            }
        }
    }

    Ok(HamiltonianMatrix { dim_per_site: d, n_sites: n, matrix: h })
}

/// Period 2π/ω of the fastest oscillator.
pub fn shortest_period(energies: &DerivedEnergies) -> f64 {
    2.0 * PI / energies.max_omega()
}
