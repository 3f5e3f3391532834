//! Closed equations of motion for the first moments ⟨n̂_j⟩ and ⟨φ̂_j⟩.
//!
//! ```text
//! d⟨n̂_j⟩/dt = E_L_j ⟨φ̂_j⟩ − Σ_{k≠j} K_jk ⟨φ̂_k⟩ − κ_j(t) ⟨n̂_j⟩
//! d⟨φ̂_j⟩/dt = −2 E_C_j ⟨n̂_j⟩ − κ_j(t) ⟨φ̂_j⟩
//! ```
//!
//! K_jk = g_jk/(η_j η_k) is the phase-phase coupling carried by the
//! Hamiltonian, and κ_j = Γ_j/4 is the amplitude damping produced by a
//! dissipator with prefactor Γ_j/2. The system is linear and exact for a
//! bosonic mode, so it cross-checks the density-matrix engine whenever the
//! Fock truncation has headroom.

use crate::circuit::{DerivedEnergies, DriveSpec};
use crate::error::{Error, Result};
use crate::lindblad::{decay_rate, InitialState};

#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub t: f64,
    pub n: Vec<f64>,
    pub phi: Vec<f64>,
}

impl MomentState {
    pub fn zeros(n_sites: usize) -> Self {
        MomentState { t: 0.0, n: vec![0.0; n_sites], phi: vec![0.0; n_sites] }
    }

    /// Moments of the product initial state, from ⟨a⟩ = cos(θ/2) sin(θ/2) e^{iφ}.
    pub fn from_initial(init: &InitialState, energies: &DerivedEnergies) -> Self {
        let n_sites = init.theta.len();
        let mut s = MomentState::zeros(n_sites);
        for j in 0..n_sites {
            let (c0, c1) = init.site_amplitudes(j);
            let alpha = c0.conj() * c1;
            let eta = energies.eta[j];
            s.n[j] = -alpha.im / eta;
            s.phi[j] = 2.0 * eta * alpha.re;
        }
        s
    }

    fn is_finite(&self) -> bool {
        self.n.iter().chain(&self.phi).all(|x| x.is_finite())
    }
}

/// Time derivative (dn/dt, dφ/dt) of the moment vector.
pub fn moment_rhs(
    state: &MomentState,
    t: f64,
    energies: &DerivedEnergies,
    drives: &[DriveSpec],
) -> (Vec<f64>, Vec<f64>) {
    let n_sites = state.n.len();
    let mut dn = vec![0.0; n_sites];
    let mut dphi = vec![0.0; n_sites];
    for j in 0..n_sites {
        let kappa = 0.25 * decay_rate(j, t, energies, &drives[j]);
        let coupling: f64 =
            (0..n_sites).filter(|&k| k != j).map(|k| energies.phase_coupling(j, k) * state.phi[k]).sum();
        dn[j] = energies.e_l[j] * state.phi[j] - coupling - kappa * state.n[j];
        dphi[j] = -2.0 * energies.e_c[j] * state.n[j] - kappa * state.phi[j];
    }
    (dn, dphi)
}

fn shifted(base: &MomentState, dn: &[f64], dphi: &[f64], h: f64, t: f64) -> MomentState {
    MomentState {
        t,
        n: base.n.iter().zip(dn).map(|(x, d)| x + h * d).collect(),
        phi: base.phi.iter().zip(dphi).map(|(x, d)| x + h * d).collect(),
    }
}

/// RK4 on the grid t_k = t0 + k·dt, same stage times as the density-matrix engine.
pub fn integrate_moments(
    init: &MomentState,
    t_end: f64,
    dt: f64,
    energies: &DerivedEnergies,
    drives: &[DriveSpec],
) -> Result<Vec<MomentState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    if drives.len() != init.n.len() || energies.n_sites() != init.n.len() {
        return Err(Error::DimensionMismatch { expected: energies.n_sites(), found: init.n.len() });
    }
    let steps = crate::lindblad::IntegrationOptions { t_end, dt, store_every: 1, monitor_positivity: false }.n_steps();
    let t0 = init.t;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = init.clone();
    out.push(y.clone());
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let (n1, p1) = moment_rhs(&y, t, energies, drives);
        let y2 = shifted(&y, &n1, &p1, 0.5 * dt, t);
        let (n2, p2) = moment_rhs(&y2, t + 0.5 * dt, energies, drives);
        let y3 = shifted(&y, &n2, &p2, 0.5 * dt, t);
        let (n3, p3) = moment_rhs(&y3, t + 0.5 * dt, energies, drives);
        let y4 = shifted(&y, &n3, &p3, dt, t);
        let (n4, p4) = moment_rhs(&y4, t + dt, energies, drives);
        let h6 = dt / 6.0;
        for j in 0..y.n.len() {
            y.n[j] += h6 * (n1[j] + 2.0 * n2[j] + 2.0 * n3[j] + n4[j]);
            y.phi[j] += h6 * (p1[j] + 2.0 * p2[j] + 2.0 * p3[j] + p4[j]);
        }
        y.t = t0 + (k + 1) as f64 * dt;
        if !y.is_finite() {
            return Err(Error::Diverged { t: y.t });
        }
        out.push(y.clone());
    }
    Ok(out)
}
