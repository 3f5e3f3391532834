//! Time-dependent master equation for coupled quantum memristors.
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_j (Γ_j(t)/2) (a_j ρ a_j† − ½{a_j† a_j, ρ})
//! ```
//!
//! The generator is applied matrix-free. Standard network Hamiltonians are
//! applied as shifted vector passes over each column (one pass per ladder
//! branch); any other Hamiltonian falls back to compressed-row storage. The
//! dissipators use the same shifted passes, so a right-hand side costs
//! O(N·dim²).
//! Time stepping is classical fixed-step RK4 on the full density matrix.

use nalgebra::{DMatrix, DVector};

use crate::circuit::{build_hamiltonian_with, CouplingForm, DerivedEnergies, DriveSpec, HamiltonianMatrix};
use crate::error::{Error, Result};
use crate::layout::SiteLayout;
use crate::state::{hermitize_in_place, DensityMatrix};
use crate::units::ELEMENTARY_CHARGE;
use crate::C64;

/// Quasiparticle decay rate Γ_j(t) = g_j² ω_j e^{−g_j²} (1 + cos φ_d(t))/2, in s⁻¹.
pub fn decay_rate(site: usize, t: f64, energies: &DerivedEnergies, drive: &DriveSpec) -> f64 {
    let g2 = energies.gamma_scale[site].powi(2);
    let omega = energies.omega[site];
    let phi_d = drive.flux(t, omega);
    // clamp the cos rounding at φ_d = π
    (g2 * omega * (-g2).exp() * 0.5 * (1.0 + phi_d.cos())).max(0.0)
}

/// Per-site initial angles of the product state
/// ⊗_j [cos(θ_j/2)|0⟩ + e^{iφ_j} sin(θ_j/2)|1⟩].
#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub theta: Vec<f64>,
    pub varphi: Vec<f64>,
}

impl InitialState {
    pub fn uniform(n: usize, theta: f64, varphi: f64) -> Self {
        InitialState { theta: vec![theta; n], varphi: vec![varphi; n] }
    }

    /// Single-site amplitudes (c0, c1).
    pub fn site_amplitudes(&self, site: usize) -> (C64, C64) {
        let (th, ph) = (self.theta[site], self.varphi[site]);
        (C64::from((th / 2.0).cos()), C64::from_polar((th / 2.0).sin(), ph))
    }
}

pub fn make_initial_state(init: &InitialState, d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::Truncation(d));
    }
    if init.theta.len() != init.varphi.len() || init.theta.is_empty() {
        return Err(Error::param("initial_state", "theta and varphi must have equal, nonzero length"));
    }
    let n = init.theta.len();
    let layout = SiteLayout::uniform(n, d);
    let amps: Vec<(C64, C64)> = (0..n).map(|j| init.site_amplitudes(j)).collect();
    let psi = DVector::from_fn(layout.dim(), |idx, _| {
        let mut z = C64::from(1.0);
        for (j, &(c0, c1)) in amps.iter().enumerate() {
            z *= match layout.digit(idx, j) {
                0 => c0,
                1 => c1,
                _ => C64::from(0.0),
            };
        }
        z
    });
    DensityMatrix::from_pure(layout.dims(), &psi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// n̂ = (i/2η)(a − a†): Cooper-pair number, sign chosen so that
    /// d⟨n̂⟩/dt = +E_L⟨φ̂⟩ and d⟨φ̂⟩/dt = −2E_C⟨n̂⟩.
    Number,
    /// φ̂ = η(a† + a).
    Phase,
}

/// Dense embedding of a site observable, mainly for tests and small systems.
pub fn observable_matrix(layout: &SiteLayout, site: usize, obs: Observable, eta: f64) -> DMatrix<C64> {
    let dim = layout.dim();
    let s = layout.stride(site);
    let d = layout.dims()[site];
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..dim {
        let occ = layout.digit(c, site);
        if occ + 1 < d {
            // a† |occ> = sqrt(occ+1) |occ+1>  →  a†[c+s, c]
            let amp = ((occ + 1) as f64).sqrt();
            let (up, down) = match obs {
                Observable::Phase => (C64::from(eta * amp), C64::from(eta * amp)),
                Observable::Number => {
                    // (i/2η)(a − a†): −i/2η on a†, +i/2η on a
                    let k = 1.0 / (2.0 * eta);
                    (C64::new(0.0, -k * amp), C64::new(0.0, k * amp))
                }
            };
            m[(c + s, c)] += up;
            m[(c, c + s)] += down;
        }
    }
    m
}

/// Tr(ρ a_site) from the ladder structure.
fn lowering_expectation(rho: &[C64], n: usize, occ: &[usize], sqrt_up: &[f64], stride: usize, d: usize) -> C64 {
    let mut acc = C64::from(0.0);
    for c in 0..n {
        if occ[c] + 1 < d {
            acc += rho[(c + stride) + c * n] * sqrt_up[occ[c]];
        }
    }
    acc
}

/// Tr(ρ Ô_site). The imaginary residue is checked against 1e-10 (relative
/// to the operator scale) and discarded.
pub fn expectation(rho: &DensityMatrix, site: usize, obs: Observable, energies: &DerivedEnergies) -> Result<f64> {
    let layout = rho.layout();
    if site >= layout.n_sites() {
        return Err(Error::Selection(format!("site {}", site + 1)));
    }
    let n = layout.dim();
    let d = layout.dims()[site];
    let s = layout.stride(site);
    let m = rho.matrix();
    let (mut tr_a, mut tr_ad) = (C64::from(0.0), C64::from(0.0));
    for c in 0..n {
        let occ = layout.digit(c, site);
        if occ + 1 < d {
            let amp = ((occ + 1) as f64).sqrt();
            tr_a += m[(c + s, c)] * amp;
            tr_ad += m[(c, c + s)] * amp;
        }
    }
    let eta = energies.eta[site];
    let (value, scale) = match obs {
        Observable::Phase => ((tr_a + tr_ad) * eta, eta),
        Observable::Number => (C64::new(0.0, 1.0 / (2.0 * eta)) * (tr_a - tr_ad), 1.0 / eta),
    };
    let tol = 1e-10 * scale.max(1.0) * (d as f64);
    if value.im.abs() > tol {
        return Err(Error::param("rho", format!("expectation has imaginary part {:e}; state not Hermitian", value.im)));
    }
    Ok(value.re)
}

struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        row_ptr.push(0);
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v != C64::from(0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { row_ptr, cols, vals }
    }

    fn apply_column(&self, col: &[C64], dst: &mut [C64]) {
        for (r, d) in dst.iter_mut().enumerate() {
            let mut acc = C64::from(0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * col[self.cols[idx]];
            }
            *d = acc;
        }
    }
}

/// Single-site quadrature Q_j with Q[r, r+s] = up[r] and Q[r, r−s] = down[r].
/// Coefficients are duplicated so they line up with interleaved (re, im) data.
struct Quadrature {
    stride2: usize,
    up2: Vec<f64>,
    down2: Vec<f64>,
}

impl Quadrature {
    /// dst += f · Q v on one interleaved column.
    fn apply_add(&self, v: &[f64], dst: &mut [f64], f: f64) {
        let (len, s) = (v.len(), self.stride2);
        for ((d, &c), &x) in dst[..len - s].iter_mut().zip(&self.up2[..len - s]).zip(&v[s..]) {
            *d += f * c * x;
        }
        for ((d, &c), &x) in dst[s..].iter_mut().zip(&self.down2[s..]).zip(&v[..len - s]) {
            *d += f * c * x;
        }
    }
}

/// H = Σ_j ω_j n_j − Σ_{j<k} g_jk Q_j Q_k, applied with shifted vector passes.
struct StructuredHamiltonian {
    diag2: Vec<f64>,
    quads: Vec<Quadrature>,
    /// For each j, the couplings (k, g_jk) with k > j.
    partners: Vec<Vec<(usize, f64)>>,
}

impl StructuredHamiltonian {
    fn new(layout: &SiteLayout, energies: &DerivedEnergies, form: CouplingForm) -> Self {
        let n = layout.dim();
        let dup = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..2 * n).map(|i| f(i / 2)).collect() };
        let diag2 = dup(&|r| (0..layout.n_sites()).map(|j| energies.omega[j] * layout.digit(r, j) as f64).sum());
        let quads = (0..layout.n_sites())
            .map(|j| {
                let top = layout.dims()[j] - 1;
                let sign = match form {
                    CouplingForm::Phase => 1.0,
                    CouplingForm::Charge => -1.0,
                };
                Quadrature {
                    stride2: 2 * layout.stride(j),
                    up2: dup(&|r| {
                        let m = layout.digit(r, j);
                        if m < top {
                            ((m + 1) as f64).sqrt()
                        } else {
                            0.0
                        }
                    }),
                    down2: dup(&|r| sign * (layout.digit(r, j) as f64).sqrt()),
                }
            })
            .collect();
        let partners = (0..layout.n_sites())
            .map(|j| {
                ((j + 1)..layout.n_sites()).map(|k| (k, energies.g_couple[j][k])).filter(|&(_, g)| g != 0.0).collect()
            })
            .collect();
        StructuredHamiltonian { diag2, quads, partners }
    }

    /// dst = H v for one interleaved column; `work` holds 2 columns per site.
    fn apply_column(&self, v: &[f64], dst: &mut [f64], work: &mut [Vec<f64>]) {
        for ((d, &h), &x) in dst.iter_mut().zip(&self.diag2).zip(v) {
            *d = h * x;
        }
        let n_sites = self.quads.len();
        let (products, sums) = work.split_at_mut(n_sites);
        let mut have_product = 0u64;
        for (j, partners) in self.partners.iter().enumerate() {
            if partners.is_empty() {
                continue;
            }
            let sum = &mut sums[j];
            sum.iter_mut().for_each(|x| *x = 0.0);
            for &(k, g) in partners {
                if have_product & (1 << k) == 0 {
                    products[k].iter_mut().for_each(|x| *x = 0.0);
                    self.quads[k].apply_add(v, &mut products[k], 1.0);
                    have_product |= 1 << k;
                }
                for (s, &p) in sum.iter_mut().zip(&products[k]) {
                    *s += g * p;
                }
            }
            self.quads[j].apply_add(sum, dst, -1.0);
        }
    }
}

enum HamiltonianKernel {
    Structured(StructuredHamiltonian),
    Sparse(Csr),
}

#[derive(Clone, Debug)]
struct Channel {
    site: usize,
    drive: DriveSpec,
}

struct Scratch {
    product: Vec<C64>,
    work: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn as_f64(v: &[C64]) -> &[f64] {
    // SAFETY: Complex<f64> is #[repr(C)] { re, im }, so a slice of them is
    // a contiguous slice of 2·len f64 with the same alignment.
    unsafe { std::slice::from_raw_parts(v.as_ptr() as *const f64, 2 * v.len()) }
}

fn as_f64_mut(v: &mut [C64]) -> &mut [f64] {
    // SAFETY: see `as_f64`.
    unsafe { std::slice::from_raw_parts_mut(v.as_mut_ptr() as *mut f64, 2 * v.len()) }
}

/// The Liouvillian of the coupled network, ready for repeated evaluation.
pub struct MasterEquation {
    layout: SiteLayout,
    hamiltonian: HamiltonianKernel,
    occupation: Vec<Vec<usize>>,
    sqrt_up: Vec<f64>,
    /// sqrt(m_r + 1) per row for each site, zero at the truncation edge, duplicated.
    raise2: Vec<Vec<f64>>,
    channels: Vec<Channel>,
    energies: DerivedEnergies,
    scratch: std::cell::RefCell<Scratch>,
}

impl MasterEquation {
    pub fn new(h: &HamiltonianMatrix, energies: &DerivedEnergies, drives: &[DriveSpec]) -> Result<Self> {
        if energies.n_sites() != h.n_sites {
            return Err(Error::DimensionMismatch { expected: h.n_sites, found: energies.n_sites() });
        }
        if drives.len() != h.n_sites {
            return Err(Error::param("drives", format!("expected {} drives, got {}", h.n_sites, drives.len())));
        }
        let layout = h.layout();
        let d = h.dim_per_site;
        let n = layout.dim();
        // use the shifted-pass kernel when `h` is exactly one of the standard forms
        let hamiltonian = [CouplingForm::Phase, CouplingForm::Charge]
            .into_iter()
            .find(|&form| build_hamiltonian_with(energies, d, form).is_ok_and(|std| std.matrix == h.matrix))
            .map(|form| HamiltonianKernel::Structured(StructuredHamiltonian::new(&layout, energies, form)))
            .unwrap_or_else(|| HamiltonianKernel::Sparse(Csr::from_dense(&h.matrix)));
        let occupation = layout.occupation_table();
        let raise2 = occupation
            .iter()
            .map(|occ| {
                (0..2 * n).map(|i| if occ[i / 2] + 1 < d { ((occ[i / 2] + 1) as f64).sqrt() } else { 0.0 }).collect()
            })
            .collect();
        Ok(MasterEquation {
            occupation,
            raise2,
            sqrt_up: (0..d).map(|m| ((m + 1) as f64).sqrt()).collect(),
            hamiltonian,
            channels: drives.iter().cloned().enumerate().map(|(site, drive)| Channel { site, drive }).collect(),
            scratch: std::cell::RefCell::new(Scratch {
                product: vec![C64::from(0.0); n * n],
                work: vec![vec![0.0; 2 * n]; 2 * h.n_sites],
                weights: vec![0.0; n],
            }),
            energies: energies.clone(),
            layout,
        })
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn energies(&self) -> &DerivedEnergies {
        &self.energies
    }

    pub fn rates(&self, t: f64) -> Vec<f64> {
        self.channels.iter().map(|ch| decay_rate(ch.site, t, &self.energies, &ch.drive)).collect()
    }

    /// Writes dρ/dt into `out` (both column-major, dim×dim).
    pub fn rhs_into(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.layout.dim();
        debug_assert_eq!(rho.len(), n * n);
        let mut scratch = self.scratch.borrow_mut();
        let Scratch { product, work, weights } = &mut *scratch;

        // M = Hρ, column by column
        for c in 0..n {
            let col = &rho[c * n..(c + 1) * n];
            let dst = &mut product[c * n..(c + 1) * n];
            match &self.hamiltonian {
                HamiltonianKernel::Structured(h) => h.apply_column(as_f64(col), as_f64_mut(dst), work),
                HamiltonianKernel::Sparse(h) => h.apply_column(col, dst),
            }
        }
        // −i[H, ρ] = −i(M − M†) for Hermitian H and ρ, in cache-sized tiles
        const TILE: usize = 32;
        for cb in (0..n).step_by(TILE) {
            for rb in (0..n).step_by(TILE) {
                for c in cb..(cb + TILE).min(n) {
                    for r in rb..(rb + TILE).min(n) {
                        let z = product[r + c * n] - product[c + r * n].conj();
                        out[r + c * n] = C64::new(z.im, -z.re);
                    }
                }
            }
        }

        // dissipators: Σ_j κ_j (a_j ρ a_j† − ½{n_j, ρ}) with κ_j = Γ_j/2
        let kappas: Vec<f64> =
            self.channels.iter().map(|ch| 0.5 * decay_rate(ch.site, t, &self.energies, &ch.drive)).collect();
        if kappas.iter().all(|&k| k == 0.0) {
            return;
        }
        for (r, w) in weights.iter_mut().enumerate() {
            *w = self.channels.iter().zip(&kappas).map(|(ch, k)| k * self.occupation[ch.site][r] as f64).sum();
        }
        let out2 = as_f64_mut(out);
        let rho2 = as_f64(rho);
        for c in 0..n {
            let dst = &mut out2[2 * c * n..2 * (c + 1) * n];
            let src = &rho2[2 * c * n..2 * (c + 1) * n];
            let wc = weights[c];
            for (i, (d, &x)) in dst.iter_mut().zip(src).enumerate() {
                *d -= 0.5 * (weights[i / 2] + wc) * x;
            }
            for (ch, &kappa) in self.channels.iter().zip(&kappas) {
                let up = &self.raise2[ch.site];
                let coeff = kappa * up[2 * c];
                if coeff == 0.0 {
                    continue;
                }
                // (a ρ a†)[r, c] = sqrt(m_r+1) sqrt(m_c+1) ρ[r+s, c+s]
                let s = self.layout.stride(ch.site);
                let shifted = &rho2[2 * (c + s) * n..2 * (c + s + 1) * n];
                let len = 2 * n - 2 * s;
                for ((d, &u), &x) in dst[..len].iter_mut().zip(&up[..len]).zip(&shifted[2 * s..]) {
                    *d += coeff * u * x;
                }
            }
        }
    }

    fn observe(&self, rho: &[C64], t: f64, series: &mut SiteSeries) {
        let n = self.layout.dim();
        for j in 0..self.layout.n_sites() {
            let alpha = lowering_expectation(
                rho,
                n,
                &self.occupation[j],
                &self.sqrt_up,
                self.layout.stride(j),
                self.layout.dims()[j],
            );
            let eta = self.energies.eta[j];
            // Tr(ρ a†) = conj(Tr(ρ a)) for Hermitian ρ
            series.n[j].push(-alpha.im / eta);
            series.phi[j].push(2.0 * eta * alpha.re);
            series.gamma[j].push(decay_rate(j, t, &self.energies, &self.channels[j].drive));
        }
    }
}

/// dρ/dt for a single state. Builds the generator on every call; use
/// [`MasterEquation`] directly in loops.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    t: f64,
    h: &HamiltonianMatrix,
    energies: &DerivedEnergies,
    drives: &[DriveSpec],
) -> Result<DMatrix<C64>> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho.dim() });
    }
    let eq = MasterEquation::new(h, energies, drives)?;
    let n = rho.dim();
    let mut out = DMatrix::<C64>::zeros(n, n);
    eq.rhs_into(t, rho.matrix().as_slice(), out.as_mut_slice());
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct IntegrationOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Keep every `store_every`-th state (the first and last are always kept).
    pub store_every: usize,
    /// Compute the minimum eigenvalue of every stored state.
    pub monitor_positivity: bool,
}

impl IntegrationOptions {
    pub fn n_steps(&self) -> usize {
        let raw = self.t_end / self.dt;
        let rounded = raw.round();
        if (raw - rounded).abs() < 1e-9 * raw.max(1.0) {
            rounded as usize
        } else {
            raw.ceil() as usize
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub state: DensityMatrix,
}

#[derive(Clone, Debug, Default)]
struct SiteSeries {
    n: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
}

/// Time series of an integration run on a uniform grid t_k = k·dt.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub expect_n: Vec<Vec<f64>>,
    pub expect_phi: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub voltage: Vec<Vec<f64>>,
    pub current: Vec<Vec<f64>>,
    /// max_k |Tr ρ(t_k) − 1| over every step.
    pub max_trace_drift: f64,
    /// Minimum eigenvalue over stored states (NaN when not monitored).
    pub min_eigenvalue: f64,
    pub min_purity: f64,
    pub max_purity: f64,
}

impl Trajectory {
    pub fn n_sites(&self) -> usize {
        self.expect_n.len()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.snapshots.last().expect("trajectory always stores its final state").state
    }
}

/// V_j = (2e/C_Σj)⟨n̂_j⟩ and I_j = Γ_j V_j, pointwise.
pub fn voltage_and_current(expect_n: &[f64], gamma: &[f64], cap_sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let k = 2.0 * ELEMENTARY_CHARGE / cap_sigma;
    let v: Vec<f64> = expect_n.iter().map(|n| k * n).collect();
    let i = v.iter().zip(gamma).map(|(v, g)| g * v).collect();
    (v, i)
}

fn axpy_into(dst: &mut [C64], base: &[C64], k: &[C64], h: f64) {
    for ((d, b), k) in dst.iter_mut().zip(base).zip(k) {
        *d = b + k * h;
    }
}

/// Fixed-step RK4 integration of the master equation from `rho0`.
pub fn integrate(rho0: &DensityMatrix, eq: &MasterEquation, opts: &IntegrationOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::param("t_end", "must be positive"));
    }
    if rho0.layout() != eq.layout() {
        return Err(Error::DimensionMismatch { expected: eq.layout().dim(), found: rho0.dim() });
    }
    let resolution = opts.dt * eq.energies().max_omega();
    if resolution > 0.05 {
        log::warn!("dt·ω_max = {resolution:.3} exceeds 0.05; RK4 phase error may be visible");
    }

    let n = eq.layout().dim();
    let n_sites = eq.layout().n_sites();
    let steps = opts.n_steps();
    let stride = opts.store_every.max(1);
    let dt = opts.dt;

    let mut rho = rho0.matrix().clone();
    hermitize_in_place(&mut rho);
    let mut k1 = vec![C64::from(0.0); n * n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut series = SiteSeries {
        n: vec![Vec::with_capacity(steps + 1); n_sites],
        phi: vec![Vec::with_capacity(steps + 1); n_sites],
        gamma: vec![Vec::with_capacity(steps + 1); n_sites],
    };
    let mut times = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut max_drift = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    let (mut min_purity, mut max_purity) = (f64::INFINITY, f64::NEG_INFINITY);

    let mut record = |k: usize, rho: &DMatrix<C64>, series: &mut SiteSeries| -> Result<()> {
        let t = k as f64 * dt;
        let tr = rho.trace();
        if !tr.re.is_finite() || rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Diverged { t });
        }
        max_drift = max_drift.max((tr - C64::from(1.0)).norm());
        times.push(t);
        eq.observe(rho.as_slice(), t, series);
        if k.is_multiple_of(stride) || k == steps {
            let state = DensityMatrix::from_parts(eq.layout().clone(), rho.clone());
            let p = state.purity();
            min_purity = min_purity.min(p);
            max_purity = max_purity.max(p);
            if opts.monitor_positivity {
                min_eig = min_eig.min(state.min_eigenvalue());
            }
            snapshots.push(Snapshot { step: k, t, state });
        }
        Ok(())
    };

    record(0, &rho, &mut series)?;
    for k in 0..steps {
        let t = k as f64 * dt;
        let y = rho.as_slice();
        eq.rhs_into(t, y, &mut k1);
        axpy_into(&mut tmp, y, &k1, 0.5 * dt);
        eq.rhs_into(t + 0.5 * dt, &tmp, &mut k2);
        axpy_into(&mut tmp, y, &k2, 0.5 * dt);
        eq.rhs_into(t + 0.5 * dt, &tmp, &mut k3);
        axpy_into(&mut tmp, y, &k3, dt);
        eq.rhs_into(t + dt, &tmp, &mut k4);
        let h6 = dt / 6.0;
        for (i, z) in rho.as_mut_slice().iter_mut().enumerate() {
            *z += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * h6;
        }
        hermitize_in_place(&mut rho);
        record(k + 1, &rho, &mut series).map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged { t: (k + 1) as f64 * dt },
            other => other,
        })?;
    }

    let energies = eq.energies();
    let mut voltage = Vec::with_capacity(n_sites);
    let mut current = Vec::with_capacity(n_sites);
    for j in 0..n_sites {
        let (v, i) = voltage_and_current(&series.n[j], &series.gamma[j], energies.cap_sigma[j]);
        voltage.push(v);
        current.push(i);
    }
    if max_drift > 1e-8 {
        log::warn!("trace drift {max_drift:e} exceeds 1e-8");
    }

    Ok(Trajectory {
        dt,
        times,
        snapshots,
        expect_n: series.n,
        expect_phi: series.phi,
        gamma: series.gamma,
        voltage,
        current,
        max_trace_drift: max_drift,
        min_eigenvalue: if opts.monitor_positivity { min_eig } else { f64::NAN },
        min_purity,
        max_purity,
    })
}
