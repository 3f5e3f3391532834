//! Numerical upper bound on the entanglement of formation between one qubit
//! and the other two in a three-qubit mixed state.
//!
//! Any decomposition ρ = Σ_k |ψ̃_k⟩⟨ψ̃_k| is reached from the eigenvectors by
//! an isometry, ψ̃_k = Σ_i U_ki √λ_i e_i. The average marginal entropy
//! Σ_k p_k S(Tr_rest ψ_k) is minimized by pairwise complex rotations of the
//! decomposition vectors, starting from the spectral decomposition and from
//! random isometries.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::CorrelationOptions;
use crate::state::{hermitian_eigen, DensityMatrix};
use crate::C64;

const RANK_CUTOFF: f64 = 1e-12;
const STEP_START: f64 = 0.5;
const STEP_MIN: f64 = 1e-4;
const MAX_SWEEPS_PER_STEP: usize = 50;

/// Pairs of flat indices (center = 0, center = 1) for each environment configuration.
fn center_index_pairs(center: usize) -> [(usize, usize); 4] {
    let stride = 1 << center;
    let mut out = [(0, 0); 4];
    let mut k = 0;
    for idx in 0..8 {
        if idx & stride == 0 {
            out[k] = (idx, idx | stride);
            k += 1;
        }
    }
    out
}

/// p · S(σ/p) for an unnormalized pure vector, σ its 2×2 center marginal.
fn weighted_entropy(psi: &[C64], pairs: &[(usize, usize); 4]) -> f64 {
    let (mut s00, mut s11, mut s01) = (0.0, 0.0, C64::from(0.0));
    for &(i0, i1) in pairs {
        let (a, b) = (psi[i0], psi[i1]);
        s00 += a.norm_sqr();
        s11 += b.norm_sqr();
        s01 += a * b.conj();
    }
    let p = s00 + s11;
    if p <= 0.0 {
        return 0.0;
    }
    let det = (s00 * s11 - s01.norm_sqr()).max(0.0) / (p * p);
    let disc = (1.0 - 4.0 * det).max(0.0).sqrt();
    let lam = (1.0 - disc) / 2.0;
    p * super::binary_entropy(lam)
}

struct Search<'a> {
    vectors: Vec<[C64; 8]>,
    costs: Vec<f64>,
    pairs: &'a [(usize, usize); 4],
}

impl<'a> Search<'a> {
    fn new(vectors: Vec<[C64; 8]>, pairs: &'a [(usize, usize); 4]) -> Self {
        let costs = vectors.iter().map(|v| weighted_entropy(v, pairs)).collect();
        Search { vectors, costs, pairs }
    }

    fn total(&self) -> f64 {
        self.costs.iter().sum()
    }

    fn rotated(&self, k: usize, l: usize, angle: f64, chi: f64) -> ([C64; 8], [C64; 8]) {
        let (c, s) = (angle.cos(), angle.sin());
        let ph = C64::from_polar(s, chi);
        let (vk, vl) = (&self.vectors[k], &self.vectors[l]);
        let mut a = [C64::from(0.0); 8];
        let mut b = [C64::from(0.0); 8];
        for i in 0..8 {
            a[i] = vk[i] * c + ph * vl[i];
            b[i] = -ph.conj() * vk[i] + vl[i] * c;
        }
        (a, b)
    }

    /// One pass over all pairs at the given step; returns whether anything improved.
    fn sweep(&mut self, step: f64) -> bool {
        let n = self.vectors.len();
        let mut improved = false;
        for k in 0..n {
            for l in (k + 1)..n {
                let before = self.costs[k] + self.costs[l];
                for &(angle, chi) in &[
                    (step, 0.0),
                    (-step, 0.0),
                    (step, std::f64::consts::FRAC_PI_2),
                    (-step, std::f64::consts::FRAC_PI_2),
                ] {
                    let (a, b) = self.rotated(k, l, angle, chi);
                    let (ca, cb) = (weighted_entropy(&a, self.pairs), weighted_entropy(&b, self.pairs));
                    if ca + cb < before - 1e-14 {
                        self.vectors[k] = a;
                        self.vectors[l] = b;
                        self.costs[k] = ca;
                        self.costs[l] = cb;
                        improved = true;
                        break;
                    }
                }
            }
        }
        improved
    }

    fn run(mut self) -> f64 {
        let mut step = STEP_START;
        while step >= STEP_MIN {
            let mut sweeps = 0;
            while self.sweep(step) && sweeps < MAX_SWEEPS_PER_STEP {
                sweeps += 1;
            }
            step /= 2.0;
        }
        self.total()
    }
}

/// Haar-random K×K unitary from the QR factors of a complex Gaussian matrix.
fn random_unitary(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(k, k, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution is Haar
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::from(1.0) };
        for i in 0..k {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Minimized average entropy of `center` over pure-state decompositions of `rho`.
pub fn minimize(rho: &DensityMatrix, center: usize, opts: &CorrelationOptions) -> f64 {
    let pairs = center_index_pairs(center);
    let (values, vectors) = hermitian_eigen(rho.matrix());
    let weighted: Vec<[C64; 8]> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > RANK_CUTOFF)
        .map(|(i, &v)| {
            let mut out = [C64::from(0.0); 8];
            for (r, o) in out.iter_mut().enumerate() {
                *o = vectors[(r, i)] * v.sqrt();
            }
            out
        })
        .collect();
    let rank = weighted.len();
    let k = opts.decomposition_rank.max(rank);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::INFINITY;
    for restart in 0..opts.restarts.max(1) {
        let u = if restart == 0 { DMatrix::<C64>::identity(k, k) } else { random_unitary(k, &mut rng) };
        let start: Vec<[C64; 8]> = (0..k)
            .map(|row| {
                let mut out = [C64::from(0.0); 8];
                for (i, w) in weighted.iter().enumerate() {
                    let coeff = u[(row, i)];
                    for (o, x) in out.iter_mut().zip(w) {
                        *o += coeff * x;
                    }
                }
                out
            })
            .collect();
        best = best.min(Search::new(start, &pairs).run());
    }
    best
}
