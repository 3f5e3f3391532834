//! Bipartite and tripartite correlation measures.
//!
//! Pairs of qubits are handled in closed form (Wootters concurrence and the
//! entanglement of formation derived from it). Negativities come from the
//! spectrum of the partial transpose. The entanglement of formation between
//! one site and the other two is the pure-state entropy when the global
//! state is nearly pure, and a numerical convex-roof estimate otherwise
//! (see [`convex_roof`]).

pub mod convex_roof;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layout::SiteLayout;
use crate::state::{hermitian_eigenvalues, hermitian_map, DensityMatrix};
use crate::C64;

/// Eigenvalues in [−EIGEN_FLOOR, 0) are numerical noise and clamp to zero
/// before logarithms and square roots.
pub const EIGEN_FLOOR: f64 = 1e-10;

fn check_sites(layout: &SiteLayout, sites: &[usize]) -> Result<Vec<usize>> {
    if sites.is_empty() {
        return Err(Error::Selection("empty".into()));
    }
    let mut s = sites.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != sites.len() || *s.last().unwrap() >= layout.n_sites() {
        return Err(Error::Selection(format!("{sites:?}")));
    }
    Ok(s)
}

/// Reduced state on `keep` (sites in ascending order in the result).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    let keep = check_sites(layout, keep)?;
    let traced: Vec<usize> = (0..layout.n_sites()).filter(|s| !keep.contains(s)).collect();
    let sub = layout.restrict(&keep);
    let env = layout.restrict(&traced);
    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(sub.dim(), sub.dim());
    // enumerate environment configurations once and reuse them for every kept pair
    let full_index = |kept_idx: usize, env_idx: usize| -> usize {
        let mut digits = vec![0; layout.n_sites()];
        for (k, &s) in keep.iter().enumerate() {
            digits[s] = sub.digit(kept_idx, k);
        }
        for (k, &s) in traced.iter().enumerate() {
            digits[s] = env.digit(env_idx, k);
        }
        layout.index(&digits)
    };
    let table: Vec<Vec<usize>> = (0..env.dim()).map(|e| (0..sub.dim()).map(|k| full_index(k, e)).collect()).collect();
    for row in &table {
        for c in 0..sub.dim() {
            for r in 0..sub.dim() {
                out[(r, c)] += m[(row[r], row[c])];
            }
        }
    }
    Ok(DensityMatrix::from_parts(sub, out))
}

/// Partial transpose with respect to the sites in `subsystem`.
/// ⟨a_A, b|ρ^{T_A}|c_A, e⟩ = ⟨c_A, b|ρ|a_A, e⟩; an exact involution.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: &[usize]) -> Result<DMatrix<C64>> {
    let layout = rho.layout();
    let sites = check_sites(layout, subsystem)?;
    let n = layout.dim();
    // mask picks out the digits of the transposed sites
    let swap = |r: usize, c: usize| -> (usize, usize) {
        let (mut r2, mut c2) = (r, c);
        for &s in &sites {
            let st = layout.stride(s);
            let (dr, dc) = (layout.digit(r, s), layout.digit(c, s));
            r2 = r2 - dr * st + dc * st;
            c2 = c2 - dc * st + dr * st;
        }
        (r2, c2)
    };
    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let (r2, c2) = swap(r, c);
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Two-sided split of the sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
}

impl Bipartition {
    /// `site` against everything else.
    pub fn one_vs_rest(site: usize, n_sites: usize) -> Self {
        Bipartition { side_a: vec![site], side_b: (0..n_sites).filter(|&s| s != site).collect() }
    }

    /// Label such as `1-23` (1-based).
    pub fn label(&self) -> String {
        let fmt = |v: &[usize]| v.iter().map(|s| (s + 1).to_string()).collect::<String>();
        format!("{}-{}", fmt(&self.side_a), fmt(&self.side_b))
    }

    fn validate(&self, n_sites: usize) -> Result<()> {
        let mut all: Vec<usize> = self.side_a.iter().chain(&self.side_b).copied().collect();
        all.sort_unstable();
        if self.side_a.is_empty() || self.side_b.is_empty() || all != (0..n_sites).collect::<Vec<_>>() {
            return Err(Error::Selection(self.label()));
        }
        Ok(())
    }
}

/// Negative partial-transpose eigenvalues above −NEGATIVITY_FLOOR are
/// eigensolver round-off. Without the cut, the cube root in the tripartite
/// negativity turns 1e-17 noise into 1e-6.
pub const NEGATIVITY_FLOOR: f64 = 1e-13;

/// −2 × (sum of negative eigenvalues of ρ^{T_A}).
pub fn negativity(rho: &DensityMatrix, bipartition: &Bipartition) -> Result<f64> {
    bipartition.validate(rho.layout().n_sites())?;
    let pt = partial_transpose(rho, &bipartition.side_a)?;
    let neg: f64 = hermitian_eigenvalues(&pt).into_iter().filter(|&x| x < -NEGATIVITY_FLOOR).sum();
    Ok((-2.0 * neg).max(0.0))
}

/// Geometric mean of the three one-vs-rest negativities.
pub fn tripartite_negativity(rho: &DensityMatrix) -> Result<f64> {
    if rho.layout().n_sites() != 3 {
        return Err(Error::Selection("tripartite negativity needs three sites".into()));
    }
    let mut product = 1.0;
    for s in 0..3 {
        product *= negativity(rho, &Bipartition::one_vs_rest(s, 3))?;
    }
    Ok(product.cbrt())
}

fn require_two_qubits(rho: &DensityMatrix, what: &'static str) -> Result<()> {
    if rho.site_dims() != [2, 2] {
        return Err(Error::QubitOnly(what));
    }
    Ok(())
}

/// (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y).
pub fn spin_flip(m: &DMatrix<C64>) -> DMatrix<C64> {
    // σ_y ⊗ σ_y is real: anti-diagonal (−1, 1, 1, −1)
    let yy = DMatrix::<C64>::from_fn(4, 4, |r, c| {
        if r + c == 3 {
            C64::from(if r == 0 || r == 3 { -1.0 } else { 1.0 })
        } else {
            C64::from(0.0)
        }
    });
    &yy * m.conjugate() * &yy
}

/// Wootters concurrence of a two-qubit state.
///
/// λ_i are the eigenvalues of R = sqrt(√ρ ρ̃ √ρ) in decreasing order and
/// C = max{0, λ₁ − λ₂ − λ₃ − λ₄}.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho, "concurrence")?;
    rho.check_positive(1e-8)?;
    let sqrt_rho = hermitian_map(rho.matrix(), |x| if x > 0.0 { x.sqrt() } else { 0.0 });
    let inner = &sqrt_rho * spin_flip(rho.matrix()) * &sqrt_rho;
    let mut lambdas: Vec<f64> =
        hermitian_eigenvalues(&inner).into_iter().map(|x| if x > 0.0 { x.sqrt() } else { 0.0 }).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// How the binary-entropy argument h is built from the concurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EofFormula {
    /// h = (1 + sqrt(1 − C²))/2.
    Wootters,
    /// h = (1 + sqrt(1 − C))/2, kept for comparison.
    Literal,
}

impl EofFormula {
    pub fn as_str(self) -> &'static str {
        match self {
            EofFormula::Wootters => "wootters",
            EofFormula::Literal => "literal",
        }
    }
}

/// −x log₂ x − (1−x) log₂(1−x).
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

pub fn eof_from_concurrence(c: f64, formula: EofFormula) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 {
        return 0.0;
    }
    let arg = match formula {
        EofFormula::Wootters => 1.0 - c * c,
        EofFormula::Literal => 1.0 - c,
    };
    binary_entropy((1.0 + arg.max(0.0).sqrt()) / 2.0)
}

/// Entanglement of formation of a two-qubit state.
pub fn eof_two_qubit(rho: &DensityMatrix, formula: EofFormula) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(rho)?, formula))
}

/// von Neumann entropy in bits.
pub fn entropy(rho: &DensityMatrix) -> f64 {
    hermitian_eigenvalues(rho.matrix())
        .into_iter()
        .map(|x| if (-EIGEN_FLOOR..0.0).contains(&x) { 0.0 } else { x })
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.log2())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EofEstimate {
    pub value: f64,
    /// True when the value is a numerical convex-roof upper bound rather
    /// than the exact pure-state formula.
    pub estimated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationOptions {
    pub eof_formula: EofFormula,
    /// States with purity above 1 − threshold use the pure-state formula.
    pub purity_threshold: f64,
    pub restarts: usize,
    /// Number of pure states in a trial decomposition.
    pub decomposition_rank: usize,
    pub seed: u64,
    /// Whether [`correlation_report`] should evaluate the (costly) one-vs-two EoF.
    pub with_monogamy: bool,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            eof_formula: EofFormula::Wootters,
            purity_threshold: 1e-3,
            restarts: 32,
            decomposition_rank: 8,
            seed: 0,
            with_monogamy: true,
        }
    }
}

/// EoF between `center` and the remaining two qubits.
pub fn eof_one_vs_two(rho: &DensityMatrix, center: usize, opts: &CorrelationOptions) -> Result<EofEstimate> {
    if rho.site_dims() != [2, 2, 2] {
        return Err(Error::QubitOnly("one-vs-two entanglement of formation"));
    }
    if center > 2 {
        return Err(Error::Selection(format!("site {}", center + 1)));
    }
    if rho.purity() > 1.0 - opts.purity_threshold {
        let marginal = partial_trace(rho, &[center])?;
        return Ok(EofEstimate { value: entropy(&marginal), estimated: false });
    }
    let value = convex_roof::minimize(rho, center, opts);
    Ok(EofEstimate { value, estimated: true })
}

/// M₂ = Ē²_{2,13} − Ē²_{2,1} − Ē²_{2,3}, centred on site 2 (index 1).
pub fn monogamy_m2(rho: &DensityMatrix, opts: &CorrelationOptions) -> Result<EofEstimate> {
    let joint = eof_one_vs_two(rho, 1, opts)?;
    let e21 = eof_two_qubit(&partial_trace(rho, &[0, 1])?, opts.eof_formula)?;
    let e23 = eof_two_qubit(&partial_trace(rho, &[1, 2])?, opts.eof_formula)?;
    Ok(EofEstimate { value: joint.value.powi(2) - e21.powi(2) - e23.powi(2), estimated: joint.estimated })
}

/// All correlation measures of one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport {
    pub t: f64,
    /// Site pairs (j, k), j < k.
    pub pairs: Vec<(usize, usize)>,
    pub concurrence: Vec<f64>,
    pub eof: Vec<f64>,
    pub negativity: Vec<(Bipartition, f64)>,
    pub tripartite_negativity: Option<f64>,
    pub eof_2_vs_13: Option<EofEstimate>,
    pub monogamy_m2: Option<f64>,
    pub purity_global: f64,
}

/// Every measure that applies to the state. Concurrence and EoF need qubit
/// sites and are left empty otherwise; Ē_{2,13} and M₂ need three qubits
/// and `opts.with_monogamy`.
pub fn correlation_report(rho: &DensityMatrix, t: f64, opts: &CorrelationOptions) -> Result<CorrelationReport> {
    let n = rho.layout().n_sites();
    let qubits = rho.site_dims().iter().all(|&d| d == 2);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| ((j + 1)..n).map(move |k| (j, k))).collect();
    let mut concurrences = Vec::new();
    let mut eofs = Vec::new();
    if qubits {
        for &(j, k) in &pairs {
            let reduced = if n == 2 { rho.clone() } else { partial_trace(rho, &[j, k])? };
            let c = concurrence(&reduced)?;
            concurrences.push(c);
            eofs.push(eof_from_concurrence(c, opts.eof_formula));
        }
    }
    let mut negativities = Vec::new();
    let sides: Vec<usize> = if n == 2 { vec![0] } else { (0..n).collect() };
    for s in sides {
        let b = Bipartition::one_vs_rest(s, n);
        let v = negativity(rho, &b)?;
        negativities.push((b, v));
    }
    let tripartite = (n == 3).then(|| negativities.iter().map(|(_, v)| v).product::<f64>().cbrt());
    let (eof_2_vs_13, m2) = if qubits && n == 3 && opts.with_monogamy {
        let joint = eof_one_vs_two(rho, 1, opts)?;
        // pairs are (0,1), (0,2), (1,2)
        let (e21, e23) = (eofs[0], eofs[2]);
        (Some(joint), Some(joint.value.powi(2) - e21.powi(2) - e23.powi(2)))
    } else {
        (None, None)
    };
    Ok(CorrelationReport {
        t,
        pairs: if qubits { pairs } else { Vec::new() },
        concurrence: concurrences,
        eof: eofs,
        negativity: negativities,
        tripartite_negativity: tripartite,
        eof_2_vs_13,
        monogamy_m2: m2,
        purity_global: rho.purity(),
    })
}
