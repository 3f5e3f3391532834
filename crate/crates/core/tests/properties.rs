use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use trimem::experiment::{parse_config, preset, print_config};
use trimem::{
    concurrence, monogamy_m2, negativity, partial_trace, tripartite_negativity, Bipartition, CorrelationOptions,
    DensityMatrix, C64,
};

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn pure(dims: &[usize], amps: &[(f64, f64)]) -> Option<DensityMatrix> {
    let v = DVector::from_iterator(amps.len(), amps.iter().map(|&(r, i)| C64::new(r, i)));
    (v.norm() > 1e-3).then(|| DensityMatrix::from_pure(dims, &v).unwrap())
}

/// exp(−i(αX + βY + γZ)) on one qubit.
fn su2(a: f64, b: f64, c: f64) -> DMatrix<C64> {
    let n = (a * a + b * b + c * c).sqrt();
    let (cos, sin) = (n.cos(), if n > 0.0 { n.sin() / n } else { 1.0 });
    let i = C64::new(0.0, 1.0);
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::from(cos) - i * c * sin, (-i * a - b) * sin, (-i * a + b) * sin, C64::from(cos) + i * c * sin],
    )
}

fn apply_local(rho: &DensityMatrix, us: &[DMatrix<C64>]) -> DensityMatrix {
    let mut u = DMatrix::<C64>::identity(1, 1);
    for op in us.iter().rev() {
        u = u.kronecker(op);
    }
    let m = &u * rho.matrix() * u.adjoint();
    DensityMatrix::new(rho.site_dims(), m).unwrap()
}

fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_is_local_unitary_invariant(
        amps in complex_vec(4), mix in 0.0..1.0f64, u1 in angles(), u2 in angles()
    ) {
        let Some(psi) = pure(&[2, 2], &amps) else { return Ok(()) };
        let m = psi.matrix() * C64::from(mix) + DMatrix::<C64>::identity(4, 4) * C64::from((1.0 - mix) / 4.0);
        let rho = DensityMatrix::new(&[2, 2], m).unwrap();
        let rotated = apply_local(&rho, &[su2(u1.0, u1.1, u1.2), su2(u2.0, u2.1, u2.2)]);
        let (a, b) = (concurrence(&rho).unwrap(), concurrence(&rotated).unwrap());
        prop_assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn negativities_are_local_unitary_invariant(
        amps in complex_vec(8), u1 in angles(), u2 in angles(), u3 in angles()
    ) {
        let Some(rho) = pure(&[2, 2, 2], &amps) else { return Ok(()) };
        let rotated = apply_local(&rho, &[su2(u1.0, u1.1, u1.2), su2(u2.0, u2.1, u2.2), su2(u3.0, u3.1, u3.2)]);
        for site in 0..3 {
            let b = Bipartition::one_vs_rest(site, 3);
            let (x, y) = (negativity(&rho, &b).unwrap(), negativity(&rotated, &b).unwrap());
            prop_assert!((x - y).abs() <= 1e-9);
        }
        let (x, y) = (tripartite_negativity(&rho).unwrap(), tripartite_negativity(&rotated).unwrap());
        prop_assert!((x - y).abs() <= 1e-8);
    }

    #[test]
    fn product_mixtures_show_no_entanglement(
        parts in proptest::collection::vec((complex_vec(2), complex_vec(2), complex_vec(2), 0.01..1.0f64), 1..5)
    ) {
        let mut m = DMatrix::<C64>::zeros(8, 8);
        let mut total = 0.0;
        for (a, b, c, w) in &parts {
            let (Some(a), Some(b), Some(c)) = (pure(&[2], a), pure(&[2], b), pure(&[2], c)) else { return Ok(()) };
            m += a.tensor(&b).tensor(&c).matrix() * C64::from(*w);
            total += w;
        }
        let rho = DensityMatrix::new(&[2, 2, 2], m / C64::from(total)).unwrap();
        for site in 0..3 {
            prop_assert!(negativity(&rho, &Bipartition::one_vs_rest(site, 3)).unwrap() <= 1e-9);
        }
        for pair in [[0, 1], [0, 2], [1, 2]] {
            prop_assert!(concurrence(&partial_trace(&rho, &pair).unwrap()).unwrap() <= 1e-7);
        }
    }

    #[test]
    fn squared_eof_is_monogamous_on_pure_states(amps in complex_vec(8)) {
        let Some(rho) = pure(&[2, 2, 2], &amps) else { return Ok(()) };
        let m2 = monogamy_m2(&rho, &CorrelationOptions::default()).unwrap();
        prop_assert!(!m2.estimated);
        prop_assert!(m2.value >= -1e-9, "{}", m2.value);
    }

    #[test]
    fn partial_trace_preserves_trace_and_reduces_consistently(amps in complex_vec(8)) {
        let Some(rho) = pure(&[2, 2, 2], &amps) else { return Ok(()) };
        let r01 = partial_trace(&rho, &[0, 1]).unwrap();
        prop_assert!((r01.trace().re - 1.0).abs() <= 1e-12);
        let direct = partial_trace(&rho, &[0]).unwrap();
        let nested = partial_trace(&r01, &[0]).unwrap();
        prop_assert!((direct.matrix() - nested.matrix()).norm() <= 1e-12);
    }

    #[test]
    fn config_print_parse_round_trip(
        caps in proptest::collection::vec(1.0..9.0f64, 3), l12 in 0.5..5.0f64, l23 in 0.5..5.0f64,
        theta in 0.0..3.1f64, truncation in 2usize..6, seed in any::<u64>()
    ) {
        let mut c = preset("fig2c").unwrap().remove(0);
        c.circuit.cap_sigma = caps.iter().map(|x| x * 1e-15).collect();
        c.circuit.set_coupler(0, 1, Some(l12 * 1e-6));
        c.circuit.set_coupler(1, 2, Some(l23 * 1e-6));
        c.circuit.theta[1] = theta;
        c.truncation = truncation;
        c.seed = seed;
        let again = parse_config(&print_config(&c)).unwrap();
        prop_assert_eq!(again, c);
    }
}
