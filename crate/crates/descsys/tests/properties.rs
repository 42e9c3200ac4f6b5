//! Property tests for the structural invariants that hold for every
//! input: JSON round-trips, supply-rate realness under the input/output
//! mixing, and affinity/hermiticity of the LMI block maps.

mod common;

use descsys::kyp::{self, LmiKind};
use descsys::linalg::{C64, Mat};
use descsys::sim::SupplyRate;
use descsys::sysmodel::{self, DescriptorSystem, TimeDomain};
use proptest::prelude::*;

fn small_entry() -> impl Strategy<Value = f64> {
    prop_oneof![(-3.0f64..3.0), Just(0.0), Just(1.0), Just(-1.0)]
}

fn complex_entry() -> impl Strategy<Value = (f64, f64)> {
    (small_entry(), prop_oneof![(-3.0f64..3.0), Just(0.0)])
}

fn matrix(n: usize, m: usize) -> impl Strategy<Value = Mat> {
    proptest::collection::vec(complex_entry(), n * m).prop_map(move |cells| {
        let rows: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..m).map(|j| C64::new(cells[i * m + j].0, cells[i * m + j].1)).collect())
            .collect();
        Mat::from_rows(&rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_roundtrip_preserves_the_system(
        e in matrix(3, 3),
        a in matrix(3, 3),
        b in matrix(3, 2),
        c in matrix(2, 3),
        d in matrix(2, 2),
    ) {
        let sys = DescriptorSystem::new(e, a, b, c, d, TimeDomain::Discrete).unwrap();
        let text = sysmodel::to_json_string(&sys);
        let (back, warnings) = sysmodel::from_json_str(&text).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(sysmodel::system_hash(&sys), sysmodel::system_hash(&back));
    }

    #[test]
    fn supply_rates_are_real_and_cayley_consistent(
        fv in proptest::collection::vec(complex_entry(), 3),
        ev in proptest::collection::vec(complex_entry(), 3),
    ) {
        let f = Mat::col_from(&fv.iter().map(|&(re, im)| C64::new(re, im)).collect::<Vec<_>>());
        let e = Mat::col_from(&ev.iter().map(|&(re, im)| C64::new(re, im)).collect::<Vec<_>>());
        let s2 = std::f64::consts::SQRT_2;
        let u = (&(&e + &f)).scale(1.0 / s2);
        let y = (&(&e - &f)).scale(1.0 / s2);
        let imp = SupplyRate::impedance(3).supply(&e, &f).unwrap();
        let sca = SupplyRate::scattering(3).supply(&u, &y).unwrap();
        prop_assert!((imp - sca).abs() <= 1e-12 * (1.0 + imp.abs()));
    }

    #[test]
    fn lmi_blocks_stay_hermitian_and_affine(
        a in matrix(3, 3),
        b in matrix(3, 2),
        c in matrix(2, 3),
        d in matrix(2, 2),
        x1 in matrix(3, 3),
        x2 in matrix(3, 3),
    ) {
        let sys = DescriptorSystem::standard(a, b, c, d, TimeDomain::Discrete).unwrap();
        let h1 = x1.hermitian_part();
        let h2 = x2.hermitian_part();
        for kind in [LmiKind::DiscreteImpedance, LmiKind::DiscreteScattering] {
            let p = kyp::build_lmi(&sys, kind).unwrap();
            let w1 = &p.eval_w(&h1)[0];
            let w2 = &p.eval_w(&h2)[0];
            prop_assert!(w1.is_hermitian(1e-9));
            // affinity: W(h1 + h2) - W(h1) = W(h2) - W(0)
            let sum = (&h1 + &h2).hermitian_part();
            let wsum = &p.eval_w(&sum)[0];
            let w0 = &p.eval_w(&Mat::zeros(3, 3))[0];
            let lhs = &(wsum - w1);
            let rhs = &(w2 - w0);
            prop_assert!((lhs - rhs).norm_max() <= 1e-9 * (1.0 + w1.norm_max()));
        }
    }

    #[test]
    fn svd_reconstructs_every_matrix(m in matrix(4, 3)) {
        let svd = m.svd().unwrap();
        let resid = (&m - &svd.reconstruct()).norm_fro();
        prop_assert!(resid <= 1e-10 * (1.0 + m.norm_fro()));
        prop_assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1] - 1e-15));
    }
}
