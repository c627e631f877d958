use proptest::prelude::*;
use qlat_core::density::LocalDensity;
use qlat_core::{arith, Enumerator, IntegralLattice, PeriodPoint};
use std::sync::OnceLock;

fn l5_enum() -> &'static (IntegralLattice, PeriodPoint, Enumerator) {
    static E: OnceLock<(IntegralLattice, PeriodPoint, Enumerator)> = OnceLock::new();
    E.get_or_init(|| {
        let l5 = IntegralLattice::l5();
        let pt = PeriodPoint::random(&l5, 3).unwrap();
        let en = Enumerator::new(&l5, &pt).unwrap();
        (l5, pt, en)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn representations_lie_on_the_quadric(m in 1i64..60, t in 0.2f64..4.0) {
        let (l5, pt, en) = l5_enum();
        let reps = en.representations_with_qx(m as i128, t).unwrap();
        prop_assert_eq!(reps.len() as u64, en.count_thresholds(m as i128, &[t]).unwrap()[0]);
        for (v, qx) in &reps {
            prop_assert_eq!(l5.q(v), m as i128);
            prop_assert!((qx - pt.q_x_int(v)).abs() < 1e-6 * m as f64);
            prop_assert!(-qx <= t * m as f64 + 1e-9);
        }
    }

    #[test]
    fn counts_grow_with_the_threshold(m in 1i64..80, t in 0.1f64..3.0) {
        let (_, _, en) = l5_enum();
        let c = en.count_thresholds(m as i128, &[t, 2.0 * t]).unwrap();
        prop_assert!(c[0] <= c[1]);
    }

    #[test]
    fn closed_form_equals_recursion(m in 1i64..400, n in 0u32..5, pi in 0usize..3) {
        let p = [3u64, 5, 7][pi];
        let ld = LocalDensity::new(&IntegralLattice::l5(), p).unwrap();
        prop_assert_eq!(ld.mu_p_closed_form(m, n).unwrap(), ld.mu_p(m, n).unwrap().value);
    }

    #[test]
    fn kronecker_is_multiplicative_in_the_top(a in -200i64..200, m in 1i64..60, n in 1i64..60) {
        prop_assert_eq!(
            arith::kronecker(a, m * n),
            arith::kronecker(a, m) * arith::kronecker(a, n)
        );
    }

    #[test]
    fn jordan_valuations_account_for_the_determinant(q in proptest::collection::vec(1i128..30, 3..6), pi in 0usize..3) {
        let p = [3u64, 5, 7][pi];
        let lat = IntegralLattice::diagonal_q(&q).unwrap();
        let js = lat.jordan(p, 30).unwrap();
        let total: u32 = js.blocks.iter().map(|b| b.nu * b.dim as u32).sum();
        prop_assert_eq!(total, arith::val_big(&lat.det(), p));
        prop_assert_eq!(js.rank(), lat.rank());
    }
}
