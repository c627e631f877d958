use qlat::ledger::{aggregate, finite_sum, ledger_row, run_ledger, LedgerParams};
use qlat_core::chains::ChainModel;
use qlat_core::green::Archimedean;
use qlat_core::{IntegralLattice, PeriodPoint};

fn r5(m: i64) -> u64 {
    let b = (m as f64).sqrt() as i64;
    let mut c = 0;
    let range = -b..=b;
    for x in range.clone() {
        for y in range.clone() {
            for z in range.clone() {
                for w in range.clone() {
                    let rest = m - x * x - y * y - z * z - w * w;
                    if rest >= 0 {
                        let v = (rest as f64).sqrt().round() as i64;
                        if v * v == rest {
                            c += if v == 0 { 1 } else { 2 };
                        }
                    }
                }
            }
        }
    }
    c
}

fn unit_chain() -> ChainModel {
    ChainModel::new(IntegralLattice::diagonal_q(&[1; 5]).unwrap(), 5, 1, 1, vec![], 64, 1).unwrap()
}

fn params() -> LedgerParams {
    LedgerParams {
        d: 1,
        kappa: 0.0,
        h_omega: 1.0,
        cusp_bound_constant: 1.0,
        aut: 1,
        shellmax: 4,
    }
}

#[test]
fn finite_sum_of_the_empty_core_counts_sums_of_squares() {
    let chains = [unit_chain()];
    for m in [4i64, 9, 25, 49, 100] {
        let mut want = 0;
        let mut q = m;
        loop {
            want += r5(q);
            if q % 25 != 0 {
                break;
            }
            q /= 25;
        }
        let got = finite_sum(&chains, m).unwrap();
        assert!((got - want as f64 * 5f64.ln()).abs() < 1e-9 * got, "m={m}");
    }
}

#[test]
fn rows_are_ordered_and_consistent() {
    let l5 = IntegralLattice::l5();
    let pt = PeriodPoint::random(&l5, 7).unwrap();
    let ar = Archimedean::new(&l5, &pt).unwrap();
    let chains = [unit_chain()];
    let rows = run_ledger(&ar, &chains, &params(), 1..=6);
    let ms: Vec<i64> = rows.iter().map(|r| r.m).collect();
    assert_eq!(ms, vec![1, 4, 9, 16, 25, 36]);
    for r in &rows {
        assert!(r.flag.is_empty(), "{}", r.flag);
        let resid = r.archimedean_sum + r.finite_sum - r.height_estimate;
        assert!((r.residual - resid).abs() <= 1e-12 * resid.abs().max(1.0));
        assert_eq!(*r, ledger_row(&ar, &chains, &params(), r.m));
    }
    let aggs = aggregate(&rows, 1, 3, &[4, 8, 16]);
    assert_eq!(aggs.iter().map(|a| a.count).collect::<Vec<_>>(), vec![1, 1, 2]);
    assert!(!aggs[0].partial);
    let in16: f64 = rows.iter().filter(|r| r.m == 16 || r.m == 25).map(|r| r.finite_sum).sum();
    assert_eq!(aggs[2].finite, in16);
}

#[test]
fn failed_rows_carry_a_flag() {
    let l5 = IntegralLattice::l5();
    let pt = PeriodPoint::random(&l5, 7).unwrap();
    let ar = Archimedean::new(&l5, &pt).unwrap();
    // m = 2 is not of the form D j^2 for D = 1, so the sigma factor refuses it
    let row = ledger_row(&ar, &[unit_chain()], &params(), 2);
    assert!(!row.flag.is_empty());
    assert!(row.residual.is_nan());
}
