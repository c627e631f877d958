use num_bigint::BigInt;
use num_rational::BigRational;
use qlat_core::chains::{square_class, ChainModel};
use qlat_core::IntegralLattice;

/// Representations of `m` as a sum of five squares, by direct search.
fn r5(m: i64) -> u64 {
    let b = (m as f64).sqrt() as i64 + 1;
    let mut c = 0;
    for a in -b..=b {
        for b2 in -b..=b {
            let s2 = a * a + b2 * b2;
            if s2 > m {
                continue;
            }
            for c3 in -b..=b {
                let s3 = s2 + c3 * c3;
                if s3 > m {
                    continue;
                }
                for d in -b..=b {
                    let rest = m - s3 - d * d;
                    if rest < 0 {
                        continue;
                    }
                    let e = (rest as f64).sqrt().round() as i64;
                    if e * e == rest {
                        c += if e == 0 { 1 } else { 2 };
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

#[test]
fn scaled_chain_counts_match_sums_of_squares() {
    let model = unit_chain();
    for m in [1i64, 5, 25, 50, 75, 100, 125] {
        let mut want = 0;
        let mut q = m;
        loop {
            want += r5(q);
            if q % 25 != 0 {
                break;
            }
            q /= 25;
        }
        let got = model.local_intersection(m as i128).unwrap();
        assert_eq!(got, BigRational::from_integer(BigInt::from(want)), "m={m}");
    }
}

#[test]
fn total_count_is_the_sum_over_levels() {
    let model = unit_chain();
    let x = 60u64;
    let want: u64 = (1..x as i64).map(|m| {
        let mut s = 0;
        let mut q = m;
        loop {
            s += r5(q);
            if q % 25 != 0 {
                break;
            }
            q /= 25;
        }
        s
    }).sum();
    assert_eq!(model.total_count_below(x).unwrap(), want);
}

#[test]
fn model_text_round_trip() {
    let base = IntegralLattice::diagonal_q(&[1, 1, 2, 3]).unwrap();
    let model = ChainModel::random(base, 7, 2, 1, 2, 40, 5).unwrap();
    let back = ChainModel::parse(&model.to_text()).unwrap();
    assert_eq!(back.to_text(), model.to_text());
    for n in [1, 4, 9] {
        assert_eq!(back.level(n).unwrap().index, model.level(n).unwrap().index);
    }
}

#[test]
fn summed_counts_agree_with_square_class() {
    let model = unit_chain();
    let (d, x) = (1, 40);
    let s = square_class(d, x);
    let level1: u64 = s.iter().map(|&m| r5(m as i64)).sum();
    // level 2 is 5 Z^5
    let level2: u64 = s.iter().filter(|&&m| m % 25 == 0).map(|&m| r5(m as i64 / 25)).sum();
    assert_eq!(model.summed_counts(d, x, 1, 2).unwrap(), level1 + level2);
}
