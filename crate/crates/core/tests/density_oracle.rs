use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use qlat_core::density::{self, count_brute, count_naive, LocalDensity};
use qlat_core::IntegralLattice;

fn scale(p: u64, n: u32, r: usize) -> BigInt {
    num_traits::pow(BigInt::from(p), n as usize * (r - 1))
}

fn lattices() -> Vec<(&'static str, IntegralLattice)> {
    vec![
        ("L5", IntegralLattice::l5()),
        ("U3", IntegralLattice::u3()),
        ("diag(1,1,1,1,3)", IntegralLattice::diagonal_q(&[1, 1, 1, 1, 3]).unwrap()),
        (
            "A2+U+<2>",
            IntegralLattice::from_i64(&[
                vec![2, -1, 0, 0, 0],
                vec![-1, 2, 0, 0, 0],
                vec![0, 0, 0, 1, 0],
                vec![0, 0, 1, 0, 0],
                vec![0, 0, 0, 0, 2],
            ])
            .unwrap(),
        ),
    ]
}

#[test]
fn recursion_matches_brute_force() {
    for (name, lat) in lattices() {
        let r = lat.rank();
        for p in [2u64, 3, 5] {
            let ld = LocalDensity::new(&lat, p).unwrap();
            for n in 0..=2u32 {
                for m in 0..=30i64 {
                    let brute = count_brute(&lat, p, n, m, 1e9).unwrap();
                    let want = BigRational::new(brute.clone(), scale(p, n, r));
                    assert_eq!(ld.mu_general(m, n).unwrap(), want, "{name} general p={p} n={n} m={m}");
                    if ld.maximal {
                        let dv = ld.mu_p(m, n).unwrap();
                        assert_eq!(dv.value, want, "{name} hanke p={p} n={n} m={m}");
                        if let Some((g, b, z)) = dv.parts {
                            assert_eq!(g + b + z, dv.value);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn component_split_matches_naive_enumeration() {
    let lat = IntegralLattice::from_i64(&[vec![2, 1, 0], vec![1, 2, 0], vec![0, 0, 4]]).unwrap();
    for p in [2, 3] {
        for m in 0..10 {
            assert_eq!(count_brute(&lat, p, 2, m, 1e9).unwrap(), count_naive(&lat, p, 2, m).unwrap());
        }
    }
}

#[test]
fn non_maximal_lattices_use_general_reduction() {
    let lat = IntegralLattice::diagonal_q(&[1, 1, 1, 1, 9]).unwrap();
    assert!(!lat.is_maximal_at(3).unwrap());
    let ld = LocalDensity::new(&lat, 3).unwrap();
    for n in 0..=3u32 {
        for m in 0..20i64 {
            let want = BigRational::new(count_brute(&lat, 3, n, m, 1e9).unwrap(), scale(3, n, 5));
            assert_eq!(ld.mu_general(m, n).unwrap(), want, "n={n} m={m}");
            assert_eq!(ld.mu_p(m, n).unwrap().value, want);
        }
    }
    for m in 1..60i64 {
        assert_eq!(ld.mu_limit_recursive(m).unwrap(), ld.mu_limit_general(m).unwrap(), "m={m}");
    }
    let deep = IntegralLattice::diagonal_q(&[1, 3, 27, 243, 2]).unwrap();
    for p in [2u64, 3] {
        let ld = LocalDensity::new(&deep, p).unwrap();
        for m in 1..40i64 {
            assert_eq!(ld.mu_limit_recursive(m).unwrap(), ld.mu_limit_general(m).unwrap(), "p={p} m={m}");
        }
    }
}

#[test]
fn classification_matches_hanke_parts() {
    for (name, lat) in lattices() {
        let r = lat.rank();
        for p in [2u64, 3] {
            let ld = LocalDensity::new(&lat, p).unwrap();
            if !ld.maximal {
                continue;
            }
            for n in 1..=2u32 {
                for m in 0..=18i64 {
                    let (g, b, z) = density::classify_solutions(&lat, p, n, m, 1e9).unwrap();
                    let s = scale(p, n, r);
                    let (pg, pb, pz) = ld.mu_p(m, n).unwrap().parts.unwrap();
                    let tag = format!("{name} p={p} n={n} m={m}");
                    assert_eq!(pg, BigRational::new(g.clone(), s.clone()), "good {tag}");
                    assert_eq!(pb, BigRational::new(b.clone(), s.clone()), "bad {tag}");
                    assert_eq!(pz, BigRational::new(z.clone(), s.clone()), "zero {tag}");
                    if m % p as i64 != 0 {
                        assert!(b.is_zero() && z.is_zero(), "non-good solutions with p∤m: {tag}");
                    }
                    if n >= 2 && m % (p * p) as i64 != 0 {
                        assert!(z.is_zero(), "{tag}");
                    }
                }
            }
        }
    }
}

#[test]
fn unit_form_zero_count_at_nine() {
    let lat = IntegralLattice::diagonal_q(&[1, 1, 1, 1, 1]).unwrap();
    let (g, b, z) = density::classify_solutions(&lat, 3, 2, 9, 1e9).unwrap();
    // Zero type: v = 3y with y free mod 3.
    assert_eq!(z, BigInt::from(243));
    assert!(b.is_zero());
    assert_eq!(g + b + z, count_brute(&lat, 3, 2, 9, 1e9).unwrap());
}

#[test]
fn closed_form_agrees_with_recursion() {
    for (name, lat) in lattices() {
        for p in [3u64, 5, 7, 11] {
            let ld = LocalDensity::new(&lat, p).unwrap();
            if !ld.maximal {
                continue;
            }
            for m in 1..=300i64 {
                for n in 0..=5u32 {
                    assert_eq!(
                        ld.mu_p_closed_form(m, n).unwrap(),
                        ld.mu_p(m, n).unwrap().value,
                        "{name} p={p} m={m} n={n}"
                    );
                }
            }
        }
    }
}

#[test]
fn zero_type_descent() {
    // mu^zero(m, n + 2) = p^{2 - r} mu(m / p^2, n).
    let lat = IntegralLattice::l5();
    for p in [2u64, 3, 5] {
        let ld = LocalDensity::new(&lat, p).unwrap();
        let pp = (p * p) as i64;
        for j in 1..=10i64 {
            let m = pp * j;
            for n in 1..=3u32 {
                let zero = ld.mu_p(m, n + 2).unwrap().parts.unwrap().2;
                let rhs = qlat_core::arith::rat_pow(p, 2 - 5) * ld.mu_p(j, n).unwrap().value;
                assert_eq!(zero, rhs, "p={p} m={m} n={n}");
            }
        }
    }
}

#[test]
fn stabilisation_and_lower_bound() {
    let lat = IntegralLattice::l5();
    for p in [2u64, 3, 5, 7] {
        let ld = LocalDensity::new(&lat, p).unwrap();
        for m in 1..=60i64 {
            let lim = ld.mu_p_limit(m).unwrap();
            for extra in 1..=3 {
                assert_eq!(ld.mu_p(m, lim.w + extra).unwrap().value, lim.value);
            }
            assert_eq!(ld.mu_limit_general(m).unwrap(), lim.value);
            assert_eq!(ld.mu_limit_recursive(m).unwrap(), lim.value);
            for n in 0..=4 {
                assert!(ld.mu_p(m, n).unwrap().value * BigRational::from_integer(2.into()) >= BigRational::one());
            }
        }
    }
}

#[test]
fn local_limit_at_two_against_brute_force() {
    let lat = IntegralLattice::l5();
    let lim = density::mu_p_limit(&lat, 2, 2).unwrap();
    assert_eq!(lim.w, 5);
    let brute = count_brute(&lat, 2, 5, 2, 1e9).unwrap();
    assert_eq!(lim.value, BigRational::new(brute, scale(2, 5, 5)));
}

#[test]
fn count_identity_single_term() {
    let lat = IntegralLattice::l5();
    for p in [3u64, 5, 7, 11, 13] {
        for m in [1i64, 2, 4, 8] {
            let dev = density::check_count_identity(&lat, p, m).unwrap();
            let mu1 = density::mu_p(&lat, p, m, 1).unwrap().value;
            assert_eq!(dev, (BigRational::one() - mu1.recip()).abs());
        }
    }
}

#[test]
fn singular_series_tail_and_positivity() {
    let lat = IntegralLattice::l5();
    let a = density::singular_series(&lat, 1, 50).unwrap();
    let b = density::singular_series(&lat, 1, 100).unwrap();
    assert!(b.error_bound < a.error_bound);
    assert!(a.value > 0.0 && b.value > 0.0);
    assert!((a.value - b.value).abs() <= a.error_bound * a.value);
    assert!(density::singular_series(&lat, 7, 5).is_err());
}
