use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use orbifold_arith::arith::prime_divisors;
use orbifold_arith::localfields::*;
use orbifold_arith::poly::Poly;

fn diagonal(coeffs: &[i64]) -> Poly {
    let n = coeffs.len();
    Poly::from_terms(
        n,
        coeffs.iter().enumerate().map(|(i, &c)| {
            let mut e = vec![0u32; n];
            e[i] = 2;
            (e, c)
        }),
    )
    .unwrap()
}

fn rational() -> impl Strategy<Value = BigRational> {
    ((-100i64..=100).prop_filter("nonzero", |n| *n != 0), 1i64..=100)
        .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn place() -> impl Strategy<Value = Place> {
    prop::sample::select(vec![Place::Real, Place::Finite(2), Place::Finite(3), Place::Finite(5), Place::Finite(7), Place::Finite(11)])
}

fn places_for(xs: &[&BigRational]) -> Vec<Place> {
    let mut n = BigInt::from(2);
    for x in xs {
        n *= x.numer() * x.denom();
    }
    if n < BigInt::from(0) {
        n = -n;
    }
    let mut out = vec![Place::Real];
    out.extend(prime_divisors(&n).unwrap().into_iter().map(|q| Place::Finite(q.try_into().unwrap())));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn symmetric_and_bimultiplicative(a in rational(), a2 in rational(), b in rational(), v in place()) {
        let h = |x: &BigRational, y: &BigRational| hilbert_symbol(x, y, v).unwrap();
        prop_assert_eq!(h(&a, &b), h(&b, &a));
        prop_assert_eq!(h(&(&a * &a2), &b), h(&a, &b) * h(&a2, &b));
    }

    #[test]
    fn standard_identities(a in rational(), v in place()) {
        prop_assert_eq!(hilbert_symbol(&a, &-a.clone(), v).unwrap(), 1);
        let one = BigRational::from_integer(BigInt::from(1));
        prop_assume!(a != one);
        prop_assert_eq!(hilbert_symbol(&a, &(&one - &a), v).unwrap(), 1);
    }

    #[test]
    fn product_formula(a in rational(), b in rational()) {
        let prod: i8 = places_for(&[&a, &b]).into_iter().map(|v| hilbert_symbol(&a, &b, v).unwrap()).product();
        prop_assert_eq!(prod, 1);
    }

    #[test]
    fn verdicts_stable_in_depth(c in prop::collection::vec((-40i64..=40).prop_filter("nonzero", |c| *c != 0), 3..=4), p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let f = diagonal(&c);
        let shallow = zp_points_on_hypersurface(&f, p, 6).unwrap();
        let deep = zp_points_on_hypersurface(&f, p, 10).unwrap();
        prop_assert!(!(shallow.is_yes() && deep.is_no()));
        prop_assert!(!(shallow.is_no() && deep.is_yes()));
    }

    #[test]
    fn isotropy_matches_residue_search(c in prop::collection::vec((-60i64..=60).prop_filter("nonzero", |c| *c != 0), 3..=4), p in prop::sample::select(vec![2u64, 3, 5, 7, 13])) {
        let form: Vec<BigInt> = c.iter().map(|&x| BigInt::from(x)).collect();
        let verdict = zp_points_on_hypersurface(&diagonal(&c), p, 14).unwrap();
        prop_assume!(!matches!(verdict, SolubilityVerdict::Inconclusive { .. }));
        prop_assert_eq!(is_isotropic_local(&form, Place::Finite(p)).unwrap(), verdict.is_yes());
    }
}

#[test]
fn hilbert_symbol_matches_residue_search() {
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29] {
        for a in (-30i64..=30).filter(|&a| a != 0) {
            for b in (-30i64..=30).filter(|&b| b != 0) {
                let s = hilbert_symbol_int(&BigInt::from(a), &BigInt::from(b), Place::Finite(p)).unwrap();
                let v = zp_points_on_hypersurface(&diagonal(&[-a, -b, 1]), p, 12).unwrap();
                assert!(!matches!(v, SolubilityVerdict::Inconclusive { .. }), "({a},{b})_{p} inconclusive");
                assert_eq!(s == 1, v.is_yes(), "({a},{b})_{p}");
            }
        }
    }
}

/// Primitive zeros of x² + y² + z² modulo p^k, by exhaustion.
fn primitive_zeros(p: u64, k: u32) -> Vec<[u64; 3]> {
    let q = p.pow(k);
    let mut out = Vec::new();
    for x in 0..q {
        for y in 0..q {
            for z in 0..q {
                if (x * x + y * y + z * z) % q == 0 && [x, y, z].iter().any(|c| c % p != 0) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

#[test]
fn sum_of_three_squares_by_exhaustion() {
    let f = diagonal(&[1, 1, 1]);
    // p = 3: zeros mod 27 with a unit coordinate, whose partial 2x is a unit, lift
    let zeros = primitive_zeros(3, 3);
    assert!(!zeros.is_empty());
    assert!(zp_points_on_hypersurface(&f, 3, 12).unwrap().is_yes());
    // p = 2: a sum of three squares with one odd term is never 0 mod 8
    assert!(primitive_zeros(2, 3).is_empty());
    let v = zp_points_on_hypersurface(&f, 2, 12).unwrap();
    assert!(v.is_no(), "{v:?}");
    assert!(is_isotropic_local(&[1, 1, 1].map(BigInt::from), Place::Finite(3)).unwrap());
    assert!(!is_isotropic_local(&[1, 1, 1].map(BigInt::from), Place::Finite(2)).unwrap());
}

#[test]
fn certificates_lift_to_true_roots() {
    for (coeffs, p) in [(vec![1, 1, -2], 7u64), (vec![3, -5, 7, -11], 3), (vec![1, -17], 2)] {
        let f = diagonal(&coeffs);
        if let SolubilityVerdict::Yes { certificate } = zp_points_on_hypersurface(&f, p, 12).unwrap() {
            let x = lift_certificate(&f, &certificate, 30);
            let value = f.eval(&x);
            let modulus = BigInt::from(p).pow(30);
            assert_eq!(value % &modulus, BigInt::from(0), "{coeffs:?} at {p}");
        } else {
            panic!("{coeffs:?} should be soluble at {p}");
        }
    }
}
