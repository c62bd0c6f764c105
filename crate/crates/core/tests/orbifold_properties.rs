use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orbifold_arith::arith::primes_up_to;
use orbifold_arith::orbifold::*;

fn plane(weights: [Weight; 3]) -> OrbifoldModelZ {
    OrbifoldModelZ::hypersurface(
        &["x", "y", "z"],
        "",
        &[("x", weights[0]), ("y - 2z", weights[1]), ("x^2 + y*z - 3z^2", weights[2])],
    )
    .unwrap()
}

fn weight(rng: &mut ChaCha8Rng) -> Weight {
    match rng.gen_range(0..8) {
        0 => Weight::Infinite,
        m => Weight::Finite(m),
    }
}

fn random_point(rng: &mut ChaCha8Rng, range: i64) -> ProjPointQ {
    loop {
        let raw: Vec<i64> = (0..3).map(|_| rng.gen_range(-range..=range)).collect();
        if raw.iter().any(|&c| c != 0) {
            return ProjPointQ::from_i64(&raw).unwrap();
        }
    }
}

#[test]
fn flag_chain_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let primes = [2u64, 3, 5, 7];
    for _ in 0..10_000 {
        let model = plane([weight(&mut rng), weight(&mut rng), weight(&mut rng)]);
        // powers of small primes make high multiplicities common
        let base = random_point(&mut rng, 6);
        let scale = primes[rng.gen_range(0..4)].pow(rng.gen_range(0..6));
        let raw: Vec<BigInt> = base.coords().iter().enumerate().map(|(i, c)| if i == 0 { c * scale } else { c.clone() }).collect();
        let Ok(point) = normalize_point(&raw) else { continue };
        let p = primes[rng.gen_range(0..4)];
        let c = classify_local(&point, &model, p).unwrap();
        assert!(!c.integral || c.darmon, "{point} {c:?}");
        assert!(!c.darmon || c.campana, "{point} {c:?}");
        assert!(!c.campana || c.weak_campana, "{point} {c:?}");
        let g = classify_global(&point, &model).unwrap();
        assert!(!g.integral || g.darmon);
        assert!(!g.darmon || g.campana);
        assert!(!g.campana || g.weak_campana);
    }
}

proptest! {
    #[test]
    fn classification_ignores_rescaling(x in -40i64..40, y in -40i64..40, z in -40i64..40, k in prop::sample::select(vec![-12i64, -1, 2, 3, 8, 25, 49])) {
        prop_assume!(x != 0 || y != 0 || z != 0);
        let model = plane([Weight::Finite(2), Weight::Finite(3), Weight::Infinite]);
        let p = ProjPointQ::from_i64(&[x, y, z]).unwrap();
        let scaled = ProjPointQ::from_i64(&[k * x, k * y, k * z]).unwrap();
        prop_assert_eq!(&p, &scaled);
        prop_assert_eq!(classify_global(&p, &model).unwrap(), classify_global(&scaled, &model).unwrap());
    }

    #[test]
    fn weight_monotonicity(x in -300i64..300, y in -300i64..300, z in 1i64..300, m in 2u64..7, j in 1u64..4) {
        let p = ProjPointQ::from_i64(&[x, y, z]).unwrap();
        let at = |w: u64| classify_global(&p, &plane([Weight::Finite(w), Weight::Finite(w), Weight::Finite(w)])).unwrap();
        let hi = at(m * j);
        for low in 2..=m * j {
            if hi.campana {
                prop_assert!(at(low).campana, "campana at {} but not {}", m * j, low);
            }
        }
        if hi.darmon {
            prop_assert!(at(m).darmon);
        }
    }

    #[test]
    fn weight_one_components_are_inert(x in -300i64..300, y in -300i64..300, z in 1i64..300) {
        let p = ProjPointQ::from_i64(&[x, y, z]).unwrap();
        let base = OrbifoldModelZ::hypersurface(&["x", "y", "z"], "", &[("x", Weight::Finite(3))]).unwrap();
        let extra = OrbifoldModelZ::hypersurface(&["x", "y", "z"], "", &[("x", Weight::Finite(3)), ("y + z", Weight::Finite(1))]).unwrap();
        let (a, b) = (classify_global(&p, &base).unwrap(), classify_global(&p, &extra).unwrap());
        prop_assert_eq!((a.integral, a.darmon, a.campana, a.strict), (b.integral, b.darmon, b.campana, b.strict));
    }
}

#[test]
fn global_flags_agree_with_prime_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let primes = primes_up_to(3_200);
    for _ in 0..400 {
        let model = plane([weight(&mut rng), weight(&mut rng), Weight::Finite(rng.gen_range(1..5))]);
        let point = random_point(&mut rng, 25);
        let g = classify_global(&point, &model).unwrap();
        // every divisor value has absolute value at most 5·25², so this covers all primes dividing one
        let scan: Vec<LocalClassification> = primes.iter().map(|&p| classify_local(&point, &model, p).unwrap()).collect();
        let all = |f: fn(&LocalClassification) -> bool| scan.iter().all(f);
        assert_eq!(g.integral, all(|c| c.integral), "{point}");
        assert_eq!(g.darmon, all(|c| c.darmon), "{point}");
        assert_eq!(g.campana, all(|c| c.campana), "{point}");
        assert_eq!(g.weak_campana, all(|c| c.weak_campana), "{point}");
    }
}

#[test]
fn search_returns_exactly_the_flagged_points() {
    let model = OrbifoldModelZ::hypersurface(&["x", "y", "z"], "x^2 + y^2 - 2z^2", &[("z", Weight::Finite(2))]).unwrap();
    let found = search_points(&model, 30, PointFlag::Campana, &[]).unwrap();
    let mut brute = Vec::new();
    for x in -30i64..=30 {
        for y in -30i64..=30 {
            for z in -30i64..=30 {
                if x * x + y * y != 2 * z * z || (x, y, z) == (0, 0, 0) {
                    continue;
                }
                let p = ProjPointQ::from_i64(&[x, y, z]).unwrap();
                if p.coords().iter().map(|c| i64::try_from(c).unwrap()).collect::<Vec<_>>() != vec![x, y, z] {
                    continue;
                }
                if classify_global(&p, &model).unwrap().campana {
                    brute.push(p);
                }
            }
        }
    }
    brute.sort_by(|a, b| (a.height(), a.coords()).cmp(&(b.height(), b.coords())));
    assert_eq!(found, brute);
    assert!(!found.is_empty());
}
