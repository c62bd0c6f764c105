mod common;

use num_bigint::BigInt;
use num_traits::Zero;

use orbifold_arith::brauer::*;
use orbifold_arith::census::{member_to_model, FamilyMember};
use orbifold_arith::localfields::Place;
use orbifold_arith::orbifold::{normalize_point, search_points, OrbifoldModelZ, PointFlag, Weight};
use orbifold_arith::registry;

fn models() -> Vec<(&'static str, OrbifoldModelZ, QuaternionClass, Vec<i64>)> {
    let mut out = Vec::new();
    for (id, coeffs) in [("quadrics-even", vec![9, -3, 16, -1]), ("dwa", vec![49, -7, 16, -1])] {
        let c = registry::case(id).unwrap();
        out.push((id, c.model, c.class.unwrap(), coeffs));
    }
    let (model, class) = member_to_model(&FamilyMember::new(41, 1, 1, 1).unwrap(), Weight::Infinite).unwrap();
    out.push(("family (41,1,1,1)", model, class, vec![205, -1025, 16, -1]));
    out
}

fn places_to_check() -> Vec<Place> {
    let mut v = vec![Place::Real];
    v.extend([2u64, 3, 5, 7, 11, 13, 41].map(Place::Finite));
    v
}

#[test]
fn representatives_agree_at_rational_points() {
    for (name, _, class, coeffs) in models() {
        let mut compared = 0;
        for raw in common::quadric_points(&coeffs, &[0, 0, 1, 4], 600, 21, 30) {
            let pt = normalize_point(&raw).unwrap();
            let mut places = relevant_places(&class, &pt).unwrap_or_default();
            places.extend(places_to_check());
            let mut both = false;
            for v in places {
                let vals = invariants_by_representative(&class, &pt, v);
                if let [Some(a), Some(b)] = vals[..] {
                    assert_eq!(a, b, "{name} at {pt}, place {v:?}");
                    both = true;
                }
            }
            compared += both as usize;
            if compared == 200 {
                break;
            }
        }
        assert_eq!(compared, 200, "{name}");
    }
}

#[test]
fn searched_points_satisfy_reciprocity() {
    for (name, model, class, _) in models() {
        let model = model.with_weight(Weight::Finite(2));
        let pts = search_points(&model, 40, PointFlag::Any, &[]).unwrap();
        let mut checked = 0;
        for pt in pts.iter().filter(|p| !p.coords()[3].is_zero()) {
            match global_invariant_sum(&class, pt) {
                Ok(s) => {
                    assert_eq!(s, InvariantValue::Zero, "{name} at {pt}");
                    checked += 1;
                }
                Err(orbifold_arith::Error::AllRepresentativesVanish) => {}
                Err(e) => panic!("{name} at {pt}: {e}"),
            }
        }
        assert!(checked > 0, "{name}: no points found");
    }
}

#[test]
fn profile_witnesses_are_sound() {
    let cases = [("quadrics-even", 3u64, ProfileMode::Darmon(4)), ("dwa", 7, ProfileMode::Darmon(4)), ("family-demo", 5, ProfileMode::Integral)];
    for (id, p, mode) in cases {
        let c = registry::case(id).unwrap();
        let class = c.class.unwrap();
        let profile = invariant_profile(&class, &c.model, Place::Finite(p), mode, &ProfileOptions::default()).unwrap();
        assert!(!profile.achieved.is_empty(), "{id}");
        let f = &c.model.equations()[0];
        let pb = BigInt::from(p);
        for value in &profile.achieved {
            assert!(profile.witnesses.iter().any(|w| &w.value == value), "{id}: {value:?} has no witness");
        }
        for w in &profile.witnesses {
            let residue = f.eval(&w.coords) % pb.pow(w.precision);
            assert!(residue.is_zero(), "{id}: witness {:?} is not a zero mod {p}^{}", w.coords, w.precision);
            let pt = normalize_point(&w.coords).unwrap();
            assert_eq!(invariant_at_point(&class, &pt, Place::Finite(p)).unwrap(), w.value, "{id}: witness {pt}");
        }
    }
}

#[test]
fn obstructed_member_has_no_small_integral_points() {
    let member = FamilyMember::new(41, 1, 1, 1).unwrap();
    let (model, class) = member_to_model(&member, Weight::Infinite).unwrap();
    let report = adelic_obstruction(&class, &model, ProfileMode::Integral, &ObstructionConfig::default()).unwrap();
    assert!(report.obstructed);
    assert!(report.zero_sum_witness.is_none());
    assert!(search_points(&model, 1_000, PointFlag::Integral, &[]).unwrap().is_empty());
}

#[test]
fn constant_class_is_never_obstructed() {
    let c = registry::case("dwa").unwrap();
    let v = orbifold_arith::poly::vars(&["x", "y", "z", "t"]);
    let t = orbifold_arith::poly::parse("t", &v).unwrap();
    let class = QuaternionClass::with_constant(vec![(orbifold_arith::poly::parse("t - 4z", &v).unwrap(), t)], &BigInt::from(9)).unwrap();
    for mode in [ProfileMode::Darmon(4), ProfileMode::Campana(4)] {
        let report = adelic_obstruction(&class, &c.model, mode, &ObstructionConfig::default()).unwrap();
        assert!(!report.obstructed, "{mode:?}");
    }
}

#[test]
fn dwa_harari_scans() {
    let c = registry::case("dwa").unwrap();
    let class = c.class.unwrap();
    let opts = ProfileOptions::default();
    let darmon = harari_scan(&class, &c.model, ProfileMode::Darmon(4), 3, 100, &opts).unwrap();
    assert!(darmon.two_valued.is_empty(), "{darmon:?}");
    let campana = harari_scan(&class, &c.model, ProfileMode::Campana(4), 3, 100, &opts).unwrap();
    assert!(!campana.two_valued.is_empty(), "{campana:?}");
}
