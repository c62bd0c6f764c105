mod common;

use orbifold_arith::census::*;

#[test]
fn exact_count_matches_quadruple_loop() {
    for bound in [25u64, 26, 99, 205, 1_024, 2_500, 5_000, 7_777, 10_000] {
        assert_eq!(count_members(bound, None).unwrap(), common::naive_census(bound as i64), "B = {bound}");
    }
}

#[test]
fn count_is_independent_of_pool_size() {
    let reference = count_members(20_000, None).unwrap();
    for threads in [1, 2, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        assert_eq!(pool.install(|| count_members(20_000, None).unwrap()), reference, "{threads} threads");
        assert_eq!(pool.install(|| sample_members(20_000, 10, 7)), sample_members(20_000, 10, 7));
    }
}

#[test]
fn resume_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("census.json");
    let full = count_members(50_000, None).unwrap();
    assert_eq!(count_members(50_000, Some(&path)).unwrap(), full);
    assert!(path.exists());
    // resuming a finished run adds nothing
    assert_eq!(count_members(50_000, Some(&path)).unwrap(), full);
    // a checkpoint from a different bound is rejected
    assert!(count_members(40_000, Some(&path)).is_err());

    // a partial checkpoint: count through the first admissible a only
    let a_values = admissible_a(50_000);
    let first = a_values[0];
    let partial: u64 = (1..)
        .take_while(|b| 5 * first * b * b <= 50_000)
        .flat_map(|b| (1..).take_while(move |d| 25 * first * d * d <= 50_000).map(move |d| (b, d)))
        .flat_map(|(b, d)| (1..).take_while(|c| 16 * c * c <= 50_000).map(move |c| (b, c, d)))
        .filter(|&(b, c, d)| member_valid(first as i64, b as i64, c as i64, d as i64))
        .count() as u64;
    let path2 = dir.path().join("partial.json");
    std::fs::write(&path2, format!(r#"{{"bound":50000,"completed_a":{first},"count":{partial}}}"#)).unwrap();
    assert_eq!(count_members(50_000, Some(&path2)).unwrap(), full);
}

#[test]
fn sign_of_b_doubles_the_count() {
    for bound in [1_000i64, 5_000] {
        let mut signed = 0u64;
        let mut a = 1;
        while 25 * a <= bound {
            let mut b = 1;
            while 5 * a * b * b <= bound {
                let mut d = 1;
                while 25 * a * d * d <= bound {
                    let mut c = 1;
                    while 16 * c * c <= bound {
                        signed += member_valid(a, b, c, d) as u64 + member_valid(a, -b, c, d) as u64;
                        c += 1;
                    }
                    d += 1;
                }
                b += 1;
            }
            a += 1;
        }
        assert_eq!(signed, 2 * count_members(bound as u64, None).unwrap(), "B = {bound}");
    }
}

#[test]
fn growth_table_shapes() {
    let single = growth_table(&[1_000]).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].count, 54);
    assert!(growth_table(&[]).unwrap().is_empty());
    assert!(growth_table(&[10_000, 1_000]).is_err());
    assert!(growth_table(&[1_000, 1_000]).is_err());
}

#[test]
fn member_validity() {
    assert!(member_valid(41, 1, 1, 1));
    assert!(member_valid(41, 3, 7, 1));
    assert!(member_valid(41, 1, 2, 1), "c may be even");
    assert!(!member_valid(41, 1, 1, 2), "2 | d");
    assert!(!member_valid(41, 3, 3, 1), "gcd(b, c) > 1");
    assert!(!member_valid(41, 2, 1, 1), "2 | b");
    assert!(!member_valid(41, 1, 41, 1), "gcd(a, c) > 1");
    assert!(!member_valid(41, 1, 1, 5), "5 | d");
    assert!(member_valid(1, 1, 1, 1));
    assert!(!member_valid(-39, 1, 1, 1), "a must be positive");
    assert!(!member_valid(121, 1, 1, 1), "a not squarefree");
    assert!(FamilyMember::new(42, 1, 1, 1).is_err());
}

#[test]
fn sampling_is_seeded_and_valid() {
    let a = sample_members(10_000, 25, 1);
    assert_eq!(a, sample_members(10_000, 25, 1));
    assert_ne!(a, sample_members(10_000, 25, 2));
    assert!(a.iter().all(|m| member_valid(m.a, m.b, m.c, m.d)));
    let mut sorted = a.clone();
    sorted.dedup();
    assert_eq!(sorted.len(), 25);
    assert_eq!(sample_members(100, 1_000, 1).len(), 4);
}

#[test]
fn small_census_verifies_its_sample() {
    let options = CensusOptions { min_sample: 2, height_bound: Some(60), ..CensusOptions::default() };
    let r = count_lower_bound(1_000, &options).unwrap();
    assert_eq!(r.count, 54);
    assert_eq!(r.sample_verifications.len(), 2);
    assert!(count_lower_bound(10, &options).is_err());
}
