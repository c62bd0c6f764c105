//! Worked examples with their expected outcomes, re-verified on demand.

use std::time::Instant;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::brauer::{adelic_obstruction, invariant_profile, InvariantValue, ObstructionConfig, ProfileMode, ProfileOptions, QuaternionClass};
use crate::census::{member_to_model, verify_member, FamilyMember};
use crate::error::{Error, Result};
use crate::localfields::{zp_points_with_units, Place, SolubilityVerdict, DEFAULT_MAX_DEPTH};
use crate::orbifold::{classify_global, classify_local, search_points, OrbifoldModelZ, PointFlag, ProjPointQ, Weight};
use crate::poly::{parse, vars};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// Z_p-points on the model, optionally only those off the divisor support.
    LocalSolubility { prime: u64, off_divisor: bool, soluble: bool },
    /// A flag of a point, globally or at one prime, with all divisor weights set to `weight`.
    Flag { point: Vec<i64>, weight: Option<u64>, prime: Option<u64>, flag: PointFlag, holds: bool },
    Profile { place: Place, mode: ProfileMode, values: Vec<InvariantValue>, max_depth: Option<u32> },
    Obstruction { mode: ProfileMode, obstructed: bool },
    SearchEmpty { flag: PointFlag, height: u64 },
    MemberPasses { member: [i64; 4], weights: Vec<u64>, height: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub expectation: Expectation,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct ExampleCase {
    pub id: &'static str,
    pub model: OrbifoldModelZ,
    pub class: Option<QuaternionClass>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub check: Check,
    pub passed: bool,
    pub observed: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
    pub seconds: f64,
}

fn check(expectation: Expectation, note: &str) -> Check {
    Check { expectation, note: note.to_string() }
}

const XYZT: [&str; 4] = ["x", "y", "z", "t"];

fn class_over(pairs: &[(&str, &str)], d: i64) -> Result<QuaternionClass> {
    let v = vars(&XYZT);
    let pairs = pairs.iter().map(|(n, m)| Ok((parse(n, &v)?, parse(m, &v)?))).collect::<Result<Vec<_>>>()?;
    QuaternionClass::with_constant(pairs, &BigInt::from(d))
}

fn intro_quadric() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&XYZT, "3(x - y)(x + y) - (t - 4z)(t + 4z)", &[("t", Weight::Infinite)])?;
    let mut checks = vec![check(
        Expectation::LocalSolubility { prime: 2, off_divisor: true, soluble: false },
        "no 2-adic integral points off t = 0",
    )];
    for m in 1..=6u32 {
        checks.push(check(
            Expectation::Flag {
                point: vec![1, 1, 4i64.pow(m - 1), 4i64.pow(m)],
                weight: Some(m as u64),
                prime: None,
                flag: PointFlag::Darmon,
                holds: true,
            },
            &format!("[1, 1, 4^{}, 4^{m}] is a Darmon point of weight {m}", m - 1),
        ));
    }
    Ok(ExampleCase { id: "intro-quadric", model, class: None, checks })
}

fn cubic_dmbo() -> Result<ExampleCase> {
    let v = vars(&XYZT);
    let model = OrbifoldModelZ::hypersurface(
        &XYZT,
        "y^2*z - (4x - z)(16x^2 + 20x*z + 7z^2) - t^3",
        &[("t", Weight::Infinite)],
    )?;
    let class = QuaternionClass::new(vec![crate::brauer::ClassRepresentative {
        first: crate::brauer::RationalFunction::new(parse("-t^3", &v)?, parse("y^3", &v)?)?,
        second: crate::brauer::RationalFunction::new(parse("z", &v)?, parse("y", &v)?)?,
    }])?;
    let mut checks = vec![check(
        Expectation::Profile {
            place: Place::Finite(2),
            mode: ProfileMode::Integral,
            values: vec![InvariantValue::Half],
            max_depth: Some(12),
        },
        "the 2-adic invariant is 1/2 on every integral point",
    )];
    for m in 1..=6u32 {
        checks.push(check(
            Expectation::Flag {
                point: vec![-(4i64.pow(m - 1)), 1, 0, 4i64.pow(m)],
                weight: Some(m as u64),
                prime: None,
                flag: PointFlag::Darmon,
                holds: true,
            },
            &format!("[-4^{}, 1, 0, 4^{m}] is a Darmon point of weight {m}", m - 1),
        ));
    }
    Ok(ExampleCase { id: "cubic-dmbo", model, class: Some(class), checks })
}

fn p1_automorphism() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&["x", "y"], "", &[("x", Weight::Finite(2))])?;
    let flag = |point: Vec<i64>, holds: bool, note: &str| {
        check(Expectation::Flag { point, weight: None, prime: Some(2), flag: PointFlag::Campana, holds }, note)
    };
    Ok(ExampleCase {
        id: "p1-automorphism",
        model,
        class: None,
        checks: vec![
            flag(vec![4, 1], true, "[4, 1] is a 2-adic Campana point"),
            flag(vec![2, 1], false, "its image [2, 1] is not"),
        ],
    })
}

fn conic_3adic() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&["x", "y", "z"], "x^2 + y^2 - 9z^2", &[("x - y", Weight::Finite(3))])?;
    Ok(ExampleCase {
        id: "conic-3adic",
        model,
        class: None,
        checks: vec![check(
            Expectation::SearchEmpty { flag: PointFlag::Campana, height: 50 },
            "no Campana points (none exist 3-adically)",
        )],
    })
}

fn quadrics_even() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&XYZT, "9x^2 - 3y^2 - (t - 4z)(t + 4z)", &[("t", Weight::Finite(4))])?;
    let class = class_over(&[("t - 4z", "t"), ("t + 4z", "t")], 3)?;
    let obstruction = |m: u64, obstructed: bool, note: &str| {
        check(Expectation::Obstruction { mode: ProfileMode::Darmon(m), obstructed }, note)
    };
    Ok(ExampleCase {
        id: "quadrics-even",
        model,
        class: Some(class),
        checks: vec![
            check(
                Expectation::Profile {
                    place: Place::Finite(3),
                    mode: ProfileMode::Darmon(4),
                    values: vec![InvariantValue::Half],
                    max_depth: None,
                },
                "the 3-adic invariant is 1/2 on Darmon points of even weight",
            ),
            obstruction(4, true, "obstruction to Darmon points of weight 4"),
            obstruction(6, true, "obstruction to Darmon points of weight 6"),
            obstruction(3, false, "no obstruction for odd weight 3"),
        ],
    })
}

fn dhp_double_cover() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&XYZT, "9x^2 - 3y^2 + t^2 + 16z^2", &[("t", Weight::Finite(4))])?;
    let class = class_over(&[("t - 4z", "t"), ("t + 4z", "t")], 3)?;
    let none = |m: u64| {
        check(
            Expectation::Profile { place: Place::Finite(3), mode: ProfileMode::Darmon(m), values: vec![], max_depth: None },
            &format!("the sign-changed quadric has no 3-adic Darmon points of weight {m}"),
        )
    };
    Ok(ExampleCase { id: "dhp-double-cover", model, class: Some(class), checks: vec![none(2), none(4)] })
}

fn dwa() -> Result<ExampleCase> {
    let model = OrbifoldModelZ::hypersurface(&XYZT, "49x^2 - 7y^2 + 16z^2 - t^2", &[("t", Weight::Finite(4))])?;
    let class = class_over(&[("t - 4z", "t"), ("t + 4z", "t")], 7)?;
    let zero = |place: Place| {
        check(
            Expectation::Profile { place, mode: ProfileMode::Darmon(4), values: vec![InvariantValue::Zero], max_depth: None },
            &format!("invariant vanishes on Darmon points at {place}"),
        )
    };
    let local = |p: u64| {
        check(
            Expectation::LocalSolubility { prime: p, off_divisor: true, soluble: true },
            &format!("integral points off t = 0 exist at {p}"),
        )
    };
    Ok(ExampleCase {
        id: "dwa",
        model,
        class: Some(class),
        checks: vec![local(2), local(7), zero(Place::Real), zero(Place::Finite(2)), zero(Place::Finite(7))],
    })
}

fn family_demo() -> Result<ExampleCase> {
    let member = FamilyMember::new(41, 1, 1, 1)?;
    let (model, class) = member_to_model(&member, Weight::Infinite)?;
    Ok(ExampleCase {
        id: "family-demo",
        model,
        class: Some(class),
        checks: vec![
            check(
                Expectation::Profile {
                    place: Place::Finite(5),
                    mode: ProfileMode::Integral,
                    values: vec![InvariantValue::Half],
                    max_depth: None,
                },
                "the 5-adic invariant is 1/2 on integral points",
            ),
            check(
                Expectation::MemberPasses { member: [41, 1, 1, 1], weights: vec![2, 3, 4, 5], height: 200 },
                "integral obstruction, Darmon witnesses without obstruction, no small integral point",
            ),
        ],
    })
}

pub const CASE_IDS: [&str; 8] =
    ["intro-quadric", "cubic-dmbo", "p1-automorphism", "conic-3adic", "quadrics-even", "dhp-double-cover", "dwa", "family-demo"];

pub fn case(id: &str) -> Result<ExampleCase> {
    match id {
        "intro-quadric" => intro_quadric(),
        "cubic-dmbo" => cubic_dmbo(),
        "p1-automorphism" => p1_automorphism(),
        "conic-3adic" => conic_3adic(),
        "quadrics-even" => quadrics_even(),
        "dhp-double-cover" => dhp_double_cover(),
        "dwa" => dwa(),
        "family-demo" => family_demo(),
        other => Err(Error::Parse(format!("unknown example {other:?}; known: {}", CASE_IDS.join(", ")))),
    }
}

pub fn cases() -> Result<Vec<ExampleCase>> {
    CASE_IDS.iter().map(|id| case(id)).collect()
}

fn need_class(c: &ExampleCase) -> Result<&QuaternionClass> {
    c.class.as_ref().ok_or_else(|| Error::InvalidModel(format!("{} has no Brauer class", c.id)))
}

fn fmt_values(vs: &[InvariantValue]) -> String {
    let inner: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

fn run_check(c: &ExampleCase, e: &Expectation) -> Result<(bool, String)> {
    match e {
        Expectation::LocalSolubility { prime, off_divisor, soluble } => {
            let f = c.model.equations().first().ok_or_else(|| Error::InvalidModel("no equation".into()))?;
            let units: Vec<_> = if *off_divisor {
                c.model.divisor().iter().filter(|d| d.weight.in_support()).map(|d| d.form.clone()).collect()
            } else {
                vec![]
            };
            let verdict = zp_points_with_units(f, &units, *prime, DEFAULT_MAX_DEPTH)?;
            let observed = match &verdict {
                SolubilityVerdict::Yes { certificate } => {
                    format!("YES, {:?} mod {}^{}", certificate.solution.coords, prime, certificate.solution.modulus_exponent)
                }
                SolubilityVerdict::No { exhaustion_precision, .. } => format!("NO (certified at precision {exhaustion_precision})"),
                SolubilityVerdict::Inconclusive { depth_reached } => format!("INCONCLUSIVE at depth {depth_reached}"),
            };
            let ok = if *soluble { verdict.is_yes() } else { verdict.is_no() };
            Ok((ok, observed))
        }
        Expectation::Flag { point, weight, prime, flag, holds } => {
            let model = match weight {
                Some(m) => c.model.with_weight(Weight::new(*m)?),
                None => c.model.clone(),
            };
            let pt = ProjPointQ::from_i64(point)?;
            let value = match prime {
                Some(p) => {
                    let l = classify_local(&pt, &model, *p)?;
                    match flag {
                        PointFlag::Any => true,
                        PointFlag::Integral => l.integral,
                        PointFlag::Darmon => l.darmon,
                        PointFlag::Campana => l.campana,
                        PointFlag::WeakCampana => l.weak_campana,
                        PointFlag::Strict => l.strict,
                    }
                }
                None => classify_global(&pt, &model)?.flag(*flag),
            };
            Ok((value == *holds, format!("{flag:?} = {value}")))
        }
        Expectation::Profile { place, mode, values, max_depth } => {
            let options = ProfileOptions { max_depth: *max_depth, ..ProfileOptions::default() };
            let profile = invariant_profile(need_class(c)?, &c.model, *place, *mode, &options)?;
            let achieved: Vec<InvariantValue> = profile.achieved.iter().copied().collect();
            let ok = profile.complete && achieved == *values;
            Ok((ok, format!("{} (complete = {})", fmt_values(&achieved), profile.complete)))
        }
        Expectation::Obstruction { mode, obstructed } => {
            let report = adelic_obstruction(need_class(c)?, &c.model, *mode, &ObstructionConfig::default())?;
            let profiles: Vec<String> = report
                .profiles
                .iter()
                .map(|p| format!("{}: {}", p.place, fmt_values(&p.achieved.iter().copied().collect::<Vec<_>>())))
                .collect();
            Ok((report.obstructed == *obstructed, format!("obstructed = {} [{}]", report.obstructed, profiles.join("; "))))
        }
        Expectation::SearchEmpty { flag, height } => {
            let found = search_points(&c.model, *height, *flag, &[])?;
            let first = found.first().map(|p| format!(", first {p}")).unwrap_or_default();
            Ok((found.is_empty(), format!("{} points{first}", found.len())))
        }
        Expectation::MemberPasses { member, weights, height } => {
            let m = FamilyMember::new(member[0], member[1], member[2], member[3])?;
            let v = verify_member(&m, weights, Some(*height))?;
            Ok((
                v.passed,
                format!(
                    "integral obstructed = {}, darmon obstructed = {:?}, witnesses certified = {}, integral points = {}",
                    v.integral_obstructed,
                    v.darmon.iter().map(|d| d.obstructed).collect::<Vec<_>>(),
                    v.darmon.iter().all(|d| d.witness_certified),
                    v.integral_points_found
                ),
            ))
        }
    }
}

/// Runs every check of a case; errors inside a check count as failures.
pub fn verify_case(c: &ExampleCase) -> CaseReport {
    let start = Instant::now();
    let checks: Vec<CheckReport> = c
        .checks
        .par_iter()
        .map(|ch| {
            let (passed, observed) = match run_check(c, &ch.expectation) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckReport { check: ch.clone(), passed, observed }
        })
        .collect();
    CaseReport {
        id: c.id.to_string(),
        passed: checks.iter().all(|r| r.passed),
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// `"all"` or a single id.
pub fn verify(id: &str) -> Result<Vec<CaseReport>> {
    let selected = if id == "all" { cases()? } else { vec![case(id)?] };
    Ok(selected.par_iter().map(verify_case).collect())
}
