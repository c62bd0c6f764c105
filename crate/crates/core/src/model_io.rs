//! JSON description of a model and an optional quaternion class.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "variables": ["x", "y", "z", "t"],
//!   "ambient_dim": 3,
//!   "equations": ["9x^2 - 3y^2 - t^2 + 16z^2"],
//!   "divisor": [{"form": {"0,0,0,1": 1}, "weight": "inf"}],
//!   "excluded_places": [],
//!   "class": {"representatives": [["t - 4z", "t"], ["t + 4z", "t"]], "d": 3}
//! }
//! ```
//!
//! Polynomials are either expression strings or coefficient maps keyed by
//! comma-separated exponent vectors. A representative is either a
//! `[numerator, denominator]` pair (paired with the constant `d`) or an object
//! `{"first": [num, den], "second": [num, den]}`.

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::brauer::{ClassRepresentative, QuaternionClass, RationalFunction};
use crate::error::{Error, Result};
use crate::orbifold::{DivisorComponent, OrbifoldModelZ, Weight};
use crate::poly::{bigint_from_json, bigint_to_json, default_vars, Poly};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelFile {
    pub model: OrbifoldModelZ,
    pub class: Option<QuaternionClass>,
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

fn weight_from_json(v: &Value) -> Result<Weight> {
    match v {
        Value::String(s) if s == "inf" || s == "∞" => Ok(Weight::Infinite),
        Value::Number(n) => Weight::new(n.as_u64().ok_or_else(|| Error::Parse(format!("bad weight {n}")))?),
        other => Err(Error::Parse(format!("bad weight {other}"))),
    }
}

fn weight_to_json(w: Weight) -> Value {
    match w {
        Weight::Finite(m) => json!(m),
        Weight::Infinite => json!("inf"),
    }
}

fn rational_from_json(v: &Value, vars: &[String]) -> Result<RationalFunction> {
    match v {
        Value::Array(pair) if pair.len() == 2 => {
            RationalFunction::new(Poly::from_json(&pair[0], vars)?, Poly::from_json(&pair[1], vars)?)
        }
        other => Err(Error::Parse(format!("expected [numerator, denominator], got {other}"))),
    }
}

fn rational_to_json(f: &RationalFunction) -> Value {
    json!([f.numerator.to_json(), f.denominator.to_json()])
}

fn class_from_json(v: &Value, vars: &[String]) -> Result<QuaternionClass> {
    let obj = v.as_object().ok_or_else(|| Error::Parse("class must be an object".into()))?;
    let reps = field(obj, "representatives")?
        .as_array()
        .ok_or_else(|| Error::Parse("representatives must be a list".into()))?;
    let d = obj.get("d").map(bigint_from_json).transpose()?;
    let mut out = Vec::with_capacity(reps.len());
    for r in reps {
        let rep = match r {
            Value::Object(o) => ClassRepresentative {
                first: rational_from_json(field(o, "first")?, vars)?,
                second: match o.get("second") {
                    Some(s) => rational_from_json(s, vars)?,
                    None => RationalFunction::constant(
                        d.as_ref().ok_or_else(|| Error::Parse("representative needs \"second\" or class \"d\"".into()))?,
                        vars.len(),
                    )?,
                },
            },
            other => {
                let d = d.as_ref().ok_or_else(|| Error::Parse("class needs a constant \"d\"".into()))?;
                ClassRepresentative { first: rational_from_json(other, vars)?, second: RationalFunction::constant(d, vars.len())? }
            }
        };
        out.push(rep);
    }
    QuaternionClass::new(out)
}

fn class_to_json(class: &QuaternionClass) -> Value {
    match class.constant() {
        Some(d) => json!({
            "representatives": class.representatives().iter().map(|r| rational_to_json(&r.first)).collect::<Vec<_>>(),
            "d": bigint_to_json(&d),
        }),
        None => json!({
            "representatives": class
                .representatives()
                .iter()
                .map(|r| json!({"first": rational_to_json(&r.first), "second": rational_to_json(&r.second)}))
                .collect::<Vec<_>>(),
        }),
    }
}

pub fn model_from_json(v: &Value) -> Result<ModelFile> {
    let obj = v.as_object().ok_or_else(|| Error::Parse("model must be a JSON object".into()))?;
    match obj.get("schema").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(s) => return Err(Error::Parse(format!("unsupported schema version {s}"))),
        None => return Err(Error::Parse("missing \"schema\": 1".into())),
    }
    let vars: Vec<String> = match obj.get("variables") {
        Some(Value::Array(names)) => names
            .iter()
            .map(|n| n.as_str().map(str::to_string).ok_or_else(|| Error::Parse("variable names must be strings".into())))
            .collect::<Result<_>>()?,
        Some(other) => return Err(Error::Parse(format!("bad variables {other}"))),
        None => {
            let dim = field(obj, "ambient_dim")?.as_u64().ok_or_else(|| Error::Parse("bad ambient_dim".into()))?;
            default_vars(dim as usize + 1)
        }
    };
    if let Some(dim) = obj.get("ambient_dim") {
        let dim = dim.as_u64().ok_or_else(|| Error::Parse("bad ambient_dim".into()))?;
        if dim as usize + 1 != vars.len() {
            return Err(Error::DimensionMismatch { expected: dim as usize + 1, got: vars.len() });
        }
    }
    let equations = match obj.get("equations") {
        Some(Value::Array(es)) => es.iter().map(|e| Poly::from_json(e, &vars)).collect::<Result<Vec<_>>>()?,
        None => vec![],
        Some(other) => return Err(Error::Parse(format!("bad equations {other}"))),
    };
    let divisor = match obj.get("divisor") {
        Some(Value::Array(cs)) => cs
            .iter()
            .map(|c| {
                let o = c.as_object().ok_or_else(|| Error::Parse("divisor component must be an object".into()))?;
                Ok(DivisorComponent { form: Poly::from_json(field(o, "form")?, &vars)?, weight: weight_from_json(field(o, "weight")?)? })
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![],
        Some(other) => return Err(Error::Parse(format!("bad divisor {other}"))),
    };
    let excluded: BTreeSet<u64> = match obj.get("excluded_places") {
        Some(Value::Array(ps)) => {
            ps.iter().map(|p| p.as_u64().ok_or_else(|| Error::Parse(format!("bad excluded place {p}")))).collect::<Result<_>>()?
        }
        None => BTreeSet::new(),
        Some(other) => return Err(Error::Parse(format!("bad excluded_places {other}"))),
    };
    let model = OrbifoldModelZ::new(vars.clone(), equations, divisor, excluded)?;
    let class = match obj.get("class") {
        None | Some(Value::Null) => None,
        Some(c) => Some(class_from_json(c, &vars)?),
    };
    if let Some(c) = &class {
        if c.nvars() != model.nvars() {
            return Err(Error::DimensionMismatch { expected: model.nvars(), got: c.nvars() });
        }
    }
    Ok(ModelFile { model, class })
}

pub fn model_to_json(model: &OrbifoldModelZ, class: Option<&QuaternionClass>) -> Value {
    let mut obj = Map::new();
    obj.insert("schema".into(), json!(SCHEMA_VERSION));
    obj.insert("variables".into(), json!(model.vars()));
    obj.insert("ambient_dim".into(), json!(model.ambient_dim()));
    obj.insert("equations".into(), Value::Array(model.equations().iter().map(Poly::to_json).collect()));
    obj.insert(
        "divisor".into(),
        Value::Array(
            model.divisor().iter().map(|c| json!({"form": c.form.to_json(), "weight": weight_to_json(c.weight)})).collect(),
        ),
    );
    obj.insert("excluded_places".into(), json!(model.excluded_places()));
    if let Some(c) = class {
        obj.insert("class".into(), class_to_json(c));
    }
    Value::Object(obj)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    model_from_json(&v)
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    model_from_json(&serde_json::from_str(text)?)
}
