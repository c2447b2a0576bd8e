//! Text serialization of results: every real number is written with 17
//! significant digits so reports round-trip exactly and are byte-stable.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::branch_solver::{BranchRow, FlowSample};
use crate::error::Result;
use crate::nehari::WeightedEigenSystem;

/// Header of branch tables; the trailing `psi_l2` column feeds the
/// bifurcation diagram.
pub const BRANCH_HEADER: &str = "rho,J,J1,J2,residual,index_l,constraint_norm,psi_l2";

/// `x` in scientific notation with 17 significant digits and a signed
/// exponent, e.g. `1.2500000000000000e+0`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        if s.contains("e-") {
            s
        } else {
            s.replacen('e', "e+", 1)
        }
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn number17(x: f64) -> Value {
    if x.is_finite() {
        Number::from_str(&fmt17(x)).map(Value::Number).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else {
                n.as_f64().map(number17).unwrap_or(Value::Null)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// `serde_json` value of `x` with normalized numbers.
pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(normalize(serde_json::to_value(x)?))
}

pub fn to_pretty<T: Serialize>(x: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_value(x)?)?)
}

pub fn branch_csv(rows: &[BranchRow]) -> String {
    let mut out = String::from(BRANCH_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt17(r.rho),
            fmt17(r.j),
            fmt17(r.j1),
            fmt17(r.j2),
            fmt17(r.residual),
            r.index_l,
            fmt17(r.constraint_norm),
            fmt17(r.psi_norm)
        );
    }
    out
}

/// One JSON object per line: `ρ`, the invariants and the state.
pub fn flow_jsonl(samples: &[FlowSample]) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        let inv = &s.invariants;
        let mut m = Map::new();
        m.insert("rho".into(), number17(s.state.rho));
        m.insert("J2".into(), number17(inv.j2));
        m.insert("G1".into(), Value::Array(inv.g1.iter().map(|&x| number17(x)).collect()));
        m.insert("G2max".into(), number17(inv.g2_max));
        m.insert("G3".into(), number17(inv.g3));
        m.insert("J_rho".into(), number17(inv.j_rho));
        m.insert("omega".into(), number17(inv.omega));
        m.insert("state".into(), normalize(s.state.to_json()));
        out.push_str(&serde_json::to_string(&Value::Object(m))?);
        out.push('\n');
    }
    Ok(out)
}

/// Eigen-system dump `j,lambda,residual` with signed cluster labels.
pub fn eigen_csv(ws: &WeightedEigenSystem) -> String {
    let mut out = String::from("j,lambda,residual\n");
    for p in ws.report() {
        let _ = writeln!(out, "{},{},{}", p.label, fmt17(p.lambda), fmt17(p.residual));
    }
    out
}

/// Per-eigenspinor JSON: label, eigenvalue and coefficients.
pub fn eigen_json(ws: &WeightedEigenSystem) -> Value {
    let modes = (0..ws.len())
        .map(|k| {
            let mut m = Map::new();
            m.insert("j".into(), Value::from(ws.label(k)));
            m.insert("lambda".into(), number17(ws.eigenvalue(k)));
            m.insert("psi".into(), normalize(ws.spinor(k).to_json()));
            Value::Object(m)
        })
        .collect();
    Value::Array(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [1.0 / 3.0, -7.995_820_000_000_1, 1e-300, 6.02e23, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn normalize_keeps_integers() {
        let v = normalize(serde_json::json!({"n": 3, "x": 0.5, "a": [1.25, 2]}));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":[1.2500000000000000e+0,2],"n":3,"x":5.0000000000000000e-1}"#);
    }
}
