//! JSON descriptors for series, matrices and shtukas.
//!
//! A series is `{"val": v, "prec": p, "coeffs": [c, ...]}` where each
//! coefficient is a sequence of base-p digits in the power basis of the
//! declared modulus; nilpotent extensions add an outer sequence indexed by
//! generator power. Bare integers are accepted as input shorthand for a
//! constant digit. Canonical output keeps object keys sorted
//! (serde_json's default map ordering).

use crate::error::{Error, Result};
use crate::matrix::LoopElement;
use crate::ring::{CoeffRing, RingKind};
use crate::series::{Series, Valuation};
use crate::shtuka::LocalShtuka;
use serde_json::{json, Map, Value};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Ring descriptor: `{"q": .., "ext": ..}` for finite fields, plus
/// `{"kind": "nilpotent", "order": k, "gen": name}` or `{"kind": "dual"}`.
pub fn ring_from_json(v: &Value) -> Result<CoeffRing> {
    let obj = v.as_object().ok_or_else(|| bad("ring descriptor must be an object"))?;
    let q = obj
        .get("q")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("ring needs a prime-power \"q\""))?;
    let ext = obj.get("ext").and_then(Value::as_u64).unwrap_or(1) as usize;
    if ext == 0 {
        return Err(bad("\"ext\" must be positive"));
    }
    let base = CoeffRing::from_q_ext(q, ext)?;
    match obj.get("kind").and_then(Value::as_str) {
        None | Some("finite-field") => Ok(base),
        Some("nilpotent") | Some("nilpotent-extension") => {
            let order = obj
                .get("order")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad("nilpotent ring needs \"order\""))? as usize;
            let gen = obj.get("gen").and_then(Value::as_str).unwrap_or("xi");
            CoeffRing::nilpotent_extension(base.field().clone(), q, gen, order)
        }
        Some("dual") | Some("dual-numbers") => {
            CoeffRing::dual_numbers(base.field().clone(), q)
        }
        Some(k) => Err(bad(format!("unknown ring kind {k:?}"))),
    }
}

pub fn ring_to_json(ring: &CoeffRing) -> Value {
    let mut m = Map::new();
    m.insert("q".into(), json!(ring.base_q()));
    m.insert("ext".into(), json!(ring.ext_degree_over_base()));
    match ring.kind() {
        RingKind::FiniteField => {
            m.insert("kind".into(), json!("finite-field"));
        }
        RingKind::NilpotentExtension { generator, order } => {
            m.insert("kind".into(), json!("nilpotent"));
            m.insert("gen".into(), json!(generator));
            m.insert("order".into(), json!(order));
        }
        RingKind::DualNumbers => {
            m.insert("kind".into(), json!("dual"));
        }
    }
    m.insert(
        "modulus".into(),
        json!(ring.field().modulus().to_vec()),
    );
    Value::Object(m)
}

fn coeff_from_json(ring: &CoeffRing, v: &Value) -> Result<Vec<u64>> {
    let p = ring.field().p();
    let d = ring.field().degree();
    let blocks = ring.nil_order();
    let parse_block = |v: &Value| -> Result<Vec<u64>> {
        match v {
            Value::Number(n) => {
                let x = n.as_u64().ok_or_else(|| bad("digit must be a nonnegative integer"))?;
                let mut blk = vec![0u64; d];
                blk[0] = x % p;
                Ok(blk)
            }
            Value::Array(a) => {
                if a.len() > d {
                    return Err(bad(format!("coefficient has more than {d} digits")));
                }
                let mut blk = vec![0u64; d];
                for (i, x) in a.iter().enumerate() {
                    let x = x.as_u64().ok_or_else(|| bad("digit must be a nonnegative integer"))?;
                    blk[i] = x % p;
                }
                Ok(blk)
            }
            _ => Err(bad("coefficient must be an integer or digit array")),
        }
    };
    let mut out = vec![0u64; ring.coeff_len()];
    if blocks == 1 {
        let blk = parse_block(v)?;
        out[..d].copy_from_slice(&blk);
        return Ok(out);
    }
    match v {
        // outer sequence indexed by generator power
        Value::Array(parts) if parts.iter().all(|x| x.is_array()) && !parts.is_empty() => {
            if parts.len() > blocks {
                return Err(bad(format!("more than {blocks} generator powers")));
            }
            for (i, part) in parts.iter().enumerate() {
                let blk = parse_block(part)?;
                out[i * d..(i + 1) * d].copy_from_slice(&blk);
            }
            Ok(out)
        }
        other => {
            let blk = parse_block(other)?;
            out[..d].copy_from_slice(&blk);
            Ok(out)
        }
    }
}

fn coeff_to_json(ring: &CoeffRing, c: &[u64]) -> Value {
    let d = ring.field().degree();
    if ring.nil_order() == 1 {
        return json!(c[..d].to_vec());
    }
    let parts: Vec<Value> = (0..ring.nil_order())
        .map(|i| json!(c[i * d..(i + 1) * d].to_vec()))
        .collect();
    Value::Array(parts)
}

pub fn series_from_json(ring: &CoeffRing, v: &Value) -> Result<Series> {
    let obj = v.as_object().ok_or_else(|| bad("series must be an object"))?;
    let val = obj
        .get("val")
        .and_then(Value::as_i64)
        .ok_or_else(|| bad("series needs integer \"val\""))?;
    let coeffs_json = obj
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("series needs \"coeffs\" array"))?;
    let prec = obj
        .get("prec")
        .and_then(Value::as_i64)
        .unwrap_or(val + coeffs_json.len() as i64);
    let coeffs: Result<Vec<_>> = coeffs_json.iter().map(|c| coeff_from_json(ring, c)).collect();
    Ok(Series::with_prec(ring.clone(), val, coeffs?, prec))
}

pub fn series_to_json(s: &Series) -> Value {
    let ring = s.ring();
    let (val, coeffs) = match s.valuation() {
        Valuation::ZeroToPrecision { .. } => (s.prec(), vec![]),
        Valuation::At(v) => {
            let cs: Vec<Value> = (v..s.prec())
                .map(|e| coeff_to_json(ring, &s.coeff(e).unwrap()))
                .collect();
            (v, cs)
        }
    };
    json!({"val": val, "prec": s.prec(), "coeffs": coeffs})
}

/// Matrix: array of rows, each row an array of series objects.
pub fn matrix_from_json(ring: &CoeffRing, v: &Value, prec_override: Option<i64>) -> Result<LoopElement> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    let r = rows.len();
    let mut entries = Vec::with_capacity(r * r);
    for row in rows {
        let cols = row.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        if cols.len() != r {
            return Err(bad(format!("matrix must be square, got row of width {}", cols.len())));
        }
        for cell in cols {
            let mut s = series_from_json(ring, cell)?;
            if let Some(p) = prec_override {
                if p < s.prec() {
                    s = s.truncate(p);
                } else {
                    // coefficient lists are exact; extending the horizon is
                    // the caller's assertion via --prec
                    s = match s.valuation() {
                        Valuation::ZeroToPrecision { .. } => Series::zero(ring.clone(), p),
                        Valuation::At(v0) => {
                            let coeffs: Vec<_> = (v0..s.prec()).map(|e| s.coeff(e).unwrap()).collect();
                            Series::with_prec(ring.clone(), v0, coeffs, p)
                        }
                    };
                }
            }
            entries.push(s);
        }
    }
    LoopElement::new(r, entries)
}

pub fn matrix_to_json(m: &LoopElement) -> Value {
    let rows: Vec<Value> = (0..m.rank())
        .map(|i| {
            let cols: Vec<Value> = (0..m.rank()).map(|j| series_to_json(m.entry(i, j))).collect();
            Value::Array(cols)
        })
        .collect();
    Value::Array(rows)
}

/// Shtuka descriptor: `{"q": .., "ext": .., "rank": .., "prec": .., "b": matrix}`.
pub fn shtuka_from_json(v: &Value, prec_override: Option<i64>) -> Result<(LocalShtuka, CoeffRing)> {
    let obj = v.as_object().ok_or_else(|| bad("shtuka descriptor must be an object"))?;
    let ring = ring_from_json(v)?;
    let rank = obj
        .get("rank")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad("shtuka needs \"rank\""))? as usize;
    let prec = prec_override.or_else(|| obj.get("prec").and_then(Value::as_i64));
    let b = obj.get("b").ok_or_else(|| bad("shtuka needs Frobenius matrix \"b\""))?;
    let b = matrix_from_json(&ring, b, prec)?;
    if b.rank() != rank {
        return Err(bad(format!("matrix rank {} differs from declared {rank}", b.rank())));
    }
    Ok((LocalShtuka::new(b)?, ring))
}

pub fn shtuka_to_json(l: &LocalShtuka) -> Value {
    let mut m = Map::new();
    if let Value::Object(rm) = ring_to_json(l.ring()) {
        m.extend(rm);
    }
    m.insert("rank".into(), json!(l.rank()));
    m.insert("prec".into(), json!(l.prec()));
    m.insert("b".into(), matrix_to_json(l.frobenius_matrix()));
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip() {
        let ring = CoeffRing::from_q_ext(4, 1).unwrap();
        let v = json!({"val": -1, "prec": 3, "coeffs": [[1, 1], [0, 1], 1, [1]]});
        let s = series_from_json(&ring, &v).unwrap();
        let back = series_to_json(&s);
        let s2 = series_from_json(&ring, &back).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn nilpotent_coeff_outer_sequence() {
        let f3 = crate::field::FieldSpec::new(3, 1).unwrap();
        let ring = CoeffRing::nilpotent_extension(f3, 3, "xi", 4).unwrap();
        // 2 + xi^2
        let v = json!({"val": 0, "prec": 2, "coeffs": [[[2], [0], [1]]]});
        let s = series_from_json(&ring, &v).unwrap();
        let c = s.coeff(0).unwrap();
        let xi = ring.generator().unwrap();
        let want = ring.add(&ring.from_u64(2), &ring.mul(&xi, &xi));
        assert_eq!(c, want);
    }

    #[test]
    fn shtuka_round_trip() {
        let v = json!({
            "q": 2, "ext": 1, "rank": 2, "prec": 8,
            "b": [[{"val": 0, "prec": 8, "coeffs": []}, {"val": 1, "prec": 8, "coeffs": [1]}],
                  [{"val": 0, "prec": 8, "coeffs": [1]}, {"val": 0, "prec": 8, "coeffs": []}]]
        });
        let (l, _) = shtuka_from_json(&v, None).unwrap();
        let back = shtuka_to_json(&l);
        let (l2, _) = shtuka_from_json(&back, None).unwrap();
        assert!(l.frobenius_matrix().eq_to_common_prec(l2.frobenius_matrix()));
    }

    #[test]
    fn schema_violations_are_flagged() {
        assert!(ring_from_json(&json!({"q": 6})).is_err());
        assert!(ring_from_json(&json!({})).is_err());
        let ring = CoeffRing::from_q_ext(2, 1).unwrap();
        assert!(series_from_json(&ring, &json!({"val": 0})).is_err());
        assert!(matrix_from_json(&ring, &json!([[{"val":0,"coeffs":[1]}], []]), None).is_err());
    }
}
