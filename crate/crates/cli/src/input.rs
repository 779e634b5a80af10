//! Loading graphs, scales and rational vectors from flags and files.

use std::fs;
use std::path::Path;

use propa_core::graph::from_spec;
use propa_core::invariants::ScaleSpec;
use propa_core::{Graph, Rational, Scale};
use serde_json::Value;

use crate::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Graph from a generator spec or a file (text format, or JSON if it opens with `{`).
pub fn load_graph(gen: Option<&str>, file: Option<&Path>) -> Result<Graph, CliError> {
    match (gen, file) {
        (Some(spec), None) => {
            let g = from_spec(spec).map_err(|e| CliError::config(e.to_string()))?;
            Ok(if g.name().is_none() { g.with_name(spec) } else { g })
        }
        (None, Some(path)) => {
            let text = read(path)?;
            let parsed = if text.trim_start().starts_with('{') {
                serde_json::from_str(&text).map_err(|e| e.to_string())
            } else {
                Graph::from_text(&text).map_err(|e| e.to_string())
            };
            parsed.map_err(|e| CliError::config(format!("{}: {e}", path.display())))
        }
        (None, None) => Err(CliError::config("a graph is required: pass --gen SPEC or --graph FILE")),
        (Some(_), Some(_)) => Err(CliError::config("--gen and --graph are mutually exclusive")),
    }
}

/// `--scale` is a radius or a JSON file holding `{"radius": s}` or `{"sets": [...]}`.
pub fn load_scale(arg: &str) -> Result<ScaleSpec, CliError> {
    if let Ok(s) = arg.trim().parse::<usize>() {
        return Ok(ScaleSpec::Radius(s));
    }
    scale_from_json(&read_json(Path::new(arg))?)
}

pub fn scale_from_json(v: &Value) -> Result<ScaleSpec, CliError> {
    if v.get("sets").is_some() {
        let sc: Scale = serde_json::from_value(v.clone()).map_err(|e| CliError::config(format!("scale: {e}")))?;
        return Ok(ScaleSpec::Explicit(sc));
    }
    match v.get("radius").and_then(Value::as_u64) {
        Some(s) => Ok(ScaleSpec::Radius(s as usize)),
        None => Err(CliError::config("scale JSON needs \"radius\" or \"sets\"")),
    }
}

pub fn rational(v: &Value) -> Result<Rational, CliError> {
    let s = match v {
        Value::String(s) => s.clone(),
        // integers are unambiguous; floats never are
        Value::Number(n) if n.is_i64() => n.to_string(),
        other => return Err(CliError::config(format!("expected a \"p/q\" string, got {other}"))),
    };
    s.parse().map_err(|e| CliError::config(format!("{s:?}: {e}")))
}

/// Vertex vector: a JSON array, an object keyed by vertex, or either under an `"eta"` key.
pub fn vertex_vector(v: &Value, g: &Graph) -> Result<Vec<Rational>, CliError> {
    let v = v.get("eta").unwrap_or(v);
    indexed_vector(v, g.vertex_count(), "vertex", |k| k.parse().ok().filter(|&i| i < g.vertex_count()))
}

/// Edge vector in [`Graph::edges`] order: an array, or an object keyed `"u-v"`.
pub fn edge_vector(v: &Value, g: &Graph) -> Result<Vec<Rational>, CliError> {
    let v = v.get("kappa").unwrap_or(v);
    indexed_vector(v, g.edge_count(), "edge", |k| {
        let (a, b) = k.split_once('-')?;
        g.edge_index(a.trim().parse().ok()?, b.trim().parse().ok()?)
    })
}

fn indexed_vector(
    v: &Value,
    len: usize,
    what: &str,
    key: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<Rational>, CliError> {
    match v {
        Value::Array(xs) => {
            if xs.len() != len {
                return Err(CliError::config(format!("expected {len} {what} values, got {}", xs.len())));
            }
            xs.iter().map(rational).collect()
        }
        Value::Object(m) => {
            let mut out = vec![Rational::zero(); len];
            for (k, x) in m {
                let i = key(k).ok_or_else(|| CliError::config(format!("unknown {what} {k:?}")))?;
                out[i] = rational(x)?;
            }
            Ok(out)
        }
        _ => Err(CliError::config(format!("expected an array or object of {what} values"))),
    }
}

pub fn edge_map(g: &Graph, xs: &[Rational]) -> Value {
    let m = g
        .edges()
        .iter()
        .zip(xs)
        .map(|(&(u, v), x)| (format!("{u}-{v}"), Value::String(x.to_string())))
        .collect::<serde_json::Map<_, _>>();
    Value::Object(m)
}

pub fn strings(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(x.to_string())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn vectors_accept_arrays_and_keyed_objects() {
        let g = from_spec("cycle:3").unwrap();
        let a = vertex_vector(&json!(["1/3", "0", 1]), &g).unwrap();
        assert_eq!(a[2], Rational::one());
        let b = edge_vector(&json!({"kappa": {"0-2": "1/2"}}), &g).unwrap();
        assert_eq!(b[g.edge_index(2, 0).unwrap()], Rational::new(1, 2));
        assert!(edge_vector(&json!({"0-0": "1"}), &g).is_err());
        assert!(vertex_vector(&json!([0.5, 0, 0]), &g).is_err());
        assert!(vertex_vector(&json!(["1"]), &g).is_err());
    }

    #[test]
    fn scale_json_forms() {
        assert_eq!(scale_from_json(&json!({"radius": 2})).unwrap(), ScaleSpec::Radius(2));
        let ScaleSpec::Explicit(sc) = scale_from_json(&json!({"sets": [[0, 1], [1]]})).unwrap() else {
            panic!("expected explicit sets")
        };
        assert_eq!(sc.sets[0], vec![0, 1]);
        assert!(scale_from_json(&json!({"r": 1})).is_err());
    }
}
