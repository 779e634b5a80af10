//! `verify`: re-checks every kind of document the CLI writes, plus bare
//! flow certificates and measure families written by hand.

use propa_core::flows::{verify_flow_certificate, verify_measure_family, FlowCertificate, MeasureFamily};
use propa_core::invariants::{
    cheeger_at_scale, mean_property_a_value, sparsest_cut_at_scale, uniform_flows_value, CheegerMethod,
    EpsilonMethod,
};
use propa_core::{Graph, Rational};
use serde_json::{json, Value};

use crate::commands::{formula_value, sequence, uniform_gamma, Context};
use crate::input::{edge_vector, load_graph, load_scale, rational, scale_from_json, vertex_vector};
use crate::{CliError, FormulaFamily, Global, Output, SequenceFamily};

fn field<'a>(doc: &'a Value, name: &str) -> Result<&'a Value, CliError> {
    doc.get(name).ok_or_else(|| CliError::config(format!("document has no {name:?} field")))
}

fn rat_field(doc: &Value, name: &str) -> Result<Rational, CliError> {
    rational(field(doc, name)?)
}

fn usize_list(v: &Value) -> Result<Vec<usize>, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::config(format!("bad vertex list: {e}")))
}

fn u32_field(doc: &Value, name: &str) -> Option<u32> {
    doc.get(name).and_then(Value::as_u64).map(|x| x as u32)
}

/// Flags win over the embedded graph; an embedded scale wins over `--scale`.
fn context(global: &Global, doc: &Value) -> Result<Context, CliError> {
    let graph = match (&global.gen, &global.graph, doc.get("graph")) {
        (None, None, Some(Value::Object(_))) => {
            serde_json::from_value::<Graph>(doc["graph"].clone()).map_err(|e| CliError::config(format!("graph: {e}")))?
        }
        _ => load_graph(global.gen.as_deref(), global.graph.as_deref())?,
    };
    let spec = match doc.get("scale") {
        Some(v) if v.is_object() => scale_from_json(v)?,
        _ => load_scale(&global.scale)?,
    };
    Context::new(graph, spec)
}

fn detect(doc: &Value) -> &str {
    if let Some(k) = doc.get("kind").and_then(Value::as_str) {
        return k;
    }
    if doc.get("primal").is_some() && doc.get("dual").is_some() {
        "epsilon"
    } else if doc.get("flows").is_some() {
        "flow-certificate"
    } else if doc.get("xi").is_some() {
        "measures"
    } else if doc.get("vertices").is_some() {
        "graph"
    } else {
        "unknown"
    }
}

fn expect_eq(bad: &mut Vec<String>, what: &str, claimed: &Rational, actual: &Rational) {
    if claimed != actual {
        bad.push(format!("{what}: claimed {claimed}, recomputed {actual}"));
    }
}

pub fn run(global: &Global, doc: &Value) -> Result<Output, CliError> {
    let kind = detect(doc).to_string();
    let mut bad = Vec::new();
    let value: Value = match kind.as_str() {
        "epsilon" => {
            let ctx = context(global, doc)?;
            let eps = rat_field(doc, "epsilon")?;
            let mf: MeasureFamily = serde_json::from_value(field(doc, "primal")?.clone())
                .map_err(|e| CliError::config(format!("primal: {e}")))?;
            let fc = FlowCertificate::from_json(field(doc, "dual")?, &ctx.graph)
                .map_err(|e| CliError::config(format!("dual: {e}")))?;
            expect_eq(&mut bad, "primal bound", &eps, &mf.epsilon);
            let p = verify_measure_family(&ctx.graph, &ctx.scale, &mf);
            bad.extend(p.violations.into_iter().map(|v| format!("primal: {v}")));
            let d = verify_flow_certificate(&ctx.graph, &ctx.dual()?, &fc, Some(&eps));
            bad.extend(d.violations.into_iter().map(|v| format!("dual: {v}")));
            json!(eps)
        }
        "flow-certificate" => {
            let ctx = context(global, doc)?;
            let fc = FlowCertificate::from_json(doc, &ctx.graph).map_err(|e| CliError::config(e.to_string()))?;
            let claimed = match doc.get("epsilon").or_else(|| doc.get("objective")) {
                Some(v) => Some(rational(v)?),
                None => None,
            };
            let d = verify_flow_certificate(&ctx.graph, &ctx.dual()?, &fc, claimed.as_ref());
            bad.extend(d.violations);
            json!(d.value)
        }
        "measures" => {
            let ctx = context(global, doc)?;
            let mf: MeasureFamily =
                serde_json::from_value(doc.clone()).map_err(|e| CliError::config(format!("measures: {e}")))?;
            let p = verify_measure_family(&ctx.graph, &ctx.scale, &mf);
            bad.extend(p.violations);
            json!(p.value)
        }
        "cheeger" => {
            let ctx = context(global, doc)?;
            let gamma = rat_field(doc, "gamma")?;
            let method = match doc.get("witness") {
                Some(w) if !w.is_null() => {
                    check_ratio(&mut bad, &ctx, &usize_list(w)?, &gamma, &|_| Rational::one())?;
                    CheegerMethod::BruteForce
                }
                _ => CheegerMethod::Lp,
            };
            let again = cheeger_at_scale(&ctx.graph, ctx.spec.clone(), method, global.cap)?;
            expect_eq(&mut bad, "gamma", &gamma, &again.gamma);
            json!(gamma)
        }
        "sparsest" => {
            let ctx = context(global, doc)?;
            let value = rat_field(doc, "value")?;
            let kappa = edge_vector(field(doc, "kappa")?, &ctx.graph)?;
            check_ratio(&mut bad, &ctx, &usize_list(field(doc, "witness")?)?, &value, &|e| kappa[e].clone())?;
            let again = sparsest_cut_at_scale(&ctx.graph, ctx.spec.clone(), &kappa, global.cap)?;
            expect_eq(&mut bad, "sparsest cut", &value, &again.value);
            json!(value)
        }
        "uniform" => {
            let ctx = context(global, doc)?;
            let objective = rat_field(doc, "objective")?;
            let again = uniform_flows_value(&ctx.graph, ctx.spec.clone())?;
            expect_eq(&mut bad, "objective", &objective, &again);
            expect_eq(&mut bad, "gamma", &rat_field(doc, "gamma")?, &uniform_gamma(&ctx.graph, &again));
            json!(objective)
        }
        "mean" => {
            let ctx = context(global, doc)?;
            let value = rat_field(doc, "value")?;
            expect_eq(&mut bad, "value", &value, &mean_property_a_value(&ctx.graph, ctx.spec.clone())?);
            json!(value)
        }
        "violation" => {
            let ctx = context(global, doc)?;
            let g = &ctx.graph;
            let eta = vertex_vector(field(doc, "eta")?, g)?;
            let kappa = edge_vector(field(doc, "kappa")?, g)?;
            let t = usize_list(field(doc, "witness")?)?;
            let focus = field(doc, "focus")?.as_u64().map(|k| k as usize).filter(|&k| k < g.vertex_count());
            let dsc = ctx.dual()?;
            match focus {
                Some(k) if t.iter().all(|i| dsc.sets[k].contains(i)) => {}
                _ => bad.push("witness is not inside the focus's dual-scale set".into()),
            }
            let demand: Rational = t.iter().filter(|&&i| i < eta.len()).map(|&i| eta[i].clone()).sum();
            let capacity: Rational = g.boundary_of(&t).into_iter().map(|e| kappa[e].clone()).sum();
            if t.is_empty() || demand <= capacity {
                bad.push(format!("demand {demand} does not exceed boundary capacity {capacity}"));
            }
            json!(demand)
        }
        "formula" => {
            let family = match doc.get("family").and_then(Value::as_str) {
                Some("cube") => FormulaFamily::Cube,
                Some("girth") => FormulaFamily::Girth,
                Some("tree") => FormulaFamily::Tree,
                other => return Err(CliError::config(format!("unknown formula family {other:?}"))),
            };
            let p = |k| u32_field(doc, k);
            let again = formula_value(family, p("n"), p("s"), p("d"), p("k"))?;
            let value = rat_field(doc, "value")?;
            expect_eq(&mut bad, "value", &value, &rational(&again["value"])?);
            if let Some(lp) = doc.get("lp_value") {
                let agrees = rational(lp)? == value;
                if doc.get("matches").and_then(Value::as_bool) != Some(agrees) {
                    bad.push("\"matches\" disagrees with the values".into());
                }
            }
            json!(value)
        }
        "sequence" => {
            let family = match doc.get("family").and_then(Value::as_str) {
                Some("cubes") => SequenceFamily::Cubes,
                Some("cycles") => SequenceFamily::Cycles,
                Some("ladders") => SequenceFamily::Ladders,
                other => return Err(CliError::config(format!("unknown sequence family {other:?}"))),
            };
            let num = |k: &str| {
                doc.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(|| CliError::config(format!("missing {k:?}")))
            };
            let method: EpsilonMethod = doc
                .get("method")
                .and_then(Value::as_str)
                .unwrap_or("separation")
                .parse()
                .map_err(|e: propa_core::invariants::InvariantError| CliError::config(e.to_string()))?;
            let again = sequence(family, num("min_n")?, num("max_n")?, num("radius")?, method)?;
            if again["values"] != doc["values"] {
                bad.push(format!("values: claimed {}, recomputed {}", doc["values"], again["values"]));
            }
            doc["values"].clone()
        }
        "graph" => {
            if let Err(e) = serde_json::from_value::<Graph>(doc.clone()) {
                bad.push(e.to_string());
            }
            Value::Null
        }
        other => return Err(CliError::config(format!("cannot tell what kind of document this is ({other})"))),
    };
    for v in &bad {
        eprintln!("propa: {v}");
    }
    let ok = bad.is_empty();
    let report = json!({"ok": ok, "kind": kind, "value": value, "violations": bad});
    Ok(Output::Json(report, if ok { 0 } else { 1 }))
}

/// `T` lies in some dual-scale set and its weighted boundary ratio is `claimed`.
fn check_ratio(
    bad: &mut Vec<String>,
    ctx: &Context,
    t: &[usize],
    claimed: &Rational,
    weight: &dyn Fn(usize) -> Rational,
) -> Result<(), CliError> {
    let g = &ctx.graph;
    if t.is_empty() || t.iter().any(|&i| i >= g.vertex_count()) {
        bad.push(format!("witness {t:?} is empty or out of range"));
        return Ok(());
    }
    let dsc = ctx.dual()?;
    if !dsc.sets.iter().any(|s| t.iter().all(|i| s.contains(i))) {
        bad.push(format!("witness {t:?} is not inside any dual-scale set"));
    }
    let b: Rational = g.boundary_of(t).into_iter().map(weight).sum();
    expect_eq(bad, "witness ratio", claimed, &(b / Rational::from(t.len())));
    Ok(())
}
