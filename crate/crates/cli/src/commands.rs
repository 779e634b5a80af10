use std::fs;
use std::path::Path;

use propa_core::flows::{lift_and_project, verify_flow_certificate, FlowError};
use propa_core::graph::{circular_ladder, cycle, dual_scale, girth, hypercube};
use propa_core::invariants::{
    cheeger_at_scale, cube_epsilon_formula, epsilon_at_scale, epsilon_sequence, girth_cheeger_formula,
    girth_epsilon_formula, mean_property_a_value, sparsest_cut_at_scale, tree_isoperimetric_number,
    uniform_flows_value, EpsilonMethod, ScaleSpec,
};
use propa_core::{Graph, GraphError, Rational, Scale};
use serde_json::{json, Map, Value};

use crate::input::{edge_map, edge_vector, load_graph, load_scale, read_json, strings, vertex_vector};
use crate::{verify, CliError, Command, FormulaFamily, Global, GraphFormat, Output, SequenceFamily};

/// The graph and scale named by the global flags.
pub struct Context {
    pub graph: Graph,
    pub spec: ScaleSpec,
    pub scale: Scale,
}

impl Context {
    pub fn load(global: &Global) -> Result<Context, CliError> {
        let graph = load_graph(global.gen.as_deref(), global.graph.as_deref())?;
        let spec = load_scale(&global.scale)?;
        Context::new(graph, spec)
    }

    pub fn new(graph: Graph, spec: ScaleSpec) -> Result<Context, CliError> {
        let mut scale = spec.resolve(&graph)?;
        scale.radius = spec.radius();
        Ok(Context { graph, spec, scale })
    }

    pub fn dual(&self) -> Result<Scale, CliError> {
        dual_scale(&self.scale).map_err(|e| CliError::config(e.to_string()))
    }

    /// `fields` plus the graph and scale, so `verify` needs nothing else.
    fn report(&self, kind: &str, fields: Value) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), json!(kind));
        if let Value::Object(f) = fields {
            m.extend(f);
        }
        m.insert("scale".into(), json!(self.scale));
        m.insert("graph".into(), json!(self.graph));
        Value::Object(m)
    }
}

fn parse_method<T: std::str::FromStr<Err = propa_core::invariants::InvariantError>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(|e: propa_core::invariants::InvariantError| CliError::config(e.to_string()))
}

fn write_dot(path: Option<&Path>, g: &Graph, set: &[usize]) -> Result<(), CliError> {
    if let Some(p) = path {
        fs::write(p, g.to_dot(set)).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

pub fn dispatch(global: &Global, cmd: &Command) -> Result<Output, CliError> {
    match cmd {
        Command::Epsilon { method } => epsilon(&Context::load(global)?, parse_method(method)?),
        Command::Cheeger { method, dot } => {
            let ctx = Context::load(global)?;
            let rep = cheeger_at_scale(&ctx.graph, ctx.spec.clone(), parse_method(method)?, global.cap)?;
            if let Some(t) = &rep.witness {
                write_dot(dot.as_deref(), &ctx.graph, t)?;
            }
            let body = json!({"gamma": rep.gamma, "witness": rep.witness, "method": rep.method, "radius": rep.radius});
            Ok(Output::Json(ctx.report("cheeger", body), 0))
        }
        Command::Uniform => {
            let ctx = Context::load(global)?;
            let g = &ctx.graph;
            let objective = uniform_flows_value(g, ctx.spec.clone())?;
            let gamma = uniform_gamma(g, &objective);
            Ok(Output::Json(ctx.report("uniform", json!({"objective": objective, "gamma": gamma})), 0))
        }
        Command::Mean => {
            let ctx = Context::load(global)?;
            let value = mean_property_a_value(&ctx.graph, ctx.spec.clone())?;
            Ok(Output::Json(ctx.report("mean", json!({"value": value})), 0))
        }
        Command::Sparsest { kappa, dot } => {
            let ctx = Context::load(global)?;
            let kappa = edge_vector(&read_json(kappa)?, &ctx.graph)?;
            let cut = sparsest_cut_at_scale(&ctx.graph, ctx.spec.clone(), &kappa, global.cap)?;
            write_dot(dot.as_deref(), &ctx.graph, &cut.witness)?;
            let body = json!({"value": cut.value, "witness": cut.witness, "kappa": edge_map(&ctx.graph, &kappa)});
            Ok(Output::Json(ctx.report("sparsest", body), 0))
        }
        Command::Lift { eta, kappa, dot } => {
            let ctx = Context::load(global)?;
            let eta = vertex_vector(&read_json(eta)?, &ctx.graph)?;
            let kappa = edge_vector(&read_json(kappa)?, &ctx.graph)?;
            lift(&ctx, &eta, &kappa, dot.as_deref())
        }
        Command::Verify { certificate } => verify::run(global, &read_json(certificate)?),
        Command::Formula { family, n, s, d, k, check } => formula(global, *family, *n, *s, *d, *k, *check),
        Command::Sequence { family, max_n, min_n, method } => {
            let ScaleSpec::Radius(s) = load_scale(&global.scale)? else {
                return Err(CliError::config("sequence needs a radius, not explicit scale sets"));
            };
            Ok(Output::Json(sequence(*family, min_n.unwrap_or(family_start(*family)), *max_n, s, parse_method(method)?)?, 0))
        }
        Command::Generate { format } => {
            let g = load_graph(global.gen.as_deref(), global.graph.as_deref())?;
            Ok(match format {
                GraphFormat::Text => Output::Text(g.to_text()),
                GraphFormat::Json => Output::Json(json!(g), 0),
            })
        }
    }
}

/// `γ` from the uniform-flows optimum: the LP value scaled by `|E|/|V|`.
pub fn uniform_gamma(g: &Graph, objective: &Rational) -> Rational {
    if g.vertex_count() == 0 {
        return Rational::zero();
    }
    objective * &Rational::new(g.edge_count() as i64, g.vertex_count() as i64)
}

fn epsilon(ctx: &Context, method: EpsilonMethod) -> Result<Output, CliError> {
    let rep = epsilon_at_scale(&ctx.graph, ctx.spec.clone(), method)?;
    let mut v = rep.to_json(&ctx.graph);
    v["kind"] = json!("epsilon");
    v["graph"] = json!(ctx.graph);
    Ok(Output::Json(v, 0))
}

fn lift(ctx: &Context, eta: &[Rational], kappa: &[Rational], dot: Option<&Path>) -> Result<Output, CliError> {
    let g = &ctx.graph;
    let dsc = ctx.dual()?;
    match lift_and_project(g, &dsc, eta, kappa) {
        Ok(fc) => {
            let check = verify_flow_certificate(g, &dsc, &fc, None);
            if !check.ok {
                return Err(CliError::internal(format!("lifted certificate fails: {}", check.violations.join("; "))));
            }
            let mut v = ctx.report("flow-certificate", fc.to_json(g));
            v["epsilon"] = json!(fc.objective());
            Ok(Output::Json(v, 0))
        }
        Err(FlowError::Infeasible { focus, witness }) => {
            write_dot(dot, g, &witness)?;
            let demand: Rational = witness.iter().map(|&i| eta[i].clone()).sum();
            let capacity: Rational = g.boundary_of(&witness).into_iter().map(|e| kappa[e].clone()).sum();
            eprintln!("propa: demand {demand} of {witness:?} exceeds boundary capacity {capacity}");
            let body = json!({
                "focus": focus,
                "witness": witness,
                "demand": demand,
                "capacity": capacity,
                "eta": strings(eta),
                "kappa": edge_map(g, kappa),
            });
            Ok(Output::Json(ctx.report("violation", body), 1))
        }
        Err(e) => Err(CliError::config(e.to_string())),
    }
}

fn need(x: Option<u32>, flag: &str) -> Result<u32, CliError> {
    x.ok_or_else(|| CliError::config(format!("this formula needs --{flag}")))
}

/// Closed-form value for `family`; the parameters echo back for `verify`.
pub fn formula_value(
    family: FormulaFamily,
    n: Option<u32>,
    s: Option<u32>,
    d: Option<u32>,
    k: Option<u32>,
) -> Result<Value, CliError> {
    Ok(match family {
        FormulaFamily::Cube => {
            let (n, s) = (need(n, "n")?, need(s, "s")?);
            if n == 0 {
                return Err(CliError::config("hypercube needs n >= 1"));
            }
            json!({"family": "cube", "n": n, "s": s, "value": cube_epsilon_formula(n, s)})
        }
        FormulaFamily::Girth => {
            let (d, s) = (need(d, "d")?, need(s, "s")?);
            json!({
                "family": "girth",
                "d": d,
                "s": s,
                "value": girth_epsilon_formula(d, s)?,
                "gamma": girth_cheeger_formula(d, s)?,
            })
        }
        FormulaFamily::Tree => {
            let (d, n, k) = (need(d, "d")?, need(n, "n")?, need(k, "k")?);
            json!({"family": "tree", "d": d, "n": n, "k": k, "value": tree_isoperimetric_number(d, n, k)?})
        }
    })
}

fn formula(
    global: &Global,
    family: FormulaFamily,
    n: Option<u32>,
    s: Option<u32>,
    d: Option<u32>,
    k: Option<u32>,
    check: bool,
) -> Result<Output, CliError> {
    let mut v = formula_value(family, n, s, d, k)?;
    v["kind"] = json!("formula");
    if !check {
        return Ok(Output::Json(v, 0));
    }
    let s = s.unwrap_or(0) as usize;
    let g = match family {
        FormulaFamily::Cube => hypercube(n.unwrap_or(0) as usize).map_err(|e| CliError::config(e.to_string()))?,
        FormulaFamily::Girth => {
            let g = load_graph(global.gen.as_deref(), global.graph.as_deref())?;
            let d = d.unwrap_or(0) as usize;
            if g.regular_degree() != Some(d) {
                return Err(CliError::config(format!("graph is not {d}-regular")));
            }
            if girth(&g).is_some_and(|c| c <= 2 * s + 1) {
                return Err(CliError::config(format!("graph girth is not above {}", 2 * s + 1)));
            }
            g
        }
        FormulaFamily::Tree => return Err(CliError::config("tree formulas have no LP check")),
    };
    let lp = epsilon_at_scale(&g, s, EpsilonMethod::Separation)?.epsilon;
    let matches = v["value"] == json!(lp);
    v["graph"] = json!(g.name());
    v["lp_value"] = json!(lp);
    v["matches"] = json!(matches);
    if !matches {
        eprintln!("propa: formula {} but LP gives {lp}", v["value"]);
    }
    Ok(Output::Json(v, if matches { 0 } else { 1 }))
}

pub fn family_start(family: SequenceFamily) -> usize {
    match family {
        SequenceFamily::Cubes => 2,
        SequenceFamily::Cycles | SequenceFamily::Ladders => 3,
    }
}

fn family_member(family: SequenceFamily, n: usize) -> Result<Graph, GraphError> {
    match family {
        SequenceFamily::Cubes => hypercube(n),
        SequenceFamily::Cycles => cycle(n),
        SequenceFamily::Ladders => circular_ladder(n),
    }
}

pub fn sequence(
    family: SequenceFamily,
    min_n: usize,
    max_n: usize,
    s: usize,
    method: EpsilonMethod,
) -> Result<Value, CliError> {
    if min_n > max_n {
        return Err(CliError::config(format!("empty range {min_n}..={max_n}")));
    }
    let graphs = (min_n..=max_n)
        .map(|n| family_member(family, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::config(e.to_string()))?;
    let values = epsilon_sequence(&graphs, s, method)?;
    let items: Vec<Value> = (min_n..=max_n)
        .zip(&graphs)
        .zip(&values)
        .map(|((n, g), e)| json!({"n": n, "graph": g.name(), "epsilon": e}))
        .collect();
    Ok(json!({
        "kind": "sequence",
        "family": family.name(),
        "radius": s,
        "method": method,
        "min_n": min_n,
        "max_n": max_n,
        "values": values,
        "items": items,
    }))
}
