//! Batch experiment runner: scene construction, deep homology, duality
//! ladders, adjacency and Jordan pipelines, with deterministic JSON reports
//! and DOT graph output.
//!
//! Reports are versioned (`"schema": 1`) and embed their configuration, so a
//! report can be replayed: everything is recomputed from the embedded config
//! and diffed against the recorded results, naming the first identity that
//! no longer holds.

use crate::coarse::{approximate_chain_map, estimate_controls, ChainApprox, CoarseMap, FillOrder};
use crate::duality::{verify_duality_iso, DualityPair, DualityScene};
use crate::error::{Error, Result};
use crate::filtered::{deep_components, DeepHomology, EndFiltration};
use crate::grid::{build_window, window_boundary};
use crate::linalg::hom_image;
use crate::scenes::{
    adjacency_chain_complex, adjacency_graph, build_book, collapse_map, deep_containment_check,
    div_round, embed_book, jordan_cycle, verify_circuit, AdjacencyGraph, Scene,
};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// Which pipeline stages an experiment runs.
#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Ends,
    DeepHomology,
    Duality,
    Adjacency,
    Jordan,
    Ladder,
    Collapse,
    Containment,
}

/// A scene experiment: a book (or, with `k = 0`, the bare spine line)
/// embedded in the window `[-window, window]^3`, plus the checks to run.
#[derive(Serialize, Deserialize, Clone, PartialEq, Debug)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Page count; `0` runs the spine-only line scene.
    pub k: usize,
    pub directions: Vec<[i64; 2]>,
    /// Truncation radius `T` of the book.
    pub extent: i64,
    /// Window half-width `S`.
    pub window: i64,
    pub r_min: u32,
    pub r_max: u32,
    /// Confidence window for stability detection.
    pub confidence: usize,
    /// Seed for the control-estimate sampling.
    pub seed: u64,
    /// Degrees for deep homology and duality checks.
    pub degrees: Vec<usize>,
    pub checks: Vec<CheckKind>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let required = 2 * self.r_max as i64 + 2;
        if self.window < required {
            return Err(Error::WindowPolicy {
                s: self.window,
                r_max: self.r_max,
                required,
            });
        }
        if self.directions.len() != self.k {
            return Err(Error::Config(format!(
                "{} directions given for k = {}",
                self.directions.len(),
                self.k
            )));
        }
        if self.confidence < 2 {
            return Err(Error::Config("confidence window must be at least 2".into()));
        }
        Ok(())
    }
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// The outcome of a run: the report document, the overall verdict, and the
/// adjacency graph in DOT format when one was built.
pub struct Experiment {
    pub report: Value,
    pub pass: bool,
    pub dot: Option<String>,
}

fn chain_json(ch: &crate::chain::LChain) -> Value {
    Value::Array(
        ch.iter().map(|(l, c)| json!([l, c.to_string()])).collect(),
    )
}

fn group_str(g: &crate::linalg::FgAbGroup) -> String {
    g.to_string()
}

/// The spine-only line scene: a 1-dimensional lattice window embedded onto
/// the z-axis.
fn line_scene(cfg: &ExperimentConfig, budget: Option<usize>) -> Result<DualityScene> {
    let dom = build_window(1, cfg.extent, None)?;
    let window = build_window(3, cfg.window, budget)?;
    let vertex_image = dom
        .verts
        .iter()
        .map(|&[a, _, _]| window.vert_index[&[0, 0, div_round(a * cfg.window, cfg.extent)]])
        .collect();
    let map = CoarseMap::new(&dom, &window, vertex_image);
    let controls = estimate_controls(&map, dom.verts.len().min(48), cfg.seed);
    if !controls.proper {
        return Err(Error::Config("line embedding controls are not proper".into()));
    }
    let f = approximate_chain_map(&map, FillOrder::Forward)?;
    DualityScene::new(f, window_boundary(&dom), cfg.r_min, cfg.r_max)
}

fn ends_entry(
    f: &ChainApprox,
    cfg: &ExperimentConfig,
    pass: &mut bool,
) -> Result<Value> {
    let support = f.support();
    let filtration = EndFiltration::new(&support, cfg.r_min, cfg.r_max)?;
    let ends = deep_components(&filtration)?;
    let expected = cfg.k.max(1);
    *pass &= ends.count == expected;
    let reps: Vec<Value> = ends
        .reps
        .iter()
        .map(|&v| json!(f.cod.verts[v as usize].to_vec()))
        .collect();
    Ok(json!({
        "count": ends.count,
        "expected": expected,
        "r0": ends.r0,
        "representatives": reps,
    }))
}

fn deep_homology_entry(
    f: &ChainApprox,
    cfg: &ExperimentConfig,
    pass: &mut bool,
) -> Result<Value> {
    let support = f.support();
    let filtration = EndFiltration::new(&support, cfg.r_min, cfg.r_max)?;
    let mut rows = Vec::new();
    for &d in &cfg.degrees {
        let dh = DeepHomology::compute(&filtration, d, true, None, cfg.confidence)?;
        let stable = dh.is_stable();
        *pass &= stable;
        let group = if stable { group_str(&dh.limit()?.group) } else { "unstable".into() };
        rows.push(json!({"degree": d, "reduced": true, "stable": stable, "group": group}));
    }
    Ok(Value::Array(rows))
}

fn duality_entry(
    dscene: &DualityScene,
    cfg: &ExperimentConfig,
    pass: &mut bool,
) -> Result<Value> {
    let mut rows = Vec::new();
    for &k in &cfg.degrees {
        let rep = verify_duality_iso(dscene, k, cfg.confidence)?;
        *pass &= rep.all_good();
        let stages: Vec<Value> = rep
            .stages
            .iter()
            .map(|s| {
                json!({
                    "r": s.t,
                    "group": group_str(&s.group),
                    "iso": s.iso,
                    "compatible_sign": s.compat.map(|c| c.map(i64::from)),
                })
            })
            .collect();
        rows.push(json!({
            "degree": k,
            "target": group_str(&rep.target),
            "stage_offset": rep.stage_offset,
            "limit_iso": rep.limit_iso,
            "stages": stages,
        }));
    }
    Ok(Value::Array(rows))
}

fn adjacency_entry(
    scene: &Scene,
    graph: &AdjacencyGraph,
    pass: &mut bool,
) -> Result<Value> {
    let circuit = verify_circuit(graph.vertex_count(), &graph.edge_pairs());
    *pass &= circuit.is_circuit;
    let edges: Vec<Value> = graph
        .edges
        .iter()
        .map(|e| json!({"page": e.page, "endpoints": [e.endpoints.0, e.endpoints.1], "stage": e.stage}))
        .collect();
    let cc = adjacency_chain_complex(scene, graph)?;
    *pass &= cc.matches_incidence && cc.basis_unimodular && cc.jordan_generates_h1;
    *pass &= group_str(&cc.h0) == "Z" && group_str(&cc.h1) == "Z";
    let boundary: Vec<Vec<String>> = cc
        .boundary
        .iter()
        .map(|row| row.iter().map(BigInt::to_string).collect())
        .collect();
    Ok(json!({
        "vertices": graph.vertex_count(),
        "edges": edges,
        "circuit": circuit.is_circuit,
        "cyclic_order": circuit.cyclic_order,
        "chain_complex": {
            "boundary": boundary,
            "h0": group_str(&cc.h0),
            "h1": group_str(&cc.h1),
            "matches_incidence": cc.matches_incidence,
            "basis_unimodular": cc.basis_unimodular,
            "jordan_generates_h1": cc.jordan_generates_h1,
        },
    }))
}

fn jordan_entry(scene: &Scene, graph: &AdjacencyGraph, pass: &mut bool) -> Result<Value> {
    let plus = jordan_cycle(scene, graph, 1)?;
    let minus = jordan_cycle(scene, graph, -1)?;
    let one = BigInt::from(1);
    let diagonal = plus.coordinates.iter().all(|c| *c == one);
    let flips = plus
        .coordinates
        .iter()
        .zip(&minus.coordinates)
        .all(|(a, b)| *b == -a);
    *pass &= diagonal && flips;
    Ok(json!({
        "coordinates": plus.coordinates.iter().map(BigInt::to_string).collect::<Vec<_>>(),
        "generator_cycle": chain_json(&plus.generator),
        "stage": plus.stage,
        "normalization": "factor generators are the single-page images of the positive Jordan generator",
        "diagonal": diagonal,
        "orientation_flip": flips,
    }))
}

/// The ladder needs a chain map that carries the domain frontier into the
/// window shell simplex-by-simplex; the flat plane/half-plane pair embedded
/// at height zero satisfies this on the nose, so the ladder runs on that
/// pair inside the configured window.
fn ladder_entry(cfg: &ExperimentConfig, budget: Option<usize>, pass: &mut bool) -> Result<Value> {
    let s = cfg.window;
    let window = build_window(3, s, budget)?;
    let dom = build_window(2, s, budget)?;
    let vertex_image = dom
        .verts
        .iter()
        .map(|&[a, b, _]| window.vert_index[&[a, b, 0]])
        .collect();
    let f = approximate_chain_map(&CoarseMap::new(&dom, &window, vertex_image), FillOrder::Forward)?;
    let fr = dom.full_subcomplex_on(
        &(0..dom.verts.len() as u32)
            .filter(|&v| {
                let [a, b, _] = dom.verts[v as usize];
                a.abs() == s || b.abs() == s
            })
            .collect::<Vec<_>>(),
    );
    let z1 = dom.full_subcomplex_on(
        &(0..dom.verts.len() as u32)
            .filter(|&v| dom.verts[v as usize][0] >= 0)
            .collect::<Vec<_>>(),
    );
    let pair = DualityPair::new(f, fr, z1, cfg.r_min, cfg.r_max)?;
    let degree = 1usize;
    let mut stages = Vec::new();
    for t in cfg.r_min..cfg.r_max {
        let st = pair.ladder_stage(degree, t)?;
        *pass &= st.all_good();
        let squares: Vec<Value> = st
            .squares
            .iter()
            .map(|s| json!({"commutes": s.is_some(), "sign": s.map(i64::from)}))
            .collect();
        let verticals: Vec<Value> = st
            .verticals
            .iter()
            .zip(&st.verticals_iso)
            .map(|(v, &iso)| {
                json!({
                    "groups": [group_str(&v.dom), group_str(&v.cod)],
                    "map_rank": hom_image(v).group.free_rank,
                    "is_iso": iso,
                })
            })
            .collect();
        stages.push(json!({
            "r": t,
            "squares": squares,
            "top_exact": st.top_exact.to_vec(),
            "bottom_exact": st.bottom_exact.to_vec(),
            "verticals": verticals,
        }));
    }
    Ok(json!({"degree": degree, "stages": stages}))
}

fn collapse_entry(scene: &Scene, graph: &AdjacencyGraph, pass: &mut bool) -> Result<Value> {
    let mut rows = Vec::new();
    for &i in &graph.pages {
        let (sub, verdict) = collapse_map(scene, graph, i)?;
        let sub_circuit = sub.edges.is_empty()
            || verify_circuit(sub.vertex_count(), &sub.edge_pairs()).is_circuit;
        *pass &= verdict.is_graph_morphism && verdict.squares_commute && sub_circuit;
        rows.push(json!({
            "page": i,
            "vertex_map": verdict.vertex_map,
            "collapsed_to": verdict.collapsed_to,
            "is_graph_morphism": verdict.is_graph_morphism,
            "squares_commute": verdict.squares_commute,
            "sub_circuit": sub_circuit,
        }));
    }
    Ok(Value::Array(rows))
}

fn containment_entry(scene: &Scene, graph: &AdjacencyGraph, pass: &mut bool) -> Result<Value> {
    let mut rows = Vec::new();
    for &i in &graph.pages {
        let v = deep_containment_check(scene, graph, i)?;
        *pass &= v.m.is_some();
        rows.push(json!({"page": i, "r0": v.r0, "m": v.m, "end": v.end}));
    }
    Ok(Value::Array(rows))
}

/// Render the adjacency graph as DOT, edge labels `e_1..e_k`, vertex labels
/// the end indices.
pub fn adjacency_dot(graph: &AdjacencyGraph) -> String {
    let mut out = String::from("graph adjacency {\n");
    for v in 0..graph.vertex_count() {
        out.push_str(&format!("  v{v} [label=\"end {v}\"];\n"));
    }
    for e in &graph.edges {
        out.push_str(&format!(
            "  v{} -- v{} [label=\"e_{}\"];\n",
            e.endpoints.0,
            e.endpoints.1,
            e.page + 1
        ));
    }
    out.push_str("}\n");
    out
}

/// Run an experiment. The report is fully deterministic: the same config
/// and build produce byte-identical output.
pub fn run_experiment(cfg: &ExperimentConfig, budget: Option<usize>) -> Result<Experiment> {
    cfg.validate()?;
    let mut pass = true;
    let mut results = Map::new();
    let mut dot = None;

    if cfg.k == 0 {
        let dscene = line_scene(cfg, budget)?;
        let f = &dscene.f;
        results.insert(
            "scene".into(),
            json!({
                "window_vertices": f.cod.verts.len(),
                "window_simplices": f.cod.num_simplices(),
                "displacement": f.displacement,
            }),
        );
        for check in &cfg.checks {
            let (key, value) = match check {
                CheckKind::Ends => ("ends", ends_entry(f, cfg, &mut pass)?),
                CheckKind::DeepHomology => {
                    ("deep_homology", deep_homology_entry(f, cfg, &mut pass)?)
                }
                CheckKind::Duality => ("duality", duality_entry(&dscene, cfg, &mut pass)?),
                other => {
                    return Err(Error::Config(format!(
                        "check {other:?} needs at least one page"
                    )))
                }
            };
            results.insert(key.into(), value);
        }
    } else {
        let dirs: Vec<(i64, i64)> = cfg.directions.iter().map(|&[p, q]| (p, q)).collect();
        let book = build_book(cfg.k, &dirs, cfg.extent);
        let scene = embed_book(
            book,
            cfg.window,
            cfg.r_min,
            cfg.r_max,
            cfg.confidence,
            cfg.seed,
            budget,
        )?;
        results.insert(
            "scene".into(),
            json!({
                "window_vertices": scene.window.verts.len(),
                "window_simplices": scene.window.num_simplices(),
                "book_vertices": scene.book.complex.verts.len(),
                "displacement": scene.f.displacement,
            }),
        );
        let mut graph_cache: Option<AdjacencyGraph> = None;
        for check in &cfg.checks {
            let needs_graph = matches!(
                check,
                CheckKind::Adjacency
                    | CheckKind::Jordan
                    | CheckKind::Collapse
                    | CheckKind::Containment
            );
            if needs_graph && graph_cache.is_none() {
                graph_cache = Some(adjacency_graph(&scene)?);
            }
            let (key, value) = match check {
                CheckKind::Ends => ("ends", ends_entry(&scene.f, cfg, &mut pass)?),
                CheckKind::DeepHomology => {
                    ("deep_homology", deep_homology_entry(&scene.f, cfg, &mut pass)?)
                }
                CheckKind::Duality => {
                    let dscene = scene.duality_scene()?;
                    ("duality", duality_entry(&dscene, cfg, &mut pass)?)
                }
                CheckKind::Adjacency => {
                    let graph = graph_cache.as_ref().unwrap();
                    dot = Some(adjacency_dot(graph));
                    ("adjacency", adjacency_entry(&scene, graph, &mut pass)?)
                }
                CheckKind::Jordan => {
                    ("jordan", jordan_entry(&scene, graph_cache.as_ref().unwrap(), &mut pass)?)
                }
                CheckKind::Ladder => ("ladder", ladder_entry(cfg, budget, &mut pass)?),
                CheckKind::Collapse => {
                    ("collapse", collapse_entry(&scene, graph_cache.as_ref().unwrap(), &mut pass)?)
                }
                CheckKind::Containment => (
                    "containment",
                    containment_entry(&scene, graph_cache.as_ref().unwrap(), &mut pass)?,
                ),
            };
            results.insert(key.into(), value);
        }
    }

    let report = json!({
        "schema": SCHEMA_VERSION,
        "config": serde_json::to_value(cfg)?,
        "pass": pass,
        "results": Value::Object(results),
    });
    Ok(Experiment { report, pass, dot })
}

/// Outcome of replaying a report: recompute everything from the embedded
/// config and list every field whose recorded value no longer holds.
pub struct ReplayOutcome {
    pub pass: bool,
    /// JSON pointers of mismatching fields, with old and new values.
    pub mismatches: Vec<String>,
}

fn value_diff(path: &str, old: &Value, new: &Value, out: &mut Vec<String>) {
    match (old, new) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, va) in a {
                match b.get(k) {
                    Some(vb) => value_diff(&format!("{path}/{k}"), va, vb, out),
                    None => out.push(format!("{path}/{k}: missing after recompute")),
                }
            }
            for k in b.keys().filter(|k| !a.contains_key(*k)) {
                out.push(format!("{path}/{k}: new after recompute"));
            }
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            for (i, (va, vb)) in a.iter().zip(b).enumerate() {
                value_diff(&format!("{path}/{i}"), va, vb, out);
            }
        }
        _ if old != new => out.push(format!("{path}: recorded {old} but recomputed {new}")),
        _ => {}
    }
}

pub fn replay_report(report: &Value, budget: Option<usize>) -> Result<ReplayOutcome> {
    let schema = report.get("schema").and_then(Value::as_u64);
    if schema != Some(SCHEMA_VERSION) {
        return Err(Error::Schema { found: schema.unwrap_or(0), expected: SCHEMA_VERSION });
    }
    let cfg: ExperimentConfig = serde_json::from_value(
        report.get("config").cloned().ok_or_else(|| Error::Config("report has no config".into()))?,
    )?;
    let fresh = run_experiment(&cfg, budget)?;
    let mut mismatches = Vec::new();
    value_diff(
        "/results",
        report.get("results").unwrap_or(&Value::Null),
        fresh.report.get("results").unwrap_or(&Value::Null),
        &mut mismatches,
    );
    value_diff(
        "/pass",
        report.get("pass").unwrap_or(&Value::Null),
        fresh.report.get("pass").unwrap_or(&Value::Null),
        &mut mismatches,
    );
    Ok(ReplayOutcome { pass: mismatches.is_empty(), mismatches })
}
