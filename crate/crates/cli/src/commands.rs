use std::fs::File;

use anyhow::Context;
use enflo_core::embeddings::{empirical_moduli, exhaustive_moduli};
use enflo_core::graphgroup::{
    isometric_embedding_check, metric_agreement, Graph, PairSelection, SpanningTree, WedgeGraph,
};
use enflo_core::poincare::{
    chain_check, chain_constant, enflo_certificate, gap_trials, orbit_average_check, Arithmetic, Evaluation, Verdict,
};
use enflo_core::rng::{self, tag};
use enflo_core::space::{
    count_segments_formula, distance, double_simplex, enumerate_segments, point_from_index, transitivity_check,
    verify_double_simplex, PairPlan,
};
use enflo_core::{EmbeddingMap, Error, SpaceSpec};
use rand::Rng;
use serde_json::{json, Value as Json};

use crate::{check, Mode, Outcome, Report, RunArgs, Target, UsageError};

/// Probe segments per isometry in `verify prop1`.
const PROBES: usize = 50;
/// Target dimension of generated maps.
const MAP_DIM: usize = 3;
/// Entries of generated integer tables lie in `-MAP_RANGE..=MAP_RANGE`.
const MAP_RANGE: i64 = 10;

fn outcome_of(verdict: Verdict) -> Outcome {
    match verdict {
        Verdict::Pass => Outcome::Pass,
        Verdict::Fail => Outcome::Fail,
        Verdict::Degenerate => Outcome::Degenerate,
        Verdict::Illustration => Outcome::Illustration,
    }
}

fn all_pass(checks: &[Json]) -> Outcome {
    Outcome::from_pass(checks.iter().all(|c| c["pass"] == json!(true)))
}

fn evaluation(run: &RunArgs) -> Evaluation {
    match run.mode() {
        Mode::Exact => Evaluation::Exact,
        Mode::Sampled => Evaluation::Sampled { samples: run.samples, seed: run.seed },
    }
}

/// Budget errors in exact mode get a hint towards sampling.
fn exact_refusal(e: Error, run: &RunArgs) -> anyhow::Error {
    if matches!(e, Error::BudgetExceeded { .. }) && run.mode() == Mode::Exact {
        anyhow::Error::new(e).context("exact mode needs full enumeration; use --mode sampled or raise the budget")
    } else {
        e.into()
    }
}

fn levels(spec: &SpaceSpec, run: &RunArgs, lowest: u32) -> anyhow::Result<Vec<u32>> {
    match run.m {
        Some(m) => {
            spec.check_level(m)?;
            if m < lowest {
                anyhow::bail!(UsageError(format!("--m must be at least {lowest} for this command")));
            }
            Ok(vec![m])
        }
        None => Ok((lowest..=spec.levels).collect()),
    }
}

pub fn space_info(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let budget = run.budget();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for m in 0..=spec.levels {
        let formula = count_segments_formula(spec, m)?;
        let enumerated = if formula <= budget.max_points.into() {
            enumerate_segments(spec, m, &budget).ok().map(|it| it.count())
        } else {
            None
        };
        if let Some(count) = enumerated {
            checks.push(check(
                format!("segment count m={m}"),
                formula == count.into(),
                json!({ "formula": formula.to_string(), "enumerated": count }),
            ));
        }
        rows.push(json!({
            "level": m,
            "support": spec.support(m),
            "step": spec.step(m),
            "segments_formula": formula.to_string(),
            "segments_enumerated": enumerated,
        }));
    }
    let body = json!({
        "points": spec.point_count_big().to_string(),
        "group_order": spec.group_order().to_string(),
        "levels": rows,
    });
    Ok(Report { outcome: all_pass(&checks), checks, body, csv: None })
}

pub fn verify(target: Target, spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    match target {
        Target::Prop1 => prop1(spec, run),
        Target::Prop2 => prop2(spec, run),
        Target::Prop3 => Ok(prop3(run)),
        Target::Chain => chain(spec, run),
        Target::Orbit => orbit(spec, run),
        Target::Graph => graph(spec, run),
        Target::Group => group(spec, run),
    }
}

fn prop1(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let plan = match run.mode() {
        Mode::Exact => PairPlan::Exhaustive,
        Mode::Sampled => PairPlan::Sampled { trials: run.trials, seed: run.seed },
    };
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for m in levels(spec, run, 0)? {
        let r = transitivity_check(spec, m, plan, PROBES, run.seed, &run.budget()).map_err(|e| exact_refusal(e, run))?;
        checks.push(check(format!("transitivity m={m}"), r.pass, serde_json::to_value(&r)?));
        reports.push(r);
    }
    Ok(Report { outcome: all_pass(&checks), checks, body: json!({ "levels": reports }), csv: None })
}

fn prop2(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let mut checks = Vec::new();
    for m in levels(spec, run, 1)? {
        let ds = double_simplex(spec, m)?;
        let verdict = verify_double_simplex(spec, &ds);
        checks.push(check(format!("double simplex m={m}"), verdict.pass, serde_json::to_value(&verdict)?));
    }
    Ok(Report { outcome: all_pass(&checks), checks, body: json!({}), csv: None })
}

fn prop3(run: &RunArgs) -> Report {
    let arithmetic = if run.mode() == Mode::Exact { Arithmetic::Rational } else { Arithmetic::Float };
    let r = gap_trials(run.trials, run.seed, arithmetic);
    let checks = vec![
        check("gap equals |Σu - Σv|²", r.identity_failures == 0, json!({ "failures": r.identity_failures })),
        check("gap is nonnegative", r.sign_failures == 0, json!({ "failures": r.sign_failures, "min_gap": r.min_gap })),
    ];
    Report { outcome: Outcome::from_pass(r.pass), checks, body: json!(r), csv: None }
}

/// The `i`-th generated map: an integer table in exact mode, a random linear
/// map in sampled mode (tables need every point).
fn generated_map(spec: &SpaceSpec, run: &RunArgs, i: u32) -> anyhow::Result<(EmbeddingMap, u64)> {
    let seed = rng::subseed(run.seed, i);
    let map = match run.mode() {
        Mode::Exact => EmbeddingMap::random_integer_table(spec, MAP_DIM, MAP_RANGE, seed, &run.budget())
            .map_err(|e| exact_refusal(e, run))?,
        Mode::Sampled => EmbeddingMap::random_linear(spec, MAP_DIM, seed),
    };
    Ok((map, seed))
}

fn chain(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let mut maps = Vec::new();
    let mut csv = String::from("map,level,value,stderr,samples\n");
    let mut failed = Vec::new();
    let mut e_bound = None;
    for i in 0..run.maps {
        let (map, seed) = generated_map(spec, run, i as u32)?;
        let eval = match evaluation(run) {
            Evaluation::Sampled { samples, .. } => Evaluation::Sampled { samples, seed },
            exact => exact,
        };
        let r = chain_check(spec, &map, eval, &run.budget()).map_err(|e| exact_refusal(e, run))?;
        for e in &r.means.entries {
            let stderr = e.stderr.map(|s| s.to_string()).unwrap_or_default();
            csv.push_str(&format!("{i},{},{},{stderr},{}\n", e.level, e.value, e.samples));
        }
        if r.verdict != Verdict::Pass {
            failed.push(i);
        }
        e_bound = e_bound.or(r.e_bound.clone());
        maps.push(json!({
            "index": i,
            "kind": map.kind(),
            "seed": seed,
            "means": r.means.entries.iter().map(|e| &e.value).collect::<Vec<_>>(),
            "slacks": r.levels.iter().map(|l| &l.slack).collect::<Vec<_>>(),
            "iterated_slack": r.iterated_slack,
            "verdict": r.verdict,
        }));
    }
    let factor = (spec.p as f64 / (spec.p as f64 - 1.0)).powi(spec.levels as i32);
    let mut checks = vec![check(
        "chain holds for every map",
        failed.is_empty(),
        json!({ "maps": run.maps, "failed": failed }),
    )];
    if spec.levels as usize + 1 == spec.p {
        checks.push(check(
            "iterated factor at most e",
            chain_constant(spec.p) <= std::f64::consts::E,
            json!({ "factor": factor }),
        ));
    }
    let body = json!({ "iterated_factor": factor, "e_bound": e_bound, "maps": maps });
    Ok(Report { outcome: all_pass(&checks), checks, body, csv: Some(csv) })
}

fn orbit(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let m = run.m.unwrap_or(spec.levels);
    let (map, _) = generated_map(spec, run, 0)?;
    let r = orbit_average_check(spec, m, &map, evaluation(run), &run.budget()).map_err(|e| exact_refusal(e, run))?;
    let mut checks = vec![check(
        "averaged inequality",
        matches!(r.verdict, Verdict::Pass | Verdict::Illustration),
        json!({ "ratio": r.ratio, "bound": r.bound }),
    )];
    if let Some(reg) = &r.regularity {
        checks.push(check("orbit covers segment classes uniformly", reg.uniform, serde_json::to_value(reg)?));
    }
    if let Some(identity) = r.identity_holds {
        checks.push(check("orbit sums equal class means", identity, json!({})));
    }
    Ok(Report { outcome: outcome_of(r.verdict), checks, body: serde_json::to_value(&r)?, csv: None })
}

fn graph(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let budget = run.budget();
    let g = Graph::unit_graph(spec, &budget).map_err(|e| exact_refusal(e, run))?;
    let n = g.vertex_count();
    let mut checks = Vec::new();
    match run.mode() {
        Mode::Exact => {
            let r = metric_agreement(spec, &budget)?;
            checks.push(check("bfs equals max metric (all pairs)", r.pass, serde_json::to_value(&r)?));
        }
        Mode::Sampled => {
            let mut rng = rng::stream(run.seed, tag::PAIRS, 0);
            let mut mismatches = 0;
            for _ in 0..run.samples {
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                let bfs = g.bfs(i)?[j];
                let metric = distance(spec, &point_from_index(spec, i), &point_from_index(spec, j))?;
                mismatches += usize::from(bfs != Some(metric as usize));
            }
            checks.push(check(
                "bfs equals max metric (sampled pairs)",
                mismatches == 0,
                json!({ "pairs_checked": run.samples, "mismatches": mismatches }),
            ));
        }
    }
    let wedge = WedgeGraph::new(&[g.clone(), g.clone()])?;
    let from_base = g.bfs(0)?;
    let stride = n.div_ceil(256).max(1);
    let mut wedge_mismatches = 0;
    let mut wedge_pairs = 0;
    for a in (0..n).step_by(stride) {
        let dist = wedge.graph.bfs(wedge.vertex(0, a)?)?;
        for b in 0..n {
            wedge_pairs += 1;
            let expected = from_base[a].zip(from_base[b]).map(|(x, y)| x + y);
            wedge_mismatches += usize::from(dist[wedge.vertex(1, b)?] != expected);
        }
    }
    checks.push(check(
        "wedge cross distances pass through the base point",
        wedge_mismatches == 0,
        json!({ "pairs_checked": wedge_pairs, "mismatches": wedge_mismatches }),
    ));
    let body = json!({ "vertices": n, "edges": g.edge_count() });
    Ok(Report { outcome: all_pass(&checks), checks, body, csv: None })
}

fn group(spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let word_budget = run.budget_word.unwrap_or(spec.q as usize / 2 + 2);
    let square = Graph::cycle(4)?;
    let wedge = WedgeGraph::new(&[square.clone(), square.clone()])?.graph;
    let unit = Graph::unit_graph(spec, &run.budget())?;
    let cases = [
        ("4-cycle", &square, PairSelection::All),
        ("wedge of two 4-cycles", &wedge, PairSelection::All),
        ("unit-distance graph", &unit, PairSelection::Sample { count: run.pairs, seed: run.seed }),
    ];
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (name, graph, selection) in cases {
        let tree = SpanningTree::bfs(graph, 0)?;
        let r = isometric_embedding_check(graph, &tree, word_budget, selection)?;
        checks.push(check(format!("{name}: loop images are trivial"), r.cycles_ok, json!({ "cycles": r.cycles_checked })));
        checks.push(check(
            format!("{name}: word metric equals graph metric"),
            r.pass,
            json!({ "pairs": r.pairs_checked, "mismatches": r.mismatches, "inconclusive": r.inconclusive }),
        ));
        reports.push(json!({ "graph": name, "report": r }));
    }
    let body = json!({ "word_budget": word_budget, "graphs": reports });
    Ok(Report { outcome: all_pass(&checks), checks, body, csv: None })
}

fn embedding(name: &str, spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<EmbeddingMap> {
    Ok(match name {
        "circle" => EmbeddingMap::circle(1.0),
        "coordinate" => EmbeddingMap::CoordinateLift,
        "random" => EmbeddingMap::random_linear(spec, MAP_DIM, run.seed),
        path => {
            let file = File::open(path).with_context(|| format!("cannot open embedding table {path}"))?;
            EmbeddingMap::from_csv(spec, file)?
        }
    })
}

pub fn certify(name: &str, spec: &SpaceSpec, run: &RunArgs) -> anyhow::Result<Report> {
    let map = embedding(name, spec, run)?;
    let budget = run.budget();
    let cert = enflo_certificate(spec, &map, evaluation(run), &budget).map_err(|e| exact_refusal(e, run))?;
    let moduli = match run.mode() {
        Mode::Exact => exhaustive_moduli(spec, &map, &budget).map_err(|e| exact_refusal(e, run))?,
        Mode::Sampled => empirical_moduli(spec, &map, run.samples, run.seed)?,
    };
    let checks = vec![check(
        "ratio within bound",
        cert.verdict != Verdict::Fail,
        json!({ "ratio": cert.ratio, "bound": cert.bound, "verdict": cert.verdict }),
    )];
    let body = json!({ "embedding": map.kind(), "certificate": cert, "moduli": moduli });
    Ok(Report { outcome: outcome_of(cert.verdict), checks, body, csv: None })
}

pub fn export(spec: &SpaceSpec, run: &RunArgs, tree: bool) -> anyhow::Result<String> {
    let graph = Graph::unit_graph(spec, &run.budget())?;
    let mut out = Vec::new();
    if tree {
        SpanningTree::bfs(&graph, 0)?.write_edge_list(&mut out)?;
    } else {
        graph.write_edge_list(&mut out)?;
    }
    Ok(String::from_utf8(out)?)
}
