//! The subcommands. Each one computes its rows (in parallel, collected in
//! input order), renders artifacts in memory and returns them to the runner.

use std::sync::Arc;

use loopmetric::convex::{convergence_experiment, filtration_distances, sample_unit_adjusted, ConvergenceParams};
use loopmetric::fock::{count_loops, LoopBasis, PathBasis};
use loopmetric::graph::{simplicity_check, DirectedDouble, WeightedGraph};
use loopmetric::loops::{wick_direct, wick_recursive, AlgebraElement, ChangeOfBasis, GnsContext};
use loopmetric::seminorms::{
    adjusted_lip, commutator_norm, haagerup_sweep, item_rng, random_homogeneous, random_homogeneous_complex,
    tail_norm_estimates,
};
use loopmetric::tlj::{check_number_operator, commutator_band_identity, theta_sum, trace_symmetry, NcPairing, TlElement};
use loopmetric::{Complex64, DEFAULT_BUDGET};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{Cache, CacheKey, CacheStatus};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Artifact, LinePlot};

/// Everything a subcommand hands back to the runner.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// Set when an iterative estimate stopped short; artifacts are still written.
    pub non_convergence: Option<String>,
    pub summary: String,
    /// Canonical serializations of the input graphs.
    pub inputs: Vec<String>,
    pub cache: Vec<String>,
}

fn note_cache(out: &mut Outcome, tag: &str, status: CacheStatus) {
    let s = match status {
        CacheStatus::Disabled => return,
        CacheStatus::Miss => "miss",
        CacheStatus::Hit => "hit",
        CacheStatus::Recomputed => "recomputed",
    };
    out.cache.push(format!("{tag}: {s}"));
}

fn words_label(w: &[usize]) -> String {
    w.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn degrees_label(d: &[usize]) -> String {
    words_label(d)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

// ---------------------------------------------------------------- graph validate

#[derive(Debug, Serialize)]
struct VertexRow {
    vertex: String,
    weight: f64,
    neighbor_sum: f64,
    strict: bool,
}

#[derive(Debug, Serialize)]
struct GraphSummary {
    content_hash: String,
    vertices: usize,
    undirected_edges: usize,
    directed_edges: usize,
    basepoint: String,
    simple: bool,
    failing_vertices: Vec<String>,
    graph: serde_json::Value,
}

pub fn graph_validate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let dd = DirectedDouble::new(&g);
    let report = simplicity_check(&g);
    let rows: Vec<VertexRow> = report
        .vertices
        .iter()
        .map(|v| VertexRow { vertex: v.vertex.clone(), weight: v.weight, neighbor_sum: v.neighbor_sum, strict: v.strict })
        .collect();
    let failing: Vec<String> = report.vertices.iter().filter(|v| !v.strict).map(|v| v.vertex.clone()).collect();
    let mut out = Outcome { inputs: vec![g.canonical_json()], ..Default::default() };
    if !report.simple {
        out.warnings.push(format!(
            "simplicity condition mu(v) < sum of neighbour weights fails at vertices {}",
            failing.join(", ")
        ));
    }
    let summary = GraphSummary {
        content_hash: g.content_hash(),
        vertices: g.num_vertices(),
        undirected_edges: g.num_edges(),
        directed_edges: dd.num_edges(),
        basepoint: g.name(g.basepoint()).to_string(),
        simple: report.simple,
        failing_vertices: failing,
        graph: serde_json::from_str(&g.canonical_json()).map_err(|e| CliError::Internal(e.to_string()))?,
    };
    out.summary = format!(
        "{} vertices, {} edges, simple: {}",
        summary.vertices, summary.undirected_edges, summary.simple
    );
    out.artifacts.push(Artifact::csv("simplicity.csv", &rows)?);
    out.artifacts.push(Artifact::json("graph.json", &summary)?);
    Ok(out)
}

// ---------------------------------------------------------------- loops enumerate

#[derive(Debug, Serialize)]
struct LoopRow {
    index: usize,
    length: usize,
    edges: String,
}

#[derive(Debug, Serialize)]
struct CountRow {
    length: usize,
    count: usize,
}

pub fn loops_enumerate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let dd = DirectedDouble::new(&g);
    let depth = cfg.cutoffs.depth;
    let basis = LoopBasis::new(&dd, depth, DEFAULT_BUDGET)?;
    if count_loops(&dd, depth) != basis.len() as u128 {
        return Err(CliError::Internal("loop count disagrees with the enumeration".into()));
    }
    let rows: Vec<LoopRow> = basis
        .paths()
        .iter()
        .enumerate()
        .map(|(index, p)| LoopRow { index, length: p.len(), edges: words_label(&p.edges) })
        .collect();
    let counts: Vec<CountRow> =
        (0..=depth).map(|length| CountRow { length, count: basis.degree_range(length).len() }).collect();
    let plot = LinePlot::new("Loops at the basepoint", "length", "count")
        .with_series("loops", counts.iter().map(|c| (c.length as f64, c.count as f64)).collect());
    let mut out = Outcome { inputs: vec![g.canonical_json()], ..Default::default() };
    out.summary = format!("{} loops of length <= {depth}", basis.len());
    out.artifacts.push(Artifact::csv("loops.csv", &rows)?);
    out.artifacts.push(Artifact::csv("loop_counts.csv", &counts)?);
    out.artifacts.push(Artifact::json(
        "loops.json",
        &serde_json::json!({ "depth": depth, "total": basis.len(), "counts": counts }),
    )?);
    out.artifacts.push(Artifact::svg("loop_counts.svg", &plot));
    Ok(out)
}

// ---------------------------------------------------------------- wick build

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WickRow {
    index: usize,
    length: usize,
    word: String,
    exact_through: isize,
    max_diff: f64,
    consistent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WickSummary {
    max_length: usize,
    depth: usize,
    words: usize,
    max_diff: f64,
    gram_deviation: f64,
    change_of_basis_roundtrip: f64,
    unitriangular: bool,
    passes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WickPayload {
    rows: Vec<WickRow>,
    summary: WickSummary,
}

fn compute_wick(cfg: &ExperimentConfig, g: &WeightedGraph) -> CliResult<WickPayload> {
    let k = cfg.cutoffs.k;
    let depth = cfg.cutoffs.depth;
    let dd = Arc::new(DirectedDouble::new(g));
    let paths = PathBasis::new(&dd, depth, DEFAULT_BUDGET)?;
    let loops = LoopBasis::new(&dd, k, DEFAULT_BUDGET)?;
    let words: Vec<(usize, &loopmetric::fock::Path)> =
        loops.paths().iter().enumerate().filter(|(_, p)| !p.is_empty()).collect();
    let rows: Vec<WickRow> = words
        .par_iter()
        .map(|&(index, p)| {
            let direct = wick_direct(&dd, p, &paths)?;
            let recursive = wick_recursive(&dd, p, &paths)?;
            let through = direct.exact_through().min(recursive.exact_through());
            let max_diff = direct.max_diff_through(&recursive, through);
            Ok(WickRow {
                index,
                length: p.len(),
                word: words_label(&p.edges),
                exact_through: through,
                max_diff,
                consistent: max_diff <= cfg.tolerances.wick,
            })
        })
        .collect::<loopmetric::Result<_>>()?;

    // Vacuum images of the Wick words in the orthonormal loop basis.
    let ctx = GnsContext::new(dd.clone(), k, k, DEFAULT_BUDGET)?;
    let columns: Vec<Vec<Complex64>> = loops
        .paths()
        .par_iter()
        .map(|p| {
            let y = ctx.realize(&AlgebraElement::wick(p.edges.clone()))?;
            Ok((0..loops.len()).map(|r| y.entry(r, 0)).collect())
        })
        .collect::<loopmetric::Result<_>>()?;
    let mut gram_deviation = 0.0f64;
    for (i, a) in columns.iter().enumerate() {
        for (j, b) in columns.iter().enumerate() {
            let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            gram_deviation = gram_deviation.max((ip - target).norm());
        }
    }
    let cob = ChangeOfBasis::new(&dd, k, DEFAULT_BUDGET)?;
    let roundtrip = cob.roundtrip_error();
    let unitriangular = cob.is_unitriangular();
    let max_diff = rows.iter().fold(0.0f64, |m, r| m.max(r.max_diff));
    let passes = rows.iter().all(|r| r.consistent) && gram_deviation <= 1e-10 && roundtrip <= 1e-12 && unitriangular;
    let summary = WickSummary {
        max_length: k,
        depth,
        words: rows.len(),
        max_diff,
        gram_deviation,
        change_of_basis_roundtrip: roundtrip,
        unitriangular,
        passes,
    };
    Ok(WickPayload { rows, summary })
}

pub fn wick_build(cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    cfg.require_exact("K", cfg.cutoffs.k, cfg.cutoffs.k)?;
    let key = CacheKey::new(&[g.canonical_json()], "wick", &(&cfg.cutoffs, &cfg.tolerances));
    let (payload, status) = cache.get_or_compute("wick", &key, || compute_wick(cfg, &g))?;
    let mut out = Outcome { inputs: vec![g.canonical_json()], ..Default::default() };
    note_cache(&mut out, "wick", status);
    let s = &payload.summary;
    if !s.passes {
        out.warnings.push(format!(
            "Wick checks failed: max diff {:e}, Gram deviation {:e}, round trip {:e}, unitriangular {}",
            s.max_diff, s.gram_deviation, s.change_of_basis_roundtrip, s.unitriangular
        ));
    }
    out.summary = format!("{} Wick words of length <= {}, passes: {}", s.words, s.max_length, s.passes);
    out.artifacts.push(Artifact::csv("wick.csv", &payload.rows)?);
    out.artifacts.push(Artifact::json("wick.json", &payload.summary)?);
    Ok(out)
}

// ---------------------------------------------------------------- shared element sampling

/// Explicit words as `Y_w + Y_w^*`, then `samples.elements` random
/// homogeneous elements per configured degree.
fn configured_elements(
    cfg: &ExperimentConfig,
    ctx: &GnsContext,
    complex: bool,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<(String, AlgebraElement)>> {
    let dd = ctx.double();
    let mut out = Vec::new();
    for w in &cfg.elements.words {
        let y = AlgebraElement::wick(w.clone());
        if w.is_empty() || ctx.basis().index_of(&loopmetric::fock::Path { start: dd.graph().basepoint(), edges: w.clone() }).is_none() {
            return Err(CliError::Config(format!(
                "elements.words: [{}] is not a loop at the basepoint of length <= cutoffs.depth",
                words_label(w)
            )));
        }
        out.push((format!("word {}", words_label(w)), y.add(&y.star(dd))));
    }
    for &d in &cfg.elements.degrees {
        let mut produced = 0;
        for i in 0..cfg.samples.elements {
            let mut rng = item_rng(cfg.seed, 100 + d as u64, i as u64);
            let x = if complex { random_homogeneous_complex(ctx, d, &mut rng) } else { random_homogeneous(ctx, d, &mut rng) };
            if let Some(x) = x {
                out.push((format!("random degree {d} #{i}"), x));
                produced += 1;
            }
        }
        if produced == 0 {
            warnings.push(format!("no loops of length {d}; degree skipped"));
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("elements: no elements to evaluate".into()));
    }
    Ok(out)
}

fn max_configured_degree(cfg: &ExperimentConfig) -> usize {
    cfg.elements
        .words
        .iter()
        .map(Vec::len)
        .chain(cfg.elements.degrees.iter().copied())
        .max()
        .unwrap_or(0)
}

// ---------------------------------------------------------------- lip compute

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LipRow {
    element: String,
    degrees: String,
    lip: f64,
    lip_star: f64,
    adjusted: f64,
    extrapolated: f64,
    converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceRow {
    element: String,
    k: usize,
    value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LipPayload {
    rows: Vec<LipRow>,
    trace: Vec<TraceRow>,
    warnings: Vec<String>,
}

fn compute_lip(cfg: &ExperimentConfig, g: &WeightedGraph, max_degree: usize) -> CliResult<LipPayload> {
    let dd = Arc::new(DirectedDouble::new(g));
    let ctx = GnsContext::new(dd.clone(), cfg.cutoffs.depth, max_degree, DEFAULT_BUDGET)?;
    let mut warnings = Vec::new();
    let elements = configured_elements(cfg, &ctx, false, &mut warnings)?;
    let (k_max, rel) = (cfg.cutoffs.k_max, cfg.tolerances.relative);
    let results: Vec<(LipRow, Vec<TraceRow>)> = elements
        .par_iter()
        .map(|(label, a)| {
            let est = commutator_norm(&ctx, a, k_max, rel)?;
            let star = commutator_norm(&ctx, &a.star(&dd), k_max, rel)?;
            let adjusted = adjusted_lip(&ctx, a, k_max, rel)?;
            let trace = est.trace.iter().map(|&(k, value)| TraceRow { element: label.clone(), k, value }).collect();
            let row = LipRow {
                element: label.clone(),
                degrees: degrees_label(&a.degrees()),
                lip: est.value,
                lip_star: star.value,
                adjusted: adjusted.value,
                extrapolated: est.extrapolated,
                converged: est.converged,
            };
            Ok((row, trace))
        })
        .collect::<loopmetric::Result<_>>()?;
    let (rows, traces): (Vec<LipRow>, Vec<Vec<TraceRow>>) = results.into_iter().unzip();
    Ok(LipPayload { rows, trace: traces.into_iter().flatten().collect(), warnings })
}

pub fn lip_compute(cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let max_degree = max_configured_degree(cfg);
    cfg.require_exact("k_max", cfg.cutoffs.k_max, max_degree)?;
    let key = CacheKey::new(
        &[g.canonical_json()],
        "lip",
        &(&cfg.cutoffs, &cfg.tolerances, &cfg.samples, &cfg.elements, cfg.seed),
    );
    let (payload, status) = cache.get_or_compute("lip", &key, || compute_lip(cfg, &g, max_degree))?;
    let mut out = Outcome { inputs: vec![g.canonical_json()], warnings: payload.warnings.clone(), ..Default::default() };
    note_cache(&mut out, "lip", status);
    let stalled = payload.rows.iter().filter(|r| !r.converged).count();
    if stalled > 0 {
        out.non_convergence = Some(format!(
            "{stalled} of {} Lip estimates changed by more than tolerances.relative at K = {}; raise cutoffs.k_max",
            payload.rows.len(),
            cfg.cutoffs.k_max
        ));
    }
    let mut plot = LinePlot::new("Compressed commutator norms", "K", "||[N, a]|| on degrees <= K");
    for row in payload.rows.iter().take(6) {
        let pts = payload.trace.iter().filter(|t| t.element == row.element).map(|t| (t.k as f64, t.value)).collect();
        plot = plot.with_series(&row.element, pts);
    }
    out.summary = format!("{} elements, {} converged", payload.rows.len(), payload.rows.len() - stalled);
    out.artifacts.push(Artifact::csv("lip.csv", &payload.rows)?);
    out.artifacts.push(Artifact::csv("lip_trace.csv", &payload.trace)?);
    out.artifacts.push(Artifact::json("lip.json", &payload.rows)?);
    out.artifacts.push(Artifact::svg("lip_trace.svg", &plot));
    Ok(out)
}

// ---------------------------------------------------------------- haagerup sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HaagerupRow {
    element: String,
    k: usize,
    m: usize,
    n: usize,
    block_norm: f64,
    l2_norm: f64,
    margin: f64,
    zero: bool,
    zero_expected: bool,
    passes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HaagerupPayload {
    rows: Vec<HaagerupRow>,
    warnings: Vec<String>,
}

fn compute_haagerup(cfg: &ExperimentConfig, g: &WeightedGraph, max_degree: usize) -> CliResult<HaagerupPayload> {
    let dd = Arc::new(DirectedDouble::new(g));
    let ctx = GnsContext::new(dd, cfg.cutoffs.depth, max_degree, DEFAULT_BUDGET)?;
    let mut warnings = Vec::new();
    let elements = configured_elements(cfg, &ctx, true, &mut warnings)?;
    let blocks = cfg.cutoffs.k_max;
    let tol = cfg.tolerances.structural;
    let per_element: Vec<Vec<HaagerupRow>> = elements
        .par_iter()
        .map(|(label, x)| {
            let reports = match x.homogeneous_degree() {
                Ok(_) => haagerup_sweep(&ctx, x, blocks)?,
                // Mixed elements are checked one component at a time.
                Err(_) => x
                    .degrees()
                    .into_iter()
                    .map(|d| haagerup_sweep(&ctx, &x.component(d), blocks))
                    .collect::<loopmetric::Result<Vec<_>>>()?
                    .concat(),
            };
            Ok(reports
                .into_iter()
                .map(|r| HaagerupRow {
                    element: label.clone(),
                    k: r.k,
                    m: r.m,
                    n: r.n,
                    block_norm: r.block_norm,
                    l2_norm: r.l2_norm,
                    margin: r.margin,
                    zero: r.zero,
                    zero_expected: r.zero_expected,
                    passes: r.margin >= -tol && (!r.zero_expected || r.zero),
                })
                .collect())
        })
        .collect::<loopmetric::Result<_>>()?;
    Ok(HaagerupPayload { rows: per_element.concat(), warnings })
}

pub fn haagerup(cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let max_degree = max_configured_degree(cfg);
    cfg.require_exact("k_max", cfg.cutoffs.k_max, max_degree)?;
    let key = CacheKey::new(
        &[g.canonical_json()],
        "haagerup",
        &(&cfg.cutoffs, &cfg.tolerances, &cfg.samples, &cfg.elements, cfg.seed),
    );
    let (payload, status) = cache.get_or_compute("haagerup", &key, || compute_haagerup(cfg, &g, max_degree))?;
    let mut out = Outcome { inputs: vec![g.canonical_json()], warnings: payload.warnings.clone(), ..Default::default() };
    note_cache(&mut out, "haagerup", status);
    let failures = payload.rows.iter().filter(|r| !r.passes).count();
    let min_margin = payload.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    if failures > 0 {
        out.warnings.push(format!("{failures} blocks violate the block bound or the vanishing pattern"));
    }
    let mut degrees: Vec<usize> = payload.rows.iter().map(|r| r.k).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut plot = LinePlot::new("Block bound margins", "m + n", "min (||x||_2 - ||P_m x P_n||)");
    for &k in &degrees {
        let pts = (0..=2 * cfg.cutoffs.k_max)
            .filter_map(|s| {
                let m = payload
                    .rows
                    .iter()
                    .filter(|r| r.k == k && r.m + r.n == s)
                    .map(|r| r.margin)
                    .fold(f64::INFINITY, f64::min);
                m.is_finite().then_some((s as f64, m))
            })
            .collect();
        plot = plot.with_series(&format!("degree {k}"), pts);
    }
    out.summary = format!("{} blocks checked, {failures} failures, min margin {min_margin:e}", payload.rows.len());
    out.artifacts.push(Artifact::csv("haagerup.csv", &payload.rows)?);
    out.artifacts.push(Artifact::json(
        "haagerup.json",
        &serde_json::json!({
            "blocks": payload.rows.len(),
            "failures": failures,
            "min_margin": min_margin,
            "max_block": cfg.cutoffs.k_max,
            "degrees": degrees,
            "passes": failures == 0,
        }),
    )?);
    out.artifacts.push(Artifact::svg("haagerup.svg", &plot));
    Ok(out)
}

// ---------------------------------------------------------------- tail sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TailRow {
    k: usize,
    sup_tail_estimate: f64,
    filtration_distance: f64,
}

fn compute_tail(cfg: &ExperimentConfig, g: &WeightedGraph, top: usize) -> CliResult<Vec<TailRow>> {
    let dd = Arc::new(DirectedDouble::new(g));
    let ctx = GnsContext::new(dd, cfg.cutoffs.depth, top, DEFAULT_BUDGET)?;
    let degrees = &cfg.elements.degrees;
    let points: Vec<AlgebraElement> = (0..cfg.samples.elements)
        .into_par_iter()
        .map(|i| sample_unit_adjusted(&ctx, degrees, cfg.samples.loops_per_degree, cfg.seed, i as u64))
        .collect::<loopmetric::Result<_>>()?;
    let ks: Vec<usize> = (1..=top).collect();
    let tails: Vec<Vec<f64>> =
        points.par_iter().map(|x| tail_norm_estimates(&ctx, x, &ks)).collect::<loopmetric::Result<_>>()?;
    let filtration = filtration_distances(&ctx, &points, &ks)?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(j, &k)| TailRow {
            k,
            sup_tail_estimate: tails.iter().map(|t| t[j]).fold(0.0, f64::max),
            filtration_distance: filtration[j],
        })
        .collect())
}

pub fn tail_sweep(cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let top = cfg.elements.degrees.iter().copied().max().ok_or_else(|| {
        CliError::Config("elements.degrees: tail sweep needs at least one degree".into())
    })?;
    if cfg.cutoffs.depth < top {
        return Err(CliError::Config(format!(
            "cutoffs.depth: must be at least the largest element degree {top}, got {}",
            cfg.cutoffs.depth
        )));
    }
    let key = CacheKey::new(
        &[g.canonical_json()],
        "tail",
        &(&cfg.cutoffs, &cfg.samples, &cfg.elements.degrees, cfg.seed),
    );
    let (rows, status) = cache.get_or_compute("tail", &key, || compute_tail(cfg, &g, top))?;
    let mut out = Outcome { inputs: vec![g.canonical_json()], ..Default::default() };
    note_cache(&mut out, "tail", status);
    let tails: Vec<f64> = rows.iter().map(|r| r.sup_tail_estimate).collect();
    let dists: Vec<f64> = rows.iter().map(|r| r.filtration_distance).collect();
    let tail_monotone = nonincreasing(&tails);
    let dist_monotone = nonincreasing(&dists);
    if !tail_monotone || !dist_monotone {
        out.warnings.push("tail estimates are not monotone in the cutoff".into());
    }
    let plot = LinePlot::new("Tail estimates over unit adjusted-Lip samples", "K", "estimate")
        .with_series("sup block estimate of a - a_<=K", rows.iter().map(|r| (r.k as f64, r.sup_tail_estimate)).collect())
        .with_series("dist_H(C_K, C_top) estimate", rows.iter().map(|r| (r.k as f64, r.filtration_distance)).collect());
    out.summary = format!("{} cutoffs, monotone tail: {tail_monotone}, monotone distance: {dist_monotone}", rows.len());
    out.artifacts.push(Artifact::csv("tail.csv", &rows)?);
    out.artifacts.push(Artifact::json(
        "tail.json",
        &serde_json::json!({
            "samples": cfg.samples.elements,
            "degrees": cfg.elements.degrees,
            "rows": rows,
            "tail_nonincreasing": tail_monotone,
            "distance_nonincreasing": dist_monotone,
        }),
    )?);
    out.artifacts.push(Artifact::svg("tail.svg", &plot));
    Ok(out)
}

// ---------------------------------------------------------------- converge run

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub norm_distortion: f64,
    pub lip_distortion: f64,
    pub ball_distance: f64,
    pub distq_upper: f64,
    pub samples: usize,
    pub seed: u64,
    pub flags: String,
}

pub fn converge_run(cfg: &ExperimentConfig, cache: &mut Cache) -> CliResult<Outcome> {
    let family = cfg.family()?;
    let params = ConvergenceParams {
        cutoff: cfg.cutoffs.k,
        depth: cfg.cutoffs.depth,
        samples: cfg.samples.cloud,
        seed: cfg.seed,
        tol: cfg.tolerances.hausdorff,
    };
    let mut inputs: Vec<String> = family.graphs.iter().map(WeightedGraph::canonical_json).collect();
    inputs.push(family.limit.canonical_json());
    let key = CacheKey::new(&inputs, "converge", &params);
    let (rows, status) = cache.get_or_compute("converge", &key, || {
        Ok(convergence_experiment(&family, params)?
            .into_iter()
            .map(|r| ConvergeRow {
                n: r.n,
                k: r.cutoff,
                norm_distortion: r.norm_distortion,
                lip_distortion: r.lip_distortion,
                ball_distance: r.ball_distance,
                distq_upper: r.distq_upper,
                samples: r.samples,
                seed: r.seed,
                flags: r.flags.join("; "),
            })
            .collect::<Vec<_>>())
    })?;
    let mut out = Outcome { inputs, ..Default::default() };
    note_cache(&mut out, "converge", status);
    let column = |f: fn(&ConvergeRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (norms, lips, balls) =
        (column(|r| r.norm_distortion), column(|r| r.lip_distortion), column(|r| r.ball_distance));
    let halves = |v: &[f64]| v.len() >= 2 && v[v.len() - 1] < 0.5 * v[0];
    let checks = serde_json::json!({
        "norm_distortion_decreasing": strictly_decreasing(&norms),
        "lip_distortion_decreasing": strictly_decreasing(&lips),
        "ball_distance_decreasing": strictly_decreasing(&balls),
        "norm_distortion_halved": halves(&norms),
        "ball_distance_halved": halves(&balls),
    });
    if !strictly_decreasing(&balls) {
        out.warnings.push("ball_distance is not strictly decreasing across the family".into());
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let zip = |v: &[f64]| xs.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let plot = LinePlot::new(&format!("{} (K = {})", family.name, cfg.cutoffs.k), "member", "estimate")
        .with_series("norm distortion", zip(&norms))
        .with_series("Lip distortion", zip(&lips))
        .with_series("ball distance", zip(&balls));
    out.summary = format!("{} members; ball distances {:?}", rows.len(), balls);
    out.artifacts.push(Artifact::csv("converge.csv", &rows)?);
    out.artifacts.push(Artifact::json(
        "converge.json",
        &serde_json::json!({ "family": family.name, "params": params, "rows": rows, "checks": checks }),
    )?);
    out.artifacts.push(Artifact::svg("converge.svg", &plot));
    Ok(out)
}

// ---------------------------------------------------------------- tlj check

#[derive(Debug, Serialize)]
struct NumberRow {
    delta: f64,
    points: usize,
    dim: usize,
    max_deviation: f64,
}

pub fn tlj_check(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let max_points = cfg.tlj.max_points;
    let tol = cfg.tolerances.structural;
    let mut out = Outcome::default();
    let mut number_rows = Vec::new();
    let mut per_delta = Vec::new();
    let mut passes = true;
    for &delta in &cfg.tlj.deltas {
        let checks: Vec<_> = (0..=max_points)
            .step_by(2)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|m| check_number_operator(m, delta))
            .collect::<loopmetric::Result<_>>()?;
        for c in &checks {
            number_rows.push(NumberRow { delta, points: c.m, dim: c.dim, max_deviation: c.max_deviation });
        }
        let band = commutator_band_identity(&TlElement::basis(NcPairing::cup(), delta), max_points, tol)?;
        let trace = trace_symmetry(max_points, delta);
        let ok = checks.iter().all(|c| c.max_deviation <= tol) && band.holds && trace.max_difference <= tol;
        passes &= ok;
        per_delta.push(serde_json::json!({
            "delta": delta,
            "number_operator_max_deviation": checks.iter().fold(0.0f64, |m, c| m.max(c.max_deviation)),
            "band_identity": band,
            "trace_symmetry": trace,
            "passes": ok,
        }));
    }
    if !passes {
        out.warnings.push("a planar-algebra identity failed; see tlj.json".into());
    }
    out.summary = format!("{} loop parameters, diagrams up to {max_points} points, passes: {passes}", per_delta.len());
    out.artifacts.push(Artifact::csv("tlj_number.csv", &number_rows)?);
    out.artifacts.push(Artifact::json(
        "tlj.json",
        &serde_json::json!({ "max_points": max_points, "tolerance": tol, "checks": per_delta, "passes": passes }),
    )?);
    Ok(out)
}

// ---------------------------------------------------------------- theta sum

#[derive(Debug, Serialize)]
struct ThetaCsvRow {
    t: f64,
    n: usize,
    dim: u128,
    term: f64,
    bound_term: f64,
    partial_sum: f64,
    partial_bound: f64,
    holds: bool,
}

pub fn theta(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let g = cfg.graph()?;
    let mut rows = Vec::new();
    let mut plot = LinePlot::new("Theta partial sums", "N", "log10 partial sum");
    for &t in &cfg.theta.t {
        let part = theta_sum(&g, t, cfg.theta.n_max, cfg.theta.delta)?;
        plot = plot
            .with_series(&format!("t = {t}"), part.iter().map(|r| (r.n as f64, r.partial_sum.log10())).collect())
            .with_series(&format!("bound, t = {t}"), part.iter().map(|r| (r.n as f64, r.partial_bound.log10())).collect());
        rows.extend(part.into_iter().map(|r| ThetaCsvRow {
            t,
            n: r.n,
            dim: r.dim,
            term: r.term,
            bound_term: r.bound_term,
            partial_sum: r.partial_sum,
            partial_bound: r.partial_bound,
            holds: r.partial_sum <= r.partial_bound,
        }));
    }
    let holds = rows.iter().all(|r| r.holds);
    let mut out = Outcome { inputs: vec![g.canonical_json()], ..Default::default() };
    if !holds {
        out.warnings.push("a partial sum exceeds the delta^(2n) bound".into());
    }
    out.summary = format!("{} partial sums, bound holds: {holds}", rows.len());
    out.artifacts.push(Artifact::csv("theta.csv", &rows)?);
    out.artifacts.push(Artifact::json(
        "theta.json",
        &serde_json::json!({ "delta": cfg.theta.delta, "n_max": cfg.theta.n_max, "t": cfg.theta.t, "holds": holds }),
    )?);
    out.artifacts.push(Artifact::svg("theta.svg", &plot));
    Ok(out)
}
