//! Acceptance criteria 1-10. Each test prints one `criterion N: PASS|FAIL`
//! line before asserting; run with `--nocapture` to see them.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use loopmetric::convex::{
    convergence_experiment, filtration_distances, sample_unit_adjusted, ConvergenceParams, GraphFamily,
};
use loopmetric::fock::{LoopBasis, PathBasis};
use loopmetric::graph::{bouquet, dynkin_a, dynkin_a_infinity, DirectedDouble, WeightedGraph};
use loopmetric::loops::{moments, wick_consistency, AlgebraElement, ChangeOfBasis, GnsContext};
use loopmetric::seminorms::{
    adjusted_lip_value, commutator_norm, gaussian_direction, haagerup_sweep, item_rng, lip, minkowski_oracle,
    random_homogeneous_complex, tail_norm_estimates, SelfAdjointCoords,
};
use loopmetric::tlj::{check_number_operator, commutator_band_identity, theta_sum, trace_symmetry, NcPairing, TlElement};
use loopmetric::{Complex64, DEFAULT_BUDGET};

fn verdict(n: usize, ok: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn context(g: WeightedGraph, depth: usize, max_word: usize) -> GnsContext {
    GnsContext::new(Arc::new(DirectedDouble::new(&g)), depth, max_word, DEFAULT_BUDGET).unwrap()
}

/// `C(2n, n)/(n+1)` by the product formula, independent of the pairing enumeration.
fn catalan_oracle(n: u128) -> u128 {
    let mut binom: u128 = 1;
    for i in 0..n {
        binom = binom * (2 * n - i) / (i + 1);
    }
    binom / (n + 1)
}

fn test_graphs() -> Vec<(&'static str, WeightedGraph)> {
    vec![
        ("two-loop vertex", bouquet(2).unwrap()),
        ("A3", dynkin_a(3).unwrap()),
        ("A_inf(6)", dynkin_a_infinity(6, 1.0).unwrap()),
    ]
}

#[test]
fn criterion_01_haagerup_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut blocks = 0;
    let mut min_margin = f64::INFINITY;
    for (name, g) in test_graphs() {
        let ctx = context(g, 8, 4);
        let degrees: Vec<usize> = (1..=4).filter(|&k| !ctx.basis().degree_range(k).is_empty()).collect();
        for i in 0..200u64 {
            let k = degrees[i as usize % degrees.len()];
            let x = random_homogeneous_complex(&ctx, k, &mut item_rng(11, k as u64, i)).unwrap();
            for r in haagerup_sweep(&ctx, &x, 8).unwrap() {
                blocks += 1;
                let vanishing_ok = !r.zero_expected || r.zero;
                let bound_ok = r.block_norm <= r.l2_norm + 1e-9;
                min_margin = min_margin.min(r.margin);
                if !(vanishing_ok && bound_ok) {
                    failures.push(format!("{name} k={k} element {i} block ({}, {})", r.m, r.n));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        failures.is_empty() && secs < 120.0,
        &format!("{blocks} blocks, min margin {min_margin:.3e}, {} failures, {secs:.1}s", failures.len()),
    );
}

#[test]
fn criterion_02_wick_consistency() {
    let mut worst_diff = 0.0f64;
    let mut worst_gram = 0.0f64;
    let mut worst_roundtrip = 0.0f64;
    let mut unitriangular = true;
    let mut words = 0;
    for g in [dynkin_a(3).unwrap(), bouquet(2).unwrap()] {
        let dd = DirectedDouble::new(&g);
        let paths = PathBasis::new(&dd, 9, DEFAULT_BUDGET).unwrap();
        let loops = LoopBasis::new(&dd, 4, DEFAULT_BUDGET).unwrap();
        for p in loops.paths().iter().filter(|p| !p.is_empty()) {
            worst_diff = worst_diff.max(wick_consistency(&dd, p, &paths, 1e-12).unwrap());
            words += 1;
        }
        // Gram matrix of the vacuum images of all Wick words of length <= 4.
        let ctx = GnsContext::new(Arc::new(dd.clone()), 4, 4, DEFAULT_BUDGET).unwrap();
        let columns: Vec<Vec<Complex64>> = loops
            .paths()
            .iter()
            .map(|p| {
                let y = ctx.realize(&AlgebraElement::wick(p.edges.clone())).unwrap();
                (0..loops.len()).map(|r| y.entry(r, 0)).collect()
            })
            .collect();
        for (i, a) in columns.iter().enumerate() {
            for (j, b) in columns.iter().enumerate() {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                worst_gram = worst_gram.max((ip - if i == j { 1.0 } else { 0.0 }).norm());
            }
        }
        let cob = ChangeOfBasis::new(&dd, 4, DEFAULT_BUDGET).unwrap();
        worst_roundtrip = worst_roundtrip.max(cob.roundtrip_error());
        unitriangular &= cob.is_unitriangular();
    }
    let ok = worst_diff <= 1e-12 && worst_gram <= 1e-10 && worst_roundtrip <= 1e-12 && unitriangular;
    verdict(
        2,
        ok,
        &format!(
            "{words} words, direct vs recursive {worst_diff:.1e}, Gram {worst_gram:.1e}, round trip {worst_roundtrip:.1e}, unitriangular {unitriangular}"
        ),
    );
}

#[test]
fn criterion_03_catalan() {
    let g = dynkin_a_infinity(8, 1.0).unwrap();
    let dd = DirectedDouble::new(&g);
    let loops = LoopBasis::new(&dd, 12, DEFAULT_BUDGET).unwrap();
    let counts: Vec<u128> = (0..=6).map(|n| loops.degree_range(2 * n).len() as u128).collect();
    let expected: Vec<u128> = (0..=6).map(catalan_oracle).collect();

    let one = DirectedDouble::new(&bouquet(1).unwrap());
    let m = moments(&one, &[0], 12, 13).unwrap();
    let even: Vec<Complex64> = (0..=6).map(|n| m[2 * n]).collect();
    let moments_ok = even.iter().zip(&expected).all(|(z, &c)| z.re == c as f64 && z.im == 0.0);
    verdict(
        3,
        counts == expected && moments_ok,
        &format!("loop counts {counts:?}, moments {:?}, Catalan {expected:?}", even.iter().map(|z| z.re).collect::<Vec<_>>()),
    );
}

#[test]
fn criterion_04_lip_sanity() {
    // L(p0) = 0.
    let a3 = context(dynkin_a(3).unwrap(), 8, 4);
    let unit = lip(&a3, &AlgebraElement::unit()).unwrap();

    // L(a*) = L(a) on random complex elements of mixed degree.
    let dd = a3.double().clone();
    let mut star_gap = 0.0f64;
    for i in 0..20u64 {
        let mut a = AlgebraElement::zero();
        for k in [2, 4] {
            a = a.add(&random_homogeneous_complex(&a3, k, &mut item_rng(4, k as u64, i)).unwrap());
        }
        star_gap = star_gap.max((lip(&a3, &a).unwrap() - lip(&a3, &a.star(&dd)).unwrap()).abs());
    }

    // L(X_e) on one vertex with one loop, through truncations K <= 60.
    let one = context(bouquet(1).unwrap(), 62, 1);
    let est = commutator_norm(&one, &AlgebraElement::wick(vec![0]), 60, 1e-12).unwrap();
    let monotone = est.trace.windows(2).all(|w| w[1].1 >= w[0].1);
    let certified_gap = (est.value - 2.0).abs();
    let extrapolated_gap = (est.extrapolated - 2.0).abs();
    let ok = unit == 0.0 && star_gap <= 1e-10 && monotone && extrapolated_gap <= 1e-3;
    verdict(
        4,
        ok,
        &format!(
            "L(p0) = {unit}, max |L(a*) - L(a)| = {star_gap:.1e}, trace nondecreasing {monotone}, \
             K=60 compression {:.6} (gap {certified_gap:.2e}, uncertified), extrapolated {:.6} (gap {extrapolated_gap:.2e})",
            est.value, est.extrapolated
        ),
    );
}

/// Mixed-degree self-adjoint element: random unit-L components with random weights.
fn mixed_instance(ctx: &GnsContext, degrees: &[usize], seed: u64, index: u64) -> AlgebraElement {
    let mut rng = item_rng(seed, 50, index);
    let mut a = AlgebraElement::zero();
    for &k in degrees {
        let coords = SelfAdjointCoords::for_degrees(ctx, |d| d == k);
        let x = coords.to_element(&gaussian_direction(&mut rng, coords.dim()));
        let w = 0.25 + gaussian_direction(&mut rng, 2)[0].abs();
        a = a.add(&x.scale(Complex64::new(w / lip(ctx, &x).unwrap(), 0.0)));
    }
    a
}

#[test]
fn criterion_05_adjusted_lip() {
    let instances: Vec<(&str, GnsContext, Vec<usize>)> = vec![
        ("two-loop vertex", context(bouquet(2).unwrap(), 8, 2), vec![1, 2]),
        ("A3", context(dynkin_a(3).unwrap(), 10, 4), vec![2, 4]),
        ("A_inf(6)", context(dynkin_a_infinity(6, 1.0).unwrap(), 10, 4), vec![2, 4]),
    ];
    let mut homogeneous_exact = true;
    let mut worst_rel = 0.0f64;
    let mut count = 0;
    for (name, ctx, degrees) in &instances {
        for &k in degrees {
            for i in 0..5u64 {
                let coords = SelfAdjointCoords::for_degrees(ctx, |d| d == k);
                let x = coords.to_element(&gaussian_direction(&mut item_rng(5, k as u64, i), coords.dim()));
                homogeneous_exact &= adjusted_lip_value(ctx, &x).unwrap() == lip(ctx, &x).unwrap();
            }
        }
        for i in 0..3u64 {
            let a = mixed_instance(ctx, degrees, 17, i);
            let closed = adjusted_lip_value(ctx, &a).unwrap();
            let oracle = minkowski_oracle(ctx, &a, 200, i).unwrap();
            let rel = (oracle.value - closed).abs() / closed;
            println!("  {name} instance {i}: adjusted {closed:.6}, oracle {:.6}, rel {rel:.2e}", oracle.value);
            worst_rel = worst_rel.max(rel);
            count += 1;
        }
    }
    verdict(
        5,
        homogeneous_exact && worst_rel <= 0.02,
        &format!("homogeneous exact {homogeneous_exact}, {count} mixed instances, worst relative gap {worst_rel:.2e}"),
    );
}

#[test]
fn criterion_06_tail_behaviour() {
    let ctx = context(bouquet(2).unwrap(), 8, 8);
    let degrees: Vec<usize> = (1..=8).collect();
    let points: Vec<AlgebraElement> =
        (0..100u64).map(|i| sample_unit_adjusted(&ctx, &degrees, 4, 6, i).unwrap()).collect();
    let ks: Vec<usize> = (2..=8).collect();
    let mut sup = vec![0.0f64; ks.len()];
    for x in &points {
        for (s, t) in sup.iter_mut().zip(tail_norm_estimates(&ctx, x, &ks).unwrap()) {
            *s = s.max(t);
        }
    }
    let tail_ok = sup.windows(2).all(|w| w[1] <= w[0]);
    let ms: Vec<usize> = (1..=8).collect();
    let dist = filtration_distances(&ctx, &points, &ms).unwrap();
    let dist_ok = dist.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    verdict(
        6,
        tail_ok && dist_ok,
        &format!("sup tail K=2..8 [{}]; dist_H(C_m, C_8) m=1..8 [{}]", fmt(&sup), fmt(&dist)),
    );
}

#[test]
fn criterion_07_convergence() {
    let start = Instant::now();
    let params = ConvergenceParams { cutoff: 4, depth: 10, samples: 8, seed: 1, tol: 1e-4 };
    let mut ok = true;
    let mut lines = Vec::new();
    for family in [
        GraphFamily::dynkin_a(&[5, 7, 9, 11, 13], 12).unwrap(),
        GraphFamily::q_deformation(&[1, 2, 3, 4, 5], 12).unwrap(),
    ] {
        let rows = convergence_experiment(&family, params).unwrap();
        for column in ["norm_distortion", "ball_distance"] {
            let v: Vec<f64> = rows
                .iter()
                .map(|r| if column == "norm_distortion" { r.norm_distortion } else { r.ball_distance })
                .collect();
            let decreasing = v.windows(2).all(|w| w[1] < w[0]);
            let halved = v[v.len() - 1] < 0.5 * v[0];
            ok &= decreasing && halved;
            lines.push(format!(
                "{} {column} [{}] decreasing {decreasing} halved {halved}",
                family.name,
                v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    for l in &lines {
        println!("  {l}");
    }
    verdict(7, ok && secs < 600.0, &format!("two families, {secs:.1}s"));
}

#[test]
fn criterion_08_planar_identities() {
    let mut number_dev = 0.0f64;
    let mut band_dev = 0.0f64;
    let mut band_ok = true;
    let mut trace_dev = 0.0f64;
    for delta in [2.0, 2.5] {
        for m in (0..=6).step_by(2) {
            number_dev = number_dev.max(check_number_operator(m, delta).unwrap().max_deviation);
        }
        let band = commutator_band_identity(&TlElement::basis(NcPairing::cup(), delta), 6, 1e-10).unwrap();
        band_dev = band_dev.max(band.max_difference);
        band_ok &= band.holds;
        trace_dev = trace_dev.max(trace_symmetry(6, delta).max_difference);
    }
    verdict(
        8,
        number_dev <= 1e-9 && band_ok && trace_dev <= 1e-10,
        &format!("d*d - N {number_dev:.1e}, commutator identity {band_dev:.1e}, trace symmetry {trace_dev:.1e}"),
    );
}

#[test]
fn criterion_09_theta_summability() {
    let g = dynkin_a_infinity(14, 1.0).unwrap();
    let mut ok = true;
    let mut dims_ok = true;
    let mut tightest = f64::INFINITY;
    for t in [0.1, 0.5, 1.0] {
        for row in theta_sum(&g, t, 12, 2.0).unwrap() {
            ok &= row.partial_sum <= row.partial_bound;
            dims_ok &= row.dim == catalan_oracle(row.n as u128);
            tightest = tightest.min(row.partial_bound - row.partial_sum);
        }
    }
    verdict(
        9,
        ok && dims_ok,
        &format!("N <= 12, t in {{0.1, 0.5, 1}}; dims are Catalan {dims_ok}; smallest slack {tightest:.3e}"),
    );
}

fn run_cli(dir: &Path, args: &[&str], out: &str, threads: usize) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_loopmetric"))
        .args(args)
        .args(["--out", out, "--threads", &threads.to_string(), "--no-cache"])
        .current_dir(dir)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join(out))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("two.toml"),
        "seed = 3\n[graph]\nkind = \"bouquet\"\nloops = 2\n[cutoffs]\nk = 3\ndepth = 9\nk_max = 5\n\
         [elements]\ndegrees = [1, 2, 3]\n[samples]\nelements = 4\n[tolerances]\nrelative = 0.5\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("family.toml"),
        "seed = 2\n[family]\nkind = \"q_deformation\"\nmembers = [1, 2, 3]\ncutoff = 8\n[cutoffs]\nk = 3\ndepth = 6\n\
         [samples]\ncloud = 4\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("theta.toml"), "[graph]\nkind = \"a_infinity\"\ncutoff = 14\n").unwrap();
    let runs: [(&str, &[&str]); 7] = [
        ("haagerup", &["haagerup", "sweep", "--config", "two.toml"]),
        ("tail", &["tail", "sweep", "--config", "two.toml"]),
        ("lip", &["lip", "compute", "--config", "two.toml"]),
        ("wick", &["wick", "build", "--config", "two.toml"]),
        ("converge", &["converge", "run", "--config", "family.toml"]),
        ("tlj", &["tlj", "check"]),
        ("theta", &["theta", "sum", "--config", "theta.toml"]),
    ];
    let mut identical = 0;
    let mut mismatches = Vec::new();
    for (name, args) in runs {
        let one = run_cli(dir.path(), args, &format!("{name}-1"), 1);
        let again = run_cli(dir.path(), args, &format!("{name}-1b"), 1);
        let many = run_cli(dir.path(), args, &format!("{name}-4"), 4);
        assert!(!one.is_empty());
        if one == again && one == many {
            identical += 1;
        } else {
            mismatches.push(name);
        }
    }
    verdict(
        10,
        mismatches.is_empty(),
        &format!("{identical} subcommands bit-identical across reruns and 1 vs 4 threads; mismatches {mismatches:?}"),
    );
}
