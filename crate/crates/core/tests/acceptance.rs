//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

mod common;

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use nalgebra::DVector;
use ndarray::{Array1, Array2};
use pdeforest::data::Problem;
use pdeforest::eval::{
    build_feature_matrix, diff_t, diff_x, evaluate_tree, make_dataset, ut_vector, FeatureMatrix,
    FieldColumn, Order,
};
use pdeforest::expr::{
    parse_computable_string, parse_forest, random_forest, to_computable_string, to_display_string,
    validate, BinaryOp, GenConfig, Node, Operand,
};
use pdeforest::ga::{
    evolve_with, write_evolution_log, DiscoveryResult, GAConfig, GenerationEvent, RunOptions,
};
use pdeforest::regress::{score, stridge, RegressionParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{
    best_subset_bic, dataset, report, structure_verdict, target_forest, to_dmatrix, Slot,
};

#[test]
fn c1_representation_fidelity() {
    let cases = [
        ("{ / u x }", "u/x"),
        ("{ d [+ (d u x) (* u u)] x }", "d/dx(d/dx(u) + u*u)"),
    ];
    let mut fails = Vec::new();
    for (computable, display) in cases {
        let tree = parse_computable_string(computable).unwrap();
        let again = parse_computable_string(&to_computable_string(&tree)).unwrap();
        if to_computable_string(&again) != computable
            || to_display_string(&again) != display
            || again != tree
        {
            fails.push(format!("{computable} -> {}", to_display_string(&again)));
        }
    }
    let forest = parse_forest("{ / u x } & { d (d u x) x } & { d [+ (d u x) (* u u)] x }").unwrap();
    let shown: Vec<String> = forest.trees().iter().map(to_display_string).collect();
    if shown != ["u/x", "d/dx(d/dx(u))", "d/dx(d/dx(u) + u*u)"] {
        fails.push(format!("forest -> {shown:?}"));
    }
    let pass = fails.is_empty();
    report(
        "C1 representation fidelity",
        pass,
        &format!("2 worked examples plus forest, mismatches {fails:?}"),
    );
    assert!(pass);
}

fn root_and_derivative_ok(node: &Node, is_root: bool) -> bool {
    match node {
        Node::Leaf(_) => true,
        Node::Unary(_, c) => root_and_derivative_ok(c, false),
        Node::Binary(op, l, r) => {
            let root_ok = !is_root || !matches!(op, BinaryOp::Add | BinaryOp::Sub);
            let var_ok = !op.is_derivative() || **r == Node::Leaf(Operand::X);
            root_ok
                && var_ok
                && root_and_derivative_ok(l, false)
                && root_and_derivative_ok(r, false)
        }
    }
}

#[test]
fn c2_rule_suite() {
    let cfg = GenConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut violations = 0usize;
    let mut structural = 0usize;
    for i in 0..10_000 {
        let f = random_forest(&cfg, &mut rng, i % 2 == 0);
        violations += validate(&f, &cfg).len();
        let shape_ok = (1..=5).contains(&f.len())
            && f.trees()
                .iter()
                .all(|t| t.depth() <= 4 && root_and_derivative_ok(t.root(), true));
        structural += usize::from(!shape_ok);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations == 0 && structural == 0 && secs < 5.0;
    report(
        "C2 rule suite",
        pass,
        &format!("10000 forests, {violations} violations, {structural} structural failures, {secs:.2}s (< 5s)"),
    );
    assert!(pass);
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

fn sine_error(n: usize, order: Order) -> f64 {
    let x = Array1::linspace(0.0, 2.0, n);
    let h = x[1] - x[0];
    let f = Array2::from_shape_fn((n, 3), |(i, j)| (1.7 * x[i] + j as f64).sin());
    let exact = Array2::from_shape_fn((n, 3), |(i, j)| match order {
        Order::First => 1.7 * (1.7 * x[i] + j as f64).cos(),
        Order::Second => -1.7 * 1.7 * (1.7 * x[i] + j as f64).sin(),
    });
    max_abs_diff(&diff_x(&f, h, order).unwrap(), &exact)
}

#[test]
fn c3_numerics() {
    let (nx, nt) = (17, 13);
    let (dx, dt) = (0.3, 0.05);
    let q = Array2::from_shape_fn((nx, nt), |(i, j)| {
        let (x, t) = (i as f64 * dx - 1.0, j as f64 * dt);
        2.0 * x * x - 3.0 * x + 0.5 * t * t + 4.0 * t + 1.0
    });
    let qx = Array2::from_shape_fn((nx, nt), |(i, _)| 4.0 * (i as f64 * dx - 1.0) - 3.0);
    let qt = Array2::from_shape_fn((nx, nt), |(_, j)| j as f64 * dt + 4.0);
    let quad_err = [
        max_abs_diff(&diff_x(&q, dx, Order::First).unwrap(), &qx),
        max_abs_diff(
            &diff_x(&q, dx, Order::Second).unwrap(),
            &Array2::from_elem((nx, nt), 4.0),
        ),
        max_abs_diff(&diff_t(&q, dt, Order::First).unwrap(), &qt),
        max_abs_diff(
            &diff_t(&q, dt, Order::Second).unwrap(),
            &Array2::from_elem((nx, nt), 1.0),
        ),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let quad_ok = quad_err < 1e-9;

    let ratios: Vec<f64> = [Order::First, Order::Second]
        .into_iter()
        .flat_map(|o| [(41, 81), (81, 161)].map(|(a, b)| sine_error(a, o) / sine_error(b, o)))
        .collect();
    let ratio_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));

    // x passes through 0 and u is flat, so both u/x and u/u_x hit zero denominators
    let x = Array1::linspace(-1.0, 1.0, 21);
    let t = Array1::linspace(0.0, 1.0, 11);
    let d = make_dataset(Array2::from_elem((21, 11), 3.0), x, t).unwrap();
    let guarded = [
        "{ / u x }",
        "{ / u ux }",
        "{ / x [- u u] }",
        "{ d (/ u x) x }",
    ]
    .iter()
    .all(|s| {
        evaluate_tree(&parse_computable_string(s).unwrap(), &d)
            .values
            .iter()
            .all(|v| !v.is_infinite())
    });

    let pass = quad_ok && ratio_ok && guarded;
    report(
        "C3 numerics",
        pass,
        &format!("quadratic max error {quad_err:.1e}, Richardson ratios {ratios:.3?} in [3.5, 4.5], guard finite {guarded}"),
    );
    assert!(pass);
}

#[test]
fn c4_stridge_matches_best_subset() {
    let params = RegressionParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, p) = (200, 5);
    let start = Instant::now();
    let mut matches = 0;
    let mut misses = Vec::new();
    for case in 0..100 {
        let cols: Vec<Array1<f64>> = (0..p)
            .map(|_| Array1::from_shape_fn(n, |_| StandardNormal.sample(&mut rng)))
            .collect();
        let size = rng.random_range(1..=3);
        let mut support: Vec<usize> = (0..p).collect();
        rand::seq::SliceRandom::shuffle(support.as_mut_slice(), &mut rng);
        support.truncate(size);
        let mut y = Array1::from_shape_fn(n, |_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            1e-3 * e
        });
        for &j in &support {
            let mag = rng.random_range(10.0 * params.tol..=1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            y = y + sign * mag * &cols[j];
        }

        let phi = FeatureMatrix::new(
            cols.iter()
                .map(|c| Arc::new(FieldColumn::new(c.clone())))
                .collect(),
            (0..p).map(|j| format!("c{j}")).collect(),
        );
        let xi = stridge(&phi, &FieldColumn::new(y.clone()), &params).unwrap();
        let found: Vec<usize> = (0..p).filter(|&j| xi[j] != 0.0).collect();
        let oracle = best_subset_bic(
            &to_dmatrix(&cols),
            &DVector::from_iterator(n, y.iter().copied()),
        );
        if found == oracle {
            matches += 1;
        } else {
            misses.push(case);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = matches >= 95 && secs < 30.0;
    report(
        "C4 STRidge oracle equivalence",
        pass,
        &format!("{matches}/100 supports match best-subset BIC (>= 95), misses {misses:?}, {secs:.2}s (< 30s)"),
    );
    assert!(pass);
}

/// Reference coefficients in target-forest order and reference MSE.
fn reference(p: Problem) -> (Vec<f64>, f64) {
    match p {
        Problem::Burgers => (vec![-1.0011, 0.1024], 4.33e-5),
        Problem::Kdv => (vec![-0.0025, -1.0004], 1.48e-4),
        // the preset solves u_t = u_xx - u + u^3
        Problem::ChafeeInfante => (vec![1.0002, -1.0008, 1.0004], 4.84e-5),
        Problem::PdeDivide => (vec![-0.9979, 0.2498], 1.78e-4),
        Problem::PdeCompound => (vec![0.9806], 1.13e-1),
    }
}

#[test]
fn c5_fixed_structure_recovery() {
    let mut lines = Vec::new();
    let mut all = true;
    for p in Problem::ALL {
        let start = Instant::now();
        let d = dataset(p);
        let phi = build_feature_matrix(&target_forest(p), &d);
        let s = score(&phi, &ut_vector(&d), &RegressionParams::default());
        let secs = start.elapsed().as_secs_f64();
        let (want, want_mse) = reference(p);
        let coef_ok = s.valid
            && s.xi
                .iter()
                .zip(&want)
                .all(|(a, b)| ((a - b) / b).abs() <= 0.05);
        let ratio = s.mse / want_mse;
        let mse_ok = (0.1..=10.0).contains(&ratio);
        let ok = coef_ok && mse_ok && secs < 60.0;
        all &= ok;
        lines.push(format!(
            "{} xi {:.5?} vs {:?} ({}), mse {:.3e} x{:.3} of reference ({}), {:.1}s",
            p.name(),
            s.xi,
            want,
            if coef_ok { "ok" } else { "off" },
            s.mse,
            ratio,
            if mse_ok { "ok" } else { "off" },
            secs
        ));
    }
    report("C5 fixed-structure recovery", all, &lines.join("; "));
    assert!(all, "{}", lines.join("\n"));
}

const SEEDS: u64 = 10;

struct SeedRun {
    seed: u64,
    result: DiscoveryResult,
    log: Vec<u8>,
    /// Crossover children whose key had already been in the population.
    resurrected: Vec<String>,
    verdict: Result<(), String>,
}

fn discover(p: Problem, seed: u64, threads: usize) -> SeedRun {
    let d = dataset(p);
    let cfg = GAConfig {
        rng_seed: seed,
        ..GAConfig::default()
    };
    let opts = RunOptions {
        threads,
        ..RunOptions::default()
    };
    let mut known: HashSet<String> = HashSet::new();
    let mut resurrected = Vec::new();
    let result = evolve_with(&cfg, &d, opts, |ev| match ev {
        GenerationEvent::Population { members, .. } => {
            known.extend(members.iter().map(|c| c.key.clone()))
        }
        GenerationEvent::Children { children, .. } => {
            for c in children {
                if !known.insert(c.key.clone()) {
                    resurrected.push(c.key.clone());
                }
            }
        }
        GenerationEvent::Best(_) => {}
    })
    .unwrap();
    let mut log = Vec::new();
    write_evolution_log(&result.history, &mut log).unwrap();
    let xi = result
        .best
        .score
        .as_ref()
        .map(|s| s.xi.clone())
        .unwrap_or_default();
    let verdict = structure_verdict(&d, &result.best.forest, &xi, &target_forest(p));
    SeedRun {
        seed,
        result,
        log,
        resurrected,
        verdict,
    }
}

/// Default-configuration runs on seeds 0..10, computed once per problem.
fn runs(p: Problem) -> Arc<Vec<SeedRun>> {
    static CACHE: OnceLock<Mutex<HashMap<Problem, Slot<Vec<SeedRun>>>>> = OnceLock::new();
    let slot = {
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap();
        Arc::clone(map.entry(p).or_default())
    };
    Arc::clone(slot.get_or_init(|| Arc::new((0..SEEDS).map(|s| discover(p, s, 1)).collect())))
}

const DISCOVERY: [(Problem, usize); 4] = [
    (Problem::PdeDivide, 5),
    (Problem::PdeCompound, 5),
    (Problem::Burgers, 3),
    (Problem::Kdv, 3),
];

#[test]
fn c6_end_to_end_discovery() {
    let mut lines = Vec::new();
    let mut all = true;
    for (p, need) in DISCOVERY {
        let rs = runs(p);
        let hits: Vec<u64> = rs
            .iter()
            .filter(|r| r.verdict.is_ok())
            .map(|r| r.seed)
            .collect();
        all &= hits.len() >= need;
        lines.push(format!(
            "{} {}/{} (>= {need}) seeds {:?}",
            p.name(),
            hits.len(),
            SEEDS,
            hits
        ));
        for r in rs.iter() {
            eprintln!(
                "  {} seed {} gen {:>3} {:?}: {}",
                p.name(),
                r.seed,
                r.result.generations_run,
                r.verdict,
                r.result.equation_display
            );
        }
    }
    report("C6 end-to-end discovery", all, &lines.join("; "));
    assert!(all, "{}", lines.join("\n"));
}

#[test]
fn c7_ga_invariants() {
    let mut monotone_fail = Vec::new();
    let mut resurrections = 0;
    let mut repeat_fail = Vec::new();
    let mut seeds = 0;
    for (p, _) in DISCOVERY {
        let rs = runs(p);
        for r in rs.iter() {
            seeds += 1;
            let h = &r.result.history;
            if !h.windows(2).all(|w| w[1].aic <= w[0].aic) {
                monotone_fail.push(format!("{}#{}", p.name(), r.seed));
            }
            resurrections += r.resurrected.len();
        }
        // a second run, on a thread pool, must reproduce the log byte for byte
        for r in rs.iter().take(2) {
            let again = discover(p, r.seed, 2);
            if again.log != r.log || again.result != r.result {
                repeat_fail.push(format!("{}#{}", p.name(), r.seed));
            }
        }
    }
    let pass = monotone_fail.is_empty() && resurrections == 0 && repeat_fail.is_empty();
    report(
        "C7 GA invariants",
        pass,
        &format!(
            "{seeds} runs: non-monotone {monotone_fail:?}, resurrected children {resurrections}, non-identical reruns {repeat_fail:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn c8_convergence_detection() {
    let d = dataset(Problem::Kdv);
    let s = score(
        &build_feature_matrix(&target_forest(Problem::Kdv), &d),
        &ut_vector(&d),
        &RegressionParams::default(),
    );
    let threshold = GAConfig::default().aic_threshold;
    let below = s.valid && s.aic <= threshold;
    let near = (s.aic - (-10.3)).abs() <= 1.5;

    // every run that found the structure must have stopped on the first generation under the threshold
    let rs = runs(Problem::Kdv);
    let found: Vec<&SeedRun> = rs.iter().filter(|r| r.verdict.is_ok()).collect();
    let stops_ok = !found.is_empty()
        && found.iter().all(|r| {
            let h = &r.result.history;
            let (last, rest) = h.split_last().unwrap();
            r.result.converged
                && last.aic <= threshold
                && rest.iter().all(|g| g.aic > threshold)
                && h.len() < 100
        });
    let gens: Vec<usize> = found.iter().map(|r| r.result.generations_run).collect();

    let pass = below && near && stops_ok;
    report(
        "C8 convergence detection",
        pass,
        &format!(
            "KdV correct-structure AIC {:.3} (mse {:.3e}); <= {threshold}: {below}; within 1.5 of -10.3: {near}; early stop in runs that found it: {stops_ok} at generations {gens:?}",
            s.aic, s.mse
        ),
    );
    assert!(pass);
}
