//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still run and still report
//! FAIL when they fail, but do not fail the process.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{demo_pkg_dir, demo_repo, fm, fs, glibc_fm, gshell_fm, p_glibc_listed};
use lazydep::depparse::translate_directory;
use lazydep::discovery::{
    eager_discover, lazy_discover, verify_result, DiscoveryOptions, DiscoveryResult, Outcome, Verification,
};
use lazydep::extfm::*;
use lazydep::formula::{FeatureName, FeatureSet};
use lazydep::fragments::RepositoryIndex;
use lazydep::gen::{feature_pool, pick_guard_requests, random_ext, random_repository, random_request, run_generate, GenSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "A2",
    "the glibc product set contains {glibc:v} (glibc absent), so its slice on \
     {glibc, glibc:v} has four products, not the three listed",
)];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn show(p: &FeatureSet) -> String {
    format!("{{{}}}", p.iter().map(FeatureName::as_str).collect::<Vec<_>>().join(","))
}

fn show_products(m: &ExtFM) -> String {
    m.products().iter().map(show).collect::<Vec<_>>().join(" ")
}

fn a1() -> Check {
    let m = enumerate_products(&glibc_fm()).map_err(|e| e.to_string())?;
    let listed = p_glibc_listed();
    ensure(m == listed, || format!("enumerated {} products, listing has {}", m.products().len(), listed.products().len()))?;
    Ok(format!("{} products, equal to the listed set", m.products().len()))
}

fn a2() -> Check {
    let m = enumerate_products(&glibc_fm()).map_err(|e| e.to_string())?;
    let s = slice(&m, &fs(["glibc", "glibc:v"]));
    let expected = ExtFM::new(fs(["glibc", "glibc:v"]), [fs([]), fs(["glibc"]), fs(["glibc", "glibc:v"])]).unwrap();
    ensure(is_interface(&s, &m), || "slice is not an interface".into())?;
    ensure(s == expected, || format!("slice has products {}; expected {}", show_products(&s), show_products(&expected)))?;
    Ok("slice matches".into())
}

fn a3() -> Check {
    let glibc = enumerate_products(&glibc_fm()).unwrap();
    let gshell = enumerate_products(&gshell_fm()).unwrap();
    let composed = compose_ext(&glibc, &gshell);
    let full = enumerate_products(&fm(
        &["glibc", "txinfo", "tzdata", "g-shell", "glibc:doc", "glibc:v", "g-shell:nm"],
        "(glibc -> ((glibc:doc -> txinfo) & (glibc:v -> !tzdata))) & (g-shell -> (g-shell:nm -> tzdata))",
    ))
    .unwrap();
    ensure(composed == full, || "composition differs from the conjoined model".into())?;
    let c = fs(["glibc", "glibc:v", "g-shell", "g-shell:nm"]);
    ensure(!is_pre_product(&composed, &c), || "request is a pre-product".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let idx = translate_directory(&demo_pkg_dir(), dir.path()).map_err(|e| e.to_string())?;
    let c = fs([
        "sys-libs/glibc",
        "sys-libs/glibc:vanilla",
        "gnome-base/gnome-shell",
        "gnome-base/gnome-shell:networkmanager",
    ]);
    let r = lazy_discover(&idx, &c, DiscoveryOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.outcome == Outcome::NoProduct, || format!("lazy discovery returned {:?}", r.outcome))?;
    Ok(format!("{} composed products; lazy discovery on the translated repo: no product", composed.products().len()))
}

fn a4() -> Check {
    let m = enumerate_products(&glibc_fm()).unwrap();
    let cut = minimum_cut_fixpoint(&m, &fs(["glibc", "glibc:doc"])).map_err(|e| e.to_string())?;
    let expected = ExtFM::new(
        fs(["glibc", "glibc:doc", "txinfo"]),
        [
            fs([]),
            fs(["glibc"]),
            fs(["glibc:doc"]),
            fs(["glibc", "glibc:doc", "txinfo"]),
            fs(["txinfo"]),
            fs(["glibc", "txinfo"]),
            fs(["glibc:doc", "txinfo"]),
        ],
    )
    .unwrap();
    ensure(cut == expected, || format!("cut {} over {}", show_products(&cut), show(cut.features())))?;
    Ok("features {glibc,glibc:doc,txinfo}, 7 products".into())
}

fn a5() -> Check {
    let y = fs(["glibc", "glibc:v", "tzdata"]);
    let glibc = enumerate_products(&glibc_fm()).unwrap();
    let cut = minimum_cut_fixpoint(&glibc, &y).map_err(|e| e.to_string())?;
    let all = ExtFM::unconstrained(y.clone()).unwrap();
    let expected = ExtFM::new(y.clone(), all.products().iter().filter(|p| **p != y).cloned()).unwrap();
    ensure(cut == expected, || format!("glibc cut is {}", show_products(&cut)))?;
    let gshell = enumerate_products(&gshell_fm()).unwrap();
    let gcut = minimum_cut_fixpoint(&gshell, &y).map_err(|e| e.to_string())?;
    let gexpected = ExtFM::new(fs(["tzdata"]), [fs([]), fs(["tzdata"])]).unwrap();
    ensure(gcut == gexpected, || format!("g-shell cut is {} over {}", show_products(&gcut), show(gcut.features())))?;
    ensure(compose_ext(&cut, &gcut) == cut, || "composition of cuts differs from the glibc cut".into())?;
    let r = lazy_discover(&demo_repo(), &fs(["glibc", "tzdata"]), DiscoveryOptions::default())
        .map_err(|e| e.to_string())?;
    let p = r.outcome.product().ok_or("no product for {glibc,tzdata}")?.clone();
    Ok(format!("cut = (Y, 2^Y minus Y), composition preserved, found {}", show(&p)))
}

fn random_model(rng: &mut ChaCha8Rng, max_features: usize) -> ExtFM {
    let pool = feature_pool(8);
    let n = rng.gen_range(0..=max_features);
    let features: FeatureSet = pool.choose_multiple(rng, n).cloned().collect();
    let density = rng.gen_range(0.1..0.9);
    random_ext(rng, &features, density)
}

fn random_subset(rng: &mut ChaCha8Rng, of: &FeatureSet, p: f64) -> FeatureSet {
    of.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

fn a6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let m = random_model(&mut rng, 7);
        let y = random_subset(&mut rng, &feature_pool(8).into_iter().collect(), 0.4);
        let fix = minimum_cut_fixpoint(&m, &y).map_err(|e| e.to_string())?;
        let brute = minimum_cut_bruteforce(&m, &y).map_err(|e| format!("case {case}: {e}"))?;
        ensure(fix == brute, || format!("case {case}: fixpoint and brute force differ"))?;
    }
    Ok("200/200 agree".into())
}

fn a7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compatible = 0;
    for case in 0..200 {
        let k = rng.gen_range(1..=4);
        let ms: Vec<ExtFM> = (0..k)
            .map(|i| {
                let names: Vec<FeatureName> =
                    (0..4).map(|j| format!("d{i}_{j}").parse().unwrap()).collect();
                let n = rng.gen_range(0..=4);
                let features: FeatureSet = names.choose_multiple(&mut rng, n).cloned().collect();
                let density = rng.gen_range(0.1..0.9);
                random_ext(&mut rng, &features, density)
            })
            .collect();
        let union: FeatureSet = ms.iter().flat_map(|m| m.features().iter().cloned()).collect();
        let c = random_subset(&mut rng, &union, 0.4);
        let criterion = disjoint_compat_criterion(&ms, &c).map_err(|e| e.to_string())?;
        compatible += usize::from(criterion);
        ensure(criterion == is_pre_product(&compose_all(&ms), &c), || format!("case {case} disagrees"))?;
    }
    Ok(format!("200/200 agree ({compatible} compatible)"))
}

fn a8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0usize;
    for case in 0..200 {
        let k = rng.gen_range(1..=4);
        let ms: Vec<ExtFM> = (0..k).map(|_| random_model(&mut rng, 5)).collect();
        let union: FeatureSet = ms.iter().flat_map(|m| m.features().iter().cloned()).collect();
        let y = random_subset(&mut rng, &union, 0.5);
        let full = compose_all(&ms);
        let cuts: Vec<ExtFM> = ms.iter().map(|m| minimum_cut_fixpoint(m, &y).unwrap()).collect();
        let composed = compose_all(&cuts);
        for p in composed.products().iter().filter(|p| p.is_subset(&y)) {
            ensure(full.contains(p), || format!("case {case}: {} is not a product", show(p)))?;
        }
        let ys: Vec<&FeatureName> = y.iter().collect();
        for mask in 0u32..1 << ys.len() {
            let c: FeatureSet = ys.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, f)| (*f).clone()).collect();
            for p in full.products().iter().filter(|p| c.is_subset(p)) {
                checked += 1;
                ensure(
                    composed.products().iter().any(|q| c.is_subset(q) && q.is_subset(p)),
                    || format!("case {case}: nothing between {} and {}", show(&c), show(p)),
                )?;
            }
        }
    }
    Ok(format!("200/200 families, {checked} (c, p) pairs"))
}

struct Case {
    frags: Vec<lazydep::Fragment>,
    idx: RepositoryIndex,
    c: FeatureSet,
}

fn corpus() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    (0..300)
        .map(|_| {
            let frags = random_repository(&mut rng, 5, 6, 12);
            let idx = RepositoryIndex::from_fragments(frags.clone()).unwrap();
            let c = random_request(&mut rng, &idx, 3);
            Case { frags, idx, c }
        })
        .collect()
}

fn a9() -> Check {
    let mut found = 0;
    for (i, case) in corpus().iter().enumerate() {
        let ms: Vec<ExtFM> = case.frags.iter().map(|f| enumerate_products(&f.fm).unwrap()).collect();
        let expected = discover_ext(&ms, &case.c).map_err(|e| e.to_string())?.is_some();
        let r = lazy_discover(&case.idx, &case.c, DiscoveryOptions::default()).map_err(|e| e.to_string())?;
        ensure(r.outcome.is_found() == expected, || format!("repository {i}: existence disagrees"))?;
        let v = verify_result(&case.idx, &case.c, &r.outcome).map_err(|e| e.to_string())?;
        ensure(v == Verification::Confirmed, || format!("repository {i}: {v:?}"))?;
        found += usize::from(expected);
    }
    Ok(format!("300/300 agree ({found} found)"))
}

fn a11() -> Check {
    let opts = DiscoveryOptions { debug_invariants: true, ..Default::default() };
    let mut max_iter = 0;
    for (i, case) in corpus().iter().enumerate() {
        let r = lazy_discover(&case.idx, &case.c, opts).map_err(|e| e.to_string())?;
        ensure(r.violations.is_empty(), || format!("repository {i}: {:?}", r.violations))?;
        ensure(r.stats.iterations <= r.stats.total_features + 1, || format!("repository {i}: {} iterations", r.stats.iterations))?;
        max_iter = max_iter.max(r.stats.iterations);
    }
    Ok(format!("300 runs, no violations, max {max_iter} iterations"))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Median wall time over `repeats` runs, with the stats of the last run.
fn timed(repeats: usize, mut run: impl FnMut() -> DiscoveryResult) -> (DiscoveryResult, f64) {
    let mut walls = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let r = run();
        walls.push(r.stats.wall_ms());
        last = Some(r);
    }
    (last.unwrap(), median(&walls))
}

fn a10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = GenSpec { fragments: 2000, features_per_fragment: 10, dep_out_degree: 3, share_prob: 0.05, seed: 1 };
    let idx = run_generate(&spec, dir.path()).map_err(|e| e.to_string())?;
    let total = idx.total_features();
    let requests = pick_guard_requests(&idx, 50, 60, 10).map_err(|e| e.to_string())?;
    let opts = DiscoveryOptions::default();
    let (mut lazy_walls, mut eager_walls, mut loaded) = (Vec::new(), Vec::new(), Vec::new());
    let mut worst = 0.0f64;
    let mut found = 0;
    for (i, c) in requests.iter().enumerate() {
        let (lazy, lazy_ms) = timed(3, || lazy_discover(&idx, c, opts).unwrap());
        let (eager, eager_ms) = timed(1, || eager_discover(&idx, c, opts).unwrap());
        ensure(lazy.outcome.is_found() == eager.outcome.is_found(), || format!("problem {i}: lazy and eager disagree"))?;
        let share = lazy.stats.features_loaded as f64 / total as f64;
        ensure(share <= 0.05, || format!("problem {i}: lazy loaded {:.2}% of features", share * 100.0))?;
        ensure(eager.stats.features_loaded == total, || format!("problem {i}: eager loaded {}", eager.stats.features_loaded))?;
        worst = worst.max(share);
        found += usize::from(lazy.outcome.is_found());
        lazy_walls.push(lazy_ms);
        eager_walls.push(eager_ms);
        loaded.push(lazy.stats.features_loaded as f64);
    }
    let (ml, me) = (median(&lazy_walls), median(&eager_walls));
    let rho = spearman(&loaded, &lazy_walls);
    let summary = format!(
        "{total} features, {found}/50 found, max lazy load {:.2}%, median wall {ml:.2} ms lazy vs {me:.2} ms eager, spearman {rho:.2}",
        worst * 100.0
    );
    ensure(ml < me, || format!("median lazy not faster: {summary}"))?;
    ensure(rho > 0.5, || format!("weak correlation: {summary}"))?;
    Ok(summary)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 11] = [
        ("A1", a1, Some(Duration::from_secs(1))),
        ("A2", a2, None),
        ("A3", a3, None),
        ("A4", a4, None),
        ("A5", a5, None),
        ("A6", a6, Some(Duration::from_secs(60))),
        ("A7", a7, None),
        ("A8", a8, None),
        ("A9", a9, Some(Duration::from_secs(120))),
        ("A10", a10, None),
        ("A11", a11, None),
    ];
    let known: BTreeSet<&str> = KNOWN_UNATTAINABLE.iter().map(|(id, _)| *id).collect();
    let mut unexpected = 0;
    for (id, check, limit) in criteria {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if elapsed > limit {
                result = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("{id} PASS ({:.2} s) {detail}", elapsed.as_secs_f64()),
            Err(detail) => {
                let note = KNOWN_UNATTAINABLE
                    .iter()
                    .find(|(k, _)| *k == id)
                    .map(|(_, why)| format!(" [known unattainable: {why}]"))
                    .unwrap_or_default();
                println!("{id} FAIL ({:.2} s) {detail}{note}", elapsed.as_secs_f64());
                if !known.contains(id) {
                    unexpected += 1;
                }
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
