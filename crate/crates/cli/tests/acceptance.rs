//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! The sampled-fading criterion includes amplify-and-forward at R = 8, where
//! a codeword needs ~78,000 slots on average; that point alone simulates
//! ~8e10 slots and dominates the runtime (about ten minutes on one core).

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use relay_goodput::analytic::{
    expected_time_af, expected_time_df, expected_time_df_product, goodput, outages, state_probs_af,
    state_probs_df,
};
use relay_goodput::montecarlo::run_batch;
use relay_goodput::optimizer::{optimize_k, TOLERANCE};
use relay_goodput::oracles::k1_quadrature;
use relay_goodput::special_fn::{bessel_k1, xi_k1_factor};
use relay_goodput::{ChannelParams, Mode, SimConfig, DEFAULT_ALPHA};
use relay_goodput_cli::{execute, Command, RunSpec};

const TRIALS: u64 = 1_000_000;

/// Result of one criterion: pass flag and a one-line detail.
type Verdict = (bool, String);

fn params_10db(k: f64) -> ChannelParams {
    ChannelParams::from_db(10.0, DEFAULT_ALPHA, k).unwrap()
}

fn fixed_eps_run(mode: Mode, eps: (f64, f64, f64), seed: u64) -> (f64, f64) {
    let cfg = SimConfig::new(mode, params_10db(0.5), 1.0, TRIALS, seed).with_fixed_eps(eps.0, eps.1, eps.2);
    let r = run_batch(&cfg).unwrap();
    (r.mean_slots, r.std_error)
}

fn z(mean: f64, se: f64, expected: f64) -> f64 {
    if se > 0.0 {
        (mean - expected) / se
    } else if mean == expected {
        0.0
    } else {
        f64::INFINITY
    }
}

fn af_fixed_grid() -> Verdict {
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut seed = 10_000;
    for e1 in grid {
        for e2 in grid {
            seed += 1;
            let (mean, se) = fixed_eps_run(Mode::Af, (e1, e2, 0.0), seed);
            let zz = z(mean, se, expected_time_af(e1, e2).unwrap());
            worst = worst.max(zz.abs());
            if zz.abs() > 3.0 {
                failures.push(format!("({e1},{e2}) z={zz:.2}"));
            }
        }
    }
    (failures.is_empty(), format!("25 points, max |z| = {worst:.2} {}", failures.join(" ")))
}

fn df_fixed_grid() -> Verdict {
    let grid = [0.1, 0.5, 0.9];
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut seed = 20_000;
    for e1 in grid {
        for e2 in grid {
            for e3 in grid {
                seed += 1;
                let (mean, se) = fixed_eps_run(Mode::Df, (e1, e2, e3), seed);
                let zz = z(mean, se, expected_time_df(e1, e2, e3).unwrap());
                worst = worst.max(zz.abs());
                if zz.abs() > 3.0 {
                    failures.push(format!("({e1},{e2},{e3}) z={zz:.2}"));
                }
            }
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..10_000 {
        let (e1, e2, e3) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
        let a = expected_time_df(e1, e2, e3).unwrap();
        let b = expected_time_df_product(e1, e2, e3).unwrap();
        worst_rel = worst_rel.max(((a - b) / b).abs());
    }
    let ok = failures.is_empty() && worst_rel <= 1e-12;
    (
        ok,
        format!(
            "27 points, max |z| = {worst:.2}; state vs product form max rel diff {worst_rel:.1e} over 1e4 triples {}",
            failures.join(" ")
        ),
    )
}

fn sampled_fading() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut seed = 30_000;
    for rate in [1.0, 4.0, 8.0] {
        for mode in [Mode::Af, Mode::Df] {
            seed += 1;
            // The default 10,000-slot cap would censor most AF trials at
            // R = 8 (mean ~78,000 slots); lift it so nothing is truncated.
            let cfg = SimConfig::new(mode, params_10db(0.5), rate, TRIALS, seed).with_max_slots(1_000_000_000);
            let analytic = cfg.analytic().unwrap();
            let r = run_batch(&cfg).unwrap();
            let zz = z(r.empirical_goodput, r.goodput_std_error, analytic.goodput);
            let pass = zz.abs() <= 3.0 && r.truncated_trials == 0;
            ok &= pass;
            parts.push(format!(
                "{mode} R={rate}: {:.5} vs {:.5} z={zz:.2}{}",
                r.empirical_goodput,
                analytic.goodput,
                if r.truncated_trials > 0 { format!(" truncated={}", r.truncated_trials) } else { String::new() }
            ));
        }
    }
    (ok, parts.join("; "))
}

fn af_location_midpoint() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let rate = rng.random_range(0.5..=10.0);
        let gamma = rng.random_range(1.0..=100.0);
        let o = optimize_k(Mode::Af, gamma, DEFAULT_ALPHA, rate).unwrap();
        worst = worst.max((o.k - 0.5).abs());
    }
    (worst <= 1e-4, format!("20 random (R, gamma), max |k* - 0.5| = {worst:.1e}"))
}

fn rate_curve_interior_max() -> Verdict {
    let rates: Vec<f64> = (0..120).map(|i| 0.1 + (12.0 - 0.1) * i as f64 / 119.0).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in [Mode::Af, Mode::Df] {
        let etas: Vec<f64> = rates.iter().map(|&r| goodput(mode, &params_10db(0.5), r).unwrap().goodput).collect();
        let (i, max) = etas.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let interior = i > 0 && i < rates.len() - 1 && etas[0] < max && etas[rates.len() - 1] < max;
        ok &= interior;
        parts.push(format!(
            "{mode}: max {max:.4} at R={:.3} (ends {:.4}, {:.2e})",
            rates[i],
            etas[0],
            etas[rates.len() - 1]
        ));
    }
    (ok, parts.join("; "))
}

fn optimal_location_claims() -> Verdict {
    let gamma = 10.0;
    let mut ok = true;
    let mut dist = Vec::new();
    let mut k4 = 0.0;
    for rate in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let af = optimize_k(Mode::Af, gamma, DEFAULT_ALPHA, rate).unwrap();
        let df = optimize_k(Mode::Df, gamma, DEFAULT_ALPHA, rate).unwrap();
        ok &= df.goodput >= af.goodput;
        if rate == 4.0 {
            k4 = df.k;
        }
        dist.push((df.k - 0.5).abs());
    }
    ok &= k4 >= 0.5;
    // Differences below the optimizer's resolution cannot be ordered.
    let decreasing = dist
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= TOLERANCE && w[1] <= TOLERANCE));
    ok &= decreasing;
    let d: Vec<String> = dist.iter().map(|d| format!("{d:.1e}")).collect();
    (ok, format!("DF >= AF at all R; DF k*(4) = {k4:.4}; |k* - 0.5| = [{}]", d.join(", ")))
}

fn high_snr_limit() -> Verdict {
    let params = ChannelParams::from_db(40.0, DEFAULT_ALPHA, 0.5).unwrap();
    let af = goodput(Mode::Af, &params, 4.0).unwrap().goodput;
    let df = goodput(Mode::Df, &params, 4.0).unwrap().goodput;
    let rel = (af - df).abs() / af.max(df);
    let ok = af >= 0.99 * 4.0 && df >= 0.99 * 4.0 && rel <= 0.01;
    (ok, format!("eta_AF = {af:.5}, eta_DF = {df:.5}, rel diff {rel:.1e}"))
}

fn special_function_accuracy() -> Verdict {
    let n = 100;
    let (lo, hi) = (1e-6f64.ln(), 50f64.ln());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let x = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let want = k1_quadrature(x);
        worst = worst.max(((bessel_k1(x).unwrap() - want) / want).abs());
    }
    let at_zero = xi_k1_factor(0.0).unwrap() == 1.0;
    let (lo, hi) = (1e-12f64.ln(), 1e5f64.ln());
    let mut prev = 1.0;
    let mut decreasing = true;
    for i in 0..400 {
        let xi = (lo + (hi - lo) * i as f64 / 399.0).exp();
        let f = xi_k1_factor(xi).unwrap();
        decreasing &= f < prev;
        prev = f;
    }
    (
        worst <= 1e-10 && at_zero && decreasing,
        format!("max rel err {worst:.1e}; factor(0) = 1: {at_zero}; strictly decreasing: {decreasing}"),
    )
}

fn simplex_and_bounds() -> Verdict {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
    let mut bad = BTreeMap::<&str, u32>::new();
    let mut worst_sum: f64 = 0.0;
    for _ in 0..100_000 {
        let gamma = 10f64.powf(rng.random_range(-1.0..4.0));
        let alpha = rng.random_range(1.0..6.0);
        // Dyadic k so that 1 - k is exact and the mirror image is the same
        // geometry.
        let k = rng.random_range(1..(1u32 << 20)) as f64 / (1u32 << 20) as f64;
        let rate = rng.random_range(0.01..20.0);
        let params = ChannelParams::new(gamma, alpha, k).unwrap();
        let af = outages(Mode::Af, &params, rate).unwrap();
        let df = outages(Mode::Df, &params, rate).unwrap();
        let sums = [
            state_probs_af(af.eps_sd(), af.eps_path2()).unwrap().sum(),
            state_probs_df(df.eps_sd(), df.eps_path2(), df.eps_rd().unwrap()).unwrap().sum(),
        ];
        for s in sums {
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
        for mode in [Mode::Single, Mode::Af, Mode::Df] {
            let g = goodput(mode, &params, rate).unwrap();
            if !(g.goodput > 0.0 && g.goodput <= rate) {
                *bad.entry("0 < eta <= R").or_default() += 1;
            }
            if g.expected_time < 1.0 {
                *bad.entry("E >= 1").or_default() += 1;
            }
        }
        let mirror = params.with_k(1.0 - k).unwrap();
        let a = goodput(Mode::Af, &params, rate).unwrap().goodput;
        let b = goodput(Mode::Af, &mirror, rate).unwrap().goodput;
        if a != b {
            *bad.entry("AF k-symmetry").or_default() += 1;
        }
    }
    if worst_sum > 1e-12 {
        bad.insert("simplex", 1);
    }
    (bad.is_empty(), format!("1e5 draws, max |sum - 1| = {worst_sum:.1e}, violations {bad:?}"))
}

fn validate_bytes(settings: &[(&str, &str)], threads: &str) -> (Vec<u8>, i32) {
    let mut map: BTreeMap<String, String> = settings.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    map.insert("threads".into(), threads.into());
    let spec = RunSpec::from_settings(Command::Validate, &map).unwrap();
    let outcome = execute(&spec).unwrap();
    (outcome.report.render(spec.format).unwrap(), outcome.exit_code)
}

fn validate_determinism() -> Verdict {
    let runs: [&[(&str, &str)]; 2] = [
        &[("mode", "af"), ("eps-grid", "0.1,0.5,0.9"), ("trials", "1000000"), ("seed", "42")],
        &[("mode", "df"), ("snr-db", "10"), ("k", "0.5"), ("rate", "1,4,8"), ("trials", "1000000"), ("seed", "42"), ("format", "json")],
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, settings) in runs.iter().enumerate() {
        let (a, code) = validate_bytes(settings, "1");
        let (b, _) = validate_bytes(settings, "1");
        let (c, _) = validate_bytes(settings, "4");
        let same = a == b && a == c;
        ok &= same && code == 0;
        parts.push(format!("run {}: {} bytes, identical across runs and threads: {same}, exit {code}", i + 1, a.len()));
    }
    (ok, parts.join("; "))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("AF mean slots, fixed outages, 5x5 grid, 3 SE", af_fixed_grid),
        ("DF mean slots, fixed outages, 3x3x3 grid, 3 SE; forms agree", df_fixed_grid),
        ("sampled fading vs closed-form goodput, R in {1,4,8}", sampled_fading),
        ("AF optimal relay location is the midpoint", af_location_midpoint),
        ("goodput vs rate has an interior maximum", rate_curve_interior_max),
        ("optimal location sweep: DF >= AF, DF k* -> 0.5", optimal_location_claims),
        ("high-SNR goodput approaches the rate", high_snr_limit),
        ("K1 accuracy and factor monotonicity", special_function_accuracy),
        ("simplex, bounds and k-symmetry over 1e5 draws", simplex_and_bounds),
        ("validate output is deterministic", validate_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check();
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} [{:.1}s] {name}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
