//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use nbrecon_core::channel::conditional_entropy;
use nbrecon_core::code::{construct_code, ConstructedCode};
use nbrecon_core::decoder::{check_to_var, fwd_transform, inv_transform};
use nbrecon_core::design::{de_optimize, mcde_threshold, DeConfig, McdeConfig};
use nbrecon_core::ensembles::{self, PUBLISHED, REGISTRY_Q};
use nbrecon_core::sim::{random_word, reconcile_frame, simulate_point, PointResult};
use nbrecon_core::{ChannelModel, Decoder, DecoderConfig, GfTable, LlrVector, SimConfig, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CODE_LENGTH: usize = 3000;
const CODE_SEED: u64 = 2024;
const SATURATION: f64 = 30.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Frames reconciled across the frame-level criteria.
#[derive(Default)]
struct Tally {
    frames: usize,
    undetected: usize,
    leak_mismatches: usize,
}

impl Tally {
    fn add_point(&mut self, r: &PointResult, m: usize) {
        self.frames += r.frames;
        self.undetected += r.undetected_errors;
        if r.leaked_symbols != r.frames * m {
            self.leak_mismatches += 1;
        }
    }
}

fn registry_codes() -> Vec<(f64, ConstructedCode)> {
    PUBLISHED
        .iter()
        .map(|e| {
            let dist = e.distribution().expect("registry entry loads");
            let mut rng = ChaCha8Rng::seed_from_u64(CODE_SEED);
            let code = construct_code(&dist, REGISTRY_Q, CODE_LENGTH, &mut rng).expect("registry code builds");
            (e.rate, code)
        })
        .collect()
}

fn entropy_matches_rate() -> Verdict {
    let mut worst: f64 = 0.0;
    for e in &PUBLISHED {
        let dev = (conditional_entropy(REGISTRY_Q, e.theoretical_threshold) - (1.0 - e.rate)).abs();
        worst = worst.max(dev);
    }
    verdict(worst <= 0.003, format!("max |H(TT) - (1-R)| = {worst:.5} over 9 rows"))
}

fn ensemble_efficiency_consistent() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut fails = Vec::new();
    for e in PUBLISHED.iter().filter(|e| e.efficiency_consistent) {
        let implied = (1.0 - e.rate) / conditional_entropy(REGISTRY_Q, e.ensemble_threshold);
        let dev = (e.ensemble_efficiency - implied).abs();
        let tol = if e.rate > 0.875 { 0.02 } else { 0.015 };
        if dev > tol {
            fails.push(e.name());
        }
        worst = worst.max(dev);
        checked += 1;
    }
    verdict(
        fails.is_empty() && checked == 8,
        format!("{checked} rows checked (0.85 excluded), max deviation {worst:.4}, failing {fails:?}"),
    )
}

/// Marginal of the output symbol by enumerating every assignment of the
/// other neighbors.
fn brute_force(probs: &[Vec<f64>], weights: &[Symbol], h_out: Symbol, s: Symbol, gf: &GfTable) -> Vec<f64> {
    let q = gf.q();
    let d = probs.len();
    let mut out = vec![0.0; q];
    let mut a = vec![0usize; d];
    loop {
        let mut sum = s;
        let mut p = 1.0;
        for j in 0..d {
            sum ^= gf.mul(weights[j], a[j] as Symbol);
            p *= probs[j][a[j]];
        }
        // h_out * x + sum_j h_j a_j = s, so h_out * x = s + sum_j h_j a_j.
        let x = gf.div(sum, h_out).expect("nonzero weight");
        out[x as usize] += p;
        let mut j = 0;
        while j < d {
            a[j] += 1;
            if a[j] < q {
                break;
            }
            a[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}

fn random_llr(q: usize, spread: f64, rng: &mut ChaCha8Rng) -> LlrVector {
    let mut v: Vec<f64> = (0..q).map(|_| rng.random_range(-spread..spread)).collect();
    let base = v[0];
    v.iter_mut().for_each(|x| *x -= base);
    LlrVector::from_raw(v)
}

fn check_node_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for q in [2, 4, 8] {
        let gf = GfTable::new(q).unwrap();
        for degree in 2..=5 {
            for _ in 0..100 {
                let others = degree - 1;
                let msgs: Vec<LlrVector> = (0..others).map(|_| random_llr(q, 8.0, &mut rng)).collect();
                let weights: Vec<Symbol> = (0..others).map(|_| rng.random_range(1..q) as Symbol).collect();
                let h_out = rng.random_range(1..q) as Symbol;
                let s = rng.random_range(0..q) as Symbol;
                let fast = check_to_var(&msgs, &weights, h_out, s, &gf, SATURATION)
                    .unwrap()
                    .to_probs();
                let probs: Vec<Vec<f64>> = msgs.iter().map(|m| m.to_probs()).collect();
                let slow = brute_force(&probs, &weights, h_out, s, &gf);
                for (a, b) in fast.iter().zip(&slow) {
                    worst = worst.max((a - b).abs());
                }
                cases += 1;
            }
        }
    }
    verdict(
        worst < 1e-9,
        format!("{cases} cases, max probability deviation {worst:.2e}"),
    )
}

fn transform_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_transform: f64 = 0.0;
    let mut permute_failures = 0;
    for _ in 0..1000 {
        let q = [2, 4, 8, 16, 64, 256][rng.random_range(0..6)];
        let gf = GfTable::new(q).unwrap();
        let m = random_llr(q, 10.0, &mut rng);
        let h = rng.random_range(1..q) as Symbol;
        let back = inv_transform(&fwd_transform(&m, h, &gf).unwrap(), h, &gf, SATURATION).unwrap();
        for (a, b) in back.to_probs().iter().zip(m.to_probs()) {
            worst_transform = worst_transform.max((a - b).abs());
        }
        let round = m.permute_mul(h, &gf).unwrap().permute_div(h, &gf).unwrap();
        let dev = round
            .values()
            .iter()
            .zip(m.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            permute_failures += 1;
        }
    }
    verdict(
        worst_transform < 1e-10 && permute_failures == 0,
        format!(
            "1000 cases, inverse-transform deviation {worst_transform:.2e}, permutation failures {permute_failures}"
        ),
    )
}

fn zero_noise(codes: &[(f64, ConstructedCode)], tally: &mut Tally) -> Verdict {
    let channel = ChannelModel::new(REGISTRY_Q, 0.0).unwrap();
    let mut bad = 0;
    let mut total = 0;
    for (k, (_, built)) in codes.iter().enumerate() {
        let code = &built.code;
        let mut dec = Decoder::new(code, DecoderConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        for _ in 0..100 {
            let x = random_word(code.n(), code.q(), &mut rng);
            let r = reconcile_frame(&mut dec, &x, &channel, &mut rng).unwrap();
            if !(r.converged && r.verified && r.iterations <= 2) {
                bad += 1;
            }
            if r.undetected_error() {
                tally.undetected += 1;
            }
            if r.leak != code.m() {
                tally.leak_mismatches += 1;
            }
            total += 1;
        }
    }
    tally.frames += total;
    verdict(
        bad == 0,
        format!(
            "{} codes, {}/{total} frames decoded in <= 2 iterations",
            codes.len(),
            total - bad
        ),
    )
}

fn mcde_reproduction() -> Verdict {
    let cfg = McdeConfig {
        node_count: 20_000,
        max_iterations: 150,
        ..McdeConfig::default()
    };
    let mut parts = Vec::new();
    let mut pass = true;
    for (key, tol) in [("r050", 0.015), ("r080", 0.010)] {
        let e = ensembles::lookup(key).unwrap();
        let start = Instant::now();
        let est = mcde_threshold(&e.distribution().unwrap(), REGISTRY_Q, &cfg, 6).unwrap();
        let ok = est.threshold.is_some_and(|t| (t - e.ensemble_threshold).abs() <= tol);
        pass &= ok;
        parts.push(format!(
            "rate {}: p_t {:?} vs {} +/- {tol} ({:.0}s)",
            e.rate,
            est.threshold.map(|t| (t * 1e4).round() / 1e4),
            e.ensemble_threshold,
            start.elapsed().as_secs_f64()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn waterfall(codes: &[(f64, ConstructedCode)], tally: &mut Tally) -> Verdict {
    let code = &codes.iter().find(|(r, _)| *r == 0.5).unwrap().1.code;
    // No early stop here, so every point runs its full frame budget.
    let low = SimConfig {
        frames: 9000,
        error_stop: 9000,
        seed: 7,
        ..SimConfig::default()
    };
    let high = SimConfig {
        frames: 200,
        error_stop: 200,
        seed: 7,
        ..SimConfig::default()
    };
    let a = simulate_point(code, 0.18, &low, 0).unwrap();
    let b = simulate_point(code, 0.24, &high, 1).unwrap();
    tally.add_point(&a, code.m());
    tally.add_point(&b, code.m());
    verdict(
        a.fer <= 0.01 && a.frames >= 1000 && b.fer >= 0.9 && b.frames >= 200,
        format!(
            "QBER 0.18: FER {:.4} over {} frames; QBER 0.24: FER {:.3} over {} frames",
            a.fer, a.frames, b.fer, b.frames
        ),
    )
}

fn slepian_wolf_dominance() -> Verdict {
    let de = DeConfig {
        population_size: 6,
        generations: 3,
        ..DeConfig::default()
    };
    let mcde = McdeConfig {
        node_count: 2000,
        max_iterations: 100,
        ..McdeConfig::default()
    };
    let mut evaluated = 0;
    let mut violations = 0;
    for rate in [0.5, 0.9] {
        let res = de_optimize(rate, REGISTRY_Q, &de, &mcde, 8).unwrap();
        for e in &res.audit.entries {
            if let Some(t) = e.threshold {
                evaluated += 1;
                if conditional_entropy(REGISTRY_Q, t) > 1.0 - rate + 0.005 {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0 && evaluated > 0,
        format!("{evaluated} candidate thresholds at rates 0.5 and 0.9, {violations} above the bound"),
    )
}

fn determinism() -> Verdict {
    let run = |threads: &str, extra: &[&str]| -> Vec<u8> {
        let out = Command::new(env!("CARGO_BIN_EXE_nbrecon"))
            .args([
                "simulate",
                "--rate",
                "0.5",
                "--n",
                "600",
                "--qber",
                "0.1,0.2,0.26",
                "--frames",
                "150",
                "--error-stop",
                "25",
                "--seed",
                "99",
            ])
            .args(extra)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let one = run("1", &[]);
    let again = run("1", &[]);
    let four = run("4", &[]);
    let json_a = run("1", &["--format", "json"]);
    let json_b = run("3", &["--format", "json"]);
    verdict(
        one == again && one == four && json_a == json_b && !one.is_empty(),
        format!(
            "CSV {} bytes identical across runs and 1/4 threads; JSON identical across 1/3 threads",
            one.len()
        ),
    )
}

fn soundness(tally: &Tally) -> Verdict {
    verdict(
        tally.frames >= 10_000 && tally.undetected == 0 && tally.leak_mismatches == 0,
        format!(
            "{} frames, {} converged with hash mismatch, {} leak mismatches",
            tally.frames, tally.undetected, tally.leak_mismatches
        ),
    )
}

fn main() -> ExitCode {
    let mut tally = Tally::default();
    let codes = registry_codes();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {status} {name}: {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "entropy/threshold consistency", &mut entropy_matches_rate);
    report(
        2,
        "ensemble-efficiency cross-check",
        &mut ensemble_efficiency_consistent,
    );
    report(3, "check-node oracle", &mut check_node_oracle);
    report(4, "transform/permutation identities", &mut transform_identities);
    report(5, "zero-noise reconciliation", &mut || zero_noise(&codes, &mut tally));
    report(6, "MC-DE threshold reproduction", &mut mcde_reproduction);
    report(7, "finite-length waterfall", &mut || waterfall(&codes, &mut tally));
    report(8, "Slepian-Wolf dominance", &mut slepian_wolf_dominance);
    report(9, "determinism", &mut determinism);
    report(10, "protocol soundness", &mut || soundness(&tally));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
