use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nbrecon_core::channel::{beta_from_f, efficiency, theoretical_threshold};
use nbrecon_core::code::{
    construct_code, read_code_file, serialize_code, validate_lambda, write_code_file, ConstructedCode, LambdaPolicy,
    RawTerms,
};
use nbrecon_core::design::{de_optimize, mcde_threshold, ThresholdSearch};
use nbrecon_core::ensembles::{self, PublishedEnsemble, REGISTRY_Q};
use nbrecon_core::hash::{digest64, hash_symbols, DIGEST_ALGORITHM};
use nbrecon_core::seeds::{derive_seed, fresh_seed, stream_rng, GENERATOR};
use nbrecon_core::sim::{find_working_point, random_word, reconcile_frame, sweep, PointResult};
use nbrecon_core::{
    ChannelModel, DeConfig, Decoder, DecoderConfig, DegreeDistribution, GfTable, McdeConfig, SimConfig,
    SparseParityCheck, Symbol,
};
use serde_json::{json, Value};

use crate::args::{
    AnalyzeArgs, CommonArgs, ConstructArgs, DecoderArgs, EnsembleArgs, OptimizeArgs, OutputFormat, ReconcileArgs,
    SimulateArgs, ThresholdArgs,
};
use crate::config::{pick, FileConfig};
use crate::error::{runtime, usage, CliError};

// Each command draws from its own child of the master seed, so a code built
// by `construct --seed s` is the same one `simulate --seed s` builds inline.
const TAG_CONSTRUCT: u64 = 1;
const TAG_SIMULATE: u64 = 2;
const TAG_RECONCILE: u64 = 3;
const TAG_THRESHOLD: u64 = 4;
const TAG_OPTIMIZE: u64 = 5;

/// User degrees above this are almost certainly a typo.
const USER_D_V_MAX: usize = 1000;

const CSV_HEADER: [&str; 8] = [
    "qber",
    "frames",
    "frame_errors",
    "fer",
    "mean_iterations",
    "efficiency",
    "undetected_errors",
    "leak_per_frame",
];

struct Setup {
    file: FileConfig,
    seed: u64,
    output: Option<PathBuf>,
}

fn setup(common: &CommonArgs) -> Result<Setup, CliError> {
    let file = FileConfig::load(common.config.as_deref())?;
    let seed = match pick(common.seed, file.seed) {
        Some(s) => s,
        None => {
            let s = fresh_seed();
            eprintln!("seed: {s} (auto-generated)");
            s
        }
    };
    let output = pick(common.output.clone(), file.output.clone());
    Ok(Setup { file, seed, output })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(runtime(&format!("writing {}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

fn check_q(q: usize) -> Result<usize, CliError> {
    GfTable::new(q).map_err(usage("q"))?;
    Ok(q)
}

fn check_rate(rate: f64) -> Result<f64, CliError> {
    if rate > 0.0 && rate < 1.0 {
        Ok(rate)
    } else {
        Err(CliError::Usage(format!("rate {rate} outside (0, 1)")))
    }
}

struct Ensemble {
    dist: DegreeDistribution,
    q: usize,
    label: String,
    published: Option<&'static PublishedEnsemble>,
}

fn resolve_ensemble(args: &EnsembleArgs, file: &FileConfig) -> Result<Ensemble, CliError> {
    let q = check_q(pick(args.q, file.q).unwrap_or(REGISTRY_Q))?;
    let rate = pick(args.rate, file.rate).map(check_rate).transpose()?;
    let lambda = pick(args.lambda.clone(), file.lambda.clone());
    let name = pick(args.ensemble.clone(), file.ensemble.clone());
    if let Some(text) = lambda {
        let rate = rate.ok_or_else(|| CliError::Usage("--lambda needs --rate".into()))?;
        let raw: RawTerms = text.parse().map_err(usage("lambda"))?;
        let checked = validate_lambda(&raw.0, &LambdaPolicy::strict(USER_D_V_MAX)).map_err(usage("lambda"))?;
        let dist = DegreeDistribution::concentrated(checked.lambda, rate).map_err(usage("ensemble"))?;
        return Ok(Ensemble {
            dist,
            q,
            label: "custom".into(),
            published: None,
        });
    }
    let entry = match (&name, rate) {
        (Some(n), _) => ensembles::lookup(n).ok_or_else(|| CliError::Usage(format!("unknown ensemble {n:?}")))?,
        (None, Some(r)) => ensembles::by_rate(r)
            .ok_or_else(|| CliError::Usage(format!("no built-in ensemble for rate {r}; pass --lambda")))?,
        (None, None) => return Err(CliError::Usage("need --rate, --ensemble or --lambda".into())),
    };
    if let Some(r) = rate {
        if (r - entry.rate).abs() > 1e-9 {
            return Err(CliError::Usage(format!(
                "ensemble {} has rate {}, not {r}",
                entry.name(),
                entry.rate
            )));
        }
    }
    let dist = entry.distribution().map_err(runtime("loading built-in ensemble"))?;
    Ok(Ensemble {
        dist,
        q,
        label: entry.name(),
        published: Some(entry),
    })
}

fn build_code(ens: &Ensemble, n: usize, seed: u64) -> Result<ConstructedCode, CliError> {
    let mut rng = stream_rng(derive_seed(seed, TAG_CONSTRUCT), 0);
    construct_code(&ens.dist, ens.q, n, &mut rng).map_err(runtime("construction failed"))
}

fn load_code(path: &Path) -> Result<SparseParityCheck, CliError> {
    read_code_file(path).map_err(runtime(&format!("reading {}", path.display())))
}

fn code_checksum(code: &SparseParityCheck) -> String {
    format!("{:016x}", digest64(serialize_code(code).as_bytes()))
}

fn histogram(degrees: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &d in degrees {
        *h.entry(d).or_insert(0) += 1;
    }
    h
}

fn histogram_text(h: &BTreeMap<usize, usize>) -> String {
    h.iter().map(|(d, c)| format!("{d}:{c}")).collect::<Vec<_>>().join(" ")
}

fn decoder_config(args: &DecoderArgs, file: &FileConfig) -> Result<DecoderConfig, CliError> {
    let mut cfg = file.decoder.unwrap_or_default();
    if let Some(v) = args.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = args.llr_saturation {
        cfg.llr_saturation = v;
    }
    cfg.validate().map_err(usage("decoder"))?;
    Ok(cfg)
}

fn channel(q: usize, p: f64) -> Result<ChannelModel, CliError> {
    ChannelModel::new(q, p).map_err(usage("qber"))
}

pub fn construct(args: ConstructArgs) -> Result<(), CliError> {
    let s = setup(&args.common)?;
    let ens = resolve_ensemble(&args.ensemble, &s.file)?;
    let n = pick(args.n, s.file.n).ok_or_else(|| CliError::Usage("construct needs --n".into()))?;
    let out = s
        .output
        .clone()
        .ok_or_else(|| CliError::Usage("construct needs --output for the code file".into()))?;
    let built = build_code(&ens, n, s.seed)?;
    write_code_file(&built.code, &out).map_err(runtime(&format!("writing {}", out.display())))?;

    let code = &built.code;
    let vars = histogram(&code.col_degrees());
    let chks = histogram(&code.row_degrees());
    let format = pick(args.format, s.file.format).unwrap_or(OutputFormat::Text);
    let text = match format {
        OutputFormat::Json => pretty(&json!({
            "code": out.display().to_string(),
            "ensemble": ens.label,
            "lambda": ens.dist.lambda().to_string(),
            "rho": ens.dist.rho().to_string(),
            "q": code.q(),
            "n": code.n(),
            "m": code.m(),
            "rate": code.rate(),
            "girth": built.girth,
            "variable_degrees": vars,
            "check_degrees": chks,
            "checksum": { "algorithm": DIGEST_ALGORITHM, "value": code_checksum(code) },
            "seed": s.seed,
        })),
        _ => {
            let mut t = String::new();
            writeln!(t, "code        {}", out.display()).unwrap();
            writeln!(t, "ensemble    {}", ens.label).unwrap();
            writeln!(t, "q n m       {} {} {}", code.q(), code.n(), code.m()).unwrap();
            writeln!(t, "rate        {:.6}", code.rate()).unwrap();
            let girth = built.girth.map_or("none (acyclic)".to_string(), |g| g.to_string());
            writeln!(t, "girth       {girth}").unwrap();
            writeln!(t, "var degrees {}", histogram_text(&vars)).unwrap();
            writeln!(t, "chk degrees {}", histogram_text(&chks)).unwrap();
            writeln!(t, "checksum    {DIGEST_ALGORITHM} {}", code_checksum(code)).unwrap();
            writeln!(t, "seed        {}", s.seed).unwrap();
            t
        }
    };
    print!("{text}");
    Ok(())
}

fn read_symbols(path: &Path) -> Result<Vec<Symbol>, CliError> {
    let text = std::fs::read_to_string(path).map_err(runtime(&format!("reading {}", path.display())))?;
    text.split_whitespace()
        .map(|t| {
            t.parse::<Symbol>()
                .map_err(|e| CliError::Runtime(format!("{}: bad symbol {t:?}: {e}", path.display())))
        })
        .collect()
}

pub fn reconcile(args: ReconcileArgs) -> Result<(), CliError> {
    let s = setup(&args.common)?;
    let code_path =
        pick(args.code.clone(), s.file.code.clone()).ok_or_else(|| CliError::Usage("reconcile needs --code".into()))?;
    let p = pick(args.qber, s.file.qber.as_ref().and_then(|v| v.first().copied()))
        .ok_or_else(|| CliError::Usage("reconcile needs --qber".into()))?;
    let dec_cfg = decoder_config(&args.decoder, &s.file)?;
    let code = load_code(&code_path)?;
    let ch = channel(code.q(), p)?;

    let mut rng = stream_rng(derive_seed(s.seed, TAG_RECONCILE), 0);
    let input = pick(args.input.clone(), s.file.input.clone());
    let x = match &input {
        Some(path) => {
            let x = read_symbols(path)?;
            if x.len() != code.n() {
                return Err(CliError::Runtime(format!(
                    "dimension mismatch: input has {} symbols, code length is {}",
                    x.len(),
                    code.n()
                )));
            }
            x
        }
        None => random_word(code.n(), code.q(), &mut rng),
    };
    let mut decoder = Decoder::new(&code, dec_cfg).map_err(usage("decoder"))?;
    let r = reconcile_frame(&mut decoder, &x, &ch, &mut rng).map_err(runtime("reconciliation failed"))?;
    if !r.verified {
        eprintln!("frame discarded: hashes differ");
    }
    let report = json!({
        "command": "reconcile",
        "code": code_path.display().to_string(),
        "code_checksum": code_checksum(&code),
        "input": input.map(|p| p.display().to_string()),
        "q": code.q(),
        "n": code.n(),
        "m": code.m(),
        "qber": p,
        "converged": r.converged,
        "verified": r.verified,
        "discarded": !r.verified,
        "undetected_error": r.undetected_error(),
        "iterations": r.iterations,
        "symbol_errors": r.symbol_errors,
        "leak_symbols": r.leak,
        "efficiency": efficiency(code.m(), code.n(), &ch).ok(),
        "hash": {
            "algorithm": DIGEST_ALGORITHM,
            "alice": format!("{:016x}", r.hash_alice),
            "bob": format!("{:016x}", r.hash_bob),
        },
        "decoder": dec_cfg,
        "seed": s.seed,
        "rng": GENERATOR,
    });
    debug_assert_eq!(r.hash_alice, hash_symbols(&x));
    emit(s.output.as_deref(), &pretty(&report))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_rows(rows: &[PointResult], m: usize, timing: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if timing {
        header.push("wall_seconds");
    }
    w.write_record(&header).map_err(runtime("csv"))?;
    for r in rows {
        let mut rec = vec![
            r.qber.to_string(),
            r.frames.to_string(),
            r.frame_errors.to_string(),
            r.fer.to_string(),
            r.mean_iterations.to_string(),
            fmt_opt(r.efficiency),
            r.undetected_errors.to_string(),
            (r.leaked_symbols / r.frames.max(1)).to_string(),
        ];
        debug_assert_eq!(r.leaked_symbols, r.frames * m);
        if timing {
            rec.push(format!("{:.3}", r.wall_seconds));
        }
        w.write_record(&rec).map_err(runtime("csv"))?;
    }
    let bytes = w.into_inner().map_err(runtime("csv"))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn row_json(r: &PointResult, timing: bool) -> Value {
    let mut v = json!({
        "qber": r.qber,
        "frames": r.frames,
        "frame_errors": r.frame_errors,
        "fer": r.fer,
        "mean_iterations": r.mean_iterations,
        "efficiency": r.efficiency,
        "undetected_errors": r.undetected_errors,
        "leak_per_frame": r.leaked_symbols / r.frames.max(1),
    });
    if timing {
        v["wall_seconds"] = json!(r.wall_seconds);
    }
    v
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let s = setup(&args.common)?;
    let f = &s.file;
    let code_path = pick(args.code.clone(), f.code.clone());
    let (code, source) = match &code_path {
        Some(path) => (load_code(path)?, path.display().to_string()),
        None => {
            let ens = resolve_ensemble(&args.ensemble, f)?;
            let n = pick(args.n, f.n).ok_or_else(|| CliError::Usage("simulate needs --code or --n".into()))?;
            (build_code(&ens, n, s.seed)?.code, format!("built:{}", ens.label))
        }
    };
    let qbers =
        pick(args.qber.clone(), f.qber.clone()).ok_or_else(|| CliError::Usage("simulate needs --qber".into()))?;
    if qbers.is_empty() {
        return Err(CliError::Usage("empty --qber list".into()));
    }
    for &p in &qbers {
        channel(code.q(), p)?;
    }
    let defaults = SimConfig::default();
    let cfg = SimConfig {
        frames: pick(args.frames, f.frames).unwrap_or(defaults.frames),
        error_stop: pick(args.error_stop, f.error_stop).unwrap_or(defaults.error_stop),
        batch: f.batch.unwrap_or(defaults.batch),
        decoder: decoder_config(&args.decoder, f)?,
        seed: derive_seed(s.seed, TAG_SIMULATE),
    };
    cfg.validate().map_err(usage("simulate"))?;
    let timing = args.timing || f.timing.unwrap_or(false);
    let format = pick(args.format, f.format).unwrap_or(OutputFormat::Csv);
    let target = pick(args.target_fer, f.target_fer);

    let (rows, working) = match target {
        Some(t) => {
            if qbers.len() != 2 {
                return Err(CliError::Usage(
                    "--target-fer needs exactly two --qber values (search range)".into(),
                ));
            }
            let steps = pick(args.search_steps, f.search_steps).unwrap_or(8);
            let wp = find_working_point(&code, t, qbers[0], qbers[1], steps, &cfg).map_err(usage("working point"))?;
            (wp.evaluated, Some((t, wp.point)))
        }
        None => (sweep(&code, &qbers, &cfg).map_err(runtime("simulation failed"))?, None),
    };

    let echo: Vec<(&str, String)> = vec![
        ("tool", format!("nbrecon {} simulate", env!("CARGO_PKG_VERSION"))),
        ("code", source),
        ("code_checksum", format!("{DIGEST_ALGORITHM}:{}", code_checksum(&code))),
        ("q", code.q().to_string()),
        ("n", code.n().to_string()),
        ("m", code.m().to_string()),
        ("frames", cfg.frames.to_string()),
        ("error_stop", cfg.error_stop.to_string()),
        ("max_iterations", cfg.decoder.max_iterations.to_string()),
        ("llr_saturation", cfg.decoder.llr_saturation.to_string()),
        ("check_every", cfg.decoder.check_every.to_string()),
        ("seed", s.seed.to_string()),
        ("rng", GENERATOR.to_string()),
        ("frame_hash", DIGEST_ALGORITHM.to_string()),
    ];
    let text = match format {
        OutputFormat::Json => {
            let mut cfg_echo = serde_json::Map::new();
            for (k, v) in &echo {
                cfg_echo.insert(k.to_string(), json!(v));
            }
            let mut report = json!({
                "config": cfg_echo,
                "points": rows.iter().map(|r| row_json(r, timing)).collect::<Vec<_>>(),
            });
            if let Some((t, point)) = &working {
                report["working_point"] = json!({
                    "target_fer": t,
                    "point": point.as_ref().map(|r| row_json(r, timing)),
                });
            }
            pretty(&report)
        }
        _ => {
            let mut t = String::new();
            for (k, v) in &echo {
                writeln!(t, "# {k}={v}").unwrap();
            }
            t.push_str(&csv_rows(&rows, code.m(), timing)?);
            if let Some((target, point)) = &working {
                match point {
                    Some(r) => writeln!(
                        t,
                        "# working_point target_fer={target} qber={} fer={} efficiency={}",
                        r.qber,
                        r.fer,
                        fmt_opt(r.efficiency)
                    )
                    .unwrap(),
                    None => writeln!(t, "# working_point target_fer={target} none").unwrap(),
                }
            }
            t
        }
    };
    emit(s.output.as_deref(), &text)
}

pub fn threshold(args: ThresholdArgs) -> Result<(), CliError> {
    let s = setup(&args.common)?;
    let ens = resolve_ensemble(&args.ensemble, &s.file)?;
    let mut cfg: McdeConfig = s.file.mcde.clone().unwrap_or_default();
    if let Some(v) = args.node_count {
        cfg.node_count = v;
    }
    if let Some(v) = args.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(v) = args.epsilon {
        cfg.entropy_epsilon = v;
    }
    if let Some(g) = args.grid.clone() {
        cfg.qber_grid = g;
    }
    if let Some(steps) = args.bisect {
        cfg.search = ThresholdSearch::Bisect { steps };
    }
    if args.no_confirm {
        cfg.confirm_failures = false;
    }
    cfg.validate().map_err(usage("mcde"))?;
    let rate = ens.dist.design_rate();
    let est = mcde_threshold(&ens.dist, ens.q, &cfg, derive_seed(s.seed, TAG_THRESHOLD)).map_err(|e| match e {
        nbrecon_core::DesignError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Runtime(format!("threshold estimation failed: {other}")),
    })?;
    let report = json!({
        "command": "threshold",
        "ensemble": ens.label,
        "lambda": ens.dist.lambda().to_string(),
        "rho": ens.dist.rho().to_string(),
        "q": ens.q,
        "rate": rate,
        "theoretical_threshold": theoretical_threshold(ens.q, rate).ok(),
        "published_threshold": ens.published.filter(|_| ens.q == REGISTRY_Q).map(|e| e.ensemble_threshold),
        "threshold": est.threshold,
        "boundary": est.boundary,
        "overturned": est.overturned,
        "verdicts": est.verdicts,
        "mcde": cfg,
        "seed": s.seed,
        "rng": GENERATOR,
    });
    emit(s.output.as_deref(), &pretty(&report))
}

pub fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let s = setup(&args.common)?;
    let f = &s.file;
    let rate = check_rate(pick(args.rate, f.rate).ok_or_else(|| CliError::Usage("optimize needs --rate".into()))?)?;
    let q = check_q(pick(args.q, f.q).unwrap_or(REGISTRY_Q))?;
    let mut de: DeConfig = f.de.clone().unwrap_or_default();
    if let Some(v) = args.population {
        de.population_size = v;
    }
    if let Some(v) = args.generations {
        de.generations = v;
    }
    if let Some(v) = args.max_distinct {
        de.max_distinct_degrees = v;
    }
    if let Some(v) = args.d_v_max {
        de.d_v_max = v;
    }
    let mut mcde: McdeConfig = f.mcde.clone().unwrap_or_default();
    if let Some(v) = args.node_count {
        mcde.node_count = v;
    }
    de.validate().map_err(usage("de"))?;
    mcde.validate().map_err(usage("mcde"))?;

    let result =
        de_optimize(rate, q, &de, &mcde, derive_seed(s.seed, TAG_OPTIMIZE)).map_err(runtime("optimization failed"))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let audit_path = pick(args.audit.clone(), f.audit.clone()).or_else(|| {
        s.output.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".audit.json");
            PathBuf::from(p)
        })
    });
    let audit = serde_json::to_value(&result.audit).map_err(runtime("audit"))?;
    let mut report = json!({
        "command": "optimize",
        "rate": rate,
        "q": q,
        "lambda": result.distribution.lambda().to_string(),
        "rho": result.distribution.rho().to_string(),
        "threshold": result.threshold,
        "theoretical_threshold": theoretical_threshold(q, rate).ok(),
        "warnings": result.warnings,
        "de": de,
        "mcde": mcde,
        "seed": s.seed,
        "rng": GENERATOR,
    });
    match &audit_path {
        Some(p) => {
            emit(Some(p), &pretty(&audit))?;
            report["audit"] = json!(p.display().to_string());
        }
        None => report["audit"] = audit,
    }
    emit(s.output.as_deref(), &pretty(&report))
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let q = check_q(args.q)?;
    let ch = channel(q, args.p)?;
    let h = ch.conditional_entropy();
    let leak_ratio = match (args.m, args.n, args.rate) {
        (Some(m), Some(n), _) => {
            if m == 0 || n == 0 || m > n {
                return Err(CliError::Usage(format!("need 0 < m <= n, got m={m} n={n}")));
            }
            Some(m as f64 / n as f64)
        }
        (None, _, Some(r)) => Some(1.0 - check_rate(r)?),
        _ => None,
    };
    let (f, beta) = match leak_ratio {
        Some(ratio) => {
            let f = match (args.m, args.n) {
                (Some(m), Some(n)) => efficiency(m, n, &ch),
                _ if h > 0.0 => Ok(ratio / h),
                _ => Err(nbrecon_core::ChannelError::ZeroEntropy),
            }
            .map_err(runtime("efficiency"))?;
            let beta = beta_from_f(f, &ch).map_err(runtime("beta"))?;
            (Some(f), Some(beta))
        }
        None => (None, None),
    };
    let sw_min = args.n.map(|n| ch.slepian_wolf_min(n));
    let text = match args.format {
        OutputFormat::Json => pretty(&json!({
            "q": q,
            "p": args.p,
            "conditional_entropy": h,
            "conditional_entropy_bits": ch.conditional_entropy_bits(),
            "slepian_wolf_min_symbols": sw_min,
            "leak_ratio": leak_ratio,
            "efficiency": f,
            "beta": beta,
        })),
        _ => {
            let mut t = String::new();
            writeln!(t, "H(X|Y)        {h:.6} ({:.6} bits)", ch.conditional_entropy_bits()).unwrap();
            if let Some(v) = sw_min {
                writeln!(t, "min leak      {v:.3} symbols").unwrap();
            }
            if let (Some(f), Some(b)) = (f, beta) {
                writeln!(t, "efficiency f  {f:.6}").unwrap();
                writeln!(t, "beta          {b:.6}").unwrap();
            }
            t
        }
    };
    print!("{text}");
    Ok(())
}
