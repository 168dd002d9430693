//! One runner per command. Each returns the CSV table, its JSON twin and an
//! optional chart, all built from the same rows.

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::plot::{Plot, Series};
use branchlink::bounds::{bound_sweep, certify_regularity, write_bound_csv};
use branchlink::equivalence::{construct_equivalent_psdbp, decide_equivalence, EquivalenceError};
use branchlink::estimator::{estimate_path_tvd, sweep, write_sweep_csv, ProcessPair, Side, StartRule, SweepConfig};
use branchlink::kernels::{simulate, write_trajectories_csv};
use branchlink::matching::{check_match, match_dcbp_to_psdbp, match_psdbp_to_dcbp};
use branchlink::rational;
use branchlink::rng::derive_seed;
use branchlink::{KernelOptions, ProcessSpec, TransitionKernel};
use serde_json::{json, Value};
use std::collections::HashMap;

pub struct Output {
    /// Notes for the header, one per line.
    pub notes: Vec<String>,
    pub csv: String,
    pub json: Value,
    pub plot: Option<Plot>,
    /// `Some(false)` for a No verdict, an infeasible match or failed regularity.
    pub affirmative: Option<bool>,
}

/// Resolved numeric settings shared by the runners.
pub struct Settings {
    pub seed: u64,
    pub workers: usize,
    pub kernel: KernelOptions,
}

impl Settings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let mut kernel = KernelOptions::default();
        if let Some(t) = cfg.run.tail_tol {
            kernel.tail_tol = t;
        }
        if let Some(c) = cfg.run.cache_cap {
            kernel.cache_capacity = c;
        }
        let workers = cfg
            .run
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        Settings { seed: cfg.run.seed.unwrap_or(0), workers, kernel }
    }
}

pub fn run(cfg: &RunConfig, command: Command) -> Result<Output, CliError> {
    let s = Settings::from_config(cfg);
    match command {
        Command::Simulate => simulate_cmd(cfg, &s),
        Command::Moments => moments_cmd(cfg),
        Command::Equivalence => equivalence_cmd(cfg),
        Command::Match => match_cmd(cfg),
        Command::Bound => bound_cmd(cfg),
        Command::Tvd => tvd_cmd(cfg, &s),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("csv writers emit UTF-8")
}

/// Resolves a process at the single carrying capacity of a non-sweep command.
fn single(cfg: &RunConfig, name: &str) -> Result<ProcessSpec, CliError> {
    if cfg.run.capacities.as_ref().is_some_and(|k| k.len() > 1) {
        return Err(CliError::Validation {
            line: cfg.run_line("K"),
            key: "K".into(),
            message: "a grid of carrying capacities is only used by tvd".into(),
        });
    }
    cfg.process(name)?.resolve(&cfg.context(None))
}

fn z0(cfg: &RunConfig) -> Result<u64, CliError> {
    cfg.run.z0.ok_or_else(|| CliError::missing("z0", 0))
}

fn simulate_cmd(cfg: &RunConfig, s: &Settings) -> Result<Output, CliError> {
    let z0 = z0(cfg)?;
    let generations = cfg.run.generations.unwrap_or(100);
    let paths = cfg.run.paths.unwrap_or(1);
    let mut all = Vec::new();
    let mut notes = Vec::new();
    let mut processes = Vec::new();
    for (i, name) in cfg.processes.keys().enumerate() {
        let spec = single(cfg, name)?;
        // the first process uses the seed itself so a one-process run matches the library call
        let seed = if i == 0 { s.seed } else { derive_seed(s.seed, &[i as u64]) };
        let kernel = TransitionKernel::new(spec.clone(), s.kernel);
        let t = simulate(&kernel, z0, generations, paths, seed, s.workers)?;
        let first = all.len();
        notes.push(format!("paths {first}..{}: process.{name} = {spec} (seed {seed})", first + t.len() - 1));
        processes.push(json!({"name": name, "spec": spec.to_string(), "seed": seed, "first_path": first, "trajectories": t}));
        all.extend(t);
    }
    if all.is_empty() {
        return Err(CliError::missing("[process.a]", 0));
    }
    let mut buf = Vec::new();
    write_trajectories_csv(&mut buf, &all)?;
    let series = all
        .iter()
        .enumerate()
        .map(|(i, p)| Series { name: format!("path {i}"), points: p.iter().enumerate().map(|(g, &z)| (g as f64, z as f64)).collect() })
        .collect();
    Ok(Output {
        notes,
        csv: utf8(buf),
        json: json!({ "processes": processes }),
        plot: Some(Plot { title: "Simulated trajectories".into(), x_label: "generation".into(), y_label: "population size".into(), series }),
        affirmative: None,
    })
}

fn moments_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let a = single(cfg, "a")?;
    let b = if cfg.processes.contains_key("b") { Some(single(cfg, "b")?) } else { None };
    let lo = cfg.run.z_min.unwrap_or(0);
    let hi = cfg.run.z_max.unwrap_or(50);
    let moments = |p: &ProcessSpec, z: u64| -> Result<(f64, f64), CliError> {
        Ok(match p.exact_conditional_moments(z) {
            Some((m, v)) => (rational::to_f64(&m), rational::to_f64(&v)),
            None => p.conditional_moments(z)?,
        })
    };
    let mut csv = String::new();
    let mut rows = Vec::new();
    let mut series = vec![Series { name: "mean a".into(), points: vec![] }];
    match &b {
        None => csv.push_str("z,mean,variance\n"),
        Some(_) => {
            csv.push_str("z,mean_a,variance_a,mean_b,variance_b,max_relative_residual\n");
            series.push(Series { name: "mean b".into(), points: vec![] });
        }
    }
    let check = match &b {
        Some(b) => Some(check_match(&a, b, lo..=hi)?),
        None => None,
    };
    for z in lo..=hi {
        let (ma, va) = moments(&a, z)?;
        series[0].points.push((z as f64, ma));
        match (&b, &check) {
            (Some(b), Some(c)) => {
                let (mb, vb) = moments(b, z)?;
                let r = &c.residuals[(z - lo) as usize];
                let res = r.mean.max(r.variance);
                csv.push_str(&format!("{z},{ma},{va},{mb},{vb},{res}\n"));
                series[1].points.push((z as f64, mb));
                rows.push(json!({"z": z, "mean_a": ma, "variance_a": va, "mean_b": mb, "variance_b": vb, "max_relative_residual": res, "exact": r.exact}));
            }
            _ => {
                csv.push_str(&format!("{z},{ma},{va}\n"));
                rows.push(json!({"z": z, "mean": ma, "variance": va}));
            }
        }
    }
    let mut notes = vec![format!("process.a = {a}")];
    if let Some(b) = &b {
        notes.push(format!("process.b = {b}"));
    }
    let matched = check.as_ref().map(|c| c.matched);
    if let Some(c) = &check {
        notes.push(format!("matched: {} (first mismatch {:?})", c.matched, c.first_mismatch));
    }
    Ok(Output {
        notes,
        csv,
        json: json!({"matched": matched, "rows": rows}),
        plot: Some(Plot { title: "Conditional means".into(), x_label: "z".into(), y_label: "E[Z1 | Z0 = z]".into(), series }),
        affirmative: matched,
    })
}

fn equivalence_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = single(cfg, "a")?;
    let z0 = cfg.run.z0.unwrap_or(1);
    let cap = cfg.run.cap.unwrap_or(1000);
    let verdict = decide_equivalence(&spec, z0, cap)?;
    let mut json = serde_json::to_value(&verdict).map_err(|e| CliError::Failure(e.to_string()))?;
    if verdict.construction().is_some() && !spec.is_psdbp() {
        match construct_equivalent_psdbp(&spec, z0, cap) {
            Ok((_, audit)) => json["audit"] = serde_json::to_value(&audit).map_err(|e| CliError::Failure(e.to_string()))?,
            Err(EquivalenceError::AuditFailed { state, diff }) => {
                return Err(CliError::Numeric(format!("constructed kernel differs by {diff:e} at state {state}")))
            }
            Err(e) => return Err(e.into()),
        }
    }
    let outcome = json["outcome"].as_str().unwrap_or("").to_string();
    let witness = verdict.witness.map(|w| w.to_string()).unwrap_or_default();
    let construction = verdict.construction().map(|c| c.to_string()).unwrap_or_default();
    let csv = format!(
        "rule,outcome,witness,attainable_truncated,construction\n{},{},{},{},{}\n",
        verdict.rule,
        outcome,
        witness,
        verdict.attainable_truncated,
        csv_field(&construction)
    );
    Ok(Output {
        notes: vec![format!("process.a = {spec}")],
        csv,
        json,
        plot: None,
        affirmative: Some(verdict.is_yes()),
    })
}

fn match_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = single(cfg, "a")?;
    let z0 = cfg.run.z0.unwrap_or(1);
    let cap = cfg.run.cap.unwrap_or(1000);
    let report = if spec.as_dcbp().is_some() {
        match_psdbp_to_dcbp(&spec, z0, cap)?
    } else if spec.is_psdbp() {
        match_dcbp_to_psdbp(&spec, z0, cap, cfg.run.x_cap.unwrap_or(1000))?
    } else {
        return Err(CliError::Validation {
            line: cfg.process("a")?.header_line,
            key: "kind".into(),
            message: "matching needs a PSDBP or a deterministically controlled CBP".into(),
        });
    };
    let json = serde_json::to_value(&report).map_err(|e| CliError::Failure(e.to_string()))?;
    let mut csv = String::from("z,d,d_float\n");
    for (z, d) in &report.d_values {
        csv.push_str(&format!("{z},{},{}\n", d, rational::to_f64(d)));
    }
    let mut notes = vec![
        format!("process.a = {spec}"),
        format!("feasibility: {}", json["feasibility"].as_str().unwrap_or("")),
    ];
    if let Some(w) = report.witness {
        notes.push(format!("witness: {w}"));
    }
    if let Some(c) = &report.construction {
        notes.push(format!("construction: {c}"));
    }
    let points = report.d_values.iter().map(|(z, d)| (*z as f64, rational::to_f64(d))).collect();
    Ok(Output {
        notes,
        csv,
        json,
        plot: Some(Plot { title: "Fractional parts d(z)".into(), x_label: "z".into(), y_label: "d(z)".into(), series: vec![Series { name: "d".into(), points }] }),
        affirmative: Some(report.is_feasible()),
    })
}

/// `(PSDBP, CBP)` from sections a and b in either order.
fn ordered_pair(a: ProcessSpec, b: ProcessSpec) -> (ProcessSpec, ProcessSpec) {
    if !a.is_psdbp() && b.is_psdbp() {
        (b, a)
    } else {
        (a, b)
    }
}

fn bound_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let (psdbp, dcbp) = ordered_pair(single(cfg, "a")?, single(cfg, "b")?);
    let lo = cfg.run.z_min.unwrap_or(1);
    let hi = cfg.run.z_max.unwrap_or(200);
    let tail = cfg.run.tail_tol.unwrap_or(branchlink::distributions::DEFAULT_TAIL_TOL);
    let notes = vec![format!("psdbp = {psdbp}"), format!("dcbp = {dcbp}")];
    match certify_regularity(&psdbp, &dcbp, lo..=hi, tail)? {
        Ok(cert) => {
            let zs = cfg.run.zs.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0, 10000.0]);
            let ks = cfg.run.path_lengths.clone().unwrap_or_else(|| vec![1]);
            let alphas = cfg.run.alphas.clone().unwrap_or_else(|| vec![0.5]);
            let rows = bound_sweep(&cert, &zs, &ks, &alphas)?;
            let mut buf = Vec::new();
            write_bound_csv(&mut buf, &rows)?;
            let mut groups: Vec<Series> = Vec::new();
            for r in &rows {
                let name = format!("k={} alpha={}", r.k, r.alpha);
                match groups.iter_mut().find(|s| s.name == name) {
                    Some(s) => s.points.push((r.z, r.effective_bound)),
                    None => groups.push(Series { name, points: vec![(r.z, r.effective_bound)] }),
                }
            }
            Ok(Output {
                notes,
                csv: utf8(buf),
                json: json!({"certificate": cert, "rows": rows}),
                plot: Some(Plot { title: "TVD bounds".into(), x_label: "z".into(), y_label: "min(1, bound)".into(), series: groups }),
                affirmative: Some(true),
            })
        }
        Err(violations) => {
            let mut csv = String::from("condition,witness,detail\n");
            for v in &violations {
                let w = v.witness.map(|w| w.to_string()).unwrap_or_default();
                csv.push_str(&format!("{},{},{}\n", v.condition, w, csv_field(&v.detail)));
            }
            Ok(Output { notes, csv, json: json!({"violations": violations}), plot: None, affirmative: Some(false) })
        }
    }
}

fn tvd_cmd(cfg: &RunConfig, s: &Settings) -> Result<Output, CliError> {
    let n = cfg.run.n.unwrap_or(10_000);
    let side = cfg.run.side.unwrap_or(Side::Psdbp);
    let ks = cfg.run.path_lengths.clone().unwrap_or_else(|| vec![1]);
    let Some(capacities) = cfg.run.capacities.clone() else {
        let (a, b) = ordered_pair(single(cfg, "a")?, single(cfg, "b")?);
        let z0 = z0(cfg)?;
        let pair = ProcessPair::new(TransitionKernel::new(a.clone(), s.kernel), TransitionKernel::new(b.clone(), s.kernel));
        let mut csv = String::from("z0,k,N,seed,side,tvd_estimate,stderr\n");
        let mut rows = Vec::new();
        let mut points = Vec::new();
        for &k in &ks {
            let seed = derive_seed(s.seed, &[k as u64]);
            let est = estimate_path_tvd(&pair, z0, k, n, seed, side, s.workers)?;
            let side_name = serde_json::to_value(side).unwrap();
            csv.push_str(&format!("{z0},{k},{n},{seed},{},{},{}\n", side_name.as_str().unwrap(), est.value, est.stderr));
            points.push((k as f64, est.value));
            rows.push(est);
        }
        return Ok(Output {
            notes: vec![format!("psdbp = {a}"), format!("cbp = {b}")],
            csv,
            json: json!({"rows": rows}),
            plot: Some(Plot { title: "Estimated path TVD".into(), x_label: "k".into(), y_label: "TVD".into(), series: vec![Series { name: format!("z0={z0}"), points }] }),
            affirmative: None,
        });
    };

    let mut pairs = HashMap::new();
    for &cap in &capacities {
        let ctx = cfg.context(Some(cap));
        let a = cfg.process("a")?.resolve(&ctx)?;
        let b = cfg.process("b")?.resolve(&ctx)?;
        pairs.insert(cap.to_bits(), ordered_pair(a, b));
    }
    let config = SweepConfig {
        capacities: capacities.clone(),
        path_lengths: ks,
        start_rules: cfg.run.start_rules.clone().unwrap_or_else(|| vec![StartRule::CarryingCapacity]),
        n,
        seed: s.seed,
        side,
        workers: s.workers,
    };
    let rows = sweep(&config, |cap| pairs[&cap.to_bits()].clone(), s.kernel)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows)?;
    let mut groups: Vec<Series> = Vec::new();
    for r in &rows {
        let rule = match r.start_rule {
            StartRule::One => "z0=1",
            StartRule::CarryingCapacity => "z0=K",
        };
        let name = format!("k={} {rule}", r.k);
        match groups.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((r.capacity, r.tvd_estimate)),
            None => groups.push(Series { name, points: vec![(r.capacity, r.tvd_estimate)] }),
        }
    }
    let first = &pairs[&capacities[0].to_bits()];
    Ok(Output {
        notes: vec![format!("psdbp at K={} = {}", capacities[0], first.0), format!("cbp at K={} = {}", capacities[0], first.1)],
        csv: utf8(buf),
        json: json!({"rows": rows}),
        plot: Some(Plot { title: "Estimated k-step TVD".into(), x_label: "K".into(), y_label: "TVD".into(), series: groups }),
        affirmative: None,
    })
}
