use branchlink_cli::{execute, extract_config, figures, parse_config, Format};
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchlink"))
        .args(args)
        .env_remove("BRANCHLINK_WORKERS")
        .env_remove("BRANCHLINK_CACHE_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("branchlink-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn body(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

const PAIR: &str = "\
[process.a] kind=psdbp family=nb_shift_gated lambda=3 M=2
[process.b] kind=dcbp phi=shift_gated(M=2) offspring=zip(pi0=0.6666666666666666,lambda=3)
[run] z0=3 generations=20 paths=4 k=1,2 N=2000 seed=5
";

/// The shifted Poisson PSDBP and its equivalent DCBP.
const EQUIVALENT: &str = "\
[process.a] kind=psdbp family=poisson_scaled lambda=2
[process.b] kind=dcbp phi=max_shift(c=1) offspring=poisson(mu=2)
[run] z0=3 k=1,3 N=500 seed=9
";

#[test]
fn header_parses_back_to_the_run_config() {
    let mut cfg = parse_config(PAIR).unwrap();
    cfg.run.command = Some(branchlink_cli::Command::Tvd);
    let out = execute(cfg.clone()).unwrap();
    assert_eq!(out.format, Format::Csv);
    assert_eq!(extract_config(&out.body).unwrap(), cfg);

    cfg.run.format = Some(Format::Json);
    let out = execute(cfg.clone()).unwrap();
    assert_eq!(extract_config(&out.body).unwrap(), cfg);
}

#[test]
fn default_seed_is_recorded() {
    let text = PAIR.replace(" seed=5", "");
    let path = write_config("noseed.cfg", &text);
    let out = stdout(&bin(&["simulate", path.to_str().unwrap()]));
    assert_eq!(extract_config(&out).unwrap().run.seed, Some(0));
}

#[test]
fn csv_bodies_are_reproducible_across_workers() {
    let path = write_config("pair.cfg", PAIR);
    let p = path.to_str().unwrap();
    for command in ["simulate", "tvd"] {
        let one = stdout(&bin(&[command, p, "--workers", "1"]));
        let three = stdout(&bin(&[command, p, "--workers", "3"]));
        let again = stdout(&bin(&[command, p, "--workers", "3"]));
        assert_eq!(body(&one), body(&three), "{command}");
        assert_eq!(three, again, "{command}");
    }
}

#[test]
fn fig3_simulates_ten_paths_per_process() {
    let out = stdout(&bin(&["figure", "fig3", "--seed", "7"]));
    let rows = body(&out);
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("path,generation,size"));
    let rows: Vec<Vec<u64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20 * 51);
    for path in 0..20u64 {
        let first = rows.iter().find(|r| r[0] == path).unwrap();
        assert_eq!((first[1], first[2]), (0, 1000));
    }
    assert_eq!(extract_config(&out).unwrap().run.seed, Some(7));
}

#[test]
fn immigration_figure_has_no_equivalent_psdbp() {
    let path = write_config("fig2.cfg", figures::text("fig2").unwrap());
    let out = stdout(&bin(&["equivalence", path.to_str().unwrap()]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["result"]["outcome"], "no");
    assert_eq!(doc["result"]["rule"], "immigration-at-zero");
    assert_eq!(doc["command"], "equivalence");

    let code = bin(&["equivalence", path.to_str().unwrap(), "--expect", "yes"]).status.code();
    assert_eq!(code, Some(4));
}

#[test]
fn equivalent_pair_has_zero_tvd() {
    let path = write_config("eq.cfg", EQUIVALENT);
    let out = stdout(&bin(&["tvd", path.to_str().unwrap()]));
    let rows = body(&out);
    let mut n = 0;
    for line in rows.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[5], f[6]), ("0", "0"), "{line}");
        n += 1;
    }
    assert_eq!(n, 2);
    assert!(bin(&["moments", path.to_str().unwrap(), "--expect", "yes"]).status.success());
}

#[test]
fn invalid_probability_is_a_validation_error() {
    let path = write_config("bad.cfg", "[process.a]\nkind=cbp control=binomial psi=identity\nq=1.5 offspring=poisson(mu=3)\n[run] z0=1\n");
    let out = bin(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("`q`"), "{err}");
}

#[test]
fn overrides_and_missing_keys() {
    let path = write_config("over.cfg", PAIR);
    let p = path.to_str().unwrap();
    assert_eq!(bin(&["tvd", p, "--set", "N=0"]).status.code(), Some(2));
    assert_eq!(bin(&["tvd", p, "--set", "bogus=1"]).status.code(), Some(2));
    assert_eq!(bin(&["run", p]).status.code(), Some(2));
    let out = stdout(&bin(&["tvd", p, "--set", "k=3", "--set", "N=100"]));
    assert_eq!(body(&out).lines().count(), 2);
    assert!(body(&out).lines().nth(1).unwrap().starts_with("3,3,100,"));
}

#[test]
fn plot_is_written_next_to_the_output() {
    let dir = std::env::temp_dir().join(format!("branchlink-plot-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("fig1.csv");
    let out = bin(&["figure", "fig1", "-o", csv.to_str().unwrap(), "--plot"]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.join("fig1.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(bin(&["figure", "fig1", "--plot"]).status.code(), Some(2));
}

#[test]
fn bound_and_match_commands_report() {
    let path = write_config("bound.cfg", PAIR);
    let out = stdout(&bin(&["bound", path.to_str().unwrap(), "--set", "z=100,10000"]));
    let rows = body(&out);
    assert!(rows.starts_with("z,k,alpha,h,R,eta,j_bound,k_step_bound,closed_form,effective_bound\n"));
    assert_eq!(rows.lines().count(), 1 + 2 * 2);

    let dcbp = write_config("match.cfg", "[process.a] kind=dcbp phi=affine(a=1,b=0) offspring=binomial(n=2,p=0.5)\n[run] z0=1 cap=200\n");
    let out = stdout(&bin(&["match", dcbp.to_str().unwrap(), "--expect", "yes"]));
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["result"]["feasibility"], "feasible");
}

fn sweep_rows(out: &str) -> Vec<(f64, u32, u64, f64, f64)> {
    body(out)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[5].parse().unwrap(), f[6].parse().unwrap())
        })
        .collect()
}

#[test]
fn reduced_figures_keep_their_shape() {
    for name in ["fig1", "fig2", "fig3"] {
        stdout(&bin(&["figure", name, "--scale", "0.01"]));
    }
    let out = stdout(&bin(&["figure", "fig4", "--scale", "0.01"]));
    let rows = sweep_rows(&out);
    assert_eq!(rows.len(), 198 * 4 * 2);
    let at = |cap: f64, k: u32, from_one: bool| {
        rows.iter()
            .find(|r| r.0 == cap && r.1 == k && (r.2 == 1) == from_one)
            .map(|r| (r.3, r.4))
            .unwrap()
    };
    for k in [1, 2, 5, 10] {
        let (small, s1) = at(10.0, k, false);
        let (large, s2) = at(200.0, k, false);
        assert!(small - large > 2.0 * (s1 * s1 + s2 * s2).sqrt(), "k={k}: {small} vs {large}");
    }
    for cap in [10.0, 50.0, 200.0] {
        assert!(at(cap, 10, false).0 > at(cap, 1, false).0, "K={cap}");
    }
    let (one, s1) = at(200.0, 5, true);
    let (cap, s2) = at(200.0, 5, false);
    assert!(one - cap > 2.0 * (s1 * s1 + s2 * s2).sqrt());
}
