use std::path::PathBuf;
use std::process::Command as Proc;

use hilbert_sharp::harness::Status;
use hilbert_sharp_cli::*;
use serde_json::Value;

fn bin() -> Proc {
    let mut c = Proc::new(env!("CARGO_BIN_EXE_hilbert-sharp"));
    c.env_remove(THREADS_ENV);
    c
}

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("hilbert-sharp")
        .chain(args.iter().copied())
        .map(String::from)
        .collect()
}

fn config(args: &[&str]) -> RunConfig {
    parse_args(&argv(args), None).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("hilbert-sharp-{}-{name}", std::process::id()))
}

const BASE: [&str; 6] = ["--beta", "0", "--mu", "0.25", "--sigma", "0.25"];

fn with_base(cmd: &str, rest: &[&str]) -> Vec<String> {
    let mut v = vec![cmd];
    v.extend(BASE);
    v.extend(rest);
    argv(&v)
}

#[test]
fn constant_reports_three_routes() {
    let out = bin()
        .args(&with_base("constant", &["--p", "2", "--method", "all"])[1..])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    let mut want = SCHEMA.to_vec();
    want.sort();
    let mut got = keys.clone();
    got.sort();
    assert_eq!(got, want);
    assert_eq!(v["command"], "constant");
    assert_eq!(v["params"]["lambda"], 0.5);
    assert_eq!(v["params"]["q"], 2.0);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 9);
    let k: Vec<f64> = results
        .iter()
        .filter(|r| r["kind"] == "K")
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert_eq!(k.len(), 3);
    for x in &k {
        assert!((x / k[0] - 1.0).abs() < 1e-8);
    }
    let diags = v["diagnostics"].as_array().unwrap();
    assert!(diags.iter().all(|d| d["value"]["agree"] == true));
}

#[test]
fn weights_table_and_spread() {
    let args = with_base("weights", &["--delta", "-1", "--points", "0.3,-1.7,5"]);
    let out = bin().args(&args[1..]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_PASS));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["results"].as_array().unwrap();
    assert_eq!(
        rows.iter().map(|r| r["point"].as_f64().unwrap()).collect::<Vec<_>>(),
        vec![0.3, -1.7, 5.0]
    );
    let spread = v["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["name"] == "max_rel_spread")
        .unwrap();
    assert!(spread["value"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["params"]["delta"], -1);
}

#[test]
fn missing_flag_is_a_usage_error() {
    let out = bin()
        .args(["weights", "--beta", "0", "--sigma", "0.25", "--points", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--mu") && err.contains("Usage"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn help_and_version_exit_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("opnorm"));
    let out = bin().arg("--version").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_values_name_their_flag() {
    let cases: [(&str, &[&str]); 6] = [
        ("--tol", &["--tol", "0.5"]),
        ("--p", &["--p", "3"]),
        ("--n-per-side", &["--n-per-side", "4"]),
        ("--seed-offset", &["--seed-offset", "500"]),
        ("--threads", &["--threads", "0"]),
        ("--form", &["--form", "cubic"]),
    ];
    for (flag, extra) in cases {
        match parse_args(&with_base("opnorm", extra), None) {
            Err(ParseStop::Usage(msg)) => assert!(msg.contains(flag), "{flag}: {msg}"),
            other => panic!("{flag}: {other:?}"),
        }
    }
    match parse_args(
        &argv(&["constant", "--beta", "0", "--mu", "0.9", "--sigma", "0.25"]),
        None,
    ) {
        Err(ParseStop::Usage(msg)) => assert!(msg.contains("lambda >= 1 - beta"), "{msg}"),
        other => panic!("{other:?}"),
    }
    match parse_args(
        &with_base("verify", &["--f", "power_exp:a=0", "--g", "wavelet:a=1"]),
        None,
    ) {
        Err(ParseStop::Usage(msg)) => assert!(msg.contains("--g"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn negative_values_parse() {
    let c = config(&[
        "constant", "--beta", "-0.3", "--mu", "0.5", "--sigma", "0.4", "--delta", "-1",
    ]);
    let p = c.params.unwrap();
    assert_eq!((p.beta, p.delta.as_int()), (-0.3, -1));
    let c = config(&[
        "weights", "--beta", "0", "--mu", "0.25", "--sigma", "0.25", "--points", "-1,2",
    ]);
    assert_eq!(
        c.command,
        Command::Weights {
            points: vec![-1.0, 2.0],
            function: WeightFunction::Omega
        }
    );
}

#[test]
fn config_file_with_overrides() {
    let path = scratch("run.cfg");
    std::fs::write(
        &path,
        "# settings\nbeta = 0.5\nmu=0.2\nsigma=0.2\nformat=csv\nn_per_side=16,32\ntol=1e-9\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let c = config(&["opnorm", "--config", p, "--mu", "0.1"]);
    let pr = c.params.unwrap();
    assert_eq!((pr.beta, pr.mu, pr.sigma), (0.5, 0.1, 0.2));
    assert_eq!(c.output_format, Format::Csv);
    assert_eq!(c.tol, 1e-9);
    assert_eq!(
        c.command,
        Command::Opnorm {
            n_per_side: vec![16, 32],
            t_max: 12.0
        }
    );
    std::fs::write(&path, "beta 0.5\n").unwrap();
    assert!(matches!(
        parse_args(&argv(&["opnorm", "--config", p]), None),
        Err(ParseStop::Usage(_))
    ));
    std::fs::write(&path, "beta=0.5\nmu=0.2\nsigma=0.2\npoints=1\n").unwrap();
    match parse_args(&argv(&["opnorm", "--config", p]), None) {
        Err(ParseStop::Usage(msg)) => assert!(msg.contains("--points"), "{msg}"),
        other => panic!("{other:?}"),
    }
    std::fs::remove_file(&path).unwrap();
    assert!(matches!(
        parse_args(&argv(&["opnorm", "--config", p]), None),
        Err(ParseStop::Usage(_))
    ));
}

#[test]
fn config_flags_are_flat_key_values() {
    assert_eq!(
        config_flags("a=1\n\n  # x\nn_per_side = 8,16\n--tol=1e-8").unwrap(),
        vec!["--a=1", "--n-per-side=8,16", "--tol=1e-8"]
    );
    assert!(config_flags("config=other").is_err());
}

#[test]
fn environment_sets_thread_count() {
    let args = with_base("constant", &["--threads", "3"]);
    assert_eq!(parse_args(&args, None).unwrap().thread_count, 3);
    assert_eq!(parse_args(&args, Some("2")).unwrap().thread_count, 2);
    assert!(matches!(parse_args(&args, Some("0")), Err(ParseStop::Usage(_))));
    let out = bin().args(&args[1..]).env(THREADS_ENV, "many").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains(THREADS_ENV));
}

#[test]
fn csv_headers_are_fixed() {
    let cases: [(Vec<String>, &str); 6] = [
        (
            with_base("constant", &["--method", "closed-form"]),
            "kind,method,value,abs_error_est,work",
        ),
        (
            with_base("weights", &["--points", "2", "--function", "varpi"]),
            "function,point,value,abs_error_est,k,rel_deviation",
        ),
        (
            with_base("verify", &["--f", "power_exp:a=-0.5:b=1", "--g", "power_gauss:a=0:b=1"]),
            "check,lhs,rhs,margin,error,status",
        ),
        (
            with_base("sharpness", &["--eps", "0.05"]),
            "eps,eps_i_tilde,abs_error_est,l_tilde,l_tilde_quadrature,ratio",
        ),
        (
            with_base("opnorm", &["--n-per-side", "8", "--t-max", "2"]),
            "n_per_side,t_max,norm,iterations,converged,constant,ratio",
        ),
        (
            argv(&["sweep"]),
            "beta,mu,sigma,lambda,k1,k2,k,max_rel_discrepancy,agree",
        ),
    ];
    for (mut args, header) in cases {
        args.extend(["--format".to_string(), "csv".to_string()]);
        let (text, _) = execute(&parse_args(&args, None).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        let cols = header.split(',').count();
        for l in lines {
            assert_eq!(l.split(',').count(), cols, "{l}");
        }
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let runs: [Vec<String>; 6] = [
        with_base("constant", &[]),
        with_base("weights", &["--points", "0.3,-1.7,5"]),
        with_base(
            "verify",
            &[
                "--f",
                "broken_power:a=0.1:b=0.9",
                "--g",
                "power_exp:a=-0.3:b=1",
                "--form",
                "homogeneous",
            ],
        ),
        with_base("sharpness", &[]),
        with_base("opnorm", &["--n-per-side", "16,32", "--seed-offset", "3"]),
        argv(&["sweep", "--delta", "-1"]),
    ];
    for args in runs {
        for fmt in ["json", "csv"] {
            let mut a = args.clone();
            a.extend(["--format".to_string(), fmt.to_string()]);
            let reports: Vec<String> = [1, 1, 4, 7]
                .iter()
                .map(|t| {
                    let mut c = parse_args(&a, None).unwrap();
                    c.thread_count = *t;
                    execute(&c).unwrap().0
                })
                .collect();
            assert!(reports.windows(2).all(|w| w[0] == w[1]), "{a:?}");
        }
    }
}

#[test]
fn binary_output_is_deterministic() {
    let args = &with_base("sharpness", &["--eps", "0.1,0.01"])[1..];
    let a = bin().args(args).env(THREADS_ENV, "1").output().unwrap();
    let b = bin().args(args).env(THREADS_ENV, "6").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_file_receives_the_report() {
    let path = scratch("report.json");
    let mut args = with_base("constant", &["--method", "series", "--kind", "k1"]);
    args.extend(["--out".to_string(), path.to_str().unwrap().to_string()]);
    assert_eq!(main_with(&args, None), EXIT_PASS);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 1);
    assert_eq!(v["results"][0]["method"], "series");
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn opnorm_short_of_the_band_is_inconclusive() {
    // A kernel that decays slowly in the log variable: the finite section stays near 0.88 K.
    let c = config(&[
        "opnorm",
        "--beta",
        "0",
        "--mu",
        "0.25",
        "--sigma",
        "0.25",
        "--n-per-side",
        "64",
    ]);
    let (text, status) = execute(&c).unwrap();
    assert_eq!(status, Status::Inconclusive);
    assert_eq!(exit_code(status), EXIT_INCONCLUSIVE);
    let v: Value = serde_json::from_str(&text).unwrap();
    let r = v["results"][0]["ratio"].as_f64().unwrap();
    assert!(r > 0.85 && r < 0.95);
    let c = config(&[
        "opnorm",
        "--beta",
        "0.5",
        "--mu",
        "0.2",
        "--sigma",
        "0.2",
        "--truncation",
        "first",
    ]);
    assert_eq!(execute(&c).unwrap().1, Status::Pass);
}

#[test]
fn reverse_sharpness_is_a_usage_error() {
    let args = with_base("sharpness", &["--p", "0.5"]);
    assert_eq!(main_with(&args, None), EXIT_USAGE);
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(Status::Pass), 0);
    assert_eq!(exit_code(Status::Fail), 1);
    assert_eq!(exit_code(Status::Inconclusive), 2);
    let e = hilbert_sharp::Error::Convergence {
        what: "x".into(),
        value: 0.0,
        abs_error_est: 1.0,
    };
    assert_eq!(error_exit_code(&e), EXIT_INCONCLUSIVE);
    assert_eq!(
        error_exit_code(&hilbert_sharp::Error::InvalidParams { constraint: "p == 1" }),
        EXIT_USAGE
    );
}
