use std::process::{Command, Output};

fn actguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actguard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn campaign_writes_one_csv_record() {
    let o = actguard(&[
        "campaign",
        "--function",
        "sigmoid",
        "--model",
        "bitflip",
        "--type",
        "random",
        "--n",
        "6",
        "--m",
        "5",
        "--terms",
        "30",
        "--epsilon",
        "1e-14",
        "--runs",
        "200",
        "--seed",
        "42",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "function,model,type,n,m,terms,epsilon,runs,seed,detected,benign,silent,ratio"
    );
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(
        &f[..9],
        &["sigmoid", "bitflip", "random", "6", "5", "30", "1e-14", "200", "42"]
    );
    let detected: usize = f[9].parse().unwrap();
    let total: usize = f[9..12].iter().map(|v| v.parse::<usize>().unwrap()).sum();
    assert_eq!(total, 200);
    assert_eq!(f[12], format!("{:.4}", detected as f64 / 200.0));
}

#[test]
fn logs_stay_off_stdout() {
    let o = actguard(&[
        "campaign",
        "--function",
        "expo",
        "--model",
        "skip",
        "--n",
        "1",
        "--runs",
        "20",
    ]);
    assert!(!o.stderr.is_empty());
    assert!(stdout(&o).starts_with("function,"));
}

#[test]
fn zero_n_is_a_config_error() {
    let o = actguard(&[
        "campaign",
        "--function",
        "sigmoid",
        "--model",
        "bitflip",
        "--n",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n must be ≥ 1"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flag_and_bad_values_exit_2() {
    assert_eq!(
        actguard(&["campaign", "--frobnicate"]).status.code(),
        Some(2)
    );
    let o = actguard(&[
        "campaign",
        "--function",
        "softmax",
        "--model",
        "bitflip",
        "--n",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = actguard(&[
        "campaign",
        "--function",
        "tanh",
        "--model",
        "stuck1",
        "--n",
        "41",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n"));
    let o = actguard(&[
        "campaign",
        "--function",
        "tanh",
        "--model",
        "stuck1",
        "--n",
        "1",
        "--m",
        "65",
    ]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--m"));
    let o = actguard(&[
        "consistency",
        "--function",
        "expo",
        "--terms",
        "50:5",
        "--epsilons",
        "1e-14",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let o = actguard(&[
        "campaign",
        "--function",
        "expo",
        "--model",
        "skip",
        "--n",
        "1",
        "--runs",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn consistency_grid_is_complete() {
    let o = actguard(&[
        "consistency",
        "--function",
        "expo",
        "--terms",
        "5:50",
        "--epsilons",
        "1e-10,1e-12,1e-14,1e-16",
        "--runs",
        "200",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 46 * 4);
    let ratio = |terms: &str, eps: &str| -> f64 {
        rows.iter()
            .find(|r| r[5] == terms && r[6] == eps)
            .map(|r| r[12].parse().unwrap())
            .unwrap()
    };
    assert_eq!(ratio("30", "1e-14"), 1.0);
    assert!(ratio("30", "1e-16") <= ratio("30", "1e-14"));
    assert!(ratio("5", "1e-10") < 1.0);
}

#[test]
fn eval_examples() {
    let line = |args: &[&str]| stdout(&actguard(args)).lines().nth(1).unwrap().to_owned();
    let s = line(&[
        "eval",
        "--function",
        "sigmoid",
        "--x",
        "0",
        "--terms",
        "30",
        "--epsilon",
        "1e-14",
    ]);
    assert_eq!(s, "sigmoid,0e0,5e-1,1e0,0e0,1e-14,Pass");
    let r = line(&[
        "eval",
        "--function",
        "relu",
        "--x",
        "2",
        "--force-output",
        "0",
    ]);
    assert!(r.ends_with("FaultDetected"));
    let t = line(&[
        "eval",
        "--function",
        "tanh",
        "--x",
        "0",
        "--terms",
        "40",
        "--epsilon",
        "1e-15",
    ]);
    assert!(t.starts_with("tanh,0e0,0e0,") && t.ends_with("Pass"));
    let a = line(&[
        "eval",
        "--function",
        "tanh",
        "--x",
        "-1.5",
        "--attack",
        "negation-skip",
    ]);
    assert!(a.ends_with("FaultDetected"));
    let o = actguard(&[
        "eval",
        "--function",
        "sigmoid",
        "--x",
        "1",
        "--inject",
        "bitflip",
        "--n",
        "3",
        "--m",
        "8",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["verdict"] == "Pass" || v["verdict"] == "FaultDetected");
}

#[test]
fn json_and_csv_carry_the_same_values() {
    let base = [
        "campaign",
        "--function",
        "expo",
        "--model",
        "stuck0",
        "--type",
        "burst",
        "--n",
        "3",
        "--m",
        "5",
        "--runs",
        "150",
    ];
    let csv = stdout(&actguard(&base));
    let mut json_args = base.to_vec();
    json_args.extend(["--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&actguard(&json_args).stdout).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    for (k, cell) in header.iter().zip(row) {
        let j = &v[0][*k];
        match j {
            serde_json::Value::String(s) => assert_eq!(s, cell),
            serde_json::Value::Number(n) => {
                assert_eq!(n.as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{k}")
            }
            other => panic!("unexpected {other}"),
        }
    }
}

#[test]
fn fp32_spot_eval() {
    let o = actguard(&["fp32", "--op", "mul", "--a", "1.5", "--b", "2"]);
    assert_eq!(
        stdout(&o).lines().nth(1).unwrap(),
        "3e0,40400000,3e0,40400000,0"
    );
}
