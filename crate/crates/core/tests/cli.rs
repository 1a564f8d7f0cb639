use std::process::Command;

fn percspeed(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_percspeed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &std::process::Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn speed_row() {
    let out = percspeed(&["speed", "--law", "pmf:0,0,1", "--p", "0.75"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "p,rho,lambda,backbone_speed,cluster_speed,mean_delay,condition_ok\n\
         0.75,0.111111111111,0.333333333333,0.166666666667,0.133333333333,0.25,true\n"
    );
}

#[test]
fn rho_row() {
    let out = percspeed(&["rho", "--law", "pmf:0,0,1", "--p", "0.75"]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("0.75,0.111111111111,"));
}

#[test]
fn check_condition_row() {
    let out = percspeed(&["check-condition", "--law", "geometric:0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("law,condition_ok,worst_violation"));
    assert!(text.lines().nth(1).unwrap().starts_with("geometric:0.5,true,"));
}

#[test]
fn simulate_is_byte_identical() {
    let args = [
        "simulate", "--law", "poisson:2", "--p", "0.8", "--horizon", "5000", "--replicas", "16", "--seed", "7",
    ];
    let a = percspeed(&args);
    let b = percspeed(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let header = stdout(&a).lines().next().unwrap().to_string();
    assert_eq!(header, "law,p,horizon,replicas,seed,speed_hat,std_error,analytic_speed,z_score");
}

#[test]
fn exit_codes() {
    assert_eq!(percspeed(&["rho", "--law", "pmf:0,0,1", "--p", "0.3"]).status.code(), Some(1));
    assert_eq!(percspeed(&["rho", "--law", "bogus", "--p", "0.8"]).status.code(), Some(1));
    assert_eq!(percspeed(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        percspeed(&["rho", "--law", "pmf:0,0,1", "--p", "0.500000001", "--tol", "1e-15"]).status.code(),
        Some(2)
    );
    let out = percspeed(&["rho", "--law", "pmf:0,0,1", "--p", "0.3"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));
}

#[test]
fn pipes_with_simulation() {
    let out = percspeed(&[
        "pipes", "--p", "0.75", "--simulate", "--horizon", "2000", "--replicas", "8", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["p"], 0.75);
    assert!(v["speed_hat"].as_f64().unwrap() > 0.0);
    assert!(v.get("z_score").is_some());
}
