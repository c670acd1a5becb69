use std::process::Command;

fn stfem(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stfem")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn mesh_reports_counts() {
    let (code, out) = stfem(&["mesh", "--preset", "heat1d", "--levels", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("vertices    25"));
    assert!(out.contains("delaunay    true"));
}

#[test]
fn converge_prints_the_table() {
    let (code, out) = stfem(&["converge", "--preset", "heat1d", "--scheme", "sd", "--levels", "1:3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "level,h,dofs,l2_error,h1_error,order_l2,order_h1,iters,seconds");
    assert_eq!(lines.len(), 4);
}

#[test]
fn config_errors_exit_with_three() {
    assert_eq!(stfem(&["solve", "--preset", "nope"]).0, 3);
    assert_eq!(stfem(&["solve", "--levels", "9"]).0, 3);
    assert_eq!(stfem(&["solve", "--kappa", "-1"]).0, 3);
    assert_eq!(stfem(&["frobnicate"]).0, 3);
    assert_eq!(stfem(&["solve", "--config", "/nonexistent/stfem.toml"]).0, 1);
}

#[test]
fn out_of_range_exponent_is_a_solver_failure() {
    // Order-2 fitting at ε = 1e-5 overflows the exponent range on coarse tetrahedra.
    let (code, _) = stfem(&["solve", "--preset", "heat1d", "--scheme", "eafe_high", "--order", "2", "--levels", "1"]);
    assert_eq!(code, 2);
}

#[test]
fn rescale_demo_matches() {
    let (code, out) = stfem(&["rescale-demo", "--preset", "heat1d", "--kappa", "2", "--levels", "3"]);
    assert_eq!(code, 0);
    let diff: f64 = out
        .lines()
        .find(|l| l.starts_with("max |u - u_kappa|"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff <= 1e-10);
}
