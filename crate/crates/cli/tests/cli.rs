use std::process::{Command, Output};

fn serlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serlab"))
        .args(args)
        .output()
        .expect("spawn serlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with(char::is_alphabetic))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn qpsk_mc_curve_shape_and_reproducibility() {
    let args = [
        "ser",
        "--constellation",
        "qpsk",
        "--snr",
        "0.1:20:40:log",
        "--samples",
        "100000",
        "--seed",
        "7",
    ];
    let a = serlab(&args);
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert!(text.lines().next().unwrap().contains("seed=7"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.len() == 3));
    let b = serlab(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let args = [
        "ser",
        "--constellation",
        "bpsk",
        "--snr",
        "1:4:3:lin",
        "--method",
        "quadrature",
    ];
    let printed = stdout(&serlab(&args));
    let mut with_file = args.to_vec();
    with_file.extend(["-o", path.to_str().unwrap()]);
    assert_eq!(serlab(&with_file).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn quadrature_beyond_two_dimensions_is_a_usage_error() {
    let o = serlab(&[
        "ser",
        "--constellation",
        "cube:3",
        "--snr",
        "1:10:5",
        "--method",
        "quadrature",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n <= 2"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(
        serlab(&["ser", "--constellation", "nope", "--snr", "1:2:3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        serlab(&["ser", "--constellation", "bpsk", "--snr", "1:2:1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        serlab(&[
            "ser",
            "--constellation",
            "bpsk",
            "--snr",
            "1:2:3",
            "--samples",
            "10"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        serlab(&[
            "ser",
            "--constellation",
            "bpsk",
            "--snr",
            "1:2:3",
            "--noise",
            "1:2:3"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(serlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn json_constellation_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"n":1,"points":[[-1.0],[1.0]]}"#).unwrap();
    let file = serlab(&[
        "ser",
        "--constellation",
        path.to_str().unwrap(),
        "--snr",
        "1:4:3:lin",
        "--method",
        "quadrature",
    ]);
    assert_eq!(
        file.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&file.stderr)
    );
    let named = serlab(&[
        "ser",
        "--constellation",
        "bpsk",
        "--snr",
        "1:4:3:lin",
        "--method",
        "quadrature",
    ]);
    assert_eq!(data_rows(&stdout(&file)), data_rows(&stdout(&named)));
}

#[test]
fn bpsk_verify_passes() {
    let o = serlab(&["verify", "--constellation", "bpsk"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("[PASS]"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn sphere_first_order_rows_follow_c2_over_snr() {
    let o = serlab(&[
        "sphere",
        "--n",
        "2",
        "--radius-rule",
        "first-order",
        "--snr",
        "0.5:50:6",
        "--order",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let c2 = (-1.0f64).exp();
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    for r in rows {
        let want = -c2 / r[0];
        assert!((r[1] - want).abs() <= 1e-12 * want.abs(), "{r:?}");
    }
}

#[test]
fn jam_produces_two_levels() {
    let o = serlab(&[
        "jam",
        "--pe",
        "sphere:2:1",
        "--budget",
        "0.2",
        "--mode",
        "optimal",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("kind=tangent_optimal"), "{text}");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    let budget: f64 = rows.iter().map(|r| r[0] * r[1]).sum();
    assert!((budget - 0.2).abs() < 1e-9);
}

#[test]
fn allocate_satisfies_kkt() {
    let o = serlab(&["allocate", "--streams", "2,5,10,20", "--pe", "bpsk"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let kkt: f64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("kkt_residual="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(kkt < 1e-6);
    let total: f64 = data_rows(&text).iter().map(|r| r[2]).sum();
    assert!((total - 4.0).abs() < 1e-9);
}

#[test]
fn fade_from_saved_curve_tracks_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bpsk.csv");
    let saved = serlab(&[
        "ser",
        "--constellation",
        "bpsk",
        "--snr",
        "0.001:1000:200:log",
        "--method",
        "quadrature",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(saved.status.code(), Some(0));
    let from_curve = serlab(&[
        "fade",
        "--curve",
        path.to_str().unwrap(),
        "--fading",
        "rayleigh",
        "--mean-snr",
        "1:10:3",
    ]);
    assert_eq!(
        from_curve.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&from_curve.stderr)
    );
    let exact = serlab(&[
        "fade",
        "--pe",
        "bpsk",
        "--fading",
        "rayleigh",
        "--mean-snr",
        "1:10:3",
    ]);
    for (a, b) in data_rows(&stdout(&from_curve))
        .iter()
        .zip(data_rows(&stdout(&exact)))
    {
        assert!((a[1] - b[1]).abs() < 1e-3 * b[1], "{a:?} vs {b:?}");
    }
}
