use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stsvd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stsvd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(csv: &[u8]) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(csv);
    r.records().map(|x| x.unwrap()).collect()
}

fn header(csv: &[u8]) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv);
    r.headers().unwrap().iter().map(String::from).collect()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["spectrum", "nearest"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{cmd}-{run}.csv"));
            let o = stsvd(&[
                cmd, "--random", "80,6", "--s", "3n,5n", "--reps", "4", "--seed", "9", "--no-times", "--raw", "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            outputs.push((fs::read(&out).unwrap(), fs::read(out.with_extension("jsonl")).unwrap()));
        }
        assert_eq!(outputs[0], outputs[1], "{cmd} output differs between runs");
    }
}

#[test]
fn seed_changes_output() {
    let run = |seed: &str| stsvd(&["nearest", "--random", "60,5", "--s", "3n", "--reps", "2", "--seed", seed, "--no-times"]).stdout;
    assert_ne!(run("1"), run("2"));
}

#[test]
fn spectrum_columns_and_row_count() {
    let o = stsvd(&["spectrum", "--cauchy", "50", "--s", "30", "--reps", "3", "--no-times"]);
    assert!(o.status.success());
    let h = header(&o.stdout);
    for col in ["index", "sigma_full", "theta", "sigma_reference_method", "time_ms"] {
        assert!(h.iter().any(|c| c == col), "missing {col}");
    }
    let recs = rows(&o.stdout);
    assert_eq!(recs.len(), 40);
    let theta = h.iter().position(|c| c == "theta").unwrap();
    assert!(recs[..30].iter().all(|r| !r[theta].is_empty()));
    assert!(recs[30..].iter().all(|r| r[theta].is_empty()));
}

#[test]
fn zero_matrix_has_empty_theta_and_rank_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.mtx");
    write(&path, "%%MatrixMarket matrix coordinate real general\n20 4 0\n");
    let o = stsvd(&["spectrum", "--matrix", path.to_str().unwrap(), "--s", "8", "--reps", "2"]);
    assert!(o.status.success());
    let h = header(&o.stdout);
    let theta = h.iter().position(|c| c == "theta").unwrap();
    let rank = h.iter().position(|c| c == "rank").unwrap();
    for r in rows(&o.stdout) {
        assert_eq!(&r[theta], "");
        assert_eq!(r[rank].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = stsvd(&["spectrum", "--matrix", "/nonexistent.mtx", "--s", "8"]);
    assert_eq!(missing.status.code(), Some(2));

    let complex = dir.path().join("c.mtx");
    write(&complex, "%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 1.0 0.0\n");
    assert_eq!(stsvd(&["ortho", "--matrix", complex.to_str().unwrap(), "--s", "2"]).status.code(), Some(2));

    assert_eq!(stsvd(&["spectrum", "--cauchy", "10", "--s", "50"]).status.code(), Some(2));

    let big = dir.path().join("big.mtx");
    write(
        &big,
        "%%MatrixMarket matrix coordinate real general\n20 2 3\n1 1 1e300\n2 2 1e300\n3 1 1e300\n",
    );
    let o = stsvd(&["nearest", "--matrix", big.to_str().unwrap(), "--s", "8", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(3));

    let args = ["ortho", "--random", "64,6", "--sketch", "gaussian", "--s", "7", "--eps", "0.01", "--reps", "3"];
    assert_eq!(stsvd(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(stsvd(&strict).status.code(), Some(4));
    strict.extend(["--max-violations", "3"]);
    assert_eq!(stsvd(&strict).status.code(), Some(0));
}

#[test]
fn rank_deficient_nearest_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.mtx");
    write(&path, "%%MatrixMarket matrix coordinate real general\n20 4 0\n");
    let o = stsvd(&["nearest", "--matrix", path.to_str().unwrap(), "--s", "8", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.mtx");
    let o = stsvd(&["gen", "--sparse", "400,10,0.05,1e4", "--matrix-seed", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let a = stsvd::mmio::read_matrix_market(&path).unwrap();
    let b = stsvd::matgen::gen_sparse_conditioned(400, 10, 0.05, 1e4, 3).unwrap();
    assert_eq!(a.to_dense(), b.to_dense());

    let cpath = dir.path().join("c.mtx");
    assert!(stsvd(&["gen", "--cauchy", "2", "--out", cpath.to_str().unwrap()]).status.success());
    let c = stsvd::mmio::read_matrix_market(&cpath).unwrap().to_dense();
    assert_eq!(c[(0, 0)], -1.0 / 998.0);
}

#[test]
fn nearest_sandwich_passes_at_measured_distortion() {
    let o = stsvd(&[
        "nearest", "--random", "300,20", "--sketch", "gaussian", "--s", "5n", "--reps", "10", "--raw", "--strict",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&o.stdout);
    let pass = h.iter().position(|c| c == "sandwich_pass").unwrap();
    let recs = rows(&o.stdout);
    assert_eq!(recs.len(), 10);
    assert!(recs.iter().all(|r| &r[pass] == "true"));
}

#[test]
fn nearest_on_orthonormal_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.mtx");
    let q = orthonormal(100, 10);
    stsvd::mmio::write_matrix_market(&path, &q.into()).unwrap();
    let o = stsvd(&[
        "nearest", "--matrix", path.to_str().unwrap(), "--sketch", "srtt", "--s", "8n", "--reps", "5", "--raw",
    ]);
    assert!(o.status.success());
    let h = header(&o.stdout);
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for r in rows(&o.stdout) {
        let eps: f64 = r[col("epsilon")].parse().unwrap();
        let ap: f64 = r[col("dist_A_P_2")].parse().unwrap();
        let pt: f64 = r[col("dist_P_T_2")].parse().unwrap();
        assert!(eps < 1.0);
        assert!(ap <= eps / (1.0 - eps) + 1e-10);
        assert!((pt - ap).abs() <= 1e-10);
    }
}

fn orthonormal(m: usize, n: usize) -> stsvd::Dense {
    let a = stsvd::matgen::gen_gaussian(m, n, 5);
    stsvd::nearest::nearest_orthogonal(&a.into()).unwrap().p
}

#[test]
fn full_srtt_ortho_losses_vanish() {
    let o = stsvd(&["ortho", "--random", "64,6", "--sketch", "srtt", "--s", "64", "--reps", "3", "--strict"]);
    assert!(o.status.success());
    let h = header(&o.stdout);
    let recs = rows(&o.stdout);
    for name in ["fro_loss", "two_loss"] {
        let i = h.iter().position(|c| c == name).unwrap();
        assert!(recs[0][i].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn out_writes_mirror_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = stsvd(&["ortho", "--random", "100,5", "--s", "4n,6n", "--reps", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(rows(&fs::read(&out).unwrap()).len(), 2);
    let jsonl = fs::read_to_string(out.with_extension("jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2);
    for line in jsonl.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "ortho");
}

#[test]
fn desk_spectrum_stays_inside_sandwich() {
    let o = stsvd(&["spectrum", "--s", "30", "--reps", "50", "--strict", "--no-times"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn desk_ortho_has_no_violations_at_half() {
    let o = stsvd(&["ortho", "--s", "16n", "--reps", "10", "--strict"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = header(&o.stdout);
    let i = h.iter().position(|c| c == "two_loss").unwrap();
    assert!(rows(&o.stdout)[0][i].parse::<f64>().unwrap() <= 1.0);
}
