use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use websift::io::{write_edge_list, write_update_log};
use websift::synth::{planted_event_scenario, PlantedEventConfig, PlantedScenario};

fn websift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_websift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines()
        .map(|l| serde_json::from_str(l).expect("valid JSON line"))
        .collect()
}

fn body(out: &Output) -> Vec<Value> {
    records(out).into_iter().skip(1).collect()
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

struct DetectFixture {
    _dir: TempDir,
    updates: PathBuf,
    graph: PathBuf,
    homes: PathBuf,
    scenario: PlantedScenario,
}

fn detect_fixture(seed: u64) -> DetectFixture {
    let dir = TempDir::new().unwrap();
    let scenario = planted_event_scenario(&PlantedEventConfig::default(), seed);
    let updates = write(
        dir.path(),
        "updates.tsv",
        &write_update_log(&scenario.records),
    );
    let graph = write(
        dir.path(),
        "graph.tsv",
        &write_edge_list(&scenario.as_edges),
    );
    let homes: String = scenario
        .vp_home
        .iter()
        .map(|(vp, home)| format!("{vp}\t{home}\n"))
        .collect();
    let homes = write(dir.path(), "homes.tsv", &homes);
    DetectFixture {
        _dir: dir,
        updates,
        graph,
        homes,
        scenario,
    }
}

fn detect_args<'a>(f: &'a DetectFixture, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "detect",
        "--updates",
        s(&f.updates),
        "--graph",
        s(&f.graph),
        "--vp-home",
        s(&f.homes),
        "--dt",
        "300",
        "--bins",
        "288",
        "--start",
        "1165968000",
        "--rank",
        "2",
    ];
    args.extend_from_slice(extra);
    args
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn detect_recovers_planted_event_and_cut_vertex() {
    let f = detect_fixture(11);
    let out = websift(&detect_args(&f, &["--seed", "3"]));
    let recs = body(&out);
    let decomposition = &recs[0];
    assert_eq!(decomposition["record"], "decomposition");
    assert_eq!(decomposition["converged"], true);
    let event = &recs[1];
    assert_eq!(event["record"], "event");
    assert_eq!(recs.len(), 2);

    let as_set = strings(&event["as_set"]);
    let vp_set = strings(&event["vp_set"]);
    let bins: BTreeSet<usize> = event["time_bins"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_u64().unwrap() as usize)
        .collect();
    assert!(
        jaccard(&as_set, &f.scenario.planted_as) >= 0.9,
        "{as_set:?}"
    );
    assert!(
        jaccard(&vp_set, &f.scenario.planted_vps) >= 0.9,
        "{vp_set:?}"
    );
    assert!(jaccard(&bins, &f.scenario.planted_bins) >= 0.9, "{bins:?}");

    let candidates = event["candidates"].as_array().unwrap();
    assert_eq!(candidates[0]["as"], f.scenario.cut_vertex.as_str());
    assert!(candidates[0]["score"].as_f64().unwrap() > candidates[1]["score"].as_f64().unwrap());

    // a contiguous block of bins comes back as one wall-clock range
    let ranges = event["time_ranges"].as_array().unwrap();
    assert_eq!(ranges.len(), 1);
    let first = *f.scenario.planted_bins.first().unwrap() as f64;
    assert_eq!(
        ranges[0]["start_epoch"].as_f64().unwrap(),
        1_165_968_000.0 + 300.0 * first
    );
    assert!(ranges[0]["start_utc"]
        .as_str()
        .unwrap()
        .starts_with("2006-12-13T"));
}

#[test]
fn detect_is_byte_identical_across_runs() {
    let f = detect_fixture(5);
    let a = websift(&detect_args(&f, &["--seed", "9"]));
    let b = websift(&detect_args(&f, &["--seed", "9"]));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn detect_requires_a_seed() {
    let f = detect_fixture(5);
    let out = websift(&detect_args(&f, &[]));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn detect_rejects_empty_log() {
    let f = detect_fixture(5);
    std::fs::write(&f.updates, "# nothing here\n").unwrap();
    let out = websift(&detect_args(&f, &["--seed", "1"]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("updates.tsv") && err.contains("empty"),
        "{err}"
    );
}

#[test]
fn detect_rejects_invalid_parameters_before_reading_data() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.tsv");
    let out = websift(&[
        "detect",
        "--updates",
        s(&missing),
        "--graph",
        s(&missing),
        "--vp-home",
        s(&missing),
        "--seed",
        "1",
        "--rank",
        "2",
        "--theta-as",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta_as"));
}

#[test]
fn detect_reports_unconverged_als_with_numerical_exit() {
    let f = detect_fixture(5);
    let out = websift(&detect_args(&f, &["--seed", "1", "--max-sweeps", "1"]));
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    let second: Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(second["converged"], false);
}

#[test]
fn detect_reads_config_file_and_flags_win() {
    let f = detect_fixture(5);
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "seed = 4\nrank = 3\ncomponents = 2\n",
    );
    // detect_args passes --rank 2, which overrides the file
    let args = detect_args(&f, &["--config", s(&cfg)]);
    let recs = records(&websift(&args));
    let config = &recs[0]["config"];
    assert_eq!(config["seed"], 4);
    assert_eq!(config["rank"], 2);
    assert_eq!(config["components"], 2);
    assert_eq!(recs.iter().filter(|r| r["record"] == "event").count(), 2);

    let bad = write(dir.path(), "bad.cfg", "sead = 4\n");
    let out = websift(&detect_args(&f, &["--config", s(&bad), "--seed", "1"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn detect_writes_tensor_on_request() {
    let f = detect_fixture(5);
    let dir = TempDir::new().unwrap();
    let tensor_path = dir.path().join("x.tensor");
    let out = websift(&detect_args(
        &f,
        &["--seed", "1", "--tensor-out", s(&tensor_path)],
    ));
    assert!(out.status.success());
    let x =
        websift::io::parse_tensor("x", &std::fs::read_to_string(&tensor_path).unwrap()).unwrap();
    assert_eq!(x.sum(), f.scenario.records.len() as f64);
}

fn discover_files(seeds: &str, candidates: &str) -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "seeds.tsv", seeds);
    let b = write(dir.path(), "cands.tsv", candidates);
    (dir, a, b)
}

#[test]
fn discover_ranks_copy_of_seed_first() {
    let (_d, seeds, cands) = discover_files(
        "s1\tthe protest in the square\ns2\tmarket prices rise\n",
        "c1\tweather is mild today\nc2\tthe protest in the square\nc3\tprotest prices\n",
    );
    let recs = body(&websift(&[
        "discover",
        "--seeds",
        s(&seeds),
        "--candidates",
        s(&cands),
        "--threshold",
        "0.1",
    ]));
    assert_eq!(recs[0]["id"], "c2");
    assert!((recs[0]["score"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(recs.iter().all(|r| r["id"] != "c1"));
}

#[test]
fn discover_vacuous_threshold_gives_empty_body() {
    let (_d, seeds, cands) = discover_files("s1\ta b c\n", "c1\ta b c\nc2\tb\n");
    let out = websift(&[
        "discover",
        "--seeds",
        s(&seeds),
        "--candidates",
        s(&cands),
        "--threshold",
        "1.01",
    ]);
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["record"], "header");
}

#[test]
fn discover_three_candidates_match_hand_cosines() {
    // vocabulary {a, b, c}; seed = (2, 1, 0)
    // c1 = (1, 0, 0): 2 / sqrt(5)            ~ 0.894
    // c2 = (0, 1, 1): 1 / (sqrt(5) sqrt(2))  ~ 0.316
    // c3 = (1, 1, 0): 3 / (sqrt(5) sqrt(2))  ~ 0.949
    let (_d, seeds, cands) = discover_files("s\ta a b\n", "c1\ta\nc2\tb c\nc3\ta b\n");
    let recs = body(&websift(&[
        "discover",
        "--seeds",
        s(&seeds),
        "--candidates",
        s(&cands),
        "--threshold",
        "0",
    ]));
    let expect = [
        ("c3", 3.0 / (5f64.sqrt() * 2f64.sqrt())),
        ("c1", 2.0 / 5f64.sqrt()),
        ("c2", 1.0 / (5f64.sqrt() * 2f64.sqrt())),
    ];
    assert_eq!(recs.len(), 3);
    for (rec, (id, score)) in recs.iter().zip(expect) {
        assert_eq!(rec["id"], id);
        assert!((rec["score"].as_f64().unwrap() - score).abs() < 1e-12);
    }
}

/// Dense Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

fn sentiment_files(docs: &str, lexicon: &str) -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let d = write(dir.path(), "docs.tsv", docs);
    let l = write(dir.path(), "lex.tsv", lexicon);
    (dir, d, l)
}

fn by_kind<'a>(recs: &'a [Value], kind: &str) -> Vec<&'a Value> {
    recs.iter().filter(|r| r["record"] == kind).collect()
}

#[test]
fn sentiment_toy_matches_dense_solve() {
    // vocabulary (bad, fine, good); doc 0 = good fine (+1), doc 1 = bad fine bad
    let (_d, docs, lex) = sentiment_files(
        "d0\t+1\t-\tgood fine\nd1\t-\t-\tbad fine bad\n",
        "bad\t-1\n",
    );
    let recs = body(&websift(&[
        "sentiment",
        "--mode",
        "semi",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--beta1",
        "2",
        "--beta2",
        "3",
        "--cg-tol",
        "1e-14",
    ]));
    let x = [[0.0, 1.0, 1.0], [2.0, 1.0, 0.0]];
    let eps = 1e-6;
    let mut m = vec![vec![0.0; 5]; 5];
    for i in 0..2 {
        for j in 0..3 {
            m[i][2 + j] -= x[i][j];
            m[2 + j][i] -= x[i][j];
            m[i][i] += x[i][j];
            m[2 + j][2 + j] += x[i][j];
        }
    }
    let penalty = [2.0, 0.0, 3.0, 0.0, 0.0];
    let target = [1.0, 0.0, -1.0, 0.0, 0.0];
    for p in 0..5 {
        m[p][p] += penalty[p] + eps;
    }
    let rhs: Vec<f64> = (0..5).map(|p| penalty[p] * target[p]).collect();
    let expect = dense_solve(m, rhs);

    let docs_out = by_kind(&recs, "document");
    for (rec, want) in docs_out.iter().zip(&expect[..2]) {
        assert!((rec["d_est"].as_f64().unwrap() - want).abs() < 1e-8);
    }
    let words = by_kind(&recs, "word");
    let names: Vec<&str> = words.iter().map(|w| w["word"].as_str().unwrap()).collect();
    assert_eq!(names, ["bad", "fine", "good"]);
    for (rec, want) in words.iter().zip(&expect[2..]) {
        assert!((rec["weight"].as_f64().unwrap() - want).abs() < 1e-8);
    }
    assert_eq!(docs_out[0]["label"], 1);
    assert_eq!(docs_out[1]["label"], -1);
}

#[test]
fn sentiment_large_beta_reproduces_labels() {
    let docs = "a\t+1\t-\tsunny warm pleasant day\n\
                b\t-1\t-\tcold rain grey day\n\
                c\t-1\t-\tgrey cold morning\n\
                d\t+1\t-\twarm morning sun\n";
    let (_d, docs, lex) = sentiment_files(docs, "");
    let recs = body(&websift(&[
        "sentiment",
        "--mode",
        "semi",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--beta1",
        "1e8",
        "--cg-tol",
        "1e-12",
    ]));
    for rec in by_kind(&recs, "document") {
        assert_eq!(
            rec["label"].as_f64().unwrap(),
            rec["input_label"].as_f64().unwrap()
        );
    }
}

#[test]
fn transfer_without_source_block_equals_semi() {
    let docs = "a\t+1\ttarget\tgood solid build\n\
                b\t-\ttarget\tpoor build quality\n\
                c\t-\t-\tsolid quality item\n";
    let (_d, docs, lex) = sentiment_files(docs, "poor\t-1\ngood\t+1\n");
    let semi = websift(&[
        "sentiment",
        "--mode",
        "semi",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--beta1",
        "4",
        "--beta2",
        "2",
    ]);
    let transfer = websift(&[
        "sentiment",
        "--mode",
        "transfer",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--beta1",
        "7",
        "--beta2",
        "4",
        "--beta3",
        "2",
    ]);
    assert_eq!(body(&semi), body(&transfer));
}

#[test]
fn sentiment_exports_weights_for_classify_mode() {
    let docs = "a\t+1\tsource\tgreat plot great cast\n\
                b\t-1\tsource\tdull plot\n\
                c\t-\ttarget\tgreat battery\n\
                d\t-\ttarget\tdull battery screen\n";
    let (dir, docs, lex) = sentiment_files(docs, "great\t+1\ndull\t-1\n");
    let weights = dir.path().join("weights.tsv");
    let fit = body(&websift(&[
        "sentiment",
        "--mode",
        "transfer",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--weights-out",
        s(&weights),
    ]));
    let solver = &fit[0];
    assert_eq!(solver["record"], "solver");
    assert!(solver["iterations"].as_u64().unwrap() > 0);

    let recs = body(&websift(&[
        "sentiment",
        "--mode",
        "classify",
        "--docs",
        s(&docs),
        "--weights",
        s(&weights),
    ]));
    let labels: Vec<i64> = recs.iter().map(|r| r["label"].as_i64().unwrap()).collect();
    assert_eq!(labels, [1, -1, 1, -1]);
}

#[test]
fn sentiment_cg_cap_is_a_numerical_failure() {
    let (_d, docs, lex) = sentiment_files("a\t+1\t-\tx y z\nb\t-\t-\ty z w\n", "w\t-1\n");
    let out = websift(&[
        "sentiment",
        "--mode",
        "semi",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
        "--cg-max-iter",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sentiment_without_any_labels_is_a_data_error() {
    let (_d, docs, lex) = sentiment_files("a\tx y\nb\ty z\n", "");
    let out = websift(&[
        "sentiment",
        "--mode",
        "semi",
        "--docs",
        s(&docs),
        "--lexicon",
        s(&lex),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn framing_files(train: &str, test: &str) -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "train.tsv", train);
    let b = write(dir.path(), "test.tsv", test);
    (dir, a, b)
}

const TRAIN: &str = "t1\tframing\t-\tact now before it is too late\n\
                     t2\tframing\t-\tthey want to destroy our way of life\n\
                     t3\tnon-framing\t-\tthe council met on tuesday\n\
                     t4\tnon-framing\t-\trainfall was above average this month\n";

#[test]
fn framing_duplicate_of_training_doc() {
    let (_d, train, test) = framing_files(
        TRAIN,
        "q1\tthey want to destroy our way of life\nq2\tthe council met\n",
    );
    let recs = body(&websift(&[
        "classify-framing",
        "--train",
        s(&train),
        "--test",
        s(&test),
    ]));
    assert_eq!(recs[0]["id"], "q1");
    assert_eq!(recs[0]["label"], "framing");
    assert!(recs[0]["log_odds"].as_f64().unwrap() > 0.0);
    assert_eq!(recs[1]["label"], "non-framing");
}

#[test]
fn framing_empty_test_set() {
    let (_d, train, test) = framing_files(TRAIN, "# no documents\n");
    let recs = records(&websift(&[
        "classify-framing",
        "--train",
        s(&train),
        "--test",
        s(&test),
    ]));
    assert_eq!(recs.len(), 1);
}

#[test]
fn framing_single_class_training_fails() {
    let (_d, train, test) = framing_files("t1\tframing\t-\ta b\nt2\t+1\t-\tb c\n", "q\ta\n");
    let out = websift(&["classify-framing", "--train", s(&train), "--test", s(&test)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ideology_majority_vote() {
    let dir = TempDir::new().unwrap();
    let graph = write(
        dir.path(),
        "links.tsv",
        "u\ta1\nu\ta2\nu\tt\nv\ta1\nv\tt\nw\tb1\nw\tt\nx\ta1\nx\tb1\nx\tt\n",
    );
    let a = write(dir.path(), "a.txt", "a1\na2\n");
    let b = write(dir.path(), "b.txt", "b1\n");
    let recs = body(&websift(&[
        "ideology",
        "--graph",
        s(&graph),
        "--set-a",
        s(&a),
        "--set-b",
        s(&b),
        "--target",
        "t",
    ]));
    assert_eq!(recs[0]["label"], "A");
    assert_eq!(recs[0]["votes_a"], 2);
    assert_eq!(recs[0]["votes_b"], 1);
    assert_eq!(recs[0]["abstained"], 1);
}

#[test]
fn report_goes_to_out_file() {
    let (dir, seeds, cands) = discover_files("s\ta b\n", "c\ta\n");
    let out_path = dir.path().join("report.jsonl");
    let out = websift(&[
        "discover",
        "--seeds",
        s(&seeds),
        "--candidates",
        s(&cands),
        "--out",
        s(&out_path),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&out_path)
        .unwrap()
        .starts_with("{\"command\":\"discover\""));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = websift(&["discover", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

/// Every record of every subcommand parses and carries the fields its kind
/// promises.
#[test]
fn every_report_matches_schema() {
    let f = detect_fixture(2);
    let mut reports = vec![("detect", websift(&detect_args(&f, &["--seed", "1"])))];
    let (_d1, seeds, cands) = discover_files("s\ta b\n", "c\ta\nd\tb c\n");
    reports.push((
        "discover",
        websift(&[
            "discover",
            "--seeds",
            s(&seeds),
            "--candidates",
            s(&cands),
            "--threshold",
            "0",
        ]),
    ));
    let (_d2, docs, lex) = sentiment_files("a\t+1\t-\tx y\nb\t-\t-\ty z\n", "z\t-1\n");
    reports.push((
        "sentiment",
        websift(&[
            "sentiment",
            "--mode",
            "semi",
            "--docs",
            s(&docs),
            "--lexicon",
            s(&lex),
        ]),
    ));
    let (_d3, train, test) = framing_files(TRAIN, "q\tact now\n");
    reports.push((
        "classify-framing",
        websift(&["classify-framing", "--train", s(&train), "--test", s(&test)]),
    ));

    let required: &[(&str, &[&str])] = &[
        ("header", &["command", "version", "config"]),
        (
            "decomposition",
            &[
                "shape",
                "nonzeros",
                "sweeps",
                "converged",
                "relative_error",
                "weights",
            ],
        ),
        (
            "event",
            &[
                "rank",
                "component",
                "weight",
                "as_set",
                "time_bins",
                "time_ranges",
                "vp_set",
                "candidates",
            ],
        ),
        ("candidate", &["rank", "id", "score"]),
        ("solver", &["iterations", "residual", "dim"]),
        ("document", &["id", "label"]),
        ("word", &["word", "weight"]),
    ];
    for (command, out) in &reports {
        let recs = records(out);
        assert_eq!(recs[0]["record"], "header");
        assert_eq!(recs[0]["command"], *command);
        assert_eq!(recs[0]["version"], env!("CARGO_PKG_VERSION"));
        assert!(recs[0]["config"].is_object());
        assert!(recs.len() > 1, "{command} produced no records");
        for rec in &recs {
            let kind = rec["record"].as_str().expect("record kind");
            let (_, fields) = required
                .iter()
                .find(|(k, _)| *k == kind)
                .unwrap_or_else(|| panic!("unexpected record kind {kind}"));
            for field in *fields {
                assert!(rec.get(field).is_some(), "{kind} lacks {field}");
            }
        }
    }
}
