use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two word blocks that never share a document.
fn workspace() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    let text: String = (0..300)
        .map(|i| {
            let p = ["alpha", "beta"][i % 2];
            let words: Vec<String> = (0..12).map(|j| format!("{p}{}", (i * 7 + j * 3) % 20)).collect();
            format!("{p} {}\n", words.join(" "))
        })
        .collect();
    fs::write(&corpus, text).unwrap();
    let cats = dir.path().join("categories.txt");
    fs::write(&cats, "alpha\nbeta\n").unwrap();
    (dir, corpus, cats)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn mine(corpus: &Path, cats: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "mine",
        "--corpus",
        p(corpus),
        "--categories",
        p(cats),
        "--out",
        p(out),
        "--dim",
        "16",
        "--iterations",
        "3",
    ];
    args.extend_from_slice(extra);
    cate(&args)
}

#[test]
fn help_exits_zero_everywhere() {
    for sub in [None, Some("mine"), Some("entail"), Some("present"), Some("coherence"), Some("macc"), Some("export")] {
        let o = match sub {
            Some(s) => cate(&[s, "--help"]),
            None => cate(&["--help"]),
        };
        assert!(o.status.success(), "{sub:?}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn mine_writes_every_manifest_output() {
    let (dir, corpus, cats) = workspace();
    let out = dir.path().join("run1");
    let o = mine(&corpus, &cats, &out, &["--seed", "7", "--deterministic"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let topics = fs::read_to_string(out.join("topics.tsv")).unwrap();
    let lines: Vec<&str> = topics.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("alpha\t"));
    assert!(lines[1].starts_with("beta\t"));
    assert_eq!(stdout(&o), topics);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for (_, path) in manifest["outputs"].as_object().unwrap() {
        assert!(Path::new(path.as_str().unwrap()).exists(), "{path}");
    }
    assert_eq!(manifest["mode"], "deterministic");
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["config"]["dim"], 16);
    let digest = manifest["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest["timing"]["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let (dir, corpus, cats) = workspace();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(mine(&corpus, &cats, out, &["--seed", "7", "--deterministic"]).status.success());
    }
    for f in ["topics.tsv", "details.tsv", "checkpoint.cate"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let (dir, corpus, cats) = workspace();
    let first = dir.path().join("first");
    assert!(mine(&corpus, &cats, &first, &["--seed", "4", "--lambda", "0.5"]).status.success());
    let second = dir.path().join("second");
    let manifest = first.join("manifest.json");
    let o = cate(&[
        "mine",
        "--corpus",
        p(&corpus),
        "--categories",
        p(&cats),
        "--out",
        p(&second),
        "--config",
        p(&manifest),
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(second.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["topic_weight"], 0.5);
    assert_eq!(m["config"]["dim"], 16);
}

#[test]
fn missing_category_exits_one_naming_it() {
    let (dir, corpus, _) = workspace();
    let cats = dir.path().join("bad.txt");
    fs::write(&cats, "alpha\ngamma\n").unwrap();
    let o = mine(&corpus, &cats, &dir.path().join("r"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("gamma"));
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_flags_exit_nonzero() {
    let (dir, corpus, cats) = workspace();
    let o = mine(&corpus, &cats, &dir.path().join("r"), &["--lr=-1"]);
    assert_eq!(o.status.code(), Some(1));
    let both = mine(&corpus, &cats, &dir.path().join("r"), &["--deterministic", "--threads", "2"]);
    assert!(!both.status.success());
}

#[test]
fn parallel_mode_is_recorded() {
    let (dir, corpus, cats) = workspace();
    let out = dir.path().join("par");
    let o = mine(&corpus, &cats, &out, &["--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["mode"], "parallel");
    assert_eq!(m["threads"], 2);
}

fn trained() -> (TempDir, PathBuf, PathBuf) {
    let (dir, corpus, cats) = workspace();
    let out = dir.path().join("run");
    assert!(mine(&corpus, &cats, &out, &["--seed", "1"]).status.success());
    (dir, corpus, out)
}

fn kappa_of(out: &Path) -> std::collections::HashMap<String, f64> {
    let exp = out.join("export");
    assert!(cate(&["export", "--checkpoint", p(&out.join("checkpoint.cate")), "--out", p(&exp)]).status.success());
    fs::read_to_string(exp.join("kappa.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (w, k) = l.split_once(' ').unwrap();
            (w.to_string(), k.parse().unwrap())
        })
        .collect()
}

#[test]
fn entail_matches_kappa_and_counts_oov() {
    let (dir, _, out) = trained();
    let kappa = kappa_of(&out);
    let pairs = [("alpha3", "alpha"), ("beta4", "beta"), ("alpha7", "alpha12"), ("unicorn", "alpha")];
    let text: String = pairs.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect();
    let file = dir.path().join("pairs.tsv");
    fs::write(&file, text).unwrap();
    let correct = pairs[..3].iter().filter(|(a, b)| kappa[*b] < kappa[*a]).count();

    let report = dir.path().join("entail.json");
    let o = cate(&[
        "entail",
        "--checkpoint",
        p(&out.join("checkpoint.cate")),
        "--pairs",
        p(&file),
        "--out",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("accuracy {:.4}", correct as f64 / 3.0)));
    assert!(stdout(&o).contains("coverage 0.7500"));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["entailment"]["skipped_oov"], 1);
    assert_eq!(r["coverage"], 0.75);
}

#[test]
fn entail_empty_file_fails() {
    let (dir, _, out) = trained();
    let file = dir.path().join("empty.tsv");
    fs::write(&file, "").unwrap();
    let o = cate(&["entail", "--checkpoint", p(&out.join("checkpoint.cate")), "--pairs", p(&file)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no pairs"));
}

#[test]
fn present_bands() {
    let (_dir, _, out) = trained();
    let ck = out.join("checkpoint.cate");
    let o = cate(&["present", "--checkpoint", p(&ck)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let sections: Vec<&str> = text.split("\n\n").collect();
    assert_eq!(sections.len(), 2);
    for s in &sections {
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].contains("(kappa_c = "));
        assert_eq!(lines.len(), 5);
        assert!(lines[4].trim_start().starts_with("kappa > "));
    }
    let two = cate(&["present", "--checkpoint", p(&ck), "--multipliers", "1,2", "--category", "beta"]);
    assert!(two.status.success());
    let lines: Vec<String> = stdout(&two).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("beta "));
    let bad = cate(&["present", "--checkpoint", p(&ck), "--category", "gamma"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("gamma"));
}

#[test]
fn present_band_cutoffs_follow_multipliers() {
    let (_dir, _, out) = trained();
    let kappa = kappa_of(&out);
    let o = cate(&["present", "--checkpoint", p(&out.join("checkpoint.cate")), "--category", "alpha"]);
    let text = stdout(&o);
    let kc = kappa["alpha"];
    for m in [1.25, 1.5, 1.75] {
        let shown = format!("{:.3}", ((kc * m) * 1000.0).round() / 1000.0);
        assert!(text.contains(&shown), "{shown} missing from\n{text}");
    }
}

#[test]
fn coherence_and_macc_print_four_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.txt");
    fs::write(&corpus, "a b c\na b\na c\nb d\n").unwrap();
    let topics = dir.path().join("t.tsv");
    fs::write(&topics, "x\ta,b,c\ny\tb,d\n").unwrap();
    let o = cate(&["coherence", "--topics", p(&topics), "--corpus", p(&corpus)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ab = (0.5f64 / (0.75 * 0.75)).ln() / -(0.5f64).ln();
    let ac = (0.5f64 / (0.75 * 0.5)).ln() / -(0.5f64).ln();
    let bc = (0.25f64 / (0.75 * 0.5)).ln() / -(0.25f64).ln();
    let bd = (0.25f64 / (0.75 * 0.25)).ln() / -(0.25f64).ln();
    assert_eq!(stdout(&o).trim(), format!("{:.4}", ((ab + ac + bc) / 3.0 + bd) / 2.0));

    let perfect = dir.path().join("p.tsv");
    fs::write(&perfect, "x\ta,b\n").unwrap();
    let pc = dir.path().join("pc.txt");
    fs::write(&pc, "a b\na b z\nz\n").unwrap();
    let report = dir.path().join("tc.json");
    let o = cate(&["coherence", "--topics", p(&perfect), "--corpus", p(&pc), "--out", p(&report)]);
    assert_eq!(stdout(&o).trim(), "1.0000");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["tc"], 1.0);

    let labels = dir.path().join("l.tsv");
    fs::write(&labels, "x\ta\t1\nx\tb\t1\nx\tc\t1\ny\tb\t1\ny\td\t1\n").unwrap();
    let o = cate(&["macc", "--topics", p(&topics), "--labels", p(&labels)]);
    assert_eq!(stdout(&o).trim(), "1.0000");

    let gaps = dir.path().join("g.tsv");
    fs::write(&gaps, "x\ta\t1\n").unwrap();
    let o = cate(&["macc", "--topics", p(&topics), "--labels", p(&gaps)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("x/b"));

    let missing = dir.path().join("m.tsv");
    fs::write(&missing, "x\ta,zebra\n").unwrap();
    let o = cate(&["coherence", "--topics", p(&missing), "--corpus", p(&corpus)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("zebra"));
}

#[test]
fn export_layout() {
    let (_dir, _, out) = trained();
    let kappa = kappa_of(&out);
    let exp = out.join("export");
    let words = fs::read_to_string(exp.join("words.vec")).unwrap();
    let header: Vec<usize> = words.lines().next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
    assert_eq!(header[0], kappa.len());
    assert_eq!(header[1], 16);
    assert!(words.lines().skip(1).all(|l| l.split(' ').count() == 17));
    let cats = fs::read_to_string(exp.join("categories.vec")).unwrap();
    assert!(cats.starts_with("2 16\nalpha "));
}

#[test]
fn unreadable_inputs_exit_one() {
    let o = cate(&["macc", "--topics", "/nonexistent/t.tsv", "--labels", "/nonexistent/l.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cate(&["export", "--checkpoint", "/nonexistent/ck", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(1));
}
