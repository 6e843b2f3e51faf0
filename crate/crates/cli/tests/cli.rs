use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::thread::sleep;
use std::time::{Duration, Instant};

use tempfile::TempDir;

fn sample(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sample").join(name)
}

fn bookrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bookrec")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bookrec(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Extracts, builds and trains on the sample data; returns (catalog, profile).
fn sample_profile(dir: &TempDir) -> (PathBuf, PathBuf) {
    let records = dir.path().join("records.jsonl");
    let catalog = dir.path().join("catalog.jsonl");
    let profile = dir.path().join("profile.json");
    ok(&["extract", "--rules", p(&sample("rules.conf")), "--input", p(&sample("pages.txt")), "--out", p(&records)]);
    ok(&["corpus", "build", "--records", p(&records), "--out", p(&catalog)]);
    ok(&["train", "--catalog", p(&catalog), "--ratings", p(&sample("ratings.jsonl")), "--out", p(&profile)]);
    (catalog, profile)
}

#[test]
fn extract_build_search() {
    let dir = TempDir::new().unwrap();
    let (catalog, _) = sample_profile(&dir);
    let records = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 15);
    let hits = ok(&["corpus", "search", "--catalog", p(&catalog), "clarke"]);
    assert_eq!(hits, "b04\tChildhood's End\nb05\tRendezvous with Rama\n");

    let all = dir.path().join("all.jsonl");
    ok(&["extract", "--rules", p(&sample("rules.conf")), "--input", p(&sample("pages.txt")), "--out", p(&all), "--keep-inadequate"]);
    assert_eq!(std::fs::read_to_string(all).unwrap().lines().count(), 16);
}

#[test]
fn recommend_tables() {
    let dir = TempDir::new().unwrap();
    let (catalog, profile) = sample_profile(&dir);
    let ratings = sample("ratings.jsonl");
    let base = ["recommend", "--profile", p(&profile), "--catalog", p(&catalog)];

    let ranked = ok(&[&base[..], &["--ratings", p(&ratings), "-n", "3", "--bottom", "2"]].concat());
    let lines: Vec<&str> = ranked.lines().collect();
    assert!(lines[0].contains("Rank") && lines[0].contains("Score") && lines[0].contains("Title"));
    assert_eq!(lines.len(), 9, "{ranked}");
    assert!(lines[1].trim_start().starts_with("1 "));
    assert_eq!(lines[5], "Lowest ranked:");
    assert!(lines[7].trim_start().starts_with("6 "), "{ranked}");
    assert!(lines[8].trim_start().starts_with("7 "), "{ranked}");
    for rated in ["Dune", "Foundation", "Pride and Prejudice"] {
        assert!(!ranked.contains(rated), "{rated} is rated and must not be listed");
    }

    let exp = ok(&[&base[..], &["--explain", "b13", "--rows", "4"]].concat());
    let lines: Vec<&str> = exp.lines().collect();
    assert_eq!(lines[0], "Ringworld recommended because:");
    let header: Vec<&str> = lines[1].split_whitespace().collect();
    assert_eq!(header, ["Slot", "Word", "Strength"]);
    assert_eq!(lines.len(), 6);

    let in_bits = ok(&[&base[..], &["--explain", "b13", "--rows", "1", "--log-base", "2"]].concat());
    let nat: f64 = exp.lines().nth(2).unwrap().split_whitespace().last().unwrap().parse().unwrap();
    let bits: f64 = in_bits.lines().nth(2).unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!((bits - nat / 2f64.ln()).abs() < 0.011, "{nat} nats vs {bits} bits");

    let feature = ok(&[&base[..], &["--ratings", p(&ratings), "--explain-feature", "subjects:science"]].concat());
    let lines: Vec<&str> = feature.lines().collect();
    assert!(lines[0].contains("SCIENCE"));
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["Title", "Rating", "Count"]);
    assert!(lines[2].starts_with("Dune"));

    assert!(!bookrec(&[&base[..], &["--explain", "nope"]].concat()).status.success());
    assert!(!bookrec(&[&base[..], &["--explain-feature", "subjects:science"]].concat()).status.success());
    assert!(!bookrec(&[&base[..], &["--log-base", "1"]].concat()).status.success());
}

#[test]
fn eval_writes_report_and_csv() {
    let dir = TempDir::new().unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--out-dir", p(&synth), "--books", "200", "--seed", "3"]);
    let report = dir.path().join("report.json");
    let csv = dir.path().join("curve.csv");
    let catalog = synth.join("catalog.jsonl");
    let ratings = synth.join("ratings.jsonl");
    let args = [
        "eval", "--catalog", p(&catalog), "--ratings", p(&ratings), "--seed", "5", "--points", "5,20,full", "--out",
        p(&report), "--csv", p(&csv),
    ];
    let table = ok(&args);
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["N", "Acc", "Rec", "Pr", "Pr3", "Pr10", "F", "Rt3", "Rt10", "r_s"]);

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["folds"], 10);
    assert_eq!(json["curve"].as_array().unwrap().len(), 3);
    assert_eq!(json["curve"][2]["N"], "full");
    assert!(json["curve"][0]["mean"]["Pr3"].is_number());
    let first = std::fs::read_to_string(&report).unwrap();
    ok(&args);
    assert_eq!(std::fs::read_to_string(&report).unwrap(), first, "fixed seed must reproduce the report");

    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().next().unwrap(), "N,Acc,Rec,Pr,Pr3,Pr10,F,Rt3,Rt10,r_s");
    assert_eq!(csv_text.lines().count(), 4);

    let ablated = ok(&[&args[..], &["--ablate", "related-authors,related-titles"]].concat());
    assert!(ablated.contains("without related-authors,related-titles"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["ablation"]["points"].as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("N,metric,full,ablated,t,significant\n"));

    assert!(!bookrec(&[&args[..], &["--points", "5,10000"]].concat()).status.success());
    assert!(!bookrec(&[&args[..], &["--slots", "colour"]].concat()).status.success());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http(port: u16, method: &str, path: &str, body: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    let request = format!(
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(request.as_bytes()).ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_answers_requests() {
    let dir = TempDir::new().unwrap();
    let (catalog, _) = sample_profile(&dir);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let child = Command::new(env!("CARGO_BIN_EXE_bookrec"))
        .args(["serve", "--catalog", p(&catalog), "--data-dir", p(&dir.path().join("state")), "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let _server = Server(child);

    let deadline = Instant::now() + Duration::from_secs(20);
    let status = loop {
        if let Some(resp) = http(port, "GET", "/status", "") {
            break resp;
        }
        assert!(Instant::now() < deadline, "server did not start");
        sleep(Duration::from_millis(50));
    };
    assert!(status.starts_with("HTTP/1.1 200"), "{status}");
    assert!(status.contains("\"generation\":0"));

    let rated = http(port, "POST", "/ratings", r#"{"id":"b01","rating":10}"#).unwrap();
    assert!(rated.contains("\"count\":1"), "{rated}");
    let trained = http(port, "POST", "/train", "").unwrap();
    assert!(trained.contains("\"generation\":1"), "{trained}");
    let recs = http(port, "GET", "/recommendations?n=2", "").unwrap();
    assert!(recs.starts_with("HTTP/1.1 200") && recs.contains("\"entries\""), "{recs}");
}
