mod common;

use arcvault::{emit_lockfile, Error, SaveOptions};
use arcvault_core::session::{ComponentVersion, SessionManifest, LOCKFILE_HEADER};
use arcvault_core::{compute_hash, ArtifactEnvelope, Column, DatasetPayload, Md5Hash};
use common::*;

fn filtered(rows: usize) -> ArtifactEnvelope {
    let d = iris(rows);
    ArtifactEnvelope::dataset("filtered", DatasetPayload::new(d.columns).unwrap())
}

struct Chain {
    hashes: [Md5Hash; 4],
    calls: [&'static str; 4],
}

fn four_step_chain(repo: &mut arcvault::Repository, clock: &TestClock) -> Chain {
    let calls = ["data(iris)", "filter(Sepal.Length < 6)", "lm(Petal.Length ~ Sepal.Length)", "summary()"];
    let opts = SaveOptions::default();
    let a = repo.record_step(None, calls[0], &iris_env(150), &opts).unwrap();
    clock.advance(1);
    let b = repo.record_step(Some(a), calls[1], &filtered(80), &opts).unwrap();
    clock.advance(1);
    let c = repo.record_step(Some(b), calls[2], &lm_env("fit"), &opts).unwrap();
    clock.advance(1);
    let summary = ArtifactEnvelope::generic("summary", b"Residuals: ...".to_vec());
    let d = repo.record_step(Some(c), calls[3], &summary, &opts).unwrap();
    Chain { hashes: [a, b, c, d], calls }
}

#[test]
fn chain_is_reported_root_first() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let chain = four_step_chain(&mut repo, &clock);
    let pedigree = repo.history(&chain.hashes[3]).unwrap();
    let got: Vec<(&str, Md5Hash)> = pedigree.steps.iter().map(|s| (s.call.as_str(), s.md5hash)).collect();
    let want: Vec<(&str, Md5Hash)> = chain.calls.iter().copied().zip(chain.hashes).collect();
    assert_eq!(got, want);
    assert_eq!(pedigree.last_hash(), Some(chain.hashes[3]));

    let mid = repo.history(&chain.hashes[1]).unwrap();
    assert_eq!(mid.len(), 2);
    assert_eq!(mid.steps[0].md5hash, chain.hashes[0]);
}

#[test]
fn branches_share_their_root() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let opts = SaveOptions::bare();
    let root = repo.record_step(None, "data(iris)", &iris_env(20), &opts).unwrap();
    clock.advance(1);
    let left = repo.record_step(Some(root), "head(10)", &filtered(10), &opts).unwrap();
    clock.advance(1);
    let right = repo.record_step(Some(root), "lm(y ~ x)", &lm_env("fit"), &opts).unwrap();
    for (leaf, call) in [(left, "head(10)"), (right, "lm(y ~ x)")] {
        let p = repo.history(&leaf).unwrap();
        let got: Vec<(&str, Md5Hash)> = p.steps.iter().map(|s| (s.call.as_str(), s.md5hash)).collect();
        assert_eq!(got, [("data(iris)", root), (call, leaf)]);
    }
}

#[test]
fn artifacts_without_steps_are_their_own_root() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let h = repo.save(&iris_env(3), &SaveOptions::bare()).unwrap().md5hash;
    let p = repo.history(&h).unwrap();
    assert_eq!(p.steps.len(), 1);
    assert_eq!(p.steps[0].call, "iris");
    assert!(matches!(repo.history(&compute_hash(b"none")), Err(Error::NotFound(_))));
}

#[test]
fn dependent_data_is_not_a_pipeline_input() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let plot = ArtifactEnvelope::plot("p", plot_spec("x", "y", "point")).with_data(iris(5)).unwrap();
    let out = repo.save(&plot, &SaveOptions::default()).unwrap();
    let p = repo.history(&out.data_hash.unwrap()).unwrap();
    assert_eq!(p.steps.len(), 1);
}

#[test]
fn unknown_input_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let ghost = compute_hash(b"ghost");
    let err = repo.record_step(Some(ghost), "f()", &iris_env(2), &SaveOptions::bare());
    assert!(matches!(err, Err(Error::UnknownInput(h)) if h == ghost));
    assert!(repo.artifacts().unwrap().is_empty());
}

#[test]
fn injected_cycle_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let chain = four_step_chain(&mut repo, &clock);
    drop(repo);
    let conn = rusqlite::Connection::open(tmp.path().join("backpack.db")).unwrap();
    for tag in [format!("relationWith:{}", chain.hashes[3]), "call:loop()".to_string()] {
        conn.execute(
            "INSERT INTO tag (artifact, tag, createdDate) VALUES (?1, ?2, '2016-02-10 00:00:00')",
            rusqlite::params![chain.hashes[0].to_hex(), tag],
        )
        .unwrap();
    }
    drop(conn);
    let repo = open_repo(tmp.path(), &clock);
    assert!(matches!(repo.history(&chain.hashes[3]), Err(Error::CyclicProvenance(_))));
}

#[test]
fn session_manifest_lookup() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let with = repo.save(&iris_env(3), &SaveOptions::default()).unwrap().md5hash;
    let without = repo.save(&lm_env("m"), &SaveOptions::bare()).unwrap().md5hash;
    let manifest = repo.session_of(&with).unwrap();
    assert_eq!(manifest.tool_name, "arcvault");
    assert_eq!(manifest.tool_version, "0.1.0");
    assert_eq!(manifest.platform, "x86_64-linux");
    assert_eq!(manifest.components["ggplot2"].version, "2.0.0");
    assert!(matches!(repo.session_of(&without), Err(Error::NoSessionRecorded(h)) if h == without));
    assert!(matches!(repo.session_of(&compute_hash(b"?")), Err(Error::NotFound(_))));
}

fn parse_lockfile(text: &str) -> Vec<(String, String, String)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LOCKFILE_HEADER));
    lines
        .map(|l| {
            let (spec, source) = match l.split_once("  # ") {
                Some((a, b)) => (a, b.to_string()),
                None => (l, String::new()),
            };
            let (name, version) = spec.split_once("==").unwrap();
            (name.to_string(), version.to_string(), source)
        })
        .collect()
}

#[test]
fn lockfile_lists_every_component() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let h = repo.save(&iris_env(3), &SaveOptions::default()).unwrap().md5hash;
    let manifest = repo.session_of(&h).unwrap();
    let out = tmp.path().join("deps.lock");
    emit_lockfile(&manifest, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == "ggplot2==2.0.0  # Github (tidy/ggplot2@11679cd)"));
    let parsed = parse_lockfile(&text);
    assert_eq!(parsed.len(), manifest.components.len());
    for (name, version, source) in parsed {
        let c: &ComponentVersion = &manifest.components[&name];
        assert_eq!((version.as_str(), source.as_str()), (c.version.as_str(), c.source.as_str()));
    }

    let empty = SessionManifest {
        components: Default::default(),
        ..manifest
    };
    emit_lockfile(&empty, &out).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{LOCKFILE_HEADER}\n"));
}

#[test]
fn formats_per_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 16:42:59");
    let mut repo = new_repo(tmp.path(), &clock);
    let d = repo.save(&iris_env(3), &SaveOptions::bare()).unwrap().md5hash;
    assert_eq!(repo.formats(&d).unwrap(), ["csv", "txt"]);
    let one = DatasetPayload::new(vec![Column::new("a", [1.0])]).unwrap();
    let plot = ArtifactEnvelope::plot("p", plot_spec("a", "a", "point"))
        .with_data(one)
        .unwrap()
        .with_image(fake_png(3))
        .unwrap();
    let p = repo.save(&plot, &SaveOptions::default()).unwrap().md5hash;
    assert!(repo.formats(&p).unwrap().contains(&"png".to_string()));
}
