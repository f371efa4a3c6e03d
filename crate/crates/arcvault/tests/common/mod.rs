#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use arcvault::Repository;
use arcvault_core::session::ComponentVersion;
use arcvault_core::{
    ArtifactEnvelope, ArtifactRow, Clock, Column, DatasetPayload, EnvironmentProbe, LinearModelPayload, Md5Hash,
    PlotSpecPayload, TagRecord, Timestamp,
};
use chrono::{NaiveDate, NaiveDateTime};

pub fn ts(s: &str) -> Timestamp {
    s.parse().unwrap()
}

/// A clock tests can move; clones share the same time.
#[derive(Clone)]
pub struct TestClock(Arc<Mutex<Timestamp>>);

impl TestClock {
    pub fn at(s: &str) -> Self {
        TestClock(Arc::new(Mutex::new(ts(s))))
    }

    pub fn set(&self, s: &str) {
        *self.0.lock().unwrap() = ts(s);
    }

    pub fn set_ts(&self, t: Timestamp) {
        *self.0.lock().unwrap() = t;
    }

    pub fn advance(&self, secs: i64) {
        let mut t = self.0.lock().unwrap();
        *t = t.plus_seconds(secs);
    }
}

impl Clock for TestClock {
    fn now(&self) -> Timestamp {
        *self.0.lock().unwrap()
    }
}

/// Probe with a fixed tool version and three components.
#[derive(Clone, Default)]
pub struct TestProbe;

pub fn component(version: &str, date: &str, source: &str) -> ComponentVersion {
    ComponentVersion {
        version: version.into(),
        date: date.into(),
        source: source.into(),
    }
}

impl EnvironmentProbe for TestProbe {
    fn tool_name(&self) -> String {
        "arcvault".into()
    }
    fn tool_version(&self) -> String {
        "0.1.0".into()
    }
    fn platform(&self) -> String {
        "x86_64-linux".into()
    }
    fn components(&self) -> Vec<(String, ComponentVersion)> {
        vec![
            ("ggplot2".into(), component("2.0.0", "2015-12-18", "Github (tidy/ggplot2@11679cd)")),
            ("dplyr".into(), component("0.4.3", "2015-09-01", "CRAN (R 3.2.3)")),
            ("digest".into(), component("0.6.9", "2016-01-08", "CRAN (R 3.2.3)")),
        ]
    }
}

pub fn new_repo(path: &Path, clock: &TestClock) -> Repository {
    Repository::create(path)
        .unwrap()
        .with_clock(clock.clone())
        .with_probe(TestProbe)
}

pub fn open_repo(path: &Path, clock: &TestClock) -> Repository {
    Repository::open(path)
        .unwrap()
        .with_clock(clock.clone())
        .with_probe(TestProbe)
}

pub fn iris(rows: usize) -> DatasetPayload {
    let sl: Vec<f64> = (0..rows).map(|i| 4.3 + (i % 36) as f64 / 10.0).collect();
    let pl: Vec<f64> = (0..rows).map(|i| 1.0 + (i % 59) as f64 / 10.0).collect();
    let species: Vec<String> = (0..rows)
        .map(|i| ["setosa", "versicolor", "virginica"][i * 3 / rows.max(1)].to_string())
        .collect();
    DatasetPayload::new(vec![
        Column::new("Sepal.Length", sl),
        Column::new("Petal.Length", pl),
        Column::new("Species", species),
    ])
    .unwrap()
}

pub fn iris_env(rows: usize) -> ArtifactEnvelope {
    ArtifactEnvelope::dataset("iris", iris(rows))
}

pub fn lm_model(formula: &str, coefs: &[(&str, f64)], df: u64) -> LinearModelPayload {
    LinearModelPayload {
        coefficients: coefs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        rank: coefs.len() as u64,
        df_residual: df,
        formula: formula.into(),
    }
}

pub fn lm_env(name: &str) -> ArtifactEnvelope {
    ArtifactEnvelope::linear_model(
        name,
        lm_model(
            "Petal.Length ~ Sepal.Length",
            &[("(Intercept)", -7.101443), ("Sepal.Length", 1.858433)],
            148,
        ),
    )
}

pub fn plot_spec(x: &str, y: &str, geometry: &str) -> PlotSpecPayload {
    PlotSpecPayload {
        label_x: x.into(),
        label_y: y.into(),
        geometry: geometry.into(),
        data_ref: None,
    }
}

/// A tiny valid PNG signature plus payload; contents are opaque to us.
pub fn fake_png(seed: u8) -> Vec<u8> {
    let mut v = vec![0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];
    v.extend((0..32).map(|i| seed.wrapping_mul(31).wrapping_add(i)));
    v
}

/// Every file below `root`, relative, with contents.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn tag_multiset(tags: &[TagRecord]) -> BTreeMap<(String, String, String), usize> {
    let mut m = BTreeMap::new();
    for t in tags {
        *m.entry((t.artifact.to_hex(), t.tag.clone(), t.created_date.to_string()))
            .or_insert(0) += 1;
    }
    m
}

// ---- brute-force oracles over raw rows ----

/// Query patterns expressed independently of the library's pattern type.
#[derive(Clone, Debug)]
pub enum Query {
    Exact(String),
    Key(String),
    Days(NaiveDate, NaiveDate),
}

fn oracle_matches(q: &Query, tag: &str) -> bool {
    match q {
        Query::Exact(t) => t == tag,
        Query::Key(k) => tag.find(':').is_some_and(|i| &tag[..i] == k),
        Query::Days(from, to) => {
            let Some(value) = tag.strip_prefix("date:") else {
                return false;
            };
            let Ok(dt) = NaiveDateTime::parse_from_str(value, "%Y-%m-%d %H:%M:%S") else {
                return false;
            };
            if dt.format("%Y-%m-%d %H:%M:%S").to_string() != value {
                return false;
            }
            let low = from.and_hms_opt(0, 0, 0).unwrap();
            let high = to.and_hms_opt(23, 59, 59).unwrap();
            low <= dt && dt <= high
        }
    }
}

/// Linear scan over every tag row.
pub fn oracle_search(tags: &[TagRecord], queries: &[Query], intersect: bool) -> Vec<Md5Hash> {
    let per: Vec<BTreeSet<Md5Hash>> = queries
        .iter()
        .map(|q| tags.iter().filter(|t| oracle_matches(q, &t.tag)).map(|t| t.artifact).collect())
        .collect();
    let mut all: BTreeSet<Md5Hash> = tags.iter().map(|t| t.artifact).collect();
    if !intersect {
        all.clear();
    }
    for set in per {
        if intersect {
            all = all.intersection(&set).copied().collect();
        } else {
            all.extend(set);
        }
    }
    all.into_iter().collect()
}

pub fn to_pattern(q: &Query) -> arcvault_core::SearchPattern {
    use arcvault_core::SearchPattern;
    match q {
        Query::Exact(t) => SearchPattern::parse(t).unwrap(),
        Query::Key(k) => SearchPattern::parse(&format!("{k}:*")).unwrap(),
        Query::Days(a, b) => SearchPattern::date_range(*a, *b).unwrap(),
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct OracleSummary {
    pub artifact_count: u64,
    pub dataset_count: u64,
    pub counts_by_class: BTreeMap<String, u64>,
    pub saves_per_day: BTreeMap<String, u64>,
}

/// Group-by over the show output.
pub fn oracle_summary(rows: &[ArtifactRow], tags: &[TagRecord]) -> OracleSummary {
    let artifacts: BTreeSet<Md5Hash> = rows.iter().map(|r| r.md5hash).collect();
    let mut class_members: BTreeMap<String, BTreeSet<Md5Hash>> = BTreeMap::new();
    let mut saves_per_day = BTreeMap::new();
    for t in tags {
        let (k, v) = t.tag.split_once(':').unwrap();
        match k {
            "class" => {
                class_members.entry(v.to_string()).or_default().insert(t.artifact);
            }
            "date"
                if NaiveDateTime::parse_from_str(v, "%Y-%m-%d %H:%M:%S").is_ok() => {
                    *saves_per_day.entry(v[..10].to_string()).or_insert(0) += 1;
                }
            _ => {}
        }
    }
    OracleSummary {
        artifact_count: artifacts.len() as u64,
        dataset_count: class_members.get("dataset").map_or(0, |s| s.len() as u64),
        counts_by_class: class_members.into_iter().map(|(k, s)| (k, s.len() as u64)).collect(),
        saves_per_day,
    }
}

pub fn summary_matches(repo: &Repository) -> bool {
    let s = repo.summarize().unwrap();
    let o = oracle_summary(&repo.artifacts().unwrap(), &repo.tags().unwrap());
    s.artifact_count == o.artifact_count
        && s.dataset_count == o.dataset_count
        && s.counts_by_class == o.counts_by_class
        && s.saves_per_day == o.saves_per_day
}

// ---- static HTTP fixture server ----

/// Serves files below a directory over HTTP GET, counting every request.
pub struct StaticServer {
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    pub root: Arc<Mutex<PathBuf>>,
    requests: Arc<AtomicUsize>,
    non_get: Arc<AtomicUsize>,
    pub log: Arc<Mutex<Vec<String>>>,
    port: u16,
}

impl StaticServer {
    pub fn start(root: &Path) -> StaticServer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let root = Arc::new(Mutex::new(root.to_path_buf()));
        let requests = Arc::new(AtomicUsize::new(0));
        let non_get = Arc::new(AtomicUsize::new(0));
        let log = Arc::new(Mutex::new(Vec::new()));
        let handle = {
            let (server, root, requests, non_get, log) =
                (server.clone(), root.clone(), requests.clone(), non_get.clone(), log.clone());
            thread::spawn(move || {
                while let Ok(req) = server.recv() {
                    requests.fetch_add(1, Ordering::SeqCst);
                    log.lock().unwrap().push(format!("{} {}", req.method(), req.url()));
                    if *req.method() != tiny_http::Method::Get {
                        non_get.fetch_add(1, Ordering::SeqCst);
                        let _ = req.respond(tiny_http::Response::empty(405));
                        continue;
                    }
                    let rel = req.url().trim_start_matches('/').to_string();
                    let path = root.lock().unwrap().join(&rel);
                    let ok = !rel.split('/').any(|s| s == "..");
                    match fs::read(&path) {
                        Ok(bytes) if ok && path.is_file() => {
                            let _ = req.respond(tiny_http::Response::from_data(bytes));
                        }
                        _ => {
                            let _ = req.respond(tiny_http::Response::empty(404));
                        }
                    }
                }
            })
        };
        StaticServer {
            server,
            handle: Some(handle),
            root,
            requests,
            non_get,
            log,
            port,
        }
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn non_get(&self) -> usize {
        self.non_get.load(Ordering::SeqCst)
    }

    pub fn serve_from(&self, root: &Path) {
        *self.root.lock().unwrap() = root.to_path_buf();
    }
}

impl Drop for StaticServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

// ---- random artifacts ----

use rand::seq::SliceRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "Sepal.Length", "Petal.Width", "setosa", "a,b", "say \"hi\"", "two\nlines", "", "ünïcode", "x", "  padded ",
    "1e5", "007", "NA", "-", "crlf\r\nrow",
];

fn random_text(rng: &mut impl Rng) -> String {
    if rng.gen_bool(0.3) {
        let n = rng.gen_range(1..12);
        (0..n).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
    } else {
        WORDS.choose(rng).unwrap().to_string()
    }
}

fn random_number(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => f64::from(rng.gen_range(-1000..1000)),
        1 => f64::from(rng.gen_range(-1000..1000)) / 8.0,
        2 => rng.gen_range(-1e6..1e6),
        _ => rng.gen::<f64>() * 1e-9,
    }
}

pub fn random_dataset(rng: &mut impl Rng, max_rows: usize) -> DatasetPayload {
    let cols = rng.gen_range(1..=4);
    let rows = rng.gen_range(0..=max_rows);
    let mut names: BTreeSet<String> = BTreeSet::new();
    while names.len() < cols {
        let n = format!("{}{}", random_text(rng).trim(), names.len());
        names.insert(n);
    }
    let columns = names
        .into_iter()
        .map(|name| {
            let numeric = rng.gen_bool(0.5);
            let cells: Vec<arcvault_core::Cell> = (0..rows)
                .map(|_| {
                    if numeric {
                        random_number(rng).into()
                    } else {
                        random_text(rng).into()
                    }
                })
                .collect();
            Column::new(name, cells)
        })
        .collect();
    DatasetPayload::new(columns).unwrap()
}

pub fn random_envelope(rng: &mut impl Rng, kind: usize) -> ArtifactEnvelope {
    let name = format!("{}-{}", ["iris", "model", "plot", "blob"][kind], rng.gen::<u16>());
    match kind {
        0 => ArtifactEnvelope::dataset(name, random_dataset(rng, 12)),
        1 => {
            let n = rng.gen_range(1..=5);
            let mut coefficients = BTreeMap::new();
            coefficients.insert("(Intercept)".to_string(), random_number(rng));
            while coefficients.len() < n {
                coefficients.insert(random_text(rng), random_number(rng));
            }
            ArtifactEnvelope::linear_model(
                name,
                LinearModelPayload {
                    rank: rng.gen_range(0..=coefficients.len() as u64),
                    coefficients,
                    df_residual: rng.gen_range(0..500),
                    formula: format!("y ~ {}", random_text(rng)),
                },
            )
        }
        2 => {
            let label = |rng: &mut _| format!("L{}", random_text(rng));
            let mut env = ArtifactEnvelope::plot(
                name,
                PlotSpecPayload {
                    label_x: label(rng),
                    label_y: label(rng),
                    geometry: ["point", "line", "bar"].choose(rng).unwrap().to_string(),
                    data_ref: None,
                },
            );
            if rng.gen_bool(0.3) {
                env = env.with_image(fake_png(rng.gen())).unwrap();
            }
            env
        }
        _ => {
            let len = rng.gen_range(0..200);
            let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let mut env = ArtifactEnvelope::generic(name, bytes);
            if let arcvault_core::Payload::Generic(g) = &mut env.payload {
                g.format = ["bin", "rds", "pdf"].choose(rng).unwrap().to_string();
            }
            env
        }
    }
}

/// Fills `repo` with up to `max_artifacts` index-only artifacts over
/// `keys` tag keys, with save dates spread across early 2016.
pub fn random_index(rng: &mut impl Rng, repo: &mut Repository, max_artifacts: usize, keys: usize) -> Vec<TagRecord> {
    let n = rng.gen_range(1..=max_artifacts);
    let base = ts("2016-01-01 00:00:00");
    let mut rows = Vec::new();
    let mut tags = Vec::new();
    for i in 0..n {
        let hash = arcvault_core::compute_hash(format!("a{i}-{}", rng.gen::<u64>()).as_bytes());
        let saves = rng.gen_range(1..=2);
        for _ in 0..saves {
            let at = base.plus_seconds(rng.gen_range(0..90 * 86_400));
            rows.push(ArtifactRow { md5hash: hash, name: format!("n{i}"), created_date: at });
            tags.push(TagRecord { artifact: hash, tag: format!("date:{at}"), created_date: at });
            if rng.gen_bool(0.6) {
                let c = rng.gen_range(0..5);
                tags.push(TagRecord { artifact: hash, tag: format!("class:c{c}"), created_date: at });
            }
            if rng.gen_bool(0.05) {
                tags.push(TagRecord { artifact: hash, tag: "date:2016-13-45 99:99:99".into(), created_date: at });
            }
            for _ in 0..rng.gen_range(0..4) {
                let k = rng.gen_range(0..keys);
                let v = rng.gen_range(0..3);
                tags.push(TagRecord { artifact: hash, tag: format!("k{k}:v{v}"), created_date: at });
            }
        }
    }
    repo.import(&rows, &tags, &[]).unwrap();
    tags
}

pub fn random_queries(rng: &mut impl Rng, keys: usize) -> Vec<Query> {
    let day = |rng: &mut dyn rand::RngCore| {
        NaiveDate::from_ymd_opt(2016, 1, 1).unwrap() + chrono::Days::new(rng.gen_range(0..95))
    };
    (0..rng.gen_range(1..=3))
        .map(|_| match rng.gen_range(0..3) {
            0 => Query::Exact(format!("k{}:v{}", rng.gen_range(0..keys), rng.gen_range(0..3))),
            1 => Query::Key(format!("k{}", rng.gen_range(0..keys))),
            _ => {
                let (a, b) = (day(rng), day(rng));
                Query::Days(a.min(b), a.max(b))
            }
        })
        .collect()
}

pub struct SampleGallery {
    pub data: Md5Hash,
    pub models: [Md5Hash; 2],
    pub plots: [Md5Hash; 2],
    pub blob: Md5Hash,
}

/// A small mixed gallery saved through the normal write path.
pub fn sample_gallery(repo: &mut Repository, clock: &TestClock) -> SampleGallery {
    use arcvault::SaveOptions;
    let data = repo.save(&iris_env(150), &SaveOptions::default()).unwrap().md5hash;
    clock.advance(60);
    let m1 = repo.save(&lm_env("model1"), &SaveOptions::default()).unwrap().md5hash;
    clock.advance(60);
    let m2 = ArtifactEnvelope::linear_model(
        "model2",
        lm_model("Petal.Length ~ Sepal.Length + Species", &[("(Intercept)", -1.7), ("Sepal.Length", 0.63), ("Speciesversicolor", 2.2)], 146),
    );
    let m2 = repo.save(&m2, &SaveOptions::default()).unwrap().md5hash;
    clock.advance(86_400);
    let p1 = ArtifactEnvelope::plot("scatter", plot_spec("Sepal.Length", "Petal.Length", "point"))
        .with_data(iris(150))
        .unwrap()
        .with_image(fake_png(1))
        .unwrap();
    let p1 = repo
        .save(&p1, &SaveOptions::default().tag("class:gg").tag("class:ggplot"))
        .unwrap()
        .md5hash;
    clock.advance(60);
    let p2 = ArtifactEnvelope::plot("bars", plot_spec("Species", "count", "bar"));
    let p2 = repo.save(&p2, &SaveOptions::default().tag("class:gg")).unwrap().md5hash;
    clock.advance(60);
    let blob = repo
        .save(&ArtifactEnvelope::generic("notes", b"free text".to_vec()), &SaveOptions::default())
        .unwrap()
        .md5hash;
    SampleGallery { data, models: [m1, m2], plots: [p1, p2], blob }
}
