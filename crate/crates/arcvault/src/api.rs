//! Read-only HTTP JSON API.
//!
//! | route | body |
//! |---|---|
//! | `GET /api/artifacts` | artifact rows |
//! | `GET /api/tags` | all tag rows |
//! | `GET /api/tags/{hash}` | tag rows of one artifact |
//! | `GET /api/search?tag=..&from=..&to=..&mode=all\|any&sort=key` | hashes |
//! | `GET /api/miniature/{hash}` | png or txt miniature |
//! | `GET /api/blob/{hash}` | primary blob |
//! | `GET /api/history/{hash}` | pedigree |
//! | `GET /api/summary` | repository summary |

use std::fs;
use std::net::SocketAddr;
use std::path::{Component, PathBuf};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use arcvault_core::{Md5Hash, MiniatureFormat};
use log::{debug, warn};
use percent_encoding::percent_decode_str;
use serde::Serialize;
use tiny_http::{Header, Response, Server};
use url::Url;

use crate::error::{Error, Result};
use crate::locator::RepoLocator;
use crate::repo::Repository;
use crate::search::{build_patterns, sort_hashes};

const PLACEHOLDER_PAGE: &str = "<!doctype html>\n<title>arcvault</title>\n<p>The JSON API is served under <code>/api/</code>.</p>\n";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl ApiResponse {
    fn bytes(content_type: &str, body: Vec<u8>) -> Self {
        ApiResponse {
            status: 200,
            content_type: content_type.into(),
            body,
        }
    }

    fn json<T: Serialize>(value: &T) -> Self {
        match serde_json::to_vec(value) {
            Ok(body) => Self::bytes("application/json", body),
            Err(e) => Self::error(500, &e.to_string()),
        }
    }

    fn error(status: u16, message: &str) -> Self {
        let body = serde_json::to_vec(&serde_json::json!({ "error": message })).unwrap_or_default();
        ApiResponse {
            status,
            content_type: "application/json".into(),
            body,
        }
    }

    pub fn json_value(&self) -> Option<serde_json::Value> {
        serde_json::from_slice(&self.body).ok()
    }
}

fn status_of(e: &Error) -> u16 {
    match e {
        Error::NotFound(_) => 404,
        Error::EmptyQuery | Error::Core(_) | Error::Ambiguous { .. } => 400,
        Error::RemoteUnavailable { .. } => 502,
        _ => 500,
    }
}

pub fn content_type_for(ext: &str) -> &'static str {
    match ext {
        "csv" => "text/csv; charset=utf-8",
        "json" => "application/json",
        "txt" => "text/plain; charset=utf-8",
        "png" => "image/png",
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "svg" => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// Request handler, independent of the transport.
#[derive(Clone, Debug)]
pub struct Api {
    locator: RepoLocator,
    ui: Option<PathBuf>,
}

impl Api {
    pub fn new(locator: RepoLocator, ui: Option<PathBuf>) -> Self {
        Api { locator, ui }
    }

    pub fn handle(&self, method: &str, target: &str) -> ApiResponse {
        if method != "GET" {
            return ApiResponse::error(405, "only GET is supported");
        }
        let Ok(url) = Url::parse("http://localhost/").and_then(|base| base.join(target)) else {
            return ApiResponse::error(400, "malformed request target");
        };
        let segments: Vec<String> = url
            .path_segments()
            .map(|s| s.map(|p| percent_decode_str(p).decode_utf8_lossy().into_owned()).collect())
            .unwrap_or_default();
        let segs: Vec<&str> = segments.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
        if segs.first() != Some(&"api") {
            return self.static_file(&segs);
        }
        let result = match segs[1..] {
            ["artifacts"] => self.with_repo(|r| Ok(ApiResponse::json(&r.artifacts()?))),
            ["tags"] => self.with_repo(|r| Ok(ApiResponse::json(&r.tags()?))),
            ["tags", h] => self.with_hash(h, |r, h| Ok(ApiResponse::json(&r.tags_of(&h)?))),
            ["search"] => self.with_repo(|r| self.search(r, &url)),
            ["miniature", h] => self.with_hash(h, miniature),
            ["blob", h] => self.with_hash(h, |r, h| {
                let loaded = r.load_hash(&h)?;
                Ok(ApiResponse::bytes(
                    content_type_for(loaded.envelope.primary_format()),
                    loaded.bytes,
                ))
            }),
            ["history", h] => self.with_hash(h, |r, h| Ok(ApiResponse::json(&r.history(&h)?))),
            ["summary"] => self.with_repo(|r| Ok(ApiResponse::json(&r.summarize()?))),
            _ => return ApiResponse::error(404, "no such endpoint"),
        };
        result.unwrap_or_else(|e| ApiResponse::error(status_of(&e), &e.to_string()))
    }

    fn with_repo(&self, f: impl FnOnce(&Repository) -> Result<ApiResponse>) -> Result<ApiResponse> {
        f(&self.locator.open()?)
    }

    fn with_hash(&self, hash: &str, f: impl FnOnce(&Repository, Md5Hash) -> Result<ApiResponse>) -> Result<ApiResponse> {
        let hash: Md5Hash = hash.parse()?;
        let repo = self.locator.open()?;
        if !repo.contains(&hash)? {
            return Err(Error::NotFound(format!("artifact {hash}")));
        }
        f(&repo, hash)
    }

    fn search(&self, repo: &Repository, url: &Url) -> Result<ApiResponse> {
        let (mut tags, mut from, mut to, mut mode, mut sort) = (Vec::new(), None, None, None, None);
        for (k, v) in url.query_pairs() {
            match k.as_ref() {
                "tag" => tags.push(v.into_owned()),
                "from" => from = Some(v.into_owned()),
                "to" => to = Some(v.into_owned()),
                "mode" => mode = Some(v.into_owned()),
                "sort" => sort = Some(v.into_owned()),
                _ => {}
            }
        }
        let intersect = match mode.as_deref() {
            None | Some("all") => true,
            Some("any") => false,
            Some(other) => return Ok(ApiResponse::error(400, &format!("unknown mode `{other}`"))),
        };
        let patterns = build_patterns(&tags, from.as_deref(), to.as_deref())?;
        let mut hashes = repo.search(&patterns, intersect)?;
        if let Some(key) = sort.filter(|k| !k.is_empty()) {
            hashes = sort_hashes(repo, hashes, &key)?;
        }
        Ok(ApiResponse::json(&hashes))
    }

    fn static_file(&self, segs: &[&str]) -> ApiResponse {
        let Some(root) = &self.ui else {
            return if segs.is_empty() {
                ApiResponse::bytes(content_type_for("html"), PLACEHOLDER_PAGE.into())
            } else {
                ApiResponse::error(404, "not found")
            };
        };
        let rel: PathBuf = if segs.is_empty() { PathBuf::from("index.html") } else { segs.iter().collect() };
        if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return ApiResponse::error(404, "not found");
        }
        let path = root.join(&rel);
        match fs::read(&path) {
            Ok(body) => {
                let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
                ApiResponse::bytes(content_type_for(ext), body)
            }
            Err(_) => ApiResponse::error(404, "not found"),
        }
    }
}

fn miniature(repo: &Repository, hash: Md5Hash) -> Result<ApiResponse> {
    let formats = repo.formats_of(&hash)?;
    for fmt in [MiniatureFormat::Png, MiniatureFormat::Txt] {
        let ext = fmt.extension();
        if formats.iter().any(|f| f == ext) {
            return Ok(ApiResponse::bytes(content_type_for(ext), repo.blob(&hash, ext)?));
        }
    }
    Err(Error::NotFound(format!("miniature of {hash}")))
}

/// A running server; dropping it does not stop it, use [`ApiServer::shutdown`].
pub struct ApiServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

impl ApiServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the workers exit.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn shutdown(self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        self.join();
    }
}

/// Binds `bind` and serves `api` from a small pool of worker threads.
pub fn serve(api: Api, bind: &str, threads: usize) -> Result<ApiServer> {
    let server = Server::http(bind).map_err(|e| {
        Error::Io(std::io::Error::new(std::io::ErrorKind::AddrNotAvailable, format!("bind {bind}: {e}")))
    })?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::Config(format!("{bind} is not an IP address")))?;
    let server = Arc::new(server);
    let api = Arc::new(api);
    let workers = (0..threads.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let api = Arc::clone(&api);
            thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    let resp = api.handle(request.method().as_str(), request.url());
                    debug!("{} {} -> {}", request.method(), request.url(), resp.status);
                    let mut out = Response::from_data(resp.body).with_status_code(resp.status);
                    if let Ok(h) = Header::from_bytes(&b"Content-Type"[..], resp.content_type.as_bytes()) {
                        out = out.with_header(h);
                    }
                    if resp.status == 405 {
                        if let Ok(h) = Header::from_bytes(&b"Allow"[..], &b"GET"[..]) {
                            out = out.with_header(h);
                        }
                    }
                    if let Err(e) = request.respond(out) {
                        warn!("response failed: {e}");
                    }
                }
            })
        })
        .collect();
    Ok(ApiServer { server, workers, addr })
}
