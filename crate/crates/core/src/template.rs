//! URL templates mapping repository-relative paths to fetchable URLs.
//!
//! A template contains `{name}` placeholders filled from ordered parameters
//! and a mandatory `{path}` placeholder for the repository-relative file.
//! Empty parameters collapse, so an empty `subdir` leaves no `//` behind.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::address::AddressBase;
use crate::error::{Error, Result};

pub const GITHUB_TEMPLATE: &str = "https://raw.githubusercontent.com/{user}/{repo}/{branch}/{subdir}/{path}";
pub const BITBUCKET_TEMPLATE: &str = "https://bitbucket.org/{user}/{repo}/raw/{branch}/{subdir}/{path}";
pub const RAW_URL_TEMPLATE: &str = "{base}/{path}";
pub const DEFAULT_BRANCH: &str = "master";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HostProfile {
    Github,
    Bitbucket,
    RawUrl,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RemoteTemplate {
    pub profile: HostProfile,
    pub template: String,
    pub params: Vec<(String, String)>,
}

impl RemoteTemplate {
    pub fn github(user: &str, repo: &str, branch: &str, subdir: &str) -> Self {
        Self::hosted(HostProfile::Github, GITHUB_TEMPLATE, user, repo, branch, subdir)
    }

    pub fn bitbucket(user: &str, repo: &str, branch: &str, subdir: &str) -> Self {
        Self::hosted(HostProfile::Bitbucket, BITBUCKET_TEMPLATE, user, repo, branch, subdir)
    }

    fn hosted(profile: HostProfile, template: &str, user: &str, repo: &str, branch: &str, subdir: &str) -> Self {
        let params = [("user", user), ("repo", repo), ("branch", branch), ("subdir", subdir)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        RemoteTemplate {
            profile,
            template: template.into(),
            params,
        }
    }

    pub fn raw_url(base: &str) -> Self {
        RemoteTemplate {
            profile: HostProfile::RawUrl,
            template: RAW_URL_TEMPLATE.into(),
            params: alloc::vec![("base".into(), base.trim_end_matches('/').into())],
        }
    }

    pub fn custom(template: &str, params: Vec<(String, String)>) -> Result<Self> {
        let t = RemoteTemplate {
            profile: HostProfile::Custom,
            template: template.into(),
            params,
        };
        t.url_for("")?;
        Ok(t)
    }

    pub fn param(&self, name: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    /// URL of `relpath` inside the repository. Touches no network.
    pub fn url_for(&self, relpath: &str) -> Result<String> {
        render(&self.template, &self.params, relpath.trim_start_matches('/'))
    }

    /// Root URL of the repository, without a trailing slash.
    pub fn base_url(&self) -> Result<String> {
        Ok(self.url_for("")?.trim_end_matches('/').into())
    }

    /// Address base that hooks use to point back at this repository.
    ///
    /// GitHub repositories on the default branch use the short
    /// `user/repo[/subdir]` form; everything else uses the base URL.
    pub fn address_base(&self) -> Result<AddressBase> {
        if self.profile == HostProfile::Github && self.param("branch") == Some(DEFAULT_BRANCH) {
            let mut segs: Vec<String> = Vec::new();
            for name in ["user", "repo"] {
                segs.push(self.param(name).unwrap_or_default().into());
            }
            segs.extend(
                self.param("subdir")
                    .unwrap_or_default()
                    .split('/')
                    .filter(|s| !s.is_empty())
                    .map(String::from),
            );
            if segs.iter().all(|s| !s.is_empty()) {
                return Ok(AddressBase::Segments(segs));
            }
        }
        Ok(AddressBase::Url(self.base_url()?))
    }

    /// Inverse of [`address_base`](Self::address_base).
    pub fn from_address_base(base: &AddressBase) -> Result<Self> {
        match base {
            AddressBase::Default => Err(Error::MalformedAddress("no repository segments".into())),
            AddressBase::Url(u) => Ok(RemoteTemplate::raw_url(u)),
            AddressBase::Segments(segs) if segs.len() >= 2 => Ok(RemoteTemplate::github(
                &segs[0],
                &segs[1],
                DEFAULT_BRANCH,
                &segs[2..].join("/"),
            )),
            AddressBase::Segments(segs) => Err(Error::MalformedAddress(format!(
                "`{}` needs at least user/repo",
                segs.join("/")
            ))),
        }
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn pieces(template: &str) -> Result<Vec<Piece<'_>>> {
    let mut out = Vec::new();
    let mut rest = template;
    while !rest.is_empty() {
        match rest.find(['{', '}']) {
            None => {
                out.push(Piece::Literal(rest));
                break;
            }
            Some(i) if rest.as_bytes()[i] == b'}' => {
                return Err(Error::MalformedTemplate(format!("unmatched `}}` in `{template}`")))
            }
            Some(i) => {
                if i > 0 {
                    out.push(Piece::Literal(&rest[..i]));
                }
                let close = rest[i..]
                    .find('}')
                    .ok_or_else(|| Error::MalformedTemplate(format!("unclosed `{{` in `{template}`")))?;
                let name = &rest[i + 1..i + close];
                if name.is_empty() || name.contains('{') {
                    return Err(Error::MalformedTemplate(format!("bad placeholder in `{template}`")));
                }
                out.push(Piece::Placeholder(name));
                rest = &rest[i + close + 1..];
            }
        }
    }
    Ok(out)
}

pub fn render(template: &str, params: &[(String, String)], relpath: &str) -> Result<String> {
    let pieces = pieces(template)?;
    if !pieces.iter().any(|p| matches!(p, Piece::Placeholder("path"))) {
        return Err(Error::MalformedTemplate(format!("`{template}` has no {{path}} placeholder")));
    }
    let mut out = String::new();
    for piece in pieces {
        match piece {
            Piece::Literal(s) => out.push_str(s),
            Piece::Placeholder("path") => out.push_str(relpath),
            Piece::Placeholder(name) => {
                let value = params
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| v.as_str())
                    .ok_or_else(|| {
                        Error::MalformedTemplate(format!("no value for placeholder `{name}`"))
                    })?;
                out.push_str(value);
            }
        }
    }
    Ok(collapse_slashes(&out))
}

fn collapse_slashes(url: &str) -> String {
    let (scheme, rest) = match url.find("://") {
        Some(i) => url.split_at(i + 3),
        None => ("", url),
    };
    let mut out = String::from(scheme);
    let mut prev_slash = false;
    for c in rest.chars() {
        if c == '/' && prev_slash {
            continue;
        }
        prev_slash = c == '/';
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn github_collapses_empty_subdir() {
        let t = RemoteTemplate::github("alice", "plots", "master", "");
        assert_eq!(
            t.url_for("backpack.db").unwrap(),
            "https://raw.githubusercontent.com/alice/plots/master/backpack.db"
        );
    }

    #[test]
    fn subdir_adds_one_segment() {
        let t = RemoteTemplate::github("alice", "essays", "master", "arepo");
        assert_eq!(
            t.url_for("gallery/0cc175b9c0f1b6a831c399e269772661.txt").unwrap(),
            "https://raw.githubusercontent.com/alice/essays/master/arepo/gallery/0cc175b9c0f1b6a831c399e269772661.txt"
        );
        assert_eq!(
            t.address_base().unwrap(),
            AddressBase::Segments(vec!["alice".into(), "essays".into(), "arepo".into()])
        );
    }

    #[test]
    fn raw_url_joins_with_single_slash() {
        let t = RemoteTemplate::raw_url("http://localhost:8080/fixture/");
        assert_eq!(
            t.url_for("gallery/ab.csv").unwrap(),
            "http://localhost:8080/fixture/gallery/ab.csv"
        );
        assert_eq!(t.base_url().unwrap(), "http://localhost:8080/fixture");
    }

    #[test]
    fn malformed_templates() {
        assert!(RemoteTemplate::custom("https://x/{user}", vec![("user".into(), "u".into())]).is_err());
        assert!(RemoteTemplate::custom("https://x/{user/{path}", vec![]).is_err());
        assert!(RemoteTemplate::custom("https://x/{nope}/{path}", vec![]).is_err());
        assert!(RemoteTemplate::custom("https://x/}{path}", vec![]).is_err());
        assert!(RemoteTemplate::custom("https://x/{path}", vec![]).is_ok());
    }

    #[test]
    fn address_base_round_trip() {
        for t in [
            RemoteTemplate::github("u", "r", "master", "a/b"),
            RemoteTemplate::raw_url("http://h:1/x"),
        ] {
            let back = RemoteTemplate::from_address_base(&t.address_base().unwrap()).unwrap();
            assert_eq!(back.url_for("backpack.db").unwrap(), t.url_for("backpack.db").unwrap());
        }
        let dev = RemoteTemplate::github("u", "r", "dev", "");
        let back = RemoteTemplate::from_address_base(&dev.address_base().unwrap()).unwrap();
        assert_eq!(back.url_for("backpack.db").unwrap(), dev.url_for("backpack.db").unwrap());
    }
}
