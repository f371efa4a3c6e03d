//! Hooks and the markdown gallery.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use arcvault_core::gallery::{render_gallery, GalleryEntry, GalleryMiniature};
use arcvault_core::{Address, AddressBase, HashPrefix, Hook, Md5Hash, MiniatureFormat, RemoteTemplate, Timestamp};

use crate::error::{Error, Result};
use crate::repo::{Repository, GALLERY_DIR};

fn effective_template<'a>(repo: &'a Repository, publish: Option<&'a RemoteTemplate>) -> Option<&'a RemoteTemplate> {
    publish.or_else(|| repo.remote().map(|r| &r.template))
}

/// Hook for `hash`. Remote repositories, or local ones given the template
/// they are published under, get a qualified address and a blob URL.
pub fn render_hook(repo: &Repository, hash: &Md5Hash, publish: Option<&RemoteTemplate>) -> Result<Hook> {
    if !repo.contains(hash)? {
        return Err(Error::NotFound(format!("artifact {hash}")));
    }
    let prefix = HashPrefix::from(*hash);
    let Some(template) = effective_template(repo, publish) else {
        return Ok(Hook {
            address: Address::new(AddressBase::Default, prefix),
            url: None,
        });
    };
    let ext = repo.formats_of(hash)?.into_iter().next().unwrap_or_else(|| "bin".into());
    Ok(Hook {
        address: Address::new(template.address_base()?, prefix),
        url: Some(template.url_for(&format!("{GALLERY_DIR}/{hash}.{ext}"))?),
    })
}

/// Gallery entries, newest artifact first.
pub fn gallery_entries(repo: &Repository, out_dir: Option<&Path>, publish: Option<&RemoteTemplate>) -> Result<Vec<GalleryEntry>> {
    let mut latest: BTreeMap<Md5Hash, Timestamp> = BTreeMap::new();
    for row in repo.artifacts()? {
        let e = latest.entry(row.md5hash).or_insert(row.created_date);
        *e = (*e).max(row.created_date);
    }
    let mut order: Vec<(Md5Hash, Timestamp)> = latest.into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let template = effective_template(repo, publish);
    let local_gallery_prefix = match out_dir {
        Some(dir) if same_dir(dir, repo.root()) => Some(format!("{GALLERY_DIR}/")),
        _ => None,
    };
    let mut entries = Vec::with_capacity(order.len());
    for (hash, _) in order {
        let formats = repo.formats_of(&hash)?;
        let png = MiniatureFormat::Png.extension();
        let txt = MiniatureFormat::Txt.extension();
        let miniature = if formats.iter().any(|f| f == png) {
            let file = format!("{hash}.{png}");
            let src = match (template, &local_gallery_prefix) {
                (Some(t), _) => t.url_for(&format!("{GALLERY_DIR}/{file}"))?,
                (None, Some(prefix)) => format!("{prefix}{file}"),
                (None, None) => repo.gallery_dir().join(&file).display().to_string(),
            };
            Some(GalleryMiniature::Image(src))
        } else if formats.iter().any(|f| f == txt) {
            let bytes = repo.blob(&hash, txt)?;
            Some(GalleryMiniature::Text(String::from_utf8_lossy(&bytes).into_owned()))
        } else {
            None
        };
        let mut tags: Vec<String> = Vec::new();
        for t in repo.tags_of(&hash)? {
            if !tags.contains(&t.tag) {
                tags.push(t.tag);
            }
        }
        entries.push(GalleryEntry {
            hash,
            hook: render_hook(repo, &hash, publish)?,
            miniature,
            tags,
        });
    }
    Ok(entries)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Writes the markdown gallery of every artifact to `out`.
pub fn create_md_gallery(
    repo: &Repository,
    out: &Path,
    add_miniature: bool,
    add_tags: bool,
    publish: Option<&RemoteTemplate>,
) -> Result<()> {
    let out_dir = out.parent().map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p });
    let entries = gallery_entries(repo, out_dir, publish)?;
    fs::write(out, render_gallery(&entries, add_miniature, add_tags))?;
    Ok(())
}
