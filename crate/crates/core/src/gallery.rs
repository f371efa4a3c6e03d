//! Markdown gallery rendering.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::address::Hook;
use crate::hash::Md5Hash;

pub const GALLERY_TITLE: &str = "# Artifact gallery";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GalleryMiniature {
    /// Relative path or URL of a PNG image.
    Image(String),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GalleryEntry {
    pub hash: Md5Hash,
    pub hook: Hook,
    pub miniature: Option<GalleryMiniature>,
    pub tags: Vec<String>,
}

/// One section per entry, in the given order.
pub fn render_gallery(entries: &[GalleryEntry], add_miniature: bool, add_tags: bool) -> String {
    let mut out = String::from(GALLERY_TITLE);
    out.push('\n');
    for e in entries {
        let _ = write!(out, "\n## {}\n\n`{}`", e.hash, e.hook.text());
        if let Some(url) = &e.hook.url {
            let _ = write!(out, " ([blob]({url}))");
        }
        out.push('\n');
        if add_miniature {
            match &e.miniature {
                Some(GalleryMiniature::Image(src)) => {
                    let _ = write!(out, "\n![miniature of {}]({src})\n", e.hash);
                }
                Some(GalleryMiniature::Text(text)) => {
                    let fence = fence_for(text);
                    let _ = write!(out, "\n{fence}\n{}", text);
                    if !text.ends_with('\n') {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "{fence}");
                }
                None => {}
            }
        }
        if add_tags && !e.tags.is_empty() {
            out.push('\n');
            for tag in &e.tags {
                let _ = writeln!(out, "- `{}`", tag.replace('`', "'"));
            }
        }
    }
    out
}

/// A backtick fence longer than any backtick run inside `text`.
fn fence_for(text: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in text.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    "`".repeat((longest + 1).max(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::{Address, AddressBase};
    use crate::hash::compute_hash;
    use alloc::vec;

    fn entry(seed: &[u8]) -> GalleryEntry {
        let hash = compute_hash(seed);
        GalleryEntry {
            hash,
            hook: Hook {
                address: Address::new(AddressBase::Default, hash.into()),
                url: None,
            },
            miniature: Some(GalleryMiniature::Text("a  b\n1  2\n".into())),
            tags: vec!["class:dataset".into(), "name:x".into()],
        }
    }

    #[test]
    fn empty_gallery_is_title_only() {
        assert_eq!(render_gallery(&[], true, true), "# Artifact gallery\n");
    }

    #[test]
    fn sections_with_and_without_extras() {
        let entries = vec![entry(b"1"), entry(b"2")];
        let full = render_gallery(&entries, true, true);
        assert_eq!(full.matches("\n## ").count(), 2);
        assert!(full.contains("```\na  b\n1  2\n```"));
        assert!(full.contains("- `class:dataset`"));
        let bare = render_gallery(&entries, false, false);
        assert!(!bare.contains("```\n"));
        assert!(!bare.contains("- `"));
        assert!(bare.contains(&format!("`arcvault read {}`", entries[0].hash)));
    }

    #[test]
    fn fence_outgrows_content() {
        assert_eq!(fence_for("no ticks"), "```");
        assert_eq!(fence_for("has ```` four"), "`````");
    }

    use alloc::format;
}
