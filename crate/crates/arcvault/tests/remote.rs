mod common;

use std::fs;
use std::time::Duration;

use arcvault::{copy_artifacts, parse_remote_spec, unzip_repo, zip_repo, Error, RemoteLocator, Repository, SaveOptions};
use arcvault_core::{compute_hash, HashPrefix};
use common::*;

struct Fixture {
    _src: tempfile::TempDir,
    cache: tempfile::TempDir,
    server: StaticServer,
    local: Repository,
    gallery: SampleGallery,
}

fn fixture() -> Fixture {
    let src = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2016-02-09 14:37:06");
    let mut local = new_repo(src.path(), &clock);
    let gallery = sample_gallery(&mut local, &clock);
    let server = StaticServer::start(src.path());
    Fixture {
        _src: src,
        cache: tempfile::tempdir().unwrap(),
        server,
        local,
        gallery,
    }
}

impl Fixture {
    fn locator(&self) -> RemoteLocator {
        RemoteLocator::new(parse_remote_spec(&self.server.url()).unwrap()).with_cache_dir(self.cache.path().join("c"))
    }
}

#[test]
fn remote_view_mirrors_local_summary() {
    let f = fixture();
    let view = f.locator().fetch_remote_index().unwrap();
    assert!(view.is_read_only());
    assert_eq!(view.summarize().unwrap(), f.local.summarize().unwrap());
    assert_eq!(view.summarize().unwrap().counts_by_class["gg"], 2);
    assert_eq!(view.artifacts().unwrap(), f.local.artifacts().unwrap());
    assert!(summary_matches(&view));

    let loaded = view.load(&HashPrefix::from(f.gallery.plots[0])).unwrap();
    assert_eq!(loaded[0].bytes, f.local.load_hash(&f.gallery.plots[0]).unwrap().bytes);
    assert_eq!(loaded[0].envelope.image, Some(fake_png(1)));
    assert_eq!(f.server.non_get(), 0);
}

#[test]
fn cache_is_reused_within_ttl() {
    let f = fixture();
    let loc = f.locator();
    loc.fetch_remote_index().unwrap();
    let after_first = f.server.requests();
    assert_eq!(after_first, 1);
    let view = loc.fetch_remote_index().unwrap();
    assert_eq!(f.server.requests(), after_first);

    view.blob(&f.gallery.data, "csv").unwrap();
    let after_blob = f.server.requests();
    view.blob(&f.gallery.data, "csv").unwrap();
    assert_eq!(f.server.requests(), after_blob, "blobs are cached");

    loc.invalidate_cache().unwrap();
    loc.fetch_remote_index().unwrap();
    assert_eq!(f.server.requests(), after_blob + 1);

    let eager = loc.clone().with_ttl(Duration::ZERO);
    eager.fetch_remote_index().unwrap();
    assert_eq!(f.server.requests(), after_blob + 2);
}

#[test]
fn unreachable_and_corrupt_remotes() {
    let f = fixture();
    let empty = tempfile::tempdir().unwrap();
    f.server.serve_from(empty.path());
    match f.locator().fetch_remote_index() {
        Err(Error::RemoteUnavailable { status: Some(404), .. }) => {}
        other => panic!("expected 404, got {:?}", other.map(|_| ())),
    }

    fs::write(empty.path().join("backpack.db"), b"definitely not sqlite").unwrap();
    assert!(matches!(f.locator().fetch_remote_index(), Err(Error::CorruptRemoteIndex(_))));
    assert!(!f.locator().cache_dir.join("backpack.db").exists());

    let closed = RemoteLocator::new(parse_remote_spec("http://127.0.0.1:9").unwrap())
        .with_cache_dir(f.cache.path().join("closed"));
    assert!(matches!(closed.fetch_remote_index(), Err(Error::RemoteUnavailable { status: None, .. })));
}

#[test]
fn missing_blob_is_unavailable() {
    let f = fixture();
    let view = f.locator().fetch_remote_index().unwrap();
    fs::remove_file(f.local.gallery_dir().join(format!("{}.csv", f.gallery.data))).unwrap();
    assert!(matches!(
        view.blob(&f.gallery.data, "csv"),
        Err(Error::RemoteUnavailable { status: Some(404), .. })
    ));
}

#[test]
fn copy_keeps_rows_tags_and_sessions() {
    let f = fixture();
    let view = f.locator().fetch_remote_index().unwrap();
    let dst = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2020-01-01 00:00:00");
    let mut target = new_repo(dst.path(), &clock);
    let ghost = compute_hash(b"ghost");
    let wanted = [f.gallery.plots[0], f.gallery.models[1], ghost];
    let report = copy_artifacts(&view, &mut target, &wanted).unwrap();
    assert_eq!(report.copied, wanted[..2]);
    assert_eq!(report.missing, [ghost]);
    assert_eq!(report.sessions.len(), 1);

    for h in report.copied.iter().chain(&report.sessions) {
        assert_eq!(tag_multiset(&target.tags_of(h).unwrap()), tag_multiset(&f.local.tags_of(h).unwrap()));
        assert_eq!(target.artifact_rows_of(h).unwrap(), f.local.artifact_rows_of(h).unwrap());
        for name in f.local.gallery_files_of(h).unwrap() {
            assert_eq!(
                fs::read(target.gallery_dir().join(&name)).unwrap(),
                fs::read(f.local.gallery_dir().join(&name)).unwrap()
            );
        }
    }
    assert!(target.check_integrity().unwrap().is_clean());
    assert_eq!(target.session_of(&f.gallery.plots[0]).unwrap(), f.local.session_of(&f.gallery.plots[0]).unwrap());

    let before = target.tags().unwrap().len();
    copy_artifacts(&view, &mut target, &wanted).unwrap();
    assert_eq!(target.tags().unwrap().len(), before, "second copy adds nothing");

    let report = copy_artifacts(&view, &mut target, &[]).unwrap();
    assert_eq!(report, Default::default());
    assert_eq!(f.server.non_get(), 0);
}

#[test]
fn copy_between_local_repositories() {
    let f = fixture();
    let dst = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2020-01-01 00:00:00");
    let mut target = new_repo(dst.path(), &clock);
    let all = f.local.hashes().unwrap();
    copy_artifacts(&f.local, &mut target, &all).unwrap();
    assert_eq!(target.summarize().unwrap(), f.local.summarize().unwrap());
    assert_eq!(tag_multiset(&target.tags().unwrap()), tag_multiset(&f.local.tags().unwrap()));
}

#[test]
fn zip_round_trip() {
    let f = fixture();
    let out = tempfile::tempdir().unwrap();
    let archive = out.path().join("repo.zip");
    zip_repo(&f.local, &archive).unwrap();
    let restored = unzip_repo(&archive, &out.path().join("restored")).unwrap();
    assert_eq!(tree(restored.root()), tree(f.local.root()));
    assert!(restored.check_integrity().unwrap().is_clean());

    assert!(matches!(unzip_repo(&archive, &out.path().join("restored")), Err(Error::RepoConflict { .. })));

    let again = out.path().join("again.zip");
    zip_repo(&f.local, &again).unwrap();
    assert_eq!(fs::read(&archive).unwrap(), fs::read(&again).unwrap(), "archives are reproducible");
}

#[test]
fn zip_of_remote_equals_zip_of_local() {
    let f = fixture();
    let view = f.locator().fetch_remote_index().unwrap();
    let out = tempfile::tempdir().unwrap();
    zip_repo(&f.local, &out.path().join("local.zip")).unwrap();
    zip_repo(&view, &out.path().join("remote.zip")).unwrap();
    assert_eq!(
        fs::read(out.path().join("local.zip")).unwrap(),
        fs::read(out.path().join("remote.zip")).unwrap()
    );
    assert!(f.server.log.lock().unwrap().iter().all(|l| l.starts_with("GET ")));
}

#[test]
fn archives_with_foreign_entries_are_refused() {
    let out = tempfile::tempdir().unwrap();
    let archive = out.path().join("bad.zip");
    let mut zip = zip::ZipWriter::new(fs::File::create(&archive).unwrap());
    zip.start_file("../escape.txt", zip::write::SimpleFileOptions::default()).unwrap();
    std::io::Write::write_all(&mut zip, b"x").unwrap();
    zip.finish().unwrap();
    assert!(matches!(unzip_repo(&archive, &out.path().join("d")), Err(Error::RepoConflict { .. })));
    assert!(!out.path().join("escape.txt").exists());
}

#[test]
fn remote_hooks_need_no_network() {
    let loc = RemoteLocator::new(parse_remote_spec("alice/plots").unwrap());
    let h = compute_hash(b"x");
    assert_eq!(
        loc.remote_hook(&format!("gallery/{h}.png")).unwrap(),
        format!("https://raw.githubusercontent.com/alice/plots/master/gallery/{h}.png")
    );
    let loc = RemoteLocator::new(parse_remote_spec("bitbucket:team/repo/sub@dev").unwrap());
    assert_eq!(
        loc.remote_hook("backpack.db").unwrap(),
        "https://bitbucket.org/team/repo/raw/dev/sub/backpack.db"
    );
}

#[test]
fn views_of_different_remotes_use_different_caches() {
    let root = tempfile::tempdir().unwrap();
    let a = RemoteLocator::cached_under(parse_remote_spec("u/a").unwrap(), root.path());
    let b = RemoteLocator::cached_under(parse_remote_spec("u/b").unwrap(), root.path());
    assert_ne!(a.cache_dir, b.cache_dir);
    assert!(a.cache_dir.starts_with(root.path()));
}

#[test]
fn saving_locally_after_copy_still_works() {
    let f = fixture();
    let dst = tempfile::tempdir().unwrap();
    let clock = TestClock::at("2020-01-01 00:00:00");
    let mut target = new_repo(dst.path(), &clock);
    copy_artifacts(&f.local, &mut target, &[f.gallery.data]).unwrap();
    let again = target.save(&iris_env(150), &SaveOptions::default()).unwrap().md5hash;
    assert_eq!(again, f.gallery.data);
    assert!(target.check_integrity().unwrap().is_clean());
}
