//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use arcvault_core::{
    ArtifactEnvelope, ArtifactKind, Clock, DatasetPayload, Md5Hash, RemoteTemplate, SearchPattern,
};
use chrono::Days;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::api::{serve, Api};
use crate::artifacts::SaveOptions;
use crate::config::{config_path, CliConfig, REPO_ENV};
use crate::error::{Error, Result};
use crate::locator::{Defaults, RepoLocator};
use crate::provenance::DefaultProbe;
use crate::publishing::{create_md_gallery, render_hook};
use crate::remote::{copy_artifacts, parse_remote_spec, zip_repo};
use crate::repo::{Repository, SystemClock};
use crate::search::{build_patterns, sort_hashes};
use crate::watch::{default_rules, envelope_from_file, KindRule, Watcher};

#[derive(Parser, Debug)]
#[command(name = "arcvault", version, about = "Content-addressed artifact repository")]
struct Cli {
    /// Local repository (overrides the configured default).
    #[arg(long, global = true, env = REPO_ENV)]
    repo: Option<PathBuf>,
    /// Remote repository: `user/repo[/subdir][@branch]`, `github:...`,
    /// `bitbucket:...` or a base URL.
    #[arg(long, global = true)]
    remote: Option<String>,
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum View {
    Artifacts,
    Tags,
}

#[derive(Args, Debug, Default)]
struct DateWindow {
    /// First day, YYYY-MM-DD, inclusive.
    #[arg(long)]
    from: Option<String>,
    /// Last day, YYYY-MM-DD, inclusive.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create a repository.
    Init {
        path: PathBuf,
        /// Also make it the default local repository.
        #[arg(long)]
        default: bool,
    },
    /// Delete a repository and everything in it.
    Delete { path: PathBuf },
    /// Show or change the configured defaults.
    Default {
        /// Default local repository.
        path: Option<PathBuf>,
        /// Default remote repository.
        #[arg(long = "set-remote")]
        set_remote: Option<String>,
        /// Set an option, `key=value`.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Forget all defaults.
        #[arg(long)]
        clear: bool,
    },
    /// List artifacts or tags.
    Show {
        #[arg(long, value_enum, default_value = "artifacts")]
        view: View,
    },
    /// Counts by class and by day.
    Summary,
    /// Save a file as an artifact.
    Save {
        file: PathBuf,
        #[arg(long, value_parser = parse_kind)]
        kind: ArtifactKind,
        /// Artifact name (defaults to the file stem).
        #[arg(long)]
        name: Option<String>,
        /// Extra `key:value` tag; repeatable.
        #[arg(long = "tag")]
        tags: Vec<String>,
        /// CSV dataset drawn by a plot-spec.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Pre-rendered PNG for a plot-spec.
        #[arg(long)]
        image: Option<PathBuf>,
        /// Do not archive the attached dataset.
        #[arg(long)]
        no_data: bool,
        /// Do not archive the session manifest.
        #[arg(long)]
        no_session: bool,
        /// Record the save as a pipeline step with this call descriptor.
        #[arg(long)]
        call: Option<String>,
        /// Input artifact of the pipeline step.
        #[arg(long, requires = "call")]
        input: Option<String>,
    },
    /// Load artifacts by address: `[segments/]prefix` or `url/prefix`.
    Read {
        address: String,
        /// Write the blob of the single match here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove artifacts by hash or by date.
    Rm {
        hashes: Vec<String>,
        #[command(flatten)]
        window: DateWindow,
        /// Remove artifacts whose date tag is older than this many days.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        older_than_days: Option<u64>,
        /// Also remove datasets no longer related to anything.
        #[arg(long)]
        remove_orphaned_data: bool,
    },
    /// Search by tags and dates.
    Search {
        /// `key:value` or `key:*`; repeatable.
        #[arg(long = "tag")]
        tags: Vec<String>,
        #[command(flatten)]
        window: DateWindow,
        /// Every pattern must match (default).
        #[arg(long, conflicts_with = "any")]
        all: bool,
        /// Any pattern may match.
        #[arg(long)]
        any: bool,
        /// Order results by this tag's value.
        #[arg(long)]
        sort: Option<String>,
    },
    /// Copy artifacts with their tags from another repository.
    Copy {
        /// Source: a local repository path or a remote spec.
        #[arg(long)]
        from: String,
        hashes: Vec<String>,
    },
    /// Archive the repository as a zip file.
    Zip {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a markdown gallery.
    Gallery {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_miniature: bool,
        #[arg(long)]
        no_tags: bool,
        /// Remote the repository is published under, for hooks and links.
        #[arg(long)]
        publish: Option<String>,
    },
    /// Print the hook of an artifact.
    Hook {
        hash: String,
        #[arg(long)]
        publish: Option<String>,
    },
    /// Print the pipeline that produced an artifact.
    History { hash: String },
    /// Print the session manifest linked from an artifact.
    Session { hash: String },
    /// Write a lockfile from an artifact's session manifest.
    Lockfile {
        hash: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check index and gallery consistency.
    Check,
    /// Archive files appearing in a directory.
    Watch {
        dir: PathBuf,
        /// `glob=kind`; repeatable. Defaults cover csv and json files.
        #[arg(long = "rule")]
        rules: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        interval_ms: u64,
        /// Scan once and exit.
        #[arg(long)]
        once: bool,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Directory with a web UI bundle.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        threads: usize,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ArtifactKind, String> {
    s.parse().map_err(|_| {
        let kinds: Vec<&str> = ArtifactKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("expected one of {}", kinds.join(", "))
    })
}

/// Writes rows as left-aligned columns.
fn write_table(out: &mut dyn Write, headers: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<w$}  "));
            }
        }
        s
    };
    writeln!(out, "{}", line(headers.to_vec()))?;
    for row in rows {
        writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

struct Ctx<'a> {
    cli: &'a Cli,
    config: CliConfig,
    config_path: Option<PathBuf>,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn defaults(&self) -> Result<Defaults> {
        self.config.defaults(self.cli.repo.as_deref(), self.cli.remote.as_deref())
    }

    fn configure(&self, repo: Repository) -> Result<Repository> {
        let mut repo = repo.with_probe(DefaultProbe {
            components: self.config.components.clone(),
        });
        if let Some(t) = self.config.lock_timeout()? {
            repo = repo.with_lock_timeout(t);
        }
        Ok(repo)
    }

    /// The repository for read commands: `--remote` if given, else the
    /// local default, else the remote default.
    fn open_read(&self) -> Result<Repository> {
        let repo = match &self.cli.remote {
            Some(spec) => self.config.remote_locator(spec)?.fetch_remote_index()?,
            None => self.defaults()?.open()?,
        };
        self.configure(repo)
    }

    fn open_write(&self) -> Result<Repository> {
        let mut d = self.config.defaults(self.cli.repo.as_deref(), None)?;
        d.remote = None;
        self.configure(d.open_local()?)
    }

    fn emit<T: Serialize>(&mut self, value: &T, text: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        if self.cli.json {
            serde_json::to_writer_pretty(&mut *self.out, value)?;
            writeln!(self.out)?;
        } else {
            text(self.out)?;
        }
        Ok(())
    }

    fn save_config(&self) -> Result<()> {
        let path = self
            .config_path
            .as_deref()
            .ok_or_else(|| Error::Config("no configuration directory".into()))?;
        self.config.save(path)
    }
}

fn publish_template(spec: Option<&str>) -> Result<Option<RemoteTemplate>> {
    spec.map(parse_remote_spec).transpose()
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(fs::canonicalize(p)?)
}

/// Runs the CLI; returns the process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let config_path = config_path();
    let config = match config_path.as_deref().map(CliConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let mut ctx = Ctx {
        cli: &cli,
        config,
        config_path,
        out,
    };
    match run(&mut ctx) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn run(ctx: &mut Ctx<'_>) -> Result<i32> {
    match &ctx.cli.command {
        Command::Init { path, default } => {
            Repository::create(path)?;
            if *default {
                ctx.config.default_local_repo = Some(absolute(path)?);
                ctx.save_config()?;
            }
            let shown = path.display().to_string();
            ctx.emit(&serde_json::json!({ "created": shown }), |o| writeln!(o, "created {shown}"))?;
        }
        Command::Delete { path } => {
            Repository::delete(path)?;
            let shown = path.display().to_string();
            ctx.emit(&serde_json::json!({ "deleted": shown }), |o| writeln!(o, "deleted {shown}"))?;
        }
        Command::Default {
            path,
            set_remote,
            set,
            clear,
        } => {
            let changed = *clear || path.is_some() || set_remote.is_some() || !set.is_empty();
            if *clear {
                ctx.config.default_local_repo = None;
                ctx.config.default_remote = None;
                ctx.config.options.clear();
            }
            if let Some(p) = path {
                if !Repository::is_repository(p) {
                    return Err(Error::NotARepo(p.clone()));
                }
                ctx.config.default_local_repo = Some(absolute(p)?);
            }
            if let Some(spec) = set_remote {
                parse_remote_spec(spec)?;
                ctx.config.default_remote = Some(spec.clone());
            }
            for assignment in set {
                ctx.config.set_option(assignment)?;
            }
            if changed {
                ctx.save_config()?;
            }
            let config = ctx.config.clone();
            ctx.emit(&config, |o| {
                let local = config.default_local_repo.as_ref().map(|p| p.display().to_string());
                writeln!(o, "local:  {}", local.as_deref().unwrap_or("-"))?;
                writeln!(o, "remote: {}", config.default_remote.as_deref().unwrap_or("-"))?;
                for (k, v) in &config.options {
                    writeln!(o, "{k} = {v}")?;
                }
                Ok(())
            })?;
        }
        Command::Show { view } => {
            let repo = ctx.open_read()?;
            match view {
                View::Artifacts => {
                    let rows = repo.artifacts()?;
                    ctx.emit(&rows, |o| {
                        let cells: Vec<Vec<String>> = rows
                            .iter()
                            .map(|r| vec![r.md5hash.to_string(), r.name.clone(), r.created_date.to_string()])
                            .collect();
                        write_table(o, &["md5hash", "name", "createdDate"], &cells)
                    })?;
                }
                View::Tags => {
                    let rows = repo.tags()?;
                    ctx.emit(&rows, |o| {
                        let cells: Vec<Vec<String>> = rows
                            .iter()
                            .map(|r| vec![r.artifact.to_string(), r.tag.clone(), r.created_date.to_string()])
                            .collect();
                        write_table(o, &["artifact", "tag", "createdDate"], &cells)
                    })?;
                }
            }
        }
        Command::Summary => {
            let s = ctx.open_read()?.summarize()?;
            ctx.emit(&s, |o| {
                writeln!(o, "Number of archived artifacts: {}", s.artifact_count)?;
                writeln!(o, "Number of archived datasets:  {}", s.dataset_count)?;
                let classes: Vec<Vec<String>> =
                    s.counts_by_class.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
                writeln!(o)?;
                write_table(o, &["class", "count"], &classes)?;
                let days: Vec<Vec<String>> =
                    s.saves_per_day.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
                writeln!(o)?;
                write_table(o, &["date", "saves"], &days)
            })?;
        }
        Command::Save {
            file,
            kind,
            name,
            tags,
            data,
            image,
            no_data,
            no_session,
            call,
            input,
        } => {
            let mut env: ArtifactEnvelope = envelope_from_file(file, *kind)?;
            if let Some(name) = name {
                env.name = name.clone();
            }
            if let Some(data) = data {
                env = env.with_data(DatasetPayload::from_csv(&fs::read(data)?)?)?;
            }
            if let Some(image) = image {
                env = env.with_image(fs::read(image)?)?;
            }
            let options = SaveOptions {
                user_tags: tags.clone(),
                archive_data: !no_data,
                archive_session: !no_session,
            };
            let mut repo = ctx.open_write()?;
            let outcome = match call {
                Some(call) => {
                    let input = input.as_deref().map(|p| repo.resolve_prefix(p)).transpose()?;
                    let hash = repo.record_step(input, call, &env, &options)?;
                    crate::artifacts::SaveOutcome {
                        md5hash: hash,
                        data_hash: None,
                    }
                }
                None => repo.save(&env, &options)?,
            };
            ctx.emit(&outcome, |o| {
                writeln!(o, "{}", outcome.md5hash)?;
                if let Some(d) = outcome.data_hash {
                    writeln!(o, "{d}")?;
                }
                Ok(())
            })?;
        }
        Command::Read { address, out } => {
            let defaults = ctx.defaults()?;
            let loaded = defaults.aread(address)?;
            if let Some(path) = out {
                if loaded.len() != 1 {
                    return Err(Error::Ambiguous {
                        prefix: address.clone(),
                        count: loaded.len(),
                    });
                }
                fs::write(path, &loaded[0].bytes)?;
            }
            #[derive(Serialize)]
            #[serde(rename_all = "camelCase")]
            struct Loaded {
                md5hash: Md5Hash,
                name: String,
                kind: &'static str,
                format: String,
            }
            let listing: Vec<Loaded> = loaded
                .iter()
                .map(|l| Loaded {
                    md5hash: l.hash,
                    name: l.envelope.name.clone(),
                    kind: l.envelope.kind().as_str(),
                    format: l.envelope.primary_format().into(),
                })
                .collect();
            ctx.emit(&listing, |o| {
                let cells: Vec<Vec<String>> = listing
                    .iter()
                    .map(|l| vec![l.md5hash.to_string(), l.kind.into(), l.format.clone(), l.name.clone()])
                    .collect();
                write_table(o, &["md5hash", "kind", "format", "name"], &cells)
            })?;
        }
        Command::Rm {
            hashes,
            window,
            older_than_days,
            remove_orphaned_data,
        } => {
            let mut repo = ctx.open_write()?;
            let mut targets: Vec<Md5Hash> = hashes
                .iter()
                .map(|h| h.parse::<Md5Hash>().map_err(Error::from))
                .collect::<Result<_>>()?;
            let to = match older_than_days {
                Some(days) => {
                    let today = SystemClock.now().date();
                    let last = today
                        .checked_sub_days(Days::new(days + 1))
                        .ok_or_else(|| Error::Config(format!("{days} days is out of range")))?;
                    Some(last.to_string())
                }
                None => window.to.clone(),
            };
            if window.from.is_some() || to.is_some() {
                let patterns = build_patterns(&[], window.from.as_deref(), to.as_deref())?;
                targets.extend(repo.search(&patterns, true)?);
            } else if targets.is_empty() {
                return Err(Error::EmptyQuery);
            }
            let report = repo.remove(&targets, *remove_orphaned_data)?;
            ctx.emit(&report, |o| {
                writeln!(o, "removed {}", report.count())?;
                for h in &report.skipped {
                    writeln!(o, "skipped {h} (not in repository)")?;
                }
                Ok(())
            })?;
        }
        Command::Search {
            tags,
            window,
            all: _,
            any,
            sort,
        } => {
            let repo = ctx.open_read()?;
            let patterns: Vec<SearchPattern> = build_patterns(tags, window.from.as_deref(), window.to.as_deref())?;
            let mut hashes = repo.search(&patterns, !any)?;
            if let Some(key) = sort {
                hashes = sort_hashes(&repo, hashes, key)?;
            }
            ctx.emit(&hashes, |o| hashes.iter().try_for_each(|h| writeln!(o, "{h}")))?;
        }
        Command::Copy { from, hashes } => {
            let source = if Repository::is_repository(from) {
                RepoLocator::local(from)
            } else {
                RepoLocator::Remote(ctx.config.remote_locator(from)?)
            };
            let source = source.open()?;
            let hashes: Vec<Md5Hash> = hashes.iter().map(|h| Ok(h.parse()?)).collect::<Result<_>>()?;
            let mut dest = ctx.open_write()?;
            let report = copy_artifacts(&source, &mut dest, &hashes)?;
            ctx.emit(&report, |o| {
                writeln!(o, "copied {}", report.copied.len())?;
                for h in &report.missing {
                    writeln!(o, "missing {h}")?;
                }
                Ok(())
            })?;
            if !report.missing.is_empty() {
                return Ok(1);
            }
        }
        Command::Zip { out } => {
            zip_repo(&ctx.open_read()?, out)?;
            let shown = out.display().to_string();
            ctx.emit(&serde_json::json!({ "wrote": shown }), |o| writeln!(o, "wrote {shown}"))?;
        }
        Command::Gallery {
            out,
            no_miniature,
            no_tags,
            publish,
        } => {
            let repo = ctx.open_read()?;
            let template = publish_template(publish.as_deref())?;
            create_md_gallery(&repo, out, !no_miniature, !no_tags, template.as_ref())?;
            let shown = out.display().to_string();
            ctx.emit(&serde_json::json!({ "wrote": shown }), |o| writeln!(o, "wrote {shown}"))?;
        }
        Command::Hook { hash, publish } => {
            let repo = ctx.open_read()?;
            let hash = repo.resolve_prefix(hash)?;
            let template = publish_template(publish.as_deref())?;
            let hook = render_hook(&repo, &hash, template.as_ref())?;
            let value = serde_json::json!({ "text": hook.text(), "url": hook.url });
            ctx.emit(&value, |o| {
                writeln!(o, "{}", hook.text())?;
                if let Some(url) = &hook.url {
                    writeln!(o, "{url}")?;
                }
                Ok(())
            })?;
        }
        Command::History { hash } => {
            let repo = ctx.open_read()?;
            let hash = repo.resolve_prefix(hash)?;
            let pedigree = repo.history(&hash)?;
            ctx.emit(&pedigree, |o| {
                let cells: Vec<Vec<String>> = pedigree
                    .steps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let arrow = if i == 0 { "" } else { "-> " };
                        vec![format!("{arrow}{}", s.call), s.md5hash.to_string()]
                    })
                    .collect();
                write_table(o, &["call", "md5hash"], &cells)
            })?;
        }
        Command::Session { hash } => {
            let repo = ctx.open_read()?;
            let hash = repo.resolve_prefix(hash)?;
            let m = repo.session_of(&hash)?;
            ctx.emit(&m, |o| {
                writeln!(o, "tool:     {} {}", m.tool_name, m.tool_version)?;
                writeln!(o, "platform: {}", m.platform)?;
                let cells: Vec<Vec<String>> = m
                    .components
                    .iter()
                    .map(|(k, c)| vec![k.clone(), c.version.clone(), c.date.clone(), c.source.clone()])
                    .collect();
                writeln!(o)?;
                write_table(o, &["component", "version", "date", "source"], &cells)
            })?;
        }
        Command::Lockfile { hash, out } => {
            let repo = ctx.open_read()?;
            let hash = repo.resolve_prefix(hash)?;
            let m = repo.session_of(&hash)?;
            match out {
                Some(path) => crate::provenance::emit_lockfile(&m, path)?,
                None => write!(ctx.out, "{}", m.render_lockfile())?,
            }
        }
        Command::Check => {
            let report = ctx.open_write()?.check_integrity()?;
            let clean = report.is_clean();
            ctx.emit(&report, |o| {
                if clean {
                    return writeln!(o, "ok");
                }
                for f in &report.orphan_files {
                    writeln!(o, "orphan file    {f}")?;
                }
                for f in &report.stray_files {
                    writeln!(o, "stray file     {f}")?;
                }
                for h in &report.dangling_rows {
                    writeln!(o, "dangling row   {h}")?;
                }
                for f in &report.missing_files {
                    writeln!(o, "missing file   {f}")?;
                }
                for t in &report.orphan_tags {
                    writeln!(o, "orphan tag     {} {}", t.artifact, t.value)?;
                }
                for t in &report.malformed_tags {
                    writeln!(o, "malformed tag  {} {}", t.artifact, t.value)?;
                }
                for r in &report.malformed_rows {
                    writeln!(o, "malformed row  {} {}", r.artifact, r.value)?;
                }
                Ok(())
            })?;
            if !clean {
                return Ok(1);
            }
        }
        Command::Watch {
            dir,
            rules,
            interval_ms,
            once,
        } => {
            let rules = if rules.is_empty() {
                default_rules()
            } else {
                rules.iter().map(|r| KindRule::parse(r)).collect::<Result<_>>()?
            };
            let mut repo = ctx.open_write()?;
            let mut watcher = Watcher::new(dir, rules)?;
            if *once {
                let events = watcher.scan(&mut repo)?;
                let hashes: Vec<Md5Hash> = events.iter().map(|e| e.md5hash).collect();
                ctx.emit(&hashes, |o| {
                    events
                        .iter()
                        .try_for_each(|e| writeln!(o, "{}  {}", e.md5hash, e.path.display()))
                })?;
            } else {
                let stop = AtomicBool::new(false);
                watcher.run(&mut repo, Duration::from_millis(*interval_ms), &stop)?;
            }
        }
        Command::Serve { bind, ui, threads } => {
            let locator = match &ctx.cli.remote {
                Some(spec) => RepoLocator::Remote(ctx.config.remote_locator(spec)?),
                None => {
                    let d = ctx.defaults()?;
                    match (d.local, d.remote) {
                        (Some(p), _) => RepoLocator::Local(p),
                        (None, Some(r)) => RepoLocator::Remote(r),
                        (None, None) => return Err(Error::NoDefaultRepo),
                    }
                }
            };
            locator.open()?;
            let server = serve(Api::new(locator, ui.clone()), bind, *threads)?;
            writeln!(ctx.out, "listening on http://{}", server.addr())?;
            ctx.out.flush()?;
            server.join();
        }
    }
    Ok(0)
}
