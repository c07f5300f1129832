//! Validates a suite, runs its experiments (in parallel, one subdirectory
//! each) and writes `manifest.json`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifacts::{json_bytes, write_file, Check, RunContext};
use crate::config::{ExperimentConfig, SuiteConfig};
use crate::error::{CliError, CliResult};
use crate::experiments::ExperimentRegistry;

pub const MANIFEST: &str = "manifest.json";
pub const THREADS_ENV: &str = "HEATLAB_THREADS";

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentEntry {
    pub name: String,
    pub kind: String,
    /// `ok`, `checks-failed`, `untrusted` or `error`.
    pub status: String,
    pub trusted: bool,
    pub untrusted: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub seed: u64,
    /// Digest of the seed and experiment list (the output directory is excluded).
    pub config_sha256: String,
    pub experiments: Vec<ExperimentEntry>,
    pub files: Vec<FileEntry>,
}

/// A finished run: the manifest plus the errors behind any `error` entries.
#[derive(Debug)]
pub struct SuiteRun {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
    errors: Vec<CliError>,
}

impl SuiteRun {
    pub fn failed_checks(&self) -> Vec<String> {
        self.manifest
            .experiments
            .iter()
            .flat_map(|e| e.checks.iter().filter(|c| !c.pass).map(move |c| format!("{}: {}", e.name, c.name)))
            .collect()
    }

    /// Overall status: the first experiment error, then trust failures, then failed checks.
    pub fn verdict(self) -> CliResult<()> {
        let failed = self.failed_checks();
        if let Some(e) = self.errors.into_iter().next() {
            return Err(e);
        }
        if let Some(e) = self.manifest.experiments.iter().find(|e| !e.trusted) {
            return Err(CliError::Trust {
                experiment: e.name.clone(),
                detail: e.untrusted.join("; "),
            });
        }
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::ChecksFailed { failed })
        }
    }
}

/// Thread cap from `HEATLAB_THREADS`.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn validate_suite(cfg: &SuiteConfig, registry: &ExperimentRegistry) -> CliResult<()> {
    cfg.check_names()?;
    for e in &cfg.experiments {
        registry.validate(e)?;
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Serialize)]
struct HashedConfig<'a> {
    seed: u64,
    experiment: &'a [ExperimentConfig],
}

fn config_digest(cfg: &SuiteConfig) -> CliResult<String> {
    let text = toml::to_string(&HashedConfig {
        seed: cfg.seed,
        experiment: &cfg.experiments,
    })
    .map_err(|e| CliError::Config(format!("serializing config: {e}")))?;
    Ok(sha256_hex(text.as_bytes()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> CliResult<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|r| r.map(|d| d.path()).map_err(|e| CliError::io(dir, e)))
        .collect::<CliResult<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            let rel = p.strip_prefix(root).expect("under root");
            out.push(FileEntry {
                path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
    }
    Ok(())
}

fn entry(e: &ExperimentConfig, ctx: RunContext, result: &CliResult<()>) -> ExperimentEntry {
    let trusted = ctx.untrusted.is_empty();
    let status = if result.is_err() {
        "error"
    } else if !trusted {
        "untrusted"
    } else if ctx.checks.iter().any(|c| !c.pass) {
        "checks-failed"
    } else {
        "ok"
    };
    ExperimentEntry {
        name: e.name.clone(),
        kind: e.kind.clone(),
        status: status.into(),
        trusted,
        untrusted: ctx.untrusted,
        checks: ctx.checks,
        summary: serde_json::to_value(ctx.summary).expect("maps serialize"),
        error: result.as_ref().err().map(|e| e.to_string()),
    }
}

/// Validate everything, then run. `output_dir` overrides the configured one.
pub fn run_suite(
    cfg: &SuiteConfig,
    registry: &ExperimentRegistry,
    output_dir: Option<&Path>,
    threads: Option<usize>,
) -> CliResult<SuiteRun> {
    validate_suite(cfg, registry)?;
    let out = output_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    for e in &cfg.experiments {
        let dir = out.join(&e.name);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|err| CliError::io(&dir, err))?;
        }
    }

    let work = || -> Vec<(RunContext, CliResult<()>)> {
        cfg.experiments
            .par_iter()
            .map(|e| {
                log::info!("running `{}` ({})", e.name, e.kind);
                let mut ctx = RunContext::new(&e.name, out.join(&e.name), cfg.seed);
                let r = std::fs::create_dir_all(&ctx.dir)
                    .map_err(|err| CliError::io(&ctx.dir, err))
                    .and_then(|_| registry.run(e, &mut ctx));
                if let Err(err) = &r {
                    log::error!("`{}` failed: {err}", e.name);
                }
                (ctx, r)
            })
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut experiments = Vec::new();
    let mut errors = Vec::new();
    for (e, (ctx, r)) in cfg.experiments.iter().zip(results) {
        experiments.push(entry(e, ctx, &r));
        if let Err(err) = r {
            errors.push(err);
        }
    }
    let mut files = Vec::new();
    for e in &cfg.experiments {
        let dir = out.join(&e.name);
        if dir.is_dir() {
            collect_files(&out, &dir, &mut files)?;
        }
    }
    let manifest = Manifest {
        seed: cfg.seed,
        config_sha256: config_digest(cfg)?,
        experiments,
        files,
    };
    write_file(&out.join(MANIFEST), &json_bytes(&manifest)?)?;
    Ok(SuiteRun {
        manifest,
        output_dir: out,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn digest_ignores_output_dir() {
        let mut a = SuiteConfig::parse("seed = 3\n").unwrap();
        let b = a.clone();
        a.output_dir = "elsewhere".into();
        assert_eq!(config_digest(&a).unwrap(), config_digest(&b).unwrap());
    }
}
