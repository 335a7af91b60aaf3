//! Command-line pipeline: point counting with a resumable cache, group
//! identification from endomorphism data, moment comparison, and Haar
//! sampling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::endo_group::{classify, EndoFile, GroupIdentification};
use crate::error::{Error, Result};
use crate::lpoly::{ap_entry, ap_sequence_excluding, ApCache, CurveSpec};
use crate::rng::SplitMix64;
use crate::st_group::{default_candidates, sample_moments, STModel};
use crate::stats::{empirical_moments, match_candidates, Histogram, MatchVerdict, MomentReport};

pub const CACHE_FILE: &str = "ap_cache.txt";
pub const MIN_COMPARE_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Count,
    Identify,
    Compare,
    Sample,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::from_str_name(s)
    }
}

impl Mode {
    fn from_str_name(s: &str) -> Result<Self> {
        <Mode as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| Error::InvalidArgument(format!("unknown mode '{s}'")))
    }
}

#[derive(Parser, Debug, Clone, Default)]
#[command(
    name = "sato-tate",
    version,
    about = "Frobenius statistics against compact symplectic groups"
)]
pub struct Args {
    /// Curve as "y^2=f(x)" with integer coefficients.
    #[arg(long)]
    pub curve: Option<String>,
    /// Endomorphism data file.
    #[arg(long)]
    pub endo: Option<PathBuf>,
    /// Largest prime to use.
    #[arg(long)]
    pub bound: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file supplying any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog group id for sample mode.
    #[arg(long)]
    pub group: Option<String>,
    /// Comma-separated catalog ids overriding the default candidates.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub curve: Option<String>,
    pub endo: Option<PathBuf>,
    pub bound: u64,
    pub seed: u64,
    pub n: usize,
    pub out: PathBuf,
    pub mode: Mode,
    pub group: Option<String>,
    pub candidates: Option<Vec<String>>,
}

impl RunConfig {
    pub const DEFAULT_BOUND: u64 = 10_000;
    pub const DEFAULT_SEED: u64 = 1;
    pub const DEFAULT_N: usize = 100_000;

    pub fn new(mode: Mode, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            curve: None,
            endo: None,
            bound: RunConfig::DEFAULT_BOUND,
            seed: RunConfig::DEFAULT_SEED,
            n: RunConfig::DEFAULT_N,
            out: out.into(),
            mode,
            group: None,
            candidates: None,
        }
    }

    /// Command-line values win over config-file values.
    pub fn from_args(args: &Args) -> Result<Self> {
        let file = match &args.config {
            Some(p) => parse_config(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);
        let num = |k: &str| -> Result<Option<u64>> {
            get(k)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| Error::InvalidArgument(format!("{k}: bad integer '{v}'")))
                })
                .transpose()
        };
        let mode = match args.mode {
            Some(m) => m,
            None => get("mode")
                .map(Mode::from_str_name)
                .transpose()?
                .ok_or_else(|| Error::InvalidArgument("no mode given".into()))?,
        };
        let out = args
            .out
            .clone()
            .or_else(|| get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let mut cfg = RunConfig::new(mode, out);
        cfg.curve = args
            .curve
            .clone()
            .or_else(|| get("curve").map(String::from));
        cfg.endo = args.endo.clone().or_else(|| get("endo").map(PathBuf::from));
        cfg.bound = args.bound.or(num("bound")?).unwrap_or(cfg.bound);
        cfg.seed = args.seed.or(num("seed")?).unwrap_or(cfg.seed);
        cfg.n = args.n.or(num("n")?.map(|v| v as usize)).unwrap_or(cfg.n);
        cfg.group = args
            .group
            .clone()
            .or_else(|| get("group").map(String::from));
        cfg.candidates = args.candidates.clone().or_else(|| {
            get("candidates").map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
        });
        Ok(cfg)
    }

    fn curve(&self) -> Result<CurveSpec> {
        self.curve
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("--curve is required in this mode".into()))?
            .parse()
    }

    fn endo_file(&self) -> Result<Option<EndoFile>> {
        self.endo.as_deref().map(EndoFile::load).transpose()
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    const KEYS: [&str; 9] = [
        "curve",
        "endo",
        "bound",
        "seed",
        "n",
        "mode",
        "out",
        "group",
        "candidates",
    ];
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected key=value"))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::parse(i + 1, format!("unknown key '{k}'")));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InsufficientData(_) | Error::EmptySample => 3,
        Error::Inconsistency(_) | Error::IncompatibleField(..) => 4,
        _ => 2,
    }
}

/// Result of a counting run.
#[derive(Clone, Debug, PartialEq)]
pub struct CountOutcome {
    pub path: PathBuf,
    pub cache: ApCache,
    /// Primes counted in this run.
    pub computed: usize,
    /// Primes already present in the cache.
    pub reused: usize,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::from)
}

/// Extends `<out>/ap_cache.txt` to every good odd prime up to the bound.
/// One cached row, chosen from the seed, is recomputed and must agree.
pub fn run_count(cfg: &RunConfig) -> Result<CountOutcome> {
    let curve = cfg.curve()?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(CACHE_FILE);
    let mut cache = if path.exists() {
        let cache = ApCache::parse(&fs::read_to_string(&path)?)?;
        if cache.curve != curve {
            return Err(Error::InvalidArgument(format!(
                "{} holds data for {}, not {}",
                path.display(),
                cache.curve,
                curve
            )));
        }
        cache
    } else {
        ApCache::new(curve.clone())
    };
    if !cache.rows.is_empty() {
        let mut rng = SplitMix64::new(cfg.seed);
        let k = rng.below(cache.rows.len() as u64) as usize;
        let (&p, row) = cache.rows.iter().nth(k).expect("index in range");
        if ap_entry(&curve, p)?.row() != *row {
            return Err(Error::Inconsistency(format!(
                "cached row for p={p} does not match a recount"
            )));
        }
    }
    let reused = cache.rows.range(..=cfg.bound).count();
    let seq = ap_sequence_excluding(&curve, cfg.bound, |p| cache.contains(p))?;
    for e in &seq.entries {
        cache.insert(e);
    }
    fs::write(&path, cache.to_text())?;
    Ok(CountOutcome {
        path,
        computed: seq.entries.len(),
        reused,
        cache,
    })
}

/// Identification plus, when the data allows it, a concrete model.
#[derive(Debug)]
pub struct IdentifyOutcome {
    pub identification: GroupIdentification,
    pub model: Result<STModel>,
}

impl IdentifyOutcome {
    pub fn to_text(&self) -> String {
        let mut out = self.identification.summary();
        out.push('\n');
        if self.identification.flagged() {
            out.push_str("flagged: component group not backed by a theorem\n");
        }
        match &self.model {
            Ok(m) => {
                let _ = writeln!(out, "model {}", m.id());
            }
            Err(e) => {
                let _ = writeln!(out, "model unavailable: {e}");
            }
        }
        out
    }
}

pub fn run_identify(cfg: &RunConfig) -> Result<IdentifyOutcome> {
    let file = cfg
        .endo_file()?
        .ok_or_else(|| Error::InvalidArgument("--endo is required in identify mode".into()))?;
    let identification = classify(&file.data, &file.albert())?;
    let model = STModel::from_identification(&identification, &file.data);
    Ok(IdentifyOutcome {
        identification,
        model,
    })
}

fn candidate_models(cfg: &RunConfig, g: usize) -> Result<Vec<STModel>> {
    let mut models = match &cfg.candidates {
        Some(ids) => ids
            .iter()
            .map(|id| STModel::catalog(id))
            .collect::<Result<Vec<_>>>()?,
        None => default_candidates(g)?,
    };
    if let Some(file) = cfg.endo_file()? {
        let ident = classify(&file.data, &file.albert())?;
        let m = STModel::from_identification(&ident, &file.data)?;
        if !models.iter().any(|x| x.id() == m.id()) {
            models.push(m);
        }
    }
    if models.len() < 2 {
        return Err(Error::InvalidArgument(
            "compare needs at least two candidates".into(),
        ));
    }
    Ok(models)
}

/// Outcome of a comparison run.
#[derive(Clone, Debug)]
pub struct CompareOutcome {
    pub verdict: MatchVerdict,
    pub report: MomentReport,
    /// Monte Carlo moments of the best candidate.
    pub best_sampled: MomentReport,
}

/// Counts (resuming the cache), computes empirical moments and scores them
/// against the candidates. Writes verdict.txt, moments.txt and histogram.csv.
pub fn run_compare(cfg: &RunConfig) -> Result<CompareOutcome> {
    if cfg.n < MIN_COMPARE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "compare mode needs n >= {MIN_COMPARE_SAMPLES}"
        )));
    }
    if cfg.bound < 3 {
        return Err(Error::InvalidArgument("bound must be at least 3".into()));
    }
    let count = run_count(cfg)?;
    let g = count.cache.curve.genus();
    let entries = count.cache.entries(cfg.bound)?;
    let normalized: Vec<_> = entries.iter().map(|e| e.normalized.clone()).collect();
    let report = empirical_moments(&normalized)?;
    let models = candidate_models(cfg, g)?;
    let verdict = match_candidates(&report, &models)?;
    let best = models
        .iter()
        .find(|m| m.id() == verdict.best)
        .expect("best is one of the candidates");
    let best_sampled = sample_moments(best, cfg.seed, cfg.n)?;

    fs::write(cfg.out.join("verdict.txt"), verdict.to_text())?;
    let mut moments = report.to_text();
    moments.push('\n');
    moments.push_str(&best_sampled.to_text());
    fs::write(cfg.out.join("moments.txt"), moments)?;
    let a1: Vec<f64> = normalized.iter().map(|a| a.a1()).collect();
    fs::write(
        cfg.out.join("histogram.csv"),
        Histogram::of_a1(&a1, g).to_csv(),
    )?;
    Ok(CompareOutcome {
        verdict,
        report,
        best_sampled,
    })
}

/// Monte Carlo moments of a catalog group (`--group`) or of the model built
/// from `--endo`. Writes sample_moments.txt.
pub fn run_sample(cfg: &RunConfig) -> Result<MomentReport> {
    let model = match (&cfg.group, cfg.endo_file()?) {
        (Some(id), _) => STModel::catalog(id)?,
        (None, Some(file)) => {
            let ident = classify(&file.data, &file.albert())?;
            STModel::from_identification(&ident, &file.data)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "sample mode needs --group or --endo".into(),
            ))
        }
    };
    let report = sample_moments(&model, cfg.seed, cfg.n)?;
    ensure_dir(&cfg.out)?;
    fs::write(cfg.out.join("sample_moments.txt"), report.to_text())?;
    Ok(report)
}

/// Runs the configured mode and returns the text to print.
pub fn run(cfg: &RunConfig) -> Result<String> {
    match cfg.mode {
        Mode::Count => {
            let c = run_count(cfg)?;
            Ok(format!(
                "{} primes in {} ({} counted, {} reused)\n",
                c.cache.rows.len(),
                c.path.display(),
                c.computed,
                c.reused
            ))
        }
        Mode::Identify => Ok(run_identify(cfg)?.to_text()),
        Mode::Compare => Ok(run_compare(cfg)?.verdict.to_text()),
        Mode::Sample => Ok(run_sample(cfg)?.to_text()),
    }
}
