//! Cost and resilience measurement over a corpus of programs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{assess, AssessConfig, AttackKind, AttackOutcome};
use crate::encoder::{protect, support_size, Policy};
use crate::minilang::{code_size, interpret, parse, LangError, Limits, Program, RuntimeError};
use crate::watermark::{embed, WatermarkSpec};

mod render;

pub use render::{render, Format};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no input vectors given")]
    NoInputs,
    #[error("run on input {input:?} failed: {error}")]
    RunFailed { input: Vec<i64>, error: RuntimeError },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: LangError },
    #[error("bad inputs file {path}: {msg}")]
    Inputs { path: PathBuf, msg: String },
}

/// Deterministic cost proxies. Run-dependent fields are summed over inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub code_size_bytes: u64,
    pub steps: u64,
    pub peak_live_nodes: u64,
    pub total_allocations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsDelta {
    pub code_size_bytes: i64,
    pub steps: i64,
    pub peak_live_nodes: i64,
    pub total_allocations: i64,
}

impl Metrics {
    /// `other - self`, componentwise.
    pub fn delta_to(&self, other: &Metrics) -> MetricsDelta {
        let d = |a: u64, b: u64| b as i64 - a as i64;
        MetricsDelta {
            code_size_bytes: d(self.code_size_bytes, other.code_size_bytes),
            steps: d(self.steps, other.steps),
            peak_live_nodes: d(self.peak_live_nodes, other.peak_live_nodes),
            total_allocations: d(self.total_allocations, other.total_allocations),
        }
    }
}

pub fn measure(p: &Program, inputs: &[Vec<i64>], limits: Limits) -> Result<Metrics, BenchError> {
    if inputs.is_empty() {
        return Err(BenchError::NoInputs);
    }
    let mut m = Metrics {
        code_size_bytes: code_size(p) as u64,
        steps: 0,
        peak_live_nodes: 0,
        total_allocations: 0,
    };
    for args in inputs {
        let run = interpret(p, args, limits);
        if let Err(error) = run.status {
            return Err(BenchError::RunFailed {
                input: args.clone(),
                error,
            });
        }
        m.steps += run.steps;
        m.peak_live_nodes += run.peak_live_nodes;
        m.total_allocations += run.total_allocations;
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub name: String,
    pub program: Program,
    pub inputs: Vec<Vec<i64>>,
}

/// Loads every `*.gm` file of `dir`, sorted by name, with its input vectors
/// from `inputs` (a JSON map from program name to argument lists).
pub fn load_corpus(dir: &Path, inputs: &Path) -> Result<Vec<CorpusProgram>, BenchError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BenchError::Io { path, source }
    };
    let text = fs::read_to_string(inputs).map_err(io(inputs))?;
    let bad = |msg: String| BenchError::Inputs {
        path: inputs.to_path_buf(),
        msg,
    };
    let mut table: BTreeMap<String, Vec<Vec<i64>>> =
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;

    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "gm"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let src = fs::read_to_string(&path).map_err(io(&path))?;
        let program = parse(&src).map_err(|source| BenchError::Parse {
            path: path.clone(),
            source,
        })?;
        let inputs = table
            .remove(&name)
            .ok_or_else(|| bad(format!("no inputs for `{name}`")))?;
        out.push(CorpusProgram { name, program, inputs });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub watermark: WatermarkSpec,
    pub policy: Policy,
    pub seed: u64,
    pub limits: Limits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackCell {
    pub kind: AttackKind,
    pub wm: AttackOutcome,
    pub tp: AttackOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramReport {
    pub name: String,
    /// Pipeline failure, if any; the remaining fields are then empty.
    pub error: Option<String>,
    pub wm: Option<Metrics>,
    pub tp: Option<Metrics>,
    pub delta: Option<MetricsDelta>,
    pub sites: usize,
    pub protected_sites: usize,
    pub lookups: usize,
    /// Bytes added by replacing literals, summed over sites.
    pub site_bytes: i64,
    /// Bytes added by the runtime support block.
    pub support_bytes: i64,
    pub attacks: Vec<AttackCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub watermark: String,
    pub trigger: Vec<i64>,
    pub policy: String,
    pub seed: u64,
    /// Support-block size, present when every protected program paid the
    /// same amount.
    pub s_support: Option<i64>,
    /// `tp - wm` code size equals `s_support + site_bytes` for every program.
    pub fixed_overhead_holds: bool,
    pub programs: Vec<ProgramReport>,
}

impl ResilienceReport {
    pub fn to_json(&self) -> String {
        render(self, Format::Json)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn run_program(cp: &CorpusProgram, cfg: &BenchConfig) -> ProgramReport {
    let mut report = ProgramReport {
        name: cp.name.clone(),
        error: None,
        wm: None,
        tp: None,
        delta: None,
        sites: 0,
        protected_sites: 0,
        lookups: 0,
        site_bytes: 0,
        support_bytes: 0,
        attacks: Vec::new(),
    };
    let result = (|| -> Result<(), String> {
        let tree = cfg.watermark.tree().map_err(|e| e.to_string())?;
        let wm = embed(&cp.program, &cfg.watermark).map_err(|e| e.to_string())?;
        let prot = protect(&wm, &tree, &cfg.policy).map_err(|e| e.to_string())?;
        let wm_m = measure(&wm, &cp.inputs, cfg.limits).map_err(|e| format!("watermarked build: {e}"))?;
        let tp_m = measure(&prot.program, &cp.inputs, cfg.limits).map_err(|e| format!("protected build: {e}"))?;
        report.sites = prot.plan.entries.len();
        report.protected_sites = prot.plan.protected_sites();
        report.lookups = prot.plan.lookup_count();
        report.site_bytes = prot.rewritten.site_deltas.iter().sum();
        report.support_bytes = prot.rewritten.support_bytes;
        report.delta = Some(wm_m.delta_to(&tp_m));
        report.wm = Some(wm_m);
        report.tp = Some(tp_m);
        let acfg = AssessConfig {
            watermark: cfg.watermark.value,
            trigger: &cfg.watermark.trigger,
            inputs: &cp.inputs,
            limits: cfg.limits,
        };
        for kind in AttackKind::ALL {
            let (wm, tp) = assess(&wm, &prot.program, kind, cfg.seed, &acfg);
            report.attacks.push(AttackCell { kind, wm, tp });
        }
        Ok(())
    })();
    report.error = result.err();
    report
}

/// Builds, measures and attacks every corpus program. Programs are processed
/// in parallel; the report lists them in corpus order.
pub fn compare(corpus: &[CorpusProgram], cfg: &BenchConfig) -> ResilienceReport {
    let programs: Vec<ProgramReport> = std::thread::scope(|s| {
        let handles: Vec<_> = corpus
            .iter()
            .map(|cp| s.spawn(move || run_program(cp, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });

    let paid: Vec<&ProgramReport> = programs.iter().filter(|p| p.support_bytes > 0).collect();
    let s_support = match paid.first() {
        Some(first) if paid.iter().all(|p| p.support_bytes == first.support_bytes) => Some(first.support_bytes),
        Some(_) => None,
        None => Some(support_size() as i64),
    };
    let fixed_overhead_holds = s_support.is_some()
        && programs.iter().all(|p| match &p.delta {
            Some(d) => d.code_size_bytes == p.support_bytes + p.site_bytes,
            None => p.error.is_some(),
        });
    ResilienceReport {
        watermark: cfg.watermark.value.to_string(),
        trigger: cfg.watermark.trigger.clone(),
        policy: cfg.policy.to_string(),
        seed: cfg.seed,
        s_support,
        fixed_overhead_holds,
        programs,
    }
}
