#![allow(dead_code)]

use std::path::PathBuf;

use graphmark::bench::{load_corpus, BenchConfig, CorpusProgram};
use graphmark::encoder::Policy;
use graphmark::minilang::Limits;
use graphmark::watermark::WatermarkSpec;

pub const W: u128 = 472;
pub const TRIGGER: [i64; 2] = [9, 9];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn demo_corpus() -> Vec<CorpusProgram> {
    let dir = corpus_dir();
    load_corpus(&dir, &dir.join("inputs.json")).expect("demo corpus loads")
}

pub fn family_corpus() -> Vec<CorpusProgram> {
    let dir = corpus_dir().join("family");
    load_corpus(&dir, &dir.join("inputs.json")).expect("family corpus loads")
}

pub fn spec() -> WatermarkSpec {
    WatermarkSpec::new(W, TRIGGER.to_vec())
}

pub fn bench_config() -> BenchConfig {
    BenchConfig {
        watermark: spec(),
        policy: Policy::all(),
        seed: 0,
        limits: Limits::default(),
    }
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares `actual` with the committed golden `name`, rewriting it instead
/// when `UPDATE_GOLDENS` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if want == actual {
        Ok(())
    } else {
        Err(format!("{name} differs from golden (rerun with UPDATE_GOLDENS=1 to refresh)"))
    }
}
