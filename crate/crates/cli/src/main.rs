use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde_json::json;

use graphmark::attacks::AttackKind;
use graphmark::bench::{compare, load_corpus, render, BenchConfig, Format, ResilienceReport};
use graphmark::encoder::{protect, Policy};
use graphmark::minilang::{code_size, interpret, parse, serialize, Limits, Program};
use graphmark::ppct::DEFAULT_MAX_LEAVES;
use graphmark::watermark::{embed, extract, extract_tree, ExtractError, WatermarkSpec};

/// Dynamic graph watermarking and constant-encoding tamper-proofing.
///
/// Any flag may also be given in a `--config` file as `name=value` lines;
/// flags on the command line take precedence.
#[derive(Parser, Debug)]
#[command(name = "graphmark", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct LimitArgs {
    /// Statement budget per run.
    #[arg(long, default_value_t = Limits::default().max_steps)]
    max_steps: u64,
    /// Heap allocation budget per run.
    #[arg(long, default_value_t = Limits::default().max_allocations)]
    max_allocations: u64,
    #[arg(long, default_value_t = Limits::default().max_call_depth)]
    max_call_depth: usize,
}

impl LimitArgs {
    fn limits(self) -> Result<Limits> {
        anyhow::ensure!(
            self.max_steps > 0 && self.max_allocations > 0 && self.max_call_depth > 0,
            "limits must be positive"
        );
        Ok(Limits {
            max_steps: self.max_steps,
            max_allocations: self.max_allocations,
            max_call_depth: self.max_call_depth,
        })
    }
}

#[derive(Subcommand, Debug)]
#[command(args_override_self = true)]
enum Cmd {
    /// Run a program and print its output, one integer per line.
    Run {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        args: String,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Embed a watermark tree builder.
    Embed {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        watermark: u128,
        #[arg(long, allow_hyphen_values = true)]
        trigger: String,
        #[arg(long, default_value_t = DEFAULT_MAX_LEAVES)]
        max_leaves: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run on the trigger input and print the recovered watermark or NOT-FOUND.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        trigger: String,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Encode constants of a watermarked program as tree lookups.
    Protect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        trigger: String,
        /// `all` or `list:v1,v2,...`
        #[arg(long, default_value = "all")]
        policy: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Apply one semantics-preserving transformation.
    Attack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        kind: AttackKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, measure and attack every program of a corpus.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        watermark: u128,
        #[arg(long, allow_hyphen_values = true)]
        trigger: String,
        #[arg(long, default_value = "all")]
        policy: String,
        /// JSON map from program name to argument vectors. Defaults to
        /// `inputs.json` inside the corpus directory.
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_LEAVES)]
        max_leaves: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Render a bench report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "md")]
        format: Format,
    },
}

/// Failure that maps to exit code 1.
#[derive(Debug)]
struct Domain(String);

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Domain {}

fn domain<E: std::fmt::Display>(e: E) -> anyhow::Error {
    Domain(e.to_string()).into()
}

fn int_list(s: &str) -> Result<Vec<i64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<i64>().with_context(|| format!("bad integer `{v}` in `{s}`")))
        .collect()
}

fn read_program(path: &Path) -> Result<Program> {
    let src = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&src).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes the program to `out` and reports a summary object, or prints the
/// program text when no path is given.
fn emit_program(p: &Program, out: Option<&Path>, mut summary: serde_json::Value) -> Result<()> {
    let text = serialize(p);
    match out {
        Some(path) => {
            write_file(path, &text)?;
            summary["out"] = json!(path.display().to_string());
            summary["code_size"] = json!(code_size(p));
            println!("{summary}");
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn policy(s: &str) -> Result<Policy> {
    s.parse::<Policy>().map_err(|e| anyhow::anyhow!("{e}"))
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { input, args, limits } => {
            let p = read_program(&input)?;
            let run = interpret(&p, &int_list(&args)?, limits.limits()?);
            for v in &run.output {
                println!("{v}");
            }
            run.status.map_err(domain)
        }
        Cmd::Embed {
            input,
            watermark,
            trigger,
            max_leaves,
            out,
        } => {
            let p = read_program(&input)?;
            let mut spec = WatermarkSpec::new(watermark, int_list(&trigger)?);
            spec.max_leaves = max_leaves;
            let wm = embed(&p, &spec).map_err(domain)?;
            emit_program(&wm, out.as_deref(), json!({ "watermark": watermark.to_string() }))
        }
        Cmd::Extract { input, trigger, limits } => {
            let p = read_program(&input)?;
            match extract(&p, &int_list(&trigger)?, limits.limits()?) {
                Ok(w) => {
                    println!("{w}");
                    Ok(())
                }
                Err(e) => {
                    println!("NOT-FOUND");
                    match e {
                        ExtractError::NotFound => Err(Domain(String::new()).into()),
                        other => Err(domain(other)),
                    }
                }
            }
        }
        Cmd::Protect {
            input,
            trigger,
            policy: pol,
            out,
            plan,
            limits,
        } => {
            let p = read_program(&input)?;
            let pol = policy(&pol)?;
            let tree = extract_tree(&p, &int_list(&trigger)?, limits.limits()?).map_err(domain)?;
            let prot = protect(&p, &tree, &pol).map_err(domain)?;
            if let Some(path) = &plan {
                write_file(path, &(prot.plan.to_json() + "\n"))?;
            }
            let summary = json!({
                "sites": prot.plan.entries.len(),
                "protected_sites": prot.plan.protected_sites(),
                "lookups": prot.plan.lookup_count(),
            });
            emit_program(&prot.program, out.as_deref(), summary)
        }
        Cmd::Attack { input, kind, seed, out } => {
            let p = read_program(&input)?;
            let q = kind.apply(&p, seed);
            let summary = json!({ "kind": kind.name(), "seed": seed, "changed": q != p });
            emit_program(&q, out.as_deref(), summary)
        }
        Cmd::Bench {
            corpus,
            watermark,
            trigger,
            policy: pol,
            inputs,
            seed,
            max_leaves,
            out,
            limits,
        } => {
            let inputs = inputs.unwrap_or_else(|| corpus.join("inputs.json"));
            let programs = load_corpus(&corpus, &inputs).map_err(domain)?;
            let mut spec = WatermarkSpec::new(watermark, int_list(&trigger)?);
            spec.max_leaves = max_leaves;
            let cfg = BenchConfig {
                watermark: spec,
                policy: policy(&pol)?,
                seed,
                limits: limits.limits()?,
            };
            let report = compare(&programs, &cfg);
            let text = report.to_json();
            match out {
                Some(path) => {
                    write_file(&path, &text)?;
                    let failed = report.programs.iter().filter(|p| p.error.is_some()).count();
                    println!(
                        "{}",
                        json!({
                            "out": path.display().to_string(),
                            "programs": report.programs.len(),
                            "failed": failed,
                            "fixed_overhead_holds": report.fixed_overhead_holds,
                        })
                    );
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Cmd::Report { input, format } => {
            let text = fs::read_to_string(&input).with_context(|| format!("cannot read {}", input.display()))?;
            let report = ResilienceReport::from_json(&text).map_err(|e| domain(format!("{}: {e}", input.display())))?;
            let doc = render(&report, format);
            print!("{doc}");
            if !doc.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

/// Parses a `name=value` config file. Blank lines and `#` comments are
/// skipped.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected name=value", path.display(), n + 1))?;
        out.insert(k.trim().trim_start_matches("--").replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Removes `--config` from `argv` and splices the file's settings in right
/// after the subcommand, so later command-line flags override them. Keys the
/// subcommand does not take are ignored.
fn apply_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            argv.remove(pos);
            p
        }
        None => {
            anyhow::ensure!(pos + 1 < argv.len(), "--config needs a path");
            let p = argv.remove(pos + 1);
            argv.remove(pos);
            p
        }
    };
    let settings = read_config(Path::new(&path))?;
    let Some(sub_pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&argv[sub_pos]) else {
        return Ok(argv);
    };
    let known: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let extra: Vec<String> = settings
        .into_iter()
        .filter(|(k, _)| known.contains(k))
        .map(|(k, v)| format!("--{k}={v}"))
        .collect();
    argv.splice(sub_pos + 1..sub_pos + 1, extra);
    Ok(argv)
}

fn main() -> ExitCode {
    let argv = match apply_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Domain>() {
            Some(d) => {
                if !d.0.is_empty() {
                    eprintln!("error: {d}");
                }
                ExitCode::from(1)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
