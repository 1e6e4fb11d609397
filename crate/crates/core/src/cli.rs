//! Command-line driver.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::cfg::{self, dedupe_trees, derivations_to_tree, ParseOptions, ParseStats, Strategy};
use crate::grammar::{load_grammar, CatId, Grammar};
use crate::hpsg::{lexical_choices, parse_hpsg_with};
use crate::solver::Store;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cfg,
    Hpsg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Active,
    Gentest,
}

#[derive(Parser, Debug)]
#[command(name = "clpnlp", version, about = "Constraint-based window parser")]
pub struct RunConfig {
    #[arg(long)]
    pub grammar: PathBuf,
    #[arg(long, value_enum, default_value = "cfg")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "active")]
    pub strategy: StrategyArg,
    /// One sentence.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub input: Option<String>,
    /// One sentence per line.
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Print one derivation per distinct tree.
    #[arg(long)]
    pub dedupe_trees: bool,
    /// Store events on stderr.
    #[arg(long)]
    pub trace: bool,
    /// Counters on stderr after each sentence.
    #[arg(long)]
    pub stats: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// In cfg mode, read words and map them to categories through the lexicon.
    #[arg(long)]
    pub lexicon: bool,
}

struct LineOutput {
    out: String,
    err: String,
    /// None on a usage error, otherwise the number of analyses.
    found: Option<usize>,
}

/// Runs the driver and returns the exit code: 0 when every sentence has an
/// analysis, 1 when some has none, 2 on usage or load errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version are not errors
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(&cfg, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "clpnlp: {msg}");
            2
        }
    }
}

fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let text = std::fs::read_to_string(&cfg.grammar).map_err(|e| format!("{}: {e}", cfg.grammar.display()))?;
    let g = load_grammar(&text).map_err(|e| format!("{}: {e}", cfg.grammar.display()))?;
    let lines: Vec<String> = match (&cfg.input, &cfg.file) {
        (Some(s), _) => vec![s.clone()],
        (None, Some(p)) => std::fs::read_to_string(p)
            .map_err(|e| format!("{}: {e}", p.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        (None, None) => return Err("one of --input or --file is required".into()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let results: Vec<LineOutput> = pool.install(|| {
        lines
            .par_iter()
            .enumerate()
            .map(|(i, l)| run_line(cfg, &g, i + 1, l))
            .collect()
    });
    let mut code = 0;
    for r in results {
        out.write_all(r.out.as_bytes()).map_err(|e| e.to_string())?;
        err.write_all(r.err.as_bytes()).map_err(|e| e.to_string())?;
        code = match r.found {
            None => 2,
            Some(0) if code == 0 => 1,
            _ => code,
        };
    }
    Ok(code)
}

fn options(cfg: &RunConfig) -> ParseOptions {
    ParseOptions {
        strategy: match cfg.strategy {
            StrategyArg::Active => Strategy::Active,
            StrategyArg::Gentest => Strategy::Gentest,
        },
        limit: cfg.limit,
    }
}

fn stats_line(n: usize, s: &ParseStats) -> String {
    format!(
        "stats line={n} windows_tried={} reductions={} backtracks={} node_expansions={} completeness_tests={} ask_evaluations={}\n",
        s.windows_tried,
        s.reductions_applied,
        s.backtracks,
        s.node_expansions,
        s.counters.completeness_tests,
        s.counters.ask_evaluations
    )
}

/// Category sequences for one line: raw names, or every combination of
/// lexical categories with `--lexicon`.
fn category_inputs(cfg: &RunConfig, g: &Grammar, tokens: &[&str]) -> Result<Vec<Vec<CatId>>, String> {
    if !cfg.lexicon {
        return Ok(vec![tokens
            .iter()
            .map(|t| g.require(t).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?]);
    }
    let mut seqs: Vec<Vec<CatId>> = vec![Vec::new()];
    for t in tokens {
        let mut cats: Vec<CatId> = lexical_choices(t, g)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|e| e.category)
            .collect();
        cats.dedup();
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                cats.iter().map(move |c| {
                    let mut s = s.clone();
                    s.push(*c);
                    s
                })
            })
            .collect();
    }
    Ok(seqs)
}

fn run_line(cfg: &RunConfig, g: &Grammar, n: usize, line: &str) -> LineOutput {
    let mut res = LineOutput {
        out: String::new(),
        err: String::new(),
        found: Some(0),
    };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let mut store = Store::new();
    if cfg.trace {
        store.enable_trace();
    }
    let opts = options(cfg);
    let outcome: Result<(usize, ParseStats), String> = match cfg.mode {
        Mode::Cfg => category_inputs(cfg, g, &tokens).and_then(|inputs| {
            let mut total = ParseStats::default();
            let mut found = 0;
            for input in inputs {
                let r =
                    cfg::parse_with(&input, g, &opts, &mut store, &mut cfg::NoopReducer).map_err(|e| e.to_string())?;
                let ds = if cfg.dedupe_trees {
                    dedupe_trees(r.derivations, &input)
                } else {
                    r.derivations
                };
                for d in &ds {
                    res.out.push_str(&d.show(g));
                    res.out.push('\n');
                }
                found += ds.len();
                total.windows_tried += r.stats.windows_tried;
                total.reductions_applied += r.stats.reductions_applied;
                total.backtracks += r.stats.backtracks;
                total.node_expansions += r.stats.node_expansions;
            }
            total.counters = store.counters();
            Ok((found, total))
        }),
        Mode::Hpsg => parse_hpsg_with(&tokens, g, &opts, &mut store)
            .map_err(|e| e.to_string())
            .map(|r| {
                let mut seen = std::collections::HashSet::new();
                let mut found = 0;
                for a in &r.analyses {
                    if cfg.dedupe_trees {
                        let tree = derivations_to_tree(&a.derivation, &a.categories).ok();
                        if !seen.insert((a.categories.clone(), tree)) {
                            continue;
                        }
                    }
                    if found > 0 {
                        res.out.push('\n');
                    }
                    res.out.push_str(&a.show(g));
                    found += 1;
                }
                (found, r.stats)
            }),
    };
    if cfg.trace {
        for t in store.take_trace() {
            res.err.push_str(&t);
            res.err.push('\n');
        }
    }
    match outcome {
        Ok((found, stats)) => {
            res.found = Some(found);
            if cfg.stats {
                res.err.push_str(&stats_line(n, &stats));
            }
        }
        Err(e) => {
            res.err.push_str(&format!("clpnlp: line {n}: {e}\n"));
            res.found = None;
        }
    }
    res
}
