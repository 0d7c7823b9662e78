use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use groupprob::envelope::{Envelope, FiniteDistribution};
use groupprob::harness::{emit_summary, named_family, parse_scalar, read_ledger, run_batch, BatchManifest, SummaryFormat};
use groupprob::instances::{group_from_json, KINDS};
use groupprob::normedness::check_j_normed;
use groupprob::rademacher::{
    check_kk, check_levy, check_mont, check_tail_product, InequalityReport, LaminarFamily, MontMode, RademacherScenario,
    Regime,
};
use groupprob::word_norm::{biinv_norm, parse_word, SearchLimits};
use groupprob::{audit_axioms, Element, Error, GroupInstance, MetricSemigroup, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "groupprob", version, about = "Exact checks on abelian metric groups")]
struct Cli {
    /// Print the supported group kinds and exit.
    #[arg(long)]
    list_kinds: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded audit of the semigroup and metric axioms.
    Audit {
        #[arg(long)]
        group: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// J-normedness on given or sampled elements.
    Normedness {
        #[arg(long)]
        group: String,
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "2..16")]
        j: String,
        #[arg(long)]
        elements: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Envelope {
        #[command(subcommand)]
        action: EnvelopeCommand,
    },
    /// Expectation of a finite law in the coordinate Banach space.
    Expectation {
        #[arg(long)]
        group: String,
        #[arg(long)]
        dist: String,
    },
    CheckKk {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "normed-general")]
        regime: String,
    },
    CheckLevy {
        #[arg(long)]
        scenario: String,
        /// JSON list of index sets, or prefixes / suffixes / singletons.
        #[arg(long, default_value = "prefixes")]
        family: String,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
    },
    CheckTail {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    CheckMont {
        #[arg(long)]
        group: String,
        #[arg(long)]
        law: String,
        #[arg(long)]
        n: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<String>,
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Start point (defaults to the identity).
        #[arg(long)]
        z0: Option<String>,
        #[arg(long)]
        z1: Option<String>,
    },
    /// Bounds on the bi-invariant word norm of a free-group word.
    WordNorm {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 4)]
        conj_bound: usize,
        #[arg(long, default_value_t = 6)]
        len_bound: usize,
        #[arg(long, default_value_t = 200_000_000)]
        node_budget: u64,
    },
    Batch {
        #[arg(long)]
        manifest: PathBuf,
    },
    Summary {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

#[derive(Subcommand)]
enum EnvelopeCommand {
    /// Image and norm of an element at every stage of the chain.
    Trace {
        #[arg(long)]
        group: String,
        #[arg(long)]
        element: String,
    },
}

/// A path to a JSON file, or the JSON text itself.
fn load_json(arg: &str) -> Result<Value> {
    let path = Path::new(arg);
    let text = if path.is_file() { fs::read_to_string(path)? } else { arg.to_string() };
    serde_json::from_str(&text).map_err(|e| Error::MalformedJson(format!("{arg}: {e}")))
}

fn load_group(arg: &str) -> Result<GroupInstance> {
    group_from_json(&load_json(arg)?)
}

fn load_element(g: &GroupInstance, arg: &str) -> Result<Element> {
    let v = load_json(arg)?;
    g.element_from_json(v.get("element").unwrap_or(&v))
}

fn parse_j(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse J `{text}`"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print<T: Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("serializable") + "\n"));
}

fn verdict(satisfied: bool) -> u8 {
    if satisfied {
        0
    } else {
        2
    }
}

fn report(r: InequalityReport) -> u8 {
    print(&r);
    verdict(r.satisfied)
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Audit { group, samples, seed } => {
            let g = load_group(&group)?;
            let r = audit_axioms(&g, samples, seed);
            print(&r);
            Ok(verdict(r.passed))
        }
        Command::Normedness { group, j, elements, samples, seed } => {
            let g = load_group(&group)?;
            let j = parse_j(&j)?;
            let elems = match elements {
                Some(arg) => {
                    let v = load_json(&arg)?;
                    let list = v.get("elements").unwrap_or(&v);
                    let list = list.as_array().ok_or_else(|| Error::MalformedJson("expected a list of elements".into()))?;
                    list.iter().map(|e| g.element_from_json(e)).collect::<Result<Vec<_>>>()?
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..samples).map(|_| g.sample(&mut rng)).collect()
                }
            };
            let v = check_j_normed(&g, &j, &elems)?;
            print(&v);
            Ok(verdict(v.counterexample.is_none()))
        }
        Command::Envelope { action: EnvelopeCommand::Trace { group, element } } => {
            let g = load_group(&group)?;
            let e = load_element(&g, &element)?;
            let env = Envelope::new(g)?;
            print(&env.trace(&e)?);
            Ok(0)
        }
        Command::Expectation { group, dist } => {
            let g = load_group(&group)?;
            let law = FiniteDistribution::from_json(&g, &load_json(&dist)?)?;
            print(&Envelope::new(g)?.expectation(&law)?);
            Ok(0)
        }
        Command::CheckKk { scenario, regime } => {
            let s = RademacherScenario::from_json(&load_json(&scenario)?)?;
            let regime: Regime = regime.parse()?;
            Ok(report(check_kk(&s, regime)?))
        }
        Command::CheckLevy { scenario, family, s, t } => {
            let sc = RademacherScenario::from_json(&load_json(&scenario)?)?;
            let fam = match family.as_str() {
                "prefixes" | "suffixes" | "singletons" => named_family(&family, sc.n())?,
                other => LaminarFamily::from_json(&load_json(other)?)?,
            };
            Ok(report(check_levy(&sc, &fam, &parse_scalar(&s)?, &parse_scalar(&t)?)?))
        }
        Command::CheckTail { scenario, s, t, u, v } => {
            let sc = RademacherScenario::from_json(&load_json(&scenario)?)?;
            let [s, t, u, v] = [s, t, u, v].map(|x| parse_scalar(&x));
            Ok(report(check_tail_product(&sc, &s?, &t?, &u?, &v?)?))
        }
        Command::CheckMont { group, law, n, t_grid, mode, seed, samples, z0, z1 } => {
            let g = load_group(&group)?;
            let law = FiniteDistribution::from_json(&g, &load_json(&law)?)?;
            let z0 = match z0 {
                Some(arg) => load_element(&g, &arg)?,
                None => g.identity().ok_or_else(|| Error::InvalidParameter("no identity; pass --z0".into()))?,
            };
            let z1 = match z1 {
                Some(arg) => load_element(&g, &arg)?,
                None => z0.clone(),
            };
            let grid = t_grid.iter().map(|t| parse_scalar(t)).collect::<Result<Vec<_>>>()?;
            let mode = match mode.as_str() {
                "exact" => MontMode::Exact,
                "sample" => MontMode::Sample { seed, samples },
                other => return Err(Error::InvalidParameter(format!("unknown mode `{other}`"))),
            };
            let reports = check_mont(&g, &law, &z0, &z1, n, &grid, mode)?;
            print(&reports);
            Ok(verdict(reports.iter().all(|r| r.satisfied)))
        }
        Command::WordNorm { word, conj_bound, len_bound, node_budget } => {
            let w = parse_word(&word)?;
            print(&biinv_norm(&w, &SearchLimits { conj_bound, len_bound, node_budget }));
            Ok(0)
        }
        Command::Batch { manifest } => {
            let m = BatchManifest::load(&manifest)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let outcome = run_batch(&m, base)?;
            print(&json!({
                "ledger": outcome.ledger_path,
                "records": outcome.records.len(),
                "exit_code": outcome.exit_code,
            }));
            Ok(outcome.exit_code as u8)
        }
        Command::Summary { ledger, format } => {
            let format: SummaryFormat = format.parse()?;
            let records = read_ledger(&fs::read_to_string(&ledger)?)?;
            emit(&emit_summary(&records, format)?);
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GROUPPROB_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::InvalidParameter(format!("GROUPPROB_THREADS=`{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        if cli.list_kinds {
            let kinds: Vec<Value> = KINDS.iter().map(|(k, d)| json!({"kind": k, "description": d})).collect();
            print(&kinds);
            return Ok(0);
        }
        match cli.command {
            Some(c) => run(c),
            None => Err(Error::InvalidParameter("no subcommand given (see --help)".into())),
        }
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({"error": {"code": e.code(), "message": e.to_string()}}));
            ExitCode::from(1)
        }
    }
}
