use std::fs;
use std::io::Write as _;
use std::path::Path;

use arbor::cayley::{cayley_graph, CayleySubgraph};
use arbor::constellations::{dissolves_all, DissolveReport, Mode, Verdict};
use arbor::extension::{s_equal, CpExtension, SMode};
use arbor::groups::{builtin, GroupJson, DEFAULT_ENUM_BUDGET};
use arbor::stallings::GraphJson;
use arbor::tower::{rz_experiment, treelike_campaign, LevelOutcome, TowerConfig, TowerSpec};
use arbor::{Alphabet, CoreGraph, Error, FinGroup, LabeledGraph, Result, Word};
use serde_json::{json, Value};

use crate::{Cli, Command, GraphInput, Global, ModeArg, ModeArgs, TowerArgs};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass = 0,
    Fail = 1,
    Budget = 2,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => 2,
        Error::TheoremViolation(_) => 1,
        _ => 3,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn emit(global: &Global, command: &str, mut report: Value) -> Result<()> {
    let obj = report.as_object_mut().expect("reports are objects");
    obj.insert("schema".into(), json!(SCHEMA));
    obj.insert("command".into(), json!(command));
    let text = serde_json::to_string_pretty(&report)?;
    if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(Error::Input(format!("stdout: {e}")));
        }
    }
    if let Some(out) = &global.out {
        write(out, &(text + "\n"))?;
    }
    Ok(())
}

fn budget_enum(global: &Global) -> u64 {
    global.budget_enum.unwrap_or(DEFAULT_ENUM_BUDGET)
}

/// Builtin name, a `.json` group file, or `SPEC^Cp` for `SPEC^{A,C_p}`.
pub fn parse_group(spec: &str, budget: u64) -> Result<FinGroup> {
    if let Some((inner, p)) = spec.rsplit_once("^C") {
        let p: u32 = p.parse().map_err(|_| Error::Input(format!("bad prime in {spec:?}")))?;
        let base = parse_group(inner, budget)?;
        return CpExtension::new(base, p)?.enumerate(budget).map(|g| g.with_budget(budget));
    }
    if spec.ends_with(".json") {
        let path = Path::new(spec);
        let json: GroupJson = serde_json::from_str(&read(path)?)?;
        let name = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok(FinGroup::from_json(&json, name)?.with_budget(budget));
    }
    builtin::by_name(spec)
        .map(|g| g.with_budget(budget))
        .ok_or_else(|| Error::Input(format!("unknown group {spec:?} (builtins: {})", builtin::NAMES.join(", "))))
}

fn parse_alphabet(s: &str) -> Result<Alphabet> {
    Alphabet::new(s.split(',').map(str::trim))
}

fn input_graph(input: &GraphInput) -> Result<LabeledGraph> {
    match &input.file {
        Some(path) => {
            let json: GraphJson = serde_json::from_str(&read(path)?)?;
            LabeledGraph::from_json(&json)
        }
        None => {
            if input.gens.is_empty() {
                return Err(Error::Input("give a graph file or --gens".into()));
            }
            let alphabet = parse_alphabet(&input.alphabet)?;
            let gens = input.gens.iter().map(|g| alphabet.parse_word(g)).collect::<Result<Vec<_>>>()?;
            LabeledGraph::bouquet(alphabet, &gens)
        }
    }
}

fn graph_outputs(input: &GraphInput, g: &LabeledGraph, name: &str) -> Result<Value> {
    let json = g.to_json();
    if let Some(p) = &input.dot {
        write(p, &g.to_dot(name))?;
    }
    if let Some(p) = &input.graph_out {
        write(p, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    }
    Ok(json!({
        "graph": json,
        "vertices": g.vertices().len(),
        "edges": g.edges().len(),
    }))
}

fn edges_json(g: &FinGroup, s: &CayleySubgraph) -> Value {
    s.edges.iter().map(|e| json!([e.src, g.alphabet().name(e.label)])).collect()
}

fn dissolve_json(h: &FinGroup, g: &FinGroup, r: &DissolveReport) -> Result<Value> {
    let alphabet = g.alphabet();
    let failures = r
        .failures
        .iter()
        .map(|f| {
            let c = &f.constellation;
            let mut v = json!({
                "g": c.g,
                "g_word": alphabet.format_word(g.witness(c.g)?),
                "x_edges": edges_json(g, &c.x),
                "t_edges": edges_json(g, &c.t),
            });
            let obj = v.as_object_mut().expect("object");
            match &f.verdict {
                Verdict::Counterexample { u, v } => {
                    obj.insert("verdict".into(), json!("counterexample"));
                    obj.insert("u".into(), json!(alphabet.format_word(u)));
                    obj.insert("v".into(), json!(alphabet.format_word(v)));
                }
                Verdict::Inconclusive { reason } => {
                    obj.insert("verdict".into(), json!("inconclusive"));
                    obj.insert("reason".into(), json!(reason));
                }
                Verdict::DissolvedCertified => {
                    obj.insert("verdict".into(), json!("dissolved"));
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "h": r.h,
        "h_order": h.order()?,
        "g": r.g,
        "g_order": g.order()?,
        "mode": r.mode,
        "constellations": r.constellations,
        "dissolved": r.dissolved,
        "counterexamples": r.counterexamples,
        "inconclusive": r.inconclusive,
        "complete_proof": r.is_complete_proof(),
        "failures": failures,
        "passed": r.all_dissolved(),
    }))
}

fn mode_of(m: &ModeArgs, seed: u64, samples: usize, max_len: usize) -> Mode {
    match m.mode {
        ModeArg::Exhaustive => Mode::Exhaustive { edge_budget: m.edge_budget },
        ModeArg::Sampled => {
            Mode::Sampled { samples: m.samples.unwrap_or(samples), max_len: m.max_len.unwrap_or(max_len), seed }
        }
    }
}

fn tower_spec(args: &TowerArgs, global: &Global, defaults: Option<(&str, &[u32])>) -> Result<TowerSpec> {
    let mut config = match &args.config {
        Some(path) => toml::from_str::<TowerConfig>(&read(path)?)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?,
        None => {
            let base = args.base.clone().or_else(|| defaults.map(|d| d.0.to_string()));
            let primes = args.primes.as_ref().map(|_| Vec::new()).or_else(|| defaults.map(|d| d.1.to_vec()));
            let (Some(base), Some(primes)) = (base, primes) else {
                return Err(Error::Input("give --config or both --base and --primes".into()));
            };
            TowerConfig::new(base, primes)
        }
    };
    if let Some(b) = &args.base {
        config.base = b.clone();
    }
    if let Some(p) = &args.primes {
        config.primes = p
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| Error::Input(format!("bad prime {x:?}"))))
            .collect::<Result<_>>()?;
    }
    if let Some(s) = global.seed {
        config.seed = s;
    }
    if let Some(b) = global.budget_enum {
        config.budget_enum = b;
    }
    if let Some(b) = global.budget_homs {
        config.budget_homs = b;
    }
    if let Some(m) = global.max_level {
        config.max_level = m;
    }
    let base = parse_group(&config.base, config.budget_enum)?;
    TowerSpec::from_config_with_base(&config, base)
}

fn parse_gens(alphabet: &Alphabet, s: &str) -> Result<Vec<Word>> {
    s.split(',').filter(|g| !g.trim().is_empty()).map(|g| alphabet.parse_word(g.trim())).collect()
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let global = &cli.global;
    let seed = global.seed.unwrap_or(0);
    match &cli.command {
        Command::Fold(input) => {
            let g = input_graph(input)?.fold();
            let mut report = graph_outputs(input, &g, "folded")?;
            report["folded"] = json!(g.is_folded());
            emit(global, "fold", report)?;
            Ok(Outcome::Pass)
        }
        Command::Core(input) => {
            let core = CoreGraph::from_folded(&input_graph(input)?.fold())?;
            let g = core.graph().canonical_form();
            let mut report = graph_outputs(input, &g, "core")?;
            let alphabet = g.alphabet();
            report["rank"] = json!(core.rank());
            report["basis"] = json!(core.basis().iter().map(|w| alphabet.format_word(w)).collect::<Vec<_>>());
            emit(global, "core", report)?;
            Ok(Outcome::Pass)
        }
        Command::Member { graph, words } => {
            let json: GraphJson = serde_json::from_str(&read(graph)?)?;
            let core = CoreGraph::from_folded(&LabeledGraph::from_json(&json)?)?;
            let alphabet = core.graph().alphabet().clone();
            let results = words
                .iter()
                .map(|s| {
                    let w = alphabet.parse_word(s)?;
                    Ok(json!({
                        "word": s,
                        "reduced": alphabet.format_word(&w.reduce()),
                        "member": core.member(&w),
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            emit(global, "member", json!({ "results": results }))?;
            Ok(Outcome::Pass)
        }
        Command::Group { group, json_out, dot } => {
            let g = parse_group(group, budget_enum(global))?;
            let json = g.to_json();
            if let Some(p) = json_out {
                write(p, &(serde_json::to_string_pretty(&json)? + "\n"))?;
            }
            if let Some(p) = dot {
                write(p, &cayley_graph(&g)?.to_dot(&g, g.name(), None, None, None)?)?;
            }
            emit(
                global,
                "group",
                json!({
                    "name": g.name(),
                    "order": g.order()?,
                    "exponent": g.exponent()?,
                    "rank": g.rank(),
                    "separated": g.is_separated(),
                    "simple": g.is_simple()?,
                    "group": json,
                }),
            )?;
            Ok(Outcome::Pass)
        }
        Command::Extend { group, p, simple, eq, word, exact, witness_samples } => {
            let g = parse_group(group, budget_enum(global))?;
            let alphabet = g.alphabet().clone();
            let mut report = json!({ "group": g.name(), "separated": g.is_separated(), "seed": seed });
            if !g.is_separated() {
                let msg = "generators are not nontrivial and pairwise distinct; certificates are unavailable";
                eprintln!("warning: {msg}");
                report["warning"] = json!(msg);
            }
            let pairs = eq
                .chunks(2)
                .map(|c| Ok((alphabet.parse_word(&c[0])?, alphabet.parse_word(&c[1])?)))
                .collect::<Result<Vec<_>>>()?;
            match (p, simple) {
                (Some(p), None) => {
                    let ext = CpExtension::new(g.clone(), *p)?;
                    report["extension"] = json!(format!("C{p}"));
                    report["order"] = json!(ext.predicted_order()?.to_string());
                    report["equalities"] = pairs
                        .iter()
                        .map(|(u, v)| {
                            Ok(json!({
                                "u": alphabet.format_word(u),
                                "v": alphabet.format_word(v),
                                "equal": ext.evaluate(u)? == ext.evaluate(v)?,
                            }))
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into();
                    report["words"] = word
                        .iter()
                        .map(|s| {
                            let x = ext.evaluate(&alphabet.parse_word(s)?)?;
                            let cocycle: Vec<Value> =
                                x.cocycle.iter().map(|(e, v)| json!([e.src, alphabet.name(e.label), v])).collect();
                            Ok(json!({ "word": s, "base": x.base, "cocycle": cocycle }))
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into();
                }
                (None, Some(s)) => {
                    if !word.is_empty() {
                        return Err(Error::Input("--word needs --p (no normal form for general S)".into()));
                    }
                    let s = parse_group(s, budget_enum(global))?;
                    let mode = if *exact {
                        SMode::Exact { budget: global.budget_homs.unwrap_or(arbor::extension::DEFAULT_HOM_BUDGET) }
                    } else {
                        SMode::Witness { samples: *witness_samples, seed }
                    };
                    report["extension"] = json!(s.name());
                    report["mode"] = json!(mode);
                    report["equalities"] = pairs
                        .iter()
                        .map(|(u, v)| {
                            let verdict = s_equal(&g, &s, u, v, mode)?;
                            Ok(json!({
                                "u": alphabet.format_word(u),
                                "v": alphabet.format_word(v),
                                "distinct": verdict.is_distinct(),
                                "verdict": verdict,
                            }))
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into();
                }
                _ => return Err(Error::Input("give exactly one of --p and --S".into())),
            }
            emit(global, "extend", report)?;
            Ok(Outcome::Pass)
        }
        Command::Tower { tower, levels, identity, mode } => {
            let mut spec = tower_spec(tower, global, None)?;
            spec.identity |= *identity;
            let k = levels.unwrap_or(spec.top_level());
            let report = treelike_campaign(&spec, k, &mode_of(mode, spec.seed, spec.samples, spec.max_len))?;
            let level_json = report
                .levels
                .iter()
                .map(|l| {
                    let mut v = match &l.outcome {
                        LevelOutcome::Dissolve(d) => {
                            let g = if spec.identity { spec.base.clone() } else { spec.level_group(l.level)? };
                            let h = if spec.identity { g.clone() } else { spec.level_group(l.level + 1)? };
                            let mut v = dissolve_json(&h, &g, d)?;
                            v["outcome"] = json!("dissolve");
                            v
                        }
                        other => serde_json::to_value(other)?,
                    };
                    v["level"] = json!(l.level);
                    v["passed"] = json!(l.passed());
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            emit(
                global,
                "tower",
                json!({
                    "base": report.base,
                    "primes": report.primes,
                    "identity": report.identity,
                    "seed": report.seed,
                    "levels": level_json,
                    "budget_exceeded": report.budget_exceeded,
                    "passed": report.passed,
                }),
            )?;
            Ok(if report.levels.iter().any(|l| !l.passed() && !matches!(l.outcome, LevelOutcome::BudgetExceeded { .. })) {
                Outcome::Fail
            } else if report.budget_exceeded {
                Outcome::Budget
            } else {
                Outcome::Pass
            })
        }
        Command::Dissolve { h, g, mode } => {
            let budget = budget_enum(global);
            let (h, g) = (parse_group(h, budget)?, parse_group(g, budget)?);
            let report = dissolves_all(&h, &g, &mode_of(mode, seed, 10_000, 12))?;
            let mut v = dissolve_json(&h, &g, &report)?;
            v["seed"] = json!(seed);
            emit(global, "dissolve", v)?;
            Ok(if report.all_dissolved() { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Rz { tower, h1, h2, h3, word } => {
            let spec = tower_spec(tower, global, Some(("C2xC2", &[2])))?;
            let alphabet = spec.base.alphabet().clone();
            let cores = [Some(h1), h2.as_ref(), h3.as_ref()]
                .into_iter()
                .flatten()
                .map(|s| CoreGraph::of_subgroup(&alphabet, &parse_gens(&alphabet, s)?))
                .collect::<Result<Vec<_>>>()?;
            let w = alphabet.parse_word(word)?;
            let report = rz_experiment(&spec, &cores, &w)?;
            let mut v = serde_json::to_value(&report)?;
            v["base"] = json!(spec.base.name());
            v["primes"] = json!(spec.primes);
            emit(global, "rz", v)?;
            Ok(Outcome::Pass)
        }
    }
}
