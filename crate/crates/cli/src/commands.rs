use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use agent_society::agent::write_personas;
use agent_society::backend::{Backend, MeterSnapshot, OracleProvider, Policy, StubProvider};
use agent_society::config::{build_topology, RunConfig};
use agent_society::eval::{self, export, PurchaseEvalConfig, DEFAULT_SMOOTHING, STANDARD_SETTINGS};
use agent_society::graph::{compute_metrics, write_edge_list, TopologyKind, TransmissionRule};
use agent_society::rng::fnv1a;
use agent_society::sandbox::{
    self, fixtures, histories, load_catalog, load_purchases, load_snapshot, save_snapshot, Catalog, EventKind,
    EventLog, Polarity, PurchaseRecord, Snapshot, WorldState,
};

use crate::output::RunDir;
use crate::{OutArgs, UsageError};

fn args_hash(parts: &[&str]) -> u64 {
    fnv1a(parts.join("\u{1f}").as_bytes())
}

fn summary(dir: &mut RunDir, kind: &str, value: &serde_json::Value) -> Result<()> {
    dir.append("summary.jsonl", |w| Ok(export::write_summary_line(kind, value, w)?))
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: u32,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// ring_lattice, small_world, random or complete.
    #[arg(long, default_value = "small_world")]
    kind: TopologyKind,
}

pub fn gen_graph(out: &OutArgs, a: GenGraphArgs) -> Result<PathBuf> {
    let g = build_topology(a.kind, a.n, a.k, a.p, a.seed)?;
    let metrics = compute_metrics(&g);
    let hash = args_hash(&[
        "gen-graph",
        &a.n.to_string(),
        &a.k.to_string(),
        &a.p.to_string(),
        &a.seed.to_string(),
        a.kind.as_str(),
    ]);
    let mut dir = RunDir::create(out, hash)?;
    dir.write("edges.txt", |w| Ok(write_edge_list(&g, w)?))?;
    summary(
        &mut dir,
        "graph",
        &json!({
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "kind": g.kind(),
            "metrics": metrics,
        }),
    )?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    config: Option<PathBuf>,
    /// Continue from a snapshot written by an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Override `run.rounds`.
    #[arg(long)]
    rounds: Option<u32>,
    /// Override `society.agents`.
    #[arg(long)]
    agents: Option<usize>,
    /// Override `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `run.fast_memory`.
    #[arg(long)]
    fast_memory: Option<bool>,
    /// Pause after this many rounds in total; the snapshot can be resumed.
    #[arg(long)]
    stop_after: Option<u32>,
}

pub fn run(out: &OutArgs, a: RunArgs) -> Result<PathBuf> {
    let (cfg, mut world, backend) = match (&a.resume, &a.config) {
        (Some(snap_path), _) => {
            let snap = load_snapshot(snap_path)?;
            let mut cfg = snap.config;
            if let Some(r) = a.rounds {
                cfg.run.rounds = r;
            }
            cfg.validate()?;
            let backend = cfg.backend.build()?;
            backend.meter().restore(&snap.meter);
            (cfg, snap.world, backend)
        }
        (None, Some(path)) => {
            let mut cfg = RunConfig::load(path)?;
            if let Some(r) = a.rounds {
                cfg.run.rounds = r;
            }
            if let Some(n) = a.agents {
                cfg.society.agents = n;
            }
            if let Some(s) = a.seed {
                cfg.run.seed = s;
            }
            if let Some(f) = a.fast_memory {
                cfg.run.fast_memory = f;
            }
            cfg.validate()?;
            let backend = cfg.backend.build()?;
            let world = WorldState::initialize(&cfg, cfg.load_catalog()?, &backend)?;
            (cfg, world, backend)
        }
        (None, None) => return Err(UsageError("run needs a config file or --resume".into()).into()),
    };
    let target = a.stop_after.map_or(cfg.run.rounds, |s| s.min(cfg.run.rounds));
    world.run_until(target, &backend, &cfg)?;

    let meter = backend.meter().snapshot();
    let mut dir = RunDir::create(out, cfg.hash())?;
    dir.write_bytes("config.toml", cfg.to_toml_string()?.as_bytes())?;
    dir.write("events.jsonl", |w| Ok(world.log.write_jsonl(w)?))?;
    let personas: Vec<_> = world.agents.iter().map(|s| s.persona.clone()).collect();
    dir.write("personas.jsonl", |w| Ok(write_personas(&personas, w)?))?;
    dir.write_bytes("meter.json", serde_json::to_string_pretty(&meter)?.as_bytes())?;
    let digest = format!("{:016x}", world.log_digest());
    let done = world.round;
    let purchases = world.ledger.len();
    let decisions = world.log.count(EventKind::Decision);
    save_snapshot(
        &Snapshot {
            config: cfg.clone(),
            world,
            meter: meter.clone(),
        },
        dir.file("snapshot.snap"),
    )?;
    dir.record("snapshot.snap");
    summary(
        &mut dir,
        "run",
        &json!({
            "rounds_completed": done,
            "rounds_configured": cfg.run.rounds,
            "decisions": decisions,
            "purchases": purchases,
            "calls": meter.calls,
            "tokens": meter.total.total(),
            "log_digest": digest,
        }),
    )?;
    dir.finish()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    GroundTruth,
    UniformRandom,
    Imitate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarityArg {
    Positive,
    Negative,
}

#[derive(Debug, Args)]
pub struct EvalPurchaseArgs {
    /// Run configuration supplying backend, memory and agent settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Answer selections with a scripted policy instead of the configured backend.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    policy_seed: u64,
    /// Settings such as `1@6,3@10`; all four standard settings by default.
    #[arg(long, value_delimiter = ',')]
    settings: Vec<String>,
    /// Synthetic users (ignored with --purchases).
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Product catalog (JSON lines); the bundled one by default.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Purchase log (JSON lines) to take user histories from.
    #[arg(long)]
    purchases: Option<PathBuf>,
    /// Social information about each user's first held-out product.
    #[arg(long, value_enum)]
    injection: Option<PolarityArg>,
    #[arg(long)]
    no_fast_memory: bool,
}

fn parse_setting(s: &str) -> Result<(usize, usize)> {
    let bad = || UsageError(format!("setting {s:?} is not of the form a@n with 0 < a < n"));
    let (a, n) = s.trim().split_once('@').ok_or_else(bad)?;
    let a: usize = a.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if a == 0 || n <= a {
        return Err(bad().into());
    }
    Ok((a, n - a))
}

fn catalog_or_fixture(path: &Option<PathBuf>) -> Result<Catalog> {
    Ok(match path {
        Some(p) => load_catalog(p)?,
        None => fixtures::catalog(),
    })
}

pub fn eval_purchase(out: &OutArgs, a: EvalPurchaseArgs) -> Result<PathBuf> {
    let cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let catalog = match &a.catalog {
        Some(p) => load_catalog(p)?,
        None => cfg.load_catalog()?,
    };
    let settings: Vec<(usize, usize)> = if a.settings.is_empty() {
        STANDARD_SETTINGS.to_vec()
    } else {
        a.settings.iter().map(|s| parse_setting(s)).collect::<Result<_>>()?
    };
    let backend = match a.policy {
        None => cfg.backend.build()?,
        Some(p) => {
            let policy = match p {
                PolicyArg::GroundTruth => Policy::GroundTruth,
                PolicyArg::UniformRandom => Policy::UniformRandom { seed: a.policy_seed },
                PolicyArg::Imitate => Policy::Imitate {
                    alpha: a.alpha,
                    seed: a.policy_seed,
                },
            };
            policy.validate().map_err(agent_society::Error::from)?;
            let mut o = OracleProvider::new(policy);
            o.fallback = StubProvider::new(cfg.backend.stub.clone());
            Backend::new(o)
        }
    };
    let max_a = settings.iter().map(|s| s.0).max().unwrap_or(1);
    let users = match &a.purchases {
        Some(p) => histories(&load_purchases(p)?).into_iter().collect::<Vec<_>>(),
        None => eval::synthetic_histories(&catalog, a.users, max_a + 3, 0.8, a.seed)?,
    };
    let injection = a.injection.map(|p| match p {
        PolarityArg::Positive => Polarity::Positive,
        PolarityArg::Negative => Polarity::Negative,
    });

    let hash = args_hash(&[
        "eval-purchase",
        &format!("{:016x}", cfg.hash()),
        &format!("{:?}", a.policy),
        &a.alpha.to_string(),
        &a.policy_seed.to_string(),
        &format!("{settings:?}"),
        &a.users.to_string(),
        &a.seed.to_string(),
        &format!("{injection:?}"),
        &a.no_fast_memory.to_string(),
    ]);
    let mut dir = RunDir::create(out, hash)?;
    let mut reports = Vec::new();
    for (sa, sb) in settings {
        let mut pc = PurchaseEvalConfig::new(sa, sb, a.seed);
        pc.fast_memory = !a.no_fast_memory;
        pc.injection = injection;
        pc.memory = cfg.memory.clone();
        pc.agent = cfg.agent.clone();
        // keep only users with enough history for this setting
        let eligible: Vec<_> = users.iter().filter(|(_, h)| h.len() > sa).cloned().collect();
        let result = eval::run_purchase_eval(&catalog, &eligible, &pc, &backend)?;
        let recount = eval::recount_from_log(&result.log)?;
        if (recount - result.report.accuracy).abs() > 1e-9 {
            anyhow::bail!("accuracy {} disagrees with log recount {recount}", result.report.accuracy);
        }
        let setting = result.report.setting();
        dir.write(&format!("selections-{}.jsonl", setting.replace('@', "at")), |w| {
            Ok(result.log.write_jsonl(w)?)
        })?;
        summary(
            &mut dir,
            "purchase",
            &json!({
                "setting": setting,
                "users": result.report.users.len(),
                "abstentions": result.report.abstentions,
                "accuracy": result.report.accuracy,
            }),
        )?;
        reports.push(result.report);
    }
    dir.write("accuracy.csv", |w| Ok(export::write_accuracy_csv(&reports, w)?))?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct EvalPmiArgs {
    /// Purchase log (JSON lines with user_id, product_id, timestamp).
    #[arg(long, conflicts_with = "events")]
    ledger: Option<PathBuf>,
    /// Event log of a simulation run; its purchase events form the ledger.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
}

fn read_events(path: &PathBuf) -> Result<EventLog> {
    let f = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow::Error::from(agent_society::Error::NotFound(path.clone())),
        _ => anyhow::Error::from(e).context(format!("opening {}", path.display())),
    })?;
    Ok(EventLog::read_jsonl(BufReader::new(f))?)
}

fn ledger_from_events(log: &EventLog) -> Vec<PurchaseRecord> {
    log.of_kind(EventKind::Purchase)
        .filter_map(|e| {
            Some(PurchaseRecord {
                user_id: format!("A{:06}", e.agent?),
                product_id: e.payload["product_id"].as_str()?.to_string(),
                timestamp: u64::from(e.round),
            })
        })
        .collect()
}

pub fn eval_pmi(out: &OutArgs, a: EvalPmiArgs) -> Result<PathBuf> {
    let catalog = catalog_or_fixture(&a.catalog)?;
    let ledger = match (&a.ledger, &a.events) {
        (Some(p), _) => load_purchases(p)?,
        (None, Some(p)) => ledger_from_events(&read_events(p)?),
        (None, None) => return Err(UsageError("eval-pmi needs --ledger or --events".into()).into()),
    };
    let m = eval::pmi_matrix(&ledger, &eval::category_map(&catalog), a.smoothing)?;
    let source = a.ledger.as_ref().or(a.events.as_ref()).map(|p| p.display().to_string()).unwrap_or_default();
    let mut dir = RunDir::create(out, args_hash(&["eval-pmi", &source, &a.smoothing.to_string()]))?;
    dir.write("pmi.csv", |w| Ok(export::write_pmi_csv(&m, w)?))?;
    summary(
        &mut dir,
        "pmi",
        &json!({ "users": m.users, "categories": m.categories.len(), "smoothing": m.smoothing, "symmetric": m.is_symmetric() }),
    )?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct EvalConcentrationArgs {
    /// Agent scales of the herd market.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
    scales: Vec<usize>,
    /// Runs per scale, seeded 0, 1, ...
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    rounds: u32,
    #[arg(long, default_value_t = 0.5)]
    popularity: f64,
    #[arg(long, default_value_t = 50)]
    catalog_size: usize,
    /// Number of top products reported.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Event logs of simulation runs to report on instead of the herd market.
    #[arg(long, value_delimiter = ',')]
    events: Vec<PathBuf>,
}

pub fn eval_concentration(out: &OutArgs, a: EvalConcentrationArgs) -> Result<PathBuf> {
    let ledgers: Vec<(usize, Vec<String>)> = if a.events.is_empty() {
        let catalog = fixtures::catalog();
        let mut cfg = eval::HerdConfig {
            rounds: a.rounds,
            alpha: a.alpha,
            catalog_size: a.catalog_size,
            ..Default::default()
        };
        cfg.recommender.popularity = a.popularity;
        let mut v = Vec::new();
        for &scale in &a.scales {
            for seed in 0..a.seeds {
                v.push((scale, eval::herd_ledger(&catalog, scale, &cfg, seed)?));
            }
        }
        v
    } else {
        let mut v = Vec::new();
        for p in &a.events {
            let log = read_events(p)?;
            let agents = log
                .of_kind(EventKind::RunStart)
                .next()
                .and_then(|e| e.payload["agents"].as_u64())
                .with_context(|| format!("{} has no run_start event", p.display()))?;
            let ids = ledger_from_events(&log).into_iter().map(|r| r.product_id).collect();
            v.push((agents as usize, ids));
        }
        v
    };
    let report = eval::concentration_report(&ledgers, a.top)?;
    let hash = args_hash(&[
        "eval-concentration",
        &format!("{:?}", a.scales),
        &a.seeds.to_string(),
        &a.alpha.to_string(),
        &a.rounds.to_string(),
        &a.popularity.to_string(),
        &a.catalog_size.to_string(),
        &a.top.to_string(),
        &format!("{:?}", a.events),
    ]);
    let mut dir = RunDir::create(out, hash)?;
    dir.write("concentration.csv", |w| Ok(export::write_concentration_csv(&report, w)?))?;
    summary(&mut dir, "concentration", &json!({ "top1": report.top1() }))?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct EvalTokensArgs {
    /// Run this configuration twice, with and without fast memory.
    #[arg(long, conflicts_with_all = ["with", "without"])]
    config: Option<PathBuf>,
    /// Meter export of a run with fast memory.
    #[arg(long, requires = "without")]
    with: Option<PathBuf>,
    /// Meter export of the same run without fast memory.
    #[arg(long, requires = "with")]
    without: Option<PathBuf>,
}

fn read_meter(path: &PathBuf) -> Result<MeterSnapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => anyhow::Error::from(agent_society::Error::NotFound(path.clone())),
        _ => anyhow::Error::from(e),
    })?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: not a meter export: {e}", path.display())).into())
}

pub fn eval_tokens(out: &OutArgs, a: EvalTokensArgs) -> Result<PathBuf> {
    let (with, without, hash) = match (&a.config, &a.with, &a.without) {
        (Some(path), _, _) => {
            let cfg = RunConfig::load(path)?;
            let mut meters = Vec::new();
            for fast in [true, false] {
                let mut c = cfg.clone();
                c.run.fast_memory = fast;
                let backend = c.backend.build()?;
                sandbox::run_simulation(&c, c.load_catalog()?, &backend)?;
                meters.push(backend.meter().snapshot());
            }
            let without = meters.pop().expect("two runs");
            let with = meters.pop().expect("two runs");
            (with, without, args_hash(&["eval-tokens", &format!("{:016x}", cfg.hash())]))
        }
        (None, Some(w), Some(wo)) => (
            read_meter(w)?,
            read_meter(wo)?,
            args_hash(&["eval-tokens", &w.display().to_string(), &wo.display().to_string()]),
        ),
        _ => return Err(UsageError("eval-tokens needs --config or both --with and --without".into()).into()),
    };
    let t = eval::token_efficiency(&with, &without)?;
    let mut dir = RunDir::create(out, hash)?;
    dir.write("tokens.csv", |w| Ok(export::write_tokens_csv(&t, w)?))?;
    summary(
        &mut dir,
        "tokens",
        &json!({ "with_fast": t.with_fast, "without_fast": t.without_fast, "reduction": t.reduction }),
    )?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct EvalNetworkArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: u32,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 6)]
    rounds: u32,
    /// Number of seeds, 0..seeds.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Neighbours told per informed node and round; all neighbours when absent.
    #[arg(long)]
    fanout: Option<usize>,
    /// Round at which the topologies are compared.
    #[arg(long, default_value_t = 3)]
    compare_round: u32,
}

pub fn eval_network(out: &OutArgs, a: EvalNetworkArgs) -> Result<PathBuf> {
    let rule = a.fanout.map_or(TransmissionRule::AllNeighbors, TransmissionRule::Fanout);
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let report = eval::dissemination_report(a.n, a.k, a.p, a.rounds, &seeds, rule)?;
    let hash = args_hash(&[
        "eval-network",
        &a.n.to_string(),
        &a.k.to_string(),
        &a.p.to_string(),
        &a.rounds.to_string(),
        &a.seeds.to_string(),
        &format!("{rule:?}"),
        &a.compare_round.to_string(),
    ]);
    let mut dir = RunDir::create(out, hash)?;
    dir.write("network.csv", |w| Ok(export::write_network_csv(&report, w)?))?;
    let at = |k: TopologyKind| report.trace(k).map(|t| t.at(a.compare_round)).unwrap_or_default();
    let (rnd, sw, ring) = (at(TopologyKind::Random), at(TopologyKind::SmallWorld), at(TopologyKind::RingLattice));
    let mut tests = BTreeMap::new();
    if seeds.len() >= 2 {
        tests.insert("random_gt_small_world", eval::welch_greater(&rnd, &sw)?);
        tests.insert("small_world_gt_ring_lattice", eval::welch_greater(&sw, &ring)?);
    }
    summary(
        &mut dir,
        "network",
        &json!({ "compare_round": a.compare_round, "mean_reach": report.traces.iter().map(|t| (t.topology, t.mean_reach[a.compare_round.min(a.rounds) as usize])).collect::<Vec<_>>(), "tests": tests }),
    )?;
    dir.finish()
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Event log to re-derive statistics from.
    events: PathBuf,
}

pub fn replay(out: &OutArgs, a: ReplayArgs) -> Result<PathBuf> {
    let log = read_events(&a.events)?;
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    let mut calls = 0u64;
    let mut tokens = 0u64;
    for e in log.events() {
        *kinds.entry(serde_json::to_value(e.kind)?.as_str().unwrap_or("?").to_string()).or_default() += 1;
        if e.kind == EventKind::BackendCalls {
            for c in e.payload["calls"].as_array().into_iter().flatten() {
                calls += 1;
                tokens += c["usage"]["input_tokens"].as_u64().unwrap_or(0) + c["usage"]["output_tokens"].as_u64().unwrap_or(0);
            }
        }
    }
    let purchases = ledger_from_events(&log);
    let mut by_product: BTreeMap<&str, u64> = BTreeMap::new();
    for p in &purchases {
        *by_product.entry(&p.product_id).or_default() += 1;
    }
    let accuracy = if log.count(EventKind::Selection) > 0 {
        Some(eval::recount_from_log(&log)?)
    } else {
        None
    };
    let bytes = log.to_jsonl();
    let mut dir = RunDir::create(out, args_hash(&["replay", &format!("{:016x}", fnv1a(&bytes))]))?;
    dir.write(
        "replay.json",
        |w| Ok(serde_json::to_writer_pretty(&mut *w, &json!({ "events": log.len(), "kinds": kinds, "purchases": by_product }))?),
    )?;
    summary(
        &mut dir,
        "replay",
        &json!({
            "events": log.len(),
            "purchases": purchases.len(),
            "backend_calls": calls,
            "tokens": tokens,
            "accuracy": accuracy,
            "log_digest": format!("{:016x}", agent_society::rng::mix64(fnv1a(&bytes))),
        }),
    )?;
    dir.finish()
}
