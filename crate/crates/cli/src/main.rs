use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wfgraph::absgraph::{TaggedGraph, DEFAULT_NUM};
use wfgraph::bakery::{bake_all_done, Bakery, Params, RandomOracle, ReferenceOracle};
use wfgraph::bitblast::bitblast;
use wfgraph::certify::{certificate, certify_map};
use wfgraph::enumerate::Backend;
use wfgraph::model::{parse_model, Model};
use wfgraph::pipeline::{build_graph, node_sort, relation_query, tag_graph};
use wfgraph::synth::{synthesize_omap, Omap};

#[derive(Parser)]
#[command(name = "wfgraph", version, about = "Well-founded measures for finite-state models via abstract graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and sort-check a model.
    Check(Common),
    /// Build the abstract graph of a map and list its nodes.
    Reach(Stage),
    /// Build and tag the abstract graph of a map.
    Order(Stage),
    /// Synthesize measure descriptors for a map.
    Synth(Stage),
    /// Check assumptions, the omap and measure decrease against the model.
    Certify(CertifyArgs),
    /// Simulate the Bakery processes under a random or reference scheduler.
    Run(RunArgs),
    /// Render a tagged graph in Graphviz format.
    ExportDot(Stage),
}

#[derive(Args, Clone)]
struct Common {
    /// Model file; the shipped Bakery model when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Process count N.
    #[arg(long)]
    n: Option<u64>,
    /// Runs per process R.
    #[arg(long)]
    runs: Option<u64>,
    /// Counter width W.
    #[arg(long)]
    width: Option<u64>,
    /// Enumeration backend: exhaustive, sat or ipasir.
    #[arg(long, default_value = "exhaustive")]
    backend: String,
    /// Values per enumeration query before giving up.
    #[arg(long, default_value_t = DEFAULT_NUM)]
    num: usize,
}

#[derive(Args)]
struct Stage {
    #[command(flatten)]
    common: Common,
    /// Map name as declared in the model.
    #[arg(long)]
    map: String,
    /// Tagged graph JSON to use instead of rebuilding it.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the DIMACS CNF of the map's successor query here.
    #[arg(long)]
    dump_cnf: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Certify only this map; every map when omitted.
    #[arg(long)]
    map: Option<String>,
    /// Omap JSON; maps it does not fit get a freshly synthesized omap.
    #[arg(long)]
    omap: Option<PathBuf>,
    /// Tagged graph JSON for the certified map.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Certificate output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 2)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    runs: u64,
    #[arg(long, default_value_t = 3)]
    width: u32,
    /// Seed of the random scheduler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Always step the reference witness instead of a random ready process.
    #[arg(long)]
    reference: bool,
    /// Trace output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "exhaustive")]
    backend: String,
}

/// A verdict that is not a tool error.
enum Outcome {
    Ok,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn backend(name: &str) -> Result<Backend> {
    Ok(Backend::by_name(name)?)
}

fn load_model(c: &Common) -> Result<Model> {
    let text = match &c.model {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => wfgraph::BAKERY_SOURCE.to_string(),
    };
    let model = parse_model(&text)?;
    let mut over = BTreeMap::new();
    for (k, v) in [("N", c.n), ("R", c.runs), ("W", c.width)] {
        if let Some(v) = v {
            if v < 1 {
                bail!("parameter {k} must be at least 1");
            }
            over.insert(k.to_string(), v);
        }
    }
    if c.num < 1 {
        bail!("--num must be at least 1");
    }
    Ok(if over.is_empty() { model } else { model.with_params(&over)? })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_graph(path: &Path, model: &Model, map: &str) -> Result<TaggedGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(TaggedGraph::from_json(&text, &node_sort(model.map(map)?))?)
}

fn tagged(s: &Stage, model: &Model, be: &Backend) -> Result<TaggedGraph> {
    match &s.graph {
        Some(p) => read_graph(p, model, &s.map),
        None => {
            let map = model.map(&s.map)?;
            let g = build_graph(model, map, s.common.num, be)?;
            Ok(tag_graph(model, map, &g, be)?)
        }
    }
}

fn dump_cnf(s: &Stage, model: &Model) -> Result<()> {
    if let Some(p) = &s.dump_cnf {
        let q = relation_query(model, model.map(&s.map)?)?;
        let c = bitblast(&q.vars, &q.hyp, &q.trm)?;
        fs::write(p, c.dimacs(true)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Check(c) => {
            let m = load_model(&c)?;
            let params: Vec<String> = m.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("model {} ok", m.name);
            println!("params {}", params.join(" "));
            for map in &m.maps {
                println!("map {} ({} measures)", map.name, map.ord.measures.len());
            }
            Ok(Outcome::Ok)
        }
        Cmd::Reach(s) => {
            let m = load_model(&s.common)?;
            let be = backend(&s.common.backend)?;
            dump_cnf(&s, &m)?;
            let g = build_graph(&m, m.map(&s.map)?, s.common.num, &be)?;
            let text: String = (0..g.nodes.len()).map(|i| g.node_text(i) + "\n").collect();
            emit(&s.out, &text)?;
            eprintln!("{} nodes, {} arcs", g.nodes.len(), g.num_arcs());
            Ok(Outcome::Ok)
        }
        Cmd::Order(s) => {
            let m = load_model(&s.common)?;
            let be = backend(&s.common.backend)?;
            dump_cnf(&s, &m)?;
            let g = tagged(&s, &m, &be)?;
            emit(&s.out, &g.to_json())?;
            Ok(Outcome::Ok)
        }
        Cmd::Synth(s) => {
            let m = load_model(&s.common)?;
            let be = backend(&s.common.backend)?;
            let g = tagged(&s, &m, &be)?;
            match synthesize_omap(&g) {
                Ok(o) => {
                    emit(&s.out, &o.to_json())?;
                    eprint!("{}", o.table());
                    Ok(Outcome::Ok)
                }
                Err(c) => {
                    eprint!("{}", c.report(&g));
                    emit(&s.out, &c.to_json(&g))?;
                    Ok(Outcome::Fail)
                }
            }
        }
        Cmd::Certify(a) => certify(a),
        Cmd::Run(r) => {
            let be = backend(&r.backend)?;
            let b = Bakery::new(Params { n: r.n, r: r.runs, w: r.width }, &be)?;
            let st = b.init_state();
            let rep = if r.reference {
                b.bake_run(&st, &mut ReferenceOracle)
            } else {
                b.bake_run(&st, &mut RandomOracle::seeded(r.seed))
            };
            match rep {
                Ok(rep) => {
                    emit(&r.out, &rep.trace())?;
                    eprintln!(
                        "{} steps, all done: {}",
                        rep.steps.len(),
                        bake_all_done(&rep.final_state.trs)
                    );
                    Ok(Outcome::Ok)
                }
                Err(wfgraph::Error::Monitor(msg)) => {
                    eprintln!("monitor violation: {msg}");
                    Ok(Outcome::Fail)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::ExportDot(s) => {
            let m = load_model(&s.common)?;
            let be = backend(&s.common.backend)?;
            let g = tagged(&s, &m, &be)?;
            emit(&s.out, &g.to_dot())?;
            Ok(Outcome::Ok)
        }
    }
}

fn certify(a: CertifyArgs) -> Result<Outcome> {
    let m = load_model(&a.common)?;
    let be = backend(&a.common.backend)?;
    let names: Vec<String> = match &a.map {
        Some(n) => vec![m.map(n)?.name.clone()],
        None => m.maps.iter().map(|x| x.name.clone()).collect(),
    };
    if a.graph.is_some() && names.len() != 1 {
        bail!("--graph needs --map");
    }
    let omap_text = match &a.omap {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let mut used_omap = false;
    let mut certs = Vec::new();
    for name in &names {
        let map = m.map(name)?;
        let g = match &a.graph {
            Some(p) => read_graph(p, &m, name)?,
            None => {
                let g = build_graph(&m, map, a.common.num, &be)?;
                tag_graph(&m, map, &g, &be)?
            }
        };
        let given = omap_text.as_deref().and_then(|t| Omap::from_json(t, &node_sort(map)).ok());
        let o = match given {
            Some(o) => {
                used_omap = true;
                o
            }
            None => match synthesize_omap(&g) {
                Ok(o) => o,
                Err(c) => {
                    eprint!("{}", c.report(&g));
                    return Ok(Outcome::Fail);
                }
            },
        };
        let c = certify_map(&m, name, &g, &o, a.common.num, &be)?;
        for ch in &c.checks {
            eprintln!("{:<8} {:<18} {:?} ({} cases)", c.map, ch.name, ch.verdict, ch.cases);
            if let Some(w) = &ch.witness {
                eprintln!("         {w}");
            }
        }
        if let Some(i) = &c.assumed_invariant {
            eprintln!("{:<8} {:<18} {:?} ({} nodes)", c.map, i.name, i.verdict, i.nodes);
        }
        certs.push(c);
    }
    if omap_text.is_some() && !used_omap {
        return Err(anyhow!("the omap does not fit any certified map"));
    }
    let cert = certificate(&m, certs, &be);
    emit(&a.out, &cert.to_json())?;
    Ok(if cert.passed() { Outcome::Ok } else { Outcome::Fail })
}
