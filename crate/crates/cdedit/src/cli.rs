//! Command-line front end.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use cdedit_core::audit::CredibilityLevel;
use cdedit_core::bilinear::{Backend, BackendKind, Bls12, MockBls};
use cdedit_core::chain::{BlockData, ChainConfig, Seal, Target, Transaction, TxBody};
use cdedit_core::policy::parse_policy;
use cdedit_core::system::{SystemConfig, SystemState};
use cdedit_core::token::{verify_token, EditRequest, EditType, PrivilegeToken};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::bench::{self, BenchOptions, BenchResult};
use crate::scenario::{parse_script, run_scenario, ScenarioOptions};
use crate::store::{read_json, write_json, Persisted, StateDir};

#[derive(Debug, Parser)]
#[command(name = "cdedit", version, about = "Policy-controlled editing of a permissioned ledger")]
pub struct Cli {
    /// State directory.
    #[arg(long, global = true, default_value = ".cdedit")]
    pub dir: PathBuf,
    /// Seed for randomness; fresh entropy when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Real,
    Mock,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Real => BackendKind::RealCurve,
            BackendArg::Mock => BackendKind::Mock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TypeArg {
    Tx,
    Bl,
}

impl From<TypeArg> for EditType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::Tx => EditType::Tx,
            TypeArg::Bl => EditType::Bl,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ledger operations.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Register owners and modifiers, issue attribute keys.
    #[command(subcommand)]
    Register(RegisterCmd),
    /// Privilege tokens.
    #[command(subcommand)]
    Token(TokenCmd),
    /// Audit reports.
    #[command(subcommand)]
    Audit(AuditCmd),
    /// Run a JSON scenario script.
    Run {
        script: PathBuf,
        #[arg(long, value_enum, default_value = "real")]
        backend: BackendArg,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmarks.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
pub enum ChainCmd {
    /// Create a fresh system and genesis block.
    Init {
        #[arg(long, value_enum, default_value = "real")]
        backend: BackendArg,
        /// Difficulty target exponent: D = 2^bits.
        #[arg(long, default_value_t = 248)]
        target_bits: u32,
        #[arg(long, default_value_t = 1 << 20)]
        max_hash_queries: u64,
        /// Replace existing state.
        #[arg(long)]
        force: bool,
    },
    /// Queue a transaction; mutable when both --owner and --policy are given.
    AddTx {
        #[arg(long)]
        payload: String,
        #[arg(long)]
        owner: Option<String>,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Mine queued transactions; a mutable block when --owner and --policy are given.
    Mine {
        #[arg(long)]
        owner: Option<String>,
        #[arg(long)]
        policy: Option<String>,
    },
    /// Re-open a mutable transaction to a new payload.
    EditTx {
        #[arg(long)]
        tx: u64,
        #[arg(long)]
        payload: String,
        #[arg(long)]
        token: PathBuf,
        #[arg(long)]
        modifier: String,
    },
    /// Rewrite transactions of a mutable block.
    EditBlock {
        #[arg(long)]
        height: u64,
        /// `ID=PAYLOAD`, repeatable.
        #[arg(long = "replace", required = true)]
        replace: Vec<String>,
        #[arg(long)]
        token: PathBuf,
        #[arg(long)]
        modifier: String,
    },
    Validate,
    Show {
        #[arg(long)]
        height: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RegisterCmd {
    Owner { name: String },
    Modifier {
        name: String,
        /// Comma-separated attribute set.
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
        #[arg(long, default_value = "m_1T")]
        level: CredibilityLevel,
    },
    /// Issue an attribute key to a registered modifier.
    Keygen { name: String },
}

#[derive(Debug, Subcommand)]
pub enum TokenCmd {
    Request {
        #[arg(long = "type", value_enum)]
        edit_type: TypeArg,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        index: u64,
        #[arg(long)]
        deposit: u64,
        #[arg(long)]
        modifier: String,
    },
    Verify { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum AuditCmd {
    Report {
        #[arg(long)]
        edit: u64,
        #[arg(long, default_value = "reporter")]
        reporter: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Scaling,
    Editcost,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "real")]
    pub backend: BackendArg,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Axis points, e.g. 10,20,...,100.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80,90,100")]
    pub points: Vec<usize>,
    /// Edit counts for the editcost suite.
    #[arg(long, value_delimiter = ',', default_value = "1,4,8,16,32")]
    pub n: Vec<u32>,
    /// Attribute count for the editcost suite.
    #[arg(long, default_value_t = 100)]
    pub attributes: usize,
    /// Devices registered during Setup in the editcost suite.
    #[arg(long, default_value_t = 120)]
    pub devices: usize,
    /// Passes over every edit-cost workflow; totals are averaged.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Also draw the series to this SVG file.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn rng_for(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

pub fn run(cli: Cli) -> Result<i32> {
    let dir = StateDir::new(&cli.dir);
    match cli.command {
        Command::Chain(ChainCmd::Init { backend, target_bits, max_hash_queries, force }) => {
            if dir.exists() && !force {
                bail!("{} already holds state; pass --force to replace it", dir.root().display());
            }
            let config = SystemConfig {
                chain: ChainConfig { target: Target::pow2(target_bits.min(256)), max_hash_queries },
                ..SystemConfig::default()
            };
            match BackendKind::from(backend) {
                BackendKind::RealCurve => init::<Bls12>(&dir, config, cli.seed),
                BackendKind::Mock => init::<MockBls>(&dir, config, cli.seed),
            }
        }
        Command::Run { script, backend, out } => {
            let text = fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let steps = parse_script(&text)?;
            let options = ScenarioOptions { seed: cli.seed.unwrap_or(1), ..ScenarioOptions::default() };
            let transcript = match BackendKind::from(backend) {
                BackendKind::RealCurve => run_scenario::<Bls12>(&steps, &options)?,
                BackendKind::Mock => run_scenario::<MockBls>(&steps, &options)?,
            };
            match out {
                Some(path) => write_json(&path, &transcript)?,
                None => print_json(&serde_json::to_value(&transcript)?),
            }
            Ok(0)
        }
        Command::Bench(args) => match BackendKind::from(args.backend) {
            BackendKind::RealCurve => bench_cmd::<Bls12>(&args, cli.seed),
            BackendKind::Mock => bench_cmd::<MockBls>(&args, cli.seed),
        },
        command => match dir.backend()? {
            BackendKind::RealCurve => stateful::<Bls12>(&dir, command, cli.seed),
            BackendKind::Mock => stateful::<MockBls>(&dir, command, cli.seed),
        },
    }
}

fn init<B: Backend>(dir: &StateDir, config: SystemConfig, seed: Option<u64>) -> Result<i32> {
    let mut rng = rng_for(seed);
    let state = SystemState::<B>::setup(config, &mut rng)?;
    let persisted = Persisted { backend: B::KIND, clock: unix_now(), state };
    dir.save(&persisted)?;
    print_json(&json!({
        "dir": dir.root(),
        "backend": B::KIND,
        "curve": persisted.state.params.curve,
        "genesis": hex::encode(persisted.state.chain.head().hash()),
    }));
    Ok(0)
}

fn load_token<B: Backend>(path: &Path) -> Result<PrivilegeToken<B>> {
    Ok(read_json(path)?)
}

fn stateful<B: Backend>(dir: &StateDir, command: Command, seed: Option<u64>) -> Result<i32> {
    let mut rng = rng_for(seed);
    let mut p = dir.load::<B>()?;
    p.clock = p.clock.max(unix_now());
    let now = p.clock;
    let sys = &mut p.state;
    let mut dirty = true;
    let mut code = 0;
    match command {
        Command::Register(RegisterCmd::Owner { name }) => {
            sys.register_owner(&name);
            print_json(&json!({ "owner": name }));
        }
        Command::Register(RegisterCmd::Modifier { name, attrs, level }) => {
            sys.register_modifier(&name, attrs.into_iter().collect(), level);
            print_json(&json!({ "modifier": name, "level": level }));
        }
        Command::Register(RegisterCmd::Keygen { name }) => {
            let theta: BTreeSet<String> = sys.modifier(&name)?.attributes.clone();
            let key = sys.keygen_for(&name, &theta, &mut rng)?;
            print_json(&json!({ "modifier": name, "components": key.component_count() }));
        }
        Command::Chain(ChainCmd::AddTx { payload, owner, policy }) => {
            let id = match (owner, policy) {
                (Some(owner), Some(policy)) => {
                    sys.add_mutable_tx(&owner, payload.as_bytes(), &parse_policy(&policy)?, &mut rng)?
                }
                (None, None) => sys.add_immutable_tx(payload.as_bytes()),
                _ => bail!("mutable transactions need both --owner and --policy"),
            };
            print_json(&json!({ "tx": id, "pending": sys.pending.len() }));
        }
        Command::Chain(ChainCmd::Mine { owner, policy }) => {
            let tree = policy.as_deref().map(parse_policy).transpose()?;
            let seal = match (owner.as_deref(), tree.as_ref()) {
                (Some(o), Some(t)) => Some((o, t)),
                (None, None) => None,
                _ => bail!("mutable blocks need both --owner and --policy"),
            };
            let height = sys.mine(seal, now, &mut rng)?;
            let block = sys.chain.block(height).expect("just mined");
            print_json(&json!({ "height": height, "ctr": block.ctr, "hash": hex::encode(block.hash()) }));
        }
        Command::Chain(ChainCmd::EditTx { tx, payload, token, modifier }) => {
            let token = load_token::<B>(&token)?;
            let entry = sys.edit_tx(&modifier, tx, payload.as_bytes(), &token, now, &mut rng)?;
            print_json(&json!({ "entry": entry, "uses_remaining": sys.pts.uses_remaining(token.id) }));
        }
        Command::Chain(ChainCmd::EditBlock { height, replace, token, modifier }) => {
            let token = load_token::<B>(&token)?;
            let block = sys.chain.block(height).context("no block at that height")?;
            let mut txs = block.data.txs.clone();
            for item in &replace {
                let (id, payload) = item.split_once('=').context("--replace expects ID=PAYLOAD")?;
                let id: u64 = id.parse().context("transaction id")?;
                let slot = txs.iter_mut().find(|t| t.id == id).context("transaction not in block")?;
                *slot = Transaction::immutable(id, payload.as_bytes().to_vec());
            }
            let data = BlockData::new(txs, block.data.timestamp)?;
            let entry = sys.edit_block(&modifier, height, data, &token, now, &mut rng)?;
            print_json(&json!({ "entry": entry, "uses_remaining": sys.pts.uses_remaining(token.id) }));
        }
        Command::Chain(ChainCmd::Validate) => {
            dirty = false;
            let valid = sys.chain.validate();
            print_json(&json!({ "valid": valid, "height": sys.chain.height(), "edits": sys.chain.log.entries.len() }));
            code = if valid { 0 } else { 1 };
        }
        Command::Chain(ChainCmd::Show { height }) => {
            dirty = false;
            let blocks: Vec<_> = sys
                .chain
                .blocks
                .iter()
                .filter(|b| height.is_none_or(|h| b.height == h))
                .map(|b| {
                    json!({
                        "height": b.height,
                        "prev_hash": hex::encode(b.prev_hash),
                        "hash": hex::encode(b.hash()),
                        "ctr": b.ctr,
                        "kind": b.kind(),
                        "tx_root": hex::encode(b.data.tx_root),
                        "timestamp": b.data.timestamp,
                        "policy": match &b.seal { Seal::Mutable { tuple } => Some(tuple.ciphertext.policy.clone()), Seal::Immutable => None },
                        "txs": b.data.txs.iter().map(|t| json!({
                            "id": t.id,
                            "mutable": t.is_mutable(),
                            "payload": String::from_utf8_lossy(t.payload()),
                            "policy": match &t.body { TxBody::Mutable { tuple } => Some(tuple.ciphertext.policy.clone()), TxBody::Immutable { .. } => None },
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            print_json(&json!({ "blocks": blocks, "pending": sys.pending.len() }));
        }
        Command::Token(TokenCmd::Request { edit_type, n, index, deposit, modifier }) => {
            let request = EditRequest { edit_type: edit_type.into(), n, requester: modifier, index, deposit };
            let token = sys.request_token(request, now, &mut rng)?;
            let path = dir.token_path(token.id);
            write_json(&path, &token)?;
            print_json(&json!({ "token": token.id, "kind": token.kind, "file": path, "expire": token.expire }));
        }
        Command::Token(TokenCmd::Verify { file }) => {
            dirty = false;
            let token = load_token::<B>(&file)?;
            let signature = verify_token(&token, sys.pts.public_key(), now);
            let live = sys.pts.verify(&token, now);
            print_json(&json!({
                "token": token.id,
                "valid": signature && live,
                "signature": signature,
                "uses_remaining": sys.pts.uses_remaining(token.id),
            }));
            code = if signature && live { 0 } else { 1 };
        }
        Command::Audit(AuditCmd::Report { edit, reporter }) => {
            let record = sys.audit_report(&reporter, edit)?.clone();
            let path = dir.audit_path(record.report_id);
            write_json(&path, &record)?;
            let mut value = serde_json::to_value(&record)?;
            value["file"] = json!(path);
            print_json(&value);
        }
        Command::Run { .. } | Command::Bench(_) | Command::Chain(ChainCmd::Init { .. }) => {
            unreachable!("handled without loading state")
        }
    }
    if dirty {
        dir.save(&p)?;
    }
    Ok(code)
}

fn bench_cmd<B: Backend>(args: &BenchArgs, seed: Option<u64>) -> Result<i32> {
    let options = BenchOptions { reps: args.reps, seed: seed.unwrap_or(7), ..BenchOptions::default() };
    let results: Vec<BenchResult> = match args.suite {
        Suite::Scaling => {
            let mut r = bench::bench_devices::<B>(&args.points, &options)?;
            r.extend(bench::bench_attributes::<B>(&args.points, &options)?);
            for (axis, alg) in [
                (bench::Axis::Devices, "Setup"),
                (bench::Axis::Attributes, "KeyGen"),
                (bench::Axis::Attributes, "Hash"),
                (bench::Axis::Attributes, "Adapt"),
            ] {
                if let Some(fit) = bench::series_fit(&r, axis, alg) {
                    eprintln!("{alg:>8} vs {axis}: slope {:.4} ms/unit, R^2 {:.4}", fit.slope, fit.r2);
                }
            }
            r
        }
        Suite::Editcost => {
            let report = bench::bench_edit_cost::<B>(
                &args.n,
                &[EditType::Tx, EditType::Bl],
                args.attributes,
                args.devices,
                args.repeats,
                &options,
            )?;
            for row in &report.rows {
                eprintln!(
                    "{:?} n={:>2}: one-time {:>10.1} ms, n-times {:>10.1} ms, prediction error {:.1}%",
                    row.edit_type,
                    row.n,
                    row.one_time_ms,
                    row.n_times_ms,
                    100.0 * row.prediction_error()
                );
            }
            report.results()
        }
    };
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    bench::write_csv(&results, std::io::BufWriter::new(file))?;
    if let Some(plot) = &args.plot {
        let title = match args.suite {
            Suite::Scaling => "Average runtime per algorithm",
            Suite::Editcost => "n one-time vs n-times edits",
        };
        crate::plot::write_svg(&results, plot, title).map_err(|e| anyhow::anyhow!("plot: {e}"))?;
    }
    eprintln!("wrote {} rows to {}", results.len(), args.out.display());
    Ok(0)
}
