//! JSON-scripted end-to-end runs producing a transcript with timings.
//!
//! A script is a JSON array of step records, each tagged by `op`:
//!
//! ```json
//! [
//!   {"op": "register_owner", "name": "alice"},
//!   {"op": "register_modifier", "name": "bob", "attributes": ["A", "B"], "level": "m_1B"},
//!   {"op": "keygen", "modifier": "bob"},
//!   {"op": "add_tx", "owner": "alice", "payload": "v1", "policy": "A AND B", "as": "t"},
//!   {"op": "mine"},
//!   {"op": "request_token", "modifier": "bob", "type": "tx", "n": 1, "index": "t", "as": "tk"},
//!   {"op": "edit_tx", "modifier": "bob", "token": "tk", "tx": "t", "payload": "v2"},
//!   {"op": "validate"},
//!   {"op": "audit", "reporter": "alice"}
//! ]
//! ```
//!
//! Numeric references name tx ids or block heights directly; string
//! references resolve labels bound with `"as"`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use cdedit_core::audit::{AuditRecord, CredibilityLevel};
use cdedit_core::bilinear::Backend;
use cdedit_core::chain::{BlockData, Editor, Transaction, TxBody};
use cdedit_core::pch::{pch_adapt, pch_verify};
use cdedit_core::policy::parse_policy;
use cdedit_core::system::{SystemConfig, SystemError, SystemState};
use cdedit_core::token::{verify_token, EditRequest, EditType, PrivilegeToken};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bench::backend_label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref {
    Index(u64),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub tx: Ref,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    RegisterOwner {
        name: String,
    },
    RegisterModifier {
        name: String,
        attributes: Vec<String>,
        #[serde(default)]
        level: Option<CredibilityLevel>,
    },
    Keygen {
        modifier: String,
        #[serde(default)]
        attributes: Option<Vec<String>>,
    },
    AddTx {
        #[serde(default)]
        owner: Option<String>,
        payload: String,
        #[serde(default)]
        policy: Option<String>,
        #[serde(default, rename = "as")]
        label: Option<String>,
    },
    Mine {
        #[serde(default)]
        owner: Option<String>,
        #[serde(default)]
        policy: Option<String>,
        #[serde(default, rename = "as")]
        label: Option<String>,
    },
    RequestToken {
        modifier: String,
        #[serde(rename = "type")]
        edit_type: EditType,
        n: u32,
        index: Ref,
        #[serde(default)]
        deposit: Option<u64>,
        #[serde(rename = "as")]
        label: String,
    },
    VerifyToken {
        token: String,
    },
    EditTx {
        modifier: String,
        token: String,
        tx: Ref,
        payload: String,
        /// Skip the PTS gate, as a misbehaving node would.
        #[serde(default)]
        bypass_pts: bool,
    },
    EditBlock {
        modifier: String,
        token: String,
        height: Ref,
        replace: Vec<Replacement>,
        #[serde(default)]
        bypass_pts: bool,
    },
    Validate,
    Audit {
        reporter: String,
        /// Log entry id; the latest entry when omitted.
        #[serde(default)]
        entry: Option<u64>,
    },
    Advance {
        secs: u64,
    },
}

impl Step {
    pub fn op(&self) -> &'static str {
        match self {
            Self::RegisterOwner { .. } => "register_owner",
            Self::RegisterModifier { .. } => "register_modifier",
            Self::Keygen { .. } => "keygen",
            Self::AddTx { .. } => "add_tx",
            Self::Mine { .. } => "mine",
            Self::RequestToken { .. } => "request_token",
            Self::VerifyToken { .. } => "verify_token",
            Self::EditTx { .. } => "edit_tx",
            Self::EditBlock { .. } => "edit_block",
            Self::Validate => "validate",
            Self::Audit { .. } => "audit",
            Self::Advance { .. } => "advance",
        }
    }
}

/// A step plus the expectation that it fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub step: Step,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub expect_error: bool,
}

pub type Script = Vec<StepRecord>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub op: String,
    pub ok: bool,
    pub detail: Value,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub backend: String,
    pub seed: u64,
    pub steps: Vec<TranscriptEntry>,
    pub audits: Vec<AuditRecord>,
    pub chain_valid: bool,
}

impl Transcript {
    /// Copy with every timing zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.steps {
            s.elapsed_ms = 0.0;
        }
        out
    }

    pub fn total_ms(&self) -> f64 {
        self.steps.iter().map(|s| s.elapsed_ms).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("step {step} ({op}): {message}")]
    Step { step: usize, op: &'static str, message: String },
    #[error("step {step} ({op}) was expected to fail but succeeded")]
    UnexpectedSuccess { step: usize, op: &'static str },
    #[error("invalid script: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub seed: u64,
    pub start_time: u64,
    pub config: SystemConfig,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { seed: 1, start_time: 1_000, config: crate::bench::bench_config() }
    }
}

pub fn parse_script(text: &str) -> Result<Script, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
}

/// Executes steps against a [`SystemState`].
pub struct Runner<B: Backend> {
    pub sys: SystemState<B>,
    pub rng: ChaCha20Rng,
    pub now: u64,
    tokens: BTreeMap<String, PrivilegeToken<B>>,
    labels: BTreeMap<String, u64>,
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

impl<B: Backend> Runner<B> {
    pub fn new(options: &ScenarioOptions) -> Result<Self, SystemError> {
        let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
        let sys = SystemState::setup(options.config.clone(), &mut rng)?;
        Ok(Self { sys, rng, now: options.start_time, tokens: BTreeMap::new(), labels: BTreeMap::new() })
    }

    fn resolve(&self, r: &Ref) -> Result<u64, String> {
        match r {
            Ref::Index(i) => Ok(*i),
            Ref::Label(l) => self.labels.get(l).copied().ok_or_else(|| format!("unknown label {l:?}")),
        }
    }

    fn token(&self, label: &str) -> Result<PrivilegeToken<B>, String> {
        let t = self.tokens.get(label).ok_or_else(|| format!("unknown token {label:?}"))?;
        Ok(self.sys.pts.current(t.id).unwrap_or_else(|| t.clone()))
    }

    fn bind(&mut self, label: &Option<String>, value: u64) {
        if let Some(l) = label {
            self.labels.insert(l.clone(), value);
        }
    }

    /// Run one step; the returned value goes into the transcript.
    pub fn apply(&mut self, step: &Step) -> Result<Value, String> {
        self.now += 1;
        let now = self.now;
        match step {
            Step::RegisterOwner { name } => {
                self.sys.register_owner(name);
                Ok(json!({ "owner": name }))
            }
            Step::RegisterModifier { name, attributes, level } => {
                let level = level.unwrap_or(CredibilityLevel::OneTx);
                self.sys.register_modifier(name, attributes.iter().cloned().collect(), level);
                Ok(json!({ "modifier": name, "level": level }))
            }
            Step::Keygen { modifier, attributes } => {
                let theta: BTreeSet<String> = match attributes {
                    Some(a) => a.iter().cloned().collect(),
                    None => self.sys.modifier(modifier).map_err(fail)?.attributes.clone(),
                };
                let key = self.sys.keygen_for(modifier, &theta, &mut self.rng).map_err(fail)?;
                Ok(json!({ "modifier": modifier, "components": key.component_count() }))
            }
            Step::AddTx { owner, payload, policy, label } => {
                let id = match (owner, policy) {
                    (Some(owner), Some(policy)) => {
                        let tree = parse_policy(policy).map_err(fail)?;
                        self.sys.add_mutable_tx(owner, payload.as_bytes(), &tree, &mut self.rng).map_err(fail)?
                    }
                    (None, None) => self.sys.add_immutable_tx(payload.as_bytes()),
                    _ => return Err("mutable transactions need both owner and policy".into()),
                };
                self.bind(label, id);
                Ok(json!({ "tx": id, "mutable": policy.is_some() }))
            }
            Step::Mine { owner, policy, label } => {
                let tree = policy.as_deref().map(parse_policy).transpose().map_err(fail)?;
                let seal = match (owner, &tree) {
                    (Some(o), Some(t)) => Some((o.as_str(), t)),
                    (None, None) => None,
                    _ => return Err("mutable blocks need both owner and policy".into()),
                };
                let height = self.sys.mine(seal, now, &mut self.rng).map_err(fail)?;
                self.bind(label, height);
                Ok(json!({ "height": height, "mutable": seal.is_some() }))
            }
            Step::RequestToken { modifier, edit_type, n, index, deposit, label } => {
                let index = self.resolve(index)?;
                let deposit = deposit.unwrap_or_else(|| self.sys.pts.config.cost(*edit_type, *n));
                let request =
                    EditRequest { edit_type: *edit_type, n: *n, requester: modifier.clone(), index, deposit };
                let token = self.sys.request_token(request, now, &mut self.rng).map_err(fail)?;
                let detail = json!({ "token": token.id, "kind": token.kind, "expire": token.expire });
                self.tokens.insert(label.clone(), token);
                Ok(detail)
            }
            Step::VerifyToken { token } => {
                let t = self.token(token)?;
                let ok = verify_token(&t, self.sys.pts.public_key(), now) && self.sys.pts.verify(&t, now);
                if ok {
                    Ok(json!({ "token": t.id, "valid": true }))
                } else {
                    Err(format!("token {} does not verify", t.id))
                }
            }
            Step::EditTx { modifier, token, tx, payload, bypass_pts } => {
                let token = self.token(token)?;
                let tx = self.resolve(tx)?;
                let entry = if *bypass_pts {
                    self.rogue_tx_edit(modifier, tx, payload.as_bytes(), token.id, now)?
                } else {
                    self.sys.edit_tx(modifier, tx, payload.as_bytes(), &token, now, &mut self.rng).map_err(fail)?
                };
                Ok(json!({ "entry": entry, "tx": tx, "uses_remaining": self.sys.pts.uses_remaining(token.id) }))
            }
            Step::EditBlock { modifier, token, height, replace, bypass_pts } => {
                let token = self.token(token)?;
                let height = self.resolve(height)?;
                let data = self.replaced_data(height, replace)?;
                let entry = if *bypass_pts {
                    self.rogue_bl_edit(modifier, height, data, token.id, now)?
                } else {
                    self.sys.edit_block(modifier, height, data, &token, now, &mut self.rng).map_err(fail)?
                };
                Ok(json!({ "entry": entry, "height": height, "uses_remaining": self.sys.pts.uses_remaining(token.id) }))
            }
            Step::Validate => {
                if self.sys.chain.validate() {
                    Ok(json!({ "valid": true, "height": self.sys.chain.height() }))
                } else {
                    Err("chain does not validate".into())
                }
            }
            Step::Audit { reporter, entry } => {
                let entry = match entry {
                    Some(e) => *e,
                    None => self.sys.chain.log.entries.last().map(|e| e.id).ok_or("edit log is empty")?,
                };
                let record = self.sys.audit_report(reporter, entry).map_err(fail)?;
                serde_json::to_value(record).map_err(fail)
            }
            Step::Advance { secs } => {
                self.now += secs;
                Ok(json!({ "now": self.now }))
            }
        }
    }

    fn replaced_data(&self, height: u64, replace: &[Replacement]) -> Result<BlockData<B>, String> {
        let block = self.sys.chain.block(height).ok_or_else(|| format!("no block at height {height}"))?;
        let mut txs = block.data.txs.clone();
        for r in replace {
            let id = self.resolve(&r.tx)?;
            let slot = txs.iter_mut().find(|t| t.id == id).ok_or_else(|| format!("tx {id} not in block {height}"))?;
            *slot = Transaction::immutable(id, r.payload.as_bytes().to_vec());
        }
        BlockData::new(txs, block.data.timestamp).map_err(fail)
    }

    fn editor_parts(&self, modifier: &str) -> Result<(cdedit_core::cpabe::Identity<B::Scalar>, cdedit_core::pch::ModifierKey<B>, CredibilityLevel), String> {
        let record = self.sys.modifier(modifier).map_err(fail)?;
        let key = record.key.clone().ok_or("modifier holds no key")?;
        let level = record.standing.level.ok_or("modifier was ejected")?;
        Ok((record.identity.clone(), key, level))
    }

    fn rogue_tx_edit(&mut self, modifier: &str, tx: u64, payload: &[u8], token_id: u64, now: u64) -> Result<u64, String> {
        let (identity, key, level) = self.editor_parts(modifier)?;
        let (b, t) = self.sys.chain.locate_tx(tx).ok_or("unknown tx")?;
        let TxBody::Mutable { tuple } = &self.sys.chain.blocks[b].data.txs[t].body else {
            return Err("target is immutable".into());
        };
        let adapted = pch_adapt(&self.sys.pp, &key, tuple, payload, &identity, &mut self.rng).map_err(fail)?;
        let editor = Editor { name: modifier, identity: &identity, key: &key, level };
        Ok(self.sys.chain.install_tx_edit(b, t, adapted, token_id, editor, now).id)
    }

    fn rogue_bl_edit(&mut self, modifier: &str, height: u64, data: BlockData<B>, token_id: u64, now: u64) -> Result<u64, String> {
        let (identity, key, level) = self.editor_parts(modifier)?;
        let block = self.sys.chain.block(height).ok_or("unknown block")?;
        let cdedit_core::chain::Seal::Mutable { tuple } = &block.seal else {
            return Err("target is immutable".into());
        };
        let message = cdedit_core::chain::block_message(&block.prev_hash, &data.tx_root, data.timestamp);
        let adapted = pch_adapt(&self.sys.pp, &key, tuple, &message, &identity, &mut self.rng).map_err(fail)?;
        debug_assert!(pch_verify(&adapted));
        let editor = Editor { name: modifier, identity: &identity, key: &key, level };
        let entry = self.sys.chain.install_bl_edit(height, data, adapted, token_id, editor, now).map_err(fail)?;
        Ok(entry.id)
    }
}

/// Run `script` from a fresh system.
pub fn run_scenario<B: Backend>(script: &[StepRecord], options: &ScenarioOptions) -> Result<Transcript, ScenarioError> {
    let mut runner = Runner::<B>::new(options).map_err(|e| ScenarioError::Step {
        step: 0,
        op: "setup",
        message: e.to_string(),
    })?;
    let mut steps = Vec::with_capacity(script.len());
    for (index, record) in script.iter().enumerate() {
        let op = record.step.op();
        let start = Instant::now();
        let result = runner.apply(&record.step);
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        let (ok, detail) = match (result, record.expect_error) {
            (Ok(detail), false) => (true, detail),
            (Err(message), true) => (false, json!({ "error": message })),
            (Ok(_), true) => return Err(ScenarioError::UnexpectedSuccess { step: index, op }),
            (Err(message), false) => return Err(ScenarioError::Step { step: index, op, message }),
        };
        steps.push(TranscriptEntry { index, op: op.into(), ok, detail, elapsed_ms });
    }
    Ok(Transcript {
        backend: backend_label::<B>(),
        seed: options.seed,
        steps,
        audits: runner.sys.audits.clone(),
        chain_valid: runner.sys.chain.validate(),
    })
}
