//! Toy permissioned chain with chameleon-hashed mutable transactions and blocks.
//!
//! A block hash is `H(ctr || G_inner(PreH, x_i))`. For immutable blocks the
//! inner hash is SHA-256 of the block message; for mutable blocks it is the
//! chameleon digest `ch` of that message, stretched to 256 bits. Re-opening
//! `ch` to a new message therefore leaves every successor link intact.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audit::CredibilityLevel;
use crate::bilinear::{digest256, Backend, GroupElement};
use crate::cpabe::Identity;
use crate::encoding::{hex_bytes, hex_digest, Encoder};
use crate::pch::{pch_adapt, pch_hash, pch_verify, ModifierKey, PchError, PchTuple, PublicParams};
use crate::policy::AccessTree;
use crate::token::{EditType, Pts, PrivilegeToken, TokenError};

pub type Digest32 = [u8; 32];

const TAG_TX_IMMUTABLE: &[u8] = b"CDEDIT-V1-TX-IMMUTABLE";
const TAG_TX_MUTABLE: &[u8] = b"CDEDIT-V1-TX-MUTABLE";
const TAG_INNER_MUTABLE: &[u8] = b"CDEDIT-V1-INNER-MUTABLE";
const TAG_EDIT_LOG: &[u8] = b"CDEDIT-V1-EDIT-LOG";
const TAG_TUPLE: &[u8] = b"CDEDIT-V1-TUPLE";

pub const GENESIS_PAYLOAD: &[u8] = b"cdedit genesis";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("transaction list is empty")]
    EmptyTransactions,
    #[error("no nonce below {0} meets the difficulty target")]
    NonceExhausted(u64),
    #[error("mutable block needs a policy context")]
    MissingContext,
    #[error("edit target does not exist")]
    UnknownTarget,
    #[error("target is immutable")]
    ImmutableTarget,
    #[error("token kind does not cover this edit")]
    TokenKindMismatch,
    #[error("one-time token was issued for index {issued}, not {requested}")]
    TargetMismatch { issued: u64, requested: u64 },
    #[error("token does not verify")]
    InvalidToken,
    #[error("attribute set does not satisfy the policy")]
    Unauthorized,
    #[error("token exhausted")]
    Exhausted,
    #[error("tx root does not match the transaction list")]
    InconsistentTxRoot,
    #[error("edit changed a block hash")]
    LinkBroken,
    #[error("chameleon hash failed: {0}")]
    Pch(PchError),
    #[error("token service: {0}")]
    Token(TokenError),
}

impl From<PchError> for ChainError {
    fn from(e: PchError) -> Self {
        match e {
            PchError::Unauthorized => Self::Unauthorized,
            other => Self::Pch(other),
        }
    }
}

impl From<TokenError> for ChainError {
    fn from(e: TokenError) -> Self {
        match e {
            TokenError::Exhausted(_) => Self::Exhausted,
            other => Self::Token(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "lowercase")]
pub enum TxBody<B: Backend> {
    Immutable {
        #[serde(with = "hex_bytes")]
        payload: Vec<u8>,
    },
    Mutable {
        tuple: PchTuple<B>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Transaction<B: Backend> {
    pub id: u64,
    #[serde(flatten)]
    pub body: TxBody<B>,
}

impl<B: Backend> Transaction<B> {
    pub fn immutable(id: u64, payload: impl Into<Vec<u8>>) -> Self {
        Self { id, body: TxBody::Immutable { payload: payload.into() } }
    }

    pub fn mutable(id: u64, tuple: PchTuple<B>) -> Self {
        Self { id, body: TxBody::Mutable { tuple } }
    }

    pub fn payload(&self) -> &[u8] {
        match &self.body {
            TxBody::Immutable { payload } => payload,
            TxBody::Mutable { tuple } => &tuple.m,
        }
    }

    pub fn is_mutable(&self) -> bool {
        matches!(self.body, TxBody::Mutable { .. })
    }

    /// Merkle leaf. Mutable transactions contribute `ch`, not the payload.
    pub fn digest(&self) -> Digest32 {
        match &self.body {
            TxBody::Immutable { payload } => {
                digest256(TAG_TX_IMMUTABLE, &Encoder::new().u64(self.id).bytes(payload).finish())
            }
            TxBody::Mutable { tuple } => {
                digest256(TAG_TX_MUTABLE, &Encoder::new().u64(self.id).bytes(&tuple.ch.to_bytes()).finish())
            }
        }
    }

    pub fn verifies(&self) -> bool {
        match &self.body {
            TxBody::Immutable { .. } => true,
            TxBody::Mutable { tuple } => pch_verify(tuple),
        }
    }
}

fn sha256_pair(left: &Digest32, right: &Digest32) -> Digest32 {
    Sha256::new().chain_update(left).chain_update(right).finalize().into()
}

/// Binary Merkle root; odd levels duplicate their last node, a single leaf
/// is hashed once more.
pub fn merkle_root(leaves: &[Digest32]) -> Result<Digest32, ChainError> {
    match leaves {
        [] => Err(ChainError::EmptyTransactions),
        [only] => Ok(Sha256::digest(only).into()),
        _ => {
            let mut level = leaves.to_vec();
            while level.len() > 1 {
                level = level
                    .chunks(2)
                    .map(|pair| sha256_pair(&pair[0], pair.get(1).unwrap_or(&pair[0])))
                    .collect();
            }
            Ok(level[0])
        }
    }
}

pub fn tx_root<B: Backend>(txs: &[Transaction<B>]) -> Result<Digest32, ChainError> {
    merkle_root(&txs.iter().map(Transaction::digest).collect::<Vec<_>>())
}

/// Block data `x_i = (TX_root, TS, txs)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BlockData<B: Backend> {
    #[serde(with = "hex_digest")]
    pub tx_root: Digest32,
    pub timestamp: u64,
    pub txs: Vec<Transaction<B>>,
}

impl<B: Backend> BlockData<B> {
    pub fn new(txs: Vec<Transaction<B>>, timestamp: u64) -> Result<Self, ChainError> {
        Ok(Self { tx_root: tx_root(&txs)?, timestamp, txs })
    }

    pub fn root_is_consistent(&self) -> bool {
        tx_root(&self.txs).is_ok_and(|r| r == self.tx_root)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Immutable,
    Mutable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "lowercase")]
pub enum Seal<B: Backend> {
    Immutable,
    Mutable { tuple: PchTuple<B> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Block<B: Backend> {
    pub height: u64,
    #[serde(with = "hex_digest")]
    pub prev_hash: Digest32,
    pub data: BlockData<B>,
    pub ctr: u64,
    pub seal: Seal<B>,
}

/// `PreH || TX_root || TS`, the message the block's inner hash covers.
pub fn block_message(prev_hash: &Digest32, tx_root: &Digest32, timestamp: u64) -> Vec<u8> {
    Encoder::new().bytes(prev_hash).bytes(tx_root).u64(timestamp).finish()
}

/// `H(ctr || inner)`.
pub fn outer_hash(ctr: u64, inner: &Digest32) -> Digest32 {
    Sha256::new().chain_update(ctr.to_be_bytes()).chain_update(inner).finalize().into()
}

fn mutable_inner<B: Backend>(tuple: &PchTuple<B>) -> Digest32 {
    digest256(TAG_INNER_MUTABLE, &tuple.ch.to_bytes())
}

impl<B: Backend> Block<B> {
    pub fn kind(&self) -> BlockKind {
        match self.seal {
            Seal::Immutable => BlockKind::Immutable,
            Seal::Mutable { .. } => BlockKind::Mutable,
        }
    }

    pub fn message(&self) -> Vec<u8> {
        block_message(&self.prev_hash, &self.data.tx_root, self.data.timestamp)
    }

    pub fn inner_hash(&self) -> Digest32 {
        match &self.seal {
            Seal::Immutable => Sha256::digest(self.message()).into(),
            Seal::Mutable { tuple } => mutable_inner(tuple),
        }
    }

    /// The value the next block stores as `PreH`.
    pub fn hash(&self) -> Digest32 {
        outer_hash(self.ctr, &self.inner_hash())
    }

    pub fn find_tx(&self, id: u64) -> Option<usize> {
        self.data.txs.iter().position(|t| t.id == id)
    }
}

/// Difficulty threshold `D` as a 257-bit big-endian integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target(#[serde(with = "hex_bytes33")] pub [u8; 33]);

mod hex_bytes33 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 33], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 33], D::Error> {
        let text = <alloc::string::String as Deserialize>::deserialize(d)?;
        let bytes = hex::decode(text).map_err(serde::de::Error::custom)?;
        bytes.try_into().map_err(|_| serde::de::Error::custom("target must be 33 bytes"))
    }
}

impl Target {
    pub const ZERO: Self = Self([0; 33]);

    /// `D = 2^e` for `e` in `0..=256`.
    pub fn pow2(e: u32) -> Self {
        assert!(e <= 256, "target exponent above 256");
        let mut out = [0u8; 33];
        out[32 - (e / 8) as usize] = 1 << (e % 8);
        Self(out)
    }

    /// Always-satisfied target `2^256`.
    pub fn trivial() -> Self {
        Self::pow2(256)
    }

    pub fn admits(&self, hash: &Digest32) -> bool {
        let mut wide = [0u8; 33];
        wide[1..].copy_from_slice(hash);
        wide < self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub target: Target,
    pub max_hash_queries: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { target: Target::pow2(248), max_hash_queries: 1 << 20 }
    }
}

/// Inputs for chameleon-hashing a mutable block or transaction.
#[derive(Debug, Clone, Copy)]
pub struct PchContext<'a, B: Backend> {
    pub pp: &'a PublicParams<B>,
    pub policy: &'a AccessTree,
    pub owner: &'a Identity<B::Scalar>,
}

/// Search `ctr` so the block meets the target.
pub fn mine_block<B: Backend, R: RngCore + ?Sized>(
    prev: Option<&Block<B>>,
    data: BlockData<B>,
    kind: BlockKind,
    config: &ChainConfig,
    context: Option<PchContext<'_, B>>,
    rng: &mut R,
) -> Result<Block<B>, ChainError> {
    let (height, prev_hash) = match prev {
        Some(p) => (p.height + 1, p.hash()),
        None => (0, [0u8; 32]),
    };
    let seal = match kind {
        BlockKind::Immutable => Seal::Immutable,
        BlockKind::Mutable => {
            let ctx = context.ok_or(ChainError::MissingContext)?;
            let message = block_message(&prev_hash, &data.tx_root, data.timestamp);
            Seal::Mutable { tuple: pch_hash(ctx.pp, &message, ctx.policy, ctx.owner, rng)? }
        }
    };
    let mut block = Block { height, prev_hash, data, ctr: 0, seal };
    let inner = block.inner_hash();
    for ctr in 0..config.max_hash_queries {
        if config.target.admits(&outer_hash(ctr, &inner)) {
            block.ctr = ctr;
            return Ok(block);
        }
    }
    Err(ChainError::NonceExhausted(config.max_hash_queries))
}

/// Difficulty, nonce cap, tx-root consistency, and every chameleon tuple.
pub fn validate_block<B: Backend>(block: &Block<B>, config: &ChainConfig) -> bool {
    if block.ctr >= config.max_hash_queries || !config.target.admits(&block.hash()) {
        return false;
    }
    if !block.data.root_is_consistent() || !block.data.txs.iter().all(Transaction::verifies) {
        return false;
    }
    match &block.seal {
        Seal::Immutable => true,
        Seal::Mutable { tuple } => tuple.m == block.message() && pch_verify(tuple),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EditTarget {
    Tx { id: u64, height: u64 },
    Bl { height: u64 },
}

impl EditTarget {
    pub fn edit_type(&self) -> EditType {
        match self {
            Self::Tx { .. } => EditType::Tx,
            Self::Bl { .. } => EditType::Bl,
        }
    }

    /// The index a token request would name for this target.
    pub fn index(&self) -> u64 {
        match self {
            Self::Tx { id, .. } => *id,
            Self::Bl { height } => *height,
        }
    }
}

/// One append-only record of an edit, hash-linked to its predecessor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EditLogEntry<B: Backend> {
    pub id: u64,
    #[serde(with = "hex_digest")]
    pub prev: Digest32,
    pub editor: String,
    pub editor_level: CredibilityLevel,
    pub token_id: u64,
    pub target: EditTarget,
    #[serde(with = "hex_digest")]
    pub old_digest: Digest32,
    #[serde(with = "hex_digest")]
    pub new_digest: Digest32,
    pub old_tuple: PchTuple<B>,
    pub new_tuple: PchTuple<B>,
    pub timestamp: u64,
    #[serde(with = "hex_digest")]
    pub entry_hash: Digest32,
}

pub fn tuple_fingerprint<B: Backend>(tuple: &PchTuple<B>) -> Digest32 {
    let bytes = Encoder::new()
        .bytes(&tuple.m)
        .bytes(&tuple.p.to_bytes())
        .bytes(&tuple.h_prime.to_bytes())
        .bytes(&tuple.ch.to_bytes())
        .bytes(&tuple.c.to_bytes())
        .bytes(&tuple.epk.to_bytes())
        .scalar(&tuple.sigma)
        .bytes(&tuple.ciphertext.ct1.to_bytes())
        .finish();
    digest256(TAG_TUPLE, &bytes)
}

impl<B: Backend> EditLogEntry<B> {
    pub fn compute_hash(&self) -> Digest32 {
        let (tag, a, b) = match self.target {
            EditTarget::Tx { id, height } => (0u32, id, height),
            EditTarget::Bl { height } => (1u32, height, height),
        };
        let bytes = Encoder::new()
            .bytes(&self.prev)
            .u64(self.id)
            .str(&self.editor)
            .u32(self.editor_level as u32)
            .u64(self.token_id)
            .u32(tag)
            .u64(a)
            .u64(b)
            .bytes(&self.old_digest)
            .bytes(&self.new_digest)
            .bytes(&tuple_fingerprint(&self.old_tuple))
            .bytes(&tuple_fingerprint(&self.new_tuple))
            .u64(self.timestamp)
            .finish();
        digest256(TAG_EDIT_LOG, &bytes)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EditLog<B: Backend> {
    pub entries: Vec<EditLogEntry<B>>,
}

/// Fields of a log entry before linking.
pub struct EditRecord<B: Backend> {
    pub editor: String,
    pub editor_level: CredibilityLevel,
    pub token_id: u64,
    pub target: EditTarget,
    pub old_digest: Digest32,
    pub new_digest: Digest32,
    pub old_tuple: PchTuple<B>,
    pub new_tuple: PchTuple<B>,
    pub timestamp: u64,
}

impl<B: Backend> EditLog<B> {
    pub fn head(&self) -> Digest32 {
        self.entries.last().map_or([0u8; 32], |e| e.entry_hash)
    }

    pub fn append(&mut self, record: EditRecord<B>) -> &EditLogEntry<B> {
        let mut entry = EditLogEntry {
            id: self.entries.len() as u64 + 1,
            prev: self.head(),
            editor: record.editor,
            editor_level: record.editor_level,
            token_id: record.token_id,
            target: record.target,
            old_digest: record.old_digest,
            new_digest: record.new_digest,
            old_tuple: record.old_tuple,
            new_tuple: record.new_tuple,
            timestamp: record.timestamp,
            entry_hash: [0; 32],
        };
        entry.entry_hash = entry.compute_hash();
        self.entries.push(entry);
        self.entries.last().expect("just pushed")
    }

    pub fn get(&self, id: u64) -> Option<&EditLogEntry<B>> {
        id.checked_sub(1).and_then(|i| self.entries.get(i as usize)).filter(|e| e.id == id)
    }

    pub fn for_token(&self, token_id: u64) -> impl Iterator<Item = &EditLogEntry<B>> {
        self.entries.iter().filter(move |e| e.token_id == token_id)
    }

    pub fn links_hold(&self) -> bool {
        let mut prev = [0u8; 32];
        for (i, e) in self.entries.iter().enumerate() {
            if e.id != i as u64 + 1 || e.prev != prev || e.compute_hash() != e.entry_hash {
                return false;
            }
            prev = e.entry_hash;
        }
        true
    }
}

/// The acting modifier in an edit.
#[derive(Debug, Clone, Copy)]
pub struct Editor<'a, B: Backend> {
    pub name: &'a str,
    pub identity: &'a Identity<B::Scalar>,
    pub key: &'a ModifierKey<B>,
    pub level: CredibilityLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Chain<B: Backend> {
    pub config: ChainConfig,
    pub blocks: Vec<Block<B>>,
    pub log: EditLog<B>,
    next_tx_id: u64,
}

impl<B: Backend> Chain<B> {
    /// A chain holding only the genesis block.
    pub fn new<R: RngCore + ?Sized>(config: ChainConfig, rng: &mut R) -> Result<Self, ChainError> {
        let data = BlockData::new(vec![Transaction::immutable(0, GENESIS_PAYLOAD)], 0)?;
        let genesis = mine_block(None, data, BlockKind::Immutable, &config, None, rng)?;
        Ok(Self { config, blocks: vec![genesis], log: EditLog::default(), next_tx_id: 1 })
    }

    pub fn head(&self) -> &Block<B> {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.head().height
    }

    pub fn allocate_tx_id(&mut self) -> u64 {
        let id = self.next_tx_id;
        self.next_tx_id += 1;
        id
    }

    pub fn new_immutable_tx(&mut self, payload: impl Into<Vec<u8>>) -> Transaction<B> {
        Transaction::immutable(self.allocate_tx_id(), payload)
    }

    pub fn new_mutable_tx<R: RngCore + ?Sized>(
        &mut self,
        payload: &[u8],
        context: PchContext<'_, B>,
        rng: &mut R,
    ) -> Result<Transaction<B>, ChainError> {
        let tuple = pch_hash(context.pp, payload, context.policy, context.owner, rng)?;
        Ok(Transaction::mutable(self.allocate_tx_id(), tuple))
    }

    /// Mine `txs` on top of the head and append.
    pub fn mine<R: RngCore + ?Sized>(
        &mut self,
        txs: Vec<Transaction<B>>,
        timestamp: u64,
        kind: BlockKind,
        context: Option<PchContext<'_, B>>,
        rng: &mut R,
    ) -> Result<&Block<B>, ChainError> {
        let data = BlockData::new(txs, timestamp)?;
        let block = mine_block(Some(self.head()), data, kind, &self.config, context, rng)?;
        self.blocks.push(block);
        Ok(self.head())
    }

    pub fn locate_tx(&self, id: u64) -> Option<(usize, usize)> {
        self.blocks.iter().enumerate().find_map(|(b, block)| block.find_tx(id).map(|t| (b, t)))
    }

    pub fn tx(&self, id: u64) -> Option<&Transaction<B>> {
        self.locate_tx(id).map(|(b, t)| &self.blocks[b].data.txs[t])
    }

    pub fn block(&self, height: u64) -> Option<&Block<B>> {
        self.blocks.get(usize::try_from(height).ok()?)
    }

    /// Every link, every block, and the edit log.
    pub fn validate(&self) -> bool {
        self.blocks.iter().enumerate().all(|(i, block)| {
            let link_ok = if i == 0 {
                block.prev_hash == [0u8; 32]
            } else {
                block.prev_hash == self.blocks[i - 1].hash()
            };
            link_ok && block.height == i as u64 && validate_block(block, &self.config)
        }) && self.log.links_hold()
    }

    /// `PreH` of every block, for before/after comparisons.
    pub fn links(&self) -> Vec<Digest32> {
        self.blocks.iter().map(|b| b.prev_hash).collect()
    }

    fn check_token(
        &self,
        pts: &Pts<B>,
        token: &PrivilegeToken<B>,
        target: EditType,
        index: u64,
        now: u64,
    ) -> Result<(), ChainError> {
        if !pts.verify(token, now) {
            return match pts.uses_remaining(token.id) {
                Some(0) => Err(ChainError::Exhausted),
                _ => Err(ChainError::InvalidToken),
            };
        }
        if !token.kind.covers(target) {
            return Err(ChainError::TokenKindMismatch);
        }
        if token.request.n == 1 && token.request.edit_type == target && token.request.index != index {
            return Err(ChainError::TargetMismatch { issued: token.request.index, requested: index });
        }
        Ok(())
    }

    /// Token-gated transaction edit: re-open the tx digest to `new_payload`.
    #[allow(clippy::too_many_arguments)]
    pub fn apply_tx_edit<R: RngCore + ?Sized>(
        &mut self,
        pts: &mut Pts<B>,
        pp: &PublicParams<B>,
        tx_id: u64,
        new_payload: &[u8],
        token: &PrivilegeToken<B>,
        editor: Editor<'_, B>,
        now: u64,
        rng: &mut R,
    ) -> Result<&EditLogEntry<B>, ChainError> {
        self.check_token(pts, token, EditType::Tx, tx_id, now)?;
        let (b, t) = self.locate_tx(tx_id).ok_or(ChainError::UnknownTarget)?;
        let TxBody::Mutable { tuple } = &self.blocks[b].data.txs[t].body else {
            return Err(ChainError::ImmutableTarget);
        };
        let adapted = pch_adapt(pp, editor.key, tuple, new_payload, editor.identity, rng)?;
        pts.consume_use(token.id, now)?;
        Ok(self.install_tx_edit(b, t, adapted, token.id, editor, now))
    }

    /// Replace a mutable transaction's tuple and log it, with no token gate.
    ///
    /// This is the raw state transition behind [`Chain::apply_tx_edit`]; it
    /// exists so simulations can model a node that skips the PTS.
    pub fn install_tx_edit(
        &mut self,
        b: usize,
        t: usize,
        adapted: PchTuple<B>,
        token_id: u64,
        editor: Editor<'_, B>,
        now: u64,
    ) -> &EditLogEntry<B> {
        let tx = &mut self.blocks[b].data.txs[t];
        let old_digest = tx.digest();
        let TxBody::Mutable { tuple } = &mut tx.body else {
            panic!("install_tx_edit on an immutable transaction");
        };
        let old_tuple = core::mem::replace(tuple, adapted.clone());
        let new_digest = tx.digest();
        let target = EditTarget::Tx { id: tx.id, height: self.blocks[b].height };
        self.log.append(EditRecord {
            editor: editor.name.into(),
            editor_level: editor.level,
            token_id,
            target,
            old_digest,
            new_digest,
            old_tuple,
            new_tuple: adapted,
            timestamp: now,
        })
    }

    /// Token-gated block edit: swap in `new_data` while keeping the block hash.
    #[allow(clippy::too_many_arguments)]
    pub fn apply_bl_edit<R: RngCore + ?Sized>(
        &mut self,
        pts: &mut Pts<B>,
        pp: &PublicParams<B>,
        height: u64,
        new_data: BlockData<B>,
        token: &PrivilegeToken<B>,
        editor: Editor<'_, B>,
        now: u64,
        rng: &mut R,
    ) -> Result<&EditLogEntry<B>, ChainError> {
        self.check_token(pts, token, EditType::Bl, height, now)?;
        let block = self.block(height).ok_or(ChainError::UnknownTarget)?;
        let Seal::Mutable { tuple } = &block.seal else {
            return Err(ChainError::ImmutableTarget);
        };
        if !new_data.root_is_consistent() {
            return Err(ChainError::InconsistentTxRoot);
        }
        let message = block_message(&block.prev_hash, &new_data.tx_root, new_data.timestamp);
        let adapted = pch_adapt(pp, editor.key, tuple, &message, editor.identity, rng)?;
        pts.consume_use(token.id, now)?;
        self.install_bl_edit(height, new_data, adapted, token.id, editor, now)
    }

    /// Replace a mutable block's data and seal, with no token gate.
    pub fn install_bl_edit(
        &mut self,
        height: u64,
        new_data: BlockData<B>,
        adapted: PchTuple<B>,
        token_id: u64,
        editor: Editor<'_, B>,
        now: u64,
    ) -> Result<&EditLogEntry<B>, ChainError> {
        let i = usize::try_from(height).map_err(|_| ChainError::UnknownTarget)?;
        let block = self.blocks.get_mut(i).ok_or(ChainError::UnknownTarget)?;
        let before = block.hash();
        let old_data = core::mem::replace(&mut block.data, new_data);
        let Seal::Mutable { tuple } = &mut block.seal else {
            block.data = old_data;
            return Err(ChainError::ImmutableTarget);
        };
        let old_tuple = core::mem::replace(tuple, adapted.clone());
        let after = block.hash();
        if after != before {
            let Seal::Mutable { tuple } = &mut block.seal else { unreachable!() };
            *tuple = old_tuple;
            block.data = old_data;
            return Err(ChainError::LinkBroken);
        }
        let old_digest: Digest32 = Sha256::digest(&old_tuple.m).into();
        let new_digest: Digest32 = Sha256::digest(&adapted.m).into();
        Ok(self.log.append(EditRecord {
            editor: editor.name.into(),
            editor_level: editor.level,
            token_id,
            target: EditTarget::Bl { height },
            old_digest,
            new_digest,
            old_tuple,
            new_tuple: adapted,
            timestamp: now,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::MockBls;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn leaf(byte: u8) -> Digest32 {
        [byte; 32]
    }

    fn sha(parts: &[&[u8]]) -> Digest32 {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p);
        }
        h.finalize().into()
    }

    #[test]
    fn merkle_shapes() {
        let (a, b, c) = (leaf(1), leaf(2), leaf(3));
        assert_eq!(merkle_root(&[]), Err(ChainError::EmptyTransactions));
        assert_eq!(merkle_root(&[a]).unwrap(), sha(&[&a]));
        assert_eq!(merkle_root(&[a, b]).unwrap(), sha(&[&a, &b]));
        let ab = sha(&[&a, &b]);
        let cc = sha(&[&c, &c]);
        assert_eq!(merkle_root(&[a, b, c]).unwrap(), sha(&[&ab, &cc]));
    }

    #[test]
    fn target_thresholds() {
        assert!(Target::trivial().admits(&[0xff; 32]));
        assert!(!Target::ZERO.admits(&[0; 32]));
        let t = Target::pow2(248);
        let mut below = [0u8; 32];
        below[0] = 0x00;
        below[1] = 0xff;
        assert!(t.admits(&below));
        let mut at = [0u8; 32];
        at[0] = 0x01;
        assert!(!t.admits(&at));
        assert!(Target::pow2(0).admits(&[0; 32]));
        assert!(!Target::pow2(0).admits(&{
            let mut one = [0u8; 32];
            one[31] = 1;
            one
        }));
    }

    #[test]
    fn trivial_and_impossible_difficulty() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let data = BlockData::<MockBls>::new(vec![Transaction::immutable(1, b"x".to_vec())], 5).unwrap();
        let easy = ChainConfig { target: Target::trivial(), max_hash_queries: 4 };
        let block = mine_block(None, data.clone(), BlockKind::Immutable, &easy, None, &mut rng).unwrap();
        assert_eq!(block.ctr, 0);
        assert!(validate_block(&block, &easy));
        let impossible = ChainConfig { target: Target::ZERO, max_hash_queries: 64 };
        assert_eq!(
            mine_block(None, data, BlockKind::Immutable, &impossible, None, &mut rng),
            Err(ChainError::NonceExhausted(64))
        );
        let mut capped = block.clone();
        capped.ctr = 4;
        assert!(!validate_block(&capped, &easy));
    }

    #[test]
    fn tampered_immutable_block_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let config = ChainConfig { target: Target::pow2(252), max_hash_queries: 1 << 12 };
        let mut chain = Chain::<MockBls>::new(config, &mut rng).unwrap();
        let tx = chain.new_immutable_tx(b"pay 5".to_vec());
        chain.mine(vec![tx], 10, BlockKind::Immutable, None, &mut rng).unwrap();
        assert!(chain.validate());
        let mut tampered = chain.clone();
        tampered.blocks[1].data.timestamp += 1;
        assert!(!tampered.validate());
        let mut tampered = chain.clone();
        tampered.blocks[1].data.txs[0] = Transaction::immutable(1, b"pay 6".to_vec());
        assert!(!tampered.validate());
    }
}
