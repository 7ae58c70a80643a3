//! One CA, one PTS, and registries of owners and modifiers around a chain.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{audit_report, AuditError, AuditPolicy, AuditRecord, CredibilityLevel, Standing};
use crate::bilinear::{group_setup, Backend, GroupError, GroupParams};
use crate::chain::{BlockData, BlockKind, Chain, ChainConfig, ChainError, Editor, PchContext, Transaction};
use crate::cpabe::{abe_keygen, abe_setup, AttributeKey, CpAbeError, Identity, MasterKeys};
use crate::pch::{pch_hash, pch_verify, ChameleonKeys, ModifierKey, PchError, PchTuple, PublicParams};
use crate::policy::AccessTree;
use crate::token::{EditRequest, EditType, PrivilegeToken, Pts, PtsConfig, PtsKeys, RequesterStanding, TokenError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Abe(#[from] CpAbeError),
    #[error(transparent)]
    Pch(#[from] PchError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("unknown modifier {0}")]
    UnknownModifier(String),
    #[error("unknown owner {0}")]
    UnknownOwner(String),
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("modifier {0} holds no attribute key")]
    MissingKey(String),
    #[error("modifier {0} was ejected")]
    Ejected(String),
    #[error("no pending transactions to mine")]
    NothingToMine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub security_bits: u32,
    /// Size of the identity ladder published in the master key.
    pub ladder: usize,
    pub identity_depth: usize,
    pub chain: ChainConfig,
    pub pts: PtsConfig,
    pub audit: AuditPolicy,
    /// Units credited to each newly registered modifier.
    pub initial_balance: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            security_bits: 100,
            ladder: 6,
            identity_depth: 4,
            chain: ChainConfig::default(),
            pts: PtsConfig::default(),
            audit: AuditPolicy::default(),
            initial_balance: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OwnerRecord<B: Backend> {
    pub identity: Identity<B::Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModifierRecord<B: Backend> {
    pub identity: Identity<B::Scalar>,
    pub attributes: BTreeSet<String>,
    pub standing: Standing,
    pub key: Option<ModifierKey<B>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SystemState<B: Backend> {
    pub config: SystemConfig,
    pub params: GroupParams<B>,
    pub master: MasterKeys<B>,
    pub chameleon: ChameleonKeys<B>,
    pub pp: PublicParams<B>,
    pub pts: Pts<B>,
    pub owners: BTreeMap<String, OwnerRecord<B>>,
    pub modifiers: BTreeMap<String, ModifierRecord<B>>,
    pub chain: Chain<B>,
    pub pending: Vec<Transaction<B>>,
    pub audits: Vec<AuditRecord>,
}

impl<B: Backend> SystemState<B> {
    /// Group, ABE master keys, chameleon keys, PTS keys and the genesis chain.
    pub fn setup<R: RngCore + ?Sized>(config: SystemConfig, rng: &mut R) -> Result<Self, SystemError> {
        let params = group_setup::<B>(config.security_bits)?;
        let master = abe_setup::<B, R>(config.ladder.max(config.identity_depth + 2), rng)?;
        let chameleon = ChameleonKeys::<B>::generate(rng);
        let pts = Pts::new(PtsKeys::generate(rng), config.pts);
        let chain = Chain::new(config.chain, rng)?;
        let pp = PublicParams { mpk: master.public.clone(), pk: chameleon.pk.clone() };
        Ok(Self {
            config,
            params,
            master,
            chameleon,
            pp,
            pts,
            owners: BTreeMap::new(),
            modifiers: BTreeMap::new(),
            chain,
            pending: Vec::new(),
            audits: Vec::new(),
        })
    }

    fn identity_for(&self, name: &str) -> Identity<B::Scalar> {
        Identity::derive(name, self.config.identity_depth)
    }

    pub fn register_owner(&mut self, name: &str) -> &Identity<B::Scalar> {
        let identity = self.identity_for(name);
        &self.owners.entry(name.into()).or_insert(OwnerRecord { identity }).identity
    }

    /// Register a modifier (or update its attributes) and fund its account.
    pub fn register_modifier(&mut self, name: &str, attributes: BTreeSet<String>, level: CredibilityLevel) {
        if let Some(record) = self.modifiers.get_mut(name) {
            record.attributes = attributes;
            return;
        }
        let identity = self.identity_for(name);
        self.pts.ledger.credit(name, self.config.initial_balance);
        self.modifiers.insert(
            name.into(),
            ModifierRecord { identity, attributes, standing: Standing::new(level), key: None },
        );
    }

    pub fn modifier(&self, name: &str) -> Result<&ModifierRecord<B>, SystemError> {
        self.modifiers.get(name).ok_or_else(|| SystemError::UnknownModifier(name.into()))
    }

    pub fn owner(&self, name: &str) -> Result<&Identity<B::Scalar>, SystemError> {
        self.owners.get(name).map(|o| &o.identity).ok_or_else(|| SystemError::UnknownOwner(name.into()))
    }

    /// Issue an attribute key for `attributes`, bound to the modifier's identity.
    pub fn keygen_for<R: RngCore + ?Sized>(
        &mut self,
        name: &str,
        attributes: &BTreeSet<String>,
        rng: &mut R,
    ) -> Result<&AttributeKey<B>, SystemError> {
        let record = self.modifiers.get(name).ok_or_else(|| SystemError::UnknownModifier(name.into()))?;
        if attributes.is_empty() {
            return Err(SystemError::EmptyAttributeSet);
        }
        let abe = abe_keygen(&self.master, attributes, &record.identity, rng)?;
        let record = self.modifiers.get_mut(name).expect("checked above");
        record.attributes = attributes.clone();
        record.key = Some(ModifierKey { x: self.chameleon.x, abe });
        Ok(&record.key.as_ref().expect("just set").abe)
    }

    fn standing_of(&self, name: &str) -> RequesterStanding {
        match self.modifiers.get(name) {
            None => RequesterStanding::Unknown,
            Some(ModifierRecord { standing: Standing { level: None, .. }, .. }) => RequesterStanding::Ejected,
            Some(ModifierRecord { standing: Standing { level: Some(l), .. }, .. }) => RequesterStanding::Active(*l),
        }
    }

    pub fn request_token<R: RngCore + ?Sized>(
        &mut self,
        request: EditRequest,
        now: u64,
        rng: &mut R,
    ) -> Result<PrivilegeToken<B>, SystemError> {
        let standing = self.standing_of(&request.requester);
        let exists = match request.edit_type {
            EditType::Tx => self.chain.tx(request.index).is_some(),
            EditType::Bl => self.chain.block(request.index).is_some(),
        };
        Ok(self.pts.tkgen(request, standing, exists, now, rng)?)
    }

    /// The definitional `Hash(pk, m, policy)` surface for an owner.
    pub fn hash<R: RngCore + ?Sized>(
        &self,
        owner: &str,
        m: &[u8],
        policy: &AccessTree,
        rng: &mut R,
    ) -> Result<PchTuple<B>, SystemError> {
        Ok(pch_hash(&self.pp, m, policy, self.owner(owner)?, rng)?)
    }

    pub fn verify(&self, tuple: &PchTuple<B>) -> bool {
        pch_verify(tuple)
    }

    pub fn add_immutable_tx(&mut self, payload: &[u8]) -> u64 {
        let tx = self.chain.new_immutable_tx(payload.to_vec());
        let id = tx.id;
        self.pending.push(tx);
        id
    }

    pub fn add_mutable_tx<R: RngCore + ?Sized>(
        &mut self,
        owner: &str,
        payload: &[u8],
        policy: &AccessTree,
        rng: &mut R,
    ) -> Result<u64, SystemError> {
        let identity = self.owner(owner)?.clone();
        let context = PchContext { pp: &self.pp, policy, owner: &identity };
        let tx = self.chain.new_mutable_tx(payload, context, rng)?;
        let id = tx.id;
        self.pending.push(tx);
        Ok(id)
    }

    /// Mine all pending transactions into a block. Mutable blocks need
    /// `seal = Some((owner, policy))`.
    pub fn mine<R: RngCore + ?Sized>(
        &mut self,
        seal: Option<(&str, &AccessTree)>,
        now: u64,
        rng: &mut R,
    ) -> Result<u64, SystemError> {
        if self.pending.is_empty() {
            return Err(SystemError::NothingToMine);
        }
        let (kind, context) = match seal {
            None => (BlockKind::Immutable, None),
            Some((owner, policy)) => (BlockKind::Mutable, Some((self.owner(owner)?.clone(), policy))),
        };
        let txs = core::mem::take(&mut self.pending);
        let context = context.as_ref().map(|(owner, policy)| PchContext { pp: &self.pp, policy, owner });
        match self.chain.mine(txs.clone(), now, kind, context, rng) {
            Ok(block) => Ok(block.height),
            Err(e) => {
                self.pending = txs;
                Err(e.into())
            }
        }
    }

    fn editor_parts(&self, name: &str) -> Result<(Identity<B::Scalar>, ModifierKey<B>, CredibilityLevel), SystemError> {
        let record = self.modifier(name)?;
        let level = record.standing.level.ok_or_else(|| SystemError::Ejected(name.into()))?;
        let key = record.key.clone().ok_or_else(|| SystemError::MissingKey(name.into()))?;
        Ok((record.identity.clone(), key, level))
    }

    /// Returns the log entry id.
    pub fn edit_tx<R: RngCore + ?Sized>(
        &mut self,
        modifier: &str,
        tx_id: u64,
        new_payload: &[u8],
        token: &PrivilegeToken<B>,
        now: u64,
        rng: &mut R,
    ) -> Result<u64, SystemError> {
        let (identity, key, level) = self.editor_parts(modifier)?;
        let editor = Editor { name: modifier, identity: &identity, key: &key, level };
        let entry = self.chain.apply_tx_edit(&mut self.pts, &self.pp, tx_id, new_payload, token, editor, now, rng)?;
        Ok(entry.id)
    }

    /// Returns the log entry id.
    pub fn edit_block<R: RngCore + ?Sized>(
        &mut self,
        modifier: &str,
        height: u64,
        new_data: BlockData<B>,
        token: &PrivilegeToken<B>,
        now: u64,
        rng: &mut R,
    ) -> Result<u64, SystemError> {
        let (identity, key, level) = self.editor_parts(modifier)?;
        let editor = Editor { name: modifier, identity: &identity, key: &key, level };
        let entry = self.chain.apply_bl_edit(&mut self.pts, &self.pp, height, new_data, token, editor, now, rng)?;
        Ok(entry.id)
    }

    /// CA handling of a report about log entry `entry_id`.
    pub fn audit_report(&mut self, reporter: &str, entry_id: u64) -> Result<&AuditRecord, SystemError> {
        let editor = self
            .chain
            .log
            .get(entry_id)
            .ok_or(AuditError::MissingLog(entry_id))?
            .editor
            .clone();
        let mut standing = self.modifier(&editor)?.standing;
        let report_id = self.audits.len() as u64 + 1;
        let record = audit_report(
            report_id,
            entry_id,
            reporter,
            &self.chain.log,
            &mut self.pts,
            &mut standing,
            &self.config.audit,
        )?;
        self.modifiers.get_mut(&editor).expect("checked above").standing = standing;
        self.audits.push(record);
        Ok(self.audits.last().expect("just pushed"))
    }
}
