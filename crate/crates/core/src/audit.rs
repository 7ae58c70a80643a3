//! CA-side audit of logged edits and credibility-level bookkeeping.

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilinear::Backend;
use crate::chain::{EditLog, EditLogEntry};
use crate::pch::{chameleon_equation_holds, signature_holds};
use crate::token::{PrivilegeToken, Pts};

/// Modifier classes, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CredibilityLevel {
    #[serde(rename = "m_1T")]
    OneTx = 0,
    #[serde(rename = "m_nT")]
    ManyTx = 1,
    #[serde(rename = "m_1B")]
    OneBlock = 2,
    #[serde(rename = "m_nB")]
    ManyBlock = 3,
}

impl CredibilityLevel {
    pub const ALL: [Self; 4] = [Self::OneTx, Self::ManyTx, Self::OneBlock, Self::ManyBlock];

    pub fn promoted(self) -> Self {
        match self {
            Self::OneTx => Self::ManyTx,
            Self::ManyTx => Self::OneBlock,
            Self::OneBlock | Self::ManyBlock => Self::ManyBlock,
        }
    }

    /// `None` means ejected.
    pub fn demoted(self) -> Option<Self> {
        match self {
            Self::OneTx => None,
            Self::ManyTx => Some(Self::OneTx),
            Self::OneBlock => Some(Self::ManyTx),
            Self::ManyBlock => Some(Self::OneBlock),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::OneTx => "m_1T",
            Self::ManyTx => "m_nT",
            Self::OneBlock => "m_1B",
            Self::ManyBlock => "m_nB",
        }
    }
}

impl core::str::FromStr for CredibilityLevel {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|l| l.label() == s).ok_or(AuditError::UnknownLevel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    OverCount,
    TokenMisuse,
    BadSignature,
    BadCollision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "kind", rename_all = "lowercase")]
pub enum Verdict {
    Clean,
    Violation(ViolationKind),
}

impl Verdict {
    pub fn is_clean(&self) -> bool {
        matches!(self, Self::Clean)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("no edit log entry {0}")]
    MissingLog(u64),
    #[error("token {0} is unknown to the PTS")]
    UnknownToken(u64),
    #[error("unknown credibility level")]
    UnknownLevel,
}

/// Level plus accumulated clean audits. `level == None` means ejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standing {
    pub level: Option<CredibilityLevel>,
    pub clean_credits: u32,
}

impl Standing {
    pub fn new(level: CredibilityLevel) -> Self {
        Self { level: Some(level), clean_credits: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditPolicy {
    pub promotion_threshold: u32,
}

impl Default for AuditPolicy {
    fn default() -> Self {
        Self { promotion_threshold: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Settlement {
    /// Escrow stays locked (token still has uses, or nothing to settle).
    Held,
    Refund { holder: String, amount: u64 },
    Slash { reporter: String, to_reporter: u64, burned: u64 },
}

/// Accountability record `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub report_id: u64,
    pub entry_id: u64,
    pub modifier: String,
    pub token_id: u64,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub level_before: Option<CredibilityLevel>,
    pub level_after: Option<CredibilityLevel>,
    pub clean_credits: u32,
    pub settlement: Settlement,
}

/// Run the four checks on one log entry, first failure wins:
/// collision, both signatures, edit count, token coverage.
pub fn check_entry<B: Backend>(
    entry: &EditLogEntry<B>,
    log: &EditLog<B>,
    token: &PrivilegeToken<B>,
) -> Verdict {
    let (old, new) = (&entry.old_tuple, &entry.new_tuple);
    if old.ch != new.ch
        || old.h_prime != new.h_prime
        || !chameleon_equation_holds(old)
        || !chameleon_equation_holds(new)
    {
        return Verdict::Violation(ViolationKind::BadCollision);
    }
    if !signature_holds(old) || !signature_holds(new) {
        return Verdict::Violation(ViolationKind::BadSignature);
    }
    if log.for_token(token.id).count() as u64 > u64::from(token.request.n) {
        return Verdict::Violation(ViolationKind::OverCount);
    }
    let target = entry.target;
    let index_bound = token.request.n == 1 && token.request.edit_type == target.edit_type();
    if !token.kind.covers(target.edit_type())
        || token.request.requester != entry.editor
        || (index_bound && token.request.index != target.index())
    {
        return Verdict::Violation(ViolationKind::TokenMisuse);
    }
    Verdict::Clean
}

/// Look up the entry and its token, then check.
pub fn audit<B: Backend>(
    entry_id: u64,
    log: &EditLog<B>,
    pts: &Pts<B>,
) -> Result<Verdict, AuditError> {
    let entry = log.get(entry_id).ok_or(AuditError::MissingLog(entry_id))?;
    let token = pts.current(entry.token_id).ok_or(AuditError::UnknownToken(entry.token_id))?;
    Ok(check_entry(entry, log, &token))
}

/// Apply a verdict to a modifier's standing.
pub fn adjust_level(verdict: Verdict, standing: Standing, policy: &AuditPolicy) -> Standing {
    let Some(level) = standing.level else {
        return standing;
    };
    match verdict {
        Verdict::Violation(_) => Standing { level: level.demoted(), clean_credits: 0 },
        Verdict::Clean => {
            let credits = standing.clean_credits + 1;
            if credits >= policy.promotion_threshold {
                Standing { level: Some(level.promoted()), clean_credits: 0 }
            } else {
                Standing { level: Some(level), clean_credits: credits }
            }
        }
    }
}

/// Move the token's escrow: slash on violation, refund once a clean token is
/// used up, hold otherwise.
pub fn settle<B: Backend>(verdict: Verdict, token_id: u64, reporter: &str, pts: &mut Pts<B>) -> Settlement {
    match verdict {
        Verdict::Violation(_) => match pts.ledger.slash(token_id, reporter) {
            Some((to_reporter, burned)) => Settlement::Slash { reporter: reporter.into(), to_reporter, burned },
            None => Settlement::Held,
        },
        Verdict::Clean if pts.uses_remaining(token_id) == Some(0) => match pts.ledger.release(token_id) {
            Some(escrow) => Settlement::Refund { holder: escrow.holder, amount: escrow.amount },
            None => Settlement::Held,
        },
        Verdict::Clean => Settlement::Held,
    }
}

/// Full report handling: audit, adjust standing, settle deposit.
pub fn audit_report<B: Backend>(
    report_id: u64,
    entry_id: u64,
    reporter: &str,
    log: &EditLog<B>,
    pts: &mut Pts<B>,
    standing: &mut Standing,
    policy: &AuditPolicy,
) -> Result<AuditRecord, AuditError> {
    let verdict = audit(entry_id, log, pts)?;
    let entry = log.get(entry_id).expect("audited entry exists");
    let before = *standing;
    *standing = adjust_level(verdict, before, policy);
    let settlement = settle(verdict, entry.token_id, reporter, pts);
    Ok(AuditRecord {
        report_id,
        entry_id,
        modifier: entry.editor.clone(),
        token_id: entry.token_id,
        verdict,
        level_before: before.level,
        level_after: standing.level,
        clean_credits: standing.clean_credits,
        settlement,
    })
}
