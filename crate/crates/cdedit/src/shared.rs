//! A PTS handle shareable across threads.

use std::sync::{Arc, Mutex, MutexGuard};

use cdedit_core::bilinear::Backend;
use cdedit_core::token::{PrivilegeToken, Pts, TokenError};

/// Serializes every state change through one lock; verification of a token's
/// signature does not need it.
#[derive(Debug)]
pub struct SharedPts<B: Backend> {
    inner: Arc<Mutex<Pts<B>>>,
}

impl<B: Backend> Clone for SharedPts<B> {
    fn clone(&self) -> Self {
        Self { inner: Arc::clone(&self.inner) }
    }
}

impl<B: Backend> SharedPts<B> {
    pub fn new(pts: Pts<B>) -> Self {
        Self { inner: Arc::new(Mutex::new(pts)) }
    }

    pub fn lock(&self) -> MutexGuard<'_, Pts<B>> {
        self.inner.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn consume_use(&self, id: u64, now: u64) -> Result<u32, TokenError> {
        self.lock().consume_use(id, now)
    }

    pub fn verify(&self, token: &PrivilegeToken<B>, now: u64) -> bool {
        self.lock().verify(token, now)
    }
}
