//! The engine plus contributor tokens, kept in sync with the event store.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Mutex, RwLock, RwLockReadGuard};

use cep_core::engine::{Command, ContributorId, ContributorProfile, Engine, Outcome, Policy};
use cep_core::Timestamp;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::store::{Recovery, Store, StoreError};

/// Everything that is replayed from the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// First event of every store; fixes the engine policy for its lifetime.
    Init { policy: Policy },
    Register { handle: String, token: String, at: Timestamp },
    Command { command: Command },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformState {
    pub engine: Engine,
    pub tokens: BTreeMap<String, ContributorId>,
}

impl PlatformState {
    pub fn new(policy: Policy) -> PlatformState {
        PlatformState {
            engine: Engine::new(policy),
            tokens: BTreeMap::new(),
        }
    }

    pub fn apply(&mut self, event: &Event) -> cep_core::Result<Outcome> {
        match event {
            Event::Init { policy } => {
                *self = PlatformState::new(*policy);
                Ok(Outcome::Skipped { next_item: None })
            }
            Event::Register { handle, token, at } => {
                let profile = self.engine.register_contributor(handle, *at)?;
                self.tokens.insert(token.clone(), profile.id.clone());
                Ok(Outcome::Registered(profile))
            }
            Event::Command { command } => self.engine.execute(command),
        }
    }

    /// SHA-256 of the canonical JSON form of the whole state.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn contributor_for(&self, token: &str) -> Option<&ContributorId> {
        self.tokens.get(token)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Engine(#[from] cep_core::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Serialized writer, concurrent readers.
#[derive(Debug)]
pub struct Platform {
    state: RwLock<PlatformState>,
    store: Mutex<Store>,
    snapshot_every: u64,
}

fn fresh_token() -> String {
    let mut bytes = [0u8; 24];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

impl Platform {
    /// Opens the store in `dir`, replaying it. `policy` only applies when the
    /// store is new; an existing store keeps the policy it was created with.
    pub fn open(dir: &Path, policy: Policy, snapshot_every: u64) -> Result<(Platform, Recovery), StoreError> {
        let (mut store, loaded) = Store::open::<PlatformState, Event>(dir)?;
        let mut state = match loaded.snapshot {
            Some((_, state)) => state,
            None => PlatformState::new(policy),
        };
        for record in &loaded.events {
            // events that failed when first applied never reach the log, so
            // a failure here means the log and the code disagree
            state
                .apply(&record.event)
                .map_err(|e| StoreError::Corrupt(format!("event {} does not replay: {e}", record.seq)))?;
        }
        if store.last_seq() == 0 {
            policy.validate().map_err(|e| StoreError::Corrupt(e.to_string()))?;
            store.append(&Event::Init { policy })?;
        }
        let platform = Platform {
            state: RwLock::new(state),
            store: Mutex::new(store),
            snapshot_every,
        };
        Ok((platform, loaded.recovery))
    }

    pub fn read(&self) -> RwLockReadGuard<'_, PlatformState> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies an event and makes it durable before returning.
    pub fn submit(&self, event: Event) -> Result<Outcome, ServiceError> {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let mut store = self.store.lock().unwrap_or_else(|e| e.into_inner());
        let outcome = state.apply(&event)?;
        if let Err(e) = store.append(&event) {
            // the in-memory state is ahead of the log; rebuild it from disk
            tracing::error!(error = %e, "event append failed, reloading state");
            let dir = store.dir().to_path_buf();
            drop(store);
            if let Ok((reloaded, _)) = Platform::open(&dir, *state.engine.policy(), self.snapshot_every) {
                *state = reloaded.state.into_inner().unwrap_or_else(|e| e.into_inner());
                *self.store.lock().unwrap_or_else(|e| e.into_inner()) =
                    reloaded.store.into_inner().unwrap_or_else(|e| e.into_inner());
            }
            return Err(e.into());
        }
        if self.snapshot_every > 0 && store.last_seq().is_multiple_of(self.snapshot_every) {
            if let Err(e) = store.write_snapshot(&*state) {
                tracing::warn!(error = %e, "snapshot failed; the log still has every event");
            }
        }
        Ok(outcome)
    }

    pub fn execute(&self, command: Command) -> Result<Outcome, ServiceError> {
        self.submit(Event::Command { command })
    }

    /// Registers a contributor and issues its bearer token.
    pub fn register(&self, handle: &str, at: Timestamp) -> Result<(ContributorProfile, String), ServiceError> {
        let token = fresh_token();
        let event = Event::Register {
            handle: handle.to_string(),
            token: token.clone(),
            at,
        };
        match self.submit(event)? {
            Outcome::Registered(profile) => Ok((profile, token)),
            other => unreachable!("register produced {other:?}"),
        }
    }

    pub fn digest(&self) -> String {
        self.read().digest()
    }

    pub fn last_seq(&self) -> u64 {
        self.store.lock().unwrap_or_else(|e| e.into_inner()).last_seq()
    }

    /// Writes a snapshot of the current state.
    pub fn snapshot(&self) -> Result<(), StoreError> {
        let state = self.read();
        self.store.lock().unwrap_or_else(|e| e.into_inner()).write_snapshot(&*state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cep_core::engine::BatchKind;

    #[test]
    fn reopen_gives_same_digest() {
        let dir = tempfile::tempdir().unwrap();
        let (platform, recovery) = Platform::open(dir.path(), Policy::default(), 3).unwrap();
        assert_eq!(recovery.last_seq, 0);
        let (profile, token) = platform.register("abebe", Timestamp(1)).unwrap();
        platform
            .execute(Command::RequestBatch { contributor: profile.id.clone(), kind: BatchKind::Verify, at: Timestamp(2) })
            .unwrap();
        assert!(platform.register("abebe", Timestamp(3)).is_err());
        let digest = platform.digest();
        assert_eq!(platform.read().contributor_for(&token), Some(&profile.id));
        drop(platform);

        let (platform, recovery) = Platform::open(dir.path(), Policy::default(), 3).unwrap();
        assert_eq!(recovery.last_seq, 3);
        assert_eq!(platform.digest(), digest);
    }

    #[test]
    fn stored_policy_wins_over_new_config() {
        let dir = tempfile::tempdir().unwrap();
        let policy = Policy { quorum: 2, ..Policy::default() };
        drop(Platform::open(dir.path(), policy, 0).unwrap());
        let (platform, _) = Platform::open(dir.path(), Policy::default(), 0).unwrap();
        assert_eq!(platform.read().engine.policy().quorum, 2);
    }
}
