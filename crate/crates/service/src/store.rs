//! Append-only event log plus periodic snapshots.
//!
//! `events.log` holds one event per line as `<crc32 hex>\t<json>`. A line is
//! durable once [`Store::append`] returns (the file is synced). On open, the
//! longest valid prefix of the log is kept; anything after the first bad line
//! is cut off and reported. `snapshot.json` holds the state after some event
//! so that opening does not need to replay the whole log.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const LOG_FILE: &str = "events.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store is unreadable: {0}")]
    Corrupt(String),
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> StoreError {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record<E> {
    pub seq: u64,
    pub event: E,
}

#[derive(Serialize, Deserialize)]
struct Snapshot<S> {
    seq: u64,
    state: S,
}

/// What [`Store::open`] found on disk.
#[derive(Debug)]
pub struct Loaded<S, E> {
    /// Latest usable snapshot and the sequence number it covers.
    pub snapshot: Option<(u64, S)>,
    /// Valid events after the snapshot, in order.
    pub events: Vec<Record<E>>,
    pub recovery: Recovery,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Recovery {
    /// Sequence number of the last valid event (0 for an empty log).
    pub last_seq: u64,
    /// Set when a damaged tail was cut off: the byte offset where the log now ends.
    pub truncated_at: Option<u64>,
    /// Number of lines dropped with the damaged tail.
    pub dropped_lines: usize,
    pub snapshot_seq: Option<u64>,
}

#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    log: File,
    last_seq: u64,
}

pub fn encode_line<E: Serialize>(record: &Record<E>) -> String {
    let json = serde_json::to_string(record).expect("events serialize");
    format!("{:08x}\t{json}\n", crc32fast::hash(json.as_bytes()))
}

fn decode_line<E: DeserializeOwned>(line: &str) -> Option<Record<E>> {
    let (crc, json) = line.split_once('\t')?;
    let crc = u32::from_str_radix(crc, 16).ok()?;
    if crc32fast::hash(json.as_bytes()) != crc {
        return None;
    }
    serde_json::from_str(json).ok()
}

impl Store {
    /// Opens (creating if needed) the store in `dir` and reads it back.
    pub fn open<S, E>(dir: &Path) -> Result<(Store, Loaded<S, E>), StoreError>
    where
        S: DeserializeOwned,
        E: DeserializeOwned,
    {
        fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
        let log_path = dir.join(LOG_FILE);
        let mut log = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&log_path)
            .map_err(|e| StoreError::io(&log_path, e))?;

        let mut recovery = Recovery::default();
        let mut records = Vec::new();
        let mut valid_len = 0u64;
        {
            let mut reader = BufReader::new(&log);
            reader.seek(SeekFrom::Start(0)).map_err(|e| StoreError::io(&log_path, e))?;
            let mut buf = Vec::new();
            let mut bad = false;
            loop {
                buf.clear();
                let n = reader.read_until(b'\n', &mut buf).map_err(|e| StoreError::io(&log_path, e))?;
                if n == 0 {
                    break;
                }
                if bad {
                    recovery.dropped_lines += 1;
                    continue;
                }
                let complete = buf.ends_with(b"\n");
                let record = std::str::from_utf8(&buf)
                    .ok()
                    .filter(|_| complete)
                    .and_then(|l| decode_line::<E>(l.trim_end_matches('\n')))
                    .filter(|r| r.seq == recovery.last_seq + 1);
                match record {
                    Some(r) => {
                        recovery.last_seq = r.seq;
                        valid_len += n as u64;
                        records.push(r);
                    }
                    None => {
                        bad = true;
                        recovery.dropped_lines += 1;
                    }
                }
            }
        }
        if recovery.dropped_lines > 0 {
            log.set_len(valid_len).map_err(|e| StoreError::io(&log_path, e))?;
            log.sync_all().map_err(|e| StoreError::io(&log_path, e))?;
            recovery.truncated_at = Some(valid_len);
            tracing::warn!(last_seq = recovery.last_seq, dropped = recovery.dropped_lines, "cut damaged tail from event log");
        }
        log.seek(SeekFrom::End(0)).map_err(|e| StoreError::io(&log_path, e))?;

        let snapshot_path = dir.join(SNAPSHOT_FILE);
        let snapshot = match fs::read(&snapshot_path) {
            Ok(bytes) => match serde_json::from_slice::<Snapshot<S>>(&bytes) {
                Ok(s) if s.seq <= recovery.last_seq => Some((s.seq, s.state)),
                Ok(_) => {
                    tracing::warn!("snapshot is ahead of the event log; replaying from the start");
                    None
                }
                Err(e) => {
                    tracing::warn!(error = %e, "ignoring unreadable snapshot");
                    None
                }
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(StoreError::io(&snapshot_path, e)),
        };
        recovery.snapshot_seq = snapshot.as_ref().map(|(seq, _)| *seq);
        let after = snapshot.as_ref().map_or(0, |(seq, _)| *seq);
        records.retain(|r| r.seq > after);

        let store = Store {
            dir: dir.to_path_buf(),
            log,
            last_seq: recovery.last_seq,
        };
        Ok((store, Loaded { snapshot, events: records, recovery }))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    /// Appends one event and syncs it to disk. Returns its sequence number.
    pub fn append<E: Serialize>(&mut self, event: &E) -> Result<u64, StoreError> {
        let record = Record { seq: self.last_seq + 1, event };
        let line = encode_line(&record);
        let path = self.dir.join(LOG_FILE);
        self.log.write_all(line.as_bytes()).map_err(|e| StoreError::io(&path, e))?;
        self.log.sync_data().map_err(|e| StoreError::io(&path, e))?;
        self.last_seq = record.seq;
        Ok(record.seq)
    }

    /// Writes the state after the latest event, replacing any older snapshot.
    pub fn write_snapshot<S: Serialize>(&self, state: &S) -> Result<(), StoreError> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join("snapshot.json.tmp");
        let bytes = serde_json::to_vec(&Snapshot { seq: self.last_seq, state }).expect("state serializes");
        let mut file = File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
        file.write_all(&bytes).map_err(|e| StoreError::io(&tmp, e))?;
        file.sync_all().map_err(|e| StoreError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| StoreError::io(&path, e))?;
        Ok(())
    }
}
