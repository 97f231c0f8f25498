//! Append-only JSON-lines ledger. Each line carries the previous line's
//! checksum and sha256(prev || "\n" || event JSON), so any edit breaks the
//! chain from that line on.

use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::state::Event;
use super::EngineError;

pub const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

pub fn chain(prev: &str, event_json: &str) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(b"\n");
    h.update(event_json.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Deserialize)]
struct Line<'a> {
    seq: u64,
    prev: String,
    checksum: String,
    #[serde(borrow)]
    event: &'a RawValue,
}

#[derive(Debug, Clone)]
pub struct LedgerContents {
    pub events: Vec<Event>,
    /// Checksum of the last intact line, or [`GENESIS`].
    pub head: String,
    /// Byte length of the intact prefix.
    pub valid_len: u64,
    /// A final line without its newline, left by an interrupted write.
    pub torn_tail: bool,
}

/// Reads and verifies a ledger. A trailing fragment without a newline is
/// reported as `torn_tail`; any other damage is an error.
pub fn read_ledger(path: &Path) -> Result<LedgerContents, EngineError> {
    let text = fs::read_to_string(path)?;
    let mut events = Vec::new();
    let mut head = GENESIS.to_string();
    let mut offset = 0usize;
    let mut torn_tail = false;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let Some(body) = raw.strip_suffix('\n') else {
            torn_tail = true;
            break;
        };
        let bad = |msg: String| EngineError::Ledger { line: i + 1, msg };
        let line: Line = serde_json::from_str(body).map_err(|e| bad(e.to_string()))?;
        if line.seq != i as u64 {
            return Err(bad(format!("sequence number {} where {i} was expected", line.seq)));
        }
        if line.prev != head {
            return Err(bad("previous checksum does not match the chain".into()));
        }
        let expect = chain(&head, line.event.get());
        if line.checksum != expect {
            return Err(bad("checksum mismatch".into()));
        }
        let event: Event = serde_json::from_str(line.event.get()).map_err(|e| bad(e.to_string()))?;
        events.push(event);
        head = expect;
        offset += raw.len();
    }
    Ok(LedgerContents {
        events,
        head,
        valid_len: offset as u64,
        torn_tail,
    })
}

pub struct LedgerWriter {
    file: File,
    seq: u64,
    head: String,
}

impl LedgerWriter {
    /// Fails if the file already exists.
    pub fn create(path: &Path) -> Result<Self, EngineError> {
        let file = OpenOptions::new().write(true).create_new(true).open(path)?;
        Ok(LedgerWriter {
            file,
            seq: 0,
            head: GENESIS.to_string(),
        })
    }

    /// Continues a verified ledger, cutting off a torn tail first.
    pub fn append_to(path: &Path, contents: &LedgerContents) -> Result<Self, EngineError> {
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(contents.valid_len)?;
        let mut w = LedgerWriter {
            file,
            seq: contents.events.len() as u64,
            head: contents.head.clone(),
        };
        w.file.sync_data()?;
        w.file.seek(SeekFrom::End(0))?;
        Ok(w)
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    /// Writes one line and syncs it; returns the event JSON as written.
    pub fn append(&mut self, event: &Event) -> Result<String, EngineError> {
        let json = serde_json::to_string(event)?;
        let checksum = chain(&self.head, &json);
        let line = format!(
            "{{\"seq\":{},\"prev\":\"{}\",\"checksum\":\"{}\",\"event\":{}}}\n",
            self.seq, self.head, checksum, json
        );
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        self.seq += 1;
        self.head = checksum;
        Ok(json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::al_engine::state::{RunCompleted, StopReason};

    fn done(n: usize) -> Event {
        Event::RunCompleted(RunCompleted {
            reason: StopReason::CycleCap,
            affinity_cycles: n,
        })
    }

    #[test]
    fn chain_verifies_and_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut w = LedgerWriter::create(&path).unwrap();
        w.append(&done(1)).unwrap();
        w.append(&done(2)).unwrap();
        let c = read_ledger(&path).unwrap();
        assert_eq!(c.events, vec![done(1), done(2)]);
        assert!(!c.torn_tail);
        assert_eq!(c.head, w.head());

        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen("\"affinity_cycles\":1", "\"affinity_cycles\":7", 1)).unwrap();
        assert!(matches!(read_ledger(&path), Err(EngineError::Ledger { line: 1, .. })));

        let lines: Vec<&str> = text.lines().collect();
        fs::write(&path, format!("{}\n", lines[1])).unwrap();
        assert!(matches!(read_ledger(&path), Err(EngineError::Ledger { line: 1, .. })));
    }

    #[test]
    fn torn_tail_is_cut_on_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut w = LedgerWriter::create(&path).unwrap();
        w.append(&done(1)).unwrap();
        drop(w);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"seq\":1,\"pr").unwrap();
        drop(f);
        let c = read_ledger(&path).unwrap();
        assert!(c.torn_tail);
        assert_eq!(c.events.len(), 1);
        let mut w = LedgerWriter::append_to(&path, &c).unwrap();
        w.append(&done(2)).unwrap();
        let c = read_ledger(&path).unwrap();
        assert!(!c.torn_tail);
        assert_eq!(c.events, vec![done(1), done(2)]);
    }
}
