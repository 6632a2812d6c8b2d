//! Pause/resume snapshots: a version header line followed by one JSON
//! document holding the config, the world and the token meter.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::world::WorldState;
use crate::backend::MeterSnapshot;
use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &str = "AGENT-SOCIETY-SNAPSHOT";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub config: RunConfig,
    pub world: WorldState,
    pub meter: MeterSnapshot,
}

pub fn write_snapshot<W: Write>(snap: &Snapshot, mut out: W) -> Result<()> {
    writeln!(out, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}")?;
    serde_json::to_writer(&mut out, snap)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<Snapshot> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(SNAPSHOT_MAGIC) {
        return Err(Error::Snapshot("missing snapshot header".into()));
    }
    let version = parts.next().unwrap_or("").to_string();
    if version != SNAPSHOT_VERSION.to_string() {
        return Err(Error::SnapshotVersion {
            found: version,
            expected: SNAPSHOT_VERSION.to_string(),
        });
    }
    let mut body = String::new();
    input.read_to_string(&mut body)?;
    serde_json::from_str(&body).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn save_snapshot(snap: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_snapshot(snap, &mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    match File::open(path) {
        Ok(f) => read_snapshot(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::NotFound(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}
