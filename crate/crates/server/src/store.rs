//! Append-only files backing each session.
//!
//! `<id>.ndjson` holds the event log, one event per line. `<id>.access.json`
//! holds the join codes and issued participant tokens, which are not part of
//! the experiment record.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use ellsberg_core::engine::{read_log, replay, write_log, LoggedEvent, SessionRecord};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JoinCodes {
    pub subject: String,
    pub monitor: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Access {
    pub codes: JoinCodes,
    /// Token to participant id.
    pub tokens: HashMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Store {
    dir: PathBuf,
}

fn storage(err: impl std::fmt::Display) -> ApiError {
    ApiError::Storage(err.to_string())
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Store, ApiError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(storage)?;
        Ok(Store { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ndjson"))
    }

    fn access_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.access.json"))
    }

    pub fn append(&self, id: &str, event: &LoggedEvent) -> Result<(), ApiError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.log_path(id))
            .map_err(storage)?;
        write_log(std::slice::from_ref(event), &mut file).map_err(storage)?;
        file.flush().map_err(storage)
    }

    pub fn save_access(&self, id: &str, access: &Access) -> Result<(), ApiError> {
        let tmp = self.dir.join(format!("{id}.access.json.tmp"));
        let body = serde_json::to_vec_pretty(access).map_err(storage)?;
        fs::write(&tmp, body).map_err(storage)?;
        fs::rename(&tmp, self.access_path(id)).map_err(storage)
    }

    /// Replays every stored session.
    pub fn load_all(&self) -> Result<Vec<(SessionRecord, Access)>, ApiError> {
        let mut sessions = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(storage)? {
            let path = entry.map_err(storage)?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(id) = name.strip_suffix(".ndjson") else {
                continue;
            };
            let file = fs::File::open(&path).map_err(storage)?;
            let log = read_log(BufReader::new(file))?;
            let record = replay(&log)?;
            let access = match fs::read(self.access_path(id)) {
                Ok(bytes) => serde_json::from_slice(&bytes).map_err(storage)?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Access::default(),
                Err(e) => return Err(storage(e)),
            };
            sessions.push((record, access));
        }
        sessions.sort_by(|a, b| a.0.session_id.cmp(&b.0.session_id));
        Ok(sessions)
    }
}
