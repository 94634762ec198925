//! Session registry with durable, append-only event logs.
//!
//! Each session owns `<state_dir>/<session_id>.jsonl`. An event is appended
//! and synced before it is applied in memory, so on restart replaying the
//! logs rebuilds exactly the acknowledged state. A torn final line left by a
//! crash mid-write is ignored.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use crate::error::ServerError;
use crate::session::{AnnotationSession, Event};

pub struct Slot {
    pub session: AnnotationSession,
    log: Option<File>,
}

impl Slot {
    /// Persists `event`, then applies it.
    pub fn record(&mut self, event: &Event) -> Result<(), ServerError> {
        // Validate against a copy first so the log never holds a rejected event.
        let mut next = self.session.clone();
        next.apply(event)?;
        if let Some(f) = &mut self.log {
            append(f, event)?;
        }
        self.session = next;
        Ok(())
    }
}

fn append(f: &mut File, event: &Event) -> Result<(), ServerError> {
    let mut line = serde_json::to_string(event).map_err(|e| ServerError::Invalid(e.to_string()))?;
    line.push('\n');
    f.write_all(line.as_bytes()).map_err(vcrop_core::Error::from)?;
    f.sync_data().map_err(vcrop_core::Error::from)?;
    Ok(())
}

#[derive(Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Slot>>>>,
}

impl SessionStore {
    /// Sessions kept in memory only.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `dir`, replaying every session log found there.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ServerError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(vcrop_core::Error::from)?;
        let mut sessions = BTreeMap::new();
        let mut logs: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(vcrop_core::Error::from)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        for path in logs {
            let session = replay(&path)?;
            let log = OpenOptions::new().append(true).open(&path).map_err(vcrop_core::Error::from)?;
            sessions.insert(
                session.session_id.clone(),
                Arc::new(Mutex::new(Slot {
                    session,
                    log: Some(log),
                })),
            );
        }
        Ok(Self {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn create(&self, session: AnnotationSession) -> Result<(), ServerError> {
        let created = Event::Created {
            session_id: session.session_id.clone(),
            annotator_id: session.annotator_id.clone(),
            items: session.items.clone(),
        };
        let log = match &self.dir {
            Some(dir) => {
                let path = dir.join(format!("{}.jsonl", session.session_id));
                let mut f = OpenOptions::new()
                    .create_new(true)
                    .append(true)
                    .open(&path)
                    .map_err(vcrop_core::Error::from)?;
                append(&mut f, &created)?;
                Some(f)
            }
            None => None,
        };
        let id = session.session_id.clone();
        self.sessions
            .write()
            .expect("session registry poisoned")
            .insert(id, Arc::new(Mutex::new(Slot { session, log })));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ServerError> {
        self.sessions
            .read()
            .expect("session registry poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServerError::NotFound(format!("unknown session '{id}'")))
    }

    /// Snapshot of every session, ordered by id.
    pub fn snapshot(&self) -> Vec<AnnotationSession> {
        let slots: Vec<_> = self.sessions.read().expect("session registry poisoned").values().cloned().collect();
        slots.iter().map(|s| lock(s).session.clone()).collect()
    }
}

pub fn lock(slot: &Mutex<Slot>) -> MutexGuard<'_, Slot> {
    slot.lock().unwrap_or_else(|p| p.into_inner())
}

fn replay(path: &Path) -> Result<AnnotationSession, ServerError> {
    let text = std::fs::read_to_string(path).map_err(vcrop_core::Error::from)?;
    let torn_tail = !text.is_empty() && !text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let bad = |n: usize, msg: String| ServerError::Invalid(format!("{}:{}: {msg}", path.display(), n + 1));
    let mut session: Option<AnnotationSession> = None;
    for (n, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(_) if torn_tail && n + 1 == lines.len() => break,
            Err(e) => return Err(bad(n, e.to_string())),
        };
        match (&mut session, &event) {
            (None, Event::Created {
                session_id,
                annotator_id,
                items,
            }) => session = Some(AnnotationSession::new(session_id.clone(), annotator_id.clone(), items.clone())),
            (None, _) => return Err(bad(n, "log does not start with a created event".into())),
            (Some(_), Event::Created { .. }) => return Err(bad(n, "second created event".into())),
            (Some(s), e) => s.apply(e).map_err(|err| bad(n, err.to_string()))?,
        }
    }
    if torn_tail {
        // drop the partial line so the next append starts cleanly
        let keep = text.rfind('\n').map_or(0, |i| i + 1);
        let f = OpenOptions::new().write(true).open(path).map_err(vcrop_core::Error::from)?;
        f.set_len(keep as u64).map_err(vcrop_core::Error::from)?;
    }
    session.ok_or_else(|| ServerError::Invalid(format!("{}: empty session log", path.display())))
}
