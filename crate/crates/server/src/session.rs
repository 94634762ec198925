//! The annotation session state machine and its event-log representation.
//!
//! A session walks an ordered queue of frames. Each frame accepts up to three
//! attempts; the annotator accepts one explicitly, or the third is accepted
//! automatically and the cursor moves on.

use serde::{Deserialize, Serialize};
use vcrop_core::CropBox;

pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub video_id: String,
    pub frame_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptedItem {
    /// Position in the session queue.
    pub item: usize,
    pub crop: CropBox,
    pub attempt_count: u8,
    /// True when the third attempt was taken without an explicit accept.
    pub auto: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("session is already completed")]
    Done,
    #[error("the current item has no attempt to accept")]
    NothingToAccept,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubmitOutcome {
    pub item: usize,
    /// 1-based.
    pub attempt_number: usize,
    pub auto_accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub annotator_id: String,
    pub items: Vec<Item>,
    pub cursor: usize,
    /// Attempts per queue item, at most three each.
    pub attempts: Vec<Vec<CropBox>>,
    pub accepted: Vec<AcceptedItem>,
}

impl AnnotationSession {
    pub fn new(session_id: String, annotator_id: String, items: Vec<Item>) -> Self {
        let attempts = vec![Vec::new(); items.len()];
        Self {
            session_id,
            annotator_id,
            items,
            cursor: 0,
            attempts,
            accepted: Vec::new(),
        }
    }

    pub fn is_completed(&self) -> bool {
        self.cursor >= self.items.len()
    }

    pub fn current(&self) -> Option<(usize, &Item)> {
        self.items.get(self.cursor).map(|it| (self.cursor, it))
    }

    pub fn pending(&self) -> usize {
        self.items.len() - self.cursor
    }

    pub fn current_attempts(&self) -> &[CropBox] {
        self.attempts.get(self.cursor).map_or(&[], |a| a.as_slice())
    }

    pub fn submit(&mut self, crop: CropBox) -> Result<SubmitOutcome, SessionError> {
        if self.is_completed() {
            return Err(SessionError::Done);
        }
        let item = self.cursor;
        self.attempts[item].push(crop);
        let attempt_number = self.attempts[item].len();
        let auto_accepted = attempt_number == MAX_ATTEMPTS;
        if auto_accepted {
            self.accept_with(true);
        }
        Ok(SubmitOutcome {
            item,
            attempt_number,
            auto_accepted,
        })
    }

    pub fn accept(&mut self) -> Result<AcceptedItem, SessionError> {
        if self.is_completed() {
            return Err(SessionError::Done);
        }
        if self.attempts[self.cursor].is_empty() {
            return Err(SessionError::NothingToAccept);
        }
        Ok(self.accept_with(false))
    }

    fn accept_with(&mut self, auto: bool) -> AcceptedItem {
        let tries = &self.attempts[self.cursor];
        let a = AcceptedItem {
            item: self.cursor,
            crop: *tries.last().expect("accept needs an attempt"),
            attempt_count: tries.len() as u8,
            auto,
        };
        self.accepted.push(a);
        self.cursor += 1;
        a
    }

    pub fn apply(&mut self, event: &Event) -> Result<(), SessionError> {
        match event {
            Event::Created { .. } => Ok(()),
            Event::Attempt { cx, cy, r } => self.submit(CropBox::new(*cx, *cy, *r)).map(|_| ()),
            Event::Accept => self.accept().map(|_| ()),
        }
    }
}

/// One line of a session's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: String,
        annotator_id: String,
        items: Vec<Item>,
    },
    Attempt {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Accept,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<Item> {
        (0..n)
            .map(|i| Item {
                video_id: "v".into(),
                frame_index: 6 * i,
            })
            .collect()
    }

    fn b(x: f64) -> CropBox {
        CropBox::new(x, 540.0, 1.0)
    }

    fn check_invariants(s: &AnnotationSession) {
        assert_eq!(s.accepted.len() + s.pending(), s.items.len());
        assert!(s.attempts.iter().all(|a| a.len() <= MAX_ATTEMPTS));
        for a in &s.accepted {
            assert_eq!(Some(&a.crop), s.attempts[a.item].last());
        }
    }

    #[test]
    fn third_attempt_is_auto_accepted() {
        let mut s = AnnotationSession::new("id".into(), "s01".into(), items(2));
        assert_eq!(s.submit(b(500.0)).unwrap().attempt_number, 1);
        assert_eq!(s.cursor, 0);
        s.submit(b(600.0)).unwrap();
        let third = s.submit(b(700.0)).unwrap();
        assert!(third.auto_accepted);
        assert_eq!(s.cursor, 1);
        assert_eq!(s.accepted[0].crop, b(700.0));
        assert_eq!(s.accepted[0].attempt_count, 3);
        check_invariants(&s);
    }

    #[test]
    fn accept_paths() {
        let mut s = AnnotationSession::new("id".into(), "s01".into(), items(2));
        assert_eq!(s.accept(), Err(SessionError::NothingToAccept));
        s.submit(b(500.0)).unwrap();
        assert_eq!(s.accept().unwrap().crop, b(500.0));
        s.submit(b(510.0)).unwrap();
        s.accept().unwrap();
        assert!(s.is_completed());
        assert_eq!(s.submit(b(1.0)), Err(SessionError::Done));
        assert_eq!(s.accept(), Err(SessionError::Done));
        check_invariants(&s);
    }

    #[test]
    fn empty_session_is_complete() {
        let s = AnnotationSession::new("id".into(), "s01".into(), Vec::new());
        assert!(s.is_completed());
        assert!(s.current().is_none());
    }

    #[test]
    fn replay_reproduces_state() {
        let events = vec![
            Event::Attempt { cx: 500.0, cy: 540.0, r: 1.0 },
            Event::Accept,
            Event::Attempt { cx: 1.0, cy: 540.0, r: 1.0 },
            Event::Attempt { cx: 2.0, cy: 540.0, r: 1.0 },
            Event::Attempt { cx: 3.0, cy: 540.0, r: 1.0 },
        ];
        let mut s = AnnotationSession::new("id".into(), "s01".into(), items(3));
        for e in &events {
            s.apply(e).unwrap();
            check_invariants(&s);
        }
        assert_eq!(s.cursor, 2);
        let line = serde_json::to_string(&events[0]).unwrap();
        assert_eq!(line, r#"{"event":"attempt","cx":500.0,"cy":540.0,"r":1.0}"#);
        assert_eq!(serde_json::from_str::<Event>(&line).unwrap(), events[0]);
    }
}
