use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::rag::{CohortOutcome, CohortSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Done | JobState::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Cohort,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobHandle {
    pub job_id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: Progress,
    pub result_path: Option<PathBuf>,
}

/// Status body of `GET /v1/cohorts/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    #[serde(flatten)]
    pub handle: JobHandle,
    pub spec: CohortSpec,
    pub error: Option<String>,
    #[serde(flatten)]
    pub outcome: Option<CohortOutcome>,
}

#[derive(Debug)]
struct Job {
    status: JobStatus,
}

/// Shared table of cohort jobs. State only moves forward and progress
/// counters never decrease.
#[derive(Debug, Default, Clone)]
pub struct JobRegistry {
    jobs: Arc<Mutex<HashMap<String, Job>>>,
    seq: Arc<AtomicU64>,
}

impl JobRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, spec: CohortSpec) -> JobHandle {
        let n = self.seq.fetch_add(1, Ordering::SeqCst) + 1;
        let handle = JobHandle {
            job_id: format!("cohort-{n:06}"),
            kind: JobKind::Cohort,
            state: JobState::Queued,
            progress: Progress::default(),
            result_path: None,
        };
        let status = JobStatus { handle: handle.clone(), spec, error: None, outcome: None };
        self.jobs.lock().unwrap().insert(handle.job_id.clone(), Job { status });
        handle
    }

    pub fn get(&self, id: &str) -> Option<JobStatus> {
        self.jobs.lock().unwrap().get(id).map(|j| j.status.clone())
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobStatus)) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            f(&mut job.status);
        }
    }

    fn advance(status: &mut JobStatus, to: JobState) -> bool {
        if status.handle.state.is_terminal() || to < status.handle.state {
            return false;
        }
        status.handle.state = to;
        true
    }

    pub fn start(&self, id: &str) {
        self.update(id, |s| {
            Self::advance(s, JobState::Running);
        });
    }

    pub fn progress(&self, id: &str, done: usize, total: usize) {
        self.update(id, |s| {
            let p = &mut s.handle.progress;
            p.total = p.total.max(total);
            p.done = p.done.max(done).min(p.total);
        });
    }

    pub fn finish(&self, id: &str, outcome: CohortOutcome, result_path: Option<PathBuf>) {
        self.update(id, |s| {
            if Self::advance(s, JobState::Done) {
                let total = outcome.stats.candidates;
                s.handle.progress = Progress { done: total, total: total.max(s.handle.progress.total) };
                s.handle.result_path = result_path;
                s.outcome = Some(outcome);
            }
        });
    }

    pub fn fail(&self, id: &str, message: String) {
        self.update(id, |s| {
            if Self::advance(s, JobState::Failed) {
                s.error = Some(message);
            }
        });
    }
}
