//! Worker pool and round-robin dispatch.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use tokio::sync::Mutex;
use tokio::task::JoinSet;

use super::backend::{Backend, BackendError, BackendProfile, BackendState, Served, WorkerSlot};
use super::request::{OptionResult, OptionStatus, SubRequest};

pub type BackendFactory = Arc<dyn Fn(usize) -> Box<dyn Backend> + Send + Sync>;

pub struct Worker {
    pub id: usize,
    slot: Mutex<WorkerSlot>,
}

impl Worker {
    pub async fn state(&self) -> BackendState {
        self.slot.lock().await.state()
    }

    pub async fn serve(&self, sub: &SubRequest) -> Result<Served, BackendError> {
        self.slot.lock().await.serve(sub).await
    }

    pub async fn warm(&self) -> Result<(), BackendError> {
        self.slot.lock().await.warm().await
    }
}

/// Outcome of one sub-batch after dispatch.
#[derive(Debug, Clone)]
pub struct SubOutcome {
    /// Worker the sub-batch was first assigned to.
    pub assigned: usize,
    /// Worker that produced the result, if any did.
    pub served_by: Option<usize>,
    pub processing: Duration,
    pub cold: bool,
}

#[derive(Debug, Clone)]
pub struct Dispatched {
    pub results: Vec<OptionResult>,
    pub subs: Vec<SubOutcome>,
}

/// Workers for one backend profile.
pub struct Pool {
    name: String,
    profile: BackendProfile,
    size: usize,
    factory: BackendFactory,
    workers: RwLock<Arc<Vec<Arc<Worker>>>>,
    cursor: AtomicUsize,
    retry: bool,
}

impl Pool {
    pub fn new(name: impl Into<String>, profile: BackendProfile, size: usize) -> Self {
        let p = profile.clone();
        Self::with_factory(name, profile, size, Arc::new(move |_| p.build()))
    }

    /// Pool whose worker `i` runs `factory(i)`; used to inject custom backends.
    pub fn with_factory(
        name: impl Into<String>,
        profile: BackendProfile,
        size: usize,
        factory: BackendFactory,
    ) -> Self {
        let pool = Self {
            name: name.into(),
            profile,
            size,
            factory,
            workers: RwLock::new(Arc::new(Vec::new())),
            cursor: AtomicUsize::new(0),
            retry: true,
        };
        pool.restart();
        pool
    }

    /// Enables or disables the single retry on the next worker.
    pub fn with_retry(mut self, retry: bool) -> Self {
        self.retry = retry;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn profile(&self) -> &BackendProfile {
        &self.profile
    }

    pub fn chunk_size(&self) -> usize {
        self.profile.chunk_size
    }

    pub fn workers(&self) -> Arc<Vec<Arc<Worker>>> {
        self.workers.read().expect("pool lock").clone()
    }

    /// Replaces every worker with a fresh, uninitialized one and rewinds the
    /// round-robin cursor. In-flight requests finish on the old workers.
    pub fn restart(&self) {
        let fresh: Vec<Arc<Worker>> = (0..self.size)
            .map(|id| {
                Arc::new(Worker {
                    id,
                    slot: Mutex::new(WorkerSlot::new((self.factory)(id), self.profile.clone())),
                })
            })
            .collect();
        *self.workers.write().expect("pool lock") = Arc::new(fresh);
        self.cursor.store(0, Ordering::SeqCst);
    }

    /// Warms every worker that is not yet warm. Returns the number of
    /// workers that failed to warm.
    pub async fn warm_all(&self) -> usize {
        let mut set = JoinSet::new();
        for w in self.workers().iter() {
            let w = w.clone();
            set.spawn(async move { w.warm().await.is_err() });
        }
        let mut failed = 0;
        while let Some(r) = set.join_next().await {
            if r.unwrap_or(true) {
                failed += 1;
            }
        }
        failed
    }

    /// Reserves `count` consecutive round-robin slots and returns the worker
    /// index for each.
    pub fn assign(&self, count: usize) -> Vec<usize> {
        let n = self.size.max(1);
        let start = self.cursor.fetch_add(count, Ordering::SeqCst);
        (0..count).map(|k| (start + k) % n).collect()
    }

    /// Sends every sub-batch to its round-robin worker concurrently and merges
    /// the results in option order. A failed sub-batch is retried once on the
    /// next worker; if that fails too, its options get `BackendError`.
    pub async fn dispatch(&self, subs: Vec<SubRequest>) -> Dispatched {
        let total: usize = subs.iter().map(SubRequest::len).sum();
        let base = subs.first().map_or(0, |s| s.offset);
        let workers = self.workers();
        let mut results = vec![OptionResult::failed(OptionStatus::BackendError); total];
        let mut outcomes: Vec<Option<SubOutcome>> = vec![None; subs.len()];

        if workers.is_empty() {
            let subs = subs
                .iter()
                .map(|_| SubOutcome {
                    assigned: 0,
                    served_by: None,
                    processing: Duration::ZERO,
                    cold: false,
                })
                .collect();
            return Dispatched { results, subs };
        }

        let assignment = self.assign(subs.len());
        let retry = self.retry && workers.len() > 1;
        let mut set = JoinSet::new();
        for (k, (sub, first)) in subs.into_iter().zip(assignment).enumerate() {
            let workers = workers.clone();
            set.spawn(async move {
                let order = [first, (first + 1) % workers.len()];
                let attempts = if retry { 2 } else { 1 };
                let mut spent = Duration::ZERO;
                let mut served = None;
                for &w in &order[..attempts] {
                    match workers[w].serve(&sub).await {
                        Ok(s) => {
                            spent += s.processing;
                            served = Some((w, s));
                            break;
                        }
                        Err(e) => {
                            tracing::warn!(worker = w, error = %e, "sub-batch failed");
                        }
                    }
                }
                (k, sub.offset, sub.len(), first, served, spent)
            });
        }

        while let Some(joined) = set.join_next().await {
            let Ok((k, offset, len, assigned, served, spent)) = joined else {
                continue;
            };
            let at = offset - base;
            let outcome = match served {
                Some((w, s)) if s.results.len() == len => {
                    results[at..at + len].copy_from_slice(&s.results);
                    SubOutcome {
                        assigned,
                        served_by: Some(w),
                        processing: spent,
                        cold: s.cold,
                    }
                }
                _ => SubOutcome {
                    assigned,
                    served_by: None,
                    processing: spent,
                    cold: false,
                },
            };
            outcomes[k] = Some(outcome);
        }

        let subs = outcomes
            .into_iter()
            .map(|o| {
                o.unwrap_or(SubOutcome {
                    assigned: 0,
                    served_by: None,
                    processing: Duration::ZERO,
                    cold: false,
                })
            })
            .collect();
        Dispatched { results, subs }
    }
}
