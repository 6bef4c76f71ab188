//! Planner running on its own thread behind a single-slot mailbox.

use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use super::{PlanOutput, Planner, PlannerFeedback};
use crate::error::{Error, Result};
use crate::sim::WorldState;

type Slot = Arc<(Mutex<Option<Result<PlanOutput>>>, Condvar)>;

/// Lets the control loop keep running while a plan is being computed. Only
/// the latest finished plan is kept.
pub struct AsyncPlanner {
    requests: Option<Sender<(WorldState, Option<PlannerFeedback>)>>,
    slot: Slot,
    in_flight: bool,
    worker: Option<JoinHandle<()>>,
}

impl AsyncPlanner {
    pub fn spawn<P: Planner + 'static>(mut planner: P) -> Self {
        let (tx, rx) = channel::<(WorldState, Option<PlannerFeedback>)>();
        let slot: Slot = Arc::new((Mutex::new(None), Condvar::new()));
        let worker_slot = slot.clone();
        let worker = std::thread::spawn(move || {
            while let Ok((world, fb)) = rx.recv() {
                let out = planner.plan(&world, fb.as_ref());
                let (lock, cv) = &*worker_slot;
                *lock.lock().expect("planner mailbox") = Some(out);
                cv.notify_all();
            }
        });
        Self { requests: Some(tx), slot, in_flight: false, worker: Some(worker) }
    }

    pub fn in_flight(&self) -> bool {
        self.in_flight
    }

    /// Starts a plan unless one is already running.
    pub fn request(&mut self, world: &WorldState, feedback: Option<&PlannerFeedback>) -> Result<bool> {
        if self.in_flight {
            return Ok(false);
        }
        self.requests
            .as_ref()
            .ok_or_else(|| Error::Api("planner thread stopped".into()))?
            .send((world.clone(), feedback.copied()))
            .map_err(|_| Error::Api("planner thread stopped".into()))?;
        self.in_flight = true;
        Ok(true)
    }

    /// The finished plan, if there is one.
    pub fn try_take(&mut self) -> Option<Result<PlanOutput>> {
        let out = self.slot.0.lock().expect("planner mailbox").take();
        if out.is_some() {
            self.in_flight = false;
        }
        out
    }

    /// Blocks until the running plan finishes.
    pub fn wait(&mut self) -> Result<PlanOutput> {
        if !self.in_flight {
            return Err(Error::Api("no plan in flight".into()));
        }
        let (lock, cv) = &*self.slot;
        let mut guard = lock.lock().expect("planner mailbox");
        loop {
            if let Some(out) = guard.take() {
                self.in_flight = false;
                return out;
            }
            guard = cv.wait(guard).expect("planner mailbox");
        }
    }
}

impl Planner for AsyncPlanner {
    fn plan(&mut self, world: &WorldState, feedback: Option<&PlannerFeedback>) -> Result<PlanOutput> {
        if self.in_flight {
            let _stale = self.wait();
        }
        self.request(world, feedback)?;
        self.wait()
    }
}

impl Drop for AsyncPlanner {
    fn drop(&mut self) {
        self.requests.take();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
