//! Background runs: one thread per evolution, driven over a command channel,
//! publishing immutable per-generation snapshots.

use std::collections::{BTreeMap, VecDeque};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread;

use serde::Serialize;

use crate::evolution::{EvoConfig, Evolution, GenerationSnapshot, RunStats};
use crate::fitness::Evaluator;
use crate::targets::TargetSet;

/// Most recent generations kept in full.
pub const RECENT_SNAPSHOTS: usize = 50;
/// Older generations kept when divisible by this stride.
pub const SNAPSHOT_STRIDE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunState {
    Running,
    Paused,
    Done,
    Failed,
}

impl RunState {
    pub fn is_active(self) -> bool {
        matches!(self, RunState::Running | RunState::Paused)
    }
}

/// Latest generations plus a sparse history.
#[derive(Debug, Default)]
pub struct SnapshotStore {
    recent: VecDeque<GenerationSnapshot>,
    sparse: BTreeMap<usize, GenerationSnapshot>,
}

impl SnapshotStore {
    pub fn push(&mut self, snapshot: GenerationSnapshot) {
        if snapshot.generation.is_multiple_of(SNAPSHOT_STRIDE) {
            self.sparse.insert(snapshot.generation, snapshot.clone());
        }
        self.recent.push_back(snapshot);
        if self.recent.len() > RECENT_SNAPSHOTS {
            self.recent.pop_front();
        }
    }

    pub fn latest(&self) -> Option<&GenerationSnapshot> {
        self.recent.back()
    }

    pub fn get(&self, generation: usize) -> Option<&GenerationSnapshot> {
        self.recent
            .iter()
            .find(|s| s.generation == generation)
            .or_else(|| self.sparse.get(&generation))
    }

    /// Retained generation numbers, ascending.
    pub fn generations(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.sparse.keys().copied().collect();
        out.extend(self.recent.iter().map(|s| s.generation));
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug)]
pub struct RunShared {
    pub state: RunState,
    pub snapshots: SnapshotStore,
    pub stats: RunStats,
    pub error: Option<String>,
}

enum Command {
    Pause,
    Resume,
    Stop,
}

pub struct RunEntry {
    pub id: String,
    pub config: EvoConfig,
    pub targets_name: String,
    /// Used to solve characters on demand and to render.
    pub evaluator: Arc<Evaluator>,
    shared: Mutex<RunShared>,
    commands: Sender<Command>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionError {
    /// Run already finished or failed.
    Illegal(RunState),
}

impl RunEntry {
    /// Starts the evolution thread. The first snapshot appears once
    /// generation 0 has been evaluated.
    pub fn start(
        id: String,
        config: EvoConfig,
        targets_name: String,
        targets: TargetSet,
        evaluator: Evaluator,
        threads: Option<usize>,
    ) -> Arc<RunEntry> {
        let (tx, rx) = mpsc::channel();
        let entry = Arc::new(RunEntry {
            id,
            config: config.clone(),
            targets_name,
            evaluator: Arc::new(evaluator),
            shared: Mutex::new(RunShared {
                state: RunState::Running,
                snapshots: SnapshotStore::default(),
                stats: RunStats::default(),
                error: None,
            }),
            commands: tx,
        });
        let worker = Arc::clone(&entry);
        thread::Builder::new()
            .name(format!("run-{}", entry.id))
            .spawn(move || worker.drive(config, targets, threads, rx))
            .expect("spawn run thread");
        entry
    }

    pub fn shared(&self) -> MutexGuard<'_, RunShared> {
        self.shared.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn publish(&self, evo: &Evolution) {
        let mut shared = self.shared();
        shared.snapshots.push(evo.snapshot());
        shared.stats = evo.stats().clone();
        if evo.is_finished() {
            shared.state = RunState::Done;
        }
    }

    fn drive(&self, config: EvoConfig, targets: TargetSet, threads: Option<usize>, rx: Receiver<Command>) {
        let mut evo = match Evolution::with_threads(config, targets, threads) {
            Ok(evo) => evo,
            Err(e) => {
                let mut shared = self.shared();
                shared.state = RunState::Failed;
                shared.error = Some(e.to_string());
                return;
            }
        };
        self.publish(&evo);
        let mut paused = false;
        while !evo.is_finished() {
            loop {
                let command = if paused {
                    rx.recv().map_err(|_| TryRecvError::Disconnected)
                } else {
                    rx.try_recv()
                };
                match command {
                    Ok(Command::Pause) => paused = true,
                    Ok(Command::Resume) => paused = false,
                    Ok(Command::Stop) | Err(TryRecvError::Disconnected) => return,
                    Err(TryRecvError::Empty) => break,
                }
            }
            evo.step();
            self.publish(&evo);
        }
    }

    /// Takes effect at the next generation boundary. Idempotent.
    pub fn pause(&self) -> Result<RunState, TransitionError> {
        self.transition(RunState::Paused, Command::Pause)
    }

    pub fn resume(&self) -> Result<RunState, TransitionError> {
        self.transition(RunState::Running, Command::Resume)
    }

    fn transition(&self, to: RunState, command: Command) -> Result<RunState, TransitionError> {
        let mut shared = self.shared();
        if !shared.state.is_active() {
            return Err(TransitionError::Illegal(shared.state));
        }
        shared.state = to;
        // The worker may have just finished; a closed channel is harmless.
        let _ = self.commands.send(command);
        Ok(to)
    }

    pub fn stop(&self) {
        let _ = self.commands.send(Command::Stop);
    }
}
