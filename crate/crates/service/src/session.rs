//! One simulation per session, stepped on its own thread and driven only
//! through its request queue.

use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;

use tokio::sync::{broadcast, oneshot};

use knotdyn_core::dynamics::{perturb, step, Frame, Mode, SimParams, SimState};
use knotdyn_core::embedding::{curve_from_spec, EmbedParams};
use knotdyn_core::experiments::{save_curve, swing_phase, TrajectoryHeader, TrajectoryWriter};

use crate::protocol::{Command, EffectiveParams, ServerMessage};

pub(crate) const DEFAULT_STRIDE: u64 = 100;
const FRAME_BUFFER: usize = 64;

pub(crate) enum Request {
    Command(Command, oneshot::Sender<ServerMessage>),
    Status(oneshot::Sender<ServerMessage>),
    Shutdown,
}

/// What the network side holds of a session.
pub(crate) struct SessionHandle {
    pub(crate) id: u64,
    requests: mpsc::Sender<Request>,
    frames: broadcast::Sender<Arc<str>>,
    thread: std::sync::Mutex<Option<JoinHandle<()>>>,
}

impl SessionHandle {
    pub(crate) fn spawn(id: u64, record_dir: Option<PathBuf>) -> Arc<Self> {
        let (requests, rx) = mpsc::channel();
        let (frames, _) = broadcast::channel(FRAME_BUFFER);
        let sim = Simulation::new(id, frames.clone(), record_dir);
        let thread = std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || sim.run(rx))
            .expect("spawning a session thread");
        Arc::new(Self { id, requests, frames, thread: std::sync::Mutex::new(Some(thread)) })
    }

    pub(crate) fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.frames.subscribe()
    }

    /// Sends a request built around a reply slot and waits for the reply.
    pub(crate) async fn ask(&self, make: impl FnOnce(oneshot::Sender<ServerMessage>) -> Request) -> ServerMessage {
        let (tx, rx) = oneshot::channel();
        if self.requests.send(make(tx)).is_err() {
            return ServerMessage::error(format!("session {} has stopped", self.id));
        }
        rx.await.unwrap_or_else(|_| ServerMessage::error(format!("session {} has stopped", self.id)))
    }

    /// Stops the loop and waits for it, flushing any recording.
    pub(crate) fn shutdown(&self) {
        let _ = self.requests.send(Request::Shutdown);
        if let Some(t) = self.thread.lock().unwrap().take() {
            let _ = t.join();
        }
    }
}

struct Simulation {
    id: u64,
    frames: broadcast::Sender<Arc<str>>,
    record_dir: Option<PathBuf>,
    recording: Option<TrajectoryWriter>,
    loads: u64,
    state: Option<SimState>,
    /// Parameters of each mode; `set` of dt, spring_k or gamma touches
    /// only the active one.
    constrained: SimParams,
    free: SimParams,
    mode: Mode,
    stride: u64,
    running: bool,
}

impl Simulation {
    fn new(id: u64, frames: broadcast::Sender<Arc<str>>, record_dir: Option<PathBuf>) -> Self {
        let free = SimParams { mode: Mode::Free, ..SimParams::default() };
        Self {
            id,
            frames,
            record_dir,
            recording: None,
            loads: 0,
            state: None,
            constrained: SimParams::default(),
            free,
            mode: Mode::Constrained,
            stride: DEFAULT_STRIDE,
            running: false,
        }
    }

    fn params(&self) -> &SimParams {
        match self.mode {
            Mode::Constrained => &self.constrained,
            Mode::Free => &self.free,
        }
    }

    fn status(&self) -> ServerMessage {
        ServerMessage::Status {
            session: self.id,
            params: EffectiveParams::of(self.params(), self.stride),
            step: self.state.as_ref().map_or(0, |s| s.step_index),
            mode: self.mode,
            running: self.running,
            beads: self.state.as_ref().map_or(0, |s| s.curve.len()),
        }
    }

    fn run(mut self, rx: mpsc::Receiver<Request>) {
        loop {
            let next = if self.running {
                match rx.try_recv() {
                    Ok(r) => Some(r),
                    Err(mpsc::TryRecvError::Empty) => None,
                    Err(mpsc::TryRecvError::Disconnected) => break,
                }
            } else {
                match rx.recv() {
                    Ok(r) => Some(r),
                    Err(_) => break,
                }
            };
            match next {
                Some(Request::Shutdown) => break,
                Some(Request::Status(reply)) => {
                    let _ = reply.send(self.status());
                }
                Some(Request::Command(c, reply)) => {
                    let loading = matches!(c, Command::Load { .. });
                    let answer = self.apply(c).map_or_else(ServerMessage::error, |()| self.status());
                    let ok = matches!(answer, ServerMessage::Status { .. });
                    let _ = reply.send(answer);
                    if loading && ok {
                        self.emit_frame();
                    }
                }
                None => self.advance(),
            }
        }
        self.stop_recording();
    }

    fn advance(&mut self) {
        let p = self.params().clone();
        let Some(s) = self.state.as_mut() else {
            self.running = false;
            return;
        };
        match step(s, &p) {
            Ok(_) => {
                if s.step_index % self.stride == 0 {
                    self.emit_frame();
                }
            }
            Err(e) => {
                self.running = false;
                let _ = self.frames.send(ServerMessage::error(format!("run paused: {e}")).to_line().into());
            }
        }
    }

    fn emit_frame(&mut self) {
        let Some(s) = self.state.as_ref() else { return };
        let frame = Frame::of(s);
        if let Some(w) = self.recording.as_mut() {
            if let Err(e) = w.frame(&frame) {
                log::warn!("session {}: recording stopped: {e}", self.id);
                self.recording = None;
            }
        }
        let msg = ServerMessage::Frame { session: self.id, step: frame.step, energy: frame.energy, points: frame.points };
        // no subscribers is fine
        let _ = self.frames.send(msg.to_line().into());
    }

    fn stop_recording(&mut self) {
        if let Some(w) = self.recording.take() {
            if let Err(e) = w.finish() {
                log::warn!("session {}: {e}", self.id);
            }
        }
    }

    fn loaded(&mut self) -> Result<&mut SimState, String> {
        self.state.as_mut().ok_or_else(|| "nothing loaded".to_string())
    }

    fn apply(&mut self, c: Command) -> Result<(), String> {
        match c {
            Command::Load { spec, beads } => self.load(&spec, beads),
            Command::Run {} => {
                self.loaded()?;
                self.running = true;
                Ok(())
            }
            Command::Pause {} => {
                self.running = false;
                Ok(())
            }
            Command::Mode { value } => {
                let switching = value != self.mode;
                let s = self.loaded()?;
                if value == Mode::Constrained {
                    s.velocities.iter_mut().for_each(|v| *v = Default::default());
                }
                if switching {
                    s.dt_hint = None;
                }
                self.mode = value;
                Ok(())
            }
            Command::Perturb { magnitude, seed } => {
                let s = self.loaded()?;
                let moved = perturb(&s.curve, magnitude, seed).map_err(|e| e.to_string())?;
                let mut next = SimState::new(moved).map_err(|e| e.to_string())?;
                next.step_index = s.step_index;
                *s = next;
                Ok(())
            }
            Command::Set { param, value } => self.set(&param, value),
            Command::Snapshot { path } => {
                let s = self.state.as_ref().ok_or("nothing loaded")?;
                save_curve(&s.curve, std::path::Path::new(&path)).map_err(|e| e.to_string())
            }
            Command::Join { .. } => Err("join is handled by the connection".into()),
        }
    }

    fn load(&mut self, spec: &str, beads: Option<usize>) -> Result<(), String> {
        let curve = curve_from_spec(spec, &EmbedParams { beads, ..EmbedParams::default() }).map_err(|e| e.to_string())?;
        let rest = curve.total_length() / curve.len() as f64;
        let constrained = SimParams {
            rest_edge_length: Some(rest),
            mode: Mode::Constrained,
            repulsion_exponent: self.constrained.repulsion_exponent,
            repulsion_strength: self.constrained.repulsion_strength,
            max_disp_fraction: self.constrained.max_disp_fraction,
            ..SimParams::default()
        };
        let free = swing_phase(&curve, &constrained, 0).map_err(|e| e.to_string())?.params;
        let state = SimState::new(curve).map_err(|e| e.to_string())?;
        self.running = false;
        self.state = Some(state);
        self.constrained = constrained;
        self.free = free;
        self.mode = Mode::Constrained;
        self.stop_recording();
        if let Some(dir) = &self.record_dir {
            self.loads += 1;
            let path = dir.join(format!("session-{}-{}.jsonl", self.id, self.loads));
            match TrajectoryWriter::create(&path, &TrajectoryHeader::new(self.constrained.clone(), Vec::new())) {
                Ok(w) => self.recording = Some(w),
                Err(e) => log::warn!("session {}: cannot record: {e}", self.id),
            }
        }
        Ok(())
    }

    fn set(&mut self, param: &str, value: f64) -> Result<(), String> {
        if !value.is_finite() {
            return Err(format!("{param} must be finite"));
        }
        if param == "frame_stride" {
            if value < 1.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
                return Err("frame_stride must be a positive integer".into());
            }
            self.stride = value as u64;
            return Ok(());
        }
        let mut both = [self.constrained.clone(), self.free.clone()];
        let active = usize::from(self.mode == Mode::Free);
        match param {
            "dt" => both[active].dt = value,
            "spring_k" => both[active].spring_constant = value,
            "gamma" => both[active].viscous_damping = value,
            "repulsion_exponent" => both.iter_mut().for_each(|p| p.repulsion_exponent = value),
            "repulsion_strength" => both.iter_mut().for_each(|p| p.repulsion_strength = value),
            "max_disp_fraction" => both.iter_mut().for_each(|p| p.max_disp_fraction = value),
            other => return Err(format!("parameter {other:?} cannot be set")),
        }
        for p in &both {
            p.validate().map_err(|e| e.to_string())?;
        }
        let [c, f] = both;
        self.constrained = c;
        self.free = f;
        Ok(())
    }
}
