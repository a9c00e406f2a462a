//! Accepting connections and routing their lines to sessions.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::sync::{broadcast, mpsc};
use tokio::task::JoinHandle;

use crate::protocol::{parse_command, Command, ServerMessage};
use crate::session::{Request, SessionHandle};

/// Frames queued for one connection before newer ones are dropped.
const OUTBOX: usize = 64;

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    /// Directory for per-session trajectory files.
    pub record_dir: Option<PathBuf>,
}

#[derive(Default)]
struct Registry {
    sessions: Mutex<HashMap<u64, Arc<SessionHandle>>>,
    next_id: AtomicU64,
    config: ServiceConfig,
}

impl Registry {
    fn create(&self) -> Arc<SessionHandle> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let h = SessionHandle::spawn(id, self.config.record_dir.clone());
        self.sessions.lock().unwrap().insert(id, h.clone());
        h
    }

    fn get(&self, id: u64) -> Option<Arc<SessionHandle>> {
        self.sessions.lock().unwrap().get(&id).cloned()
    }

    fn shutdown_all(&self) {
        let all: Vec<_> = self.sessions.lock().unwrap().drain().map(|(_, h)| h).collect();
        for h in all {
            h.shutdown();
        }
    }
}

pub struct Server {
    listener: TcpListener,
    registry: Arc<Registry>,
}

impl Server {
    pub async fn bind(addr: impl ToSocketAddrs, config: ServiceConfig) -> std::io::Result<Self> {
        if let Some(dir) = &config.record_dir {
            std::fs::create_dir_all(dir)?;
        }
        let listener = TcpListener::bind(addr).await?;
        Ok(Self { listener, registry: Arc::new(Registry { config, ..Registry::default() }) })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` completes, then stops every session and
    /// flushes their recordings.
    pub async fn run_until(self, shutdown: impl Future<Output = ()>) -> std::io::Result<()> {
        tokio::pin!(shutdown);
        let mut connections = Vec::new();
        loop {
            tokio::select! {
                _ = &mut shutdown => break,
                accepted = self.listener.accept() => match accepted {
                    Ok((stream, peer)) => {
                        log::info!("connection from {peer}");
                        connections.push(tokio::spawn(connection(stream, self.registry.clone())));
                    }
                    Err(e) => log::warn!("accept failed: {e}"),
                },
            }
        }
        for c in connections {
            c.abort();
        }
        let registry = self.registry.clone();
        tokio::task::spawn_blocking(move || registry.shutdown_all()).await.ok();
        Ok(())
    }
}

/// Binds `0.0.0.0:port` and serves until interrupted.
pub async fn serve(port: u16, config: ServiceConfig) -> std::io::Result<()> {
    let server = Server::bind(("0.0.0.0", port), config).await?;
    log::info!("listening on {}", server.local_addr()?);
    server
        .run_until(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

struct Attachment {
    session: Arc<SessionHandle>,
    forwarder: JoinHandle<()>,
}

impl Drop for Attachment {
    fn drop(&mut self) {
        self.forwarder.abort();
    }
}

fn attach(session: Arc<SessionHandle>, frames: mpsc::Sender<Arc<str>>) -> Attachment {
    let mut rx = session.subscribe();
    let forwarder = tokio::spawn(async move {
        loop {
            match rx.recv().await {
                // a full outbox means a slow reader: drop the frame
                Ok(line) => match frames.try_send(line) {
                    Ok(()) | Err(mpsc::error::TrySendError::Full(_)) => {}
                    Err(mpsc::error::TrySendError::Closed(_)) => break,
                },
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });
    Attachment { session, forwarder }
}

async fn connection(stream: TcpStream, registry: Arc<Registry>) {
    let (read, mut write) = stream.into_split();
    let (frames_tx, mut frames_rx) = mpsc::channel::<Arc<str>>(OUTBOX);
    let (replies_tx, mut replies_rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        loop {
            let line: String = tokio::select! {
                biased;
                r = replies_rx.recv() => match r { Some(l) => l, None => break },
                f = frames_rx.recv() => match f { Some(l) => l.to_string(), None => break },
            };
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    let mut current: Option<Attachment> = None;
    while let Ok(Some(line)) = lines.next_line().await {
        if line.trim().is_empty() {
            continue;
        }
        let reply = match parse_command(&line) {
            Err(message) => ServerMessage::error(message),
            Ok(Command::Join { session }) => match registry.get(session) {
                None => ServerMessage::error(format!("no session {session}")),
                Some(h) => {
                    let reply = h.ask(Request::Status).await;
                    current = Some(attach(h, frames_tx.clone()));
                    reply
                }
            },
            Ok(cmd) => {
                if current.is_none() && matches!(cmd, Command::Load { .. }) {
                    current = Some(attach(registry.create(), frames_tx.clone()));
                }
                match &current {
                    None => ServerMessage::error("no session: send load or join first"),
                    Some(a) => a.session.ask(|reply| Request::Command(cmd, reply)).await,
                }
            }
        };
        if replies_tx.send(reply.to_line()).is_err() {
            break;
        }
    }
    drop(current);
    drop(replies_tx);
    drop(frames_tx);
    let _ = writer.await;
}
