//! HTTP front end: `/ws` carries the session protocol, `/traces` serves the
//! finished-trace file, `/health` reports liveness.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use tokio::net::TcpListener;

use crate::session::SessionManager;
use crate::wire::ServerMessage;

pub type Shared = Arc<Mutex<SessionManager>>;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/traces", get(traces))
        .route("/health", get(health))
        .with_state(manager)
}

/// Serve until the listener fails. A background task finishes sessions that
/// hit the time cap or were abandoned.
pub async fn serve(listener: TcpListener, manager: SessionManager) -> std::io::Result<()> {
    let shared: Shared = Arc::new(Mutex::new(manager));
    let ticker = shared.clone();
    tokio::spawn(async move {
        let mut every = tokio::time::interval(Duration::from_secs(1));
        loop {
            every.tick().await;
            ticker.lock().unwrap().tick(now_ms());
        }
    });
    axum::serve(listener, router(shared)).await
}

async fn health(State(m): State<Shared>) -> impl IntoResponse {
    let live = m.lock().unwrap().live_sessions();
    Json(serde_json::json!({"status": "ok", "live_sessions": live}))
}

async fn traces(State(m): State<Shared>) -> impl IntoResponse {
    let path = m.lock().unwrap().trace_path();
    let body = tokio::fs::read_to_string(&path).await.unwrap_or_default();
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body)
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(m): State<Shared>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, m))
}

async fn connection(mut socket: WebSocket, m: Shared) {
    let mut bound: BTreeSet<String> = BTreeSet::new();
    while let Some(Ok(frame)) = socket.recv().await {
        let text = match frame {
            Message::Text(t) => t.as_str().to_owned(),
            Message::Close(_) => break,
            _ => continue,
        };
        let replies = m.lock().unwrap().handle_text(&text, now_ms());
        for reply in replies {
            match &reply {
                ServerMessage::SessionCreated { session_id, .. } | ServerMessage::State { session_id, .. } => {
                    bound.insert(session_id.clone());
                }
                ServerMessage::Ack {
                    session_id,
                    reveal: Some(_),
                    ..
                } => {
                    bound.remove(session_id);
                }
                _ => {}
            }
            if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
                break;
            }
        }
    }
    let mut manager = m.lock().unwrap();
    for id in bound {
        manager.detach(&id, now_ms());
    }
}
