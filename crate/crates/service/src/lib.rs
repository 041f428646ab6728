//! Live-session service for the blicket detector: demonstration scripts,
//! the websocket message protocol, event-sourced sessions and the HTTP
//! server that hosts them.

pub mod demos;
pub mod server;
pub mod session;
pub mod wire;

pub use demos::{DemoError, DemoLibrary, DemoScript, MachineView};
pub use session::{sample_truth, ServiceConfig, SessionConfig, SessionManager, DATA_DIR_ENV, TRACE_FILE};
pub use wire::{ClientEventKind, ClientMessage, ErrorCode, FinishReason, Reveal, ServerMessage, TruthSpec};
