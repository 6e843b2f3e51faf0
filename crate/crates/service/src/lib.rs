//! HTTP JSON API for the interactive rate, retrain and recommend loop.
//!
//! One user per server. Ratings are stored as they arrive; the profile is
//! only rebuilt on an explicit `POST /train`, and the new profile replaces
//! the old one atomically.

mod error;
mod routes;
mod session;

use std::net::SocketAddr;
use std::sync::Arc;

pub use error::{ApiError, ErrorCode};
pub use routes::{router, DEFAULT_LIST_SIZE, DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE};
pub use session::{ServiceConfig, Session, Trained};

/// Serves the API on `addr` until interrupted.
pub async fn serve(session: Arc<Session>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(session))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
