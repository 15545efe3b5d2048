use std::io::Write;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use clap::Args;
use harmrank_core::service::{Api, ServiceConfig};
use harmrank_core::Error;

#[derive(Args)]
pub struct ServeArgs {
    /// Port to listen on; 0 picks a free one.
    #[arg(long, env = "HARMRANK_PORT", default_value_t = 8077)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// Snapshots kept before the least recently used is dropped.
    #[arg(long, default_value_t = 64)]
    capacity: usize,
    /// Threads for scenario jobs.
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

async fn dispatch(State(api): State<Api>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path().to_string();
    let handled = tokio::task::spawn_blocking(move || api.handle(method.as_str(), &path, &body)).await;
    match handled {
        Ok(r) => {
            let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, Json(r.body)).into_response()
        }
        Err(e) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(serde_json::json!({"error": {"code": "internal", "message": e.to_string()}})),
        )
            .into_response(),
    }
}

pub fn run(args: ServeArgs) -> Result<(), Error> {
    let api = Api::new(ServiceConfig {
        snapshot_capacity: args.capacity,
        workers: args.workers,
        ..Default::default()
    })?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::InvalidArgument(format!("cannot start runtime: {e}")))?;
    rt.block_on(async move {
        let addr = SocketAddr::new(args.bind, args.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Error::InvalidArgument(format!("cannot bind {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Error::InvalidArgument(format!("cannot read bound address: {e}")))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        let app = Router::new().fallback(dispatch).with_state(api);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::InvalidArgument(format!("server error: {e}")))
    })
}
