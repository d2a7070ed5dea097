use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use urnmap_ais::FeedClient;
use urnmap_service::{poller, router, AppState, ServiceConfig};

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = match std::env::args_os().nth(1).map(PathBuf::from) {
        Some(p) => ServiceConfig::load(&p),
        None => Ok(ServiceConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    let bind = config.bind.clone();
    let state = match AppState::from_config(config) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    match FeedClient::from_env() {
        Ok(client) => {
            poller::spawn_poller(state.clone(), client);
        }
        Err(e) => log::warn!("live feed disabled: {e}"),
    }
    let listener = match tokio::net::TcpListener::bind(&bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {bind}: {e}");
            return ExitCode::from(1);
        }
    };
    log::info!("listening on {bind}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
