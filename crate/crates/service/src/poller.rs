//! Periodic feed polling into the cache and store.

use std::sync::Arc;
use std::time::Duration;

use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;
use urnmap_ais::{FeedClient, FeedError};

use crate::state::AppState;

/// One poll over all configured regions. Returns the number of accepted records.
pub async fn poll_once(state: &AppState, client: &FeedClient) -> Result<usize, FeedError> {
    match client.poll(&state.regions).await {
        Ok(outcome) => {
            state.ingest_poll(&outcome);
            Ok(outcome.records.len())
        }
        Err(e) => {
            state.record_feed_error(e.to_string());
            Err(e)
        }
    }
}

pub fn spawn_poller(state: Arc<AppState>, client: FeedClient) -> JoinHandle<()> {
    let period = Duration::from_secs(state.config.poll_interval_s);
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            ticker.tick().await;
            if let Ok(n) = poll_once(&state, &client).await {
                log::info!("poll accepted {n} records");
            }
        }
    })
}
