//! Local consent proxy.
//!
//! An HTTP forward proxy that reads `Data-Policy-Request` headers from
//! responses, decides them against the user's preference profile, drops
//! cookies the user has not agreed to and attaches the resulting agreements
//! to later requests as `Data-Policy` headers. A second listener serves the
//! control API used by the consent UI.

pub mod config;
pub mod control;
pub mod cookies;
pub mod fetch;
pub mod log;
pub mod mitm;
pub mod server;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::task::JoinSet;

use crate::config::{load_profile, load_taxonomy_file, Clock, ConfigError, ProxyConfig, UidSource};
use crate::fetch::{CachingFetcher, HttpFetcher, HttpTransport, LINK_TTL};
use crate::log::{ConsentLog, LogError};
use crate::mitm::{Authority, MitmError};
use crate::server::{default_upstream_tls, ProxyServer};
use crate::state::{ConsentState, StateOptions};

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Mitm(#[from] MitmError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
}

/// Both listeners, bound and serving.
pub struct Running {
    pub proxy_addr: SocketAddr,
    pub control_addr: SocketAddr,
    pub state: Arc<ConsentState>,
    tasks: JoinSet<std::io::Result<()>>,
}

impl Running {
    /// Resolves when either listener stops.
    pub async fn wait(mut self) -> std::io::Result<()> {
        match self.tasks.join_next().await {
            Some(Ok(r)) => r,
            Some(Err(e)) => Err(std::io::Error::other(e)),
            None => Ok(()),
        }
    }
}

async fn bind(addr: SocketAddr) -> Result<TcpListener, StartError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| StartError::Bind { addr, source })
}

/// Loads configuration files, opens the log and starts both listeners.
/// Port 0 picks a free port; the bound addresses are in [`Running`].
pub async fn start(
    config: &ProxyConfig,
    clock: Clock,
    uids: UidSource,
) -> Result<Running, StartError> {
    config.validate()?;
    let taxonomy = load_taxonomy_file(config.taxonomy_path.as_deref())?;
    let profile = load_profile(&config.prefs_path, &taxonomy)?;
    let log = ConsentLog::open(&config.log_path)?;
    let authority = match &config.ca_dir {
        Some(dir) => Some(Arc::new(Authority::load_or_create(dir)?)),
        None => None,
    };
    let opts = StateOptions {
        default_decision: config.default_decision,
        negotiate: config.negotiate,
        drop_unannotated: config.drop_unannotated,
        prefs_path: Some(config.prefs_path.clone()),
        clock,
        uids,
    };
    let state = Arc::new(ConsentState::new(
        opts,
        taxonomy,
        profile,
        log,
        Box::new(CachingFetcher::new(
            HttpFetcher::new(config.upstream_timeout),
            LINK_TTL,
        )),
        Box::new(HttpTransport::new(config.upstream_timeout)),
    ));

    let proxy = bind(config.listen).await?;
    let control = bind(config.control).await?;
    let proxy_addr = proxy.local_addr().expect("bound");
    let control_addr = control.local_addr().expect("bound");
    let server = Arc::new(ProxyServer::new(
        state.clone(),
        config.upstream_timeout,
        authority.clone(),
        default_upstream_tls(),
    ));
    let app = control::router(
        state.clone(),
        config.ui_dir.clone(),
        authority.map(|a| a.ca_pem()),
    );
    let mut tasks = JoinSet::new();
    tasks.spawn(server.serve(proxy));
    tasks.spawn(async move { axum::serve(control, app).await });
    Ok(Running {
        proxy_addr,
        control_addr,
        state,
        tasks,
    })
}
