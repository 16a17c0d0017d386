//! Forward-proxy listener: absolute-form HTTP requests and CONNECT tunnels.
//! Tunneled plain HTTP is always processed; tunneled TLS is intercepted when
//! an [`Authority`] is configured and passed through opaquely otherwise.

use std::convert::Infallible;
use std::net::SocketAddr;
use std::pin::Pin;
use std::sync::Arc;
use std::task::{Context, Poll};
use std::time::Duration;

use bytes::Bytes;
use http::header::{self, HeaderName};
use http::uri::{Authority as UriAuthority, Scheme};
use http::{HeaderMap, Method, Request, Response, StatusCode, Uri};
use http_body_util::combinators::BoxBody;
use http_body_util::{BodyExt, Full};
use hyper::body::Incoming;
use hyper::service::service_fn;
use hyper::upgrade::Upgraded;
use hyper_rustls::HttpsConnector;
use hyper_util::client::legacy::connect::HttpConnector;
use hyper_util::client::legacy::Client;
use hyper_util::rt::{TokioExecutor, TokioIo};
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, ReadBuf};
use tokio::net::{TcpListener, TcpStream};
use tracing::{debug, warn};

use crate::mitm::Authority;
use crate::state::ConsentState;

pub type ProxyBody = BoxBody<Bytes, hyper::Error>;

fn full(status: StatusCode, msg: &str) -> Response<ProxyBody> {
    let mut r = Response::new(
        Full::new(Bytes::from(format!("{msg}\n")))
            .map_err(|n| match n {})
            .boxed(),
    );
    *r.status_mut() = status;
    r.headers_mut().insert(
        header::CONTENT_TYPE,
        header::HeaderValue::from_static("text/plain; charset=utf-8"),
    );
    r
}

const HOP_BY_HOP: [&str; 8] = [
    "connection",
    "proxy-connection",
    "keep-alive",
    "proxy-authenticate",
    "proxy-authorization",
    "te",
    "trailer",
    "upgrade",
];

/// Removes hop-by-hop fields, including those named by `Connection`.
/// `Transfer-Encoding` is left to hyper, which re-frames bodies itself.
pub fn strip_hop_by_hop(headers: &mut HeaderMap) {
    let named: Vec<HeaderName> = headers
        .get_all(header::CONNECTION)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .filter_map(|n| HeaderName::from_bytes(n.trim().as_bytes()).ok())
        .collect();
    for n in named {
        headers.remove(n);
    }
    for n in HOP_BY_HOP {
        headers.remove(n);
    }
}

pub struct ProxyServer {
    state: Arc<ConsentState>,
    client: Client<HttpsConnector<HttpConnector>, Incoming>,
    timeout: Duration,
    authority: Option<Arc<Authority>>,
}

/// Upstream TLS trusting the bundled web PKI roots.
pub fn default_upstream_tls() -> rustls::ClientConfig {
    let roots = rustls::RootCertStore {
        roots: webpki_roots::TLS_SERVER_ROOTS.to_vec(),
    };
    rustls::ClientConfig::builder_with_provider(crate::mitm::crypto_provider())
        .with_safe_default_protocol_versions()
        .expect("ring supports the default versions")
        .with_root_certificates(roots)
        .with_no_client_auth()
}

impl ProxyServer {
    pub fn new(
        state: Arc<ConsentState>,
        timeout: Duration,
        authority: Option<Arc<Authority>>,
        upstream_tls: rustls::ClientConfig,
    ) -> Self {
        let mut http = HttpConnector::new();
        http.enforce_http(false);
        http.set_connect_timeout(Some(timeout));
        let https = hyper_rustls::HttpsConnectorBuilder::new()
            .with_tls_config(upstream_tls)
            .https_or_http()
            .enable_http1()
            .wrap_connector(http);
        let client = Client::builder(TokioExecutor::new()).build(https);
        ProxyServer {
            state,
            client,
            timeout,
            authority,
        }
    }

    /// Accepts connections until the listener fails.
    pub async fn serve(self: Arc<Self>, listener: TcpListener) -> std::io::Result<()> {
        loop {
            let (stream, peer) = listener.accept().await?;
            let this = self.clone();
            tokio::spawn(async move { this.connection(stream, peer).await });
        }
    }

    async fn connection(self: Arc<Self>, stream: TcpStream, peer: SocketAddr) {
        let this = self.clone();
        let svc = service_fn(move |req| {
            let this = this.clone();
            async move { Ok::<_, Infallible>(this.handle(req).await) }
        });
        if let Err(e) = hyper::server::conn::http1::Builder::new()
            .preserve_header_case(true)
            .serve_connection(TokioIo::new(stream), svc)
            .with_upgrades()
            .await
        {
            debug!(%peer, "connection ended: {e}");
        }
    }

    async fn handle(self: Arc<Self>, req: Request<Incoming>) -> Response<ProxyBody> {
        if req.method() == Method::CONNECT {
            return self.connect(req);
        }
        if req.uri().scheme().is_none() || req.uri().authority().is_none() {
            return full(
                StatusCode::BAD_REQUEST,
                "forward proxy: absolute-form request target required",
            );
        }
        self.forward(req).await
    }

    fn connect(self: Arc<Self>, req: Request<Incoming>) -> Response<ProxyBody> {
        let Some(authority) = req.uri().authority().cloned() else {
            return full(StatusCode::BAD_REQUEST, "CONNECT needs host:port");
        };
        tokio::spawn(async move {
            let upgraded = match hyper::upgrade::on(req).await {
                Ok(u) => TokioIo::new(u),
                Err(e) => return warn!(%authority, "upgrade failed: {e}"),
            };
            // Clients may tunnel plain HTTP too; only a TLS handshake is opaque.
            let (first, io) = match Prefixed::peek(upgraded).await {
                Ok(x) => x,
                Err(e) => return debug!(%authority, "tunnel closed before any data: {e}"),
            };
            match (first, self.authority.clone()) {
                (TLS_HANDSHAKE, Some(ca)) => self.intercept_tls(io, authority, ca).await,
                (TLS_HANDSHAKE, None) => tunnel(io, authority).await,
                _ => self.serve_inner(io, Scheme::HTTP, authority).await,
            }
        });
        Response::new(http_body_util::Empty::new().map_err(|n| match n {}).boxed())
    }

    async fn intercept_tls(
        self: Arc<Self>,
        io: Prefixed<TokioIo<Upgraded>>,
        authority: UriAuthority,
        ca: Arc<Authority>,
    ) {
        let config = match ca.server_config(authority.host()) {
            Ok(c) => c,
            Err(e) => return warn!(%authority, "no leaf certificate: {e}"),
        };
        match tokio_rustls::TlsAcceptor::from(config).accept(io).await {
            Ok(tls) => self.serve_inner(tls, Scheme::HTTPS, authority).await,
            Err(e) => debug!(%authority, "client TLS handshake failed: {e}"),
        }
    }

    /// Serves origin-form requests arriving inside a CONNECT tunnel.
    async fn serve_inner<S>(self: Arc<Self>, io: S, scheme: Scheme, authority: UriAuthority)
    where
        S: AsyncRead + AsyncWrite + Unpin + Send + 'static,
    {
        let this = self.clone();
        let svc = service_fn(move |mut req: Request<Incoming>| {
            let this = this.clone();
            let (scheme, authority) = (scheme.clone(), authority.clone());
            async move {
                let mut parts = req.uri().clone().into_parts();
                parts.scheme = Some(scheme);
                parts.authority = Some(authority);
                if parts.path_and_query.is_none() {
                    parts.path_and_query = Some("/".parse().expect("static"));
                }
                *req.uri_mut() =
                    Uri::from_parts(parts).expect("scheme, authority and path are set");
                Ok::<_, Infallible>(this.forward(req).await)
            }
        });
        if let Err(e) = hyper::server::conn::http1::Builder::new()
            .serve_connection(TokioIo::new(io), svc)
            .await
        {
            debug!("tunneled connection ended: {e}");
        }
    }

    async fn forward(self: Arc<Self>, mut req: Request<Incoming>) -> Response<ProxyBody> {
        let uri = req.uri().clone();
        strip_hop_by_hop(req.headers_mut());
        let report = self.state.on_request(&uri, req.headers_mut());
        if !report.removed.is_empty() {
            debug!(%uri, removed = ?report.removed, "cookies withheld");
        }
        let resp = match tokio::time::timeout(self.timeout, self.client.request(req)).await {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => {
                warn!(%uri, "upstream failed: {e}");
                return full(StatusCode::BAD_GATEWAY, "upstream request failed");
            }
            Err(_) => return full(StatusCode::GATEWAY_TIMEOUT, "upstream timed out"),
        };
        let (mut parts, body) = resp.into_parts();
        strip_hop_by_hop(&mut parts.headers);
        let state = self.state.clone();
        let headers = std::mem::take(&mut parts.headers);
        let filtered = tokio::task::spawn_blocking(move || {
            let mut headers = headers;
            let result = state.on_response(&uri, &mut headers);
            (headers, result, uri)
        })
        .await;
        match filtered {
            Ok((headers, Ok(report), uri)) => {
                if !report.removed.is_empty() {
                    debug!(%uri, removed = ?report.removed, "Set-Cookie removed");
                }
                parts.headers = headers;
            }
            Ok((mut headers, Err(e), uri)) => {
                // without a record there is no consent: fail closed
                warn!(%uri, "consent processing failed, dropping all cookies: {e}");
                headers.remove(header::SET_COOKIE);
                parts.headers = headers;
            }
            Err(e) => {
                warn!("consent processing panicked: {e}");
                return full(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "consent processing failed",
                );
            }
        }
        Response::from_parts(parts, body.boxed())
    }
}

async fn tunnel(mut client: Prefixed<TokioIo<Upgraded>>, authority: UriAuthority) {
    let port = authority.port_u16().unwrap_or(443);
    match TcpStream::connect((authority.host(), port)).await {
        Ok(mut upstream) => {
            if let Err(e) = tokio::io::copy_bidirectional(&mut client, &mut upstream).await {
                debug!(%authority, "tunnel closed: {e}");
            }
        }
        Err(e) => warn!(%authority, "tunnel connect failed: {e}"),
    }
}

const TLS_HANDSHAKE: u8 = 0x16;

/// A stream with one already-read byte put back in front.
pub struct Prefixed<S> {
    first: Option<u8>,
    inner: S,
}

impl<S: AsyncRead + Unpin> Prefixed<S> {
    async fn peek(mut inner: S) -> std::io::Result<(u8, Self)> {
        let b = inner.read_u8().await?;
        Ok((
            b,
            Prefixed {
                first: Some(b),
                inner,
            },
        ))
    }
}

impl<S: AsyncRead + Unpin> AsyncRead for Prefixed<S> {
    fn poll_read(
        mut self: Pin<&mut Self>,
        cx: &mut Context<'_>,
        buf: &mut ReadBuf<'_>,
    ) -> Poll<std::io::Result<()>> {
        if let Some(b) = self.first {
            if buf.remaining() > 0 {
                buf.put_slice(&[b]);
                self.first = None;
            }
            return Poll::Ready(Ok(()));
        }
        Pin::new(&mut self.inner).poll_read(cx, buf)
    }
}

impl<S: AsyncWrite + Unpin> AsyncWrite for Prefixed<S> {
    fn poll_write(
        mut self: Pin<&mut Self>,
        cx: &mut Context<'_>,
        buf: &[u8],
    ) -> Poll<std::io::Result<usize>> {
        Pin::new(&mut self.inner).poll_write(cx, buf)
    }

    fn poll_flush(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<std::io::Result<()>> {
        Pin::new(&mut self.inner).poll_flush(cx)
    }

    fn poll_shutdown(mut self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<std::io::Result<()>> {
        Pin::new(&mut self.inner).poll_shutdown(cx)
    }
}
