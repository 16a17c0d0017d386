use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use chrono::{DateTime, SubsecRound, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dp_cli::{load_graph, parse_report, plan_selections, DocKind};
use dp_core::engine::{decide, EvalOptions};
use dp_core::policy::{
    parse_dtou_app_policy, parse_odrl_agreement, parse_odrl_request, translate_dtou_to_odrl,
    translate_odrl_to_dtou, OdrlRequest, PurposeTaxonomy, RuleDecision,
};
use dp_core::rdf::{parse_turtle, write_turtle, Iri};
use dp_core::wire::{
    decode_agreement_header, decode_request_header, encode_agreement_header, encode_request_header,
    AgreementEnvelope, PolicySource, RequestHeader,
};
use dp_core::Outcome;
use dp_proxy::config::{load_profile, load_taxonomy_file, Clock, ProxyConfig, UidSource};
use dp_proxy::log::{verify_chain, LogError};

#[derive(Parser)]
#[command(
    name = "dp",
    version,
    about = "Data-Policy requests, agreements, dialogues and the consent proxy"
)]
struct Cli {
    /// Pin the clock (RFC 3339) for reproducible agreements.
    #[arg(long, global = true, value_parser = parse_now)]
    now: Option<DateTime<Utc>>,
    /// Pin the agreement uid (`match`) or the uid sequence prefix (`proxy`).
    #[arg(long, global = true)]
    uid: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a Turtle or HTML document and report its policies as JSON.
    Parse {
        file: PathBuf,
        #[arg(long)]
        base: Option<String>,
        /// Report only this node.
        #[arg(long)]
        node: Option<String>,
        #[command(flatten)]
        tax: TaxonomyArg,
    },
    /// Evaluate a request against a preference profile and print the decision.
    ///
    /// Exit status: 0 granted, 10 partial, 20 denied, 30 pending.
    Match {
        /// Preference profile (Turtle, or JSON when it ends in .json)
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        request: PathBuf,
        /// The request file holds a DToU app policy, evaluated through its
        /// ODRL translation.
        #[arg(long)]
        dtou: bool,
        #[arg(long)]
        node: Option<String>,
        #[arg(long)]
        base: Option<String>,
        /// Decision for purposes outside the taxonomy (profile default when
        /// absent).
        #[arg(long, value_enum)]
        default: Option<DecisionArg>,
        /// Also write the agreement, if any, to this file as Turtle.
        #[arg(long)]
        agreement: Option<PathBuf>,
        #[command(flatten)]
        tax: TaxonomyArg,
    },
    /// Translate between an ODRL request and a DToU app policy (Turtle out).
    Translate {
        #[arg(long, value_enum)]
        to: Formalism,
        file: PathBuf,
        #[arg(long)]
        node: Option<String>,
        #[arg(long)]
        base: Option<String>,
    },
    /// Encode or decode Data-Policy-Request and Data-Policy header values.
    Header {
        #[command(subcommand)]
        cmd: HeaderCmd,
    },
    /// Extract the RDFa of an HTML page as Turtle.
    Extract {
        page: PathBuf,
        #[arg(long)]
        base: Option<String>,
    },
    /// Plan the checkbox states of a cookie dialogue.
    Plan {
        page: PathBuf,
        /// Preference profile (Turtle, or JSON when it ends in .json)
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        base: Option<String>,
        #[arg(long, value_enum)]
        default: Option<DecisionArg>,
        #[command(flatten)]
        tax: TaxonomyArg,
    },
    /// Consent log tools.
    Log {
        #[command(subcommand)]
        cmd: LogCmd,
    },
    /// Run the consent proxy and its control API.
    Proxy(ProxyArgs),
}

#[derive(Subcommand)]
enum HeaderCmd {
    /// Print a header value.
    Encode {
        #[command(flatten)]
        source: SourceArg,
        /// Bind the request to one cookie.
        #[arg(long)]
        cookie: Option<String>,
    },
    /// Decode a header value (argument or stdin). Requests print as JSON,
    /// agreements as canonical N-Triples.
    Decode {
        value: Option<String>,
        /// Treat the value as a Data-Policy agreement.
        #[arg(long)]
        agreement: bool,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArg {
    /// Turtle file sent inline.
    #[arg(long)]
    inline: Option<PathBuf>,
    /// Link to a cacheable policy document.
    #[arg(long)]
    link: Option<String>,
    /// Negotiation endpoint.
    #[arg(long)]
    negotiate: Option<String>,
    /// Turtle agreement file, encoded as a Data-Policy value.
    #[arg(long)]
    agreement: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LogCmd {
    /// Check the hash chain; names the first bad record on failure.
    Verify { file: PathBuf },
}

#[derive(Args)]
struct TaxonomyArg {
    /// Purpose vocabulary (Turtle); the built-in DPV subset when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Args)]
struct ProxyArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, default_value = "127.0.0.1:8081")]
    control: SocketAddr,
    /// Preference profile (Turtle, or JSON when it ends in .json); saved on change
    #[arg(long)]
    prefs: PathBuf,
    /// Purpose vocabulary (Turtle); the built-in DPV subset when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long, default_value = "consent.jsonl")]
    log: PathBuf,
    /// Decision for purposes outside the taxonomy.
    #[arg(long, value_enum, default_value = "ask")]
    default: DecisionArg,
    /// Try the site's negotiation endpoint before asking.
    #[arg(long)]
    negotiate: bool,
    /// Drop cookies that no policy covers.
    #[arg(long)]
    drop_unannotated: bool,
    /// Seconds.
    #[arg(long, default_value_t = 30)]
    upstream_timeout: u64,
    /// Static files served on the control listener.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Directory of the local CA; enables HTTPS interception.
    #[arg(long)]
    ca_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecisionArg {
    Allow,
    Deny,
    Ask,
}

impl From<DecisionArg> for RuleDecision {
    fn from(d: DecisionArg) -> Self {
        match d {
            DecisionArg::Allow => RuleDecision::Allow,
            DecisionArg::Deny => RuleDecision::Deny,
            DecisionArg::Ask => RuleDecision::Ask,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Formalism {
    Odrl,
    Dtou,
}

fn parse_now(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| e.to_string())
}

/// `-` reads stdin.
fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// `file://` IRI of `path`, the base when none is given.
fn file_base(path: &Path, base: Option<String>) -> Option<String> {
    base.or_else(|| {
        (path != Path::new("-")).then(|| {
            let abs = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
            format!("file://{}", abs.display())
        })
    })
}

fn iri_arg(s: Option<String>) -> Result<Option<Iri>> {
    s.map(|s| Iri::new(s).map_err(Into::into)).transpose()
}

fn load_doc(path: &Path, base: Option<String>) -> Result<dp_core::Graph> {
    let text = read_input(path)?;
    let base = file_base(path, base);
    let kind = DocKind::from_name(&path.to_string_lossy());
    load_graph(&text, kind, base.as_deref()).with_context(|| path.display().to_string())
}

fn taxonomy(arg: &TaxonomyArg) -> Result<PurposeTaxonomy> {
    Ok(load_taxonomy_file(arg.taxonomy.as_deref())?)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn print(s: &str) -> Result<()> {
    std::io::stdout().lock().write_all(s.as_bytes())?;
    Ok(())
}

fn exit_code(o: Outcome) -> ExitCode {
    ExitCode::from(match o {
        Outcome::Granted => 0,
        Outcome::Partial => 10,
        Outcome::Denied => 20,
        Outcome::Pending => 30,
    })
}

fn now(cli_now: Option<DateTime<Utc>>) -> DateTime<Utc> {
    cli_now.unwrap_or_else(|| Utc::now().trunc_subsecs(0))
}

fn read_request(
    path: &Path,
    base: Option<String>,
    node: Option<Iri>,
    dtou: bool,
) -> Result<OdrlRequest> {
    let g = load_doc(path, base)?;
    Ok(if dtou {
        translate_dtou_to_odrl(&parse_dtou_app_policy(&g, node.as_ref())?)?
    } else {
        parse_odrl_request(&g, node.as_ref())?
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Parse {
            file,
            base,
            node,
            tax,
        } => {
            let g = load_doc(&file, base)?;
            let kind = DocKind::from_name(&file.to_string_lossy());
            print_json(&parse_report(
                &g,
                kind,
                iri_arg(node)?.as_ref(),
                &taxonomy(&tax)?,
            )?)?;
        }
        Cmd::Match {
            prefs,
            request,
            dtou,
            node,
            base,
            default,
            agreement,
            tax,
        } => {
            let tax = taxonomy(&tax)?;
            let profile = load_profile(&prefs, &tax)?;
            let req = read_request(&request, base, iri_arg(node)?, dtou)?;
            let opts = EvalOptions {
                unknown_purpose_decision: default.map(Into::into),
            };
            let uid = cli.uid.unwrap_or_else(|| UidSource::Random.next());
            let d = decide(&profile, &req, &tax, &opts, now(cli.now), &uid)?;
            if let (Some(path), Some(a)) = (agreement, &d.agreement) {
                std::fs::write(&path, write_turtle(&a.to_graph()))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            print_json(&d)?;
            return Ok(exit_code(d.outcome));
        }
        Cmd::Translate {
            to,
            file,
            node,
            base,
        } => {
            let g = load_doc(&file, base)?;
            let node = iri_arg(node)?;
            let out = match to {
                Formalism::Dtou => {
                    translate_odrl_to_dtou(&parse_odrl_request(&g, node.as_ref())?)?.to_graph()
                }
                Formalism::Odrl => {
                    translate_dtou_to_odrl(&parse_dtou_app_policy(&g, node.as_ref())?)?.to_graph()
                }
            };
            print(&write_turtle(&out))?;
        }
        Cmd::Header {
            cmd: HeaderCmd::Encode { source, cookie },
        } => {
            let cookie = cookie.as_deref();
            let value = if let Some(path) = source.agreement {
                let g = parse_turtle(&read_input(&path)?, None)
                    .with_context(|| path.display().to_string())?;
                parse_odrl_agreement(&g, None)?;
                encode_agreement_header(&AgreementEnvelope::from_graph(&g))?
            } else {
                let src = match (source.inline, source.link, source.negotiate) {
                    (Some(path), _, _) => PolicySource::inline(read_input(&path)?, cookie),
                    (_, Some(href), _) => PolicySource::link(Iri::new(href)?, cookie),
                    (_, _, Some(href)) => PolicySource::negotiate(Iri::new(href)?, cookie),
                    _ => unreachable!("clap requires one source"),
                };
                encode_request_header(&src)?
            };
            print(&format!("{value}\n"))?;
        }
        Cmd::Header {
            cmd: HeaderCmd::Decode { value, agreement },
        } => {
            let value = match value {
                Some(v) => v,
                None => read_input(Path::new("-"))?,
            };
            let value = value.trim();
            if agreement || value.starts_with("agreement=") {
                let env = decode_agreement_header(value)?;
                print(std::str::from_utf8(&env.bytes).context("agreement is not UTF-8")?)?;
            } else {
                match decode_request_header(value)? {
                    RequestHeader::Source(s) => print_json(&s)?,
                    RequestHeader::Unrecognized { disposition } => print_json(
                        &serde_json::json!({ "disposition": disposition, "recognized": false }),
                    )?,
                }
            }
        }
        Cmd::Extract { page, base } => {
            let text = read_input(&page)?;
            let base = file_base(&page, base).unwrap_or_else(|| "urn:app:document".into());
            let g = dp_core::rdf::extract_rdfa(&text, &base)
                .with_context(|| page.display().to_string())?;
            print(&write_turtle(&g))?;
        }
        Cmd::Plan {
            page,
            prefs,
            base,
            default,
            tax,
        } => {
            let tax = taxonomy(&tax)?;
            let profile = load_profile(&prefs, &tax)?;
            let html = read_input(&page)?;
            let base = file_base(&page, base).unwrap_or_else(|| "urn:app:document".into());
            let opts = EvalOptions {
                unknown_purpose_decision: default.map(Into::into),
            };
            print_json(&plan_selections(&html, &base, &profile, &tax, &opts)?)?;
        }
        Cmd::Log {
            cmd: LogCmd::Verify { file },
        } => match verify_chain(&file) {
            Ok(n) => print(&format!("ok: {n} records\n"))?,
            Err(LogError::Broken(e)) => {
                eprintln!("{}: {e}", file.display());
                return Ok(ExitCode::FAILURE);
            }
            Err(e) => return Err(e.into()),
        },
        Cmd::Proxy(args) => return proxy(args, cli.now, cli.uid),
    }
    Ok(ExitCode::SUCCESS)
}

fn proxy(args: ProxyArgs, now: Option<DateTime<Utc>>, uid: Option<String>) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let config = ProxyConfig {
        listen: args.listen,
        control: args.control,
        prefs_path: args.prefs,
        taxonomy_path: args.taxonomy,
        log_path: args.log,
        default_decision: args.default.into(),
        negotiate: args.negotiate,
        drop_unannotated: args.drop_unannotated,
        upstream_timeout: Duration::from_secs(args.upstream_timeout),
        ui_dir: args.ui_dir,
        ca_dir: args.ca_dir,
    };
    let clock = now.map_or(Clock::System, Clock::Fixed);
    let uids = uid.map_or(UidSource::Random, UidSource::sequence);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let running = dp_proxy::start(&config, clock, uids).await?;
        {
            let mut out = std::io::stdout().lock();
            writeln!(out, "proxy listening on {}", running.proxy_addr)?;
            writeln!(out, "control listening on {}", running.control_addr)?;
            out.flush()?;
        }
        tokio::select! {
            r = running.wait() => r?,
            r = tokio::signal::ctrl_c() => r?,
        }
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dp: {e:#}");
            ExitCode::FAILURE
        }
    }
}
