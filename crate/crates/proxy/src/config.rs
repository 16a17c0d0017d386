use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use chrono::{DateTime, SubsecRound, Utc};
use dp_core::policy::{
    load_taxonomy, parse_preferences, PolicyError, PreferenceProfile, PurposeTaxonomy,
    RuleDecision, TaxonomyError,
};
use dp_core::rdf::{parse_turtle, TurtleError};

#[derive(Debug, Clone)]
pub struct ProxyConfig {
    pub listen: SocketAddr,
    pub control: SocketAddr,
    pub prefs_path: PathBuf,
    /// `None` uses the built-in DPV subset.
    pub taxonomy_path: Option<PathBuf>,
    pub log_path: PathBuf,
    /// Decision for purposes outside the taxonomy.
    pub default_decision: RuleDecision,
    pub negotiate: bool,
    pub drop_unannotated: bool,
    pub upstream_timeout: Duration,
    /// Static files served at `/` on the control listener.
    pub ui_dir: Option<PathBuf>,
    /// Directory holding the local interception CA.
    pub ca_dir: Option<PathBuf>,
}

impl ProxyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.listen == self.control && self.listen.port() != 0 {
            return Err(ConfigError::SameAddress(self.listen));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("listen and control addresses must differ (both {0})")]
    SameAddress(SocketAddr),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Turtle { path: PathBuf, source: TurtleError },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Taxonomy {
        path: PathBuf,
        source: TaxonomyError,
    },
    #[error("{path}: {source}")]
    Policy { path: PathBuf, source: PolicyError },
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.into(),
        source,
    })
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_taxonomy_file(path: Option<&Path>) -> Result<PurposeTaxonomy, ConfigError> {
    let Some(path) = path else {
        return Ok(PurposeTaxonomy::dpv_subset().clone());
    };
    let g = parse_turtle(&read(path)?, None).map_err(|source| ConfigError::Turtle {
        path: path.into(),
        source,
    })?;
    load_taxonomy(&g).map_err(|source| ConfigError::Taxonomy {
        path: path.into(),
        source,
    })
}

/// Reads a profile from Turtle, or from JSON when the file ends in `.json`.
pub fn load_profile(
    path: &Path,
    taxonomy: &PurposeTaxonomy,
) -> Result<PreferenceProfile, ConfigError> {
    let text = read(path)?;
    let policy = |source| ConfigError::Policy {
        path: path.into(),
        source,
    };
    if is_json(path) {
        let p: PreferenceProfile =
            serde_json::from_str(&text).map_err(|source| ConfigError::Json {
                path: path.into(),
                source,
            })?;
        return PreferenceProfile::new(p.owner, p.default_decision, p.rules, taxonomy)
            .map_err(policy);
    }
    let base = format!(
        "file://{}",
        path.canonicalize().unwrap_or(path.to_path_buf()).display()
    );
    let g = parse_turtle(&text, Some(&base)).map_err(|source| ConfigError::Turtle {
        path: path.into(),
        source,
    })?;
    parse_preferences(&g, taxonomy).map_err(policy)
}

/// Replaces the profile file atomically (write to a sibling, then rename).
pub fn save_profile(path: &Path, profile: &PreferenceProfile) -> Result<(), ConfigError> {
    let text = if is_json(path) {
        serde_json::to_string_pretty(profile).expect("profile serializes") + "\n"
    } else {
        profile.to_turtle()
    };
    let write = |source| ConfigError::Write {
        path: path.into(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(write)?;
    std::fs::rename(&tmp, path).map_err(write)
}

/// Wall clock, or a pinned instant for reproducible runs.
#[derive(Debug, Clone, Copy)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now().trunc_subsecs(0),
            Clock::Fixed(t) => *t,
        }
    }
}

/// Agreement uids and pending-item ids: random v4 UUIDs, or
/// `<prefix>-1`, `<prefix>-2`, ... when pinned.
#[derive(Debug)]
pub enum UidSource {
    Random,
    Sequence { prefix: String, next: AtomicU64 },
}

impl UidSource {
    pub fn sequence(prefix: impl Into<String>) -> Self {
        UidSource::Sequence {
            prefix: prefix.into(),
            next: AtomicU64::new(1),
        }
    }

    pub fn next(&self) -> String {
        match self {
            UidSource::Random => uuid::Uuid::new_v4().to_string(),
            UidSource::Sequence { prefix, next } => {
                format!("{prefix}-{}", next.fetch_add(1, Ordering::SeqCst))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dp_core::policy::{ActionSet, PreferenceRule};
    use dp_core::rdf::Iri;

    fn profile() -> PreferenceProfile {
        PreferenceProfile::new(
            Iri::new_unchecked("urn:user:me"),
            RuleDecision::Ask,
            vec![PreferenceRule {
                purpose: Iri::new_unchecked("https://w3id.org/dpv#Marketing"),
                actions: ActionSet::Any,
                max_retention: Some(31_536_000),
                decision: RuleDecision::Allow,
            }],
            PurposeTaxonomy::dpv_subset(),
        )
        .unwrap()
    }

    #[test]
    fn profiles_round_trip_through_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["prefs.ttl", "prefs.json"] {
            let path = dir.path().join(name);
            save_profile(&path, &profile()).unwrap();
            assert_eq!(
                load_profile(&path, PurposeTaxonomy::dpv_subset()).unwrap(),
                profile()
            );
        }
    }

    #[test]
    fn sequence_uids() {
        let u = UidSource::sequence("run");
        assert_eq!(u.next(), "run-1");
        assert_eq!(u.next(), "run-2");
        assert_ne!(UidSource::Random.next(), UidSource::Random.next());
    }
}
