//! `xsd:duration` arithmetic and the retention tag ladder.
//!
//! Durations are flattened to seconds with Y = 365 days and M = 30 days so
//! that retention periods are totally ordered.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use crate::rdf::{parse_turtle, vocab, Graph, Iri, Term};

const SECS_PER_DAY: u64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DurationError {
    #[error("malformed xsd:duration {0:?}")]
    Malformed(String),
    #[error("negative duration {0:?}")]
    Negative(String),
    #[error("duration {0:?} overflows")]
    Overflow(String),
}

/// Converts an `xsd:duration` lexical form to whole seconds. Fractional
/// seconds are truncated.
pub fn duration_to_seconds(lexical: &str) -> Result<u64, DurationError> {
    let malformed = || DurationError::Malformed(lexical.to_string());
    let overflow = || DurationError::Overflow(lexical.to_string());
    let s = lexical.trim();
    if let Some(abs) = s.strip_prefix('-') {
        return if !abs.is_empty() && duration_to_seconds(abs).is_ok() {
            Err(DurationError::Negative(lexical.to_string()))
        } else {
            Err(malformed())
        };
    }
    let body = s.strip_prefix('P').ok_or_else(malformed)?;
    let (date, time) = match body.split_once('T') {
        Some((_, "")) => return Err(malformed()),
        Some((d, t)) => (d, Some(t)),
        None => (body, None),
    };
    let mut total: u64 = 0;
    let mut components = 0;
    let mut add = |components: &mut usize, count: u64, unit: u64| -> Result<(), DurationError> {
        let v = count.checked_mul(unit).ok_or_else(overflow)?;
        total = total.checked_add(v).ok_or_else(overflow)?;
        *components += 1;
        Ok(())
    };

    let mut rest = date;
    for (designator, unit) in [
        ('Y', 365 * SECS_PER_DAY),
        ('M', 30 * SECS_PER_DAY),
        ('D', SECS_PER_DAY),
    ] {
        if let Some((n, tail)) = take_component(rest, designator) {
            add(&mut components, parse_count(n).ok_or_else(malformed)?, unit)?;
            rest = tail;
        }
    }
    if !rest.is_empty() {
        return Err(malformed());
    }

    if let Some(time) = time {
        let before = components;
        let mut rest = time;
        for (designator, unit) in [('H', 3600), ('M', 60)] {
            if let Some((n, tail)) = take_component(rest, designator) {
                add(&mut components, parse_count(n).ok_or_else(malformed)?, unit)?;
                rest = tail;
            }
        }
        if let Some(n) = rest.strip_suffix('S') {
            let (whole, frac) = match n.split_once('.') {
                Some((w, f)) => (w, Some(f)),
                None => (n, None),
            };
            if frac.is_some_and(|f| f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit())) {
                return Err(malformed());
            }
            add(
                &mut components,
                parse_count(whole).ok_or_else(malformed)?,
                1,
            )?;
            rest = "";
        }
        if !rest.is_empty() || components == before {
            return Err(malformed());
        }
    }
    if components == 0 {
        return Err(malformed());
    }
    Ok(total)
}

fn take_component(s: &str, designator: char) -> Option<(&str, &str)> {
    let end = s.find(|c: char| !c.is_ascii_digit())?;
    (end > 0 && s[end..].starts_with(designator)).then(|| (&s[..end], &s[end + 1..]))
}

fn parse_count(n: &str) -> Option<u64> {
    if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    n.parse().ok()
}

/// Renders seconds as a days-based `xsd:duration`: `P365D`, `P1DT2H`,
/// `PT90S`, `PT0S`. Never uses Y or M, so the value is unambiguous.
pub fn seconds_to_duration(secs: u64) -> String {
    if secs == 0 {
        return "PT0S".to_string();
    }
    let days = secs / SECS_PER_DAY;
    let rem = secs % SECS_PER_DAY;
    let mut out = String::from("P");
    if days > 0 {
        out.push_str(&format!("{days}D"));
    }
    if rem > 0 {
        out.push('T');
        let (h, m, s) = (rem / 3600, rem % 3600 / 60, rem % 60);
        if h > 0 {
            out.push_str(&format!("{h}H"));
        }
        if m > 0 {
            out.push_str(&format!("{m}M"));
        }
        if s > 0 {
            out.push_str(&format!("{s}S"));
        }
    }
    out
}

/// One rung of the ladder. `span` is `None` only for the unbounded top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub tag: Iri,
    pub span: Option<u64>,
    pub lexical: Option<String>,
}

/// The duration tags, ordered from most specific (shortest) to the
/// unbounded top. A tag is a subclass of every later tag.
#[derive(Debug, Clone)]
pub struct TagLadder {
    rungs: Vec<Rung>,
    aliases: BTreeMap<Iri, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LadderError {
    #[error("ladder is not a single subclass chain at <{0}>")]
    NotAChain(Iri),
    #[error("ladder has no tags")]
    Empty,
    #[error("tag <{tag}> has a bad span: {source}")]
    Span { tag: Iri, source: DurationError },
    #[error("spans are not strictly increasing at <{0}>")]
    NotIncreasing(Iri),
}

const DURATION_TAG: &str = "DurationTag";
const SPAN: &str = "span";
const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";

impl TagLadder {
    pub fn from_graph(g: &Graph) -> Result<Self, LadderError> {
        let tags: Vec<Iri> = g
            .instances_of(&vocab::term(vocab::DUR, DURATION_TAG))
            .into_iter()
            .filter_map(|t| t.as_iri().cloned())
            .collect();
        if tags.is_empty() {
            return Err(LadderError::Empty);
        }
        let parent = |t: &Iri| -> Result<Option<Iri>, LadderError> {
            let mut sups = g
                .objects(&Term::Iri(t.clone()), vocab::RDFS_SUBCLASS_OF)
                .filter_map(Term::as_iri);
            let first = sups.next().cloned();
            if sups.next().is_some() {
                return Err(LadderError::NotAChain(t.clone()));
            }
            Ok(first)
        };
        // the bottom is the tag nobody names as its superclass
        let mut has_child = BTreeMap::new();
        for t in &tags {
            if let Some(p) = parent(t)? {
                if has_child.insert(p.clone(), t.clone()).is_some() {
                    return Err(LadderError::NotAChain(p));
                }
            }
        }
        let mut bottoms = tags.iter().filter(|t| !has_child.contains_key(*t));
        let mut cur = bottoms
            .next()
            .cloned()
            .ok_or_else(|| LadderError::NotAChain(tags[0].clone()))?;
        if let Some(extra) = bottoms.next() {
            return Err(LadderError::NotAChain(extra.clone()));
        }
        let mut rungs: Vec<Rung> = Vec::new();
        loop {
            if rungs.iter().any(|r| r.tag == cur) {
                return Err(LadderError::NotAChain(cur));
            }
            let lexical = g
                .objects(&Term::Iri(cur.clone()), &vocab::term(vocab::DUR, SPAN))
                .find_map(Term::as_literal)
                .map(|l| l.value().to_string());
            let span = match &lexical {
                Some(l) => Some(duration_to_seconds(l).map_err(|source| LadderError::Span {
                    tag: cur.clone(),
                    source,
                })?),
                None => None,
            };
            if let Some(prev) = rungs.last() {
                let increasing = match (prev.span, span) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                if !increasing {
                    return Err(LadderError::NotIncreasing(cur));
                }
            }
            rungs.push(Rung {
                tag: cur.clone(),
                span,
                lexical,
            });
            match parent(&cur)? {
                Some(p) => cur = p,
                None => break,
            }
        }
        if rungs.len() != tags.len() {
            let stray = tags
                .iter()
                .find(|t| !rungs.iter().any(|r| &r.tag == *t))
                .unwrap();
            return Err(LadderError::NotAChain(stray.clone()));
        }
        let mut aliases = BTreeMap::new();
        for t in g.iter().filter(|t| t.predicate.as_str() == OWL_SAME_AS) {
            if let (Term::Iri(alias), Term::Iri(target)) = (&t.subject, &t.object) {
                if let Some(k) = rungs.iter().position(|r| &r.tag == target) {
                    aliases.insert(alias.clone(), k);
                }
            }
        }
        Ok(TagLadder { rungs, aliases })
    }

    /// The ladder shipped in `vocab/duration-tags.ttl`.
    pub fn builtin() -> &'static TagLadder {
        static LADDER: LazyLock<TagLadder> = LazyLock::new(|| {
            let g =
                parse_turtle(DURATION_TAGS_TTL, None).expect("vendored duration-tags.ttl parses");
            TagLadder::from_graph(&g).expect("vendored duration-tags.ttl is a ladder")
        });
        &LADDER
    }

    pub fn rungs(&self) -> &[Rung] {
        &self.rungs
    }

    /// Position of `tag` (or one of its aliases) on the ladder.
    pub fn position(&self, tag: &Iri) -> Option<usize> {
        self.rungs
            .iter()
            .position(|r| &r.tag == tag)
            .or_else(|| self.aliases.get(tag).copied())
    }

    /// Smallest rung whose span covers `secs`.
    pub fn ceiling(&self, secs: u64) -> usize {
        self.rungs
            .iter()
            .position(|r| r.span.is_none_or(|s| s >= secs))
            .unwrap_or(self.rungs.len() - 1)
    }

    /// Largest rung whose span fits within `secs`, if any.
    pub fn floor(&self, secs: u64) -> Option<usize> {
        self.rungs
            .iter()
            .rposition(|r| r.span.is_some_and(|s| s <= secs))
    }

    /// Rung for an optional retention, `None` meaning unbounded.
    pub fn ceiling_opt(&self, secs: Option<u64>) -> usize {
        secs.map_or(self.rungs.len() - 1, |s| self.ceiling(s))
    }

    pub fn rung(&self, k: usize) -> &Rung {
        &self.rungs[k]
    }

    /// Reflexive subclass test between two ladder tags.
    pub fn is_subtag(&self, sub: &Iri, sup: &Iri) -> bool {
        matches!((self.position(sub), self.position(sup)), (Some(a), Some(b)) if a <= b)
    }
}

pub(crate) const DURATION_TAGS_TTL: &str = include_str!("../../vocab/duration-tags.ttl");

/// Most specific built-in tag whose span is at least `secs`.
pub fn duration_tag_for(secs: u64) -> Iri {
    let l = TagLadder::builtin();
    l.rung(l.ceiling(secs)).tag.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(duration_to_seconds("P2Y"), Ok(63_072_000));
        assert_eq!(duration_to_seconds("PT0S"), Ok(0));
        assert_eq!(duration_to_seconds("P1M"), Ok(2_592_000));
        assert_eq!(
            duration_to_seconds("P1Y2M3DT4H5M6.7S"),
            Ok(31_536_000 + 5_184_000 + 259_200 + 14_400 + 300 + 6)
        );
        assert_eq!(duration_to_seconds("PT36H"), Ok(129_600));
    }

    #[test]
    fn rejects() {
        for bad in [
            "", "P", "PT", "P1YT", "2Y", "P1H", "PT1D", "P1.5Y", "P1Y1Y", "PT1.S", "P-1D", "P1M1Y",
        ] {
            assert!(
                matches!(duration_to_seconds(bad), Err(DurationError::Malformed(_))),
                "{bad}"
            );
        }
        assert!(matches!(
            duration_to_seconds("-P1D"),
            Err(DurationError::Negative(_))
        ));
        assert!(matches!(
            duration_to_seconds("P99999999999999999Y"),
            Err(DurationError::Overflow(_))
        ));
    }

    #[test]
    fn render() {
        assert_eq!(seconds_to_duration(31_536_000), "P365D");
        assert_eq!(seconds_to_duration(2_592_000), "P30D");
        assert_eq!(seconds_to_duration(0), "PT0S");
        assert_eq!(seconds_to_duration(90_061), "P1DT1H1M1S");
        assert_eq!(seconds_to_duration(45), "PT45S");
    }

    #[test]
    fn ladder() {
        let l = TagLadder::builtin();
        assert_eq!(l.rungs().len(), 8);
        let tag = |s: &str| Iri::new_unchecked(vocab::term(vocab::DUR, s));
        assert_eq!(duration_tag_for(63_072_000), tag("two-year"));
        assert_eq!(duration_tag_for(0), tag("one-day"));
        assert_eq!(
            duration_tag_for(duration_to_seconds("P3Y").unwrap()),
            tag("five-year")
        );
        assert_eq!(duration_tag_for(u64::MAX), tag("unbounded"));
        assert_eq!(l.position(&tag("two-years")), l.position(&tag("two-year")));
        assert!(l.is_subtag(&tag("one-year"), &tag("two-years")));
        assert!(!l.is_subtag(&tag("two-year"), &tag("one-year")));
        assert_eq!(
            l.floor(63_072_000 - 1).map(|k| &l.rung(k).tag),
            Some(&tag("one-year"))
        );
        assert_eq!(l.floor(3_600), None);
    }
}
