//! Name-level cookie handling (RFC 6265 §4.1 / §4.2 syntax, leniently).

/// Cookie name of a `Set-Cookie` value, `None` when there is no `=`.
pub fn set_cookie_name(value: &str) -> Option<&str> {
    let pair = value.split(';').next()?;
    let (name, _) = pair.split_once('=')?;
    let name = name.trim();
    (!name.is_empty()).then_some(name)
}

/// `name=value` pairs of a `Cookie` header, in order. Pieces without `=`
/// are kept with an empty name so nothing is silently rewritten.
pub fn parse_cookie_header(value: &str) -> Vec<(&str, &str)> {
    value
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| match p.split_once('=') {
            Some((n, v)) => (n.trim(), v.trim()),
            None => ("", p),
        })
        .collect()
}

pub fn join_cookie_header(pairs: &[(&str, &str)]) -> String {
    pairs
        .iter()
        .map(|(n, v)| {
            // A nameless piece keeps its `=` when dropping it would change the parse.
            if n.is_empty() && !v.is_empty() && !v.contains('=') {
                v.to_string()
            } else {
                format!("{n}={v}")
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_cookie_names() {
        assert_eq!(set_cookie_name("NID=1; Path=/; HttpOnly"), Some("NID"));
        assert_eq!(set_cookie_name(" a = b "), Some("a"));
        assert_eq!(set_cookie_name("=x"), None);
        assert_eq!(set_cookie_name("novalue"), None);
    }

    #[test]
    fn cookie_header_round_trip() {
        let pairs = parse_cookie_header("NID=1;denied=2;  x=a=b");
        assert_eq!(pairs, vec![("NID", "1"), ("denied", "2"), ("x", "a=b")]);
        assert_eq!(join_cookie_header(&pairs), "NID=1; denied=2; x=a=b");
        assert!(parse_cookie_header("").is_empty());
    }

    #[test]
    fn nameless_pieces_survive_a_rewrite() {
        for v in ["=", "=a=b", "flag", "a=1; =; b"] {
            let pairs = parse_cookie_header(v);
            assert_eq!(
                parse_cookie_header(&join_cookie_header(&pairs)),
                pairs,
                "{v}"
            );
        }
    }
}
