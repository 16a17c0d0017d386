//! IRI syntax checks and RFC 3986 reference resolution.

/// `true` if `s` starts with a URI scheme and contains no characters that are
/// never allowed in an IRI (whitespace, `<>"{}|^` and backtick, controls).
pub fn is_absolute_iri(s: &str) -> bool {
    scheme_len(s).is_some() && s.chars().all(allowed_iri_char)
}

pub(crate) fn allowed_iri_char(c: char) -> bool {
    !(c.is_control()
        || c.is_whitespace()
        || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

fn scheme_len(s: &str) -> Option<usize> {
    let colon = s.find(':')?;
    let scheme = &s[..colon];
    let mut chars = scheme.chars();
    let first = chars.next()?;
    if !first.is_ascii_alphabetic() {
        return None;
    }
    chars
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        .then_some(colon)
}

struct Parts<'a> {
    scheme: Option<&'a str>,
    authority: Option<&'a str>,
    path: &'a str,
    query: Option<&'a str>,
    fragment: Option<&'a str>,
}

fn split(s: &str) -> Parts<'_> {
    let (rest, fragment) = match s.find('#') {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (rest, query) = match rest.find('?') {
        Some(i) => (&rest[..i], Some(&rest[i + 1..])),
        None => (rest, None),
    };
    let (scheme, rest) = match scheme_len(rest) {
        Some(i) => (Some(&rest[..i]), &rest[i + 1..]),
        None => (None, rest),
    };
    let (authority, path) = match rest.strip_prefix("//") {
        Some(r) => {
            let end = r.find('/').unwrap_or(r.len());
            (Some(&r[..end]), &r[end..])
        }
        None => (None, rest),
    };
    Parts {
        scheme,
        authority,
        path,
        query,
        fragment,
    }
}

fn remove_dot_segments(path: &str) -> String {
    let mut input = path;
    let mut out: Vec<&str> = Vec::new();
    let absolute = path.starts_with('/');
    let mut trailing = false;
    while !input.is_empty() {
        let (seg, rest) = match input.trim_start_matches('/').find('/') {
            Some(i) => {
                let off = input.len() - input.trim_start_matches('/').len();
                (&input[off..off + i], &input[off + i..])
            }
            None => (input.trim_start_matches('/'), ""),
        };
        trailing = rest.is_empty() && (seg == "." || seg == "..");
        match seg {
            "." => {}
            ".." => {
                out.pop();
            }
            s => out.push(s),
        }
        input = rest;
        if input == "/" {
            trailing = true;
            break;
        }
    }
    let mut s = String::new();
    if absolute {
        s.push('/');
    }
    s.push_str(&out.join("/"));
    if trailing && !s.ends_with('/') {
        s.push('/');
    }
    s
}

/// Resolves `reference` against `base` per RFC 3986 section 5.2. Returns
/// `None` when `base` is not absolute or cannot act as a hierarchical base.
pub fn resolve_iri(base: &str, reference: &str) -> Option<String> {
    if scheme_len(reference).is_some() {
        let r = split(reference);
        let mut out = format!("{}:", r.scheme?);
        if let Some(a) = r.authority {
            out.push_str("//");
            out.push_str(a);
        }
        out.push_str(&if r.authority.is_some() || r.path.starts_with('/') {
            remove_dot_segments(r.path)
        } else {
            r.path.to_string()
        });
        push_tail(&mut out, r.query, r.fragment);
        return Some(out);
    }
    let b = split(base);
    let scheme = b.scheme?;
    let r = split(reference);
    let (authority, path, query);
    if r.authority.is_some() {
        authority = r.authority;
        path = remove_dot_segments(r.path);
        query = r.query;
    } else if r.path.is_empty() {
        authority = b.authority;
        path = b.path.to_string();
        query = r.query.or(b.query);
    } else {
        if b.authority.is_none() && !b.path.starts_with('/') {
            // opaque base such as urn:x:y
            return None;
        }
        authority = b.authority;
        path = if r.path.starts_with('/') {
            remove_dot_segments(r.path)
        } else {
            let merged = if b.authority.is_some() && b.path.is_empty() {
                format!("/{}", r.path)
            } else {
                match b.path.rfind('/') {
                    Some(i) => format!("{}{}", &b.path[..=i], r.path),
                    None => r.path.to_string(),
                }
            };
            remove_dot_segments(&merged)
        };
        query = r.query;
    }
    let mut out = format!("{scheme}:");
    if let Some(a) = authority {
        out.push_str("//");
        out.push_str(a);
    }
    out.push_str(&path);
    push_tail(&mut out, query, r.fragment);
    Some(out)
}

fn push_tail(out: &mut String, query: Option<&str>, fragment: Option<&str>) {
    if let Some(q) = query {
        out.push('?');
        out.push_str(q);
    }
    if let Some(f) = fragment {
        out.push('#');
        out.push_str(f);
    }
}
