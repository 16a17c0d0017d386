//! Tag-soup tolerant HTML tree builder.
//!
//! Good enough for cookie dialogues: void elements, raw-text `script`/`style`,
//! comments, doctype, CDATA, the common named character references and
//! numeric references. Mismatched end tags close back to the nearest open
//! element with the same name, or are dropped. Only structural dead ends
//! (an unterminated tag, quote or comment) are errors.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    /// Lowercased tag name.
    pub name: String,
    /// Lowercased attribute names, document order, first occurrence wins.
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
    /// Byte offset of the opening `<`.
    pub offset: usize,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Concatenated descendant text.
    pub fn text(&self) -> String {
        let mut out = String::new();
        collect_text(&self.children, &mut out);
        out
    }

    /// Depth-first iterator over this element and its descendants.
    pub fn descendants(&self) -> Vec<&Element> {
        let mut out = vec![self];
        for c in &self.children {
            if let Node::Element(e) = c {
                out.extend(e.descendants());
            }
        }
        out
    }
}

fn collect_text(nodes: &[Node], out: &mut String) {
    for n in nodes {
        match n {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => collect_text(&e.children, out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("HTML error at byte {offset}: {message}")]
pub struct HtmlError {
    pub offset: usize,
    pub message: String,
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];
const RAW_TEXT: &[&str] = &["script", "style"];

/// Parses `src` into a synthetic root element named `#document`.
pub fn parse_html(src: &str) -> Result<Element, HtmlError> {
    let bytes = src.as_bytes();
    let mut stack: Vec<Element> = vec![Element {
        name: "#document".into(),
        attrs: Vec::new(),
        children: Vec::new(),
        offset: 0,
    }];
    let mut text_start = 0;
    let mut i = 0;

    fn flush(stack: &mut [Element], src: &str, from: usize, to: usize) {
        if from < to {
            let t = decode_entities(&src[from..to]);
            stack.last_mut().unwrap().children.push(Node::Text(t));
        }
    }

    fn close_top(stack: &mut Vec<Element>) {
        let e = stack.pop().unwrap();
        stack.last_mut().unwrap().children.push(Node::Element(e));
    }

    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &src[i..];
        if let Some(comment) = rest.strip_prefix("<!--") {
            flush(&mut stack, src, text_start, i);
            let end = comment.find("-->").ok_or(HtmlError {
                offset: i,
                message: "unterminated comment".into(),
            })?;
            i += 4 + end + 3;
            text_start = i;
        } else if rest.starts_with("<![CDATA[") {
            flush(&mut stack, src, text_start, i);
            let end = rest.find("]]>").ok_or(HtmlError {
                offset: i,
                message: "unterminated CDATA section".into(),
            })?;
            stack
                .last_mut()
                .unwrap()
                .children
                .push(Node::Text(rest[9..end].to_string()));
            i += end + 3;
            text_start = i;
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            flush(&mut stack, src, text_start, i);
            let end = rest.find('>').ok_or(HtmlError {
                offset: i,
                message: "unterminated markup declaration".into(),
            })?;
            i += end + 1;
            text_start = i;
        } else if rest.starts_with("</") && rest[2..].starts_with(|c: char| c.is_ascii_alphabetic())
        {
            flush(&mut stack, src, text_start, i);
            let end = rest.find('>').ok_or(HtmlError {
                offset: i,
                message: "unterminated end tag".into(),
            })?;
            let name: String = rest[2..end]
                .trim()
                .chars()
                .take_while(|c| !c.is_whitespace())
                .collect::<String>()
                .to_ascii_lowercase();
            if let Some(pos) = stack.iter().rposition(|e| e.name == name) {
                if pos > 0 {
                    while stack.len() > pos {
                        close_top(&mut stack);
                    }
                }
            }
            i += end + 1;
            text_start = i;
        } else if rest[1..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            flush(&mut stack, src, text_start, i);
            let (el, self_closing, next) = parse_start_tag(src, i)?;
            i = next;
            text_start = i;
            let name = el.name.clone();
            if VOID.contains(&name.as_str()) || self_closing {
                stack.last_mut().unwrap().children.push(Node::Element(el));
            } else if RAW_TEXT.contains(&name.as_str()) {
                let close = format!("</{name}");
                let lower = src[i..].to_ascii_lowercase();
                let body_end = lower.find(&close).map_or(src.len(), |k| i + k);
                let mut el = el;
                if body_end > i {
                    el.children.push(Node::Text(src[i..body_end].to_string()));
                }
                stack.last_mut().unwrap().children.push(Node::Element(el));
                i = match src[body_end..].find('>') {
                    Some(k) => body_end + k + 1,
                    None => src.len(),
                };
                text_start = i;
            } else {
                stack.push(el);
            }
        } else {
            i += 1;
        }
    }
    flush(&mut stack, src, text_start, bytes.len());
    while stack.len() > 1 {
        close_top(&mut stack);
    }
    Ok(stack.pop().unwrap())
}

fn parse_start_tag(src: &str, start: usize) -> Result<(Element, bool, usize), HtmlError> {
    let b = src.as_bytes();
    let mut i = start + 1;
    let name_start = i;
    while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'>' && b[i] != b'/' {
        i += 1;
    }
    let name = src[name_start..i].to_ascii_lowercase();
    let mut attrs: Vec<(String, String)> = Vec::new();
    let unterminated = || HtmlError {
        offset: start,
        message: format!("unterminated <{name}> tag"),
    };
    loop {
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= b.len() {
            return Err(unterminated());
        }
        match b[i] {
            b'>' => {
                return Ok((
                    Element {
                        name,
                        attrs,
                        children: Vec::new(),
                        offset: start,
                    },
                    false,
                    i + 1,
                ));
            }
            b'/' if b.get(i + 1) == Some(&b'>') => {
                return Ok((
                    Element {
                        name,
                        attrs,
                        children: Vec::new(),
                        offset: start,
                    },
                    true,
                    i + 2,
                ));
            }
            b'/' => {
                i += 1;
                continue;
            }
            _ => {}
        }
        let an_start = i;
        while i < b.len()
            && !b[i].is_ascii_whitespace()
            && !matches!(b[i], b'=' | b'>')
            && !(b[i] == b'/' && b.get(i + 1) == Some(&b'>'))
        {
            i += 1;
        }
        let aname = src[an_start..i].to_ascii_lowercase();
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < b.len() && b[i] == b'=' {
            i += 1;
            while i < b.len() && b[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= b.len() {
                return Err(unterminated());
            }
            if b[i] == b'"' || b[i] == b'\'' {
                let q = b[i];
                let vstart = i + 1;
                let rel = src[vstart..]
                    .bytes()
                    .position(|c| c == q)
                    .ok_or(HtmlError {
                        offset: i,
                        message: format!("unterminated quoted value for attribute {aname:?}"),
                    })?;
                value = decode_entities(&src[vstart..vstart + rel]);
                i = vstart + rel + 1;
            } else {
                let vstart = i;
                while i < b.len() && !b[i].is_ascii_whitespace() && b[i] != b'>' {
                    i += 1;
                }
                value = decode_entities(&src[vstart..i]);
            }
        }
        if !aname.is_empty() && !attrs.iter().any(|(k, _)| *k == aname) {
            attrs.push((aname, value));
        }
    }
}

/// Decodes the named references common in dialogues plus numeric references.
/// Unknown references are kept verbatim.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let end = rest[1..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '#'))
            .map(|k| k + 1);
        let decoded = end.filter(|&e| rest[e..].starts_with(';')).and_then(|e| {
            let name = &rest[1..e];
            let c = if let Some(num) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                u32::from_str_radix(num, 16).ok().and_then(char::from_u32)
            } else if let Some(num) = name.strip_prefix('#') {
                num.parse::<u32>().ok().and_then(char::from_u32)
            } else {
                match name {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some('\u{a0}'),
                    _ => None,
                }
            };
            c.map(|c| (c, e + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
