//! Minimal SGML reader/writer for the NIST MT test-set layout
//! (`srcset`/`refset`/`tstset` > `doc` > `seg`).

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SgmSeg {
    pub id: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SgmDoc {
    pub doc_id: String,
    pub segs: Vec<SgmSeg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SgmDocument {
    pub set_id: String,
    pub src_lang: String,
    pub trg_lang: String,
    pub docs: Vec<SgmDoc>,
}

fn decode_entities(raw: &str, line: usize) -> Result<String> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = rest
            .find(';')
            .ok_or_else(|| Error::parse(line, "unterminated entity"))?;
        match &rest[..=semi] {
            "&lt;" => out.push('<'),
            "&gt;" => out.push('>'),
            "&amp;" => out.push('&'),
            other => return Err(Error::parse(line, format!("unknown entity {other:?}"))),
        }
        rest = &rest[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn encode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            c => out.push(c),
        }
    }
    out
}

struct Tag {
    name: String,
    attrs: Vec<(String, String)>,
    closing: bool,
}

struct Scanner<'a> {
    input: &'a str,
    pos: usize,
    line: usize,
}

enum Event {
    Tag(Tag),
    Text(String),
}

impl<'a> Scanner<'a> {
    fn new(input: &'a str) -> Self {
        Scanner {
            input,
            pos: 0,
            line: 1,
        }
    }

    fn bump(&mut self, s: &str) {
        self.line += s.matches('\n').count();
        self.pos += s.len();
    }

    fn next_event(&mut self) -> Result<Option<Event>> {
        let rest = &self.input[self.pos..];
        if rest.is_empty() {
            return Ok(None);
        }
        if let Some(stripped) = rest.strip_prefix('<') {
            let end = stripped
                .find('>')
                .ok_or_else(|| Error::parse(self.line, "unterminated tag"))?;
            let inner = &stripped[..end];
            let consumed = &rest[..end + 2];
            let line = self.line;
            self.bump(consumed);
            let (closing, body) = match inner.strip_prefix('/') {
                Some(b) => (true, b),
                None => (false, inner),
            };
            let mut parts = body.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| Error::parse(line, "empty tag"))?
                .to_ascii_lowercase();
            let mut attrs = Vec::new();
            let attr_str = body[name.len()..].trim();
            let mut s = attr_str;
            while !s.is_empty() {
                let eq = s
                    .find('=')
                    .ok_or_else(|| Error::parse(line, format!("malformed attribute in <{name}>")))?;
                let key = s[..eq].trim().to_ascii_lowercase();
                let after = s[eq + 1..].trim_start();
                let quoted = after
                    .strip_prefix('"')
                    .ok_or_else(|| Error::parse(line, "attribute value must be double-quoted"))?;
                let close = quoted
                    .find('"')
                    .ok_or_else(|| Error::parse(line, "unterminated attribute value"))?;
                attrs.push((key, quoted[..close].to_string()));
                s = quoted[close + 1..].trim_start();
            }
            Ok(Some(Event::Tag(Tag {
                name,
                attrs,
                closing,
            })))
        } else {
            let end = rest.find('<').unwrap_or(rest.len());
            let text = &rest[..end];
            let line = self.line;
            self.bump(text);
            Ok(Some(Event::Text(decode_entities(text, line)?)))
        }
    }
}

fn attr<'t>(tag: &'t Tag, key: &str, line: usize) -> Result<&'t str> {
    tag.attrs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::parse(line, format!("<{}> missing attribute {key}", tag.name)))
}

const SET_ELEMENTS: [&str; 3] = ["srcset", "refset", "tstset"];

/// Parses an SGM test set. Accepts `srcset`, `refset` or `tstset` as the
/// root element and reports errors with input line numbers.
pub fn parse_sgm(bytes: &[u8]) -> Result<SgmDocument> {
    let input = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut scanner = Scanner::new(input);

    let mut doc: Option<SgmDocument> = None;
    let mut cur_doc: Option<SgmDoc> = None;
    let mut cur_seg: Option<SgmSeg> = None;
    let mut seen_ids: HashSet<u64> = HashSet::new();
    let mut closed = false;

    while let Some(event) = {
        let line = scanner.line;
        let ev = scanner.next_event()?;
        ev.map(|e| (line, e))
    } {
        let (line, event) = event;
        match event {
            Event::Text(text) => {
                if let Some(seg) = cur_seg.as_mut() {
                    seg.text.push_str(&text);
                } else if !text.trim().is_empty() {
                    return Err(Error::parse(line, "unexpected text outside <seg>"));
                }
            }
            Event::Tag(tag) if !tag.closing => match tag.name.as_str() {
                name if SET_ELEMENTS.contains(&name) => {
                    if doc.is_some() {
                        return Err(Error::parse(line, "nested set element"));
                    }
                    doc = Some(SgmDocument {
                        set_id: attr(&tag, "setid", line)?.to_string(),
                        src_lang: attr(&tag, "srclang", line)?.to_string(),
                        trg_lang: attr(&tag, "trglang", line)?.to_string(),
                        docs: Vec::new(),
                    });
                }
                "doc" => {
                    if doc.is_none() || cur_doc.is_some() {
                        return Err(Error::parse(line, "misplaced <doc>"));
                    }
                    seen_ids.clear();
                    cur_doc = Some(SgmDoc {
                        doc_id: attr(&tag, "docid", line)?.to_string(),
                        segs: Vec::new(),
                    });
                }
                "seg" => {
                    if cur_doc.is_none() || cur_seg.is_some() {
                        return Err(Error::parse(line, "misplaced <seg>"));
                    }
                    let raw_id = attr(&tag, "id", line)?;
                    let id: u64 = raw_id
                        .parse()
                        .map_err(|_| Error::parse(line, format!("non-integer seg id {raw_id:?}")))?;
                    if id == 0 {
                        return Err(Error::parse(line, "seg id must be positive"));
                    }
                    if !seen_ids.insert(id) {
                        return Err(Error::parse(line, format!("duplicate seg id {id}")));
                    }
                    cur_seg = Some(SgmSeg {
                        id,
                        text: String::new(),
                    });
                }
                other => return Err(Error::parse(line, format!("unexpected element <{other}>"))),
            },
            Event::Tag(tag) => match tag.name.as_str() {
                "seg" => {
                    let seg = cur_seg
                        .take()
                        .ok_or_else(|| Error::parse(line, "</seg> without <seg>"))?;
                    cur_doc.as_mut().expect("doc open while seg open").segs.push(seg);
                }
                "doc" => {
                    if cur_seg.is_some() {
                        return Err(Error::parse(line, "</doc> inside <seg>"));
                    }
                    let d = cur_doc
                        .take()
                        .ok_or_else(|| Error::parse(line, "</doc> without <doc>"))?;
                    doc.as_mut().expect("set open while doc open").docs.push(d);
                }
                name if SET_ELEMENTS.contains(&name) => {
                    if cur_doc.is_some() || cur_seg.is_some() {
                        return Err(Error::parse(line, "set element closed while children open"));
                    }
                    if doc.is_none() || closed {
                        return Err(Error::parse(line, "mismatched set close tag"));
                    }
                    closed = true;
                }
                other => {
                    return Err(Error::parse(line, format!("unexpected close tag </{other}>")))
                }
            },
        }
    }

    match doc {
        Some(d) if closed => Ok(d),
        Some(_) => Err(Error::parse(scanner.line, "missing set close tag")),
        None => Err(Error::parse(scanner.line, "no set element found")),
    }
}

/// Serializes to the `tstset` layout: one seg per line, LF endings,
/// double-quoted attributes, `&lt; &gt; &amp;` escaping.
pub fn emit_sgm(doc: &SgmDocument) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!(
        "<tstset setid=\"{}\" srclang=\"{}\" trglang=\"{}\">\n",
        doc.set_id, doc.src_lang, doc.trg_lang
    ));
    for d in &doc.docs {
        out.push_str(&format!("<doc docid=\"{}\">\n", d.doc_id));
        for seg in &d.segs {
            out.push_str(&format!(
                "<seg id=\"{}\">{}</seg>\n",
                seg.id,
                encode_entities(&seg.text)
            ));
        }
        out.push_str("</doc>\n");
    }
    out.push_str("</tstset>\n");
    out.into_bytes()
}
