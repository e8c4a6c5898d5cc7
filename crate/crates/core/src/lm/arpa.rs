//! ARPA text serialization of the backoff model.

use std::collections::HashMap;

use super::{NgramModel, Vocab};
use crate::error::{Error, Result};

/// Formats with 7 significant digits.
pub(crate) fn fmt_sig7(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (6 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes the model in ARPA form: `\data\` header, `ngram N=count` lines,
/// one `\N-grams:` section per order with `logprob<TAB>tokens<TAB>backoff`
/// entries (backoff omitted at the highest order and when zero), `\end\`.
pub fn write_arpa(model: &NgramModel) -> Vec<u8> {
    let mut out = String::from("\\data\\\n");
    for n in 1..=model.order() {
        out.push_str(&format!("ngram {n}={}\n", model.ngram_count(n)));
    }
    for n in 1..=model.order() {
        out.push_str(&format!("\\{n}-grams:\n"));
        let mut entries: Vec<(Vec<u32>, f64, Option<f64>)> = model.entries(n).collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (gram, prob, backoff) in entries {
            out.push_str(&fmt_sig7(prob));
            out.push('\t');
            for (i, &id) in gram.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(model.vocab().word(id));
            }
            if let Some(b) = backoff {
                if b != 0.0 {
                    out.push('\t');
                    out.push_str(&fmt_sig7(b));
                }
            }
            out.push('\n');
        }
    }
    out.push_str("\\end\\\n");
    out.into_bytes()
}

/// Reads an ARPA file back into a model. Reports errors with line numbers;
/// declared section counts must match the entries actually present.
pub fn read_arpa(bytes: &[u8]) -> Result<NgramModel> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, first) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    if first.trim() != "\\data\\" {
        return Err(Error::parse(1, "missing \\data\\ header"));
    }

    let mut declared: Vec<usize> = Vec::new();
    let mut pending: Option<(usize, &str)> = None;
    for (line_no, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ngram ") {
            let (n, count) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "malformed ngram count line"))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, "bad ngram order"))?;
            if n != declared.len() + 1 {
                return Err(Error::parse(line_no, "ngram orders must be 1..order in sequence"));
            }
            declared.push(
                count
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad ngram count"))?,
            );
        } else {
            pending = Some((line_no, line));
            break;
        }
    }
    if declared.is_empty() {
        return Err(Error::parse(1, "no ngram count declarations"));
    }
    let order = declared.len();

    let mut vocab = Vocab::new();
    let mut raw_levels: Vec<Vec<(Vec<u32>, f64, f64)>> = vec![Vec::new(); order];
    let mut seen: Vec<HashMap<Vec<u32>, ()>> = vec![HashMap::new(); order];
    let mut current: Option<usize> = None;

    let mut handle = |line_no: usize,
                      line: &str,
                      current: &mut Option<usize>|
     -> Result<bool> {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return Ok(false);
        }
        if trimmed == "\\end\\" {
            return Ok(true);
        }
        if let Some(rest) = trimmed.strip_prefix('\\') {
            if let Some(n_str) = rest.strip_suffix("-grams:") {
                let n: usize = n_str
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad section header"))?;
                if n < 1 || n > order {
                    return Err(Error::parse(line_no, format!("section order {n} out of range")));
                }
                *current = Some(n);
                return Ok(false);
            }
            return Err(Error::parse(line_no, format!("unexpected directive {trimmed:?}")));
        }
        let n = current.ok_or_else(|| Error::parse(line_no, "entry outside a section"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(line_no, "expected logprob<TAB>ngram[<TAB>backoff]"));
        }
        let prob: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, "bad log probability"))?;
        let words: Vec<&str> = fields[1].split(' ').filter(|w| !w.is_empty()).collect();
        if words.len() != n {
            return Err(Error::parse(
                line_no,
                format!("expected {n} tokens, found {}", words.len()),
            ));
        }
        let backoff = match fields.get(2) {
            Some(b) => {
                if n == order {
                    return Err(Error::parse(line_no, "backoff weight at the highest order"));
                }
                b.trim()
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad backoff weight"))?
            }
            None => 0.0,
        };
        let gram: Vec<u32> = if n == 1 {
            vec![vocab.insert(words[0])]
        } else {
            words
                .iter()
                .map(|w| {
                    vocab.id_of(w).ok_or_else(|| {
                        Error::parse(line_no, format!("word {w:?} not in the unigram section"))
                    })
                })
                .collect::<Result<_>>()?
        };
        if seen[n - 1].insert(gram.clone(), ()).is_some() {
            return Err(Error::parse(line_no, "duplicate n-gram"));
        }
        raw_levels[n - 1].push((gram, prob, backoff));
        Ok(false)
    };

    let mut ended = false;
    if let Some((line_no, line)) = pending {
        ended = handle(line_no, line, &mut current)?;
    }
    if !ended {
        for (line_no, line) in lines {
            if handle(line_no, line, &mut current)? {
                ended = true;
                break;
            }
        }
    }
    if !ended {
        return Err(Error::parse(text.lines().count(), "missing \\end\\ terminator"));
    }

    for (n, (&want, level)) in declared.iter().zip(&raw_levels).enumerate() {
        if level.len() != want {
            return Err(Error::parse(
                text.lines().count(),
                format!("ngram {}={} declared but {} entries found", n + 1, want, level.len()),
            ));
        }
    }

    Ok(NgramModel::from_entries(order, vocab, raw_levels, Vec::new()))
}
