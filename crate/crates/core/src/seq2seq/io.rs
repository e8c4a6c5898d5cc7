//! Textual model container: version line, train config, vocabulary (id =
//! line number) and every tensor with declared dimensions. Values use
//! Rust's shortest round-trip float formatting, so read . write is exact.

use super::{ApeVocab, LstmCell, Mat, Seq2SeqParams, TrainConfig};
use crate::error::{Error, Result};

const MAGIC: &str = "hybridmt-ape 1";

pub fn write_model(params: &Seq2SeqParams, vocab: &ApeVocab, config: &TrainConfig) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&serde_json::to_string(config).expect("config serializes"));
    out.push('\n');
    out.push_str(&format!("vocab {}\n", vocab.len()));
    for w in vocab.words() {
        out.push_str(w);
        out.push('\n');
    }
    for (name, data) in params.tensors() {
        let (rows, cols) = tensor_dims(params, name);
        out.push_str(&format!("tensor {name} {rows} {cols}\n"));
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out.into_bytes()
}

fn tensor_dims(params: &Seq2SeqParams, name: &str) -> (usize, usize) {
    let (d, v) = (params.d, params.vocab_size);
    match name {
        "e_x" | "e_y" => (v, d),
        "enc_w" => (4 * d, d),
        "enc_u" | "dec_u" => (4 * d, d),
        "dec_w" => (4 * d, 2 * d),
        "enc_b" | "dec_b" => (1, 4 * d),
        "w_out" => (d, v),
        "b_out" => (1, v),
        other => unreachable!("unknown tensor {other}"),
    }
}

pub fn read_model(bytes: &[u8]) -> Result<(Seq2SeqParams, ApeVocab, TrainConfig)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(1, format!("invalid UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file, wanted {what}")))
    };

    let (line_no, magic) = next("magic")?;
    if magic != MAGIC {
        return Err(Error::parse(line_no, format!("bad magic {magic:?}")));
    }
    let (line_no, config_line) = next("config")?;
    let config: TrainConfig = serde_json::from_str(config_line)
        .map_err(|e| Error::parse(line_no, format!("bad config: {e}")))?;

    let (line_no, vocab_header) = next("vocab header")?;
    let n_words: usize = vocab_header
        .strip_prefix("vocab ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(line_no, "expected `vocab <n>`"))?;
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let (_, w) = next("vocab word")?;
        words.push(w.to_string());
    }
    let vocab = ApeVocab::from_words(words)?;

    let d = config.d;
    let v = vocab.len();
    let mut params = Seq2SeqParams {
        d,
        vocab_size: v,
        e_x: Mat::zeros(v, d),
        e_y: Mat::zeros(v, d),
        enc: LstmCell {
            input_dim: d,
            hidden: d,
            w: Mat::zeros(4 * d, d),
            u: Mat::zeros(4 * d, d),
            b: vec![0.0; 4 * d],
        },
        dec: LstmCell {
            input_dim: 2 * d,
            hidden: d,
            w: Mat::zeros(4 * d, 2 * d),
            u: Mat::zeros(4 * d, d),
            b: vec![0.0; 4 * d],
        },
        w_out: Mat::zeros(d, v),
        b_out: vec![0.0; v],
    };

    let expected = params.tensors().map(|(name, _)| name);
    for name in expected {
        let (line_no, header) = next("tensor header")?;
        let parts: Vec<&str> = header.split(' ').collect();
        if parts.len() != 4 || parts[0] != "tensor" || parts[1] != name {
            return Err(Error::parse(
                line_no,
                format!("expected `tensor {name} rows cols`, found {header:?}"),
            ));
        }
        let rows: usize = parts[2]
            .parse()
            .map_err(|_| Error::parse(line_no, "bad row count"))?;
        let cols: usize = parts[3]
            .parse()
            .map_err(|_| Error::parse(line_no, "bad col count"))?;
        let (want_rows, want_cols) = tensor_dims(&params, name);
        if (rows, cols) != (want_rows, want_cols) {
            return Err(Error::parse(
                line_no,
                format!("tensor {name}: {rows}x{cols} does not match config ({want_rows}x{want_cols})"),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (line_no, row) = next("tensor row")?;
            for field in row.split(' ') {
                data.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad value {field:?}")))?,
                );
            }
        }
        if data.len() != rows * cols {
            return Err(Error::parse(line_no, format!("tensor {name} has wrong size")));
        }
        let slot = params
            .tensors_mut()
            .into_iter()
            .find(|(n, _)| *n == name)
            .expect("tensor exists")
            .1;
        *slot = data;
    }
    let (line_no, end) = next("end")?;
    if end != "end" {
        return Err(Error::parse(line_no, "missing end marker"));
    }
    Ok((params, vocab, config))
}
