//! Text exports and the checkpoint bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::embedding::{EmbeddingState, Rows};
use crate::error::{Error, Result};
use crate::miner::MineConfig;
use crate::scalar::Scalar;

/// Leading line of every checkpoint.
pub const CHECKPOINT_MAGIC: &str = "CATE1";

/// Format like C's `%g`: 6 significant digits, trailing zeros removed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_vectors<'a, F: Scalar>(
    labels: impl Iterator<Item = &'a str>,
    rows: &Rows<F>,
) -> String {
    let mut out = format!("{} {}\n", rows.n_rows(), rows.dim());
    for (label, row) in labels.zip(rows.iter_rows()) {
        out.push_str(label);
        for &x in row {
            out.push(' ');
            out.push_str(&fmt_sig6(x.to_f64_lossy()));
        }
        out.push('\n');
    }
    out
}

/// Word (input) vectors: header `|V| p`, then `token x1 ... xp`.
pub fn export_word_vectors<F: Scalar>(state: &EmbeddingState<F>, vocab: &Vocabulary) -> String {
    write_vectors(vocab.words().iter().map(String::as_str), &state.u)
}

/// Category vectors in the same layout, labelled by category name.
pub fn export_category_vectors<F: Scalar>(state: &EmbeddingState<F>, names: &[String]) -> String {
    write_vectors(names.iter().map(String::as_str), &state.c)
}

/// `token κ` per line.
pub fn export_kappa<F: Scalar>(state: &EmbeddingState<F>, vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (w, k) in vocab.words().iter().zip(&state.kappa) {
        let _ = writeln!(out, "{w} {}", fmt_sig6(k.to_f64_lossy()));
    }
    out
}

/// Everything needed to reuse a trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub config: MineConfig,
    pub vocab: Vocabulary,
    pub category_names: Vec<String>,
    pub state: EmbeddingState<F>,
}

fn push_row<F: Scalar>(out: &mut String, row: &[F]) {
    for (i, x) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // shortest representation that parses back to the same value
        let _ = write!(out, "{x}");
    }
    out.push('\n');
}

impl<F: Scalar> Checkpoint<F> {
    pub fn to_text(&self) -> Result<String> {
        let s = &self.state;
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
        let _ = writeln!(out, "scalar {}", F::NAME);
        let _ = writeln!(out, "config {}", serde_json::to_string(&self.config)?);
        let _ = writeln!(
            out,
            "shape {} {} {} {}",
            s.vocab_size(),
            s.dim(),
            s.doc_count(),
            s.n_categories()
        );
        let _ = writeln!(out, "kappa_min {}", s.kappa_min);
        let _ = writeln!(out, "min_count {}", self.vocab.min_count());
        for (w, c) in self.vocab.words().iter().zip(self.vocab.counts()) {
            let _ = writeln!(out, "{w} {c}");
        }
        for n in &self.category_names {
            let _ = writeln!(out, "{n}");
        }
        push_row(&mut out, &s.kappa);
        for m in [&s.u, &s.v, &s.d, &s.c] {
            for row in m.iter_rows() {
                push_row(&mut out, row);
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("truncated checkpoint: missing {what}")))
        };
        let (_, magic) = next("magic")?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::parse(path, 1, "not a checkpoint (bad magic)"));
        }
        let field = |(i, l): (usize, &str), key: &str| -> Result<String> {
            l.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::parse(path, i + 1, format!("expected '{key}'")))
        };
        let scalar = field(next("scalar")?, "scalar")?;
        if scalar != F::NAME {
            return Err(Error::parse(
                path,
                2,
                format!("checkpoint holds {scalar} values, expected {}", F::NAME),
            ));
        }
        let config: MineConfig = serde_json::from_str(&field(next("config")?, "config")?)?;
        let shape_line = next("shape")?;
        let shape: Vec<usize> = field(shape_line, "shape")?
            .split(' ')
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, shape_line.0 + 1, "bad shape"))?;
        let [n_words, dim, n_docs, n_cats] = shape[..] else {
            return Err(Error::parse(path, shape_line.0 + 1, "bad shape"));
        };
        let km_line = next("kappa_min")?;
        let kappa_min: F = field(km_line, "kappa_min")?
            .parse()
            .map_err(|_| Error::parse(path, km_line.0 + 1, "bad kappa_min"))?;
        let mc_line = next("min_count")?;
        let min_count: u64 = field(mc_line, "min_count")?
            .parse()
            .map_err(|_| Error::parse(path, mc_line.0 + 1, "bad min_count"))?;

        let mut entries = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            let (i, l) = next("vocabulary entry")?;
            let (w, c) = l
                .rsplit_once(' ')
                .ok_or_else(|| Error::parse(path, i + 1, "expected 'word count'"))?;
            let c: u64 = c
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad count"))?;
            entries.push((w.to_owned(), c));
        }
        let vocab = Vocabulary::from_entries(entries, min_count)?;
        let mut category_names = Vec::with_capacity(n_cats);
        for _ in 0..n_cats {
            category_names.push(next("category name")?.1.to_owned());
        }

        let mut parse_row = |width: usize, what: &str| -> Result<Vec<F>> {
            let (i, l) = next(what)?;
            let row: Vec<F> = l
                .split(' ')
                .map(|t| t.parse::<F>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number in {what}")))?;
            if row.len() != width {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("{what}: expected {width} values, got {}", row.len()),
                ));
            }
            Ok(row)
        };
        let kappa = parse_row(n_words, "kappa")?;
        let mut block = |rows: usize, what: &str| -> Result<Rows<F>> {
            let mut data = Vec::with_capacity(rows * dim);
            for _ in 0..rows {
                data.extend(parse_row(dim, what)?);
            }
            if rows == 0 {
                return Ok(Rows::zeros(0, dim));
            }
            Rows::from_vec(data, dim)
        };
        let u = block(n_words, "u")?;
        let v = block(n_words, "v")?;
        let d = block(n_docs, "d")?;
        let c = block(n_cats, "c")?;
        Ok(Checkpoint {
            config,
            vocab,
            category_names,
            state: EmbeddingState {
                u,
                v,
                d,
                c,
                kappa,
                kappa_min,
            },
        })
    }
}
