//! Plain-text model format.
//!
//! ```text
//! S A H
//! P h s a p_0 ... p_{S-1}
//! R h s a r
//! ```
//!
//! Tokens are whitespace separated, `h` is 1-based, `s` and `a` are
//! 0-based, and `#` starts a comment. Every `(h, s, a)` needs exactly one
//! `P` and one `R` line, in any order. Loaded models start in state 0.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::{Dims, EpisodicMdp, InitialStateMode};
use crate::error::{Error, Result};

/// Writes `mdp` so that [`parse_text`] reproduces it exactly (floats use the
/// shortest round-trip representation).
pub fn write_text<W: Write>(mdp: &EpisodicMdp, mut out: W) -> Result<()> {
    let d = mdp.dims();
    writeln!(out, "{} {} {}", d.states, d.actions, d.horizon)?;
    for h in 0..d.horizon {
        for s in 0..d.states {
            for a in 0..d.actions {
                write!(out, "P {} {s} {a}", h + 1)?;
                for p in mdp.transition_row(h, s, a) {
                    write!(out, " {p}")?;
                }
                writeln!(out)?;
                writeln!(out, "R {} {s} {a} {}", h + 1, mdp.reward(h, s, a))?;
            }
        }
    }
    Ok(())
}

pub fn read_text_file(path: &Path) -> Result<EpisodicMdp> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::File { path: path.to_path_buf(), source })?;
    parse_text(&text, &path.display().to_string())
}

struct Line<'a> {
    origin: &'a str,
    number: usize,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { origin: self.origin.to_string(), line: self.number, msg: msg.into() }
    }

    fn parse<T: FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse().map_err(|_| self.err(format!("bad {what} `{tok}`")))
    }
}

pub fn parse_text(text: &str, origin: &str) -> Result<EpisodicMdp> {
    let mut dims: Option<Dims> = None;
    let mut p: Vec<f64> = Vec::new();
    let mut r: Vec<f64> = Vec::new();
    let mut seen_p: Vec<bool> = Vec::new();
    let mut seen_r: Vec<bool> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = Line { origin, number: i + 1 };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let Some(d) = dims else {
            let s = line.parse(toks.next(), "S")?;
            let a = line.parse(toks.next(), "A")?;
            let h = line.parse(toks.next(), "H")?;
            if toks.next().is_some() {
                return Err(line.err("header must be `S A H`"));
            }
            let d = Dims::new(s, a, h).map_err(|e| line.err(e.to_string()))?;
            p = vec![0.0; d.triples() * d.states];
            r = vec![0.0; d.triples()];
            seen_p = vec![false; d.triples()];
            seen_r = vec![false; d.triples()];
            dims = Some(d);
            continue;
        };
        let kind = toks.next().unwrap_or_default();
        let h: usize = line.parse(toks.next(), "h")?;
        let s: usize = line.parse(toks.next(), "s")?;
        let a: usize = line.parse(toks.next(), "a")?;
        if h == 0 || h > d.horizon || s >= d.states || a >= d.actions {
            return Err(line.err(format!("index (h={h}, s={s}, a={a}) out of range")));
        }
        let idx = d.sah(h - 1, s, a);
        match kind {
            "P" => {
                if std::mem::replace(&mut seen_p[idx], true) {
                    return Err(line.err("duplicate P line"));
                }
                for t in 0..d.states {
                    p[idx * d.states + t] = line.parse(toks.next(), "probability")?;
                }
            }
            "R" => {
                if std::mem::replace(&mut seen_r[idx], true) {
                    return Err(line.err("duplicate R line"));
                }
                r[idx] = line.parse(toks.next(), "reward")?;
            }
            other => return Err(line.err(format!("unknown record `{other}`"))),
        }
        if toks.next().is_some() {
            return Err(line.err("trailing tokens"));
        }
    }

    let d = dims.ok_or_else(|| Error::Parse { origin: origin.into(), line: 0, msg: "empty model".into() })?;
    if let Some(i) = seen_p.iter().zip(&seen_r).position(|(a, b)| !a || !b) {
        let (h, rest) = (i / (d.states * d.actions), i % (d.states * d.actions));
        return Err(Error::Parse {
            origin: origin.into(),
            line: 0,
            msg: format!("missing P or R for (h={}, s={}, a={})", h + 1, rest / d.actions, rest % d.actions),
        });
    }
    EpisodicMdp::new(d, p, r, InitialStateMode::Fixed(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::make_random_mdp;
    use proptest::prelude::*;

    #[test]
    fn parses_small_model() {
        let text = "# two states\n2 1 1\nP 1 0 0 0.25 0.75\nR 1 0 0 0.5\nP 1 1 0 1 0\nR 1 1 0 1\n";
        let mdp = parse_text(text, "inline").unwrap();
        assert_eq!(mdp.transition_row(0, 0, 0), &[0.25, 0.75]);
        assert_eq!(mdp.reward(0, 1, 0), 1.0);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "1 1 1\nP 1 0 0 x\n";
        match parse_text(text, "m.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let missing = "1 1 2\nP 1 0 0 1\nR 1 0 0 0\n";
        assert!(matches!(parse_text(missing, "m"), Err(Error::Parse { .. })));
        let dup = "1 1 1\nP 1 0 0 1\nP 1 0 0 1\nR 1 0 0 0\n";
        assert!(matches!(parse_text(dup, "m"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn loader_still_validates() {
        let text = "2 1 1\nP 1 0 0 0.5 0.6\nR 1 0 0 0\nP 1 1 0 0 1\nR 1 1 0 0\n";
        assert!(matches!(parse_text(text, "m"), Err(Error::NonStochasticRow { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trips_exactly(s in 1usize..5, a in 1usize..4, h in 1usize..5, seed: u64, sparsity in 0.0f64..1.0) {
            let mdp = make_random_mdp(s, a, h, seed, sparsity).unwrap();
            let mut buf = Vec::new();
            write_text(&mdp, &mut buf).unwrap();
            let back = parse_text(std::str::from_utf8(&buf).unwrap(), "buf").unwrap();
            prop_assert_eq!(back, mdp);
        }
    }
}
