//! Text grammar for copula descriptions:
//!
//! ```text
//! spec := "pi" | "min" | "fgm:" THETA
//!       | "checkerboard:@" FILE | "shuffle:@" FILE
//!       | "mix:" ALPHA "," spec "," spec
//! ```
//!
//! File references are resolved relative to an optional base directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Copula, ShuffleOfMin};
use crate::error::{Error, Result};
use crate::io;

pub fn parse_copula_spec(text: &str) -> Result<Copula> {
    parse_copula_spec_in(text, None)
}

/// Parses `text`, resolving `@FILE` references against `base_dir`.
pub fn parse_copula_spec_in(text: &str, base_dir: Option<&Path>) -> Result<Copula> {
    let mut p = Parser {
        text,
        pos: 0,
        base_dir,
    };
    let spec = p.spec()?;
    if p.pos != text.len() {
        return Err(p.error(format!("unexpected trailing input '{}'", &text[p.pos..])));
    }
    Ok(spec)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    base_dir: Option<&'a Path>,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Consumes up to the next comma or end of input.
    fn atom(&mut self) -> &str {
        let start = self.pos;
        let len = self.rest().find(',').unwrap_or(self.rest().len());
        self.pos += len;
        &self.text[start..self.pos]
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let start = self.pos;
        let atom = self.atom().trim();
        match atom.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => {
                let msg = format!("expected {what}, found '{atom}'");
                self.pos = start;
                Err(self.error(msg))
            }
        }
    }

    fn path(&mut self) -> Result<PathBuf> {
        if !self.eat("@") {
            return Err(self.error("expected '@FILE'"));
        }
        let start = self.pos;
        let atom = self.atom().trim().to_string();
        if atom.is_empty() {
            self.pos = start;
            return Err(self.error("empty file name"));
        }
        let path = PathBuf::from(atom);
        Ok(match self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        })
    }

    fn spec(&mut self) -> Result<Copula> {
        let start = self.pos;
        let at = |e: Error| match e {
            Error::Parse { .. } | Error::Io { .. } => e,
            other => Error::Parse {
                position: start,
                message: other.to_string(),
            },
        };
        if self.eat("mix:") {
            let alpha = self.number("mixture weight")?;
            if !self.eat(",") {
                return Err(self.error("expected ',' after mixture weight"));
            }
            let first = self.spec()?;
            if !self.eat(",") {
                return Err(self.error("expected ',' between mixture components"));
            }
            let second = self.spec()?;
            return Copula::mixture(alpha, first, second).map_err(at);
        }
        if self.eat("fgm:") {
            let theta = self.number("FGM parameter")?;
            return Copula::fgm(theta).map_err(at);
        }
        if self.eat("checkerboard:") {
            let path = self.path()?;
            let cb = io::read_checkerboard_csv(&path).map_err(at)?;
            return Ok(Copula::Checkerboard(Arc::new(cb)));
        }
        if self.eat("shuffle:") {
            let path = self.path()?;
            let segments = io::read_shuffle_csv(&path).map_err(at)?;
            return ShuffleOfMin::from_segments(segments)
                .map(Copula::Shuffle)
                .map_err(at);
        }
        let word = self.atom().trim().to_string();
        match word.as_str() {
            "pi" => Ok(Copula::Independence),
            "min" => Ok(Copula::FrechetMin),
            _ => {
                self.pos = start;
                Err(self.error(format!("unknown copula '{word}'")))
            }
        }
    }
}
