//! S-expression syntax used in trace files and counterexamples.
//!
//! `(senc (pair cr#3 sr#4) (pkdf2 AES_CMAC_PRF sspcommissioner#0 OTHERVARS))`
//!
//! Names print as `label#index`, constants as their bare label. Sorts are
//! not printed; the parser recovers them from a label table.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{normalize, Ctor, Sort, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Name { label, index, .. } => write!(f, "{label}#{index}"),
            Term::Const { label, .. } => f.write_str(label),
            Term::App { ctor, args } => {
                write!(f, "({}", ctor.name())?;
                for a in args.iter() {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("unknown constructor `{0}`")]
    UnknownCtor(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("bad name index in `{0}`")]
    BadIndex(String),
    #[error("ill-sorted term: {0}")]
    Sort(String),
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(src: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Tok::Open);
                i += 1;
            }
            b')' => {
                out.push(Tok::Close);
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                out.push(Tok::Atom(&src[start..i]));
            }
        }
    }
    out
}

/// Parses one term. `sort_of` maps a name or constant label to its sort.
pub fn parse_term(src: &str, sort_of: &dyn Fn(&str) -> Option<Sort>) -> Result<Term, ParseError> {
    let toks = tokenize(src);
    let mut pos = 0;
    let t = parse_at(&toks, &mut pos, sort_of)?;
    if pos != toks.len() {
        return Err(ParseError::Unexpected(format!("{:?}", toks[pos])));
    }
    Ok(normalize(&t))
}

fn parse_at(toks: &[Tok<'_>], pos: &mut usize, sort_of: &dyn Fn(&str) -> Option<Sort>) -> Result<Term, ParseError> {
    match toks.get(*pos) {
        None => Err(ParseError::Eof),
        Some(Tok::Close) => Err(ParseError::Unexpected(")".into())),
        Some(Tok::Atom(a)) => {
            *pos += 1;
            parse_atom(a, sort_of)
        }
        Some(Tok::Open) => {
            *pos += 1;
            let head = match toks.get(*pos) {
                Some(Tok::Atom(a)) => *a,
                Some(t) => return Err(ParseError::Unexpected(format!("{t:?}"))),
                None => return Err(ParseError::Eof),
            };
            *pos += 1;
            let ctor = Ctor::from_name(head).ok_or_else(|| ParseError::UnknownCtor(head.into()))?;
            let mut args = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some(Tok::Close) => {
                        *pos += 1;
                        break;
                    }
                    None => return Err(ParseError::Eof),
                    _ => args.push(parse_at(toks, pos, sort_of)?),
                }
            }
            crate::term::apply(ctor, args).map_err(|e| ParseError::Sort(e.to_string()))
        }
    }
}

fn parse_atom(a: &str, sort_of: &dyn Fn(&str) -> Option<Sort>) -> Result<Term, ParseError> {
    match a.rsplit_once('#') {
        Some((label, idx)) => {
            let index: u32 = idx.parse().map_err(|_| ParseError::BadIndex(a.into()))?;
            let sort = sort_of(label).ok_or_else(|| ParseError::UnknownLabel(label.into()))?;
            Ok(Term::Name { label: Arc::from(label), index, sort })
        }
        None => {
            let sort = sort_of(a).ok_or_else(|| ParseError::UnknownLabel(a.into()))?;
            Ok(Term::Const { label: Arc::from(a), sort })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{mk, NameCtx};

    fn sorts(label: &str) -> Option<Sort> {
        Some(match label {
            "cr" | "sr" => Sort::Random,
            "ssp" => Sort::Bitstring,
            "AES_CMAC_PRF" => Sort::Prf,
            "OTHERVARS" => Sort::Bitstring,
            _ => return None,
        })
    }

    #[test]
    fn prints_and_parses() {
        let mut ctx = NameCtx::new();
        let cr = ctx.make_name("cr", Sort::Random);
        let sr = ctx.make_name("sr", Sort::Random);
        let ssp = ctx.make_name("ssp", Sort::Bitstring);
        let pskc = mk(
            Ctor::Pkdf2,
            vec![Term::constant("AES_CMAC_PRF", Sort::Prf), ssp, Term::constant("OTHERVARS", Sort::Bitstring)],
        );
        let t = mk(Ctor::Senc, vec![mk(Ctor::Pair, vec![cr, sr]), pskc]);
        let text = t.to_string();
        assert_eq!(text, "(senc (pair cr#0 sr#1) (pkdf2 AES_CMAC_PRF ssp#2 OTHERVARS))");
        assert_eq!(parse_term(&text, &sorts).unwrap(), t);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_term("(nope cr#0)", &sorts), Err(ParseError::UnknownCtor("nope".into())));
        assert!(parse_term("(pair cr#0", &sorts).is_err());
        assert!(matches!(parse_term("zz#1", &sorts), Err(ParseError::UnknownLabel(_))));
        assert!(matches!(parse_term("(exp cr#0 sr#1)", &sorts), Err(ParseError::Sort(_))));
    }
}
