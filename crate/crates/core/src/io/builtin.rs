//! Registry of named example systems and their compact notation, e.g.
//! `uhf{2,3}`, `interval{3,5,9,17}`, `nf_lift{uhf{2,3}}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Loaded;
use crate::constructions::{
    direct_sum_nf_lift, exact_cpap, interval_cpap, interval_sampling_system, scaled_embedding_system, uhf_system,
    weighted_embedding_system,
};
use crate::error::{Error, Result};
use crate::kernel::AlgebraShape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    Uhf { base: usize, depth: usize },
    /// The associated system of the interval CPAP.
    Interval { grids: Vec<usize> },
    IntervalCpap { grids: Vec<usize> },
    Weighted { depth: usize, gammas: Vec<f64> },
    Scaled { base: usize, scales: Vec<f64> },
    NfLift { inner: Box<Builtin> },
    Exact { blocks: Vec<usize>, stages: usize },
}

impl Builtin {
    pub fn build(&self) -> Result<Loaded> {
        Ok(match self {
            Builtin::Uhf { base, depth } => Loaded::System(uhf_system(*base, *depth)?),
            Builtin::Interval { grids } => Loaded::System(interval_sampling_system(grids)?.0),
            Builtin::IntervalCpap { grids } => Loaded::Cpap(interval_cpap(grids)?),
            Builtin::Weighted { depth, gammas } => Loaded::System(weighted_embedding_system(*depth, gammas)?),
            Builtin::Scaled { base, scales } => Loaded::System(scaled_embedding_system(*base, scales)?),
            Builtin::NfLift { inner } => {
                let inner = inner.build()?.into_system()?;
                Loaded::System(direct_sum_nf_lift(&inner)?)
            }
            Builtin::Exact { blocks, stages } => Loaded::Cpap(exact_cpap(&AlgebraShape::new(blocks.clone())?, *stages)?),
        })
    }

    pub fn is_cpap(&self) -> bool {
        matches!(self, Builtin::IntervalCpap { .. } | Builtin::Exact { .. })
    }

    /// A small example of every builtin.
    pub fn examples() -> Vec<Builtin> {
        ["uhf{2,3}", "interval{3,5,9,17}", "interval_cpap{3,5,9,17}", "weighted{4,0.5}", "scaled{2,0.5}", "nf_lift{uhf{2,3}}", "exact{[2],4}"]
            .iter()
            .map(|s| s.parse().expect("valid example notation"))
            .collect()
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Uhf { base, depth } => write!(f, "uhf{{{base},{depth}}}"),
            Builtin::Interval { grids } => write!(f, "interval{{{}}}", join(grids)),
            Builtin::IntervalCpap { grids } => write!(f, "interval_cpap{{{}}}", join(grids)),
            Builtin::Weighted { depth, gammas } => write!(f, "weighted{{{depth},{}}}", join(gammas)),
            Builtin::Scaled { base, scales } => write!(f, "scaled{{{base},{}}}", join(scales)),
            Builtin::NfLift { inner } => write!(f, "nf_lift{{{inner}}}"),
            Builtin::Exact { blocks, stages } => write!(f, "exact{{[{}],{stages}}}", join(blocks)),
        }
    }
}

#[derive(Debug)]
enum Arg {
    Atom(String),
    List(Vec<String>),
    Nested(Builtin),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(format!("builtin:{}", self.pos + 1), msg)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | '+'))
        {
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    fn builtin(&mut self) -> Result<Builtin> {
        let name = self.word();
        if name.is_empty() {
            return Err(self.err("expected a builtin name"));
        }
        self.expect('{')?;
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('}') if args.is_empty() => break,
                Some('[') => {
                    self.pos += 1;
                    let mut items = Vec::new();
                    loop {
                        let w = self.word();
                        if !w.is_empty() {
                            items.push(w);
                        }
                        self.skip_ws();
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some(']') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("unterminated list")),
                        }
                    }
                    args.push(Arg::List(items));
                }
                _ => {
                    let save = self.pos;
                    let w = self.word();
                    self.skip_ws();
                    if self.peek() == Some('{') {
                        self.pos = save;
                        args.push(Arg::Nested(self.builtin()?));
                    } else if w.is_empty() {
                        return Err(self.err("expected an argument"));
                    } else {
                        args.push(Arg::Atom(w));
                    }
                }
            }
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => break,
                _ => return Err(self.err("expected ',' or '}'")),
            }
        }
        self.expect('}')?;
        assemble(&name, args).map_err(|e| match e {
            Error::InvalidParameter(m) => self.err(format!("{name}: {m}")),
            other => other,
        })
    }
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("bad number {s:?}")))
}

/// Atoms and lists flattened into one numeric sequence.
fn numbers<T: FromStr>(args: &[Arg]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for a in args {
        match a {
            Arg::Atom(s) => out.push(num(s)?),
            Arg::List(v) => {
                for s in v {
                    out.push(num(s)?);
                }
            }
            Arg::Nested(_) => return Err(Error::InvalidParameter("unexpected nested builtin".into())),
        }
    }
    Ok(out)
}

fn single<T: FromStr>(args: &[Arg], what: &str) -> Result<T> {
    match args {
        [Arg::Atom(s)] => num(s),
        _ => Err(Error::InvalidParameter(format!("{what}: expected a single number"))),
    }
}

fn assemble(name: &str, args: Vec<Arg>) -> Result<Builtin> {
    let need_head = |args: &[Arg]| {
        if args.len() < 2 {
            Err(Error::InvalidParameter("expected at least 2 arguments".into()))
        } else {
            Ok(())
        }
    };
    match name {
        "uhf" => {
            let v: Vec<usize> = numbers(&args)?;
            match v[..] {
                [base, depth] => Ok(Builtin::Uhf { base, depth }),
                _ => Err(Error::InvalidParameter("expected {base,depth}".into())),
            }
        }
        "interval" => Ok(Builtin::Interval { grids: numbers(&args)? }),
        "interval_cpap" => Ok(Builtin::IntervalCpap { grids: numbers(&args)? }),
        "weighted" => {
            need_head(&args)?;
            Ok(Builtin::Weighted {
                depth: single(&args[..1], "depth")?,
                gammas: numbers(&args[1..])?,
            })
        }
        "scaled" => {
            need_head(&args)?;
            Ok(Builtin::Scaled {
                base: single(&args[..1], "base")?,
                scales: numbers(&args[1..])?,
            })
        }
        "nf_lift" => match <[Arg; 1]>::try_from(args) {
            Ok([Arg::Nested(inner)]) => Ok(Builtin::NfLift { inner: Box::new(inner) }),
            _ => Err(Error::InvalidParameter("expected a single nested builtin".into())),
        },
        "exact" => {
            need_head(&args)?;
            let (last, head) = args.split_last().expect("non-empty");
            Ok(Builtin::Exact {
                blocks: numbers(head)?,
                stages: single(std::slice::from_ref(last), "stages")?,
            })
        }
        other => Err(Error::InvalidParameter(format!("unknown builtin {other:?}"))),
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let b = p.builtin()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(b)
    }
}
