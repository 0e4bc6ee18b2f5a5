//! The function-spec mini-language.
//!
//! ```text
//! spec   := name                      moebius | one
//!         | name ":" key "=" number   moebius_twist:gamma=0.3, remark:D=2, tau:k=3, char:q=5, one_conv_char:q=5
//!         | "conv(" spec ("," spec)+ ")"
//!         | "twist(" spec ",gamma=" number ")"
//!         | "inv(" spec ")"
//! ```
//!
//! Printing gives the canonical form, which is also the label of the built function.

use std::fmt;

use crate::error::{Error, Result};
use crate::gallery::{make_one_conv_char, moebius, moebius_twist, one, quadratic_char, remark};
use crate::multfun::{convolve_all, dirichlet_inverse, tau_k, twist, MultFunc};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    One,
    Moebius,
    MoebiusTwist(f64),
    Remark(u32),
    Tau(u32),
    Char(i64),
    OneConvChar(i64),
    Conv(Vec<FunctionSpec>),
    Twist(Box<FunctionSpec>, f64),
    Inv(Box<FunctionSpec>),
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::One => write!(f, "one"),
            FunctionSpec::Moebius => write!(f, "moebius"),
            FunctionSpec::MoebiusTwist(g) => write!(f, "moebius_twist:gamma={g}"),
            FunctionSpec::Remark(d) => write!(f, "remark:D={d}"),
            FunctionSpec::Tau(k) => write!(f, "tau:k={k}"),
            FunctionSpec::Char(q) => write!(f, "char:q={q}"),
            FunctionSpec::OneConvChar(q) => write!(f, "one_conv_char:q={q}"),
            FunctionSpec::Conv(parts) => {
                write!(f, "conv(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            FunctionSpec::Twist(inner, g) => write!(f, "twist({inner},gamma={g})"),
            FunctionSpec::Inv(inner) => write!(f, "inv({inner})"),
        }
    }
}

impl std::str::FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionSpec::parse(s)
    }
}

impl FunctionSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let mut p = Parser { input, pos: 0 };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos < input.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<MultFunc> {
        Ok(match self {
            FunctionSpec::One => one(),
            FunctionSpec::Moebius => moebius(),
            FunctionSpec::MoebiusTwist(g) => moebius_twist(*g),
            FunctionSpec::Remark(d) => remark(*d),
            FunctionSpec::Tau(k) => tau_k(*k)?,
            FunctionSpec::Char(q) => quadratic_char(*q)?,
            FunctionSpec::OneConvChar(q) => make_one_conv_char(*q)?.f,
            FunctionSpec::Conv(parts) => convolve_all(&parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?)?,
            FunctionSpec::Twist(inner, g) => twist(&inner.build()?, *g),
            FunctionSpec::Inv(inner) => dirichlet_inverse(&inner.build()?),
        })
    }
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

const NAMES: &str = "one, moebius, moebius_twist, remark, tau, char, one_conv_char, conv, twist, inv";

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.input, self.pos, msg)
    }

    fn rest(&self) -> &str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.input.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn word(&mut self) -> Result<(usize, &str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self.rest().find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok((start, &self.input[start..self.pos]))
    }

    fn number(&mut self) -> Result<(usize, &str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self.rest().find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))).unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        self.pos += len;
        Ok((start, &self.input[start..self.pos]))
    }

    fn float(&mut self) -> Result<f64> {
        let (at, text) = self.number()?;
        let text = text.to_string();
        text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::parse(self.input, at, format!("`{text}` is not a finite number")))
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T> {
        let (at, text) = self.number()?;
        let text = text.to_string();
        text.parse::<T>().map_err(|_| Error::parse(self.input, at, format!("`{text}` is not a valid integer here")))
    }

    /// `key=` with the expected key.
    fn key(&mut self, want: &str) -> Result<()> {
        let (at, k) = self.word()?;
        if k != want {
            return Err(Error::parse(self.input, at, format!("expected parameter `{want}`")));
        }
        self.expect('=')
    }

    fn spec(&mut self) -> Result<FunctionSpec> {
        let (at, name) = self.word()?;
        let name = name.to_string();
        match name.as_str() {
            "one" => Ok(FunctionSpec::One),
            "moebius" => Ok(FunctionSpec::Moebius),
            "moebius_twist" => {
                self.expect(':')?;
                self.key("gamma")?;
                Ok(FunctionSpec::MoebiusTwist(self.float()?))
            }
            "remark" => {
                self.expect(':')?;
                self.key("D")?;
                Ok(FunctionSpec::Remark(self.int()?))
            }
            "tau" => {
                self.expect(':')?;
                self.key("k")?;
                Ok(FunctionSpec::Tau(self.int()?))
            }
            "char" | "one_conv_char" => {
                self.expect(':')?;
                self.key("q")?;
                let q = self.int()?;
                Ok(if name == "char" { FunctionSpec::Char(q) } else { FunctionSpec::OneConvChar(q) })
            }
            "conv" => {
                self.expect('(')?;
                let mut parts = vec![self.spec()?];
                while self.eat(',') {
                    parts.push(self.spec()?);
                }
                self.expect(')')?;
                if parts.len() < 2 {
                    return Err(Error::parse(self.input, at, "conv needs at least two arguments"));
                }
                Ok(FunctionSpec::Conv(parts))
            }
            "twist" => {
                self.expect('(')?;
                let inner = self.spec()?;
                self.expect(',')?;
                self.key("gamma")?;
                let g = self.float()?;
                self.expect(')')?;
                Ok(FunctionSpec::Twist(Box::new(inner), g))
            }
            "inv" => {
                self.expect('(')?;
                let inner = self.spec()?;
                self.expect(')')?;
                Ok(FunctionSpec::Inv(Box::new(inner)))
            }
            other => Err(Error::parse(self.input, at, format!("unknown function `{other}` (known: {NAMES})"))),
        }
    }
}
