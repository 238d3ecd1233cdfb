//! Command-line syntax for spaces, operators, symbols and weight generators.
//!
//! Spaces use a compact functional notation:
//!
//! ```text
//! L(p)  L(p, [v1 v2 ...])  Lor(p, q)  Orl(p)  Orl(p, a)
//! conc(X, p)  dual(X)  prod(X, Y, ...)  prod(X, Y, [t1, t2])
//! boch(r, [w1 ...], X)  umd(X, p_minus, p_plus)
//! ```
//!
//! `Orl(p)` is `t^p` and `Orl(p, a)` is `t^p log(e + t)^a`. Any argument
//! starting with `{` is read as JSON instead, and `@path` reads the
//! expression from a file.

use std::path::Path;

use weightlab_core::lattice::CubeFamily;
use weightlab_core::operators::{BilinearKernel, CzProfile, Operator, SymbolSamples};
use weightlab_core::spaces::{OrliczFamily, SpaceExpr};
use weightlab_core::weights::WeightGenerator;

use crate::format::real;
use crate::io::{parse_real, read_symbol, read_text};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Num(f64),
    Open,
    Close,
    LBracket,
    RBracket,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            '[' => Some(Token::LBracket),
            ']' => Some(Token::RBracket),
            ',' => Some(Token::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push(t);
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-' | '_') {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '.' | '+' | '-' | '_')) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if c.is_ascii_alphabetic() && word != "inf" {
                out.push(Token::Ident(word));
            } else {
                out.push(Token::Num(parse_real(&word)?));
            }
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

enum Arg {
    Space(SpaceExpr),
    Num(f64),
    List(Vec<f64>),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Token) -> Result<(), String> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(format!("expected {t:?}, found {got:?}")),
        }
    }

    fn arg(&mut self) -> Result<Arg, String> {
        match self.peek() {
            Some(Token::Num(_)) => match self.next() {
                Some(Token::Num(v)) => Ok(Arg::Num(v)),
                _ => unreachable!(),
            },
            Some(Token::LBracket) => {
                self.next();
                let mut xs = Vec::new();
                loop {
                    match self.next() {
                        Some(Token::Num(v)) => xs.push(v),
                        Some(Token::Comma) => {}
                        Some(Token::RBracket) => return Ok(Arg::List(xs)),
                        other => return Err(format!("unexpected {other:?} in list")),
                    }
                }
            }
            _ => Ok(Arg::Space(self.space()?)),
        }
    }

    fn space(&mut self) -> Result<SpaceExpr, String> {
        let name = match self.next() {
            Some(Token::Ident(n)) => n,
            other => return Err(format!("expected a space name, found {other:?}")),
        };
        self.expect(Token::Open)?;
        let mut args = Vec::new();
        if self.peek() != Some(&Token::Close) {
            loop {
                args.push(self.arg()?);
                match self.next() {
                    Some(Token::Comma) => {}
                    Some(Token::Close) => break,
                    other => return Err(format!("expected `,` or `)`, found {other:?}")),
                }
            }
        } else {
            self.next();
        }
        build(&name, args)
    }
}

fn build(name: &str, args: Vec<Arg>) -> Result<SpaceExpr, String> {
    use Arg::*;
    let bad = || format!("bad arguments for {name}(...)");
    let lower = name.to_ascii_lowercase();
    Ok(match (lower.as_str(), args.as_slice()) {
        ("l", [Num(p)]) => SpaceExpr::lebesgue(*p),
        ("l", [Num(p), List(w)]) => SpaceExpr::weighted_lebesgue(*p, w.clone()),
        ("lor", [Num(p), Num(q)]) => SpaceExpr::lorentz(*p, *q),
        ("orl", [Num(p)]) => SpaceExpr::orlicz(OrliczFamily::Power { p: *p }),
        ("orl", [Num(p), Num(a)]) => SpaceExpr::orlicz(OrliczFamily::PowerLog { p: *p, a: *a }),
        ("conc", [Space(x), Num(p)]) => x.clone().concavify(*p),
        ("dual", [Space(x)]) => x.clone().dual(),
        ("boch", [Num(r), List(w), Space(x)]) => SpaceExpr::bochner(*r, w.clone(), x.clone()),
        ("umd", [Space(x), Num(a), Num(b)]) => x.clone().umd(*a, *b),
        ("prod", _) => {
            let (children, exponents) = match args.split_last() {
                Some((List(t), rest)) => (rest, Some(t.clone())),
                _ => (args.as_slice(), None),
            };
            let children: Option<Vec<SpaceExpr>> =
                children.iter().map(|a| if let Space(x) = a { Some(x.clone()) } else { None }).collect();
            let children = children.ok_or_else(bad)?;
            if children.is_empty() {
                return Err(bad());
            }
            SpaceExpr::Product { children, exponents }
        }
        _ => return Err(bad()),
    })
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| real(x)).collect();
    format!("[{}]", items.join(" "))
}

/// Compact notation for `x`; [`parse_space`] reads it back.
pub fn format_space(x: &SpaceExpr) -> String {
    match x {
        SpaceExpr::Lebesgue { p, weight: None } => format!("L({})", real(*p)),
        SpaceExpr::Lebesgue { p, weight: Some(w) } => format!("L({}, {})", real(*p), list(w)),
        SpaceExpr::Lorentz { p, q } => format!("Lor({}, {})", real(*p), real(*q)),
        SpaceExpr::Orlicz { family: OrliczFamily::Power { p } } => format!("Orl({})", real(*p)),
        SpaceExpr::Orlicz { family: OrliczFamily::PowerLog { p, a } } => format!("Orl({}, {})", real(*p), real(*a)),
        SpaceExpr::Concavify { child, p } => format!("conc({}, {})", format_space(child), real(*p)),
        SpaceExpr::Dual { child } => format!("dual({})", format_space(child)),
        SpaceExpr::Product { children, exponents } => {
            let mut parts: Vec<String> = children.iter().map(format_space).collect();
            if let Some(t) = exponents {
                parts.push(list(t));
            }
            format!("prod({})", parts.join(", "))
        }
        SpaceExpr::Bochner { r, weight, inner } => format!("boch({}, {}, {})", real(*r), list(weight), format_space(inner)),
        SpaceExpr::Umd { child, p_minus, p_plus } => {
            format!("umd({}, {}, {})", format_space(child), real(*p_minus), real(*p_plus))
        }
    }
}

fn usage(what: &str, s: &str, e: impl std::fmt::Display) -> Error {
    Error::Usage(format!("invalid {what} {s:?}: {e}"))
}

fn resolve(s: &str) -> Result<String, Error> {
    match s.strip_prefix('@') {
        Some(path) => Ok(read_text(Path::new(path))?.trim().to_string()),
        None => Ok(s.to_string()),
    }
}

/// Parses compact notation, JSON, or either from `@path`.
pub fn parse_space(s: &str) -> Result<SpaceExpr, Error> {
    let text = resolve(s)?;
    if text.starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| usage("space", s, e));
    }
    let tokens = tokenize(&text).map_err(|e| usage("space", s, e))?;
    let mut p = Parser { tokens, pos: 0 };
    let x = p.space().map_err(|e| usage("space", s, e))?;
    if p.pos != p.tokens.len() {
        return Err(usage("space", s, "trailing input"));
    }
    Ok(x)
}

pub fn parse_family(s: &str) -> Result<CubeFamily, Error> {
    match s {
        "dyadic" => Ok(CubeFamily::Dyadic),
        "all-aligned" => Ok(CubeFamily::AllAligned),
        _ => Err(usage("cube family", s, "expected dyadic or all-aligned")),
    }
}

/// `identity`, `hilbert`, `bochner-riesz:δ` or `@path` with `n` samples.
pub fn parse_symbol_spec(s: &str, n: usize) -> Result<SymbolSamples, Error> {
    let (name, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
    let sym = match (name, arg) {
        ("identity", None) => SymbolSamples::identity(n),
        ("hilbert", None) => SymbolSamples::hilbert(n),
        ("bochner-riesz", Some(d)) => SymbolSamples::bochner_riesz(n, parse_real(d).map_err(|e| usage("symbol", s, e))?),
        _ if s.starts_with('@') => {
            let sym = read_symbol(Path::new(&s[1..]))?;
            if sym.len() != n {
                return Err(usage("symbol", s, format!("expected {n} samples, found {}", sym.len())));
            }
            return Ok(sym);
        }
        _ => return Err(usage("symbol", s, "expected identity, hilbert, bochner-riesz:<delta> or @file")),
    };
    sym.map_err(|e| usage("symbol", s, e))
}

/// Operator names: `identity`, `maximal[:family]`, `lattice-maximal[:family]`,
/// `hilbert`, `bht`, `bilinear-cz` and `multiplier:<symbol>`; JSON is also
/// accepted. Multipliers are sampled on `n` frequencies.
pub fn parse_operator(s: &str, n: usize) -> Result<Operator, Error> {
    let text = resolve(s)?;
    if text.starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| usage("operator", s, e));
    }
    let (name, arg) = text.split_once(':').map_or((text.as_str(), None), |(a, b)| (a, Some(b)));
    let family = |arg: Option<&str>| arg.map_or(Ok(CubeFamily::Dyadic), parse_family);
    Ok(match name {
        "identity" => Operator::Identity,
        "maximal" => Operator::Maximal { family: family(arg)? },
        "lattice-maximal" => Operator::LatticeMaximal { family: family(arg)? },
        "hilbert" => Operator::Hilbert,
        "bht" => Operator::Bilinear { kernel: BilinearKernel::BhtTruncated },
        "bilinear-cz" => Operator::Bilinear { kernel: BilinearKernel::SmoothCz { profile: CzProfile::TaperedCauchy } },
        "multiplier" => {
            let sym = arg.ok_or_else(|| usage("operator", s, "multiplier needs a symbol"))?;
            Operator::Multiplier { symbol: parse_symbol_spec(sym, n)? }
        }
        _ => return Err(usage("operator", s, "unknown operator")),
    })
}

/// `constant:c`, `two-value:a,b`, `log-uniform:σ`, `martingale:β`, or JSON.
pub fn parse_weight_gen(s: &str) -> Result<WeightGenerator, Error> {
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| usage("weight generator", s, e));
    }
    let err = |e: String| usage("weight generator", s, e);
    let (name, arg) = s.split_once(':').ok_or_else(|| err("expected name:parameters".into()))?;
    let nums: Vec<f64> = arg.split(',').map(|t| parse_real(t.trim())).collect::<Result<_, _>>().map_err(err)?;
    Ok(match (name, nums.as_slice()) {
        ("constant", [c]) => WeightGenerator::Constant { c: *c },
        ("two-value", [left, right]) => WeightGenerator::TwoValue { left: *left, right: *right },
        ("log-uniform", [sigma]) => WeightGenerator::LogUniform { sigma: *sigma },
        ("martingale" | "dyadic-martingale", [beta]) => WeightGenerator::DyadicMartingale { beta: *beta },
        _ => return Err(err("unknown generator or wrong parameter count".into())),
    })
}

/// Comma-separated reals.
pub fn parse_tuple(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',').map(|t| parse_real(t.trim()).map_err(|e| usage("tuple", s, e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_round_trip() {
        for s in [
            "L(2)",
            "L(inf)",
            "L(2, [1 2.5])",
            "Lor(2, 1)",
            "Orl(2, 1)",
            "dual(conc(Orl(3), 0.5))",
            "prod(L(2), Lor(2, 1), [0.7 0.3])",
            "boch(2, [1 2], L(4))",
            "umd(L(3), 1, inf)",
        ] {
            let x = parse_space(s).unwrap();
            assert_eq!(format_space(&x), s);
            let json = serde_json::to_string(&x).unwrap();
            assert_eq!(parse_space(&json).unwrap(), x);
        }
        assert_eq!(parse_space("prod(L(2),L(4))").unwrap(), SpaceExpr::product(vec![SpaceExpr::lebesgue(2.0), SpaceExpr::lebesgue(4.0)]));
        for bad in ["L", "L(2", "Q(2)", "L(2))", "prod()", "conc(2, L(2))"] {
            assert!(parse_space(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn operators_and_generators() {
        assert_eq!(parse_operator("maximal:all-aligned", 8).unwrap(), Operator::Maximal { family: CubeFamily::AllAligned });
        assert_eq!(parse_operator("multiplier:hilbert", 8).unwrap().arity(), 1);
        assert_eq!(parse_operator("bht", 8).unwrap().arity(), 2);
        assert!(parse_operator("riesz", 8).is_err());
        assert_eq!(parse_weight_gen("two-value:2,1").unwrap(), WeightGenerator::TwoValue { left: 2.0, right: 1.0 });
        assert!(parse_weight_gen("log-uniform").is_err());
    }
}
