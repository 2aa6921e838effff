//! Step splitting, final-answer extraction and exact answer equivalence.
//!
//! Numbers are compared with arbitrary-precision rationals. There is no
//! floating-point comparison anywhere in this module: `0.5`, `1/2` and
//! `\frac{2}{4}` are the same value, `0.1` and `1/10` are the same value,
//! and `0.3333` is not `1/3`.
//!
//! Unsupported answer kinds (sets, intervals, quantities with units) fall
//! back to trimmed, case-folded string equality.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerKind {
    Integer,
    Rational,
    Decimal,
    ChoiceLetter,
    RawString,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Value {
    Integer(BigInt),
    /// Lowest terms, positive denominator.
    Rational(BigInt, BigInt),
    /// `mantissa / 10^scale`, trailing zeros stripped down to one decimal.
    Decimal { mantissa: BigInt, scale: u32 },
    Choice(char),
    Raw(String),
}

/// A classified answer in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalAnswer {
    value: Value,
}

/// Key under which answers compare equal. Numeric kinds share one key space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EqualityKey {
    Number(BigRational),
    Choice(char),
    Raw(String),
}

impl CanonicalAnswer {
    pub fn kind(&self) -> AnswerKind {
        match self.value {
            Value::Integer(_) => AnswerKind::Integer,
            Value::Rational(..) => AnswerKind::Rational,
            Value::Decimal { .. } => AnswerKind::Decimal,
            Value::Choice(_) => AnswerKind::ChoiceLetter,
            Value::Raw(_) => AnswerKind::RawString,
        }
    }

    /// Exact numeric value for the numeric kinds.
    pub fn number(&self) -> Option<BigRational> {
        match &self.value {
            Value::Integer(n) => Some(BigRational::from_integer(n.clone())),
            Value::Rational(p, q) => Some(BigRational::new(p.clone(), q.clone())),
            Value::Decimal { mantissa, scale } => Some(BigRational::new(
                mantissa.clone(),
                BigInt::from(10u32).pow(*scale),
            )),
            _ => None,
        }
    }

    pub fn equality_key(&self) -> EqualityKey {
        match &self.value {
            Value::Choice(c) => EqualityKey::Choice(*c),
            Value::Raw(s) => EqualityKey::Raw(s.clone()),
            _ => EqualityKey::Number(self.number().expect("numeric kind")),
        }
    }
}

impl fmt::Display for CanonicalAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Value::Integer(n) => write!(f, "{n}"),
            Value::Rational(p, q) => write!(f, "{p}/{q}"),
            Value::Decimal { mantissa, scale } => {
                let sign = if mantissa.is_negative() { "-" } else { "" };
                let digits = mantissa.abs().to_string();
                let scale = *scale as usize;
                let padded = format!("{digits:0>width$}", width = scale + 1);
                let (int, frac) = padded.split_at(padded.len() - scale);
                write!(f, "{sign}{int}.{frac}")
            }
            Value::Choice(c) => write!(f, "{c}"),
            Value::Raw(s) => f.write_str(s),
        }
    }
}

/// Splits a response into steps. Empty segments are dropped.
pub fn parse_steps(text: &str, delimiter: &str) -> Result<Vec<String>> {
    if delimiter.is_empty() {
        return Err(Error::InvalidArgument("delimiter must be non-empty".into()));
    }
    if text.is_empty() {
        return Err(Error::EmptyResponse);
    }
    Ok(text
        .split(delimiter)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Content of the last balanced `\boxed{...}`, else the text after the last
/// `Answer:` marker.
pub fn extract_final_answer(text: &str) -> Result<String> {
    if let Some(boxed) = last_boxed(text) {
        return Ok(boxed.trim().to_owned());
    }
    let lower = text.to_lowercase();
    // Lowercasing can change byte offsets for non-ASCII text, so only trust
    // the position when the lengths agree.
    let pos = if lower.len() == text.len() {
        lower.rfind("answer:")
    } else {
        text.rfind("Answer:")
    };
    if let Some(pos) = pos {
        let rest = text[pos + "answer:".len()..].trim();
        if !rest.is_empty() {
            return Ok(rest.to_owned());
        }
    }
    Err(Error::NoAnswerFound)
}

fn last_boxed(text: &str) -> Option<&str> {
    const OPEN: &str = "\\boxed{";
    let mut found = None;
    let mut search = 0;
    while let Some(rel) = text[search..].find(OPEN) {
        let start = search + rel + OPEN.len();
        let mut depth = 1usize;
        let mut end = None;
        for (i, ch) in text[start..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(start + i);
                        break;
                    }
                }
                _ => {}
            }
        }
        if let Some(end) = end {
            found = Some(&text[start..end]);
        }
        search = start;
    }
    found
}

pub fn canonicalize(answer: &str) -> CanonicalAnswer {
    let normalized: String = answer.nfc().collect();
    let s = strip_wrappers(normalized.trim());
    let value = parse_integer(s)
        .map(Value::Integer)
        .or_else(|| parse_rational(s).map(|(p, q)| Value::Rational(p, q)))
        .or_else(|| parse_decimal(s))
        .or_else(|| parse_choice(s).map(Value::Choice))
        .unwrap_or_else(|| Value::Raw(s.to_lowercase()));
    CanonicalAnswer { value }
}

pub fn answers_equal(a: &str, b: &str) -> bool {
    canonicalize(a).equality_key() == canonicalize(b).equality_key()
}

fn strip_wrappers(mut s: &str) -> &str {
    loop {
        let before = s;
        if let Some(inner) = s.strip_prefix('$').and_then(|t| t.strip_suffix('$')) {
            s = inner.trim();
        }
        if let Some(inner) = s.strip_prefix("\\text{").and_then(|t| t.strip_suffix('}')) {
            s = inner.trim();
        }
        if s.len() > 1 {
            if let Some(inner) = s.strip_suffix('.') {
                // keep "5." style decimals intact
                if !inner.ends_with(|c: char| c.is_ascii_digit()) {
                    s = inner.trim();
                }
            }
        }
        if s == before {
            return s;
        }
    }
}

fn split_sign(s: &str) -> (bool, &str) {
    match s.as_bytes().first() {
        Some(b'-') => (true, s[1..].trim_start()),
        Some(b'+') => (false, s[1..].trim_start()),
        _ => (false, s),
    }
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Digits with optional `1,234,567` grouping.
fn parse_grouped(s: &str) -> Option<BigInt> {
    if !s.contains(',') {
        return parse_digits(s);
    }
    let mut groups = s.split(',');
    let head = groups.next()?;
    if head.is_empty() || head.len() > 3 {
        return None;
    }
    let mut digits = head.to_owned();
    for g in groups {
        if g.len() != 3 {
            return None;
        }
        digits.push_str(g);
    }
    parse_digits(&digits)
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let (neg, body) = split_sign(s);
    let n = parse_grouped(body)?;
    Some(if neg { -n } else { n })
}

fn parse_signed_plain(s: &str) -> Option<BigInt> {
    let (neg, body) = split_sign(s.trim());
    let n = parse_digits(body)?;
    Some(if neg { -n } else { n })
}

fn parse_rational(s: &str) -> Option<(BigInt, BigInt)> {
    let (num, den) = if let Some((n, d)) = s.split_once('/') {
        (parse_signed_plain(n)?, parse_signed_plain(d)?)
    } else {
        let (neg, body) = split_sign(s);
        let body = ["\\frac{", "\\dfrac{", "\\tfrac{"]
            .iter()
            .find_map(|p| body.strip_prefix(p))?;
        let (n, rest) = body.split_once("}{")?;
        let d = rest.strip_suffix('}')?;
        let n = parse_signed_plain(n)?;
        (if neg { -n } else { n }, parse_signed_plain(d)?)
    };
    if den.is_zero() {
        return None;
    }
    let g = num.gcd(&den);
    let (mut p, mut q) = (num / &g, den / &g);
    if q.is_negative() {
        p = -p;
        q = -q;
    }
    Some((p, q))
}

fn parse_decimal(s: &str) -> Option<Value> {
    let (neg, body) = split_sign(s);
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let int_val = if int.is_empty() {
        BigInt::zero()
    } else {
        parse_grouped(int)?
    };
    if !frac.is_empty() && !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        frac = "0";
    }
    let scale = frac.len() as u32;
    let mut mantissa = int_val * BigInt::from(10u32).pow(scale) + parse_digits(frac)?;
    if neg {
        mantissa = -mantissa;
    }
    Some(Value::Decimal { mantissa, scale })
}

fn parse_choice(s: &str) -> Option<char> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .unwrap_or(s);
    let mut chars = inner.chars();
    let c = chars.next()?.to_ascii_uppercase();
    (chars.next().is_none() && ('A'..='E').contains(&c)).then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_steps_examples() {
        assert_eq!(parse_steps("A\n\nB\n\nC", "\n\n").unwrap(), ["A", "B", "C"]);
        assert_eq!(parse_steps("A", "\n\n").unwrap(), ["A"]);
        assert_eq!(parse_steps("A\n\n\n\nB", "\n\n").unwrap(), ["A", "B"]);
        assert!(matches!(parse_steps("", "\n\n"), Err(Error::EmptyResponse)));
        assert!(parse_steps("A", "").is_err());
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(extract_final_answer("so the answer is $\\boxed{60}$").unwrap(), "60");
        assert_eq!(extract_final_answer("Answer:60").unwrap(), "60");
        assert_eq!(
            extract_final_answer("\\boxed{\\frac{1}{2}}").unwrap(),
            "\\frac{1}{2}"
        );
        assert_eq!(
            extract_final_answer("\\boxed{1} then \\boxed{2}").unwrap(),
            "2"
        );
        assert!(matches!(
            extract_final_answer("no marker here"),
            Err(Error::NoAnswerFound)
        ));
        // unbalanced trailing box falls back to the earlier balanced one
        assert_eq!(extract_final_answer("\\boxed{7} and \\boxed{8").unwrap(), "7");
    }

    #[test]
    fn canonical_examples() {
        let half = canonicalize("1/2");
        assert_eq!(half.kind(), AnswerKind::Rational);
        assert_eq!(half.to_string(), "1/2");
        let dec = canonicalize("0.50");
        assert_eq!(dec.kind(), AnswerKind::Decimal);
        assert_eq!(dec.to_string(), "0.5");
        // oracle: 5/10 cross-multiplied against 1/2
        assert_eq!(dec.number().unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(dec.equality_key(), half.equality_key());
        let b = canonicalize("b");
        assert_eq!(b.kind(), AnswerKind::ChoiceLetter);
        assert_eq!(b.to_string(), "B");
        assert_eq!(canonicalize("  Hello World ").to_string(), "hello world");
        assert_eq!(canonicalize("4/-8").to_string(), "-1/2");
        assert_eq!(canonicalize("-\\frac{3}{6}").to_string(), "-1/2");
        assert_eq!(canonicalize("1,000").to_string(), "1000");
        assert_eq!(canonicalize("2.000").to_string(), "2.0");
        assert_eq!(canonicalize("-.25").to_string(), "-0.25");
        assert_eq!(canonicalize("$60$").to_string(), "60");
        assert_eq!(canonicalize("1/0").kind(), AnswerKind::RawString);
    }

    #[test]
    fn equality_examples() {
        assert!(answers_equal("60", "60"));
        assert!(answers_equal("1/2", "0.5"));
        assert!(!answers_equal("55", "60"));
        assert!(answers_equal("2", "2.0"));
        assert!(answers_equal("(C)", "c"));
        assert!(!answers_equal("0.3333", "1/3"));
        assert!(!answers_equal("B", "2"));
    }

    #[test]
    fn nfc_folding() {
        // "é" composed vs decomposed
        assert!(answers_equal("caf\u{e9}", "cafe\u{301}"));
    }

    fn numeric_text() -> impl Strategy<Value = String> {
        prop_oneof![
            (-1000i64..1000).prop_map(|n| n.to_string()),
            (-50i64..50, 1i64..50).prop_map(|(p, q)| format!("{p}/{q}")),
            (-50i64..50, 1i64..50).prop_map(|(p, q)| format!("\\frac{{{p}}}{{{q}}}")),
            (-999i64..999, 0u32..4).prop_map(|(m, s)| {
                let d = 10i64.pow(s);
                format!("{}{}.{:0>w$}", if m < 0 { "-" } else { "" }, m.abs() / d, m.abs() % d, w = s as usize)
            }),
            "[a-eA-E]".prop_map(|s| s),
        ]
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(s in numeric_text()) {
            let once = canonicalize(&s);
            let twice = canonicalize(&once.to_string());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn raw_canonicalization_is_idempotent(s in "[ a-zA-Z]{0,12}") {
            let once = canonicalize(&s);
            prop_assert_eq!(canonicalize(&once.to_string()), once);
        }

        #[test]
        fn equality_is_an_equivalence(a in numeric_text(), b in numeric_text(), c in numeric_text()) {
            prop_assert!(answers_equal(&a, &a));
            prop_assert_eq!(answers_equal(&a, &b), answers_equal(&b, &a));
            if answers_equal(&a, &b) && answers_equal(&b, &c) {
                prop_assert!(answers_equal(&a, &c));
            }
        }

        #[test]
        fn rational_matches_cross_multiplication(p in -200i64..200, q in 1i64..200, r in -200i64..200, s in 1i64..200) {
            prop_assert_eq!(answers_equal(&format!("{p}/{q}"), &format!("{r}/{s}")), p * s == r * q);
        }

        #[test]
        fn boxed_extraction_with_nested_braces(x in nested(3)) {
            let text = format!("Some work.\n\nThus $\\boxed{{{x}}}$ is it.");
            prop_assert_eq!(extract_final_answer(&text).unwrap(), x.trim());
        }
    }

    fn nested(depth: u32) -> BoxedStrategy<String> {
        let leaf = "[a-z0-9+ ]{1,4}".prop_map(|s| s).boxed();
        leaf.prop_recursive(depth, 16, 3, |inner| {
            prop::collection::vec(inner, 1..3)
                .prop_map(|parts| format!("x{{{}}}", parts.join("")))
        })
        .prop_filter("non-blank", |s| !s.trim().is_empty())
        .boxed()
    }
}
