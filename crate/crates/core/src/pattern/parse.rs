//! The `.owp` text format.
//!
//! ```text
//! qubits 1..4
//! inputs 1,2
//! outputs 1,4
//! E 1 3
//! M 2 0
//! M 3 -pi/4 s[2] t[]
//! X 4 s[3]
//! ```

use std::collections::BTreeSet;
use std::fmt;

use super::{Action, Angle, Pattern, PatternError, QubitId, Signal};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn syntax(&self, column: usize, message: impl Into<String>) -> PatternError {
        PatternError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn qubit(&self, tok: &Token<'_>) -> Result<QubitId, PatternError> {
        self.qubit_str(tok.text, tok.column)
    }

    fn qubit_str(&self, text: &str, column: usize) -> Result<QubitId, PatternError> {
        match text.trim().parse::<u32>() {
            Ok(v) if v > 0 => Ok(QubitId(v)),
            _ => Err(self.syntax(column, format!("expected a positive qubit label, found `{text}`"))),
        }
    }

    /// `1..8`, `1,2,3` or nothing.
    fn qubit_list(&self, rest: &str, column: usize) -> Result<Vec<QubitId>, PatternError> {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(Vec::new());
        }
        if let Some((lo, hi)) = rest.split_once("..") {
            let lo = self.qubit_str(lo, column)?;
            let hi = self.qubit_str(hi, column)?;
            if hi < lo {
                return Err(self.syntax(column, format!("empty range `{rest}`")));
            }
            return Ok((lo.0..=hi.0).map(QubitId).collect());
        }
        rest.split(',').map(|s| self.qubit_str(s, column)).collect()
    }

    fn angle(&self, tok: &Token<'_>) -> Result<Angle, PatternError> {
        parse_angle(tok.text).ok_or_else(|| PatternError::MalformedAngle {
            line: self.line,
            column: tok.column,
            text: tok.text.to_string(),
        })
    }

    /// `s[a+b]` / `t[]`; returns the tag letter and the signal.
    fn signal(&self, tok: &Token<'_>) -> Result<(char, Signal), PatternError> {
        let text = tok.text;
        let tag = text.chars().next().unwrap_or(' ');
        let inner = text
            .get(1..)
            .and_then(|r| r.strip_prefix('['))
            .and_then(|r| r.strip_suffix(']'));
        let (Some(inner), 's' | 't') = (inner, tag) else {
            return Err(self.syntax(tok.column, format!("expected `s[..]` or `t[..]`, found `{text}`")));
        };
        let mut sig = Signal::zero();
        for part in inner.split(['+', ',']).filter(|p| !p.trim().is_empty()) {
            sig.toggle(self.qubit_str(part, tok.column)?);
        }
        Ok((tag, sig))
    }
}

/// Parses `pi`-scaled literals exactly and anything else as finite radians.
fn parse_angle(text: &str) -> Option<Angle> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, text),
    };
    if let Some((coef, rest)) = body.split_once("pi") {
        let num: i64 = if coef.is_empty() { 1 } else { coef.parse().ok()? };
        let den: u64 = match rest {
            "" => 1,
            r => r.strip_prefix('/')?.parse().ok()?,
        };
        if den == 0 || coef.starts_with(['+', '-']) {
            return None;
        }
        return Some(Angle::pi_multiple(if neg { -num } else { num }, den));
    }
    let r: f64 = text.parse().ok()?;
    r.is_finite().then_some(Angle::Radians(r))
}

/// Parses a pattern file. Actions keep file order, which is execution order.
pub fn parse_pattern(text: &str) -> Result<Pattern, PatternError> {
    let mut qubits: Vec<(QubitId, usize)> = Vec::new();
    let mut inputs: Vec<(QubitId, usize)> = Vec::new();
    let mut outputs: Vec<(QubitId, usize)> = Vec::new();
    let mut actions: Vec<(Action, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let ctx = LineCtx { line: idx + 1 };
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokenize(line);
        let Some(head) = toks.first() else { continue };
        let rest_col = toks.get(1).map_or(head.column + head.text.len(), |t| t.column);
        let rest = || &line[line.find(head.text).unwrap() + head.text.len()..];

        let expect_len = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(ctx.syntax(head.column, format!("`{}` takes {} operand(s)", head.text, n - 1)))
            }
        };

        match head.text {
            "qubits" => qubits.extend(ctx.qubit_list(rest(), rest_col)?.into_iter().map(|q| (q, ctx.line))),
            "inputs" => inputs.extend(ctx.qubit_list(rest(), rest_col)?.into_iter().map(|q| (q, ctx.line))),
            "outputs" => outputs.extend(ctx.qubit_list(rest(), rest_col)?.into_iter().map(|q| (q, ctx.line))),
            "N" => {
                expect_len(2)?;
                actions.push((Action::Prepare(ctx.qubit(&toks[1])?), ctx.line));
            }
            "E" => {
                expect_len(3)?;
                let (u, v) = (ctx.qubit(&toks[1])?, ctx.qubit(&toks[2])?);
                if u == v {
                    return Err(ctx.syntax(toks[2].column, format!("qubit {u} entangled with itself")));
                }
                actions.push((Action::Entangle(u, v), ctx.line));
            }
            "M" => {
                if toks.len() < 3 || toks.len() > 5 {
                    return Err(ctx.syntax(head.column, "expected `M <qubit> <angle> [s[..]] [t[..]]`"));
                }
                let qubit = ctx.qubit(&toks[1])?;
                let angle = ctx.angle(&toks[2])?;
                let (mut s, mut t) = (None, None);
                for tok in &toks[3..] {
                    let slot = match ctx.signal(tok)? {
                        ('s', sig) => (&mut s, sig),
                        (_, sig) => (&mut t, sig),
                    };
                    if slot.0.is_some() {
                        return Err(ctx.syntax(tok.column, "signal given twice"));
                    }
                    *slot.0 = Some(slot.1);
                }
                actions.push((
                    Action::Measure {
                        qubit,
                        angle,
                        s: s.unwrap_or_default(),
                        t: t.unwrap_or_default(),
                    },
                    ctx.line,
                ));
            }
            "X" | "Z" => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(ctx.syntax(head.column, format!("expected `{} <qubit> [s[..]]`", head.text)));
                }
                let qubit = ctx.qubit(&toks[1])?;
                let signal = match toks.get(2) {
                    Some(tok) => match ctx.signal(tok)? {
                        ('s', sig) => sig,
                        _ => return Err(ctx.syntax(tok.column, "corrections take an `s[..]` signal")),
                    },
                    None => Signal::zero(),
                };
                let action = if head.text == "X" {
                    Action::CorrectX { qubit, signal }
                } else {
                    Action::CorrectZ { qubit, signal }
                };
                actions.push((action, ctx.line));
            }
            other => return Err(ctx.syntax(head.column, format!("unknown directive `{other}`"))),
        }
    }

    let mut declared = BTreeSet::new();
    for &(q, line) in &qubits {
        if !declared.insert(q) {
            return Err(PatternError::DuplicateQubit {
                qubit: q,
                line: Some(line),
            });
        }
    }
    for list in [&inputs, &outputs] {
        let mut seen = BTreeSet::new();
        for &(q, line) in list {
            if !declared.contains(&q) {
                return Err(PatternError::UndeclaredQubit {
                    qubit: q,
                    line: Some(line),
                });
            }
            if !seen.insert(q) {
                return Err(PatternError::DuplicateQubit {
                    qubit: q,
                    line: Some(line),
                });
            }
        }
    }
    for (a, line) in &actions {
        let referenced = a
            .targets()
            .into_iter()
            .chain(a.signals().into_iter().flat_map(|s| s.terms()));
        for q in referenced {
            if !declared.contains(&q) {
                return Err(PatternError::UndeclaredQubit {
                    qubit: q,
                    line: Some(*line),
                });
            }
        }
    }

    Pattern::new(
        declared,
        inputs.into_iter().map(|(q, _)| q),
        outputs.into_iter().map(|(q, _)| q),
        actions.into_iter().map(|(a, _)| a).collect(),
    )
}

fn write_list(f: &mut fmt::Formatter<'_>, qubits: &BTreeSet<QubitId>) -> fmt::Result {
    let (Some(first), Some(last)) = (qubits.first(), qubits.last()) else {
        return Ok(());
    };
    if qubits.len() > 2 && (last.0 - first.0) as usize + 1 == qubits.len() {
        return write!(f, " {first}..{last}");
    }
    let list: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
    write!(f, " {}", list.join(","))
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("qubits")?;
        write_list(f, &self.qubits)?;
        f.write_str("\ninputs")?;
        write_list(f, &self.inputs)?;
        f.write_str("\noutputs")?;
        write_list(f, &self.outputs)?;
        f.write_str("\n")?;
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}
