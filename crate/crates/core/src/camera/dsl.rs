//! Text format for trajectories.
//!
//! ```text
//! traj  := "trajectory" STRING "{" stmt* "}"
//! stmt  := "frames" INT | "pivot" ("auto" | FLOAT) | "interp" ("slerp" | "linear") | kf
//! kf    := "keyframe" INT "{" param* "}"
//! param := ("yaw" | "pitch" | "roll") FLOAT "deg" | ("truck" | "pedestal" | "dolly") FLOAT
//! ```
//!
//! `#` starts a comment that runs to the end of the line.

use std::fmt::Write;

use super::trajectory::{InterpMode, Keyframe, KeyframeParams, Pivot, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(String),
    Open,
    Close,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            '{' => {
                i += 1;
                Tok::Open
            }
            '}' => {
                i += 1;
                Tok::Close
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(syntax(tline, tcol, "unterminated string"));
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => {
                                    return Err(syntax(
                                        tline,
                                        tcol + (i - start),
                                        "invalid escape sequence",
                                    ))
                                }
                            };
                            s.push(esc);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                i += 1;
                while i < chars.len() {
                    let ch = chars[i];
                    let exp_sign = (ch == '-' || ch == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Num(chars[start..i].iter().collect())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Word(chars[start..i].iter().collect())
            }
            other => {
                return Err(syntax(
                    tline,
                    tcol,
                    format!("unexpected character {other:?}"),
                ))
            }
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tline,
            column: tcol,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(t: &Token, message: impl Into<String>) -> Error {
        syntax(t.line, t.column, message)
    }

    fn expect_word(&mut self, word: &str) -> Result<Token> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == word => Ok(t),
            other => Err(Self::err_at(
                &t,
                format!("expected `{word}`, found {}", describe(other)),
            )),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(Self::err_at(
                &t,
                format!("expected {}, found {}", describe(&want), describe(&t.tok)),
            ))
        }
    }

    fn float(&mut self) -> Result<f64> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Self::err_at(&t, format!("malformed number `{s}`"))),
            other => Err(Self::err_at(
                &t,
                format!("expected number, found {}", describe(other)),
            )),
        }
    }

    fn int(&mut self) -> Result<(i64, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Num(s) => s
                .parse::<i64>()
                .map(|v| (v, t.clone()))
                .map_err(|_| Self::err_at(&t, format!("expected integer, found `{s}`"))),
            other => Err(Self::err_at(
                &t,
                format!("expected integer, found {}", describe(other)),
            )),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Open => "`{`".into(),
        Tok::Close => "`}`".into(),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    p.expect_word("trajectory")?;
    let name_tok = p.next();
    let name = match name_tok.tok {
        Tok::Str(s) => s,
        ref other => {
            return Err(Parser::err_at(
                &name_tok,
                format!("expected trajectory name string, found {}", describe(other)),
            ))
        }
    };
    p.expect(Tok::Open)?;

    let mut frames: Option<i64> = None;
    let mut pivot: Option<Pivot> = None;
    let mut interp: Option<InterpMode> = None;
    let mut raw_keyframes: Vec<(i64, KeyframeParams)> = Vec::new();

    loop {
        let t = p.next();
        let word = match &t.tok {
            Tok::Close => break,
            Tok::Word(w) => w.clone(),
            other => {
                return Err(Parser::err_at(
                    &t,
                    format!("expected statement, found {}", describe(other)),
                ))
            }
        };
        match word.as_str() {
            "frames" => {
                let (n, _) = p.int()?;
                if frames.replace(n).is_some() {
                    return Err(Error::Semantic(format!(
                        "line {}: `frames` given twice",
                        t.line
                    )));
                }
            }
            "pivot" => {
                let value = match &p.peek().tok {
                    Tok::Word(w) if w == "auto" => {
                        p.next();
                        Pivot::Auto
                    }
                    _ => Pivot::Depth(p.float()?),
                };
                if pivot.replace(value).is_some() {
                    return Err(Error::Semantic(format!(
                        "line {}: `pivot` given twice",
                        t.line
                    )));
                }
            }
            "interp" => {
                let m = p.next();
                let mode = match &m.tok {
                    Tok::Word(w) if w == "slerp" => InterpMode::Slerp,
                    Tok::Word(w) if w == "linear" => InterpMode::Linear,
                    other => {
                        return Err(Parser::err_at(
                            &m,
                            format!("expected `slerp` or `linear`, found {}", describe(other)),
                        ))
                    }
                };
                if interp.replace(mode).is_some() {
                    return Err(Error::Semantic(format!(
                        "line {}: `interp` given twice",
                        t.line
                    )));
                }
            }
            "keyframe" => {
                let (index, _) = p.int()?;
                raw_keyframes.push((index, parse_params(&mut p)?));
            }
            other => return Err(Parser::err_at(&t, format!("unknown keyword `{other}`"))),
        }
    }
    let trailing = p.next();
    if trailing.tok != Tok::Eof {
        return Err(Parser::err_at(
            &trailing,
            "unexpected input after trajectory",
        ));
    }

    let frames = frames.ok_or_else(|| Error::Semantic("missing `frames` statement".into()))?;
    if frames <= 0 {
        return Err(Error::Semantic(format!(
            "frame count must be positive, got {frames}"
        )));
    }
    let frame_count = u32::try_from(frames)
        .map_err(|_| Error::Semantic(format!("frame count {frames} is too large")))?;
    let mut keyframes = Vec::with_capacity(raw_keyframes.len());
    for (index, params) in raw_keyframes {
        if index < 0 || index >= frames {
            return Err(Error::Semantic(format!(
                "keyframe index {index} outside 0..{frames}"
            )));
        }
        keyframes.push(Keyframe {
            frame: index as u32,
            params,
        });
    }
    Trajectory::new(
        name,
        frame_count,
        keyframes,
        pivot.unwrap_or(Pivot::Auto),
        interp.unwrap_or(InterpMode::Slerp),
    )
}

fn parse_params(p: &mut Parser) -> Result<KeyframeParams> {
    p.expect(Tok::Open)?;
    let mut params = KeyframeParams::default();
    let mut seen: Vec<String> = Vec::new();
    loop {
        let t = p.next();
        let word = match &t.tok {
            Tok::Close => return Ok(params),
            Tok::Word(w) => w.clone(),
            other => {
                return Err(Parser::err_at(
                    &t,
                    format!("expected parameter, found {}", describe(other)),
                ))
            }
        };
        let slot = match word.as_str() {
            "yaw" => &mut params.yaw_deg,
            "pitch" => &mut params.pitch_deg,
            "roll" => &mut params.roll_deg,
            "truck" => &mut params.truck,
            "pedestal" => &mut params.pedestal,
            "dolly" => &mut params.dolly,
            other => return Err(Parser::err_at(&t, format!("unknown parameter `{other}`"))),
        };
        *slot = p.float()?;
        if matches!(word.as_str(), "yaw" | "pitch" | "roll") {
            p.expect_word("deg")?;
        }
        if seen.contains(&word) {
            return Err(Error::Semantic(format!(
                "line {}: `{word}` given twice",
                t.line
            )));
        }
        seen.push(word);
    }
}

fn escape(name: &str) -> String {
    let mut s = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s
}

/// Canonical text form. Re-parsing the output yields an equal trajectory.
pub fn pretty_print(traj: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trajectory \"{}\" {{", escape(&traj.name));
    let _ = writeln!(out, "  frames {}", traj.frame_count);
    match traj.pivot {
        Pivot::Auto => out.push_str("  pivot auto\n"),
        Pivot::Depth(d) => {
            let _ = writeln!(out, "  pivot {d:?}");
        }
    }
    let mode = match traj.interp {
        InterpMode::Slerp => "slerp",
        InterpMode::Linear => "linear",
    };
    let _ = writeln!(out, "  interp {mode}");
    for kf in &traj.keyframes {
        let p = &kf.params;
        let _ = writeln!(out, "  keyframe {} {{", kf.frame);
        for (name, v, unit) in [
            ("yaw", p.yaw_deg, " deg"),
            ("pitch", p.pitch_deg, " deg"),
            ("roll", p.roll_deg, " deg"),
            ("truck", p.truck, ""),
            ("pedestal", p.pedestal, ""),
            ("dolly", p.dolly, ""),
        ] {
            if v != 0.0 {
                let _ = writeln!(out, "    {name} {v:?}{unit}");
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
