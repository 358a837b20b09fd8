use std::fmt;

use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Amp,
    Tilde,
    Plus,
    Minus,
    Star,
    Slash,
    PlusMinus,
    Assign,
    Gt,
    Lt,
    Eq,
    Ge,
    Le,
    Ne,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Number(n) => return write!(f, "number `{n}`"),
            Tok::Str(s) => return write!(f, "string {s:?}"),
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Amp => "`&`",
            Tok::Tilde => "`~`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::PlusMinus => "`+-`",
            Tok::Assign => "`:=`",
            Tok::Gt => "`>`",
            Tok::Lt => "`<`",
            Tok::Eq => "`=`",
            Tok::Ge => "`>=`",
            Tok::Le => "`<=`",
            Tok::Ne => "`!=`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        let peek = chars.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                out.push((Tok::Ident(word), span));
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let n = text.parse::<f64>().map_err(|_| ParseError::at(span, "number", &text))?;
                out.push((Tok::Number(n), span));
                continue;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(ParseError::at(span, "closing `\"`", "end of line")),
                        Some('"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                            s.push(chars[i + 1]);
                            i += 2;
                            col += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                out.push((Tok::Str(s), span));
                continue;
            }
            _ => {}
        }
        let (tok, n) = match (c, peek) {
            ('+', Some('-')) => (Tok::PlusMinus, 2),
            (':', Some('=')) => (Tok::Assign, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('±', _) => (Tok::PlusMinus, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            ('.', _) => (Tok::Dot, 1),
            ('&', _) => (Tok::Amp, 1),
            ('~', _) => (Tok::Tilde, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('>', _) => (Tok::Gt, 1),
            ('<', _) => (Tok::Lt, 1),
            ('=', _) => (Tok::Eq, 1),
            _ => return Err(ParseError::at(span, "a token", &c.to_string())),
        };
        out.push((tok, span));
        i += n;
        col += n as u32;
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.0).collect()
    }

    #[test]
    fn numbers_and_ranges() {
        assert_eq!(toks("1.5e-3"), vec![Tok::Number(1.5e-3), Tok::Eof]);
        assert_eq!(
            toks("E.c > 3"),
            vec![Tok::Ident("E".into()), Tok::Dot, Tok::Ident("c".into()), Tok::Gt, Tok::Number(3.0), Tok::Eof]
        );
        assert_eq!(toks("10 +- 2")[1], Tok::PlusMinus);
        assert_eq!(toks("x := 1")[1], Tok::Assign);
    }

    #[test]
    fn comments_and_positions() {
        let t = lex("# hello\n  rule").unwrap();
        assert_eq!(t[0].0, Tok::Ident("rule".into()));
        assert_eq!((t[0].1.line, t[0].1.col), (2, 3));
    }

    #[test]
    fn bad_char() {
        let e = lex("rule $").unwrap_err();
        assert_eq!((e.line, e.col), (1, 6));
    }
}
