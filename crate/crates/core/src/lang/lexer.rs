//! Tokenizer for `.deladas` sources.

use std::fmt;

use super::diag::{Diagnostic, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Interface,
    Template,
    Component,
    Type,
    Host,
    Extends,
    Provides,
    Requires,
    Properties,
    Constant,
    Dynamic,
    Implementation,
    Instantiate,
    With,
    Satisfy,
    Using,
    Bind,
    Initialise,
    Destroy,
    ProvidedBy,
    ConstraintSet,
    Forall,
    In,
    Deployment,
    And,
    Or,
    Not,
    Optimise,
    Minimize,
    Maximize,
}

impl Keyword {
    const ALL: [(&'static str, Keyword); 30] = [
        ("interface", Keyword::Interface),
        ("template", Keyword::Template),
        ("component", Keyword::Component),
        ("type", Keyword::Type),
        ("host", Keyword::Host),
        ("extends", Keyword::Extends),
        ("provides", Keyword::Provides),
        ("requires", Keyword::Requires),
        ("properties", Keyword::Properties),
        ("constant", Keyword::Constant),
        ("dynamic", Keyword::Dynamic),
        ("implementation", Keyword::Implementation),
        ("instantiate", Keyword::Instantiate),
        ("with", Keyword::With),
        ("satisfy", Keyword::Satisfy),
        ("using", Keyword::Using),
        ("bind", Keyword::Bind),
        ("initialise", Keyword::Initialise),
        ("destroy", Keyword::Destroy),
        ("providedBy", Keyword::ProvidedBy),
        ("constraintSet", Keyword::ConstraintSet),
        ("forall", Keyword::Forall),
        ("in", Keyword::In),
        ("deployment", Keyword::Deployment),
        ("and", Keyword::And),
        ("or", Keyword::Or),
        ("not", Keyword::Not),
        ("optimise", Keyword::Optimise),
        ("minimize", Keyword::Minimize),
        ("maximize", Keyword::Maximize),
    ];

    pub fn from_word(word: &str) -> Option<Keyword> {
        Self::ALL.iter().find(|(w, _)| *w == word).map(|(_, k)| *k)
    }

    pub fn as_str(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, k)| *k == self)
            .map(|(w, _)| *w)
            .expect("every keyword is listed")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Dot,
    Le,
    Ge,
    Lt,
    Gt,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(n) => write!(f, "integer {n}"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Gt => f.write_str("`>`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits `source` into tokens. Whitespace (including newlines) and `//`
/// comments are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let pos = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let kind = match c {
            '(' => single(&mut cur, TokenKind::LParen),
            ')' => single(&mut cur, TokenKind::RParen),
            ',' => single(&mut cur, TokenKind::Comma),
            '=' => single(&mut cur, TokenKind::Eq),
            '.' => single(&mut cur, TokenKind::Dot),
            '<' | '>' => {
                cur.bump();
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                match (c, eq) {
                    ('<', true) => TokenKind::Le,
                    ('<', false) => TokenKind::Lt,
                    ('>', true) => TokenKind::Ge,
                    _ => TokenKind::Gt,
                }
            }
            '/' => {
                cur.bump();
                if cur.peek() != Some('/') {
                    return Err(Diagnostic::error(pos, "illegal character '/'"));
                }
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            '"' => lex_string(&mut cur, pos)?,
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    text.push(d);
                    cur.bump();
                }
                let n = text
                    .parse()
                    .map_err(|_| Diagnostic::error(pos, format!("integer {text} out of range")))?;
                TokenKind::Int(n)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(d) = cur.peek().filter(|d| d.is_alphanumeric() || *d == '_') {
                    word.push(d);
                    cur.bump();
                }
                match Keyword::from_word(&word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word),
                }
            }
            other => {
                return Err(Diagnostic::error(
                    pos,
                    format!("illegal character {other:?}"),
                ))
            }
        };
        out.push(Token { kind, pos });
    }
    Ok(out)
}

fn single(cur: &mut Cursor<'_>, kind: TokenKind) -> TokenKind {
    cur.bump();
    kind
}

fn lex_string(cur: &mut Cursor<'_>, start: Pos) -> Result<TokenKind, Diagnostic> {
    cur.bump();
    let mut text = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(Diagnostic::error(start, "unterminated string"));
            }
            Some('"') => return Ok(TokenKind::Str(text)),
            Some('\\') => match cur.bump() {
                Some('n') => text.push('\n'),
                Some('t') => text.push('\t'),
                Some(c @ ('"' | '\\')) => text.push(c),
                Some(c) => {
                    return Err(Diagnostic::error(
                        cur.pos(),
                        format!("unknown escape sequence \\{c}"),
                    ))
                }
                None => return Err(Diagnostic::error(start, "unterminated string")),
            },
            Some(c) => text.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn comparison_tokens() {
        assert_eq!(
            kinds("card(x) <= 2"),
            vec![
                TokenKind::Ident("card".into()),
                TokenKind::LParen,
                TokenKind::Ident("x".into()),
                TokenKind::RParen,
                TokenKind::Le,
                TokenKind::Int(2),
            ]
        );
        assert_eq!(
            kinds("a>=b<c>d=e.f,"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Ge,
                TokenKind::Ident("b".into()),
                TokenKind::Lt,
                TokenKind::Ident("c".into()),
                TokenKind::Gt,
                TokenKind::Ident("d".into()),
                TokenKind::Eq,
                TokenKind::Ident("e".into()),
                TokenKind::Dot,
                TokenKind::Ident("f".into()),
                TokenKind::Comma,
            ]
        );
    }

    #[test]
    fn comments_are_stripped() {
        assert_eq!(
            kinds("// note\nhost h1"),
            vec![
                TokenKind::Keyword(Keyword::Host),
                TokenKind::Ident("h1".into())
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("host\n  h1 // x\n\"s\"").unwrap();
        assert_eq!(toks[0].pos, Pos::new(1, 1));
        assert_eq!(toks[1].pos, Pos::new(2, 3));
        assert_eq!(toks[2].pos, Pos::new(3, 1));
        assert_eq!(toks[2].kind, TokenKind::Str("s".into()));
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("\"abc").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 1));
        assert!(err.message.contains("unterminated string"));
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("host h1 $").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 9));
        let err = tokenize("a / b").unwrap_err();
        assert_eq!(err.pos, Pos::new(1, 3));
    }

    #[test]
    fn escapes() {
        assert_eq!(kinds(r#""a\"b\\""#), vec![TokenKind::Str("a\"b\\".into())]);
    }
}
