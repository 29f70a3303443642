use crate::ast::Span;
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Double(f64),
    Str(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Semi,
    Comma,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Pipe,
    Bang,
    Prime,
    Arrow,
    DotDot,
    Question,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Double(v) => format!("`{v:?}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Eof => "end of file".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Bang => "!",
            Tok::Prime => "'",
            Tok::Arrow => "->",
            Tok::DotDot => "..",
            Tok::Question => "?",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let span = Span::new(self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token { tok: Tok::Eof, span });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                Tok::Ident(self.ident())
            } else if c.is_ascii_digit() || (c == '.' && self.peek2().is_some_and(|d| d.is_ascii_digit())) {
                self.number(span)?
            } else if c == '"' {
                self.string(span)?
            } else {
                self.bump();
                match c {
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '\'' => Tok::Prime,
                    '?' => Tok::Question,
                    '!' => self.follow('=', Tok::Ne, Tok::Bang),
                    '<' => self.follow('=', Tok::Le, Tok::Lt),
                    '>' => self.follow('=', Tok::Ge, Tok::Gt),
                    '-' => self.follow('>', Tok::Arrow, Tok::Minus),
                    '.' if self.peek() == Some('.') => {
                        self.bump();
                        Tok::DotDot
                    }
                    other => {
                        return Err(ParseError::syntax(
                            span,
                            format!("unexpected character `{other}`"),
                        ))
                    }
                }
            };
            out.push(Token { tok, span });
        }
    }

    fn follow(&mut self, next: char, yes: Tok, no: Tok) -> Tok {
        if self.peek() == Some(next) {
            self.bump();
            yes
        } else {
            no
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '/' && self.peek2() == Some('/') {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self, span: Span) -> Result<Tok, ParseError> {
        let start = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len());
        let mut end = start;
        let mut is_double = false;
        while let Some(c) = self.peek() {
            let take = if c.is_ascii_digit() {
                true
            } else if c == '.' && self.peek2() != Some('.') && !is_double {
                // `0..N` is a range, not a double.
                is_double = true;
                true
            } else if c == 'e' || c == 'E' {
                is_double = true;
                let (_, e) = self.bump().unwrap();
                end += e.len_utf8();
                if matches!(self.peek(), Some('+') | Some('-')) {
                    self.bump();
                    end += 1;
                }
                continue;
            } else {
                false
            };
            if !take {
                break;
            }
            self.bump();
            end += 1;
        }
        let text = &self.src[start..end];
        if is_double {
            text.parse::<f64>()
                .map(Tok::Double)
                .map_err(|_| ParseError::syntax(span, format!("malformed number `{text}`")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| ParseError::syntax(span, format!("integer literal `{text}` out of range")))
        }
    }

    fn string(&mut self, span: Span) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some((_, '"')) => return Ok(Tok::Str(s)),
                Some((_, '\n')) | None => {
                    return Err(ParseError::syntax(span, "unterminated string literal"))
                }
                Some((_, c)) => s.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn range_is_not_a_double() {
        assert_eq!(
            kinds("[0..N]"),
            vec![Tok::LBracket, Tok::Int(0), Tok::DotDot, Tok::Ident("N".into()), Tok::RBracket, Tok::Eof]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("1.0 0.01 1e-10 3"), vec![
            Tok::Double(1.0),
            Tok::Double(0.01),
            Tok::Double(1e-10),
            Tok::Int(3),
            Tok::Eof
        ]);
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// header\n  x' -> y").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x".into()));
        assert_eq!((toks[0].span.line, toks[0].span.col), (2, 3));
        assert_eq!(toks[1].tok, Tok::Prime);
        assert_eq!(toks[2].tok, Tok::Arrow);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x @ y").unwrap_err();
        assert!(err.to_string().contains("1:3"), "{err}");
    }
}
