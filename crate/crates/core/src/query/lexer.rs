use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare word; keywords are recognized by the parser, case-insensitively.
    Word(String),
    /// Backquoted identifier, never a keyword.
    Quoted(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Semicolon,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Character offset of the token's first character.
    pub pos: usize,
}

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "as", "and", "or", "not", "in", "is", "null",
    "asc", "desc", "distinct",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

pub fn tokenize(sql: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = |t: Tok| Token { tok: t, pos: start };
        match c {
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            ',' => out.push(single(Tok::Comma)),
            '*' => out.push(single(Tok::Star)),
            '+' => out.push(single(Tok::Plus)),
            '-' => out.push(single(Tok::Minus)),
            '/' => out.push(single(Tok::Slash)),
            '%' => out.push(single(Tok::Percent)),
            ';' => out.push(single(Tok::Semicolon)),
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    i += 1;
                }
                out.push(single(Tok::Eq))
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                out.push(single(Tok::Neq))
            }
            '<' => match chars.get(i + 1) {
                Some('=') => {
                    i += 1;
                    out.push(single(Tok::Le))
                }
                Some('>') => {
                    i += 1;
                    out.push(single(Tok::Neq))
                }
                _ => out.push(single(Tok::Lt)),
            },
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    i += 1;
                    out.push(single(Tok::Ge))
                } else {
                    out.push(single(Tok::Gt))
                }
            }
            '\'' | '"' | '`' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(Error::syntax(start, "unterminated quoted text")),
                        Some(&ch) if ch == quote => {
                            if chars.get(i + 1) == Some(&quote) {
                                s.push(quote);
                                i += 2;
                            } else {
                                break;
                            }
                        }
                        Some('\\') if quote != '`' && chars.get(i + 1).is_some() => {
                            let esc = chars[i + 1];
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                let tok = if quote == '`' { Tok::Quoted(s) } else { Tok::Str(s) };
                out.push(Token { tok, pos: start });
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i;
                let mut float = false;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    float = true;
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        float = true;
                        j = k;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text: String = chars[i..j].iter().collect();
                let tok = if float {
                    Tok::Float(
                        text.parse()
                            .map_err(|_| Error::syntax(start, format!("bad number `{text}`")))?,
                    )
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => Tok::Float(
                            text.parse()
                                .map_err(|_| Error::syntax(start, format!("bad number `{text}`")))?,
                        ),
                    }
                };
                out.push(Token { tok, pos: start });
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '.') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[i..j].iter().collect()),
                    pos: start,
                });
                i = j;
                continue;
            }
            other => return Err(Error::syntax(start, format!("unexpected character `{other}`"))),
        }
        i += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: chars.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_strings_and_operators() {
        assert_eq!(
            toks("a<=1.5 <> 'x''y' \"z\" `weird name` -- comment\n!= 7"),
            vec![
                Tok::Word("a".into()),
                Tok::Le,
                Tok::Float(1.5),
                Tok::Neq,
                Tok::Str("x'y".into()),
                Tok::Str("z".into()),
                Tok::Quoted("weird name".into()),
                Tok::Neq,
                Tok::Int(7),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_character_offsets() {
        let t = tokenize("SELECT  x").unwrap();
        assert_eq!(t[1].pos, 8);
        let err = tokenize("SELECT 'oops").unwrap_err();
        assert_eq!(err.position(), Some(7));
        assert_eq!(tokenize("a # b").unwrap_err().position(), Some(2));
    }
}
