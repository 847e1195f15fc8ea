use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Sym(char),
    /// `S1/Z2`, lexed as one token so the slash is not division.
    Orbifold,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Orbifold => "`S1/Z2`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const SYMBOLS: &str = "{}[](),;:=+-*/^";

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
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
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if src_starts_with(&chars, i, "S1/Z2") {
            out.push(Token { tok: Tok::Orbifold, line, col });
            i += 5;
            col += 5;
            continue;
        }
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                n = n
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(chars[i].to_digit(10).unwrap() as u64))
                    .ok_or_else(|| Diagnostic::new(start_line, start_col, "integer literal too large"))?;
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Int(n), line: start_line, col: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start_line, col: start_col });
            continue;
        }
        if SYMBOLS.contains(c) {
            out.push(Token { tok: Tok::Sym(c), line, col });
            i += 1;
            col += 1;
            continue;
        }
        return Err(Diagnostic::new(line, col, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn src_starts_with(chars: &[char], at: usize, pat: &str) -> bool {
    let p: Vec<char> = pat.chars().collect();
    chars.len() >= at + p.len() && chars[at..at + p.len()] == p[..]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = lex("dim 5; # five\n  metric(+,-)").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("dim".into()));
        assert_eq!((toks[3].line, toks[3].col), (2, 3));
    }

    #[test]
    fn orbifold_is_one_token() {
        let toks = lex("on S1/Z2 radius").unwrap();
        assert_eq!(toks[1].tok, Tok::Orbifold);
        assert_eq!(toks[2].tok, Tok::Ident("radius".into()));
    }

    #[test]
    fn bad_character() {
        let e = lex("a ? b").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }
}
