use std::cell::Cell;

use thiserror::Error;

use super::{is_name_char, is_name_start, is_reserved, FeatureName, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("reserved word `{word}` used as a feature name at byte {offset}")]
    ReservedWord { offset: usize, word: String },
    #[error("invalid feature name `{0}`")]
    InvalidFeatureName(String),
    #[error("constraint mentions undeclared features: {}", join(.0))]
    UndeclaredFeatures(Vec<FeatureName>),
}

fn join(names: &[FeatureName]) -> String {
    names
        .iter()
        .map(FeatureName::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

thread_local! {
    static PARSES: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`parse_formula`] calls made on the current thread.
pub fn parse_count() -> u64 {
    PARSES.with(Cell::get)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Ident(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c == '#' {
                match self.src[self.pos..].find('\n') {
                    Some(n) => self.pos += n,
                    None => self.pos = self.src.len(),
                }
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>, FormulaError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok(None);
        };
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if self.src[start..].starts_with("->") => {
                self.pos += 2;
                return Ok(Some((start, Tok::Arrow)));
            }
            c if is_name_start(c) => {
                let rest = &self.src[start..];
                let mut end = 0;
                for (i, ch) in rest.char_indices() {
                    // `a->b` lexes as `a`, `->`, `b`
                    if !is_name_char(ch) || rest[i..].starts_with("->") {
                        break;
                    }
                    end = i + ch.len_utf8();
                }
                self.pos += end;
                return Ok(Some((start, Tok::Ident(rest[..end].to_string()))));
            }
            other => {
                return Err(FormulaError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        self.pos += 1;
        Ok(Some((start, tok)))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.at).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let inner = self.implication()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                self.at += 1;
                Ok(inner)
            }
            Some(Tok::Ident(word)) => {
                self.at += 1;
                match word.as_str() {
                    "true" => Ok(Formula::Const(true)),
                    "false" => Ok(Formula::Const(false)),
                    w if is_reserved(w) => Err(FormulaError::ReservedWord {
                        offset,
                        word: word.clone(),
                    }),
                    _ => Ok(Formula::Var(FeatureName::new(word)?)),
                }
            }
            Some(t) => self.error(format!("unexpected token {t:?}")),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parses the concrete formula syntax.
///
/// Precedence from tightest: `!`, `&`, `|`, `->`. `&` and `|` associate to
/// the left, `->` to the right. `#` starts a comment running to end of line.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    PARSES.with(|c| c.set(c.get() + 1));
    let mut lexer = Lexer { src: text, pos: 0 };
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut parser = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let f = parser.implication()?;
    if parser.at != parser.toks.len() {
        return parser.error("trailing input");
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Formula {
        Formula::Var(FeatureName::new(name).unwrap())
    }

    #[test]
    fn parses_glibc_constraint() {
        let f = parse_formula("glibc -> ((glibc:doc -> txinfo) & (glibc:v -> !tzdata))").unwrap();
        let expected = Formula::implies(
            v("glibc"),
            Formula::and(
                Formula::implies(v("glibc:doc"), v("txinfo")),
                Formula::implies(v("glibc:v"), Formula::not(v("tzdata"))),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn constants_and_associativity() {
        assert_eq!(parse_formula("true").unwrap(), Formula::Const(true));
        assert_eq!(parse_formula(" false ").unwrap(), Formula::Const(false));
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(v("a"), Formula::implies(v("b"), v("c")))
        );
        assert_eq!(
            parse_formula("a | b | c").unwrap(),
            Formula::or(Formula::or(v("a"), v("b")), v("c"))
        );
        assert_eq!(
            parse_formula("!a & b | c -> d").unwrap(),
            Formula::implies(
                Formula::or(Formula::and(Formula::not(v("a")), v("b")), v("c")),
                v("d")
            )
        );
    }

    #[test]
    fn dashes_and_arrows() {
        assert_eq!(
            parse_formula("g-shell->g-shell:nm").unwrap(),
            Formula::implies(v("g-shell"), v("g-shell:nm"))
        );
        assert_eq!(
            parse_formula("sys-libs/timezone-data").unwrap(),
            v("sys-libs/timezone-data")
        );
    }

    #[test]
    fn comments() {
        let f = parse_formula("a # first\n & b # second").unwrap();
        assert_eq!(f, Formula::and(v("a"), v("b")));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_formula("a & ").unwrap_err(),
            FormulaError::Syntax {
                offset: 4,
                message: "unexpected end of input".into()
            }
        );
        assert!(matches!(
            parse_formula("(a | b"),
            Err(FormulaError::Syntax { offset: 6, .. })
        ));
        assert!(matches!(
            parse_formula("a b"),
            Err(FormulaError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("a $ b"),
            Err(FormulaError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_formula("x & and"),
            Err(FormulaError::ReservedWord { offset: 4, .. })
        ));
        assert!(matches!(
            parse_formula(""),
            Err(FormulaError::Syntax { offset: 0, .. })
        ));
    }

    #[test]
    fn counts_parses() {
        let before = parse_count();
        parse_formula("a").unwrap();
        let _ = parse_formula("(");
        assert_eq!(parse_count(), before + 2);
    }
}
