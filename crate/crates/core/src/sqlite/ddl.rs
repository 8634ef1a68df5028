//! Minimal `CREATE TABLE` reader: column names, the rowid alias, and the
//! `WITHOUT ROWID` marker. Nothing else of SQL is interpreted.

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Quoted(String),
    Str,
    Open,
    Close,
    Comma,
    Other,
}

fn lex(sql: &str) -> Vec<Token> {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i += 2;
            }
            '"' | '`' | '[' | '\'' => {
                let close = if c == '[' { ']' } else { c };
                let mut text = String::new();
                i += 1;
                while i < chars.len() {
                    if chars[i] == close {
                        // Doubled quote is an escaped quote, except inside brackets.
                        if close != ']' && chars.get(i + 1) == Some(&close) {
                            text.push(close);
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    text.push(chars[i]);
                    i += 1;
                }
                i += 1;
                out.push(if c == '\'' { Token::Str } else { Token::Quoted(text) });
            }
            c if c.is_alphanumeric() || c == '_' || c == '$' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
                {
                    i += 1;
                }
                out.push(Token::Word(chars[start..i].iter().collect()));
            }
            _ => {
                out.push(Token::Other);
                i += 1;
            }
        }
    }
    out
}

fn is_kw(t: &Token, kw: &str) -> bool {
    matches!(t, Token::Word(w) if w.eq_ignore_ascii_case(kw))
}

const TABLE_CONSTRAINTS: [&str; 5] = ["CONSTRAINT", "PRIMARY", "UNIQUE", "CHECK", "FOREIGN"];
const COLUMN_CONSTRAINTS: [&str; 10] = [
    "CONSTRAINT", "PRIMARY", "NOT", "NULL", "UNIQUE", "CHECK", "DEFAULT", "COLLATE", "REFERENCES",
    "GENERATED",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableShape {
    pub columns: Vec<String>,
    pub rowid_alias: Option<usize>,
    pub without_rowid: bool,
}

pub fn table_shape(ddl: &str) -> TableShape {
    let tokens = lex(ddl);
    let Some(open) = tokens.iter().position(|t| *t == Token::Open) else {
        return TableShape::default();
    };
    let mut defs: Vec<Vec<Token>> = vec![Vec::new()];
    let mut depth = 0usize;
    let mut close = tokens.len();
    for (i, t) in tokens.iter().enumerate().skip(open + 1) {
        match t {
            Token::Open => depth += 1,
            Token::Close if depth == 0 => {
                close = i;
                break;
            }
            Token::Close => depth -= 1,
            Token::Comma if depth == 0 => {
                defs.push(Vec::new());
                continue;
            }
            _ => {}
        }
        defs.last_mut().unwrap().push(t.clone());
    }
    let tail = &tokens[close.min(tokens.len())..];
    let without_rowid = tail
        .windows(2)
        .any(|w| is_kw(&w[0], "WITHOUT") && is_kw(&w[1], "ROWID"));

    let mut shape = TableShape {
        without_rowid,
        ..Default::default()
    };
    let mut declared_types: Vec<String> = Vec::new();
    let mut table_pk: Option<Vec<String>> = None;
    for def in defs.iter().filter(|d| !d.is_empty()) {
        let first = &def[0];
        if TABLE_CONSTRAINTS.iter().any(|kw| is_kw(first, kw)) {
            if let Some(p) = def.iter().position(|t| is_kw(t, "PRIMARY")) {
                let cols = def[p..]
                    .iter()
                    .skip_while(|t| **t != Token::Open)
                    .skip(1)
                    .take_while(|t| **t != Token::Close)
                    .filter_map(|t| match t {
                        Token::Word(w) | Token::Quoted(w) => Some(w.clone()),
                        _ => None,
                    })
                    .filter(|w| !w.eq_ignore_ascii_case("ASC") && !w.eq_ignore_ascii_case("DESC"))
                    .collect();
                table_pk = Some(cols);
            }
            continue;
        }
        let name = match first {
            Token::Word(w) | Token::Quoted(w) => w.clone(),
            _ => continue,
        };
        let type_name: Vec<String> = def[1..]
            .iter()
            .take_while(|t| !COLUMN_CONSTRAINTS.iter().any(|kw| is_kw(t, kw)))
            .take_while(|t| matches!(t, Token::Word(_)))
            .map(|t| match t {
                Token::Word(w) => w.to_ascii_uppercase(),
                _ => unreachable!(),
            })
            .collect();
        let type_name = type_name.join(" ");
        let pk = def.windows(2).position(|w| is_kw(&w[0], "PRIMARY") && is_kw(&w[1], "KEY"));
        if let Some(p) = pk {
            let desc = def.get(p + 2).is_some_and(|t| is_kw(t, "DESC"));
            if type_name == "INTEGER" && !desc && shape.rowid_alias.is_none() {
                shape.rowid_alias = Some(shape.columns.len());
            }
        }
        declared_types.push(type_name);
        shape.columns.push(name);
    }
    if let Some(cols) = table_pk {
        if cols.len() == 1 {
            if let Some(i) = shape.columns.iter().position(|c| c.eq_ignore_ascii_case(&cols[0])) {
                if declared_types[i] == "INTEGER" {
                    shape.rowid_alias = Some(i);
                }
            }
        }
    }
    if shape.without_rowid {
        shape.rowid_alias = None;
    }
    shape
}
