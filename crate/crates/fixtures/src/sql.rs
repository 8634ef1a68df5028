//! SQL literal rendering for generated scripts.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Value::Null)
    }
}

pub fn literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Int(i) => i.to_string(),
        Value::Real(f) => format!("{f:?}"),
        Value::Text(s) => format!("'{}'", s.replace('\'', "''")),
        Value::Blob(b) => format!("X'{}'", hex::encode_upper(b)),
    }
}

/// Accumulates one store's DDL and DML inside a single transaction.
#[derive(Debug, Default)]
pub struct Script {
    text: String,
}

impl Script {
    pub fn new() -> Self {
        Script {
            text: "BEGIN;\n".into(),
        }
    }

    pub fn ddl(&mut self, stmt: &str) {
        self.text.push_str(stmt.trim());
        self.text.push_str(";\n");
    }

    pub fn insert(&mut self, table: &str, columns: &[&str], values: Vec<Value>) {
        assert_eq!(columns.len(), values.len(), "column count for {table}");
        let vals: Vec<String> = values.iter().map(literal).collect();
        let _ = writeln!(
            self.text,
            "INSERT INTO {table} ({}) VALUES ({});",
            columns.join(", "),
            vals.join(", ")
        );
    }

    pub fn finish(mut self) -> String {
        self.text.push_str("COMMIT;\n");
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(literal(&"it's".into()), "'it''s'");
        assert_eq!(literal(&Value::Blob(vec![0, 0xab])), "X'00AB'");
        assert_eq!(literal(&Value::Real(0.5)), "0.5");
        assert_eq!(literal(&Option::<i64>::None.into()), "NULL");
    }
}
