//! Structured warnings and applied assumptions collected while parsing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::UNMAPPED_ROW;
use crate::sqlite::DamageReport;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Warning {
    pub store_path: String,
    pub rowid: Option<i64>,
    /// Stable kebab-case code, e.g. `unmapped-column`.
    pub code: String,
    pub message: String,
}

/// A heuristic or configured interpretation that was actually applied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assumption {
    pub key: String,
    pub store_path: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notes {
    pub warnings: Vec<Warning>,
    pub assumptions: BTreeSet<Assumption>,
    /// Tables whose walk stopped at damaged pages.
    pub damage: Vec<StoreDamage>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StoreDamage {
    pub store_path: String,
    pub table: String,
    pub rows_recovered: usize,
    pub last_good_rowid: Option<i64>,
    pub error: String,
}

impl Notes {
    pub fn warn(
        &mut self,
        store_path: &str,
        rowid: Option<i64>,
        code: &str,
        message: impl Into<String>,
    ) {
        self.warnings.push(Warning {
            store_path: store_path.to_string(),
            rowid,
            code: code.to_string(),
            message: message.into(),
        });
    }

    pub fn assume(&mut self, key: &str, store_path: &str, detail: impl Into<String>) {
        self.assumptions.insert(Assumption {
            key: key.to_string(),
            store_path: store_path.to_string(),
            detail: detail.into(),
        });
    }

    pub fn damaged(&mut self, store_path: &str, report: DamageReport) {
        self.warn(
            store_path,
            None,
            "damaged-table",
            format!(
                "table {} unreadable after {} rows: {}",
                report.table, report.rows_recovered, report.error
            ),
        );
        self.damage.push(StoreDamage {
            store_path: store_path.to_string(),
            table: report.table,
            rows_recovered: report.rows_recovered,
            last_good_rowid: report.last_good_rowid,
            error: report.error,
        });
    }

    pub fn extend(&mut self, other: Notes) {
        self.warnings.extend(other.warnings);
        self.assumptions.extend(other.assumptions);
        self.damage.extend(other.damage);
    }

    /// Warnings ordered by (store, rowid, code, message) for stable output.
    pub fn sort(&mut self) {
        self.warnings.sort();
        self.warnings.dedup();
        self.damage.sort();
    }

    /// A row of `table` that produced no record.
    pub fn drop_row(&mut self, store_path: &str, table: &str, rowid: i64, why: impl AsRef<str>) {
        self.warn(store_path, Some(rowid), UNMAPPED_ROW, format!("{table}: {}", why.as_ref()));
    }

    /// Rows of `table` in `store_path` dropped through [`Notes::drop_row`].
    pub fn dropped_rows(&self, store_path: &str, table: &str) -> usize {
        let prefix = format!("{table}: ");
        self.warnings
            .iter()
            .filter(|w| {
                w.store_path == store_path && w.code == UNMAPPED_ROW && w.message.starts_with(&prefix)
            })
            .count()
    }
}
