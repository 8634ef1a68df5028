//! Table b-tree traversal with overflow reassembly.

use std::collections::{HashSet, VecDeque};

use super::record::decode_record;
use super::varint::read_varint;
use super::{Database, RecordRow, Result, SqliteError};

const LEAF_TABLE: u8 = 0x0d;
const INTERIOR_TABLE: u8 = 0x05;
const LEAF_INDEX: u8 = 0x0a;
const INTERIOR_INDEX: u8 = 0x02;

struct PageView<'p> {
    data: &'p [u8],
    header_at: usize,
    kind: u8,
    cell_count: usize,
    right_most: u32,
}

impl<'p> PageView<'p> {
    fn cell_offset(&self, pgno: u32, i: usize) -> Result<usize> {
        let hdr_len = if self.kind == LEAF_TABLE { 8 } else { 12 };
        let at = self.header_at + hdr_len + 2 * i;
        let off = self
            .data
            .get(at..at + 2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as usize)
            .ok_or_else(|| corrupt(pgno, "cell pointer array overruns page"))?;
        if off >= self.data.len() || off < self.header_at + hdr_len {
            return Err(corrupt(pgno, format!("cell pointer {off} outside page content")));
        }
        Ok(off)
    }
}

fn corrupt(page: u32, reason: impl Into<String>) -> SqliteError {
    SqliteError::CorruptPage {
        page,
        reason: reason.into(),
    }
}

impl<'a> Database<'a> {
    fn btree_page(&self, pgno: u32) -> Result<PageView<'a>> {
        if self.is_ptrmap_page(pgno) {
            return Err(SqliteError::UnsupportedFeature(format!(
                "page {pgno} is a pointer-map page"
            )));
        }
        let data = self.page(pgno)?;
        let header_at = if pgno == 1 { 100 } else { 0 };
        let hdr = &data[header_at..];
        let kind = hdr[0];
        match kind {
            LEAF_TABLE | INTERIOR_TABLE => {}
            LEAF_INDEX | INTERIOR_INDEX => {
                return Err(SqliteError::UnsupportedFeature(format!(
                    "page {pgno} belongs to an index b-tree"
                )))
            }
            other => return Err(corrupt(pgno, format!("bad page type byte 0x{other:02x}"))),
        }
        let cell_count = u16::from_be_bytes([hdr[3], hdr[4]]) as usize;
        let right_most = if kind == INTERIOR_TABLE {
            u32::from_be_bytes([hdr[8], hdr[9], hdr[10], hdr[11]])
        } else {
            0
        };
        let max_cells = (data.len() - header_at) / 2;
        if cell_count > max_cells {
            return Err(corrupt(pgno, format!("cell count {cell_count} cannot fit")));
        }
        Ok(PageView {
            data,
            header_at,
            kind,
            cell_count,
            right_most,
        })
    }

    /// Payload bytes stored on the leaf page itself for a payload of `total` bytes.
    fn local_payload_len(&self, total: usize) -> usize {
        let usable = self.header.usable_size();
        let max_local = usable - 35;
        if total <= max_local {
            return total;
        }
        let min_local = ((usable - 12) * 32 / 255) - 23;
        let k = min_local + (total - min_local) % (usable - 4);
        if k <= max_local {
            k
        } else {
            min_local
        }
    }

    fn read_leaf_cell(&self, pgno: u32, page: &PageView<'a>, offset: usize) -> Result<(i64, Vec<u8>)> {
        let data = page.data;
        let (payload_len, n1) = read_varint(data, offset)?;
        let (rowid, n2) = read_varint(data, offset + n1)?;
        let payload_len = usize::try_from(payload_len)
            .ok()
            .filter(|&p| p as u64 <= self.header.expected_len().max(self.bytes.len() as u64))
            .ok_or_else(|| corrupt(pgno, format!("implausible payload size {payload_len}")))?;
        let start = offset + n1 + n2;
        let local = self.local_payload_len(payload_len);
        let local_end = start + local;
        if local_end > data.len() {
            return Err(corrupt(pgno, "cell payload overruns page"));
        }
        let mut payload = Vec::with_capacity(payload_len);
        payload.extend_from_slice(&data[start..local_end]);
        if local < payload_len {
            let ptr_at = local_end;
            let mut next = data
                .get(ptr_at..ptr_at + 4)
                .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
                .ok_or_else(|| corrupt(pgno, "overflow pointer overruns page"))?;
            let mut seen = HashSet::new();
            let chunk = self.header.usable_size() - 4;
            while payload.len() < payload_len {
                if next == 0 {
                    return Err(corrupt(pgno, "overflow chain ends before payload is complete"));
                }
                if !seen.insert(next) {
                    return Err(SqliteError::CyclicOverflow { page: next });
                }
                let ov = self.page(next)?;
                let take = chunk.min(payload_len - payload.len());
                payload.extend_from_slice(&ov[4..4 + take]);
                next = u32::from_be_bytes([ov[0], ov[1], ov[2], ov[3]]);
            }
        }
        Ok((rowid as i64, payload))
    }
}

/// Depth-first, left-to-right walk over a table b-tree yielding rows in rowid
/// order. After the first error the iterator yields that error and stops, so
/// callers always see the rows preceding any damage.
pub struct TableWalk<'d, 'a> {
    db: &'d Database<'a>,
    stack: Vec<(u32, usize)>,
    visited: HashSet<u32>,
    pending: VecDeque<Result<RecordRow>>,
    last_rowid: Option<i64>,
    finished: bool,
}

impl<'d, 'a> TableWalk<'d, 'a> {
    pub(super) fn new(db: &'d Database<'a>, root_page: u32) -> Self {
        TableWalk {
            db,
            stack: vec![(root_page, 0)],
            visited: HashSet::new(),
            pending: VecDeque::new(),
            last_rowid: None,
            finished: false,
        }
    }

    fn fail(&mut self, err: SqliteError) {
        self.pending.push_back(Err(err));
        self.finished = true;
        self.stack.clear();
    }

    fn load_leaf(&mut self, pgno: u32, page: PageView<'a>) {
        for i in 0..page.cell_count {
            let row = page.cell_offset(pgno, i).and_then(|off| {
                let (rowid, payload) = self.db.read_leaf_cell(pgno, &page, off)?;
                let record = decode_record(&payload, self.db.header.text_encoding)?;
                Ok(RecordRow {
                    rowid,
                    cells: record.cells,
                    text_damaged: record.text_damaged,
                })
            });
            match row {
                Ok(row) => {
                    if self.last_rowid.is_some_and(|last| row.rowid <= last) {
                        self.fail(corrupt(pgno, format!("rowid {} out of order", row.rowid)));
                        return;
                    }
                    self.last_rowid = Some(row.rowid);
                    self.pending.push_back(Ok(row));
                }
                Err(e) => {
                    self.fail(e);
                    return;
                }
            }
        }
    }

    fn advance(&mut self) {
        while self.pending.is_empty() && !self.finished {
            let Some((pgno, idx)) = self.stack.pop() else {
                self.finished = true;
                return;
            };
            if idx == 0 && !self.visited.insert(pgno) {
                self.fail(corrupt(pgno, "page reached twice in b-tree"));
                return;
            }
            let page = match self.db.btree_page(pgno) {
                Ok(p) => p,
                Err(e) => {
                    self.fail(e);
                    return;
                }
            };
            if page.kind == LEAF_TABLE {
                self.load_leaf(pgno, page);
                continue;
            }
            let child = if idx < page.cell_count {
                match page.cell_offset(pgno, idx) {
                    Ok(off) => match page.data.get(off..off + 4) {
                        Some(b) => u32::from_be_bytes([b[0], b[1], b[2], b[3]]),
                        None => {
                            self.fail(corrupt(pgno, "child pointer overruns page"));
                            return;
                        }
                    },
                    Err(e) => {
                        self.fail(e);
                        return;
                    }
                }
            } else {
                page.right_most
            };
            if idx < page.cell_count {
                self.stack.push((pgno, idx + 1));
            }
            self.stack.push((child, 0));
        }
    }
}

impl Iterator for TableWalk<'_, '_> {
    type Item = Result<RecordRow>;

    fn next(&mut self) -> Option<Self::Item> {
        self.advance();
        self.pending.pop_front()
    }
}
