//! The reader checked against the bundled reference engine.

use imtriage_core::sqlite::{
    parse_header, read_varint, CellValue, Database, SqliteError, TextEncoding,
};
use rusqlite::{types::ValueRef, Connection};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn build(setup: &str) -> Vec<u8> {
    build_with(|c| c.execute_batch(setup).unwrap())
}

fn build_with(f: impl FnOnce(&Connection)) -> Vec<u8> {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.db");
    {
        let conn = Connection::open(&path).unwrap();
        f(&conn);
    }
    std::fs::read(path).unwrap()
}

type Dump = Vec<(String, Vec<(i64, Vec<CellValue>)>)>;

fn engine_dump(bytes: &[u8]) -> Dump {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("copy.db");
    std::fs::write(&path, bytes).unwrap();
    let conn = Connection::open(&path).unwrap();
    let mut names: Vec<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name")
        .unwrap()
        .query_map([], |r| r.get(0))
        .unwrap()
        .map(Result::unwrap)
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let mut stmt = conn
                .prepare(&format!("SELECT rowid, * FROM \"{name}\" ORDER BY rowid"))
                .unwrap();
            let n = stmt.column_count();
            let rows = stmt
                .query_map([], |r| {
                    let rowid: i64 = r.get(0)?;
                    let cells = (1..n)
                        .map(|i| match r.get_ref(i).unwrap() {
                            ValueRef::Null => CellValue::Null,
                            ValueRef::Integer(v) => CellValue::Integer(v),
                            ValueRef::Real(v) => CellValue::Real(v),
                            ValueRef::Text(t) => CellValue::Text(String::from_utf8(t.to_vec()).unwrap()),
                            ValueRef::Blob(b) => CellValue::Blob(b.to_vec()),
                        })
                        .collect();
                    Ok((rowid, cells))
                })
                .unwrap()
                .map(Result::unwrap)
                .collect();
            (name, rows)
        })
        .collect()
}

fn reader_dump(bytes: &[u8]) -> Dump {
    let db = Database::open(bytes).unwrap();
    db.list_tables()
        .unwrap()
        .into_iter()
        .map(|t| {
            let scan = db.scan_table(&t).unwrap();
            assert!(scan.damage.is_none(), "damage in {}: {:?}", t.name, scan.damage);
            let rows = scan
                .rows
                .iter()
                .map(|r| (r.rowid, (0..t.columns.len()).map(|i| t.cell(r, i)).collect()))
                .collect();
            (t.name, rows)
        })
        .collect()
}

fn assert_same(a: &Dump, b: &Dump) {
    assert_eq!(a.len(), b.len());
    for ((ta, ra), (tb, rb)) in a.iter().zip(b) {
        assert_eq!(ta, tb);
        assert_eq!(ra.len(), rb.len(), "row count in {ta}");
        for ((ida, ca), (idb, cb)) in ra.iter().zip(rb) {
            assert_eq!(ida, idb);
            assert_eq!(ca.len(), cb.len());
            for (x, y) in ca.iter().zip(cb) {
                assert!(x.same_as(y), "{ta} rowid {ida}: {x:?} != {y:?}");
            }
        }
    }
}

#[test]
fn default_header() {
    let bytes = build("CREATE TABLE t (a); INSERT INTO t VALUES (1);");
    let h = parse_header(&bytes).unwrap();
    assert_eq!(h.page_size, 4096);
    assert_eq!(h.text_encoding, TextEncoding::Utf8);
    assert_eq!(h.page_count as usize * 4096, bytes.len());
}

#[test]
fn page_size_field_one_is_64k() {
    let bytes = build("PRAGMA page_size = 65536; CREATE TABLE t (a); INSERT INTO t VALUES ('x');");
    assert_eq!(u16::from_be_bytes([bytes[16], bytes[17]]), 1);
    assert_eq!(parse_header(&bytes).unwrap().page_size, 65536);
    assert_same(&reader_dump(&bytes), &engine_dump(&bytes));
}

#[test]
fn rowid_varints_match_engine_layout() {
    let bytes = build(
        "PRAGMA page_size = 512; CREATE TABLE t (v); \
         INSERT INTO t (rowid, v) VALUES (127, 1); INSERT INTO t (rowid, v) VALUES (128, 42);",
    );
    let db = Database::open(&bytes).unwrap();
    let root = db.table("t").unwrap().root_page as usize;
    let page = &bytes[(root - 1) * 512..root * 512];
    assert_eq!(page[0], 0x0d);
    let cell_at = |i: usize| u16::from_be_bytes([page[8 + 2 * i], page[9 + 2 * i]]) as usize;
    // cell = payload-length varint, rowid varint, record
    let (_, n) = read_varint(page, cell_at(0)).unwrap();
    assert_eq!(&page[cell_at(0) + n..cell_at(0) + n + 1], &[0x7f]);
    assert_eq!(read_varint(page, cell_at(0) + n).unwrap(), (127, 1));
    let (_, n) = read_varint(page, cell_at(1)).unwrap();
    assert_eq!(&page[cell_at(1) + n..cell_at(1) + n + 2], &[0x81, 0x00]);
    assert_eq!(read_varint(page, cell_at(1) + n).unwrap(), (128, 2));
    // record for 42: header [0x02, 0x01], body [0x2a]
    let rec_at = cell_at(1) + n + 2;
    assert_eq!(&page[rec_at..rec_at + 3], &[0x02, 0x01, 0x2a]);
}

#[test]
fn text_serial_type_seventeen() {
    let bytes = build("PRAGMA page_size = 512; CREATE TABLE t (v); INSERT INTO t VALUES ('hi');");
    let db = Database::open(&bytes).unwrap();
    let root = db.table("t").unwrap().root_page as usize;
    let page = &bytes[(root - 1) * 512..root * 512];
    let cell = u16::from_be_bytes([page[8], page[9]]) as usize;
    assert_eq!(&page[cell + 2..cell + 6], &[0x02, 17, b'h', b'i']);
    let rows: Vec<_> = db.walk_table(root as u32).map(Result::unwrap).collect();
    assert_eq!(rows[0].cells, vec![CellValue::Text("hi".into())]);
}

#[test]
fn empty_database_and_empty_table() {
    let empty = build_with(|c| {
        c.execute_batch("PRAGMA user_version = 1;").unwrap();
    });
    let db = Database::open(&empty).unwrap();
    assert!(db.list_tables().unwrap().is_empty());

    let bytes = build("CREATE TABLE t (a, b);");
    let db = Database::open(&bytes).unwrap();
    let t = db.table("t").unwrap();
    assert_eq!(db.walk_table(t.root_page).count(), 0);
}

#[test]
fn whatsapp_like_tables_listed_by_name() {
    let bytes = build(
        "CREATE TABLE messages (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT, data TEXT);
         CREATE TABLE chat_list (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT UNIQUE);
         CREATE INDEX m_idx ON messages (key_remote_jid);
         INSERT INTO messages (key_remote_jid, data) VALUES ('x', 'y');",
    );
    let db = Database::open(&bytes).unwrap();
    let names: Vec<_> = db.list_tables().unwrap().into_iter().map(|t| t.name).collect();
    assert_eq!(names, ["chat_list", "messages", "sqlite_sequence"]);
    let m = db.table("messages").unwrap();
    assert_eq!(m.rowid_alias, Some(0));
    let scan = db.scan_table(&m).unwrap();
    assert_eq!(m.cell(&scan.rows[0], 0), CellValue::Integer(1));
    assert_eq!(scan.rows[0].cells[0], CellValue::Null);
}

#[test]
fn ten_thousand_rows_multi_level() {
    let bytes = build_with(|c| {
        c.execute_batch("PRAGMA page_size = 1024; CREATE TABLE t (a INTEGER, b TEXT);")
            .unwrap();
        let tx = c.unchecked_transaction().unwrap();
        {
            let mut st = tx.prepare("INSERT INTO t VALUES (?1, ?2)").unwrap();
            for i in 1..=10_000i64 {
                st.execute(rusqlite::params![i * 7, format!("row-{i:05}-padding-text")])
                    .unwrap();
            }
        }
        tx.commit().unwrap();
    });
    let db = Database::open(&bytes).unwrap();
    let t = db.table("t").unwrap();
    // depth > 2: root page must point at interior pages
    let root = t.root_page as usize;
    assert_eq!(bytes[(root - 1) * 1024], 0x05);
    let child = u32::from_be_bytes(bytes[(root - 1) * 1024 + 8..(root - 1) * 1024 + 12].try_into().unwrap());
    assert_eq!(bytes[(child as usize - 1) * 1024], 0x05, "expected a second interior level");
    let rowids: Vec<i64> = db.walk_table(t.root_page).map(|r| r.unwrap().rowid).collect();
    assert_eq!(rowids, (1..=10_000).collect::<Vec<_>>());
    assert_same(&reader_dump(&bytes), &engine_dump(&bytes));
}

#[test]
fn overflow_blob_reassembled() {
    let blob: Vec<u8> = (0..100 * 1024u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
    let expected = Sha256::digest(&blob);
    let bytes = build_with(|c| {
        c.execute_batch("PRAGMA page_size = 1024; CREATE TABLE b (id INTEGER PRIMARY KEY, data BLOB);")
            .unwrap();
        c.execute("INSERT INTO b (data) VALUES (?1)", [&blob]).unwrap();
    });
    let db = Database::open(&bytes).unwrap();
    let t = db.table("b").unwrap();
    let rows: Vec<_> = db.walk_table(t.root_page).map(Result::unwrap).collect();
    let CellValue::Blob(got) = &rows[0].cells[1] else { panic!("not a blob") };
    assert_eq!(Sha256::digest(got), expected);
}

#[test]
fn utf16_databases() {
    for enc in ["UTF-16le", "UTF-16be"] {
        let bytes = build(&format!(
            "PRAGMA encoding = '{enc}'; CREATE TABLE t (a TEXT, b); \
             INSERT INTO t VALUES ('héllo wörld ☃', 1), ('𝄞 clef', x'00ff'), (NULL, 2.5);"
        ));
        let db = Database::open(&bytes).unwrap();
        let want = if enc == "UTF-16le" { TextEncoding::Utf16Le } else { TextEncoding::Utf16Be };
        assert_eq!(db.header().text_encoding, want);
        assert_same(&reader_dump(&bytes), &engine_dump(&bytes));
    }
}

#[test]
fn columns_added_later_read_as_null() {
    let bytes = build(
        "CREATE TABLE t (a); INSERT INTO t VALUES (1); ALTER TABLE t ADD COLUMN b TEXT; \
         INSERT INTO t VALUES (2, 'x');",
    );
    assert_same(&reader_dump(&bytes), &engine_dump(&bytes));
}

#[test]
fn truncation_yields_prefix_rows_and_damage() {
    let bytes = build_with(|c| {
        c.execute_batch("PRAGMA page_size = 512; CREATE TABLE t (a TEXT);").unwrap();
        let tx = c.unchecked_transaction().unwrap();
        for i in 0..400 {
            tx.execute("INSERT INTO t VALUES (?1)", [format!("message number {i:04}")])
                .unwrap();
        }
        tx.commit().unwrap();
    });
    let cut = &bytes[..bytes.len() / 2];
    assert!(matches!(parse_header(cut), Err(SqliteError::TruncatedFile { .. })));
    let db = Database::open(cut).unwrap();
    assert!(db.truncation().is_some());
    let t = db.table("t").unwrap();
    let scan = db.scan_table(&t).unwrap();
    let damage = scan.damage.expect("damage report");
    assert!(scan.rows.len() < 400);
    assert_eq!(damage.rows_recovered, scan.rows.len());
    for (i, r) in scan.rows.iter().enumerate() {
        assert_eq!(r.rowid, i as i64 + 1);
    }
}

#[test]
fn without_rowid_and_index_pages_are_unsupported() {
    let bytes = build(
        "CREATE TABLE w (k TEXT PRIMARY KEY, v) WITHOUT ROWID; INSERT INTO w VALUES ('a', 1);
         CREATE TABLE t (a); CREATE INDEX ti ON t (a); INSERT INTO t VALUES (1);",
    );
    let db = Database::open(&bytes).unwrap();
    let w = db.table("w").unwrap();
    assert!(w.without_rowid);
    assert!(matches!(db.scan_table(&w), Err(SqliteError::UnsupportedFeature(_))));
    // Walking the index's root page as if it were a table.
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("x.db");
    std::fs::write(&p, &bytes).unwrap();
    let idx_root: u32 = Connection::open(&p)
        .unwrap()
        .query_row("SELECT rootpage FROM sqlite_master WHERE name = 'ti'", [], |r| r.get(0))
        .unwrap();
    assert!(matches!(
        db.walk_table(idx_root).next(),
        Some(Err(SqliteError::UnsupportedFeature(_)))
    ));
}

#[test]
fn cyclic_overflow_detected() {
    let blob = vec![7u8; 3000];
    let mut bytes = build_with(|c| {
        c.execute_batch("PRAGMA page_size = 512; CREATE TABLE b (data BLOB);").unwrap();
        c.execute("INSERT INTO b VALUES (?1)", [&blob]).unwrap();
    });
    let (root, pages) = {
        let db = Database::open(&bytes).unwrap();
        (db.table("b").unwrap().root_page as usize, db.header().page_count as usize)
    };
    // Point the second overflow page back at the first one. Every page after
    // the table root is an overflow page here.
    let next_of = |b: &[u8], p: usize| u32::from_be_bytes(b[(p - 1) * 512..(p - 1) * 512 + 4].try_into().unwrap());
    let overflow: Vec<usize> = (root + 1..=pages).collect();
    let targets: Vec<u32> = overflow.iter().map(|&p| next_of(&bytes, p)).collect();
    let first = *overflow.iter().find(|&&p| !targets.contains(&(p as u32))).unwrap() as u32;
    let second = next_of(&bytes, first as usize) as usize;
    assert!(second > 0);
    bytes[(second - 1) * 512..(second - 1) * 512 + 4].copy_from_slice(&first.to_be_bytes());
    let db = Database::open(&bytes).unwrap();
    let t = db.table("b").unwrap();
    let err = db.walk_table(t.root_page).next().unwrap().unwrap_err();
    assert_eq!(err, SqliteError::CyclicOverflow { page: first });
}

#[test]
fn reader_never_mutates_input() {
    let bytes = build("CREATE TABLE t (a, b); INSERT INTO t VALUES (1, 'x'), (2, x'0102');");
    let before = Sha256::digest(&bytes);
    let _ = reader_dump(&bytes);
    assert_eq!(Sha256::digest(&bytes), before);
}

#[test]
fn decoy_bytes_rejected() {
    let mut gif = b"GIF89a".to_vec();
    gif.resize(4096, 0);
    assert!(matches!(Database::open(&gif), Err(SqliteError::MagicMismatch)));
}
