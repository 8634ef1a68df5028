use serde::{Deserialize, Serialize};

use super::{Result, SqliteError};

pub const MAGIC: &[u8; 16] = b"SQLite format 3\0";
pub const HEADER_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TextEncoding {
    #[serde(rename = "UTF-8")]
    Utf8,
    #[serde(rename = "UTF-16le")]
    Utf16Le,
    #[serde(rename = "UTF-16be")]
    Utf16Be,
}

/// The fixed 100-byte database header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbHeader {
    pub page_size: u32,
    pub page_count: u32,
    pub text_encoding: TextEncoding,
    pub schema_format: u32,
    pub reserved_per_page: u8,
    pub change_counter: u32,
    /// Non-zero when auto-vacuum (and therefore pointer-map pages) is enabled.
    pub largest_root_page: u32,
}

fn be_u16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn be_u32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Check the magic string and page size of a header prefix.
pub fn sniff(prefix: &[u8]) -> Result<()> {
    if prefix.len() < MAGIC.len() || &prefix[..MAGIC.len()] != MAGIC {
        return Err(SqliteError::MagicMismatch);
    }
    if prefix.len() < HEADER_LEN {
        return Err(SqliteError::TooShort(prefix.len()));
    }
    page_size_of(prefix).map(|_| ())
}

fn page_size_of(bytes: &[u8]) -> Result<u32> {
    let raw = be_u16(bytes, 16);
    let size = if raw == 1 { 65536 } else { raw as u32 };
    if !(512..=65536).contains(&size) || !size.is_power_of_two() {
        return Err(SqliteError::BadPageSize(raw as u32));
    }
    Ok(size)
}

impl DbHeader {
    /// Decode the header from a whole database image.
    ///
    /// The in-header page count is trusted only when the version-valid-for
    /// field matches the change counter; otherwise it is derived from the
    /// image length, as the format prescribes for legacy writers.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        sniff(bytes)?;
        let page_size = page_size_of(bytes)?;
        let reserved_per_page = bytes[20];
        if page_size - (reserved_per_page as u32) < 480 {
            return Err(SqliteError::BadPageSize(page_size));
        }
        let change_counter = be_u32(bytes, 24);
        let in_header_pages = be_u32(bytes, 28);
        let version_valid_for = be_u32(bytes, 92);
        let page_count = if in_header_pages != 0 && version_valid_for == change_counter {
            in_header_pages
        } else {
            (bytes.len() as u64 / page_size as u64) as u32
        };
        if page_count == 0 {
            return Err(SqliteError::TooShort(bytes.len()));
        }
        let text_encoding = match be_u32(bytes, 56) {
            0 | 1 => TextEncoding::Utf8,
            2 => TextEncoding::Utf16Le,
            3 => TextEncoding::Utf16Be,
            other => return Err(SqliteError::BadEncoding(other)),
        };
        Ok(DbHeader {
            page_size,
            page_count,
            text_encoding,
            schema_format: be_u32(bytes, 44),
            reserved_per_page,
            change_counter,
            largest_root_page: be_u32(bytes, 52),
        })
    }

    pub fn usable_size(&self) -> usize {
        self.page_size as usize - self.reserved_per_page as usize
    }

    /// Bytes the header says the file should hold.
    pub fn expected_len(&self) -> u64 {
        self.page_size as u64 * self.page_count as u64
    }
}

/// Decode and validate a header against the full image length.
pub fn parse_header(bytes: &[u8]) -> Result<DbHeader> {
    let header = DbHeader::decode(bytes)?;
    if header.expected_len() > bytes.len() as u64 {
        return Err(SqliteError::TruncatedFile {
            expected: header.expected_len(),
            actual: bytes.len() as u64,
        });
    }
    Ok(header)
}
