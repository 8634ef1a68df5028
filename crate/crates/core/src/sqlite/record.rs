use serde::{Deserialize, Serialize};

use super::header::TextEncoding;
use super::varint::read_varint;
use super::{Result, SqliteError};

/// One decoded column value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(#[serde(with = "hex_bytes")] Vec<u8>),
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

impl CellValue {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            CellValue::Integer(v) => Some(*v),
            CellValue::Real(f) if f.fract() == 0.0 => Some(*f as i64),
            CellValue::Text(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    /// Text view of the cell; integers are rendered in decimal.
    pub fn as_text(&self) -> Option<String> {
        match self {
            CellValue::Text(s) => Some(s.clone()),
            CellValue::Integer(v) => Some(v.to_string()),
            CellValue::Blob(b) => std::str::from_utf8(b).ok().map(str::to_string),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    /// Bit-exact equality, so NaN payloads and signed zeros compare faithfully.
    pub fn same_as(&self, other: &CellValue) -> bool {
        match (self, other) {
            (CellValue::Real(a), CellValue::Real(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }
}

/// Result of decoding one record body.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedRecord {
    pub cells: Vec<CellValue>,
    /// Set when a text cell held bytes invalid for the database encoding.
    pub text_damaged: bool,
}

/// Bytes occupied by the body of a cell with the given serial type.
pub fn serial_type_len(serial: u64) -> Result<usize> {
    Ok(match serial {
        0 | 8 | 9 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4 => 4,
        5 => 6,
        6 | 7 => 8,
        10 | 11 => return Err(SqliteError::SerialTypeReserved(serial)),
        n => ((n - 12) / 2) as usize,
    })
}

fn be_int(bytes: &[u8]) -> i64 {
    let mut v: i64 = if bytes.first().is_some_and(|b| b & 0x80 != 0) { -1 } else { 0 };
    for &b in bytes {
        v = (v << 8) | b as i64;
    }
    v
}

fn decode_text(bytes: &[u8], encoding: TextEncoding) -> (String, bool) {
    match encoding {
        TextEncoding::Utf8 => match std::str::from_utf8(bytes) {
            Ok(s) => (s.to_string(), false),
            Err(_) => (String::from_utf8_lossy(bytes).into_owned(), true),
        },
        TextEncoding::Utf16Le | TextEncoding::Utf16Be => {
            let odd = bytes.len() % 2 != 0;
            let units = bytes.chunks_exact(2).map(|c| match encoding {
                TextEncoding::Utf16Le => u16::from_le_bytes([c[0], c[1]]),
                _ => u16::from_be_bytes([c[0], c[1]]),
            });
            let mut damaged = odd;
            let s = char::decode_utf16(units)
                .map(|r| {
                    r.unwrap_or_else(|_| {
                        damaged = true;
                        char::REPLACEMENT_CHARACTER
                    })
                })
                .collect();
            (s, damaged)
        }
    }
}

/// Decode a complete record: header-size varint, serial types, then bodies.
pub fn decode_record(payload: &[u8], encoding: TextEncoding) -> Result<DecodedRecord> {
    let (header_len, mut pos) = read_varint(payload, 0)?;
    let header_len = header_len as usize;
    if header_len > payload.len() || header_len < pos {
        return Err(SqliteError::RecordOverrun {
            declared: header_len,
            available: payload.len(),
        });
    }
    let mut serials = Vec::new();
    while pos < header_len {
        let (serial, n) = read_varint(&payload[..header_len], pos)?;
        serial_type_len(serial)?;
        serials.push(serial);
        pos += n;
    }
    let mut body = header_len;
    let mut cells = Vec::with_capacity(serials.len());
    let mut text_damaged = false;
    for serial in serials {
        let len = serial_type_len(serial)?;
        let end = body + len;
        if end > payload.len() {
            return Err(SqliteError::RecordOverrun {
                declared: end,
                available: payload.len(),
            });
        }
        let raw = &payload[body..end];
        cells.push(match serial {
            0 => CellValue::Null,
            1..=6 => CellValue::Integer(be_int(raw)),
            7 => CellValue::Real(f64::from_bits(u64::from_be_bytes(raw.try_into().unwrap()))),
            8 => CellValue::Integer(0),
            9 => CellValue::Integer(1),
            n if n % 2 == 0 => CellValue::Blob(raw.to_vec()),
            _ => {
                let (s, bad) = decode_text(raw, encoding);
                text_damaged |= bad;
                CellValue::Text(s)
            }
        });
        body = end;
    }
    Ok(DecodedRecord {
        cells,
        text_damaged,
    })
}
