use super::{Result, SqliteError};

/// Decode an SQLite varint at `offset`, returning `(value, encoded_len)`.
///
/// Big-endian base-128: the first eight bytes contribute seven bits each while
/// their high bit is set, and a ninth byte contributes all eight bits.
pub fn read_varint(bytes: &[u8], offset: usize) -> Result<(u64, usize)> {
    let mut value = 0u64;
    for i in 0..9 {
        let Some(&b) = bytes.get(offset + i) else {
            return Err(SqliteError::TruncatedVarint { offset });
        };
        if i == 8 {
            return Ok(((value << 8) | b as u64, 9));
        }
        value = (value << 7) | (b & 0x7f) as u64;
        if b & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    unreachable!("loop returns by the ninth byte")
}

/// Encode `value` as an SQLite varint.
pub fn write_varint(value: u64) -> Vec<u8> {
    if value > 0x00ff_ffff_ffff_ffff {
        let mut out = Vec::with_capacity(9);
        let high = value >> 8;
        for i in (0..8).rev() {
            out.push(((high >> (7 * i)) & 0x7f) as u8 | 0x80);
        }
        out.push(value as u8);
        return out;
    }
    let mut groups = Vec::with_capacity(8);
    let mut v = value;
    loop {
        groups.push((v & 0x7f) as u8);
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    let n = groups.len();
    groups
        .into_iter()
        .rev()
        .enumerate()
        .map(|(i, g)| if i + 1 < n { g | 0x80 } else { g })
        .collect()
}
