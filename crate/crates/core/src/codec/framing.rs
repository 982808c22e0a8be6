//! On-disk formats.
//!
//! Encoded streams store, for each frame, the P block followed by the D
//! block as one bit string packed most-significant-bit first and padded
//! with zeros to a whole byte. LLR files store the same bit order as
//! little-endian `f32` values, one frame after another.

use std::io::{self, Read, Write};

/// Packs bits MSB-first, zero-padding the last byte.
pub fn pack_msb(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (7 - i % 8);
    }
    out
}

/// Unpacks the first `n` bits of an MSB-first byte string.
pub fn unpack_msb(bytes: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect()
}

/// Bytes occupied by one packed frame of `bits` bits.
pub fn packed_frame_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

pub fn write_frame_bits<W: Write>(w: &mut W, p: &[u8], d: &[u8]) -> io::Result<()> {
    let mut all = Vec::with_capacity(p.len() + d.len());
    all.extend_from_slice(p);
    all.extend_from_slice(d);
    w.write_all(&pack_msb(&all))
}

/// Reads one packed frame, or `None` at a clean end of stream.
pub fn read_frame_bits<R: Read>(r: &mut R, p_len: usize, d_len: usize) -> io::Result<Option<(Vec<u8>, Vec<u8>)>> {
    let mut buf = vec![0u8; packed_frame_len(p_len + d_len)];
    if !read_full(r, &mut buf)? {
        return Ok(None);
    }
    let mut bits = unpack_msb(&buf, p_len + d_len);
    let d = bits.split_off(p_len);
    Ok(Some((bits, d)))
}

pub fn write_llrs<W: Write>(w: &mut W, llrs: &[f64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(4 * llrs.len());
    for &v in llrs {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

/// Reads `n` LLRs, or `None` at a clean end of stream.
pub fn read_llrs<R: Read>(r: &mut R, n: usize) -> io::Result<Option<Vec<f64>>> {
    let mut buf = vec![0u8; 4 * n];
    if !read_full(r, &mut buf)? {
        return Ok(None);
    }
    Ok(Some(
        buf.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    ))
}

// false on EOF before the first byte, error on a truncated record
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated frame")),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}
