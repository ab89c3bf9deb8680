//! On-disk norm tables.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "SLNT" | version u32 | dim u8 | aspects | cutoff f64 | exact u8 | count u64
//! | norms (varint deltas of keys, or varint deltas of f64 bit patterns)
//! | multiplicities (varint) | sha256 of everything above
//! ```
//!
//! Float norms are positive and sorted, so their bit patterns are sorted too and
//! delta-encode as well as integer keys.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Aspect, LatticeError, NormTable, TorusSpec};
use crate::util::fmt17;

const MAGIC: &[u8; 4] = b"SLNT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn save_table(table: &NormTable, path: &Path) -> Result<(), LatticeError> {
    let bytes = encode(table);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<NormTable, LatticeError> {
    decode(&fs::read(path)?)
}

/// Writes `norm,multiplicity` rows. Norms of tables over a rational `a²` are
/// written as exact fractions `p/q`, all others with 17 significant digits.
pub fn export_csv<W: Write>(table: &NormTable, mut out: W) -> Result<(), LatticeError> {
    writeln!(out, "norm,multiplicity")?;
    let form = table.exact_form().filter(|f| f.a2_rational.is_some());
    for e in table.entries() {
        let norm = match (&form, e.key) {
            (Some(form), Some(key)) => {
                let (p, q) = form.norm_fraction(key).expect("rational aspect");
                if q == 1 {
                    p.to_string()
                } else {
                    format!("{p}/{q}")
                }
            }
            _ => fmt17(e.norm),
        };
        writeln!(out, "{norm},{}", e.multiplicity)?;
    }
    Ok(())
}

pub(crate) fn encode(table: &NormTable) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let torus = table.torus();
    buf.push(torus.dimension() as u8);
    for a in torus.aspects() {
        match a {
            Aspect::Rational { num, den } => {
                buf.push(0);
                buf.extend_from_slice(&num.to_le_bytes());
                buf.extend_from_slice(&den.to_le_bytes());
            }
            Aspect::Irrational { digits } => {
                buf.push(1);
                buf.extend_from_slice(&(digits.len() as u32).to_le_bytes());
                buf.extend_from_slice(digits.as_bytes());
            }
        }
    }
    buf.extend_from_slice(&table.cutoff().to_bits().to_le_bytes());
    buf.push(table.is_exact() as u8);
    buf.extend_from_slice(&(table.len() as u64).to_le_bytes());
    let mut prev = 0u128;
    match table.keys() {
        Some(keys) => {
            for &k in keys {
                put_varint(&mut buf, k - prev);
                prev = k;
            }
        }
        None => {
            for &n in table.norms() {
                let bits = n.to_bits() as u128;
                put_varint(&mut buf, bits - prev);
                prev = bits;
            }
        }
    }
    for &r in table.multiplicities() {
        put_varint(&mut buf, r as u128);
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

pub(crate) fn decode(bytes: &[u8]) -> Result<NormTable, LatticeError> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
        return Err(LatticeError::BadMagic);
    }
    if bytes.len() < 8 + DIGEST_LEN {
        return Err(corrupt("file truncated"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(LatticeError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader { buf: body, pos: 8 };
    let dim = r.u8()?;
    let mut aspects = Vec::new();
    for _ in 0..dim.clamp(2, 3) - 1 {
        aspects.push(match r.u8()? {
            0 => {
                let num = r.u64()?;
                let den = r.u64()?;
                Aspect::rational(num, den)?
            }
            1 => {
                let len = r.u32()? as usize;
                let digits = std::str::from_utf8(r.take(len)?)
                    .map_err(|_| corrupt("aspect digits are not utf-8"))?;
                digits.parse()?
            }
            t => return Err(corrupt(&format!("unknown aspect tag {t}"))),
        });
    }
    let torus = match (dim, aspects.as_slice()) {
        (2, [a2]) => TorusSpec::Flat2 { a2: a2.clone() },
        (3, [a2, b2]) => TorusSpec::Flat3 {
            a2: a2.clone(),
            b2: b2.clone(),
        },
        _ => return Err(corrupt(&format!("unsupported dimension {dim}"))),
    };
    let cutoff = f64::from_bits(r.u64()?);
    let exact = match r.u8()? {
        0 => false,
        1 => true,
        _ => return Err(corrupt("bad exactness flag")),
    };
    let count = r.u64()? as usize;
    if count > body.len() {
        return Err(corrupt("entry count exceeds file size"));
    }
    let mut raw = Vec::with_capacity(count);
    let mut acc = 0u128;
    for _ in 0..count {
        acc = acc
            .checked_add(r.varint()?)
            .ok_or_else(|| corrupt("norm key overflow"))?;
        raw.push(acc);
    }
    let mut multiplicities = Vec::with_capacity(count);
    for _ in 0..count {
        let m = u32::try_from(r.varint()?).map_err(|_| corrupt("multiplicity overflow"))?;
        multiplicities.push(m);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    let (norms, keys) = if exact {
        let form = torus
            .exact_form()
            .ok_or_else(|| corrupt("exact keys for a torus without an integral form"))?;
        (raw.iter().map(|&k| form.norm(k)).collect(), Some(raw))
    } else {
        let norms = raw
            .iter()
            .map(|&b| u64::try_from(b).map(f64::from_bits))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| corrupt("bad float norm"))?;
        (norms, None)
    };
    Ok(NormTable::assemble(torus, cutoff, norms, multiplicities, keys))
}

fn corrupt(msg: &str) -> LatticeError {
    LatticeError::Corrupt(msg.to_string())
}

fn put_varint(buf: &mut Vec<u8>, mut v: u128) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LatticeError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("unexpected end of data"))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, LatticeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, LatticeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LatticeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u128, LatticeError> {
        let mut v = 0u128;
        for shift in (0..128).step_by(7) {
            let b = self.u8()?;
            v |= ((b & 0x7f) as u128) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(corrupt("varint too long"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_norm_table;

    #[test]
    fn varint_round_trip() {
        for v in [0u128, 1, 127, 128, 300, u64::MAX as u128, u128::MAX] {
            let mut buf = Vec::new();
            put_varint(&mut buf, v);
            let mut r = Reader { buf: &buf, pos: 0 };
            assert_eq!(r.varint().unwrap(), v);
            assert_eq!(r.pos, buf.len());
        }
    }

    #[test]
    fn round_trips_exact_and_float_tables() {
        for torus in [
            TorusSpec::square(),
            TorusSpec::Flat2 { a2: "3/2".parse().unwrap() },
            TorusSpec::Flat2 { a2: "sqrt(sqrt(2))".parse().unwrap() },
            TorusSpec::Flat3 {
                a2: "sqrt(2)".parse().unwrap(),
                b2: "sqrt(3)".parse().unwrap(),
            },
        ] {
            let t = build_norm_table(&torus, 200.0).unwrap();
            let back = decode(&encode(&t)).unwrap();
            assert_eq!(back, t);
            assert_eq!(back.is_exact(), t.is_exact());
            for (a, b) in back.norms().iter().zip(t.norms()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn detects_damage() {
        let t = build_norm_table(&TorusSpec::square(), 50.0).unwrap();
        let bytes = encode(&t);
        assert!(matches!(decode(&bytes[..bytes.len() - 5]), Err(LatticeError::Corrupt(_))));
        let mut flipped = bytes.clone();
        flipped[20] ^= 1;
        assert!(matches!(decode(&flipped), Err(LatticeError::Corrupt(_))));
        let mut versioned = bytes.clone();
        versioned[4] = 9;
        assert!(matches!(
            decode(&versioned),
            Err(LatticeError::VersionMismatch { found: 9, .. })
        ));
        assert!(matches!(decode(b"nope"), Err(LatticeError::BadMagic)));
    }

    #[test]
    fn csv_uses_exact_fractions_for_rational_aspects() {
        let t = build_norm_table(&TorusSpec::Flat2 { a2: "3/2".parse().unwrap() }, 3.0).unwrap();
        let mut out = Vec::new();
        export_csv(&t, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        // norms m²·2/3 + n²·3/2: 0, 2/3, 3/2, 13/6, 8/3
        assert_eq!(
            text,
            "norm,multiplicity\n0,1\n2/3,2\n3/2,2\n13/6,4\n8/3,2\n"
        );
    }
}
