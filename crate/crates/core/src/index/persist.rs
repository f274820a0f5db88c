//! Binary index files with a SHA-256 sidecar.
//!
//! `.dvec` layout (little-endian): magic `PAXD`, u16 version, u8 kind,
//! u32 dim, u64 n, then n × (u32 len, id bytes, u32 len, owner bytes), then
//! n × dim f32 rows.
//!
//! `.bm25` layout: magic `PAXB`, u16 version, f64 k1, f64 b, u64 n_docs,
//! n_docs × (u32 len, id bytes, u32 length), u64 n_terms, then per term
//! (u32 len, term bytes, u32 n_postings, n_postings × (u32 ordinal, u32 tf)).
//!
//! Each file `x.ext` has a sibling `x.digest` holding the hex SHA-256 of
//! its bytes; loading checks the digest before parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::bm25::{Bm25Index, Bm25Params};
use super::dense::{DenseIndex, DenseKind};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};

const DENSE_MAGIC: &[u8; 4] = b"PAXD";
const BM25_MAGIC: &[u8; 4] = b"PAXB";
const VERSION: u16 = 1;

pub fn digest_path(path: &Path) -> PathBuf {
    path.with_extension("digest")
}

pub trait Persist: Sized {
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self>;

    /// Writes the index and its digest sidecar; returns the hex digest.
    fn persist(&self, path: &Path) -> Result<String> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let bytes = self.to_bytes();
        let digest = sha256_hex(&bytes);
        fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
        let dpath = digest_path(path);
        fs::write(&dpath, format!("{digest}\n")).map_err(|e| Error::io(&dpath, e))?;
        Ok(digest)
    }

    fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let dpath = digest_path(path);
        let want = fs::read_to_string(&dpath).map_err(|e| Error::io(&dpath, e))?;
        if sha256_hex(&bytes) != want.trim() {
            return Err(Error::corrupt(path, "digest mismatch"));
        }
        Self::from_bytes(&bytes, path)
    }
}

pub fn persist_index<T: Persist>(index: &T, path: &Path) -> Result<String> {
    index.persist(path)
}

pub fn load_index<T: Persist>(path: &Path) -> Result<T> {
    T::load(path)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::corrupt(self.path, "unexpected end of file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::corrupt(self.path, "invalid UTF-8 in string table"))
    }

    fn count(&mut self, per_item_min: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        // reject counts that cannot fit in the remaining bytes before allocating
        if n.saturating_mul(per_item_min) > self.bytes.len() - self.pos {
            return Err(Error::corrupt(self.path, "item count exceeds file size"));
        }
        Ok(n)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::corrupt(self.path, "trailing bytes"));
        }
        Ok(())
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if &self.array::<4>()? != magic {
            return Err(Error::corrupt(self.path, "bad magic"));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::corrupt(self.path, format!("unsupported version {version}")));
        }
        Ok(())
    }
}

impl Persist for DenseIndex {
    fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(32 + self.data().len() * 4);
        buf.extend_from_slice(DENSE_MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(self.kind().code());
        buf.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (id, owner) in self.ids().iter().zip(self.owners()) {
            put_str(&mut buf, id);
            put_str(&mut buf, owner);
        }
        for x in self.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf
    }

    fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        r.header(DENSE_MAGIC)?;
        let kind = DenseKind::from_code(r.u8()?).ok_or_else(|| Error::corrupt(path, "unknown index kind"))?;
        let dim = r.u32()? as usize;
        let n = r.count(8)?;
        let mut ids = Vec::with_capacity(n);
        let mut owners = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(r.string()?);
            owners.push(r.string()?);
        }
        let floats = n.checked_mul(dim).ok_or_else(|| Error::corrupt(path, "row table overflow"))?;
        let raw = r.take(floats.checked_mul(4).ok_or_else(|| Error::corrupt(path, "row table overflow"))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        r.finish()?;
        Ok(DenseIndex::from_parts(kind, dim, data, ids, owners))
    }
}

impl Persist for Bm25Index {
    fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(BM25_MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let Bm25Params { k1, b } = self.params();
        buf.extend_from_slice(&k1.to_le_bytes());
        buf.extend_from_slice(&b.to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (id, len) in self.doc_ids().iter().zip(self.doc_lengths()) {
            put_str(&mut buf, id);
            buf.extend_from_slice(&len.to_le_bytes());
        }
        buf.extend_from_slice(&(self.postings().len() as u64).to_le_bytes());
        for (term, list) in self.postings() {
            put_str(&mut buf, term);
            buf.extend_from_slice(&(list.len() as u32).to_le_bytes());
            for (ord, tf) in list {
                buf.extend_from_slice(&ord.to_le_bytes());
                buf.extend_from_slice(&tf.to_le_bytes());
            }
        }
        buf
    }

    fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        r.header(BM25_MAGIC)?;
        let params = Bm25Params { k1: r.f64()?, b: r.f64()? };
        let n = r.count(8)?;
        let mut ids = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(r.string()?);
            lengths.push(r.u32()?);
        }
        let terms = r.count(8)?;
        let mut postings = BTreeMap::new();
        for _ in 0..terms {
            let term = r.string()?;
            let m = r.u32()? as usize;
            let mut list = Vec::with_capacity(m.min(n));
            for _ in 0..m {
                let ord = r.u32()?;
                if ord as usize >= n {
                    return Err(Error::corrupt(path, "posting references a missing document"));
                }
                list.push((ord, r.u32()?));
            }
            postings.insert(term, list);
        }
        r.finish()?;
        Ok(Bm25Index::from_parts(ids, postings, lengths, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{mock_embed, EmbeddingVector, VectorKind};
    use crate::index::bm25::tokenize;

    fn dense() -> DenseIndex {
        let vs: Vec<EmbeddingVector> = ["lung adenocarcinoma", "colon polyp", "skin nevus", "liver hcc"]
            .iter()
            .enumerate()
            .map(|(i, t)| EmbeddingVector { id: format!("R{i}#0"), kind: VectorKind::Chunk, ..mock_embed(t, 32, 9).unwrap() })
            .collect();
        DenseIndex::build(&vs, DenseKind::Chunk).unwrap()
    }

    fn bm25() -> Bm25Index {
        let docs: Vec<(String, String)> = ["lung adenocarcinoma lung", "colon adenocarcinoma", "benign skin"]
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("R{i}"), t.to_string()))
            .collect();
        Bm25Index::build(&docs, Bm25Params { k1: 1.5, b: 0.6 }).unwrap()
    }

    #[test]
    fn dense_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chunks.dvec");
        let idx = dense();
        let digest = idx.persist(&path).unwrap();
        assert_eq!(digest.len(), 64);
        let back = DenseIndex::load(&path).unwrap();
        assert_eq!(back, idx);
    }

    #[test]
    fn bm25_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lexical.bm25");
        let idx = bm25();
        persist_index(&idx, &path).unwrap();
        let back: Bm25Index = load_index(&path).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.topk(&tokenize("lung"), 3).unwrap(), idx.topk(&tokenize("lung"), 3).unwrap());
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.dvec");
        dense().persist(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(DenseIndex::load(&path), Err(Error::CorruptIndex { .. })));
    }

    #[test]
    fn structurally_bad_bytes_rejected_even_with_matching_digest() {
        let p = Path::new("mem.bm25");
        for bytes in [&b"PAXB"[..], b"NOPE\x01\x00", b""] {
            assert!(matches!(Bm25Index::from_bytes(bytes, p), Err(Error::CorruptIndex { .. })));
        }
        let mut good = dense().to_bytes();
        good.push(0);
        assert!(matches!(DenseIndex::from_bytes(&good, p), Err(Error::CorruptIndex { .. })));
    }

    #[test]
    fn missing_digest_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bm25");
        bm25().persist(&path).unwrap();
        fs::remove_file(digest_path(&path)).unwrap();
        assert!(matches!(Bm25Index::load(&path), Err(Error::Io { .. })));
    }
}
