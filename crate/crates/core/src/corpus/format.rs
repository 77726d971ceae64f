//! Binary corpus format, little-endian throughout:
//!
//! ```text
//! header   magic "FSC1" | version u16 | flags u16 | d u32 | videos u32 | queries u32
//! video    video_id u32 | N u32 | N*d f32 (row-major)
//!          [if flags & 1] N * (cluster i32 (-1 = none) | is_noise u8 | is_query_target u8)
//! query    query_id u32 | paired_video_id u32 | d f32
//! ```

use std::io::Write;
use std::path::Path;

use crate::corpus::{Corpus, FrameTruth, Provenance, QueryRecord, VideoRecord};
use crate::error::{Error, Result};
use crate::kernels::Matrix;

pub const MAGIC: [u8; 4] = *b"FSC1";
pub const VERSION: u16 = 1;
const FLAG_TRUTH: u16 = 1;
const HEADER_LEN: usize = 20;
const TRUTH_LEN: usize = 6;

/// Exact byte length of the encoded corpus.
pub fn encoded_len(corpus: &Corpus) -> usize {
    let truth = corpus.has_truth();
    let videos: usize = corpus
        .videos
        .iter()
        .map(|v| 8 + v.frame_count() * corpus.dim * 4 + if truth { v.frame_count() * TRUTH_LEN } else { 0 })
        .sum();
    HEADER_LEN + videos + corpus.queries.len() * (8 + corpus.dim * 4)
}

fn count_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::domain(format!("{what} {n} does not fit in u32")))
}

/// Serializes `corpus` into `out`.
pub fn write_corpus<W: Write>(corpus: &Corpus, out: &mut W) -> Result<()> {
    let any_truth = corpus.videos.iter().any(|v| v.truth.is_some());
    let truth = corpus.has_truth();
    if any_truth && !truth {
        return Err(Error::domain("truth labels must be present on every video or on none"));
    }
    let mut buf = Vec::with_capacity(encoded_len(corpus));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(if truth { FLAG_TRUTH } else { 0 }).to_le_bytes());
    buf.extend_from_slice(&count_u32(corpus.dim, "dimension")?.to_le_bytes());
    buf.extend_from_slice(&count_u32(corpus.videos.len(), "video count")?.to_le_bytes());
    buf.extend_from_slice(&count_u32(corpus.queries.len(), "query count")?.to_le_bytes());

    for v in &corpus.videos {
        if v.frames.cols() != corpus.dim {
            return Err(Error::shape(format!(
                "video {} has dimension {}, corpus has {}",
                v.video_id,
                v.frames.cols(),
                corpus.dim
            )));
        }
        buf.extend_from_slice(&v.video_id.to_le_bytes());
        buf.extend_from_slice(&count_u32(v.frame_count(), "frame count")?.to_le_bytes());
        for &x in v.frames.as_slice() {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        if let Some(labels) = v.truth.as_ref().filter(|_| truth) {
            if labels.len() != v.frame_count() {
                return Err(Error::shape(format!(
                    "video {} has {} truth labels for {} frames",
                    v.video_id,
                    labels.len(),
                    v.frame_count()
                )));
            }
            for t in labels {
                let cluster = match t.cluster {
                    Some(c) => i32::try_from(c)
                        .map_err(|_| Error::domain(format!("cluster label {c} does not fit in i32")))?,
                    None => -1,
                };
                buf.extend_from_slice(&cluster.to_le_bytes());
                buf.push(t.is_noise as u8);
                buf.push(t.is_query_target as u8);
            }
        }
    }

    for q in &corpus.queries {
        if q.embedding.len() != corpus.dim {
            return Err(Error::shape(format!(
                "query {} has dimension {}, corpus has {}",
                q.query_id,
                q.embedding.len(),
                corpus.dim
            )));
        }
        buf.extend_from_slice(&q.query_id.to_le_bytes());
        buf.extend_from_slice(&q.paired_video_id.to_le_bytes());
        for &x in &q.embedding {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }

    out.write_all(&buf).map_err(|e| Error::io("<writer>", e))
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    write_corpus(corpus, &mut bytes)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = read_corpus(&bytes)?;
    corpus.provenance = Provenance::File(path.display().to_string());
    Ok(corpus)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated file: need {n} bytes for {what}, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or_else(|| Error::Format {
            offset: self.pos as u64,
            message: format!("{what} length overflows"),
        })?;
        let raw = self.take(len, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }

    fn flag(&mut self, what: &str) -> Result<bool> {
        let at = self.pos as u64;
        match self.u8(what)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format { offset: at, message: format!("{what} must be 0 or 1, found {other}") }),
        }
    }
}

/// Parses a corpus from its encoded bytes.
pub fn read_corpus(bytes: &[u8]) -> Result<Corpus> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format { offset: 0, message: format!("bad magic {magic:?}, expected \"FSC1\"") });
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::Format { offset: 4, message: format!("unsupported version {version}") });
    }
    let flags = cur.u16("flags")?;
    if flags & !FLAG_TRUTH != 0 {
        return Err(Error::Format { offset: 6, message: format!("unknown flag bits {flags:#06x}") });
    }
    let truth = flags & FLAG_TRUTH != 0;
    let dim = cur.u32("dimension")? as usize;
    let video_count = cur.u32("video count")? as usize;
    let query_count = cur.u32("query count")? as usize;

    let mut videos = Vec::with_capacity(video_count.min(1 << 16));
    for _ in 0..video_count {
        let video_id = cur.u32("video id")?;
        let n = cur.u32("frame count")? as usize;
        let values = cur.f32s(n * dim, "frame embeddings")?;
        let frames = Matrix::from_vec(n, dim, values)?;
        let labels = if truth {
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let at = cur.pos as u64;
                let cluster = match cur.i32("cluster label")? {
                    -1 => None,
                    c if c >= 0 => Some(c as u32),
                    c => {
                        return Err(Error::Format { offset: at, message: format!("invalid cluster label {c}") })
                    }
                };
                let is_noise = cur.flag("is_noise")?;
                let is_query_target = cur.flag("is_query_target")?;
                labels.push(FrameTruth { cluster, is_noise, is_query_target });
            }
            Some(labels)
        } else {
            None
        };
        videos.push(VideoRecord { video_id, frames, truth: labels });
    }

    let mut queries = Vec::with_capacity(query_count.min(1 << 16));
    for _ in 0..query_count {
        let query_id = cur.u32("query id")?;
        let paired_video_id = cur.u32("paired video id")?;
        let embedding = cur.f32s(dim, "query embedding")?;
        queries.push(QueryRecord { query_id, embedding, paired_video_id });
    }

    if cur.pos != bytes.len() {
        return Err(Error::Format {
            offset: cur.pos as u64,
            message: format!("{} trailing bytes", bytes.len() - cur.pos),
        });
    }

    Ok(Corpus { dim, videos, queries, provenance: Provenance::Manual })
}
