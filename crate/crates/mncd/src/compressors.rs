//! Deterministic lossless compression backends and a compressed-length
//! cache.
//!
//! Each backend maps a byte sequence to its compressed size. Determinism is
//! part of the contract: the same bytes must always give the same length,
//! which is what makes compression-based distances reproducible. The gzip
//! backend pins its header timestamp to zero for that reason.
//!
//! [`LengthCache`] memoizes per-sequence lengths keyed by a truncated
//! SHA-256 digest of `(backend, level, bytes)`; joint (concatenated)
//! lengths are intentionally never cached, since pair keys would mostly
//! miss while eating memory quadratic in the dataset size.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use dashmap::DashMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Compression backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Gzip,
    Bzip2,
    Zstd,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Gzip, Backend::Bzip2, Backend::Zstd];

    pub fn id(self) -> &'static str {
        match self {
            Backend::Gzip => "gzip",
            Backend::Bzip2 => "bzip2",
            Backend::Zstd => "zstd",
        }
    }

    /// Default compression level: the strongest standard setting for the
    /// DEFLATE-family backends, zstd's own default for zstd.
    pub fn default_level(self) -> u32 {
        match self {
            Backend::Gzip => 9,
            Backend::Bzip2 => 9,
            Backend::Zstd => 3,
        }
    }

    fn level_range(self) -> (u32, u32) {
        match self {
            Backend::Gzip => (0, 9),
            Backend::Bzip2 => (1, 9),
            Backend::Zstd => (1, 22),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gzip" | "gz" => Ok(Backend::Gzip),
            "bzip2" | "bz2" => Ok(Backend::Bzip2),
            "zstd" | "zst" => Ok(Backend::Zstd),
            other => Err(Error::Argument(format!(
                "unknown compressor `{other}`; supported: gzip, bzip2, zstd"
            ))),
        }
    }
}

/// A configured compressor: backend plus level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Compressor {
    backend: Backend,
    level: u32,
}

impl Compressor {
    /// Builds a compressor, validating the level against the backend's
    /// supported range.
    pub fn new(backend: Backend, level: u32) -> Result<Self> {
        let (lo, hi) = backend.level_range();
        if level < lo || level > hi {
            return Err(Error::Argument(format!(
                "{backend} level must be in [{lo}, {hi}], got {level}"
            )));
        }
        Ok(Compressor { backend, level })
    }

    /// Backend at its default level.
    pub fn with_default_level(backend: Backend) -> Self {
        Compressor {
            backend,
            level: backend.default_level(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Compresses `data` and returns the full output, framing included.
    pub fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        match self.backend {
            Backend::Gzip => {
                // mtime defaults to zero in flate2's GzEncoder, which keeps
                // the 10-byte header constant; OS byte 255 ("unknown") is
                // likewise fixed. Identical inputs therefore give identical
                // outputs.
                let mut enc = flate2::GzBuilder::new().mtime(0).write(
                    Vec::with_capacity(data.len() / 2 + 64),
                    flate2::Compression::new(self.level),
                );
                enc.write_all(data).map_err(io_error)?;
                enc.finish().map_err(io_error)
            }
            Backend::Bzip2 => {
                let mut enc = bzip2::write::BzEncoder::new(
                    Vec::with_capacity(data.len() / 2 + 64),
                    bzip2::Compression::new(self.level),
                );
                enc.write_all(data).map_err(io_error)?;
                enc.finish().map_err(io_error)
            }
            Backend::Zstd => {
                zstd::bulk::compress(data, self.level as i32).map_err(io_error)
            }
        }
    }

    /// Length in bytes of the compressed representation of `data`.
    pub fn compressed_len(&self, data: &[u8]) -> Result<usize> {
        Ok(self.compress(data)?.len())
    }

    /// Decompresses a buffer produced by [`Compressor::compress`].
    /// Compression is lossless, so this must return the original bytes.
    pub fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        use std::io::Read;
        match self.backend {
            Backend::Gzip => {
                let mut out = Vec::new();
                flate2::read::GzDecoder::new(data)
                    .read_to_end(&mut out)
                    .map_err(io_error)?;
                Ok(out)
            }
            Backend::Bzip2 => {
                let mut out = Vec::new();
                bzip2::read::BzDecoder::new(data)
                    .read_to_end(&mut out)
                    .map_err(io_error)?;
                Ok(out)
            }
            Backend::Zstd => {
                let mut out = Vec::new();
                zstd::stream::read::Decoder::new(data)
                    .map_err(io_error)?
                    .read_to_end(&mut out)
                    .map_err(io_error)?;
                Ok(out)
            }
        }
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::Io {
        path: std::path::PathBuf::from("<memory>"),
        source: e,
    }
}

/// 16-byte cache key: SHA-256 over backend id, level, and the sequence,
/// truncated. Collision probability at 128 bits is negligible for any
/// realistic corpus.
fn cache_key(comp: &Compressor, data: &[u8]) -> [u8; 16] {
    let mut hasher = Sha256::new();
    hasher.update(comp.backend.id().as_bytes());
    hasher.update(comp.level.to_le_bytes());
    hasher.update(data);
    let digest = hasher.finalize();
    let mut key = [0u8; 16];
    key.copy_from_slice(&digest[..16]);
    key
}

/// Concurrent memo of per-sequence compressed lengths.
#[derive(Debug, Default)]
pub struct LengthCache {
    map: DashMap<[u8; 16], usize>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl LengthCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Compressed length of `data`, computed once per distinct sequence.
    pub fn compressed_len(&self, comp: &Compressor, data: &[u8]) -> Result<usize> {
        let key = cache_key(comp, data);
        if let Some(hit) = self.map.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let len = comp.compressed_len(data)?;
        self.map.insert(key, len);
        Ok(len)
    }

    /// (hits, misses) counters, for diagnostics.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
