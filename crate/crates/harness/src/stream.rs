//! Binary instance files.
//!
//! Layout: 4-byte magic `ABCS`, version byte 0x01, one reserved zero byte,
//! then the dimension as a 32-bit little-endian unsigned integer. The body
//! holds n*n + 2n IEEE-754 doubles, little-endian, in stream order: the
//! vector c, the matrix rows top to bottom, the vector a. Parsing followed
//! by serialization reproduces the input bytes exactly.

use std::fs;
use std::path::Path;

use abcs_core::linalg::PromiseInstance;
use abcs_core::sketch::instance_values;

use crate::{HarnessError, Result};

pub const MAGIC: [u8; 4] = *b"ABCS";
pub const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 10;

/// Maximum dimension accepted from a file header. Keeps a corrupt header
/// from triggering an enormous allocation.
pub const MAX_DIMENSION: u32 = 1 << 16;

/// An instance held in stream order, ready to feed the one-pass decider.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    n: u32,
    values: Vec<f64>,
}

fn body_len(n: u32) -> usize {
    let n = n as usize;
    n * n + 2 * n
}

impl StreamFile {
    /// Wraps raw values. The length must match the declared dimension.
    pub fn new(n: u32, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(HarnessError::Format(format!(
                "dimension {n} out of range [1, {MAX_DIMENSION}]"
            )));
        }
        if values.len() != body_len(n) {
            return Err(HarnessError::Format(format!(
                "expected {} values for n = {n}, got {}",
                body_len(n),
                values.len()
            )));
        }
        Ok(StreamFile { n, values })
    }

    pub fn from_instance(inst: &PromiseInstance) -> Self {
        StreamFile {
            n: inst.n() as u32,
            values: instance_values(inst).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(0x00);
        out.extend_from_slice(&self.n.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(HarnessError::Format(format!(
                "file too short for header: {} bytes",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(HarnessError::Format("bad magic bytes".into()));
        }
        if bytes[4] != VERSION {
            return Err(HarnessError::Format(format!(
                "unsupported version {}",
                bytes[4]
            )));
        }
        if bytes[5] != 0x00 {
            return Err(HarnessError::Format("reserved header byte is nonzero".into()));
        }
        let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 header bytes"));
        if n == 0 || n > MAX_DIMENSION {
            return Err(HarnessError::Format(format!(
                "dimension {n} out of range [1, {MAX_DIMENSION}]"
            )));
        }
        let body = &bytes[HEADER_LEN..];
        let want = body_len(n);
        if body.len() != want * 8 {
            return Err(HarnessError::Format(format!(
                "expected {} body bytes for n = {n}, got {}",
                want * 8,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(StreamFile { n, values })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| HarnessError::Io(path.to_path_buf(), e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| HarnessError::Io(path.to_path_buf(), e))?;
        Self::from_bytes(&bytes)
    }

    /// Imports the plain-text interchange format: one decimal value per
    /// line, blank lines ignored, exactly n*n + 2n values in stream order.
    pub fn from_text(n: u32, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(body_len(n));
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| {
                HarnessError::Format(format!("line {}: not a number: {trimmed:?}", lineno + 1))
            })?;
            values.push(v);
        }
        Self::new(n, values)
    }
}
