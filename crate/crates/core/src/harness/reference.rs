//! Reference solutions: capped samples of a fine-grid run, persisted in a
//! self-describing binary container.
//!
//! Layout: the magic line `DCREF1\n`, a little-endian `u64` header length,
//! a JSON header, then the samples as little-endian `f64`, state after state.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{sample_stride, HarnessError};
use crate::newton::NewtonConfig;
use crate::problems::BenchmarkProblem;
use crate::scheme::{Family, SchemeSpec};
use crate::stage::DcError;
use crate::stream::march;

const MAGIC: &[u8] = b"DCREF1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub problem: String,
    pub family: Family,
    pub order: u32,
    pub k: f64,
    pub n_steps: i64,
    /// Sample `m` holds the state at grid index `m * stride`.
    pub stride: i64,
    pub dim: usize,
    pub n_samples: usize,
    /// Hex SHA-256 of the little-endian sample bytes.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    meta: ReferenceMeta,
    data: Vec<f64>,
}

fn digest_of(data: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for x in data {
        hasher.update(x.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

impl ReferenceSolution {
    pub fn meta(&self) -> &ReferenceMeta {
        &self.meta
    }

    pub fn digest(&self) -> &str {
        &self.meta.digest
    }

    pub fn len(&self) -> usize {
        self.meta.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.meta.n_samples == 0
    }

    /// State of sample `m`, i.e. at `t = m * stride * k`.
    pub fn sample(&self, m: usize) -> Option<&[f64]> {
        let d = self.meta.dim;
        self.data.get(m * d..(m + 1) * d)
    }

    pub fn sample_time(&self, m: usize) -> f64 {
        (m as i64 * self.meta.stride) as f64 * self.meta.k
    }

    /// Writes the container atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let header = serde_json::to_vec(&self.meta)?;
        let tmp = path.with_extension(format!(
            "{}.tmp",
            path.extension().and_then(|e| e.to_str()).unwrap_or("bin")
        ));
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            w.write_all(MAGIC)?;
            w.write_all(&(header.len() as u64).to_le_bytes())?;
            w.write_all(&header)?;
            for x in &self.data {
                w.write_all(&x.to_le_bytes())?;
            }
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Reads a container and checks its digest.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(HarnessError::Format("bad magic".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > 1 << 20 {
            return Err(HarnessError::Format(format!("header length {len} is implausible")));
        }
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let meta: ReferenceMeta = serde_json::from_slice(&header)?;
        let count = meta.n_samples * meta.dim;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != count * 8 {
            return Err(HarnessError::Format(format!(
                "expected {} data bytes, found {}",
                count * 8,
                bytes.len()
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let actual = digest_of(&data);
        if actual != meta.digest {
            return Err(HarnessError::Digest {
                expected: meta.digest,
                actual,
            });
        }
        Ok(Self { meta, data })
    }
}

/// Runs `spec` with step `k` in streaming mode, keeping at most `cap`
/// evenly spread samples, and optionally persists them to `out`.
pub fn compute_reference(
    problem: &BenchmarkProblem,
    spec: &SchemeSpec,
    k: f64,
    cap: usize,
    newton: &NewtonConfig,
    out: Option<&Path>,
) -> Result<ReferenceSolution, HarnessError> {
    let n_steps = problem.problem.n_steps(k).map_err(DcError::from)?;
    let stride = sample_stride(n_steps, cap);
    let dim = problem.problem.dim();
    let mut data = Vec::with_capacity(((n_steps / stride + 1) as usize) * dim);
    march(&problem.problem, spec, k, newton, |n, u| {
        if n % stride == 0 {
            data.extend_from_slice(u);
        }
    })?;
    let meta = ReferenceMeta {
        problem: problem.name().to_string(),
        family: spec.family(),
        order: spec.order(),
        k,
        n_steps,
        stride,
        dim,
        n_samples: data.len() / dim,
        digest: digest_of(&data),
    };
    let reference = ReferenceSolution { meta, data };
    if let Some(path) = out {
        reference.save(path)?;
    }
    Ok(reference)
}
