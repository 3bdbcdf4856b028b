//! Binary operator cache keyed by (domain hash, h, L, s).
//!
//! Layout, all little-endian: magic `FRACPOH\0`, `u32` version, `u64` domain
//! hash, `f64` h, `f64` L, `f64` s, `u32` n, `u64` nodes per axis, `u64`
//! unknowns, `u8` scheme, `u8` image source, then the row-major matrix, the
//! nodal profile and its image as `f64` arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::assembly::{ImageSource, Scheme};
use super::{AssemblyMeta, AssemblyOptions, Discretization, FracOperator};

const MAGIC: &[u8; 8] = b"FRACPOH\0";
const VERSION: u32 = 1;

fn key(disc: &Discretization, s: f64, scheme: Scheme) -> String {
    let mut hasher = Sha256::new();
    hasher.update(disc.domain().spec().digest().to_le_bytes());
    hasher.update(disc.h().to_le_bytes());
    hasher.update(disc.half_width().to_le_bytes());
    hasher.update(s.to_le_bytes());
    hasher.update([scheme as u8]);
    let digest = hasher.finalize();
    let hex: String = digest[..12].iter().map(|b| format!("{b:02x}")).collect();
    format!("op-{hex}.bin")
}

/// Path of the cache file for this configuration inside `dir`.
pub fn path_for(dir: &Path, disc: &Discretization, s: f64, scheme: Scheme) -> PathBuf {
    dir.join(key(disc, s, scheme))
}

pub fn store(op: &FracOperator, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let disc = op.discretization();
    let path = path_for(dir, disc, op.s(), op.meta().scheme);
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&disc.domain().spec().digest().to_le_bytes())?;
        w.write_all(&disc.h().to_le_bytes())?;
        w.write_all(&disc.half_width().to_le_bytes())?;
        w.write_all(&op.s().to_le_bytes())?;
        w.write_all(&(disc.dimension() as u32).to_le_bytes())?;
        w.write_all(&(disc.nodes_per_axis() as u64).to_le_bytes())?;
        w.write_all(&(op.len() as u64).to_le_bytes())?;
        w.write_all(&[op.meta().scheme as u8, source_code(op.meta().image_source)])?;
        for v in op.matrix().iter().chain(op.omega()).chain(op.profile_image()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

fn source_code(s: ImageSource) -> u8 {
    match s {
        ImageSource::ClosedForm => 0,
        ImageSource::Oracle => 1,
        ImageSource::None => 2,
    }
}

/// Loads a cached operator matching `disc`, `s` and `scheme`; `Ok(None)` when
/// no file exists. A file whose header disagrees is an error.
pub fn load(dir: &Path, disc: Arc<Discretization>, s: f64, scheme: Scheme) -> Result<Option<FracOperator>> {
    let path = path_for(dir, &disc, s, scheme);
    let file = match File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Cache(format!("{}: bad magic", path.display())));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Cache(format!("{}: unsupported version {version}", path.display())));
    }
    let hash = read_u64(&mut r)?;
    let h = read_f64(&mut r)?;
    let l = read_f64(&mut r)?;
    let s_file = read_f64(&mut r)?;
    let n = read_u32(&mut r)? as usize;
    let per_axis = read_u64(&mut r)? as usize;
    let size = read_u64(&mut r)? as usize;
    let mut codes = [0u8; 2];
    r.read_exact(&mut codes)?;
    let matches = hash == disc.domain().spec().digest()
        && h == disc.h()
        && l == disc.half_width()
        && s_file == s
        && n == disc.dimension()
        && per_axis == disc.nodes_per_axis()
        && size == disc.len()
        && codes[0] == scheme as u8;
    if !matches {
        return Err(Error::Cache(format!(
            "{}: header does not match the requested operator",
            path.display()
        )));
    }
    let matrix = read_f64s(&mut r, size * size)?;
    let omega = read_f64s(&mut r, size)?;
    let image = read_f64s(&mut r, size)?;
    let image_source = match codes[1] {
        0 => ImageSource::ClosedForm,
        1 => ImageSource::Oracle,
        _ => ImageSource::None,
    };
    let meta = AssemblyMeta {
        scheme,
        quadrature: "loaded from cache".into(),
        truncation_radius: 2.0 * l,
        image_source,
    };
    FracOperator::from_parts(disc, s, matrix, omega, image, meta).map(Some)
}

/// Cached assembly: load when present, otherwise assemble and store.
pub fn load_or_assemble(
    dir: &Path,
    disc: Arc<Discretization>,
    s: f64,
    opts: &AssemblyOptions,
) -> Result<FracOperator> {
    if let Some(op) = load(dir, disc.clone(), s, opts.scheme)? {
        return Ok(op);
    }
    let op = FracOperator::assemble(disc, s, opts)?;
    store(&op, dir)?;
    Ok(op)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Cache(format!("truncated payload: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
