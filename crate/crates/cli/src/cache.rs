//! Binary kernel-table cache keyed by the assembly-relevant configuration.
//!
//! Layout: magic, format version, config hash, payload length, payload,
//! FNV-1a checksum of the payload. A hash or checksum mismatch falls back to
//! reassembly with a warning.

use anyhow::{Context, Result};
use kinetic_fredholm::collision::{
    assemble_kernel_table, CollisionKernelTable, CrossSection, KernelAssembly, VelocityGrid,
    VelocityGridConfig,
};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"KFKT0001";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    MissAssembled,
    RejectedRebuilt,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hash of everything the table depends on.
pub fn config_hash(cs: &CrossSection, grid: &VelocityGridConfig) -> u64 {
    let mut key = Vec::new();
    key.extend_from_slice(&cs.b0.to_bits().to_le_bytes());
    key.extend_from_slice(&cs.gamma.to_bits().to_le_bytes());
    key.extend_from_slice(&grid.cutoff.to_bits().to_le_bytes());
    key.extend_from_slice(&(grid.radial_order as u64).to_le_bytes());
    key.extend_from_slice(&(grid.n_mu as u64).to_le_bytes());
    key.extend_from_slice(&(grid.n_phi as u64).to_le_bytes());
    key.push(match grid.interp_order {
        kinetic_fredholm::collision::InterpOrder::Linear => 1,
        kinetic_fredholm::collision::InterpOrder::Cubic => 3,
    });
    fnv1a(&key)
}

/// Cache location: `KF_CACHE_DIR` overrides the default subdirectory of the
/// output directory.
pub fn cache_dir(output_dir: &Path) -> PathBuf {
    match std::env::var_os("KF_CACHE_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => output_dir.join("kernel-cache"),
    }
}

pub fn cache_file(dir: &Path, hash: u64) -> PathBuf {
    dir.join(format!("table-{hash:016x}.bin"))
}

fn push_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
        .collect())
}

pub fn store(path: &Path, hash: u64, table: &CollisionKernelTable) -> Result<()> {
    let n = table.n();
    let mut payload = Vec::with_capacity(16 + 8 * (n + 2 * n * n));
    payload.extend_from_slice(&(n as u64).to_le_bytes());
    push_f64s(&mut payload, &table.nu);
    push_f64s(&mut payload, table.kmat());
    push_f64s(&mut payload, table.apply_matrix());
    let assembly = serde_json::to_vec(&table.assembly)?;
    payload.extend_from_slice(&(assembly.len() as u64).to_le_bytes());
    payload.extend_from_slice(&assembly);

    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("creating cache file {}", path.display()))?;
    f.write_all(MAGIC)?;
    f.write_all(&hash.to_le_bytes())?;
    f.write_all(&(payload.len() as u64).to_le_bytes())?;
    f.write_all(&payload)?;
    f.write_all(&fnv1a(&payload).to_le_bytes())?;
    Ok(())
}

fn try_load(
    path: &Path,
    hash: u64,
    cs: &CrossSection,
    grid_cfg: &VelocityGridConfig,
) -> Result<CollisionKernelTable> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    anyhow::ensure!(&magic == MAGIC, "bad magic");
    let stored_hash = read_u64(&mut f)?;
    anyhow::ensure!(stored_hash == hash, "config hash mismatch");
    let len = read_u64(&mut f)? as usize;
    let mut payload = vec![0u8; len];
    f.read_exact(&mut payload)?;
    let checksum = read_u64(&mut f)?;
    anyhow::ensure!(checksum == fnv1a(&payload), "payload checksum mismatch");

    let mut r: &[u8] = &payload;
    let n = read_u64(&mut r)? as usize;
    let nu = read_f64s(&mut r, n)?;
    let kmat = read_f64s(&mut r, n * n)?;
    let apply = read_f64s(&mut r, n * n)?;
    let alen = read_u64(&mut r)? as usize;
    let mut abytes = vec![0u8; alen];
    r.read_exact(&mut abytes)?;
    let assembly: KernelAssembly = serde_json::from_slice(&abytes)?;
    let grid = VelocityGrid::new(grid_cfg.clone())?;
    Ok(CollisionKernelTable::from_parts(
        grid, *cs, nu, kmat, apply, assembly,
    )?)
}

/// Loads the table from cache or assembles and stores it.
pub fn load_or_assemble(
    cs: &CrossSection,
    grid_cfg: &VelocityGridConfig,
    dir: &Path,
) -> Result<(CollisionKernelTable, CacheStatus)> {
    let hash = config_hash(cs, grid_cfg);
    let path = cache_file(dir, hash);
    let existed = path.exists();
    if existed {
        match try_load(&path, hash, cs, grid_cfg) {
            Ok(table) => return Ok((table, CacheStatus::Hit)),
            Err(e) => {
                eprintln!(
                    "warning: rejecting kernel cache {}: {e}; rebuilding",
                    path.display()
                );
            }
        }
    }
    let grid = VelocityGrid::new(grid_cfg.clone())?;
    let table = assemble_kernel_table(cs, &grid)?;
    store(&path, hash, &table)?;
    Ok((
        table,
        if existed {
            CacheStatus::RejectedRebuilt
        } else {
            CacheStatus::MissAssembled
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (CrossSection, VelocityGridConfig) {
        (
            CrossSection::hard_sphere(1.0),
            VelocityGridConfig {
                radial_order: 16,
                n_mu: 2,
                n_phi: 4,
                ..Default::default()
            },
        )
    }

    #[test]
    fn roundtrip_and_integrity() {
        let dir = std::env::temp_dir().join(format!("kf-cache-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let (cs, gc) = small();

        let (t1, s1) = load_or_assemble(&cs, &gc, &dir).unwrap();
        assert_eq!(s1, CacheStatus::MissAssembled);
        let (t2, s2) = load_or_assemble(&cs, &gc, &dir).unwrap();
        assert_eq!(s2, CacheStatus::Hit);
        assert_eq!(t1.kmat(), t2.kmat());
        assert_eq!(t1.apply_matrix(), t2.apply_matrix());
        assert_eq!(t1.nu, t2.nu);

        // A changed cross section misses the cache.
        let cs2 = CrossSection::hard_sphere(2.0);
        let (_, s3) = load_or_assemble(&cs2, &gc, &dir).unwrap();
        assert_eq!(s3, CacheStatus::MissAssembled);

        // Corruption is detected and the table rebuilt.
        let path = cache_file(&dir, config_hash(&cs, &gc));
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        let (t4, s4) = load_or_assemble(&cs, &gc, &dir).unwrap();
        assert_eq!(s4, CacheStatus::RejectedRebuilt);
        assert_eq!(t1.kmat(), t4.kmat());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
