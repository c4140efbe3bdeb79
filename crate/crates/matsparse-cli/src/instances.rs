//! Instance file payloads: the decomposition-schema JSON plus a metadata
//! block `{construction, params}`. Readers rebuild the instance from the
//! metadata and cross-check it against the stored data, so a verifier never
//! trusts a stale file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use matsparse::constructions::{
    cube_simplex_construction, log_needed_construction, CubeSimplexInstance, InstanceMetadata,
    LogNeededInstance,
};
use matsparse::decomp::{ContactPairs, ConvexDecomposition};

#[derive(Serialize, Deserialize)]
pub struct MatrixInstancePayload {
    pub metadata: InstanceMetadata,
    pub decomposition: ConvexDecomposition,
}

#[derive(Serialize, Deserialize)]
pub struct PairsInstancePayload {
    pub metadata: InstanceMetadata,
    pub pairs: ContactPairs,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let data = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&data).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

/// Rebuild a log-needed instance from file metadata and check the stored
/// decomposition matches it bit for bit (construction and serialization are
/// both deterministic).
pub fn load_log_needed(path: &Path) -> Result<LogNeededInstance, String> {
    let payload: MatrixInstancePayload = read_json(path)?;
    let (dim, gamma, epsilon) = match payload.metadata {
        InstanceMetadata::LogNeeded {
            dim, gamma, epsilon, ..
        } => (dim, gamma, epsilon),
        _ => return Err(format!("{} is not a log-needed instance", path.display())),
    };
    let inst = log_needed_construction(dim, gamma, epsilon).map_err(|e| e.to_string())?;
    let rebuilt = inst.to_decomposition().map_err(|e| e.to_string())?;
    let same = rebuilt.weights() == payload.decomposition.weights()
        && rebuilt.matrices() == payload.decomposition.matrices()
        && rebuilt.target() == payload.decomposition.target();
    if !same {
        return Err(format!(
            "{} does not match its metadata parameters (dim={dim}, gamma={gamma}, eps={epsilon})",
            path.display()
        ));
    }
    Ok(inst)
}

pub fn load_cube_simplex(path: &Path) -> Result<CubeSimplexInstance, String> {
    let payload: PairsInstancePayload = read_json(path)?;
    let (dim, delta) = match payload.metadata {
        InstanceMetadata::CubeSimplex { dim, delta, .. } => (dim, delta),
        _ => return Err(format!("{} is not a cube-simplex instance", path.display())),
    };
    let inst = cube_simplex_construction(dim, delta).map_err(|e| e.to_string())?;
    let stored = payload.pairs;
    let rebuilt = inst.contact_pairs();
    let same = stored.dim() == rebuilt.dim()
        && stored.weights() == rebuilt.weights()
        && stored
            .pairs()
            .iter()
            .zip(rebuilt.pairs())
            .all(|(a, b)| a.u == b.u && a.v == b.v);
    if !same {
        return Err(format!(
            "{} does not match its metadata parameters (dim={dim}, delta={delta})",
            path.display()
        ));
    }
    Ok(inst)
}

/// A decomposition from any matrix-instance file (the surrounding envelope
/// fields are ignored).
pub fn load_decomposition(path: &Path) -> Result<ConvexDecomposition, String> {
    let payload: MatrixInstancePayload = read_json(path)?;
    Ok(payload.decomposition)
}
