//! On-disk bundle of an [`HhhState`]: a JSON manifest followed by one
//! summary blob per lattice node.
//!
//! ```text
//! b"HHHSTATE"
//! u32 manifest length, manifest JSON
//! per node, in manifest order: u64 blob length, summary wire bytes
//! ```
//! All integers little-endian.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::hhh::HhhState;
use crate::lattice::HierarchySpec;
use crate::space_saving::{SpaceSaving, UpdateMode};

const MAGIC: &[u8; 8] = b"HHHSTATE";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub hierarchy: HierarchySpec,
    pub epsilon: Fraction,
    pub mode: UpdateMode,
    pub capacity: usize,
    pub total: u64,
    /// Node labels, in blob order.
    pub nodes: Vec<Vec<u8>>,
}

pub fn write_state<W: Write>(state: &HhhState, mut out: W) -> Result<()> {
    let manifest = Manifest {
        version: VERSION,
        hierarchy: state.spec().clone(),
        epsilon: state.epsilon(),
        mode: state.mode(),
        capacity: state.capacity(),
        total: state.total(),
        nodes: state.labels().iter().map(|l| l.entries().to_vec()).collect(),
    };
    let json = serde_json::to_vec(&manifest)?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    for node in state.nodes() {
        let blob = node.to_bytes();
        out.write_all(&(blob.len() as u64).to_le_bytes())?;
        out.write_all(&blob)?;
    }
    out.flush()?;
    Ok(())
}

pub fn state_to_bytes(state: &HhhState) -> Vec<u8> {
    let mut buf = Vec::new();
    write_state(state, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_state<R: Read>(mut input: R) -> Result<HhhState> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Codec("not an HHH state file".into()));
    }
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut json)?;
    let manifest: Manifest = serde_json::from_slice(&json)?;
    if manifest.version != VERSION {
        return Err(Error::Codec(format!("unsupported state version {}", manifest.version)));
    }
    let spec = manifest.hierarchy;
    let expected: Vec<Vec<u8>> = spec.labels().iter().map(|l| l.entries().to_vec()).collect();
    if manifest.nodes != expected {
        return Err(Error::Codec("node list does not match the hierarchy".into()));
    }
    let mut nodes = Vec::with_capacity(expected.len());
    for _ in &expected {
        let mut len = [0u8; 8];
        input.read_exact(&mut len)?;
        let mut blob = vec![0u8; u64::from_le_bytes(len) as usize];
        input.read_exact(&mut blob)?;
        let node = SpaceSaving::from_bytes(&blob)?;
        if node.mode() != manifest.mode || node.capacity() != manifest.capacity {
            return Err(Error::Codec("node summary disagrees with manifest".into()));
        }
        nodes.push(node);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Codec(format!("{} trailing bytes", rest.len())));
    }
    HhhState::from_parts(spec, manifest.epsilon, nodes, manifest.total)
}
