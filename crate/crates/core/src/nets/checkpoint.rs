//! Flat binary checkpoint format.
//!
//! All integers and floats are little-endian.
//!
//! | field          | type            | notes                                      |
//! |----------------|-----------------|--------------------------------------------|
//! | magic          | `[u8; 4]`       | `b"VRNN"`                                  |
//! | format version | `u32`           | currently 1                                |
//! | head kind      | `u32`           | 0 = policy logits, 1 = per-user Q heads    |
//! | head count     | `u32`           | 1 for policy logits, N for Q heads         |
//! | layer count    | `u32`           | number of entries in `layer_sizes`         |
//! | layer sizes    | `u32` x count   | input width first, output width last       |
//! | scalar count   | `u64`           | total number of parameters that follow     |
//! | parameters     | `f64` x scalars | per layer: weights row-major `(in, out)`, then biases |

use std::io::{Read, Write};
use std::path::Path;

use super::{DenseNet, NetError};

pub const MAGIC: &[u8; 4] = b"VRNN";
pub const FORMAT_VERSION: u32 = 1;

/// How the network output is turned into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    /// Output is one logit per joint action.
    PolicyLogits,
    /// Output is `heads` blocks of Q-values, one block per user; actions are
    /// chosen by the summed Q-value.
    QHeads { heads: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub head: HeadKind,
    pub net: DenseNet,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let sizes = self.net.layer_sizes();
        let mut out = Vec::with_capacity(32 + 4 * sizes.len() + 8 * self.net.param_count());
        out.extend_from_slice(MAGIC);
        let (kind, heads) = match self.head {
            HeadKind::PolicyLogits => (0u32, 1u32),
            HeadKind::QHeads { heads } => (1, heads as u32),
        };
        for v in [FORMAT_VERSION, kind, heads, sizes.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &s in sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.net.param_count() as u64).to_le_bytes());
        for p in self.net.to_flat() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NetError> {
        let mut cur = bytes;
        let mut magic = [0u8; 4];
        read_exact(&mut cur, &mut magic)?;
        if &magic != MAGIC {
            return Err(NetError::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut cur)?;
        if version != FORMAT_VERSION {
            return Err(NetError::Checkpoint(format!("unsupported format version {version}")));
        }
        let kind = read_u32(&mut cur)?;
        let heads = read_u32(&mut cur)? as usize;
        let head = match kind {
            0 => HeadKind::PolicyLogits,
            1 => HeadKind::QHeads { heads },
            other => return Err(NetError::Checkpoint(format!("unknown head kind {other}"))),
        };
        let n_sizes = read_u32(&mut cur)? as usize;
        if n_sizes > 64 {
            return Err(NetError::Checkpoint(format!("implausible layer count {n_sizes}")));
        }
        let sizes = (0..n_sizes)
            .map(|_| read_u32(&mut cur).map(|s| s as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let mut net = DenseNet::zeros(&sizes)?;
        let count = read_u64(&mut cur)? as usize;
        if count != net.param_count() {
            return Err(NetError::Checkpoint(format!(
                "scalar count {count} does not match layer sizes {sizes:?} ({} expected)",
                net.param_count()
            )));
        }
        if cur.len() != 8 * count {
            return Err(NetError::Checkpoint(format!(
                "expected {} parameter bytes, found {}",
                8 * count,
                cur.len()
            )));
        }
        let params: Vec<f64> = cur
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        net.set_flat(&params)?;
        if let HeadKind::QHeads { heads } = head {
            if heads == 0 || net.output_size() % heads != 0 {
                return Err(NetError::Checkpoint(format!(
                    "output width {} is not a multiple of {heads} heads",
                    net.output_size()
                )));
            }
        }
        Ok(Self { head, net })
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(cur: &mut &[u8], buf: &mut [u8]) -> Result<(), NetError> {
    cur.read_exact(buf).map_err(|_| NetError::Checkpoint("truncated header".into()))
}

fn read_u32(cur: &mut &[u8]) -> Result<u32, NetError> {
    let mut b = [0u8; 4];
    read_exact(cur, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(cur: &mut &[u8]) -> Result<u64, NetError> {
    let mut b = [0u8; 8];
    read_exact(cur, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
