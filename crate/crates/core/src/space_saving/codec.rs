//! Binary wire format for summaries.
//!
//! Little-endian, fixed width:
//!
//! ```text
//! u8  mode (0 = weighted, 1 = unitary)
//! u64 capacity m
//! u64 total N
//! u64 residual
//! u64 counter count
//! counter count x { item bytes, u64 count, u64 error }   (eviction order)
//! ```

use std::hash::Hash;

use smallvec::SmallVec;

use super::{Counter, SpaceSaving, UpdateMode};
use crate::error::{Error, Result};
use crate::lattice::{Label, Prefix};

/// Fixed-width binary encoding of summary items.
pub trait ItemCodec: Sized {
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(input: &mut &[u8]) -> Result<Self>;
}

fn take<const N: usize>(input: &mut &[u8]) -> Result<[u8; N]> {
    if input.len() < N {
        return Err(Error::Codec("unexpected end of input".into()));
    }
    let (head, rest) = input.split_at(N);
    *input = rest;
    Ok(head.try_into().expect("split length"))
}

pub(crate) fn read_u64(input: &mut &[u8]) -> Result<u64> {
    take::<8>(input).map(u64::from_le_bytes)
}

impl ItemCodec for u32 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn decode(input: &mut &[u8]) -> Result<Self> {
        take::<4>(input).map(u32::from_le_bytes)
    }
}

impl ItemCodec for u64 {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn decode(input: &mut &[u8]) -> Result<Self> {
        read_u64(input)
    }
}

/// `u8 d`, then per dimension `u8 label entry, u32 value`.
impl ItemCodec for Prefix {
    fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.dims() as u8);
        for (&e, &v) in self.label().entries().iter().zip(self.values()) {
            out.push(e);
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn decode(input: &mut &[u8]) -> Result<Self> {
        let [d] = take::<1>(input)?;
        let mut entries = SmallVec::<[u8; 4]>::new();
        let mut values = SmallVec::<[u32; 4]>::new();
        for _ in 0..d {
            let [e] = take::<1>(input)?;
            entries.push(e);
            values.push(u32::decode(input)?);
        }
        Ok(Prefix::from_raw(values, Label(entries)))
    }
}

impl<K: Hash + Eq + Clone + Ord + ItemCodec> SpaceSaving<K> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let counters = self.counters();
        let mut out = Vec::with_capacity(33 + counters.len() * 24);
        out.push(match self.mode() {
            UpdateMode::Weighted => 0,
            UpdateMode::Unitary => 1,
        });
        out.extend_from_slice(&(self.capacity() as u64).to_le_bytes());
        out.extend_from_slice(&self.total().to_le_bytes());
        out.extend_from_slice(&self.residual().to_le_bytes());
        out.extend_from_slice(&(counters.len() as u64).to_le_bytes());
        for c in &counters {
            c.item.encode(&mut out);
            out.extend_from_slice(&c.count.to_le_bytes());
            out.extend_from_slice(&c.error.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut input: &[u8]) -> Result<Self> {
        let input = &mut input;
        let mode = match take::<1>(input)? {
            [0] => UpdateMode::Weighted,
            [1] => UpdateMode::Unitary,
            [m] => return Err(Error::Codec(format!("unknown mode byte {m}"))),
        };
        let capacity = usize::try_from(read_u64(input)?)
            .map_err(|_| Error::Codec("capacity overflow".into()))?;
        let total = read_u64(input)?;
        let residual = read_u64(input)?;
        let n = read_u64(input)?;
        if n > capacity as u64 {
            return Err(Error::Codec(format!("{n} counters exceed capacity {capacity}")));
        }
        let mut counters = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let item = K::decode(input)?;
            let count = read_u64(input)?;
            let error = read_u64(input)?;
            counters.push(Counter { item, count, error });
        }
        if !input.is_empty() {
            return Err(Error::Codec(format!("{} trailing bytes", input.len())));
        }
        Self::from_parts(mode, capacity, total, residual, counters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let mut s = SpaceSaving::<u32>::unitary(2).unwrap();
        s.update(7, 1).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 1 + 8 * 4 + (4 + 8 + 8));
        assert_eq!(bytes[0], 1);
        assert_eq!(&bytes[1..9], &2u64.to_le_bytes());
        assert_eq!(&bytes[9..17], &1u64.to_le_bytes());
        assert_eq!(&bytes[33..37], &7u32.to_le_bytes());
    }

    #[test]
    fn rejects_malformed_input() {
        let s = SpaceSaving::<u32>::weighted(2).unwrap();
        let mut bytes = s.to_bytes();
        bytes.push(0);
        assert!(SpaceSaving::<u32>::from_bytes(&bytes).is_err());
        assert!(SpaceSaving::<u32>::from_bytes(&bytes[..10]).is_err());
        let mut bad_mode = s.to_bytes();
        bad_mode[0] = 9;
        assert!(SpaceSaving::<u32>::from_bytes(&bad_mode).is_err());
    }
}
