//! Binary checkpoints of long runs.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                         |
//! |-------:|-----:|-----------------------------------------------|
//! | 0      | 8    | magic `b"POLXCKPT"`                           |
//! | 8      | 4    | format version (`u32`, currently 1)           |
//! | 12     | 8    | `N_a` (`u64`)                                 |
//! | 20     | 8    | `N_b` (`u64`)                                 |
//! | 28     | 1    | basis: 0 plane, 1 circular                    |
//! | 29     | 1    | block flag: 0 full space, 1 `m_a + m_b` block |
//! | 30     | 8    | `2 (m_a + m_b)` of the block (`i64`, else 0)  |
//! | 38     | 8    | θ (`f64`)                                     |
//! | 46     | 8    | t (`f64`)                                     |
//! | 54     | 8    | amplitude count `L` (`u64`)                   |
//! | 62     | 16 L | amplitudes as interleaved `re, im` (`f64`)    |
//!
//! Full-space amplitudes use the row-major `k_a * (N_b + 1) + k_b` order;
//! block amplitudes follow ascending `k_a`.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::coupling::Basis;
use crate::error::{Error, Result};
use crate::spinspace::BeamSize;

pub const MAGIC: &[u8; 8] = b"POLXCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub n_a: BeamSize,
    pub n_b: BeamSize,
    pub basis: Basis,
    pub theta: f64,
    pub t: f64,
    /// `Some(2 (m_a + m_b))` for block states.
    pub block: Option<i64>,
    pub amplitudes: Vec<C64>,
}

impl Checkpoint {
    fn expected_len(&self) -> Result<usize> {
        let (na, nb) = (self.n_a.photons(), self.n_b.photons());
        match self.block {
            None => Ok(self.n_a.dim() * self.n_b.dim()),
            Some(two_m) => {
                let twice_k = two_m + (na + nb) as i64;
                if twice_k < 0 || twice_k % 2 != 0 || twice_k / 2 > (na + nb) as i64 {
                    return Err(Error::Checkpoint(format!("block 2m = {two_m} not reachable")));
                }
                let k = (twice_k / 2) as usize;
                Ok((0..=na).filter(|&ka| k >= ka && k - ka <= nb).count())
            }
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        if self.amplitudes.len() != self.expected_len()? {
            return Err(Error::Checkpoint("amplitude count does not match the header".into()));
        }
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_a.photons() as u64).to_le_bytes())?;
        w.write_all(&(self.n_b.photons() as u64).to_le_bytes())?;
        let basis = match self.basis {
            Basis::Plane => 0u8,
            Basis::Circular => 1u8,
        };
        w.write_all(&[basis, self.block.is_some() as u8])?;
        w.write_all(&self.block.unwrap_or(0).to_le_bytes())?;
        w.write_all(&self.theta.to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&(self.amplitudes.len() as u64).to_le_bytes())?;
        for a in &self.amplitudes {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n_a = BeamSize::new(u64::from_le_bytes(read_array(&mut r)?) as usize)?;
        let n_b = BeamSize::new(u64::from_le_bytes(read_array(&mut r)?) as usize)?;
        let [basis, flag] = read_array::<2, _>(&mut r)?;
        let basis = match basis {
            0 => Basis::Plane,
            1 => Basis::Circular,
            b => return Err(Error::Checkpoint(format!("unknown basis tag {b}"))),
        };
        let two_m = i64::from_le_bytes(read_array(&mut r)?);
        let block = match flag {
            0 => None,
            1 => Some(two_m),
            f => return Err(Error::Checkpoint(format!("unknown block flag {f}"))),
        };
        let theta = f64::from_le_bytes(read_array(&mut r)?);
        let t = f64::from_le_bytes(read_array(&mut r)?);
        let len = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut ckpt = Self { n_a, n_b, basis, theta, t, block, amplitudes: Vec::new() };
        if len != ckpt.expected_len()? {
            return Err(Error::Checkpoint(format!("amplitude count {len} does not match the header")));
        }
        ckpt.amplitudes = (0..len)
            .map(|_| {
                let re = f64::from_le_bytes(read_array(&mut r)?);
                let im = f64::from_le_bytes(read_array(&mut r)?);
                Ok(C64::new(re, im))
            })
            .collect::<Result<_>>()?;
        Ok(ckpt)
    }
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(block: Option<i64>) -> Checkpoint {
        let n_a = BeamSize::new(3).unwrap();
        let n_b = BeamSize::new(2).unwrap();
        let len = if block.is_some() { 3 } else { 12 };
        Checkpoint {
            n_a,
            n_b,
            basis: Basis::Circular,
            theta: 0.25,
            t: 1.5,
            block,
            amplitudes: (0..len).map(|k| C64::new(k as f64, -0.5 * k as f64)).collect(),
        }
    }

    #[test]
    fn round_trip_full_and_block() {
        for block in [None, Some(1)] {
            let c = sample(block);
            let mut buf = Vec::new();
            c.write_to(&mut buf).unwrap();
            assert_eq!(buf.len(), 62 + 16 * c.amplitudes.len());
            assert_eq!(Checkpoint::read_from(&buf[..]).unwrap(), c);
        }
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        sample(Some(1)).write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..8], b"POLXCKPT");
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 3);
        assert_eq!(buf[28], 1);
        assert_eq!(buf[29], 1);
        assert_eq!(i64::from_le_bytes(buf[30..38].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[46..54].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[78..86].try_into().unwrap()), 1.0);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        sample(None).write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&bad[..]), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::read_from(&buf[..buf.len() - 1]).is_err());
        let mut wrong = sample(None);
        wrong.amplitudes.pop();
        assert!(wrong.write_to(Vec::new()).is_err());
    }
}
