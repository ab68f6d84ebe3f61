//! Counter-based Gaussian increments.
//!
//! Philox4x32-10 keyed by the seed; the counter is
//! `(step, lane, stream_lo, stream_hi)`, so any increment can be regenerated
//! from its coordinates alone.

use crate::scalar::Real;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

/// Philox4x32 with ten rounds.
pub fn philox4x32(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let p0 = u64::from(M0) * u64::from(c[0]);
        let p1 = u64::from(M1) * u64::from(c[2]);
        c = [
            (p1 >> 32) as u32 ^ c[1] ^ k[0],
            p1 as u32,
            (p0 >> 32) as u32 ^ c[3] ^ k[1],
            p0 as u32,
        ];
    }
    c
}

/// Open-interval uniform from 32 random bits.
#[inline]
fn unit(x: u32) -> f64 {
    (f64::from(x) + 0.5) * (1.0 / 4_294_967_296.0)
}

const LANE_NOISE: u32 = 0;
const LANE_UNIFORM: u32 = 1;

/// One trajectory's random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    /// Negates every normal; pairs a path with its antithetic partner.
    pub mirrored: bool,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            seed,
            stream_id,
            mirrored: false,
        }
    }

    fn block(&self, step: u64, lane: u32) -> [u32; 4] {
        let key = [self.seed as u32, (self.seed >> 32) as u32];
        // Steps beyond 2^32 fold the high word into the lane.
        let lane = lane ^ (((step >> 32) as u32) << 8);
        philox4x32(
            [step as u32, lane, self.stream_id as u32, (self.stream_id >> 32) as u32],
            key,
        )
    }

    /// Four independent standard normals for the step whose lower time index is `step`.
    pub fn normals<F: Real>(&self, step: u64) -> [F; 4] {
        let b = self.block(step, LANE_NOISE);
        let mut out = [F::zero(); 4];
        for pair in 0..2 {
            let u1 = unit(b[2 * pair]);
            let u2 = unit(b[2 * pair + 1]);
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            let sign = if self.mirrored { -1.0 } else { 1.0 };
            out[2 * pair] = F::lit(sign * r * c);
            out[2 * pair + 1] = F::lit(sign * r * s);
        }
        out
    }

    /// A uniform on (0, 1) for the step whose lower time index is `step`,
    /// independent of [`RngStream::normals`].
    pub fn uniform(&self, step: u64) -> f64 {
        unit(self.block(step, LANE_UNIFORM)[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_answer_vectors() {
        assert_eq!(philox4x32([0; 4], [0; 2]), [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]);
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]
        );
        assert_eq!(
            philox4x32([0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344], [0xa4093822, 0x299f31d0]),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn normals_have_unit_moments() {
        let r = RngStream::new(7, 3);
        let n = 50_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for k in 0..n {
            for z in r.normals::<f64>(k) {
                s1 += z;
                s2 += z * z;
            }
        }
        let m = 4.0 * n as f64;
        assert!((s1 / m).abs() < 0.01);
        assert!((s2 / m - 1.0).abs() < 0.01);
    }

    #[test]
    fn streams_and_lanes_differ() {
        let a = RngStream::new(1, 0);
        let b = RngStream::new(1, 1);
        assert_ne!(a.normals::<f64>(0), b.normals::<f64>(0));
        assert_ne!(a.normals::<f64>(0), a.normals::<f64>(1));
        let mut m = a;
        m.mirrored = true;
        let (x, y) = (a.normals::<f64>(5), m.normals::<f64>(5));
        assert!(x.iter().zip(&y).all(|(p, q)| *p == -*q));
    }
}
