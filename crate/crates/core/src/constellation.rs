//! The mapper: (data bit, keystream symbol) to a point on the 2M-phase circle.
//!
//! Grid point `l ∈ [0, 2M)` sits at angle `lπ/M`. Symbol `z` selects the
//! basis `{z, z + M}`, and the bit is placed with the parity flip
//! `l = z + M·(x ⊕ pol(z))`, so neighbouring bases carry interleaved labels.
//! Exact logic works on integer indices; real angles only appear at the
//! measurement boundary.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::keystream::{bits_per_symbol, KeystreamSymbol};

/// Constellation size `M` and signal energy `S = α²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    big_m: u32,
    energy: f64,
}

impl SystemParams {
    /// Any `M ≥ 2` is accepted here; operations that chunk a running key
    /// into symbols additionally require `M` to be a power of two.
    pub fn new(big_m: u32, energy: f64) -> Result<Self> {
        if big_m < 2 {
            return invalid(format!("M must be at least 2, got {big_m}"));
        }
        if !(energy >= 0.0 && energy.is_finite()) {
            return invalid(format!("signal energy must be finite and >= 0, got {energy}"));
        }
        Ok(Self { big_m, energy })
    }

    pub fn big_m(&self) -> u32 {
        self.big_m
    }

    /// `m = log2(M)`; errors for non-power-of-two `M`.
    pub fn bits_per_symbol(&self) -> Result<u32> {
        bits_per_symbol(self.big_m)
    }

    /// Mean photon number `S`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn alpha(&self) -> f64 {
        self.energy.sqrt()
    }

    /// Number of grid points, `2M`.
    pub fn grid_size(&self) -> u32 {
        2 * self.big_m
    }

    pub fn symbol(&self, value: u32) -> Result<KeystreamSymbol> {
        KeystreamSymbol::new(value, self.big_m)
    }
}

/// A phase wrapped into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub fn new(radians: f64) -> Self {
        let wrapped = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        Self(if wrapped >= TAU { 0.0 } else { wrapped })
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Integer position `l` on the `2M` grid, angle `lπ/M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AngleIndex(u32);

impl AngleIndex {
    pub fn new(l: u32, params: &SystemParams) -> Result<Self> {
        if l >= params.grid_size() {
            return invalid(format!("angle index {l} not below 2M = {}", params.grid_size()));
        }
        Ok(Self(l))
    }

    pub(crate) fn new_unchecked(l: u32) -> Self {
        Self(l)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn angle(self, params: &SystemParams) -> PhaseAngle {
        PhaseAngle::new(f64::from(self.0) * PI / f64::from(params.big_m))
    }
}

/// Parity of the keystream symbol.
pub fn pol(z: KeystreamSymbol) -> bool {
    z.value() & 1 == 1
}

/// Grid index of bit `x` in basis `z`.
pub fn map_index(x: bool, z: KeystreamSymbol, params: &SystemParams) -> Result<AngleIndex> {
    if z.value() >= params.big_m {
        return invalid(format!("symbol {} not below M = {}", z.value(), params.big_m));
    }
    Ok(AngleIndex(z.value() + params.big_m * u32::from(x ^ pol(z))))
}

/// `θ(x, z) = [z/M + (x ⊕ pol(z))]·π`, with its grid index.
pub fn map_angle(x: bool, z: KeystreamSymbol, params: &SystemParams) -> Result<(PhaseAngle, AngleIndex)> {
    let l = map_index(x, z, params)?;
    Ok((l.angle(params), l))
}

/// Recovers the bit from a grid index known to lie on basis `z`.
pub fn demap_bit(z: KeystreamSymbol, l: AngleIndex, params: &SystemParams) -> Result<bool> {
    let big_m = params.big_m;
    if l.0 >= params.grid_size() || l.0 % big_m != z.value() {
        return invalid(format!("angle index {} is not on basis {}", l.0, z.value()));
    }
    Ok((l.0 / big_m == 1) ^ pol(z))
}

/// The data bit carried by grid point `l`, whatever the basis.
pub fn bit_at_index(l: AngleIndex, params: &SystemParams) -> bool {
    (l.0 / params.big_m == 1) ^ (l.0 & 1 == 1)
}

/// One row of a constellation dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationPoint {
    pub index: u32,
    pub angle_radians: f64,
    pub bit: u8,
    pub basis: u32,
}

pub fn constellation_points(params: &SystemParams) -> Vec<ConstellationPoint> {
    (0..params.grid_size())
        .map(|l| {
            let idx = AngleIndex(l);
            ConstellationPoint {
                index: l,
                angle_radians: idx.angle(params).radians(),
                bit: u8::from(bit_at_index(idx, params)),
                basis: l % params.big_m,
            }
        })
        .collect()
}
