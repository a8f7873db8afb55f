//! Joint known-plaintext attack on the whole seed ensemble.
//!
//! For a fixed plaintext every seed induces a product of coherent states,
//! one per slot. Eve's task is to tell these `N = 2^|K|` states apart. The
//! square-root measurement gives a realizable error probability computed
//! from their Gram matrix alone, and so an upper bound on the optimum.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::SearchGuard;
use crate::constellation::{map_index, PhaseAngle, SystemParams};
use crate::error::{invalid, Error, Result};
use crate::keystream::{KeystreamSymbol, LfsrSpec, Register};
use crate::measurement::overlap_exponent;
use crate::receiver::{draw_plaintext, PlaintextPolicy};

const HARD_LIMIT_BITS: usize = 14;
/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;
/// Negative eigenvalues beyond this fraction of the largest are reported.
pub const PSD_TOLERANCE: f64 = 1e-9;

const DUMP_MAGIC: &[u8; 8] = b"AEGRAM1\0";

/// Overlaps `⟨ψ_k|ψ_k'⟩` of the seed states, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    dim: usize,
    data: Vec<Complex64>,
    big_m: u32,
    energy: f64,
    slots: usize,
}

impl GramMatrix {
    /// Gram matrix of the product states with the given per-slot angles.
    pub fn from_angle_sequences(sequences: &[Vec<PhaseAngle>], params: &SystemParams) -> Result<Self> {
        let slots = sequences.first().map_or(0, Vec::len);
        if sequences.iter().any(|s| s.len() != slots) {
            return invalid("all angle sequences must have the same length");
        }
        let dim = sequences.len();
        let mut data = vec![Complex64::new(1.0, 0.0); dim * dim];
        for k in 0..dim {
            for j in k + 1..dim {
                let exponent: Complex64 = sequences[k]
                    .iter()
                    .zip(&sequences[j])
                    .map(|(a, b)| overlap_exponent(b.radians() - a.radians(), params.energy()))
                    .sum();
                let v = exponent.exp();
                data[k * dim + j] = v;
                data[j * dim + k] = v.conj();
            }
        }
        Ok(Self {
            dim,
            data,
            big_m: params.big_m(),
            energy: params.energy(),
            slots,
        })
    }

    /// Wraps raw entries; see [`Self::check`] for validation.
    pub fn from_entries(dim: usize, data: Vec<Complex64>, params: &SystemParams, slots: usize) -> Result<Self> {
        if data.len() != dim * dim {
            return invalid(format!("{} entries do not form a {dim}×{dim} matrix", data.len()));
        }
        Ok(Self {
            dim,
            data,
            big_m: params.big_m(),
            energy: params.energy(),
            slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn entry(&self, k: usize, j: usize) -> Complex64 {
        self.data[k * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest `|G_kj - conj(G_jk)|` and `|G_kk - 1|`.
    pub fn defects(&self) -> (f64, f64) {
        let mut herm: f64 = 0.0;
        let mut diag: f64 = 0.0;
        for k in 0..self.dim {
            diag = diag.max((self.entry(k, k) - 1.0).norm());
            for j in k + 1..self.dim {
                herm = herm.max((self.entry(k, j) - self.entry(j, k).conj()).norm());
            }
        }
        (herm, diag)
    }

    /// Hermitian and unit-diagonal within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let (herm, diag) = self.defects();
        if herm > tol || diag > tol {
            return Err(Error::Numerical(format!(
                "Gram matrix defects: hermiticity {herm:e}, diagonal {diag:e} (tolerance {tol:e})"
            )));
        }
        Ok(())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Binary dump, all fields little-endian:
    /// magic `AEGRAM1\0`, `N: u64`, `M: u32`, `S: f64`, `n: u64`, then
    /// `N·N` entries row-major as `(re: f64, im: f64)`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        out.write_all(&self.big_m.to_le_bytes())?;
        out.write_all(&self.energy.to_le_bytes())?;
        out.write_all(&(self.slots as u64).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::InvalidArgument(format!("Gram dump: {e}"));
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != DUMP_MAGIC {
            return invalid("Gram dump: bad magic");
        }
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b8).map_err(io)?;
        let dim = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b4).map_err(io)?;
        let big_m = u32::from_le_bytes(b4);
        input.read_exact(&mut b8).map_err(io)?;
        let energy = f64::from_le_bytes(b8);
        input.read_exact(&mut b8).map_err(io)?;
        let slots = u64::from_le_bytes(b8) as usize;
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            input.read_exact(&mut b8).map_err(io)?;
            let re = f64::from_le_bytes(b8);
            input.read_exact(&mut b8).map_err(io)?;
            data.push(Complex64::new(re, f64::from_le_bytes(b8)));
        }
        Ok(Self {
            dim,
            data,
            big_m,
            energy,
            slots,
        })
    }
}

/// Accumulates `ln G` slot by slot for a fixed seed ensemble.
struct GramBuilder {
    dim: usize,
    grid: u32,
    /// `ln` overlap for each index difference `0..2M`.
    table: Vec<Complex64>,
    log: Vec<Complex64>,
    slots: usize,
}

impl GramBuilder {
    fn new(dim: usize, params: &SystemParams) -> Self {
        let grid = params.grid_size();
        let step = std::f64::consts::PI / f64::from(params.big_m());
        Self {
            dim,
            grid,
            table: (0..grid).map(|d| overlap_exponent(f64::from(d) * step, params.energy())).collect(),
            log: vec![Complex64::new(0.0, 0.0); dim * dim],
            slots: 0,
        }
    }

    /// `indices[k]` is seed `k`'s angle index in the new slot.
    fn push_slot(&mut self, indices: &[u32]) {
        let (grid, table) = (self.grid, &self.table);
        self.log.par_chunks_mut(self.dim).enumerate().for_each(|(k, row)| {
            let lk = indices[k];
            for (cell, &lj) in row.iter_mut().zip(indices) {
                *cell += table[((lj + grid - lk) % grid) as usize];
            }
        });
        self.slots += 1;
    }

    fn gram(&self, params: &SystemParams) -> GramMatrix {
        let mut data: Vec<Complex64> = self.log.par_iter().map(|v| v.exp()).collect();
        for k in 0..self.dim {
            data[k * self.dim + k] = Complex64::new(1.0, 0.0);
        }
        GramMatrix {
            dim: self.dim,
            data,
            big_m: params.big_m(),
            energy: params.energy(),
            slots: self.slots,
        }
    }
}

/// Per-seed angle indices for every slot: `out[i][k]` for slot `i`, seed `k`.
fn ensemble_indices(plaintext: &[bool], spec: &LfsrSpec, params: &SystemParams, guard: SearchGuard) -> Result<Vec<Vec<u32>>> {
    let key_bits = spec.length();
    guard.check(key_bits, HARD_LIMIT_BITS, "joint attack")?;
    let m = params.bits_per_symbol()?;
    let n_seeds = 1usize << key_bits;
    let mut out = vec![vec![0u32; n_seeds]; plaintext.len()];
    #[allow(clippy::needless_range_loop)]
    for seed in 0..n_seeds {
        let mut reg = Register::new(spec, seed as u64);
        for (i, &x) in plaintext.iter().enumerate() {
            let z = KeystreamSymbol::new_unchecked(reg.next_symbol(m));
            out[i][seed] = map_index(x, z, params)?.value();
        }
    }
    Ok(out)
}

/// Gram matrix over all `2^|K|` seeds (seed `k` packed as in
/// [`crate::keystream::SeedKey::from_u64`]) for the given plaintext.
pub fn build_gram(plaintext: &[bool], spec: &LfsrSpec, params: &SystemParams, guard: SearchGuard) -> Result<GramMatrix> {
    let indices = ensemble_indices(plaintext, spec, params, guard)?;
    let mut builder = GramBuilder::new(1 << spec.length(), params);
    for slot in &indices {
        builder.push_slot(slot);
    }
    Ok(builder.gram(params))
}

/// Average error of the square-root measurement on equiprobable states:
/// `1 - (1/N) Σ_k ((√G)_kk)²`, with `√G` from the Hermitian
/// eigendecomposition and eigenvalues below [`EIGEN_CLAMP`]`·λ_max` set to 0.
pub fn srm_error(gram: &GramMatrix) -> Result<f64> {
    let n = gram.dim();
    if n == 0 {
        return invalid("empty Gram matrix");
    }
    let eig = SymmetricEigen::new(gram.to_matrix());
    let lambda_max = eig.eigenvalues.max();
    let lambda_min = eig.eigenvalues.min();
    if !(lambda_max > 0.0) || lambda_min < -PSD_TOLERANCE * lambda_max {
        return Err(Error::Numerical(format!(
            "Gram matrix is not positive semidefinite: λ_min = {lambda_min:e}, λ_max = {lambda_max:e}, N = {n}"
        )));
    }
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l < EIGEN_CLAMP * lambda_max { 0.0 } else { l.sqrt() })
        .collect();
    let vectors = &eig.eigenvectors;
    let correct: f64 = (0..n)
        .map(|k| {
            let d: f64 = (0..n).map(|j| vectors[(k, j)].norm_sqr() * roots[j]).sum();
            d * d
        })
        .sum();
    Ok((1.0 - correct / n as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeRow {
    pub n: usize,
    pub pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeCurve {
    pub key_bits: usize,
    pub taps: Vec<usize>,
    pub big_m: u32,
    pub energy: f64,
    pub plaintext: PlaintextPolicy,
    pub rows: Vec<PeRow>,
}

/// SRM error at each data length, extending one plaintext and keystream.
/// `n = 0` is answered in closed form: all states coincide, `1 - 1/N`.
pub fn pe_vs_n<R: Rng + ?Sized>(
    spec: &LfsrSpec,
    params: &SystemParams,
    n_values: &[usize],
    plaintext: PlaintextPolicy,
    guard: SearchGuard,
    rng: &mut R,
) -> Result<PeCurve> {
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let n_max = ns.last().copied().unwrap_or(0);
    let bits = draw_plaintext(plaintext, n_max, rng);
    let indices = ensemble_indices(&bits, spec, params, guard)?;
    let dim = 1usize << spec.length();
    let mut builder = GramBuilder::new(dim, params);
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        while builder.slots < n {
            builder.push_slot(&indices[builder.slots]);
        }
        let pe = if n == 0 {
            1.0 - 1.0 / dim as f64
        } else {
            srm_error(&builder.gram(params))?
        };
        rows.push(PeRow { n, pe });
    }
    Ok(PeCurve {
        key_bits: spec.length(),
        taps: spec.taps().to_vec(),
        big_m: params.big_m(),
        energy: params.energy(),
        plaintext,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{coherent_overlap, helstrom_binary_error};
    use crate::rng::stream;

    fn angles(params: &SystemParams, idx: &[u32]) -> Vec<PhaseAngle> {
        idx.iter()
            .map(|&l| PhaseAngle::new(f64::from(l) * std::f64::consts::PI / f64::from(params.big_m())))
            .collect()
    }

    /// `A^{1/2}` by the Denman–Beavers iteration, which needs only inverses.
    fn sqrtm_denman_beavers(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut y = a.clone();
        let mut z = DMatrix::<Complex64>::identity(a.nrows(), a.ncols());
        for _ in 0..100 {
            let yi = y.clone().try_inverse().unwrap();
            let zi = z.clone().try_inverse().unwrap();
            let half = Complex64::new(0.5, 0.0);
            let (ny, nz) = ((&y + zi) * half, (&z + yi) * half);
            let done = (&ny - &y).norm() < 1e-15;
            y = ny;
            z = nz;
            if done {
                break;
            }
        }
        y
    }

    #[test]
    fn empty_plaintext_gives_all_ones() {
        let p = SystemParams::new(4, 2.0).unwrap();
        let g = build_gram(&[], &LfsrSpec::primitive(3).unwrap(), &p, SearchGuard::JOINT).unwrap();
        assert_eq!(g.dim(), 8);
        assert!(g.entries().iter().all(|&v| v == Complex64::new(1.0, 0.0)));
        assert!((srm_error(&g).unwrap() - 7.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn single_slot_two_states() {
        let p = SystemParams::new(8, 1.7).unwrap();
        let g = GramMatrix::from_angle_sequences(&[angles(&p, &[3]), angles(&p, &[11])], &p).unwrap();
        let delta = 8.0 * std::f64::consts::PI / 8.0;
        let expect = (Complex64::new(-1.7, 0.0) + Complex64::new(0.0, delta).exp() * 1.7).exp();
        assert!((g.entry(0, 1) - expect).norm() < 1e-15);
        assert!((g.entry(1, 0) - expect.conj()).norm() < 1e-15);
    }

    #[test]
    fn identity_and_identical_states() {
        let p = SystemParams::new(4, 1.0).unwrap();
        let mut id = vec![Complex64::new(0.0, 0.0); 9];
        for k in 0..3 {
            id[k * 4] = Complex64::new(1.0, 0.0);
        }
        let g = GramMatrix::from_entries(3, id, &p, 1).unwrap();
        assert!(srm_error(&g).unwrap() < 1e-15);
        let ones = GramMatrix::from_entries(2, vec![Complex64::new(1.0, 0.0); 4], &p, 1).unwrap();
        assert!((srm_error(&ones).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn binary_srm_is_helstrom() {
        for s in [0.1, 1.0, 10.0] {
            let p = SystemParams::new(2, s).unwrap();
            let g = GramMatrix::from_angle_sequences(&[angles(&p, &[0]), angles(&p, &[2])], &p).unwrap();
            assert!((srm_error(&g).unwrap() - helstrom_binary_error(&p)).abs() < 1e-10, "S = {s}");
        }
    }

    /// Real off-diagonal `s`: `½(1 - √(1 - s²))`.
    #[test]
    fn binary_srm_closed_form() {
        let p = SystemParams::new(2, 1.0).unwrap();
        for s in [0.0, 0.3, 0.9, 0.999] {
            let c = Complex64::new(s, 0.0);
            let one = Complex64::new(1.0, 0.0);
            let g = GramMatrix::from_entries(2, vec![one, c, c, one], &p, 1).unwrap();
            let expect = 0.5 * (1.0 - (1.0 - s * s).sqrt());
            assert!((srm_error(&g).unwrap() - expect).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn four_states_against_denman_beavers() {
        let p = SystemParams::new(4, 0.8).unwrap();
        let spec = LfsrSpec::primitive(2).unwrap();
        for x in [false, true] {
            let g = build_gram(&[x], &spec, &p, SearchGuard::JOINT).unwrap();
            // independent construction of the same matrix
            let mut idx = Vec::new();
            for seed in 0..4u64 {
                let sk = crate::SeedKey::from_u64(seed, 2).unwrap();
                let z = crate::keystream::keystream_symbols(&spec, &sk, 4, 1).unwrap()[0];
                idx.push(map_index(x, z, &p).unwrap().angle(&p));
            }
            for k in 0..4 {
                for j in 0..4 {
                    let expect = if k == j { Complex64::new(1.0, 0.0) } else { coherent_overlap(idx[k], idx[j], &p) };
                    assert!((g.entry(k, j) - expect).norm() < 1e-14);
                }
            }
            let root = sqrtm_denman_beavers(&g.to_matrix());
            let expect = 1.0 - (0..4).map(|k| root[(k, k)].re.powi(2)).sum::<f64>() / 4.0;
            assert!((srm_error(&g).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn gram_properties_and_permutation_invariance() {
        let p = SystemParams::new(16, 2.0).unwrap();
        let spec = LfsrSpec::primitive(5).unwrap();
        let pt = draw_plaintext(PlaintextPolicy::Random, 6, &mut stream(1, "joint-test", 0));
        let g = build_gram(&pt, &spec, &p, SearchGuard::JOINT).unwrap();
        g.check(1e-12).unwrap();
        assert!(g.eigenvalues()[0] > -1e-12);
        let pe = srm_error(&g).unwrap();

        let n = g.dim();
        let perm: Vec<usize> = (0..n).map(|k| (k * 7 + 3) % n).collect();
        let data = (0..n * n).map(|i| g.entry(perm[i / n], perm[i % n])).collect();
        let permuted = GramMatrix::from_entries(n, data, &p, g.slots()).unwrap();
        assert!((srm_error(&permuted).unwrap() - pe).abs() < 1e-10);
    }

    #[test]
    fn duplicate_states_bound_the_error() {
        let p = SystemParams::new(8, 3.0).unwrap();
        let base = [angles(&p, &[0, 5, 9]), angles(&p, &[2, 2, 2]), angles(&p, &[7, 1, 12])];
        let seqs = vec![base[0].clone(), base[1].clone(), base[0].clone(), base[2].clone(), base[0].clone()];
        let g = GramMatrix::from_angle_sequences(&seqs, &p).unwrap();
        let eig = g.eigenvalues();
        assert!(eig[0].abs() < 1e-12 && eig[1].abs() < 1e-12, "{eig:?}");
        assert!(srm_error(&g).unwrap() >= 2.0 / 5.0 - 1e-12);
    }

    #[test]
    fn rejects_indefinite_input() {
        let p = SystemParams::new(2, 1.0).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let c = Complex64::new(1.5, 0.0);
        let g = GramMatrix::from_entries(2, vec![one, c, c, one], &p, 1).unwrap();
        assert!(matches!(srm_error(&g), Err(Error::Numerical(_))));
    }

    #[test]
    fn guard() {
        let p = SystemParams::new(4, 1.0).unwrap();
        let spec = LfsrSpec::primitive(13).unwrap();
        assert!(matches!(build_gram(&[true], &spec, &p, SearchGuard::JOINT), Err(Error::Guard(_))));
        let over = SearchGuard { allow_override: true, ..SearchGuard::JOINT };
        assert!(matches!(build_gram(&[true], &LfsrSpec::primitive(15).unwrap(), &p, over), Err(Error::Guard(_))));
    }

    #[test]
    fn curve_starts_uniform_and_decays() {
        let p = SystemParams::new(16, 4.0).unwrap();
        let spec = LfsrSpec::primitive(6).unwrap();
        let ns = [0, 1, 2, 4, 8, 16, 32, 64];
        let curve = pe_vs_n(&spec, &p, &ns, PlaintextPolicy::AllZeros, SearchGuard::JOINT, &mut stream(2, "joint-test", 0)).unwrap();
        assert_eq!(curve.rows[0].pe, 1.0 - 1.0 / 64.0);
        for w in curve.rows.windows(2) {
            assert!(w[1].pe <= w[0].pe + 1e-9, "{:?}", curve.rows);
        }
        assert!(curve.rows.last().unwrap().pe < 1e-3);
    }

    #[test]
    fn incremental_curve_matches_direct_build() {
        let p = SystemParams::new(8, 1.5).unwrap();
        let spec = LfsrSpec::primitive(4).unwrap();
        let curve = pe_vs_n(&spec, &p, &[5], PlaintextPolicy::Random, SearchGuard::JOINT, &mut stream(3, "joint-test", 0)).unwrap();
        let pt = draw_plaintext(PlaintextPolicy::Random, 5, &mut stream(3, "joint-test", 0));
        let g = build_gram(&pt, &spec, &p, SearchGuard::JOINT).unwrap();
        assert!((srm_error(&g).unwrap() - curve.rows[0].pe).abs() < 1e-12);
    }

    #[test]
    fn binary_dump_round_trip() {
        let p = SystemParams::new(8, 1.5).unwrap();
        let g = build_gram(&[true, false, true], &LfsrSpec::primitive(3).unwrap(), &p, SearchGuard::JOINT).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 4 + 8 + 8 + 64 * 16);
        assert_eq!(GramMatrix::read_binary(buf.as_slice()).unwrap(), g);
        buf[0] = b'X';
        assert!(GramMatrix::read_binary(buf.as_slice()).is_err());
    }
}
