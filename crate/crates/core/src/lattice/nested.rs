//! Lattices in eight real dimensions, modulo reduction and the nested
//! fine/coarse pair used as codebook.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::e8::{e8_closest_point, e8_generator, Mat8, Vec8};
use super::sphere::SphereDecoder;
use crate::error::{invalid, Error, Result};

/// Samples used to calibrate the coarse-cell second moment.
pub const CALIBRATION_SAMPLES: usize = 1_000_000;
const CALIBRATION_SEED: u64 = 0x005e_ede8;

/// `Λ = {G b : b ∈ Z⁸}`.
#[derive(Debug, Clone)]
pub struct Lattice {
    generator: Mat8,
    inverse: Mat8,
    search: Search,
}

#[derive(Debug, Clone)]
enum Search {
    /// `scale · E8`, decoded with the coset construction.
    E8(f64),
    General(SphereDecoder),
}

impl Lattice {
    pub fn e8(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid("scale", "must be finite and positive"));
        }
        let g = e8_generator() * scale;
        let inverse = g.try_inverse().expect("E8 generator is unimodular");
        Ok(Lattice { generator: g, inverse, search: Search::E8(scale) })
    }

    /// Arbitrary full-rank generator, decoded by sphere search.
    pub fn from_generator(g: Mat8) -> Result<Self> {
        let inverse = g
            .try_inverse()
            .filter(|_| g.determinant().abs() > 1e-12 * g.amax().powi(8))
            .ok_or_else(|| Error::Degenerate("generator is singular".into()))?;
        let dec = SphereDecoder::new(&DMatrix::from_column_slice(8, 8, g.as_slice()))?;
        Ok(Lattice { generator: g, inverse, search: Search::General(dec) })
    }

    /// Reads a generator written row by row, whitespace separated, one matrix
    /// row per line; columns are the basis vectors. Blank lines and text after
    /// `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        if rows.len() != 8 || rows.iter().any(|r| r.len() != 8) {
            return Err(Error::Parse("generator must have 8 rows of 8 entries".into()));
        }
        Self::from_generator(Mat8::from_fn(|i, j| rows[i][j]))
    }

    pub fn generator(&self) -> &Mat8 {
        &self.generator
    }

    /// Integer coordinates of a lattice point (rounded).
    pub fn coordinates(&self, x: &Vec8) -> [i64; 8] {
        let b = self.inverse * x;
        std::array::from_fn(|i| b[i].round() as i64)
    }

    pub fn closest_point(&self, x: &Vec8) -> Vec8 {
        match &self.search {
            Search::E8(s) => e8_closest_point(&(x / *s)) * *s,
            Search::General(dec) => {
                let (b, _) = dec.decode(&nalgebra::DVector::from_column_slice(x.as_slice()));
                self.generator * Vec8::from_iterator(b.iter().map(|&v| v as f64))
            }
        }
    }

    pub fn contains(&self, x: &Vec8, tol: f64) -> bool {
        let b = self.inverse * x;
        b.iter().all(|v| (v - v.round()).abs() <= tol)
    }

    /// Uniform point of the Voronoi cell: uniform in the fundamental
    /// parallelepiped, then reduced.
    pub fn sample_voronoi(&self, rng: &mut impl RngCore) -> Vec8 {
        let u = Vec8::from_fn(|_, _| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64));
        mod_lambda(&(self.generator * u), self)
    }
}

/// `x - Q_Λ(x)`, the offset of `x` from its nearest lattice point.
pub fn mod_lambda(x: &Vec8, lattice: &Lattice) -> Vec8 {
    x - lattice.closest_point(x)
}

/// Per-dimension second moment of the Voronoi cell, by Monte Carlo.
pub fn second_moment_mc(lattice: &Lattice, n: usize, seed: u64) -> f64 {
    const CHUNK: usize = 8192;
    let chunks = n.div_ceil(CHUNK);
    let sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = (n - k * CHUNK).min(CHUNK);
            (0..len).map(|_| lattice.sample_voronoi(&mut rng).norm_squared()).sum()
        })
        .collect();
    sums.iter().sum::<f64>() / (8.0 * n as f64)
}

/// Fine lattice `Λc` and coarse lattice `Λq = Q·Λc`, scaled so the coarse
/// cell has the requested per-dimension second moment.
#[derive(Debug, Clone)]
pub struct NestedPair {
    pub fine: Lattice,
    pub coarse: Lattice,
    pub q_nest: u32,
    /// Scale applied to the unit-determinant `E8` to form `Λq`.
    pub coarse_scale: f64,
}

pub fn build_nested(q_nest: u32, target_second_moment: f64) -> Result<NestedPair> {
    build_nested_with(q_nest, target_second_moment, CALIBRATION_SAMPLES)
}

pub fn build_nested_with(q_nest: u32, target_second_moment: f64, samples: usize) -> Result<NestedPair> {
    if q_nest != 2 && q_nest != 4 {
        return Err(invalid("q_nest", format!("nesting factor must be 2 or 4, got {q_nest}")));
    }
    if !(target_second_moment > 0.0) {
        return Err(invalid("target_second_moment", "must be positive"));
    }
    let unit = second_moment_mc(&Lattice::e8(1.0)?, samples, CALIBRATION_SEED);
    let s = (target_second_moment / unit).sqrt();
    Ok(NestedPair {
        fine: Lattice::e8(s / q_nest as f64)?,
        coarse: Lattice::e8(s)?,
        q_nest,
        coarse_scale: s,
    })
}

impl NestedPair {
    /// Bits per complex channel use: `2·log₂ Q` over eight real dimensions.
    pub fn rate(&self) -> f64 {
        2.0 * (self.q_nest as f64).log2()
    }

    pub fn codebook_size(&self) -> u64 {
        (self.q_nest as u64).pow(8)
    }

    /// Base-`Q` digits of the message index.
    pub fn digits(&self, index: u64) -> Result<[i64; 8]> {
        if index >= self.codebook_size() {
            return Err(invalid("message_index", format!("{index} >= codebook size {}", self.codebook_size())));
        }
        let q = self.q_nest as u64;
        Ok(std::array::from_fn(|i| ((index / q.pow(i as u32)) % q) as i64))
    }

    /// Message index of fine-lattice coordinates, reduced modulo `Q`.
    pub fn index_of(&self, b: &[i64]) -> u64 {
        let q = self.q_nest as i64;
        b.iter().rev().fold(0u64, |acc, &v| acc * q as u64 + v.rem_euclid(q) as u64)
    }

    /// Codeword `[G_c b] mod Λq` of a message.
    pub fn codeword(&self, index: u64) -> Result<Vec8> {
        let b = self.digits(index)?;
        let x = self.fine.generator() * Vec8::from_iterator(b.iter().map(|&v| v as f64));
        Ok(mod_lambda(&x, &self.coarse))
    }

    pub fn sample_dither(&self, rng: &mut impl RngCore) -> Vec8 {
        self.coarse.sample_voronoi(rng)
    }
}
