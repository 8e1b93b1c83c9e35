//! Dithered modulo-lattice encoder and exact lattice decoder.

use nalgebra::{DMatrix, DVector};

use super::e8::Vec8;
use super::filters::FilterSet;
use super::nested::{mod_lambda, NestedPair};
use super::sphere::SphereDecoder;
use crate::channel::check_alpha1;
use crate::error::{invalid, Result};

fn to_vec8(v: &DVector<f64>) -> Result<Vec8> {
    if v.len() != 8 {
        return Err(invalid("vector", format!("expected 8 real dimensions, got {}", v.len())));
    }
    Ok(Vec8::from_column_slice(v.as_slice()))
}

/// `X = sqrt((1-α₁)P_c)·((c - F_s S - D) mod Λq)` for message codeword `c`.
pub fn encode(
    message_index: u64,
    s: &DVector<f64>,
    dither: &Vec8,
    pair: &NestedPair,
    filters: &FilterSet,
    alpha1: f64,
    p_c: f64,
) -> Result<Vec8> {
    check_alpha1(alpha1)?;
    let cw = pair.codeword(message_index)?;
    let side = to_vec8(&(&filters.fs * s))?;
    Ok(mod_lambda(&(cw - side - dither), &pair.coarse) * ((1.0 - alpha1) * p_c).sqrt())
}

/// Receiver for one realization: whitened search over the fine lattice.
#[derive(Debug, Clone)]
pub struct Decoder {
    search: SphereDecoder,
    pre: DMatrix<f64>,
    l: DMatrix<f64>,
}

impl Decoder {
    pub fn new(filters: &FilterSet, pair: &NestedPair) -> Result<Self> {
        if filters.l.nrows() != 8 {
            return Err(invalid("filters", "lattice decoding needs T = 4"));
        }
        let gc = DMatrix::from_column_slice(8, 8, pair.fine.generator().as_slice());
        let search = SphereDecoder::new(&(&filters.l * gc))?;
        Ok(Decoder { search, pre: &filters.l * &filters.fr, l: filters.l.clone() })
    }

    /// Message index minimizing `|L(F_r Y + D) - L·G_c·b|²` over `b ∈ Z⁸`.
    pub fn decode(&self, y: &DVector<f64>, dither: &Vec8, pair: &NestedPair) -> u64 {
        let d = DVector::from_column_slice(dither.as_slice());
        let y_hat = &self.pre * y + &self.l * d;
        let (b, _) = self.search.decode(&y_hat);
        pair.index_of(&b)
    }
}

pub fn decode(y: &DVector<f64>, filters: &FilterSet, dither: &Vec8, pair: &NestedPair) -> Result<u64> {
    Ok(Decoder::new(filters, pair)?.decode(y, dither, pair))
}
