//! The polar transform x = u·G_N with G_N = B_N F^⊗n, and coset codes.
//!
//! Bits are `u8` values in {0, 1}. Indices are 0-based in the API and
//! 1-based in serialized documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest block length for which [`generator_matrix`] materializes G_N.
pub const GENERATOR_CAP: usize = 4096;

/// log₂ of a power of two, or an error.
pub fn log2_exact(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

fn reverse_index(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// The bit-reversal permutation on 0..N: b₁…b_n ↦ b_n…b₁.
pub fn bit_reversal_permutation(n: usize) -> Result<Vec<usize>> {
    let bits = log2_exact(n)?;
    Ok((0..n).map(|i| reverse_index(i, bits)).collect())
}

fn check_bits(u: &[u8]) -> Result<()> {
    if let Some(b) = u.iter().find(|&&b| b > 1) {
        return Err(Error::Parse(format!("bit value {b} is not 0 or 1")));
    }
    Ok(())
}

/// In-place x = u·B_N·F^⊗n by bit reversal followed by the butterfly.
pub fn encode_in_place(u: &mut [u8]) -> Result<()> {
    let bits = log2_exact(u.len())?;
    let n = u.len();
    for i in 0..n {
        let j = reverse_index(i, bits);
        if i < j {
            u.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        for block in u.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
    Ok(())
}

/// x^N = u^N G_N.
pub fn encode(u: &[u8]) -> Result<Vec<u8>> {
    check_bits(u)?;
    let mut x = u.to_vec();
    encode_in_place(&mut x)?;
    Ok(x)
}

/// G_N as explicit rows; row i is `encode(e_i)`. Capped at N ≤ 4096.
pub fn generator_matrix(n: usize) -> Result<Vec<Vec<u8>>> {
    log2_exact(n)?;
    if n > GENERATOR_CAP {
        return Err(Error::BudgetExceeded {
            what: "generator matrix size",
            required: n as u128,
            limit: GENERATOR_CAP as u128,
        });
    }
    (0..n)
        .map(|i| {
            let mut e = vec![0u8; n];
            e[i] = 1;
            encode(&e)
        })
        .collect()
}

/// The parameter vector (N, K, A, u_{A^c}) of a G_N-coset code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    block_length: usize,
    info_set: Vec<usize>,
    is_info: Vec<bool>,
    /// Frozen values, indexed by position; zero at information positions.
    frozen: Vec<u8>,
}

impl CodeSpec {
    /// `info_set` holds distinct 0-based positions; `frozen` maps every
    /// non-information position to its bit.
    pub fn new(block_length: usize, info_set: Vec<usize>, frozen: &BTreeMap<usize, u8>) -> Result<Self> {
        log2_exact(block_length)?;
        let mut is_info = vec![false; block_length];
        for &i in &info_set {
            if i >= block_length {
                return Err(Error::InvalidCodeSpec(format!("information index {i} out of range")));
            }
            if is_info[i] {
                return Err(Error::InvalidCodeSpec(format!("information index {i} repeated")));
            }
            is_info[i] = true;
        }
        let mut values = vec![0u8; block_length];
        for (i, info) in is_info.iter().enumerate() {
            if *info {
                if frozen.contains_key(&i) {
                    return Err(Error::InvalidCodeSpec(format!("index {i} is both frozen and information")));
                }
                continue;
            }
            let bit = *frozen
                .get(&i)
                .ok_or_else(|| Error::InvalidCodeSpec(format!("frozen bit for index {i} missing")))?;
            if bit > 1 {
                return Err(Error::InvalidCodeSpec(format!("frozen bit {bit} at index {i}")));
            }
            values[i] = bit;
        }
        if let Some(extra) = frozen.keys().find(|&&i| i >= block_length) {
            return Err(Error::InvalidCodeSpec(format!("frozen index {extra} out of range")));
        }
        let mut info_set = info_set;
        info_set.sort_unstable();
        Ok(CodeSpec { block_length, info_set, is_info, frozen: values })
    }

    /// A code with all frozen bits zero.
    pub fn with_zero_frozen(block_length: usize, info_set: Vec<usize>) -> Result<Self> {
        log2_exact(block_length)?;
        let frozen: BTreeMap<usize, u8> = (0..block_length)
            .filter(|i| !info_set.contains(i))
            .map(|i| (i, 0))
            .collect();
        Self::new(block_length, info_set, &frozen)
    }

    /// Same code with a different frozen vector, given over the frozen
    /// positions in increasing order.
    pub fn with_frozen_values(&self, values: &[u8]) -> Result<Self> {
        let frozen_set = self.frozen_set();
        if values.len() != frozen_set.len() {
            return Err(Error::LengthMismatch { expected: frozen_set.len(), actual: values.len() });
        }
        let map: BTreeMap<usize, u8> = frozen_set.into_iter().zip(values.iter().copied()).collect();
        Self::new(self.block_length, self.info_set.clone(), &map)
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn levels(&self) -> u32 {
        self.block_length.trailing_zeros()
    }

    pub fn info_count(&self) -> usize {
        self.info_set.len()
    }

    /// Information positions, ascending, 0-based.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.block_length).filter(|&i| !self.is_info[i]).collect()
    }

    pub fn is_info(&self, i: usize) -> bool {
        self.is_info[i]
    }

    /// Frozen bit at `i` (zero at information positions).
    pub fn frozen_bit(&self, i: usize) -> u8 {
        self.frozen[i]
    }

    /// Frozen values over the frozen positions in increasing order.
    pub fn frozen_values(&self) -> Vec<u8> {
        self.frozen_set().into_iter().map(|i| self.frozen[i]).collect()
    }

    /// Full u^N: information bits at A, frozen bits elsewhere.
    pub fn assemble(&self, info_bits: &[u8]) -> Result<Vec<u8>> {
        if info_bits.len() != self.info_set.len() {
            return Err(Error::LengthMismatch { expected: self.info_set.len(), actual: info_bits.len() });
        }
        check_bits(info_bits)?;
        let mut u = self.frozen.clone();
        for (&pos, &bit) in self.info_set.iter().zip(info_bits) {
            u[pos] = bit;
        }
        Ok(u)
    }

    /// Extracts u_A from a full vector.
    pub fn info_bits_of(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CodeSpecDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CodeSpecDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// x^N = u_A G_N(A) ⊕ u_{A^c} G_N(A^c).
pub fn coset_encode(spec: &CodeSpec, info_bits: &[u8]) -> Result<Vec<u8>> {
    let mut u = spec.assemble(info_bits)?;
    encode_in_place(&mut u)?;
    Ok(u)
}

pub const CODESPEC_SCHEMA: &str = "cqpolar.codespec.v1";

/// Serialized form: `n` is log₂N, indices are 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeSpecDoc {
    pub schema: String,
    pub n: u32,
    #[serde(rename = "N")]
    pub block_length: usize,
    #[serde(rename = "K")]
    pub info_count: usize,
    pub info_set: Vec<usize>,
    pub frozen_bits: BTreeMap<String, u8>,
}

impl From<&CodeSpec> for CodeSpecDoc {
    fn from(spec: &CodeSpec) -> Self {
        CodeSpecDoc {
            schema: CODESPEC_SCHEMA.to_string(),
            n: spec.levels(),
            block_length: spec.block_length,
            info_count: spec.info_count(),
            info_set: spec.info_set.iter().map(|i| i + 1).collect(),
            frozen_bits: spec
                .frozen_set()
                .into_iter()
                .map(|i| ((i + 1).to_string(), spec.frozen[i]))
                .collect(),
        }
    }
}

impl TryFrom<CodeSpecDoc> for CodeSpec {
    type Error = Error;

    fn try_from(doc: CodeSpecDoc) -> Result<Self> {
        if doc.schema != CODESPEC_SCHEMA {
            return Err(Error::InvalidCodeSpec(format!("unsupported schema '{}'", doc.schema)));
        }
        if doc.n >= usize::BITS || 1usize << doc.n != doc.block_length {
            return Err(Error::InvalidCodeSpec(format!("n = {} does not match N = {}", doc.n, doc.block_length)));
        }
        if doc.info_set.len() != doc.info_count {
            return Err(Error::InvalidCodeSpec(format!(
                "K = {} but info_set has {} entries",
                doc.info_count,
                doc.info_set.len()
            )));
        }
        let to_zero_based = |i: usize| -> Result<usize> {
            i.checked_sub(1)
                .ok_or_else(|| Error::InvalidCodeSpec("indices are 1-based".into()))
        };
        let info: Vec<usize> = doc.info_set.iter().map(|&i| to_zero_based(i)).collect::<Result<_>>()?;
        let mut frozen = BTreeMap::new();
        for (k, v) in &doc.frozen_bits {
            let i: usize = k
                .parse()
                .map_err(|_| Error::InvalidCodeSpec(format!("bad frozen index '{k}'")))?;
            frozen.insert(to_zero_based(i)?, *v);
        }
        CodeSpec::new(doc.block_length, info, &frozen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// u·G over GF(2) with explicit rows.
    fn gf2_apply(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
        let n = g[0].len();
        let mut x = vec![0u8; n];
        for (i, &bit) in u.iter().enumerate() {
            if bit == 1 {
                for j in 0..n {
                    x[j] ^= g[i][j];
                }
            }
        }
        x
    }

    #[test]
    fn two_bit_kernel() {
        for (u1, u2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(encode(&[u1, u2]).unwrap(), vec![u1 ^ u2, u2]);
        }
        assert_eq!(generator_matrix(2).unwrap(), vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn four_bit_examples() {
        assert_eq!(encode(&[0, 0, 0, 1]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(encode(&[1, 1, 0, 0]).unwrap(), vec![0, 0, 1, 0]);
        let g4 = vec![vec![1, 0, 0, 0], vec![1, 0, 1, 0], vec![1, 1, 0, 0], vec![1, 1, 1, 1]];
        assert_eq!(generator_matrix(4).unwrap(), g4);
        assert_eq!(gf2_apply(&[1, 1, 0, 0], &g4), vec![0, 0, 1, 0]);
    }

    #[test]
    fn bit_reversal_examples() {
        assert_eq!(bit_reversal_permutation(1).unwrap(), vec![0]);
        assert_eq!(bit_reversal_permutation(2).unwrap(), vec![0, 1]);
        assert_eq!(bit_reversal_permutation(4).unwrap(), vec![0, 2, 1, 3]);
        assert_eq!(bit_reversal_permutation(8).unwrap(), vec![0, 4, 2, 6, 1, 5, 3, 7]);
        let p = bit_reversal_permutation(64).unwrap();
        assert!(p.iter().enumerate().all(|(i, &j)| p[j] == i));
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(matches!(encode(&[0, 1, 0]), Err(Error::NotPowerOfTwo(3))));
        assert!(encode(&[]).is_err());
        assert!(generator_matrix(8192).unwrap_err().is_budget());
        assert!(encode(&[0, 2]).is_err());
    }

    #[test]
    fn g8_is_an_involution() {
        let g = generator_matrix(8).unwrap();
        for (i, row) in g.iter().enumerate() {
            let back = gf2_apply(row, &g);
            let mut e = vec![0u8; 8];
            e[i] = 1;
            assert_eq!(back, e);
        }
    }

    #[test]
    fn coset_examples() {
        let all = CodeSpec::with_zero_frozen(4, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(coset_encode(&all, &[1, 0, 1, 1]).unwrap(), encode(&[1, 0, 1, 1]).unwrap());

        let none = CodeSpec::with_zero_frozen(4, vec![]).unwrap().with_frozen_values(&[1, 0, 1, 0]).unwrap();
        assert_eq!(coset_encode(&none, &[]).unwrap(), encode(&[1, 0, 1, 0]).unwrap());

        let last = CodeSpec::with_zero_frozen(4, vec![3]).unwrap();
        assert_eq!(coset_encode(&last, &[1]).unwrap(), vec![1, 1, 1, 1]);
        assert!(coset_encode(&last, &[1, 0]).is_err());
    }

    #[test]
    fn coset_matches_submatrix_formula() {
        let g = generator_matrix(16).unwrap();
        let info = vec![3, 5, 6, 7, 11, 13, 14, 15];
        let frozen_vals = [1, 0, 1, 1, 0, 0, 1, 0];
        let spec = CodeSpec::with_zero_frozen(16, info.clone()).unwrap().with_frozen_values(&frozen_vals).unwrap();
        let msg = [1, 1, 0, 1, 0, 0, 1, 1];
        let x = coset_encode(&spec, &msg).unwrap();
        let mut expected = vec![0u8; 16];
        for (&i, &b) in info.iter().zip(&msg) {
            if b == 1 {
                for j in 0..16 {
                    expected[j] ^= g[i][j];
                }
            }
        }
        for (&i, &b) in spec.frozen_set().iter().zip(&frozen_vals) {
            if b == 1 {
                for j in 0..16 {
                    expected[j] ^= g[i][j];
                }
            }
        }
        assert_eq!(x, expected);
    }

    #[test]
    fn codespec_json_is_one_based() {
        let spec = CodeSpec::with_zero_frozen(4, vec![2, 3]).unwrap().with_frozen_values(&[0, 1]).unwrap();
        let text = spec.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["info_set"], serde_json::json!([3, 4]));
        assert_eq!(v["frozen_bits"]["2"], 1);
        assert_eq!(v["K"], 2);
        assert_eq!(v["n"], 2);
        assert_eq!(CodeSpec::from_json(&text).unwrap(), spec);
    }

    #[test]
    fn codespec_validation() {
        let missing: BTreeMap<usize, u8> = [(0, 0)].into_iter().collect();
        assert!(CodeSpec::new(4, vec![3], &missing).is_err());
        assert!(CodeSpec::with_zero_frozen(4, vec![1, 1]).is_err());
        assert!(CodeSpec::with_zero_frozen(4, vec![4]).is_err());
        let bad = r#"{"schema":"cqpolar.codespec.v1","n":2,"N":4,"K":1,"info_set":[0],"frozen_bits":{}}"#;
        assert!(CodeSpec::from_json(bad).is_err());
    }
}
