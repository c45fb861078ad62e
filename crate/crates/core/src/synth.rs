//! Seeded generators for the synthetic diagonal test families.
//!
//! Every `SynthSpec` maps to a fixed output. Randomness comes from ChaCha20 seeded
//! with `seed`, split into independent streams: matrix entries (0), zero
//! positions (1), sign flips (2) and right-hand sides (3).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::DiagonalOperator;

const STREAM_ENTRIES: u64 = 0;
const STREAM_ZEROS: u64 = 1;
const STREAM_FLIPS: u64 = 2;
const STREAM_RHS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Nonzero entries uniform on `(0, 1]`.
    Psd,
    /// Nonzero entries standard normal.
    Indefinite,
    /// As `Psd`, with a tenth of the nonzero entries negated.
    SlightlyIndefinite,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psd" => Ok(Self::Psd),
            "indefinite" => Ok(Self::Indefinite),
            "slightly-indefinite" | "slightly_indefinite" => Ok(Self::SlightlyIndefinite),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub d: usize,
    /// Number of diagonal entries set to zero.
    pub m: usize,
    pub family: Family,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(d: usize, m: usize, family: Family, seed: u64) -> Self {
        Self { d, m, family, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m >= self.d {
            return Err(Error::invalid(format!(
                "need 0 <= m < d, got d = {}, m = {}",
                self.d, self.m
            )));
        }
        Ok(())
    }

    /// Number of negated entries in the slightly indefinite family.
    pub fn flip_count(&self) -> usize {
        (self.d - self.m).div_ceil(10)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform on `(0, 1]`.
fn unit_open_below<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn gen_matrix(spec: &SynthSpec) -> Result<DiagonalOperator> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = stream(spec.seed, STREAM_ENTRIES);
    let mut entries: Vec<f64> = match spec.family {
        Family::Psd | Family::SlightlyIndefinite => {
            (0..d).map(|_| unit_open_below(&mut rng)).collect()
        }
        Family::Indefinite => (0..d).map(|_| rng.sample(StandardNormal)).collect(),
    };
    let mut rng = stream(spec.seed, STREAM_ZEROS);
    for i in index::sample(&mut rng, d, spec.m) {
        entries[i] = 0.0;
    }
    if spec.family == Family::SlightlyIndefinite {
        let nonzero: Vec<usize> = (0..d).filter(|&i| entries[i] != 0.0).collect();
        let mut rng = stream(spec.seed, STREAM_FLIPS);
        for k in index::sample(&mut rng, nonzero.len(), spec.flip_count()) {
            entries[nonzero[k]] = -entries[nonzero[k]];
        }
    }
    Ok(DiagonalOperator::new(entries))
}

/// Standard normal right-hand side.
pub fn gen_rhs(d: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("rhs dimension must be positive"));
    }
    let mut rng = stream(seed, STREAM_RHS);
    Ok((0..d).map(|_| rng.sample(StandardNormal)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{grade, krylov_basis, ortho_decompose, relevant_eigenvalues, DenseMatrix};
    use crate::vector::norm;
    use proptest::prelude::*;

    #[test]
    fn psd_with_zeros() {
        let op = gen_matrix(&SynthSpec::new(10, 5, Family::Psd, 7)).unwrap();
        let e = op.entries();
        assert_eq!(e.iter().filter(|&&v| v == 0.0).count(), 5);
        assert!(e
            .iter()
            .filter(|&&v| v != 0.0)
            .all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn slightly_indefinite_flip_count() {
        for (m, want) in [(90, 1), (80, 2), (60, 4), (20, 8), (1, 10), (0, 10)] {
            let op = gen_matrix(&SynthSpec::new(100, m, Family::SlightlyIndefinite, 11)).unwrap();
            let neg = op.entries().iter().filter(|&&v| v < 0.0).count();
            assert_eq!(neg, want, "m = {m}");
            assert_eq!(op.entries().iter().filter(|&&v| v == 0.0).count(), m);
        }
    }

    #[test]
    fn grades_of_the_instability_family() {
        let b = gen_rhs(100, 3).unwrap();
        for (m, g) in [(90, 11), (80, 21), (60, 41), (20, 81), (1, 100)] {
            let op = gen_matrix(&SynthSpec::new(100, m, Family::Psd, 5)).unwrap();
            let a = DenseMatrix::from_diagonal(op.entries());
            assert_eq!(relevant_eigenvalues(&a, &b).unwrap().len(), g, "m = {m}");
            assert_eq!(grade(&a, &b).unwrap(), g, "m = {m}");
            if g <= 41 || g == 100 {
                assert_eq!(krylov_basis(&a, &b, 100).unwrap().len(), g, "m = {m}");
            }
        }
    }

    #[test]
    fn zeroed_matrix_makes_rhs_inconsistent() {
        let op = gen_matrix(&SynthSpec::new(100, 4, Family::Indefinite, 1)).unwrap();
        let b = gen_rhs(100, 3).unwrap();
        let (_, null) = ortho_decompose(&DenseMatrix::from_diagonal(op.entries()), &b).unwrap();
        assert!(norm(&null) > 0.0);
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(gen_matrix(&SynthSpec::new(3, 3, Family::Psd, 0)).is_err());
        assert!(gen_rhs(0, 0).is_err());
    }

    #[test]
    fn rhs_is_deterministic_and_nonzero() {
        assert_eq!(gen_rhs(3, 1).unwrap(), gen_rhs(3, 1).unwrap());
        assert!(norm(&gen_rhs(10, 2).unwrap()) > 0.0);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SynthSpec::new(10, 2, Family::SlightlyIndefinite, 9);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"slightly-indefinite\""));
        assert_eq!(serde_json::from_str::<SynthSpec>(&json).unwrap(), spec);
    }

    proptest! {
        #[test]
        fn same_spec_same_bits(d in 1usize..60, m_frac in 0.0f64..1.0, seed in any::<u64>(), fam in 0u8..3) {
            let m = ((d as f64) * m_frac) as usize % d;
            let family = [Family::Psd, Family::Indefinite, Family::SlightlyIndefinite][fam as usize];
            let spec = SynthSpec::new(d, m, family, seed);
            let a = gen_matrix(&spec).unwrap();
            let b = gen_matrix(&spec).unwrap();
            prop_assert_eq!(
                a.entries().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.entries().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(a.entries().iter().filter(|&&v| v == 0.0).count(), m);
        }
    }
}
