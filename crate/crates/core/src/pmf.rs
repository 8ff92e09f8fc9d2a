//! Finite probability mass tables with an explicit bound on omitted mass.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::sum::compensated_sum;

/// Masses on `support_offset, support_offset + 1, ...` plus a proven upper
/// bound on the probability that falls outside the listed entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable {
    pub support_offset: u64,
    pub masses: Vec<f64>,
    pub tail_mass_bound: f64,
}

impl PmfTable {
    pub fn point_mass(at: u64) -> Self {
        PmfTable {
            support_offset: at,
            masses: vec![1.0],
            tail_mass_bound: 0.0,
        }
    }

    /// Empirical table from value counts.
    pub fn from_counts(counts: &BTreeMap<u64, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let (Some((&lo, _)), Some((&hi, _))) = (counts.first_key_value(), counts.last_key_value())
        else {
            return PmfTable {
                support_offset: 0,
                masses: Vec::new(),
                tail_mass_bound: 1.0,
            };
        };
        let mut masses = vec![0.0; (hi - lo + 1) as usize];
        for (&v, &c) in counts {
            masses[(v - lo) as usize] = c as f64 / total as f64;
        }
        PmfTable {
            support_offset: lo,
            masses,
            tail_mass_bound: 0.0,
        }
    }

    /// Mass at `i` (zero outside the listed range).
    pub fn mass(&self, i: u64) -> f64 {
        i.checked_sub(self.support_offset)
            .and_then(|k| self.masses.get(k as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// One past the largest listed index.
    pub fn support_end(&self) -> u64 {
        self.support_offset + self.masses.len() as u64
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(k, p)| (self.support_offset + k as u64) as f64 * p),
        )
    }

    /// Masses in `[0, 1]` and listed mass plus tail bound within `tol` of one.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.masses.iter().all(|p| (0.0..=1.0).contains(p))
            && self.tail_mass_bound >= 0.0
            && (self.total() + self.tail_mass_bound - 1.0).abs() <= tol
    }
}

/// A pmf with exact rational masses and no omitted mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    pub support_offset: u64,
    pub masses: Vec<BigRational>,
}

impl ExactPmf {
    pub fn mass(&self, i: u64) -> BigRational {
        i.checked_sub(self.support_offset)
            .and_then(|k| self.masses.get(k as usize))
            .cloned()
            .unwrap_or_else(|| BigRational::from_integer(0.into()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.masses
            .iter()
            .enumerate()
            .map(move |(k, p)| (self.support_offset + k as u64, p))
    }

    pub fn to_table(&self) -> PmfTable {
        PmfTable {
            support_offset: self.support_offset,
            masses: self
                .masses
                .iter()
                .map(|p| p.to_f64().unwrap_or(f64::NAN))
                .collect(),
            tail_mass_bound: 0.0,
        }
    }
}
