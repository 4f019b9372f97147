//! Hyperfine transition-matrix products for the write/read Raman paths.
//!
//! The write and read pulses drive a D2-line lambda scheme between the
//! F = 2 and F = 1 ground levels through the F' = 2 excited level, with the
//! magnetic sublevels degenerate and initially maximally mixed. Composing
//! the dipole matrix elements along the two emission-polarization branches
//! gives the intensity ratio of heralding photons accepted versus rejected
//! by the polarization selection, and hence the selection loss.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AtomicError {
    #[error("dimension mismatch: ({0} x {1}) * ({2} x {3})")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Ordered magnetic-sublevel basis of a hyperfine level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// m_F = 2, 1, 0, -1, -2
    F2,
    /// m_F = 1, 0, -1
    F1,
}

impl Basis {
    pub fn labels(self) -> &'static [i8] {
        match self {
            Basis::F2 => &[2, 1, 0, -1, -2],
            Basis::F1 => &[1, 0, -1],
        }
    }

    pub fn len(self) -> usize {
        self.labels().len()
    }
}

/// A real transition matrix between two sublevel bases (row basis = final
/// states, column basis = initial states).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    pub row_basis: Basis,
    pub col_basis: Basis,
}

impl TransitionMatrix {
    pub fn from_rows(row_basis: Basis, col_basis: Basis, rows: &[&[f64]]) -> TransitionMatrix {
        assert_eq!(rows.len(), row_basis.len());
        let cols = col_basis.len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols);
            entries.extend_from_slice(row);
        }
        TransitionMatrix {
            rows: rows.len(),
            cols,
            entries,
            row_basis,
            col_basis,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn transpose(&self) -> TransitionMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for col in 0..self.cols {
            for row in 0..self.rows {
                entries.push(self.get(row, col));
            }
        }
        TransitionMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
            row_basis: self.col_basis,
            col_basis: self.row_basis,
        }
    }

    pub fn multiply(&self, other: &TransitionMatrix) -> Result<TransitionMatrix, AtomicError> {
        if self.cols != other.rows {
            return Err(AtomicError::DimensionMismatch(
                self.rows, self.cols, other.rows, other.cols,
            ));
        }
        let mut entries = vec![0.0; self.rows * other.cols];
        for row in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(row, k);
                if a == 0.0 {
                    continue;
                }
                for col in 0..other.cols {
                    entries[row * other.cols + col] += a * other.get(k, col);
                }
            }
        }
        Ok(TransitionMatrix {
            rows: self.rows,
            cols: other.cols,
            entries,
            row_basis: self.row_basis,
            col_basis: other.col_basis,
        })
    }

    pub fn scaled(&self, factor: f64) -> TransitionMatrix {
        TransitionMatrix {
            entries: self.entries.iter().map(|e| e * factor).collect(),
            ..self.clone()
        }
    }

    /// The squared column vector for one initial sublevel: the transition
    /// intensities out of that state.
    pub fn column_intensity(&self, col: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, col).powi(2)).sum()
    }

    /// `tr(X^T X)`, the total transition intensity over a maximally mixed
    /// initial state (up to the 1/dim normalization).
    pub fn gram_trace(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).collect())
            .collect()
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..self.rows {
            for col in 0..self.cols {
                if col > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:9.6}", self.get(row, col))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The five matrices of the write/read Raman chain.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    /// F = 2 -> F' = 2, driven by the write pulse (and identically the
    /// F' = 2 -> F = 2 emission of the read-out photon).
    pub excitation: TransitionMatrix,
    /// F' = 2 -> F = 1 herald emission, sigma-plus branch.
    pub emission_sigma_plus: TransitionMatrix,
    /// F' = 2 -> F = 1 herald emission, sigma-minus branch.
    pub emission_sigma_minus: TransitionMatrix,
    /// F = 1 -> F' = 2, driven by the read pulse (transpose of the
    /// sigma-plus emission).
    pub read_sigma_plus: TransitionMatrix,
    /// F' = 2 -> F = 2 read-out emission (equal to the excitation matrix).
    pub readout_emission: TransitionMatrix,
}

/// Builds the dipole matrix elements, up to one common constant factor
/// fixed to 1.
pub fn build_matrices() -> TransitionSet {
    let r12 = (1.0f64 / 12.0).sqrt();
    let r8 = (1.0f64 / 8.0).sqrt();
    let r24 = (1.0f64 / 24.0).sqrt();
    let r4 = (1.0f64 / 4.0).sqrt();

    let excitation = TransitionMatrix::from_rows(
        Basis::F2,
        Basis::F2,
        &[
            &[0.0, r12, 0.0, 0.0, 0.0],
            &[r12, 0.0, r8, 0.0, 0.0],
            &[0.0, r8, 0.0, r8, 0.0],
            &[0.0, 0.0, r8, 0.0, r12],
            &[0.0, 0.0, 0.0, r12, 0.0],
        ],
    );
    let emission_sigma_plus = TransitionMatrix::from_rows(
        Basis::F1,
        Basis::F2,
        &[
            &[r4, 0.0, r24, 0.0, 0.0],
            &[0.0, r8, 0.0, r8, 0.0],
            &[0.0, 0.0, r24, 0.0, r4],
        ],
    );
    let emission_sigma_minus = TransitionMatrix::from_rows(
        Basis::F1,
        Basis::F2,
        &[
            &[r4, 0.0, -r24, 0.0, 0.0],
            &[0.0, r8, 0.0, -r8, 0.0],
            &[0.0, 0.0, r24, 0.0, -r4],
        ],
    );
    let read_sigma_plus = emission_sigma_plus.transpose();
    let readout_emission = excitation.clone();
    TransitionSet {
        excitation,
        emission_sigma_plus,
        emission_sigma_minus,
        read_sigma_plus,
        readout_emission,
    }
}

/// Herald-emission polarization branch selecting which full path to compose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Sigma-plus emission: the accepted (H-polarized) heralds.
    Plus,
    /// Sigma-minus emission: the rejected (V-polarized) heralds.
    Minus,
}

/// Composes the full write -> herald emission -> read -> read-out emission
/// chain for one herald polarization branch, a 5 x 5 matrix over the F = 2
/// sublevels.
pub fn path_matrix(
    set: &TransitionSet,
    polarization: Polarization,
) -> Result<TransitionMatrix, AtomicError> {
    let emission = match polarization {
        Polarization::Plus => &set.emission_sigma_plus,
        Polarization::Minus => &set.emission_sigma_minus,
    };
    set.readout_emission
        .multiply(&set.read_sigma_plus)?
        .multiply(emission)?
        .multiply(&set.excitation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarizationSelection {
    /// Intensity ratio of accepted to rejected heralds for a maximally
    /// mixed initial sublevel population.
    pub ratio: f64,
    /// Fraction of heralds lost to the polarization selection.
    pub loss: f64,
}

/// The accepted/rejected herald intensity ratio and the selection loss,
/// from the Gram traces of the two path matrices.
pub fn polarization_ratio_and_loss() -> PolarizationSelection {
    let set = build_matrices();
    let accepted = path_matrix(&set, Polarization::Plus)
        .expect("path dimensions are static")
        .gram_trace();
    let rejected = path_matrix(&set, Polarization::Minus)
        .expect("path dimensions are static")
        .gram_trace();
    PolarizationSelection {
        ratio: accepted / rejected,
        loss: rejected / (accepted + rejected),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn printed_entries_are_reproduced() {
        let set = build_matrices();
        let r12 = (1.0f64 / 12.0).sqrt();
        assert!((set.excitation.get(0, 1) - r12).abs() < 1e-15);
        assert!((r12 - 0.288675).abs() < 1e-6);
        assert_eq!(set.emission_sigma_plus.get(0, 0), 0.5);
        assert_eq!(set.emission_sigma_minus.get(0, 2), -(1.0f64 / 24.0).sqrt());
    }

    #[test]
    fn stated_symmetries_hold_exactly() {
        let set = build_matrices();
        assert_eq!(set.excitation, set.excitation.transpose());
        assert_eq!(set.readout_emission, set.excitation);
        assert_eq!(set.read_sigma_plus, set.emission_sigma_plus.transpose());
    }

    #[test]
    fn path_matrices_are_5x5_and_bounded() {
        let set = build_matrices();
        for pol in [Polarization::Plus, Polarization::Minus] {
            let x = path_matrix(&set, pol).unwrap();
            assert_eq!((x.rows(), x.cols()), (5, 5));
            assert!(x.max_abs() <= 1.0, "products of sub-unit factors");
            assert!(x.to_rows().iter().flatten().all(|e| e.is_finite()));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let set = build_matrices();
        let err = set
            .emission_sigma_plus
            .multiply(&set.emission_sigma_minus)
            .unwrap_err();
        assert_eq!(err, AtomicError::DimensionMismatch(3, 5, 3, 5));
    }

    #[test]
    fn intensity_ratio_and_loss() {
        let sel = polarization_ratio_and_loss();
        assert!((sel.ratio - 33.0 / 8.0).abs() < 1e-12, "ratio {}", sel.ratio);
        assert!((sel.loss - 8.0 / 41.0).abs() < 1e-12, "loss {}", sel.loss);
        // Two algebraic routes to the loss.
        assert!((sel.loss - 1.0 / (1.0 + sel.ratio)).abs() < 1e-12);
    }

    #[test]
    fn ratio_invariant_under_global_scaling() {
        let set = build_matrices();
        let gram = |factor: f64, pol| {
            let scaled = TransitionSet {
                excitation: set.excitation.scaled(factor),
                emission_sigma_plus: set.emission_sigma_plus.scaled(factor),
                emission_sigma_minus: set.emission_sigma_minus.scaled(factor),
                read_sigma_plus: set.read_sigma_plus.scaled(factor),
                readout_emission: set.readout_emission.scaled(factor),
            };
            path_matrix(&scaled, pol).unwrap().gram_trace()
        };
        let base = gram(1.0, Polarization::Plus) / gram(1.0, Polarization::Minus);
        // Powers of two scale exactly.
        for factor in [2.0, 4.0, 0.5] {
            let ratio = gram(factor, Polarization::Plus) / gram(factor, Polarization::Minus);
            assert_eq!(ratio, base, "factor {factor}");
        }
        for factor in [3.0, 0.7] {
            let ratio = gram(factor, Polarization::Plus) / gram(factor, Polarization::Minus);
            assert!((ratio - base).abs() < 1e-12, "factor {factor}");
        }
    }

    #[test]
    fn uniform_sublevel_sampling_reproduces_trace_ratio() {
        // Draw the initial sublevel uniformly and accumulate the squared
        // amplitudes through each path; the mean intensities reproduce the
        // Gram traces up to the 1/5 normalization which cancels in the ratio.
        let set = build_matrices();
        let x_plus = path_matrix(&set, Polarization::Plus).unwrap();
        let x_minus = path_matrix(&set, Polarization::Minus).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 1_000_000;
        let (mut sum_p, mut sum_p2, mut sum_m, mut sum_m2, mut cross) =
            (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let col = rng.random_range(0..5);
            let p = x_plus.column_intensity(col);
            let m = x_minus.column_intensity(col);
            sum_p += p;
            sum_p2 += p * p;
            sum_m += m;
            sum_m2 += m * m;
            cross += p * m;
        }
        let nf = n as f64;
        let (mean_p, mean_m) = (sum_p / nf, sum_m / nf);
        let ratio = mean_p / mean_m;
        // Delta method with the full covariance (the same draw feeds both).
        let var_p = sum_p2 / nf - mean_p * mean_p;
        let var_m = sum_m2 / nf - mean_m * mean_m;
        let cov = cross / nf - mean_p * mean_m;
        let rel_var =
            (var_p / (mean_p * mean_p) + var_m / (mean_m * mean_m)
                - 2.0 * cov / (mean_p * mean_m))
                / nf;
        let sigma = ratio * rel_var.sqrt();
        assert!(
            (ratio - 33.0 / 8.0).abs() < 3.0 * sigma,
            "ratio {ratio} +- {sigma}"
        );
    }
}
