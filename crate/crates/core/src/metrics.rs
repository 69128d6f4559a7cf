//! Distances and tail masses for mixed one-dimensional laws.
//!
//! The total variational distance of two mixed laws splits into the
//! continuous part ½∫|f_a − f_b| and the atom part ½Σ|Δmass| over the
//! merged atom locations; both are reported separately.

use crate::density::{Atom, MixedDensity1D, Piece, PieceShape, ATOM_MERGE_TOL};
use crate::error::{Error, Result};
use crate::integrate::adaptive_simpson;
use serde::Serialize;

const TVD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TvdReport {
    pub value: f64,
    pub continuous_part: f64,
    pub atom_part: f64,
    /// number of integration segments after breakpoint splitting
    pub grid_points: usize,
    pub est_error: f64,
}

/// Total variational distance between two mixed laws.
pub fn tvd(a: &MixedDensity1D, b: &MixedDensity1D) -> Result<TvdReport> {
    // segment the real line at every piece boundary so the integrand is
    // smooth inside each segment
    let mut brk: Vec<f64> = Vec::new();
    for d in [a, b] {
        for p in &d.pieces {
            if !p.lo.is_finite() || !p.hi.is_finite() {
                return Err(Error::InvalidInput(
                    "variational distance needs bounded piece supports".into(),
                ));
            }
            brk.push(p.lo);
            brk.push(p.hi);
        }
    }
    brk.sort_by(|x, y| x.partial_cmp(y).unwrap());
    brk.dedup_by(|x, y| (*x - *y).abs() <= 1e-13);

    let mut cont = 0.0;
    let mut err = 0.0;
    let mut segments = 0usize;
    for w in brk.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 1e-13 {
            continue;
        }
        // densities with endpoint singularities evaluate to inf exactly at
        // a breakpoint; the point has measure zero, so drop it
        let integrand = |x: f64| {
            let d = (a.pdf_at(x) - b.pdf_at(x)).abs();
            if d.is_finite() {
                d
            } else {
                0.0
            }
        };
        let (v, e) = adaptive_simpson(&integrand, lo, hi, TVD_TOL, 40);
        cont += v;
        err += e;
        segments += 1;
    }

    let mut atom = 0.0;
    let mut locs: Vec<f64> = a
        .atoms
        .iter()
        .chain(&b.atoms)
        .map(|at| at.location)
        .collect();
    locs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    locs.dedup_by(|x, y| (*x - *y).abs() <= ATOM_MERGE_TOL);
    for loc in locs {
        atom += (a.atom_mass_at(loc) - b.atom_mass_at(loc)).abs();
    }

    Ok(TvdReport {
        value: 0.5 * (cont + atom),
        continuous_part: 0.5 * cont,
        atom_part: 0.5 * atom,
        grid_points: segments,
        est_error: 0.5 * err,
    })
}

/// Probability mass of the law strictly above `bound`.
///
/// The inequality is closed: an atom sitting exactly at the bound counts
/// as satisfying it.
pub fn violation_mass(d: &MixedDensity1D, bound: f64) -> f64 {
    let cont: f64 = d
        .pieces
        .iter()
        .map(|p| p.mass_between(bound, f64::INFINITY))
        .sum();
    let atoms: f64 = d
        .atoms
        .iter()
        .filter(|a| a.location > bound + ATOM_MERGE_TOL)
        .map(|a| a.mass)
        .sum();
    cont + atoms
}

/// Histogram density estimate from samples, pooling repeated values into
/// atoms first and applying the Freedman–Diaconis rule to the rest.
pub fn histogram_density(samples: &[f64]) -> Result<MixedDensity1D> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to bin".into()));
    }
    let n = samples.len() as f64;
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // pool runs of (numerically) identical values; promote heavy runs to atoms
    let mut atoms: Vec<Atom> = Vec::new();
    let mut cont: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] - xs[i] <= ATOM_MERGE_TOL {
            j += 1;
        }
        let run = j - i;
        if run as f64 / n >= 0.005 && run > 1 {
            atoms.push(Atom {
                location: xs[i],
                mass: run as f64 / n,
            });
        } else {
            cont.extend_from_slice(&xs[i..j]);
        }
        i = j;
    }

    let mut pieces = Vec::new();
    if cont.len() >= 2 {
        let m = cont.len();
        let q1 = cont[m / 4];
        let q3 = cont[(3 * m) / 4];
        let iqr = (q3 - q1).max(1e-12);
        let width = 2.0 * iqr / (m as f64).cbrt();
        let lo = cont[0];
        let hi = *cont.last().unwrap();
        let nbins = (((hi - lo) / width).ceil() as usize).clamp(1, 4096);
        let step = (hi - lo).max(1e-12) / nbins as f64;
        let mut counts = vec![0usize; nbins];
        for &x in &cont {
            let k = (((x - lo) / step) as usize).min(nbins - 1);
            counts[k] += 1;
        }
        let edges: Vec<f64> = (0..=nbins).map(|k| lo + step * k as f64).collect();
        let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * step)).collect();
        pieces.push(Piece {
            lo,
            hi,
            shape: PieceShape::Step { edges, density },
        });
    }
    Ok(MixedDensity1D { pieces, atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{example_demand, Distribution1D};
    use approx::assert_abs_diff_eq;

    fn beta_law(lo: f64, hi: f64) -> MixedDensity1D {
        let d = Distribution1D::Beta {
            lo,
            hi,
            a: 4.0,
            b: 2.0,
        };
        let (a, b) = d.support();
        MixedDensity1D::continuous(vec![Piece::affine(d, 0.0, 1.0, a, b)])
    }

    #[test]
    fn identical_laws_zero_distance() {
        let a = beta_law(0.0, 1.0);
        let r = tvd(&a, &a).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn disjoint_supports_distance_one() {
        let a = beta_law(0.0, 1.0);
        let b = beta_law(2.0, 3.0);
        let r = tvd(&a, &b).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.atom_part, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pure_atoms_distance() {
        let a = MixedDensity1D::point_mass(0.85);
        let b = MixedDensity1D::point_mass(0.80);
        assert_abs_diff_eq!(tvd(&a, &b).unwrap().value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tvd(&a, &a).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetry_and_triangle() {
        let a = beta_law(0.0, 1.0);
        let b = beta_law(0.3, 1.3);
        let c = beta_law(0.6, 1.6);
        let ab = tvd(&a, &b).unwrap().value;
        let ba = tvd(&b, &a).unwrap().value;
        let bc = tvd(&b, &c).unwrap().value;
        let ac = tvd(&a, &c).unwrap().value;
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-8);
        assert!(ac <= ab + bc + 1e-7);
        assert!(ab > 0.0 && ab < 1.0);
    }

    #[test]
    fn affine_invariance() {
        // TVD is invariant under a common affine change of variable
        let d = example_demand();
        let (lo, hi) = d.support();
        let a = MixedDensity1D::continuous(vec![Piece::affine(d, 0.0, 1.0, lo, hi)]);
        let b = MixedDensity1D::continuous(vec![Piece::affine(d, -0.1, 1.0, lo, hi)]);
        let a2 = MixedDensity1D::continuous(vec![Piece::affine(d, 1.0, 2.0, lo, hi)]);
        let b2 = MixedDensity1D::continuous(vec![Piece::affine(d, 0.8, 2.0, lo, hi)]);
        let r1 = tvd(&a, &b).unwrap().value;
        let r2 = tvd(&a2, &b2).unwrap().value;
        assert_abs_diff_eq!(r1, r2, epsilon = 1e-6);
    }

    #[test]
    fn mixed_vs_continuous_counts_atom_fully() {
        let d = example_demand();
        let cont = Piece::affine(d, 0.25, -0.5, -1.2, -0.9);
        let mixed = MixedDensity1D {
            pieces: vec![cont.clone()],
            atoms: vec![Atom {
                location: 0.85,
                mass: 0.1875,
            }],
        };
        let (lo, hi) = d.support();
        let smooth = MixedDensity1D::continuous(vec![Piece::affine(d, 0.25, -0.5, lo, hi)]);
        let r = tvd(&mixed, &smooth).unwrap();
        assert_abs_diff_eq!(r.atom_part, 0.5 * 0.1875, epsilon = 1e-12);
        assert!(r.value > r.atom_part);
        assert!(r.value <= 1.0 + 1e-9);
    }

    #[test]
    fn violation_mass_closed_inequality() {
        let d = example_demand();
        let cont = Piece::affine(d, 0.25, -0.5, -1.2, -0.9);
        let mixed = MixedDensity1D {
            pieces: vec![cont],
            atoms: vec![Atom {
                location: 0.85,
                mass: 0.1875,
            }],
        };
        // continuous part tops out at the bound and the atom sits on it
        assert_abs_diff_eq!(violation_mass(&mixed, 0.85), 0.0, epsilon = 1e-9);
        assert!(violation_mass(&mixed, 0.80) > 0.0);
        assert_abs_diff_eq!(violation_mass(&mixed, 0.6), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn violation_mass_continuous_tail() {
        let d = example_demand();
        let (lo, hi) = d.support();
        let law = MixedDensity1D::continuous(vec![Piece::affine(d, 0.0, 1.0, lo, hi)]);
        // demand cdf at −1.2 is 0.1875, so mass above −1.2 is 0.8125
        assert_abs_diff_eq!(violation_mass(&law, -1.2), 0.8125, epsilon = 1e-9);
    }

    #[test]
    fn histogram_pools_atoms_and_normalizes() {
        let d = example_demand();
        let cont = Piece::affine(d, 0.25, -0.5, -1.2, -0.9);
        let mixed = MixedDensity1D {
            pieces: vec![cont],
            atoms: vec![Atom {
                location: 0.85,
                mass: 0.1875,
            }],
        };
        let xs = mixed.sample(20_000, 11);
        let est = histogram_density(&xs).unwrap();
        assert_eq!(est.atoms.len(), 1);
        assert!((est.atoms[0].mass - 0.1875).abs() < 0.01);
        assert_abs_diff_eq!(est.total_mass(), 1.0, epsilon = 1e-9);
        // histogram should sit close to the truth in TVD
        let r = tvd(&est, &mixed).unwrap();
        assert!(r.value < 0.08, "histogram TVD {}", r.value);
    }
}
