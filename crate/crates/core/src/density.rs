//! Mixed one-dimensional probability laws: piecewise continuous densities
//! plus point atoms. Continuous pieces keep a closed-form evaluator where
//! one exists (affine push-forwards of a base distribution); grids and
//! histogram steps are for empirical densities only.

use crate::dist::Distribution1D;
use crate::error::{Error, Result};
use crate::integrate::adaptive_simpson;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Locations closer than this are treated as the same atom.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PieceShape {
    /// Density of `x = intercept + slope·t` with `t ~ dist`, restricted to
    /// the piece interval: f(x) = f_t((x − intercept)/slope) / |slope|.
    AffineOf {
        dist: Distribution1D,
        intercept: f64,
        slope: f64,
    },
    /// Piecewise-linear interpolation of sampled density values.
    Grid { xs: Vec<f64>, fs: Vec<f64> },
    /// Histogram bins: density[i] on [edges[i], edges[i+1]).
    Step { edges: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub shape: PieceShape,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedDensity1D {
    pub pieces: Vec<Piece>,
    pub atoms: Vec<Atom>,
}

impl Piece {
    /// Push-forward of `dist` under `x = intercept + slope·t` for t in
    /// [t_lo, t_hi].
    pub fn affine(dist: Distribution1D, intercept: f64, slope: f64, t_lo: f64, t_hi: f64) -> Piece {
        assert!(slope != 0.0, "degenerate affine map");
        let a = intercept + slope * t_lo;
        let b = intercept + slope * t_hi;
        Piece {
            lo: a.min(b),
            hi: a.max(b),
            shape: PieceShape::AffineOf {
                dist,
                intercept,
                slope,
            },
        }
    }

    pub fn pdf_at(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match &self.shape {
            PieceShape::AffineOf {
                dist,
                intercept,
                slope,
            } => dist.pdf((x - intercept) / slope) / slope.abs(),
            PieceShape::Grid { xs, fs } => interp_linear(xs, fs, x),
            PieceShape::Step { edges, density } => {
                match edges.binary_search_by(|e| e.partial_cmp(&x).unwrap()) {
                    Ok(i) => density.get(i).copied().unwrap_or_else(|| *density.last().unwrap()),
                    Err(0) => 0.0,
                    Err(i) if i <= density.len() => density[i - 1],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn mass(&self) -> f64 {
        match &self.shape {
            PieceShape::AffineOf { .. } | PieceShape::Grid { .. } => {
                adaptive_simpson(&|x| self.pdf_at(x), self.lo, self.hi, 1e-8, 40).0
            }
            PieceShape::Step { edges, density } => edges
                .windows(2)
                .zip(density)
                .map(|(w, d)| d * (w[1] - w[0]))
                .sum(),
        }
    }

    /// Mass of the piece restricted to [c, d]; exact for affine pieces.
    pub fn mass_between(&self, c: f64, d: f64) -> f64 {
        let c = c.max(self.lo);
        let d = d.min(self.hi);
        if c >= d {
            return 0.0;
        }
        match &self.shape {
            PieceShape::AffineOf {
                dist,
                intercept,
                slope,
            } => {
                let tc = (c - intercept) / slope;
                let td = (d - intercept) / slope;
                (dist.cdf(tc.max(td)) - dist.cdf(tc.min(td))).max(0.0)
            }
            _ => adaptive_simpson(&|x| self.pdf_at(x), c, d, 1e-9, 40).0,
        }
    }
}

impl MixedDensity1D {
    pub fn point_mass(location: f64) -> MixedDensity1D {
        MixedDensity1D {
            pieces: Vec::new(),
            atoms: vec![Atom {
                location,
                mass: 1.0,
            }],
        }
    }

    pub fn continuous(pieces: Vec<Piece>) -> MixedDensity1D {
        MixedDensity1D {
            pieces,
            atoms: Vec::new(),
        }
    }

    /// Continuous density value at x (atoms excluded).
    pub fn pdf_at(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.pdf_at(x)).sum()
    }

    pub fn atom_mass_at(&self, location: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.location - location).abs() <= ATOM_MERGE_TOL)
            .map(|a| a.mass)
            .sum()
    }

    pub fn continuous_mass(&self) -> f64 {
        self.pieces.iter().map(Piece::mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        if self.atoms.iter().any(|a| a.mass < 0.0) {
            return Err(Error::InvalidInput("negative atom mass".into()));
        }
        let m = self.total_mass();
        if (m - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "density mass {m} deviates from 1 beyond {tol}"
            )));
        }
        Ok(())
    }

    /// Support hull over pieces and atoms.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.pieces {
            lo = lo.min(p.lo);
            hi = hi.max(p.hi);
        }
        for a in &self.atoms {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        (lo, hi)
    }

    /// CDF including atoms (right-continuous).
    pub fn cdf(&self, x: f64) -> f64 {
        let cont: f64 = self
            .pieces
            .iter()
            .map(|p| p.mass_between(f64::NEG_INFINITY, x))
            .sum();
        let atom: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= x + ATOM_MERGE_TOL)
            .map(|a| a.mass)
            .sum();
        cont + atom
    }

    /// Inverse-CDF sampling of the mixed law (bisection on the CDF with
    /// atoms resolved by mass comparison).
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let (lo, hi) = self.support();
        let total = self.total_mass();
        let mut rng = Rng::seed_from(seed);
        (0..n)
            .map(|_| {
                let u = rng.next_open01() * total;
                // atom resolution first
                let mut acc = 0.0;
                // walk sorted breakdown: use bisection on cdf
                let mut a = lo;
                let mut b = hi;
                // check atoms directly
                let mut hit = None;
                let mut sorted: Vec<&Atom> = self.atoms.iter().collect();
                sorted.sort_by(|x, y| x.location.partial_cmp(&y.location).unwrap());
                for at in sorted {
                    let below = self.cdf(at.location - 1e-12);
                    if u > below && u <= below + at.mass {
                        hit = Some(at.location);
                        break;
                    }
                    acc += at.mass;
                }
                let _ = acc;
                if let Some(x) = hit {
                    return x;
                }
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if self.cdf(m) < u {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    /// Sample the density on a uniform grid per piece (for CSV export).
    pub fn grid(&self, points_per_piece: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for k in 0..points_per_piece {
                let x = p.lo + (p.hi - p.lo) * k as f64 / (points_per_piece - 1) as f64;
                out.push((x, self.pdf_at(x)));
            }
        }
        out
    }
}

fn interp_linear(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return fs[0];
    }
    if x >= *xs.last().unwrap() {
        return *fs.last().unwrap();
    }
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return fs[i],
        Err(i) => i,
    };
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    fs[i - 1] * (1.0 - t) + fs[i] * t
}
