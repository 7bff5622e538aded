//! Square-lattice atom placement for single and dual arrays.

use serde::{Deserialize, Serialize};

use crate::beams::GaussianBeam;
use crate::error::{Error, Result};
use crate::params::K;

/// Placement rule for the two layers of a dual array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Geometry {
    Flat,
    /// Layers bent onto the wavefronts of a Gaussian beam with this waist.
    Curved { waist: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub separation: f64,
    pub geometry: Geometry,
}

impl LatticeSpec {
    pub fn new(nx: usize, ny: usize, a: f64, separation: f64, geometry: Geometry) -> Result<Self> {
        let spec = Self { nx, ny, a, separation, geometry };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Precondition(format!(
                "lattice needs at least one atom per side, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Precondition(format!("lattice spacing must be positive, got {}", self.a)));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::Precondition(format!(
                "layer separation must be non-negative, got {}",
                self.separation
            )));
        }
        if let Geometry::Curved { waist } = self.geometry {
            if !(waist > 0.0) {
                return Err(Error::Precondition(format!("curved geometry needs a positive waist, got {waist}")));
            }
        }
        Ok(())
    }

    pub fn atoms_per_layer(&self) -> usize {
        self.nx * self.ny
    }

    /// In-plane site coordinates, row-major in (ix, iy), centered on the axis.
    pub fn sites(&self) -> Vec<[f64; 2]> {
        let cx = (self.nx as f64 - 1.0) / 2.0;
        let cy = (self.ny as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.atoms_per_layer());
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                out.push([(ix as f64 - cx) * self.a, (iy as f64 - cy) * self.a]);
            }
        }
        out
    }
}

/// Emitter positions with layer membership. Layer-1 atoms come first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSet {
    positions: Vec<[f64; 3]>,
    layers: Vec<u8>,
}

impl AtomSet {
    pub fn new(positions: Vec<[f64; 3]>, layers: Vec<u8>) -> Result<Self> {
        if positions.len() != layers.len() {
            return Err(Error::DimensionMismatch { expected: positions.len(), found: layers.len() });
        }
        if let Some(bad) = layers.iter().find(|&&l| l != 1 && l != 2) {
            return Err(Error::Config(format!("layer id must be 1 or 2, got {bad}")));
        }
        Ok(Self { positions, layers })
    }

    pub fn empty() -> Self {
        Self { positions: Vec::new(), layers: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, n: usize) -> [f64; 3] {
        self.positions[n]
    }

    pub fn layers(&self) -> &[u8] {
        &self.layers
    }

    pub fn layer(&self, n: usize) -> u8 {
        self.layers[n]
    }

    /// Relabel atoms: new atom `i` is old atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            positions: perm.iter().map(|&p| self.positions[p]).collect(),
            layers: perm.iter().map(|&p| self.layers[p]).collect(),
        }
    }
}

/// Single flat array of nx×ny atoms in the plane z = 0.
pub fn build_single_array(nx: usize, ny: usize, a: f64) -> Result<AtomSet> {
    let spec = LatticeSpec::new(nx, ny, a, 0.0, Geometry::Flat)?;
    let positions = spec.sites().into_iter().map(|[x, y]| [x, y, 0.0]).collect();
    AtomSet::new(positions, vec![1; spec.atoms_per_layer()])
}

/// Two parallel arrays; layer 1 on the z < 0 side.
pub fn build_dual_array(spec: &LatticeSpec, beam: Option<&GaussianBeam>) -> Result<AtomSet> {
    spec.validate()?;
    let sites = spec.sites();
    let half = spec.separation / 2.0;
    let heights: Vec<f64> = match spec.geometry {
        Geometry::Flat => vec![half; sites.len()],
        Geometry::Curved { waist } => {
            let beam = beam.ok_or_else(|| {
                Error::Config("curved geometry requires a Gaussian beam to define the wavefronts".into())
            })?;
            if (beam.waist() - waist).abs() > 1e-12 * waist {
                return Err(Error::Config(format!(
                    "curved geometry waist {waist} differs from beam waist {}",
                    beam.waist()
                )));
            }
            sites
                .iter()
                .enumerate()
                .map(|(n, &[x, y])| wavefront_height(beam, x * x + y * y, half).map_err(|res| {
                    Error::RootNotConverged { site: n, radius: (x * x + y * y).sqrt(), residual: res }
                }))
                .collect::<Result<_>>()?
        }
    };
    let n = sites.len();
    let mut positions = Vec::with_capacity(2 * n);
    for (&[x, y], &z) in sites.iter().zip(&heights) {
        positions.push([x, y, -z]);
    }
    for (&[x, y], &z) in sites.iter().zip(&heights) {
        positions.push([x, y, z]);
    }
    let mut layers = vec![1u8; n];
    layers.extend(std::iter::repeat(2u8).take(n));
    AtomSet::new(positions, layers)
}

/// Solves φ(r², z) = φ(0, z₀) for z ∈ [0, z₀] by bisection, where φ is the
/// beam phase. Returns the residual on failure.
pub fn wavefront_height(beam: &GaussianBeam, r2: f64, z0: f64) -> std::result::Result<f64, f64> {
    if r2 == 0.0 || z0 == 0.0 {
        return Ok(z0);
    }
    let target = beam.phase(0.0, z0);
    let f = |z: f64| beam.phase(r2, z) - target;
    let (mut lo, mut hi) = (0.0, z0);
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 0.0 || fhi < 0.0 {
        return Err(flo.abs().min(fhi.abs()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * z0.max(1.0) {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    let res = f(z);
    // residual measured in units of k·λ
    if res.abs() / K < 1e-12 {
        Ok(z)
    } else {
        Err(res)
    }
}
