//! Free-space dyadic Green tensor and the projected pair couplings 𝒢 = J + iΓ.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::AtomSet;
use crate::params::{K, POLARIZATION};

/// Negative decay eigenvalues above −PSD_TOL are clipped to zero.
pub const PSD_TOL: f64 = 1e-10;

/// G_ij(R) for R ≠ 0.
pub fn green_tensor(r: [f64; 3]) -> Result<Matrix3<Complex64>> {
    let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if rn == 0.0 {
        return Err(Error::Domain("Green tensor evaluated at coincident points".into()));
    }
    let kr = K * rn;
    let i = Complex64::i();
    let pref = Complex64::from_polar(1.0 / (4.0 * PI * rn), kr);
    let u = (i * kr - 1.0) / (kr * kr);
    let diag = 1.0 + u;
    let aniso = 1.0 + 3.0 * u;
    Ok(Matrix3::from_fn(|a, b| {
        let d = if a == b { diag } else { Complex64::new(0.0, 0.0) };
        pref * (d - aniso * (r[a] * r[b] / (rn * rn)))
    }))
}

/// 𝒢_nm = (6πγ/k) e₊†G(R_n − R_m)e₊ via the full tensor.
pub fn pair_coupling(rn: [f64; 3], rm: [f64; 3]) -> Result<Complex64> {
    let d = [rn[0] - rm[0], rn[1] - rm[1], rn[2] - rm[2]];
    let g = green_tensor(d)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            acc += POLARIZATION[a].conj() * g[(a, b)] * POLARIZATION[b];
        }
    }
    Ok(acc * (6.0 * PI / K))
}

/// Closed form of [`pair_coupling`] for in-plane distance `r` and axial offset `ell`.
pub fn planar_coupling(r: f64, ell: f64) -> Result<Complex64> {
    let r2 = r * r + ell * ell;
    if r2 == 0.0 {
        return Err(Error::Domain("pair coupling at zero separation".into()));
    }
    let rn = r2.sqrt();
    let kr = K * rn;
    let i = Complex64::i();
    let u = (i * kr - 1.0) / (kr * kr);
    Ok(Complex64::from_polar(1.5 / kr, kr) * ((1.0 + u) - (1.0 + 3.0 * u) * (r * r / (2.0 * r2))))
}

/// Coupling matrix with diagonal convention J_nn = 0, Γ_nn = γ, plus the
/// clipped eigendecomposition of Γ used for collective decay channels.
#[derive(Debug, Clone)]
pub struct CouplingMatrices {
    g: DMatrix<Complex64>,
    decay_values: DVector<f64>,
    decay_vectors: DMatrix<f64>,
}

impl CouplingMatrices {
    /// Wraps a complex symmetric matrix; checks Γ = Im G for positive semidefiniteness.
    pub fn from_complex(g: DMatrix<Complex64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), found: g.ncols() });
        }
        let gamma = g.map(|c| c.im);
        let eig = SymmetricEigen::new(gamma);
        let mut values = eig.eigenvalues;
        for v in values.iter_mut() {
            if *v < -PSD_TOL {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *v, tolerance: PSD_TOL });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self { g, decay_values: values, decay_vectors: eig.eigenvectors })
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }

    pub fn complex(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn j(&self) -> DMatrix<f64> {
        self.g.map(|c| c.re)
    }

    pub fn gamma(&self) -> DMatrix<f64> {
        self.g.map(|c| c.im)
    }

    /// Eigenvalues of Γ (ascending order not guaranteed), clipped at zero.
    pub fn decay_eigenvalues(&self) -> &DVector<f64> {
        &self.decay_values
    }

    /// Orthonormal eigenvectors of Γ as columns.
    pub fn decay_eigenvectors(&self) -> &DMatrix<f64> {
        &self.decay_vectors
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        Self::from_complex(DMatrix::from_fn(n, n, |i, j| self.g[(perm[i], perm[j])]))
    }

    /// Debug dump: comment header with N, a, L, then one row-major line per entry.
    pub fn write_csv<W: Write>(&self, mut out: W, a: f64, separation: f64) -> Result<()> {
        let n = self.len();
        writeln!(out, "# N={n},a={a:.17e},L={separation:.17e}")?;
        writeln!(out, "row,col,J,Gamma")?;
        for r in 0..n {
            for c in 0..n {
                let v = self.g[(r, c)];
                writeln!(out, "{r},{c},{:.17e},{:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

pub fn assemble_couplings(atoms: &AtomSet) -> Result<CouplingMatrices> {
    let n = atoms.len();
    let pos = atoms.positions();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    pair_coupling(pos[i], pos[j]).map_err(|_| {
                        Error::Config(format!("atoms {i} and {j} share position {:?}", pos[i]))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut g = DMatrix::from_element(n, n, Complex64::new(0.0, 1.0));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    CouplingMatrices::from_complex(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_dual_array, build_single_array, Geometry, LatticeSpec};
    use proptest::prelude::*;

    #[test]
    fn tensor_on_z_axis() {
        let g = green_tensor([0.0, 0.0, 1.0]).unwrap();
        // term-by-term at R = λ: e^{ikR} = 1
        let u = Complex64::new(-1.0, 2.0 * PI) / (4.0 * PI * PI);
        let xx = (1.0 + u) / (4.0 * PI);
        let zz = -2.0 * u / (4.0 * PI);
        assert!((g[(0, 0)] - xx).norm() < 1e-15);
        assert!((g[(1, 1)] - xx).norm() < 1e-15);
        assert!((g[(2, 2)] - zz).norm() < 1e-15);
        assert!(g[(0, 2)].norm() < 1e-16);
        assert!(green_tensor([0.0; 3]).is_err());
    }

    #[test]
    fn far_field_limit() {
        let dir = [0.48f64, -0.6, 0.64];
        let mut errs = Vec::new();
        for kr in [1e2, 1e3, 1e4] {
            let rn = kr / K;
            let r = [dir[0] * rn, dir[1] * rn, dir[2] * rn];
            let g = green_tensor(r).unwrap();
            let pref = Complex64::from_polar(1.0 / (4.0 * PI * rn), kr);
            let far = Matrix3::from_fn(|a, b| {
                pref * ((if a == b { 1.0 } else { 0.0 }) - dir[a] * dir[b])
            });
            errs.push((g - far).norm() / pref.norm());
        }
        // relative deviation decays as 1/(kR)
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn interlayer_same_site() {
        for l in [0.05, 0.3, 1.55] {
            let kl = K * l;
            let i = Complex64::i();
            let expect = Complex64::from_polar(1.5 / kl, kl) * (1.0 + (i * kl - 1.0) / (kl * kl));
            let got = pair_coupling([0.2, 0.1, -l / 2.0], [0.2, 0.1, l / 2.0]).unwrap();
            assert!((got - expect).norm() < 1e-12 * expect.norm());
        }
        let kl = 1e-3;
        let g = planar_coupling(0.0, kl / K).unwrap();
        assert!((g.re / (-1.5 / kl.powi(3)) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn single_atom_convention() {
        let atoms = build_single_array(1, 1, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        assert_eq!(c.complex()[(0, 0)], Complex64::new(0.0, 1.0));
        let atoms = build_single_array(2, 1, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let expect = pair_coupling(atoms.position(0), atoms.position(1)).unwrap();
        assert_eq!(c.complex()[(0, 1)], expect);
        let dup = AtomSet::new(vec![[0.0; 3], [0.0; 3]], vec![1, 1]).unwrap();
        assert!(matches!(assemble_couplings(&dup), Err(Error::Config(_))));
    }

    #[test]
    fn dual_nine_by_nine_decay_spectrum() {
        let spec = LatticeSpec::new(9, 9, 0.6, 1.55, Geometry::Flat).unwrap();
        let atoms = build_dual_array(&spec, None).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let vals = c.decay_eigenvalues();
        assert!(vals.iter().all(|&v| v >= 0.0));
        assert!(vals.iter().filter(|v| v.abs() < 1e-10).count() <= 1);
        assert!(vals.max() > 1.0);
        let trace: f64 = c.gamma().trace();
        assert!((trace - 162.0).abs() < 1e-12);
        // mirror symmetry: swap layers
        let perm: Vec<usize> = (0..162).map(|i| (i + 81) % 162).collect();
        let swapped = assemble_couplings(&atoms.permuted(&perm)).unwrap();
        assert!((swapped.complex() - c.complex()).norm() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_decay() {
        let mut g = DMatrix::from_element(2, 2, Complex64::new(0.0, 1.0));
        g[(0, 1)] = Complex64::new(0.0, 1.5);
        g[(1, 0)] = g[(0, 1)];
        assert!(matches!(
            CouplingMatrices::from_complex(g),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn csv_dump_has_header() {
        let atoms = build_single_array(2, 2, 0.6).unwrap();
        let c = assemble_couplings(&atoms).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, 0.6, 0.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# N=4,"));
        assert_eq!(text.lines().count(), 2 + 16);
    }

    proptest! {
        #[test]
        fn tensor_route_equals_planar(
            x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0,
        ) {
            prop_assume!(x * x + y * y + z * z > 1e-4);
            let g = green_tensor([x, y, z]).unwrap();
            prop_assert!((g - g.transpose()).norm() == 0.0);
            let a = pair_coupling([x, y, z], [0.0; 3]).unwrap();
            let b = planar_coupling((x * x + y * y).sqrt(), z).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * b.norm());
        }

        #[test]
        fn exchange_symmetry(seed in 0u64..1000) {
            let atoms = build_single_array(2, 3, 0.55).unwrap();
            let mut perm: Vec<usize> = (0..6).collect();
            let mut s = seed;
            for i in (1..6).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let c = assemble_couplings(&atoms).unwrap();
            let p = assemble_couplings(&atoms.permuted(&perm)).unwrap();
            let expect = c.permuted(&perm).unwrap();
            prop_assert!((p.complex() - expect.complex()).norm() < 1e-13);
        }
    }
}
