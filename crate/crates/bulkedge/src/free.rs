//! Quadratic Hamiltonians: the one-body matrix h and its Fermi-Dirac
//! functional calculus, Γ_{ji} = ⟨a*_i a_j⟩ = [f(h)]_{ji}.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{hamiltonian_terms, ModeIndex, QuadraticForm, ThermoParams};
use crate::linalg;
use crate::model::{Mode, ModelSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct OneBodyMatrix {
    pub modes: ModeIndex,
    pub matrix: Array2<C64>,
}

/// h[(x,j),(y,j')] = T_b(x,y)_{jj'}, plus single-mode density terms on the
/// diagonal. Any genuine interaction is refused.
pub fn one_body(spec: &ModelSpec) -> Result<OneBodyMatrix> {
    spec.validate()?;
    if !spec.is_quadratic() {
        return Err(Error::EngineMismatch(
            "the free-fermion engine needs a quadratic Hamiltonian".into(),
        ));
    }
    let modes = ModeIndex::for_spec(spec);
    let (quad, dens) = hamiltonian_terms(spec, &modes)?;
    let m = modes.len();
    let mut h = Array2::zeros((m, m));
    for (i, j, c) in quad.terms {
        h[[i, j]] += c;
    }
    for (idx, c) in dens.terms {
        h[[idx[0], idx[0]]] += C64::new(c, 0.0);
    }
    Ok(OneBodyMatrix { modes, matrix: h })
}

/// 1/(1 + e^{β(ε−μ)}), evaluated without overflow.
pub fn fermi(beta: f64, eps: f64, mu: f64) -> f64 {
    let x = beta * (eps - mu);
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// log(1 + e^{−x}), evaluated without overflow.
fn log1p_exp_neg(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Σ_i log(1 + e^{−β(ε_i−μ)}).
pub fn free_log_partition(energies: &[f64], params: ThermoParams) -> f64 {
    energies
        .iter()
        .map(|&e| log1p_exp_neg(params.beta * (e - params.mu)))
        .sum()
}

/// p = −(β·volume)^{-1} Σ_i log(1 + e^{−β(ε_i−μ)}).
pub fn free_pressure(energies: &[f64], params: ThermoParams, volume_norm: usize) -> f64 {
    if volume_norm == 0 {
        return 0.0;
    }
    -free_log_partition(energies, params) / (params.beta * volume_norm as f64)
}

/// The involution x1 ↦ −x1, when h commutes with it combined with complex
/// conjugation. Returns the partner position of every mode.
fn mirror_partner(h: &OneBodyMatrix) -> Option<Vec<usize>> {
    let modes = h.modes.modes();
    let partner: Vec<usize> = modes
        .iter()
        .map(|m| h.modes.position(Mode::new(crate::geometry::Site::new(-m.site.x1, m.site.x2), m.orbital)))
        .collect::<Option<_>>()?;
    let scale = h.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-14 * scale.max(1.0);
    for ((i, j), z) in h.matrix.indexed_iter() {
        if (h.matrix[[partner[i], partner[j]]] - z.conj()).norm() > tol {
            return None;
        }
    }
    Some(partner)
}

/// Columns of the unitary W that makes W* h W real: (|x⟩+|Px⟩)/√2 and
/// i(|x⟩−|Px⟩)/√2 for x1 > 0, |x⟩ for x1 = 0. Each entry is (row, value).
fn real_rotation(h: &OneBodyMatrix, partner: &[usize]) -> Vec<Vec<(usize, C64)>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut cols = Vec::with_capacity(partner.len());
    for (p, m) in h.modes.modes().iter().enumerate() {
        if m.site.x1 == 0 {
            cols.push(vec![(p, C64::new(1.0, 0.0))]);
        } else if m.site.x1 > 0 {
            let q = partner[p];
            cols.push(vec![(p, C64::new(r, 0.0)), (q, C64::new(r, 0.0))]);
            cols.push(vec![(p, C64::new(0.0, r)), (q, C64::new(0.0, -r))]);
        }
    }
    cols
}

fn rotate_to_real(h: &Array2<C64>, cols: &[Vec<(usize, C64)>]) -> Array2<f64> {
    let n = h.nrows();
    // hw = h W, column by column.
    let mut hw = Array2::<C64>::zeros((n, n));
    for (a, col) in cols.iter().enumerate() {
        for &(q, w) in col {
            for p in 0..n {
                hw[[p, a]] += h[[p, q]] * w;
            }
        }
    }
    let mut out = Array2::<f64>::zeros((n, n));
    for (a, col) in cols.iter().enumerate() {
        let mut row = out.row_mut(a);
        for &(p, w) in col {
            let wc = w.conj();
            for (dst, z) in row.iter_mut().zip(hw.row(p).iter()) {
                *dst += (wc * z).re;
            }
        }
    }
    out
}

/// Eigenvalues (ascending) and eigenvectors (columns) of h.
#[derive(Clone, Debug)]
pub struct FreeSpectrum {
    pub energies: Vec<f64>,
    pub vectors: Arc<Array2<C64>>,
    /// Whether the real symmetric route was taken.
    pub real_form: bool,
}

/// Diagonalize h, through a real symmetric matrix when the mirror symmetry
/// allows it and through a complex Hermitian solve otherwise.
pub fn diagonalize_one_body(h: &OneBodyMatrix) -> Result<FreeSpectrum> {
    let residual = linalg::hermiticity_residual(&h.matrix);
    if residual > 1e-12 {
        return Err(Error::NotHermitian(residual));
    }
    if let Some(partner) = mirror_partner(h) {
        let cols = real_rotation(h, &partner);
        let hr = rotate_to_real(&h.matrix, &cols);
        let (energies, vr) = linalg::symmetric_eigh(&hr)?;
        let n = energies.len();
        let mut v = Array2::<C64>::zeros((n, n));
        for (a, col) in cols.iter().enumerate() {
            for &(p, w) in col {
                let mut row = v.row_mut(p);
                for (dst, x) in row.iter_mut().zip(vr.row(a).iter()) {
                    *dst += w * *x;
                }
            }
        }
        return Ok(FreeSpectrum {
            energies,
            vectors: Arc::new(v),
            real_form: true,
        });
    }
    let (energies, v) = linalg::hermitian_eigh(&h.matrix)?;
    Ok(FreeSpectrum {
        energies,
        vectors: Arc::new(v),
        real_form: false,
    })
}

/// The complex route only; kept for cross-checks.
pub fn diagonalize_one_body_complex(h: &OneBodyMatrix) -> Result<FreeSpectrum> {
    let (energies, v) = linalg::hermitian_eigh(&h.matrix)?;
    Ok(FreeSpectrum {
        energies,
        vectors: Arc::new(v),
        real_form: false,
    })
}

pub fn one_body_energies(h: &OneBodyMatrix) -> Result<Vec<f64>> {
    if let Some(partner) = mirror_partner(h) {
        let cols = real_rotation(h, &partner);
        return linalg::symmetric_eigenvalues(&rotate_to_real(&h.matrix, &cols));
    }
    linalg::hermitian_eigenvalues(&h.matrix)
}

/// A one-body matrix that can be read entry by entry.
#[derive(Clone, Debug)]
pub enum Density {
    Dense(Array2<C64>),
    /// V diag(w) V*, evaluated lazily.
    Spectral {
        vectors: Arc<Array2<C64>>,
        weights: Vec<f64>,
    },
}

impl Density {
    pub fn dim(&self) -> usize {
        match self {
            Density::Dense(a) => a.nrows(),
            Density::Spectral { weights, .. } => weights.len(),
        }
    }

    /// Entry (row, col).
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        match self {
            Density::Dense(a) => a[[row, col]],
            Density::Spectral { vectors, weights } => {
                let r = vectors.row(row);
                let c = vectors.row(col);
                let mut acc = ZERO;
                for ((a, b), w) in r.iter().zip(c.iter()).zip(weights) {
                    acc += a * b.conj() * *w;
                }
                acc
            }
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match self {
            Density::Dense(a) => a.clone(),
            Density::Spectral { vectors, weights } => {
                let scaled = Array2::from_shape_fn(vectors.dim(), |(i, k)| vectors[[i, k]] * weights[k]);
                scaled.dot(&vectors.t().mapv(|z| z.conj()))
            }
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }
}

/// Σ c·Γ_{ji} = ⟨Σ c a*_i a_j⟩.
pub fn quadratic_expectation(gamma: &Density, form: &QuadraticForm) -> Result<C64> {
    let m = gamma.dim();
    let mut acc = ZERO;
    for &(i, j, c) in &form.terms {
        if i >= m || j >= m {
            return Err(Error::ModeOutOfRange { index: i.max(j), modes: m });
        }
        acc += c * gamma.entry(j, i);
    }
    Ok(acc)
}

/// Γ = (1 + e^{β(h−μ)})^{-1}.
pub fn fermi_correlations(spectrum: &FreeSpectrum, params: ThermoParams) -> Density {
    Density::Spectral {
        vectors: Arc::clone(&spectrum.vectors),
        weights: spectrum
            .energies
            .iter()
            .map(|&e| fermi(params.beta, e, params.mu))
            .collect(),
    }
}

/// ∂_μ Γ, with weights β·f(1−f) in the eigenbasis.
pub fn fermi_derivative_correlations(spectrum: &FreeSpectrum, params: ThermoParams) -> Density {
    Density::Spectral {
        vectors: Arc::clone(&spectrum.vectors),
        weights: spectrum
            .energies
            .iter()
            .map(|&e| {
                let f = fermi(params.beta, e, params.mu);
                params.beta * f * (1.0 - f)
            })
            .collect(),
    }
}
