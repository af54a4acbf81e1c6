//! Exact diagonalization in particle-number sectors.
//!
//! Modes are ordered row-major by site, then by internal index, and mode i
//! is bit i of an occupation word. With that order
//!
//! a_j |w⟩ = (−1)^{#occupied modes below j} |w − j⟩,
//!
//! so a*_i a_j picks up the parity of the occupied modes strictly between
//! i and j.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Site, SiteSet};
use crate::linalg;
use crate::model::{Mode, ModelSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub beta: f64,
    pub mu: f64,
}

impl ThermoParams {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) || !mu.is_finite() {
            return Err(Error::InvalidModel(format!(
                "need β > 0 and finite μ, got β = {beta}, μ = {mu}"
            )));
        }
        Ok(ThermoParams { beta, mu })
    }

    pub fn with_mu(self, mu: f64) -> Self {
        ThermoParams { mu, ..self }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeIndex {
    modes: Vec<Mode>,
    #[serde(skip)]
    lookup: HashMap<Mode, usize>,
}

impl ModeIndex {
    pub fn new(region: &SiteSet, internal_dim: usize) -> Self {
        let modes: Vec<Mode> = region
            .iter()
            .flat_map(|x| (0..internal_dim).map(move |j| Mode::new(x, j)))
            .collect();
        let lookup = modes.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        ModeIndex { modes, lookup }
    }

    pub fn for_spec(spec: &ModelSpec) -> Self {
        ModeIndex::new(&spec.region, spec.internal_dim)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn position(&self, m: Mode) -> Option<usize> {
        self.lookup.get(&m).copied()
    }

    /// Positions of all modes on `site`.
    pub fn site_positions(&self, site: Site) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.site == site)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Σ c · a*_i a_j over mode positions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticForm {
    pub terms: Vec<(usize, usize, C64)>,
}

impl QuadraticForm {
    pub fn push(&mut self, i: usize, j: usize, c: C64) {
        if c != ZERO {
            self.terms.push((i, j, c));
        }
    }

    pub fn extend(&mut self, other: &QuadraticForm, scale: C64) {
        for &(i, j, c) in &other.terms {
            self.push(i, j, c * scale);
        }
    }

    /// Coefficients merged per (i, j), sorted.
    pub fn merged(&self) -> BTreeMap<(usize, usize), C64> {
        let mut out: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(i, j, c) in &self.terms {
            *out.entry((i, j)).or_insert(ZERO) += c;
        }
        out
    }

    /// Largest |c_ij − conj(c_ji)| after merging.
    pub fn hermiticity_residual(&self) -> f64 {
        let m = self.merged();
        m.iter()
            .map(|(&(i, j), c)| (c - m.get(&(j, i)).copied().unwrap_or(ZERO).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Products of number operators, by mode position.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityForm {
    pub terms: Vec<(Vec<usize>, f64)>,
}

/// The Hamiltonian of a spec in mode positions.
pub fn hamiltonian_terms(spec: &ModelSpec, modes: &ModeIndex) -> Result<(QuadraticForm, DensityForm)> {
    let mut quad = QuadraticForm::default();
    let pos = |m: Mode| {
        modes
            .position(m)
            .ok_or_else(|| Error::InvalidModel(format!("mode {m:?} missing from the mode index")))
    };
    for bond in spec.bonds() {
        for ((j, jp), c) in bond.amplitude.indexed_iter() {
            quad.push(pos(Mode::new(bond.x, j))?, pos(Mode::new(bond.y, jp))?, *c);
        }
    }
    let mut dens = DensityForm::default();
    for term in spec.density_terms() {
        let mut idx = term.modes.iter().map(|m| pos(*m)).collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        dens.terms.push((idx, term.coefficient));
    }
    Ok((quad, dens))
}

/// Occupation words with a fixed popcount, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    pub particles: usize,
    words: Vec<u64>,
}

impl SectorBasis {
    pub fn new(num_modes: usize, particles: usize) -> Self {
        assert!(num_modes < 64, "at most 63 modes");
        let mut words = Vec::with_capacity(binomial(num_modes, particles));
        if particles == 0 {
            words.push(0);
        } else if particles <= num_modes {
            // Gosper's hack walks the words in increasing order.
            let limit = 1u64 << num_modes;
            let mut w = (1u64 << particles) - 1;
            while w < limit {
                words.push(w);
                let c = w & w.wrapping_neg();
                let r = w + c;
                w = (((r ^ w) >> 2) / c) | r;
            }
        }
        SectorBasis { particles, words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn lookup(&self, word: u64) -> Option<usize> {
        self.words.binary_search(&word).ok()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn parity_below(word: u64, bit: usize) -> bool {
    (word & ((1u64 << bit) - 1)).count_ones() % 2 == 1
}

/// Compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    pub fn zeros(dim: usize) -> Self {
        Csr {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Duplicates are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        let (mut ri, mut ci, mut vi) = (Vec::new(), Vec::new(), Vec::new());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if keep[k] {
                ri.push(r);
                ci.push(c);
                vi.push(v);
            }
            k += 1;
        }
        for &r in &ri {
            indptr[r + 1] += 1;
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            dim,
            indptr,
            indices: ci,
            values: vi,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (r, c, v) in self.triplets() {
            out[[r, c]] += v;
        }
        out
    }

    pub fn adjoint(&self) -> Csr {
        let t = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| (c, r, v.conj()))
            .collect();
        Csr::from_triplets(self.dim, t)
    }

    pub fn scaled(&self, s: C64) -> Csr {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Csr) -> Csr {
        let mut t = self.triplets();
        t.extend(other.triplets());
        Csr::from_triplets(self.dim, t)
    }

    pub fn matmul(&self, other: &Csr) -> Csr {
        let n = self.dim;
        let mut acc = vec![ZERO; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; n];
        let mut t = Vec::new();
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = ZERO;
                mark[c] = false;
            }
            touched.clear();
        }
        Csr::from_triplets(n, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// self × dense
    pub fn dot_dense(&self, v: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, v.ncols()));
        for r in 0..self.dim {
            let mut row = out.row_mut(r);
            for (c, a) in self.row(r) {
                row.scaled_add(a, &v.row(c));
            }
        }
        out
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.add(&self.adjoint().scaled(C64::new(-1.0, 0.0))).max_abs()
    }
}

/// Caps on problem size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdConfig {
    /// Largest sector that may be diagonalized densely.
    pub sector_cap: usize,
    /// Largest total Fock dimension that may be assembled.
    pub fock_cap: usize,
}

impl Default for EdConfig {
    fn default() -> Self {
        EdConfig {
            sector_cap: 20_000,
            fock_cap: 1 << 22,
        }
    }
}

/// A number-conserving operator as one sparse block per particle number.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorOperator {
    modes: Vec<Mode>,
    pub blocks: BTreeMap<usize, Csr>,
    pub hermitian: bool,
}

impl SectorOperator {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    fn check_same(&self, other: &SectorOperator) -> Result<()> {
        if self.modes != other.modes || self.blocks.keys().ne(other.blocks.keys()) {
            return Err(Error::ModeMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &SectorOperator, f: impl Fn(&Csr, &Csr) -> Csr) -> Result<SectorOperator> {
        self.check_same(other)?;
        let blocks = self
            .blocks
            .iter()
            .map(|(n, a)| (*n, f(a, &other.blocks[n])))
            .collect();
        Ok(SectorOperator {
            modes: self.modes.clone(),
            blocks,
            hermitian: false,
        })
    }

    pub fn add(&self, other: &SectorOperator) -> Result<SectorOperator> {
        let mut out = self.zip_with(other, |a, b| a.add(b))?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn sub(&self, other: &SectorOperator) -> Result<SectorOperator> {
        let mut out = self.zip_with(other, |a, b| a.add(&b.scaled(C64::new(-1.0, 0.0))))?;
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn matmul(&self, other: &SectorOperator) -> Result<SectorOperator> {
        self.zip_with(other, |a, b| a.matmul(b))
    }

    /// [A, B]
    pub fn commutator(&self, other: &SectorOperator) -> Result<SectorOperator> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn scaled(&self, s: C64) -> SectorOperator {
        SectorOperator {
            modes: self.modes.clone(),
            blocks: self.blocks.iter().map(|(n, a)| (*n, a.scaled(s))).collect(),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn adjoint(&self) -> SectorOperator {
        SectorOperator {
            modes: self.modes.clone(),
            blocks: self.blocks.iter().map(|(n, a)| (*n, a.adjoint())).collect(),
            hermitian: self.hermitian,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().map(Csr::max_abs).fold(0.0, f64::max)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.blocks
            .values()
            .map(Csr::hermiticity_residual)
            .fold(0.0, f64::max)
    }

    /// Conjugation by a magnetic translation: the operator U A U* on the
    /// translated mode set. Row-major order is translation invariant, so
    /// occupation words carry over unchanged.
    pub fn translated(&self, map: &crate::model::TranslationMap) -> SectorOperator {
        let phases: Vec<C64> = self.modes.iter().map(|m| map.phase(*m)).collect();
        let word_phase = |w: u64| {
            let mut p = C64::new(1.0, 0.0);
            for (i, ph) in phases.iter().enumerate() {
                if w >> i & 1 == 1 {
                    p *= ph;
                }
            }
            p
        };
        let m = self.modes.len();
        let blocks = self
            .blocks
            .iter()
            .map(|(&n, a)| {
                let basis = SectorBasis::new(m, n);
                let ph: Vec<C64> = basis.words().iter().map(|&w| word_phase(w)).collect();
                let t = a
                    .triplets()
                    .into_iter()
                    .map(|(r, c, v)| (r, c, ph[r] * v * ph[c].conj()))
                    .collect();
                (n, Csr::from_triplets(a.dim, t))
            })
            .collect();
        SectorOperator {
            modes: self.modes.iter().map(|x| map.image(*x)).collect(),
            blocks,
            hermitian: self.hermitian,
        }
    }
}

fn check_fock(modes: usize, config: &EdConfig) -> Result<()> {
    if modes >= 63 || (1usize << modes) > config.fock_cap {
        return Err(Error::FockTooLarge {
            modes,
            cap: config.fock_cap,
        });
    }
    Ok(())
}

fn build_block(m: usize, n: usize, quad: &QuadraticForm, dens: &DensityForm) -> Csr {
    let basis = SectorBasis::new(m, n);
    let mut t = Vec::new();
    for (col, &w) in basis.words().iter().enumerate() {
        for &(i, j, c) in &quad.terms {
            if w >> j & 1 == 0 {
                continue;
            }
            let w1 = w ^ (1 << j);
            if w1 >> i & 1 == 1 {
                continue;
            }
            let w2 = w1 | (1 << i);
            let flip = parity_below(w, j) ^ parity_below(w1, i);
            let row = basis.lookup(w2).expect("number-conserving term");
            t.push((row, col, if flip { -c } else { c }));
        }
        let mut diag = 0.0;
        for (idx, c) in &dens.terms {
            if idx.iter().all(|&i| w >> i & 1 == 1) {
                diag += c;
            }
        }
        if diag != 0.0 {
            t.push((col, col, C64::new(diag, 0.0)));
        }
    }
    Csr::from_triplets(basis.len(), t)
}

/// Assemble Σ c a*_i a_j + Σ c Π n in the selected sectors (all when `None`).
pub fn assemble_forms(
    modes: &ModeIndex,
    quad: &QuadraticForm,
    dens: &DensityForm,
    sectors: Option<&[usize]>,
    config: &EdConfig,
) -> Result<SectorOperator> {
    let m = modes.len();
    check_fock(m, config)?;
    for &(i, j, _) in &quad.terms {
        for k in [i, j] {
            if k >= m {
                return Err(Error::ModeOutOfRange { index: k, modes: m });
            }
        }
    }
    let all: Vec<usize> = (0..=m).collect();
    let sectors = sectors.unwrap_or(&all);
    let blocks: Vec<(usize, Csr)> = sectors
        .par_iter()
        .map(|&n| (n, build_block(m, n, quad, dens)))
        .collect();
    let hermitian = quad.hermiticity_residual() <= 1e-12;
    Ok(SectorOperator {
        modes: modes.modes().to_vec(),
        blocks: blocks.into_iter().collect(),
        hermitian,
    })
}

pub fn assemble_quadratic(modes: &ModeIndex, quad: &QuadraticForm, config: &EdConfig) -> Result<SectorOperator> {
    assemble_forms(modes, quad, &DensityForm::default(), None, config)
}

/// The many-body Hamiltonian of `spec`.
pub fn assemble(spec: &ModelSpec, modes: &ModeIndex, config: &EdConfig) -> Result<SectorOperator> {
    spec.validate()?;
    let (quad, dens) = hamiltonian_terms(spec, modes)?;
    let mut op = assemble_forms(modes, &quad, &dens, None, config)?;
    op.hermitian = true;
    let r = op.hermiticity_residual();
    if r > 1e-12 {
        return Err(Error::NotHermitian(r));
    }
    Ok(op)
}

/// N_Z = Σ_{x∈Z, j} n_{x,j}.
pub fn number_operator(z: &SiteSet, modes: &ModeIndex, config: &EdConfig) -> Result<SectorOperator> {
    let region: SiteSet = modes.modes().iter().map(|m| m.site).collect();
    if !z.is_subset(&region) {
        return Err(Error::NotSubset("Z"));
    }
    let mut dens = DensityForm::default();
    for (i, m) in modes.modes().iter().enumerate() {
        if z.contains(m.site) {
            dens.terms.push((vec![i], 1.0));
        }
    }
    let mut op = assemble_forms(modes, &QuadraticForm::default(), &dens, None, config)?;
    op.hermitian = true;
    Ok(op)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorSpectrum {
    pub modes: Vec<Mode>,
    pub sectors: BTreeMap<usize, SectorEigen>,
}

pub fn diagonalize(h: &SectorOperator, config: &EdConfig) -> Result<SectorSpectrum> {
    if !h.hermitian {
        return Err(Error::NotHermitian(h.hermiticity_residual()));
    }
    for (&n, a) in &h.blocks {
        if a.dim > config.sector_cap {
            return Err(Error::SectorTooLarge {
                particles: n,
                dim: a.dim,
                cap: config.sector_cap,
            });
        }
    }
    let done: Vec<(usize, SectorEigen)> = h
        .blocks
        .par_iter()
        .map(|(&n, a)| {
            let (values, vectors) = linalg::hermitian_eigh(&a.to_dense())?;
            Ok((n, SectorEigen { values, vectors }))
        })
        .collect::<Result<_>>()?;
    Ok(SectorSpectrum {
        modes: h.modes.clone(),
        sectors: done.into_iter().collect(),
    })
}

impl SectorSpectrum {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// max over sectors of ‖H − VΛV*‖_max.
    pub fn reconstruction_residual(&self, h: &SectorOperator) -> f64 {
        self.sectors
            .iter()
            .map(|(n, e)| {
                let lam = Array2::from_diag(&ndarray::Array1::from_iter(
                    e.values.iter().map(|&x| C64::new(x, 0.0)),
                ));
                let back = e.vectors.dot(&lam).dot(&e.vectors.t().mapv(|z| z.conj()));
                let dense = h.blocks[n].to_dense();
                back.iter()
                    .zip(dense.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn log_partition(&self, params: ThermoParams) -> f64 {
        let exps: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|(&n, e)| {
                e.values
                    .iter()
                    .map(move |&x| -params.beta * (x - params.mu * n as f64))
            })
            .collect();
        log_sum_exp(&exps)
    }

    pub fn partition_function(&self, params: ThermoParams) -> LogPartition {
        LogPartition {
            log_z: self.log_partition(params),
        }
    }

    pub fn gibbs(&self, params: ThermoParams) -> GibbsState<'_> {
        let log_z = self.log_partition(params);
        let weights = self
            .sectors
            .iter()
            .map(|(&n, e)| {
                let w = e
                    .values
                    .iter()
                    .map(|&x| (-params.beta * (x - params.mu * n as f64) - log_z).exp())
                    .collect();
                (n, w)
            })
            .collect();
        GibbsState {
            spectrum: self,
            params,
            log_z,
            weights,
        }
    }
}

/// log Σ e^{a_i}, with the maximum subtracted.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + a.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPartition {
    pub log_z: f64,
}

impl LogPartition {
    /// Z itself, when it fits in an f64.
    pub fn value(self) -> Option<f64> {
        let z = self.log_z.exp();
        (z.is_finite() && z > 0.0).then_some(z)
    }
}

/// ρ = e^{−β(H−μN)}/Z, held as eigenvalue weights.
pub struct GibbsState<'a> {
    pub spectrum: &'a SectorSpectrum,
    pub params: ThermoParams,
    pub log_z: f64,
    weights: BTreeMap<usize, Vec<f64>>,
}

impl GibbsState<'_> {
    fn check(&self, a: &SectorOperator) -> Result<()> {
        if a.modes != self.spectrum.modes || a.blocks.keys().ne(self.spectrum.sectors.keys()) {
            return Err(Error::ModeMismatch);
        }
        Ok(())
    }

    /// ⟨v_i|A|v_i⟩ for every eigenvector of every sector.
    pub fn eigen_diagonal(&self, a: &SectorOperator) -> Result<BTreeMap<usize, Vec<C64>>> {
        self.check(a)?;
        Ok(self
            .spectrum
            .sectors
            .iter()
            .map(|(&n, e)| {
                let av = a.blocks[&n].dot_dense(&e.vectors);
                let d = (0..e.values.len())
                    .map(|i| {
                        e.vectors
                            .column(i)
                            .iter()
                            .zip(av.column(i).iter())
                            .map(|(v, w)| v.conj() * w)
                            .sum()
                    })
                    .collect();
                (n, d)
            })
            .collect())
    }

    pub fn mean_number(&self) -> f64 {
        self.weights
            .iter()
            .map(|(&n, w)| n as f64 * w.iter().sum::<f64>())
            .sum()
    }

    /// tr(ρA).
    pub fn expectation(&self, a: &SectorOperator) -> Result<C64> {
        let d = self.eigen_diagonal(a)?;
        Ok(self
            .weights
            .iter()
            .flat_map(|(n, w)| w.iter().zip(&d[n]).map(|(p, x)| x * *p))
            .sum())
    }

    /// tr(ρA) and ∂_μ tr(ρA) = β·Cov(N, A) in one pass.
    pub fn expectation_and_mu_derivative(&self, a: &SectorOperator) -> Result<(C64, C64)> {
        let d = self.eigen_diagonal(a)?;
        let nbar = self.mean_number();
        let mut mean = ZERO;
        let mut deriv = ZERO;
        for (n, w) in &self.weights {
            for (p, x) in w.iter().zip(&d[n]) {
                mean += x * *p;
                deriv += x * (*p * (*n as f64 - nbar));
            }
        }
        Ok((mean, deriv * self.params.beta))
    }

    /// ⟨AB⟩ − ⟨A⟩⟨B⟩.
    pub fn covariance(&self, a: &SectorOperator, b: &SectorOperator) -> Result<C64> {
        self.check(a)?;
        self.check(b)?;
        let mut ab = ZERO;
        for (n, e) in &self.spectrum.sectors {
            let x = a.blocks[n].adjoint().dot_dense(&e.vectors);
            let y = b.blocks[n].dot_dense(&e.vectors);
            for (i, p) in self.weights[n].iter().enumerate() {
                let s: C64 = x
                    .column(i)
                    .iter()
                    .zip(y.column(i).iter())
                    .map(|(u, v)| u.conj() * v)
                    .sum();
                ab += s * *p;
            }
        }
        Ok(ab - self.expectation(a)? * self.expectation(b)?)
    }

    /// tr(F_L A) = β·Cov(N, A).
    pub fn mu_derivative_expectation(&self, a: &SectorOperator) -> Result<f64> {
        Ok(self.expectation_and_mu_derivative(a)?.1.re)
    }

    /// tr(F^Z A) = β·Cov(N_Z, A).
    pub fn truncated_fluctuation_expectation(
        &self,
        z: &SiteSet,
        modes: &ModeIndex,
        a: &SectorOperator,
        config: &EdConfig,
    ) -> Result<f64> {
        let nz = number_operator(z, modes, config)?;
        Ok(self.params.beta * self.covariance(&nz, a)?.re)
    }

    /// Γ_{ji} = ⟨a*_i a_j⟩ and its μ-derivative.
    pub fn one_body_density(&self, modes: &ModeIndex, config: &EdConfig) -> Result<(Array2<C64>, Array2<C64>)> {
        let m = modes.len();
        let mut gamma = Array2::zeros((m, m));
        let mut dgamma = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let mut q = QuadraticForm::default();
                q.push(i, j, C64::new(1.0, 0.0));
                let op = assemble_quadratic(modes, &q, config)?;
                let (v, d) = self.expectation_and_mu_derivative(&op)?;
                gamma[[j, i]] = v;
                dgamma[[j, i]] = d;
            }
        }
        Ok((gamma, dgamma))
    }
}
