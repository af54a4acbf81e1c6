//! One interface over the two Gibbs-state engines.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cache::{CacheKey, SpectrumCache};
use crate::currents::{current_table, CurrentCoefficients, CurrentField, FieldMeta};
use crate::error::{Error, Result};
use crate::fock::{self, EdConfig, ModeIndex, QuadraticForm, SectorSpectrum, ThermoParams};
use crate::free::{self, Density, FreeSpectrum};
use crate::geometry::DualEdge;
use crate::model::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Ed,
    Free,
    #[default]
    Auto,
}

impl EngineKind {
    /// Auto picks the free engine exactly when the spec is quadratic.
    pub fn resolve(self, spec: &ModelSpec) -> Result<EngineKind> {
        match self {
            EngineKind::Auto if spec.is_quadratic() => Ok(EngineKind::Free),
            EngineKind::Auto => Ok(EngineKind::Ed),
            EngineKind::Free if !spec.is_quadratic() => Err(Error::EngineMismatch(
                "the free engine was requested for an interacting spec".into(),
            )),
            other => Ok(other),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Ed => "ed",
            EngineKind::Free => "free",
            EngineKind::Auto => "auto",
        })
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ed" => Ok(EngineKind::Ed),
            "free" => Ok(EngineKind::Free),
            "auto" => Ok(EngineKind::Auto),
            _ => Err(Error::Config(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub ed: EdConfig,
    /// Free engine: skip eigenvectors when only thermodynamics is needed.
    pub energies_only: bool,
}

enum Inner {
    Free(FreeSpectrum),
    FreeEnergies(Vec<f64>),
    Ed(SectorSpectrum),
}

/// A spec with its spectrum, ready for any (β, μ).
pub struct Solved {
    pub spec: ModelSpec,
    pub modes: ModeIndex,
    pub engine: EngineKind,
    pub ed: EdConfig,
    inner: Inner,
}

/// Γ and ∂_μΓ at one (β, μ).
pub struct Thermal {
    pub params: ThermoParams,
    pub gamma: Density,
    pub dgamma: Density,
}

pub fn solve(spec: &ModelSpec, engine: EngineKind, opts: SolveOptions) -> Result<Solved> {
    spec.validate()?;
    let engine = engine.resolve(spec)?;
    let modes = ModeIndex::for_spec(spec);
    let inner = match engine {
        EngineKind::Free => {
            let h = free::one_body(spec)?;
            if opts.energies_only {
                Inner::FreeEnergies(free::one_body_energies(&h)?)
            } else {
                Inner::Free(free::diagonalize_one_body(&h)?)
            }
        }
        _ => {
            let h = fock::assemble(spec, &modes, &opts.ed)?;
            Inner::Ed(fock::diagonalize(&h, &opts.ed)?)
        }
    };
    Ok(Solved {
        spec: spec.clone(),
        modes,
        engine,
        ed: opts.ed,
        inner,
    })
}

/// Like [`solve`], but eigendecompositions are read from and written to
/// `cache` when one is given.
pub fn solve_cached(
    spec: &ModelSpec,
    engine: EngineKind,
    opts: SolveOptions,
    cache: Option<&SpectrumCache>,
) -> Result<Solved> {
    let Some(cache) = cache.filter(|_| !opts.energies_only) else {
        return solve(spec, engine, opts);
    };
    spec.validate()?;
    let engine = engine.resolve(spec)?;
    let modes = ModeIndex::for_spec(spec);
    let key = CacheKey::new(spec, &modes, &engine.to_string())?;
    let inner = match engine {
        EngineKind::Free => match cache.load_free(&key)? {
            Some(s) => Inner::Free(s),
            None => {
                let s = free::diagonalize_one_body(&free::one_body(spec)?)?;
                cache.store_free(&key, &s)?;
                Inner::Free(s)
            }
        },
        _ => match cache.load_ed(&key)? {
            Some(s) => Inner::Ed(s),
            None => {
                let h = fock::assemble(spec, &modes, &opts.ed)?;
                let s = fock::diagonalize(&h, &opts.ed)?;
                cache.store_ed(&key, &s)?;
                Inner::Ed(s)
            }
        },
    };
    Ok(Solved {
        spec: spec.clone(),
        modes,
        engine,
        ed: opts.ed,
        inner,
    })
}

impl Solved {
    pub fn log_partition(&self, params: ThermoParams) -> f64 {
        match &self.inner {
            Inner::Free(s) => free::free_log_partition(&s.energies, params),
            Inner::FreeEnergies(e) => free::free_log_partition(e, params),
            Inner::Ed(s) => s.log_partition(params),
        }
    }

    /// −log Z / (β·|region|).
    pub fn pressure(&self, params: ThermoParams) -> f64 {
        let v = self.spec.region.len();
        if v == 0 {
            return 0.0;
        }
        -self.log_partition(params) / (params.beta * v as f64)
    }

    pub fn mean_number(&self, params: ThermoParams) -> f64 {
        match &self.inner {
            Inner::Free(s) => s.energies.iter().map(|&e| free::fermi(params.beta, e, params.mu)).sum(),
            Inner::FreeEnergies(e) => e.iter().map(|&x| free::fermi(params.beta, x, params.mu)).sum(),
            Inner::Ed(s) => s.gibbs(params).mean_number(),
        }
    }

    pub fn ed_spectrum(&self) -> Option<&SectorSpectrum> {
        match &self.inner {
            Inner::Ed(s) => Some(s),
            _ => None,
        }
    }

    pub fn free_spectrum(&self) -> Option<&FreeSpectrum> {
        match &self.inner {
            Inner::Free(s) => Some(s),
            _ => None,
        }
    }

    pub fn thermal(&self, params: ThermoParams) -> Result<Thermal> {
        match &self.inner {
            Inner::Free(s) => Ok(Thermal {
                params,
                gamma: free::fermi_correlations(s, params),
                dgamma: free::fermi_derivative_correlations(s, params),
            }),
            Inner::FreeEnergies(_) => Err(Error::EngineMismatch(
                "the spectrum was computed without eigenvectors".into(),
            )),
            Inner::Ed(s) => {
                let (g, d) = s.gibbs(params).one_body_density(&self.modes, &self.ed)?;
                Ok(Thermal {
                    params,
                    gamma: Density::Dense(g),
                    dgamma: Density::Dense(d),
                })
            }
        }
    }

    /// ⟨A⟩ and ∂_μ⟨A⟩ for a quadratic A. The ED engine assembles A as a
    /// many-body operator; the free engine contracts it with Γ.
    pub fn quadratic(&self, params: ThermoParams, form: &QuadraticForm) -> Result<(f64, f64)> {
        match &self.inner {
            Inner::Ed(s) => {
                let op = fock::assemble_quadratic(&self.modes, form, &self.ed)?;
                let (v, d) = s.gibbs(params).expectation_and_mu_derivative(&op)?;
                Ok((v.re, d.re))
            }
            _ => {
                let t = self.thermal(params)?;
                Ok((
                    free::quadratic_expectation(&t.gamma, form)?.re,
                    free::quadratic_expectation(&t.dgamma, form)?.re,
                ))
            }
        }
    }

    pub fn meta(&self, params: ThermoParams) -> FieldMeta {
        FieldMeta {
            engine: self.engine.to_string(),
            beta: params.beta,
            mu: params.mu,
            field: self.spec.field,
        }
    }

    pub fn current_table(&self) -> BTreeMap<DualEdge, CurrentCoefficients> {
        current_table(&self.spec)
    }

    /// ⟨J⟩ and ∂_μ⟨J⟩ on every dual edge.
    pub fn current_fields(&self, params: ThermoParams) -> Result<(CurrentField, CurrentField)> {
        let table = self.current_table();
        let t = self.thermal(params)?;
        let meta = self.meta(params);
        Ok((
            CurrentField::from_density(&table, &self.modes, &t.gamma, meta.clone())?,
            CurrentField::from_density(&table, &self.modes, &t.dgamma, meta)?,
        ))
    }

    pub fn current_field(&self, params: ThermoParams) -> Result<CurrentField> {
        let table = self.current_table();
        let t = self.thermal(params)?;
        CurrentField::from_density(&table, &self.modes, &t.gamma, self.meta(params))
    }
}
