//! Innovation laws: the common distribution of the i.i.d. driving vectors.
//!
//! A law must have mean zero and identity covariance.  Finitely-supported
//! laws additionally carry an almost-sure norm bound; the Gaussian law is
//! admitted for diagnostics (it realises the exact coupling with the
//! limiting diffusion) but violates the norm-bound assumption, and every
//! report built on it is flagged accordingly.

use crate::error::CoreError;
use crate::rng::StreamRng;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    FiniteSupport,
    Gaussian,
}

#[derive(Clone, Debug)]
pub struct InnovationLaw {
    dim: usize,
    kind: LawKind,
    /// Atom vectors, flat `n_atoms * dim`, empty for Gaussian.
    atoms: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    norm_bound: Option<f64>,
    id: String,
}

impl InnovationLaw {
    /// Finitely-supported law from `(vector, probability)` atoms.
    ///
    /// Shape errors are rejected here; the moment conditions are the domain
    /// of [`validate_innovations`](super::validate_innovations) so that a
    /// malformed law can still be constructed and reported with witnesses.
    pub fn finite_support(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::param("dim", "must be positive"));
        }
        if atoms.is_empty() {
            return Err(CoreError::param("atoms", "finite-support law needs at least one atom"));
        }
        let mut flat = Vec::with_capacity(atoms.len() * dim);
        let mut probs = Vec::with_capacity(atoms.len());
        for (v, p) in &atoms {
            if v.len() != dim {
                return Err(CoreError::shape("atom vector", dim, v.len()));
            }
            flat.extend_from_slice(v);
            probs.push(*p);
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let norm_bound = atoms
            .iter()
            .map(|(v, _)| crate::stats::norm(v))
            .fold(0.0_f64, f64::max);
        Ok(InnovationLaw {
            dim,
            kind: LawKind::FiniteSupport,
            atoms: flat,
            probs,
            cumulative,
            norm_bound: Some(norm_bound),
            id: "custom".to_string(),
        })
    }

    /// Standard Gaussian innovations (diagnostic-only law).
    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::param("dim", "must be positive"));
        }
        Ok(InnovationLaw {
            dim,
            kind: LawKind::Gaussian,
            atoms: Vec::new(),
            probs: Vec::new(),
            cumulative: Vec::new(),
            norm_bound: None,
            id: format!("gaussian-{dim}d"),
        })
    }

    /// Product Rademacher law: all `2^dim` sign vectors, equal probability.
    /// Mean zero, identity covariance and norm bound `sqrt(dim)` hold by
    /// construction.
    pub fn rademacher(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::param("dim", "must be positive"));
        }
        if dim > 16 {
            return Err(CoreError::param("dim", "product Rademacher atom count 2^dim too large"));
        }
        let count = 1usize << dim;
        let p = 1.0 / count as f64;
        let mut atoms = Vec::with_capacity(count);
        for mask in 0..count {
            let v: Vec<f64> = (0..dim)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            atoms.push((v, p));
        }
        let mut law = Self::finite_support(dim, atoms)?;
        law.id = format!("rademacher-{dim}d");
        Ok(law)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn is_gaussian(&self) -> bool {
        self.kind == LawKind::Gaussian
    }

    pub fn n_atoms(&self) -> usize {
        self.probs.len()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Almost-sure norm bound `L_xi`; `None` for the Gaussian law.
    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }

    /// Draws one innovation vector into `out`; finite-support laws also
    /// return the atom index.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) -> Option<usize> {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            LawKind::Gaussian => {
                rng.fill_normal(out);
                None
            }
            LawKind::FiniteSupport => {
                let idx = rng.categorical(&self.cumulative);
                out.copy_from_slice(self.atom(idx));
                Some(idx)
            }
        }
    }

    /// Exact mean vector of a finite-support law.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for i in 0..self.n_atoms() {
            let p = self.probs[i];
            for (mj, aj) in m.iter_mut().zip(self.atom(i)) {
                *mj += p * aj;
            }
        }
        m
    }

    /// Exact covariance matrix (row-major) of a finite-support law.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mut c = vec![0.0; d * d];
        for i in 0..self.n_atoms() {
            let p = self.probs[i];
            let a = self.atom(i);
            for r in 0..d {
                for s in 0..d {
                    c[r * d + s] += p * a[r] * a[s];
                }
            }
        }
        c
    }
}
