use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::copula::PairCopula;
use super::kendall::kendall_tau;
use super::structure::{Side, Source, VineStructure};
use crate::error::{Error, Result};
use crate::pair_copula::PairCopulaKde;
use crate::rng::{self, tag};

/// Fitting options shared by structure selection and fixed-structure fits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VineOptions {
    /// Edges whose input pairs have `|tau|` below this get the independence
    /// copula.
    pub truncation_tau: Option<f64>,
}

impl VineOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        match self.truncation_tau {
            Some(t) if !(0.0..=1.0).contains(&t) => {
                Err(Error::param("truncation_tau", format!("must lie in [0, 1], got {t}")))
            }
            _ => Ok(()),
        }
    }
}

/// Simplified vine copula with KDE pair copulas and one shared bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VineModel {
    structure: VineStructure,
    copulas: Vec<PairCopula>,
    taus: Vec<f64>,
    bandwidth: f64,
    /// Input columns of every edge at fit time. Not serialised.
    #[serde(skip)]
    pseudo_obs_cache: Vec<[Vec<f64>; 2]>,
}

pub(crate) fn h_column(copula: &PairCopula, inputs: &[Vec<f64>; 2], side: Side) -> Vec<f64> {
    let [a, b] = inputs;
    match side {
        Side::First => a.iter().zip(b).map(|(&x, &y)| copula.h1(x, y)).collect(),
        Side::Second => a.iter().zip(b).map(|(&x, &y)| copula.h2(x, y)).collect(),
    }
}

fn fit_edge(inputs: &[Vec<f64>; 2], bandwidth: f64, options: &VineOptions) -> Result<(PairCopula, f64)> {
    let tau = kendall_tau(&inputs[0], &inputs[1])?;
    if options.truncation_tau.is_some_and(|t| tau.abs() < t) {
        return Ok((PairCopula::Independence, tau));
    }
    let kde = PairCopulaKde::fit_columns(&inputs[0], &inputs[1], bandwidth)?;
    Ok((PairCopula::Kde(kde), tau))
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if bandwidth > 0.0 && bandwidth.is_finite() {
        Ok(())
    } else {
        Err(Error::param("bandwidth", format!("must be positive, got {bandwidth}")))
    }
}

/// Validates an `n x d` pseudo-observation matrix and splits it into columns.
pub(crate) fn columns_of(pseudo_obs: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
    let (n, d) = pseudo_obs.dim();
    if n < 2 {
        return Err(Error::param("pseudo_obs", format!("need at least 2 rows, got {n}")));
    }
    if d < 2 {
        return Err(Error::param("pseudo_obs", format!("need at least 2 columns, got {d}")));
    }
    if let Some(&bad) = pseudo_obs.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidProbability { value: bad });
    }
    Ok(pseudo_obs.columns().into_iter().map(|c| c.to_vec()).collect())
}

/// Per-point descent through the trees: edge inputs plus lazily evaluated
/// h-function outputs.
struct Descent<'a> {
    model: &'a VineModel,
    inputs: Vec<[f64; 2]>,
    h: Vec<[f64; 2]>,
}

impl<'a> Descent<'a> {
    fn new(model: &'a VineModel) -> Self {
        let e = model.copulas.len();
        Self { model, inputs: vec![[f64::NAN; 2]; e], h: vec![[f64::NAN; 2]; e] }
    }

    fn h(&mut self, edge: usize, side: Side) -> f64 {
        let slot = side as usize;
        if self.h[edge][slot].is_nan() {
            let [a, b] = self.inputs[edge];
            let c = &self.model.copulas[edge];
            self.h[edge][slot] = match side {
                Side::First => c.h1(a, b),
                Side::Second => c.h2(a, b),
            };
        }
        self.h[edge][slot]
    }

    fn source(&mut self, src: Source, u: &[f64]) -> f64 {
        match src {
            Source::Variable(i) => u[i],
            Source::Edge { edge, side } => self.h(edge, side),
        }
    }

    fn fill(&mut self, u: &[f64]) {
        let edges = self.model.structure.edges();
        for (e, edge) in edges.iter().enumerate() {
            let a = self.source(edge.sources[0], u);
            let b = self.source(edge.sources[1], u);
            self.inputs[e] = [a, b];
        }
    }
}

impl VineModel {
    /// Fits the pair copulas of a fixed structure tree by tree. Inputs of
    /// deeper trees are h-function transforms of the parent tree's inputs.
    pub fn fit(
        pseudo_obs: ArrayView2<f64>,
        structure: &VineStructure,
        bandwidth: f64,
        options: &VineOptions,
    ) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        options.validate()?;
        let columns = columns_of(pseudo_obs)?;
        if columns.len() != structure.dimension() {
            return Err(Error::DimensionMismatch { expected: structure.dimension(), found: columns.len() });
        }
        let n_edges = structure.edges().len();
        let mut copulas: Vec<Option<PairCopula>> = vec![None; n_edges];
        let mut taus = vec![0.0; n_edges];
        let mut cache: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; n_edges];
        let mut h_cache: Vec<[Option<Vec<f64>>; 2]> = vec![[None, None]; n_edges];

        for level in 1..structure.dimension() {
            let level_edges: Vec<usize> = structure.tree_edges(level).collect();
            let mut needed: Vec<(usize, Side)> = level_edges
                .iter()
                .flat_map(|&e| structure.edges()[e].sources)
                .filter_map(|s| match s {
                    Source::Edge { edge, side } => Some((edge, side)),
                    Source::Variable(_) => None,
                })
                .filter(|&(edge, side)| h_cache[edge][side as usize].is_none())
                .collect();
            needed.sort_by_key(|&(e, s)| (e, s as usize));
            needed.dedup();
            let computed: Vec<Vec<f64>> = needed
                .par_iter()
                .map(|&(e, side)| h_column(copulas[e].as_ref().unwrap(), &cache[e], side))
                .collect();
            for ((e, side), col) in needed.into_iter().zip(computed) {
                h_cache[e][side as usize] = Some(col);
            }

            for &e in &level_edges {
                let inputs = structure.edges()[e].sources.map(|s| match s {
                    Source::Variable(i) => columns[i].clone(),
                    Source::Edge { edge, side } => h_cache[edge][side as usize].clone().unwrap(),
                });
                cache[e] = inputs;
            }
            let fitted: Vec<(PairCopula, f64)> = level_edges
                .par_iter()
                .map(|&e| fit_edge(&cache[e], bandwidth, options))
                .collect::<Result<_>>()?;
            for (&e, (c, t)) in level_edges.iter().zip(fitted) {
                copulas[e] = Some(c);
                taus[e] = t;
            }
        }
        Ok(Self {
            structure: structure.clone(),
            copulas: copulas.into_iter().map(Option::unwrap).collect(),
            taus,
            bandwidth,
            pseudo_obs_cache: cache,
        })
    }

    /// Assembles a model from parts, e.g. after selection.
    pub(crate) fn from_parts(
        structure: VineStructure,
        copulas: Vec<PairCopula>,
        taus: Vec<f64>,
        bandwidth: f64,
        pseudo_obs_cache: Vec<[Vec<f64>; 2]>,
    ) -> Self {
        Self { structure, copulas, taus, bandwidth, pseudo_obs_cache }
    }

    pub fn structure(&self) -> &VineStructure {
        &self.structure
    }

    pub fn dimension(&self) -> usize {
        self.structure.dimension()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn copulas(&self) -> &[PairCopula] {
        &self.copulas
    }

    /// Kendall's tau of each edge's fit-time inputs, in edge order.
    pub fn edge_taus(&self) -> &[f64] {
        &self.taus
    }

    /// Fit-time input columns of edge `e`; `None` after deserialisation.
    pub fn edge_inputs(&self, e: usize) -> Option<(&[f64], &[f64])> {
        self.pseudo_obs_cache
            .get(e)
            .filter(|c| !c[0].is_empty())
            .map(|c| (c[0].as_slice(), c[1].as_slice()))
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: u.len() });
        }
        match u.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            Some(&bad) => Err(Error::InvalidProbability { value: bad }),
            None => Ok(()),
        }
    }

    /// Sum of pair-copula log densities at the edges' conditional coordinates.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        Ok(self.log_density_unchecked(u))
    }

    pub(crate) fn log_density_unchecked(&self, u: &[f64]) -> f64 {
        let mut descent = Descent::new(self);
        descent.fill(u);
        descent
            .inputs
            .iter()
            .zip(&self.copulas)
            .map(|(&[a, b], c)| c.log_density(a, b))
            .sum()
    }

    /// Row-wise log densities, evaluated in parallel.
    pub fn log_density_rows(&self, u: ArrayView2<f64>) -> Result<Vec<f64>> {
        let rows: Vec<ArrayView1<f64>> = u.rows().into_iter().collect();
        rows.par_iter()
            .map(|r| {
                let r = r.to_vec();
                self.log_density(&r)
            })
            .collect()
    }

    /// Maps `u` to independent uniforms, one per variable.
    pub fn rosenblatt(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(u)?;
        let mut descent = Descent::new(self);
        descent.fill(u);
        let mut w = vec![0.0; u.len()];
        for col in self.structure.sampling_columns() {
            w[col.variable] = match col.edges.last() {
                None => u[col.variable],
                Some(&e) => {
                    let edge = &self.structure.edges()[e];
                    let side = if edge.conditioned.0 == col.variable { Side::First } else { Side::Second };
                    descent.h(e, side)
                }
            };
        }
        Ok(w)
    }

    /// Inverse of [`rosenblatt`](Self::rosenblatt).
    pub fn inverse_rosenblatt(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_point(w)?;
        let edges = self.structure.edges();
        let mut descent = Descent::new(self);
        let mut u = vec![f64::NAN; w.len()];
        for col in self.structure.sampling_columns() {
            let var = col.variable;
            let mut p = w[var];
            for &e in col.edges.iter().rev() {
                let edge = &edges[e];
                let slot = usize::from(edge.conditioned.0 != var);
                let partner = descent.source(edge.sources[1 - slot], &u);
                let c = &self.copulas[e];
                let x = if slot == 0 { c.h1_inverse(p, partner)? } else { c.h2_inverse(p, partner)? };
                descent.inputs[e][slot] = x;
                descent.inputs[e][1 - slot] = partner;
                p = x;
            }
            u[var] = p;
        }
        Ok(u)
    }

    pub(crate) fn sample_rows(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let d = self.dimension();
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, &[tag::VINE_SAMPLE, i as u64]);
                let w: Vec<f64> = (0..d).map(|_| r.sample(Open01)).collect();
                self.inverse_rosenblatt(&w)
            })
            .collect()
    }

    /// `count x d` draws from the vine copula. Row `i` depends only on
    /// `(seed, i)`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Array2<f64>> {
        if count == 0 {
            return Err(Error::param("count", "must be at least 1"));
        }
        let rows = self.sample_rows(count, seed)?;
        let d = self.dimension();
        Ok(Array2::from_shape_vec((count, d), rows.concat()).expect("rows have length d"))
    }
}
