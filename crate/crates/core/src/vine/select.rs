use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use super::copula::PairCopula;
use super::kendall::kendall_tau;
use super::model::{columns_of, h_column, VineModel, VineOptions};
use super::structure::{Side, VineStructure};
use crate::error::{Error, Result};
use crate::pair_copula::{argmin, fold_assignment, BandwidthSelection, CvSettings, PairCopulaKde};
use crate::rng::{derive_seed, tag};
use crate::scoring::energy_score_total;

struct Candidate {
    nodes: (usize, usize),
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    inputs: [Vec<f64>; 2],
    tau: f64,
}

/// Node set of a selected edge: two variables in tree 1, two parent edges
/// deeper down.
#[derive(Clone)]
struct Selected {
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    nodes: (usize, usize),
}

impl Selected {
    fn union(&self) -> Vec<usize> {
        let mut u = self.conditioning.clone();
        u.push(self.conditioned.0);
        u.push(self.conditioned.1);
        u.sort_unstable();
        u
    }

    fn side_of(&self, var: usize) -> Side {
        if self.conditioned.0 == var {
            Side::First
        } else {
            Side::Second
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Maximum spanning tree on `|tau|`; ties go to the lexicographically smaller
/// node pair.
fn kruskal(n_nodes: usize, mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    candidates.sort_by(|a, b| {
        b.tau
            .abs()
            .total_cmp(&a.tau.abs())
            .then_with(|| a.nodes.cmp(&b.nodes))
    });
    let mut parent: Vec<usize> = (0..n_nodes).collect();
    let mut chosen = Vec::with_capacity(n_nodes.saturating_sub(1));
    for c in candidates {
        let (ra, rb) = (find(&mut parent, c.nodes.0), find(&mut parent, c.nodes.1));
        if ra != rb {
            parent[ra] = rb;
            chosen.push(c);
        }
    }
    chosen
}

/// Dißmann-style selection: each tree is the maximum spanning tree on `|tau|`
/// among pairs allowed by the proximity condition, and the pair copulas are
/// fitted with `bandwidth` as the trees are built.
pub fn select_and_fit(pseudo_obs: ArrayView2<f64>, bandwidth: f64, options: &VineOptions) -> Result<VineModel> {
    options.validate()?;
    let columns = columns_of(pseudo_obs)?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::param("bandwidth", format!("must be positive, got {bandwidth}")));
    }
    let d = columns.len();
    let mut selected: Vec<Selected> = Vec::new();
    let mut copulas: Vec<PairCopula> = Vec::new();
    let mut taus: Vec<f64> = Vec::new();
    let mut cache: Vec<[Vec<f64>; 2]> = Vec::new();
    // indices into `selected` of the previous tree
    let mut previous: Vec<usize> = Vec::new();

    for level in 1..d {
        let candidates: Vec<Candidate> = if level == 1 {
            let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
            pairs
                .par_iter()
                .map(|&(i, j)| {
                    let tau = kendall_tau(&columns[i], &columns[j])?;
                    Ok(Candidate {
                        nodes: (i, j),
                        conditioned: (i, j),
                        conditioning: Vec::new(),
                        inputs: [columns[i].clone(), columns[j].clone()],
                        tau,
                    })
                })
                .collect::<Result<_>>()?
        } else {
            let h: Vec<[Vec<f64>; 2]> = previous
                .par_iter()
                .map(|&e| {
                    [Side::First, Side::Second].map(|s| h_column(&copulas[e], &cache[e], s))
                })
                .collect();
            let mut pairs = Vec::new();
            for p in 0..previous.len() {
                for q in p + 1..previous.len() {
                    let (a, b) = (&selected[previous[p]], &selected[previous[q]]);
                    let shares = a.nodes.0 == b.nodes.0
                        || a.nodes.0 == b.nodes.1
                        || a.nodes.1 == b.nodes.0
                        || a.nodes.1 == b.nodes.1;
                    if shares {
                        pairs.push((p, q));
                    }
                }
            }
            pairs
                .par_iter()
                .map(|&(p, q)| {
                    let (a, b) = (&selected[previous[p]], &selected[previous[q]]);
                    let (ua, ub) = (a.union(), b.union());
                    let x = *ua.iter().find(|v| !ub.contains(v)).unwrap();
                    let y = *ub.iter().find(|v| !ua.contains(v)).unwrap();
                    let conditioning: Vec<usize> = ua.iter().copied().filter(|v| ub.contains(v)).collect();
                    let hx = h[p][a.side_of(x) as usize].clone();
                    let hy = h[q][b.side_of(y) as usize].clone();
                    let (conditioned, inputs) = if x < y { ((x, y), [hx, hy]) } else { ((y, x), [hy, hx]) };
                    let tau = kendall_tau(&inputs[0], &inputs[1])?;
                    Ok(Candidate {
                        nodes: (previous[p], previous[q]),
                        conditioned,
                        conditioning,
                        inputs,
                        tau,
                    })
                })
                .collect::<Result<_>>()?
        };

        let n_nodes = if level == 1 { d } else { selected.len() };
        let tree = kruskal(n_nodes, candidates);
        let fitted: Vec<(PairCopula, f64)> = tree
            .par_iter()
            .map(|c| {
                let tau = c.tau;
                if options.truncation_tau.is_some_and(|t| tau.abs() < t) {
                    return Ok((PairCopula::Independence, tau));
                }
                let kde = PairCopulaKde::fit_columns(&c.inputs[0], &c.inputs[1], bandwidth)?;
                Ok((PairCopula::Kde(kde), tau))
            })
            .collect::<Result<_>>()?;
        previous.clear();
        for (c, (copula, tau)) in tree.into_iter().zip(fitted) {
            previous.push(selected.len());
            selected.push(Selected { conditioned: c.conditioned, conditioning: c.conditioning, nodes: c.nodes });
            copulas.push(copula);
            taus.push(tau);
            cache.push(c.inputs);
        }
    }

    let structure = VineStructure::from_edges(
        d,
        selected.iter().map(|s| (s.conditioned.0, s.conditioned.1, s.conditioning.clone())),
    )?;
    Ok(VineModel::from_parts(structure, copulas, taus, bandwidth, cache))
}

/// Structure chosen by [`select_and_fit`].
pub fn select_structure(pseudo_obs: ArrayView2<f64>, bandwidth: f64, options: &VineOptions) -> Result<VineStructure> {
    Ok(select_and_fit(pseudo_obs, bandwidth, options)?.structure().clone())
}

/// Cross-validated shared bandwidth for a fixed structure: held-out rows are
/// scored by the energy score against draws from the vine fitted on the other
/// folds.
pub fn select_vine_bandwidth(
    pseudo_obs: ArrayView2<f64>,
    structure: &VineStructure,
    grid: &[f64],
    cv: &CvSettings,
    options: &VineOptions,
    seed: u64,
) -> Result<BandwidthSelection> {
    if grid.is_empty() {
        return Err(Error::Empty("bandwidth grid"));
    }
    if let Some(bad) = grid.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::param("bandwidth_grid", format!("must be positive, got {bad}")));
    }
    if cv.n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    let n = pseudo_obs.nrows();
    let assignment = fold_assignment(n, cv.folds, seed)?;
    let split = |f: usize| -> (Array2<f64>, Vec<Vec<f64>>) {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
        let held = (0..n)
            .filter(|&i| assignment[i] == f)
            .map(|i| pseudo_obs.row(i).to_vec())
            .collect();
        (pseudo_obs.select(Axis(0), &train), held)
    };
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cv.folds).map(move |f| (g, f)))
        .collect();
    let fold_scores = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (train, held) = split(f);
            let model = VineModel::fit(train.view(), structure, grid[g], options)?;
            let samples = model.sample_rows(cv.n_samples, derive_seed(seed, &[tag::CV_SAMPLES, f as u64]))?;
            let report = energy_score_total(&samples, &held, cv.beta)?;
            Ok(report.per_point.iter().sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let scores: Vec<f64> = (0..grid.len())
        .map(|g| fold_scores[g * cv.folds..(g + 1) * cv.folds].iter().sum::<f64>() / n as f64)
        .collect();
    let best = argmin(&scores);
    Ok(BandwidthSelection { bandwidth: grid[best], score: scores[best], scores })
}

