use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::BaselineConfig;
use crate::error::{Error, Result};
use crate::model::{DataMatrix, Labeling};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

/// Result of the best Lloyd restart.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Raw assignments in `0..k`.
    pub assignments: Vec<usize>,
    /// `k x d`, one centroid per row.
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every assignment step of the winning restart.
    pub history: Vec<f64>,
    pub restart: usize,
}

/// K-means++ seeded Lloyd iterations on the rows of `points` (`n x d`), best
/// of `restarts` by objective. Ties go to the lower restart index.
pub fn kmeans_rows(points: ArrayView2<'_, f64>, opts: &KMeansOptions) -> Result<KMeansFit> {
    let n = points.nrows();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= K <= n, got K = {}, n = {n}", opts.k)));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let run = |restart: usize| {
        let mut rng = rng::seeded(rng::derive_seed(opts.seed, restart as u64));
        let init = kmeanspp_seeds(points, opts.k, &mut rng);
        let mut fit = lloyd(points, init, opts.max_iter);
        fit.restart = restart;
        fit
    };

    #[cfg(feature = "parallel")]
    let fits: Vec<KMeansFit> = {
        use rayon::prelude::*;
        (0..opts.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<KMeansFit> = (0..opts.restarts).map(run).collect();

    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.objective < best.objective { f } else { best })
        .expect("at least one restart"))
}

/// Lloyd baseline on the samples of `x`: returns labels and the `p x K`
/// centroid matrix.
pub fn lloyd_kmeanspp(x: &DataMatrix, cfg: &BaselineConfig) -> Result<(Labeling, Array2<f64>)> {
    cfg.validate(x.n())?;
    let rows = x.samples_as_rows();
    let fit = kmeans_rows(
        rows.view(),
        &KMeansOptions {
            k: cfg.k,
            restarts: cfg.restarts,
            max_iter: cfg.max_iter,
            seed: cfg.seed,
        },
    )?;
    let labels = Labeling::compact(&fit.assignments)?;
    Ok((labels, fit.centroids.reversed_axes()))
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// D²-weighted seeding.
fn kmeanspp_seeds(points: ArrayView2<'_, f64>, k: usize, rng: &mut rng::Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)));
        }
    }
    centroids
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, out: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (i, p) in points.rows().into_iter().enumerate() {
        let (best, d) = centroids
            .rows()
            .into_iter()
            .map(|c| sq_dist(p, c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (c, d)| if d < acc.1 { (c, d) } else { acc });
        out[i] = best;
        dist[i] = d;
        total += d;
    }
    total
}

fn lloyd(points: ArrayView2<'_, f64>, mut centroids: Array2<f64>, max_iter: usize) -> KMeansFit {
    let (n, d) = points.dim();
    let k = centroids.nrows();
    let mut assignments = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let objective = assign(points, &centroids, &mut next, &mut dist);
        history.push(objective);
        if next == assignments || iterations >= max_iter {
            assignments.clone_from(&next);
            break;
        }
        assignments.clone_from(&next);
        iterations += 1;

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            let mut row = sums.row_mut(c);
            row += &points.row(i);
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mean = &sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).assign(&mean);
            } else {
                // Empty cluster: reseed at the point farthest from its centroid.
                let far = dist
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                    .0;
                centroids.row_mut(c).assign(&points.row(far));
                dist[far] = 0.0;
            }
        }
    }

    let objective = *history.last().expect("at least one assignment");
    KMeansFit {
        assignments,
        centroids,
        objective,
        iterations,
        history,
        restart: 0,
    }
}
