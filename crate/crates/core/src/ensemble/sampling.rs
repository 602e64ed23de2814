use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Uniform `q`-subset of `0..p`, returned in ascending order.
pub fn sample_subset_uniform<R: Rng + ?Sized>(p: usize, q: usize, rng: &mut R) -> Result<Vec<usize>> {
    if q == 0 || q > p {
        return Err(Error::InvalidParameter(format!("subset size must lie in 1..={p}, got {q}")));
    }
    if q == p {
        return Ok((0..p).collect());
    }
    let mut picked = index::sample(rng, p, q).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Weighted sampling without replacement by random keys.
///
/// Each index gets key `ln(u_j) / w_j` (the log of `u_j^(1/w_j)`), and the
/// `q` largest keys win. This matches drawing one index at a time with
/// probability proportional to the remaining weights. Zero-weight indices
/// are never chosen; if fewer than `q` weights are positive the result is
/// shorter than `q` unless `fill` is set, in which case the shortfall is
/// drawn uniformly from the zero-weight indices. Output is ascending.
pub fn sample_subset_weighted<R: Rng + ?Sized>(
    weights: &[f64],
    q: usize,
    fill: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let p = weights.len();
    if q == 0 || q > p {
        return Err(Error::InvalidParameter(format!("subset size must lie in 1..={p}, got {q}")));
    }
    if let Some(j) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("sampling weight {j} is invalid: {}", weights[j])));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidParameter("all sampling weights are zero".into()));
    }
    // one uniform per index, drawn in index order, keeps the stream layout fixed
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(p);
    let mut zeros: Vec<usize> = Vec::new();
    for (j, &w) in weights.iter().enumerate() {
        let u: f64 = 1.0 - rng.random::<f64>();
        if w > 0.0 {
            keyed.push((u.ln() / w, j));
        } else {
            zeros.push(j);
        }
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut picked: Vec<usize> = keyed.iter().take(q).map(|&(_, j)| j).collect();
    if fill && picked.len() < q {
        let need = q - picked.len();
        let extra = index::sample(rng, zeros.len(), need);
        picked.extend(extra.iter().map(|k| zeros[k]));
    }
    picked.sort_unstable();
    Ok(picked)
}
