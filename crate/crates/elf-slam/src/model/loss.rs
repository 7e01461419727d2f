//! Normalized-temperature cross-entropy contrastive loss over in-batch
//! positives and negatives.

use super::Elf;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Loss of one batch of embeddings arranged so indices `(2t, 2t+1)` form
/// positive pairs. Returns the mean over all ordered positive directions
/// together with the per-direction losses (entry `i` is the loss with
/// anchor `i` and its partner as the positive).
pub fn nt_xent_loss<T: Scalar>(elfs: &[Elf<T>], tau: T) -> Result<(T, Vec<T>)> {
    let n = elfs.len();
    if n < 2 || n % 2 != 0 {
        return Err(Error::Pairing(format!(
            "contrastive batch needs an even count >= 2, got {n}"
        )));
    }
    if tau <= T::zero() {
        return Err(Error::InvalidConfig("temperature must be positive".into()));
    }
    let sims = similarity_matrix(elfs);
    let mut per_direction = Vec::with_capacity(n);
    let mut total = T::zero();
    for i in 0..n {
        let j = partner(i);
        let row = &sims[i * n..(i + 1) * n];
        // log-sum-exp over k != i, stabilized by the row maximum.
        let mut m = T::neg_infinity();
        for (k, &s) in row.iter().enumerate() {
            if k != i && s > m {
                m = s;
            }
        }
        let mut denom = T::zero();
        for (k, &s) in row.iter().enumerate() {
            if k != i {
                denom += ((s - m) / tau).exp();
            }
        }
        let loss = -(row[j] - m) / tau + denom.ln();
        per_direction.push(loss);
        total += loss;
    }
    Ok((total / T::of_usize(n), per_direction))
}

/// Gradient of [`nt_xent_loss`] with respect to each embedding.
pub fn nt_xent_grad<T: Scalar>(elfs: &[Elf<T>], tau: T) -> Result<(T, Vec<Vec<T>>)> {
    let n = elfs.len();
    let (loss, _) = nt_xent_loss(elfs, tau)?;
    let sims = similarity_matrix(elfs);
    let dim = elfs[0].dim();
    let mut d_z = vec![vec![T::zero(); dim]; n];
    let scale = T::one() / (tau * T::of_usize(n));
    for i in 0..n {
        let j = partner(i);
        let row = &sims[i * n..(i + 1) * n];
        let mut m = T::neg_infinity();
        for (k, &s) in row.iter().enumerate() {
            if k != i && s > m {
                m = s;
            }
        }
        let mut denom = T::zero();
        for (k, &s) in row.iter().enumerate() {
            if k != i {
                denom += ((s - m) / tau).exp();
            }
        }
        for k in 0..n {
            if k == i {
                continue;
            }
            let p = ((row[k] - m) / tau).exp() / denom;
            let coeff = (p - if k == j { T::one() } else { T::zero() }) * scale;
            // d loss / d sim(i, k) = coeff; sim is the dot product.
            for d in 0..dim {
                d_z[i][d] += coeff * elfs[k].as_slice()[d];
                d_z[k][d] += coeff * elfs[i].as_slice()[d];
            }
        }
    }
    Ok((loss, d_z))
}

fn similarity_matrix<T: Scalar>(elfs: &[Elf<T>]) -> Vec<T> {
    let n = elfs.len();
    let mut sims = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = elfs[i].dot(&elfs[j]);
            sims[i * n + j] = s;
            sims[j * n + i] = s;
        }
        sims[i * n + i] = T::one();
    }
    sims
}

fn partner(i: usize) -> usize {
    if i % 2 == 0 {
        i + 1
    } else {
        i - 1
    }
}
