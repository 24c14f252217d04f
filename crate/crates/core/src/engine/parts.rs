use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::coalition::Coalition;
use crate::distributions::ConditionalSampler;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::rng::RngStream;
use crate::types::Rows;

/// Monte Carlo interventional SHAP parts.
///
/// For feature `i` and draw `k` (stream `stream.substream(i).substream(k)`):
/// sample an ordering `R`, let `S` be the features before `i`, draw one
/// point `z` of the features outside `S` from `p(X_S̄ | x_S)` and record
/// `f(x_S, x_i, z_rest) - f(x_S, z)`. The same draw feeds both terms.
pub fn interventional_parts(
    model: &dyn Predictor,
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    draws: usize,
    stream: RngStream,
) -> Result<Vec<f64>> {
    let m = model.n_features();
    if x.len() != m || sampler.n_features() != m {
        return Err(Error::Dimension {
            expected: m,
            got: x.len(),
        });
    }
    if draws == 0 {
        return Err(Error::InvalidInput("at least one permutation is required".into()));
    }
    (0..m)
        .map(|i| {
            let feature_stream = stream.substream(i as u64);
            let mut rows = Rows::with_capacity(m, 2 * draws);
            let mut order: Vec<usize> = (0..m).collect();
            for k in 0..draws as u64 {
                let mut rng = feature_stream.substream(k).rng();
                order.sort_unstable();
                order.shuffle(&mut rng);
                let mut known = Coalition::empty(m);
                for &j in order.iter().take_while(|&&j| j != i) {
                    known.insert(j);
                }
                let fill = sampler.sample_conditional(&known, x, 1, &mut rng)?;
                let mut without = x.to_vec();
                for (j, v) in known.missing().into_iter().zip(fill.row(0)) {
                    without[j] = *v;
                }
                let mut with = without.clone();
                with[i] = x[i];
                rows.push(&with)?;
                rows.push(&without)?;
            }
            let out = model.predict_batch(&rows)?;
            Ok(out.chunks_exact(2).map(|p| p[0] - p[1]).sum::<f64>() / draws as f64)
        })
        .collect()
}
