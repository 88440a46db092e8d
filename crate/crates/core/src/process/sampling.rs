use rand::seq::SliceRandom;
use rand::Rng;

use super::{ChainInputs, ChainTrace, ModelSelector};
use crate::error::{Error, Result};
use crate::gp::{Column, Dataset};

/// Latin-hypercube style sample: each dimension is cut into `n` equal
/// strata, one uniform point is drawn per stratum, and the strata are
/// paired across dimensions by independent random permutations.
pub fn stratified_samples<R: Rng + ?Sized>(
    n: usize,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; bounds.len()]; n];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (row, k) in rows.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            row[j] = lo + (hi - lo) * (k as f64 + u) / n as f64;
        }
    }
    rows
}

/// Chain samples at stratified temperatures, with the yield model used for
/// each row.
#[derive(Clone, Debug)]
pub struct TrainingData {
    /// Temperature (°F) → yield strength (MPa).
    pub dataset: Dataset,
    /// Single model that produced each row's output.
    pub labels: Vec<ModelSelector>,
    /// Full stage trace of each row.
    pub traces: Vec<ChainTrace>,
}

/// Samples `n` temperatures over `window` and runs the chain at each.
///
/// With `ModelSelector::All` every row's yield model is drawn uniformly from
/// the three single models, after all temperatures have been drawn.
pub fn generate_training_data<R: Rng + ?Sized>(
    inputs: &ChainInputs,
    window: (f64, f64),
    selector: ModelSelector,
    n: usize,
    rng: &mut R,
) -> Result<TrainingData> {
    if n < 2 {
        return Err(Error::input(format!(
            "need at least 2 training rows, got {n}"
        )));
    }
    if window.0.is_nan() || window.1.is_nan() || window.0 >= window.1 {
        return Err(Error::input("design window must have lo < hi"));
    }
    let temps: Vec<f64> = stratified_samples(n, &[window], rng)
        .into_iter()
        .map(|r| r[0])
        .collect();
    let labels: Vec<ModelSelector> = match selector {
        ModelSelector::All => (0..n)
            .map(|_| ModelSelector::SINGLE[rng.random_range(0..3)])
            .collect(),
        single => vec![single; n],
    };
    let traces = temps
        .iter()
        .zip(&labels)
        .map(|(t, m)| inputs.trace(*t, *m))
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::from_rows(
        temps.iter().map(|t| vec![*t]).collect(),
        traces.iter().map(|t| t.yield_strength).collect(),
        vec![Column::new("temperature", "degF")],
        Column::new("yield_strength", "MPa"),
    )?;
    Ok(TrainingData {
        dataset,
        labels,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::full_chain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = stratified_samples(40, &[(0.0, 1.0), (10.0, 20.0)], &mut rng);
        for (j, (lo, hi)) in [(0.0, 1.0), (10.0, 20.0)].into_iter().enumerate() {
            let mut hit = [0; 40];
            for r in &rows {
                let k = (((r[j] - lo) / (hi - lo)) * 40.0).floor() as usize;
                hit[k.min(39)] += 1;
            }
            assert!(hit.iter().all(|h| *h == 1));
        }
    }

    #[test]
    fn middle_outputs_equal_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inputs = ChainInputs::default();
        let td = generate_training_data(
            &inputs,
            (1000.0, 2000.0),
            ModelSelector::Middle,
            100,
            &mut rng,
        )
        .unwrap();
        for (row, y) in td.dataset.rows().zip(td.dataset.outputs()) {
            let s = inputs.state.at_temperature(row[0]);
            let expect = full_chain(
                &s,
                &inputs.composition,
                inputs.cooling_rate,
                ModelSelector::Middle,
            )
            .unwrap();
            assert_eq!(*y, expect);
        }
    }

    #[test]
    fn all_selector_uses_models_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let td = generate_training_data(
            &ChainInputs::default(),
            (1000.0, 2000.0),
            ModelSelector::All,
            3000,
            &mut rng,
        )
        .unwrap();
        for m in ModelSelector::SINGLE {
            let f = td.labels.iter().filter(|l| **l == m).count() as f64 / 3000.0;
            assert!((f - 1.0 / 3.0).abs() < 0.03, "{m}: {f}");
        }
    }

    #[test]
    fn same_seed_same_data() {
        let gen = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            generate_training_data(
                &ChainInputs::default(),
                (1000.0, 2000.0),
                ModelSelector::All,
                20,
                &mut rng,
            )
            .unwrap()
            .dataset
        };
        assert_eq!(gen(1), gen(1));
        assert_ne!(gen(1), gen(2));
    }
}
