//! Lock-free multi-threaded training. Workers pull chunk indices from a
//! shared counter and update the shared model without locks; with one
//! worker the result is bit-identical to `dvngram_core::trainer::train`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Instant;

use dvngram_core::corpus::{EncodedDocument, NoiseTable};
use dvngram_core::model::{EmbeddingModel, Real, TrainConfig};
use dvngram_core::trainer::{EpochReport, Kernel, Trainer};

use crate::error::{Error, Result};

/// Runs one epoch with `workers` threads.
pub fn run_epoch<T: Real>(
    trainer: &mut Trainer,
    model: &EmbeddingModel<T>,
    noise: &NoiseTable,
    workers: usize,
) -> Result<EpochReport> {
    if workers == 0 {
        return Err(Error::Usage("workers must be at least 1".into()));
    }
    let start = Instant::now();
    let plan = trainer.begin_epoch();
    let chunks = plan.num_chunks();
    let total = if workers == 1 {
        let mut kernel = Kernel::new();
        (0..chunks)
            .map(|c| plan.run_chunk(model, noise, c, &mut kernel))
            .sum()
    } else {
        let next = AtomicUsize::new(0);
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers.min(chunks.max(1)))
                .map(|_| {
                    s.spawn(|| {
                        let mut kernel = Kernel::new();
                        let mut sum = 0.0;
                        loop {
                            let c = next.fetch_add(1, Ordering::Relaxed);
                            if c >= chunks {
                                break sum;
                            }
                            sum += plan.run_chunk(model, noise, c, &mut kernel);
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .sum::<f64>()
        })
    };
    model.check_finite()?;
    Ok(plan.report(total, start.elapsed().as_secs_f64()))
}

/// Trains for the remaining epochs of `trainer`, calling `on_epoch` after
/// each one (used for logging and checkpoints).
pub fn run_epochs<T: Real>(
    trainer: &mut Trainer,
    model: &EmbeddingModel<T>,
    noise: &NoiseTable,
    workers: usize,
    mut on_epoch: impl FnMut(&EpochReport, &Trainer) -> Result<()>,
) -> Result<Vec<EpochReport>> {
    let mut reports = Vec::new();
    while trainer.epoch() < trainer.config().epochs {
        let report = run_epoch(trainer, model, noise, workers)?;
        on_epoch(&report, trainer)?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn train_parallel<T: Real>(
    model: &EmbeddingModel<T>,
    corpus: &[EncodedDocument],
    noise: &NoiseTable,
    config: &TrainConfig,
    workers: usize,
) -> Result<Vec<EpochReport>> {
    let mut trainer = Trainer::new(model, corpus, noise, config)?;
    run_epochs(&mut trainer, model, noise, workers, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dvngram_core::corpus::Vocabulary;
    use dvngram_core::trainer::train;

    fn toy() -> (Vec<EncodedDocument>, NoiseTable, TrainConfig, usize) {
        let docs: Vec<Vec<String>> = (0..20)
            .map(|i| {
                (0..15)
                    .map(|j| format!("w{}", (i * 7 + j * 3) % 11))
                    .collect()
            })
            .collect();
        let vocab = Vocabulary::build(&docs, 2, 1).unwrap();
        let corpus: Vec<_> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| vocab.encode(i as u32, d))
            .collect();
        let noise = NoiseTable::new(&vocab, 0.75).unwrap();
        let config = TrainConfig {
            dim: 8,
            epochs: 3,
            mini_batch: 7,
            seed: 5,
            ..TrainConfig::default()
        };
        (corpus, noise, config, vocab.len())
    }

    #[test]
    fn one_worker_matches_core_trainer() {
        let (corpus, noise, config, v) = toy();
        let a = EmbeddingModel::<f64>::init(corpus.len(), v, &config).unwrap();
        let b = a.clone();
        let ra = train(&a, &corpus, &noise, &config).unwrap();
        let rb = train_parallel(&b, &corpus, &noise, &config, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            assert_eq!(x.mean_objective, y.mean_objective);
        }
    }

    #[test]
    fn many_workers_stay_finite_and_learn() {
        let (corpus, noise, config, v) = toy();
        let config = TrainConfig {
            epochs: 8,
            ..config
        };
        let model = EmbeddingModel::<f32>::init(corpus.len(), v, &config).unwrap();
        let reports = train_parallel(&model, &corpus, &noise, &config, 4).unwrap();
        assert!(model.check_finite().is_ok());
        assert!(reports.last().unwrap().mean_objective > reports[0].mean_objective);
        assert!(reports
            .iter()
            .all(|r| r.pairs_processed == reports[0].pairs_processed));
    }

    #[test]
    fn zero_workers_is_usage_error() {
        let (corpus, noise, config, v) = toy();
        let model = EmbeddingModel::<f64>::init(corpus.len(), v, &config).unwrap();
        assert!(matches!(
            train_parallel(&model, &corpus, &noise, &config, 0),
            Err(Error::Usage(_))
        ));
    }
}
