//! Training loop: token-weighted batch gradients, Adam updates, and
//! learning-rate halving when validation loss stops improving.

use super::forward::{teacher_forced, PreparedExample};
use super::{prepare, Model};
use crate::corpus::Corpus;
use crate::numcore::{adam_step, AdamHyper, Gradients};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub lr: f64,
    pub halve_on_no_improve: bool,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Seed for epoch-level batch-order shuffling.
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            lr: 4e-4,
            halve_on_no_improve: true,
            max_epochs: 50,
            batch_size: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate after this epoch's halving decision.
    pub lr: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainLog {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\tlr\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6e}\n",
                e.epoch, e.train_loss, e.val_loss, e.lr
            ));
        }
        out
    }
}

/// Learning-rate state for the halving rule: the rate halves after any
/// epoch whose validation loss fails to improve on the best seen.
#[derive(Debug, Clone)]
pub struct LrState {
    lr: f64,
    best: f64,
}

impl LrState {
    pub fn new(lr: f64) -> LrState {
        LrState {
            lr,
            best: f64::INFINITY,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feed one epoch's validation loss; returns whether it improved.
    pub fn observe(&mut self, val_loss: f64, halve: bool) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            true
        } else {
            if halve {
                self.lr /= 2.0;
            }
            false
        }
    }
}

/// The learning rate after each epoch, given scripted validation losses.
pub fn schedule_lr_trace(initial_lr: f64, val_losses: &[f64]) -> Vec<f64> {
    let mut state = LrState::new(initial_lr);
    val_losses
        .iter()
        .map(|&v| {
            state.observe(v, true);
            state.lr()
        })
        .collect()
}

/// Sum of token losses and token count over a set of examples, forward
/// only. Examples evaluate in parallel; reduction order is fixed.
fn loss_over(model: &Model, examples: &[PreparedExample]) -> Result<(f64, usize)> {
    let parts: Vec<(f64, usize)> = examples
        .par_iter()
        .map(|ex| {
            let fwd = teacher_forced(model, ex)?;
            Ok((fwd.mean_loss * fwd.n_positions as f64, fwd.n_positions))
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold((0.0, 0), |(s, n), (ls, ln)| (s + ls, n + ln)))
}

/// Mean token loss of a model over raw examples (prepares them first).
pub fn mean_loss(model: &Model, examples: &[crate::corpus::MultimodalExample]) -> Result<f64> {
    let prepared: Vec<PreparedExample> = examples
        .iter()
        .map(|ex| prepare(model, ex))
        .collect::<Result<_>>()?;
    let (sum, n) = loss_over(model, &prepared)?;
    Ok(sum / n as f64)
}

/// Train on the corpus train split, validating on the val split after each
/// epoch. Batches are length-sorted buckets; batch gradients are
/// token-weighted; the best-validation parameters are restored at the end.
pub fn train(model: &mut Model, corpus: &Corpus, schedule: &TrainSchedule) -> Result<TrainLog> {
    if corpus.train.is_empty() {
        return Err(Error::Model("empty train split".into()));
    }
    if corpus.val.is_empty() {
        return Err(Error::Model("empty val split".into()));
    }
    if schedule.batch_size == 0 || schedule.max_epochs == 0 {
        return Err(Error::Model("batch_size and max_epochs must be >= 1".into()));
    }
    let train_exs: Vec<PreparedExample> = corpus
        .train
        .iter()
        .map(|ex| prepare(model, ex))
        .collect::<Result<_>>()?;
    let val_exs: Vec<PreparedExample> = corpus
        .val
        .iter()
        .map(|ex| prepare(model, ex))
        .collect::<Result<_>>()?;

    // length-sorted buckets
    let mut order: Vec<usize> = (0..train_exs.len()).collect();
    order.sort_by_key(|&i| (train_exs[i].memory_len(), i));
    let batches: Vec<Vec<usize>> = order
        .chunks(schedule.batch_size)
        .map(|c| c.to_vec())
        .collect();

    let mut lr_state = LrState::new(schedule.lr);
    let mut log = TrainLog::default();
    let mut best_snapshot: Option<Vec<crate::numcore::Array>> = None;

    for epoch in 1..=schedule.max_epochs {
        let mut batch_order: Vec<usize> = (0..batches.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed.wrapping_add(epoch as u64));
        batch_order.shuffle(&mut rng);

        let mut epoch_loss_sum = 0.0;
        let mut epoch_tokens = 0usize;
        for &bi in &batch_order {
            let batch = &batches[bi];
            // forward/backward in parallel, reduced in batch order
            let model_ref: &Model = model;
            let parts: Vec<(Gradients, f64, usize)> = batch
                .par_iter()
                .map(|&i| {
                    let fwd = teacher_forced(model_ref, &train_exs[i])?;
                    let grads = fwd.tape.backward(fwd.sum_loss)?;
                    let sum = fwd.mean_loss * fwd.n_positions as f64;
                    Ok((grads, sum, fwd.n_positions))
                })
                .collect::<Result<_>>()?;
            let mut grads = Gradients::zeros_like(&model.store);
            let mut batch_sum = 0.0;
            let mut batch_tokens = 0usize;
            for (g, s, n) in parts {
                grads.accumulate(&g);
                batch_sum += s;
                batch_tokens += n;
            }
            if !batch_sum.is_finite() {
                return Err(Error::Model(format!(
                    "non-finite loss in epoch {epoch}; aborting training"
                )));
            }
            grads.scale(1.0 / batch_tokens as f64);
            adam_step(
                &mut model.store,
                &grads,
                &AdamHyper {
                    lr: lr_state.lr(),
                    ..AdamHyper::default()
                },
            )?;
            epoch_loss_sum += batch_sum;
            epoch_tokens += batch_tokens;
        }
        let train_loss = epoch_loss_sum / epoch_tokens as f64;

        let (val_sum, val_tokens) = loss_over(model, &val_exs)?;
        let val_loss = val_sum / val_tokens as f64;
        if !val_loss.is_finite() {
            return Err(Error::Model(format!(
                "non-finite validation loss in epoch {epoch}; aborting training"
            )));
        }
        if lr_state.observe(val_loss, schedule.halve_on_no_improve) {
            log.best_epoch = epoch;
            log.best_val_loss = val_loss;
            best_snapshot = Some(model.store.snapshot());
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            lr: lr_state.lr(),
        });
    }
    if let Some(snapshot) = best_snapshot {
        model.store.restore(&snapshot)?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, toks, MultimodalExample, VocabScope};
    use crate::models::{build_model, decode_split, ModelConfig, Variant, VocabPair};

    #[test]
    fn scripted_losses_follow_the_halving_rule() {
        let lr = 4e-4;
        let trace = schedule_lr_trace(lr, &[2.0, 1.5, 1.6, 1.4]);
        assert_eq!(trace, vec![lr, lr, lr / 2.0, lr / 2.0]);
    }

    #[test]
    fn lr_never_increases() {
        let mut state = LrState::new(1e-3);
        let mut prev = state.lr();
        for v in [3.0, 2.5, 2.7, 2.2, 2.9, 2.9, 2.1] {
            state.observe(v, true);
            assert!(state.lr() <= prev);
            prev = state.lr();
        }
    }

    fn tiny_corpus(n: usize) -> Corpus {
        let verbs = ["cut", "wash", "fry", "mix", "peel"];
        let nouns = ["peppers", "pans", "onions", "rice", "carrots"];
        let mut train = Vec::new();
        for i in 0..n {
            let v = verbs[i % verbs.len()];
            let o = nouns[(i / verbs.len()) % nouns.len()];
            train.push(MultimodalExample {
                id: i.to_string(),
                transcript: toks(&format!("today we {v} the {o} carefully")),
                summary: toks(&format!("learn to {v} {o}")),
                features: None,
            });
        }
        Corpus {
            val: train.clone(),
            test: train.clone(),
            train,
            feature_dim: None,
        }
    }

    fn tiny_model(corpus: &Corpus, seed: u64) -> Model {
        let vocab = build_vocab(&corpus.train, 100, VocabScope::Joint).unwrap();
        let config = ModelConfig {
            variant: Variant::TextOnly,
            d_h: 24,
            enc_layers: 1,
            dec_layers: 1,
            vocab_cap: 100,
            src_limit: 50,
            d_v: 1,
            embed_dim: 12,
            seed,
        };
        build_model(&config, VocabPair::shared(vocab)).unwrap()
    }

    #[test]
    fn overfits_a_tiny_corpus() {
        let corpus = tiny_corpus(10);
        let mut model = tiny_model(&corpus, 3);
        // constant learning rate: halving on the noisy early epochs of an
        // overfit run starves the optimizer
        let schedule = TrainSchedule {
            lr: 5e-3,
            halve_on_no_improve: false,
            max_epochs: 250,
            batch_size: 2,
            ..TrainSchedule::default()
        };
        let log = train(&mut model, &corpus, &schedule).unwrap();
        for e in &log.epochs {
            eprintln!("epoch {} train {:.4} val {:.4} lr {:.5}", e.epoch, e.train_loss, e.val_loss, e.lr);
        }
        let final_loss = log.epochs.last().unwrap().train_loss;
        assert!(final_loss < 0.05, "final train loss {final_loss}");

        let hyps = decode_split(&model, &corpus.train, 1, 20).unwrap();
        let exact = hyps
            .iter()
            .zip(&corpus.train)
            .filter(|(h, ex)| **h == ex.summary)
            .count();
        assert!(exact >= 9, "only {exact}/10 reproduced exactly");
    }

    #[test]
    fn empty_val_split_is_an_error() {
        let mut corpus = tiny_corpus(4);
        corpus.val.clear();
        let mut model = tiny_model(&corpus, 0);
        let err = train(&mut model, &corpus, &TrainSchedule::default()).unwrap_err();
        assert!(err.to_string().contains("empty val split"));
    }

    #[test]
    fn train_log_has_one_row_per_epoch() {
        let corpus = tiny_corpus(4);
        let mut model = tiny_model(&corpus, 1);
        let schedule = TrainSchedule {
            max_epochs: 3,
            batch_size: 2,
            ..TrainSchedule::default()
        };
        let log = train(&mut model, &corpus, &schedule).unwrap();
        assert_eq!(log.epochs.len(), 3);
        let tsv = log.to_tsv();
        assert_eq!(tsv.lines().count(), 4);
        assert!(tsv.starts_with("epoch\ttrain_loss\tval_loss\tlr\n"));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = tiny_corpus(6);
        let schedule = TrainSchedule {
            max_epochs: 4,
            batch_size: 3,
            lr: 1e-3,
            ..TrainSchedule::default()
        };
        let mut m1 = tiny_model(&corpus, 9);
        let log1 = train(&mut m1, &corpus, &schedule).unwrap();
        let mut m2 = tiny_model(&corpus, 9);
        let log2 = train(&mut m2, &corpus, &schedule).unwrap();
        assert_eq!(log1.epochs, log2.epochs);
        for i in 0..m1.store.len() {
            assert_eq!(m1.store.at(i), m2.store.at(i));
        }
    }
}
