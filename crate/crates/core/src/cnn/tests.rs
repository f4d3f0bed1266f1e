use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

fn toy_vocab(n: usize) -> Vocabulary {
    let mut tokens = vec!["<pad>".to_owned(), "<unk>".to_owned()];
    tokens.extend((0..n - 2).map(|i| format!("t{i}")));
    Vocabulary::from_tokens(tokens).unwrap()
}

fn random_channel(spec: &ChannelSpec, v: usize, d: usize) -> EmbeddingChannel<f32> {
    let vocab = toy_vocab(v);
    let (mut ch, _) =
        crate::embeddings::build_channel(&vocab, None, d, spec.trainable, 11).unwrap();
    ch.source = spec.source.clone();
    ch
}

fn small_model(channels: &[bool], seed: u64) -> CnnModel<f32> {
    let specs: Vec<ChannelSpec> = channels
        .iter()
        .map(|&t| ChannelSpec {
            source: EmbeddingSource::Random,
            trainable: t,
        })
        .collect();
    let mut config = ModelConfig::new(6, 8, 3, specs.clone());
    config.filter_widths = vec![2, 3];
    config.filters_per_width = 5;
    let embedding = specs.iter().map(|s| random_channel(s, 12, 6)).collect();
    let labels = vec!["A".into(), "B".into(), "C".into()];
    CnnModel::new(config, toy_vocab(12), labels, embedding, seed).unwrap()
}

fn examples(n: usize, seed: u64) -> Vec<Example> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let real = rng.gen_range(3..=8);
            let mut indices: Vec<usize> = (0..real).map(|_| rng.gen_range(1..12)).collect();
            indices.resize(8, 0);
            Example {
                indices,
                gold: rng.gen_range(0..3),
            }
        })
        .collect()
}

#[test]
fn config_validation() {
    let spec = vec![ChannelSpec {
        source: EmbeddingSource::Random,
        trainable: true,
    }];
    assert!(ModelConfig::new(300, 10, 6, spec.clone()).validate().is_ok());
    assert!(ModelConfig::new(300, 4, 6, spec.clone()).validate().is_err());
    assert!(ModelConfig::new(300, 10, 1, spec.clone()).validate().is_err());
    let mut c = ModelConfig::new(300, 10, 6, spec.clone());
    c.dropout = 1.0;
    assert!(c.validate().is_err());
    c.dropout = 0.5;
    c.norm_cap = 0.0;
    assert!(c.validate().is_err());
    assert!(ModelConfig::new(300, 10, 6, vec![]).validate().is_err());
    assert_eq!(ModelConfig::new(300, 10, 6, spec).hidden_size(), 384);
}

#[test]
fn parameter_count_closed_form() {
    for channels in [&[true][..], &[false, true][..]] {
        let model = small_model(channels, 3);
        assert_eq!(model.parameter_count(), model.config.parameter_count(12));
        // 12·6 per channel + (5·2·6+5) + (5·3·6+5) + 3·10 + 3
        assert_eq!(model.parameter_count(), channels.len() * 72 + 65 + 95 + 33);
    }
}

#[test]
fn zero_weights_give_softmax_of_bias() {
    let mut model = small_model(&[true], 1);
    for bank in &mut model.conv {
        bank.weights.iter_mut().for_each(|w| *w = 0.0);
        bank.bias.iter_mut().for_each(|b| *b = 0.0);
    }
    model.fc_bias = vec![0.5, -1.0, 2.0];
    let out = model.forward(&examples(1, 0)[0].indices, None).unwrap();
    assert!(out.cache.pooled.iter().all(|&x| x == 0.0));
    assert_eq!(out.logits, model.fc_bias);
    let expected = softmax(&model.fc_bias);
    for (p, q) in out.probabilities.iter().zip(expected) {
        assert!((p - q).abs() < 1e-7);
    }
}

#[test]
fn hand_computed_convolution() {
    // d = 1, embeddings of tokens 2..=5 are 1, 2, 3, 4.
    let vocab = toy_vocab(6);
    let spec = ChannelSpec {
        source: EmbeddingSource::Random,
        trainable: true,
    };
    let channel = EmbeddingChannel {
        dim: 1,
        matrix: vec![0.0f64, 0.0, 1.0, 2.0, 3.0, 4.0],
        trainable: true,
        source: EmbeddingSource::Random,
    };
    let mut config = ModelConfig::new(1, 4, 2, vec![spec]);
    config.filter_widths = vec![3];
    config.filters_per_width = 1;
    let mut model =
        CnnModel::new(config, vocab, vec!["x".into(), "y".into()], vec![channel], 0).unwrap();
    model.conv[0].weights = vec![1.0, 1.0, 1.0];
    model.conv[0].bias = vec![0.0];
    let out = model.forward(&[2, 3, 4, 5], None).unwrap();
    // Feature map [6, 9]; max at position 1.
    assert_eq!(out.cache.pooled, vec![9.0]);
    assert_eq!(out.cache.argmax, vec![1]);
}

#[test]
fn softmax_of_equal_logits() {
    assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
    let p = softmax(&[1000.0f64, 1000.0, -1000.0]);
    assert!((p[0] - 0.5).abs() < 1e-12 && p[2] >= 0.0);
}

#[test]
fn weighted_cross_entropy_values() {
    assert_eq!(weighted_cross_entropy(&[0.0f64, 1.0], 1, &[3.0, 3.0]), (0.0, false));
    let (loss, _) = weighted_cross_entropy(&[0.5f64, 0.5], 0, &[2.0, 1.0]);
    assert!((loss - 1.386294).abs() < 1e-6);
    let p = [0.2f64, 0.3, 0.5];
    let (unit, _) = weighted_cross_entropy(&p, 2, &[1.0; 3]);
    assert!((unit - -(0.5f64).ln()).abs() < 1e-15);
    let (clamped, flag) = weighted_cross_entropy(&[0.0f64, 1.0], 0, &[1.0, 1.0]);
    assert!(flag);
    assert!((clamped - -(PROB_FLOOR).ln()).abs() < 1e-9);
}

#[test]
fn forward_rejects_wrong_length() {
    let model = small_model(&[true], 1);
    assert!(model.forward(&[1, 2, 3], None).is_err());
    assert!(model.forward(&[99; 8], None).is_err());
}

#[test]
fn fc_bias_gradient_identity() {
    let model = small_model(&[true], 4);
    let example = &examples(1, 9)[0];
    let weights = [0.5f32, 2.0, 1.5];
    let (_, grads) = model.batch_gradients(std::slice::from_ref(example), &weights, None).unwrap();
    let p = model.forward(&example.indices, None).unwrap().probabilities;
    for (k, &pk) in p.iter().enumerate() {
        let expected = weights[example.gold] * (pk - if k == example.gold { 1.0 } else { 0.0 });
        assert!((grads.fc_bias[k] - expected).abs() < 1e-6);
    }
}

#[test]
fn static_channel_and_pad_receive_no_gradient() {
    let model = small_model(&[false, true], 5);
    let batch = examples(10, 2);
    let (_, grads) = model.batch_gradients(&batch, &[1.0; 3], None).unwrap();
    assert!(grads.embeddings[0].is_empty());
    assert!(!grads.embeddings[1].is_empty());
    assert!(!grads.embeddings[1].contains_key(&PAD_INDEX));
}

#[test]
fn backward_rejects_foreign_cache() {
    let model = small_model(&[true], 5);
    let other = tiny_model(20, 4, 7, 3, &[2, 3], 4, &[true], 1).unwrap();
    let cache = other.forward(&[1, 2, 3, 4, 5, 6, 7], None).unwrap().cache;
    let cache32 = ForwardCache {
        indices: cache.indices,
        summed: cache.summed.iter().map(|&x| x as f32).collect(),
        pooled: cache.pooled.iter().map(|&x| x as f32).collect(),
        argmax: cache.argmax,
        mask: None,
        hidden: cache.hidden.iter().map(|&x| x as f32).collect(),
        kink_margin: 0.0,
    };
    assert!(model.backward(&cache32, &[0.0; 3]).is_err());
}

#[test]
fn batch_gradients_match_single_example_sum() {
    let model = small_model(&[false, true], 8);
    let batch = examples(13, 3);
    let (loss, grads) = model.batch_gradients(&batch, &[1.0, 2.0, 0.5], None).unwrap();
    let mut manual = Gradients::zeros_like(&model);
    let mut manual_loss = 0.0;
    for ex in &batch {
        let (l, g) = model
            .batch_gradients(std::slice::from_ref(ex), &[1.0, 2.0, 0.5], None)
            .unwrap();
        manual_loss += l / batch.len() as f32;
        let mut scaled = g.clone();
        scaled.fc_bias.iter_mut().for_each(|x| *x /= batch.len() as f32);
        manual.fc_bias.iter_mut().zip(&scaled.fc_bias).for_each(|(a, b)| *a += b);
    }
    assert!((loss - manual_loss).abs() < 1e-5);
    for (a, b) in grads.fc_bias.iter().zip(&manual.fc_bias) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn dropout_mask_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mask: Vec<f64> = sample_dropout_mask(&mut rng, 10_000, 0.5);
    assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
    let kept = mask.iter().filter(|&&m| m > 0.0).count();
    assert!((4_700..5_300).contains(&kept));

    let model = small_model(&[true], 2);
    let ex = &examples(1, 1)[0];
    let h = model.config.hidden_size();
    let ones = vec![1.0f32; h];
    let eval = model.forward(&ex.indices, None).unwrap();
    let train = model.forward(&ex.indices, Some(ones)).unwrap();
    assert_eq!(eval.logits, train.logits);
}

#[test]
fn evaluation_is_deterministic() {
    let model = small_model(&[false, true], 6);
    let seqs: Vec<Vec<usize>> = examples(20, 4).into_iter().map(|e| e.indices).collect();
    assert_eq!(model.predict_proba(&seqs).unwrap(), model.predict_proba(&seqs).unwrap());
}

#[test]
fn class_permutation_permutes_logits() {
    let model = small_model(&[true], 12);
    let perm = [2usize, 0, 1];
    let mut permuted = model.clone();
    let h = model.config.hidden_size();
    for (new, &old) in perm.iter().enumerate() {
        permuted.fc_weights[new * h..(new + 1) * h]
            .copy_from_slice(&model.fc_weights[old * h..(old + 1) * h]);
        permuted.fc_bias[new] = model.fc_bias[old];
    }
    for ex in examples(5, 7) {
        let a = model.forward(&ex.indices, None).unwrap().logits;
        let b = permuted.forward(&ex.indices, None).unwrap().logits;
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(b[new], a[old]);
        }
    }
}

#[test]
fn max_norm_examples() {
    let mut w = vec![3.0f64, 4.0];
    apply_max_norm(&mut w, 2, 3.0);
    assert!((w[0] - 1.8).abs() < 1e-12 && (w[1] - 2.4).abs() < 1e-12);
    let mut w = vec![1.0f64, 1.0, 0.0, 0.0];
    apply_max_norm(&mut w, 2, 3.0);
    assert_eq!(w, vec![1.0, 1.0, 0.0, 0.0]);
}

#[test]
fn adam_first_step_moves_by_lr() {
    let mut model = small_model(&[true], 3).cast::<f64>();
    let before = model.clone();
    let mut state = TrainState::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    grads.fc_bias[0] = 1.0;
    adam_step(&mut model, &mut state, &grads, &AdamConfig::default()).unwrap();
    assert!((before.fc_bias[0] - model.fc_bias[0] - 0.001).abs() < 1e-8);
    assert_eq!(model.fc_bias[1], before.fc_bias[1]);
    assert_eq!(model.fc_weights, before.fc_weights);
    assert_eq!(model.channels[0].matrix, before.channels[0].matrix);
    assert_eq!(state.step, 1);
}

#[test]
fn adam_zero_gradient_is_identity() {
    let mut model = small_model(&[false, true], 3);
    let before = model.clone();
    let mut state = TrainState::new(&model);
    let grads = Gradients::zeros_like(&model);
    for _ in 0..3 {
        adam_step(&mut model, &mut state, &grads, &AdamConfig::default()).unwrap();
    }
    assert_eq!(model.fc_weights, before.fc_weights);
    assert_eq!(model.conv[0].weights, before.conv[0].weights);
    assert_eq!(model.channels[1].matrix, before.channels[1].matrix);
}

#[test]
fn adam_caps_fc_rows() {
    let mut model = small_model(&[true], 3).cast::<f64>();
    let h = model.config.hidden_size();
    model.fc_weights[..h].iter_mut().for_each(|x| *x = 0.0);
    model.fc_weights[0] = 3.0;
    model.fc_weights[1] = 4.0;
    let mut state = TrainState::new(&model);
    let zeros = Gradients::zeros_like(&model);
    adam_step(&mut model, &mut state, &zeros, &AdamConfig::default()).unwrap();
    let norm: f64 = model.fc_weights[..h].iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - 3.0).abs() < 1e-12);
}

#[test]
fn adam_rejects_non_finite() {
    let mut model = small_model(&[true], 3);
    let before = model.clone();
    let mut state = TrainState::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    grads.conv_weights[1][0] = f32::NAN;
    assert!(matches!(
        adam_step(&mut model, &mut state, &grads, &AdamConfig::default()),
        Err(Error::NonFinite(_))
    ));
    assert_eq!(state.step, 0);
    assert_eq!(model.conv[1].weights, before.conv[1].weights);
}

#[test]
fn pad_row_stays_zero_during_training() {
    let mut model = small_model(&[false, true], 9);
    let mut state = TrainState::new(&model);
    let batch = examples(20, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let masks = batch
            .iter()
            .map(|_| sample_dropout_mask(&mut rng, model.config.hidden_size(), 0.5))
            .collect();
        let (_, grads) = model.batch_gradients(&batch, &[1.0; 3], Some(masks)).unwrap();
        adam_step(&mut model, &mut state, &grads, &AdamConfig { lr: 0.05, ..AdamConfig::default() }).unwrap();
    }
    for ch in &model.channels {
        assert!(ch.row(PAD_INDEX).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn scalar_central_difference() {
    let g = central_difference(|w| w * w, 3.0, 1e-5);
    assert!((g - 6.0).abs() < 1e-9);
}

#[test]
fn gradient_check_tiny_models() {
    for channels in [&[true][..], &[false, true][..], &[true, true][..]] {
        let model = tiny_model(20, 4, 7, 3, &[2, 3], 4, channels, 17).unwrap();
        let mut batch = examples_for(&model, 6, 23);
        let report = gradient_check(&model, &mut batch, &[1.0, 1.5, 0.7], &GradCheckOptions::default())
            .unwrap();
        assert!(report.checked >= 500);
        assert!(report.passed(), "{channels:?}: {:?}", report.worst);
    }
}

#[test]
fn class_weights_scale_gradients() {
    let model = tiny_model(20, 4, 7, 3, &[2], 2, &[true], 5).unwrap();
    let mut batch = examples_for(&model, 4, 1);
    let good = gradient_check(&model, &mut batch, &[1.0; 3], &GradCheckOptions::default()).unwrap();
    assert!(good.passed());
    let (_, grads) = model.batch_gradients(&batch, &[1.0; 3], None).unwrap();
    let (_, weighted) = model.batch_gradients(&batch, &[3.0; 3], None).unwrap();
    assert!((weighted.fc_bias[0] - 3.0 * grads.fc_bias[0]).abs() < 1e-12);
}

fn examples_for(model: &CnnModel<f64>, n: usize, seed: u64) -> Vec<Example> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = model.config.max_len;
            let real = rng.gen_range(3..=len);
            let mut indices: Vec<usize> = (0..real).map(|_| rng.gen_range(1..model.vocab.len())).collect();
            indices.resize(len, 0);
            Example {
                indices,
                gold: rng.gen_range(0..model.config.num_classes),
            }
        })
        .collect()
}

#[test]
fn save_load_roundtrip() {
    let model = small_model(&[false, true], 21);
    let mut buf = Vec::new();
    save_model(&model, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("SDPREL-MODEL v1\n"));
    assert_eq!(text.lines().count(), 2 + model.param_ids().len());

    let loaded: CnnModel<f32> = load_model(&buf[..]).unwrap();
    assert_eq!(loaded.labels, model.labels);
    assert_eq!(loaded.vocab, model.vocab);
    assert_eq!(loaded.config, model.config);
    for ex in examples(10, 3) {
        let a = model.forward(&ex.indices, None).unwrap().probabilities;
        let b = loaded.forward(&ex.indices, None).unwrap().probabilities;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn load_errors() {
    let model = small_model(&[true], 21);
    let mut buf = Vec::new();
    save_model(&model, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();

    let edited = text.replacen("SDPREL-MODEL v1", "SDPREL-MODEL v2", 1);
    assert!(matches!(load_model::<f32, _>(edited.as_bytes()), Err(Error::Version { .. })));

    let lines: Vec<&str> = text.lines().collect();
    let truncated = lines[..lines.len() - 1].join("\n");
    assert!(matches!(load_model::<f32, _>(truncated.as_bytes()), Err(Error::Shape(_))));

    let cut = &text[..text.len() - 40];
    assert!(matches!(load_model::<f32, _>(cut.as_bytes()), Err(Error::Shape(_))));
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
        let p = softmax(&logits);
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn max_norm_caps_every_row(rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 4), 1..6)) {
        let mut flat: Vec<f64> = rows.concat();
        apply_max_norm(&mut flat, 4, 3.0);
        for (row, orig) in flat.chunks(4).zip(&rows) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= 3.0 + 1e-9);
            let orig_norm = orig.iter().map(|x| x * x).sum::<f64>().sqrt();
            if orig_norm <= 3.0 {
                prop_assert_eq!(row, &orig[..]);
            }
        }
    }
}
