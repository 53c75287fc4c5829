use bisum_core::scorer::{
    evaluate_scorer, train, EncoderConfig, LossKind, RegressorInput, ScorerParams, SyntheticSample,
    TrainConfig,
};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gen(num_videos: usize, n: usize, d: usize, seed: u64, noise: f64, a_lo: f64, a_hi: f64, b_amp: f64) -> (Vec<SyntheticSample>, Vec<SyntheticSample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for _ in 0..num_videos {
        let num_high = ((n as f64 * 0.2).round() as usize).max(1);
        let mut latent: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.55)).collect();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for &p in idx.iter().take(num_high) { latent[p] = rng.random_range(0.75..1.0); }
        let mut features = Array2::zeros((n, d));
        for i in 0..n {
            let z = latent[i];
            features[[i, 0]] = z + rng.random_range(-noise..noise);
            features[[i, 1]] = z * z + rng.random_range(-noise..noise);
            features[[i, 2]] = (3.0 * z).sin() + rng.random_range(-noise..noise);
            for j in 3..d { features[[i, j]] = rng.random_range(-0.5..0.5); }
        }
        let a = rng.random_range(a_lo..a_hi);
        let b = a * rng.random_range(-b_amp..b_amp);
        let t: Vec<f64> = latent.iter().map(|&z| 1.0 / (1.0 + (-(a * (z - 0.5) + b)).exp())).collect();
        samples.push(SyntheticSample { features, target_saliency: t });
    }
    let cut = (num_videos as f64 * 0.8).round() as usize;
    let val = samples.split_off(cut);
    (samples, val)
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

fn run(loss: LossKind, seed: u64, epochs: usize, lr: f64, noise: f64, a_lo: f64, a_hi: f64, b_amp: f64) -> (f64, f64) {
    let (train_set, val_set) = gen(60, 16, 16, seed, noise, a_lo, a_hi, b_amp);
    let config = EncoderConfig { seed: seed + 1000, ..EncoderConfig::default() };
    let init = ScorerParams::init_gated(&config, RegressorInput::Gates).unwrap();
    let tc = TrainConfig::new(loss, epochs, lr, seed + 2000);
    let outcome = train(&train_set, &val_set, init, &tc).unwrap();
    let eval = evaluate_scorer(&outcome.params, &val_set).unwrap();
    let mut smoothed = 0usize;
    let all: Vec<&SyntheticSample> = train_set.iter().chain(&val_set).collect();
    for s in &all {
        let pred = outcome.params.predict(&s.features).unwrap();
        if variance(&pred) < variance(&s.target_saliency) { smoothed += 1; }
    }
    (eval.ndcg_at_15, smoothed as f64 / all.len() as f64)
}

fn main() {
    for noise in [0.35, 0.45] {
        for (a_lo, a_hi, b_amp) in [(4.0, 9.0, 0.2), (4.0, 9.0, 0.3)] {
            for lr in [0.3, 0.6] {
                let epochs = 60;
                let mut wins = 0; let mut msum = 0.0; let mut nsum = 0.0; let mut smin: f64 = 1.0;
                for seed in 1..=5u64 {
                    let (m15, msm) = run(LossKind::Mse, seed, epochs, lr, noise, a_lo, a_hi, b_amp);
                    let (n15, _) = run(LossKind::NeuralNdcg, seed, epochs, lr, noise, a_lo, a_hi, b_amp);
                    msum += m15; nsum += n15; smin = smin.min(msm);
                    if n15 > m15 { wins += 1; }
                }
                println!("noise {noise} a[{a_lo},{a_hi}] u±{b_amp} lr {lr}: mse {:.4} ndcg {:.4} wins {wins}/5 min-smooth {smin:.2}",
                    msum / 5.0, nsum / 5.0);
            }
        }
    }
}
