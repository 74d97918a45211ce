//! Scratch calibration sweep (temporary).

use fdl::models::{generate_labeled, run_task, TaskId, TaskPreset};
use fdl::nn::TrainConfig;
use fdl::{curve, encode, seed, NoiseSpec, NormalizationMode};
use std::time::Instant;

/// Matched-filter oracle: fit omega by least squares over the 28-cell
/// encoded values with scale/offset nuisance, reporting the achievable rmse
/// on noisy test curves. Measures the pipeline's information ceiling.
fn matched_filter_ceiling(sigma: f64, x_max: f64, n: usize) {
    let count = 200;
    let (clean, labels) = generate_labeled(TaskId::ExpRate, count, n, 999).unwrap();
    let mut preds = Vec::new();
    for c in &clean {
        let noisy = curve::add_noise(
            c,
            NoiseSpec::new(sigma).unwrap(),
            seed::mix(c.meta.seed, seed::NOISE_STREAM),
        );
        let img = encode::encode(&noisy, NormalizationMode::Local);
        // Column 0 of the distance image encodes f_i - f_0: recover cells.
        let cells: Vec<f64> = (0..28).map(|i| img.get(i, 0) * 2.0 - 1.0).collect();
        let mut best = (f64::INFINITY, 0.0);
        let mut w = -1.0;
        while w <= 1.0 {
            // Template block means of the normalized shape.
            let t = curve::Curve::from_fn(0.0, x_max, n, |x| (w * x).exp(), curve::CurveMeta::unknown()).unwrap();
            let tn = curve::minmax_normalize(&t, NormalizationMode::Local);
            let timg = encode::encode(&tn, NormalizationMode::Local);
            let tcells: Vec<f64> = (0..28).map(|i| timg.get(i, 0) * 2.0 - 1.0).collect();
            // Fit cells ~ a*tcells + b.
            let n_f = 28.0;
            let mx = tcells.iter().sum::<f64>() / n_f;
            let my = cells.iter().sum::<f64>() / n_f;
            let sxx: f64 = tcells.iter().map(|&x| (x - mx) * (x - mx)).sum();
            let sxy: f64 = tcells.iter().zip(&cells).map(|(&x, &y)| (x - mx) * (y - my)).sum();
            let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
            let b = my - a * mx;
            let sse: f64 = tcells
                .iter()
                .zip(&cells)
                .map(|(&x, &y)| {
                    let e = y - (a * x + b);
                    e * e
                })
                .sum();
            if sse < best.0 {
                best = (sse, w);
            }
            w += 0.005;
        }
        preds.push(best.1);
    }
    let mut pairs: Vec<(f64, f64)> = labels.iter().cloned().zip(preds).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let half = pairs.len() / 2;
    let rmse = |ps: &[(f64, f64)]| {
        (ps.iter().map(|p| (p.1 - p.0) * (p.1 - p.0)).sum::<f64>() / ps.len() as f64).sqrt()
    };
    let mean_t: f64 = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let mean_p: f64 = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    let (mut stt, mut spp, mut stp) = (0.0, 0.0, 0.0);
    for (t, p) in &pairs {
        stt += (t - mean_t) * (t - mean_t);
        spp += (p - mean_p) * (p - mean_p);
        stp += (t - mean_t) * (p - mean_p);
    }
    println!(
        "matched-filter ceiling sigma={sigma} x_max={x_max}: r={:.4} rmse lower {:.4} upper {:.4}",
        stp / (stt * spp).sqrt(),
        rmse(&pairs[..half]),
        rmse(&pairs[half..])
    );
}

/// Near-Bayes reference: kNN regression in encoded-cell space against a
/// large simulated prior sample. Upper-bounds what any estimator can read
/// from the encoded noisy curves.
fn knn_ceiling(task: TaskId, sigma: f64, reference_size: usize) {
    let noise = NoiseSpec::new(sigma).unwrap();
    let encode_cells = |c: &fdl::Curve| -> Vec<f64> {
        let noisy = curve::add_noise(c, noise, seed::mix(c.meta.seed, seed::NOISE_STREAM));
        let img = encode::encode(&noisy, NormalizationMode::Local);
        (0..28).map(|i| img.get(i, 0) * 2.0 - 1.0).collect()
    };
    let (ref_clean, ref_labels) = generate_labeled(task, reference_size, 100, 31).unwrap();
    let refs: Vec<Vec<f64>> = ref_clean.iter().map(&encode_cells).collect();
    let (test_clean, test_labels) = generate_labeled(task, 200, 100, 32).unwrap();
    let mut preds = Vec::new();
    for c in &test_clean {
        let cells = encode_cells(c);
        let mut dists: Vec<(f64, f64)> = refs
            .iter()
            .zip(&ref_labels)
            .map(|(r, &l)| {
                let d: f64 = r.iter().zip(&cells).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (d, l)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let k = 25;
        preds.push(dists[..k].iter().map(|d| d.1).sum::<f64>() / k as f64);
    }
    let mean_t: f64 = test_labels.iter().sum::<f64>() / 200.0;
    let mean_p: f64 = preds.iter().sum::<f64>() / 200.0;
    let (mut stt, mut spp, mut stp) = (0.0, 0.0, 0.0);
    for (t, p) in test_labels.iter().zip(&preds) {
        stt += (t - mean_t) * (t - mean_t);
        spp += (p - mean_p) * (p - mean_p);
        stp += (t - mean_t) * (p - mean_p);
    }
    println!(
        "knn ceiling sigma={sigma} refs={reference_size}: r={:.4}",
        stp / (stt * spp).sqrt()
    );
}

fn main() -> fdl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args[1] == "ceiling" {
        let sigma: f64 = args[2].parse().unwrap();
        matched_filter_ceiling(sigma, fdl::synth::EXP_X_MAX, 100);
        return Ok(());
    }
    if args[1] == "knn" {
        let task = TaskId::parse(&args[2])?;
        let sigma: f64 = args[3].parse().unwrap();
        let refs: usize = args[4].parse().unwrap();
        knn_ceiling(task, sigma, refs);
        return Ok(());
    }
    let task = TaskId::parse(&args[1])?;
    let sigma: f64 = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();
    let lr: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let batch: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(64);
    let scale_reduced = args.iter().any(|a| a == "--reduced");

    let mut preset = if scale_reduced {
        TaskPreset::reduced(task)
    } else {
        TaskPreset::standard(task)
    };
    preset.epochs = epochs;
    let cfg = TrainConfig {
        epochs,
        lr,
        batch_size: batch,
        ..preset.train_config()
    };
    let start = Instant::now();
    let artifacts = run_task(&preset, &cfg, NoiseSpec::new(sigma)?, 7)?;
    let secs = start.elapsed().as_secs_f64();
    if let Some(reg) = &artifacts.report.regression {
        println!(
            "{} sigma={} epochs={} lr={} batch={}: r={:.4} slope={:.3} in {:.0}s (val {:.3e})",
            task.as_str(), sigma, epochs, lr, batch, reg.r, reg.slope, secs,
            artifacts.model.history.last().unwrap().val_loss.unwrap()
        );
        // Error split by label quantile halves.
        let mut pairs = artifacts.report.scatter.clone();
        pairs.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let half = pairs.len() / 2;
        let rmse = |ps: &[[f64; 2]]| {
            (ps.iter().map(|p| (p[1] - p[0]) * (p[1] - p[0])).sum::<f64>() / ps.len() as f64)
                .sqrt()
        };
        println!(
            "  rmse lower-half {:.4}, upper-half {:.4}",
            rmse(&pairs[..half]),
            rmse(&pairs[half..])
        );
        let q = pairs.len() / 4;
        println!(
            "  rmse by quartile: {:.4} {:.4} {:.4} {:.4}",
            rmse(&pairs[..q]),
            rmse(&pairs[q..2 * q]),
            rmse(&pairs[2 * q..3 * q]),
            rmse(&pairs[3 * q..])
        );
        let worst: Vec<String> = {
            let mut by_err = pairs.clone();
            by_err.sort_by(|a, b| {
                (b[1] - b[0]).abs().partial_cmp(&(a[1] - a[0]).abs()).unwrap()
            });
            by_err[..8]
                .iter()
                .map(|p| format!("({:.2}->{:.2})", p[0], p[1]))
                .collect()
        };
        println!("  worst: {}", worst.join(" "));
    }
    if let Some(c) = &artifacts.report.confusion {
        println!(
            "{} sigma={} epochs={} lr={} batch={}: acc={:.3} in {:.0}s",
            task.as_str(), sigma, epochs, lr, batch, c.accuracy, secs
        );
    }
    Ok(())
}
