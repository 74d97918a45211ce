//! Pre-wired networks and task pipelines.
//!
//! A [`TaskPreset`] names one experiment (which curve family, dataset sizes,
//! normalization policy, label) and [`run_task`] executes it end to end:
//! generate curves with ground-truth labels, add noise, encode to images,
//! train the reference CNN, and evaluate on the held-out test split. All
//! randomness derives from one master seed, so a run reproduces byte for
//! byte. The Siamese dissolution task and the spiral-drawing pipeline have
//! dedicated drivers, and [`bench_lyapunov`] times the trained network
//! against the Rosenstein baseline on the same curves.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curve::{add_noise, Curve, Family, NoiseSpec, NormalizationMode};
use crate::encode::{encode, EncodedImage};
use crate::error::{Error, Result};
use crate::io::drawings::{
    augment_drawing, drawings_to_curves, spiral_dataset, AugmentSpec, Channel, DrawingRecord,
    SubjectClass,
};
use crate::io::{read_f32le, write_f32le};
use crate::nn::{
    conv_trunk, predict_class, predict_scalar, train, EpochStats, LayerSpec, Loss, Network,
    Shape, SiameseNetwork, SiamesePairBatch, Targets, Tensor, TrainConfig, WeightInit,
};
use crate::oracles::dissolution::f1_f2;
use crate::oracles::lyapunov::{rosenstein_lle, RosensteinConfig};
use crate::oracles::peaks::peak_metrics;
use crate::seed;
use crate::stats::{confusion, regression_report, BenchResult, ConfusionMatrix, RegressionReport};
use crate::synth::{
    gen_curvature, gen_dissolution_pair, gen_exponential, gen_gaussian_mixture, gen_growth,
    gen_lorenz, gen_monotone, gen_sir, gen_trig, profile_to_curve, CurvatureSpec,
    ExponentialSpec, GaussianMixtureSpec, GrowthSpec, LorenzSpec, MonotoneSpec, PairKind,
    SirSpec, TrigKind, TrigSpec, DEFAULT_POINTS, GAUSS_POINTS,
};

/// The replication tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    ExpRate,
    SineFreq,
    CosFreq,
    PeakWidth,
    PeakHeight,
    PeakCount,
    Monotone,
    Curvature,
    Growth,
    Lyapunov,
    SirBeta,
    DissolutionSim,
}

impl TaskId {
    pub const ALL: [TaskId; 12] = [
        TaskId::ExpRate,
        TaskId::SineFreq,
        TaskId::CosFreq,
        TaskId::PeakWidth,
        TaskId::PeakHeight,
        TaskId::PeakCount,
        TaskId::Monotone,
        TaskId::Curvature,
        TaskId::Growth,
        TaskId::Lyapunov,
        TaskId::SirBeta,
        TaskId::DissolutionSim,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskId::ExpRate => "exp_rate",
            TaskId::SineFreq => "sine_freq",
            TaskId::CosFreq => "cos_freq",
            TaskId::PeakWidth => "peak_width",
            TaskId::PeakHeight => "peak_height",
            TaskId::PeakCount => "peak_count",
            TaskId::Monotone => "monotone",
            TaskId::Curvature => "curvature",
            TaskId::Growth => "growth",
            TaskId::Lyapunov => "lyapunov",
            TaskId::SirBeta => "sir_beta",
            TaskId::DissolutionSim => "dissolution_sim",
        }
    }

    pub fn parse(s: &str) -> Result<TaskId> {
        TaskId::ALL
            .iter()
            .find(|t| t.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task `{s}`")))
    }

    /// Number of classes for classification tasks, None for regression.
    pub fn num_classes(&self) -> Option<usize> {
        match self {
            TaskId::Monotone | TaskId::Curvature | TaskId::Growth => Some(2),
            TaskId::PeakCount => Some(3),
            TaskId::DissolutionSim => Some(2),
            _ => None,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            TaskId::ExpRate => Family::Exponential,
            TaskId::SineFreq => Family::Sine,
            TaskId::CosFreq => Family::Cosine,
            TaskId::PeakWidth | TaskId::PeakHeight | TaskId::PeakCount => Family::GaussianMixture,
            TaskId::Monotone => Family::Monotone,
            TaskId::Curvature => Family::Curvature,
            TaskId::Growth => Family::Growth,
            TaskId::Lyapunov => Family::Lorenz,
            TaskId::SirBeta => Family::Sir,
            TaskId::DissolutionSim => Family::Dissolution,
        }
    }

    pub fn label_kind(&self) -> &'static str {
        match self {
            TaskId::ExpRate | TaskId::SineFreq | TaskId::CosFreq => "omega",
            TaskId::PeakWidth => "width",
            TaskId::PeakHeight => "height",
            TaskId::PeakCount => "count",
            TaskId::Monotone | TaskId::Curvature | TaskId::Growth => "class",
            TaskId::Lyapunov => "lle",
            TaskId::SirBeta => "beta",
            TaskId::DissolutionSim => "similar",
        }
    }
}

/// Dataset scale: the source experiments' sizes, or a reduced desk-scale
/// variant for the bulky peak tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Standard,
    Reduced,
}

/// One experiment: sizes, curve resolution, normalization policy, epochs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPreset {
    pub id: TaskId,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub curve_points: usize,
    /// Global normalization (bounds fitted on the training corpus) is used
    /// by the peak-height task; everything else normalizes locally.
    pub global_normalization: bool,
    pub epochs: usize,
}

impl TaskPreset {
    pub fn new(id: TaskId, scale: Scale) -> Self {
        let peak_task = matches!(
            id,
            TaskId::PeakWidth | TaskId::PeakHeight | TaskId::PeakCount
        );
        let train_size = match (peak_task, scale) {
            (true, Scale::Standard) => 10_000,
            (true, Scale::Reduced) => 2_000,
            (false, _) => 1_000,
        };
        let curve_points = if peak_task { GAUSS_POINTS } else { DEFAULT_POINTS };
        let epochs = match id {
            TaskId::Monotone | TaskId::Curvature | TaskId::Growth => 20,
            TaskId::PeakCount => 30,
            TaskId::DissolutionSim => 20,
            _ => 40,
        };
        TaskPreset {
            id,
            train_size,
            val_size: 100,
            test_size: 100,
            curve_points,
            global_normalization: id == TaskId::PeakHeight,
            epochs,
        }
    }

    pub fn standard(id: TaskId) -> Self {
        TaskPreset::new(id, Scale::Standard)
    }

    pub fn reduced(id: TaskId) -> Self {
        TaskPreset::new(id, Scale::Reduced)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            loss: if self.id.num_classes().is_some() {
                Loss::SoftmaxCrossEntropy
            } else {
                Loss::Mse
            },
            ..TrainConfig::default()
        }
    }
}

/// Min-max label scaler fitted on the training labels; the network learns
/// unit-scale targets and predictions are mapped back through it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelScaler {
    pub min: f64,
    pub max: f64,
}

impl LabelScaler {
    pub fn fit(labels: &[f64]) -> Self {
        let min = labels.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        LabelScaler { min, max }
    }

    pub fn to_unit(&self, y: f64) -> f64 {
        if self.max > self.min {
            (y - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        if self.max > self.min {
            self.min + u * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// The reference regression architecture: conv trunk, 20% dropout, one
/// output unit, MSE loss.
pub fn build_regression_cnn() -> Vec<LayerSpec> {
    let mut specs = conv_trunk();
    specs.push(LayerSpec::Dropout { rate: 0.2 });
    specs.push(LayerSpec::Dense { units: 1 });
    specs
}

/// The classification variant: dense head with one unit per class followed
/// by softmax.
pub fn build_classifier_cnn(num_classes: usize) -> Result<Vec<LayerSpec>> {
    if num_classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    let mut specs = conv_trunk();
    specs.push(LayerSpec::Dropout { rate: 0.2 });
    specs.push(LayerSpec::Dense { units: num_classes });
    specs.push(LayerSpec::Softmax);
    Ok(specs)
}

/// Closed-form trainable-parameter count of the reference architecture:
/// three 3x3 conv layers (8, 16, 32 filters) with batch-norm scale/shift,
/// plus the dense head on the flattened 3x3x32 output.
pub fn reference_param_count(output_units: usize) -> usize {
    let conv = |in_c: usize, out_c: usize| 9 * in_c * out_c + out_c;
    let bn = |c: usize| 2 * c;
    conv(1, 8) + bn(8) + conv(8, 16) + bn(16) + conv(16, 32) + bn(32)
        + (3 * 3 * 32) * output_units
        + output_units
}

/// Generate `count` labeled curves for a task. Record `i` derives its seed
/// as `mix(gen_seed, i)`, so generation order is irrelevant. Labels are
/// computed on the noise-free curve: the true parameter for parametric
/// families, peak-oracle geometry for the mixture tasks, and the Rosenstein
/// estimate for the Lorenz task.
pub fn generate_labeled(
    task: TaskId,
    count: usize,
    points: usize,
    gen_seed: u64,
) -> Result<(Vec<Curve>, Vec<f64>)> {
    let mut curves = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let record_seed = seed::mix(gen_seed, i as u64);
        let (curve, label) = generate_one(task, points, record_seed)?;
        curves.push(curve);
        labels.push(label);
    }
    Ok((curves, labels))
}

fn generate_one(task: TaskId, points: usize, record_seed: u64) -> Result<(Curve, f64)> {
    let mut rng = seed::rng(record_seed);
    match task {
        TaskId::ExpRate => {
            let spec = ExponentialSpec::sample(&mut rng, points);
            Ok((gen_exponential(&spec, record_seed)?, spec.omega))
        }
        TaskId::SineFreq => {
            let spec = TrigSpec::sample(&mut rng, TrigKind::Sine, points);
            Ok((gen_trig(&spec, record_seed)?, spec.omega))
        }
        TaskId::CosFreq => {
            let spec = TrigSpec::sample(&mut rng, TrigKind::Cosine, points);
            Ok((gen_trig(&spec, record_seed)?, spec.omega))
        }
        TaskId::PeakWidth | TaskId::PeakHeight => {
            // Zero-peak draws carry no width/height label; redraw with a
            // derived attempt seed (deterministic, order-independent).
            for attempt in 0..100u64 {
                let attempt_seed = if attempt == 0 {
                    record_seed
                } else {
                    seed::mix(record_seed, 0xa000 + attempt)
                };
                let mut arng = seed::rng(attempt_seed);
                let spec = GaussianMixtureSpec::sample(&mut arng, points);
                let curve = gen_gaussian_mixture(&spec, attempt_seed)?;
                let metrics = peak_metrics(&curve);
                if metrics.count == 0 {
                    continue;
                }
                let label = if task == TaskId::PeakWidth {
                    metrics.half_prom_width.unwrap()
                } else {
                    metrics.max_height.unwrap()
                };
                return Ok((curve, label));
            }
            Err(Error::Data(
                "no peaked mixture found in 100 attempts".into(),
            ))
        }
        TaskId::PeakCount => {
            let spec = GaussianMixtureSpec::sample(&mut rng, points);
            let curve = gen_gaussian_mixture(&spec, record_seed)?;
            let count = peak_metrics(&curve).count.min(2);
            Ok((curve, count as f64))
        }
        TaskId::Monotone => {
            let spec = MonotoneSpec::sample(&mut rng, points);
            let label = if spec.increasing { 1.0 } else { 0.0 };
            Ok((gen_monotone(&spec, record_seed)?, label))
        }
        TaskId::Curvature => {
            let spec = CurvatureSpec::sample(&mut rng, points);
            let label = if spec.convex { 1.0 } else { 0.0 };
            Ok((gen_curvature(&spec, record_seed)?, label))
        }
        TaskId::Growth => {
            let spec = GrowthSpec::sample(&mut rng, points);
            let label = if spec.exponential { 1.0 } else { 0.0 };
            Ok((gen_growth(&spec, record_seed)?, label))
        }
        TaskId::Lyapunov => {
            let spec = LorenzSpec::sample(&mut rng, points);
            let curve = gen_lorenz(&spec, record_seed)?;
            let cfg = RosensteinConfig::for_dt(curve.step());
            let est = rosenstein_lle(curve.ys(), &cfg)?;
            Ok((curve, est.value))
        }
        TaskId::SirBeta => {
            let spec = SirSpec::sample(&mut rng, points);
            Ok((gen_sir(&spec, record_seed)?, spec.beta))
        }
        TaskId::DissolutionSim => Err(Error::InvalidArgument(
            "dissolution pairs are generated by run_dissolution_task".into(),
        )),
    }
}

/// Evaluation summary emitted by every pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub task: String,
    pub sigma_train: f64,
    pub sigma_test: f64,
    pub master_seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regression: Option<RegressionReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bench: Option<BenchReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dissolution: Option<DissolutionData>,
    /// (true, predicted) pairs for scatter plots; class indices for
    /// classification tasks.
    pub scatter: Vec<[f64; 2]>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Write the scatter pairs as a two-column CSV next to the report.
    pub fn write_scatter_csv(&self, path: &Path) -> Result<()> {
        let mut body = String::from("true,predicted\n");
        for [t, p] in &self.scatter {
            body.push_str(&format!("{t},{p}\n"));
        }
        fs::write(path, body)?;
        Ok(())
    }
}

/// Timing comparison between the classical estimator and the network path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rosenstein: BenchResult,
    pub cnn: BenchResult,
    /// rosenstein seconds / cnn seconds.
    pub speedup: f64,
}

/// Per-pair f1/f2 scores with the generated label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub f1: f64,
    pub f2: f64,
    pub similar: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissolutionData {
    pub train_scores: Vec<PairScore>,
    pub test_scores: Vec<PairScore>,
    /// Fraction of test pairs where the f1/f2 regulatory gate agrees with
    /// the generated similar/dissimilar label.
    pub oracle_agreement: f64,
}

/// A trained model with everything needed to encode and predict new curves.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub task: TaskId,
    pub network: Network,
    pub normalization: NormalizationMode,
    pub label_scaler: Option<LabelScaler>,
    pub num_classes: Option<usize>,
    pub sigma_train: f64,
    pub master_seed: u64,
    pub train_cfg: TrainConfig,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    fn tensors(&self, curves: &[Curve]) -> Vec<Tensor> {
        curves
            .iter()
            .map(|c| Tensor::from_image(&encode(c, self.normalization)))
            .collect()
    }

    /// Encode and predict, mapping regression outputs back to label units.
    pub fn predict_curves(&self, curves: &[Curve]) -> Result<Vec<f64>> {
        let scaler = self.label_scaler.ok_or_else(|| {
            Error::InvalidArgument("classification model; use predict_classes".into())
        })?;
        let tensors = self.tensors(curves);
        Ok(predict_scalar(&self.network, &tensors)?
            .into_iter()
            .map(|u| scaler.from_unit(u))
            .collect())
    }

    pub fn predict_classes(&self, curves: &[Curve]) -> Result<Vec<(usize, Vec<f64>)>> {
        let tensors = self.tensors(curves);
        predict_class(&self.network, &tensors)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = ModelManifest {
            version: 1,
            task: self.task,
            input_shape: self.network.input_shape(),
            layer_specs: self.network.specs().to_vec(),
            normalization: self.normalization,
            label_scaler: self.label_scaler,
            num_classes: self.num_classes,
            sigma_train: self.sigma_train,
            master_seed: self.master_seed,
            train_cfg: self.train_cfg,
            history: self.history.clone(),
            param_count: self.network.param_count(),
        };
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        write_f32le(&dir.join("params.f32le"), &self.network.serialize_params())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<TrainedModel> {
        let manifest: ModelManifest =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.version != 1 {
            return Err(Error::Data(format!(
                "model manifest version {} unsupported",
                manifest.version
            )));
        }
        let mut network = Network::init(
            &manifest.layer_specs,
            manifest.input_shape,
            WeightInit::HeUniform,
            0,
        )?;
        let params = read_f32le(&dir.join("params.f32le"), None)?;
        network.load_params(&params)?;
        Ok(TrainedModel {
            task: manifest.task,
            network,
            normalization: manifest.normalization,
            label_scaler: manifest.label_scaler,
            num_classes: manifest.num_classes,
            sigma_train: manifest.sigma_train,
            master_seed: manifest.master_seed,
            train_cfg: manifest.train_cfg,
            history: manifest.history,
        })
    }
}

/// Model directory layout: `manifest.json` plus `params.f32le`, the flat
/// little-endian f32 parameter stream in layer order (conv weights then
/// bias; batch-norm gamma, beta, running mean, running variance; dense
/// weights then bias).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelManifest {
    version: u32,
    task: TaskId,
    input_shape: Shape,
    layer_specs: Vec<LayerSpec>,
    normalization: NormalizationMode,
    label_scaler: Option<LabelScaler>,
    num_classes: Option<usize>,
    sigma_train: f64,
    master_seed: u64,
    train_cfg: TrainConfig,
    history: Vec<EpochStats>,
    param_count: usize,
}

/// Artifacts of one task run.
pub struct RunArtifacts {
    pub report: EvalReport,
    pub model: TrainedModel,
}

/// Run a preset end to end with the same noise level on train and test.
pub fn run_task(
    preset: &TaskPreset,
    cfg: &TrainConfig,
    noise: NoiseSpec,
    master_seed: u64,
) -> Result<RunArtifacts> {
    run_task_cross_noise(preset, cfg, noise, noise, master_seed)
}

/// Run a preset with distinct train/test noise (the noise-robustness
/// experiment trains on clean curves and tests on noisy ones).
pub fn run_task_cross_noise(
    preset: &TaskPreset,
    cfg: &TrainConfig,
    train_noise: NoiseSpec,
    test_noise: NoiseSpec,
    master_seed: u64,
) -> Result<RunArtifacts> {
    if preset.id == TaskId::DissolutionSim {
        return Err(Error::InvalidArgument(
            "use run_dissolution_task for the similarity task".into(),
        ));
    }
    let train_seed = seed::mix(master_seed, 1);
    let val_seed = seed::mix(master_seed, 2);
    let test_seed = seed::mix(master_seed, 3);

    let (train_clean, train_labels) =
        generate_labeled(preset.id, preset.train_size, preset.curve_points, train_seed)?;
    let (val_clean, val_labels) =
        generate_labeled(preset.id, preset.val_size, preset.curve_points, val_seed)?;
    let (test_clean, test_labels) =
        generate_labeled(preset.id, preset.test_size, preset.curve_points, test_seed)?;

    let noisy = |curves: &[Curve], sigma: NoiseSpec| -> Vec<Curve> {
        curves
            .iter()
            .map(|c| add_noise(c, sigma, seed::mix(c.meta.seed, seed::NOISE_STREAM)))
            .collect()
    };
    let train_curves = noisy(&train_clean, train_noise);
    let val_curves = noisy(&val_clean, train_noise);
    let test_curves = noisy(&test_clean, test_noise);

    // Normalization: local, or global bounds fitted on the training corpus
    // (never recomputed from validation or test data).
    let mode = if preset.global_normalization {
        let max = train_curves
            .iter()
            .map(|c| c.y_max())
            .fold(f64::NEG_INFINITY, f64::max);
        NormalizationMode::Global { min: 0.0, max }
    } else {
        NormalizationMode::Local
    };
    mode.validate()?;

    let to_tensors = |curves: &[Curve]| -> Vec<Tensor> {
        curves
            .iter()
            .map(|c| Tensor::from_image(&encode(c, mode)))
            .collect()
    };
    let train_images = to_tensors(&train_curves);
    let val_images = to_tensors(&val_curves);

    let effective_cfg = TrainConfig {
        seed: seed::mix(master_seed, 4),
        ..*cfg
    };
    let net_seed = seed::mix(master_seed, 5);
    let input_shape = Shape::Hwc { h: 28, w: 28, c: 1 };

    let (model, scatter, regression, conf) = match preset.id.num_classes() {
        None => {
            // Peak-height labels share the image scaler so grayscale and
            // label stay proportional; other tasks fit the label range.
            let scaler = if let NormalizationMode::Global { min, max } = mode {
                LabelScaler { min, max }
            } else {
                LabelScaler::fit(&train_labels)
            };
            let unit =
                |ls: &[f64]| Targets::Scalar(ls.iter().map(|&y| scaler.to_unit(y)).collect());
            let mut network = Network::init(
                &build_regression_cnn(),
                input_shape,
                WeightInit::HeUniform,
                net_seed,
            )?;
            let history = train(
                &mut network,
                &train_images,
                &unit(&train_labels),
                Some((&val_images, &unit(&val_labels))),
                &effective_cfg,
            )?;
            let model = TrainedModel {
                task: preset.id,
                network,
                normalization: mode,
                label_scaler: Some(scaler),
                num_classes: None,
                sigma_train: train_noise.sigma,
                master_seed,
                train_cfg: effective_cfg,
                history,
            };
            let predictions = model.predict_curves(&test_curves)?;
            let scatter: Vec<[f64; 2]> = test_labels
                .iter()
                .zip(&predictions)
                .map(|(&t, &p)| [t, p])
                .collect();
            let report = regression_report(&test_labels, &predictions)?;
            (model, scatter, Some(report), None)
        }
        Some(k) => {
            let as_classes = |ls: &[f64]| -> Targets {
                Targets::Class(ls.iter().map(|&y| y as usize).collect())
            };
            let mut network = Network::init(
                &build_classifier_cnn(k)?,
                input_shape,
                WeightInit::HeUniform,
                net_seed,
            )?;
            let history = train(
                &mut network,
                &train_images,
                &as_classes(&train_labels),
                Some((&val_images, &as_classes(&val_labels))),
                &effective_cfg,
            )?;
            let model = TrainedModel {
                task: preset.id,
                network,
                normalization: mode,
                label_scaler: None,
                num_classes: Some(k),
                sigma_train: train_noise.sigma,
                master_seed,
                train_cfg: effective_cfg,
                history,
            };
            let predictions = model.predict_classes(&test_curves)?;
            let true_classes: Vec<usize> = test_labels.iter().map(|&y| y as usize).collect();
            let predicted: Vec<usize> = predictions.iter().map(|(c, _)| *c).collect();
            let scatter: Vec<[f64; 2]> = true_classes
                .iter()
                .zip(&predicted)
                .map(|(&t, &p)| [t as f64, p as f64])
                .collect();
            let matrix = confusion(&true_classes, &predicted, k)?;
            (model, scatter, None, Some(matrix))
        }
    };

    Ok(RunArtifacts {
        report: EvalReport {
            task: preset.id.as_str().to_string(),
            sigma_train: train_noise.sigma,
            sigma_test: test_noise.sigma,
            master_seed,
            n_train: preset.train_size,
            n_val: preset.val_size,
            n_test: preset.test_size,
            regression,
            confusion: conf,
            bench: None,
            dissolution: None,
            scatter,
        },
        model,
    })
}

/// Evaluate an already trained model on freshly generated test curves of
/// its own task (optionally at a different noise level).
pub fn evaluate_model(
    model: &TrainedModel,
    test_size: usize,
    curve_points: usize,
    test_noise: NoiseSpec,
    test_seed: u64,
) -> Result<EvalReport> {
    let (clean, labels) = generate_labeled(model.task, test_size, curve_points, test_seed)?;
    let curves: Vec<Curve> = clean
        .iter()
        .map(|c| add_noise(c, test_noise, seed::mix(c.meta.seed, seed::NOISE_STREAM)))
        .collect();
    evaluate_model_on(model, &curves, &labels, test_noise.sigma)
}

/// Evaluate a model on explicit labeled curves.
pub fn evaluate_model_on(
    model: &TrainedModel,
    curves: &[Curve],
    labels: &[f64],
    sigma_test: f64,
) -> Result<EvalReport> {
    let (regression, conf, scatter) = match model.num_classes {
        None => {
            let predictions = model.predict_curves(curves)?;
            let scatter: Vec<[f64; 2]> = labels
                .iter()
                .zip(&predictions)
                .map(|(&t, &p)| [t, p])
                .collect();
            (
                Some(regression_report(labels, &predictions)?),
                None,
                scatter,
            )
        }
        Some(k) => {
            let predictions = model.predict_classes(curves)?;
            let truth: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
            let predicted: Vec<usize> = predictions.iter().map(|(c, _)| *c).collect();
            let scatter: Vec<[f64; 2]> = truth
                .iter()
                .zip(&predicted)
                .map(|(&t, &p)| [t as f64, p as f64])
                .collect();
            (None, Some(confusion(&truth, &predicted, k)?), scatter)
        }
    };
    Ok(EvalReport {
        task: model.task.as_str().to_string(),
        sigma_train: model.sigma_train,
        sigma_test,
        master_seed: model.master_seed,
        n_train: 0,
        n_val: 0,
        n_test: curves.len(),
        regression,
        confusion: conf,
        bench: None,
        dissolution: None,
        scatter,
    })
}

/// Outcome of the Siamese dissolution task.
pub struct DissolutionArtifacts {
    pub report: EvalReport,
    pub network: SiameseNetwork,
}

fn dissolution_pairs(count: usize, gen_seed: u64) -> (SiamesePairBatch, Vec<PairScore>) {
    let mut left = Vec::with_capacity(count);
    let mut right = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut scores = Vec::with_capacity(count);
    for i in 0..count {
        let record_seed = seed::mix(gen_seed, i as u64);
        let kind = if i % 2 == 0 {
            PairKind::Similar
        } else {
            PairKind::Dissimilar
        };
        let pair = gen_dissolution_pair(kind, record_seed);
        let s = f1_f2(&pair.reference, &pair.test).expect("profiles are positive");
        scores.push(PairScore {
            f1: s.f1,
            f2: s.f2,
            similar: kind == PairKind::Similar,
        });
        let encode_profile = |p: &[f64; 8], tag: u64| {
            Tensor::from_image(&encode(
                &profile_to_curve(p, seed::mix(record_seed, tag)),
                NormalizationMode::Local,
            ))
        };
        left.push(encode_profile(&pair.reference, 1));
        right.push(encode_profile(&pair.test, 2));
        labels.push(if kind == PairKind::Similar { 1.0 } else { 0.0 });
    }
    (
        SiamesePairBatch {
            left,
            right,
            labels,
        },
        scores,
    )
}

/// Generate profile pairs, train the Siamese network, evaluate the test
/// pairs, and emit the f1/f2 score tables for histogram plotting.
pub fn run_dissolution_task(
    preset: &TaskPreset,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<DissolutionArtifacts> {
    let (train_pairs, train_scores) =
        dissolution_pairs(preset.train_size, seed::mix(master_seed, 1));
    let (val_pairs, _) = dissolution_pairs(preset.val_size, seed::mix(master_seed, 2));
    let (test_pairs, test_scores) =
        dissolution_pairs(preset.test_size, seed::mix(master_seed, 3));

    let mut network = SiameseNetwork::init(
        Shape::Hwc { h: 28, w: 28, c: 1 },
        seed::mix(master_seed, 5),
    )?;
    let effective_cfg = TrainConfig {
        seed: seed::mix(master_seed, 4),
        ..*cfg
    };
    network.train(&train_pairs, Some(&val_pairs), &effective_cfg)?;

    let mut truth = Vec::with_capacity(test_pairs.len());
    let mut predicted = Vec::with_capacity(test_pairs.len());
    let mut scatter = Vec::with_capacity(test_pairs.len());
    for i in 0..test_pairs.len() {
        let p = network.predict_pair(&test_pairs.left[i], &test_pairs.right[i])?;
        let pred = usize::from(p >= 0.5);
        let t = test_pairs.labels[i] as usize;
        truth.push(t);
        predicted.push(pred);
        scatter.push([t as f64, p]);
    }
    let matrix = confusion(&truth, &predicted, 2)?;
    let agreement = test_scores
        .iter()
        .filter(|s| {
            let gate_similar = s.f1 <= 15.0 && s.f2 >= 50.0;
            gate_similar == s.similar
        })
        .count() as f64
        / test_scores.len() as f64;

    Ok(DissolutionArtifacts {
        report: EvalReport {
            task: TaskId::DissolutionSim.as_str().to_string(),
            sigma_train: 0.0,
            sigma_test: 0.0,
            master_seed,
            n_train: preset.train_size,
            n_val: preset.val_size,
            n_test: preset.test_size,
            regression: None,
            confusion: Some(matrix),
            bench: None,
            dissolution: Some(DissolutionData {
                train_scores,
                test_scores,
                oracle_agreement: agreement,
            }),
            scatter,
        },
        network,
    })
}

/// Wall-clock the Rosenstein baseline against the network path
/// (encode + predict) on the same curves; the two pipelines run serially to
/// keep the timers clean.
pub fn bench_lyapunov(
    model: &TrainedModel,
    curves: &[Curve],
    ros_cfg: Option<RosensteinConfig>,
) -> Result<BenchReport> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("benchmark needs curves".into()));
    }
    let start = Instant::now();
    let mut acc = 0.0;
    for curve in curves {
        let cfg = ros_cfg.unwrap_or_else(|| RosensteinConfig::for_dt(curve.step()));
        acc += rosenstein_lle(curve.ys(), &cfg)?.value;
    }
    let ros_secs = start.elapsed().as_secs_f64();
    std::hint::black_box(acc);

    let start = Instant::now();
    let mut acc = 0.0;
    for curve in curves {
        let img = encode(curve, model.normalization);
        let out = predict_scalar(&model.network, &[Tensor::from_image(&img)])?;
        acc += out[0];
    }
    let cnn_secs = start.elapsed().as_secs_f64();
    std::hint::black_box(acc);

    Ok(BenchReport {
        rosenstein: BenchResult {
            method: "rosenstein".into(),
            seconds: ros_secs,
            items: curves.len(),
        },
        cnn: BenchResult {
            method: "cnn".into(),
            seconds: cnn_secs,
            items: curves.len(),
        },
        speedup: ros_secs / cnn_secs,
    })
}

/// Configuration of the synthetic-spiral drawing pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralConfig {
    pub control_subjects: usize,
    pub patient_subjects: usize,
    pub samples: usize,
    /// Augmented copies per patient subject; controls get four times as
    /// many to rebalance the class sizes.
    pub patient_augmentations: usize,
    pub epochs: usize,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        SpiralConfig {
            control_subjects: 8,
            patient_subjects: 32,
            samples: 256,
            patient_augmentations: 5,
            epochs: 12,
        }
    }
}

/// Spiral-drawing classification smoke test: synthesize control/patient
/// spirals, augment (controls four times more), encode the X and Y channels
/// as a two-channel image, and train the classifier on an 80/20 split.
pub fn run_spiral_task(cfg: &SpiralConfig, master_seed: u64) -> Result<EvalReport> {
    let records = spiral_dataset(
        cfg.control_subjects,
        cfg.patient_subjects,
        cfg.samples,
        seed::mix(master_seed, 1),
    );
    let spec = AugmentSpec::default();
    let mut images: Vec<Tensor> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (ri, rec) in records.iter().enumerate() {
        let copies = match rec.class {
            SubjectClass::Control => 4 * cfg.patient_augmentations,
            SubjectClass::Patient => cfg.patient_augmentations,
        };
        for copy in 0..copies {
            let aug_seed = seed::mix(seed::mix(master_seed, 2), (ri * 1000 + copy) as u64);
            let augmented = augment_drawing(rec, &spec, aug_seed)?;
            images.push(drawing_tensor(&augmented)?);
            labels.push(rec.class.index());
        }
    }

    // Deterministic 80/20 split.
    let n = images.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed::mix(master_seed, 3));
    for i in (1..n).rev() {
        use rand::Rng;
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let split = (n * 4) / 5;
    let gather = |idx: &[usize]| -> (Vec<Tensor>, Vec<usize>) {
        (
            idx.iter().map(|&i| images[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (train_images, train_labels) = gather(&order[..split]);
    let (test_images, test_labels) = gather(&order[split..]);

    let mut network = Network::init(
        &build_classifier_cnn(2)?,
        Shape::Hwc { h: 28, w: 28, c: 2 },
        WeightInit::HeUniform,
        seed::mix(master_seed, 5),
    )?;
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        loss: Loss::SoftmaxCrossEntropy,
        seed: seed::mix(master_seed, 4),
        ..TrainConfig::default()
    };
    train(
        &mut network,
        &train_images,
        &Targets::Class(train_labels),
        None,
        &train_cfg,
    )?;

    let predictions = predict_class(&network, &test_images)?;
    let predicted: Vec<usize> = predictions.iter().map(|(c, _)| *c).collect();
    let matrix = confusion(&test_labels, &predicted, 2)?;
    let scatter = test_labels
        .iter()
        .zip(&predicted)
        .map(|(&t, &p)| [t as f64, p as f64])
        .collect();
    Ok(EvalReport {
        task: "spiral_drawing".to_string(),
        sigma_train: 0.0,
        sigma_test: 0.0,
        master_seed,
        n_train: split,
        n_val: 0,
        n_test: n - split,
        regression: None,
        confusion: Some(matrix),
        bench: None,
        dissolution: None,
        scatter,
    })
}

/// Two-channel (X, Y) image tensor of one drawing.
pub fn drawing_tensor(rec: &DrawingRecord) -> Result<Tensor> {
    let curves = drawings_to_curves(rec, &[Channel::X, Channel::Y])?;
    let imgs: Vec<EncodedImage> = curves
        .iter()
        .map(|c| encode(c, NormalizationMode::Local))
        .collect();
    let refs: Vec<&EncodedImage> = imgs.iter().collect();
    Tensor::from_channels(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_architecture_has_reference_param_count() {
        let net = Network::init(
            &build_regression_cnn(),
            Shape::Hwc { h: 28, w: 28, c: 1 },
            WeightInit::HeUniform,
            0,
        )
        .unwrap();
        assert_eq!(net.param_count(), reference_param_count(1));
        assert_eq!(net.param_count(), 6289);
        assert_eq!(net.output_shape(), Shape::Flat { len: 1 });
    }

    #[test]
    fn classifier_head_matches_class_count() {
        let specs = build_classifier_cnn(3).unwrap();
        let net = Network::init(
            &specs,
            Shape::Hwc { h: 28, w: 28, c: 1 },
            WeightInit::HeUniform,
            0,
        )
        .unwrap();
        assert_eq!(net.output_shape(), Shape::Flat { len: 3 });
        assert_eq!(net.param_count(), reference_param_count(3));
        assert!(build_classifier_cnn(1).is_err());
    }

    #[test]
    fn label_scaler_round_trip_and_degenerate() {
        let s = LabelScaler::fit(&[2.0, 6.0, 4.0]);
        assert_eq!(s.to_unit(2.0), 0.0);
        assert_eq!(s.to_unit(6.0), 1.0);
        assert!((s.from_unit(s.to_unit(3.3)) - 3.3).abs() < 1e-12);
        let d = LabelScaler::fit(&[5.0, 5.0]);
        assert_eq!(d.to_unit(5.0), 0.5);
        assert_eq!(d.from_unit(0.9), 5.0);
    }

    #[test]
    fn generated_labels_match_specs() {
        let (curves, labels) = generate_labeled(TaskId::ExpRate, 20, 50, 99).unwrap();
        for (c, &l) in curves.iter().zip(&labels) {
            assert_eq!(c.meta.params["omega"], l);
            assert!((-1.0..=1.0).contains(&l));
        }
        let (_, counts) = generate_labeled(TaskId::PeakCount, 30, 500, 1).unwrap();
        assert!(counts.iter().all(|&c| c == 0.0 || c == 1.0 || c == 2.0));
        let (_, widths) = generate_labeled(TaskId::PeakWidth, 30, 500, 2).unwrap();
        assert!(widths.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn generation_is_order_independent() {
        let (curves, labels) = generate_labeled(TaskId::SineFreq, 10, 40, 7).unwrap();
        // Record 7 regenerated alone matches the batch entry.
        let record_seed = seed::mix(7, 7);
        let (one, l) = super::generate_one(TaskId::SineFreq, 40, record_seed).unwrap();
        assert_eq!(curves[7], one);
        assert_eq!(labels[7], l);
    }

    #[test]
    fn tiny_task_run_is_deterministic() {
        let preset = TaskPreset {
            id: TaskId::ExpRate,
            train_size: 24,
            val_size: 8,
            test_size: 8,
            curve_points: 50,
            global_normalization: false,
            epochs: 2,
        };
        let cfg = preset.train_config();
        let a = run_task(&preset, &cfg, NoiseSpec::none(), 123).unwrap();
        let b = run_task(&preset, &cfg, NoiseSpec::none(), 123).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert_eq!(
            a.model.network.serialize_params(),
            b.model.network.serialize_params()
        );
        let c = run_task(&preset, &cfg, NoiseSpec::none(), 124).unwrap();
        assert_ne!(a.report.to_json().unwrap(), c.report.to_json().unwrap());
    }

    #[test]
    fn model_save_load_round_trip() {
        let preset = TaskPreset {
            id: TaskId::ExpRate,
            train_size: 16,
            val_size: 4,
            test_size: 4,
            curve_points: 50,
            global_normalization: false,
            epochs: 1,
        };
        let cfg = preset.train_config();
        let artifacts = run_task(&preset, &cfg, NoiseSpec::none(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        artifacts.model.save(dir.path()).unwrap();
        let loaded = TrainedModel::load(dir.path()).unwrap();
        assert_eq!(loaded.task, TaskId::ExpRate);
        assert_eq!(loaded.history.len(), 1);
        // Parameters survive the f32 round trip to f32 precision.
        let (curves, _) = generate_labeled(TaskId::ExpRate, 4, 50, 77).unwrap();
        let a = artifacts.model.predict_curves(&curves).unwrap();
        let b = loaded.predict_curves(&curves).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
    }

    #[test]
    fn global_scaler_comes_from_training_corpus() {
        let preset = TaskPreset {
            id: TaskId::PeakHeight,
            train_size: 12,
            val_size: 4,
            test_size: 4,
            curve_points: 300,
            global_normalization: true,
            epochs: 1,
        };
        let cfg = preset.train_config();
        let artifacts = run_task(&preset, &cfg, NoiseSpec::none(), 11).unwrap();
        match artifacts.model.normalization {
            NormalizationMode::Global { min, max } => {
                assert_eq!(min, 0.0);
                let (train_clean, _) =
                    generate_labeled(TaskId::PeakHeight, 12, 300, seed::mix(11, 1)).unwrap();
                let want = train_clean
                    .iter()
                    .map(|c| c.y_max())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(max, want);
                let scaler = artifacts.model.label_scaler.unwrap();
                assert_eq!((scaler.min, scaler.max), (0.0, max));
            }
            other => panic!("expected global normalization, got {other:?}"),
        }
    }

    #[test]
    fn dissolution_pairs_balance_and_score() {
        let (pairs, scores) = dissolution_pairs(40, 3);
        let similar = scores.iter().filter(|s| s.similar).count();
        assert_eq!(similar, 20);
        assert_eq!(pairs.len(), 40);
        for s in &scores {
            if s.similar {
                assert!(
                    s.f1 < 15.0 && s.f2 > 50.0,
                    "similar pair f1={} f2={}",
                    s.f1,
                    s.f2
                );
            }
        }
    }

    #[test]
    fn bench_rejects_empty_input() {
        let preset = TaskPreset {
            id: TaskId::ExpRate,
            train_size: 8,
            val_size: 4,
            test_size: 4,
            curve_points: 50,
            global_normalization: false,
            epochs: 1,
        };
        let cfg = preset.train_config();
        let artifacts = run_task(&preset, &cfg, NoiseSpec::none(), 1).unwrap();
        assert!(bench_lyapunov(&artifacts.model, &[], None).is_err());
    }

    #[test]
    fn eval_report_json_round_trip() {
        let preset = TaskPreset {
            id: TaskId::Monotone,
            train_size: 16,
            val_size: 4,
            test_size: 6,
            curve_points: 50,
            global_normalization: false,
            epochs: 1,
        };
        let cfg = preset.train_config();
        let artifacts = run_task(&preset, &cfg, NoiseSpec::none(), 2).unwrap();
        let json = artifacts.report.to_json().unwrap();
        let back = EvalReport::from_json(&json).unwrap();
        assert_eq!(artifacts.report, back);
        assert!(back.confusion.is_some());
        assert_eq!(back.scatter.len(), 6);
    }
}
