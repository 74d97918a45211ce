//! Tablet-drawing ingestion and augmentation.
//!
//! The real spiral-drawing dataset is not redistributable, so the pipeline
//! is specified against a documented CSV layout
//! (`timestamp,X,Y,Z,P,A,subject,class` with a header row) and validated on
//! a synthetic spiral fixture: controls draw smooth Archimedean spirals,
//! patients draw spirals with a superimposed tremor.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveMeta, Family};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectClass {
    Control,
    Patient,
}

impl SubjectClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "control" => Ok(SubjectClass::Control),
            "patient" => Ok(SubjectClass::Patient),
            other => Err(Error::Data(format!("unknown subject class `{other}`"))),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            SubjectClass::Control => 0,
            SubjectClass::Patient => 1,
        }
    }
}

/// One subject's drawing: per-timestamp pen position, pressure, grip angle.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawingRecord {
    pub subject: String,
    pub class: SubjectClass,
    pub timestamps: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub pressure: Vec<f64>,
    pub angle: Vec<f64>,
}

impl DrawingRecord {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    fn channel(&self, ch: Channel) -> &[f64] {
        match ch {
            Channel::X => &self.x,
            Channel::Y => &self.y,
            Channel::Z => &self.z,
            Channel::P => &self.pressure,
            Channel::A => &self.angle,
        }
    }

    fn channel_mut(&mut self, ch: Channel) -> &mut Vec<f64> {
        match ch {
            Channel::X => &mut self.x,
            Channel::Y => &mut self.y,
            Channel::Z => &mut self.z,
            Channel::P => &mut self.pressure,
            Channel::A => &mut self.angle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    X,
    Y,
    Z,
    P,
    A,
}

pub const ALL_CHANNELS: [Channel; 5] = [Channel::X, Channel::Y, Channel::Z, Channel::P, Channel::A];

/// Ingest the documented CSV layout, grouping rows by subject (order of
/// first appearance) and validating per-subject timestamp monotonicity.
pub fn ingest_drawings(path: &Path) -> Result<Vec<DrawingRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let want = ["timestamp", "X", "Y", "Z", "P", "A", "subject", "class"];
    let mut col = BTreeMap::new();
    for name in want {
        let idx = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("missing CSV column `{name}`")))?;
        col.insert(name, idx);
    }

    let mut order: Vec<String> = Vec::new();
    let mut records: BTreeMap<String, DrawingRecord> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let field = |name: &str| -> Result<&str> {
            row.get(col[name])
                .ok_or_else(|| Error::Data(format!("short row, missing `{name}`")))
        };
        let parse = |name: &str| -> Result<f64> {
            field(name)?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Data(format!("non-numeric `{name}` value")))
        };
        let subject = field("subject")?.trim().to_string();
        let class = SubjectClass::parse(field("class")?.trim())?;
        let t = parse("timestamp")?;
        let rec = records.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            DrawingRecord {
                subject,
                class,
                timestamps: Vec::new(),
                x: Vec::new(),
                y: Vec::new(),
                z: Vec::new(),
                pressure: Vec::new(),
                angle: Vec::new(),
            }
        });
        if rec.class != class {
            return Err(Error::Data(format!(
                "subject `{}` appears with two classes",
                rec.subject
            )));
        }
        if let Some(&last) = rec.timestamps.last() {
            if t <= last {
                return Err(Error::Data(format!(
                    "non-monotone timestamps for subject `{}` ({t} after {last})",
                    rec.subject
                )));
            }
        }
        rec.timestamps.push(t);
        rec.x.push(parse("X")?);
        rec.y.push(parse("Y")?);
        rec.z.push(parse("Z")?);
        rec.pressure.push(parse("P")?);
        rec.angle.push(parse("A")?);
    }
    Ok(order.into_iter().map(|s| records.remove(&s).unwrap()).collect())
}

/// Augmentation ranges: one uniformly drawn constant shift per channel plus
/// optional random reflections of X and Y about their means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub x_shift: (f64, f64),
    pub y_shift: (f64, f64),
    pub z_shift: (f64, f64),
    pub p_shift: (f64, f64),
    pub a_shift: (f64, f64),
    pub reflect: bool,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            x_shift: (-25.0, 25.0),
            y_shift: (-50.0, 50.0),
            z_shift: (-0.5, 0.5),
            p_shift: (0.0, 50.0),
            a_shift: (0.0, 25.0),
            reflect: true,
        }
    }
}

impl AugmentSpec {
    /// Identity augmentation (zero-width ranges, no reflection).
    pub fn identity() -> Self {
        AugmentSpec {
            x_shift: (0.0, 0.0),
            y_shift: (0.0, 0.0),
            z_shift: (0.0, 0.0),
            p_shift: (0.0, 0.0),
            a_shift: (0.0, 0.0),
            reflect: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [
            self.x_shift,
            self.y_shift,
            self.z_shift,
            self.p_shift,
            self.a_shift,
        ] {
            if lo > hi || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "bad augmentation range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Shift each channel by one uniformly drawn constant; with `reflect` set,
/// X and Y are independently negated about their means half the time.
/// Sample count, subject, and class label are preserved; the same seed
/// reproduces the same augmentation.
pub fn augment_drawing(rec: &DrawingRecord, spec: &AugmentSpec, aug_seed: u64) -> Result<DrawingRecord> {
    spec.validate()?;
    let mut rng = seed::rng(aug_seed);
    let mut out = rec.clone();
    let shifts = [
        (Channel::X, spec.x_shift),
        (Channel::Y, spec.y_shift),
        (Channel::Z, spec.z_shift),
        (Channel::P, spec.p_shift),
        (Channel::A, spec.a_shift),
    ];
    for (ch, range) in shifts {
        let delta = uniform(&mut rng, range);
        out.channel_mut(ch).iter_mut().for_each(|v| *v += delta);
    }
    if spec.reflect {
        for ch in [Channel::X, Channel::Y] {
            let flip = rng.random_range(0.0..1.0) < 0.5;
            if flip {
                let vals = out.channel_mut(ch);
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                vals.iter_mut().for_each(|v| *v = 2.0 * mean - *v);
            }
        }
    }
    Ok(out)
}

/// One curve per selected channel, indexed by timestamp (the grid must be
/// equidistant, which tablet exports at a fixed sampling rate satisfy).
pub fn drawings_to_curves(rec: &DrawingRecord, channels: &[Channel]) -> Result<Vec<Curve>> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("no channels selected".into()));
    }
    channels
        .iter()
        .map(|&ch| {
            let meta = CurveMeta::new(Family::Drawing, 0)
                .with_param("class", rec.class.index() as f64);
            Curve::new(rec.timestamps.clone(), rec.channel(ch).to_vec(), meta)
        })
        .collect()
}

/// Synthetic spiral fixture: an Archimedean spiral `r = k * theta`; patient
/// spirals superimpose a radial tremor. Channels mimic the tablet layout.
pub fn synthetic_spiral(
    subject: &str,
    class: SubjectClass,
    samples: usize,
    record_seed: u64,
) -> DrawingRecord {
    let mut rng = seed::rng(record_seed);
    let turns = 3.0;
    let k = 4.0 + 0.5 * rng.random_range(0.0..1.0);
    let tremor_amp = match class {
        SubjectClass::Control => 0.0,
        SubjectClass::Patient => 0.06 + 0.06 * rng.random_range(0.0..1.0),
    };
    let tremor_freq = 14.0 + 6.0 * rng.random_range(0.0..1.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let jitter = 0.01;

    let mut timestamps = Vec::with_capacity(samples);
    let mut x = Vec::with_capacity(samples);
    let mut y = Vec::with_capacity(samples);
    let mut z = Vec::with_capacity(samples);
    let mut pressure = Vec::with_capacity(samples);
    let mut angle = Vec::with_capacity(samples);
    for i in 0..samples {
        let theta = turns * std::f64::consts::TAU * i as f64 / (samples - 1) as f64;
        let tremor = 1.0 + tremor_amp * (tremor_freq * theta + phase).sin();
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        let r = k * theta * tremor;
        timestamps.push(i as f64);
        x.push(r * theta.cos() + jitter * zx);
        y.push(r * theta.sin() + jitter * zy);
        z.push(0.4 + 0.05 * (0.5 * theta).sin());
        pressure.push(45.0 + 8.0 * (0.8 * theta + phase).sin());
        angle.push(12.0 + 2.0 * (0.3 * theta).cos());
    }
    DrawingRecord {
        subject: subject.to_string(),
        class,
        timestamps,
        x,
        y,
        z,
        pressure,
        angle,
    }
}

/// A labeled set of synthetic spiral subjects.
pub fn spiral_dataset(
    controls: usize,
    patients: usize,
    samples: usize,
    master_seed: u64,
) -> Vec<DrawingRecord> {
    let mut out = Vec::with_capacity(controls + patients);
    for i in 0..controls {
        out.push(synthetic_spiral(
            &format!("control{i:03}"),
            SubjectClass::Control,
            samples,
            seed::mix(master_seed, i as u64),
        ));
    }
    for i in 0..patients {
        out.push(synthetic_spiral(
            &format!("patient{i:03}"),
            SubjectClass::Patient,
            samples,
            seed::mix(master_seed, 1000 + i as u64),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_csv(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("drawings.csv");
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn two_row_file_makes_one_record() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_csv(
            tmp.path(),
            "timestamp,X,Y,Z,P,A,subject,class\n0,1.0,2.0,0.5,40,10,s1,control\n1,1.5,2.5,0.5,41,10,s1,control\n",
        );
        let recs = ingest_drawings(&path).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].len(), 2);
        assert_eq!(recs[0].class, SubjectClass::Control);
        assert_eq!(recs[0].x, vec![1.0, 1.5]);
    }

    #[test]
    fn missing_column_is_named() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_csv(
            tmp.path(),
            "timestamp,X,Y,Z,A,subject,class\n0,1,2,3,4,s1,control\n",
        );
        let err = ingest_drawings(&path).unwrap_err();
        assert!(err.to_string().contains("`P`"), "{err}");
    }

    #[test]
    fn non_monotone_timestamps_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_csv(
            tmp.path(),
            "timestamp,X,Y,Z,P,A,subject,class\n1,1,2,3,4,5,s1,patient\n0,1,2,3,4,5,s1,patient\n",
        );
        let err = ingest_drawings(&path).unwrap_err();
        assert!(err.to_string().contains("non-monotone"));
    }

    #[test]
    fn spiral_fixture_ingests_cleanly_through_csv() {
        let rec = synthetic_spiral("s0", SubjectClass::Control, 50, 9);
        let mut body = String::from("timestamp,X,Y,Z,P,A,subject,class\n");
        for i in 0..rec.len() {
            body.push_str(&format!(
                "{},{},{},{},{},{},{},control\n",
                rec.timestamps[i], rec.x[i], rec.y[i], rec.z[i], rec.pressure[i], rec.angle[i],
                rec.subject
            ));
        }
        let tmp = tempfile::tempdir().unwrap();
        let path = write_csv(tmp.path(), &body);
        let back = ingest_drawings(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].len(), 50);
        for (a, b) in back[0].x.iter().zip(&rec.x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_augmentation_is_identity() {
        let rec = synthetic_spiral("s0", SubjectClass::Patient, 40, 3);
        let out = augment_drawing(&rec, &AugmentSpec::identity(), 5).unwrap();
        assert_eq!(rec, out);
    }

    #[test]
    fn shifts_are_constant_and_in_range() {
        let rec = synthetic_spiral("s0", SubjectClass::Control, 60, 4);
        let spec = AugmentSpec {
            reflect: false,
            ..AugmentSpec::default()
        };
        let out = augment_drawing(&rec, &spec, 11).unwrap();
        let d0 = out.x[0] - rec.x[0];
        assert!((-25.0..=25.0).contains(&d0));
        for i in 0..rec.len() {
            assert!((out.x[i] - rec.x[i] - d0).abs() < 1e-9);
        }
        let dp = out.pressure[0] - rec.pressure[0];
        assert!((0.0..=50.0).contains(&dp));
        let da = out.angle[0] - rec.angle[0];
        assert!((0.0..=25.0).contains(&da));
    }

    #[test]
    fn augmentation_is_seeded_and_preserves_labels() {
        let rec = synthetic_spiral("s0", SubjectClass::Patient, 30, 8);
        let spec = AugmentSpec::default();
        let a = augment_drawing(&rec, &spec, 21).unwrap();
        let b = augment_drawing(&rec, &spec, 21).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class, rec.class);
        assert_eq!(a.len(), rec.len());
        let c = augment_drawing(&rec, &spec, 22).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn reflection_flips_about_channel_mean() {
        let rec = synthetic_spiral("s0", SubjectClass::Control, 80, 2);
        let spec = AugmentSpec {
            x_shift: (0.0, 0.0),
            y_shift: (0.0, 0.0),
            z_shift: (0.0, 0.0),
            p_shift: (0.0, 0.0),
            a_shift: (0.0, 0.0),
            reflect: true,
        };
        // Find a seed whose draw flips X; check the mirror identity.
        for aug_seed in 0..32 {
            let out = augment_drawing(&rec, &spec, aug_seed).unwrap();
            if out.x != rec.x {
                let mean = rec.x.iter().sum::<f64>() / rec.x.len() as f64;
                for (a, b) in out.x.iter().zip(&rec.x) {
                    assert!((a - (2.0 * mean - b)).abs() < 1e-9);
                }
                return;
            }
        }
        panic!("no seed in 0..32 flipped X");
    }

    #[test]
    fn channel_selection_to_curves() {
        let rec = synthetic_spiral("s0", SubjectClass::Control, 64, 6);
        let curves = drawings_to_curves(&rec, &[Channel::X, Channel::Y]).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].len(), 64);
        assert!(drawings_to_curves(&rec, &[]).is_err());
        let five = drawings_to_curves(&rec, &ALL_CHANNELS).unwrap();
        assert_eq!(five.len(), 5);
    }

    #[test]
    fn spiral_x_channel_oscillates_with_growing_envelope() {
        let rec = synthetic_spiral("s0", SubjectClass::Control, 300, 1);
        let curves = drawings_to_curves(&rec, &[Channel::X]).unwrap();
        let ys = curves[0].ys();
        // r grows with theta: the late-half envelope exceeds the early half.
        let early_max = ys[..150].iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
        let late_max = ys[150..].iter().cloned().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(late_max > 2.0 * early_max);
        // Oscillation: many sign changes.
        let flips = ys.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert!(flips >= 4, "only {flips} sign changes");
    }
}
