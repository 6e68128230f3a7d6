//! Seeded synthetic streams: uniform nulls, toy Gaussian inputs, and
//! piecewise-stationary shift schedules built from segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::toy::ToyModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// i.i.d. Uniform(0, 1) values, directly usable as u.
    UniformNull,
    /// Toy inputs x with a label sidecar.
    GaussianToy,
    /// Entropies of the unadapted toy model on toy inputs.
    EntropyDirect,
}

impl std::str::FromStr for StreamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-null" => Ok(Self::UniformNull),
            "gaussian-toy" => Ok(Self::GaussianToy),
            "entropy-direct" => Ok(Self::EntropyDirect),
            other => Err(Error::Config(format!("unknown stream kind {other:?}"))),
        }
    }
}

/// A contiguous block drawn from one shift condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub shift: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub kind: StreamKind,
    pub segments: Vec<Segment>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub values: Vec<f64>,
    /// Present for the Gaussian kinds; never fed to the engine.
    pub labels: Option<Vec<i8>>,
}

impl StreamSpec {
    pub fn new(kind: StreamKind, segments: Vec<Segment>, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            segments,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn single(kind: StreamKind, shift: f64, length: usize, seed: u64) -> Result<Self> {
        Self::new(kind, vec![Segment { shift, length }], seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Input("stream spec has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if s.length == 0 {
                return Err(Error::Input(format!("segment {i} has zero length")));
            }
            if !s.shift.is_finite() {
                return Err(Error::Input(format!("segment {i} shift is not finite")));
            }
        }
        Ok(())
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Parses `shift:length,shift:length,...`.
pub fn parse_segments(text: &str) -> Result<Vec<Segment>> {
    text.split(',')
        .map(|part| {
            let (shift, length) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("segment {part:?} is not shift:length")))?;
            let shift = shift
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad segment shift {shift:?}")))?;
            let length = length
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad segment length {length:?}")))?;
            Ok(Segment { shift, length })
        })
        .collect()
}

pub fn generate(spec: &StreamSpec) -> Result<GeneratedStream> {
    spec.validate()?;
    let total = spec.total_len();
    let mut values = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let model = ToyModel::default();
    for (index, segment) in spec.segments.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64);
        for _ in 0..segment.length {
            match spec.kind {
                StreamKind::UniformNull => values.push(rng.random::<f64>()),
                StreamKind::GaussianToy | StreamKind::EntropyDirect => {
                    let y: i8 = if rng.random::<bool>() { 1 } else { -1 };
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let x = y as f64 + segment.shift + noise;
                    values.push(match spec.kind {
                        StreamKind::EntropyDirect => model.entropy(x),
                        _ => x,
                    });
                    labels.push(y);
                }
            }
        }
    }
    let labels = match spec.kind {
        StreamKind::UniformNull => None,
        _ => Some(labels),
    };
    Ok(GeneratedStream { values, labels })
}
