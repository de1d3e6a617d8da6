//! Seeded synthetic data: patch-probability populations, scan records and
//! probability maps.
//!
//! Populations are finite mixtures of Kumaraswamy components rescaled to a
//! sub-interval of [0, 1]. The Kumaraswamy law on [0, 1] has CDF
//! `F(x) = 1 - (1 - x^a)^b` and the closed-form inverse
//! `F⁻¹(u) = (1 - (1 - u)^(1/b))^(1/a)`, so sampling is one uniform draw per
//! value. Presets:
//!
//! | kind | components (weight, a, b, interval) |
//! |------|-------------------------------------|
//! | NC   | (1.00, 0.7, 6.0, [0, 0.6]) |
//! | C    | (0.75, 0.7, 6.0, [0, 0.6]) + (0.25, 6.0, 0.8, [0.65, 1]) |
//!
//! Both are dominated by the left component, and only C has mass above 0.6.

use rand::Rng;

use crate::diagnosis::Diagnosis;
use crate::domain::{canonical_class_names, Magnification, ProbabilityMap, ScanRecord};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use crate::stats::Population;

/// One mixture component: Kumaraswamy(a, b) mapped affinely onto `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub a: f64,
    pub b: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Component {
    pub fn sample(&self, u: f64) -> f64 {
        let x = (1.0 - (1.0 - u).powf(1.0 / self.b)).powf(1.0 / self.a);
        (self.lo + (self.hi - self.lo) * x).clamp(self.lo, self.hi)
    }
}

const LEFT_TAIL: Component = Component { weight: 1.0, a: 0.7, b: 6.0, lo: 0.0, hi: 0.6 };
const RIGHT_TAIL: Component = Component { weight: 0.25, a: 6.0, b: 0.8, lo: 0.65, hi: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub kind: Diagnosis,
    pub size: usize,
    pub components: Vec<Component>,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn preset(kind: Diagnosis, size: usize, seed: u64) -> Result<Self> {
        let components = match kind {
            Diagnosis::NC => vec![LEFT_TAIL],
            Diagnosis::C => vec![Component { weight: 0.75, ..LEFT_TAIL }, RIGHT_TAIL],
            Diagnosis::IHC => return Err(Error::Parameter("no population preset for IHC".into())),
        };
        Ok(PopulationSpec { kind, size, components, seed })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == Diagnosis::IHC {
            return Err(Error::Parameter("population kind must be C or NC".into()));
        }
        if self.size == 0 {
            return Err(Error::Parameter("population size must be positive".into()));
        }
        if self.components.is_empty() {
            return Err(Error::Parameter("mixture needs at least one component".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("component weights sum to {total}, not 1")));
        }
        for c in &self.components {
            let ok = c.weight >= 0.0 && c.a > 0.0 && c.b > 0.0 && 0.0 <= c.lo && c.lo < c.hi && c.hi <= 1.0;
            if !ok || !(c.a.is_finite() && c.b.is_finite()) {
                return Err(Error::Parameter(format!("invalid mixture component {c:?}")));
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick: f64 = rng.random();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if pick < acc {
                return c.sample(u);
            }
        }
        self.components[self.components.len() - 1].sample(u)
    }
}

const CHUNK: usize = 4096;

pub fn gen_population(spec: &PopulationSpec) -> Result<Population> {
    gen_population_with(spec, Exec::default())
}

/// Draws `spec.size` values. Chunks of 4096 values each get their own stream,
/// so the output is the same for every execution strategy.
pub fn gen_population_with(spec: &PopulationSpec, exec: Exec) -> Result<Population> {
    spec.validate()?;
    let chunks = spec.size.div_ceil(CHUNK);
    let parts = exec.map_range(chunks, |k| {
        let mut rng = rng::stream(rng::derive_seed(spec.seed, k as u64), 0);
        let len = CHUNK.min(spec.size - k * CHUNK);
        (0..len).map(|_| spec.sample(&mut rng)).collect::<Vec<f64>>()
    });
    Population::new(spec.kind, parts.concat())
}

/// Scan-level cancer percentages with ground truth.
///
/// A scan is C with probability `prevalence`. With probability `noise` it is
/// "ambiguous": NC scans then take `p_c ~ U[0.5, 5]` and C scans
/// `p_c ~ U[2, 7]`, so both classes overlap on [2, 5]. Otherwise NC scans take
/// `p_c = 0.5 u²` and C scans `p_c = 7 + 73 K` with `K ~ Kumaraswamy(1, 2.5)`.
pub fn gen_scan_records(count: usize, prevalence: f64, noise: f64, seed: u64) -> Result<Vec<ScanRecord>> {
    for (name, v) in [("prevalence", prevalence), ("noise", noise)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("{name} must be in [0, 1], got {v}")));
        }
    }
    let high = Component { weight: 1.0, a: 1.0, b: 2.5, lo: 7.0 / 100.0, hi: 0.8 };
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let is_c = r.random::<f64>() < prevalence;
            let noisy = r.random::<f64>() < noise;
            let u: f64 = r.random();
            let pct = match (is_c, noisy) {
                (false, false) => 0.5 * u * u,
                (false, true) => 0.5 + 4.5 * u,
                (true, true) => 2.0 + 5.0 * u,
                (true, false) => 100.0 * high.sample(u),
            };
            let truth = if is_c { Diagnosis::C } else { Diagnosis::NC };
            ScanRecord::new(format!("S{i:05}"), pct, Some(truth))
        })
        .collect()
}

// Class order BG, T, N, A, R1..R5.
const HEALTHY: [f64; 9] = [0.05, 0.25, 0.45, 0.10, 0.03, 0.03, 0.03, 0.03, 0.03];
const CANCER: [f64; 9] = [0.02, 0.05, 0.10, 0.03, 0.05, 0.10, 0.35, 0.25, 0.05];

/// Parameters of [`gen_probability_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSpec {
    pub height: usize,
    pub width: usize,
    /// Number of disk-shaped cancerous regions.
    pub blobs: usize,
    /// Probability that a tissue cell outside the blobs is cancerous on its own.
    pub salt: f64,
    pub magnification: Magnification,
    pub seed: u64,
}

/// A 9-class map over an elliptical tissue region (cells outside are masked
/// invalid). Cells inside a blob or hit by salt noise carry a Gleason-heavy
/// vector, the rest a healthy one; each vector is jittered by up to ±20% per
/// class and renormalised. Under the 2-group settings the cancer group stays
/// above 0.55 for cancerous cells and below 0.25 for healthy ones.
pub fn gen_probability_map(spec: &MapSpec) -> Result<ProbabilityMap> {
    let MapSpec { height, width, blobs, salt, magnification, seed } = *spec;
    if height == 0 || width == 0 {
        return Err(Error::Shape("map dimensions must be positive".into()));
    }
    if !(0.0..=1.0).contains(&salt) {
        return Err(Error::Parameter(format!("salt probability must be in [0, 1], got {salt}")));
    }
    let (h, w) = (height as f64, width as f64);
    let inside = |r: usize, c: usize| {
        let y = (r as f64 + 0.5 - h / 2.0) / (0.48 * h);
        let x = (c as f64 + 0.5 - w / 2.0) / (0.48 * w);
        x * x + y * y <= 1.0
    };
    let mut brng = rng::stream(seed, u64::MAX);
    let short = h.min(w);
    let disks: Vec<(f64, f64, f64)> = (0..blobs)
        .map(|_| {
            let cy = h * (0.25 + 0.5 * brng.random::<f64>());
            let cx = w * (0.25 + 0.5 * brng.random::<f64>());
            let rad = (short * (0.06 + 0.08 * brng.random::<f64>())).max(1.5);
            (cy, cx, rad)
        })
        .collect();

    let rows = Exec::default().map_range(height, |r| {
        let mut rng = rng::stream(seed, r as u64);
        let mut values = Vec::with_capacity(width * 9);
        let mut mask = Vec::with_capacity(width);
        for c in 0..width {
            let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
            let in_blob = disks.iter().any(|(cy, cx, rad)| (y - cy).powi(2) + (x - cx).powi(2) <= rad * rad);
            let salted = rng.random::<f64>() < salt;
            let base = if in_blob || salted { &CANCER } else { &HEALTHY };
            let jittered: Vec<f64> = base.iter().map(|p| p * (0.8 + 0.4 * rng.random::<f64>())).collect();
            let total: f64 = jittered.iter().sum();
            values.extend(jittered.iter().map(|p| p / total));
            mask.push(inside(r, c));
        }
        (values, mask)
    });
    let (mut values, mut mask) = (Vec::with_capacity(height * width * 9), Vec::with_capacity(height * width));
    for (v, m) in rows {
        values.extend(v);
        mask.extend(m);
    }
    ProbabilityMap::new(height, width, magnification, canonical_class_names(), values, Some(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{binarize, merge_classes, ClassScheme};

    #[test]
    fn presets_are_valid() {
        for kind in [Diagnosis::C, Diagnosis::NC] {
            PopulationSpec::preset(kind, 10, 0).unwrap().validate().unwrap();
        }
        assert!(PopulationSpec::preset(Diagnosis::IHC, 10, 0).is_err());
    }

    #[test]
    fn invalid_specs() {
        let mut s = PopulationSpec::preset(Diagnosis::C, 10, 0).unwrap();
        s.components[0].weight = 0.5;
        assert!(s.validate().is_err());
        let mut s = PopulationSpec::preset(Diagnosis::NC, 10, 0).unwrap();
        s.components[0].a = 0.0;
        assert!(s.validate().is_err());
        let s = PopulationSpec::preset(Diagnosis::NC, 0, 0).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn kumaraswamy_inverse_endpoints() {
        let c = Component { weight: 1.0, a: 2.0, b: 3.0, lo: 0.2, hi: 0.4 };
        assert_eq!(c.sample(0.0), 0.2);
        assert_eq!(c.sample(1.0), 0.4);
        // median: 1 - (1 - x^2)^3 = 0.5
        let x = (1.0 - 0.5f64.powf(1.0 / 3.0)).sqrt();
        assert!((c.sample(0.5) - (0.2 + 0.2 * x)).abs() < 1e-15);
    }

    #[test]
    fn population_is_deterministic_and_chunk_stable() {
        let spec = PopulationSpec::preset(Diagnosis::C, 10_000, 9).unwrap();
        let a = gen_population_with(&spec, Exec::Sequential).unwrap();
        let b = gen_population_with(&spec, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn scan_records_clean_and_prevalence() {
        let recs = gen_scan_records(500, 0.5, 0.0, 1).unwrap();
        for r in &recs {
            match r.truth().unwrap() {
                Diagnosis::NC => assert!(r.cancer_pct() <= 0.5),
                _ => assert!(r.cancer_pct() >= 7.0),
            }
        }
        let none = gen_scan_records(200, 0.0, 0.3, 2).unwrap();
        assert!(none.iter().all(|r| r.truth() == Some(Diagnosis::NC)));
        assert!(gen_scan_records(10, 1.5, 0.0, 0).is_err());
    }

    #[test]
    fn empty_map_binarizes_to_false() {
        let spec = MapSpec { height: 24, width: 30, blobs: 0, salt: 0.0, magnification: Magnification::X20, seed: 5 };
        let map = gen_probability_map(&spec).unwrap();
        let bin = binarize(&merge_classes(&map, &ClassScheme::setting(1).unwrap()).unwrap()).unwrap();
        assert_eq!(bin.count_true(), 0);
        assert_eq!(gen_probability_map(&spec).unwrap(), map);
    }

    #[test]
    fn blobs_produce_cancer_cells() {
        let spec = MapSpec { height: 40, width: 40, blobs: 3, salt: 0.0, magnification: Magnification::X10, seed: 5 };
        let map = gen_probability_map(&spec).unwrap();
        let bin = binarize(&merge_classes(&map, &ClassScheme::setting(2).unwrap()).unwrap()).unwrap();
        assert!(bin.count_true() > 10);
    }
}
