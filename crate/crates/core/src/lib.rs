//! Decision layers for patch-based whole-slide image diagnosis.
//!
//! A scan is processed as a grid of patches. Upstream classifiers (not part of
//! this crate) produce per-patch class probabilities; this crate turns them
//! into diagnoses:
//!
//! * [`labeling`] derives training labels for every magnification from region
//!   annotations.
//! * [`ensemble`] rescales and averages probability maps from several models
//!   and magnifications, and median-filters binary cancer maps.
//! * [`domain`] merges the nine tissue classes into coarser groups and
//!   computes the cancerous fraction `p_c` of a scan.
//! * [`diagnosis`] maps `p_c` to C, NC or an abstaining IHC outcome with two
//!   thresholds, and sweeps the thresholds.
//! * [`stats`] compares a scan's patch probabilities with reference
//!   populations through repeated two-sample tests.
//! * [`metrics`] has accuracy, average accuracy and rank agreement between raters.
//! * [`synth`] generates seeded synthetic inputs and [`formats`] reads and
//!   writes the plain-text file formats.
//!
//! Loops over cells, iterations and grid points run on rayon when the
//! `parallel` feature is enabled (the default). Every such function has a
//! `*_with` variant taking an [`Exec`]; both strategies give bit-identical
//! results.

pub mod diagnosis;
pub mod domain;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod formats;
pub mod labeling;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod synth;

pub use diagnosis::{decide, evaluate, sweep, Diagnosis, Evaluation, SweepResult, ThresholdRule};
pub use domain::{
    binarize, cancer_fraction, merge_classes, BinaryMap, ClassScheme, Magnification, ProbabilityMap, ScanRecord,
    TissueClass,
};
pub use ensemble::{average_maps, downscale, ensemble_multiscale, median_filter};
pub use error::{Error, Result};
pub use exec::Exec;
pub use labeling::{assign_label_base, assign_label_coarse, build_pyramid, AnnotationOverlap, PatchLabelGrid};
pub use metrics::{accuracy, agreement_matrix, av_acc, confusion, spearman, AgreementMatrix, ConfusionMatrix, RaterTable};
pub use stats::{Population, Sample, StatParams, TestKind, TestOutcome};
