//! Patch labels from region annotations.
//!
//! At 40× a patch takes a class only when exactly one class covers at least
//! three quarters of it. A coarser patch covers a 2×2, 4×4 or 8×8 block of
//! 40× patches and takes the most severe label found in that block.

use crate::domain::{Magnification, TissueClass};
use crate::error::{Error, Result};

/// Minimum covered fraction for a class to claim a 40× patch.
pub const MIN_OVERLAP: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotationOverlap {
    pub class: TissueClass,
    ratio: f64,
}

impl AnnotationOverlap {
    pub fn new(class: TissueClass, ratio: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::Parameter(format!(
                "overlap ratio must be in [0, 1], got {ratio}"
            )));
        }
        Ok(AnnotationOverlap { class, ratio })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// Label of a 40× patch from the annotations overlapping it.
///
/// Entries of the same class are summed (clamped to 1) before the threshold
/// test, so two partial annotations of one class do not contradict each other.
/// Returns `None` when no class, or more than one class, reaches [`MIN_OVERLAP`].
pub fn assign_label_base(overlaps: &[AnnotationOverlap]) -> Option<TissueClass> {
    let mut per_class = [0.0f64; 9];
    for o in overlaps {
        per_class[o.class.index()] += o.ratio;
    }
    let mut qualifying = TissueClass::ALL
        .iter()
        .filter(|c| per_class[c.index()].min(1.0) >= MIN_OVERLAP);
    match (qualifying.next(), qualifying.next()) {
        (Some(c), None) => Some(*c),
        _ => None,
    }
}

/// Most severe label among the 40× constituents of a coarse patch.
///
/// Unlabeled constituents are ignored; an entirely unlabeled block stays
/// unlabeled.
pub fn assign_label_coarse(constituents: &[Option<TissueClass>]) -> Result<Option<TissueClass>> {
    if ![4, 16, 64].contains(&constituents.len()) {
        return Err(Error::Shape(format!(
            "a coarse patch has 4, 16 or 64 constituents, got {}",
            constituents.len()
        )));
    }
    Ok(constituents.iter().flatten().max().copied())
}

/// A grid of optional patch labels at one magnification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLabelGrid {
    magnification: Magnification,
    height: usize,
    width: usize,
    cells: Vec<Option<TissueClass>>,
}

impl PatchLabelGrid {
    pub fn new(
        magnification: Magnification,
        height: usize,
        width: usize,
        cells: Vec<Option<TissueClass>>,
    ) -> Result<Self> {
        if cells.len() != height * width {
            return Err(Error::Shape(format!(
                "label grid of {height}x{width} needs {} cells, got {}",
                height * width,
                cells.len()
            )));
        }
        Ok(PatchLabelGrid {
            magnification,
            height,
            width,
            cells,
        })
    }

    /// Labels every 40× cell from its overlap list (row-major).
    pub fn from_overlaps(height: usize, width: usize, overlaps: &[Vec<AnnotationOverlap>]) -> Result<Self> {
        let cells = overlaps.iter().map(|o| assign_label_base(o)).collect();
        PatchLabelGrid::new(Magnification::X40, height, width, cells)
    }

    pub fn magnification(&self) -> Magnification {
        self.magnification
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> &[Option<TissueClass>] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Option<TissueClass> {
        if row < self.height && col < self.width {
            self.cells[row * self.width + col]
        } else {
            None
        }
    }

    /// Coarse grid where each cell covers a `factor × factor` block. Edges that
    /// do not divide evenly are padded with unlabeled cells.
    fn coarsen(&self, factor: usize) -> Result<PatchLabelGrid> {
        let magnification = self.magnification.downscaled(factor)?;
        let height = self.height.div_ceil(factor);
        let width = self.width.div_ceil(factor);
        let mut block = Vec::with_capacity(factor * factor);
        let mut cells = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                block.clear();
                for dr in 0..factor {
                    for dc in 0..factor {
                        block.push(self.get(r * factor + dr, c * factor + dc));
                    }
                }
                cells.push(assign_label_coarse(&block)?);
            }
        }
        PatchLabelGrid::new(magnification, height, width, cells)
    }
}

/// Derives the 20×, 10× and 5× label grids from a 40× base grid.
pub fn build_pyramid(base: &PatchLabelGrid) -> Result<[PatchLabelGrid; 3]> {
    if base.magnification() != Magnification::X40 {
        return Err(Error::Schema(format!(
            "label pyramid starts from 40x, got {}x",
            base.magnification().value()
        )));
    }
    Ok([base.coarsen(2)?, base.coarsen(4)?, base.coarsen(8)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TissueClass::*;

    fn ov(c: TissueClass, r: f64) -> AnnotationOverlap {
        AnnotationOverlap::new(c, r).unwrap()
    }

    #[test]
    fn base_single_qualifying_class() {
        assert_eq!(assign_label_base(&[ov(R5, 0.80)]), Some(R5));
        assert_eq!(assign_label_base(&[ov(N, 0.75)]), Some(N));
    }

    #[test]
    fn base_no_or_conflicting_labels() {
        assert_eq!(assign_label_base(&[ov(R3, 0.5), ov(N, 0.5)]), None);
        assert_eq!(assign_label_base(&[ov(R4, 0.9), ov(N, 0.8)]), None);
        assert_eq!(assign_label_base(&[]), None);
        assert_eq!(assign_label_base(&[ov(T, 0.749)]), None);
    }

    #[test]
    fn base_same_class_entries_are_summed() {
        assert_eq!(assign_label_base(&[ov(R3, 0.5), ov(R3, 0.4)]), Some(R3));
        assert_eq!(assign_label_base(&[ov(R3, 0.6), ov(R3, 0.6), ov(N, 0.1)]), Some(R3));
    }

    #[test]
    fn overlap_ratio_validated() {
        assert!(AnnotationOverlap::new(N, 1.2).is_err());
        assert!(AnnotationOverlap::new(N, -0.1).is_err());
    }

    #[test]
    fn coarse_worked_example() {
        assert_eq!(
            assign_label_coarse(&[Some(N), Some(R3), Some(R3), Some(R4)]).unwrap(),
            Some(R4)
        );
        assert_eq!(assign_label_coarse(&[None; 4]).unwrap(), None);
        assert_eq!(assign_label_coarse(&[Some(T), Some(N), None, Some(A)]).unwrap(), Some(A));
        assert!(assign_label_coarse(&[None; 5]).is_err());
        assert!(assign_label_coarse(&[None; 16]).is_ok());
        assert!(assign_label_coarse(&[None; 64]).is_ok());
    }

    fn grid(h: usize, w: usize, f: impl Fn(usize, usize) -> Option<TissueClass>) -> PatchLabelGrid {
        let cells = (0..h * w).map(|i| f(i / w, i % w)).collect();
        PatchLabelGrid::new(Magnification::X40, h, w, cells).unwrap()
    }

    #[test]
    fn pyramid_shapes() {
        let [g20, g10, g5] = build_pyramid(&grid(16, 24, |_, _| Some(N))).unwrap();
        assert_eq!((g20.height(), g20.width(), g20.magnification()), (8, 12, Magnification::X20));
        assert_eq!((g10.height(), g10.width()), (4, 6));
        assert_eq!((g5.height(), g5.width(), g5.magnification()), (2, 3, Magnification::X5));
    }

    #[test]
    fn pyramid_pads_uneven_edges() {
        let [g20, _, g5] = build_pyramid(&grid(9, 3, |_, _| Some(R1))).unwrap();
        assert_eq!((g20.height(), g20.width()), (5, 2));
        assert_eq!((g5.height(), g5.width()), (2, 1));
        assert!(g5.cells().iter().all(|c| *c == Some(R1)));
    }

    #[test]
    fn pyramid_constant_grid() {
        let levels = build_pyramid(&grid(16, 16, |_, _| Some(R4))).unwrap();
        for g in &levels {
            assert!(g.cells().iter().all(|c| *c == Some(R4)));
        }
    }

    #[test]
    fn pyramid_propagates_single_severe_cell() {
        let levels = build_pyramid(&grid(16, 16, |r, c| if (r, c) == (5, 10) { Some(R5) } else { Some(N) })).unwrap();
        for (g, f) in levels.iter().zip([2, 4, 8]) {
            for r in 0..g.height() {
                for c in 0..g.width() {
                    let contains = r == 5 / f && c == 10 / f;
                    assert_eq!(g.get(r, c), Some(if contains { R5 } else { N }));
                }
            }
        }
    }

    #[test]
    fn pyramid_checkerboard() {
        let levels = build_pyramid(&grid(16, 16, |r, c| Some(if (r + c) % 2 == 0 { N } else { R3 }))).unwrap();
        for g in &levels {
            assert!(g.cells().iter().all(|c| *c == Some(R3)));
        }
    }

    #[test]
    fn pyramid_needs_40x() {
        let g = PatchLabelGrid::new(Magnification::X20, 2, 2, vec![None; 4]).unwrap();
        assert!(build_pyramid(&g).is_err());
    }

    fn class() -> impl Strategy<Value = Option<TissueClass>> {
        prop::option::of(prop::sample::select(TissueClass::ALL.to_vec()))
    }

    proptest! {
        #[test]
        fn base_permutation_invariant(entries in prop::collection::vec((0usize..9, 0.0f64..1.0), 0..6), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let list: Vec<_> = entries.iter().map(|(c, r)| ov(TissueClass::ALL[*c], *r)).collect();
            let mut shuffled = list.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(assign_label_base(&list), assign_label_base(&shuffled));
        }

        #[test]
        fn coarse_monotone(mut block in prop::collection::vec(class(), 4), i in 0usize..4, up in 0usize..9) {
            let before = assign_label_coarse(&block).unwrap();
            let raised = TissueClass::ALL[up];
            if block[i].is_none_or(|c| c <= raised) {
                block[i] = Some(raised);
                prop_assert!(assign_label_coarse(&block).unwrap() >= before);
            }
        }
    }
}
