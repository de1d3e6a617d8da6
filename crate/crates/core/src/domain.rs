//! Tissue taxonomy, class-group schemes, per-patch probability maps and the
//! cancer-tissue fraction derived from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnosis::Diagnosis;
use crate::error::{Error, Result};

/// Tolerance on the per-cell probability sum of a valid cell.
pub const PROB_SUM_TOL: f64 = 1e-6;

/// The nine patch classes, declared in canonical order.
///
/// The derived `Ord` is the severity order used for label propagation:
/// `BG < T < N < A < R1 < .. < R5`. Only the ordering of the Gleason grades
/// above the non-cancerous classes is clinically meaningful; the relative order
/// of `BG`, `T`, `N` and `A` is a fixed convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TissueClass {
    /// Scan background.
    BG,
    /// Tissue background.
    T,
    /// Normal tissue.
    N,
    /// Acquisition artifact.
    A,
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl TissueClass {
    pub const ALL: [TissueClass; 9] = [
        TissueClass::BG,
        TissueClass::T,
        TissueClass::N,
        TissueClass::A,
        TissueClass::R1,
        TissueClass::R2,
        TissueClass::R3,
        TissueClass::R4,
        TissueClass::R5,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TissueClass::BG => "BG",
            TissueClass::T => "T",
            TissueClass::N => "N",
            TissueClass::A => "A",
            TissueClass::R1 => "R1",
            TissueClass::R2 => "R2",
            TissueClass::R3 => "R3",
            TissueClass::R4 => "R4",
            TissueClass::R5 => "R5",
        }
    }

    /// Position in the canonical order (0 for `BG`, 8 for `R5`).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_gleason(self) -> bool {
        self >= TissueClass::R1
    }
}

impl fmt::Display for TissueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for TissueClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TissueClass::ALL
            .iter()
            .copied()
            .find(|c| c.code() == s)
            .ok_or_else(|| Error::Schema(format!("unknown tissue class {s:?}")))
    }
}

/// Canonical class names in order, as they appear in map files.
pub fn canonical_class_names() -> Vec<String> {
    TissueClass::ALL.iter().map(|c| c.code().to_string()).collect()
}

/// Groupings of the nine classes into coarser class groups.
const SETTINGS: [[usize; 9]; 5] = [
    [1, 1, 1, 1, 2, 2, 2, 2, 2],
    [1, 1, 1, 1, 1, 1, 2, 2, 2],
    [1, 1, 1, 1, 1, 1, 2, 3, 4],
    [1, 1, 1, 1, 2, 3, 4, 5, 6],
    [1, 2, 3, 4, 5, 6, 7, 8, 9],
];

/// A surjective map from the nine tissue classes onto `group_count` groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassScheme {
    setting: u8,
    groups: [usize; 9],
    group_count: usize,
}

impl ClassScheme {
    /// One of the five predefined settings, `1..=5` (S1 to S5).
    pub fn setting(id: u8) -> Result<Self> {
        if !(1..=5).contains(&id) {
            return Err(Error::Parameter(format!("class setting must be 1..=5, got {id}")));
        }
        let groups = SETTINGS[usize::from(id - 1)];
        let group_count = *groups.iter().max().expect("nine entries");
        Ok(ClassScheme {
            setting: id,
            groups,
            group_count,
        })
    }

    pub fn id(&self) -> u8 {
        self.setting
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// 1-based group of a class.
    pub fn group_of(&self, class: TissueClass) -> usize {
        self.groups[class.index()]
    }

    pub fn members(&self, group: usize) -> Vec<TissueClass> {
        TissueClass::ALL
            .iter()
            .copied()
            .filter(|c| self.group_of(*c) == group)
            .collect()
    }

    /// Group names formed by joining member codes, e.g. `BG+T+N+A`.
    pub fn group_names(&self) -> Vec<String> {
        (1..=self.group_count)
            .map(|g| {
                self.members(g)
                    .iter()
                    .map(|c| c.code())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect()
    }
}

impl FromStr for ClassScheme {
    type Err = Error;

    /// Accepts `S1`..`S5` (case-insensitive) or a bare digit.
    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim_start_matches(['S', 's']);
        let id: u8 = digits
            .parse()
            .map_err(|_| Error::Parameter(format!("unknown class setting {s:?}")))?;
        ClassScheme::setting(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Magnification {
    X5,
    X10,
    X20,
    X40,
}

impl Magnification {
    pub fn value(self) -> u32 {
        match self {
            Magnification::X5 => 5,
            Magnification::X10 => 10,
            Magnification::X20 => 20,
            Magnification::X40 => 40,
        }
    }

    pub fn from_value(v: u32) -> Result<Self> {
        match v {
            5 => Ok(Magnification::X5),
            10 => Ok(Magnification::X10),
            20 => Ok(Magnification::X20),
            40 => Ok(Magnification::X40),
            _ => Err(Error::Parameter(format!(
                "magnification must be one of 40, 20, 10, 5; got {v}"
            ))),
        }
    }

    /// The magnification reached after shrinking the grid by `factor`.
    pub fn downscaled(self, factor: usize) -> Result<Self> {
        let v = self.value() as usize;
        if factor == 0 || !v.is_multiple_of(factor) {
            return Err(Error::Parameter(format!("cannot downscale {v}x by {factor}")));
        }
        Magnification::from_value((v / factor) as u32)
    }

    /// Linear resolution ratio `self / coarser`.
    pub fn ratio_to(self, coarser: Magnification) -> Result<usize> {
        if coarser > self {
            return Err(Error::Schema(format!(
                "{}x is finer than {}x",
                coarser.value(),
                self.value()
            )));
        }
        Ok((self.value() / coarser.value()) as usize)
    }
}

impl TryFrom<u32> for Magnification {
    type Error = Error;

    fn try_from(v: u32) -> Result<Self> {
        Magnification::from_value(v)
    }
}

impl From<Magnification> for u32 {
    fn from(m: Magnification) -> u32 {
        m.value()
    }
}

/// A height × width grid of per-patch class-probability vectors.
///
/// Values are stored row-major, `K` consecutive probabilities per cell. The
/// optional mask marks valid tissue cells (`true`); a missing mask means every
/// cell is valid. Invalid cells may hold arbitrary probabilities in `[0, 1]`
/// and are ignored by every aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    magnification: Magnification,
    classes: Vec<String>,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl ProbabilityMap {
    pub fn new(
        height: usize,
        width: usize,
        magnification: Magnification,
        classes: Vec<String>,
        values: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let k = classes.len();
        if k == 0 {
            return Err(Error::Schema("probability map needs at least one class".into()));
        }
        let cells = height * width;
        if values.len() != cells * k {
            return Err(Error::Shape(format!(
                "expected {cells} cells x {k} classes = {} values, got {}",
                cells * k,
                values.len()
            )));
        }
        if let Some(m) = &mask {
            if m.len() != cells {
                return Err(Error::Shape(format!(
                    "mask has {} cells, map has {cells}",
                    m.len()
                )));
            }
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Schema(format!(
                "probability {} at cell {} is outside [0, 1]",
                values[i],
                i / k
            )));
        }
        let map = ProbabilityMap {
            height,
            width,
            magnification,
            classes,
            values,
            mask,
        };
        for idx in 0..cells {
            if map.is_valid_index(idx) {
                let sum: f64 = map.cell_at(idx).iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::Schema(format!(
                        "cell {idx} probabilities sum to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(map)
    }

    /// A map whose every cell holds the same vector.
    pub fn constant(
        height: usize,
        width: usize,
        magnification: Magnification,
        classes: Vec<String>,
        cell: &[f64],
    ) -> Result<Self> {
        let values = cell
            .iter()
            .copied()
            .cycle()
            .take(height * width * cell.len())
            .collect();
        ProbabilityMap::new(height, width, magnification, classes, values, None)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn magnification(&self) -> Magnification {
        self.magnification
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        self.cell_at(row * self.width + col)
    }

    pub fn cell_at(&self, idx: usize) -> &[f64] {
        let k = self.classes.len();
        &self.values[idx * k..(idx + 1) * k]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.is_valid_index(row * self.width + col)
    }

    pub fn is_valid_index(&self, idx: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[idx])
    }

    pub fn valid_count(&self) -> usize {
        match &self.mask {
            Some(m) => m.iter().filter(|v| **v).count(),
            None => self.height * self.width,
        }
    }

    /// True when class lists, grid shape and magnification all agree.
    pub fn same_layout(&self, other: &ProbabilityMap) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.magnification == other.magnification
            && self.classes == other.classes
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        magnification: Magnification,
        classes: Vec<String>,
        values: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Self {
        debug_assert_eq!(values.len(), height * width * classes.len());
        ProbabilityMap {
            height,
            width,
            magnification,
            classes,
            values,
            mask,
        }
    }
}

/// Per-cell cancerous / non-cancerous decision. Invalid cells are always `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    height: usize,
    width: usize,
    cells: Vec<bool>,
    mask: Option<Vec<bool>>,
}

impl BinaryMap {
    pub fn new(
        height: usize,
        width: usize,
        cells: Vec<bool>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = height * width;
        if cells.len() != n {
            return Err(Error::Shape(format!(
                "binary map of {height}x{width} needs {n} cells, got {}",
                cells.len()
            )));
        }
        if let Some(m) = &mask {
            if m.len() != n {
                return Err(Error::Shape(format!("mask has {} cells, map has {n}", m.len())));
            }
        }
        let cells = match &mask {
            Some(m) => cells.iter().zip(m).map(|(c, v)| *c && *v).collect(),
            None => cells,
        };
        Ok(BinaryMap {
            height,
            width,
            cells,
            mask,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[row * self.width + col])
    }

    pub fn count_true(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Cancer fraction against the map's own validity mask.
    pub fn cancer_fraction(&self) -> Result<f64> {
        cancer_fraction(self, self.mask())
    }
}

/// One scan summarised by the percentage of valid tissue classified as cancerous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub scan_id: String,
    cancer_pct: f64,
    truth: Option<Diagnosis>,
}

impl ScanRecord {
    pub fn new(scan_id: impl Into<String>, cancer_pct: f64, truth: Option<Diagnosis>) -> Result<Self> {
        if !cancer_pct.is_finite() || !(0.0..=100.0).contains(&cancer_pct) {
            return Err(Error::Parameter(format!(
                "cancer percentage must be in [0, 100], got {cancer_pct}"
            )));
        }
        if truth == Some(Diagnosis::IHC) {
            return Err(Error::Parameter(
                "ground truth must be C or NC, not IHC".into(),
            ));
        }
        Ok(ScanRecord {
            scan_id: scan_id.into(),
            cancer_pct,
            truth,
        })
    }

    pub fn cancer_pct(&self) -> f64 {
        self.cancer_pct
    }

    pub fn truth(&self) -> Option<Diagnosis> {
        self.truth
    }
}

/// Sums member-class probabilities into the groups of `scheme`.
///
/// The input must carry the nine canonical classes in canonical order.
pub fn merge_classes(map: &ProbabilityMap, scheme: &ClassScheme) -> Result<ProbabilityMap> {
    if map.classes() != canonical_class_names().as_slice() {
        return Err(Error::Schema(format!(
            "class merging needs the canonical classes {:?}, got {:?}",
            canonical_class_names(),
            map.classes()
        )));
    }
    let groups = scheme.group_count();
    let cells = map.height() * map.width();
    let mut values = vec![0.0; cells * groups];
    for idx in 0..cells {
        let src = map.cell_at(idx);
        let dst = &mut values[idx * groups..(idx + 1) * groups];
        for class in TissueClass::ALL {
            dst[scheme.group_of(class) - 1] += src[class.index()];
        }
    }
    // Rounding can push a sum a few ulps above 1.
    for v in &mut values {
        *v = v.min(1.0);
    }
    Ok(ProbabilityMap::from_parts_unchecked(
        map.height(),
        map.width(),
        map.magnification(),
        scheme.group_names(),
        values,
        map.mask().map(<[bool]>::to_vec),
    ))
}

/// Thresholds a two-group map at 0.5 on the second (cancerous) group.
///
/// A probability of exactly 0.5 counts as cancerous. Invalid cells are `false`.
pub fn binarize(map: &ProbabilityMap) -> Result<BinaryMap> {
    if map.num_classes() != 2 {
        return Err(Error::Schema(format!(
            "binarization needs a two-group map, got {} classes",
            map.num_classes()
        )));
    }
    let cells = (0..map.height() * map.width())
        .map(|idx| map.is_valid_index(idx) && map.cell_at(idx)[1] >= 0.5)
        .collect();
    BinaryMap::new(
        map.height(),
        map.width(),
        cells,
        map.mask().map(<[bool]>::to_vec),
    )
}

/// Percentage of valid cells that are cancerous.
pub fn cancer_fraction(bin: &BinaryMap, mask: Option<&[bool]>) -> Result<f64> {
    let n = bin.height() * bin.width();
    if let Some(m) = mask {
        if m.len() != n {
            return Err(Error::Shape(format!(
                "mask has {} cells, binary map has {n}",
                m.len()
            )));
        }
    }
    let valid = |i: usize| mask.is_none_or(|m| m[i]);
    let (mut tissue, mut positive) = (0usize, 0usize);
    for (i, c) in bin.cells().iter().enumerate() {
        if valid(i) {
            tissue += 1;
            if *c {
                positive += 1;
            }
        }
    }
    if tissue == 0 {
        return Err(Error::NoTissue);
    }
    Ok(100.0 * positive as f64 / tissue as f64)
}
