//! Combining probability maps across models and magnifications, and spatial
//! clean-up of binary cancer maps.

use crate::domain::{BinaryMap, ProbabilityMap};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Block-mean pooling by `factor` (2, 4 or 8).
///
/// Each output cell is the mean of the valid in-bounds cells of its
/// `factor × factor` block, renormalised to sum to one. Grids that do not divide
/// evenly are treated as padded with invalid cells. An output cell is valid
/// when at least one constituent is.
pub fn downscale(map: &ProbabilityMap, factor: usize) -> Result<ProbabilityMap> {
    downscale_with(map, factor, Exec::default())
}

pub fn downscale_with(map: &ProbabilityMap, factor: usize, exec: Exec) -> Result<ProbabilityMap> {
    if ![2, 4, 8].contains(&factor) {
        return Err(Error::Parameter(format!(
            "downscale factor must be 2, 4 or 8, got {factor}"
        )));
    }
    let magnification = map.magnification().downscaled(factor)?;
    let k = map.num_classes();
    let height = map.height().div_ceil(factor);
    let width = map.width().div_ceil(factor);

    let rows = exec.map_range(height, |r| {
        let mut values = vec![0.0; width * k];
        let mut valid = vec![false; width];
        for c in 0..width {
            let acc = &mut values[c * k..(c + 1) * k];
            let mut n = 0usize;
            for sr in r * factor..((r + 1) * factor).min(map.height()) {
                for sc in c * factor..((c + 1) * factor).min(map.width()) {
                    if map.is_valid(sr, sc) {
                        n += 1;
                        for (a, v) in acc.iter_mut().zip(map.cell(sr, sc)) {
                            *a += v;
                        }
                    }
                }
            }
            if n > 0 {
                let total: f64 = acc.iter().sum();
                if total > 0.0 {
                    acc.iter_mut().for_each(|a| *a = (*a / total).min(1.0));
                }
                valid[c] = true;
            }
        }
        (values, valid)
    });

    let mut values = Vec::with_capacity(height * width * k);
    let mut mask = Vec::with_capacity(height * width);
    for (v, m) in rows {
        values.extend(v);
        mask.extend(m);
    }
    let mask = map.mask().is_some().then_some(mask);
    Ok(ProbabilityMap::from_parts_unchecked(
        height,
        width,
        magnification,
        map.classes().to_vec(),
        values,
        mask,
    ))
}

/// Per-cell unweighted mean of maps sharing one layout.
///
/// A cell is averaged over the inputs where it is valid, and is valid in the
/// output when it is valid in at least one input. Per-channel values are
/// summed in sorted order, so the result does not depend on input order.
pub fn average_maps(maps: &[ProbabilityMap]) -> Result<ProbabilityMap> {
    average_maps_with(maps, Exec::default())
}

pub fn average_maps_with(maps: &[ProbabilityMap], exec: Exec) -> Result<ProbabilityMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Parameter("cannot average an empty list of maps".into()))?;
    if let Some(m) = maps.iter().find(|m| !m.same_layout(first)) {
        return Err(Error::Schema(format!(
            "map layouts differ: {}x{} @{}x {:?} vs {}x{} @{}x {:?}",
            first.height(),
            first.width(),
            first.magnification().value(),
            first.classes(),
            m.height(),
            m.width(),
            m.magnification().value(),
            m.classes()
        )));
    }
    let (height, width, k) = (first.height(), first.width(), first.num_classes());

    let rows = exec.map_range(height, |r| {
        let mut values = vec![0.0; width * k];
        let mut valid = vec![false; width];
        let mut column = Vec::with_capacity(maps.len());
        for c in 0..width {
            let idx = r * width + c;
            let live: Vec<&ProbabilityMap> = maps.iter().filter(|m| m.is_valid_index(idx)).collect();
            if live.is_empty() {
                continue;
            }
            valid[c] = true;
            for j in 0..k {
                column.clear();
                column.extend(live.iter().map(|m| m.cell_at(idx)[j]));
                column.sort_by(f64::total_cmp);
                let sum: f64 = column.iter().sum();
                values[c * k + j] = (sum / live.len() as f64).min(1.0);
            }
        }
        (values, valid)
    });

    let mut values = Vec::with_capacity(height * width * k);
    let mut mask = Vec::with_capacity(height * width);
    for (v, m) in rows {
        values.extend(v);
        mask.extend(m);
    }
    let mask = maps.iter().any(|m| m.mask().is_some()).then_some(mask);
    Ok(ProbabilityMap::from_parts_unchecked(
        height,
        width,
        first.magnification(),
        first.classes().to_vec(),
        values,
        mask,
    ))
}

/// Downscales every map to the coarsest magnification present, then averages.
pub fn ensemble_multiscale(maps: &[ProbabilityMap]) -> Result<ProbabilityMap> {
    ensemble_multiscale_with(maps, Exec::default())
}

pub fn ensemble_multiscale_with(maps: &[ProbabilityMap], exec: Exec) -> Result<ProbabilityMap> {
    let coarsest = maps
        .iter()
        .map(ProbabilityMap::magnification)
        .min()
        .ok_or_else(|| Error::Parameter("cannot ensemble an empty list of maps".into()))?;
    if let Some(m) = maps.iter().find(|m| m.classes() != maps[0].classes()) {
        return Err(Error::Schema(format!(
            "class lists differ: {:?} vs {:?}",
            maps[0].classes(),
            m.classes()
        )));
    }
    let rescaled = maps
        .iter()
        .map(|m| match m.magnification().ratio_to(coarsest)? {
            1 => Ok(m.clone()),
            f => downscale_with(m, f, exec),
        })
        .collect::<Result<Vec<_>>>()?;
    average_maps_with(&rescaled, exec)
}

/// Majority filter over a `k × k` window (k odd).
///
/// The window is clipped to the grid and to valid cells. A tie keeps the
/// cell's current value. Invalid cells stay `false`.
pub fn median_filter(bin: &BinaryMap, k: usize) -> Result<BinaryMap> {
    median_filter_with(bin, k, Exec::default())
}

pub fn median_filter_with(bin: &BinaryMap, k: usize, exec: Exec) -> Result<BinaryMap> {
    if k.is_multiple_of(2) {
        return Err(Error::Parameter(format!("median kernel size must be odd, got {k}")));
    }
    let (height, width) = (bin.height(), bin.width());
    let half = k / 2;
    let rows = exec.map_range(height, |r| {
        (0..width)
            .map(|c| {
                if !bin.is_valid(r, c) {
                    return false;
                }
                let (mut positive, mut total) = (0usize, 0usize);
                for nr in r.saturating_sub(half)..(r + half + 1).min(height) {
                    for nc in c.saturating_sub(half)..(c + half + 1).min(width) {
                        if bin.is_valid(nr, nc) {
                            total += 1;
                            positive += usize::from(bin.get(nr, nc));
                        }
                    }
                }
                match (2 * positive).cmp(&total) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => bin.get(r, c),
                }
            })
            .collect::<Vec<_>>()
    });
    BinaryMap::new(
        height,
        width,
        rows.into_iter().flatten().collect(),
        bin.mask().map(<[bool]>::to_vec),
    )
}
