//! Plain-text file formats.
//!
//! * Probability map: a JSON manifest
//!   `{"magnification", "height", "width", "classes", "values", "mask"}` where
//!   `values` (and the optional `mask`) are paths relative to the manifest. The
//!   value file has one line per cell in row-major order with `K`
//!   comma-separated probabilities; the mask file has one `0`/`1` per line.
//! * Scan records: CSV `scan_id,cancer_pct,diagnosis` (diagnosis may be blank).
//!   Decisions add a `decision` column.
//! * Rater table: CSV `wsi_no,<rater>...` with `C`/`NC`/`IHC` cells and an
//!   optional `cancer_pct` column.
//! * Population or sample: one probability per line.
//! * Threshold sweep: one matrix per file, first row `T_L\T_U,<T_U grid>`,
//!   then `<T_L>,<entries>` with `NA` for undefined entries.
//! * Agreement matrix: `rater,<names>` header then one row per rater.
//! * Overlaps: CSV `row,col,class,ratio`; labels: `magnification,row,col,label`
//!   with an empty label for unlabeled cells; binary map: `row,col,cancer,valid`.
//!
//! Floats are written in the shortest form that reads back to the same
//! `f64`, with `.` as decimal separator. Percentages get at least 4 decimals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnosis::{Diagnosis, SweepResult};
use crate::domain::{BinaryMap, Magnification, ProbabilityMap, ScanRecord, TissueClass};
use crate::error::{Error, Result};
use crate::labeling::{AnnotationOverlap, PatchLabelGrid};
use crate::metrics::{AgreementMatrix, RaterTable};

/// Shortest decimal form that parses back to `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Percentage with at least four decimals, more when needed to round-trip.
pub fn fmt_pct(v: f64) -> String {
    let fixed = format!("{v:.4}");
    if fixed.parse::<f64>().ok() == Some(v) {
        fixed
    } else {
        format!("{v}")
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: impl Write) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path, headers: bool) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn write_row<W: Write>(path: &Path, w: &mut csv::Writer<W>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| csv_error(path, e))
}

fn finish_csv<W: Write>(path: &Path, mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// All data records with their 1-based line numbers.
fn records(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    Ok(reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn column(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::parse(path, 1, format!("missing column {name:?}")))
}

fn field<'a>(path: &Path, line: usize, rec: &'a csv::StringRecord, i: usize) -> Result<&'a str> {
    rec.get(i)
        .ok_or_else(|| Error::parse(path, line, format!("expected at least {} fields, got {}", i + 1, rec.len())))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} {s:?}")))
}

fn with_line<T>(path: &Path, line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ (Error::Parse { .. } | Error::Io { .. } | Error::Json { .. }) => e,
        e => Error::parse(path, line, e.to_string()),
    })
}

// ---------------------------------------------------------------- maps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapManifest {
    pub magnification: Magnification,
    pub height: usize,
    pub width: usize,
    pub classes: Vec<String>,
    /// Value file, relative to the manifest.
    pub values: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
}

fn sibling(manifest: &Path, rel: &Path) -> PathBuf {
    manifest.parent().map_or_else(|| rel.to_path_buf(), |d| d.join(rel))
}

pub fn read_map(manifest_path: &Path) -> Result<ProbabilityMap> {
    let manifest: MapManifest = serde_json::from_reader(BufReader::new(open(manifest_path)?)).map_err(|e| {
        Error::Json {
            path: manifest_path.to_path_buf(),
            source: e,
        }
    })?;
    let cells = manifest.height * manifest.width;
    let k = manifest.classes.len();

    let values_path = sibling(manifest_path, &manifest.values);
    let mut reader = csv_reader(&values_path, false)?;
    let rows = records(&values_path, &mut reader)?;
    if rows.len() != cells {
        return Err(Error::Shape(format!(
            "{}: manifest declares {}x{} = {cells} cells, value file has {} rows",
            values_path.display(),
            manifest.height,
            manifest.width,
            rows.len()
        )));
    }
    let mut values = Vec::with_capacity(cells * k);
    for (line, rec) in &rows {
        if rec.len() != k {
            return Err(Error::parse(&values_path, *line, format!("expected {k} probabilities, got {}", rec.len())));
        }
        for f in rec {
            values.push(parse_num::<f64>(&values_path, *line, f, "probability")?);
        }
    }

    let mask = match &manifest.mask {
        None => None,
        Some(rel) => {
            let mask_path = sibling(manifest_path, rel);
            let m = read_flags(&mask_path)?;
            if m.len() != cells {
                return Err(Error::Shape(format!(
                    "{}: mask has {} rows, manifest declares {cells} cells",
                    mask_path.display(),
                    m.len()
                )));
            }
            Some(m)
        }
    };
    ProbabilityMap::new(manifest.height, manifest.width, manifest.magnification, manifest.classes, values, mask)
}

fn read_flags(path: &Path) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match line.trim() {
            "" => continue,
            "1" | "true" => out.push(true),
            "0" | "false" => out.push(false),
            other => return Err(Error::parse(path, i + 1, format!("expected 0 or 1, got {other:?}"))),
        }
    }
    Ok(out)
}

/// Writes the manifest and its `<stem>.values.csv` (and `<stem>.mask.csv`) siblings.
pub fn write_map(manifest_path: &Path, map: &ProbabilityMap) -> Result<()> {
    let stem = manifest_path
        .file_stem()
        .map_or_else(|| "map".to_string(), |s| s.to_string_lossy().into_owned());
    let values_rel = PathBuf::from(format!("{stem}.values.csv"));
    let mask_rel = map.mask().map(|_| PathBuf::from(format!("{stem}.mask.csv")));

    let values_path = sibling(manifest_path, &values_rel);
    let mut w = create(&values_path)?;
    let k = map.num_classes();
    for idx in 0..map.height() * map.width() {
        let line: Vec<String> = map.values()[idx * k..(idx + 1) * k].iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(&values_path, e))?;
    }
    finish(&values_path, w)?;

    if let (Some(mask), Some(rel)) = (map.mask(), &mask_rel) {
        let mask_path = sibling(manifest_path, rel);
        let mut w = create(&mask_path)?;
        for m in mask {
            writeln!(w, "{}", u8::from(*m)).map_err(|e| Error::io(&mask_path, e))?;
        }
        finish(&mask_path, w)?;
    }

    let manifest = MapManifest {
        magnification: map.magnification(),
        height: map.height(),
        width: map.width(),
        classes: map.classes().to_vec(),
        values: values_rel,
        mask: mask_rel,
    };
    let mut w = create(manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Json {
        path: manifest_path.to_path_buf(),
        source: e,
    })?;
    writeln!(w).map_err(|e| Error::io(manifest_path, e))?;
    finish(manifest_path, w)
}

// ------------------------------------------------------- scan records

fn parse_truth(path: &Path, line: usize, s: &str) -> Result<Option<Diagnosis>> {
    if s.is_empty() {
        Ok(None)
    } else {
        with_line(path, line, s.parse().map(Some))
    }
}

pub fn read_scan_records(path: &Path) -> Result<Vec<ScanRecord>> {
    Ok(read_decisions_inner(path, false)?.into_iter().map(|(r, _)| r).collect())
}

/// Scan records with the `decision` column written by [`write_decisions`].
pub fn read_decisions(path: &Path) -> Result<Vec<(ScanRecord, Diagnosis)>> {
    read_decisions_inner(path, true)?
        .into_iter()
        .map(|(r, d)| Ok((r, d.expect("decision column required"))))
        .collect()
}

fn read_decisions_inner(path: &Path, with_decision: bool) -> Result<Vec<(ScanRecord, Option<Diagnosis>)>> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    let id = column(path, &header, "scan_id")?;
    let pct = column(path, &header, "cancer_pct")?;
    let truth = header.iter().position(|h| h.eq_ignore_ascii_case("diagnosis"));
    let decision = if with_decision { Some(column(path, &header, "decision")?) } else { None };
    records(path, &mut reader)?
        .into_iter()
        .map(|(line, rec)| {
            let p = parse_num::<f64>(path, line, field(path, line, &rec, pct)?, "cancer_pct")?;
            let t = match truth {
                Some(i) => parse_truth(path, line, rec.get(i).unwrap_or(""))?,
                None => None,
            };
            let r = with_line(path, line, ScanRecord::new(field(path, line, &rec, id)?, p, t))?;
            let d = match decision {
                Some(i) => Some(with_line(path, line, field(path, line, &rec, i)?.parse())?),
                None => None,
            };
            Ok((r, d))
        })
        .collect()
}

fn scan_row(r: &ScanRecord) -> Vec<String> {
    vec![
        r.scan_id.clone(),
        fmt_pct(r.cancer_pct()),
        r.truth().map_or(String::new(), |d| d.code().to_string()),
    ]
}

pub fn write_scan_records(path: &Path, records: &[ScanRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &["scan_id".into(), "cancer_pct".into(), "diagnosis".into()])?;
    for r in records {
        write_row(path, &mut w, &scan_row(r))?;
    }
    finish_csv(path, w)
}

pub fn write_decisions(path: &Path, records: &[ScanRecord], decisions: &[Diagnosis]) -> Result<()> {
    if records.len() != decisions.len() {
        return Err(Error::Shape(format!("{} decisions for {} records", decisions.len(), records.len())));
    }
    let mut w = csv_writer(path)?;
    write_row(
        path,
        &mut w,
        &["scan_id".into(), "cancer_pct".into(), "diagnosis".into(), "decision".into()],
    )?;
    for (r, d) in records.iter().zip(decisions) {
        let mut row = scan_row(r);
        row.push(d.code().to_string());
        write_row(path, &mut w, &row)?;
    }
    finish_csv(path, w)
}

// -------------------------------------------------------- rater table

pub const PCT_COLUMN: &str = "cancer_pct";

pub fn read_rater_table(path: &Path) -> Result<RaterTable> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    if header.len() < 2 {
        return Err(Error::parse(path, 1, "expected an id column and at least one rater column"));
    }
    let pct = header.iter().position(|h| h.eq_ignore_ascii_case(PCT_COLUMN));
    let rater_cols: Vec<usize> = (1..header.len()).filter(|&i| Some(i) != pct).collect();
    let (mut ids, mut responses, mut pcts) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in records(path, &mut reader)? {
        if rec.len() != header.len() {
            return Err(Error::parse(path, line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        ids.push(rec[0].to_string());
        let row = rater_cols
            .iter()
            .map(|&i| with_line(path, line, rec[i].parse::<Diagnosis>()))
            .collect::<Result<Vec<_>>>()?;
        responses.push(row);
        if let Some(i) = pct {
            pcts.push(parse_num::<f64>(path, line, &rec[i], "cancer_pct")?);
        }
    }
    let raters = rater_cols.iter().map(|&i| header[i].clone()).collect();
    RaterTable::new(ids, raters, responses, pct.map(|_| pcts))
}

pub fn write_rater_table(path: &Path, table: &RaterTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["wsi_no".to_string()];
    header.extend(table.raters.iter().cloned());
    if table.cancer_pct.is_some() {
        header.push(PCT_COLUMN.into());
    }
    write_row(path, &mut w, &header)?;
    for (i, row) in table.responses.iter().enumerate() {
        let mut out = vec![table.wsi_ids[i].clone()];
        out.extend(row.iter().map(|d| d.code().to_string()));
        if let Some(p) = &table.cancer_pct {
            out.push(fmt_pct(p[i]));
        }
        write_row(path, &mut w, &out)?;
    }
    finish_csv(path, w)
}

// ------------------------------------------------ populations, samples

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = parse_num(path, i + 1, t, "value")?;
        if !v.is_finite() {
            return Err(Error::parse(path, i + 1, format!("value {t:?} is not finite")));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    for v in values {
        writeln!(w, "{}", fmt_f64(*v)).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

// ------------------------------------------------------------ matrices

const NA: &str = "NA";

fn write_matrix(path: &Path, corner: &str, cols: &[String], rows: &[(String, Vec<Option<f64>>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![corner.to_string()];
    header.extend(cols.iter().cloned());
    write_row(path, &mut w, &header)?;
    for (name, vals) in rows {
        let mut row = vec![name.clone()];
        row.extend(vals.iter().map(|v| v.map_or(NA.to_string(), fmt_f64)));
        write_row(path, &mut w, &row)?;
    }
    finish_csv(path, w)
}

type Matrix = (Vec<String>, Vec<(String, Vec<Option<f64>>)>);

fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    let cols = header[1..].to_vec();
    let mut rows = Vec::new();
    for (line, rec) in records(path, &mut reader)? {
        if rec.len() != header.len() {
            return Err(Error::parse(path, line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let vals = rec
            .iter()
            .skip(1)
            .map(|f| if f == NA { Ok(None) } else { parse_num(path, line, f, "entry").map(Some) })
            .collect::<Result<Vec<_>>>()?;
        rows.push((rec[0].to_string(), vals));
    }
    Ok((cols, rows))
}

pub fn write_sweep(acc_path: &Path, cov_path: &Path, sweep: &SweepResult) -> Result<()> {
    let cols: Vec<String> = sweep.upper.iter().map(|v| fmt_f64(*v)).collect();
    for (path, m) in [(acc_path, &sweep.accuracy), (cov_path, &sweep.coverage)] {
        let rows: Vec<_> = sweep.lower.iter().zip(m).map(|(tl, r)| (fmt_f64(*tl), r.clone())).collect();
        write_matrix(path, "T_L\\T_U", &cols, &rows)?;
    }
    Ok(())
}

pub fn read_sweep(acc_path: &Path, cov_path: &Path) -> Result<SweepResult> {
    let grid = |path: &Path, names: &[String]| -> Result<Vec<f64>> {
        names.iter().map(|n| parse_num(path, 1, n, "grid value")).collect()
    };
    let (acc_cols, acc_rows) = read_matrix(acc_path)?;
    let (cov_cols, cov_rows) = read_matrix(cov_path)?;
    if acc_cols != cov_cols || acc_rows.len() != cov_rows.len() {
        return Err(Error::Shape("accuracy and coverage matrices have different grids".into()));
    }
    let row_names: Vec<String> = acc_rows.iter().map(|r| r.0.clone()).collect();
    Ok(SweepResult {
        lower: grid(acc_path, &row_names)?,
        upper: grid(acc_path, &acc_cols)?,
        accuracy: acc_rows.into_iter().map(|r| r.1).collect(),
        coverage: cov_rows.into_iter().map(|r| r.1).collect(),
    })
}

pub fn write_agreement(path: &Path, m: &AgreementMatrix) -> Result<()> {
    let rows: Vec<_> = m
        .names
        .iter()
        .zip(&m.values)
        .map(|(n, r)| (n.clone(), r.iter().map(|v| Some(*v)).collect()))
        .collect();
    write_matrix(path, "rater", &m.names, &rows)
}

pub fn read_agreement(path: &Path) -> Result<AgreementMatrix> {
    let (names, rows) = read_matrix(path)?;
    let values = rows
        .iter()
        .map(|(_, r)| r.iter().map(|v| v.ok_or_else(|| Error::parse(path, 0, "NA in agreement matrix"))).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    if values.len() != names.len() {
        return Err(Error::Shape("agreement matrix is not square".into()));
    }
    Ok(AgreementMatrix { names, values })
}

// ---------------------------------------------------- labels, overlaps

/// Per-cell overlap lists of a 40× grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGrid {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<Vec<AnnotationOverlap>>,
}

/// Reads `row,col,class,ratio` rows. The grid extent is the largest index
/// seen plus one unless `shape` gives it explicitly.
pub fn read_overlaps(path: &Path, shape: Option<(usize, usize)>) -> Result<OverlapGrid> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    let idx: Vec<usize> = ["row", "col", "class", "ratio"]
        .iter()
        .map(|n| column(path, &header, n))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (line, rec) in records(path, &mut reader)? {
        let r: usize = parse_num(path, line, field(path, line, &rec, idx[0])?, "row")?;
        let c: usize = parse_num(path, line, field(path, line, &rec, idx[1])?, "col")?;
        let class: TissueClass = with_line(path, line, field(path, line, &rec, idx[2])?.parse())?;
        let ratio: f64 = parse_num(path, line, field(path, line, &rec, idx[3])?, "ratio")?;
        entries.push((line, r, c, with_line(path, line, AnnotationOverlap::new(class, ratio))?));
    }
    let (height, width) = shape.unwrap_or_else(|| {
        entries
            .iter()
            .fold((0, 0), |(h, w), (_, r, c, _)| (h.max(r + 1), w.max(c + 1)))
    });
    let mut cells = vec![Vec::new(); height * width];
    for (line, r, c, o) in entries {
        if r >= height || c >= width {
            return Err(Error::parse(path, line, format!("cell ({r}, {c}) outside {height}x{width} grid")));
        }
        cells[r * width + c].push(o);
    }
    Ok(OverlapGrid { height, width, cells })
}

pub fn write_overlaps(path: &Path, grid: &OverlapGrid) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &["row".into(), "col".into(), "class".into(), "ratio".into()])?;
    for (i, list) in grid.cells.iter().enumerate() {
        for o in list {
            let row = [
                (i / grid.width).to_string(),
                (i % grid.width).to_string(),
                o.class.code().to_string(),
                fmt_f64(o.ratio()),
            ];
            write_row(path, &mut w, &row)?;
        }
    }
    finish_csv(path, w)
}

pub fn write_labels(path: &Path, grids: &[PatchLabelGrid]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &["magnification".into(), "row".into(), "col".into(), "label".into()])?;
    for g in grids {
        for r in 0..g.height() {
            for c in 0..g.width() {
                let row = [
                    g.magnification().value().to_string(),
                    r.to_string(),
                    c.to_string(),
                    g.get(r, c).map_or(String::new(), |l| l.code().to_string()),
                ];
                write_row(path, &mut w, &row)?;
            }
        }
    }
    finish_csv(path, w)
}

/// Reads label grids back, one per magnification, in order of first appearance.
pub fn read_labels(path: &Path) -> Result<Vec<PatchLabelGrid>> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    let idx: Vec<usize> = ["magnification", "row", "col", "label"]
        .iter()
        .map(|n| column(path, &header, n))
        .collect::<Result<_>>()?;
    let mut groups: Vec<(Magnification, Vec<(usize, usize, Option<TissueClass>)>)> = Vec::new();
    for (line, rec) in records(path, &mut reader)? {
        let m: u32 = parse_num(path, line, field(path, line, &rec, idx[0])?, "magnification")?;
        let m = with_line(path, line, Magnification::from_value(m))?;
        let r: usize = parse_num(path, line, field(path, line, &rec, idx[1])?, "row")?;
        let c: usize = parse_num(path, line, field(path, line, &rec, idx[2])?, "col")?;
        let label = match rec.get(idx[3]).unwrap_or("") {
            "" => None,
            s => Some(with_line(path, line, s.parse())?),
        };
        match groups.iter_mut().find(|g| g.0 == m) {
            Some(g) => g.1.push((r, c, label)),
            None => groups.push((m, vec![(r, c, label)])),
        }
    }
    groups
        .into_iter()
        .map(|(m, cells)| {
            let h = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
            let w = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
            let mut grid = vec![None; h * w];
            for (r, c, l) in cells {
                grid[r * w + c] = l;
            }
            PatchLabelGrid::new(m, h, w, grid)
        })
        .collect()
}

pub fn write_binary_map(path: &Path, map: &BinaryMap) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &["row".into(), "col".into(), "cancer".into(), "valid".into()])?;
    for r in 0..map.height() {
        for c in 0..map.width() {
            let row = [
                r.to_string(),
                c.to_string(),
                u8::from(map.get(r, c)).to_string(),
                u8::from(map.is_valid(r, c)).to_string(),
            ];
            write_row(path, &mut w, &row)?;
        }
    }
    finish_csv(path, w)
}

pub fn read_binary_map(path: &Path) -> Result<BinaryMap> {
    let mut reader = csv_reader(path, true)?;
    let header = headers(path, &mut reader)?;
    let idx: Vec<usize> = ["row", "col", "cancer", "valid"]
        .iter()
        .map(|n| column(path, &header, n))
        .collect::<Result<_>>()?;
    let flag = |line: usize, s: &str| match s {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(Error::parse(path, line, format!("expected 0 or 1, got {s:?}"))),
    };
    let mut cells = Vec::new();
    for (line, rec) in records(path, &mut reader)? {
        let r: usize = parse_num(path, line, field(path, line, &rec, idx[0])?, "row")?;
        let c: usize = parse_num(path, line, field(path, line, &rec, idx[1])?, "col")?;
        cells.push((r, c, flag(line, field(path, line, &rec, idx[2])?)?, flag(line, field(path, line, &rec, idx[3])?)?));
    }
    let h = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let w = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let (mut bits, mut mask) = (vec![false; h * w], vec![true; h * w]);
    for (r, c, b, v) in cells {
        bits[r * w + c] = b;
        mask[r * w + c] = v;
    }
    let mask = if mask.iter().all(|v| *v) { None } else { Some(mask) };
    BinaryMap::new(h, w, bits, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pct_formatting() {
        assert_eq!(fmt_pct(13.35), "13.3500");
        assert_eq!(fmt_pct(0.0), "0.0000");
        assert_eq!(fmt_pct(100.0), "100.0000");
        let v = 1.0 / 3.0;
        assert_eq!(fmt_pct(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn f64_formatting_round_trips() {
        for v in [0.1, 1e-17, 0.123_456_789_012_345_68, 1.0, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
