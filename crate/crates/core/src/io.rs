//! File formats: borehole and truth CSVs, parent sequence files, chain output
//! and simulation rasters.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every CSV
//! written here reads back bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fieldsim::{Cell, CrossSection, Geometry, LayerStack, SimGrid};
use crate::gauss::Smoothness;
use crate::likelihood::LayerParams;
use crate::mcmc::{Diagnostics, Param, PosteriorSample};
use crate::sequence::{
    AugmentedConfiguration, BoreholeObservation, Facies, ParentSequence, Point, Record,
};

/// Header of the borehole CSV.
pub const BOREHOLE_HEADER: [&str; 7] = [
    "borehole_id",
    "x_km",
    "y_km",
    "ground_level_m",
    "record_index",
    "facies",
    "thickness_m",
];

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, path: &Path, line: usize) -> Result<&'a str> {
    rec.get(i)
        .map(str::trim)
        .ok_or_else(|| parse_err(path, line, format!("missing column {}", i + 1)))
}

fn number(s: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what}: `{s}` is not finite")));
    }
    Ok(v)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str], path: &Path) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

/// Reads boreholes from the standard CSV. Rows of one borehole must agree on
/// location and ground level; records are ordered by `record_index`. A row
/// with empty `record_index`, `facies` and `thickness_m` declares a borehole
/// without records.
pub fn read_boreholes(path: &Path) -> Result<Vec<BoreholeObservation>> {
    let text = read_text(path)?;
    parse_boreholes(&text, path)
}

pub fn parse_boreholes(text: &str, path: &Path) -> Result<Vec<BoreholeObservation>> {
    struct Pending {
        id: String,
        loc: Point,
        ground: f64,
        line: usize,
        records: Vec<(i64, Record, usize)>,
    }
    let mut reader = csv_reader(text);
    check_header(&mut reader, &BOREHOLE_HEADER, path)?;
    let mut order: Vec<Pending> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = field(&row, 0, path, line)?.to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty borehole_id"));
        }
        let x = number(field(&row, 1, path, line)?, "x_km", path, line)?;
        let y = number(field(&row, 2, path, line)?, "y_km", path, line)?;
        let g = number(field(&row, 3, path, line)?, "ground_level_m", path, line)?;
        let k = *index.entry(id.clone()).or_insert_with(|| {
            order.push(Pending {
                id: id.clone(),
                loc: Point::new(x, y),
                ground: g,
                line,
                records: Vec::new(),
            });
            order.len() - 1
        });
        let b = &mut order[k];
        if b.loc != Point::new(x, y) || b.ground != g {
            return Err(parse_err(
                path,
                line,
                format!("borehole `{id}` location or ground level differs from line {}", b.line),
            ));
        }
        let ri = field(&row, 4, path, line)?;
        let facies = field(&row, 5, path, line)?;
        let th = field(&row, 6, path, line)?;
        if ri.is_empty() && facies.is_empty() && th.is_empty() {
            continue;
        }
        let ri: i64 = ri
            .parse()
            .map_err(|_| parse_err(path, line, format!("record_index: `{ri}` is not an integer")))?;
        if facies.is_empty() {
            return Err(parse_err(path, line, "empty facies code"));
        }
        let th = number(th, "thickness_m", path, line)?;
        b.records.push((ri, Record::new(facies, th), line));
    }
    if order.is_empty() {
        return Err(parse_err(path, 1, "no boreholes found"));
    }
    order
        .into_iter()
        .map(|mut b| {
            b.records.sort_by_key(|r| r.0);
            for w in b.records.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(parse_err(
                        path,
                        w[1].2,
                        format!("borehole `{}` repeats record_index {}", b.id, w[1].0),
                    ));
                }
            }
            let line = b.line;
            let records = b.records.into_iter().map(|r| r.1).collect();
            BoreholeObservation::new(b.id, b.loc, b.ground, records).map_err(|e| match e {
                Error::InvalidObservation(m) => parse_err(path, line, m),
                other => other,
            })
        })
        .collect()
}

pub fn format_boreholes(boreholes: &[BoreholeObservation]) -> String {
    let mut s = BOREHOLE_HEADER.join(",");
    s.push('\n');
    for b in boreholes {
        if b.records().is_empty() {
            let _ = writeln!(s, "{},{},{},{},,,", b.id, b.location.x, b.location.y, b.ground_level);
        }
        for (k, r) in b.records().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                b.id, b.location.x, b.location.y, b.ground_level, k, r.facies, r.thickness
            );
        }
    }
    s
}

pub fn write_boreholes(path: &Path, boreholes: &[BoreholeObservation]) -> Result<()> {
    write_text(path, &format_boreholes(boreholes))
}

/// Reads a parent sequence: one facies code per line, top-down, optionally
/// followed by a display colour. Blank lines and `#` comments are ignored.
pub fn read_parent(path: &Path) -> Result<ParentSequence> {
    let text = read_text(path)?;
    parse_parent(&text, path)
}

pub fn parse_parent(text: &str, path: &Path) -> Result<ParentSequence> {
    let mut layers = Vec::new();
    let mut colors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let code = parts.next().expect("non-empty line");
        let color = parts.next();
        if parts.next().is_some() {
            return Err(parse_err(path, i + 1, "expected `<facies> [colour]`"));
        }
        layers.push(Facies::from(code));
        if let Some(c) = color {
            colors.push((Facies::from(code), c.to_string(), i + 1));
        }
    }
    if layers.is_empty() {
        return Err(parse_err(path, 1, "parent sequence is empty"));
    }
    let mut parent = ParentSequence::new(layers)?;
    for (f, c, line) in colors {
        if let Some(prev) = parent.color(&f) {
            if prev != c {
                return Err(parse_err(path, line, format!("conflicting colour for facies {f}")));
            }
        }
        parent = parent.with_color(f, c);
    }
    Ok(parent)
}

pub fn format_parent(parent: &ParentSequence) -> String {
    let mut s = String::new();
    for f in parent.layers() {
        match parent.color(f) {
            Some(c) => {
                let _ = writeln!(s, "{f} {c}");
            }
            None => {
                let _ = writeln!(s, "{f}");
            }
        }
    }
    s
}

pub fn write_parent(path: &Path, parent: &ParentSequence) -> Result<()> {
    write_text(path, &format_parent(parent))
}

/// Header of the truth sidecar written next to synthetic boreholes.
pub const TRUTH_HEADER: [&str; 4] = ["borehole_id", "layer_index", "facies", "thickness_m"];

pub fn write_truth(path: &Path, parent: &ParentSequence, truth: &[AugmentedConfiguration]) -> Result<()> {
    let mut s = TRUTH_HEADER.join(",");
    s.push('\n');
    for c in truth {
        for (j, z) in c.thickness().iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", c.borehole_id, j + 1, parent.facies(j), z);
        }
    }
    write_text(path, &s)
}

pub fn read_truth(path: &Path, parent: &ParentSequence) -> Result<Vec<AugmentedConfiguration>> {
    let text = read_text(path)?;
    let mut reader = csv_reader(&text);
    check_header(&mut reader, &TRUTH_HEADER, path)?;
    let mut order: Vec<(String, Vec<f64>)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = field(&row, 0, path, line)?.to_string();
        let j: usize = field(&row, 1, path, line)?
            .parse()
            .map_err(|_| parse_err(path, line, "layer_index is not an integer"))?;
        if j == 0 || j > parent.len() {
            return Err(parse_err(path, line, format!("layer_index {j} out of range")));
        }
        if field(&row, 2, path, line)? != parent.facies(j - 1).as_str() {
            return Err(parse_err(path, line, "facies does not match the parent sequence"));
        }
        let z = number(field(&row, 3, path, line)?, "thickness_m", path, line)?;
        if order.last().map(|(i, _)| i != &id).unwrap_or(true) {
            order.push((id.clone(), vec![0.0; parent.len()]));
        }
        order.last_mut().expect("pushed").1[j - 1] = z;
    }
    order
        .into_iter()
        .map(|(id, z)| AugmentedConfiguration::new(id, z))
        .collect()
}

/// Column names of the wide samples file for `m` layers.
pub fn samples_header(m: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    for j in 1..=m {
        for p in Param::ALL {
            h.push(format!("{}_{j}", p.name()));
        }
    }
    h.push("log_likelihood".into());
    h
}

pub fn format_samples(samples: &[PosteriorSample], m: usize) -> String {
    let mut s = samples_header(m).join(",");
    s.push('\n');
    for smp in samples {
        let _ = write!(s, "{}", smp.iteration);
        for th in &smp.params {
            let _ = write!(s, ",{},{},{},{}", th.p(), th.mu(), th.beta(), th.range());
        }
        let _ = writeln!(s, ",{}", smp.log_likelihood);
    }
    s
}

/// Parameters and likelihood of one stored sample, without configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub iteration: usize,
    pub params: Vec<LayerParams>,
    pub log_likelihood: f64,
}

/// Reads the samples file; `nu[j]` is the smoothness used for layer `j`.
pub fn read_samples(path: &Path, nu: &[Smoothness]) -> Result<Vec<SampleRow>> {
    let text = read_text(path)?;
    let m = nu.len();
    let header = samples_header(m);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut reader = csv_reader(&text);
    check_header(&mut reader, &header, path)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let iteration: usize = field(&row, 0, path, line)?
            .parse()
            .map_err(|_| parse_err(path, line, "iteration is not an integer"))?;
        let mut params = Vec::with_capacity(m);
        for (j, &nu_j) in nu.iter().enumerate() {
            let v: Vec<f64> = (0..4)
                .map(|k| number(field(&row, 1 + 4 * j + k, path, line)?, "parameter", path, line))
                .collect::<Result<_>>()?;
            params.push(
                LayerParams::new(v[0], v[1], v[2], v[3], nu_j)
                    .map_err(|e| parse_err(path, line, e.to_string()))?,
            );
        }
        let ll = field(&row, 1 + 4 * m, path, line)?
            .parse::<f64>()
            .map_err(|_| parse_err(path, line, "log_likelihood is not a number"))?;
        out.push(SampleRow {
            iteration,
            params,
            log_likelihood: ll,
        });
    }
    Ok(out)
}

pub fn configurations_header(m: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string(), "borehole_id".to_string()];
    h.extend((1..=m).map(|j| format!("z_{j}")));
    h
}

pub fn format_configurations(samples: &[PosteriorSample], m: usize) -> String {
    let mut s = configurations_header(m).join(",");
    s.push('\n');
    for smp in samples {
        for c in &smp.configs {
            let _ = write!(s, "{},{}", smp.iteration, c.borehole_id);
            for z in c.thickness() {
                let _ = write!(s, ",{z}");
            }
            s.push('\n');
        }
    }
    s
}

/// Reads stored configurations grouped by iteration, in file order.
pub fn read_configurations(path: &Path, m: usize) -> Result<Vec<(usize, Vec<AugmentedConfiguration>)>> {
    let text = read_text(path)?;
    let header = configurations_header(m);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut reader = csv_reader(&text);
    check_header(&mut reader, &header, path)?;
    let mut out: Vec<(usize, Vec<AugmentedConfiguration>)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let it: usize = field(&row, 0, path, line)?
            .parse()
            .map_err(|_| parse_err(path, line, "iteration is not an integer"))?;
        let id = field(&row, 1, path, line)?.to_string();
        let z: Vec<f64> = (0..m)
            .map(|j| number(field(&row, 2 + j, path, line)?, "thickness", path, line))
            .collect::<Result<_>>()?;
        let cfg = AugmentedConfiguration::new(id, z).map_err(|e| parse_err(path, line, e.to_string()))?;
        match out.last_mut() {
            Some((i, v)) if *i == it => v.push(cfg),
            _ => out.push((it, vec![cfg])),
        }
    }
    Ok(out)
}

pub fn format_trace(diag: &Diagnostics) -> String {
    let mut s = String::from("iteration,log_likelihood\n");
    for (t, ll) in diag.log_likelihood_trace.iter().enumerate() {
        let _ = writeln!(s, "{t},{ll}");
    }
    s
}

/// Acceptance counters per parameter kind, per layer and per move kind.
pub fn format_diagnostics(diag: &Diagnostics) -> String {
    let mut s = String::from("scope,name,proposed,accepted,rate\n");
    for p in Param::ALL {
        let c = diag.params[p.index()];
        let _ = writeln!(s, "parameter,{},{},{},{}", p.name(), c.proposed, c.accepted, c.rate());
    }
    for (j, row) in diag.params_by_layer.iter().enumerate() {
        for p in Param::ALL {
            let c = row[p.index()];
            if c.proposed > 0 {
                let _ = writeln!(
                    s,
                    "layer_{},{},{},{},{}",
                    j + 1,
                    p.name(),
                    c.proposed,
                    c.accepted,
                    c.rate()
                );
            }
        }
    }
    for (k, name) in ["split", "merge", "displace"].iter().enumerate() {
        let c = diag.moves[k];
        let _ = writeln!(s, "move,{name},{},{},{}", c.proposed, c.accepted, c.rate());
        let _ = writeln!(s, "no_candidate,{name},{},0,NaN", diag.moves_without_candidates[k]);
    }
    let _ = writeln!(s, "numeric_rejection,all,{},0,NaN", diag.numeric_rejections);
    let _ = writeln!(s, "observation_violation,all,{},0,NaN", diag.observation_violations);
    let _ = writeln!(s, "audit,max_discrepancy,{},0,{}", diag.audits, diag.max_audit_discrepancy);
    s
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Posterior median and 0.05/0.95 quantiles of every parameter of every layer.
pub fn format_summary(samples: &[PosteriorSample], parent: &ParentSequence) -> String {
    let mut s = String::from("layer,facies,parameter,median,q05,q95\n");
    for j in 0..parent.len() {
        for p in Param::ALL {
            let mut v: Vec<f64> = samples.iter().map(|smp| p.get(&smp.params[j])).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                j + 1,
                parent.facies(j),
                p.name(),
                quantile_sorted(&v, 0.5),
                quantile_sorted(&v, 0.05),
                quantile_sorted(&v, 0.95)
            );
        }
    }
    s
}

/// Writes `samples.csv`, `configurations.csv`, `trace.csv`, `diagnostics.csv`
/// and `summary.csv` into `dir`.
pub fn write_chain(
    dir: &Path,
    parent: &ParentSequence,
    samples: &[PosteriorSample],
    diag: &Diagnostics,
) -> Result<()> {
    let m = parent.len();
    write_text(&dir.join("samples.csv"), &format_samples(samples, m))?;
    write_text(&dir.join("configurations.csv"), &format_configurations(samples, m))?;
    write_text(&dir.join("trace.csv"), &format_trace(diag))?;
    write_text(&dir.join("diagnostics.csv"), &format_diagnostics(diag))?;
    write_text(&dir.join("summary.csv"), &format_summary(samples, parent))?;
    Ok(())
}

/// Reads a chain directory back into posterior samples.
pub fn read_chain(dir: &Path, nu: &[Smoothness]) -> Result<Vec<PosteriorSample>> {
    let rows = read_samples(&dir.join("samples.csv"), nu)?;
    let configs = read_configurations(&dir.join("configurations.csv"), nu.len())?;
    let mut by_iter: BTreeMap<usize, Vec<AugmentedConfiguration>> = configs.into_iter().collect();
    Ok(rows
        .into_iter()
        .map(|r| PosteriorSample {
            iteration: r.iteration,
            configs: by_iter.remove(&r.iteration).unwrap_or_default(),
            params: r.params,
            log_likelihood: r.log_likelihood,
        })
        .collect())
}

/// Node raster: one row per node and layer.
pub fn format_stack(stack: &LayerStack, parent: &ParentSequence) -> String {
    let mut s = String::from("x,y_or_depth,layer_index,facies,thickness\n");
    for (j, layer) in stack.thickness.iter().enumerate() {
        for (p, z) in stack.nodes.iter().zip(layer) {
            let _ = writeln!(s, "{},{},{},{},{}", p.x, p.y, j + 1, parent.facies(j), z);
        }
    }
    s
}

/// Gridded text format:
///
/// ```text
/// strata-grid 1
/// origin <x0> <y0>
/// spacing <dx> <dy>
/// dims <nx> <ny>
/// layers <M>
/// layer <j> <facies>
/// <ny lines of nx thickness values, south to north>
/// ```
///
/// Transects are written with `ny = 1`, `dy = 0` and the step length as `dx`.
pub fn format_grid(grid: &SimGrid, stack: &LayerStack, parent: &ParentSequence) -> String {
    let (origin, dx, dy, nx, ny) = match grid.geometry() {
        Geometry::Grid {
            origin,
            dx,
            dy,
            nx,
            ny,
        } => (*origin, *dx, *dy, *nx, *ny),
        Geometry::Transect { start, end, steps } => {
            (*start, start.distance(end) / *steps as f64, 0.0, steps + 1, 1)
        }
    };
    let mut s = String::from("strata-grid 1\n");
    let _ = writeln!(s, "origin {} {}", origin.x, origin.y);
    let _ = writeln!(s, "spacing {dx} {dy}");
    let _ = writeln!(s, "dims {nx} {ny}");
    let _ = writeln!(s, "layers {}", stack.layers());
    for (j, layer) in stack.thickness.iter().enumerate() {
        let _ = writeln!(s, "layer {} {}", j + 1, parent.facies(j));
        for row in layer.chunks(nx) {
            let line: Vec<String> = row.iter().map(|z| z.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s
}

/// Section raster: one row per cell inside a layer or below the last layer.
pub fn format_section_raster(cs: &CrossSection, parent: &ParentSequence) -> String {
    let mut s = String::from("x,y_or_depth,layer_index,facies,thickness\n");
    for (r, row) in cs.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            match cell {
                Cell::Above => {}
                Cell::Layer(j) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        cs.stations[c],
                        cs.depths[r],
                        j + 1,
                        parent.facies(*j),
                        cs.thickness[*j][c]
                    );
                }
                Cell::Undefined => {
                    let _ = writeln!(s, "{},{},,undefined,", cs.stations[c], cs.depths[r]);
                }
            }
        }
    }
    s
}

/// Boundary polylines: `T_j` along the section, `j = 0` being the ground.
pub fn format_polylines(cs: &CrossSection) -> String {
    let mut s = String::from("transect_distance,depth,layer_index\n");
    for (j, b) in cs.boundaries.iter().enumerate() {
        for (d, t) in cs.stations.iter().zip(b) {
            let _ = writeln!(s, "{d},{t},{j}");
        }
    }
    s
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}
