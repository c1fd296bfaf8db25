//! CSV and JSON export of trajectories, geodesic records, relations and
//! certificates. CSV floats are written with 17 significant digits so that a
//! round trip is lossless.

use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arrangement::SubspaceLattice;
use crate::broken::Relation;
use crate::error::{Error, Result};
use crate::flow::{BicharSegment, FlowSample, GeodesicRecord, StopReason};
use crate::phasespace::ScCovector;

/// Decimal representation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn face_label(lattice: Option<&SubspaceLattice>, omega: &DVector<f64>) -> String {
    lattice
        .and_then(|l| l.locate(omega).ok())
        .map(|loc| l_name(lattice.unwrap(), loc.face))
        .unwrap_or_default()
}

fn l_name(l: &SubspaceLattice, id: crate::arrangement::MemberId) -> String {
    l.name(id).to_string()
}

/// Writes `t, s, omega_1..n, tau, v_1..n, face`. The face column holds the
/// smallest face containing the point (empty without a lattice or when the
/// location is ambiguous).
pub fn write_samples_csv<W: Write>(w: W, samples: &[FlowSample], lattice: Option<&SubspaceLattice>) -> Result<()> {
    let n = samples.first().map_or(0, |s| s.xi.dim());
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "s".to_string()];
    header.extend((1..=n).map(|i| format!("omega_{i}")));
    header.push("tau".into());
    header.extend((1..=n).map(|i| format!("v_{i}")));
    header.push("face".into());
    wr.write_record(&header)?;
    for smp in samples {
        if smp.xi.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: smp.xi.dim() });
        }
        let mut row = vec![fmt_f64(smp.t), fmt_f64(smp.s)];
        row.extend(smp.xi.omega.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_f64(smp.xi.tau));
        row.extend(smp.xi.v.iter().map(|&x| fmt_f64(x)));
        row.push(face_label(lattice, &smp.xi.omega));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

fn parse(field: &str, row: usize, col: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Invalid(format!("row {row}, column `{col}`: cannot parse `{field}` as a number")))
}

/// Reads samples written by [`write_samples_csv`]. Values are taken as is,
/// without renormalization.
pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<FlowSample>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with("omega_")).count();
    let idx = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::Invalid(format!("missing column `{name}`")));
    let (it, is, itau) = (idx("t")?, idx("s")?, idx("tau")?);
    let iomega: Vec<usize> = (1..=n).map(|i| idx(&format!("omega_{i}"))).collect::<Result<_>>()?;
    let iv: Vec<usize> = (1..=n).map(|i| idx(&format!("v_{i}"))).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = row + 2;
        let get = |i: usize| parse(rec.get(i).unwrap_or(""), row, &header[i]);
        let omega = DVector::from_vec(iomega.iter().map(|&i| get(i)).collect::<Result<_>>()?);
        let v = DVector::from_vec(iv.iter().map(|&i| get(i)).collect::<Result<_>>()?);
        out.push(FlowSample { t: get(it)?, s: get(is)?, xi: ScCovector { omega, tau: get(itau)?, v } });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub s: f64,
    pub omega: Vec<f64>,
    pub tau: f64,
    pub v: Vec<f64>,
    #[serde(default)]
    pub face: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub lambda: f64,
    pub stop: Option<StopReason>,
    pub samples: Vec<SampleRecord>,
}

impl TrajectoryRecord {
    pub fn from_segment(seg: &BicharSegment, lattice: Option<&SubspaceLattice>) -> Self {
        let samples = seg
            .samples
            .iter()
            .map(|s| SampleRecord {
                t: s.t,
                s: s.s,
                omega: s.xi.omega.iter().copied().collect(),
                tau: s.xi.tau,
                v: s.xi.v.iter().copied().collect(),
                face: face_label(lattice, &s.xi.omega),
            })
            .collect();
        Self { lambda: seg.lambda, stop: Some(seg.stop), samples }
    }

    pub fn to_samples(&self) -> Vec<FlowSample> {
        self.samples
            .iter()
            .map(|r| FlowSample {
                t: r.t,
                s: r.s,
                xi: ScCovector { omega: DVector::from_vec(r.omega.clone()), tau: r.tau, v: DVector::from_vec(r.v.clone()) },
            })
            .collect()
    }
}

/// Writes `s, t, tau, speed, x_1..n, d_1..n` for a geodesic record.
pub fn write_geodesic_csv<W: Write>(w: W, rec: &GeodesicRecord) -> Result<()> {
    let n = rec.samples.first().map_or(0, |s| s.position.len());
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["s".to_string(), "t".into(), "tau".into(), "speed".into()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("d_{i}")));
    wr.write_record(&header)?;
    for smp in &rec.samples {
        let mut row = vec![fmt_f64(smp.s), fmt_f64(rec.time(smp.s)), fmt_f64(rec.tau(smp.s)), fmt_f64(rec.speed(smp.s))];
        row.extend(smp.position.iter().map(|&x| fmt_f64(x)));
        row.extend(smp.direction.iter().map(|&x| fmt_f64(x)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDirection {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    /// Names of the faces broken at, in order.
    pub signature: Vec<String>,
    pub length: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub source: PointDirection,
    pub targets: Vec<TargetRecord>,
}

impl RelationRecord {
    pub fn new(rel: &Relation, lattice: &SubspaceLattice) -> Self {
        Self {
            source: PointDirection { point: rel.source_point.iter().copied().collect(), direction: rel.source_direction.iter().copied().collect() },
            targets: rel
                .targets
                .iter()
                .map(|t| TargetRecord {
                    point: t.point.iter().copied().collect(),
                    direction: t.direction.iter().copied().collect(),
                    signature: t.signature.iter().map(|&f| lattice.name(f).to_string()).collect(),
                    length: t.length,
                    truncated: t.truncated,
                })
                .collect(),
        }
    }
}

/// Writes targets as CSV: `index, length, truncated, signature, x_1..n, d_1..n`
/// with the signature joined by `/`.
pub fn write_relation_csv<W: Write>(w: W, rec: &RelationRecord) -> Result<()> {
    let n = rec.source.point.len();
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["index".to_string(), "length".into(), "truncated".into(), "signature".into()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("d_{i}")));
    wr.write_record(&header)?;
    for (i, t) in rec.targets.iter().enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(t.length), t.truncated.to_string(), t.signature.join("/")];
        row.extend(t.point.iter().map(|&x| fmt_f64(x)));
        row.extend(t.direction.iter().map(|&x| fmt_f64(x)));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}
