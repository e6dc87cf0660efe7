use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use log::{info, warn};

use super::joint::{Hand, JointId, Site, N_JOINTS};
use crate::error::{Error, Result};
use crate::model::JointStatus;

/// Observations of one clinic visit; `None` for joints not recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub time: f64,
    pub joints: [Option<JointStatus>; N_JOINTS],
}

impl Visit {
    pub fn new(time: f64) -> Self {
        Self {
            time,
            joints: [None; N_JOINTS],
        }
    }

    /// A visit at which every joint is recorded.
    pub fn complete(time: f64, statuses: [JointStatus; N_JOINTS]) -> Self {
        Self {
            time,
            joints: statuses.map(Some),
        }
    }

    pub fn any_damaged(&self) -> bool {
        self.joints.iter().flatten().any(|s| s.damaged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub id: String,
    /// 1 = male, 0 = female.
    pub sex: u8,
    pub age_at_onset: f64,
    pub arthritis_duration_at_entry: f64,
    /// Strictly increasing in time.
    pub visits: Vec<Visit>,
}

impl Patient {
    /// Mover indicator known from the data: damage observed at the last visit.
    pub fn damaged_at_last_visit(&self) -> bool {
        self.visits.last().is_some_and(|v| v.any_damaged())
    }

    /// Intervals that enter the likelihood: every interval except the first.
    pub fn usable_intervals(&self) -> usize {
        self.visits.len().saturating_sub(2)
    }

    pub fn follow_up(&self) -> f64 {
        match (self.visits.first(), self.visits.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }
}

/// Ordering used for patient ids: numeric ids numerically, then the rest
/// lexicographically.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Validated panel data: patients sorted by id, visits by time, damage
/// monotone for every joint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelDataset {
    patients: Vec<Patient>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Drop patients who enter with any damaged joint.
    pub require_undamaged_entry: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            require_undamaged_entry: false,
        }
    }
}

impl PanelDataset {
    /// Validate and sort. Fails on non-increasing visit times, fewer than two
    /// visits, or damage reversal.
    pub fn new(mut patients: Vec<Patient>) -> Result<Self> {
        let mut problems = Vec::new();
        for p in &patients {
            validate_patient(p, &mut problems);
        }
        patients.sort_by(|a, b| compare_ids(&a.id, &b.id));
        for w in patients.windows(2) {
            if w[0].id == w[1].id {
                problems.push(format!("duplicate patient id {}", w[0].id));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let short = patients.iter().filter(|p| p.visits.len() < 3).count();
        if short > 0 {
            warn!("{short} patient(s) have fewer than 3 visits and contribute no likelihood");
        }
        Ok(Self { patients })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn patient(&self, index: usize) -> &Patient {
        &self.patients[index]
    }

    /// Keep only patients with no damaged joint at their first visit.
    pub fn filter_undamaged_entry(self) -> Self {
        let before = self.patients.len();
        let patients: Vec<_> = self
            .patients
            .into_iter()
            .filter(|p| p.visits.first().is_some_and(|v| !v.any_damaged()))
            .collect();
        if patients.len() < before {
            info!(
                "cohort filter dropped {} patient(s) damaged at entry",
                before - patients.len()
            );
        }
        Self { patients }
    }

    /// Parse the long-format CSV (one row per patient, visit and joint).
    pub fn from_csv_reader<R: Read>(reader: R, options: IngestOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h == name).ok_or(Error::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            })
        };
        let cols = [
            col("patient_id")?,
            col("visit_time_years")?,
            col("hand")?,
            col("digit")?,
            col("site")?,
            col("active")?,
            col("damaged")?,
            col("sex")?,
            col("age_onset_years")?,
            col("arthritis_duration_years")?,
        ];

        struct Building {
            sex: u8,
            age: f64,
            first_line: usize,
            // time bits -> (time, visit, duration at that visit)
            visits: BTreeMap<u64, (Visit, f64)>,
        }
        let mut by_patient: BTreeMap<String, Building> = BTreeMap::new();
        let mut rows = 0usize;
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| record.get(cols[i]).unwrap_or("");
            let bad = |message: String| Error::Parse { line, message };
            let num = |i: usize, what: &str| -> Result<f64> {
                let s = field(i);
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| bad(format!("{what}: cannot parse `{s}` as a number")))
            };
            let flag = |i: usize, what: &str| -> Result<bool> {
                match field(i) {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    s => Err(bad(format!("{what}: expected 0 or 1, got `{s}`"))),
                }
            };
            let id = field(0).to_string();
            if id.is_empty() {
                return Err(bad("empty patient_id".into()));
            }
            let time = num(1, "visit_time_years")?;
            let hand = match field(2) {
                "L" => Hand::Left,
                "R" => Hand::Right,
                s => return Err(bad(format!("hand: expected L or R, got `{s}`"))),
            };
            let digit: u8 = field(3)
                .parse()
                .map_err(|_| bad(format!("digit: cannot parse `{}`", field(3))))?;
            let site = Site::from_code(field(4))
                .ok_or_else(|| bad(format!("site: unknown code `{}`", field(4))))?;
            let joint = JointId::new(hand, digit, site).map_err(|e| bad(e.to_string()))?;
            let status = JointStatus::new(flag(5, "active")?, flag(6, "damaged")?);
            let sex = flag(7, "sex")? as u8;
            let age = num(8, "age_onset_years")?;
            let duration = num(9, "arthritis_duration_years")?;
            if time < 0.0 || age < 0.0 || duration < 0.0 {
                return Err(bad("times, ages and durations must be nonnegative".into()));
            }

            let entry = by_patient.entry(id.clone()).or_insert_with(|| Building {
                sex,
                age,
                first_line: line,
                visits: BTreeMap::new(),
            });
            if entry.sex != sex || entry.age != age {
                return Err(bad(format!(
                    "patient {id}: sex/age at onset differ from line {}",
                    entry.first_line
                )));
            }
            let (visit, _) = entry
                .visits
                .entry(time.to_bits())
                .or_insert_with(|| (Visit::new(time), duration));
            let slot = &mut visit.joints[joint.index()];
            if slot.is_some() {
                return Err(bad(format!(
                    "patient {id}: joint {joint} recorded twice at time {time}"
                )));
            }
            *slot = Some(status);
            rows += 1;
        }
        if rows == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "no data rows".into(),
            });
        }

        let patients = by_patient
            .into_iter()
            .map(|(id, b)| {
                let mut visits: Vec<(Visit, f64)> = b.visits.into_values().collect();
                visits.sort_by(|a, b| a.0.time.total_cmp(&b.0.time));
                let entry_duration = visits.first().map_or(0.0, |v| v.1);
                Patient {
                    id,
                    sex: b.sex,
                    age_at_onset: b.age,
                    arthritis_duration_at_entry: entry_duration,
                    visits: visits.into_iter().map(|(v, _)| v).collect(),
                }
            })
            .collect();
        let ds = Self::new(patients)?;
        Ok(if options.require_undamaged_entry {
            ds.filter_undamaged_entry()
        } else {
            ds
        })
    }

    pub fn from_csv_path(path: &Path, options: IngestOptions) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file), options)
    }

    /// Write the long-format CSV. Arthritis duration is written time-updated
    /// (entry value plus time since the first visit).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for p in &self.patients {
            let t0 = p.visits.first().map_or(0.0, |v| v.time);
            for v in &p.visits {
                let duration = p.arthritis_duration_at_entry + (v.time - t0);
                for (idx, status) in v.joints.iter().enumerate() {
                    let Some(s) = status else { continue };
                    let j = JointId::from_index(idx);
                    w.write_record([
                        p.id.as_str(),
                        &format_float(v.time),
                        j.hand().code(),
                        &j.digit().to_string(),
                        j.site().code(),
                        if s.active { "1" } else { "0" },
                        if s.damaged { "1" } else { "0" },
                        &p.sex.to_string(),
                        &format_float(p.age_at_onset),
                        &format_float(duration),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// A new dataset with every patient present twice (ids suffixed).
    pub fn duplicated(&self) -> Self {
        let mut patients = self.patients.clone();
        patients.extend(self.patients.iter().map(|p| Patient {
            id: format!("{}~dup", p.id),
            ..p.clone()
        }));
        patients.sort_by(|a, b| compare_ids(&a.id, &b.id));
        Self { patients }
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "patient_id",
    "visit_time_years",
    "hand",
    "digit",
    "site",
    "active",
    "damaged",
    "sex",
    "age_onset_years",
    "arthritis_duration_years",
];

/// Shortest representation that parses back to the same `f64`.
fn format_float(x: f64) -> String {
    format!("{x}")
}

fn validate_patient(p: &Patient, problems: &mut Vec<String>) {
    if p.visits.len() < 2 {
        problems.push(format!(
            "patient {}: {} visit(s), at least 2 required",
            p.id,
            p.visits.len()
        ));
        return;
    }
    for w in p.visits.windows(2) {
        if !(w[1].time > w[0].time) {
            problems.push(format!(
                "patient {}: visit times not strictly increasing ({} then {})",
                p.id, w[0].time, w[1].time
            ));
        }
    }
    for joint in JointId::all() {
        let mut damaged_at: Option<f64> = None;
        for v in &p.visits {
            match (v.joints[joint.index()], damaged_at) {
                (Some(s), None) if s.damaged => damaged_at = Some(v.time),
                (Some(s), Some(t0)) if !s.damaged => {
                    problems.push(format!(
                        "patient {}: joint {joint} damaged at t={t0} but undamaged at t={}",
                        p.id, v.time
                    ));
                    break;
                }
                _ => {}
            }
        }
    }
}
