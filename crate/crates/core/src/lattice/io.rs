use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::fmt_real;

use super::pmf::LatticePmf;
use super::powerlaw::{PowerLawSpec, TruncationPolicy};

/// Metadata written as a JSON comment line above the CSV body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfHeader {
    pub label: String,
    pub spec: Option<PowerLawSpec>,
    pub policy: Option<TruncationPolicy>,
    pub tail_mass_left: f64,
    pub tail_mass_right: f64,
    pub notes: Vec<String>,
}

/// CSV with columns `t,prob`, preceded by `# {json header}`.
pub fn write_pmf_csv<W: Write>(pmf: &LatticePmf, mut w: W) -> Result<()> {
    let header = PmfHeader {
        label: pmf.label().to_string(),
        spec: pmf.source,
        policy: pmf.truncation,
        tail_mass_left: pmf.tail_left(),
        tail_mass_right: pmf.tail_right(),
        notes: pmf.notes.clone(),
    };
    writeln!(w, "# {}", serde_json::to_string(&header)?)?;
    writeln!(w, "t,prob")?;
    for (t, p) in pmf.iter() {
        writeln!(w, "{t},{}", fmt_real(p))?;
    }
    Ok(())
}

pub fn read_pmf_csv<R: BufRead>(r: R) -> Result<LatticePmf> {
    let mut header: Option<PmfHeader> = None;
    let mut points: Vec<(i64, f64)> = Vec::new();
    let mut seen_columns = false;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(json) = line.strip_prefix('#') {
            header = Some(serde_json::from_str(json.trim())?);
            continue;
        }
        if !seen_columns {
            if line != "t,prob" {
                return Err(Error::Format(format!("expected header t,prob, got {line}")));
            }
            seen_columns = true;
            continue;
        }
        let (t, p) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad row {line}")))?;
        let t: i64 = t.parse().map_err(|_| Error::Format(format!("bad t in {line}")))?;
        let p: f64 = p.parse().map_err(|_| Error::Format(format!("bad prob in {line}")))?;
        points.push((t, p));
    }
    if points.is_empty() {
        return Err(Error::Format("pmf csv has no rows".into()));
    }
    points.sort_by_key(|&(t, _)| t);
    let lo = points[0].0;
    let hi = points[points.len() - 1].0;
    let mut probs = vec![0.0; (hi - lo + 1) as usize];
    for (t, p) in points {
        probs[(t - lo) as usize] += p;
    }
    let h = header.unwrap_or(PmfHeader {
        label: "csv".into(),
        spec: None,
        policy: None,
        tail_mass_left: 0.0,
        tail_mass_right: 0.0,
        notes: Vec::new(),
    });
    let mut pmf = LatticePmf::with_tails(lo, probs, h.tail_mass_left, h.tail_mass_right, h.label)?;
    pmf.source = h.spec;
    pmf.truncation = h.policy;
    pmf.notes = h.notes;
    Ok(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_power_law;

    #[test]
    fn csv_round_trip_keeps_everything() {
        let spec = PowerLawSpec::two_sided(3.0, 1.0, 0.5);
        let pmf = build_power_law(&spec, &TruncationPolicy::keep_tail(20)).unwrap();
        let mut buf = Vec::new();
        write_pmf_csv(&pmf, &mut buf).unwrap();
        let back = read_pmf_csv(&buf[..]).unwrap();
        assert_eq!(back, pmf);
    }
}
