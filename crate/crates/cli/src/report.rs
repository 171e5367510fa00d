//! CSV row formats for run and sweep output. Column sets and order are
//! fixed; `parse_line` inverts `to_line` exactly so emitted files can be
//! read back into the same records.

use eprsim::bounds::ProtocolParams;
use eprsim::protocol::{FaultKind, SessionOutcome};

pub const RUN_HEADER: &str = "seed,n,s,r,m,qber,validated,fault,pad_consumed,net_gain,keys_equal";

pub const SWEEP_HEADER: &str =
    "param,value,sessions,validation_rate,mean_qber,mean_net_gain,faults,theta";

/// One session, one line.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRow {
    pub seed: u64,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub m: usize,
    pub qber: f64,
    pub validated: bool,
    pub fault: Option<FaultKind>,
    pub pad_consumed: u64,
    pub net_gain: i64,
    pub keys_equal: bool,
}

fn fault_name(fault: Option<FaultKind>) -> String {
    match fault {
        None => "none".to_string(),
        Some(kind) => kind.to_string(),
    }
}

fn parse_fault(text: &str) -> Result<Option<FaultKind>, String> {
    match text {
        "none" => Ok(None),
        "pad_exhausted" => Ok(Some(FaultKind::PadExhausted)),
        "channel" => Ok(Some(FaultKind::Channel)),
        other => Err(format!("unknown fault {other:?}")),
    }
}

fn field<'a>(parts: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<&'a str, String> {
    parts.next().ok_or_else(|| format!("missing column {name}"))
}

fn parse_field<T: std::str::FromStr>(text: &str, name: &str) -> Result<T, String> {
    text.parse()
        .map_err(|_| format!("column {name}: cannot parse {text:?}"))
}

impl SessionRow {
    pub fn from_outcome(seed: u64, params: &ProtocolParams, outcome: &SessionOutcome) -> Self {
        SessionRow {
            seed,
            n: params.n,
            s: params.s,
            r: params.r,
            m: params.m,
            qber: outcome.qber,
            validated: outcome.validated,
            fault: outcome.fault,
            pad_consumed: outcome.pad_consumed,
            net_gain: outcome.net_gain,
            keys_equal: outcome.keys_equal,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.n,
            self.s,
            self.r,
            self.m,
            self.qber,
            self.validated,
            fault_name(self.fault),
            self.pad_consumed,
            self.net_gain,
            self.keys_equal
        )
    }

    pub fn parse_line(line: &str) -> Result<SessionRow, String> {
        let mut parts = line.split(',');
        let row = SessionRow {
            seed: parse_field(field(&mut parts, "seed")?, "seed")?,
            n: parse_field(field(&mut parts, "n")?, "n")?,
            s: parse_field(field(&mut parts, "s")?, "s")?,
            r: parse_field(field(&mut parts, "r")?, "r")?,
            m: parse_field(field(&mut parts, "m")?, "m")?,
            qber: parse_field(field(&mut parts, "qber")?, "qber")?,
            validated: parse_field(field(&mut parts, "validated")?, "validated")?,
            fault: parse_fault(field(&mut parts, "fault")?)?,
            pad_consumed: parse_field(field(&mut parts, "pad_consumed")?, "pad_consumed")?,
            net_gain: parse_field(field(&mut parts, "net_gain")?, "net_gain")?,
            keys_equal: parse_field(field(&mut parts, "keys_equal")?, "keys_equal")?,
        };
        match parts.next() {
            None => Ok(row),
            Some(extra) => Err(format!("unexpected trailing column {extra:?}")),
        }
    }
}

/// One sweep grid point, aggregated over its sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub sessions: u64,
    pub validation_rate: f64,
    pub mean_qber: f64,
    pub mean_net_gain: f64,
    pub faults: u64,
    pub theta: f64,
}

impl SweepRow {
    pub fn aggregate(
        param: &str,
        value: f64,
        theta: f64,
        rows: &[SessionRow],
    ) -> SweepRow {
        let sessions = rows.len() as u64;
        let validated = rows.iter().filter(|r| r.validated).count();
        let faults = rows.iter().filter(|r| r.fault.is_some()).count() as u64;
        // sessions that never disclosed anything have no error rate at
        // all; they are left out of the mean rather than poisoning it
        let qbers: Vec<f64> = rows.iter().map(|r| r.qber).filter(|q| !q.is_nan()).collect();
        let mean_qber = if qbers.is_empty() {
            f64::NAN
        } else {
            qbers.iter().sum::<f64>() / qbers.len() as f64
        };
        let mean_net_gain =
            rows.iter().map(|r| r.net_gain as f64).sum::<f64>() / sessions.max(1) as f64;
        SweepRow {
            param: param.to_string(),
            value,
            sessions,
            validation_rate: validated as f64 / sessions.max(1) as f64,
            mean_qber,
            mean_net_gain,
            faults,
            theta,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.param,
            self.value,
            self.sessions,
            self.validation_rate,
            self.mean_qber,
            self.mean_net_gain,
            self.faults,
            self.theta
        )
    }

    pub fn parse_line(line: &str) -> Result<SweepRow, String> {
        let mut parts = line.split(',');
        let row = SweepRow {
            param: field(&mut parts, "param")?.to_string(),
            value: parse_field(field(&mut parts, "value")?, "value")?,
            sessions: parse_field(field(&mut parts, "sessions")?, "sessions")?,
            validation_rate: parse_field(
                field(&mut parts, "validation_rate")?,
                "validation_rate",
            )?,
            mean_qber: parse_field(field(&mut parts, "mean_qber")?, "mean_qber")?,
            mean_net_gain: parse_field(field(&mut parts, "mean_net_gain")?, "mean_net_gain")?,
            faults: parse_field(field(&mut parts, "faults")?, "faults")?,
            theta: parse_field(field(&mut parts, "theta")?, "theta")?,
        };
        match parts.next() {
            None => Ok(row),
            Some(extra) => Err(format!("unexpected trailing column {extra:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> SessionRow {
        SessionRow {
            seed: 0xDEADBEEF,
            n: 667,
            s: 222,
            r: 200,
            m: 8,
            qber: 0.06756756756756757,
            validated: true,
            fault: None,
            pad_consumed: 312,
            net_gain: -304,
            keys_equal: true,
        }
    }

    #[test]
    fn run_rows_round_trip() {
        let row = sample_row();
        assert_eq!(SessionRow::parse_line(&row.to_line()).unwrap(), row);

        let faulted = SessionRow {
            fault: Some(FaultKind::PadExhausted),
            validated: false,
            keys_equal: false,
            ..sample_row()
        };
        let line = faulted.to_line();
        assert!(line.contains(",pad_exhausted,"));
        assert_eq!(SessionRow::parse_line(&line).unwrap(), faulted);
    }

    #[test]
    fn undisclosed_error_rates_round_trip_as_nan() {
        let row = SessionRow {
            qber: f64::NAN,
            ..sample_row()
        };
        let line = row.to_line();
        assert!(line.contains(",NaN,"));
        let parsed = SessionRow::parse_line(&line).unwrap();
        assert!(parsed.qber.is_nan());
        // NaN breaks direct equality; everything else must match
        assert_eq!(parsed.to_line(), line);
    }

    #[test]
    fn malformed_rows_name_the_offending_column() {
        let err = SessionRow::parse_line("1,2,3").unwrap_err();
        assert!(err.contains("missing column"));
        let row = sample_row().to_line() + ",extra";
        assert!(SessionRow::parse_line(&row).unwrap_err().contains("trailing"));
        let err = SessionRow::parse_line(&sample_row().to_line().replace("true", "yes"))
            .unwrap_err();
        assert!(err.contains("cannot parse"));
    }

    #[test]
    fn header_matches_the_row_shape() {
        assert_eq!(RUN_HEADER.split(',').count(), 11);
        assert_eq!(sample_row().to_line().split(',').count(), 11);
        assert_eq!(SWEEP_HEADER.split(',').count(), 8);
    }

    #[test]
    fn sweep_aggregation_and_round_trip() {
        let rows: Vec<SessionRow> = (0..4)
            .map(|i| SessionRow {
                seed: i,
                validated: i % 2 == 0,
                qber: if i == 3 { f64::NAN } else { 0.1 * i as f64 },
                net_gain: 10 * i as i64,
                fault: if i == 3 {
                    Some(FaultKind::PadExhausted)
                } else {
                    None
                },
                ..sample_row()
            })
            .collect();
        let agg = SweepRow::aggregate("epsilon", 0.1, 0.5, &rows);
        assert_eq!(agg.sessions, 4);
        assert_eq!(agg.validation_rate, 0.5);
        assert_eq!(agg.faults, 1);
        // the NaN row is excluded: mean of 0.0, 0.1, 0.2
        assert!((agg.mean_qber - 0.1).abs() < 1e-12);
        assert_eq!(agg.mean_net_gain, 15.0);
        assert_eq!(SweepRow::parse_line(&agg.to_line()).unwrap(), agg);
    }
}
