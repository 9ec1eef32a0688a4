//! Flat CSV persistence of experiment results.
//!
//! Header is always `experiment,case,trial,k,metric,value,seed`; floats are
//! written with 17 significant digits so that reading back is exact.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "experiment",
    "case",
    "trial",
    "k",
    "metric",
    "value",
    "seed",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    /// `d_G(F_k, S)` after block k.
    DGeodesic,
    /// Cumulative number of rejected blocks.
    Discarded,
    /// Plateau bias at the end of a trial.
    FinalBias,
    /// `‖P_{S⊥} P_Y‖` of a single block span.
    SpectralGap,
    Percentile99,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DGeodesic => "d_geodesic",
            Self::Discarded => "discarded",
            Self::FinalBias => "final_bias",
            Self::SpectralGap => "spectral_gap",
            Self::Percentile99 => "percentile_99",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "d_geodesic" => Self::DGeodesic,
            "discarded" => Self::Discarded,
            "final_bias" => Self::FinalBias,
            "spectral_gap" => Self::SpectralGap,
            "percentile_99" => Self::Percentile99,
            other => return Err(Error::BadParams(format!("unknown metric `{other}`"))),
        })
    }
}

/// One row of output.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub case: String,
    pub trial: u64,
    pub k: u64,
    pub metric: Metric,
    pub value: f64,
    pub seed: u64,
}

/// 17 significant digits, scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Case column for runs that sweep p: `<case>@p=<p>`.
pub fn case_tag(case: &str, p: f64) -> String {
    format!("{case}@p={p}")
}

/// Inverse of [`case_tag`]; plain case names come back with `None`.
pub fn split_case_tag(tag: &str) -> Result<(&str, Option<f64>)> {
    match tag.split_once("@p=") {
        None => Ok((tag, None)),
        Some((case, p)) => {
            let p = p
                .parse()
                .map_err(|_| Error::BadParams(format!("malformed case tag `{tag}`")))?;
            Ok((case, Some(p)))
        }
    }
}

pub fn write_csv_to<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for rec in records {
        writer.write_record([
            rec.experiment.as_str(),
            rec.case.as_str(),
            &rec.trial.to_string(),
            &rec.k.to_string(),
            rec.metric.as_str(),
            &format_float(rec.value),
            &rec.seed.to_string(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(records, std::io::BufWriter::new(file))
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::BadParams(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let bad = |field: &str, row: usize| Error::BadParams(format!("bad `{field}` in row {row}"));
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let field = |j: usize| row.get(j).unwrap_or_default();
        records.push(TrialRecord {
            experiment: field(0).to_owned(),
            case: field(1).to_owned(),
            trial: field(2).parse().map_err(|_| bad("trial", i))?,
            k: field(3).parse().map_err(|_| bad("k", i))?,
            metric: field(4).parse()?,
            value: field(5).parse().map_err(|_| bad("value", i))?,
            seed: field(6).parse().map_err(|_| bad("seed", i))?,
        });
    }
    Ok(records)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_records_give_header_only() {
        let mut buf = Vec::new();
        write_csv_to(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,case,trial,k,metric,value,seed\n"
        );
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        let digits = format_float(std::f64::consts::PI);
        let mantissa = digits.split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17);
    }

    #[test]
    fn case_tags() {
        assert_eq!(case_tag("gaussian", 0.12), "gaussian@p=0.12");
        assert_eq!(
            split_case_tag("gaussian@p=0.12").unwrap(),
            ("gaussian", Some(0.12))
        );
        assert_eq!(split_case_tag("identity").unwrap(), ("identity", None));
    }

    #[test]
    fn rejects_wrong_header() {
        let err = read_csv_from("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::BadParams(_)));
    }

    fn metric() -> impl Strategy<Value = Metric> {
        prop_oneof![
            Just(Metric::DGeodesic),
            Just(Metric::Discarded),
            Just(Metric::FinalBias),
            Just(Metric::SpectralGap),
            Just(Metric::Percentile99),
        ]
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            rows in proptest::collection::vec(
                (0u64..100, 0u64..1000, metric(), -1e6f64..1e6, any::<u64>(), 0usize..3),
                0..20,
            )
        ) {
            let cases = ["identity", "gaussian@p=0.3", "pathological"];
            let records: Vec<TrialRecord> = rows
                .into_iter()
                .map(|(trial, k, metric, value, seed, c)| TrialRecord {
                    experiment: "convergence".into(),
                    case: cases[c].into(),
                    trial,
                    k,
                    metric,
                    value,
                    seed,
                })
                .collect();
            let mut buf = Vec::new();
            write_csv_to(&records, &mut buf).unwrap();
            prop_assert!(!buf.contains(&b'\r'));
            prop_assert_eq!(read_csv_from(buf.as_slice()).unwrap(), records);
        }
    }
}
