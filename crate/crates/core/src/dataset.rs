//! Labeled feature datasets and their CSV representation.
//!
//! Format: header `label,f1,...,fp`, one sample per row, label 1 or 2,
//! features as decimal literals that round-trip 64-bit floats. Lines
//! starting with `#` are comments. Files written here re-read and re-write
//! byte-for-byte.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::BlockPartition;
use crate::Scalar;

/// Class label of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Class1,
    Class2,
}

impl Label {
    pub fn as_int(self) -> u8 {
        match self {
            Label::Class1 => 1,
            Label::Class2 => 2,
        }
    }

    pub fn from_int(value: u8) -> Option<Self> {
        match value {
            1 => Some(Label::Class1),
            2 => Some(Label::Class2),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::Class1 => Label::Class2,
            Label::Class2 => Label::Class1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub label: Label,
    pub features: Vec<Scalar>,
}

/// A set of labeled samples laid out according to a block partition.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    partition: BlockPartition,
    rows: Vec<DataRow>,
}

impl LabeledDataset {
    pub fn new(partition: BlockPartition, rows: Vec<DataRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != partition.total_features() {
                return Err(Error::Usage(format!(
                    "row {} has {} features, partition expects {}",
                    i,
                    row.features.len(),
                    partition.total_features()
                )));
            }
        }
        Ok(Self { partition, rows })
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    pub fn rows(&self) -> &[DataRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows restricted to one class.
    pub fn class_rows(&self, label: Label) -> impl Iterator<Item = &DataRow> {
        self.rows.iter().filter(move |r| r.label == label)
    }

    /// True when every row carries `label`.
    pub fn is_single_class(&self, label: Label) -> bool {
        self.rows.iter().all(|r| r.label == label)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "label")?;
        for i in 1..=self.partition.total_features() {
            write!(out, ",f{i}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{}", row.label.as_int())?;
            for x in &row.features {
                write!(out, ",{}", format_feature(*x))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parses a dataset CSV; feature count must match the partition.
    pub fn read_csv<R: BufRead>(reader: R, partition: BlockPartition) -> Result<Self> {
        let mut rows = Vec::new();
        let mut saw_header = false;
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.starts_with('#') || trimmed.is_empty() {
                continue;
            }
            if !saw_header {
                check_header(trimmed, partition.total_features(), line_no)?;
                saw_header = true;
                continue;
            }
            rows.push(parse_row(trimmed, partition.total_features(), line_no)?);
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                message: "missing dataset header".into(),
            });
        }
        LabeledDataset::new(partition, rows)
    }
}

/// 17 significant digits: lossless for 64-bit floats.
pub fn format_feature(x: Scalar) -> String {
    format!("{x:.16e}")
}

fn check_header(line: &str, total_features: usize, line_no: usize) -> Result<()> {
    let mut fields = line.split(',');
    if fields.next() != Some("label") {
        return Err(Error::Parse {
            line: line_no,
            message: "header must start with `label`".into(),
        });
    }
    let names = fields.count();
    if names != total_features {
        return Err(Error::Parse {
            line: line_no,
            message: format!("header names {names} features, expected {total_features}"),
        });
    }
    Ok(())
}

fn parse_row(line: &str, total_features: usize, line_no: usize) -> Result<DataRow> {
    let mut fields = line.split(',');
    let label_text = fields.next().unwrap_or_default();
    let label = label_text
        .trim()
        .parse::<u8>()
        .ok()
        .and_then(Label::from_int)
        .ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("label must be 1 or 2, got `{label_text}`"),
        })?;
    let mut features = Vec::with_capacity(total_features);
    for field in fields {
        let value: Scalar = field.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid feature value `{field}`"),
        })?;
        features.push(value);
    }
    if features.len() != total_features {
        return Err(Error::Parse {
            line: line_no,
            message: format!(
                "row has {} features, expected {total_features}",
                features.len()
            ),
        });
    }
    Ok(DataRow { label, features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn partition(kappa: usize, m: usize) -> BlockPartition {
        BlockPartition::new(kappa, m).unwrap()
    }

    fn small_dataset() -> LabeledDataset {
        LabeledDataset::new(
            partition(2, 1),
            vec![
                DataRow {
                    label: Label::Class1,
                    features: vec![1.5, -0.25],
                },
                DataRow {
                    label: Label::Class2,
                    features: vec![0.1, 3.0e-7],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn header_and_shape() {
        let text = small_dataset().to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("label,f1,f2"));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn csv_round_trips_bytes() {
        let ds = small_dataset();
        let text = ds.to_csv_string();
        let back = LabeledDataset::read_csv(text.as_bytes(), ds.partition()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn comments_are_skipped() {
        let text = "# generated\nlabel,f1\n# a comment\n1,0.5\n2,-1.0e0\n";
        let ds = LabeledDataset::read_csv(text.as_bytes(), partition(1, 1)).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.rows()[0].label, Label::Class1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "label,f1\n1,0.5\n3,1.0\n";
        match LabeledDataset::read_csv(text.as_bytes(), partition(1, 1)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "label,f1\n1,abc\n";
        match LabeledDataset::read_csv(text.as_bytes(), partition(1, 1)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "label,f1\n1,0.5,2.0\n";
        assert!(LabeledDataset::read_csv(text.as_bytes(), partition(1, 1)).is_err());
    }

    #[test]
    fn wrong_width_rejected() {
        let rows = vec![DataRow {
            label: Label::Class1,
            features: vec![1.0],
        }];
        assert!(LabeledDataset::new(partition(2, 1), rows).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_any_floats(
            values in proptest::collection::vec(
                proptest::num::f64::NORMAL | proptest::num::f64::ZERO | proptest::num::f64::SUBNORMAL,
                6,
            ),
            labels in proptest::collection::vec(1u8..=2, 2),
        ) {
            let rows: Vec<DataRow> = values
                .chunks(3)
                .zip(&labels)
                .map(|(chunk, &l)| DataRow {
                    label: Label::from_int(l).unwrap(),
                    features: chunk.to_vec(),
                })
                .collect();
            let ds = LabeledDataset::new(partition(3, 1), rows).unwrap();
            let text = ds.to_csv_string();
            let back = LabeledDataset::read_csv(text.as_bytes(), ds.partition()).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(back.to_csv_string(), text);
        }
    }
}
