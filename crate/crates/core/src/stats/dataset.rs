//! Choice datasets: one decision rule per subject, read from CSV.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoreError, Result};
use crate::model::DecisionRule;

const BUNDLED_CSV: &str = include_str!("../../data/table1.csv");

/// Answer to "What choice would you have made without any informational
/// draws?".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HypotheticalAnswer {
    White,
    Green,
    Yellow,
    GreenOrYellow,
}

impl HypotheticalAnswer {
    pub fn label(self) -> &'static str {
        match self {
            HypotheticalAnswer::White => "White",
            HypotheticalAnswer::Green => "Green",
            HypotheticalAnswer::Yellow => "Yellow",
            HypotheticalAnswer::GreenOrYellow => "Green or Yellow",
        }
    }
}

impl fmt::Display for HypotheticalAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for HypotheticalAnswer {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        match norm.as_str() {
            "white" | "w" => Ok(HypotheticalAnswer::White),
            "green" | "g" => Ok(HypotheticalAnswer::Green),
            "yellow" | "y" => Ok(HypotheticalAnswer::Yellow),
            "greenoryellow" | "green_or_yellow" | "g/y" => Ok(HypotheticalAnswer::GreenOrYellow),
            _ => Err(CoreError::Dataset(format!("unknown hypothetical answer {s:?}"))),
        }
    }
}

impl Serialize for HypotheticalAnswer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for HypotheticalAnswer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub subject_id: String,
    pub rule: DecisionRule,
    #[serde(default)]
    pub hypothetical_answer: Option<HypotheticalAnswer>,
}

/// A count reported for a group of subjects without saying which ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAnnotation {
    pub group: String,
    pub subjects: usize,
    pub answered_white: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct ChoiceDataset {
    records: Vec<ChoiceRecord>,
    annotations: Vec<GroupAnnotation>,
}

#[derive(Deserialize)]
struct RawDataset {
    records: Vec<ChoiceRecord>,
    #[serde(default)]
    annotations: Vec<GroupAnnotation>,
}

impl TryFrom<RawDataset> for ChoiceDataset {
    type Error = CoreError;

    fn try_from(raw: RawDataset) -> Result<ChoiceDataset> {
        let mut ds = ChoiceDataset::new(raw.records)?;
        ds.annotations = raw.annotations;
        Ok(ds)
    }
}

impl ChoiceDataset {
    pub fn new(records: Vec<ChoiceRecord>) -> Result<ChoiceDataset> {
        let mut seen = HashSet::new();
        for r in &records {
            if r.subject_id.trim().is_empty() {
                return Err(CoreError::Dataset("empty subject id".into()));
            }
            if !seen.insert(r.subject_id.as_str()) {
                return Err(CoreError::Dataset(format!("duplicate subject id {:?}", r.subject_id)));
            }
        }
        Ok(ChoiceDataset {
            records,
            annotations: Vec::new(),
        })
    }

    /// One synthetic subject per rule, ids `s01`, `s02`, ...
    pub fn from_rules(rules: impl IntoIterator<Item = DecisionRule>) -> ChoiceDataset {
        let records = rules
            .into_iter()
            .enumerate()
            .map(|(i, rule)| ChoiceRecord {
                subject_id: format!("s{:02}", i + 1),
                rule,
                hypothetical_answer: None,
            })
            .collect();
        ChoiceDataset::new(records).expect("generated ids are unique")
    }

    /// Parses CSV with header `subject_id,rule,hypothetical_answer`; the last
    /// column may be empty or absent.
    pub fn from_csv_reader(reader: impl Read) -> Result<ChoiceDataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| CoreError::Dataset(e.to_string()))?.clone();
        for required in ["subject_id", "rule"] {
            if !headers.iter().any(|h| h == required) {
                return Err(CoreError::Dataset(format!("missing column {required:?}")));
            }
        }
        let records = rdr
            .deserialize()
            .enumerate()
            .map(|(i, row)| row.map_err(|e| CoreError::Dataset(format!("row {}: {e}", i + 2))))
            .collect::<Result<Vec<ChoiceRecord>>>()?;
        ChoiceDataset::new(records)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<ChoiceDataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| CoreError::Dataset(format!("{}: {e}", path.display())))?;
        ChoiceDataset::from_csv_reader(file)
    }

    /// The 27 choices from the original session, with the reported
    /// questionnaire counts attached as group annotations.
    pub fn bundled() -> ChoiceDataset {
        let mut ds = ChoiceDataset::from_csv_reader(BUNDLED_CSV.as_bytes()).expect("bundled dataset parses");
        ds.annotations = vec![
            GroupAnnotation {
                group: "aWWd".into(),
                subjects: 17,
                answered_white: 15,
            },
            GroupAnnotation {
                group: "S".into(),
                subjects: 9,
                answered_white: 2,
            },
        ];
        ds
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            wtr.serialize(r).map_err(|e| CoreError::Dataset(e.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| CoreError::Dataset(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CoreError::Dataset(e.to_string()))
    }

    pub fn records(&self) -> &[ChoiceRecord] {
        &self.records
    }

    pub fn annotations(&self) -> &[GroupAnnotation] {
        &self.annotations
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = DecisionRule> + '_ {
        self.records.iter().map(|r| r.rule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_has_27_unique_subjects() {
        let ds = ChoiceDataset::bundled();
        assert_eq!(ds.len(), 27);
        assert_eq!(ds.annotations().len(), 2);
        assert!(ds.records().iter().all(|r| r.hypothetical_answer.is_none()));
    }

    #[test]
    fn csv_round_trip_with_answers() {
        let text = "subject_id,rule,hypothetical_answer\na,GWWY,White\nb,GGYY,Green or Yellow\nc,WWWW,\n";
        let ds = ChoiceDataset::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(ds.records()[1].hypothetical_answer, Some(HypotheticalAnswer::GreenOrYellow));
        assert_eq!(ds.records()[2].hypothetical_answer, None);
        let back = ChoiceDataset::from_csv_reader(ds.to_csv().unwrap().as_bytes()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = "subject_id,rule,hypothetical_answer\na,GWWY,\na,GGYY,\n";
        assert!(ChoiceDataset::from_csv_reader(dup.as_bytes()).is_err());
        let bad_rule = "subject_id,rule,hypothetical_answer\na,GWXY,\n";
        assert!(ChoiceDataset::from_csv_reader(bad_rule.as_bytes()).is_err());
        let no_rule = "subject_id,answer\na,White\n";
        assert!(ChoiceDataset::from_csv_reader(no_rule.as_bytes()).is_err());
    }
}
