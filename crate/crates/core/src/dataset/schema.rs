use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: usize,
    pub name: String,
}

/// Ordered feature names, the label column and the category table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    names: Vec<String>,
    label_name: String,
    categories: Vec<Category>,
}

/// The nineteen features whose predictive power score against the traffic
/// category exceeded 0.3 on CICDarknet2020, with their reference scores.
pub const REFERENCE_PPS_SCORES: [(&str, f64); 19] = [
    ("Idle_Max", 0.471),
    ("Idle_Mean", 0.444),
    ("Idle_Min", 0.430),
    ("Packet_Length_Max", 0.399),
    ("Packet_Length_Mean", 0.383),
    ("Average_Packet_Size", 0.379),
    ("Flow_IAT_Max", 0.372),
    ("Fwd_IAT_Max", 0.363),
    ("Bwd_Packet_Length_Max", 0.349),
    ("Fwd_Packet_Length_Max", 0.345),
    ("Total_Length_of_Bwd_Packet", 0.340),
    ("Bwd_Packet_Length_Mean", 0.338),
    ("Bwd_Segment_Size_Avg", 0.338),
    ("Total_Length_of_Fwd_Packet", 0.338),
    ("Packet_Length_Std", 0.330),
    ("Packet_Length_Variance", 0.330),
    ("Fwd_Header_Length", 0.328),
    ("Subflow_Bwd_Bytes", 0.320),
    ("Fwd_Packet_Length_Mean", 0.313),
];

// CICFlowMeter columns with the identifiers, timestamp and always-constant
// flag counters removed.
const CIC_DARKNET_FEATURES: [&str; 61] = [
    "Flow_Duration",
    "Total_Fwd_Packet",
    "Total_Bwd_packets",
    "Total_Length_of_Fwd_Packet",
    "Total_Length_of_Bwd_Packet",
    "Fwd_Packet_Length_Max",
    "Fwd_Packet_Length_Min",
    "Fwd_Packet_Length_Mean",
    "Fwd_Packet_Length_Std",
    "Bwd_Packet_Length_Max",
    "Bwd_Packet_Length_Min",
    "Bwd_Packet_Length_Mean",
    "Bwd_Packet_Length_Std",
    "Flow_Bytes_s",
    "Flow_Packets_s",
    "Flow_IAT_Mean",
    "Flow_IAT_Std",
    "Flow_IAT_Max",
    "Flow_IAT_Min",
    "Fwd_IAT_Total",
    "Fwd_IAT_Mean",
    "Fwd_IAT_Std",
    "Fwd_IAT_Max",
    "Fwd_IAT_Min",
    "Bwd_IAT_Total",
    "Bwd_IAT_Mean",
    "Bwd_IAT_Std",
    "Bwd_IAT_Max",
    "Bwd_IAT_Min",
    "Fwd_Header_Length",
    "Bwd_Header_Length",
    "Fwd_Packets_s",
    "Bwd_Packets_s",
    "Packet_Length_Min",
    "Packet_Length_Max",
    "Packet_Length_Mean",
    "Packet_Length_Std",
    "Packet_Length_Variance",
    "FIN_Flag_Count",
    "SYN_Flag_Count",
    "PSH_Flag_Count",
    "ACK_Flag_Count",
    "Down_Up_Ratio",
    "Average_Packet_Size",
    "Fwd_Segment_Size_Avg",
    "Bwd_Segment_Size_Avg",
    "Subflow_Fwd_Packets",
    "Subflow_Fwd_Bytes",
    "Subflow_Bwd_Packets",
    "Subflow_Bwd_Bytes",
    "FWD_Init_Win_Bytes",
    "Bwd_Init_Win_Bytes",
    "Fwd_Seg_Size_Min",
    "Active_Mean",
    "Active_Std",
    "Active_Max",
    "Active_Min",
    "Idle_Mean",
    "Idle_Std",
    "Idle_Max",
    "Idle_Min",
];

const DARKNET_CATEGORIES: [&str; 11] = [
    "Audio-Stream",
    "Audio-Stream-Crypto",
    "Browsing",
    "Chat",
    "Email",
    "P2P",
    "File-Transfer",
    "File-Transfer-Crypto",
    "Video-Stream",
    "Video-Stream-Crypto",
    "VOIP",
];

/// Lowercases and collapses every run of non-alphanumerics to `_`, so that
/// `Flow IAT Max`, `flow_iat_max` and `Flow-IAT-Max` all compare equal.
pub fn canonical_name(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending = false;
    for ch in s.trim().chars() {
        if ch.is_alphanumeric() {
            if pending && !out.is_empty() {
                out.push('_');
            }
            pending = false;
            out.extend(ch.to_lowercase());
        } else {
            pending = true;
        }
    }
    out
}

impl FeatureSchema {
    pub fn new(names: Vec<String>, label_name: impl Into<String>, categories: Vec<Category>) -> Result<Self> {
        let label_name = label_name.into();
        if names.is_empty() {
            return Err(DatasetError::InvalidSchema("no features".into()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.trim().is_empty() {
                return Err(DatasetError::InvalidSchema("empty feature name".into()));
            }
            if !seen.insert(n.as_str()) {
                return Err(DatasetError::InvalidSchema(format!("duplicate feature `{n}`")));
            }
        }
        if label_name.trim().is_empty() {
            return Err(DatasetError::InvalidSchema("empty label name".into()));
        }
        if names.contains(&label_name) {
            return Err(DatasetError::InvalidSchema(format!("label `{label_name}` is also a feature")));
        }
        if categories.is_empty() {
            return Err(DatasetError::InvalidSchema("no categories".into()));
        }
        for (i, c) in categories.iter().enumerate() {
            if c.id != i {
                return Err(DatasetError::InvalidSchema(format!(
                    "category ids must be 0..{} in order, found {} at position {i}",
                    categories.len(),
                    c.id
                )));
            }
        }
        Ok(Self { names, label_name, categories })
    }

    /// Categories named in order, with ids 0..K-1.
    pub fn with_category_names<S: AsRef<str>>(
        names: Vec<String>,
        label_name: impl Into<String>,
        categories: &[S],
    ) -> Result<Self> {
        let cats = categories
            .iter()
            .enumerate()
            .map(|(id, n)| Category { id, name: n.as_ref().to_string() })
            .collect();
        Self::new(names, label_name, cats)
    }

    /// The 61-feature CICDarknet2020 layout with the eleven traffic categories.
    pub fn cic_darknet() -> Self {
        Self::with_category_names(
            CIC_DARKNET_FEATURES.iter().map(|s| s.to_string()).collect(),
            "Label",
            &DARKNET_CATEGORIES,
        )
        .expect("built-in schema is valid")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn indices_of(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.feature_index(n).ok_or_else(|| DatasetError::UnknownFeature(n.clone())))
            .collect()
    }

    pub(crate) fn select(&self, idx: &[usize]) -> FeatureSchema {
        FeatureSchema {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            label_name: self.label_name.clone(),
            categories: self.categories.clone(),
        }
    }

    /// Resolves a label cell: either a numeric id or a category name
    /// (compared after [`canonical_name`]).
    pub fn parse_label(&self, raw: &str) -> Option<usize> {
        let raw = raw.trim();
        if let Ok(id) = raw.parse::<usize>() {
            return (id < self.categories.len()).then_some(id);
        }
        let key = canonical_name(raw);
        if key.is_empty() {
            return None;
        }
        self.categories.iter().find(|c| canonical_name(&c.name) == key).map(|c| c.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_expresses_every_reference_feature() {
        let s = FeatureSchema::cic_darknet();
        assert_eq!(s.n_features(), 61);
        assert_eq!(s.n_categories(), 11);
        for (name, _) in REFERENCE_PPS_SCORES {
            assert!(s.feature_index(name).is_some(), "{name} missing");
        }
    }

    #[test]
    fn rejects_duplicates_and_gaps() {
        let dup = FeatureSchema::with_category_names(vec!["a".into(), "a".into()], "y", &["x"]);
        assert!(matches!(dup, Err(DatasetError::InvalidSchema(_))));
        let gap = FeatureSchema::new(
            vec!["a".into()],
            "y",
            vec![Category { id: 0, name: "p".into() }, Category { id: 2, name: "q".into() }],
        );
        assert!(matches!(gap, Err(DatasetError::InvalidSchema(_))));
        let empty = FeatureSchema::with_category_names(vec![" ".into()], "y", &["x"]);
        assert!(empty.is_err());
    }

    #[test]
    fn label_parsing_accepts_ids_and_names() {
        let s = FeatureSchema::cic_darknet();
        assert_eq!(s.parse_label("3"), Some(3));
        assert_eq!(s.parse_label("voip"), Some(10));
        assert_eq!(s.parse_label("File Transfer"), Some(6));
        assert_eq!(s.parse_label("11"), None);
        assert_eq!(s.parse_label(""), None);
    }

    #[test]
    fn canonical_names() {
        assert_eq!(canonical_name(" Flow IAT Max "), "flow_iat_max");
        assert_eq!(canonical_name("Flow Bytes/s"), "flow_bytes_s");
        assert_eq!(canonical_name("Idle_Max"), "idle_max");
    }
}
