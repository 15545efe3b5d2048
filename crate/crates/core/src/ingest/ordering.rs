use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_ORDER: &str = include_str!("../../data/default_severity_order.txt");

/// Case- and whitespace-insensitive key used to match unit names.
pub(crate) fn unit_key(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// A total order over severity-ranked units, least severe first.
///
/// Position `j` (zero-based here) is the severity rank. Numeric labels read
/// from a `name=rank` file are kept so they can feed the numeric Gini, but
/// the ordinal metrics never look at them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "OrderingRepr", into = "OrderingRepr")]
pub struct SeverityOrdering {
    units: Vec<String>,
    labels: Option<Vec<f64>>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct OrderingRepr {
    units: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<f64>>,
}

impl TryFrom<OrderingRepr> for SeverityOrdering {
    type Error = Error;

    fn try_from(repr: OrderingRepr) -> Result<Self> {
        let ordering = SeverityOrdering::new(repr.units)?;
        match repr.labels {
            Some(labels) => ordering.with_labels(labels),
            None => Ok(ordering),
        }
    }
}

impl From<SeverityOrdering> for OrderingRepr {
    fn from(o: SeverityOrdering) -> Self {
        OrderingRepr {
            units: o.units,
            labels: o.labels,
        }
    }
}

impl PartialEq for SeverityOrdering {
    fn eq(&self, other: &Self) -> bool {
        self.units == other.units && self.labels == other.labels
    }
}

impl SeverityOrdering {
    pub fn new<I, S>(units: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let units: Vec<String> = units
            .into_iter()
            .map(|u| u.into().trim().to_string())
            .collect();
        if units.len() < 2 {
            return Err(Error::Ordering(format!(
                "at least two units are required, got {}",
                units.len()
            )));
        }
        let mut index = HashMap::with_capacity(units.len());
        for (pos, unit) in units.iter().enumerate() {
            if unit.is_empty() {
                return Err(Error::Ordering(format!("unit at position {} is empty", pos + 1)));
            }
            if index.insert(unit_key(unit), pos).is_some() {
                return Err(Error::Ordering(format!("duplicate unit {unit:?}")));
            }
        }
        Ok(SeverityOrdering {
            units,
            labels: None,
            index,
        })
    }

    /// Builds an ordering from `(unit, label)` pairs, sorting by label.
    /// Equal labels are rejected because they do not define a total order.
    pub fn from_labeled<S: Into<String>>(pairs: Vec<(S, f64)>) -> Result<Self> {
        let mut pairs: Vec<(String, f64)> = pairs.into_iter().map(|(u, l)| (u.into(), l)).collect();
        if let Some((u, _)) = pairs.iter().find(|(_, l)| !l.is_finite()) {
            return Err(Error::Ordering(format!("label for {u:?} is not a finite number")));
        }
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        for w in pairs.windows(2) {
            if w[0].1 == w[1].1 {
                return Err(Error::Ordering(format!(
                    "{:?} and {:?} share label {}; ranks must be distinct",
                    w[0].0, w[1].0, w[0].1
                )));
            }
        }
        let labels = pairs.iter().map(|p| p.1).collect();
        SeverityOrdering::new(pairs.into_iter().map(|p| p.0))?.with_labels(labels)
    }

    fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.units.len() {
            return Err(Error::Ordering(format!(
                "{} labels for {} units",
                labels.len(),
                self.units.len()
            )));
        }
        if labels.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Ordering("labels must be strictly increasing".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Parses the plain-text config: one unit per line, least severe first,
    /// or `unit=rank` lines (ranks only decide the order). Blank lines and
    /// `#` comments are skipped. The two styles cannot be mixed.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        if lines.is_empty() {
            return Err(Error::EmptyInput("severity ordering has no units".into()));
        }
        let keyed = lines.iter().filter(|l| l.contains('=')).count();
        if keyed == 0 {
            return SeverityOrdering::new(lines);
        }
        if keyed != lines.len() {
            return Err(Error::Ordering(
                "mix of plain and key=rank lines; use one style".into(),
            ));
        }
        let mut pairs = Vec::with_capacity(lines.len());
        for line in lines {
            let (name, rank) = line.rsplit_once('=').expect("line contains '='");
            let rank: f64 = rank.trim().parse().map_err(|_| {
                Error::Ordering(format!("rank {:?} for {:?} is not a number", rank.trim(), name.trim()))
            })?;
            pairs.push((name.trim().to_string(), rank));
        }
        SeverityOrdering::from_labeled(pairs)
    }

    /// The stakeholder ordering shipped with the tool (artists first,
    /// general public last).
    pub fn default_stakeholders() -> Self {
        SeverityOrdering::parse(DEFAULT_ORDER).expect("bundled severity ordering is valid")
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Zero-based severity rank of `unit`, matched case-insensitively.
    pub fn position(&self, unit: &str) -> Option<usize> {
        self.index.get(&unit_key(unit)).copied()
    }

    /// Drops numeric labels, leaving only the order.
    pub fn without_labels(&self) -> Self {
        SeverityOrdering {
            labels: None,
            ..self.clone()
        }
    }

    /// Exchanges the units at ranks `r` and `r + 1`. Labels stay attached to
    /// their positions, so the label sequence remains increasing.
    pub fn swap_adjacent(&self, r: usize) -> Result<Self> {
        if r + 1 >= self.units.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot swap ranks {} and {} of {} units",
                r + 1,
                r + 2,
                self.units.len()
            )));
        }
        let mut units = self.units.clone();
        units.swap(r, r + 1);
        let mut out = SeverityOrdering::new(units)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    pub fn reversed(&self) -> Self {
        let mut out = SeverityOrdering::new(self.units.iter().rev().cloned())
            .expect("reversal of a valid ordering is valid");
        out.labels = self.labels.clone();
        out
    }

    /// Checks that `other` orders exactly the same set of units.
    pub fn check_same_units(&self, other: &SeverityOrdering) -> std::result::Result<(), UnitMismatch> {
        let missing: Vec<String> = self
            .units
            .iter()
            .filter(|u| other.position(u).is_none())
            .cloned()
            .collect();
        let extra: Vec<String> = other
            .units
            .iter()
            .filter(|u| self.position(u).is_none())
            .cloned()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(UnitMismatch { missing, extra })
        }
    }

    /// Renders the ordering back into the config format accepted by
    /// [`SeverityOrdering::parse`].
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        match &self.labels {
            Some(labels) => {
                for (u, l) in self.units.iter().zip(labels) {
                    out.push_str(&format!("{u}={l}\n"));
                }
            }
            None => {
                for u in &self.units {
                    out.push_str(u);
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Units present in one ordering but not the other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitMismatch {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
}

impl fmt::Display for UnitMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a permutation of the current units")?;
        if !self.missing.is_empty() {
            write!(f, "; missing: {}", self.missing.join(", "))?;
        }
        if !self.extra.is_empty() {
            write!(f, "; unexpected: {}", self.extra.join(", "))?;
        }
        Ok(())
    }
}
