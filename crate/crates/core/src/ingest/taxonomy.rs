use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ingest::ordering::unit_key;

const DEFAULT_TAXONOMY: &str = include_str!("../../data/taxonomy.tsv");

/// Harm categories and the subcategories each one admits.
#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    // keyed by normalized category name
    categories: BTreeMap<String, BTreeSet<String>>,
}

/// Outcome of checking a (category, subcategory) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    UnknownCategory,
    UnknownSubcategory,
}

impl Taxonomy {
    /// Parses `category<TAB>subcategory` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, sub) = line.split_once('\t').ok_or_else(|| {
                Error::Schema(format!("taxonomy line {} has no tab separator", n + 1))
            })?;
            categories
                .entry(unit_key(cat))
                .or_default()
                .insert(unit_key(sub));
        }
        Ok(Taxonomy { categories })
    }

    /// The harm taxonomy bundled with the tool.
    pub fn bundled() -> Self {
        Taxonomy::parse(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn check(&self, category: &str, subcategory: &str) -> Membership {
        match self.categories.get(&unit_key(category)) {
            None => Membership::UnknownCategory,
            Some(subs) if subs.contains(&unit_key(subcategory)) => Membership::Member,
            Some(_) => Membership::UnknownSubcategory,
        }
    }
}
