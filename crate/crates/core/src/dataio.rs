//! Categorical CSV ingestion, level pooling, and target/background splitting.
//!
//! Missing responses are kept as an ordinary level (the missing code, `"99"` by
//! default) rather than imputed or dropped.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MISSING_CODE: &str = "99";

/// Cell values that are normalized to the missing code at load time.
pub const MISSING_ALIASES: &[&str] = &[
    "", "NA", "N/A", "n/a", "na", "NaN", "nan", "null", "NULL", ".", "-", "k.A.", "ND", "NR",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSchema {
    pub name: String,
    pub levels: Vec<String>,
    pub missing_code: String,
}

impl VariableSchema {
    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// Source level to pooled level, for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecodeRule {
    pub variable: String,
    pub mapping: BTreeMap<String, String>,
}

impl RecodeRule {
    /// Builds a rule from `pooled level -> source levels` groups.
    pub fn from_pools(variable: &str, pools: &BTreeMap<String, Vec<String>>) -> Self {
        let mapping = pools
            .iter()
            .flat_map(|(to, froms)| froms.iter().map(move |f| (f.clone(), to.clone())))
            .collect();
        Self {
            variable: variable.to_string(),
            mapping,
        }
    }
}

/// JSON document describing the variables of a survey extract.
///
/// ```json
/// {
///   "group_column": "party",
///   "missing_code": "99",
///   "variables": [
///     { "name": "lrscale",
///       "levels": ["0","1","2","3","4","5","6","7","8","9","10"],
///       "pools": { "1": ["0","1"], "2": ["2","3"], "3": ["4","5","6"],
///                  "4": ["7","8"], "5": ["9","10"] } },
///     { "name": "euftf" }
///   ]
/// }
/// ```
///
/// An empty `variables` list treats every non-group column as a variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecodeSpec {
    pub group_column: String,
    #[serde(default = "default_missing_code")]
    pub missing_code: String,
    /// Extra cell values treated as missing, on top of [`MISSING_ALIASES`].
    #[serde(default)]
    pub missing_aliases: Vec<String>,
    #[serde(default)]
    pub variables: Vec<VariableSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    /// Accepted source levels; inferred from the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
    /// Pooled level -> source levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pools: Option<BTreeMap<String, Vec<String>>>,
}

fn default_missing_code() -> String {
    DEFAULT_MISSING_CODE.to_string()
}

impl RecodeSpec {
    /// A spec that accepts every non-group column with inferred levels.
    pub fn infer(group_column: &str) -> Self {
        Self {
            group_column: group_column.to_string(),
            missing_code: default_missing_code(),
            missing_aliases: Vec::new(),
            variables: Vec::new(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::RecodeSpec(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn rules(&self) -> Vec<RecodeRule> {
        self.variables
            .iter()
            .filter_map(|v| v.pools.as_ref().map(|p| RecodeRule::from_pools(&v.name, p)))
            .collect()
    }

    fn is_missing(&self, cell: &str) -> bool {
        MISSING_ALIASES.contains(&cell) || self.missing_aliases.iter().any(|a| a == cell)
    }
}

/// A p x d grid of categorical responses plus a group label per row.
///
/// Cells are stored as indices into their variable's `levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalTable {
    schemas: Vec<VariableSchema>,
    cells: Vec<u32>,
    group_column: String,
    groups: Vec<String>,
    row_ids: Vec<usize>,
}

impl CategoricalTable {
    /// Builds a table from text cells; levels are inferred and sorted.
    pub fn from_rows<S: AsRef<str>>(
        variables: &[S],
        rows: &[Vec<S>],
        group_column: &str,
        groups: &[S],
        missing_code: &str,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        if variables.is_empty() {
            return Err(Error::HeaderMismatch("no variables".into()));
        }
        if groups.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} group labels",
                rows.len(),
                groups.len()
            )));
        }
        let d = variables.len();
        let mut text = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row has {} cells, expected {d}",
                    row.len()
                )));
            }
            text.extend(row.iter().map(|c| c.as_ref().to_string()));
        }
        let names: Vec<String> = variables.iter().map(|v| v.as_ref().to_string()).collect();
        let groups = groups.iter().map(|g| g.as_ref().to_string()).collect();
        Ok(Self::from_text_cells(
            names,
            text,
            group_column.to_string(),
            groups,
            missing_code,
        ))
    }

    fn from_text_cells(
        names: Vec<String>,
        text: Vec<String>,
        group_column: String,
        groups: Vec<String>,
        missing_code: &str,
    ) -> Self {
        let d = names.len();
        let p = groups.len();
        let mut schemas: Vec<VariableSchema> = names
            .into_iter()
            .enumerate()
            .map(|(v, name)| {
                let observed: BTreeSet<&str> = (0..p).map(|r| text[r * d + v].as_str()).collect();
                VariableSchema {
                    name,
                    levels: sorted_levels(observed.into_iter().map(str::to_string).collect()),
                    missing_code: missing_code.to_string(),
                }
            })
            .collect();
        let lookups: Vec<HashMap<String, u32>> = schemas
            .iter_mut()
            .map(|s| {
                s.levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), i as u32))
                    .collect()
            })
            .collect();
        let cells = text
            .iter()
            .enumerate()
            .map(|(i, c)| lookups[i % d][c])
            .collect();
        Self {
            schemas,
            cells,
            group_column,
            groups,
            row_ids: (0..p).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.groups.len()
    }

    pub fn n_vars(&self) -> usize {
        self.schemas.len()
    }

    pub fn schemas(&self) -> &[VariableSchema] {
        &self.schemas
    }

    pub fn group_column(&self) -> &str {
        &self.group_column
    }

    pub fn group(&self, row: usize) -> &str {
        &self.groups[row]
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    /// Position of `row` in the table it was loaded as.
    pub fn row_id(&self, row: usize) -> usize {
        self.row_ids[row]
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn level_index(&self, row: usize, var: usize) -> usize {
        self.cells[row * self.n_vars() + var] as usize
    }

    pub fn level(&self, row: usize, var: usize) -> &str {
        &self.schemas[var].levels[self.level_index(row, var)]
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name == name)
    }

    /// Row counts per group label, sorted by label.
    pub fn group_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.groups {
            *counts.entry(g.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Group labels in order of first appearance.
    pub fn group_labels(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.groups
            .iter()
            .filter(|g| seen.insert(g.as_str()))
            .cloned()
            .collect()
    }

    /// Rows whose group label equals `label`, with the full schema retained.
    pub fn subset(&self, label: &str) -> Result<CategoricalTable> {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&r| self.groups[r] == label)
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyGroup(label.to_string()));
        }
        Ok(self.select_rows(&rows))
    }

    fn select_rows(&self, rows: &[usize]) -> CategoricalTable {
        let d = self.n_vars();
        let mut cells = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            cells.extend_from_slice(&self.cells[r * d..(r + 1) * d]);
        }
        CategoricalTable {
            schemas: self.schemas.clone(),
            cells,
            group_column: self.group_column.clone(),
            groups: rows.iter().map(|&r| self.groups[r].clone()).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
        }
    }
}

impl CategoricalTable {
    /// Writes the table back out as CSV, variables first and the group
    /// column last.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.schemas.iter().map(|s| s.name.as_str()).collect();
        header.push(&self.group_column);
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut record: Vec<&str> = (0..self.n_vars()).map(|v| self.level(r, v)).collect();
            record.push(&self.groups[r]);
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Numeric ascending when every level parses as an integer, else lexicographic.
pub fn sorted_levels(mut levels: Vec<String>) -> Vec<String> {
    levels.sort();
    levels.dedup();
    let numeric: Option<Vec<i64>> = levels.iter().map(|l| l.trim().parse().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(i64, String)> = keys.into_iter().zip(levels).collect();
        paired.sort_by(|a, b| match a.0.cmp(&b.0) {
            Ordering::Equal => a.1.cmp(&b.1),
            o => o,
        });
        paired.into_iter().map(|(_, l)| l).collect()
    } else {
        levels
    }
}

/// Reads a categorical CSV file described by `spec`.
pub fn load_csv(path: impl AsRef<Path>, spec: &RecodeSpec) -> Result<CategoricalTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, spec)
}

/// Reads a categorical CSV from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(reader: R, spec: &RecodeSpec) -> Result<CategoricalTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let group_pos = header
        .iter()
        .position(|h| *h == spec.group_column)
        .ok_or_else(|| {
            Error::HeaderMismatch(format!(
                "group column `{}` not in header",
                spec.group_column
            ))
        })?;

    let mut columns = Vec::new();
    let mut accepted: Vec<Option<BTreeSet<String>>> = Vec::new();
    if spec.variables.is_empty() {
        for (i, h) in header.iter().enumerate() {
            if i != group_pos {
                columns.push((i, h.clone()));
                accepted.push(None);
            }
        }
    } else {
        for (i, h) in header.iter().enumerate() {
            if i != group_pos && !spec.variables.iter().any(|v| v.name == *h) {
                return Err(Error::UnknownVariable(h.clone()));
            }
        }
        for v in &spec.variables {
            let pos = header.iter().position(|h| *h == v.name).ok_or_else(|| {
                Error::HeaderMismatch(format!("declared variable `{}` not in header", v.name))
            })?;
            columns.push((pos, v.name.clone()));
            let mut allowed: Option<BTreeSet<String>> = None;
            if let Some(levels) = &v.levels {
                allowed
                    .get_or_insert_with(BTreeSet::new)
                    .extend(levels.iter().cloned());
            }
            if let Some(pools) = &v.pools {
                allowed
                    .get_or_insert_with(BTreeSet::new)
                    .extend(pools.values().flatten().cloned());
            }
            if let Some(a) = allowed.as_mut() {
                a.insert(spec.missing_code.clone());
            }
            accepted.push(allowed);
        }
    }
    if columns.is_empty() {
        return Err(Error::HeaderMismatch("no variable columns".into()));
    }

    let mut text = Vec::new();
    let mut groups = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::HeaderMismatch(format!(
                "record has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for ((pos, name), allowed) in columns.iter().zip(&accepted) {
            let raw = &record[*pos];
            let cell = if spec.is_missing(raw) {
                spec.missing_code.clone()
            } else {
                raw.to_string()
            };
            if let Some(allowed) = allowed {
                if !allowed.contains(&cell) {
                    return Err(Error::UnknownLevel {
                        variable: name.clone(),
                        level: cell,
                    });
                }
            }
            text.push(cell);
        }
        groups.push(record[group_pos].to_string());
    }
    if groups.is_empty() {
        return Err(Error::EmptyTable);
    }
    let names = columns.into_iter().map(|(_, n)| n).collect();
    Ok(CategoricalTable::from_text_cells(
        names,
        text,
        spec.group_column.clone(),
        groups,
        &spec.missing_code,
    ))
}

/// Replaces each cell of the ruled variables by its pooled level.
pub fn apply_recode(table: &CategoricalTable, rules: &[RecodeRule]) -> Result<CategoricalTable> {
    let mut out = table.clone();
    let d = out.n_vars();
    for rule in rules {
        let v = out
            .variable_index(&rule.variable)
            .ok_or_else(|| Error::UnknownVariable(rule.variable.clone()))?;
        let schema = &out.schemas[v];
        let mut new_of_old = Vec::with_capacity(schema.levels.len());
        for level in &schema.levels {
            let target = match rule.mapping.get(level) {
                Some(t) => t.clone(),
                None if *level == schema.missing_code => level.clone(),
                None => {
                    return Err(Error::IncompleteMapping {
                        variable: rule.variable.clone(),
                        level: level.clone(),
                    })
                }
            };
            new_of_old.push(target);
        }
        let observed: BTreeSet<usize> = (0..out.n_rows()).map(|r| out.level_index(r, v)).collect();
        let levels = sorted_levels(observed.iter().map(|&i| new_of_old[i].clone()).collect());
        let remap: Vec<u32> = new_of_old
            .iter()
            .map(|t| levels.iter().position(|l| l == t).unwrap_or(0) as u32)
            .collect();
        for r in 0..out.n_rows() {
            let cell = &mut out.cells[r * d + v];
            *cell = remap[*cell as usize];
        }
        out.schemas[v].levels = levels;
    }
    Ok(out)
}

/// Loads `path` and applies the pooling rules declared in `spec`.
pub fn load_and_recode(path: impl AsRef<Path>, spec: &RecodeSpec) -> Result<CategoricalTable> {
    apply_recode(&load_csv(path, spec)?, &spec.rules())
}

/// Ordered (variable, level) columns shared by every group of one table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryVocabulary {
    variables: Vec<String>,
    entries: Vec<(String, String)>,
    variable_of: Vec<usize>,
    #[serde(skip)]
    index: HashMap<(String, String), usize>,
}

impl CategoryVocabulary {
    /// Every (variable, level) of the table's schemas, variable-major.
    pub fn from_table(table: &CategoricalTable) -> Self {
        let mut entries = Vec::new();
        let mut variable_of = Vec::new();
        for (v, schema) in table.schemas().iter().enumerate() {
            for level in &schema.levels {
                entries.push((schema.name.clone(), level.clone()));
                variable_of.push(v);
            }
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Self {
            variables: table.schemas().iter().map(|s| s.name.clone()).collect(),
            entries,
            variable_of,
            index,
        }
    }

    /// K, the number of category columns.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Index into [`Self::variables`] of column `k`.
    pub fn variable_of(&self, k: usize) -> usize {
        self.variable_of[k]
    }

    pub fn position(&self, variable: &str, level: &str) -> Option<usize> {
        self.index
            .get(&(variable.to_string(), level.to_string()))
            .copied()
    }

    /// `variable=level` labels, one per column.
    pub fn labels(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(v, l)| format!("{v}={l}"))
            .collect()
    }
}

/// Splits `table` into target and background rows over a vocabulary built
/// from the whole table. Rows with other labels are left out of both groups.
pub fn split_groups(
    table: &CategoricalTable,
    target_label: &str,
    background_label: &str,
) -> Result<(CategoricalTable, CategoricalTable, CategoryVocabulary)> {
    if target_label == background_label {
        return Err(Error::DegenerateSplit(target_label.to_string()));
    }
    for label in [target_label, background_label] {
        if !table.groups.iter().any(|g| g == label) {
            return Err(Error::LabelAbsent(label.to_string()));
        }
    }
    let target = table.subset(target_label)?;
    let background = table.subset(background_label)?;
    Ok((target, background, CategoryVocabulary::from_table(table)))
}
