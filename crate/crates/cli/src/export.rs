//! CSV artifacts.
//!
//! Every file starts with a `# cmca <kind> v<version>` comment line followed
//! by an RFC 4180 table. Floats use the shortest representation that parses
//! back to the same value.

use cmca_core::alpha::AlphaTrace;
use cmca_core::cmca::CategoryLoadings;
use cmca_core::dataio::CategoryVocabulary;
use nalgebra::DMatrix;

pub const SCHEMA_VERSION: u32 = 1;

pub fn float(x: f64) -> String {
    format!("{x}")
}

pub fn component_names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

fn table(kind: &str, header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = format!("# cmca {kind} v{SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header).expect("writing to memory");
        for row in rows {
            w.write_record(row).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    out
}

fn with_components(mut head: Vec<String>, prefix: &str, k: usize) -> Vec<String> {
    head.extend(component_names(prefix, k));
    head
}

/// Row ids and group labels aligned with the rows of `coords`.
pub struct RowSet<'a> {
    pub ids: Vec<usize>,
    pub groups: Vec<&'a str>,
    pub coords: DMatrix<f64>,
}

/// `row_id,group,<prefix>1..<prefix>K′`.
pub fn rows_csv(prefix: &str, set: &RowSet) -> Vec<u8> {
    let header = with_components(
        vec!["row_id".into(), "group".into()],
        prefix,
        set.coords.ncols(),
    );
    let rows: Vec<Vec<String>> = set
        .coords
        .row_iter()
        .enumerate()
        .map(|(r, coords)| {
            let mut rec = vec![set.ids[r].to_string(), set.groups[r].to_string()];
            rec.extend(coords.iter().map(|&x| float(x)));
            rec
        })
        .collect();
    table("rows", &header, &rows)
}

/// `variable,level,zero_frequency,<prefix>1..`, one line per category.
pub fn categories_csv(
    prefix: &str,
    vocab: &CategoryVocabulary,
    values: &DMatrix<f64>,
    zero_frequency: &[bool],
) -> Vec<u8> {
    let header = with_components(
        vec!["variable".into(), "level".into(), "zero_frequency".into()],
        prefix,
        values.ncols(),
    );
    let rows: Vec<Vec<String>> = vocab
        .entries()
        .iter()
        .enumerate()
        .map(|(k, (var, level))| {
            let mut rec = vec![var.clone(), level.clone(), zero_frequency[k].to_string()];
            rec.extend(values.row(k).iter().map(|&x| float(x)));
            rec
        })
        .collect();
    table("categories", &header, &rows)
}

/// `kind,variable,level,cPC1..`. The first line has kind `eigenvalue`, then
/// one `category` line per vocabulary entry and one `variable_total` line
/// per variable.
pub fn loadings_csv(
    eigenvalues: &[f64],
    vocab: &CategoryVocabulary,
    l: &CategoryLoadings,
) -> Vec<u8> {
    let k = eigenvalues.len();
    let header = with_components(
        vec!["kind".into(), "variable".into(), "level".into()],
        "cPC",
        k,
    );
    let mut rows = Vec::new();
    let mut ev = vec!["eigenvalue".to_string(), String::new(), String::new()];
    ev.extend(eigenvalues.iter().map(|&x| float(x)));
    rows.push(ev);
    for (c, (var, level)) in vocab.entries().iter().enumerate() {
        let mut rec = vec!["category".to_string(), var.clone(), level.clone()];
        rec.extend(l.per_category().row(c).iter().map(|&x| float(x)));
        rows.push(rec);
    }
    for (v, var) in l.variables().iter().enumerate() {
        let mut rec = vec!["variable_total".to_string(), var.clone(), String::new()];
        rec.extend(l.per_variable_total().row(v).iter().map(|&x| float(x)));
        rows.push(rec);
    }
    table("loadings", &header, &rows)
}

/// `component,eigenvalue`.
pub fn eigenvalues_csv(eigenvalues: &[f64]) -> Vec<u8> {
    let rows: Vec<Vec<String>> = eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &x)| vec![(j + 1).to_string(), float(x)])
        .collect();
    table(
        "eigenvalues",
        &["component".into(), "eigenvalue".into()],
        &rows,
    )
}

/// `t,alpha,numerator,denominator`; step 0 has empty ratio terms.
pub fn trace_csv(trace: &AlphaTrace) -> Vec<u8> {
    let mut out = format!("# cmca alpha_trace v{SCHEMA_VERSION}\n").into_bytes();
    trace.write_csv(&mut out).expect("writing to memory");
    out
}

/// One sweep grid point, successful or not.
pub struct SweepLine {
    pub alpha: f64,
    pub outcome: Result<(f64, Option<f64>, f64, f64), String>,
}

/// `alpha,status,lambda1,lambda2,target_variance,background_variance,error`.
pub fn sweep_csv(lines: &[SweepLine]) -> Vec<u8> {
    let header: Vec<String> = [
        "alpha",
        "status",
        "lambda1",
        "lambda2",
        "target_variance",
        "background_variance",
        "error",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| match &l.outcome {
            Ok((l1, l2, vt, vb)) => vec![
                float(l.alpha),
                "ok".into(),
                float(*l1),
                l2.map(float).unwrap_or_default(),
                float(*vt),
                float(*vb),
                String::new(),
            ],
            Err(kind) => vec![
                float(l.alpha),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                kind.clone(),
            ],
        })
        .collect();
    table("sweep", &header, &rows)
}
