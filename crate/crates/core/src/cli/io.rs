//! Text formats read and written by the command-line tool.
//!
//! * matrix files: whitespace- or comma-separated numeric rows, `#` comments;
//! * spec files: `key = value` lines, matrix values with rows split by `;`;
//! * zonal tables: CSV `k,kappa,lambda,numer,denom` with exact rationals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::matvar::{MatNormSpec, TypeTag};
use crate::partitions::Partition;
use crate::zonal::{Normalization, ZonalTable};

fn parse_row(line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: '{t}'")))
        })
        .collect()
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("matrix rows have unequal lengths".into()));
    }
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(data.len() / cols, cols, &data))
}

/// Parses a matrix file body.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_row)
        .collect::<Result<Vec<_>>>()?;
    rows_to_matrix(rows)
}

/// Inline matrix: rows separated by `;`.
pub fn parse_inline_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows = text
        .split(';')
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(parse_row)
        .collect::<Result<Vec<_>>>()?;
    rows_to_matrix(rows)
}

fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let v = parse_row(text)?;
    if v.is_empty() {
        return Err(Error::Parse("empty vector".into()));
    }
    Ok(DVector::from_vec(v))
}

/// Matrix normal specification file.
///
/// ```text
/// type = T2          # optional, must agree with the requested type
/// A = 1 0; 0 1       # repeated for T2 and T1half
/// B = 2 0.5; 0.5 1   # repeated for T2
/// alpha = 1 0.5; 0.5 1
/// b = 1 0.5          # rank-one factors, repeated (T1half, T1)
/// A[1,2] = 4 0; 0 4  # T1 grid entries, 1-based
/// ```
pub fn parse_spec(text: &str, tag: TypeTag) -> Result<MatNormSpec> {
    let mut a_list = Vec::new();
    let mut b_list = Vec::new();
    let mut b_vecs = Vec::new();
    let mut alpha = None;
    let mut grid: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let at = |e: Error| Error::Parse(format!("line {}: {e}", no + 1));
        match key {
            "type" => {
                let t: TypeTag = value.parse().map_err(at)?;
                if t != tag {
                    return Err(Error::Parse(format!(
                        "spec file declares type {t}, requested {tag}"
                    )));
                }
            }
            "A" => a_list.push(parse_inline_matrix(value).map_err(at)?),
            "B" => b_list.push(parse_inline_matrix(value).map_err(at)?),
            "b" => b_vecs.push(parse_vector(value).map_err(at)?),
            "alpha" => alpha = Some(parse_inline_matrix(value).map_err(at)?),
            k if k.starts_with("A[") && k.ends_with(']') => {
                let inner = &k[2..k.len() - 1];
                let (i, j) = inner
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("line {}: bad index '{k}'", no + 1)))?;
                let parse_idx = |s: &str| -> Result<usize> {
                    match s.trim().parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(Error::Parse(format!("line {}: bad index '{k}'", no + 1))),
                    }
                };
                grid.insert(
                    (parse_idx(i)?, parse_idx(j)?),
                    parse_inline_matrix(value).map_err(at)?,
                );
            }
            other => {
                return Err(Error::Parse(format!(
                    "line {}: unknown key '{other}'",
                    no + 1
                )))
            }
        }
    }
    let one = |v: Vec<DMatrix<f64>>, what: &str| -> Result<DMatrix<f64>> {
        let mut v = v;
        if v.len() != 1 {
            return Err(Error::Parse(format!(
                "T3 needs exactly one {what}, found {}",
                v.len()
            )));
        }
        Ok(v.remove(0))
    };
    let spec = match tag {
        TypeTag::T3 => MatNormSpec::T3 {
            a: one(a_list, "A")?,
            b: one(b_list, "B")?,
        },
        TypeTag::T2 => {
            let alpha =
                alpha.unwrap_or_else(|| DMatrix::from_element(a_list.len(), b_list.len(), 1.0));
            MatNormSpec::T2 {
                a: a_list,
                b: b_list,
                alpha,
            }
        }
        TypeTag::T1Half => MatNormSpec::T1Half {
            a: a_list,
            b: b_vecs,
        },
        TypeTag::T1 => {
            let r = b_vecs.len();
            let mut a = Vec::with_capacity(r);
            for i in 0..r {
                let mut row = Vec::with_capacity(r);
                for j in 0..r {
                    row.push(grid.remove(&(i, j)).ok_or_else(|| {
                        Error::Parse(format!("T1 spec is missing A[{},{}]", i + 1, j + 1))
                    })?);
                }
                a.push(row);
            }
            if let Some(((i, j), _)) = grid.into_iter().next() {
                return Err(Error::Parse(format!(
                    "A[{},{}] lies outside the {r}x{r} grid",
                    i + 1,
                    j + 1
                )));
            }
            MatNormSpec::T1 { a, b: b_vecs }
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub const TABLE_HEADER: &str = "k,kappa,lambda,numer,denom";

/// CSV rows `(kappa, lambda)` in table order, zero coefficients omitted.
pub fn table_to_csv(table: &ZonalTable) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in table.rows() {
        for (lam, b) in &row.coeffs {
            writeln!(
                out,
                "{},{},{},{},{}",
                table.degree(),
                row.kappa,
                lam,
                b.numer(),
                b.denom()
            )
            .unwrap();
        }
    }
    out
}

/// Reloads a normalization-C table written by [`table_to_csv`] for `m`
/// variables.
pub fn table_from_csv(text: &str, m: usize) -> Result<ZonalTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == TABLE_HEADER => {}
        _ => {
            return Err(Error::Parse(format!(
                "table must start with '{TABLE_HEADER}'"
            )))
        }
    }
    let mut degree = None;
    let mut rows: Vec<(Partition, Vec<(Partition, BigRational)>)> = Vec::new();
    for (no, line) in lines.enumerate() {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!(
                "table row {}: expected 5 fields",
                no + 1
            )));
        }
        let k: usize = f[0]
            .parse()
            .map_err(|_| Error::Parse(format!("table row {}: bad k", no + 1)))?;
        if *degree.get_or_insert(k) != k {
            return Err(Error::Parse("table mixes degrees".into()));
        }
        let kappa: Partition = f[1].parse()?;
        let lambda: Partition = f[2].parse()?;
        let numer: BigInt = f[3]
            .parse()
            .map_err(|_| Error::Parse(format!("table row {}: bad numerator", no + 1)))?;
        let denom: BigInt = f[4]
            .parse()
            .map_err(|_| Error::Parse(format!("table row {}: bad denominator", no + 1)))?;
        if denom == BigInt::from(0) {
            return Err(Error::Parse(format!(
                "table row {}: zero denominator",
                no + 1
            )));
        }
        let b = BigRational::new(numer, denom);
        match rows.last_mut() {
            Some((last, coeffs)) if *last == kappa => coeffs.push((lambda, b)),
            _ => rows.push((kappa, vec![(lambda, b)])),
        }
    }
    let degree = degree.ok_or_else(|| Error::Parse("table has no rows".into()))?;
    ZonalTable::from_rows(degree, m, Normalization::C, rows)
}

/// Header comment and rows of a sample file.
pub fn samples_to_csv(tag: TypeTag, draws: &[DMatrix<f64>], seed: u64, stream: u64) -> String {
    let (m, n) = draws.first().map(|d| d.shape()).unwrap_or((0, 0));
    let mut out = String::new();
    writeln!(
        out,
        "# matrix normal draws: type={tag} m={m} n={n} draws={} seed={seed} stream={stream}",
        draws.len()
    )
    .unwrap();
    writeln!(
        out,
        "# one draw per row, row-major vec(X) = (x11, ..., x1n, ..., xm1, ..., xmn)"
    )
    .unwrap();
    let header: Vec<String> = (1..=m)
        .flat_map(|i| (1..=n).map(move |j| format!("x{i}_{j}")))
        .collect();
    writeln!(out, "{}", header.join(",")).unwrap();
    for d in draws {
        let row: Vec<String> = (0..m)
            .flat_map(|i| (0..n).map(move |j| format!("{:e}", d[(i, j)])))
            .collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zonal::build_zonal_table;

    #[test]
    fn matrix_file_parses() {
        let m = parse_matrix("# comment\n1 2\n3, 4\n\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(parse_matrix("1 2\n3").is_err());
        assert!(parse_matrix("1 x").is_err());
    }

    #[test]
    fn spec_files_parse() {
        let s = parse_spec("type = T3\nA = 4\nB = 1\n", TypeTag::T3).unwrap();
        assert_eq!(
            s,
            MatNormSpec::T3 {
                a: DMatrix::from_element(1, 1, 4.0),
                b: DMatrix::from_element(1, 1, 1.0)
            }
        );
        let t1 = "b = 1 0\nb = 0 1\nA[1,1] = 1\nA[1,2] = 4\nA[2,1] = 4\nA[2,2] = 1\n";
        assert!(matches!(
            parse_spec(t1, TypeTag::T1).unwrap(),
            MatNormSpec::T1 { .. }
        ));
        assert!(parse_spec("type = T2\nA = 1\nB = 1\n", TypeTag::T3).is_err());
        let bad = parse_spec("A = 1\nb = 1 0\n", TypeTag::T1Half).unwrap();
        assert!(matches!(
            bad.assemble_precision(),
            Err(Error::IndefinitePrecision { .. })
        ));
    }

    #[test]
    fn table_csv_round_trip() {
        let t = build_zonal_table(4, 3).unwrap();
        let csv = table_to_csv(&t);
        let back = table_from_csv(&csv, 3).unwrap();
        assert_eq!(table_to_csv(&back), csv);
        back.check_sum_rule().unwrap();
        for (r1, r2) in t.rows().iter().zip(back.rows()) {
            assert_eq!(r1.kappa, r2.kappa);
            assert_eq!(r1.coeffs, r2.coeffs);
        }
    }

    #[test]
    fn degree_one_table() {
        let csv = table_to_csv(&build_zonal_table(1, 2).unwrap());
        assert_eq!(csv, "k,kappa,lambda,numer,denom\n1,1,1,1,1\n");
    }
}
