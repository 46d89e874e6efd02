//! Score files: `#` config header, then
//! `t,beta_aggregate,beta_h1..beta_hD,detected,warmup`.

use std::io::Write;

use anyhow::{bail, Context, Result};

/// One output row; `per_horizon[d]` is empty when no forecast targeted `t`
/// at horizon `d + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub t: usize,
    pub aggregate: f64,
    pub per_horizon: Vec<Option<f64>>,
    pub detected: bool,
    pub warmup: bool,
}

pub fn write_columns<W: Write>(out: &mut W, horizons: usize) -> std::io::Result<()> {
    write!(out, "t,beta_aggregate")?;
    for d in 1..=horizons {
        write!(out, ",beta_h{d}")?;
    }
    writeln!(out, ",detected,warmup")
}

pub fn write_row<W: Write>(out: &mut W, row: &ScoreRow) -> std::io::Result<()> {
    write!(out, "{},{}", row.t, row.aggregate)?;
    for p in &row.per_horizon {
        match p {
            Some(p) => write!(out, ",{p}")?,
            None => write!(out, ",")?,
        }
    }
    writeln!(out, ",{},{}", u8::from(row.detected), u8::from(row.warmup))
}

/// The columns of a score file that evaluation needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub t: Vec<usize>,
    pub beta: Vec<f64>,
    pub warmup: Vec<bool>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

fn flag(cell: &str, line: u64, column: &str) -> Result<bool> {
    match cell {
        "0" => Ok(false),
        "1" => Ok(true),
        other => bail!("line {line}: column `{column}` must be 0 or 1, got `{other}`"),
    }
}

pub fn parse_scores(text: &str) -> Result<ScoreTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().context("reading score header")?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("score file has no `{name}` column"))
    };
    let (t_col, beta_col, warm_col) = (find("t")?, find("beta_aggregate")?, find("warmup")?);
    let mut table = ScoreTable::default();
    for record in rdr.records() {
        let record = record.context("reading score row")?;
        let line = record.position().map_or(0, |p| p.line());
        let t = record[t_col]
            .parse()
            .with_context(|| format!("line {line}: bad index `{}`", &record[t_col]))?;
        let beta: f64 = record[beta_col]
            .parse()
            .with_context(|| format!("line {line}: bad p-value `{}`", &record[beta_col]))?;
        if !(0.0..=1.0).contains(&beta) {
            bail!("line {line}: p-value {beta} outside [0, 1]");
        }
        table.t.push(t);
        table.beta.push(beta);
        table.warmup.push(flag(&record[warm_col], line, "warmup")?);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = [
            ScoreRow {
                t: 0,
                aggregate: 1.0,
                per_horizon: vec![None, None],
                detected: false,
                warmup: true,
            },
            ScoreRow {
                t: 1,
                aggregate: 0.005,
                per_horizon: vec![Some(0.005), None],
                detected: true,
                warmup: false,
            },
        ];
        let mut buf = b"# method = \"w1-acas\"\n".to_vec();
        write_columns(&mut buf, 2).unwrap();
        for r in &rows {
            write_row(&mut buf, r).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("t,beta_aggregate,beta_h1,beta_h2,detected,warmup\n0,1,,,0,1\n1,0.005,0.005,,1,0\n"));
        let table = parse_scores(&text).unwrap();
        assert_eq!(table.t, vec![0, 1]);
        assert_eq!(table.beta, vec![1.0, 0.005]);
        assert_eq!(table.warmup, vec![true, false]);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let err = parse_scores("t,beta_aggregate,detected,warmup\n0,1,0,0\n1,x,0,0\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 3"));
        assert!(parse_scores("t,beta,warmup\n").is_err());
        assert!(parse_scores("t,beta_aggregate,warmup\n0,1.5,0\n").is_err());
    }
}
