//! Design matrices and the tabular data they are built from.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the all-ones column.
pub const INTERCEPT: &str = "intercept";

/// Divisor applied to raw count covariates (tweets, follower counts).
pub const COUNT_SCALE: f64 = 1e6;

/// Columns scaled by [`COUNT_SCALE`] unless told otherwise.
pub const COUNT_COLUMNS: [&str; 4] = ["tweets", "tweets_posted", "social_capital", "followers_count"];

/// Dense row-major covariate matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    n_rows: usize,
    data: Vec<f64>,
    scales: BTreeMap<String, f64>,
}

impl DesignMatrix {
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} values, expected {p}", r.len())));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i}, column `{}` is not finite", names[j])));
            }
            data.extend_from_slice(r);
        }
        Ok(DesignMatrix {
            names,
            n_rows: rows.len(),
            data,
            scales: BTreeMap::new(),
        })
    }

    /// Row-major constructor.
    pub fn from_flat(names: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let p = names.len();
        if p == 0 || !data.len().is_multiple_of(p) {
            return Err(Error::Dimension(format!("{} values do not fill {p} columns", data.len())));
        }
        Ok(DesignMatrix {
            n_rows: data.len() / p,
            names,
            data,
            scales: BTreeMap::new(),
        })
    }

    pub fn with_scales(mut self, scales: BTreeMap<String, f64>) -> Self {
        self.scales = scales;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Divisors already applied to the raw columns.
    pub fn scales(&self) -> &BTreeMap<String, f64> {
        &self.scales
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows).map(move |i| self.data[i * self.n_cols() + j])
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n_cols()];
        for i in 0..self.n_rows {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = self.n_rows.max(1) as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Population standard deviation of every column.
    pub fn column_sds(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut ss = vec![0.0; self.n_cols()];
        for i in 0..self.n_rows {
            for ((s, v), m) in ss.iter_mut().zip(self.row(i)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let n = self.n_rows.max(1) as f64;
        ss.into_iter().map(|s| (s / n).sqrt()).collect()
    }

    /// Fail with the names of columns that are linear combinations of
    /// earlier columns (or too few rows for the column count).
    pub fn check_full_rank(&self) -> Result<()> {
        let p = self.n_cols();
        if self.n_rows <= p {
            return Err(Error::InvalidArgument(format!(
                "need more rows ({}) than columns ({p})",
                self.n_rows
            )));
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut collinear = Vec::new();
        for j in 0..p {
            let mut v: Vec<f64> = self.column(j).collect();
            let norm0 = dot(&v, &v).sqrt();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&v, q);
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm0 == 0.0 || norm <= 1e-9 * norm0 {
                collinear.push(self.names[j].clone());
            } else {
                v.iter_mut().for_each(|a| *a /= norm);
                basis.push(v);
            }
        }
        if collinear.is_empty() {
            Ok(())
        } else {
            Err(Error::RankDeficient { columns: collinear })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A CSV table kept as strings; columns are parsed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse<R: Read>(reader: R, file: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let columns = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for r in rdr.records() {
            rows.push(r?.iter().map(|s| s.trim().to_string()).collect());
        }
        Ok(Table {
            file: file.to_string(),
            columns,
            rows,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(f, &path.display().to_string())
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn text(&self, name: &str) -> Result<Vec<&str>> {
        let j = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[j].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    file: self.file.clone(),
                    line: i + 2,
                    message: format!("column `{name}`: `{}` is not a number", r[j]),
                })
            })
            .collect()
    }
}

/// How to turn table columns into a design matrix; stored with every fit so
/// the same transformation can be replayed for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub intercept: bool,
    pub covariates: Vec<String>,
    /// Raw value is divided by the factor.
    #[serde(default)]
    pub scales: BTreeMap<String, f64>,
    #[serde(default)]
    pub year_column: Option<String>,
    /// Sorted year levels; the first is the omitted reference.
    #[serde(default)]
    pub year_levels: Vec<i64>,
}

impl DesignSpec {
    /// Spec for `covariates`, count columns scaled by default and year
    /// levels read off the table.
    pub fn infer(table: &Table, covariates: &[String], year_column: Option<&str>) -> Result<Self> {
        let scales = covariates
            .iter()
            .filter(|c| COUNT_COLUMNS.contains(&c.as_str()))
            .map(|c| (c.clone(), COUNT_SCALE))
            .collect();
        let year_levels = match year_column {
            Some(col) => {
                let mut years: Vec<i64> = table.numeric(col)?.into_iter().map(|v| v as i64).collect();
                years.sort_unstable();
                years.dedup();
                years
            }
            None => Vec::new(),
        };
        Ok(DesignSpec {
            intercept: true,
            covariates: covariates.to_vec(),
            scales,
            year_column: year_column.map(String::from),
            year_levels,
        })
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.covariates.iter().cloned());
        names.extend(self.year_levels.iter().skip(1).map(|y| format!("year_{y}")));
        names
    }

    pub fn build(&self, table: &Table) -> Result<DesignMatrix> {
        let n = table.len();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if self.intercept {
            cols.push(vec![1.0; n]);
        }
        for c in &self.covariates {
            let scale = self.scales.get(c).copied().unwrap_or(1.0);
            cols.push(table.numeric(c)?.into_iter().map(|v| v / scale).collect());
        }
        if let Some(yc) = &self.year_column {
            let years = table.numeric(yc)?;
            for (i, &y) in years.iter().enumerate() {
                if !self.year_levels.contains(&(y as i64)) {
                    return Err(Error::Parse {
                        file: table.file.clone(),
                        line: i + 2,
                        message: format!("year {y} was not seen when the model was fit"),
                    });
                }
            }
            for &level in self.year_levels.iter().skip(1) {
                cols.push(years.iter().map(|&y| if y as i64 == level { 1.0 } else { 0.0 }).collect());
            }
        }
        let names = self.column_names();
        let p = names.len();
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        Ok(DesignMatrix {
            names,
            n_rows: n,
            data,
            scales: self.scales.clone(),
        })
    }
}
