//! Observation containers.

use alloc::vec::Vec;

use crate::distributions::Family;
use crate::error::{Error, Result};

/// A single observation, borrowed from a [`Dataset`] or built by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<'a> {
    Real(f64),
    Vector(&'a [f64]),
    Count(u64),
}

/// Run-length encoded count data: strictly increasing values, each with a
/// multiplicity. Zero multiplicities are kept so a table can be echoed back
/// row for row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqTable {
    entries: Vec<(u64, u64)>,
}

impl FreqTable {
    pub fn from_pairs(entries: Vec<(u64, u64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "frequency table values must be strictly increasing",
            ));
        }
        Ok(Self { entries })
    }

    /// Collapse raw counts into a table.
    pub fn from_observations(values: &[u64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let mut entries: Vec<(u64, u64)> = Vec::new();
        for v in sorted {
            match entries.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => entries.push((v, 1)),
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    /// Total number of observations, `Σ count`.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).sum()
    }

    /// Smallest and largest value with a nonzero count.
    pub fn bounds(&self) -> Option<(u64, u64)> {
        let mut occupied = self.entries.iter().filter(|&&(_, c)| c > 0);
        let first = occupied.next()?.0;
        let last = occupied.next_back().map_or(first, |&(v, _)| v);
        Some((first, last))
    }

    /// Expand back to one value per observation, in ascending order.
    pub fn expand(&self) -> Vec<u64> {
        self.entries
            .iter()
            .flat_map(|&(v, c)| core::iter::repeat_n(v, c as usize))
            .collect()
    }
}

/// Observations for one of the supported families.
///
/// Count data is always stored as a [`FreqTable`], whether it was supplied
/// expanded or run-length encoded, so both encodings follow the exact same
/// arithmetic during a fit. Per-row quantities (responsibilities, labels)
/// for count data are therefore indexed by table row.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Univariate(Vec<f64>),
    /// Row-major `n × dim` values.
    Multivariate {
        dim: usize,
        values: Vec<f64>,
    },
    Counts(FreqTable),
}

impl Dataset {
    pub fn univariate(values: Vec<f64>) -> Self {
        Dataset::Univariate(values)
    }

    pub fn multivariate(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: values.len() % dim,
            });
        }
        Ok(Dataset::Multivariate { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::multivariate(dim, values)
    }

    pub fn counts(values: &[u64]) -> Self {
        Dataset::Counts(FreqTable::from_observations(values))
    }

    pub fn freq_table(table: FreqTable) -> Self {
        Dataset::Counts(table)
    }

    /// The family whose support matches this data.
    pub fn family(&self) -> Family {
        match self {
            Dataset::Univariate(_) => Family::Gaussian1D,
            Dataset::Multivariate { .. } => Family::Mvn,
            Dataset::Counts(_) => Family::Poisson,
        }
    }

    /// Number of stored rows (table rows for count data).
    pub fn rows(&self) -> usize {
        match self {
            Dataset::Univariate(v) => v.len(),
            Dataset::Multivariate { dim, values } => values.len() / dim,
            Dataset::Counts(t) => t.entries().len(),
        }
    }

    /// Number of observations `n`.
    pub fn len(&self) -> usize {
        match self {
            Dataset::Counts(t) => t.total() as usize,
            _ => self.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multiplicity of row `i` (1 except for count data).
    pub fn multiplicity(&self, i: usize) -> u64 {
        match self {
            Dataset::Counts(t) => t.entries()[i].1,
            _ => 1,
        }
    }

    pub fn row(&self, i: usize) -> Observation<'_> {
        match self {
            Dataset::Univariate(v) => Observation::Real(v[i]),
            Dataset::Multivariate { dim, values } => {
                Observation::Vector(&values[i * dim..(i + 1) * dim])
            }
            Dataset::Counts(t) => Observation::Count(t.entries()[i].0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Observation<'_>> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }

    /// Per-coordinate `(min, max)` over rows with nonzero multiplicity.
    pub fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Dataset::Univariate(v) => {
                let first = *v.first()?;
                let b = v
                    .iter()
                    .fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                Some(alloc::vec![b])
            }
            Dataset::Multivariate { dim, values } => {
                if values.is_empty() {
                    return None;
                }
                let mut b: Vec<(f64, f64)> = values[..*dim].iter().map(|&x| (x, x)).collect();
                for row in values.chunks_exact(*dim) {
                    for (bj, &x) in b.iter_mut().zip(row) {
                        bj.0 = bj.0.min(x);
                        bj.1 = bj.1.max(x);
                    }
                }
                Some(b)
            }
            Dataset::Counts(t) => t
                .bounds()
                .map(|(lo, hi)| alloc::vec![(lo as f64, hi as f64)]),
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        let ok = match self {
            Dataset::Univariate(v) => v.iter().all(|x| x.is_finite()),
            Dataset::Multivariate { values, .. } => values.iter().all(|x| x.is_finite()),
            Dataset::Counts(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("observations must be finite"))
        }
    }
}
