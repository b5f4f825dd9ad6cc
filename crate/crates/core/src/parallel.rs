//! In-process partitioned map-reduce.
//!
//! Rows are cut into `P` contiguous, balanced ranges. A map function runs on
//! each range (concurrently, on the rayon pool) and the per-partition results
//! are folded serially in ascending partition order. Because the fold order
//! never changes, a real-valued aggregate is bitwise reproducible for a fixed
//! `P`, whether the partitions ran on one thread or many. Different `P` values
//! may round differently.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// `P` contiguous row ranges covering `0..n_rows`, sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitioning {
    ranges: Vec<Range<usize>>,
}

impl Partitioning {
    pub fn new(n_rows: usize, partitions: usize) -> Result<Self> {
        if partitions == 0 {
            return Err(Error::Partition(
                "partition count must be at least 1".into(),
            ));
        }
        if partitions > n_rows {
            return Err(Error::Partition(format!(
                "{partitions} partitions requested for {n_rows} rows"
            )));
        }
        let base = n_rows / partitions;
        let extra = n_rows % partitions;
        let mut start = 0;
        let ranges = (0..partitions)
            .map(|i| {
                let len = base + usize::from(i < extra);
                let range = start..start + len;
                start += len;
                range
            })
            .collect();
        Ok(Partitioning { ranges })
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }
}

/// Map every partition, then fold the results left to right starting from `identity`.
///
/// `map` receives the partition index and its row range. The first failing
/// partition (lowest index) is reported, wrapped with its index.
pub fn map_reduce<T, M, C>(
    partitioning: &Partitioning,
    map: M,
    combine: C,
    identity: T,
) -> Result<T>
where
    T: Send,
    M: Fn(usize, Range<usize>) -> Result<T> + Sync,
    C: Fn(T, T) -> T,
{
    run(partitioning, true, map, combine, identity)
}

fn run<T, M, C>(
    partitioning: &Partitioning,
    concurrent: bool,
    map: M,
    combine: C,
    identity: T,
) -> Result<T>
where
    T: Send,
    M: Fn(usize, Range<usize>) -> Result<T> + Sync,
    C: Fn(T, T) -> T,
{
    let tag = |index: usize, r: Result<T>| {
        r.map_err(|source| Error::PartitionTask {
            index,
            source: Box::new(source),
        })
    };
    let partials: Vec<Result<T>> = if concurrent && partitioning.len() > 1 {
        partitioning
            .ranges()
            .par_iter()
            .enumerate()
            .map(|(i, range)| tag(i, map(i, range.clone())))
            .collect()
    } else {
        partitioning
            .ranges()
            .iter()
            .enumerate()
            .map(|(i, range)| tag(i, map(i, range.clone())))
            .collect()
    };
    let mut acc = identity;
    for partial in partials {
        acc = combine(acc, partial?);
    }
    Ok(acc)
}

/// The handle training code uses to aggregate over rows.
///
/// Holds the requested partition count; a batch smaller than that count is
/// cut into one partition per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    partitions: usize,
    concurrent: bool,
}

impl Executor {
    pub fn new(partitions: usize) -> Result<Self> {
        if partitions == 0 {
            return Err(Error::Partition(
                "partition count must be at least 1".into(),
            ));
        }
        Ok(Executor {
            partitions,
            concurrent: true,
        })
    }

    /// Same partitioning and fold order, but partitions evaluated one after another.
    pub fn serial(partitions: usize) -> Result<Self> {
        Ok(Executor {
            concurrent: false,
            ..Executor::new(partitions)?
        })
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    pub fn partitioning(&self, n_rows: usize) -> Result<Partitioning> {
        Partitioning::new(n_rows, self.partitions.min(n_rows.max(1)))
    }

    pub fn map_reduce<T, M, C>(&self, n_rows: usize, map: M, combine: C, identity: T) -> Result<T>
    where
        T: Send,
        M: Fn(usize, Range<usize>) -> Result<T> + Sync,
        C: Fn(T, T) -> T,
    {
        if n_rows == 0 {
            return Ok(identity);
        }
        let partitioning = self.partitioning(n_rows)?;
        run(&partitioning, self.concurrent, map, combine, identity)
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor {
            partitions: 1,
            concurrent: true,
        }
    }
}
