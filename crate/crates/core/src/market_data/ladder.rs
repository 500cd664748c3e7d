use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LadderScheme {
    /// `k` evenly spaced grid indices per level, nested.
    #[default]
    Dyadic,
    /// Successive odd-index thinning, starting from the full grid.
    Thinning,
    /// Dyadic levels with interior points shifted by half a step.
    Staggered,
}

impl std::str::FromStr for LadderScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic" => Ok(LadderScheme::Dyadic),
            "thinning" => Ok(LadderScheme::Thinning),
            "staggered" => Ok(LadderScheme::Staggered),
            other => Err(Error::InvalidArgument(format!("unknown ladder scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for LadderScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LadderScheme::Dyadic => "dyadic",
            LadderScheme::Thinning => "thinning",
            LadderScheme::Staggered => "staggered",
        })
    }
}

/// One partition `t0 = t_0 < t_1 < ... < t_k = T`, stored as grid indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub indices: Vec<usize>,
    pub mesh: f64,
}

impl Level {
    fn from_indices(indices: Vec<usize>, grid: &[f64]) -> Self {
        let mesh = indices
            .windows(2)
            .map(|w| grid[w[1]] - grid[w[0]])
            .fold(0.0, f64::max);
        Level { indices, mesh }
    }

    /// Number of intervals `k_n`.
    pub fn k(&self) -> usize {
        self.indices.len() - 1
    }

    /// Drops every odd-positioned interior point, keeping both endpoints.
    /// The mesh of a uniform partition doubles.
    pub fn thin_odd(&self, grid: &[f64]) -> Level {
        let last = *self.indices.last().unwrap();
        let mut indices: Vec<usize> = self.indices.iter().step_by(2).copied().collect();
        if *indices.last().unwrap() != last {
            indices.push(last);
        }
        Level::from_indices(indices, grid)
    }
}

/// Nested partitions ordered from coarsest to finest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionLadder {
    pub scheme: LadderScheme,
    pub levels: Vec<Level>,
}

impl PartitionLadder {
    /// Levels with the given interval counts (ascending), on the given scheme.
    pub fn with_counts(grid: &[f64], counts: &[usize], scheme: LadderScheme) -> Result<Self> {
        check_grid(grid)?;
        if counts.is_empty() {
            return Err(Error::InvalidArgument("no level counts given".into()));
        }
        let n = grid.len() - 1;
        let mut levels = Vec::with_capacity(counts.len());
        match scheme {
            LadderScheme::Dyadic | LadderScheme::Staggered => {
                for &k in counts {
                    levels.push(Level::from_indices(level_indices(n, k, scheme)?, grid));
                }
            }
            LadderScheme::Thinning => {
                let finest = *counts.iter().max().unwrap();
                let mut level = Level::from_indices(level_indices(n, finest, scheme)?, grid);
                let mut by_k = vec![level.clone()];
                while level.k() > 1 {
                    level = level.thin_odd(grid);
                    by_k.push(level.clone());
                }
                for &k in counts {
                    let found = by_k.iter().find(|l| l.k() == k).ok_or_else(|| {
                        Error::InsufficientGrid(format!(
                            "no thinning level with {k} intervals below {finest}"
                        ))
                    })?;
                    levels.push(found.clone());
                }
            }
        }
        let ladder = PartitionLadder { scheme, levels };
        ladder.check_refining()?;
        Ok(ladder)
    }

    /// The `n_levels` finest levels, the finest using every grid point and
    /// each coarser one `factor` times fewer intervals.
    pub fn finest(
        grid: &[f64],
        n_levels: usize,
        factor: usize,
        scheme: LadderScheme,
    ) -> Result<Self> {
        check_grid(grid)?;
        if n_levels == 0 || factor < 2 {
            return Err(Error::InvalidArgument(
                "need at least one level and a refinement factor of 2 or more".into(),
            ));
        }
        let n = grid.len() - 1;
        let finest_k = match scheme {
            LadderScheme::Staggered => n / 2,
            _ => n,
        };
        let mut counts = Vec::with_capacity(n_levels);
        let mut k = finest_k;
        for _ in 0..n_levels {
            if k == 0 {
                return Err(Error::InsufficientGrid(format!(
                    "{n_levels} levels with factor {factor} need more than {n} grid intervals"
                )));
            }
            counts.push(k);
            k /= factor;
        }
        counts.reverse();
        Self::with_counts(grid, &counts, scheme)
    }

    pub fn finest_level(&self) -> &Level {
        self.levels.last().unwrap()
    }

    fn check_refining(&self) -> Result<()> {
        for w in self.levels.windows(2) {
            if w[1].mesh >= w[0].mesh {
                return Err(Error::InsufficientGrid(format!(
                    "mesh does not shrink: {} -> {}",
                    w[0].mesh, w[1].mesh
                )));
            }
        }
        Ok(())
    }
}

/// Builds `n_levels` levels from the coarsest partition `{t0, T}` upward.
///
/// Dyadic and staggered schemes double the interval count per level. The
/// thinning scheme starts from the full grid and thins successively, so its
/// coarsest level depends on the grid size.
pub fn build_ladder(grid: &[f64], n_levels: usize, scheme: LadderScheme) -> Result<PartitionLadder> {
    check_grid(grid)?;
    if n_levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let n = grid.len() - 1;
    match scheme {
        LadderScheme::Dyadic | LadderScheme::Staggered => {
            let first = if scheme == LadderScheme::Staggered { 4 } else { 1 };
            let counts: Vec<usize> = (0..n_levels).map(|i| first << i).collect();
            if *counts.last().unwrap() > n {
                return Err(Error::InsufficientGrid(format!(
                    "{n_levels} {scheme} levels need {} grid intervals, have {n}",
                    counts.last().unwrap()
                )));
            }
            let counts: Vec<usize> = if scheme == LadderScheme::Staggered {
                counts.iter().map(|k| k / 2).collect()
            } else {
                counts
            };
            PartitionLadder::with_counts(grid, &counts, scheme)
        }
        LadderScheme::Thinning => {
            let mut level = Level::from_indices((0..=n).collect(), grid);
            let mut levels = vec![level.clone()];
            for _ in 1..n_levels {
                if level.k() < 2 {
                    return Err(Error::InsufficientGrid(format!(
                        "{n_levels} thinning levels need more than {n} grid intervals"
                    )));
                }
                level = level.thin_odd(grid);
                levels.push(level.clone());
            }
            levels.reverse();
            let ladder = PartitionLadder { scheme, levels };
            ladder.check_refining()?;
            Ok(ladder)
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "grid has {} point(s), need 2",
            grid.len()
        )));
    }
    Ok(())
}

/// Grid indices of a level with `k` intervals on a grid of `n` intervals.
/// Staggered levels put interior points at half-steps and carry `k + 1`
/// intervals, the two boundary ones being half as long.
fn level_indices(n: usize, k: usize, scheme: LadderScheme) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InsufficientGrid(format!(
            "level with {k} intervals on a grid of {n}"
        )));
    }
    let at = |x: f64| (x * n as f64 / k as f64).round() as usize;
    match scheme {
        LadderScheme::Staggered => {
            if 2 * k > n {
                return Err(Error::InsufficientGrid(format!(
                    "staggered level with {k} intervals needs {} grid intervals, have {n}",
                    2 * k
                )));
            }
            let mut idx = vec![0];
            idx.extend((0..k).map(|j| at(j as f64 + 0.5)));
            idx.push(n);
            idx.dedup();
            Ok(idx)
        }
        _ => Ok((0..=k).map(|j| at(j as f64)).collect()),
    }
}
