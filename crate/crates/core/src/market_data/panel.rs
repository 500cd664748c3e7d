use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ensemble paths share one grid; a grid value may differ by at most this
/// much between paths and still be snapped onto it.
const GRID_SNAP: f64 = 1e-9;

pub const CSV_HEADER: [&str; 3] = ["path_id", "time", "price"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PanelMode {
    #[default]
    Ensemble,
    SinglePath,
}

impl std::str::FromStr for PanelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ensemble" => Ok(PanelMode::Ensemble),
            "single" | "single-path" => Ok(PanelMode::SinglePath),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// One positive price path on strictly increasing times (year fractions).
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub path_id: String,
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
}

impl PricePath {
    pub fn new(path_id: impl Into<String>, times: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        let path = PricePath {
            path_id: path_id.into(),
            times,
            prices,
        };
        path.validate()?;
        Ok(path)
    }

    fn validate(&self) -> Result<()> {
        let id = &self.path_id;
        if self.times.len() != self.prices.len() {
            return Err(Error::MalformedInput(format!(
                "path `{id}`: {} times but {} prices",
                self.times.len(),
                self.prices.len()
            )));
        }
        if self.times.len() < 2 {
            return Err(Error::MalformedInput(format!(
                "path `{id}` needs at least 2 observations"
            )));
        }
        for (&t, &s) in self.times.iter().zip(&self.prices) {
            if !t.is_finite() || !s.is_finite() {
                return Err(Error::MalformedInput(format!(
                    "path `{id}`: non-finite value at t={t}"
                )));
            }
            if s <= 0.0 {
                return Err(Error::PositivityViolation {
                    path_id: id.clone(),
                    time: t,
                    price: s,
                });
            }
        }
        if let Some(w) = self.times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::MalformedInput(format!(
                "path `{id}`: times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(())
    }
}

/// One or many price paths on a common time grid.
///
/// Prices are stored path-major: path `i` occupies
/// `prices[i * n_times .. (i + 1) * n_times]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    mode: PanelMode,
    grid: Vec<f64>,
    path_ids: Vec<String>,
    prices: Vec<f64>,
}

impl PricePanel {
    pub fn from_paths(paths: Vec<PricePath>, mode: PanelMode) -> Result<Self> {
        let Some(first) = paths.first() else {
            return Err(Error::MalformedInput("panel has no paths".into()));
        };
        if mode == PanelMode::SinglePath && paths.len() != 1 {
            return Err(Error::MalformedInput(format!(
                "single-path mode needs exactly 1 path, got {}",
                paths.len()
            )));
        }
        let grid = first.times.clone();
        let mut path_ids = Vec::with_capacity(paths.len());
        let mut prices = Vec::with_capacity(paths.len() * grid.len());
        for p in paths {
            p.validate()?;
            let on_grid = p.times.len() == grid.len()
                && p.times
                    .iter()
                    .zip(&grid)
                    .all(|(a, b)| (a - b).abs() <= GRID_SNAP);
            if !on_grid {
                return Err(Error::GridMismatch { path_id: p.path_id });
            }
            path_ids.push(p.path_id);
            prices.extend_from_slice(&p.prices);
        }
        Ok(PricePanel {
            mode,
            grid,
            path_ids,
            prices,
        })
    }

    /// Builds a panel from path-major prices on a shared grid.
    pub fn from_grid(
        grid: Vec<f64>,
        path_ids: Vec<String>,
        prices: Vec<f64>,
        mode: PanelMode,
    ) -> Result<Self> {
        let n = grid.len();
        if path_ids.is_empty() {
            return Err(Error::MalformedInput("panel has no paths".into()));
        }
        if prices.len() != n * path_ids.len() {
            return Err(Error::MalformedInput(format!(
                "expected {} prices, got {}",
                n * path_ids.len(),
                prices.len()
            )));
        }
        if mode == PanelMode::SinglePath && path_ids.len() != 1 {
            return Err(Error::MalformedInput(format!(
                "single-path mode needs exactly 1 path, got {}",
                path_ids.len()
            )));
        }
        // Validate the grid once, then prices path by path.
        PricePath {
            path_id: path_ids[0].clone(),
            times: grid.clone(),
            prices: prices[..n].to_vec(),
        }
        .validate()?;
        for (i, id) in path_ids.iter().enumerate() {
            for (j, &s) in prices[i * n..(i + 1) * n].iter().enumerate() {
                if !s.is_finite() {
                    return Err(Error::MalformedInput(format!(
                        "path `{id}`: non-finite price at t={}",
                        grid[j]
                    )));
                }
                if s <= 0.0 {
                    return Err(Error::PositivityViolation {
                        path_id: id.clone(),
                        time: grid[j],
                        price: s,
                    });
                }
            }
        }
        Ok(PricePanel {
            mode,
            grid,
            path_ids,
            prices,
        })
    }

    pub fn mode(&self) -> PanelMode {
        self.mode
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.path_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    pub fn path_ids(&self) -> &[String] {
        &self.path_ids
    }

    /// Prices of path `i` across the grid.
    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.prices[i * n..(i + 1) * n]
    }

    pub fn price(&self, path: usize, time_index: usize) -> f64 {
        self.prices[path * self.grid.len() + time_index]
    }

    pub fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1] - self.grid[0]
    }

    pub fn to_paths(&self) -> Vec<PricePath> {
        (0..self.n_paths())
            .map(|i| PricePath {
                path_id: self.path_ids[i].clone(),
                times: self.grid.clone(),
                prices: self.path(i).to_vec(),
            })
            .collect()
    }

    /// Writes the panel in the `path_id,time,price` CSV schema. Floats use the
    /// shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let mut tbuf = String::new();
        let mut pbuf = String::new();
        for (i, id) in self.path_ids.iter().enumerate() {
            for (t, s) in self.grid.iter().zip(self.path(i)) {
                use std::fmt::Write as _;
                tbuf.clear();
                pbuf.clear();
                let _ = write!(tbuf, "{t}");
                let _ = write!(pbuf, "{s}");
                w.write_record([id.as_str(), tbuf.as_str(), pbuf.as_str()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a `path_id,time,price` CSV stream into a validated panel.
///
/// Rows of one path must appear in increasing time order; paths may be
/// interleaved. Path order follows first appearance.
pub fn ingest_panel<R: Read>(source: R, mode: PanelMode) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedInput(format!("unreadable header: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::MalformedInput(format!(
            "header must be exactly `path_id,time,price`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut paths: Vec<PricePath> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut line = 1usize;
    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| Error::MalformedInput(format!("line {}: {e}", line + 1)))?;
        if !more {
            break;
        }
        line += 1;
        if record.len() != 3 {
            return Err(Error::MalformedInput(format!(
                "line {line}: expected 3 fields, got {}",
                record.len()
            )));
        }
        let parse = |field: &str, what: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .map_err(|_| Error::MalformedInput(format!("line {line}: bad {what} `{field}`")))
        };
        let time = parse(&record[1], "time")?;
        let price = parse(&record[2], "price")?;
        let id = &record[0];
        let slot = match index.get(id) {
            Some(&k) => k,
            None => {
                index.insert(id.to_string(), paths.len());
                paths.push(PricePath {
                    path_id: id.to_string(),
                    times: Vec::new(),
                    prices: Vec::new(),
                });
                paths.len() - 1
            }
        };
        paths[slot].times.push(time);
        paths[slot].prices.push(price);
    }
    PricePanel::from_paths(paths, mode)
}
