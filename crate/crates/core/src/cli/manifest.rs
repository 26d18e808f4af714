//! JSON run descriptions read by `optimize` and `fit-correction`.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::scheduler::{BatteryPolicy, OptimizerConfig};
use crate::series::Calendar;

/// Which days a run covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalendarSpec {
    /// `"2020-11"`
    Month { month: String },
    Span { start: NaiveDate, days: usize },
}

impl CalendarSpec {
    pub fn calendar(&self) -> anyhow::Result<Calendar> {
        match self {
            Self::Month { month } => parse_month(month),
            Self::Span { start, days } => Ok(Calendar::new(*start, *days)?),
        }
    }
}

pub fn parse_month(s: &str) -> anyhow::Result<Calendar> {
    let (y, m) = s.split_once('-').ok_or_else(|| anyhow::anyhow!("month `{s}` is not YYYY-MM"))?;
    Ok(Calendar::month(y.trim().parse()?, m.trim().parse()?)?)
}

/// Everything needed to optimise one month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub instance: PathBuf,
    #[serde(default)]
    pub buildings: Vec<PathBuf>,
    #[serde(default)]
    pub solars: Vec<PathBuf>,
    /// Net-load forecast; when absent the building and solar series are used.
    #[serde(default)]
    pub forecast: Option<PathBuf>,
    /// Realised net load, used to report the actual cost.
    #[serde(default)]
    pub actual: Option<PathBuf>,
    pub prices: PathBuf,
    /// Inferred from the first series when absent.
    #[serde(default)]
    pub calendar: Option<CalendarSpec>,
    #[serde(default = "default_policy")]
    pub policy: BatteryPolicy,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_policy() -> BatteryPolicy {
    BatteryPolicy::VeryLiberal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastCost {
    pub forecast_csv: PathBuf,
    pub cost: f64,
}

/// Forecasts of one actual series with the costs their schedules realised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionManifest {
    pub actual_csv: PathBuf,
    pub forecasts: Vec<ForecastCost>,
    #[serde(default)]
    pub calendar: Option<CalendarSpec>,
}

/// Relative paths in a manifest are taken from the manifest's directory.
pub(crate) fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunManifest {
    pub(crate) fn rebase(mut self, base: &Path) -> Self {
        self.instance = resolve(base, &self.instance);
        self.prices = resolve(base, &self.prices);
        for p in self.buildings.iter_mut().chain(self.solars.iter_mut()) {
            *p = resolve(base, p);
        }
        for p in [&mut self.forecast, &mut self.actual, &mut self.out].into_iter().flatten() {
            *p = resolve(base, p);
        }
        self
    }
}

impl CorrectionManifest {
    pub(crate) fn rebase(mut self, base: &Path) -> Self {
        self.actual_csv = resolve(base, &self.actual_csv);
        for f in &mut self.forecasts {
            f.forecast_csv = resolve(base, &f.forecast_csv);
        }
        self
    }
}
