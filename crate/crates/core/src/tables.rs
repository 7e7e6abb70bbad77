//! Editable reference data: sector classes, region and country indicators,
//! amount bins and the recording rule.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::Amount;

const DEFAULT_TABLES_TOML: &str = include_str!("../data/tables.toml");
const DEFAULT_SECTORS_CSV: &str = include_str!("../data/sectors.csv");
const DEFAULT_REGIONS_CSV: &str = include_str!("../data/regions.csv");
const DEFAULT_COUNTRIES_CSV: &str = include_str!("../data/countries.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SectorClass {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionIndicators {
    /// Crimes per province, percent.
    pub crime_rate: f64,
    pub suspicious_ops: f64,
    pub mafia_presence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountryIndicators {
    pub white_list: bool,
    pub tax_haven: bool,
    pub ocse_compliant: bool,
    pub cpi: f64,
    pub fatf_listed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTables {
    pub sectors: BTreeMap<String, SectorClass>,
    pub regions: BTreeMap<String, RegionIndicators>,
    pub countries: BTreeMap<String, CountryIndicators>,
    /// Upper-exclusive bounds of amount scores 1 and 2.
    pub amount_bins: [Amount; 2],
    pub recording_threshold: Amount,
    pub aggregation_window_days: u32,
    /// A CPI strictly below this counts as a country penalty.
    pub cpi_cutoff: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TablesConfig {
    #[serde(default = "default_threshold")]
    recording_threshold: f64,
    #[serde(default = "default_window")]
    aggregation_window_days: u32,
    #[serde(default = "default_bins")]
    amount_bins: Vec<f64>,
    #[serde(default = "default_cpi_cutoff")]
    cpi_cutoff: f64,
    files: TableFiles,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFiles {
    sectors: String,
    regions: String,
    countries: String,
}

fn default_threshold() -> f64 {
    15_000.0
}
fn default_window() -> u32 {
    30
}
fn default_bins() -> Vec<f64> {
    vec![50_000.0, 250_000.0]
}
fn default_cpi_cutoff() -> f64 {
    50.0
}

fn euros_to_amount(euros: f64, what: &str) -> Result<Amount> {
    if !euros.is_finite() || euros <= 0.0 {
        return Err(Error::Tables(format!("{what} must be a positive amount, got {euros}")));
    }
    Ok(Amount::from_cents((euros * 100.0).round() as i64))
}

impl RiskTables {
    /// The bundled defaults: the published high-risk sector list mapped onto
    /// ATECO codes, illustrative region and country indicators, bins of
    /// 50,000 and 250,000 euros and a 15,000 euro recording threshold.
    pub fn builtin() -> Self {
        let cfg: TablesConfig = toml::from_str(DEFAULT_TABLES_TOML).expect("bundled tables.toml");
        Self::assemble(
            cfg,
            DEFAULT_SECTORS_CSV.as_bytes(),
            DEFAULT_REGIONS_CSV.as_bytes(),
            DEFAULT_COUNTRIES_CSV.as_bytes(),
        )
        .expect("bundled risk tables are valid")
    }

    /// Load a tables TOML file; CSV paths inside it are resolved relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: TablesConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let open = |name: &str| {
            let p = base.join(name);
            fs::File::open(&p).map_err(|e| Error::io(p, e))
        };
        let sectors = open(&cfg.files.sectors)?;
        let regions = open(&cfg.files.regions)?;
        let countries = open(&cfg.files.countries)?;
        Self::assemble(cfg, sectors, regions, countries)
    }

    /// File names and contents of the bundled defaults.
    pub fn default_bundle() -> [(&'static str, &'static str); 4] {
        [
            ("tables.toml", DEFAULT_TABLES_TOML),
            ("sectors.csv", DEFAULT_SECTORS_CSV),
            ("regions.csv", DEFAULT_REGIONS_CSV),
            ("countries.csv", DEFAULT_COUNTRIES_CSV),
        ]
    }

    /// Write the bundled defaults (`tables.toml` plus three CSVs) into `dir`.
    pub fn write_default_bundle(dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in Self::default_bundle() {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }

    fn assemble(
        cfg: TablesConfig,
        sectors: impl Read,
        regions: impl Read,
        countries: impl Read,
    ) -> Result<Self> {
        if cfg.amount_bins.len() != 2 {
            return Err(Error::Tables(format!(
                "amount_bins needs exactly two thresholds (scores 1-3), got {}",
                cfg.amount_bins.len()
            )));
        }
        let lo = euros_to_amount(cfg.amount_bins[0], "amount_bins[0]")?;
        let hi = euros_to_amount(cfg.amount_bins[1], "amount_bins[1]")?;
        if lo >= hi {
            return Err(Error::Tables("amount_bins must be strictly increasing".into()));
        }
        if cfg.aggregation_window_days == 0 {
            return Err(Error::Tables("aggregation_window_days must be at least 1".into()));
        }
        let tables = RiskTables {
            sectors: read_sectors(sectors)?,
            regions: read_regions(regions)?,
            countries: read_countries(countries)?,
            amount_bins: [lo, hi],
            recording_threshold: euros_to_amount(cfg.recording_threshold, "recording_threshold")?,
            aggregation_window_days: cfg.aggregation_window_days,
            cpi_cutoff: cfg.cpi_cutoff,
        };
        Ok(tables)
    }

    /// Resolve an ATECO-style code by longest listed prefix, so that
    /// `47.11.10` picks up a `47.11` entry before the `47` division.
    pub fn sector_class(&self, code: &str) -> Option<SectorClass> {
        let code = code.trim();
        (1..=code.len())
            .rev()
            .filter(|&end| code.is_char_boundary(end))
            .find_map(|end| self.sectors.get(&code[..end]).copied())
    }
}

fn reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r)
}

fn parse_flag(s: &str, what: &str, row: usize) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(Error::row(what, row, format!("expected a boolean, got `{s}`"))),
    }
}

fn parse_num(s: &str, what: &str, row: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::row(what, row, format!("expected a number, got `{s}`")))
}

fn read_sectors(r: impl Read) -> Result<BTreeMap<String, SectorClass>> {
    let mut out = BTreeMap::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let code = rec.get(0).unwrap_or("");
        let class = match rec.get(1).unwrap_or("").to_ascii_uppercase().as_str() {
            "LOW" => SectorClass::Low,
            "HIGH" => SectorClass::High,
            other => return Err(Error::row("sectors", row, format!("class must be LOW or HIGH, got `{other}`"))),
        };
        if code.is_empty() {
            return Err(Error::row("sectors", row, "empty sector_code"));
        }
        if out.insert(code.to_string(), class).is_some() {
            return Err(Error::row("sectors", row, format!("duplicate sector_code `{code}`")));
        }
    }
    Ok(out)
}

fn read_regions(r: impl Read) -> Result<BTreeMap<String, RegionIndicators>> {
    let mut out = BTreeMap::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() < 4 {
            return Err(Error::row("regions", row, "expected region,crime_rate,suspicious_ops,mafia_presence"));
        }
        let entry = RegionIndicators {
            crime_rate: parse_num(&rec[1], "regions", row)?,
            suspicious_ops: parse_num(&rec[2], "regions", row)?,
            mafia_presence: parse_flag(&rec[3], "regions", row)?,
        };
        if out.insert(rec[0].to_string(), entry).is_some() {
            return Err(Error::row("regions", row, format!("duplicate region `{}`", &rec[0])));
        }
    }
    Ok(out)
}

fn read_countries(r: impl Read) -> Result<BTreeMap<String, CountryIndicators>> {
    let mut out = BTreeMap::new();
    for (i, rec) in reader(r).records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() < 6 {
            return Err(Error::row(
                "countries",
                row,
                "expected country,white_list,tax_haven,ocse_compliant,cpi,fatf_listed",
            ));
        }
        let entry = CountryIndicators {
            white_list: parse_flag(&rec[1], "countries", row)?,
            tax_haven: parse_flag(&rec[2], "countries", row)?,
            ocse_compliant: parse_flag(&rec[3], "countries", row)?,
            cpi: parse_num(&rec[4], "countries", row)?,
            fatf_listed: parse_flag(&rec[5], "countries", row)?,
        };
        let code = rec[0].to_ascii_uppercase();
        if out.insert(code.clone(), entry).is_some() {
            return Err(Error::row("countries", row, format!("duplicate country `{code}`")));
        }
    }
    Ok(out)
}
