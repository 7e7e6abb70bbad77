//! Ledger ingestion: transaction rows, parties, recording threshold and labels.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::RiskTables;

/// Region value used for parties operating outside Italy.
pub const FOREIGN: &str = "FOREIGN";
/// Country code assigned to parties located in an Italian region.
pub const DOMESTIC_COUNTRY: &str = "IT";

pub const LEDGER_HEADER: [&str; 12] = [
    "txn_id",
    "timestamp",
    "seller_id",
    "debtor_id",
    "amount",
    "owner_id",
    "representative_id",
    "country",
    "seller_sector",
    "debtor_sector",
    "seller_region",
    "debtor_region",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub String);

impl PartyId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PartyId {
    fn from(s: &str) -> Self {
        PartyId(s.to_string())
    }
}

/// A euro amount held in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(i64);

impl Amount {
    pub const fn from_cents(cents: i64) -> Self {
        Amount(cents)
    }

    pub const fn from_euros(euros: i64) -> Self {
        Amount(euros * 100)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    pub fn euros(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmountParseError {
    Malformed,
    ForeignCurrency(String),
}

impl FromStr for Amount {
    type Err = AmountParseError;

    /// Accepts a plain decimal with at most two fractional digits, optionally
    /// tagged as euros (`EUR` suffix or `€`). Any other currency tag is
    /// rejected as foreign.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut text = s.trim();
        if let Some(rest) = text.strip_prefix('€').or_else(|| text.strip_suffix('€')) {
            text = rest.trim();
        } else if let Some(rest) = text.strip_suffix("EUR") {
            text = rest.trim();
        } else {
            let tag: String = text
                .chars()
                .filter(|c| c.is_alphabetic() || matches!(c, '$' | '£' | '¥'))
                .collect();
            if !tag.is_empty() {
                let is_code = tag.len() == 3 && tag.bytes().all(|b| b.is_ascii_uppercase());
                let is_symbol = tag.chars().count() == 1 && !tag.chars().all(char::is_alphabetic);
                let rest = text.trim_matches(|c: char| tag.contains(c)).trim();
                if (is_code || is_symbol) && rest.parse::<Amount>().is_ok() {
                    return Err(AmountParseError::ForeignCurrency(tag));
                }
                return Err(AmountParseError::Malformed);
            }
        }
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (whole, frac) = match digits.split_once('.') {
            Some((w, f)) => (w, f),
            None => (digits, ""),
        };
        if whole.is_empty()
            || frac.len() > 2
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(AmountParseError::Malformed);
        }
        let whole: i64 = whole.parse().map_err(|_| AmountParseError::Malformed)?;
        let frac_cents: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| AmountParseError::Malformed)? * 10,
            _ => frac.parse().map_err(|_| AmountParseError::Malformed)?,
        };
        let cents = whole
            .checked_mul(100)
            .and_then(|c| c.checked_add(frac_cents))
            .ok_or(AmountParseError::Malformed)?;
        Ok(Amount(if negative { -cents } else { cents }))
    }
}

/// One ledger row. Person and debtor identifiers are `None` when the cell
/// was empty; they are never imputed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub txn_id: String,
    pub timestamp: NaiveDate,
    pub seller_id: PartyId,
    pub debtor_id: Option<PartyId>,
    pub amount: Amount,
    pub owner_id: Option<String>,
    pub representative_id: Option<String>,
    /// Country of the paying counterparty (the debtor).
    pub country: Option<String>,
}

impl TransactionRecord {
    pub fn has_missing_id(&self) -> bool {
        self.debtor_id.is_none() || self.owner_id.is_none() || self.representative_id.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HighRisk {
    #[default]
    Unknown,
    No,
    Yes,
}

impl HighRisk {
    pub fn as_f64(self) -> Option<f64> {
        match self {
            HighRisk::Unknown => None,
            HighRisk::No => Some(0.0),
            HighRisk::Yes => Some(1.0),
        }
    }

    pub fn is_known(self) -> bool {
        self != HighRisk::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub id: PartyId,
    pub sector_code: String,
    /// Italian region name or [`FOREIGN`].
    pub region: String,
    pub country: String,
    pub is_seller: bool,
    pub is_debtor: bool,
    pub high_risk: HighRisk,
}

impl Party {
    pub fn is_foreign(&self) -> bool {
        self.region == FOREIGN
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub records: Vec<TransactionRecord>,
    /// Sorted by party id.
    pub parties: Vec<Party>,
}

impl Ledger {
    pub fn party(&self, id: &PartyId) -> Option<&Party> {
        self.parties
            .binary_search_by(|p| p.id.cmp(id))
            .ok()
            .map(|i| &self.parties[i])
    }

    pub fn party_map(&self) -> HashMap<&PartyId, &Party> {
        self.parties.iter().map(|p| (&p.id, p)).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.parties.iter().filter(|p| p.high_risk.is_known()).count()
    }

    /// Replace the records, keeping only parties still referenced by them.
    pub fn with_records(&self, records: Vec<TransactionRecord>) -> Ledger {
        let mut referenced = HashSet::new();
        for r in &records {
            referenced.insert(&r.seller_id);
            if let Some(d) = &r.debtor_id {
                referenced.insert(d);
            }
        }
        let parties = self
            .parties
            .iter()
            .filter(|p| referenced.contains(&p.id))
            .cloned()
            .collect();
        Ledger { records, parties }
    }
}

#[derive(Debug, Deserialize)]
struct LedgerRow {
    txn_id: String,
    timestamp: String,
    seller_id: String,
    debtor_id: String,
    amount: String,
    owner_id: String,
    representative_id: String,
    country: String,
    seller_sector: String,
    debtor_sector: String,
    seller_region: String,
    debtor_region: String,
}

fn optional(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

struct PartyDraft {
    party: Party,
    first_row: usize,
}

pub fn load_ledger(path: impl AsRef<Path>, tables: &RiskTables) -> Result<Ledger> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ledger(file, &path.display().to_string(), tables)
}

/// Parse and validate a ledger. Parties are deduplicated across the seller
/// and debtor roles; an attribute that disagrees between rows is an error.
pub fn read_ledger<R: Read>(reader: R, source_name: &str, tables: &RiskTables) -> Result<Ledger> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) if is_empty_input(&e) => return Ok(Ledger::default()),
        Err(e) => return Err(e.into()),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Ledger::default());
    }
    if headers.iter().collect::<Vec<_>>() != LEDGER_HEADER {
        return Err(Error::row(
            source_name,
            0,
            format!("expected header `{}`", LEDGER_HEADER.join(",")),
        ));
    }

    let mut records = Vec::new();
    let mut seen_txn: HashMap<String, usize> = HashMap::new();
    let mut parties: BTreeMap<PartyId, PartyDraft> = BTreeMap::new();

    for (i, result) in rdr.deserialize::<LedgerRow>().enumerate() {
        let row_no = i + 1;
        let row = result.map_err(|e| Error::row(source_name, row_no, e.to_string()))?;
        let err = |msg: String| Error::row(source_name, row_no, msg);

        if row.txn_id.is_empty() {
            return Err(err("empty txn_id".into()));
        }
        if let Some(prev) = seen_txn.insert(row.txn_id.clone(), row_no) {
            return Err(err(format!(
                "duplicate txn_id `{}` (first seen at row {prev})",
                row.txn_id
            )));
        }
        let timestamp = NaiveDate::parse_from_str(&row.timestamp, "%Y-%m-%d")
            .map_err(|_| err(format!("invalid ISO-8601 date `{}`", row.timestamp)))?;
        let seller_id = optional(&row.seller_id)
            .map(PartyId)
            .ok_or_else(|| err("seller_id is empty".into()))?;
        let debtor_id = optional(&row.debtor_id).map(PartyId);
        let amount = match row.amount.parse::<Amount>() {
            Ok(a) if a.cents() > 0 => a,
            Ok(a) => return Err(err(format!("amount must be positive, got {a}"))),
            Err(AmountParseError::ForeignCurrency(tag)) => {
                return Err(err(format!("foreign currency `{tag}` not supported; amounts are euros")))
            }
            Err(AmountParseError::Malformed) => {
                return Err(err(format!("malformed amount `{}`", row.amount)))
            }
        };
        let country = optional(&row.country).map(|c| c.to_ascii_uppercase());

        let seller_region = optional(&row.seller_region)
            .ok_or_else(|| err("seller_region is empty".into()))?;
        let seller_sector = optional(&row.seller_sector)
            .ok_or_else(|| err("seller_sector is empty".into()))?;
        // The country column describes the debtor; sellers are domestic unless
        // marked FOREIGN, in which case the row country is the best evidence.
        let seller_country = if seller_region == FOREIGN {
            country
                .clone()
                .ok_or_else(|| err("foreign seller requires a country".into()))?
        } else {
            DOMESTIC_COUNTRY.to_string()
        };
        let seller = Party {
            id: seller_id.clone(),
            sector_code: seller_sector,
            region: seller_region,
            country: seller_country,
            is_seller: true,
            is_debtor: false,
            high_risk: HighRisk::Unknown,
        };
        validate_party(&seller, tables).map_err(&err)?;
        merge_party(&mut parties, seller, row_no).map_err(&err)?;

        if let Some(debtor_id) = &debtor_id {
            let region = optional(&row.debtor_region)
                .ok_or_else(|| err("debtor_region is empty".into()))?;
            let sector = optional(&row.debtor_sector)
                .ok_or_else(|| err("debtor_sector is empty".into()))?;
            let debtor_country = if region == FOREIGN {
                country
                    .clone()
                    .ok_or_else(|| err("foreign debtor requires a country".into()))?
            } else {
                match &country {
                    Some(c) if c != DOMESTIC_COUNTRY => {
                        return Err(err(format!(
                            "country `{c}` contradicts Italian debtor region `{region}`"
                        )))
                    }
                    _ => DOMESTIC_COUNTRY.to_string(),
                }
            };
            let debtor = Party {
                id: debtor_id.clone(),
                sector_code: sector,
                region,
                country: debtor_country,
                is_seller: false,
                is_debtor: true,
                high_risk: HighRisk::Unknown,
            };
            validate_party(&debtor, tables).map_err(&err)?;
            merge_party(&mut parties, debtor, row_no).map_err(&err)?;
        }

        records.push(TransactionRecord {
            txn_id: row.txn_id,
            timestamp,
            seller_id,
            debtor_id,
            amount,
            owner_id: optional(&row.owner_id),
            representative_id: optional(&row.representative_id),
            country,
        });
    }

    Ok(Ledger {
        records,
        parties: parties.into_values().map(|d| d.party).collect(),
    })
}

fn is_empty_input(e: &csv::Error) -> bool {
    matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. })
}

fn validate_party(party: &Party, tables: &RiskTables) -> std::result::Result<(), String> {
    if tables.sector_class(&party.sector_code).is_none() {
        return Err(format!("unknown sector code `{}`", party.sector_code));
    }
    if party.is_foreign() {
        if !tables.countries.contains_key(&party.country) {
            return Err(format!("unknown country `{}`", party.country));
        }
    } else if !tables.regions.contains_key(&party.region) {
        return Err(format!("unknown region `{}`", party.region));
    }
    Ok(())
}

fn merge_party(
    parties: &mut BTreeMap<PartyId, PartyDraft>,
    incoming: Party,
    row_no: usize,
) -> std::result::Result<(), String> {
    match parties.get_mut(&incoming.id) {
        None => {
            parties.insert(
                incoming.id.clone(),
                PartyDraft {
                    party: incoming,
                    first_row: row_no,
                },
            );
        }
        Some(draft) => {
            let p = &mut draft.party;
            for (field, old, new) in [
                ("sector", &p.sector_code, &incoming.sector_code),
                ("region", &p.region, &incoming.region),
                ("country", &p.country, &incoming.country),
            ] {
                if old != new {
                    return Err(format!(
                        "party `{}` has {field} `{new}` but `{old}` at row {}",
                        p.id, draft.first_row
                    ));
                }
            }
            p.is_seller |= incoming.is_seller;
            p.is_debtor |= incoming.is_debtor;
        }
    }
    Ok(())
}

/// Records surviving the legal recording rule, plus how many were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutcome {
    pub kept: Vec<TransactionRecord>,
    pub dropped: usize,
}

/// Keep every record at or above the recording threshold, and every
/// sub-threshold record that belongs to a sliding window of
/// `aggregation_window_days` calendar days in which the sub-threshold records
/// of the same (seller, debtor) pair sum to at least the threshold.
///
/// Records with a missing debtor are aggregated under their own
/// (seller, missing) key. Input order is preserved.
pub fn apply_recording_threshold(
    records: &[TransactionRecord],
    tables: &RiskTables,
) -> ThresholdOutcome {
    let threshold = tables.recording_threshold;
    let window = i64::from(tables.aggregation_window_days);

    let mut keep = vec![false; records.len()];
    let mut small_by_pair: HashMap<(&PartyId, Option<&PartyId>), Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.amount >= threshold {
            keep[i] = true;
        } else {
            small_by_pair
                .entry((&r.seller_id, r.debtor_id.as_ref()))
                .or_default()
                .push(i);
        }
    }

    for mut idx in small_by_pair.into_values() {
        idx.sort_by(|&a, &b| {
            (records[a].timestamp, &records[a].txn_id).cmp(&(records[b].timestamp, &records[b].txn_id))
        });
        // For each right end j, the widest window ending at j starts at `lo`.
        // Every qualifying window is contained in such a maximal one, so
        // marking the qualifying maximal windows marks exactly the union.
        let mut cover = vec![0i32; idx.len() + 1];
        let mut lo = 0;
        let mut sum = 0i64;
        for j in 0..idx.len() {
            sum += records[idx[j]].amount.cents();
            let end_day = records[idx[j]].timestamp;
            while (end_day - records[idx[lo]].timestamp).num_days() >= window {
                sum -= records[idx[lo]].amount.cents();
                lo += 1;
            }
            if sum >= threshold.cents() {
                cover[lo] += 1;
                cover[j + 1] -= 1;
            }
        }
        let mut running = 0;
        for (k, &i) in idx.iter().enumerate() {
            running += cover[k];
            if running > 0 {
                keep[i] = true;
            }
        }
    }

    let kept: Vec<_> = records
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    let dropped = records.len() - kept.len();
    ThresholdOutcome { kept, dropped }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutcome {
    pub labeled: usize,
    /// (row, party id) of labels naming parties absent from the ledger.
    pub skipped: Vec<(usize, String)>,
}

pub fn load_labels(path: impl AsRef<Path>, parties: &mut [Party]) -> Result<LabelOutcome> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(file, &path.display().to_string(), parties)
}

/// Apply a `party_id,high_risk` label file. Parties without a row stay
/// [`HighRisk::Unknown`]; labels for unknown parties are skipped with a warning.
pub fn read_labels<R: Read>(
    reader: R,
    source_name: &str,
    parties: &mut [Party],
) -> Result<LabelOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) if is_empty_input(&e) => csv::StringRecord::new(),
        Err(e) => return Err(e.into()),
    };
    let mut outcome = LabelOutcome {
        labeled: 0,
        skipped: Vec::new(),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(outcome);
    }
    if headers.iter().collect::<Vec<_>>() != ["party_id", "high_risk"] {
        return Err(Error::row(source_name, 0, "expected header `party_id,high_risk`"));
    }

    let index: HashMap<PartyId, usize> = parties
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();
    let mut assigned: HashMap<usize, usize> = HashMap::new();

    for (i, result) in rdr.records().enumerate() {
        let row_no = i + 1;
        let rec = result.map_err(|e| Error::row(source_name, row_no, e.to_string()))?;
        let id = rec.get(0).unwrap_or("");
        let value = match rec.get(1).unwrap_or("") {
            "0" => HighRisk::No,
            "1" => HighRisk::Yes,
            other => {
                return Err(Error::row(
                    source_name,
                    row_no,
                    format!("high_risk must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let Some(&pi) = index.get(&PartyId(id.to_string())) else {
            log::warn!("{source_name}: row {row_no}: label for unknown party `{id}` skipped");
            outcome.skipped.push((row_no, id.to_string()));
            continue;
        };
        if let Some(prev) = assigned.insert(pi, row_no) {
            return Err(Error::row(
                source_name,
                row_no,
                format!("duplicate label for `{id}` (first at row {prev})"),
            ));
        }
        parties[pi].high_risk = value;
        outcome.labeled += 1;
    }
    Ok(outcome)
}

/// Write records in the ledger CSV schema, taking party attributes from `parties`.
pub fn write_ledger<W: std::io::Write>(
    writer: W,
    records: &[TransactionRecord],
    parties: &[Party],
) -> Result<()> {
    let by_id: HashMap<&PartyId, &Party> = parties.iter().map(|p| (&p.id, p)).collect();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LEDGER_HEADER)?;
    for r in records {
        let seller = by_id.get(&r.seller_id);
        let debtor = r.debtor_id.as_ref().and_then(|d| by_id.get(d));
        let amount = r.amount.to_string();
        let date = r.timestamp.format("%Y-%m-%d").to_string();
        w.write_record([
            r.txn_id.as_str(),
            date.as_str(),
            r.seller_id.as_str(),
            r.debtor_id.as_ref().map_or("", |d| d.as_str()),
            amount.as_str(),
            r.owner_id.as_deref().unwrap_or(""),
            r.representative_id.as_deref().unwrap_or(""),
            r.country.as_deref().unwrap_or(""),
            seller.map_or("", |p| p.sector_code.as_str()),
            debtor.map_or("", |p| p.sector_code.as_str()),
            seller.map_or("", |p| p.region.as_str()),
            debtor.map_or("", |p| p.region.as_str()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<ledger>", e))?;
    Ok(())
}

pub fn write_labels<W: std::io::Write>(writer: W, parties: &[Party]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["party_id", "high_risk"])?;
    for p in parties {
        let v = match p.high_risk {
            HighRisk::Unknown => continue,
            HighRisk::No => "0",
            HighRisk::Yes => "1",
        };
        w.write_record([p.id.as_str(), v])?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "txn_id,timestamp,seller_id,debtor_id,amount,owner_id,representative_id,country,seller_sector,debtor_sector,seller_region,debtor_region\n";

    fn tables() -> RiskTables {
        RiskTables::builtin()
    }

    fn parse(body: &str) -> Result<Ledger> {
        let text = format!("{HEADER}{body}");
        read_ledger(text.as_bytes(), "test.csv", &tables())
    }

    fn rec(id: &str, day: u32, seller: &str, debtor: &str, euros: i64) -> TransactionRecord {
        TransactionRecord {
            txn_id: id.into(),
            timestamp: NaiveDate::from_ymd_opt(2014, 3, day).unwrap(),
            seller_id: seller.into(),
            debtor_id: Some(debtor.into()),
            amount: Amount::from_euros(euros),
            owner_id: Some("o".into()),
            representative_id: Some("r".into()),
            country: Some("IT".into()),
        }
    }

    #[test]
    fn amount_parsing() {
        assert_eq!("16000".parse::<Amount>(), Ok(Amount::from_euros(16000)));
        assert_eq!("0.01".parse::<Amount>(), Ok(Amount::from_cents(1)));
        assert_eq!("12.5".parse::<Amount>(), Ok(Amount::from_cents(1250)));
        assert_eq!("12.50 EUR".parse::<Amount>(), Ok(Amount::from_cents(1250)));
        assert_eq!("€12".parse::<Amount>(), Ok(Amount::from_euros(12)));
        assert_eq!("1.234".parse::<Amount>(), Err(AmountParseError::Malformed));
        assert_eq!("abc.".parse::<Amount>(), Err(AmountParseError::Malformed));
        assert_eq!("$5".parse::<Amount>(), Err(AmountParseError::ForeignCurrency("$".into())));
        assert_eq!(
            "100 USD".parse::<Amount>(),
            Err(AmountParseError::ForeignCurrency("USD".into()))
        );
        assert_eq!(Amount::from_cents(123456).to_string(), "1234.56");
    }

    #[test]
    fn party_with_both_roles_is_deduplicated() {
        let ledger = parse(
            "t1,2014-01-02,A,B,20000,o1,r1,IT,43.21,10.11,Lazio,Lazio\n\
             t2,2014-01-03,C,A,20000,o2,r2,IT,62.01,43.21,Lazio,Lazio\n\
             t3,2014-01-04,C,B,20000,o2,r2,IT,62.01,10.11,Lazio,Lazio\n",
        )
        .unwrap();
        assert_eq!(ledger.records.len(), 3);
        assert_eq!(ledger.parties.len(), 3);
        let a = ledger.party(&"A".into()).unwrap();
        assert!(a.is_seller && a.is_debtor);
    }

    #[test]
    fn empty_file_is_empty_ledger() {
        let l = read_ledger(&b""[..], "empty.csv", &tables()).unwrap();
        assert!(l.records.is_empty() && l.parties.is_empty());
        let l = read_ledger(HEADER.as_bytes(), "header.csv", &tables()).unwrap();
        assert!(l.records.is_empty());
    }

    #[test]
    fn blank_debtor_is_missing() {
        let l = parse("t1,2014-01-02,A,,20000,,r1,,43.21,,Lazio,\n").unwrap();
        assert_eq!(l.records[0].debtor_id, None);
        assert_eq!(l.records[0].owner_id, None);
        assert_eq!(l.parties.len(), 1);
    }

    #[test]
    fn row_errors_name_the_row() {
        let err = parse(
            "t1,2014-01-02,A,B,20000,o,r,IT,43.21,10.11,Lazio,Lazio\n\
             t2,2014-01-02,A,B,-5,o,r,IT,43.21,10.11,Lazio,Lazio\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let err = parse(
            "t1,2014-01-02,A,B,20000,o,r,IT,43.21,10.11,Lazio,Lazio\n\
             t1,2014-01-03,A,B,20000,o,r,IT,43.21,10.11,Lazio,Lazio\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate txn_id"), "{err}");

        let err = parse("t1,2014-01-02,A,B,20000,o,r,IT,43.21,10.11,Lazio\n").unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");

        let err = parse("t1,2014-01-02,A,B,100 USD,o,r,IT,43.21,10.11,Lazio,Lazio\n").unwrap_err();
        assert!(err.to_string().contains("foreign currency"), "{err}");

        let err = parse("t1,2014-01-02,A,B,100,o,r,IT,ZZ,10.11,Lazio,Lazio\n").unwrap_err();
        assert!(err.to_string().contains("unknown sector"), "{err}");

        let err = parse("t1,2014-01-02,A,B,100,o,r,IT,43,10.11,Atlantis,Lazio\n").unwrap_err();
        assert!(err.to_string().contains("unknown region"), "{err}");

        let err = parse(
            "t1,2014-01-02,A,B,20000,o,r,IT,43.21,10.11,Lazio,Lazio\n\
             t2,2014-01-02,A,B,20000,o,r,IT,62.01,10.11,Lazio,Lazio\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("has sector"), "{err}");
    }

    #[test]
    fn foreign_debtor_takes_row_country() {
        let l = parse("t1,2014-01-02,A,B,20000,o,r,CH,43.21,10.11,Lazio,FOREIGN\n").unwrap();
        assert_eq!(l.party(&"B".into()).unwrap().country, "CH");
        assert_eq!(l.party(&"A".into()).unwrap().country, "IT");
        assert!(parse("t1,2014-01-02,A,B,20000,o,r,XX,43.21,10.11,Lazio,FOREIGN\n").is_err());
    }

    #[test]
    fn threshold_keeps_large_and_aggregated() {
        let t = tables();
        let single = vec![rec("a", 1, "S", "D", 16_000)];
        assert_eq!(apply_recording_threshold(&single, &t).kept.len(), 1);

        let smurf = vec![rec("a", 1, "S", "D", 8_000), rec("b", 4, "S", "D", 9_000)];
        let out = apply_recording_threshold(&smurf, &t);
        assert_eq!(out.kept.len(), 2);
        assert_eq!(out.dropped, 0);

        let lone = vec![rec("a", 1, "S", "D", 5_000)];
        let out = apply_recording_threshold(&lone, &t);
        assert!(out.kept.is_empty());
        assert_eq!(out.dropped, 1);
    }

    #[test]
    fn threshold_window_and_pair_boundaries() {
        let t = tables();
        // 30 days apart falls outside a 30-day window.
        let mut far = vec![rec("a", 1, "S", "D", 8_000), rec("b", 31, "S", "D", 9_000)];
        assert_eq!(apply_recording_threshold(&far, &t).kept.len(), 0);
        far[1].timestamp = NaiveDate::from_ymd_opt(2014, 3, 30).unwrap();
        assert_eq!(apply_recording_threshold(&far, &t).kept.len(), 2);

        // Different debtors never aggregate, nor does the reversed pair.
        let split = vec![
            rec("a", 1, "S", "D", 8_000),
            rec("b", 2, "S", "E", 9_000),
            rec("c", 3, "D", "S", 9_000),
        ];
        assert_eq!(apply_recording_threshold(&split, &t).kept.len(), 0);

        // Above-threshold records do not count toward the aggregate.
        let mixed = vec![rec("a", 1, "S", "D", 50_000), rec("b", 2, "S", "D", 9_000)];
        let out = apply_recording_threshold(&mixed, &t);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].txn_id, "a");
    }

    #[test]
    fn labels_apply_and_skip() {
        let mut ledger = parse(
            "t1,2014-01-02,A,B,20000,o1,r1,IT,43.21,10.11,Lazio,Lazio\n",
        )
        .unwrap();
        let out = read_labels(
            &b"party_id,high_risk\nA,1\nZ,0\n"[..],
            "labels.csv",
            &mut ledger.parties,
        )
        .unwrap();
        assert_eq!(out.labeled, 1);
        assert_eq!(out.skipped, vec![(2, "Z".to_string())]);
        assert_eq!(ledger.party(&"A".into()).unwrap().high_risk, HighRisk::Yes);
        assert_eq!(ledger.party(&"B".into()).unwrap().high_risk, HighRisk::Unknown);

        let err = read_labels(&b"party_id,high_risk\nA,2\n"[..], "l.csv", &mut ledger.parties)
            .unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");

        let out = read_labels(&b""[..], "l.csv", &mut ledger.parties).unwrap();
        assert_eq!(out.labeled, 0);
    }

    #[test]
    fn write_then_read_preserves_records() {
        let ledger = parse(
            "t1,2014-01-02,A,B,20000.5,o1,,IT,43.21,10.11,Lazio,Lazio\n\
             t2,2014-01-03,C,,15000,,r2,,62.01,,Lazio,\n",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_ledger(&mut buf, &ledger.records, &ledger.parties).unwrap();
        let again = read_ledger(&buf[..], "again.csv", &tables()).unwrap();
        assert_eq!(again, ledger);
    }
}
