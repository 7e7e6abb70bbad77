//! Synthetic factoring ledgers with injected laundering patterns.
//!
//! All randomness comes from a ChaCha8 stream seeded with `seed`, drawn in a
//! fixed order, so a config reproduces the same ledger byte for byte on any
//! platform. Criminal parties get larger and more frequent operations with a
//! few fixed counterparties (peripheral placement), a bias towards HIGH
//! sectors and risky regions, and more records with missing identifiers.
//! On top of that the generator can inject smurfing pairs (two
//! sub-threshold payments inside the aggregation window) and clusters of
//! sellers sharing a beneficial owner.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Amount, HighRisk, Ledger, Party, PartyId, TransactionRecord, DOMESTIC_COUNTRY, FOREIGN};
use crate::scoring::{country_score, region_scores};
use crate::tables::{RiskTables, SectorClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_parties: usize,
    /// Ledger rows, smurfing records included.
    pub n_transactions: usize,
    /// Share of labeled parties that are criminal.
    pub fraction_criminal: f64,
    /// Share of parties that carry a 0/1 label.
    pub labeled_fraction: f64,
    /// Share of parties located abroad. Foreign parties only act as debtors.
    pub foreign_fraction: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub amounts: AmountConfig,
    pub activity: ActivityConfig,
    pub missing: MissingConfig,
    pub smurfing: SmurfingConfig,
    pub shared_owner_clusters: ClusterConfig,
    pub high_risk_corridor: CorridorConfig,
}

/// Amounts above the recording threshold are `threshold + X` with
/// `X ~ LogNormal(mu, sigma)` in euros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmountConfig {
    pub mu: f64,
    pub sigma: f64,
    pub criminal_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityConfig {
    /// Log-normal spread of per-party activity weights.
    pub sigma: f64,
    /// Seller activity of criminal parties relative to the others.
    pub criminal_multiplier: f64,
    /// How often criminal parties are picked as someone else's debtor.
    pub criminal_debtor_weight: f64,
    /// Size of each criminal party's fixed set of counterparties.
    pub criminal_counterparties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingConfig {
    pub owner_rate: f64,
    pub representative_rate: f64,
    pub debtor_rate: f64,
    pub criminal_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmurfingConfig {
    pub enabled: bool,
    pub pairs: usize,
    /// The two sub-threshold amounts in euros.
    pub amounts: [f64; 2],
    pub max_gap_days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub enabled: bool,
    pub count: usize,
    pub size: usize,
    pub criminals_per_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorridorConfig {
    pub enabled: bool,
    /// Probability that a criminal party, and each of its counterparties, is
    /// drawn from HIGH sectors and high-risk areas.
    pub fraction: f64,
    pub amount_multiplier: f64,
}

impl Default for ScenarioConfig {
    /// The reference-scale preset: 559 parties and 33,670 transactions over
    /// November 2013 to June 2015, 288 labeled parties.
    fn default() -> Self {
        ScenarioConfig {
            seed: 20_150_630,
            n_parties: 559,
            n_transactions: 33_670,
            fraction_criminal: 0.128,
            labeled_fraction: 288.0 / 559.0,
            foreign_fraction: 0.05,
            start_date: NaiveDate::from_ymd_opt(2013, 11, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2015, 6, 30).expect("valid date"),
            amounts: AmountConfig::default(),
            activity: ActivityConfig::default(),
            missing: MissingConfig::default(),
            smurfing: SmurfingConfig::default(),
            shared_owner_clusters: ClusterConfig::default(),
            high_risk_corridor: CorridorConfig::default(),
        }
    }
}

impl Default for AmountConfig {
    fn default() -> Self {
        AmountConfig {
            mu: 40_000f64.ln(),
            sigma: 1.1,
            criminal_multiplier: 1.5,
        }
    }
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            sigma: 0.8,
            criminal_multiplier: 2.0,
            criminal_debtor_weight: 0.25,
            criminal_counterparties: 4,
        }
    }
}

impl Default for MissingConfig {
    fn default() -> Self {
        MissingConfig {
            owner_rate: 0.01,
            representative_rate: 0.01,
            debtor_rate: 0.005,
            criminal_multiplier: 4.0,
        }
    }
}

impl Default for SmurfingConfig {
    fn default() -> Self {
        SmurfingConfig {
            enabled: true,
            pairs: 25,
            amounts: [8_000.0, 9_000.0],
            max_gap_days: 20,
        }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            enabled: true,
            count: 18,
            size: 5,
            criminals_per_cluster: 2,
        }
    }
}

impl Default for CorridorConfig {
    fn default() -> Self {
        CorridorConfig {
            enabled: true,
            fraction: 0.6,
            amount_multiplier: 2.0,
        }
    }
}

impl ScenarioConfig {
    pub fn paper_preset() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn n_labeled(&self) -> usize {
        (self.labeled_fraction * self.n_parties as f64).round() as usize
    }

    pub fn n_criminal(&self) -> usize {
        (self.fraction_criminal * self.n_labeled() as f64).round() as usize
    }

    pub fn n_foreign(&self) -> usize {
        (self.foreign_fraction * self.n_parties as f64).round() as usize
    }

    fn smurf_pairs(&self) -> usize {
        if self.smurfing.enabled && self.n_criminal() > 0 {
            self.smurfing.pairs
        } else {
            0
        }
    }

    fn clusters(&self) -> usize {
        if self.shared_owner_clusters.enabled && self.n_criminal() > 0 {
            self.shared_owner_clusters.count
        } else {
            0
        }
    }

    /// Reject configs that cannot be generated as stated.
    pub fn validate(&self, tables: &RiskTables) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        for (name, v) in [
            ("fraction_criminal", self.fraction_criminal),
            ("labeled_fraction", self.labeled_fraction),
            ("foreign_fraction", self.foreign_fraction),
            ("high_risk_corridor.fraction", self.high_risk_corridor.fraction),
            ("missing.owner_rate", self.missing.owner_rate),
            ("missing.representative_rate", self.missing.representative_rate),
            ("missing.debtor_rate", self.missing.debtor_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if self.n_parties < 2 {
            return bad(format!("need at least 2 parties, got {}", self.n_parties));
        }
        let domestic = self.n_parties - self.n_foreign();
        if domestic < 1 {
            return bad("at least one domestic party is required".into());
        }
        if self.n_criminal() > domestic {
            return bad(format!("{} criminal parties exceed {domestic} domestic parties", self.n_criminal()));
        }
        let needed = self.n_parties + 2 * self.smurf_pairs();
        if self.n_transactions < needed {
            return bad(format!(
                "{} transactions cannot cover {} parties plus {} smurfing records",
                self.n_transactions,
                self.n_parties,
                2 * self.smurf_pairs()
            ));
        }
        if self.end_date < self.start_date {
            return bad("end_date precedes start_date".into());
        }
        let span = (self.end_date - self.start_date).num_days();
        for (name, v) in [
            ("amounts.sigma", self.amounts.sigma),
            ("activity.sigma", self.activity.sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        for (name, v) in [
            ("amounts.criminal_multiplier", self.amounts.criminal_multiplier),
            ("activity.criminal_multiplier", self.activity.criminal_multiplier),
            ("activity.criminal_debtor_weight", self.activity.criminal_debtor_weight),
            ("missing.criminal_multiplier", self.missing.criminal_multiplier),
            ("high_risk_corridor.amount_multiplier", self.high_risk_corridor.amount_multiplier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.activity.criminal_counterparties == 0 {
            return bad("activity.criminal_counterparties must be at least 1".into());
        }
        if self.smurf_pairs() > 0 {
            let threshold = tables.recording_threshold.euros();
            let [a, b] = self.smurfing.amounts;
            if !(a > 0.0 && b > 0.0 && a < threshold && b < threshold) {
                return bad(format!("smurfing amounts must be positive and below {threshold}"));
            }
            if a + b < threshold {
                return bad(format!("smurfing amounts sum to {} which is below the threshold {threshold}", a + b));
            }
            if self.smurfing.max_gap_days >= tables.aggregation_window_days {
                return bad(format!(
                    "smurfing.max_gap_days must be below the {}-day aggregation window",
                    tables.aggregation_window_days
                ));
            }
            if i64::from(self.smurfing.max_gap_days) > span {
                return bad("smurfing gap exceeds the date range".into());
            }
        }
        if self.clusters() > 0 {
            let c = &self.shared_owner_clusters;
            if c.size < 2 {
                return bad(format!("cluster size must be at least 2, got {}", c.size));
            }
            if c.criminals_per_cluster > c.size {
                return bad("criminals_per_cluster exceeds cluster size".into());
            }
            if c.count * c.size > domestic {
                return bad(format!(
                    "{} clusters of {} exceed {domestic} domestic parties",
                    c.count, c.size
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmurfingInstance {
    pub seller: PartyId,
    pub debtor: PartyId,
    pub txn_ids: [String; 2],
    pub dates: [NaiveDate; 2],
    pub amounts: [Amount; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnerCluster {
    pub owner_id: String,
    pub members: Vec<PartyId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorTrader {
    pub party: PartyId,
    pub corridor_transactions: usize,
}

/// What was injected, for checking recovery downstream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthReport {
    pub criminals: Vec<PartyId>,
    pub smurfing: Vec<SmurfingInstance>,
    pub shared_owner_clusters: Vec<OwnerCluster>,
    pub high_risk_corridor: Vec<CorridorTrader>,
}

impl TruthReport {
    pub fn is_empty(&self) -> bool {
        self.criminals.is_empty()
            && self.smurfing.is_empty()
            && self.shared_owner_clusters.is_empty()
            && self.high_risk_corridor.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    /// Records in ledger order; parties carry the generated labels.
    pub ledger: Ledger,
    pub truth: TruthReport,
}

struct Draft {
    id: PartyId,
    sector: String,
    region: String,
    country: String,
    criminal: bool,
    owner: String,
    representative: String,
    seller_weight: f64,
    debtor_weight: f64,
    counterparties: Vec<usize>,
}

struct Generator<'a> {
    cfg: &'a ScenarioConfig,
    tables: &'a RiskTables,
    rng: ChaCha8Rng,
    parties: Vec<Draft>,
    records: Vec<TransactionRecord>,
    corridor_counts: BTreeMap<usize, usize>,
    amount_dist: LogNormal<f64>,
    risky: Vec<bool>,
    labeled: Vec<bool>,
}

fn width(n: usize) -> usize {
    n.to_string().len().max(4)
}

pub fn generate(cfg: &ScenarioConfig, tables: &RiskTables) -> Result<SyntheticDataset> {
    cfg.validate(tables)?;
    let amount_dist = LogNormal::new(cfg.amounts.mu, cfg.amounts.sigma)
        .map_err(|e| Error::Scenario(format!("amount distribution: {e}")))?;
    let mut g = Generator {
        cfg,
        tables,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        parties: Vec::new(),
        records: Vec::with_capacity(cfg.n_transactions),
        corridor_counts: BTreeMap::new(),
        amount_dist,
        risky: Vec::new(),
        labeled: Vec::new(),
    };
    g.make_parties()?;
    let clusters = g.make_clusters();
    g.pick_counterparties();
    g.coverage_records();
    let smurfing = g.smurfing_records();
    g.bulk_records();
    g.records.sort_by_key(|r| r.timestamp);
    let w = width(g.records.len()).max(6);
    let mut rename = BTreeMap::new();
    for (i, r) in g.records.iter_mut().enumerate() {
        let id = format!("T{:0w$}", i + 1);
        rename.insert(std::mem::replace(&mut r.txn_id, id.clone()), id);
    }
    let smurfing = smurfing
        .into_iter()
        .map(|mut s| {
            s.txn_ids = s.txn_ids.map(|t| rename[&t].clone());
            s
        })
        .collect();
    Ok(g.finish(clusters, smurfing))
}

impl Generator<'_> {
    fn make_parties(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let n = cfg.n_parties;
        let w = width(n);
        let n_foreign = cfg.n_foreign();
        let n_domestic = n - n_foreign;

        let (low, high): (Vec<&String>, Vec<&String>) = {
            let mut low = Vec::new();
            let mut high = Vec::new();
            for (code, class) in &self.tables.sectors {
                match class {
                    SectorClass::Low => low.push(code),
                    SectorClass::High => high.push(code),
                }
            }
            (low, high)
        };
        if low.is_empty() && high.is_empty() {
            return Err(Error::Scenario("sector table is empty".into()));
        }
        let regions = region_scores(self.tables)?;
        let all_regions: Vec<&String> = regions.keys().collect();
        let risky_regions: Vec<&String> = regions.iter().filter(|(_, e)| e.combined >= 2.5).map(|(k, _)| k).collect();
        let mut countries = Vec::new();
        let mut risky_countries = Vec::new();
        for c in self.tables.countries.keys().filter(|c| c.as_str() != DOMESTIC_COUNTRY) {
            countries.push(c);
            if country_score(c, self.tables)?.value() >= 3.0 {
                risky_countries.push(c);
            }
        }
        if all_regions.is_empty() {
            return Err(Error::Scenario("region table is empty".into()));
        }
        if n_foreign > 0 && countries.is_empty() {
            return Err(Error::Scenario("foreign parties requested but the country table is empty".into()));
        }

        // Criminals are drawn among domestic parties, then labels are spread
        // over the rest.
        let mut domestic_idx: Vec<usize> = (0..n_domestic).collect();
        domestic_idx.shuffle(&mut self.rng);
        let criminal: Vec<bool> = {
            let mut v = vec![false; n];
            for &i in &domestic_idx[..cfg.n_criminal()] {
                v[i] = true;
            }
            v
        };
        let mut others: Vec<usize> = (0..n).filter(|&i| !criminal[i]).collect();
        others.shuffle(&mut self.rng);
        let mut labeled = criminal.clone();
        for &i in others.iter().take(cfg.n_labeled() - cfg.n_criminal()) {
            labeled[i] = true;
        }

        let activity = LogNormal::new(0.0, cfg.activity.sigma).map_err(|e| Error::Scenario(e.to_string()))?;
        let corridor = cfg.high_risk_corridor.enabled && cfg.high_risk_corridor.fraction > 0.0;
        for (i, &is_criminal) in criminal.iter().enumerate() {
            let foreign = i >= n_domestic;
            let risky_profile = is_criminal && corridor && self.rng.random::<f64>() < cfg.high_risk_corridor.fraction;
            let high_sector = if risky_profile { true } else { self.rng.random::<f64>() < 0.2 };
            let sector_pool = if (high_sector && !high.is_empty()) || low.is_empty() { &high } else { &low };
            let sector = sector_pool.choose(&mut self.rng).expect("non-empty").to_string();
            let (region, country) = if foreign {
                let pool = if risky_profile && !risky_countries.is_empty() { &risky_countries } else { &countries };
                (FOREIGN.to_string(), pool.choose(&mut self.rng).expect("non-empty").to_string())
            } else {
                let pool = if risky_profile && !risky_regions.is_empty() { &risky_regions } else { &all_regions };
                (pool.choose(&mut self.rng).expect("non-empty").to_string(), DOMESTIC_COUNTRY.to_string())
            };
            let base: f64 = activity.sample(&mut self.rng);
            let (seller_weight, debtor_weight) = if criminal[i] {
                (base * cfg.activity.criminal_multiplier, base * cfg.activity.criminal_debtor_weight)
            } else {
                (base, base)
            };
            self.parties.push(Draft {
                id: PartyId(format!("P{:0w$}", i + 1)),
                sector,
                region,
                country,
                criminal: criminal[i],
                owner: format!("O{:0w$}", i + 1),
                representative: format!("R{:0w$}", i + 1),
                seller_weight: if foreign { 0.0 } else { seller_weight },
                debtor_weight,
                counterparties: Vec::new(),
            });
        }
        self.labeled = labeled;
        self.risky = self
            .parties
            .iter()
            .map(|p| {
                self.tables.sector_class(&p.sector) == Some(SectorClass::High)
                    || if p.region == FOREIGN {
                        risky_countries.iter().any(|c| **c == p.country)
                    } else {
                        risky_regions.iter().any(|r| **r == p.region)
                    }
            })
            .collect();
        Ok(())
    }

    fn make_clusters(&mut self) -> Vec<OwnerCluster> {
        let count = self.cfg.clusters();
        if count == 0 {
            return Vec::new();
        }
        let c = &self.cfg.shared_owner_clusters;
        let domestic = self.cfg.n_parties - self.cfg.n_foreign();
        let mut criminals: Vec<usize> = (0..domestic).filter(|&i| self.parties[i].criminal).collect();
        let mut others: Vec<usize> = (0..domestic).filter(|&i| !self.parties[i].criminal).collect();
        criminals.shuffle(&mut self.rng);
        others.shuffle(&mut self.rng);
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let mut members = Vec::with_capacity(c.size);
            while members.len() < c.criminals_per_cluster {
                match criminals.pop() {
                    Some(i) => members.push(i),
                    None => break,
                }
            }
            while members.len() < c.size {
                // Validation guarantees enough domestic parties overall.
                match others.pop().or_else(|| criminals.pop()) {
                    Some(i) => members.push(i),
                    None => break,
                }
            }
            members.sort_unstable();
            let owner_id = format!("OX{:03}", k + 1);
            for &m in &members {
                self.parties[m].owner = owner_id.clone();
            }
            out.push(OwnerCluster {
                owner_id,
                members: members.iter().map(|&m| self.parties[m].id.clone()).collect(),
            });
        }
        out
    }

    fn pick_counterparties(&mut self) {
        let n = self.parties.len();
        let k = self.cfg.activity.criminal_counterparties.min(n - 1);
        let corridor = &self.cfg.high_risk_corridor;
        for i in 0..n {
            if !self.parties[i].criminal {
                continue;
            }
            let risky_pool: Vec<usize> = (0..n).filter(|&j| j != i && self.risky[j]).collect();
            let mut set: Vec<usize> = Vec::with_capacity(k);
            while set.len() < k {
                let use_risky =
                    corridor.enabled && !risky_pool.is_empty() && self.rng.random::<f64>() < corridor.fraction;
                let j = if use_risky {
                    *risky_pool.choose(&mut self.rng).expect("non-empty")
                } else {
                    self.rng.random_range(0..n)
                };
                if j != i && !set.contains(&j) {
                    set.push(j);
                }
            }
            self.parties[i].counterparties = set;
        }
    }

    fn random_date(&mut self, last_offset: i64) -> NaiveDate {
        let span = (self.cfg.end_date - self.cfg.start_date).num_days() - last_offset;
        let d = self.rng.random_range(0..=span.max(0)) as u64;
        self.cfg.start_date + Days::new(d)
    }

    fn pick_debtor(&mut self, seller: usize, weights: &WeightedIndex<f64>) -> usize {
        if self.parties[seller].criminal {
            return *self.parties[seller].counterparties.choose(&mut self.rng).expect("counterparties");
        }
        loop {
            let j = weights.sample(&mut self.rng);
            if j != seller {
                return j;
            }
        }
    }

    fn bulk_amount(&mut self, seller: usize, debtor: usize) -> Amount {
        let mut x: f64 = self.amount_dist.sample(&mut self.rng);
        if self.parties[seller].criminal {
            x *= self.cfg.amounts.criminal_multiplier;
            if self.cfg.high_risk_corridor.enabled && self.risky[debtor] {
                x *= self.cfg.high_risk_corridor.amount_multiplier;
                *self.corridor_counts.entry(seller).or_default() += 1;
            }
        }
        let cents = self.tables.recording_threshold.cents() + (x * 100.0).round() as i64;
        Amount::from_cents(cents)
    }

    fn push(&mut self, seller: usize, debtor: Option<usize>, amount: Amount, date: NaiveDate, complete: bool) {
        let m = &self.cfg.missing;
        let factor = if self.parties[seller].criminal { m.criminal_multiplier } else { 1.0 };
        let owner_missing = self.rng.random::<f64>() < (m.owner_rate * factor).min(1.0);
        let rep_missing = self.rng.random::<f64>() < (m.representative_rate * factor).min(1.0);
        let p = &self.parties[seller];
        let record = TransactionRecord {
            txn_id: format!("tmp{}", self.records.len()),
            timestamp: date,
            seller_id: p.id.clone(),
            debtor_id: debtor.map(|d| self.parties[d].id.clone()),
            amount,
            owner_id: (complete || !owner_missing).then(|| p.owner.clone()),
            representative_id: (complete || !rep_missing).then(|| p.representative.clone()),
            country: debtor.map(|d| self.parties[d].country.clone()),
        };
        self.records.push(record);
    }

    fn weights(&self) -> (WeightedIndex<f64>, WeightedIndex<f64>) {
        let sellers = WeightedIndex::new(self.parties.iter().map(|p| p.seller_weight)).expect("a domestic seller");
        let debtors = WeightedIndex::new(self.parties.iter().map(|p| p.debtor_weight)).expect("positive weights");
        (sellers, debtors)
    }

    /// One complete record per party so every party is a node and every
    /// cluster member carries its shared owner at least once.
    fn coverage_records(&mut self) {
        let (sellers, debtors) = self.weights();
        for i in 0..self.parties.len() {
            let date = self.random_date(0);
            if self.parties[i].seller_weight > 0.0 {
                let d = self.pick_debtor(i, &debtors);
                let amount = self.bulk_amount(i, d);
                self.push(i, Some(d), amount, date, true);
            } else {
                let s = loop {
                    let s = sellers.sample(&mut self.rng);
                    if s != i {
                        break s;
                    }
                };
                let amount = self.bulk_amount(s, i);
                self.push(s, Some(i), amount, date, true);
            }
        }
    }

    fn smurfing_records(&mut self) -> Vec<SmurfingInstance> {
        let pairs = self.cfg.smurf_pairs();
        let criminals: Vec<usize> = (0..self.parties.len()).filter(|&i| self.parties[i].criminal).collect();
        let mut out = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let seller = *criminals.choose(&mut self.rng).expect("criminals exist when smurfing is active");
            let debtor = *self.parties[seller].counterparties.choose(&mut self.rng).expect("counterparties");
            let gap = i64::from(self.rng.random_range(0..=self.cfg.smurfing.max_gap_days));
            let d1 = self.random_date(gap);
            let d2 = d1 + Days::new(gap as u64);
            let amounts = self.cfg.smurfing.amounts.map(|e| Amount::from_cents((e * 100.0).round() as i64));
            let first = self.records.len();
            self.push(seller, Some(debtor), amounts[0], d1, false);
            self.push(seller, Some(debtor), amounts[1], d2, false);
            out.push(SmurfingInstance {
                seller: self.parties[seller].id.clone(),
                debtor: self.parties[debtor].id.clone(),
                txn_ids: [self.records[first].txn_id.clone(), self.records[first + 1].txn_id.clone()],
                dates: [d1, d2],
                amounts,
            });
        }
        out
    }

    fn bulk_records(&mut self) {
        let (sellers, debtors) = self.weights();
        while self.records.len() < self.cfg.n_transactions {
            let seller = sellers.sample(&mut self.rng);
            let debtor = self.pick_debtor(seller, &debtors);
            let amount = self.bulk_amount(seller, debtor);
            let date = self.random_date(0);
            let factor = if self.parties[seller].criminal { self.cfg.missing.criminal_multiplier } else { 1.0 };
            let missing_debtor = self.rng.random::<f64>() < (self.cfg.missing.debtor_rate * factor).min(1.0);
            self.push(seller, (!missing_debtor).then_some(debtor), amount, date, false);
        }
    }

    fn finish(self, shared_owner_clusters: Vec<OwnerCluster>, smurfing: Vec<SmurfingInstance>) -> SyntheticDataset {
        let n = self.parties.len();
        let mut is_seller = vec![false; n];
        let mut is_debtor = vec![false; n];
        let index: BTreeMap<&PartyId, usize> = self.parties.iter().enumerate().map(|(i, p)| (&p.id, i)).collect();
        for r in &self.records {
            is_seller[index[&r.seller_id]] = true;
            if let Some(d) = &r.debtor_id {
                is_debtor[index[d]] = true;
            }
        }
        let parties: Vec<Party> = self
            .parties
            .iter()
            .enumerate()
            .map(|(i, p)| Party {
                id: p.id.clone(),
                sector_code: p.sector.clone(),
                region: p.region.clone(),
                country: p.country.clone(),
                is_seller: is_seller[i],
                is_debtor: is_debtor[i],
                high_risk: match (p.criminal, self.labeled[i]) {
                    (true, _) => HighRisk::Yes,
                    (false, true) => HighRisk::No,
                    (false, false) => HighRisk::Unknown,
                },
            })
            .collect();
        let truth = TruthReport {
            criminals: self.parties.iter().filter(|p| p.criminal).map(|p| p.id.clone()).collect(),
            smurfing,
            shared_owner_clusters,
            high_risk_corridor: self
                .corridor_counts
                .iter()
                .map(|(&i, &c)| CorridorTrader {
                    party: self.parties[i].id.clone(),
                    corridor_transactions: c,
                })
                .collect(),
        };
        SyntheticDataset {
            ledger: Ledger {
                records: self.records,
                parties,
            },
            truth,
        }
    }
}
