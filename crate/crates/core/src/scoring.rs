//! Risk scores on the 1-3 scale: amount bins, sector classes and
//! geographical scores for Italian regions and foreign countries.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Amount, Party};
use crate::tables::{CountryIndicators, RiskTables, SectorClass};

pub const MIN_SCORE: f64 = 1.0;
pub const MAX_SCORE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskScore(f64);

impl RiskScore {
    pub fn new(value: f64) -> Option<Self> {
        (MIN_SCORE..=MAX_SCORE).contains(&value).then_some(RiskScore(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<RiskScore> for f64 {
    fn from(s: RiskScore) -> f64 {
        s.0
    }
}

/// 1 below the first bin, 2 up to one cent below the second, 3 above.
pub fn bin_amount(amount: Amount, tables: &RiskTables) -> RiskScore {
    let [lo, hi] = tables.amount_bins;
    if amount < lo {
        RiskScore(1.0)
    } else if amount < hi {
        RiskScore(2.0)
    } else {
        RiskScore(3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRiskEntry {
    /// Scores for crime rate, suspicious operations and mafia presence.
    pub partial_scores: [u8; 3],
    pub combined: f64,
}

impl RegionRiskEntry {
    pub fn from_partials(partial_scores: [u8; 3]) -> Self {
        let sum: u32 = partial_scores.iter().map(|&s| u32::from(s)).sum();
        RegionRiskEntry {
            partial_scores,
            combined: f64::from(sum) / 3.0,
        }
    }
}

/// Ordinal 30/40/30 score of each value among `values`.
///
/// The rank of a value is one plus the number of strictly smaller values, so
/// tied values share the lower bucket. Rank `r` of `n` scores 1 when
/// `r/n <= 0.3`, 2 when `r/n <= 0.7`, and 3 otherwise.
pub fn percentile_scores(values: &[f64]) -> Vec<u8> {
    let n = values.len();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|v| {
            let rank = sorted.partition_point(|s| s < v) + 1;
            if 10 * rank <= 3 * n {
                1
            } else if 10 * rank <= 7 * n {
                2
            } else {
                3
            }
        })
        .collect()
}

pub fn region_scores(tables: &RiskTables) -> Result<BTreeMap<String, RegionRiskEntry>> {
    if tables.regions.len() < 4 {
        return Err(Error::Tables(format!(
            "region scoring needs at least 4 regions, got {}",
            tables.regions.len()
        )));
    }
    let names: Vec<&String> = tables.regions.keys().collect();
    let crime: Vec<f64> = tables.regions.values().map(|r| r.crime_rate).collect();
    let ops: Vec<f64> = tables.regions.values().map(|r| r.suspicious_ops).collect();
    let crime = percentile_scores(&crime);
    let ops = percentile_scores(&ops);
    Ok(names
        .into_iter()
        .zip(tables.regions.values())
        .enumerate()
        .map(|(i, (name, ind))| {
            let mafia = if ind.mafia_presence { 3 } else { 1 };
            (name.clone(), RegionRiskEntry::from_partials([crime[i], ops[i], mafia]))
        })
        .collect())
}

pub fn country_penalties(ind: &CountryIndicators, cpi_cutoff: f64) -> u32 {
    [
        !ind.white_list,
        ind.tax_haven,
        !ind.ocse_compliant,
        ind.cpi < cpi_cutoff,
        ind.fatf_listed,
    ]
    .into_iter()
    .filter(|&p| p)
    .count() as u32
}

/// Penalty count bucketed as 0 -> 1, 1-2 -> 2, 3 or more -> 3.
pub fn country_score(country: &str, tables: &RiskTables) -> Result<RiskScore> {
    let ind = tables
        .countries
        .get(country)
        .ok_or_else(|| Error::UnknownCountry(country.to_string()))?;
    Ok(match country_penalties(ind, tables.cpi_cutoff) {
        0 => RiskScore(1.0),
        1 | 2 => RiskScore(2.0),
        _ => RiskScore(3.0),
    })
}

pub fn node_sector_score(party: &Party, tables: &RiskTables) -> Result<RiskScore> {
    match tables.sector_class(&party.sector_code) {
        Some(SectorClass::Low) => Ok(RiskScore(1.0)),
        Some(SectorClass::High) => Ok(RiskScore(3.0)),
        None => Err(Error::UnknownSector(party.sector_code.clone())),
    }
}

pub fn node_geo_score(party: &Party, tables: &RiskTables) -> Result<RiskScore> {
    NodeScorer::new(tables)?.geo(party)
}

/// Node scoring with region scores computed once.
#[derive(Debug, Clone)]
pub struct NodeScorer<'a> {
    tables: &'a RiskTables,
    regions: BTreeMap<String, RegionRiskEntry>,
}

impl<'a> NodeScorer<'a> {
    pub fn new(tables: &'a RiskTables) -> Result<Self> {
        Ok(NodeScorer {
            tables,
            regions: region_scores(tables)?,
        })
    }

    pub fn geo(&self, party: &Party) -> Result<RiskScore> {
        if party.is_foreign() {
            country_score(&party.country, self.tables)
        } else {
            self.regions
                .get(&party.region)
                .map(|e| RiskScore(e.combined))
                .ok_or_else(|| Error::UnknownRegion(party.region.clone()))
        }
    }

    pub fn sector(&self, party: &Party) -> Result<RiskScore> {
        node_sector_score(party, self.tables)
    }
}

/// How an arc score is derived from its two endpoint scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcCombine {
    #[default]
    Mean,
    Max,
}

impl ArcCombine {
    pub fn combine(self, a: RiskScore, b: RiskScore) -> RiskScore {
        match self {
            ArcCombine::Mean => arc_score(a, b),
            ArcCombine::Max => RiskScore(a.0.max(b.0)),
        }
    }
}

impl FromStr for ArcCombine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mean" => Ok(ArcCombine::Mean),
            "max" => Ok(ArcCombine::Max),
            _ => Err(format!("expected mean|max, got `{s}`")),
        }
    }
}

impl fmt::Display for ArcCombine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcCombine::Mean => "mean",
            ArcCombine::Max => "max",
        })
    }
}

pub fn arc_score(seller: RiskScore, debtor: RiskScore) -> RiskScore {
    RiskScore((seller.0 + debtor.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{HighRisk, PartyId};
    use crate::tables::RegionIndicators;
    use proptest::prelude::*;

    fn party(sector: &str, region: &str, country: &str) -> Party {
        Party {
            id: PartyId("p".into()),
            sector_code: sector.into(),
            region: region.into(),
            country: country.into(),
            is_seller: true,
            is_debtor: false,
            high_risk: HighRisk::Unknown,
        }
    }

    fn eur(e: i64) -> Amount {
        Amount::from_euros(e)
    }

    #[test]
    fn amount_bins() {
        let t = RiskTables::builtin();
        let s = |a| bin_amount(a, &t).value();
        assert_eq!(s(eur(49_999)), 1.0);
        assert_eq!(s(eur(50_000)), 2.0);
        assert_eq!(s(eur(249_999)), 2.0);
        assert_eq!(s(Amount::from_cents(24_999_999)), 2.0);
        assert_eq!(s(eur(250_000)), 3.0);
        assert_eq!(s(Amount::from_cents(1)), 1.0);
        assert_eq!(s(eur(1_000_000)), 3.0);
    }

    /// Independent percentile oracle: position in the ascending sort of the
    /// first element equal to `v`, counted by explicit comparison loops.
    fn oracle_bucket(values: &[f64], v: f64) -> u8 {
        let n = values.len() as f64;
        let mut below = 0usize;
        for &w in values {
            if w < v {
                below += 1;
            }
        }
        let pct = (below + 1) as f64 * 100.0 / n;
        if pct <= 30.0 + 1e-9 {
            1
        } else if pct <= 70.0 + 1e-9 {
            2
        } else {
            3
        }
    }

    #[test]
    fn ten_distinct_values_split_3_4_3() {
        let values = [4.1, 2.2, 9.9, 3.3, 5.0, 7.7, 1.1, 8.8, 6.6, 0.5];
        let scores = percentile_scores(&values);
        for (s, &v) in scores.iter().zip(&values) {
            assert_eq!(*s, oracle_bucket(&values, v));
        }
        let count = |k| scores.iter().filter(|&&s| s == k).count();
        assert_eq!((count(1), count(2), count(3)), (3, 4, 3));
    }

    #[test]
    fn ties_share_lower_bucket() {
        let scores = percentile_scores(&[1.0, 1.0, 1.0, 1.0, 2.0]);
        assert_eq!(scores, vec![1, 1, 1, 1, 3]);
    }

    fn tables_with_regions(regions: &[(&str, f64, f64, bool)]) -> RiskTables {
        let mut t = RiskTables::builtin();
        t.regions = regions
            .iter()
            .map(|&(n, c, o, m)| {
                (
                    n.to_string(),
                    RegionIndicators {
                        crime_rate: c,
                        suspicious_ops: o,
                        mafia_presence: m,
                    },
                )
            })
            .collect();
        t
    }

    #[test]
    fn region_scores_extremes_and_means() {
        let t = RiskTables::builtin();
        let scores = region_scores(&t).unwrap();
        assert_eq!(scores.len(), 20);
        // Valle d'Aosta sits in the bottom 30% on every indicator of the bundled table.
        let lowest = &scores["Valle d'Aosta"];
        assert_eq!(lowest.partial_scores, [1, 1, 1]);
        assert_eq!(lowest.combined, 1.0);
        assert_eq!(RegionRiskEntry::from_partials([2, 3, 1]).combined, 2.0);

        let small = tables_with_regions(&[("a", 1.0, 1.0, false), ("b", 2.0, 2.0, true), ("c", 3.0, 3.0, false)]);
        assert!(region_scores(&small).is_err());
    }

    #[test]
    fn country_buckets() {
        let t = RiskTables::builtin();
        assert_eq!(country_score("DE", &t).unwrap().value(), 1.0);
        // Not white-listed, not compliant, CPI 27, FATF-listed.
        assert_eq!(country_score("IR", &t).unwrap().value(), 3.0);
        // Tax haven only.
        assert_eq!(country_score("LU", &t).unwrap().value(), 2.0);
        let err = country_score("ZZ", &t).unwrap_err();
        assert!(err.to_string().contains("ZZ"));

        let haven = CountryIndicators {
            white_list: true,
            tax_haven: true,
            ocse_compliant: true,
            cpi: 20.0,
            fatf_listed: true,
        };
        assert_eq!(country_penalties(&haven, 50.0), 3);
    }

    #[test]
    fn node_scores() {
        let t = tables_with_regions(&[
            ("r1", 1.0, 1.0, false),
            ("r2", 2.0, 2.0, false),
            ("r3", 3.0, 3.0, false),
            ("r4", 4.0, 4.0, true),
            ("r5", 5.0, 5.0, true),
        ]);
        let p = party("43.21", "r3", "IT");
        // rank 3 of 5 -> 2 on both indicators, mafia 1 -> (2,2,1)
        assert!((node_geo_score(&p, &t).unwrap().value() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(node_sector_score(&p, &t).unwrap().value(), 3.0);
        assert_eq!(node_sector_score(&party("10.11", "r1", "IT"), &t).unwrap().value(), 1.0);
        assert!(node_sector_score(&party("ZZ", "r1", "IT"), &t).is_err());
        assert!(node_geo_score(&party("10.11", "nowhere", "IT"), &t).is_err());
        assert_eq!(node_geo_score(&party("10.11", "FOREIGN", "IR"), &t).unwrap().value(), 3.0);
    }

    #[test]
    fn arc_scores() {
        let s = |v| RiskScore::new(v).unwrap();
        assert_eq!(arc_score(s(3.0), s(3.0)).value(), 3.0);
        assert_eq!(arc_score(s(1.0), s(3.0)).value(), 2.0);
        assert!((arc_score(s(2.0), s(7.0 / 3.0)).value() - 13.0 / 6.0).abs() < 1e-15);
        assert_eq!(ArcCombine::Max.combine(s(1.0), s(3.0)).value(), 3.0);
        assert!(RiskScore::new(0.5).is_none());
    }

    proptest! {
        #[test]
        fn bin_is_monotone(a in 1i64..100_000_000, b in 1i64..100_000_000) {
            let t = RiskTables::builtin();
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(bin_amount(Amount::from_cents(lo), &t) <= bin_amount(Amount::from_cents(hi), &t));
        }

        #[test]
        fn arc_score_symmetric_and_bounded(a in 1.0f64..=3.0, b in 1.0f64..=3.0) {
            let (x, y) = (RiskScore::new(a).unwrap(), RiskScore::new(b).unwrap());
            let m = arc_score(x, y);
            prop_assert_eq!(m, arc_score(y, x));
            prop_assert!(m.value() >= a.min(b) && m.value() <= a.max(b));
            prop_assert!(RiskScore::new(m.value()).is_some());
        }

        #[test]
        fn percentile_split_matches_oracle(values in proptest::collection::vec(0.0f64..1000.0, 4..40)) {
            let scores = percentile_scores(&values);
            for (s, &v) in scores.iter().zip(&values) {
                prop_assert_eq!(*s, oracle_bucket(&values, v));
            }
        }
    }
}
