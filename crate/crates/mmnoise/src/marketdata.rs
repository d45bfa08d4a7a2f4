//! Option chain and return series ingestion.
//!
//! Chains arrive as CSV with the exact header
//! `expiry_days,strike,last_price,bid,ask,volume,open_interest`; return
//! series as `date,return`, or `date,price` when loading in price mode.
//! Quotes are keyed by (expiry_days, strike), sorted on load, and cleaned
//! by two rules: drop quotes whose last price is not positive, and drop
//! quotes with zero volume and zero open interest (both stale-data
//! symptoms). The last traded price is the empirical price used by every
//! calibration routine; bid and ask are carried through untouched.

use crate::error::{Error, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHAIN_HEADER: [&str; 7] = [
    "expiry_days",
    "strike",
    "last_price",
    "bid",
    "ask",
    "volume",
    "open_interest",
];

/// A single call quote. `moneyness` is strike / spot, computed at load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub expiry_days: u32,
    pub strike: f64,
    pub last_price: f64,
    pub bid: f64,
    pub ask: f64,
    pub volume: u64,
    pub open_interest: u64,
    pub moneyness: f64,
}

#[derive(Debug, Deserialize)]
struct RawQuoteRow {
    expiry_days: u32,
    strike: f64,
    last_price: f64,
    bid: f64,
    ask: f64,
    volume: u64,
    open_interest: u64,
}

/// An option chain snapshot: quotes plus the market context they were
/// observed in (spot, per-day rate, observation date).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionChain {
    pub spot: f64,
    pub rate_daily: f64,
    pub quote_date: NaiveDate,
    pub quotes: Vec<OptionQuote>,
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got_fields: Vec<&str> = got.iter().collect();
    if got_fields != want {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!(
                "expected header '{}', got '{}'",
                want.join(","),
                got_fields.join(",")
            ),
        });
    }
    Ok(())
}

fn csv_error_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

impl OptionChain {
    /// Load a chain CSV. The header must match [`CHAIN_HEADER`] exactly.
    /// Rows are validated (positive strike, finite non-negative prices,
    /// expiry of at least one day), sorted by (expiry_days, strike), and
    /// checked for duplicate keys.
    pub fn load(
        path: impl AsRef<Path>,
        spot: f64,
        rate_daily: f64,
        quote_date: NaiveDate,
    ) -> Result<Self> {
        let path = path.as_ref();
        if !(spot > 0.0) {
            return Err(Error::Domain(format!("spot must be positive, got {spot}")));
        }
        if !rate_daily.is_finite() {
            return Err(Error::Domain(format!(
                "rate must be finite, got {rate_daily}"
            )));
        }
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Parse {
                path: path.to_path_buf(),
                line: csv_error_line(&e),
                msg: e.to_string(),
            },
        })?;
        check_header(
            path,
            rdr.headers().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: e.to_string(),
            })?,
            &CHAIN_HEADER,
        )?;

        let mut quotes = Vec::new();
        for row in rdr.deserialize::<RawQuoteRow>() {
            let row = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: csv_error_line(&e),
                msg: e.to_string(),
            })?;
            let line = quotes.len() as u64 + 2; // header is line 1
            let reject = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            };
            if row.expiry_days == 0 {
                return Err(reject("expiry_days must be at least 1".into()));
            }
            if !(row.strike > 0.0 && row.strike.is_finite()) {
                return Err(reject(format!("strike must be positive, got {}", row.strike)));
            }
            for (name, v) in [
                ("last_price", row.last_price),
                ("bid", row.bid),
                ("ask", row.ask),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(reject(format!("{name} must be non-negative, got {v}")));
                }
            }
            quotes.push(OptionQuote {
                expiry_days: row.expiry_days,
                strike: row.strike,
                last_price: row.last_price,
                bid: row.bid,
                ask: row.ask,
                volume: row.volume,
                open_interest: row.open_interest,
                moneyness: row.strike / spot,
            });
        }

        quotes.sort_by(|a, b| {
            (a.expiry_days, a.strike)
                .partial_cmp(&(b.expiry_days, b.strike))
                .expect("strikes validated finite")
        });
        for pair in quotes.windows(2) {
            if pair[0].expiry_days == pair[1].expiry_days
                && pair[0].strike.to_bits() == pair[1].strike.to_bits()
            {
                return Err(Error::DuplicateQuote {
                    expiry_days: pair[0].expiry_days,
                    strike: pair[0].strike,
                });
            }
        }

        Ok(OptionChain {
            spot,
            rate_daily,
            quote_date,
            quotes,
        })
    }

    /// Apply the two cleaning rules. Kept quotes are carried over
    /// unchanged; the operation is idempotent.
    pub fn cleaned(&self) -> Self {
        let quotes = self
            .quotes
            .iter()
            .filter(|q| q.last_price > 0.0 && !(q.volume == 0 && q.open_interest == 0))
            .cloned()
            .collect();
        OptionChain {
            quotes,
            ..self.clone()
        }
    }

    /// Partition quotes into a short-horizon chain (expiry_days at or
    /// below the boundary) and a long-horizon chain (strictly above).
    pub fn split_by_horizon(&self, boundary_days: u32) -> (Self, Self) {
        let (short, long): (Vec<_>, Vec<_>) = self
            .quotes
            .iter()
            .cloned()
            .partition(|q| q.expiry_days <= boundary_days);
        (
            OptionChain {
                quotes: short,
                ..self.clone()
            },
            OptionChain {
                quotes: long,
                ..self.clone()
            },
        )
    }

    /// Write the chain back out in the ingest schema (moneyness is
    /// derived, so it is not serialized).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        w.write_record(CHAIN_HEADER)
            .and_then(|_| {
                for q in &self.quotes {
                    w.write_record([
                        q.expiry_days.to_string(),
                        q.strike.to_string(),
                        q.last_price.to_string(),
                        q.bid.to_string(),
                        q.ask.to_string(),
                        q.volume.to_string(),
                        q.open_interest.to_string(),
                    ])?;
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: e.to_string(),
            })
    }
}

/// Which column layout a returns file uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnsKind {
    /// `date,return`: arithmetic returns, used as-is.
    Returns,
    /// `date,price`: positive price levels; converted to the n - 1
    /// arithmetic returns p_k / p_{k-1} - 1, dated by the later day.
    Prices,
}

/// A dated series of arithmetic returns. The estimation window is simply
/// the series length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn window(&self) -> usize {
        self.returns.len()
    }

    /// Load a returns CSV. Dates must be strictly increasing.
    pub fn load(path: impl AsRef<Path>, kind: ReturnsKind) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::io(path, io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Parse {
                path: path.to_path_buf(),
                line: csv_error_line(&e),
                msg: e.to_string(),
            },
        })?;
        let want: &[&str] = match kind {
            ReturnsKind::Returns => &["date", "return"],
            ReturnsKind::Prices => &["date", "price"],
        };
        check_header(
            path,
            rdr.headers().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: e.to_string(),
            })?,
            want,
        )?;

        let mut dates: Vec<NaiveDate> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (i, row) in rdr.deserialize::<(NaiveDate, f64)>().enumerate() {
            let (date, value) = row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: csv_error_line(&e),
                msg: e.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 2,
                    msg: format!("non-finite value {value}"),
                });
            }
            if kind == ReturnsKind::Prices && value <= 0.0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 2,
                    msg: format!("prices must be positive, got {value}"),
                });
            }
            if let Some(prev) = dates.last() {
                if date <= *prev {
                    return Err(Error::NonMonotoneDates { row: i + 1 });
                }
            }
            dates.push(date);
            values.push(value);
        }

        match kind {
            ReturnsKind::Returns => Ok(ReturnSeries {
                dates,
                returns: values,
            }),
            ReturnsKind::Prices => {
                if values.len() < 2 {
                    return Err(Error::InsufficientData {
                        msg: "price mode needs at least two prices".into(),
                        required: 2,
                        actual: values.len(),
                    });
                }
                let returns = values.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
                Ok(ReturnSeries {
                    dates: dates[1..].to_vec(),
                    returns,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const GOOD_CHAIN: &str = "\
expiry_days,strike,last_price,bid,ask,volume,open_interest
21,110,0.5,0.4,0.6,10,100
7,95,5.2,5.0,5.4,3,50
7,100,1.1,1.0,1.2,0,25
21,100,2.0,1.9,2.1,5,0
7,90,10.0,9.8,10.2,0,0
21,105,0.0,0.0,0.1,2,10
";

    #[test]
    fn load_sorts_and_derives_moneyness() {
        let f = write_temp(GOOD_CHAIN);
        let chain = OptionChain::load(f.path(), 100.0, 0.0001, date("2025-04-21")).unwrap();
        assert_eq!(chain.quotes.len(), 6);
        let keys: Vec<(u32, f64)> = chain
            .quotes
            .iter()
            .map(|q| (q.expiry_days, q.strike))
            .collect();
        assert_eq!(
            keys,
            vec![
                (7, 90.0),
                (7, 95.0),
                (7, 100.0),
                (21, 100.0),
                (21, 105.0),
                (21, 110.0)
            ]
        );
        assert_eq!(chain.quotes[1].moneyness, 0.95);
    }

    #[test]
    fn cleaning_drops_exactly_the_flagged_quotes() {
        let f = write_temp(GOOD_CHAIN);
        let chain = OptionChain::load(f.path(), 100.0, 0.0001, date("2025-04-21")).unwrap();
        let clean = chain.cleaned();
        // (7, 90) has zero volume and zero open interest; (21, 105) has a
        // zero last price. Everything else survives unchanged.
        let keys: Vec<(u32, f64)> = clean
            .quotes
            .iter()
            .map(|q| (q.expiry_days, q.strike))
            .collect();
        assert_eq!(keys, vec![(7, 95.0), (7, 100.0), (21, 100.0), (21, 110.0)]);
        for q in &clean.quotes {
            let orig = chain
                .quotes
                .iter()
                .find(|o| o.expiry_days == q.expiry_days && o.strike == q.strike)
                .unwrap();
            assert_eq!(q, orig);
        }
        assert_eq!(clean.cleaned(), clean);
    }

    #[test]
    fn split_respects_the_boundary() {
        let f = write_temp(GOOD_CHAIN);
        let chain = OptionChain::load(f.path(), 100.0, 0.0001, date("2025-04-21")).unwrap();
        let (short, long) = chain.split_by_horizon(7);
        assert!(short.quotes.iter().all(|q| q.expiry_days <= 7));
        assert!(long.quotes.iter().all(|q| q.expiry_days > 7));
        assert_eq!(short.quotes.len() + long.quotes.len(), chain.quotes.len());
    }

    #[test]
    fn header_mismatch_is_a_parse_error_on_line_one() {
        let f = write_temp("expiry,strike\n1,2\n");
        let err = OptionChain::load(f.path(), 100.0, 0.0, date("2025-04-21")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_field_reports_its_line() {
        let bad = "\
expiry_days,strike,last_price,bid,ask,volume,open_interest
7,100,1.1,1.0,1.2,0,25
7,oops,1.0,1.0,1.0,1,1
";
        let f = write_temp(bad);
        let err = OptionChain::load(f.path(), 100.0, 0.0, date("2025-04-21")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let dup = "\
expiry_days,strike,last_price,bid,ask,volume,open_interest
7,100,1.1,1.0,1.2,0,25
7,100,1.3,1.2,1.4,1,30
";
        let f = write_temp(dup);
        let err = OptionChain::load(f.path(), 100.0, 0.0, date("2025-04-21")).unwrap_err();
        assert!(matches!(err, Error::DuplicateQuote { expiry_days: 7, .. }));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err =
            OptionChain::load("/nonexistent/chain.csv", 100.0, 0.0, date("2025-04-21"))
                .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn chain_round_trips_through_csv() {
        let f = write_temp(GOOD_CHAIN);
        let chain = OptionChain::load(f.path(), 100.0, 0.0001, date("2025-04-21")).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        chain.write_csv(out.path()).unwrap();
        let reloaded = OptionChain::load(out.path(), 100.0, 0.0001, date("2025-04-21")).unwrap();
        assert_eq!(chain, reloaded);
    }

    #[test]
    fn returns_mode_loads_values_directly() {
        let f = write_temp("date,return\n2025-01-02,0.01\n2025-01-03,-0.002\n");
        let s = ReturnSeries::load(f.path(), ReturnsKind::Returns).unwrap();
        assert_eq!(s.window(), 2);
        assert_eq!(s.returns, vec![0.01, -0.002]);
        assert_eq!(s.dates[0], date("2025-01-02"));
    }

    #[test]
    fn price_mode_builds_arithmetic_returns() {
        let f = write_temp("date,price\n2025-01-02,100\n2025-01-03,102\n2025-01-06,51\n");
        let s = ReturnSeries::load(f.path(), ReturnsKind::Prices).unwrap();
        assert_eq!(s.window(), 2);
        assert!((s.returns[0] - 0.02).abs() < 1e-15);
        assert!((s.returns[1] - (51.0 / 102.0 - 1.0)).abs() < 1e-15);
        assert_eq!(s.dates, vec![date("2025-01-03"), date("2025-01-06")]);
    }

    #[test]
    fn non_monotone_dates_are_rejected() {
        let f = write_temp("date,return\n2025-01-03,0.01\n2025-01-02,0.01\n");
        let err = ReturnSeries::load(f.path(), ReturnsKind::Returns).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneDates { row: 2 }));
    }

    #[test]
    fn price_mode_rejects_non_positive_prices() {
        let f = write_temp("date,price\n2025-01-02,100\n2025-01-03,0\n");
        assert!(ReturnSeries::load(f.path(), ReturnsKind::Prices).is_err());
    }

    fn arb_quote() -> impl Strategy<Value = OptionQuote> {
        (
            1u32..60,
            1u32..40,
            0f64..10.0,
            0u64..3,
            0u64..3,
        )
            .prop_map(|(expiry, strike_i, price, vol, oi)| {
                let strike = 80.0 + strike_i as f64;
                OptionQuote {
                    expiry_days: expiry,
                    strike,
                    last_price: price,
                    bid: (price - 0.1).max(0.0),
                    ask: price + 0.1,
                    volume: vol,
                    open_interest: oi,
                    moneyness: strike / 100.0,
                }
            })
    }

    proptest! {
        #[test]
        fn cleaning_is_a_partition_and_idempotent(quotes in proptest::collection::vec(arb_quote(), 0..40)) {
            let chain = OptionChain {
                spot: 100.0,
                rate_daily: 0.0001,
                quote_date: date("2025-04-21"),
                quotes,
            };
            let clean = chain.cleaned();
            // Every kept quote passes both rules; every dropped quote fails one.
            for q in &clean.quotes {
                prop_assert!(q.last_price > 0.0);
                prop_assert!(!(q.volume == 0 && q.open_interest == 0));
            }
            let dropped = chain.quotes.len() - clean.quotes.len();
            let should_drop = chain
                .quotes
                .iter()
                .filter(|q| q.last_price <= 0.0 || (q.volume == 0 && q.open_interest == 0))
                .count();
            prop_assert_eq!(dropped, should_drop);
            prop_assert_eq!(clean.cleaned(), clean);
        }

        #[test]
        fn split_is_a_disjoint_cover(quotes in proptest::collection::vec(arb_quote(), 0..40), boundary in 0u32..70) {
            let chain = OptionChain {
                spot: 100.0,
                rate_daily: 0.0001,
                quote_date: date("2025-04-21"),
                quotes,
            };
            let (short, long) = chain.split_by_horizon(boundary);
            prop_assert!(short.quotes.iter().all(|q| q.expiry_days <= boundary));
            prop_assert!(long.quotes.iter().all(|q| q.expiry_days > boundary));
            let mut merged = short.quotes.clone();
            merged.extend(long.quotes.clone());
            merged.sort_by(|a, b| (a.expiry_days, a.strike).partial_cmp(&(b.expiry_days, b.strike)).unwrap());
            let mut original = chain.quotes.clone();
            original.sort_by(|a, b| (a.expiry_days, a.strike).partial_cmp(&(b.expiry_days, b.strike)).unwrap());
            prop_assert_eq!(merged, original);
        }
    }
}
