//! Hit rate, predictive accuracy index, and the rolling backtest protocol.
//!
//! A backtest slides a fixed-length training window through the catalog in
//! fixed shifts; each sample trains a method on its window, predicts a
//! single lead day (or an aggregated lead window), and scores the map
//! against the events that actually occurred. Curves are averaged over
//! samples and summarized over the 1..30% area fractions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::gridding::GridSpec;
use crate::ingest::EventCatalog;
use crate::predict::IntensityMap;

/// One point of a hit-rate curve: the achieved area fraction `a/A`, the hit
/// rate, and `PAI = hit_rate / (a/A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub hit_rate: f64,
    pub pai: f64,
}

/// Hit-rate/PAI curve of one intensity map scored against one day of
/// events.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HitCurve {
    pub points: Vec<CurvePoint>,
    /// Events scored (including any in ineligible cells).
    pub n_crimes: usize,
    /// Eligible cell count A.
    pub n_eligible: usize,
}

/// Scores a map against observed events at the requested area fractions.
///
/// The top `a = round(fraction * A)` eligible cells are selected in
/// descending map order (ties broken by ascending cell index); the hit rate
/// is the share of events landing in selected cells. Events outside the
/// grid or in ineligible cells stay in the denominator but can never be
/// hit. Scoring an empty day is an error so callers can skip and record it.
pub fn hit_rate_curve(
    map: &IntensityMap,
    actual: &EventCatalog,
    fractions: &[f64],
) -> Result<HitCurve> {
    if actual.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let n_eligible = map.n_eligible();
    if n_eligible == 0 {
        return Err(Error::NoEligibleCells);
    }

    let ranked = map.ranked_cells();
    let mut rank_of = vec![usize::MAX; map.values.len()];
    for (rank, &flat) in ranked.iter().enumerate() {
        rank_of[flat] = rank;
    }

    // Selection rank of each event's cell; MAX for unhittable events.
    let event_ranks: Vec<usize> = actual
        .events
        .iter()
        .map(|e| match map.spec.cell_of(e.x, e.y) {
            Some((i, j)) => rank_of[map.spec.flat(i, j)],
            None => usize::MAX,
        })
        .collect();

    let n_crimes = actual.len();
    let points = fractions
        .iter()
        .map(|&fraction| {
            let a = (fraction * n_eligible as f64).round() as usize;
            let a = a.min(n_eligible);
            let hits = event_ranks.iter().filter(|&&r| r < a).count();
            let hit_rate = hits as f64 / n_crimes as f64;
            let achieved = a as f64 / n_eligible as f64;
            let pai = if a > 0 { hit_rate / achieved } else { 0.0 };
            CurvePoint {
                fraction: achieved,
                hit_rate,
                pai,
            }
        })
        .collect();

    Ok(HitCurve {
        points,
        n_crimes,
        n_eligible,
    })
}

/// How a multi-day lead is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeadMode {
    /// Predict the single day `lead` days past the window end; score
    /// against that day's events.
    SingleDay,
    /// Sum the intensity over the `lead`-day window and score against all
    /// its events.
    Aggregate,
}

/// Rolling backtest parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Protocol {
    /// Training window length, days.
    pub training_days: usize,
    /// Window shift between samples, days.
    pub shift_days: usize,
    /// Number of samples.
    pub samples: usize,
    /// Days past the window end of the (last) predicted day.
    pub lead_days: usize,
    pub lead_mode: LeadMode,
    /// Day index of the first window start.
    pub start_day: usize,
    /// Area fractions scored; defaults to 1%..=30%.
    pub fractions: Vec<f64>,
}

/// The 1..=30 integer percent fractions.
pub fn default_fractions() -> Vec<f64> {
    (1..=30).map(|p| p as f64 / 100.0).collect()
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            training_days: 400,
            shift_days: 2,
            samples: 50,
            lead_days: 1,
            lead_mode: LeadMode::SingleDay,
            start_day: 0,
            fractions: default_fractions(),
        }
    }
}

/// The lead window a forecaster must cover, in days relative to its
/// (rebased) training catalog.
#[derive(Debug, Clone, Copy)]
pub struct LeadWindow {
    /// First day past the training window.
    pub first_day: usize,
    pub n_days: usize,
    pub mode: LeadMode,
}

impl LeadWindow {
    /// The single day scored in [`LeadMode::SingleDay`].
    pub fn target_day(&self) -> usize {
        self.first_day + self.n_days - 1
    }
}

/// A method under test: trains on a catalog whose times live in
/// `[0, training_days)` and produces an intensity map for the lead window.
pub trait Forecaster: Sync {
    fn name(&self) -> &str;
    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap>;
}

/// One backtest sample: its window, what happened, and the curve when
/// scored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    /// Training window `[start, end)` in dataset day indices.
    pub window: (usize, usize),
    /// Last predicted day, dataset day index.
    pub target_day: usize,
    pub n_train: usize,
    pub curve: Option<HitCurve>,
    pub skipped: Option<String>,
}

/// Aggregated backtest results for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestReport {
    pub method: String,
    pub samples: Vec<SampleOutcome>,
    /// Requested fractions (the x grid of `mean_curve`).
    pub fractions: Vec<f64>,
    /// Sample-mean curve over the scored samples.
    pub mean_curve: Vec<CurvePoint>,
    pub n_scored: usize,
    /// Mean of the mean curve's hit rate over the fractions, percent.
    pub mean_hit_rate_pct: f64,
    /// Mean of the mean curve's PAI over the fractions.
    pub mean_pai: f64,
}

/// Scalar summary row: (mean hit rate %, mean PAI).
pub fn summarize(report: &BacktestReport) -> (f64, f64) {
    (report.mean_hit_rate_pct, report.mean_pai)
}

/// Runs the rolling protocol for one method.
///
/// Sample `s` trains on `[start + s*shift, start + s*shift + L)` and scores
/// the day `lead` days past the window end (or the whole lead window in
/// aggregate mode). Samples without training events or without events to
/// score are skipped and recorded.
pub fn backtest(
    dataset: &EventCatalog,
    method: &dyn Forecaster,
    spec: &GridSpec,
    protocol: &Protocol,
) -> Result<BacktestReport> {
    let needed = protocol.start_day
        + protocol.training_days
        + protocol.shift_days * protocol.samples.saturating_sub(1)
        + protocol.lead_days;
    let available = dataset.day_span();
    if needed > available {
        return Err(Error::ProtocolTooLong { needed, available });
    }

    let samples: Vec<SampleOutcome> = exec::map_range(protocol.samples, |s| {
        let w0 = protocol.start_day + s * protocol.shift_days;
        let w1 = w0 + protocol.training_days;
        let target_abs = w1 + protocol.lead_days - 1;
        let train = dataset.window(w0, w1);
        let mut outcome = SampleOutcome {
            index: s,
            window: (w0, w1),
            target_day: target_abs,
            n_train: train.len(),
            curve: None,
            skipped: None,
        };
        if train.is_empty() {
            outcome.skipped = Some("no training events".into());
            return outcome;
        }
        let actual = match protocol.lead_mode {
            LeadMode::SingleDay => dataset.window(target_abs, target_abs + 1),
            LeadMode::Aggregate => dataset.window(w1, w1 + protocol.lead_days),
        };
        if actual.is_empty() {
            outcome.skipped = Some("no events on the target day".into());
            return outcome;
        }
        let lead = LeadWindow {
            first_day: protocol.training_days,
            n_days: protocol.lead_days,
            mode: protocol.lead_mode,
        };
        match method
            .forecast(&train, spec, lead)
            .and_then(|map| hit_rate_curve(&map, &actual, &protocol.fractions))
        {
            Ok(curve) => outcome.curve = Some(curve),
            Err(e) => outcome.skipped = Some(e.to_string()),
        }
        outcome
    });

    let scored: Vec<HitCurve> = samples.iter().filter_map(|s| s.curve.clone()).collect();
    if scored.is_empty() {
        return Err(Error::AllSamplesSkipped(protocol.samples));
    }
    let n_points = protocol.fractions.len();
    let mean_curve: Vec<CurvePoint> = (0..n_points)
        .map(|p| {
            let fraction = scored[0].points[p].fraction;
            let hit_rate =
                scored.iter().map(|c| c.points[p].hit_rate).sum::<f64>() / scored.len() as f64;
            let pai = if fraction > 0.0 { hit_rate / fraction } else { 0.0 };
            CurvePoint {
                fraction,
                hit_rate,
                pai,
            }
        })
        .collect();
    let mean_hit_rate_pct =
        100.0 * mean_curve.iter().map(|p| p.hit_rate).sum::<f64>() / n_points as f64;
    let mean_pai = mean_curve.iter().map(|p| p.pai).sum::<f64>() / n_points as f64;

    Ok(BacktestReport {
        method: method.name().to_string(),
        samples,
        fractions: protocol.fractions.clone(),
        mean_curve,
        n_scored: scored.len(),
        mean_hit_rate_pct,
        mean_pai,
    })
}

/// Writes the full report (curves plus metadata) as JSON.
pub fn write_report_json<W: std::io::Write>(report: &BacktestReport, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, report).map_err(|e| Error::Metadata(e.to_string()))?;
    Ok(())
}

/// Writes plot-ready mean curves: `(fraction, hit_rate, pai)` per method.
pub fn write_curves_csv<W: std::io::Write>(reports: &[&BacktestReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "fraction", "hit_rate", "pai"])?;
    for report in reports {
        for p in &report.mean_curve {
            w.write_record([
                report.method.clone(),
                p.fraction.to_string(),
                p.hit_rate.to_string(),
                p.pai.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the summary table: one row per method, mean hit % and mean PAI.
pub fn write_table_csv<W: std::io::Write>(reports: &[&BacktestReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "mean_hit_rate_pct", "mean_pai", "samples_scored"])?;
    for report in reports {
        w.write_record([
            report.method.clone(),
            format!("{:.4}", report.mean_hit_rate_pct),
            format!("{:.4}", report.mean_pai),
            report.n_scored.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Event;
    use chrono::NaiveDate;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn catalog_at(points: &[(f64, f64, f64)]) -> EventCatalog {
        let mut events: Vec<Event> = points
            .iter()
            .map(|&(t, x, y)| Event {
                time: t,
                lat: 0.0,
                lon: 0.0,
                x,
                y,
                kind: "test".into(),
            })
            .collect();
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        EventCatalog {
            events,
            epoch: NaiveDate::from_ymd_opt(2010, 5, 5).unwrap(),
            center: (41.765, -87.665),
            radius_km: None,
        }
    }

    /// 2 x 2 grid, all cells eligible, for the worked example.
    fn tiny_map(values: [f64; 4]) -> IntensityMap {
        let spec = GridSpec {
            dx: 1.0,
            dt: 1.0,
            nx: 2,
            ny: 2,
            nt: 1,
            origin: (0.0, 0.0),
        };
        IntensityMap {
            values: values.to_vec(),
            spec,
            target_day: 0,
            method: "test".into(),
            eligible: vec![true; 4],
        }
    }

    /// Events placed in the middle of the given flat cells of the 2 x 2 grid.
    fn crimes_in_cells(cells: &[usize]) -> EventCatalog {
        let pts: Vec<(f64, f64, f64)> = cells
            .iter()
            .map(|&c| {
                let (i, j) = (c % 2, c / 2);
                (0.5, i as f64 + 0.5, j as f64 + 0.5)
            })
            .collect();
        catalog_at(&pts)
    }

    #[test]
    fn four_cell_worked_example() {
        let map = tiny_map([3.0, 1.0, 2.0, 0.0]);
        let actual = crimes_in_cells(&[0, 0, 2, 3]);
        let curve = hit_rate_curve(&map, &actual, &[0.25]).unwrap();
        assert_eq!(curve.points[0].fraction, 0.25);
        assert_eq!(curve.points[0].hit_rate, 0.5);
        assert_eq!(curve.points[0].pai, 2.0);
    }

    #[test]
    fn full_fraction_hits_everything() {
        let map = tiny_map([3.0, 1.0, 2.0, 0.0]);
        let actual = crimes_in_cells(&[0, 1, 2, 3]);
        let curve = hit_rate_curve(&map, &actual, &[1.0]).unwrap();
        assert_eq!(curve.points[0].hit_rate, 1.0);
        assert_eq!(curve.points[0].pai, 1.0);
    }

    #[test]
    fn empty_actual_is_an_error() {
        let map = tiny_map([1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            hit_rate_curve(&map, &catalog_at(&[]), &[0.25]),
            Err(Error::EmptyTarget)
        ));
    }

    #[test]
    fn pai_identity_and_monotonicity_on_random_maps() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let mut rng = StdRng::seed_from_u64(17);
        let fractions = default_fractions();
        for _ in 0..50 {
            let map = IntensityMap {
                values: (0..spec.n_cells()).map(|_| rng.gen_range(0.0..1.0)).collect(),
                spec,
                target_day: 1,
                method: "random".into(),
                eligible: spec.disc_mask(Some(5.0)),
            };
            let pts: Vec<(f64, f64, f64)> = (0..30)
                .map(|_| {
                    let r = 5.0 * rng.gen_range(0.0f64..1.0).sqrt();
                    let th = rng.gen_range(0.0..std::f64::consts::TAU);
                    (0.5, r * th.cos(), r * th.sin())
                })
                .collect();
            let actual = catalog_at(&pts);
            let curve = hit_rate_curve(&map, &actual, &fractions).unwrap();
            let mut prev = -1.0;
            for p in &curve.points {
                assert!(p.hit_rate >= prev);
                prev = p.hit_rate;
                // PAI * (a/A) = hit rate; division and re-multiplication may
                // round once, so allow a single ulp.
                let restored = p.pai * p.fraction;
                assert!((restored - p.hit_rate).abs() <= f64::EPSILON * p.hit_rate.max(1.0));
            }
        }
    }

    #[test]
    fn rank_invariance_under_increasing_transform() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let mut rng = StdRng::seed_from_u64(23);
        let values: Vec<f64> = (0..spec.n_cells()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let transformed: Vec<f64> = values.iter().map(|v| (3.0 * v).exp() + 1.0).collect();
        let eligible = spec.disc_mask(Some(5.0));
        let base = IntensityMap {
            values,
            spec,
            target_day: 1,
            method: "a".into(),
            eligible: eligible.clone(),
        };
        let warped = IntensityMap {
            values: transformed,
            spec,
            target_day: 1,
            method: "b".into(),
            eligible,
        };
        let pts: Vec<(f64, f64, f64)> = (0..40)
            .map(|_| (0.5, rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)))
            .collect();
        let actual = catalog_at(&pts);
        let fractions = default_fractions();
        let ca = hit_rate_curve(&base, &actual, &fractions).unwrap();
        let cb = hit_rate_curve(&warped, &actual, &fractions).unwrap();
        for (a, b) in ca.points.iter().zip(&cb.points) {
            assert_eq!(a.hit_rate, b.hit_rate);
            assert_eq!(a.pai, b.pai);
        }
    }

    #[test]
    fn uniform_map_scores_at_the_random_baseline() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let eligible = spec.disc_mask(Some(5.0));
        let map = IntensityMap {
            values: vec![1.0; spec.n_cells()],
            spec,
            target_day: 1,
            method: "uniform".into(),
            eligible,
        };
        let mut rng = StdRng::seed_from_u64(31);
        let n_events = 4000;
        let pts: Vec<(f64, f64, f64)> = (0..n_events)
            .map(|_| {
                let r = 5.0 * rng.gen_range(0.0f64..1.0).sqrt();
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                (0.5, r * th.cos(), r * th.sin())
            })
            .collect();
        let actual = catalog_at(&pts);
        let fractions = [0.1, 0.2, 0.3];
        let curve = hit_rate_curve(&map, &actual, &fractions).unwrap();
        for p in &curve.points {
            // Binomial noise: sigma = sqrt(f (1-f) / n); allow 4 sigma plus
            // the cell-quantization of the selected region.
            let sigma = (p.fraction * (1.0 - p.fraction) / n_events as f64).sqrt();
            assert!(
                (p.hit_rate - p.fraction).abs() < 4.0 * sigma + 0.01,
                "hit {} vs fraction {}",
                p.hit_rate,
                p.fraction
            );
        }
    }

    #[test]
    fn tie_breaking_is_deterministic() {
        let map = tiny_map([1.0, 1.0, 1.0, 1.0]);
        let actual = crimes_in_cells(&[0, 3]);
        let c1 = hit_rate_curve(&map, &actual, &[0.25, 0.5]).unwrap();
        let c2 = hit_rate_curve(&map, &actual, &[0.25, 0.5]).unwrap();
        for (a, b) in c1.points.iter().zip(&c2.points) {
            assert_eq!(a, b);
        }
        // All values tied: selection follows ascending cell index, so 25%
        // selects cell 0 only.
        assert_eq!(c1.points[0].hit_rate, 0.5);
    }

    /// Forecaster that knows tomorrow's events (for protocol tests).
    struct OracleForecaster {
        truth: EventCatalog,
    }

    impl Forecaster for OracleForecaster {
        fn name(&self) -> &str {
            "oracle"
        }

        fn forecast(
            &self,
            _train: &EventCatalog,
            spec: &GridSpec,
            _lead: LeadWindow,
        ) -> Result<IntensityMap> {
            let mut values = vec![0.0; spec.n_cells()];
            for e in &self.truth.events {
                if let Some((i, j)) = spec.cell_of(e.x, e.y) {
                    values[spec.flat(i, j)] = 1.0;
                }
            }
            Ok(IntensityMap {
                values,
                spec: *spec,
                target_day: 0,
                method: "oracle".into(),
                eligible: spec.disc_mask(None),
            })
        }
    }

    #[test]
    fn oracle_method_saturates_the_hit_rate() {
        // 12 days of dummy training data, then one target day with events in
        // two cells.
        let mut pts: Vec<(f64, f64, f64)> = (0..12).map(|d| (d as f64 + 0.5, 0.1, 0.1)).collect();
        pts.push((12.5, 1.3, 1.3));
        pts.push((12.25, -2.0, 0.4));
        let dataset = catalog_at(&pts);
        let truth = dataset.window(12, 13);
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 16);
        let protocol = Protocol {
            training_days: 12,
            shift_days: 1,
            samples: 1,
            lead_days: 1,
            lead_mode: LeadMode::SingleDay,
            start_day: 0,
            fractions: default_fractions(),
        };
        let report = backtest(&dataset, &OracleForecaster { truth }, &spec, &protocol).unwrap();
        assert_eq!(report.n_scored, 1);
        let a_needed = 2.0 / report.samples[0].curve.as_ref().unwrap().n_eligible as f64;
        for p in &report.mean_curve {
            if p.fraction >= a_needed {
                assert_eq!(p.hit_rate, 1.0);
            }
        }

        // Summary semantics: arithmetic means of the mean curve over the
        // fractions. Here every point hits 1.0 (the two crime cells rank
        // first and 1% of A exceeds two cells), so the mean hit rate is
        // 100% and the mean PAI is the mean of 1/(a/A).
        let (hit_pct, pai) = summarize(&report);
        assert_eq!(hit_pct, 100.0);
        let expected_pai = report.mean_curve.iter().map(|p| 1.0 / p.fraction).sum::<f64>()
            / report.mean_curve.len() as f64;
        assert!((pai - expected_pai).abs() < 1e-12);
    }

    #[test]
    fn protocol_window_dates_match_the_published_scheme() {
        // Epoch 2010-05-05 with 400-day windows shifted by 2 days: sample 0
        // trains through 2011-06-08 and predicts 2011-06-09; sample 1
        // predicts 2011-06-11.
        let epoch = NaiveDate::from_ymd_opt(2010, 5, 5).unwrap();
        let protocol = Protocol::default();
        let w0 = protocol.start_day;
        let w1 = w0 + protocol.training_days;
        let target0 = w1 + protocol.lead_days - 1;
        assert_eq!(
            epoch + chrono::Days::new(target0 as u64),
            NaiveDate::from_ymd_opt(2011, 6, 9).unwrap()
        );
        let last_train_day = epoch + chrono::Days::new((w1 - 1) as u64);
        assert_eq!(last_train_day, NaiveDate::from_ymd_opt(2011, 6, 8).unwrap());
        let target1 = target0 + protocol.shift_days;
        assert_eq!(
            epoch + chrono::Days::new(target1 as u64),
            NaiveDate::from_ymd_opt(2011, 6, 11).unwrap()
        );
    }

    #[test]
    fn samples_without_target_events_are_skipped() {
        // Training events throughout, but only day 11 has anything to score:
        // sample 0 (target day 10) is skipped, sample 1 (target day 11) runs.
        let mut pts: Vec<(f64, f64, f64)> = (0..10).map(|d| (d as f64 + 0.5, 0.1, 0.1)).collect();
        pts.push((11.5, 0.3, 0.3));
        let dataset = catalog_at(&pts);
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 16);
        let protocol = Protocol {
            training_days: 10,
            shift_days: 1,
            samples: 2,
            lead_days: 1,
            lead_mode: LeadMode::SingleDay,
            start_day: 0,
            fractions: default_fractions(),
        };
        let truth = dataset.window(11, 12);
        let report = backtest(&dataset, &OracleForecaster { truth }, &spec, &protocol).unwrap();
        assert_eq!(report.n_scored, 1);
        assert_eq!(
            report.samples[0].skipped.as_deref(),
            Some("no events on the target day")
        );
        assert!(report.samples[1].curve.is_some());
    }

    #[test]
    fn protocol_that_overruns_the_dataset_is_fatal() {
        let dataset = catalog_at(&[(0.5, 0.0, 0.0), (3.5, 0.0, 0.0)]);
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 8);
        let protocol = Protocol::default();
        let truth = dataset.window(0, 1);
        assert!(matches!(
            backtest(&dataset, &OracleForecaster { truth }, &spec, &protocol),
            Err(Error::ProtocolTooLong { .. })
        ));
    }
}
