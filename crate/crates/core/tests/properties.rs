mod support;

use corpscale_core::benchmark::{
    fit_groups, predict_benchmark, savings, score_companies, GroupedFits,
};
use corpscale_core::dispersion::country_dispersion;
use corpscale_core::ingest::{
    build_sample, AnalysisSample, CompanyRecord, GroupLevel, ImpactMetric, MetricSelector,
    SamplePoint, SizeMetric, ALL_GROUP,
};
use corpscale_core::regress::{
    classify_regime, fit_loglog, significance_stars, student_t_two_sided_p, FitResult, SeKind,
};
use corpscale_core::report::{emit_scatter, PointFlag};
use corpscale_core::synthgen::{
    generate_multigroup, generate_population, generate_population_with, to_csv, SizeDistribution,
    SyntheticSpec,
};
use corpscale_core::Execution;
use proptest::prelude::*;
use std::collections::BTreeMap;
use support::{rel_diff, TestRng};

const REV_CO2: MetricSelector = MetricSelector {
    size: SizeMetric::Revenue,
    impact: ImpactMetric::Emissions,
};

fn points_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-7.0f64..21.0, -7.0f64..21.0), 3..40)
        .prop_filter("distinct sizes", |v| v.iter().any(|p| p.0 != v[0].0))
        .prop_map(|v| v.into_iter().map(|(x, y)| (x.exp(), y.exp())).collect())
}

fn sse(points: &[(f64, f64)], beta: f64, intercept: f64) -> f64 {
    points
        .iter()
        .map(|&(x, y)| {
            let e = y.ln() - intercept - beta * x.ln();
            e * e
        })
        .sum()
}

fn shuffle<T>(v: &mut [T], seed: u64) {
    let mut rng = TestRng::new(seed);
    for i in (1..v.len()).rev() {
        v.swap(i, rng.below(i + 1));
    }
}

fn sector_specs(seed: u64, noise: f64) -> Vec<SyntheticSpec> {
    ["Alpha", "Beta", "Gamma", "Delta"]
        .iter()
        .enumerate()
        .map(|(k, key)| {
            SyntheticSpec::new(
                40 + 7 * k,
                0.8 + 0.12 * k as f64,
                -2.0 + k as f64,
                noise,
                SizeDistribution::Pareto { x_min: 1e5, alpha: 1.1 },
                key,
                seed.wrapping_add(k as u64),
            )
        })
        .collect()
}

fn sector_fits(records: &[CompanyRecord]) -> (AnalysisSample, GroupedFits) {
    let sample = build_sample(records, REV_CO2, GroupLevel::Sector, 10).unwrap();
    let fits = fit_groups(&sample, SeKind::Classical, Execution::Sequential).unwrap();
    (sample, fits)
}

fn single_group(points: &[(String, f64, f64)]) -> AnalysisSample {
    AnalysisSample {
        selector: REV_CO2,
        level: GroupLevel::All,
        min_group_size: 3,
        groups: BTreeMap::from([(
            ALL_GROUP.to_string(),
            points
                .iter()
                .map(|(id, s, a)| SamplePoint { company_id: id.clone(), size: *s, impact: *a })
                .collect(),
        )]),
        dropped: vec![],
    }
}

fn fixed_line(beta: f64, intercept_ln: f64) -> GroupedFits {
    let fit = FitResult {
        n: 3,
        beta,
        intercept_ln,
        se_beta: 0.0,
        se_intercept: 0.0,
        t_beta: f64::INFINITY,
        p_beta: 0.0,
        r2: 1.0,
        adj_r2: 1.0,
        residual_sd: 0.0,
        regime: classify_regime(beta),
    };
    GroupedFits {
        selector: REV_CO2,
        level: GroupLevel::All,
        fits: BTreeMap::from([(ALL_GROUP.to_string(), fit)]),
        skipped: vec![],
    }
}

/// Records with a mix of missing, zero and negative values and uneven sector sizes.
fn messy_records(seed: u64, n: usize) -> Vec<CompanyRecord> {
    let mut rng = TestRng::new(seed);
    let sectors = ["", "Energy", "Utilities", "Financials", "Health", "Tech"];
    (0..n)
        .map(|i| {
            let mut value = || match rng.below(12) {
                0 => None,
                1 => Some(0.0),
                2 => Some(-1.0),
                _ => Some(rng.log_uniform(1.0, 1e9)),
            };
            let revenue = value();
            let co2e = value();
            let sector = sectors[(rng.below(sectors.len() * sectors.len()) as f64).sqrt() as usize];
            CompanyRecord {
                row: i + 2,
                company_id: format!("c{i}"),
                sector: sector.to_string(),
                industry: format!("{sector}-{}", rng.below(3)),
                country: "US".into(),
                revenue,
                co2e,
                ..Default::default()
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn least_squares_optimality(points in points_strategy()) {
        let fit = fit_loglog(&points).unwrap();
        let best = sse(&points, fit.beta, fit.intercept_ln);
        for (db, dc) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            prop_assert!(sse(&points, fit.beta + db, fit.intercept_ln + dc) > best);
        }
    }

    #[test]
    fn size_rescaling_shifts_only_the_intercept(points in points_strategy(), lnk in (1e-6f64).ln()..(1e6f64).ln()) {
        let k = lnk.exp();
        let fit = fit_loglog(&points).unwrap();
        let scaled: Vec<_> = points.iter().map(|&(x, y)| (x * k, y)).collect();
        let g = fit_loglog(&scaled).unwrap();
        prop_assert!((g.beta - fit.beta).abs() <= 1e-9 * fit.beta.abs().max(1.0));
        prop_assert!((g.r2 - fit.r2).abs() <= 1e-9);
        prop_assert!(rel_diff(g.se_beta, fit.se_beta) <= 1e-9);
        prop_assert!((g.p_beta - fit.p_beta).abs() <= 1e-9);
        prop_assert!((g.intercept_ln - (fit.intercept_ln - fit.beta * k.ln())).abs() <= 1e-9);
        for (a, b) in fit.residuals(&points).iter().zip(g.residuals(&scaled)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert_eq!(g.regime, classify_regime(g.beta));
    }

    #[test]
    fn impact_rescaling_shifts_only_the_intercept(points in points_strategy(), lnk in (1e-6f64).ln()..(1e6f64).ln()) {
        let k = lnk.exp();
        let fit = fit_loglog(&points).unwrap();
        let scaled: Vec<_> = points.iter().map(|&(x, y)| (x, y * k)).collect();
        let g = fit_loglog(&scaled).unwrap();
        prop_assert!((g.beta - fit.beta).abs() <= 1e-9 * fit.beta.abs().max(1.0));
        prop_assert!((g.r2 - fit.r2).abs() <= 1e-9);
        prop_assert!((g.intercept_ln - (fit.intercept_ln + k.ln())).abs() <= 1e-9);
        for (a, b) in fit.residuals(&points).iter().zip(g.residuals(&scaled)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn permutation_invariance(points in points_strategy(), seed in any::<u64>()) {
        let fit = fit_loglog(&points).unwrap();
        let mut shuffled = points.clone();
        shuffle(&mut shuffled, seed);
        prop_assert_eq!(fit_loglog(&shuffled).unwrap(), fit);
    }

    #[test]
    fn stars_monotone_in_abs_t(df in 1.0f64..10_000.0, mut ts in prop::collection::vec(-50.0f64..50.0, 2..30)) {
        ts.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        let stars: Vec<usize> = ts
            .iter()
            .map(|&t| significance_stars(student_t_two_sided_p(t, df).unwrap()).len())
            .collect();
        prop_assert!(stars.windows(2).all(|w| w[0] <= w[1]), "{stars:?}");
    }

    #[test]
    fn sample_partition_and_idempotence(seed in any::<u64>(), n in 0usize..300, min in 3usize..15, by_industry in any::<bool>()) {
        let records = messy_records(seed, n);
        let level = if by_industry { GroupLevel::Industry } else { GroupLevel::Sector };
        match build_sample(&records, REV_CO2, level, min) {
            Ok(sample) => {
                prop_assert_eq!(sample.included_count() + sample.dropped.len(), records.len());
                let ids = sample.included_ids();
                let kept: Vec<CompanyRecord> = records
                    .iter()
                    .filter(|r| ids.contains(r.company_id.as_str()))
                    .cloned()
                    .collect();
                let again = build_sample(&kept, REV_CO2, level, min).unwrap();
                prop_assert!(again.dropped.is_empty());
                prop_assert_eq!(again.groups, sample.groups);
            }
            Err(_) => {
                // Every record must have failed a filter; a single admissible
                // group of size >= min would have produced a sample.
                let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
                for r in &records {
                    let ok = |v: Option<f64>| v.is_some_and(|v| v > 0.0);
                    if ok(r.revenue) && ok(r.co2e) {
                        if let Some(g) = r.group_key(level) {
                            *sizes.entry(g).or_default() += 1;
                        }
                    }
                }
                prop_assert!(sizes.values().all(|&c| c < min));
            }
        }
    }

    #[test]
    fn score_line_consistency(seed in any::<u64>()) {
        let records = generate_multigroup(&sector_specs(seed, 0.7)).unwrap();
        let (sample, fits) = sector_fits(&records);
        let out = score_companies(&sample, &fits).unwrap();
        prop_assert_eq!(out.scores.len(), sample.included_count());
        for s in &out.scores {
            let fit = &fits.fits[&s.group];
            let predicted = predict_benchmark(fit, s.size).unwrap();
            prop_assert!(rel_diff(predicted * s.ratio, s.actual) <= 1e-10);
            prop_assert!(s.ratio > 0.0);
            prop_assert!((s.residual_ln - s.ratio.ln()).abs() <= 1e-12);
            prop_assert_eq!(s.is_above(), s.residual_ln > 0.0);
        }
    }

    #[test]
    fn group_independence(seed in any::<u64>(), drop_k in 0usize..4) {
        let specs = sector_specs(seed, 0.6);
        let records = generate_multigroup(&specs).unwrap();
        let (_, fits) = sector_fits(&records);
        let removed = &specs[drop_k].group_key;
        let rest: Vec<CompanyRecord> = records.iter().filter(|r| &r.sector != removed).cloned().collect();
        let (_, fewer) = sector_fits(&rest);
        prop_assert!(!fewer.fits.contains_key(removed));
        for (key, fit) in &fewer.fits {
            prop_assert_eq!(fit, &fits.fits[key]);
        }
    }

    #[test]
    fn regimes_and_ratios_survive_size_rescaling(seed in any::<u64>(), lnk in (1e-6f64).ln()..(1e6f64).ln()) {
        let k = lnk.exp();
        let records = generate_multigroup(&sector_specs(seed, 0.5)).unwrap();
        let mut scaled = records.clone();
        for r in &mut scaled {
            r.revenue = r.revenue.map(|v| v * k);
        }
        let (sa, fa) = sector_fits(&records);
        let (sb, fb) = sector_fits(&scaled);
        for (key, fit) in &fa.fits {
            prop_assert_eq!(fit.regime, fb.fits[key].regime);
        }
        let a = score_companies(&sa, &fa).unwrap().scores;
        let b = score_companies(&sb, &fb).unwrap().scores;
        let by_id: BTreeMap<_, _> = b.iter().map(|s| (s.company_id.clone(), s)).collect();
        for s in &a {
            let t = by_id[&s.company_id];
            prop_assert!(rel_diff(s.ratio, t.ratio) <= 1e-9);
            prop_assert!((s.residual_ln - t.residual_ln).abs() <= 1e-9);
        }
    }

    #[test]
    fn savings_bounds(seed in any::<u64>()) {
        let records = generate_multigroup(&sector_specs(seed, 0.8)).unwrap();
        let (sample, fits) = sector_fits(&records);
        let rep = savings(&sample, &fits).unwrap();
        let t = &rep.total;
        prop_assert!(t.total_capped <= t.total_actual);
        prop_assert!(t.savings_fraction >= 0.0 && t.savings_fraction < 1.0);
        prop_assert_eq!(t.companies, sample.included_count());
        let parts: f64 = rep.per_group.values().map(|g| g.total_actual).sum();
        prop_assert!(rel_diff(parts, t.total_actual) <= 1e-12);
    }

    #[test]
    fn cap_monotonicity(seed in any::<u64>(), n in 3usize..30, pick in any::<prop::sample::Index>(), frac in 0.01f64..0.99) {
        let mut rng = TestRng::new(seed);
        let beta = rng.range(0.5, 1.5);
        let c = rng.range(-3.0, 3.0);
        let grouped = fixed_line(beta, c);
        let mut pts: Vec<(String, f64, f64)> = (0..n)
            .map(|i| {
                let size = rng.log_uniform(1.0, 1e6);
                let ln_pred = c + beta * size.ln();
                (format!("c{i}"), size, (ln_pred + rng.range(-2.0, 2.0)).exp())
            })
            .collect();
        let base = savings(&single_group(&pts), &grouped).unwrap().total;
        let i = pick.index(n);
        let predicted = predict_benchmark(&grouped.fits[ALL_GROUP], pts[i].1).unwrap();
        let actual = pts[i].2;
        let delta = frac * actual;

        pts[i].2 = actual + delta;
        let raised = savings(&single_group(&pts), &grouped).unwrap().total;
        prop_assert!(raised.saved() >= base.saved() - 1e-9 * base.total_actual);
        if actual > predicted {
            prop_assert!(raised.savings_fraction >= base.savings_fraction - 1e-12);
        }

        if actual < predicted {
            pts[i].2 = actual - delta;
            let lowered = savings(&single_group(&pts), &grouped).unwrap().total;
            let tol = 1e-9 * base.total_actual;
            prop_assert!((lowered.saved() - base.saved()).abs() <= tol);
            prop_assert!((base.total_actual - lowered.total_actual - delta).abs() <= tol);
            prop_assert!((base.total_capped - lowered.total_capped - delta).abs() <= tol);
        }
    }

    #[test]
    fn dispersion_sum_identity_and_flag_invariance(seed in any::<u64>(), lnk in (1e-6f64).ln()..(1e6f64).ln()) {
        let k = lnk.exp();
        let records = generate_multigroup(&sector_specs(seed, 0.9)).unwrap();
        let (sample, fits) = sector_fits(&records);
        let scores = score_companies(&sample, &fits).unwrap().scores;
        let rep = country_dispersion(&scores, &records);
        let total: f64 = scores.iter().map(|s| s.residual_ln).sum();
        let by_country: f64 = rep.countries.iter().map(|c| c.n as f64 * c.mean_residual_ln).sum();
        prop_assert!((total - by_country).abs() <= 1e-10);
        for c in &rep.countries {
            prop_assert!(c.n >= 1 && c.sd_residual_ln >= 0.0);
            prop_assert_eq!(c.beyond_one_sd, c.mean_residual_ln.abs() > rep.pooled_sd);
        }

        let mut scaled = records.clone();
        for r in &mut scaled {
            r.co2e = r.co2e.map(|v| v * k);
        }
        let (ss, sf) = sector_fits(&scaled);
        let rescaled = country_dispersion(&score_companies(&ss, &sf).unwrap().scores, &scaled);
        let flags = |r: &corpscale_core::dispersion::DispersionReport| -> BTreeMap<String, bool> {
            r.countries.iter().map(|c| (c.country.clone(), c.beyond_one_sd)).collect()
        };
        prop_assert_eq!(flags(&rep), flags(&rescaled));
    }

    #[test]
    fn removing_a_country_keeps_other_country_stats(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let records = generate_multigroup(&sector_specs(seed, 0.9)).unwrap();
        let (sample, fits) = sector_fits(&records);
        let scores = score_companies(&sample, &fits).unwrap().scores;
        let rep = country_dispersion(&scores, &records);
        let gone = rep.countries[pick.index(rep.countries.len())].country.clone();
        let country: BTreeMap<&str, &str> =
            records.iter().map(|r| (r.company_id.as_str(), r.country.as_str())).collect();
        let kept: Vec<_> = scores.iter().filter(|s| country[s.company_id.as_str()] != gone).cloned().collect();
        let after = country_dispersion(&kept, &records);
        prop_assert_eq!(after.countries.len() + 1, rep.countries.len());
        for c in &after.countries {
            let before = rep.countries.iter().find(|b| b.country == c.country).unwrap();
            prop_assert!((c.mean_residual_ln - before.mean_residual_ln).abs() <= 1e-12);
            prop_assert!((c.sd_residual_ln - before.sd_residual_ln).abs() <= 1e-12);
            prop_assert_eq!(c.n, before.n);
            prop_assert_eq!(c.beyond_one_sd, c.mean_residual_ln.abs() > after.pooled_sd);
        }
    }

    #[test]
    fn noiseless_round_trip(
        n in 3usize..300,
        beta in 0.3f64..1.7,
        c in -8.0f64..8.0,
        pareto in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let dist = if pareto {
            SizeDistribution::Pareto { x_min: 1e3, alpha: 1.2 }
        } else {
            SizeDistribution::LogNormal { mu: 12.0, sigma: 1.5 }
        };
        let spec = SyntheticSpec::new(n, beta, c, 0.0, dist, "G", seed);
        let recs = generate_population(&spec).unwrap();
        let pts: Vec<_> = recs.iter().map(|r| (r.revenue.unwrap(), r.co2e.unwrap())).collect();
        let fit = fit_loglog(&pts).unwrap();
        prop_assert!((fit.beta - beta).abs() <= 1e-10, "{} vs {}", fit.beta, beta);
        prop_assert!((fit.intercept_ln - c).abs() <= 1e-8);
        prop_assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn synth_bytes_are_stable(seed in any::<u64>(), n in 1usize..200) {
        let mut spec = SyntheticSpec::new(n, 0.9, -1.0, 0.4, SizeDistribution::LogNormal { mu: 10.0, sigma: 2.0 }, "Grp", seed);
        spec.proxy_noise_sd = Some(0.3);
        let a = to_csv(&generate_population(&spec).unwrap()).unwrap();
        let b = to_csv(&generate_population(&spec).unwrap()).unwrap();
        let c = to_csv(&generate_population_with(&spec, Execution::Parallel).unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
    }

    #[test]
    fn multigroup_reordering_keeps_each_group(seed in any::<u64>()) {
        let specs = sector_specs(seed, 0.5);
        let mut reversed = specs.clone();
        reversed.reverse();
        let strip = |mut v: Vec<CompanyRecord>| -> BTreeMap<String, CompanyRecord> {
            v.iter_mut().for_each(|r| r.row = 0);
            v.into_iter().map(|r| (r.company_id.clone(), r)).collect()
        };
        let a = strip(generate_multigroup(&specs).unwrap());
        let b = strip(generate_multigroup(&reversed).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scatter_flags_follow_score_signs(seed in any::<u64>()) {
        let records = generate_multigroup(&sector_specs(seed, 0.5)).unwrap();
        let (sample, fits) = sector_fits(&records);
        let scores = score_companies(&sample, &fits).unwrap().scores;
        for group in fits.fits.keys() {
            let bundle = emit_scatter(&sample, &fits, group, &records).unwrap();
            for p in &bundle.points {
                let s = scores.iter().find(|s| s.company_id == p.company_id).unwrap();
                let expected = if s.residual_ln.abs() <= corpscale_core::report::ON_LINE_TOL {
                    PointFlag::OnLine
                } else if s.residual_ln > 0.0 {
                    PointFlag::Above
                } else {
                    PointFlag::Below
                };
                prop_assert_eq!(p.flag, expected);
            }
        }
    }
}

#[test]
fn pareto_tail_matches_power_law() {
    for (seed, alpha) in [(1u64, 1.2), (2, 0.8), (3, 2.0)] {
        let n = 20_000;
        let spec = SyntheticSpec::new(n, 1.0, 0.0, 0.0, SizeDistribution::Pareto { x_min: 1e6, alpha }, "P", seed);
        let sizes = spec.sizes().unwrap();
        assert!(sizes.iter().all(|&s| s >= 1e6));
        let p = 10f64.powf(-alpha);
        let tail = sizes.iter().filter(|&&s| s > 1e7).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((tail - p).abs() <= 3.0 * se, "alpha {alpha}: tail {tail} vs {p} ± {se}");
    }
}

#[test]
fn parallel_and_sequential_fits_are_identical() {
    let records = generate_multigroup(&sector_specs(99, 0.5)).unwrap();
    let sample = build_sample(&records, REV_CO2, GroupLevel::Sector, 10).unwrap();
    for se in [SeKind::Classical, SeKind::Hc1] {
        let a = fit_groups(&sample, se, Execution::Sequential).unwrap();
        let b = fit_groups(&sample, se, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
