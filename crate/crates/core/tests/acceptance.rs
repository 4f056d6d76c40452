//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p headarray --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use headarray::beamformer::{md_weights, sensitivity_gram_form, sensitivity_svd_form};
use headarray::experiments::{
    design_arrays, music_sweep, sensitivity_sweep, ArrayType, DesignSettings,
};
use headarray::ghrtf::{
    build_sphere_database, default_direction_union, fibonacci_lattice, parse_database,
    write_database, CandidatePositionSet, FrequencyGrid, GhrtfDatabase, DEFAULT_HEAD_RADIUS,
    UNIFORM_SET,
};
use headarray::music::{theoretical_music_variance, MusicProtocol, MusicSweep, MusicTrialStats};
use headarray::par;
use headarray::placement::{exhaustive_search, ga_optimize, GaConfig, Target};
use headarray::rank::{effective_rank, effective_rank_from_singular_values};
use headarray::report::{music_csv, sensitivity_csv, RunStamp};
use headarray::{CMatrix, Complex64, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    gaussian(rng, n, n).qr().q()
}

/// Random `rows × cols` matrix with orthonormal columns (`rows ≥ cols`).
fn random_isometry(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    random_unitary(rng, rows).columns(0, cols).into_owned()
}

fn default_database() -> GhrtfDatabase {
    let (directions, sets) = default_direction_union(240).unwrap();
    let candidates = CandidatePositionSet::fibonacci(242, DEFAULT_HEAD_RADIUS).unwrap();
    let frequencies = FrequencyGrid::linear(0.0, 100.0, 5000.0).unwrap();
    build_sphere_database(DEFAULT_HEAD_RADIUS, candidates, frequencies, directions)
        .unwrap()
        .with_direction_sets(sets)
        .unwrap()
}

fn uniform_indices(db: &GhrtfDatabase) -> Vec<usize> {
    db.direction_set(UNIFORM_SET).unwrap().indices()
}

/// Reduced design problem: every 500 Hz and the 240 uniform directions.
fn reduced_design(db: &GhrtfDatabase) -> DesignSettings {
    DesignSettings {
        frequency_indices: (0..db.num_frequencies()).step_by(5).collect(),
        direction_indices: uniform_indices(db),
        ga: GaConfig::default(),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_scale = 0.0f64;
    let mut worst_unitary = 0.0f64;
    for t in 0..1000 {
        let rows = rng.random_range(1..=60);
        let cols = rng.random_range(1..=60);
        let h = gaussian(&mut rng, rows, cols);
        let r = effective_rank(&h).unwrap();
        if !(r.effective_rank >= 1.0 && r.effective_rank <= r.rank_q as f64) {
            return outcome(false, format!("matrix {t}: R = {} outside [1, {}]", r.effective_rank, r.rank_q));
        }
        let c = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let scaled = effective_rank(&(&h * c)).unwrap().effective_rank;
        let p = random_unitary(&mut rng, rows);
        let rotated = effective_rank(&(&p * &h)).unwrap().effective_rank;
        worst_scale = worst_scale.max((scaled - r.effective_rank).abs());
        worst_unitary = worst_unitary.max((rotated - r.effective_rank).abs());
    }
    outcome(
        worst_scale <= 1e-9 && worst_unitary <= 1e-9,
        format!("1000 matrices; max |ΔR| scale {worst_scale:.1e}, unitary {worst_unitary:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let r3 = effective_rank_from_singular_values(&[1.0, 1.0, 1.0]).unwrap().effective_rank;
    // σ̄ = (1/2, 1/4, 1/4): H = (1/2)ln2 + (1/2)ln4 = (3/2)ln2
    let expected = (1.5 * 2f64.ln()).exp();
    let r211 = effective_rank_from_singular_values(&[2.0, 1.0, 1.0]).unwrap().effective_rank;
    outcome(
        (r3 - 3.0).abs() <= 1e-12 && (r211 - expected).abs() <= 1e-9,
        format!("R(1,1,1) = {r3}, R(2,1,1) = {r211} (expected {expected})"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut bound_ok = true;
    for _ in 0..200 {
        let l = rng.random_range(1..=10);
        let d = rng.random_range(l..=60);
        let a = gaussian(&mut rng, l, d);
        let look = rng.random_range(0..d);
        let t_norm = md_weights(&a, look, 0.0).unwrap().weights.norm_squared();
        let t_gram = sensitivity_gram_form(&a, look).unwrap();
        let t_svd = sensitivity_svd_form(&a, look).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
        worst = worst.max(rel(t_norm, t_gram)).max(rel(t_norm, t_svd)).max(rel(t_gram, t_svd));
        let bound = 1.0 / a.column(look).norm_squared();
        bound_ok &= t_norm >= bound * (1.0 - 1e-9);
    }
    outcome(
        worst <= 1e-8 && bound_ok,
        format!("200 matrices; max relative disagreement {worst:.1e}; bound held: {bound_ok}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let l = rng.random_range(2..=10);
        let d = rng.random_range(1..l);
        let h = gaussian(&mut rng, l, d);
        let snr = 10f64.powf(rng.random_range(-2.0..4.0));
        let rep = theoretical_music_variance(&h, &(0..d).collect::<Vec<_>>(), snr, 1.0).unwrap();
        let sum: f64 = rep.per_source.iter().sum();
        worst = worst.max((sum - rep.total).abs() / rep.total);
    }

    // Fixed Σσ² = D: uniform σ = 1 against random perturbations of the same energy.
    let (l, d, snr) = (8, 4, 1.0);
    let u = random_isometry(&mut rng, l, d);
    let v = random_unitary(&mut rng, d);
    let with_singular_values = |s: &[f64]| {
        let sigma = CMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(s[i], 0.0) } else { Complex64::new(0.0, 0.0) });
        let h = &u * sigma * v.adjoint();
        theoretical_music_variance(&h, &(0..d).collect::<Vec<_>>(), snr, 1.0)
            .unwrap()
            .total
    };
    let uniform = with_singular_values(&[1.0; 4]);
    let mut strict = 0;
    for _ in 0..1000 {
        let mut s: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.8)).collect();
        let energy: f64 = s.iter().map(|x| x * x).sum();
        s.iter_mut().for_each(|x| *x *= (d as f64 / energy).sqrt());
        if with_singular_values(&s) > uniform {
            strict += 1;
        }
    }
    outcome(
        worst <= 1e-10 && strict == 1000,
        format!("max relative |Σ per-source − total| {worst:.1e}; uniform strictly smaller in {strict}/1000"),
    )
}

fn criterion_5() -> Outcome {
    let candidates = CandidatePositionSet::fibonacci(12, DEFAULT_HEAD_RADIUS).unwrap();
    let frequencies = FrequencyGrid::linear(0.0, 1000.0, 5000.0).unwrap();
    let db = build_sphere_database(DEFAULT_HEAD_RADIUS, candidates, frequencies, fibonacci_lattice(40)).unwrap();
    let (f, d) = (db.all_frequency_indices(), db.all_direction_indices());
    let best = exhaustive_search(&db, 3, &f, &d, Target::Maximize).unwrap();
    let hits = (0..20u64)
        .filter(|&seed| {
            let r = ga_optimize(&db, 3, &f, &d, Target::Maximize, &GaConfig::default().with_seed(seed)).unwrap();
            r.selection.indices == best.indices
        })
        .count();
    outcome(
        hits >= 16,
        format!("GA matched the exhaustive optimum {:?} (R = {:.6}) in {hits}/20 runs", best.indices, best.effective_rank),
    )
}

fn music_protocol(db: &GhrtfDatabase, realizations: usize) -> MusicProtocol {
    MusicProtocol {
        realizations: Some(realizations),
        ..MusicProtocol::standard(uniform_indices(db))
    }
}

fn criterion_6(db: &GhrtfDatabase) -> Outcome {
    let k = db.frequencies().index_of(400.0).unwrap();
    let sweep = MusicSweep {
        frequency_indices: vec![k],
        sizes: vec![3],
        snrs_db: vec![-20.0],
        array_types: vec!["MER".into(), "random".into()],
    };
    let (_, stats) = music_sweep(db, &sweep, &music_protocol(db, 10), 10, &reduced_design(db), 6).unwrap();
    let pass = stats.iter().all(|s| (s.std_degrees - 98.0).abs() <= 8.0);
    let detail = stats
        .iter()
        .map(|s| format!("{} {:.2}°", s.array_type, s.std_degrees))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("STD at −20 dB: {detail} (target 98° ± 8°)"))
}

fn std_of(stats: &[MusicTrialStats], snr: f64, t: &str) -> f64 {
    stats
        .iter()
        .find(|s| s.snr_db == snr && s.array_type == t)
        .map(|s| s.std_degrees)
        .unwrap()
}

fn criterion_7(db: &GhrtfDatabase) -> Outcome {
    let k = db.frequencies().index_of(400.0).unwrap();
    let sweep = MusicSweep {
        frequency_indices: vec![k],
        sizes: vec![5],
        snrs_db: vec![0.0, 10.0, 40.0],
        array_types: vec!["MER".into(), "MER-1".into(), "random".into()],
    };
    let (arrays, stats) = music_sweep(db, &sweep, &music_protocol(db, 20), 20, &reduced_design(db), 7).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for snr in [0.0, 10.0] {
        let (mer, mer1, random) = (std_of(&stats, snr, "MER"), std_of(&stats, snr, "MER-1"), std_of(&stats, snr, "random"));
        let first = mer <= mer1;
        let second = mer1 <= random;
        pass &= first && second;
        parts.push(format!(
            "{snr} dB: MER {mer:.2}° {} MER-1 {mer1:.2}° {} random {random:.2}°",
            if first { "≤" } else { ">" },
            if second { "≤" } else { ">" },
        ));
    }
    let gap = |snr| std_of(&stats, snr, "random") - std_of(&stats, snr, "MER");
    let (g0, g40) = (gap(0.0), gap(40.0));
    pass &= g0 > g40;
    parts.push(format!("gap(random − MER) 0 dB {g0:.2}° vs 40 dB {g40:.2}°"));

    let mean_rank = |t: ArrayType| {
        let recs: Vec<f64> = arrays.records.iter().filter(|r| r.array_type == t).map(|r| r.effective_rank).collect();
        recs.iter().sum::<f64>() / recs.len() as f64
    };
    parts.push(format!(
        "mean effective rank MER {:.2}, MER-1 {:.2}, random {:.2}",
        mean_rank(ArrayType::Mer),
        mean_rank(ArrayType::MerMinus(1)),
        mean_rank(ArrayType::Random)
    ));
    outcome(pass, parts.join("; "))
}

fn criterion_8(db: &GhrtfDatabase) -> Outcome {
    let design = DesignSettings {
        frequency_indices: (0..db.num_frequencies()).step_by(10).collect(),
        ..reduced_design(db)
    };
    let sizes = [3, 5];
    let arrays = design_arrays(db, &[ArrayType::Mer, ArrayType::Random], &sizes, 50, &design, 8).unwrap();
    let tested: Vec<usize> = (0..db.num_frequencies())
        .filter(|&k| db.frequencies().values()[k] >= 500.0)
        .collect();
    let rows = sensitivity_sweep(
        db,
        &arrays,
        &sizes,
        &tested,
        &design.direction_indices,
        &[(ArrayType::Mer, ArrayType::Random)],
    )
    .unwrap();
    let worst = rows.iter().max_by(|a, b| a.ratio_db.total_cmp(&b.ratio_db)).unwrap();
    let best = rows.iter().min_by(|a, b| a.ratio_db.total_cmp(&b.ratio_db)).unwrap();
    outcome(
        rows.iter().all(|r| r.ratio_db <= 0.0),
        format!(
            "{} cells; MER/random ratio from {:.2} dB ({} Hz, L={}) to {:.2} dB ({} Hz, L={})",
            rows.len(),
            best.ratio_db,
            best.frequency_hz,
            best.num_mics,
            worst.ratio_db,
            worst.frequency_hz,
            worst.num_mics
        ),
    )
}

/// A small MUSIC sweep plus a sensitivity sweep rendered to CSV.
fn determinism_run(db: &GhrtfDatabase, threads: Option<usize>) -> (String, String) {
    par::with_threads(threads, || {
        let k = db.frequencies().index_of(800.0).unwrap();
        let design = DesignSettings {
            frequency_indices: (0..db.num_frequencies()).step_by(10).collect(),
            ..reduced_design(db)
        };
        let sweep = MusicSweep {
            frequency_indices: vec![k],
            sizes: vec![3],
            snrs_db: vec![0.0, 20.0],
            array_types: vec!["MER".into(), "random".into()],
        };
        let protocol = MusicProtocol {
            trials_per_direction: 5,
            ..music_protocol(db, 2)
        };
        let (arrays, stats) = music_sweep(db, &sweep, &protocol, 2, &design, 9).unwrap();
        let rows = sensitivity_sweep(
            db,
            &arrays,
            &[3],
            &[k, k + 10],
            &design.direction_indices,
            &[(ArrayType::Mer, ArrayType::Random)],
        )
        .unwrap();
        let stamp = RunStamp::new("acceptance", 9);
        (music_csv(&stats, &stamp).unwrap(), sensitivity_csv(&rows, &stamp).unwrap())
    })
}

fn criterion_9(db: &GhrtfDatabase) -> Outcome {
    let first = determinism_run(db, None);
    let second = determinism_run(db, None);
    let single = determinism_run(db, Some(1));
    let same = first == second && first == single;
    outcome(
        same,
        format!(
            "{} + {} CSV bytes; repeat identical: {}; single-thread identical: {}",
            first.0.len(),
            first.1.len(),
            first == second,
            first == single
        ),
    )
}

fn criterion_10(db: &GhrtfDatabase) -> Outcome {
    let mut bytes = Vec::new();
    write_database(db, &mut bytes).unwrap();
    let back = parse_database(&bytes).unwrap();
    let exact = back.bitwise_eq(db);
    let truncated = parse_database(&bytes[..bytes.len() - 7]);
    let rejected = matches!(truncated, Err(Error::Format { .. }));
    outcome(
        exact && rejected,
        format!(
            "M={} K={} D={}, {} bytes; round trip bit-exact: {exact}; truncated file → {}",
            db.num_candidates(),
            db.num_frequencies(),
            db.num_directions(),
            bytes.len(),
            match truncated {
                Err(e) => e.to_string(),
                Ok(_) => "accepted".into(),
            }
        ),
    )
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let db = default_database();
    let criteria: Vec<(&str, Duration, Criterion<'_>)> = vec![
        ("1 effective-rank bounds and invariances", Duration::from_secs(30), Box::new(criterion_1)),
        ("2 closed-form effective ranks", Duration::MAX, Box::new(criterion_2)),
        ("3 sensitivity identities and lower bound", Duration::from_secs(30), Box::new(criterion_3)),
        ("4 theoretical MUSIC variance", Duration::MAX, Box::new(criterion_4)),
        ("5 GA versus exhaustive search", Duration::from_secs(120), Box::new(criterion_5)),
        ("6 chance-level MUSIC STD", Duration::from_secs(120), Box::new(|| criterion_6(&db))),
        ("7 MUSIC STD ordering by array type", Duration::from_secs(600), Box::new(|| criterion_7(&db))),
        ("8 sensitivity ratio MER versus random", Duration::from_secs(300), Box::new(|| criterion_8(&db))),
        ("9 byte-identical reruns", Duration::MAX, Box::new(|| criterion_9(&db))),
        ("10 database round trip", Duration::MAX, Box::new(|| criterion_10(&db))),
    ];
    let mut failures = 0;
    for (name, budget, run) in &criteria {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            out.pass = false;
            out.detail += &format!("; exceeded the {budget:?} budget");
        }
        if !out.pass {
            failures += 1;
        }
        println!(
            "criterion {name}: {} ({:.1} s) {}",
            if out.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
