//! One function per subcommand. Computation may run in parallel; all file
//! writes happen here, on the calling thread.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use headarray::experiments::{
    design_arrays, music_sweep, optimize_sweep, rank_maps, sensitivity_sweep, ArrayType,
};
use headarray::ghrtf::{
    build_sphere_database_with_speed, default_direction_union, load_database, save_database,
    CandidatePositionSet, FrequencyGrid, GhrtfDatabase,
};
use headarray::music::{MusicProtocol, MusicSweep, MusicTrialStats};
use headarray::placement::Target;
use headarray::report::{
    designs_json, line_plot_svg, music_csv, optimize_json, rank_map_csv, rank_map_svg,
    sensitivity_csv, trace_csv, RunStamp, Series,
};

use crate::config::{design_settings, direction_indices, frequency_indices, ExperimentConfig};
use crate::CliError;

fn stamp(config: &ExperimentConfig) -> RunStamp {
    RunStamp::new(config.hash(), config.seed)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::new(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::new(format!("writing {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// The result-relevant configuration next to the outputs.
fn write_run_config(config: &ExperimentConfig) -> Result<(), CliError> {
    let mut c = config.clone();
    c.db = None;
    c.output_dir = None;
    c.thread_count = None;
    let mut json = serde_json::to_value(&c).map_err(|e| CliError::new(e.to_string()))?;
    json["config_hash"] = serde_json::Value::String(config.hash());
    let text = serde_json::to_string_pretty(&json).map_err(|e| CliError::new(e.to_string()))? + "\n";
    write(&config.output_dir(), "run_config.json", &text)
}

fn open_db(config: &ExperimentConfig) -> Result<GhrtfDatabase, CliError> {
    let path = config.db_path()?;
    load_database(&path).map_err(|e| CliError::new(format!("{}: {e}", path.display())))
}

pub fn gen_db(config: &ExperimentConfig) -> Result<(), CliError> {
    let g = &config.gen_db;
    let path = config.db_path()?;
    let frequencies = FrequencyGrid::parse(&g.frequencies)?;
    let candidates = CandidatePositionSet::fibonacci(g.candidates, g.radius)?;
    let (directions, sets) = default_direction_union(g.uniform_directions)?;
    let db = build_sphere_database_with_speed(g.radius, candidates, frequencies, directions, g.speed_of_sound)?
        .with_direction_sets(sets)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_database(&db, &path).map_err(|e| CliError::new(format!("{}: {e}", path.display())))?;
    println!(
        "wrote {}: M={} K={} D={}",
        path.display(),
        db.num_candidates(),
        db.num_frequencies(),
        db.num_directions()
    );
    Ok(())
}

pub fn rank_map(config: &ExperimentConfig) -> Result<(), CliError> {
    let db = open_db(config)?;
    let freqs = frequency_indices(&db, config.rank_map.frequencies.as_deref())?;
    let maps = rank_maps(&db, &freqs)?;
    let (out, st) = (config.output_dir(), stamp(config));
    for map in &maps {
        write(&out, &format!("rank_map_{}.csv", map.set), &rank_map_csv(&db, map, &st)?)?;
        write(&out, &format!("rank_map_{}.svg", map.set), &rank_map_svg(&db, map, &st))?;
        let (lo, hi) = map
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        println!("{}: effective rank {lo:.3} .. {hi:.3} over {} candidates", map.set, map.values.len());
    }
    write_run_config(config)
}

pub fn optimize(config: &ExperimentConfig) -> Result<(), CliError> {
    let db = open_db(config)?;
    let design = design_settings(&db, &config.design)?;
    let o = &config.optimize;
    let target = o.target_rank.map_or(Target::Maximize, Target::TargetRank);
    let records = optimize_sweep(&db, &o.sizes, o.realizations, target, &design, o.exhaustive, config.seed)?;
    let (out, st) = (config.output_dir(), stamp(config));
    write(&out, "selections.json", &optimize_json(&db, &records, &st)?)?;
    write(&out, "traces.csv", &trace_csv(&records, &st)?)?;
    for &size in &o.sizes {
        let best = records
            .iter()
            .filter(|r| r.size == size)
            .max_by(|a, b| a.selection.fitness.total_cmp(&b.selection.fitness));
        if let Some(r) = best {
            println!("L={size}: best effective rank {:.4} with {:?}", r.selection.effective_rank, r.selection.indices);
        }
    }
    write_run_config(config)
}

fn comparisons(types: &[ArrayType]) -> Vec<(ArrayType, ArrayType)> {
    types
        .iter()
        .filter(|&&t| t != ArrayType::Mer)
        .map(|&t| (ArrayType::Mer, t))
        .collect()
}

pub fn sensitivity(config: &ExperimentConfig) -> Result<(), CliError> {
    let db = open_db(config)?;
    let design = design_settings(&db, &config.design)?;
    let s = &config.sensitivity;
    let mut types = s.array_types.clone();
    if !types.contains(&ArrayType::Mer) {
        types.insert(0, ArrayType::Mer);
    }
    let freqs = frequency_indices(&db, s.frequencies.as_deref())?;
    let dirs = direction_indices(&db, &s.directions)?;
    let arrays = design_arrays(&db, &types, &s.sizes, s.realizations, &design, config.seed)?;
    let rows = sensitivity_sweep(&db, &arrays, &s.sizes, &freqs, &dirs, &comparisons(&types))?;

    let (out, st) = (config.output_dir(), stamp(config));
    write(&out, "sensitivity.csv", &sensitivity_csv(&rows, &st)?)?;
    write(&out, "sensitivity_designs.json", &designs_json(&db, &arrays.records, &st)?)?;
    let mut series: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        series
            .entry((format!("{}/{}", r.variant_a, r.variant_b), r.num_mics))
            .or_default()
            .push((r.frequency_hz, r.ratio_db));
    }
    let series: Vec<Series> = series
        .into_iter()
        .map(|((label, l), points)| Series {
            label: format!("{label} L={l}"),
            points,
        })
        .collect();
    write(
        &out,
        "sensitivity.svg",
        &line_plot_svg("Sensitivity ratio", "frequency (Hz)", "ratio (dB)", &series, &st),
    )?;
    println!("{} sensitivity rows", rows.len());
    write_run_config(config)
}

/// Mean STD per array type against one sweep parameter.
fn music_series(stats: &[MusicTrialStats], key: impl Fn(&MusicTrialStats) -> f64, types: &[String]) -> Vec<Series> {
    types
        .iter()
        .map(|t| {
            let mut acc: Vec<(f64, f64, usize)> = Vec::new();
            for s in stats.iter().filter(|s| &s.array_type == t) {
                let x = key(s);
                match acc.iter_mut().find(|p| p.0 == x) {
                    Some(p) => {
                        p.1 += s.std_degrees;
                        p.2 += 1;
                    }
                    None => acc.push((x, s.std_degrees, 1)),
                }
            }
            acc.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: t.clone(),
                points: acc.iter().map(|&(x, sum, n)| (x, sum / n as f64)).collect(),
            }
        })
        .collect()
}

pub fn music(config: &ExperimentConfig) -> Result<(), CliError> {
    let db = open_db(config)?;
    let design = design_settings(&db, &config.design)?;
    let m = &config.music;
    let sweep = MusicSweep {
        frequency_indices: frequency_indices(&db, Some(&m.frequencies))?,
        sizes: m.sizes.clone(),
        snrs_db: m.snrs_db.clone(),
        array_types: m.array_types.iter().map(ToString::to_string).collect(),
    };
    let protocol = MusicProtocol {
        trials_per_direction: m.trials,
        snapshots: m.snapshots,
        direction_indices: direction_indices(&db, &m.directions)?,
        realizations: Some(m.realizations),
        assumed_sources: 1,
    };
    let (arrays, stats) = music_sweep(&db, &sweep, &protocol, m.realizations, &design, config.seed)?;

    let (out, st) = (config.output_dir(), stamp(config));
    write(&out, "music.csv", &music_csv(&stats, &st)?)?;
    write(&out, "music_designs.json", &designs_json(&db, &arrays.records, &st)?)?;
    type Axis = fn(&MusicTrialStats) -> f64;
    let plots: [(&str, &str, Axis); 3] = [
        ("music_vs_frequency.svg", "frequency (Hz)", |s| s.frequency_hz),
        ("music_vs_size.svg", "microphones", |s| s.num_mics as f64),
        ("music_vs_snr.svg", "SNR (dB)", |s| s.snr_db),
    ];
    for (name, x_label, key) in plots {
        let series = music_series(&stats, key, &sweep.array_types);
        write(
            &out,
            name,
            &line_plot_svg("MUSIC angular error STD", x_label, "STD (deg)", &series, &st),
        )?;
    }
    println!("{} MUSIC cells", stats.len());
    write_run_config(config)
}
