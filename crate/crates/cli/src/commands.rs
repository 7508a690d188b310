//! Subcommand implementations. Every command is a pure function of the run
//! configuration (plus input files) and writes deterministic, provenance-
//! stamped CSV/text outputs into the run directory.

use std::path::PathBuf;

use aosa_core::beampattern::{
    beam_attributes, evaluate_pattern, mainlobe_ellipse, rho_for_roi, AttributeOptions,
    PatternScorer,
};
use aosa_core::benchmarks::{
    compact_array, naive_array, NAIVE_BW_TARGET_DEG, NAIVE_MSLL_TARGET_DB,
};
use aosa_core::bounds::{bound_curve, ZzbOptions, ROI_PRIOR_FIM};
use aosa_core::compressive::{compress_dictionary, draw_measurement, isometry_ratio};
use aosa_core::error::{Error, Result};
use aosa_core::estimation::{
    metrics, prepare_dictionary, run_trials, trial_rng, FullSensing, SteeringDictionary,
    TrialSettings,
};
use aosa_core::geometry::{expand_super_array, DesignGrid, ElementLayout, SuperArrayConfig};
use aosa_core::io;
use aosa_core::math::Sym2;
use aosa_core::placement::{
    build_dictionary, local_refine, select_optimum, ObjectiveWeights, RefineOptions, SearchOptions,
};

use crate::config::RunConfig;

/// Where a command takes its array from.
#[derive(Debug, Clone)]
pub enum ArraySource {
    File(PathBuf),
    Compact,
    Naive,
}

pub fn element_layout(cfg: &RunConfig) -> Result<ElementLayout> {
    ElementLayout::rectangular(
        cfg.layout.rows,
        cfg.layout.cols,
        cfg.layout.dx,
        cfg.layout.dy,
    )
}

pub fn design_grid(cfg: &RunConfig, layout: &ElementLayout) -> Result<DesignGrid> {
    DesignGrid::centered_square(cfg.grid.side, cfg.grid.pitch, &layout.footprint)
}

/// Resolve an array source to a configuration.
pub fn load_array(
    cfg: &RunConfig,
    layout: &ElementLayout,
    source: &ArraySource,
) -> Result<(SuperArrayConfig, String)> {
    match source {
        ArraySource::File(path) => {
            let array = io::read_array_file(path)?;
            if !array.satisfies_aos(layout) {
                return Err(Error::ConstraintViolation(format!(
                    "{}: module footprints overlap",
                    path.display()
                )));
            }
            Ok((array, path.display().to_string()))
        }
        ArraySource::Compact => Ok((
            compact_array(layout, cfg.search.subarrays)?,
            "benchmark:compact".into(),
        )),
        ArraySource::Naive => {
            let max_radius =
                cfg.grid.side / 2.0 - layout.footprint.half_height - layout.footprint.overhang;
            let (array, _r) = naive_array(
                layout,
                NAIVE_BW_TARGET_DEG,
                NAIVE_MSLL_TARGET_DB,
                max_radius,
                &AttributeOptions {
                    n: cfg.search.final_grid,
                    theta_max_deg: cfg.scenario.roi_theta_deg,
                    ..Default::default()
                },
            )?;
            Ok((array, "benchmark:naive".into()))
        }
    }
}

fn attr_options(cfg: &RunConfig, with_directivity: bool) -> AttributeOptions {
    AttributeOptions {
        n: cfg.search.final_grid,
        eps_cells: 2,
        theta_max_deg: cfg.scenario.roi_theta_deg,
        with_directivity,
    }
}

/// Steering dictionary over the ROI, oversampled relative to the compact
/// benchmark's narrowest beamwidth.
pub fn steering_dictionary(
    cfg: &RunConfig,
    layout: &ElementLayout,
    positions: &[[f64; 2]],
) -> Result<SteeringDictionary> {
    let compact = compact_array(layout, cfg.search.subarrays)?;
    let compact_pos = expand_super_array(&compact, layout)?;
    let ellipse = mainlobe_ellipse(&compact_pos)?;
    let half_width_u = (ellipse.bw_min_deg * std::f64::consts::PI / 360.0).sin();
    let pitch = 2.0 * half_width_u / cfg.scenario.dictionary_oversample;
    let radius = cfg.scenario.roi_theta_deg.to_radians().sin();
    SteeringDictionary::covering_disc(positions, radius, pitch)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    Ok(())
}

/// Outputs of a design run, for reporting and tests.
pub struct DesignOutputs {
    pub array: SuperArrayConfig,
    pub attrs: aosa_core::beampattern::BeamAttributes,
    pub dictionary_size: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub array_path: PathBuf,
}

/// Two-stage placement optimization: dictionary search, weighted-cost
/// selection, local refinement. Writes the array file, a Table-style
/// attribute row and the per-iteration cost trace.
pub fn cmd_design(cfg: &RunConfig) -> Result<DesignOutputs> {
    ensure_out_dir(cfg)?;
    let layout = element_layout(cfg)?;
    let grid = design_grid(cfg, &layout)?;
    let weights = ObjectiveWeights::new(cfg.weights.alpha, cfg.weights.beta, cfg.weights.gamma)?;

    let tau = if cfg.search.tau_lambda > 0.0 && cfg.search.tau_psi > 0.0 {
        Some([
            cfg.search.tau_lambda,
            cfg.search.tau_lambda,
            cfg.search.tau_psi,
        ])
    } else {
        None
    };
    let opts = SearchOptions {
        n_init: cfg.search.n_init,
        tau,
        scorer_n: cfg.search.search_grid,
        eps_cells: 2,
        theta_max_deg: cfg.scenario.roi_theta_deg,
    };
    let dict = build_dictionary(&grid, &layout, cfg.search.subarrays, &opts, cfg.seed)?;
    if cfg.search.write_dictionary {
        io::write_dictionary(&cfg.out_dir.join("dictionary.txt"), &dict)?;
    }

    let best = select_optimum(&dict, &weights)?;
    let scorer = PatternScorer::new(
        &layout,
        cfg.search.search_grid,
        rho_for_roi(cfg.scenario.roi_theta_deg),
        2,
    )?;
    let (refined, trace) = local_refine(
        &dict.configs[best],
        &weights,
        &dict.ranges,
        &scorer,
        &grid,
        &layout,
        &RefineOptions {
            rounds: cfg.search.refine_rounds,
            steps_per_axis: 5,
        },
    )?;

    let header = cfg.provenance();
    let array_path = cfg.out_dir.join("design.arr");
    io::write_array_file(&array_path, &refined, &header)?;

    // Final candidates re-scored at reporting resolution.
    let attrs = beam_attributes(&refined, &layout, &attr_options(cfg, true))?;
    io::write_attrs_csv(&cfg.out_dir.join("design_attrs.csv"), &attrs, &header)?;

    let mut out = String::new();
    for h in &header {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str("step,round,module,cost,bw_doa_deg,msll_db,ecc\n");
    for (i, s) in trace.iter().enumerate() {
        let module = if s.module == usize::MAX {
            "-".to_string()
        } else {
            s.module.to_string()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i, s.round, module, s.cost, s.attrs.bw_doa_deg, s.attrs.msll_db, s.attrs.ecc
        ));
    }
    std::fs::write(cfg.out_dir.join("cost_trace.csv"), out)?;

    Ok(DesignOutputs {
        array: refined,
        attrs,
        dictionary_size: dict.len(),
        initial_cost: trace.first().unwrap().cost,
        final_cost: trace.last().unwrap().cost,
        array_path,
    })
}

/// Beam attributes plus pattern dumps (CSV and binary) for one array.
pub fn cmd_attrs(
    cfg: &RunConfig,
    source: &ArraySource,
) -> Result<aosa_core::beampattern::BeamAttributes> {
    ensure_out_dir(cfg)?;
    let layout = element_layout(cfg)?;
    let (array, label) = load_array(cfg, &layout, source)?;
    let mut header = cfg.provenance();
    header.push(format!("array = {label}"));

    let attrs = beam_attributes(&array, &layout, &attr_options(cfg, true))?;
    io::write_attrs_csv(&cfg.out_dir.join("attrs.csv"), &attrs, &header)?;

    let positions = expand_super_array(&array, &layout)?;
    let field = evaluate_pattern(
        &positions,
        cfg.search.final_grid,
        rho_for_roi(cfg.scenario.roi_theta_deg),
    )?;
    io::write_pattern_csv(&cfg.out_dir.join("pattern.csv"), &field, &header)?;
    io::write_pattern_binary(&cfg.out_dir.join("pattern.bin"), &field)?;
    io::write_array_file(&cfg.out_dir.join("array.arr"), &array, &header)?;
    Ok(attrs)
}

/// CRB and ZZB curves over the configured SNR sweep.
pub fn cmd_bounds(cfg: &RunConfig, source: &ArraySource) -> Result<aosa_core::BoundCurve> {
    ensure_out_dir(cfg)?;
    let layout = element_layout(cfg)?;
    let (array, label) = load_array(cfg, &layout, source)?;
    let positions = expand_super_array(&array, &layout)?;
    let curve = bound_curve(
        &positions,
        &cfg.bounds_sweep.values(),
        Sym2::scaled_identity(ROI_PRIOR_FIM),
        &ZzbOptions::default(),
    )?;
    let mut header = cfg.provenance();
    header.push(format!("array = {label}"));
    io::write_bound_curve_csv(&cfg.out_dir.join("bounds.csv"), &curve, &header)?;
    Ok(curve)
}

/// Monte-Carlo RMSE sweep and error CCDF with the full-measurement NOMP.
pub fn cmd_montecarlo(cfg: &RunConfig, source: &ArraySource) -> Result<Vec<(f64, f64)>> {
    ensure_out_dir(cfg)?;
    let layout = element_layout(cfg)?;
    let (array, label) = load_array(cfg, &layout, source)?;
    let positions = expand_super_array(&array, &layout)?;
    let dict = steering_dictionary(cfg, &layout, &positions)?;
    let pdict = prepare_dictionary(&FullSensing, &dict);
    let settings = TrialSettings {
        k: cfg.scenario.k,
        primary_broadside: true,
        min_sep: cfg.scenario.min_sep,
        interferer_level_db: cfg.scenario.interferer_db,
        roi_radius: cfg.scenario.roi_theta_deg.to_radians().sin(),
        refine_rounds: cfg.scenario.refine_rounds,
    };

    let mut rows = Vec::new();
    for (i, snr) in cfg.scenario_sweep.values().iter().enumerate() {
        let errors = run_trials(
            &FullSensing,
            &pdict,
            &positions,
            &settings,
            *snr,
            cfg.scenario.trials,
            cfg.seed,
            i as u64,
        )?;
        rows.push((*snr, metrics(&errors)?.rmse));
    }
    let mut header = cfg.provenance();
    header.push(format!("array = {label}"));
    header.push(format!(
        "k = {}, min_sep = {}, interferer_db = {}, trials = {}",
        cfg.scenario.k, cfg.scenario.min_sep, cfg.scenario.interferer_db, cfg.scenario.trials
    ));
    io::write_xy_csv(
        &cfg.out_dir.join("rmse.csv"),
        ("snr_db", "rmse"),
        &rows,
        &header,
    )?;

    // CCDF at the configured SNR (its own deterministic stream).
    let errors = run_trials(
        &FullSensing,
        &pdict,
        &positions,
        &settings,
        cfg.scenario.ccdf_snr_db,
        cfg.scenario.trials,
        cfg.seed,
        1 << 20,
    )?;
    let m = metrics(&errors)?;
    let ccdf_rows: Vec<(f64, f64)> = m.ccdf.iter().map(|&(t, p)| (20.0 * t.log10(), p)).collect();
    let mut ccdf_header = header.clone();
    ccdf_header.push(format!("ccdf_snr_db = {}", cfg.scenario.ccdf_snr_db));
    io::write_xy_csv(
        &cfg.out_dir.join("ccdf.csv"),
        ("threshold_db", "prob"),
        &ccdf_rows,
        &ccdf_header,
    )?;
    Ok(rows)
}

/// Isometry-ratio sweep and compressive-NOMP RMSE sweep.
pub fn cmd_compressive(cfg: &RunConfig, source: &ArraySource) -> Result<Vec<(f64, f64)>> {
    ensure_out_dir(cfg)?;
    let layout = element_layout(cfg)?;
    let (array, label) = load_array(cfg, &layout, source)?;
    let positions = expand_super_array(&array, &layout)?;
    let dict = steering_dictionary(cfg, &layout, &positions)?;
    let n_s = array.n_subarrays();
    let n_e = layout.elements_per_subarray();

    let mut header = cfg.provenance();
    header.push(format!("array = {label}"));

    // Isometry bracket as a function of the total measurement count.
    let mut iso_rows = Vec::new();
    for (i, &m_total) in cfg.compressive.m_sweep.iter().enumerate() {
        if m_total % n_s != 0 {
            return Err(Error::invalid(format!(
                "m_sweep entry {m_total} is not a multiple of the {n_s} subarrays"
            )));
        }
        let m_i = m_total / n_s;
        let mut rng = trial_rng(cfg.seed, 0x1500 + i as u64);
        let phi = draw_measurement(n_s, n_e, &vec![m_i; n_s], &mut rng)?;
        let (lo, hi) = isometry_ratio(
            &phi,
            &dict,
            cfg.compressive.sparsity,
            cfg.compressive.isometry_trials,
            cfg.seed ^ 0xa5a5_0000 ^ i as u64,
        )?;
        iso_rows.push((m_total as f64, lo, hi));
    }
    io::write_xyz_csv(
        &cfg.out_dir.join("isometry.csv"),
        ("m", "min_db", "max_db"),
        &iso_rows,
        &header,
    )?;

    // RMSE sweep with the configured per-subarray measurement count.
    let mut rng = trial_rng(cfg.seed, 0x2500);
    let phi = draw_measurement(
        n_s,
        n_e,
        &vec![cfg.compressive.m_per_subarray; n_s],
        &mut rng,
    )?;
    let mut phi_header = header.clone();
    phi_header.push(format!(
        "m_list = {:?} (regenerable from the seed)",
        vec![cfg.compressive.m_per_subarray; n_s]
    ));
    io::write_measurement_matrix(&cfg.out_dir.join("measurement.txt"), &phi, &phi_header)?;
    let pdict = compress_dictionary(&phi, &dict);
    let settings = TrialSettings {
        k: cfg.scenario.k,
        primary_broadside: true,
        min_sep: cfg.scenario.min_sep,
        interferer_level_db: cfg.scenario.interferer_db,
        roi_radius: cfg.scenario.roi_theta_deg.to_radians().sin(),
        refine_rounds: cfg.scenario.refine_rounds,
    };
    let mut rows = Vec::new();
    for (i, snr) in cfg.scenario_sweep.values().iter().enumerate() {
        let errors = run_trials(
            &phi,
            &pdict,
            &positions,
            &settings,
            *snr,
            cfg.scenario.trials,
            cfg.seed,
            0x3000 + i as u64,
        )?;
        rows.push((*snr, metrics(&errors)?.rmse));
    }
    let mut rmse_header = header.clone();
    rmse_header.push(format!(
        "m_per_subarray = {}, n_over_m = {}",
        cfg.compressive.m_per_subarray,
        n_e as f64 / cfg.compressive.m_per_subarray as f64
    ));
    io::write_xy_csv(
        &cfg.out_dir.join("compressive_rmse.csv"),
        ("snr_db", "rmse"),
        &rows,
        &rmse_header,
    )?;
    Ok(rows)
}

/// Quick textual summary of one attribute row.
pub fn describe_attrs(a: &aosa_core::beampattern::BeamAttributes) -> String {
    let dir = match a.directivity_db {
        Some(d) => format!("{d:.2}"),
        None => "-".into(),
    };
    format!(
        "bw_doa {:.2} deg, msll {:.2} dB, ecc {:.3}, directivity {dir} dB",
        a.bw_doa_deg, a.msll_db, a.ecc
    )
}
