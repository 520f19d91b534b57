//! Configuration-driven batch experiment: generate maps, analyze roughness,
//! sample missions, simulate traversals and summarise by fractal dimension.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! maps/<id>.png, maps/<id>.json        16-bit DEM and its sidecar
//! roughness/<id>.png, roughness/<id>.json
//! composition.csv                      one row per map
//! missions/<id>.jsonl                  one mission per line
//! results.csv                          one row per trial
//! logs/<id>_t<k>.csv, .json            per-trial logs (optional)
//! summary.csv                          one row per (D, metric)
//! plots/*.csv                          tidy inputs for figures
//! ```
//!
//! Seeds: map `k` uses `derive_seed(master, k)` for every `D`, so the maps of a
//! given index share their low- and mid-frequency bands and high-frequency
//! phases and differ only in the high band's `D`. Missions use
//! `derive_seed(map_seed, MISSION_STREAM_LABEL)` as their root and
//! `derive_seed(root, i)` for mission `i`, so they too are paired across `D`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dem::{
    self, band_seed, build_multifractal_sweep, DemMetadata, Heightfield, PipelineOptions,
    QuantizedDem, SmoothingPlacement,
};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Schedule};
use crate::missions::{mission_seed, Mission, MissionConstraints, MissionRecord, MissionSampler};
use crate::roughness::{
    classify, composition, moore_gradient_map, morphological_close, Composition, RoughnessMap,
    Thresholds,
};
use crate::seed::{derive_seed, Stream};
use crate::stats::{aggregate, GroupSummary, MapResult, Metric, MissionMetrics, TrialResult};
use crate::traversal::{run_mission, Outcome, VehicleSpec};
use crate::wm::{GridSpec, Truncation, WmOptions, WmParams};

/// Label separating the mission stream from the per-band seeds.
pub const MISSION_STREAM_LABEL: u64 = 0x4d49_5353;

/// Distance between the outermost pixel centres of every map, in metres.
pub const DEFAULT_MAP_EXTENT_M: f64 = 50.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub dimensions: Vec<f64>,
    pub maps_per_dimension: usize,
    pub missions_per_map: usize,
    pub seed: u64,
    pub size_px: usize,
    pub map_extent_m: f64,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    pub write_logs: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            dimensions: vec![2.3, 2.45, 2.6],
            maps_per_dimension: 20,
            missions_per_map: 20,
            seed: 20_240_501,
            size_px: WmParams::TABLE_N_MAX as usize,
            map_extent_m: DEFAULT_MAP_EXTENT_M,
            out_dir: PathBuf::from("out"),
            workers: None,
            write_logs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainSection {
    pub sigma_px: f64,
    pub smoothing: SmoothingPlacement,
    /// Relative amplitude cut for frequency terms; 0 sums every term.
    pub truncation: f64,
    pub z_scale_pct: f64,
    pub low: WmParams,
    pub mid: WmParams,
    /// `dimension` is replaced by each experiment dimension.
    pub high: WmParams,
}

impl Default for TerrainSection {
    fn default() -> Self {
        Self {
            sigma_px: dem::DEFAULT_SIGMA_PX,
            smoothing: SmoothingPlacement::PerBand,
            truncation: crate::wm::DEFAULT_TRUNCATION,
            z_scale_pct: dem::DEFAULT_Z_SCALE_PCT,
            low: WmParams::low_frequency(),
            mid: WmParams::mid_frequency(),
            high: WmParams::high_frequency(2.45),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoughnessSection {
    pub low_semi: f64,
    pub semi_high: f64,
    pub disk_radius_px: usize,
    pub border_m: f64,
}

impl Default for RoughnessSection {
    fn default() -> Self {
        let t = Thresholds::default();
        Self {
            low_semi: t.low_semi,
            semi_high: t.semi_high,
            disk_radius_px: crate::roughness::DEFAULT_DISK_RADIUS_PX,
            border_m: crate::roughness::DEFAULT_BORDER_M,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSection {
    pub length_m: f64,
    pub retry_cap: u32,
}

impl Default for MissionSection {
    fn default() -> Self {
        let c = MissionConstraints::default();
        Self {
            length_m: c.length_m,
            retry_cap: c.retry_cap,
        }
    }
}

/// Whole experiment; serialized as TOML with one table per section.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub terrain: TerrainSection,
    pub roughness: RoughnessSection,
    pub missions: MissionSection,
    pub vehicle: VehicleSpec,
}

/// One map of the experiment grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MapEntry {
    pub id: String,
    pub dimension: f64,
    pub dimension_index: usize,
    pub map_index: usize,
    pub seed: u64,
}

impl MapEntry {
    /// Independent of `D`, so maps of the same index draw the same mission
    /// stream (common random numbers across dimensions).
    pub fn mission_root_seed(&self) -> u64 {
        derive_seed(self.seed, MISSION_STREAM_LABEL)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.dimensions.is_empty() || e.maps_per_dimension == 0 || e.missions_per_map == 0 {
            return Err(invalid("dimension list and per-dimension counts must be non-empty"));
        }
        if let Some(d) = e.dimensions.iter().find(|d| !(**d > 2.0 && **d < 3.0)) {
            return Err(invalid(format!("fractal dimension {d} outside (2, 3)")));
        }
        let mut seen = e.dimensions.clone();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        if seen.len() != e.dimensions.len() {
            return Err(invalid("fractal dimensions must be distinct"));
        }
        if e.size_px < 3 {
            return Err(invalid("size_px must be >= 3"));
        }
        if !(e.map_extent_m > 0.0) {
            return Err(invalid("map_extent_m must be > 0"));
        }
        if self.terrain.truncation < 0.0 {
            return Err(invalid("truncation must be >= 0"));
        }
        for p in self.band_params(e.dimensions[0]) {
            p.validate()?;
        }
        self.grid().validate()?;
        self.thresholds().validate()?;
        dem::z_span_for(self.terrain.z_scale_pct)?;
        if !(self.terrain.sigma_px > 0.0) {
            return Err(invalid("sigma_px must be > 0"));
        }
        if self.roughness.disk_radius_px < 1 {
            return Err(invalid("disk_radius_px must be >= 1"));
        }
        self.vehicle.validate()
    }

    pub fn out_dir(&self) -> &Path {
        &self.experiment.out_dir
    }

    pub fn xy_resolution(&self) -> f64 {
        self.experiment.map_extent_m / (self.experiment.size_px - 1) as f64
    }

    pub fn z_span_m(&self) -> f64 {
        self.terrain.z_scale_pct / 100.0 * dem::FULL_Z_SPAN_M
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            low_semi: self.roughness.low_semi,
            semi_high: self.roughness.semi_high,
        }
    }

    pub fn mission_constraints(&self) -> MissionConstraints {
        MissionConstraints {
            length_m: self.missions.length_m,
            border_m: self.roughness.border_m,
            retry_cap: self.missions.retry_cap,
        }
    }

    /// Band parameters with `n_max` equal to the map size.
    pub fn band_params(&self, dimension: f64) -> [WmParams; 3] {
        let n = self.experiment.size_px as u32;
        [
            self.terrain.low.with_n_max(n),
            self.terrain.mid.with_n_max(n),
            WmParams {
                dimension,
                ..self.terrain.high
            }
            .with_n_max(n),
        ]
    }

    /// Window of one sampling length `L` starting at `(L, L)`.
    pub fn grid(&self) -> GridSpec {
        let l = self.terrain.high.length;
        GridSpec {
            size_px: self.experiment.size_px,
            x0: l,
            y0: l,
            spacing: l / self.experiment.size_px as f64,
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let truncation = if self.terrain.truncation > 0.0 {
            Truncation::Relative(self.terrain.truncation)
        } else {
            Truncation::Off
        };
        PipelineOptions {
            sigma: self.terrain.sigma_px,
            smoothing: self.terrain.smoothing,
            wm: WmOptions {
                truncation,
                schedule: Schedule::Parallel,
            },
        }
    }

    pub fn map_id(dimension: f64, map_index: usize) -> String {
        format!("d{dimension}_m{map_index:02}")
    }

    /// All maps, ordered by dimension index then map index.
    pub fn maps(&self) -> Vec<MapEntry> {
        let e = &self.experiment;
        e.dimensions
            .iter()
            .enumerate()
            .flat_map(|(di, &d)| {
                (0..e.maps_per_dimension).map(move |k| MapEntry {
                    id: Self::map_id(d, k),
                    dimension: d,
                    dimension_index: di,
                    map_index: k,
                    seed: derive_seed(e.seed, k as u64),
                })
            })
            .collect()
    }

    pub fn map_png(&self, id: &str) -> PathBuf {
        self.out_dir().join("maps").join(format!("{id}.png"))
    }

    pub fn missions_file(&self, id: &str) -> PathBuf {
        self.out_dir().join("missions").join(format!("{id}.jsonl"))
    }

    pub fn composition_csv(&self) -> PathBuf {
        self.out_dir().join("composition.csv")
    }

    pub fn results_csv(&self) -> PathBuf {
        self.out_dir().join("results.csv")
    }

    pub fn summary_csv(&self) -> PathBuf {
        self.out_dir().join("summary.csv")
    }

    pub fn plots_dir(&self) -> PathBuf {
        self.out_dir().join("plots")
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Write through a temporary sibling so readers never see partial files.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_png(path: &Path) -> Result<QuantizedDem> {
    QuantizedDem::read_png(path)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

// ---------------------------------------------------------------- generate

/// Generate every map PNG with its JSON sidecar.
pub fn generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let maps_dir = cfg.out_dir().join("maps");
    create_dir(&maps_dir)?;
    let options = cfg.pipeline_options();
    let grid = cfg.grid();
    let e = &cfg.experiment;
    let written = exec::map_indexed(Schedule::Parallel, e.maps_per_dimension, |k| {
        let seed = derive_seed(e.seed, k as u64);
        let metas: Vec<DemMetadata> = e
            .dimensions
            .iter()
            .map(|&d| {
                let params = cfg.band_params(d);
                DemMetadata {
                    pipeline_version: dem::PIPELINE_VERSION.to_string(),
                    map_id: ExperimentConfig::map_id(d, k),
                    seed,
                    band_seeds: [band_seed(seed, 0), band_seed(seed, 1), band_seed(seed, 2)],
                    low: params[0],
                    mid: params[1],
                    high: params[2],
                    sigma_px: options.sigma,
                    smoothing: options.smoothing,
                    truncation: match options.wm.truncation {
                        Truncation::Off => None,
                        Truncation::Relative(t) => Some(t),
                    },
                    grid,
                    xy_resolution_m: cfg.xy_resolution(),
                    z_span_m: cfg.z_span_m(),
                }
            })
            .collect();
        let paths: Vec<PathBuf> = metas.iter().map(|m| cfg.map_png(&m.map_id)).collect();
        // Resume: a map index whose images exist with identical sidecars is kept.
        if metas.iter().zip(&paths).all(|(m, p)| is_current(p, m)) {
            return Ok(paths);
        }
        let params = cfg.band_params(e.dimensions[0]);
        let dems = build_multifractal_sweep(
            [&params[0], &params[1], &params[2]],
            &e.dimensions,
            &grid,
            seed,
            &options,
        )?;
        for ((meta, png), q) in metas.iter().zip(&paths).zip(&dems) {
            write_atomic(png, &q.encode_png()?)?;
            let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
            write_atomic(&png.with_extension("json"), json.as_bytes())?;
        }
        Ok(paths)
    });
    let mut out = Vec::new();
    for r in written {
        out.extend(r?);
    }
    out.sort();
    Ok(out)
}

fn is_current(png: &Path, meta: &DemMetadata) -> bool {
    png.exists()
        && fs::read(png.with_extension("json"))
            .ok()
            .and_then(|b| serde_json::from_slice::<DemMetadata>(&b).ok())
            .is_some_and(|m| &m == meta)
}

// ----------------------------------------------------------------- analyze

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub map_id: String,
    pub dimension: f64,
    pub map_index: usize,
    pub map_seed: u64,
    pub low_pct: f64,
    pub semi_pct: f64,
    pub high_pct: f64,
}

/// Gradient map and pre-closing classification of one stored DEM.
pub fn roughness_of(cfg: &ExperimentConfig, q: &QuantizedDem) -> Result<RoughnessMap> {
    let g = moore_gradient_map(q, cfg.xy_resolution())?;
    classify(&g, cfg.thresholds())
}

fn check_size(cfg: &ExperimentConfig, path: &Path, q: &QuantizedDem) -> Result<()> {
    if q.size() != cfg.experiment.size_px {
        return Err(Error::format(
            path,
            format!("map is {} px, config expects {}", q.size(), cfg.experiment.size_px),
        ));
    }
    Ok(())
}

/// Composition (pre-closing, border excluded) of every map.
pub fn analyze(cfg: &ExperimentConfig) -> Result<Vec<CompositionRow>> {
    cfg.validate()?;
    let dir = cfg.out_dir().join("roughness");
    create_dir(&dir)?;
    let maps = cfg.maps();
    let rows = exec::map_indexed(Schedule::Parallel, maps.len(), |i| {
        let entry = &maps[i];
        let png = cfg.map_png(&entry.id);
        let q = read_png(&png)?;
        check_size(cfg, &png, &q)?;
        let classes = roughness_of(cfg, &q)?;
        let c = composition(&classes, cfg.roughness.border_m, cfg.xy_resolution())?;
        classes.write_png(&dir.join(format!("{}.png", entry.id)))?;
        let json = serde_json::to_string_pretty(&c).expect("composition serializes");
        write_atomic(&dir.join(format!("{}.json", entry.id)), json.as_bytes())?;
        Ok(CompositionRow {
            map_id: entry.id.clone(),
            dimension: entry.dimension,
            map_index: entry.map_index,
            map_seed: entry.seed,
            low_pct: c.low_pct,
            semi_pct: c.semi_pct,
            high_pct: c.high_pct,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    write_atomic(&cfg.composition_csv(), &csv_bytes(&rows)?)?;
    Ok(rows)
}

// ------------------------------------------------------------------ sample

/// Missions written per map; maps that yielded no valid mission are listed in
/// `untraversable` instead of failing the run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleReport {
    pub missions: usize,
    pub untraversable: Vec<String>,
}

pub fn sample(cfg: &ExperimentConfig) -> Result<SampleReport> {
    cfg.validate()?;
    create_dir(&cfg.out_dir().join("missions"))?;
    let maps = cfg.maps();
    let constraints = cfg.mission_constraints();
    let per_map = exec::map_indexed(Schedule::Parallel, maps.len(), |i| {
        let entry = &maps[i];
        let png = cfg.map_png(&entry.id);
        let q = read_png(&png)?;
        check_size(cfg, &png, &q)?;
        let closed = morphological_close(&roughness_of(cfg, &q)?, cfg.roughness.disk_radius_px)?;
        let sampler = MissionSampler::new(&closed, cfg.xy_resolution(), constraints)?;
        let root = entry.mission_root_seed();
        let mut lines = String::new();
        let mut count = 0;
        let mut failed = false;
        for index in 0..cfg.experiment.missions_per_map {
            let seed = mission_seed(root, index);
            match sampler.sample(&mut Stream::new(seed)) {
                Ok(mission) => {
                    let record = MissionRecord {
                        map_id: entry.id.clone(),
                        index,
                        seed,
                        mission,
                    };
                    lines.push_str(&serde_json::to_string(&record).expect("mission serializes"));
                    lines.push('\n');
                    count += 1;
                }
                Err(Error::NoValidMission { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        write_atomic(&cfg.missions_file(&entry.id), lines.as_bytes())?;
        Ok((count, failed.then(|| entry.id.clone())))
    });
    let mut report = SampleReport::default();
    for r in per_map {
        let (count, failed) = r?;
        report.missions += count;
        report.untraversable.extend(failed);
    }
    Ok(report)
}

pub fn read_missions(path: &Path) -> Result<Vec<MissionRecord>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| Error::format(path, e.to_string()))
        })
        .collect()
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub map_id: String,
    pub dimension: f64,
    pub map_index: usize,
    pub map_seed: u64,
    pub mission: usize,
    pub mission_seed: u64,
    pub outcome: Outcome,
    pub termination: String,
    pub traversal_time_s: Option<f64>,
    pub rms_vertical_accel: Option<f64>,
    pub rms_pitch_rate: Option<f64>,
    pub rms_roll_rate: Option<f64>,
}

impl ResultRow {
    fn key(&self) -> (String, usize) {
        (self.map_id.clone(), self.mission)
    }

    fn metrics(&self) -> Option<MissionMetrics> {
        Some(MissionMetrics {
            rms_vertical_accel: self.rms_vertical_accel?,
            rms_pitch_rate: self.rms_pitch_rate?,
            rms_roll_rate: self.rms_roll_rate?,
            traversal_time_s: self.traversal_time_s?,
        })
    }
}

pub fn heightfield_of(cfg: &ExperimentConfig, q: &QuantizedDem) -> Result<Heightfield> {
    Heightfield::from_quantized(q, cfg.xy_resolution(), cfg.z_span_m())
}

pub fn simulate_trial(
    cfg: &ExperimentConfig,
    entry: &MapEntry,
    h: &Heightfield,
    record: &MissionRecord,
) -> Result<ResultRow> {
    let log = run_mission(&record.mission, h, &cfg.vehicle, record.seed);
    if cfg.experiment.write_logs {
        let dir = cfg.out_dir().join("logs");
        create_dir(&dir)?;
        log.write_files(&dir.join(format!("{}_t{:02}", entry.id, record.index)))?;
    }
    let metrics = MissionMetrics::from_log(&log);
    Ok(ResultRow {
        map_id: entry.id.clone(),
        dimension: entry.dimension,
        map_index: entry.map_index,
        map_seed: entry.seed,
        mission: record.index,
        mission_seed: record.seed,
        outcome: log.outcome,
        termination: log.termination.as_str().to_string(),
        traversal_time_s: log.traversal_time_s,
        rms_vertical_accel: metrics.map(|m| m.rms_vertical_accel),
        rms_pitch_rate: metrics.map(|m| m.rms_pitch_rate),
        rms_roll_rate: metrics.map(|m| m.rms_roll_rate),
    })
}

/// Simulate every sampled mission not already present in `results.csv`.
/// `limit` caps how many new trials run in this call (partial runs resume
/// later). Returns the number of new trials; the file is rewritten in map
/// then mission order.
pub fn simulate(cfg: &ExperimentConfig, limit: Option<usize>) -> Result<usize> {
    cfg.validate()?;
    let results_path = cfg.results_csv();
    let mut rows: Vec<ResultRow> = if results_path.exists() {
        read_csv(&results_path)?
    } else {
        Vec::new()
    };
    let done: BTreeSet<(String, usize)> = rows.iter().map(ResultRow::key).collect();

    let maps = cfg.maps();
    let mut pending: Vec<(usize, Vec<MissionRecord>)> = Vec::new();
    let mut budget = limit.unwrap_or(usize::MAX);
    for (i, entry) in maps.iter().enumerate() {
        let todo: Vec<MissionRecord> = read_missions(&cfg.missions_file(&entry.id))?
            .into_iter()
            .filter(|r| !done.contains(&(entry.id.clone(), r.index)))
            .take(budget)
            .collect();
        budget -= todo.len();
        if !todo.is_empty() {
            pending.push((i, todo));
        }
    }

    let fresh = exec::map_indexed(Schedule::Parallel, pending.len(), |p| {
        let (i, records) = &pending[p];
        let entry = &maps[*i];
        let png = cfg.map_png(&entry.id);
        let q = read_png(&png)?;
        check_size(cfg, &png, &q)?;
        let h = heightfield_of(cfg, &q)?;
        records
            .iter()
            .map(|r| simulate_trial(cfg, entry, &h, r))
            .collect::<Result<Vec<_>>>()
    });
    let mut added = 0;
    for batch in fresh {
        let batch = batch?;
        added += batch.len();
        rows.extend(batch);
    }

    let order: BTreeMap<&str, usize> = maps.iter().enumerate().map(|(i, m)| (m.id.as_str(), i)).collect();
    rows.sort_by_key(|r| (order.get(r.map_id.as_str()).copied().unwrap_or(usize::MAX), r.mission));
    write_atomic(&results_path, &csv_bytes(&rows)?)?;
    Ok(added)
}

// ------------------------------------------------------------------ report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dimension: f64,
    pub metric: Metric,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outlier_count: usize,
}

#[derive(Serialize)]
struct CompositionMedianRow {
    dimension: f64,
    low_pct: f64,
    semi_pct: f64,
    high_pct: f64,
}

#[derive(Serialize)]
struct TidyRow<'a> {
    dimension: f64,
    map_id: &'a str,
    mission: Option<usize>,
    value: f64,
}

/// Join composition and trial results into per-map records.
pub fn load_map_results(cfg: &ExperimentConfig) -> Result<Vec<MapResult>> {
    let compositions: Vec<CompositionRow> = read_csv(&cfg.composition_csv())?;
    let results: Vec<ResultRow> = read_csv(&cfg.results_csv())?;
    if results.is_empty() {
        return Err(Error::EmptyInput("results.csv holds no trials"));
    }
    let mut by_map: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in &results {
        by_map.entry(r.map_id.as_str()).or_default().push(r);
    }
    Ok(compositions
        .iter()
        .map(|c| MapResult {
            map_id: c.map_id.clone(),
            dimension: c.dimension,
            composition: Composition {
                low_pct: c.low_pct,
                semi_pct: c.semi_pct,
                high_pct: c.high_pct,
            },
            trials: by_map
                .get(c.map_id.as_str())
                .map(|rows| {
                    rows.iter()
                        .map(|r| TrialResult {
                            mission: r.mission,
                            seed: r.mission_seed,
                            outcome: r.outcome,
                            metrics: r.metrics(),
                        })
                        .collect()
                })
                .unwrap_or_default(),
        })
        .collect())
}

/// Write `summary.csv` and the tidy per-figure CSVs; returns the summaries.
pub fn report(cfg: &ExperimentConfig) -> Result<Vec<GroupSummary>> {
    let maps = load_map_results(cfg)?;
    let summaries = aggregate(&maps);

    let rows: Vec<SummaryRow> = summaries
        .iter()
        .flat_map(|g| {
            g.metrics.iter().map(move |(metric, s)| SummaryRow {
                dimension: g.dimension,
                metric: *metric,
                count: s.count,
                median: s.median,
                q1: s.q1,
                q3: s.q3,
                iqr: s.iqr,
                lower_bound: s.lower_bound,
                upper_bound: s.upper_bound,
                whisker_low: s.whisker_low,
                whisker_high: s.whisker_high,
                outlier_count: s.outliers.len(),
            })
        })
        .collect();
    write_atomic(&cfg.summary_csv(), &csv_bytes(&rows)?)?;

    let plots = cfg.plots_dir();
    create_dir(&plots)?;
    let medians: Vec<CompositionMedianRow> = summaries
        .iter()
        .map(|g| {
            let m = |metric| g.get(metric).map_or(f64::NAN, |s: &crate::stats::BoxStats| s.median);
            CompositionMedianRow {
                dimension: g.dimension,
                low_pct: m(Metric::LowPct),
                semi_pct: m(Metric::SemiPct),
                high_pct: m(Metric::HighPct),
            }
        })
        .collect();
    write_atomic(&plots.join("composition_medians.csv"), &csv_bytes(&medians)?)?;

    for metric in Metric::ALL {
        let mut tidy = Vec::new();
        for map in &maps {
            if metric.is_per_map() {
                for v in metric.values(map) {
                    tidy.push(TidyRow {
                        dimension: map.dimension,
                        map_id: &map.map_id,
                        mission: None,
                        value: v,
                    });
                }
            } else {
                for t in map.trials.iter().filter(|t| t.outcome == Outcome::Success) {
                    if let Some(m) = t.metrics {
                        let value = match metric {
                            Metric::RmsVerticalAccel => m.rms_vertical_accel,
                            Metric::RmsPitchRate => m.rms_pitch_rate,
                            Metric::RmsRollRate => m.rms_roll_rate,
                            _ => m.traversal_time_s,
                        };
                        tidy.push(TidyRow {
                            dimension: map.dimension,
                            map_id: &map.map_id,
                            mission: Some(t.mission),
                            value,
                        });
                    }
                }
            }
        }
        write_atomic(&plots.join(format!("{}.csv", metric.name())), &csv_bytes(&tidy)?)?;
    }
    Ok(summaries)
}

/// Read `summary.csv` back.
pub fn read_summary(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    read_csv(&cfg.summary_csv())
}

/// All stages in order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<GroupSummary>> {
    generate(cfg)?;
    analyze(cfg)?;
    sample(cfg)?;
    simulate(cfg, None)?;
    report(cfg)
}

/// Convenience for tests and tools: mission list of one map.
pub fn missions_of(cfg: &ExperimentConfig, id: &str) -> Result<Vec<Mission>> {
    Ok(read_missions(&cfg.missions_file(id))?
        .into_iter()
        .map(|r| r.mission)
        .collect())
}

pub fn write_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(cfg.to_toml_string().as_bytes())
        .map_err(|e| Error::io(path, e))
}
