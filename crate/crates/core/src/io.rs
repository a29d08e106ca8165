//! File formats: datum files, artifacts, prospect maps and sweep ledgers.
//!
//! A datum file is a JSON object
//! `{id, label, tokens | (embeddings_bin, T, d), edges, coords?, mask?}`.
//! `embeddings_bin` names a sidecar of little-endian `f32` values stored
//! row-major, resolved relative to the datum file. The loader is strict:
//! unknown keys and inconsistent sizes are rejected with the JSON pointer
//! of the offending value.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, LabeledDatum, MapGraph, ProspectMap};
use crate::kernel::{Alpha, Kernel, Variant};
use crate::quantizer::Quantizer;
use crate::select::{ConfigResult, Hyperparams};
use crate::synth::{SynthDataset, SynthMetadata};

const DATUM_KEYS: [&str; 9] = ["id", "label", "tokens", "embeddings_bin", "T", "d", "edges", "coords", "mask"];

struct Ctx<'a> {
    path: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, pointer: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.to_path_buf(),
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    fn uint(&self, value: &Value, pointer: &str) -> Result<usize> {
        value
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| self.err(pointer, format!("expected a non-negative integer, got {value}")))
    }

    fn number(&self, value: &Value, pointer: &str) -> Result<f64> {
        value
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(pointer, format!("expected a finite number, got {value}")))
    }

    fn array<'v>(&self, value: &'v Value, pointer: &str) -> Result<&'v Vec<Value>> {
        value
            .as_array()
            .ok_or_else(|| self.err(pointer, "expected an array"))
    }
}

fn parse_tokens(ctx: &Ctx, value: &Value) -> Result<(Vec<f32>, usize, usize)> {
    let rows = ctx.array(value, "/tokens")?;
    if rows.is_empty() {
        return Err(ctx.err("/tokens", "a datum needs at least one token"));
    }
    let mut d = None;
    let mut flat = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let pointer = format!("/tokens/{i}");
        let row = ctx.array(row, &pointer)?;
        match d {
            None if row.is_empty() => return Err(ctx.err(pointer, "embeddings need at least one value")),
            None => d = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(ctx.err(pointer, format!("expected {d} values like /tokens/0, got {}", row.len())))
            }
            Some(_) => {}
        }
        for (j, x) in row.iter().enumerate() {
            let v = ctx.number(x, &format!("/tokens/{i}/{j}"))?;
            let narrowed = v as f32;
            if !narrowed.is_finite() {
                return Err(ctx.err(format!("/tokens/{i}/{j}"), "value overflows 32-bit float"));
            }
            flat.push(narrowed);
        }
    }
    Ok((flat, rows.len(), d.expect("nonempty")))
}

fn read_sidecar(ctx: &Ctx, obj: &Map<String, Value>) -> Result<(Vec<f32>, usize, usize)> {
    let name = obj["embeddings_bin"]
        .as_str()
        .ok_or_else(|| ctx.err("/embeddings_bin", "expected a relative path string"))?;
    let t = ctx.uint(obj.get("T").ok_or_else(|| ctx.err("/T", "required with embeddings_bin"))?, "/T")?;
    let d = ctx.uint(obj.get("d").ok_or_else(|| ctx.err("/d", "required with embeddings_bin"))?, "/d")?;
    if t == 0 {
        return Err(ctx.err("/T", "a datum needs at least one token"));
    }
    if d == 0 {
        return Err(ctx.err("/d", "embeddings need at least one value"));
    }
    let bin_path = ctx.path.parent().unwrap_or(Path::new(".")).join(name);
    let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    if bytes.len() != t * d * 4 {
        return Err(ctx.err(
            "/embeddings_bin",
            format!("sidecar holds {} bytes but T*d*4 = {}", bytes.len(), t * d * 4),
        ));
    }
    let flat: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(pos) = flat.iter().position(|x| !x.is_finite()) {
        return Err(ctx.err(
            "/embeddings_bin",
            format!("non-finite value at token {}, component {}", pos / d, pos % d),
        ));
    }
    Ok((flat, t, d))
}

fn parse_edges(ctx: &Ctx, value: &Value, t: usize) -> Result<Vec<(usize, usize)>> {
    let list = ctx.array(value, "/edges")?;
    let mut seen = HashSet::with_capacity(list.len());
    let mut edges = Vec::with_capacity(list.len());
    for (k, pair) in list.iter().enumerate() {
        let pointer = format!("/edges/{k}");
        let pair = ctx.array(pair, &pointer)?;
        if pair.len() != 2 {
            return Err(ctx.err(pointer, "an edge is a pair [i, j]"));
        }
        let i = ctx.uint(&pair[0], &format!("{pointer}/0"))?;
        let j = ctx.uint(&pair[1], &format!("{pointer}/1"))?;
        if i >= t || j >= t {
            return Err(ctx.err(pointer, format!("endpoint out of range for T={t}")));
        }
        if i == j {
            return Err(ctx.err(pointer, "self-edges are not allowed"));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(ctx.err(pointer, "duplicate edge"));
        }
        edges.push((i, j));
    }
    Ok(edges)
}

fn parse_coords(ctx: &Ctx, value: &Value, t: usize) -> Result<Vec<Vec<f64>>> {
    let rows = ctx.array(value, "/coords")?;
    if rows.len() != t {
        return Err(ctx.err("/coords", format!("expected {t} points, got {}", rows.len())));
    }
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(t);
    for (i, row) in rows.iter().enumerate() {
        let pointer = format!("/coords/{i}");
        let row = ctx.array(row, &pointer)?;
        if !(1..=3).contains(&row.len()) || (i > 0 && row.len() != out[0].len()) {
            return Err(ctx.err(pointer, "points must share one dimension in 1..=3"));
        }
        out.push(
            row.iter()
                .enumerate()
                .map(|(j, x)| ctx.number(x, &format!("/coords/{i}/{j}")))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(out)
}

fn parse_mask(ctx: &Ctx, value: &Value, t: usize) -> Result<Vec<bool>> {
    let bits = ctx.array(value, "/mask")?;
    if bits.len() != t {
        return Err(ctx.err("/mask", format!("expected {t} entries, got {}", bits.len())));
    }
    bits.iter()
        .enumerate()
        .map(|(i, b)| match b.as_u64() {
            Some(0) => Ok(false),
            Some(1) => Ok(true),
            _ => Err(ctx.err(format!("/mask/{i}"), format!("expected 0 or 1, got {b}"))),
        })
        .collect()
}

/// Parses and validates one datum document. `path` anchors the sidecar
/// and error messages.
pub fn parse_datum(text: &str, path: &Path) -> Result<LabeledDatum> {
    let ctx = Ctx { path };
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    let obj = root.as_object().ok_or_else(|| ctx.err("", "expected a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !DATUM_KEYS.contains(&k.as_str())) {
        return Err(ctx.err(format!("/{key}"), "unknown key"));
    }
    let id = obj
        .get("id")
        .ok_or_else(|| ctx.err("/id", "required"))?
        .as_str()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ctx.err("/id", "expected a non-empty string"))?;
    let label = match obj.get("label").ok_or_else(|| ctx.err("/label", "required"))?.as_u64() {
        Some(y @ (0 | 1)) => y as u8,
        _ => return Err(ctx.err("/label", "expected 0 or 1")),
    };

    let (embeddings, t, d) = match (obj.get("tokens"), obj.get("embeddings_bin")) {
        (Some(_), Some(_)) => return Err(ctx.err("/embeddings_bin", "give either tokens or embeddings_bin, not both")),
        (None, None) => return Err(ctx.err("/tokens", "required unless embeddings_bin is given")),
        (Some(tokens), None) => {
            let (flat, t, d) = parse_tokens(&ctx, tokens)?;
            for (key, expected) in [("T", t), ("d", d)] {
                if let Some(v) = obj.get(key) {
                    if ctx.uint(v, &format!("/{key}"))? != expected {
                        return Err(ctx.err(format!("/{key}"), format!("disagrees with tokens ({expected})")));
                    }
                }
            }
            (flat, t, d)
        }
        (None, Some(_)) => read_sidecar(&ctx, obj)?,
    };

    let edges = parse_edges(&ctx, obj.get("edges").ok_or_else(|| ctx.err("/edges", "required"))?, t)?;
    let coords = obj.get("coords").map(|c| parse_coords(&ctx, c, t)).transpose()?;
    let mask = obj.get("mask").map(|m| parse_mask(&ctx, m, t)).transpose()?;
    if label == 0 && mask.as_ref().is_some_and(|m| m.contains(&true)) {
        return Err(ctx.err("/mask", "class 0 data cannot have positive mask entries"));
    }
    let adjacency = Adjacency::from_edges(t, &edges).map_err(|e| ctx.err("/edges", e.to_string()))?;
    let graph = MapGraph::new(id, embeddings, d, Arc::new(adjacency), coords).map_err(|e| ctx.err("", e.to_string()))?;
    LabeledDatum::new(graph, label, mask).map_err(|e| ctx.err("", e.to_string()))
}

pub fn load_datum(path: &Path) -> Result<LabeledDatum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_datum(&text, path)
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Format(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Serializable datum document.
#[derive(Serialize)]
struct DatumDoc<'a> {
    id: &'a str,
    label: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<&'a [f32]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embeddings_bin: Option<String>,
    #[serde(rename = "T")]
    t: usize,
    d: usize,
    edges: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<&'a [Vec<f64>]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<u8>>,
}

/// Writes `datum` as `path`; with `sidecar`, embeddings go to a `.f32`
/// file next to it.
pub fn save_datum(datum: &LabeledDatum, path: &Path, sidecar: bool) -> Result<()> {
    let g = &datum.graph;
    let mut doc = DatumDoc {
        id: datum.id(),
        label: datum.label(),
        tokens: None,
        embeddings_bin: None,
        t: g.vertex_count(),
        d: g.dim(),
        edges: g.adjacency().edges().map(|(i, j)| [i, j]).collect(),
        coords: g.coords(),
        mask: datum.mask().map(|m| m.iter().map(|&b| u8::from(b)).collect()),
    };
    if sidecar {
        let bin = path.with_extension("f32");
        let bytes: Vec<u8> = g.embeddings().iter().flat_map(|x| x.to_le_bytes()).collect();
        write_atomic(&bin, &bytes)?;
        doc.embeddings_bin = bin.file_name().map(|n| n.to_string_lossy().into_owned());
    } else {
        doc.tokens = Some(g.embeddings().chunks(g.dim()).collect());
    }
    write_atomic(path, &serde_json::to_vec(&doc).map_err(|e| Error::Format(e.to_string()))?)
}

/// Datum files (`*.json`) of a directory, sorted by name.
pub fn list_datum_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Result of a lenient directory load.
#[derive(Debug)]
pub struct DatasetLoad {
    pub data: Vec<LabeledDatum>,
    pub failures: Vec<(PathBuf, Error)>,
}

/// Loads every datum file, collecting per-file failures instead of stopping.
pub fn load_dataset_lenient(dir: &Path) -> Result<DatasetLoad> {
    let files = list_datum_files(dir)?;
    let loaded: Vec<(PathBuf, Result<LabeledDatum>)> =
        files.into_par_iter().map(|p| { let r = load_datum(&p); (p, r) }).collect();
    let mut out = DatasetLoad {
        data: Vec::new(),
        failures: Vec::new(),
    };
    let mut ids = HashSet::new();
    for (path, result) in loaded {
        match result {
            Ok(d) if !ids.insert(d.id().to_string()) => {
                let err = Error::Schema {
                    path: path.clone(),
                    pointer: "/id".into(),
                    message: format!("duplicate datum id '{}'", d.id()),
                };
                out.failures.push((path, err));
            }
            Ok(d) => out.data.push(d),
            Err(e) => out.failures.push((path, e)),
        }
    }
    Ok(out)
}

/// Loads every datum file, failing on the first invalid one.
pub fn load_dataset(dir: &Path) -> Result<Vec<LabeledDatum>> {
    let mut load = load_dataset_lenient(dir)?;
    if !load.failures.is_empty() {
        return Err(load.failures.swap_remove(0).1);
    }
    Ok(load.data)
}

pub fn save_quantizer(path: &Path, q: &Quantizer) -> Result<()> {
    save_json(path, q)
}

pub fn load_quantizer(path: &Path) -> Result<Quantizer> {
    let q: Quantizer = load_json(path)?;
    q.validate()?;
    Ok(q)
}

pub fn save_kernel(path: &Path, k: &Kernel) -> Result<()> {
    save_json(path, k)
}

pub fn load_kernel(path: &Path) -> Result<Kernel> {
    load_json(path)
}

/// On-disk prospect map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub datum_id: String,
    pub scores: Vec<f64>,
    pub scaled: bool,
}

impl MapFile {
    pub fn from_map(map: &ProspectMap) -> Self {
        Self {
            datum_id: map.datum_id().to_string(),
            scores: map.scores().to_vec(),
            scaled: map.is_scaled(),
        }
    }

    pub fn into_map(self, adjacency: Arc<Adjacency>) -> Result<ProspectMap> {
        ProspectMap::new(self.datum_id, self.scores, self.scaled, adjacency)
    }
}

pub fn map_to_csv(map: &ProspectMap) -> String {
    let mut out = String::from("vertex_id,score\n");
    for (v, s) in map.scores().iter().enumerate() {
        out.push_str(&format!("{v},{s}\n"));
    }
    out
}

/// Writes `<dir>/<datum_id>.json` and `<dir>/<datum_id>.csv`.
pub fn save_map(dir: &Path, map: &ProspectMap) -> Result<()> {
    let stem = map.datum_id();
    save_json(&dir.join(format!("{stem}.json")), &MapFile::from_map(map))?;
    write_atomic(&dir.join(format!("{stem}.csv")), map_to_csv(map).as_bytes())
}

pub fn load_map_file(path: &Path) -> Result<MapFile> {
    load_json(path)
}

/// Flat sweep-ledger row.
#[derive(Debug, Serialize, Deserialize)]
struct LedgerRow {
    index: usize,
    id: String,
    variant: String,
    #[serde(rename = "K")]
    k: usize,
    r: usize,
    tau: f64,
    alpha: String,
    lambda: f64,
    precision: f64,
    mcc: f64,
    dice: f64,
    auprc: f64,
    evaluated: usize,
    error: String,
}

impl LedgerRow {
    fn from_result(r: &ConfigResult) -> Self {
        Self {
            index: r.index,
            id: r.id.clone(),
            variant: r.params.variant.to_string(),
            k: r.params.k,
            r: r.params.r,
            tau: r.params.tau,
            alpha: r.params.alpha.to_string(),
            lambda: r.params.lambda,
            precision: r.precision,
            mcc: r.mcc,
            dice: r.dice,
            auprc: r.auprc,
            evaluated: r.evaluated,
            error: r.error.clone().unwrap_or_default(),
        }
    }

    fn into_result(self) -> Result<ConfigResult> {
        let variant: Variant = self.variant.parse()?;
        let alpha: Alpha = self.alpha.parse()?;
        Ok(ConfigResult {
            index: self.index,
            id: self.id,
            params: Hyperparams {
                variant,
                k: self.k,
                r: self.r,
                tau: self.tau,
                alpha,
                lambda: self.lambda,
            },
            precision: self.precision,
            mcc: self.mcc,
            dice: self.dice,
            auprc: self.auprc,
            evaluated: self.evaluated,
            error: (!self.error.is_empty()).then_some(self.error),
        })
    }
}

/// Appends one row per config, flushing after each, so an interrupted
/// sweep can resume from the rows already written.
pub struct LedgerWriter {
    writer: csv::Writer<fs::File>,
    path: PathBuf,
}

impl LedgerWriter {
    pub fn open(path: &Path) -> Result<Self> {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        Ok(Self {
            writer,
            path: path.to_path_buf(),
        })
    }

    pub fn append(&mut self, result: &ConfigResult) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", self.path.display()));
        self.writer.serialize(LedgerRow::from_result(result)).map_err(csv_err)?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn ledger_to_csv(results: &[ConfigResult]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in results {
        writer
            .serialize(LedgerRow::from_result(r))
            .map_err(|e| Error::Format(format!("csv: {e}")))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Reads a ledger; a missing file is an empty ledger.
pub fn read_ledger(path: &Path) -> Result<Vec<ConfigResult>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<LedgerRow>()
        .map(|row| {
            row.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
                .into_result()
        })
        .collect()
}

/// Writes `<dir>/train/*.json`, `<dir>/test/*.json` and
/// `<dir>/metadata.json`.
pub fn save_synth(dir: &Path, dataset: &SynthDataset, sidecar: bool) -> Result<()> {
    for (split, data) in [("train", &dataset.train), ("test", &dataset.test)] {
        let split_dir = dir.join(split);
        data.par_iter()
            .try_for_each(|d| save_datum(d, &split_dir.join(format!("{}.json", d.id())), sidecar))?;
    }
    save_json(&dir.join("metadata.json"), &dataset.metadata)
}

pub fn load_synth_metadata(path: &Path) -> Result<SynthMetadata> {
    load_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LabeledDatum> {
        parse_datum(text, Path::new("mem.json"))
    }

    fn pointer_of(e: Error) -> String {
        match e {
            Error::Schema { pointer, .. } => pointer,
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn parses_minimal_datum() {
        let d = parse(r#"{"id":"x","label":1,"tokens":[[1,2],[3,4],[5,6]],"edges":[[0,1],[1,2]],"mask":[0,1,0]}"#)
            .unwrap();
        assert_eq!(d.graph.vertex_count(), 3);
        assert_eq!(d.graph.dim(), 2);
        assert_eq!(d.mask(), Some(&[false, true, false][..]));
    }

    #[test]
    fn reports_pointers() {
        let cases = [
            (r#"{"id":"x","label":1,"tokens":[[1]],"edges":[],"extra":1}"#, "/extra"),
            (r#"{"id":"x","label":2,"tokens":[[1]],"edges":[]}"#, "/label"),
            (r#"{"id":"x","label":1,"tokens":[[1,2],[3]],"edges":[]}"#, "/tokens/1"),
            (r#"{"id":"x","label":1,"tokens":[[1],["a"]],"edges":[]}"#, "/tokens/1/0"),
            (r#"{"id":"x","label":1,"tokens":[[1],[2]],"edges":[[0,2]]}"#, "/edges/0"),
            (r#"{"id":"x","label":1,"tokens":[[1],[2]],"edges":[[0,1],[1,0]]}"#, "/edges/1"),
            (r#"{"id":"x","label":1,"tokens":[[1],[2]],"edges":[[1,1]]}"#, "/edges/0"),
            (r#"{"id":"x","label":1,"tokens":[[1],[2]],"edges":[],"mask":[1]}"#, "/mask"),
            (r#"{"id":"x","label":0,"tokens":[[1],[2]],"edges":[],"mask":[1,0]}"#, "/mask"),
            (r#"{"id":"x","label":1,"tokens":[[1],[2]],"edges":[],"T":3}"#, "/T"),
            (r#"{"id":"x","label":1,"tokens":[[1]]}"#, "/edges"),
            (r#"{"id":"x","label":1,"tokens":[[1]],"edges":[],"coords":[[0,0,0,0]]}"#, "/coords/0"),
        ];
        for (text, pointer) in cases {
            assert_eq!(pointer_of(parse(text).unwrap_err()), pointer, "{text}");
        }
    }

    #[test]
    fn datum_round_trip_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let d = parse(r#"{"id":"x","label":1,"tokens":[[0.1,2],[3,4.5]],"edges":[[0,1]],"coords":[[0],[1]],"mask":[1,0]}"#)
            .unwrap();
        for sidecar in [false, true] {
            let path = dir.path().join(format!("x{sidecar}.json"));
            save_datum(&d, &path, sidecar).unwrap();
            assert_eq!(load_datum(&path).unwrap(), d);
        }
        assert!(dir.path().join("xtrue.f32").exists());
    }

    #[test]
    fn sidecar_size_checked() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("e.f32"), [0u8; 12]).unwrap();
        let path = dir.path().join("d.json");
        fs::write(&path, r#"{"id":"x","label":0,"embeddings_bin":"e.f32","T":2,"d":2,"edges":[]}"#).unwrap();
        assert_eq!(pointer_of(load_datum(&path).unwrap_err()), "/embeddings_bin");
    }

    #[test]
    fn ledger_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        let params = Hyperparams {
            variant: Variant::FoldChange,
            k: 10,
            r: 2,
            tau: 1.0,
            alpha: Alpha::DISABLED,
            lambda: 0.0,
        };
        let ok = ConfigResult {
            index: 0,
            id: params.id(),
            params,
            precision: 0.1 + 0.2,
            mcc: 0.5,
            dice: 0.25,
            auprc: 1.0 / 3.0,
            evaluated: 7,
            error: None,
        };
        let failed = ConfigResult {
            index: 1,
            error: Some("boom, \"quoted\"".into()),
            ..ok.clone()
        };
        {
            let mut w = LedgerWriter::open(&path).unwrap();
            w.append(&ok).unwrap();
        }
        LedgerWriter::open(&path).unwrap().append(&failed).unwrap();
        assert_eq!(read_ledger(&path).unwrap(), vec![ok, failed]);
        assert!(read_ledger(&dir.path().join("none.csv")).unwrap().is_empty());
    }
}
