//! Subcommand bodies. Each returns the bytes of its output file and the
//! number of numerically flagged results.

use curvelab::curvelet::Curvelet;
use curvelab::geometry::sphere::DirectionLabel;
use curvelab::geometry::{enumerate_indices, Case, CurveletIndex, FourierKey, FrameCache, IntRange};
use curvelab::gram::{frame_check, inner, FrameCheckConfig, PairResult, TestFunction};
use curvelab::green::{decay_fit, green_block, DecaySample};
use curvelab::metric::{summability_single, summability_triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::table::{index_fields, index_header, num, parse_index};
use crate::CliError;

pub struct Produced {
    pub bytes: Vec<u8>,
    pub flags: usize,
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

fn parse_index_literal(s: &str) -> Result<CurveletIndex, CliError> {
    s.parse().map_err(|e: curvelab::CurveletError| CliError::Input(e.to_string()))
}

fn check_matches(idx: &CurveletIndex, cfg: &Config) -> Result<(), CliError> {
    if idx.d() != cfg.d || idx.case() != cfg.case {
        return Err(CliError::Input(format!(
            "index {idx} does not match the configured case={} d={}",
            cfg.case.name(),
            cfg.d
        )));
    }
    Ok(())
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

pub fn tiles(cfg: &Config) -> Result<Produced, CliError> {
    let indices = enumerate_indices(&cfg.index_config())?;
    let lits: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
    Ok(Produced { bytes: json_bytes(&json!({ "count": lits.len(), "indices": lits })), flags: 0 })
}

pub fn eval(cfg: &Config, index: &str, points: &[u8]) -> Result<Produced, CliError> {
    let idx = parse_index_literal(index)?;
    check_matches(&idx, cfg)?;
    let c = Curvelet::new(idx, cfg.mu)?;
    let n = cfg.d + 1;
    let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(points);
    let header: Vec<String> = rd.headers().map_err(|e| CliError::Input(e.to_string()))?.iter().map(String::from).collect();
    if header != coords {
        return Err(CliError::Input(format!("points header must be {}", coords.join(","))));
    }
    let quad = cfg.quad();
    let mut w = csv_writer();
    let mut head = coords.clone();
    head.extend(["re", "im", "abs", "envelope_N3"].map(String::from));
    w.write_record(&head).expect("in-memory");
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        let mut x = [0.0; 4];
        for (i, slot) in x.iter_mut().enumerate().take(n) {
            *slot = rec[i].parse().map_err(|_| CliError::Input(format!("line {}: bad coordinate '{}'", line + 2, &rec[i])))?;
        }
        let v = c.real_eval(&x, &quad)?;
        let mut row: Vec<String> = x[..n].iter().map(|v| num(*v)).collect();
        row.extend([num(v.re), num(v.im), num(v.norm()), num(c.envelope_space(&x, 3))]);
        w.write_record(&row).expect("in-memory");
    }
    Ok(Produced { bytes: finish(w), flags: 0 })
}

/// Random bumps strictly inside the configured scale ranges.
fn random_bumps(cfg: &Config, count: usize) -> Result<Vec<TestFunction>, CliError> {
    let (m_lo, m_hi) = (cfg.m_range.lo as i32 + 1, cfg.m_range.hi as i32 - 1);
    let (j_lo, j_hi) = ((cfg.j_range.lo as i32 + 1).max(2), cfg.j_range.hi as i32 - 1);
    if count > 0 && (m_lo > m_hi || j_lo > j_hi) {
        return Err(CliError::Input("random bumps need m and j ranges at least three scales wide".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..count)
        .map(|_| {
            let reference = FourierKey {
                case: cfg.case,
                d: 1,
                m: rng.gen_range(m_lo..=m_hi),
                j: rng.gen_range(j_lo..=j_hi),
                direction: DirectionLabel::Sign(if rng.gen_bool(0.5) { 1 } else { -1 }),
                sector: cfg.sectors[rng.gen_range(0..cfg.sectors.len())],
            };
            TestFunction::Bump {
                reference,
                center: [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)],
                radius: [rng.gen_range(0.3..1.0), rng.gen_range(0.3..1.0)],
                shift: [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), 0.0, 0.0],
            }
        })
        .collect())
}

pub fn frame_check_cmd(cfg: &Config, indices: &[String], bumps: usize, grid: usize) -> Result<Produced, CliError> {
    if cfg.d != 1 {
        return Err(CliError::Input("frame-check is implemented for d = 1".into()));
    }
    let mut tests = Vec::new();
    for s in indices {
        let idx = parse_index_literal(s)?;
        check_matches(&idx, cfg)?;
        tests.push(TestFunction::Curvelet(idx));
    }
    tests.extend(random_bumps(cfg, bumps)?);
    if tests.is_empty() {
        return Err(CliError::Input("no test functions (use --index or --bumps)".into()));
    }
    let fc = FrameCheckConfig {
        case: cfg.case,
        mu: cfg.mu,
        m_range: (cfg.m_range.lo as i32, cfg.m_range.hi as i32),
        j_range: (cfg.j_range.lo as i32, cfg.j_range.hi as i32),
        grid,
        quad: cfg.quad(),
    };
    let entries = frame_check(&fc, &tests)?;
    let flags = entries.iter().filter(|e| e.warning).count();
    let rows: Vec<_> = tests.iter().zip(&entries).map(|(t, e)| json!({ "test": t, "result": e })).collect();
    Ok(Produced { bytes: json_bytes(&json!({ "entries": rows })), flags })
}

fn pair_row(p: &PairResult) -> Vec<String> {
    let mut row = index_fields(&p.a);
    row.extend(index_fields(&p.b));
    let d = &p.distance;
    row.extend([
        num(p.value.re),
        num(p.value.im),
        num(p.value.norm()),
        num(d.total),
        num(d.prefactor),
        num(d.d_ang),
        num(d.d_par),
        num(d.d_perp),
        num(d.d_off),
        p.quad.nodes.to_string(),
        num(p.quad.err),
    ]);
    row
}

fn pair_header(d: usize) -> Vec<String> {
    let mut h = index_header("a_", d);
    h.extend(index_header("b_", d));
    h.extend(
        ["re", "im", "abs", "dist_total", "dist_prefactor", "d_ang", "d_par", "d_perp", "d_off", "quad_nodes", "quad_err"]
            .map(String::from),
    );
    h
}

pub fn gram(cfg: &Config, pairs: &[u8]) -> Result<Produced, CliError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(pairs);
    let expect = {
        let mut h = index_header("a_", cfg.d);
        h.extend(index_header("b_", cfg.d));
        h
    };
    let header: Vec<String> = rd.headers().map_err(|e| CliError::Input(e.to_string()))?.iter().map(String::from).collect();
    if header != expect {
        return Err(CliError::Input(format!("pairs header must be {}", expect.join(","))));
    }
    let frames = FrameCache::new();
    let quad = cfg.quad();
    let mut w = csv_writer();
    w.write_record(pair_header(cfg.d)).expect("in-memory");
    let mut flags = 0;
    let width = expect.len() / 2;
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        let fields: Vec<&str> = rec.iter().collect();
        let a = parse_index(&fields, 0, n + 2)?;
        let b = parse_index(&fields, width, n + 2)?;
        check_matches(&a, cfg)?;
        check_matches(&b, cfg)?;
        let ca = Curvelet::with_frame(a, frames.for_index(&a, cfg.mu)?)?;
        let cb = Curvelet::with_frame(b, frames.for_index(&b, cfg.mu)?)?;
        let p = inner(&ca, &cb, &quad)?;
        flags += p.quad.flagged as usize;
        w.write_record(pair_row(&p)).expect("in-memory");
    }
    Ok(Produced { bytes: finish(w), flags })
}

/// `lo..hi` for every axis, or one range per axis separated by commas.
pub fn parse_offsets(s: &str, n: usize) -> Result<Vec<IntRange>, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let ranges: Vec<IntRange> = parts
        .iter()
        .map(|p| p.parse::<IntRange>().map_err(|e| CliError::Input(format!("offsets: {e}"))))
        .collect::<Result<_, _>>()?;
    match ranges.len() {
        1 => Ok(vec![ranges[0]; n]),
        l if l == n => Ok(ranges),
        l => Err(CliError::Input(format!("offsets: {l} ranges given, need 1 or {n}"))),
    }
}

pub fn green(cfg: &Config, anchor: &str, target: Option<&str>, offsets: &str) -> Result<Produced, CliError> {
    let a = parse_index_literal(anchor)?;
    check_matches(&a, cfg)?;
    if a.case() != Case::Kg {
        return Err(CliError::Input("green needs Klein-Gordon indices (case=kg)".into()));
    }
    let b_key = match target {
        Some(t) => {
            let b = parse_index_literal(t)?;
            check_matches(&b, cfg)?;
            b.key
        }
        None => a.key,
    };
    let offsets = parse_offsets(offsets, cfg.d + 1)?;
    let anchor = Curvelet::new(a, cfg.mu)?;
    let entries = green_block(&anchor, &b_key, &offsets, &cfg.quad())?;
    let mut w = csv_writer();
    let mut head = pair_header(cfg.d);
    head.extend(["symbol_bound", "rescaled_abs"].map(String::from));
    w.write_record(&head).expect("in-memory");
    let mut flags = 0;
    for e in &entries {
        flags += e.pair.quad.flagged as usize;
        let mut row = pair_row(&e.pair);
        row.extend([num(e.symbol_bound), num(e.rescaled_abs)]);
        w.write_record(&row).expect("in-memory");
    }
    Ok(Produced { bytes: finish(w), flags })
}

pub fn decay_report(input: &[u8]) -> Result<Produced, CliError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rd.headers().map_err(|e| CliError::Input(e.to_string()))?.iter().map(String::from).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let need = |name: &str| col(name).ok_or_else(|| CliError::Input(format!("input lacks column '{name}'")));
    let (am, bm, abs, total, err) = (need("a_m")?, need("b_m")?, need("abs")?, need("dist_total")?, need("quad_err")?);
    let rescaled = col("rescaled_abs");
    let mut samples = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        let f = |i: usize| -> Result<f64, CliError> {
            rec[i].parse().map_err(|_| CliError::Input(format!("line {}: bad number '{}'", n + 2, &rec[i])))
        };
        let m = |i: usize| -> Result<i32, CliError> {
            rec[i].parse().map_err(|_| CliError::Input(format!("line {}: bad scale '{}'", n + 2, &rec[i])))
        };
        let (ma, mb) = (m(am)?, m(bm)?);
        let a = f(abs)?;
        let r = match rescaled {
            Some(i) => f(i)?,
            None => a * (2.0 * ma.max(mb) as f64).exp2(),
        };
        samples.push(DecaySample { total: f(total)?, rescaled_abs: r, abs: a, quad_err: f(err)?, m: (ma, mb) });
    }
    let report = decay_fit(&samples)?;
    Ok(Produced { bytes: json_bytes(&report), flags: 0 })
}

pub fn sum_check(cfg: &Config, anchors: &[String], partners: &[String], r: f64) -> Result<Produced, CliError> {
    if !(r > 0.0) {
        return Err(CliError::Input(format!("r = {r} must be positive")));
    }
    if anchors.is_empty() {
        return Err(CliError::Input("at least one --anchor is needed".into()));
    }
    if !partners.is_empty() && partners.len() != anchors.len() {
        return Err(CliError::Input("--partner must be given once per --anchor or not at all".into()));
    }
    let frames = FrameCache::new();
    let build = |k: IntRange| -> Result<Vec<Curvelet>, CliError> {
        let ic = curvelab::geometry::IndexConfig { k_box: k, ..cfg.index_config() };
        enumerate_indices(&ic)?
            .into_iter()
            .map(|i| Ok(Curvelet::with_frame(i, frames.for_index(&i, cfg.mu)?)?))
            .collect()
    };
    let set = build(cfg.k_box)?;
    let doubled = build(IntRange::new(2 * cfg.k_box.lo, 2 * cfg.k_box.hi))?;
    let curvelet = |s: &str| -> Result<Curvelet, CliError> {
        let idx = parse_index_literal(s)?;
        check_matches(&idx, cfg)?;
        Ok(Curvelet::new(idx, cfg.mu)?)
    };
    let mut rows = Vec::new();
    for (i, s) in anchors.iter().enumerate() {
        let a = curvelet(s)?;
        let single = summability_single(&a, r, &set)?;
        let single_doubled = summability_single(&a, r, &doubled)?;
        let mut row = json!({
            "anchor": s,
            "single": single,
            "single_doubled_box": single_doubled,
            "relative_change": (single_doubled - single).abs() / single_doubled,
        });
        if let Some(p) = partners.get(i) {
            let t = summability_triple(&a, &curvelet(p)?, r, &doubled)?;
            row["partner"] = json!(p);
            row["triple"] = json!(t.sum);
            row["triple_ratio"] = json!(t.ratio);
        }
        rows.push(row);
    }
    Ok(Produced {
        bytes: json_bytes(&json!({ "r": r, "set_size": set.len(), "doubled_set_size": doubled.len(), "anchors": rows })),
        flags: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use curvelab::geometry::SectorLabel;

    #[test]
    fn offsets_broadcast() {
        assert_eq!(parse_offsets("-2..2", 2).unwrap(), vec![IntRange::new(-2, 2); 2]);
        assert_eq!(parse_offsets("0..1, -1..0", 2).unwrap(), vec![IntRange::new(0, 1), IntRange::new(-1, 0)]);
        assert!(parse_offsets("0..1,0..1,0..1", 2).is_err());
    }

    #[test]
    fn bumps_need_room() {
        let cfg = Config::default();
        assert!(random_bumps(&cfg, 1).is_err());
        assert!(random_bumps(&cfg, 0).unwrap().is_empty());
        let wide = Config { m_range: IntRange::new(0, 4), j_range: IntRange::new(1, 6), sectors: vec![SectorLabel::TP], ..cfg };
        let b = random_bumps(&wide, 3).unwrap();
        assert_eq!(b, random_bumps(&wide, 3).unwrap());
        assert!(b.iter().all(|t| matches!(t, TestFunction::Bump { radius, .. } if radius[0] > 0.0 && radius[0] < 1.0)));
    }
}
