//! File formats: array configuration tables, pattern dumps, attribute and
//! curve CSVs, and dictionary persistence.
//!
//! Array files are plain text, one `cx cy pose` line per subarray in
//! wavelength units; `#` starts a comment. All writers accept caller-provided
//! header comment lines (the CLI stamps a config hash and seed there) and
//! emit nothing that depends on wall-clock time or thread count.

use std::io::{Read, Write};
use std::path::Path;

use crate::beampattern::{BeamAttributes, PatternField};
use crate::bounds::BoundCurve;
use crate::error::{Error, Result};
use crate::geometry::{Pose, SuperArrayConfig};
use crate::placement::Dictionary;

pub fn format_array(config: &SuperArrayConfig) -> String {
    let mut s = String::new();
    for (c, p) in config.centers.iter().zip(&config.poses) {
        s.push_str(&format!("{} {} {}\n", c[0], c[1], p.token()));
    }
    s
}

pub fn parse_array(text: &str) -> Result<SuperArrayConfig> {
    let mut centers = Vec::new();
    let mut poses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let err = |msg: &str| Error::Parse {
            line: idx + 1,
            msg: msg.to_string(),
        };
        let cx: f64 = parts
            .next()
            .ok_or_else(|| err("missing x coordinate"))?
            .parse()
            .map_err(|_| err("bad x coordinate"))?;
        let cy: f64 = parts
            .next()
            .ok_or_else(|| err("missing y coordinate"))?
            .parse()
            .map_err(|_| err("bad y coordinate"))?;
        let pose = match parts.next() {
            None => Pose::Up,
            Some(tok) => Pose::parse(tok).ok_or_else(|| err("bad pose token"))?,
        };
        if parts.next().is_some() {
            return Err(err("trailing fields"));
        }
        centers.push([cx, cy]);
        poses.push(pose);
    }
    if centers.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no subarrays in file".into(),
        });
    }
    SuperArrayConfig::new(centers, poses)
}

pub fn write_array_file(path: &Path, config: &SuperArrayConfig, header: &[String]) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str(&format_array(config));
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_array_file(path: &Path) -> Result<SuperArrayConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_array(&text)
}

/// One CSV row of beam attributes with a fixed column order.
pub const ATTRS_CSV_HEADER: &str = "bw_max_deg,bw_min_deg,bw_doa_deg,msll_db,directivity_db,ecc";

pub fn attrs_csv_row(a: &BeamAttributes) -> String {
    let dir = a.directivity_db.map(|d| d.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{}",
        a.bw_max_deg, a.bw_min_deg, a.bw_doa_deg, a.msll_db, dir, a.ecc
    )
}

pub fn write_attrs_csv(path: &Path, attrs: &BeamAttributes, header: &[String]) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str(ATTRS_CSV_HEADER);
    out.push('\n');
    out.push_str(&attrs_csv_row(attrs));
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

/// `u,v,R` sample dump of a pattern field.
pub fn write_pattern_csv(path: &Path, field: &PatternField, header: &[String]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(w, "u,v,r")?;
    for iv in 0..field.n {
        for iu in 0..field.n {
            writeln!(
                w,
                "{},{},{}",
                field.coord(iu),
                field.coord(iv),
                field.value(iu, iv)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

const PATTERN_MAGIC: &[u8; 4] = b"UVPF";

/// Binary dump: 16-byte header (magic, n as u32 LE, rho as f64 LE) followed
/// by row-major f32 LE samples.
pub fn write_pattern_binary(path: &Path, field: &PatternField) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    w.write_all(PATTERN_MAGIC)?;
    w.write_all(&(field.n as u32).to_le_bytes())?;
    w.write_all(&field.rho.to_le_bytes())?;
    for s in &field.samples {
        w.write_all(&(*s as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pattern_binary(path: &Path) -> Result<PatternField> {
    let mut f = std::fs::File::open(path)?;
    let mut head = [0u8; 16];
    f.read_exact(&mut head)?;
    if &head[0..4] != PATTERN_MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "bad pattern magic".into(),
        });
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let rho = f64::from_le_bytes(head[8..16].try_into().unwrap());
    let mut raw = Vec::new();
    f.read_to_end(&mut raw)?;
    if raw.len() != n * n * 4 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {} sample bytes, got {}", n * n * 4, raw.len()),
        });
    }
    let samples = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(PatternField { n, rho, samples })
}

pub fn write_bound_curve_csv(path: &Path, curve: &BoundCurve, header: &[String]) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    if let Some(t) = curve.threshold_snr_db {
        out.push_str(&format!("# threshold_snr_db = {t}\n"));
    }
    out.push_str("snr_db,crb_rmse,zzb_rmse\n");
    for i in 0..curve.snr_db.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            curve.snr_db[i], curve.crb_rmse[i], curve.zzb_rmse[i]
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Generic two-column CSV.
pub fn write_xy_csv(
    path: &Path,
    columns: (&str, &str),
    rows: &[(f64, f64)],
    header: &[String],
) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str(&format!("{},{}\n", columns.0, columns.1));
    for (a, b) in rows {
        out.push_str(&format!("{a},{b}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Three-column CSV (used for per-M isometry brackets).
pub fn write_xyz_csv(
    path: &Path,
    columns: (&str, &str, &str),
    rows: &[(f64, f64, f64)],
    header: &[String],
) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    out.push_str(&format!("{},{},{}\n", columns.0, columns.1, columns.2));
    for (a, b, c) in rows {
        out.push_str(&format!("{a},{b},{c}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Audit dump of a block-diagonal measurement matrix: per-block rows of
/// complex entries as `re+imj` pairs. The matrix is regenerable from the
/// seed and measurement counts stamped in the header.
pub fn write_measurement_matrix(
    path: &Path,
    phi: &crate::compressive::MeasurementMatrix,
    header: &[String],
) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(
        w,
        "# blocks = {}, n_e = {}, m_total = {}",
        phi.blocks.len(),
        phi.n_e,
        phi.m_total()
    )?;
    for (i, b) in phi.blocks.iter().enumerate() {
        writeln!(w, "block {i} rows {}", b.rows)?;
        for r in 0..b.rows {
            let row: Vec<String> = (0..phi.n_e)
                .map(|c| {
                    let e = b.entries[r * phi.n_e + c];
                    format!("{}{}{}j", e.re, if e.im < 0.0 { "" } else { "+" }, e.im)
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dictionary persistence: a JSON-like header line followed by one config
/// per line (`cx,cy,pose` triplets joined by semicolons).
pub fn write_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    writeln!(
        w,
        "# {{\"grid\": \"{}\", \"layout\": \"{}x{}@{}x{}\", \"tau\": [{}, {}, {}], \"seed\": {}, \"ranges\": {{\"bw_deg\": [{}, {}], \"msll_db\": [{}, {}], \"ecc\": [{}, {}]}}}}",
        dict.grid.id,
        dict.layout.rows,
        dict.layout.cols,
        dict.layout.dx,
        dict.layout.dy,
        dict.tau[0],
        dict.tau[1],
        dict.tau[2],
        dict.seed,
        dict.ranges.bw_deg.0,
        dict.ranges.bw_deg.1,
        dict.ranges.msll_db.0,
        dict.ranges.msll_db.1,
        dict.ranges.ecc.0,
        dict.ranges.ecc.1,
    )?;
    for c in &dict.configs {
        let line: Vec<String> = c
            .centers
            .iter()
            .zip(&c.poses)
            .map(|(p, pose)| format!("{},{},{}", p[0], p[1], pose.token()))
            .collect();
        writeln!(w, "{}", line.join(";"))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;

    #[test]
    fn array_round_trip() {
        let cfg = SuperArrayConfig::new(vec![[1.5, -2.25], [0.0, 4.0]], vec![Pose::Up, Pose::Down])
            .unwrap();
        let text = format_array(&cfg);
        let back = parse_array(&text).unwrap();
        assert_eq!(back.centers, cfg.centers);
        assert_eq!(back.poses, cfg.poses);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "0 0 u\n# fine\n1.0 bad u\n";
        match parse_array(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn parse_defaults_pose_up_and_skips_comments() {
        let text = "# header\n0.5 0.5\n-1 2 d # trailing comment\n";
        let cfg = parse_array(text).unwrap();
        assert_eq!(cfg.poses, vec![Pose::Up, Pose::Down]);
    }

    #[test]
    fn dictionary_file_has_header_and_config_lines() {
        let layout = crate::geometry::ElementLayout::rectangular(4, 4, 0.5, 0.6).unwrap();
        let grid = crate::geometry::DesignGrid::centered_square(
            12.0,
            3.0,
            &layout.footprint,
        )
        .unwrap();
        let opts = crate::placement::SearchOptions {
            n_init: 2,
            scorer_n: 64,
            ..Default::default()
        };
        let dict = crate::placement::build_dictionary(&grid, &layout, 2, &opts, 3).unwrap();
        let dir = std::env::temp_dir().join("aosa_io_dict_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dict.txt");
        write_dictionary(&path, &dict).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# {\"grid\":"));
        assert!(header.contains("\"seed\": 3"));
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), dict.len());
        for line in body {
            assert_eq!(line.split(';').count(), 2);
        }
    }

    #[test]
    fn pattern_binary_round_trip() {
        let field =
            crate::beampattern::evaluate_pattern(&[[0.0, 0.0], [0.25, 0.0], [0.0, 0.3]], 64, 1.5)
                .unwrap();
        let dir = std::env::temp_dir().join("aosa_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pattern.bin");
        write_pattern_binary(&path, &field).unwrap();
        let meta = std::fs::metadata(&path).unwrap();
        assert_eq!(meta.len(), 16 + 64 * 64 * 4);
        let back = read_pattern_binary(&path).unwrap();
        assert_eq!(back.n, field.n);
        assert_eq!(back.rho, field.rho);
        for (a, b) in back.samples.iter().zip(&field.samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
