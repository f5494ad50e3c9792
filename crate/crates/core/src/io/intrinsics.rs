use std::fs;
use std::path::Path;

use super::{io_err, IoError};
use crate::geometry::CameraIntrinsics;

/// Parses either four numbers `fx fy cx cy` or a KITTI calibration file, in
/// which case the `P0:` projection matrix supplies `K`.
pub fn parse_intrinsics(text: &str) -> Result<CameraIntrinsics, String> {
    let parse_all = |s: &str| -> Result<Vec<f64>, String> {
        s.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}")))
            .collect()
    };
    if let Some(line) = text.lines().find(|l| l.trim_start().starts_with("P0:")) {
        let p = parse_all(line.trim_start().trim_start_matches("P0:"))?;
        if p.len() != 12 {
            return Err(format!("P0 needs 12 values, found {}", p.len()));
        }
        return CameraIntrinsics::new(p[0], p[5], p[2], p[6]).map_err(|e| e.to_string());
    }
    let v = parse_all(text)?;
    match v.as_slice() {
        [fx, fy, cx, cy] => CameraIntrinsics::new(*fx, *fy, *cx, *cy).map_err(|e| e.to_string()),
        _ => Err(format!("expected 4 values (fx fy cx cy), found {}", v.len())),
    }
}

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<CameraIntrinsics, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_intrinsics(&text).map_err(|reason| IoError::Parse {
        path: path.to_path_buf(),
        line: 1,
        reason,
    })
}

pub fn write_intrinsics(path: impl AsRef<Path>, k: &CameraIntrinsics) -> Result<(), IoError> {
    let path = path.as_ref();
    let text = format!("{} {} {} {}\n", k.fx(), k.fy(), k.cx(), k.cy());
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_numbers_any_layout() {
        let k = parse_intrinsics("500\n480\n320\n240\n").unwrap();
        assert_eq!((k.fx(), k.fy(), k.cx(), k.cy()), (500.0, 480.0, 320.0, 240.0));
        assert!(parse_intrinsics("1 2 3").is_err());
        assert!(parse_intrinsics("-1 2 3 4").is_err());
    }

    #[test]
    fn kitti_calib() {
        let text = "P0: 7.188560e+02 0.000000e+00 6.071928e+02 0.000000e+00 0.000000e+00 7.188560e+02 1.852157e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\nP1: 1 2 3\n";
        let k = parse_intrinsics(text).unwrap();
        assert_eq!(k.fx(), 718.856);
        assert_eq!(k.cx(), 607.1928);
        assert_eq!(k.cy(), 185.2157);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.txt");
        let k = CameraIntrinsics::new(123.5, 120.25, 64.0, 48.0).unwrap();
        write_intrinsics(&p, &k).unwrap();
        assert_eq!(read_intrinsics(&p).unwrap(), k);
    }
}
