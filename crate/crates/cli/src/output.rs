//! CSV and report emission. Every file is written to a sibling temporary and renamed.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use sdmi::lyapunov::LyapunovPair;
use sdmi::solver::Trajectory;

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res
}

/// Trajectory CSV: `t,x_1..x_n,speed[,V,W,lyap_composite]`.
///
/// `speed` is the forward difference quotient, the backward one on the last row.
/// `lyap_composite` is `e^{a(t−t₀)}V + ∫W` and `nan` after the first exit from `dom V`.
pub fn trajectory_csv(traj: &Trajectory, pair: Option<&LyapunovPair>) -> String {
    let n = traj.states.first().map_or(0, |x| x.len());
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",speed");
    if pair.is_some() {
        out.push_str(",V,W,lyap_composite");
    }
    out.push('\n');
    let t0 = traj.times.first().copied().unwrap_or(0.0);
    let mut integral = 0.0;
    let mut prev_w = 0.0;
    let mut exited = false;
    for (k, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{t}");
        for v in x.iter() {
            let _ = write!(out, ",{v}");
        }
        let speed = traj
            .velocities
            .get(k)
            .or_else(|| traj.velocities.last())
            .map_or(0.0, |v| v.norm());
        let _ = write!(out, ",{speed}");
        if let Some(p) = pair {
            let v = p.value(*t, x);
            let w = (p.w)(*t, x);
            if !v.is_finite() || !w.is_finite() {
                exited = true;
            }
            if k > 0 && !exited {
                integral += 0.5 * (t - traj.times[k - 1]) * (w + prev_w);
            }
            prev_w = w;
            let composite = if exited { f64::NAN } else { (p.rate * (t - t0)).exp() * v + integral };
            let _ = write!(out, ",{v},{w},{composite}");
        }
        out.push('\n');
    }
    out
}

/// `h,gap,ratio` with one row per consecutive pair of runs; `ratio` is empty on the first row.
pub fn convergence_csv(h_list: &[f64], gaps: &[f64]) -> String {
    let mut out = String::from("h,gap,ratio\n");
    for (k, g) in gaps.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { format!("{}", g / gaps[k - 1]) };
        let _ = writeln!(out, "{},{g},{ratio}", h_list[k]);
    }
    out
}
