use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cancellab::autocorr::{
    autocorr_profile_with, density_bad_tau, density_bad_tau_dense, geometric_windows, CorrelationPlan, WindowMode,
};
use cancellab::io::{self, fmt_f64};
use cancellab::processes::{mean_cancel, pointwise_cancel};
use cancellab::spectral::{detect_atoms, discrepancy_2torus, fb_scan, torus_weyl, Arc};
use cancellab::symbolic::{
    build_hochman_point, build_simple_point, is_eps_generic, is_strongly_generic, lemma10_check, orbital_measure,
    pair_orbital_measures, periodic_schedule, prune_cover, HochmanSchedule, OracleSpec, Point, PointMode, Word,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";
/// Longest prefix of a constructed point written as text.
pub const PREFIX_TEXT_LIMIT: u128 = 1_000_000;

/// The scalar a run is summarized by in `report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub family: String,
    pub criterion: String,
    pub key: String,
    pub value: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl Summary {
    fn new(command: &str, family: &str, criterion: &str, key: &str, value: f64) -> Self {
        Summary {
            command: command.into(),
            family: family.into(),
            criterion: criterion.into(),
            key: key.into(),
            value,
            epsilon: None,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    params: Value,
    artifacts: &'a [String],
}

/// A fresh output directory and the files written into it.
pub struct Outputs {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Outputs {
    /// Refuses to touch an existing path.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        if dir.exists() {
            return Err(CliError::Io(format!("output directory {} already exists", dir.display())));
        }
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> cancellab::Result<()>,
    ) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_error(&self, err: &CliError) {
        let _ = fs::write(self.dir.join("error.json"), err.record().to_string() + "\n");
    }

    /// Summary and manifest; called last so a manifest marks a complete run.
    pub fn finish(mut self, params: &Params, summary: &Summary) -> Result<(), CliError> {
        self.json(SUMMARY, summary)?;
        self.artifacts.sort();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: params.command(),
            params: params.to_value(),
            artifacts: &self.artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(self.dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}

fn required<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::schema(Some(&format!("params.{field}")), format!("missing field `{field}`")))
}

fn last_index_of_max(ts: &[usize]) -> usize {
    ts.iter().enumerate().max_by_key(|(_, t)| **t).map_or(0, |(i, _)| i)
}

pub fn execute(params: &Params, out: &mut Outputs) -> Result<Summary, CliError> {
    match params {
        Params::Gen(p) => gen(p, out),
        Params::Spectrum(p) => spectrum(p, out),
        Params::Autocorr(p) => autocorr(p, out),
        Params::Density(p) => density(p, out),
        Params::Cancel(p) => cancel(p, out),
        Params::Torus(p) => torus(p, out),
        Params::Symbolic(p) => symbolic(p, out),
        Params::Hochman(p) => hochman(p, out),
        Params::Report(p) => {
            let rows = crate::report::collect(&p.dirs);
            out.csv("report.csv", |w| crate::report::write_csv(w, &rows))?;
            Ok(Summary::new("report", "", "report", "rows", rows.len() as f64))
        }
    }
}

fn gen(p: &GenParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let seq = p.sequence.generate()?;
    io::write_seq(&out.path("seq.bin"), &seq)?;
    out.artifacts.push("seq.json".into());
    if p.csv {
        out.csv("seq.csv", |w| io::write_seq_csv(w, &seq))?;
    }
    let mut s = Summary::new("gen", seq.meta().family(), "gen", "mean_abs", seq.mean_abs(seq.len()));
    s.extra.insert("len".into(), seq.len() as f64);
    Ok(s)
}

fn spectrum(p: &SpectrumParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let x = io::read_seq(&p.input)?;
    let scan = fb_scan(&x, p.grid, &p.ts)?;
    let atoms = detect_atoms(&x, &scan, p.atom_threshold)?;
    out.csv("scan.csv", |w| io::write_scan_csv(w, &scan))?;
    let max: Vec<f64> = (0..scan.ts.len()).map(|i| scan.max_magnitude(i)).collect();
    out.json(
        "spectrum.json",
        &json!({
            "source": x.meta(),
            "grid": p.grid,
            "ts": scan.ts,
            "max_magnitude": max,
            "l1_means": scan.l1_means,
            "triangle_bound_holds": scan.satisfies_triangle_bound(),
            "atom_threshold": p.atom_threshold,
            "atoms": atoms,
        }),
    )?;
    let mut s = Summary::new(
        "spectrum",
        x.meta().family(),
        "fourier_bohr",
        "max_magnitude",
        max[last_index_of_max(&scan.ts)],
    );
    s.extra.insert("atoms".into(), atoms.len() as f64);
    Ok(s)
}

fn autocorr(p: &AutocorrParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let x = io::read_seq(&p.input)?;
    let plan = CorrelationPlan {
        memory_budget: p.memory_budget,
    };
    let profile = autocorr_profile_with(&x, &p.ns, p.tau_max, plan)?;
    out.csv("profile.csv", |w| io::write_profile_csv(w, &profile))?;
    let lagged: Vec<f64> = profile
        .values
        .iter()
        .map(|row| row.iter().skip(1).fold(0.0_f64, |m, z| m.max(z.norm())))
        .collect();
    out.json(
        "autocorr.json",
        &json!({
            "source": x.meta(),
            "ns": profile.ns,
            "tau_max": profile.tau_max,
            "max_abs_lagged": lagged,
        }),
    )?;
    Ok(Summary::new(
        "autocorr",
        x.meta().family(),
        "autocorr",
        "max_abs_lagged",
        lagged[last_index_of_max(&profile.ns)],
    ))
}

fn density(p: &DensityParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let x = io::read_seq(&p.input)?;
    let report = match p.mode {
        WindowMode::Sampled => {
            let windows = geometric_windows(p.n_lo, p.n_hi, p.ratio)?;
            let plan = CorrelationPlan {
                memory_budget: p.memory_budget,
            };
            let profile = autocorr_profile_with(&x, &windows, p.t, plan)?;
            density_bad_tau(&profile, p.epsilon, p.n_lo, p.n_hi, p.t)?
        }
        WindowMode::Dense => density_bad_tau_dense(&x, p.epsilon, p.n_lo, p.n_hi, p.t)?,
    };
    out.json(
        "density.json",
        &json!({
            "source": x.meta(),
            "quantifiers": {"epsilon": p.epsilon, "N_lo": p.n_lo, "N_hi": p.n_hi, "T": p.t},
            "report": report,
        }),
    )?;
    out.csv("density.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let windows = report.windows.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
        let mode = serde_json::to_value(report.mode).expect("mode serializes");
        let rows = [
            vec!["epsilon", "N_lo", "N_hi", "T", "mode", "windows", "bad_count", "density"]
                .into_iter()
                .map(String::from)
                .collect::<Vec<_>>(),
            vec![
                fmt_f64(report.epsilon),
                report.n_lo.to_string(),
                report.n_hi.to_string(),
                report.t.to_string(),
                mode.as_str().unwrap_or_default().to_string(),
                windows,
                report.bad_count.to_string(),
                fmt_f64(report.density),
            ],
        ];
        for r in rows {
            c.write_record(r).map_err(|e| cancellab::Error::Parse(e.to_string()))?;
        }
        c.flush()?;
        Ok(())
    })?;
    let mut s = Summary::new("density", x.meta().family(), "density_bad_tau", "density", report.density);
    s.epsilon = Some(p.epsilon);
    Ok(s)
}

fn cancel(p: &CancelParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let x = io::read_seq(&p.x)?;
    let run = pointwise_cancel(&x, &p.process, &p.seeds, &p.ts, p.tolerance)?;
    out.csv("cancel.csv", |w| io::write_cancel_csv(w, &run))?;
    out.json("cancel.json", &run)?;
    let at = last_index_of_max(&run.ts);
    let mut s = Summary::new(
        "cancel",
        x.meta().family(),
        "pointwise_cancel",
        "l2_at_max_T",
        run.l2_estimate[at],
    );
    s.extra.insert("non_cancelling".into(), run.non_cancelling.len() as f64);
    if let Some(k) = p.ensemble {
        let curve = mean_cancel(&x, &p.process, k, &p.ts)?;
        out.csv("mean.csv", |w| io::write_mean_csv(w, &curve))?;
        out.json("mean.json", &curve)?;
        s.extra.insert("rms_at_max_T".into(), curve.rms[at]);
    }
    Ok(s)
}

fn torus(p: &TorusParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let tw = torus_weyl(p.beta, p.alpha, p.m1, p.m2, p.n)?;
    let disc = match p.arcs {
        Some([a, b, c, d]) => Some(discrepancy_2torus(p.beta, p.alpha, p.n, Arc::new(a, b)?, Arc::new(c, d)?)?),
        None => None,
    };
    out.json(
        "torus.json",
        &json!({
            "beta": p.beta, "alpha": p.alpha, "m1": p.m1, "m2": p.m2, "N": p.n,
            "weyl": tw, "abs": tw.value.norm(), "discrepancy": disc,
        }),
    )?;
    out.csv("torus.csv", |w| {
        writeln!(w, "m1,m2,N,re,im,abs,no_decay_expected")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.m1,
            p.m2,
            p.n,
            fmt_f64(tw.value.re),
            fmt_f64(tw.value.im),
            fmt_f64(tw.value.norm()),
            tw.no_decay_expected
        )?;
        Ok(())
    })?;
    let mut s = Summary::new("torus", "torus", "torus_weyl", "abs", tw.value.norm());
    if let Some(d) = disc {
        s.extra.insert("discrepancy".into(), d.value);
    }
    Ok(s)
}

fn symbolic(p: &SymbolicParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let oracle = p.oracle.build()?;
    let family = match p.oracle {
        OracleSpec::Periodic { .. } => "periodic",
        OracleSpec::Empirical { .. } => "empirical",
        OracleSpec::Chacon { .. } => "chacon",
    };
    let mut s = match p.op {
        SymbolicOp::Generic => {
            let r = is_eps_generic(required(&p.word, "word")?, oracle.as_ref(), *required(&p.epsilon, "epsilon")?)?;
            out.json("symbolic.json", &r)?;
            Summary::new("symbolic", family, "eps_generic", "generic", r.generic as u8 as f64)
        }
        SymbolicOp::Strong => {
            let m = *required(&p.m, "m")? as usize;
            let r = is_strongly_generic(required(&p.word, "word")?, oracle.as_ref(), *required(&p.epsilon, "epsilon")?, m)?;
            out.json("symbolic.json", &r)?;
            Summary::new("symbolic", family, "strongly_generic", "good_fraction", r.fraction)
        }
        SymbolicOp::Lemma10 => {
            let m = *required(&p.m, "m")? as usize;
            let r = lemma10_check(required(&p.word, "word")?, oracle.as_ref(), *required(&p.epsilon, "epsilon")?, m)?;
            out.json("symbolic.json", &r)?;
            Summary::new("symbolic", family, "strong_implies_2eps", "holds", r.holds as u8 as f64)
        }
        SymbolicOp::Cover => {
            let cover = required(&p.cover, "cover")?;
            let r = cover.check(oracle.as_ref())?;
            out.json("symbolic.json", &r)?;
            let mut s = Summary::new("symbolic", family, "cover", "mass", r.mass);
            s.extra.insert("valid".into(), r.valid as u8 as f64);
            s
        }
        SymbolicOp::Prune => {
            let cover = required(&p.cover, "cover")?;
            let r = prune_cover(cover, oracle.as_ref(), *required(&p.m, "m")? as u128)?;
            out.json("symbolic.json", &r)?;
            Summary::new("symbolic", family, "prune", "residual_mass", r.residual_mass)
        }
    };
    s.epsilon = p.epsilon.or_else(|| p.cover.as_ref().map(|c| c.epsilon));
    Ok(s)
}

fn hochman(p: &HochmanParams, out: &mut Outputs) -> Result<Summary, CliError> {
    let schedule: HochmanSchedule = match (&p.covers, &p.u) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::schema(Some("params.covers"), e.to_string()))?
        }
        (None, Some(u)) => periodic_schedule(u, p.scales, p.growth)?,
        (None, None) => return Err(CliError::schema(Some("params.u"), "either `covers` or `u` is required")),
    };
    let x = match p.mode {
        PointMode::Split => build_hochman_point(&schedule, p.layout)?,
        PointMode::Simple => build_simple_point(&schedule, p.layout)?,
    };
    let y_word: Word = match (&p.y, &schedule.oracle) {
        (Some(y), _) => y.clone(),
        (None, OracleSpec::Periodic { point }) => point.clone(),
        (None, _) => return Err(CliError::schema(Some("params.y"), "missing field `y` for a non-periodic oracle")),
    };
    let y = Point::periodic(&y_word);
    let pairs = pair_orbital_measures(&x, &y, p.k)?;
    let t = p.t as u128;
    let measure = orbital_measure(&[&x.point, &y], t, p.k)?;

    out.json("schedule.json", &schedule)?;
    out.csv("blocks.csv", |w| {
        writeln!(w, "scale,index,lo,cut,hi")?;
        for b in &x.blocks {
            writeln!(w, "{},{},{},{},{}", b.scale, b.index, b.lo, b.cut, b.hi)?;
        }
        Ok(())
    })?;
    out.csv("pairs.csv", |w| {
        writeln!(w, "scale,r,aligned,stop_a,stop_b,diagonal_a,diagonal_b,shifted_a,shifted_b")?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for s in &pairs.scales {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                s.scale,
                s.r,
                s.aligned,
                s.stop_a,
                s.stop_b,
                fmt_f64(s.diagonal_a),
                fmt_f64(s.diagonal_b),
                opt(s.shifted_a),
                opt(s.shifted_b)
            )?;
        }
        Ok(())
    })?;
    out.csv("measure.csv", |w| io::write_measure_csv(w, &measure))?;
    let shown = t.min(PREFIX_TEXT_LIMIT).min(x.len()) as usize;
    let prefix = x.point.prefix(shown)?;
    fs::write(out.path("prefix.txt"), format!("{prefix}\n"))?;

    let last = pairs.scales.last().expect("at least one scale");
    let mut s = Summary::new("hochman", "symbolic", "orbital_measures", "diagonal_a", last.diagonal_a);
    s.extra.insert("diagonal_b".into(), last.diagonal_b);
    if let Some(v) = last.shifted_b {
        s.extra.insert("shifted_b".into(), v);
    }
    s.extra.insert("misaligned_scales".into(), pairs.misaligned.len() as f64);
    Ok(s)
}
