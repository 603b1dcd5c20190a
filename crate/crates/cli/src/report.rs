//! CSV, markdown and SVG artifacts.
//!
//! CSV numbers use Rust's shortest round-trip formatting, so reading a
//! value back yields the same double.

use std::fmt::Write as _;

use damped_eb_core::damping::{LawReport, LawViolation};
use damped_eb_core::harness::{ConvergenceReport, EnergyReport, Profile, StudyKind};
use damped_eb_core::{DampingLaw, GridFn1D, GridFn2D, NormKind};

use crate::config::{Command, RunConfig};

/// Provenance shared by every artifact of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub command: Command,
    pub hash: String,
    pub profile: Profile,
    pub dimension: usize,
    pub law: String,
    pub t_final: f64,
}

impl Header {
    pub fn new(command: Command, config: &RunConfig) -> Self {
        Self {
            command,
            hash: config.hash.clone(),
            profile: config.profile,
            dimension: config.dimension,
            law: config.law.name().to_string(),
            t_final: config.t_final,
        }
    }

    /// `# config-sha256=... command=... profile=...`
    pub fn comment(&self) -> String {
        format!(
            "# config-sha256={} command={} profile={}",
            self.hash,
            self.command.name(),
            self.profile.name()
        )
    }

    pub fn caption(&self) -> String {
        format!("{}D, P(z) = {}, T = {}", self.dimension, self.law, self.t_final)
    }

    fn md_preamble(&self, title: &str) -> String {
        let mut s = format!("# {title}\n\n");
        let _ = writeln!(s, "- problem: {}", self.caption());
        let _ = writeln!(s, "- profile: `{}`", self.profile.name());
        if self.profile == Profile::Fast {
            let _ = writeln!(
                s,
                "  (the 2D spatial study defaults to N = {} instead of {})",
                Profile::Fast.plan().spatial_n_2d,
                Profile::Paper.plan().spatial_n_2d
            );
        }
        let _ = writeln!(s, "- config sha256: `{}`\n", self.hash);
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

fn sci5(x: f64) -> String {
    format!("{x:.4e}")
}

fn labels(report: &ConvergenceReport) -> (&'static str, &'static str, &'static str) {
    match report.kind {
        StudyKind::Temporal => ("N", "F_U", "J"),
        StudyKind::Spatial => ("2J", "G_U", "N"),
    }
}

pub fn study_csv(header: &Header, report: &ConvergenceReport) -> String {
    let (param, err, _) = labels(report);
    let mut s = header.comment();
    let _ = writeln!(s);
    let _ = writeln!(s, "{param},tau,h,{err},order");
    for r in &report.rows {
        let _ = writeln!(s, "{},{:e},{:e},{:e},{}", r.param, r.tau, r.h, r.error, opt(r.order));
    }
    s
}

pub fn study_md(header: &Header, report: &ConvergenceReport) -> String {
    let (param, err, fixed) = labels(report);
    let title = match report.kind {
        StudyKind::Temporal => "Temporal convergence",
        StudyKind::Spatial => "Spatial convergence",
    };
    let mut s = header.md_preamble(title);
    let _ = writeln!(s, "{fixed} = {} fixed.\n", report.fixed);
    let _ = writeln!(s, "| {param} | τ | h | {err} | Order |");
    let _ = writeln!(s, "|---:|---:|---:|---:|---:|");
    for r in &report.rows {
        let order = r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}"));
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.param,
            sci5(r.tau),
            sci5(r.h),
            sci5(r.error),
            order
        );
    }
    let _ = writeln!(s, "| Theory | | | | {} |", report.theoretical_order());
    if report.max_cg_iterations > 0 {
        let _ = writeln!(s, "\nLargest CG iteration count per step: {}.", report.max_cg_iterations);
    }
    s
}

pub fn study_summary(report: &ConvergenceReport) -> String {
    let orders: Vec<String> = report.orders().iter().map(|o| format!("{o:.2}")).collect();
    let errors: Vec<String> = report.errors().iter().map(|e| sci5(*e)).collect();
    format!("errors [{}], orders [{}]", errors.join(", "), orders.join(", "))
}

pub fn energy_csv(header: &Header, report: &EnergyReport) -> String {
    let mut s = header.comment();
    let _ = writeln!(s);
    let _ = writeln!(s, "n,t,energy,bound");
    for r in &report.records {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", r.n, r.n as f64 * report.tau, r.energy, r.bound);
    }
    s
}

fn check_line(name: &str, result: &Result<(), damped_eb_core::stepper1d::BoundViolation>) -> String {
    match result {
        Ok(()) => format!("- {name}: pass\n"),
        Err(v) => format!("- {name}: FAIL at n = {} ({:e} > {:e})\n", v.n, v.value, v.limit),
    }
}

fn energy_checks(report: &EnergyReport) -> String {
    let mut s = check_line("stability bound", &report.stability);
    if report.unforced {
        s.push_str(&check_line("energy non-increase", &report.dissipation));
    } else {
        s.push_str("- energy non-increase: not required (forced problem)\n");
    }
    s
}

pub fn energy_md(header: &Header, report: &EnergyReport) -> String {
    let mut s = header.md_preamble("Energy history");
    let first = report.records.first().map_or(0.0, |r| r.energy);
    let last = report.records.last().map_or(0.0, |r| r.energy);
    let _ = writeln!(s, "| levels | τ | E⁰ | final E | largest increase |");
    let _ = writeln!(s, "|---:|---:|---:|---:|---:|");
    let _ = writeln!(
        s,
        "| {} | {} | {} | {} | {} |\n",
        report.records.len(),
        sci5(report.tau),
        sci5(first),
        sci5(last),
        sci5(report.max_increase.max(0.0))
    );
    s.push_str(&energy_checks(report));
    s
}

pub fn simulation_md(header: &Header, report: &EnergyReport, norm: NormKind, value: f64) -> String {
    let mut s = header.md_preamble("Simulation");
    let _ = writeln!(s, "| steps | τ | {norm:?} norm of U at T | final energy |");
    let _ = writeln!(s, "|---:|---:|---:|---:|");
    let _ = writeln!(
        s,
        "| {} | {} | {} | {} |\n",
        report.records.len().saturating_sub(1),
        sci5(report.tau),
        sci5(value),
        sci5(report.records.last().map_or(0.0, |r| r.energy))
    );
    s.push_str(&energy_checks(report));
    s
}

pub fn solution_csv_1d(header: &Header, u: &GridFn1D, v: &GridFn1D) -> String {
    let grid = u.grid();
    let mut s = header.comment();
    let _ = writeln!(s);
    let _ = writeln!(s, "index,x,U,V");
    for (k, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
        let _ = writeln!(s, "{k},{:e},{a:e},{b:e}", grid.x(k));
    }
    s
}

pub fn solution_csv_2d(header: &Header, u: &GridFn2D, v: &GridFn2D) -> String {
    let grid = u.grid();
    let (gx, gy) = (grid.x_grid(), grid.y_grid());
    let mut s = header.comment();
    let _ = writeln!(s);
    let _ = writeln!(s, "index,x,y,U,V");
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e}",
                grid.index(i, j),
                gx.x(i),
                gy.x(j),
                u.get(i, j),
                v.get(i, j)
            );
        }
    }
    s
}

fn law_samples(report: &LawReport) -> impl Iterator<Item = f64> + '_ {
    let n = report.samples;
    (0..n).map(move |k| report.z_max * k as f64 / (n - 1) as f64)
}

pub fn law_csv(header: &Header, law: &DampingLaw, report: &LawReport) -> String {
    let mut s = header.comment();
    let _ = writeln!(s);
    let _ = writeln!(s, "z,P");
    for z in law_samples(report) {
        let p = law.eval(z).map_or_else(|_| String::new(), |p| format!("{p:e}"));
        let _ = writeln!(s, "{z:e},{p}");
    }
    s
}

fn describe(v: &LawViolation) -> String {
    match v {
        LawViolation::BelowLowerBound { z, value } => format!("P({z}) = {value} is below the lower bound"),
        LawViolation::Decreasing { z0, z1 } => format!("P decreases between {z0} and {z1}"),
        LawViolation::LipschitzExceeded { z0, z1, slope } => {
            format!("slope {slope} on [{z0}, {z1}] exceeds the Lipschitz constant")
        }
        LawViolation::EvalFailed { z, error } => format!("P({z}) cannot be evaluated: {error}"),
    }
}

pub fn law_md(header: &Header, law: &DampingLaw, report: &LawReport) -> String {
    let mut s = header.md_preamble("Damping law check");
    let lip = law.lipschitz().map_or_else(|| "-".to_string(), |l| format!("{l}"));
    let _ = writeln!(s, "| z range | samples | p0 | min P | max P | L | max slope |");
    let _ = writeln!(s, "|---|---:|---:|---:|---:|---:|---:|");
    let _ = writeln!(
        s,
        "| [0, {}] | {} | {} | {} | {} | {} | {} |\n",
        report.z_max,
        report.samples,
        law.lower_bound(),
        sci5(report.min_value),
        sci5(report.max_value),
        lip,
        sci5(report.max_slope)
    );
    if report.is_clean() {
        s.push_str("No violations.\n");
    } else {
        let _ = writeln!(s, "{} violations:\n", report.violations.len());
        for v in report.violations.iter().take(20) {
            let _ = writeln!(s, "- {}", describe(v));
        }
    }
    s
}

/// Plots `Ê^n` against `n` as a single polyline with labelled axes.
pub fn energy_svg(report: &EnergyReport, caption: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;
    let records = &report.records;
    let n_max = records.last().map_or(0, |r| r.n).max(1) as f64;
    let e_max = records.iter().map(|r| r.energy).fold(0.0, f64::max);
    let e_top = if e_max > 0.0 { e_max } else { 1.0 };
    let px = |n: usize| LEFT + (W - LEFT - RIGHT) * n as f64 / n_max;
    let py = |e: f64| H - BOTTOM - (H - TOP - BOTTOM) * e / e_top;

    // Thin long histories to about two points per pixel column.
    let stride = (records.len() / 1200).max(1);
    let mut points = String::new();
    for (k, r) in records.iter().enumerate() {
        if k % stride == 0 || k + 1 == records.len() {
            let _ = write!(points, "{:.2},{:.2} ", px(r.n), py(r.energy));
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        points.trim_end()
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" {font} text-anchor="middle">0</text>"#, y0 + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{}" {font} text-anchor="middle">{}</text>"#,
        y0 + 16.0,
        n_max as usize
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" {font} text-anchor="end">0</text>"#, x0 - 6.0, y0 + 4.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" {font} text-anchor="end">{}</text>"#,
        x0 - 6.0,
        y1 + 4.0,
        sci5(e_max)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" {font} text-anchor="middle">n</text>"#,
        (x0 + x1) / 2.0,
        y0 + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" {font} text-anchor="middle" transform="rotate(-90 20 {})">energy</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">Energy history: {}</text>"#,
        W / 2.0,
        escape(caption)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
